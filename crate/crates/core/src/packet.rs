//! Packet ingestion from classic pcap captures and the canonical packet CSV.
//!
//! Both readers return packets sorted by timestamp and shifted so that the
//! first packet sits at `t = 0`; windowing downstream only depends on
//! relative time.

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::net::Ipv4Addr;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Label;

/// Header of the canonical packet CSV, byte for byte.
pub const PACKET_CSV_HEADER: &str =
    "timestamp_us,src_ip,dst_ip,src_port,dst_port,protocol,frame_len,payload_len,tcp_flags,label";

const PCAP_MAGIC_US: u32 = 0xA1B2_C3D4;
const PCAP_MAGIC_NS: u32 = 0xA1B2_3C4D;
const LINKTYPE_ETHERNET: u32 = 1;

const ETHERTYPE_IPV4: u16 = 0x0800;
const ETHERTYPE_VLAN: u16 = 0x8100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Protocol {
    Tcp,
    Udp,
    Icmp,
    Other,
}

impl Protocol {
    pub fn from_ip_number(number: u8) -> Protocol {
        match number {
            6 => Protocol::Tcp,
            17 => Protocol::Udp,
            1 => Protocol::Icmp,
            _ => Protocol::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Tcp => "TCP",
            Protocol::Udp => "UDP",
            Protocol::Icmp => "ICMP",
            Protocol::Other => "OTHER",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "TCP" => Ok(Protocol::Tcp),
            "UDP" => Ok(Protocol::Udp),
            "ICMP" => Ok(Protocol::Icmp),
            "OTHER" => Ok(Protocol::Other),
            other => Err(format!("unknown protocol `{other}`")),
        }
    }
}

/// TCP flag bits as they appear in the TCP header.
pub mod tcp_flags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
    pub const URG: u8 = 0x20;
}

/// One captured IPv4 packet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub timestamp_us: u64,
    pub src_ip: Ipv4Addr,
    pub dst_ip: Ipv4Addr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: Protocol,
    pub frame_len: u32,
    /// Always `<= frame_len`.
    pub payload_len: u32,
    /// Zero for non-TCP packets.
    pub tcp_flags: u8,
    pub label: Option<Label>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("BadMagic: {0:#010x} is not a classic pcap magic number")]
    BadMagic(u32),
    #[error("TruncatedPacket: record {index} promises {needed} bytes but only {available} remain")]
    TruncatedPacket {
        index: usize,
        needed: usize,
        available: usize,
    },
    #[error("UnsupportedLinkType: {0} (only Ethernet is supported)")]
    UnsupportedLinkType(u32),
    #[error("SchemaMismatch: expected header `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("UnparsableRow: row {row}: {reason}")]
    UnparsableRow { row: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// Packets read from a capture plus the number of frames that were skipped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Capture {
    pub packets: Vec<PacketRecord>,
    /// Non-IPv4 or malformed frames.
    pub skipped: usize,
}

/// Sorts packets by time (stable) and shifts the stream so it starts at 0.
pub fn normalize_timestamps(packets: &mut [PacketRecord]) {
    packets.sort_by_key(|p| p.timestamp_us);
    if let Some(first) = packets.first().map(|p| p.timestamp_us) {
        for p in packets.iter_mut() {
            p.timestamp_us -= first;
        }
    }
}

pub fn read_pcap(path: impl AsRef<Path>) -> Result<Capture, IngestError> {
    let bytes = fs::read(path)?;
    parse_pcap(&bytes)
}

/// Parses a classic (libpcap) capture held in memory.
pub fn parse_pcap(bytes: &[u8]) -> Result<Capture, IngestError> {
    if bytes.len() < 24 {
        let magic = read_u32(bytes, 0, false).unwrap_or(0);
        if magic == PCAP_MAGIC_US
            || magic == PCAP_MAGIC_NS
            || magic.swap_bytes() == PCAP_MAGIC_US
            || magic.swap_bytes() == PCAP_MAGIC_NS
        {
            return Err(IngestError::TruncatedPacket {
                index: 0,
                needed: 24,
                available: bytes.len(),
            });
        }
        return Err(IngestError::BadMagic(magic));
    }
    let raw_magic = u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    let (big_endian, nanos) = match raw_magic {
        PCAP_MAGIC_US => (false, false),
        PCAP_MAGIC_NS => (false, true),
        m if m.swap_bytes() == PCAP_MAGIC_US => (true, false),
        m if m.swap_bytes() == PCAP_MAGIC_NS => (true, true),
        m => return Err(IngestError::BadMagic(m)),
    };
    let link_type = read_u32(bytes, 20, big_endian).unwrap_or_default();
    if link_type != LINKTYPE_ETHERNET {
        return Err(IngestError::UnsupportedLinkType(link_type));
    }

    let mut capture = Capture::default();
    let mut offset = 24;
    let mut index = 0;
    while offset < bytes.len() {
        let available = bytes.len() - offset;
        if available < 16 {
            return Err(IngestError::TruncatedPacket {
                index,
                needed: 16,
                available,
            });
        }
        let ts_sec = read_u32(bytes, offset, big_endian).unwrap_or_default() as u64;
        let ts_frac = read_u32(bytes, offset + 4, big_endian).unwrap_or_default() as u64;
        let incl_len = read_u32(bytes, offset + 8, big_endian).unwrap_or_default() as usize;
        let orig_len = read_u32(bytes, offset + 12, big_endian).unwrap_or_default();
        offset += 16;
        let available = bytes.len() - offset;
        if incl_len > available {
            return Err(IngestError::TruncatedPacket {
                index,
                needed: incl_len,
                available,
            });
        }
        let frame = &bytes[offset..offset + incl_len];
        offset += incl_len;
        index += 1;

        let ts_us = ts_sec * 1_000_000 + if nanos { ts_frac / 1000 } else { ts_frac };
        let frame_len = orig_len.max(incl_len as u32);
        match decode_ethernet(frame, ts_us, frame_len) {
            Some(record) => capture.packets.push(record),
            None => capture.skipped += 1,
        }
    }
    normalize_timestamps(&mut capture.packets);
    Ok(capture)
}

fn read_u32(bytes: &[u8], at: usize, big_endian: bool) -> Option<u32> {
    let raw: [u8; 4] = bytes.get(at..at + 4)?.try_into().ok()?;
    Some(if big_endian {
        u32::from_be_bytes(raw)
    } else {
        u32::from_le_bytes(raw)
    })
}

fn be_u16(bytes: &[u8], at: usize) -> Option<u16> {
    let raw: [u8; 2] = bytes.get(at..at + 2)?.try_into().ok()?;
    Some(u16::from_be_bytes(raw))
}

/// Decodes an Ethernet frame carrying IPv4. Returns `None` for anything that
/// should be counted as skipped.
fn decode_ethernet(frame: &[u8], timestamp_us: u64, frame_len: u32) -> Option<PacketRecord> {
    let mut ethertype = be_u16(frame, 12)?;
    let mut l3 = 14;
    if ethertype == ETHERTYPE_VLAN {
        ethertype = be_u16(frame, 16)?;
        l3 = 18;
    }
    if ethertype != ETHERTYPE_IPV4 {
        return None;
    }
    let ip = frame.get(l3..)?;
    if ip.len() < 20 || ip[0] >> 4 != 4 {
        return None;
    }
    let ihl = ((ip[0] & 0x0f) as usize) * 4;
    if ihl < 20 || ip.len() < ihl {
        return None;
    }
    let total_len = be_u16(ip, 2)? as u32;
    let protocol = Protocol::from_ip_number(ip[9]);
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let l4 = &ip[ihl..];

    let (src_port, dst_port, flags, l4_header) = match protocol {
        Protocol::Tcp => {
            if l4.len() < 14 {
                return None;
            }
            let data_offset = ((l4[12] >> 4) as u32) * 4;
            (be_u16(l4, 0)?, be_u16(l4, 2)?, l4[13], data_offset.max(20))
        }
        Protocol::Udp => {
            if l4.len() < 4 {
                return None;
            }
            (be_u16(l4, 0)?, be_u16(l4, 2)?, 0, 8)
        }
        Protocol::Icmp => (0, 0, 0, 8),
        Protocol::Other => (0, 0, 0, 0),
    };
    let payload_len = total_len
        .saturating_sub(ihl as u32)
        .saturating_sub(l4_header)
        .min(frame_len);
    Some(PacketRecord {
        timestamp_us,
        src_ip,
        dst_ip,
        src_port,
        dst_port,
        protocol,
        frame_len,
        payload_len,
        tcp_flags: flags,
        label: None,
    })
}

#[derive(Debug, Deserialize, Serialize)]
struct CsvPacketRow {
    timestamp_us: u64,
    src_ip: String,
    dst_ip: String,
    src_port: u16,
    dst_port: u16,
    protocol: String,
    frame_len: u32,
    payload_len: u32,
    tcp_flags: u8,
    label: String,
}

pub fn read_packet_csv(path: impl AsRef<Path>) -> Result<Vec<PacketRecord>, IngestError> {
    let file = fs::File::open(path)?;
    parse_packet_csv(file)
}

/// Reads the canonical packet CSV. The `label` column may be omitted.
pub fn parse_packet_csv(reader: impl Read) -> Result<Vec<PacketRecord>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let found: Vec<&str> = headers.iter().collect();
    let expected: Vec<&str> = PACKET_CSV_HEADER.split(',').collect();
    let labeled = found == expected;
    if !labeled && found != expected[..expected.len() - 1] {
        return Err(IngestError::SchemaMismatch {
            expected: PACKET_CSV_HEADER.to_string(),
            found: found.join(","),
        });
    }

    let mut packets = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let unparsable = |reason: String| IngestError::UnparsableRow { row, reason };
        let record = record.map_err(|e| unparsable(e.to_string()))?;
        if record.len() != found.len() {
            return Err(unparsable(format!(
                "expected {} fields, found {}",
                found.len(),
                record.len()
            )));
        }
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();
        let num = |idx: usize| -> Result<u64, IngestError> {
            field(idx)
                .parse::<u64>()
                .map_err(|e| unparsable(format!("{}: {e}", expected[idx])))
        };
        let ip = |idx: usize| -> Result<Ipv4Addr, IngestError> {
            field(idx)
                .parse::<Ipv4Addr>()
                .map_err(|e| unparsable(format!("{}: {e}", expected[idx])))
        };
        let narrow = |idx: usize, max: u64| -> Result<u64, IngestError> {
            let v = num(idx)?;
            if v > max {
                return Err(unparsable(format!("{} out of range: {v}", expected[idx])));
            }
            Ok(v)
        };
        let frame_len = narrow(6, u32::MAX as u64)? as u32;
        let payload_len = narrow(7, u32::MAX as u64)? as u32;
        if payload_len > frame_len {
            return Err(unparsable(format!(
                "payload_len {payload_len} exceeds frame_len {frame_len}"
            )));
        }
        let label = if labeled && !field(9).is_empty() {
            Some(
                field(9)
                    .parse::<Label>()
                    .map_err(|e| unparsable(e.to_string()))?,
            )
        } else {
            None
        };
        packets.push(PacketRecord {
            timestamp_us: num(0)?,
            src_ip: ip(1)?,
            dst_ip: ip(2)?,
            src_port: narrow(3, u16::MAX as u64)? as u16,
            dst_port: narrow(4, u16::MAX as u64)? as u16,
            protocol: field(5).parse::<Protocol>().map_err(unparsable)?,
            frame_len,
            payload_len,
            tcp_flags: narrow(8, u8::MAX as u64)? as u8,
            label,
        });
    }
    normalize_timestamps(&mut packets);
    Ok(packets)
}

/// Writes packets in the canonical CSV layout (always with the label column).
pub fn write_packet_csv(writer: impl Write, packets: &[PacketRecord]) -> Result<(), IngestError> {
    let mut wtr = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    wtr.write_record(PACKET_CSV_HEADER.split(','))?;
    for p in packets {
        wtr.serialize(CsvPacketRow {
            timestamp_us: p.timestamp_us,
            src_ip: p.src_ip.to_string(),
            dst_ip: p.dst_ip.to_string(),
            src_port: p.src_port,
            dst_port: p.dst_port,
            protocol: p.protocol.to_string(),
            frame_len: p.frame_len,
            payload_len: p.payload_len,
            tcp_flags: p.tcp_flags,
            label: p.label.map(|l| l.to_string()).unwrap_or_default(),
        })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Builders for classic pcap bytes, used by tests and the synthetic traffic
/// generator.
pub mod pcap_writer {
    use super::*;

    pub fn global_header(big_endian: bool, link_type: u32) -> Vec<u8> {
        let mut out = Vec::with_capacity(24);
        let put32 = |out: &mut Vec<u8>, v: u32| {
            out.extend_from_slice(&if big_endian {
                v.to_be_bytes()
            } else {
                v.to_le_bytes()
            })
        };
        let put16 = |out: &mut Vec<u8>, v: u16| {
            out.extend_from_slice(&if big_endian {
                v.to_be_bytes()
            } else {
                v.to_le_bytes()
            })
        };
        put32(&mut out, PCAP_MAGIC_US);
        put16(&mut out, 2);
        put16(&mut out, 4);
        put32(&mut out, 0);
        put32(&mut out, 0);
        put32(&mut out, 65535);
        put32(&mut out, link_type);
        out
    }

    pub fn record(out: &mut Vec<u8>, big_endian: bool, timestamp_us: u64, frame: &[u8]) {
        let put32 = |out: &mut Vec<u8>, v: u32| {
            out.extend_from_slice(&if big_endian {
                v.to_be_bytes()
            } else {
                v.to_le_bytes()
            })
        };
        put32(out, (timestamp_us / 1_000_000) as u32);
        put32(out, (timestamp_us % 1_000_000) as u32);
        put32(out, frame.len() as u32);
        put32(out, frame.len() as u32);
        out.extend_from_slice(frame);
    }

    /// Ethernet + IPv4 + TCP/UDP/ICMP frame for `packet`, padded with a zero
    /// payload of `payload_len` bytes. The IP checksum is left at zero.
    pub fn ethernet_frame(packet: &PacketRecord) -> Vec<u8> {
        let (proto_num, l4): (u8, Vec<u8>) = match packet.protocol {
            Protocol::Tcp => {
                let mut h = vec![0u8; 20];
                h[0..2].copy_from_slice(&packet.src_port.to_be_bytes());
                h[2..4].copy_from_slice(&packet.dst_port.to_be_bytes());
                h[12] = 5 << 4;
                h[13] = packet.tcp_flags;
                (6, h)
            }
            Protocol::Udp => {
                let mut h = vec![0u8; 8];
                h[0..2].copy_from_slice(&packet.src_port.to_be_bytes());
                h[2..4].copy_from_slice(&packet.dst_port.to_be_bytes());
                let len = 8 + packet.payload_len as u16;
                h[4..6].copy_from_slice(&len.to_be_bytes());
                (17, h)
            }
            Protocol::Icmp => (1, vec![8, 0, 0, 0, 0, 0, 0, 0]),
            Protocol::Other => (47, Vec::new()),
        };
        let total_len = (20 + l4.len() + packet.payload_len as usize) as u16;
        let mut frame = Vec::with_capacity(14 + total_len as usize);
        frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02]);
        frame.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x01]);
        frame.extend_from_slice(&ETHERTYPE_IPV4.to_be_bytes());
        frame.extend_from_slice(&[0x45, 0]);
        frame.extend_from_slice(&total_len.to_be_bytes());
        frame.extend_from_slice(&[0, 0, 0x40, 0, 64, proto_num, 0, 0]);
        frame.extend_from_slice(&packet.src_ip.octets());
        frame.extend_from_slice(&packet.dst_ip.octets());
        frame.extend_from_slice(&l4);
        frame.resize(14 + total_len as usize, 0);
        frame
    }

    pub fn write_capture(packets: &[PacketRecord], big_endian: bool) -> Vec<u8> {
        let mut out = global_header(big_endian, LINKTYPE_ETHERNET);
        for p in packets {
            record(&mut out, big_endian, p.timestamp_us, &ethernet_frame(p));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tcp(ts: u64, sport: u16, dport: u16, flags: u8, payload: u32) -> PacketRecord {
        PacketRecord {
            timestamp_us: ts,
            src_ip: Ipv4Addr::new(10, 0, 0, 1),
            dst_ip: Ipv4Addr::new(10, 0, 0, 2),
            src_port: sport,
            dst_port: dport,
            protocol: Protocol::Tcp,
            frame_len: 54 + payload,
            payload_len: payload,
            tcp_flags: flags,
            label: None,
        }
    }

    #[test]
    fn header_only_capture_is_empty() {
        let bytes = pcap_writer::global_header(false, 1);
        let cap = parse_pcap(&bytes).unwrap();
        assert!(cap.packets.is_empty());
        assert_eq!(cap.skipped, 0);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut bytes = pcap_writer::global_header(false, 1);
        bytes[0..4].copy_from_slice(&0xDEAD_BEEFu32.to_le_bytes());
        assert!(matches!(
            parse_pcap(&bytes),
            Err(IngestError::BadMagic(0xDEAD_BEEF))
        ));
    }

    #[test]
    fn non_ethernet_link_rejected() {
        let bytes = pcap_writer::global_header(false, 101);
        assert!(matches!(
            parse_pcap(&bytes),
            Err(IngestError::UnsupportedLinkType(101))
        ));
    }

    #[test]
    fn truncated_record_reported() {
        let mut bytes = pcap_writer::write_capture(&[tcp(0, 1, 2, 0, 10)], false);
        bytes.truncate(bytes.len() - 5);
        assert!(matches!(
            parse_pcap(&bytes),
            Err(IngestError::TruncatedPacket { index: 0, .. })
        ));
    }

    #[test]
    fn udp_and_icmp_decoded() {
        let mut udp = tcp(5, 5353, 53, 0, 12);
        udp.protocol = Protocol::Udp;
        udp.frame_len = 14 + 20 + 8 + 12;
        let mut icmp = tcp(9, 0, 0, 0, 4);
        icmp.protocol = Protocol::Icmp;
        icmp.frame_len = 14 + 20 + 8 + 4;
        let bytes = pcap_writer::write_capture(&[udp.clone(), icmp.clone()], false);
        let cap = parse_pcap(&bytes).unwrap();
        assert_eq!(cap.packets[0].src_port, 5353);
        assert_eq!(cap.packets[0].payload_len, 12);
        assert_eq!(cap.packets[1].protocol, Protocol::Icmp);
        assert_eq!(cap.packets[1].payload_len, 4);
        assert_eq!(cap.packets[1].timestamp_us, 4);
    }

    #[test]
    fn csv_rows_with_labels() {
        let text = format!(
            "{PACKET_CSV_HEADER}\n\
             100,10.0.0.1,10.0.0.2,1000,1883,TCP,60,6,24,benign\n\
             150,10.0.0.3,10.0.0.2,1001,1883,TCP,80,26,24,malicious\n"
        );
        let packets = parse_packet_csv(text.as_bytes()).unwrap();
        assert_eq!(packets.len(), 2);
        assert_eq!(packets[0].label, Some(Label::Benign));
        assert_eq!(packets[1].label, Some(Label::Malicious));
        assert_eq!(packets[1].timestamp_us, 50);
    }

    #[test]
    fn csv_rows_sorted_by_time() {
        let text = format!(
            "{PACKET_CSV_HEADER}\n\
             900,10.0.0.1,10.0.0.2,1,2,UDP,60,10,0,\n\
             100,10.0.0.1,10.0.0.2,1,2,UDP,61,10,0,\n\
             500,10.0.0.1,10.0.0.2,1,2,UDP,62,10,0,\n"
        );
        let packets = parse_packet_csv(text.as_bytes()).unwrap();
        let ts: Vec<u64> = packets.iter().map(|p| p.timestamp_us).collect();
        assert_eq!(ts, vec![0, 400, 800]);
        assert_eq!(packets[0].frame_len, 61);
        assert!(packets.iter().all(|p| p.label.is_none()));
    }

    #[test]
    fn csv_missing_column_is_schema_mismatch() {
        let text =
            "timestamp_us,src_ip,dst_ip,src_port,protocol,frame_len,payload_len,tcp_flags,label\n";
        assert!(matches!(
            parse_packet_csv(text.as_bytes()),
            Err(IngestError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn csv_bad_row_reports_index() {
        let text = format!(
            "{PACKET_CSV_HEADER}\n\
             1,10.0.0.1,10.0.0.2,1,2,UDP,60,10,0,\n\
             2,10.0.0.1,not-an-ip,1,2,UDP,60,10,0,\n"
        );
        match parse_packet_csv(text.as_bytes()) {
            Err(IngestError::UnparsableRow { row, .. }) => assert_eq!(row, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    fn arb_packet() -> impl Strategy<Value = PacketRecord> {
        (
            0u64..10_000_000,
            any::<u32>(),
            any::<u32>(),
            any::<u16>(),
            any::<u16>(),
            prop_oneof![
                Just(Protocol::Tcp),
                Just(Protocol::Udp),
                Just(Protocol::Icmp),
                Just(Protocol::Other)
            ],
            0u32..2000,
            0u32..2000,
            any::<u8>(),
            prop_oneof![
                Just(None),
                Just(Some(Label::Benign)),
                Just(Some(Label::Malicious))
            ],
        )
            .prop_map(
                |(ts, s, d, sp, dp, protocol, a, b, flags, label)| PacketRecord {
                    timestamp_us: ts,
                    src_ip: Ipv4Addr::from(s),
                    dst_ip: Ipv4Addr::from(d),
                    src_port: sp,
                    dst_port: dp,
                    protocol,
                    frame_len: a.max(b),
                    payload_len: a.min(b),
                    tcp_flags: flags,
                    label,
                },
            )
    }

    proptest! {
        #[test]
        fn csv_round_trip(mut packets in proptest::collection::vec(arb_packet(), 0..40)) {
            normalize_timestamps(&mut packets);
            let mut buf = Vec::new();
            write_packet_csv(&mut buf, &packets).unwrap();
            let back = parse_packet_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(back, packets);
        }

        #[test]
        fn pcap_never_emits_oversized_payload(tail in proptest::collection::vec(any::<u8>(), 0..600)) {
            let mut bytes = pcap_writer::global_header(false, 1);
            // one record header claiming the whole tail, so the frame bytes are arbitrary
            pcap_writer::record(&mut bytes, false, 0, &tail);
            if let Ok(cap) = parse_pcap(&bytes) {
                for p in cap.packets {
                    prop_assert!(p.payload_len <= p.frame_len);
                }
            }
            let mut raw = pcap_writer::global_header(true, 1);
            raw.extend_from_slice(&tail);
            if let Ok(cap) = parse_pcap(&raw) {
                for p in cap.packets {
                    prop_assert!(p.payload_len <= p.frame_len);
                }
            }
        }
    }
}
