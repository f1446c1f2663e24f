use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use streamguard::experiment::comparable_json;
use streamguard::packet::pcap_writer;
use streamguard::packet::{PacketRecord, Protocol};
use streamguard::synth::{format_spec, mixed_dataset_spec};
use streamguard::Label;

fn streamguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamguard"))
        .args(args)
        .env("STREAMGUARD_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("exp.conf");
    fs::write(
        &path,
        format!(
            "learner = nb\nseed = 3\nrepetitions = 5\n\
             synthetic.benign_per_phase = 120\nsynthetic.malicious_per_phase = 120\n{extra}"
        ),
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn packet(ts: u64, dst_port: u16, protocol: Protocol) -> PacketRecord {
    PacketRecord {
        timestamp_us: ts,
        src_ip: [10, 0, 0, 2].into(),
        dst_ip: [10, 0, 0, 9].into(),
        src_port: 40000,
        dst_port,
        protocol,
        frame_len: 90,
        payload_len: 36,
        tcp_flags: if protocol == Protocol::Tcp { 0x02 } else { 0 },
        label: Some(Label::Benign),
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(streamguard(&[]).status.code(), Some(1));
    assert_eq!(streamguard(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(streamguard(&["report"]).status.code(), Some(1));
    assert_eq!(streamguard(&["--help"]).status.code(), Some(0));
}

#[test]
fn run_writes_five_runs_and_an_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out_dir = dir.path().join("out");
    let out = streamguard(&[
        "run",
        "--config",
        &cfg,
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let names: Vec<String> = fs::read_dir(&out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.iter().filter(|n| n.starts_with("run_")).count(), 5);
    assert_eq!(
        names.iter().filter(|n| n.starts_with("aggregate_")).count(),
        1
    );

    let report = streamguard(&[
        "report",
        out_dir.join("aggregate_nb.json").to_str().unwrap(),
    ]);
    assert_eq!(report.status.code(), Some(0));
    let table = String::from_utf8(report.stdout).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("nb"));
}

#[test]
fn run_is_deterministic_given_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "learner = arf\narf.trees = 3\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = streamguard(&[
            "run",
            "--config",
            &cfg,
            "--out-dir",
            d.to_str().unwrap(),
            "--seed",
            "9",
            "--reps",
            "3",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for name in ["run_arf_00.json", "run_arf_02.json", "aggregate_arf.json"] {
        let x = fs::read_to_string(a.join(name)).unwrap();
        let y = fs::read_to_string(b.join(name)).unwrap();
        assert_eq!(
            comparable_json(&x).unwrap(),
            comparable_json(&y).unwrap(),
            "{name}"
        );
    }
    assert_eq!(
        fs::read(a.join("trace_arf_01.csv")).unwrap(),
        fs::read(b.join("trace_arf_01.csv")).unwrap()
    );
}

#[test]
fn aggregate_over_one_run_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = streamguard(&[
        "run",
        "--config",
        &cfg,
        "--out-dir",
        dir.path().join("o").to_str().unwrap(),
        "--reps",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("TooFewRuns"), "{}", stderr(&out));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "learner = svm\n");
    let out = streamguard(&[
        "run",
        "--config",
        &cfg,
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn extract_pcap_and_reject_bad_magic() {
    let dir = tempfile::tempdir().unwrap();
    let packets = vec![
        packet(1_000, 80, Protocol::Tcp),
        packet(1_400, 443, Protocol::Udp),
        packet(2_600, 80, Protocol::Tcp),
    ];
    let pcap = dir.path().join("cap.pcap");
    fs::write(&pcap, pcap_writer::write_capture(&packets, false)).unwrap();
    let csv = dir.path().join("features.csv");
    let out = streamguard(&[
        "extract",
        "--in",
        pcap.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("window_id,f1,"));
    assert_eq!(text.lines().count(), 3);

    let bad = dir.path().join("bad.pcap");
    fs::write(&bad, [0u8; 40]).unwrap();
    let out = streamguard(&[
        "extract",
        "--in",
        bad.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("BadMagic"));

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = streamguard(&[
        "extract",
        "--in",
        empty.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1);
}

#[test]
fn synth_builds_stream_and_rejects_bad_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.txt");
    fs::write(
        &spec,
        "direction = forward\n\
         phase = E1 pool=E1 attack=scan benign=30 malicious=20\n\
         phase = M1 pool=M1 attack=flood benign=25 malicious=25\n\
         phase = E2 pool=E2 attack=brute benign=10 malicious=40\n\
         phase = M2 pool=M2 attack=botnet benign=35 malicious=15\n",
    )
    .unwrap();
    let stream = dir.path().join("stream.csv");
    let out = streamguard(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--pools",
        "synthetic",
        "--out",
        stream.to_str().unwrap(),
        "--seed",
        "4",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&stream).unwrap().lines().count(), 201);
    let sidecar = fs::read_to_string(dir.path().join("stream.csv.boundaries")).unwrap();
    assert_eq!(sidecar.trim(), "boundaries: 50,100,150");

    fs::write(&spec, "phase = E1 pool=E1 attack=scan benign=3\n").unwrap();
    let out = streamguard(&[
        "synth",
        "--spec",
        spec.to_str().unwrap(),
        "--pools",
        "synthetic",
        "--out",
        stream.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn report_rejects_unknown_schema_version() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("old.json");
    fs::write(&path, r#"{"schema_version": 7, "learner": "nb"}"#).unwrap();
    let out = streamguard(&["report", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("schema version 7"));
}

#[test]
fn arf_aggregate_lists_drift_events() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("arf.conf");
    fs::write(&cfg, "learner = arf\nseed = 1\nrepetitions = 2\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = streamguard(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let agg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("aggregate_arf.json")).unwrap())
            .unwrap();
    let events = agg["drift_events"].as_array().unwrap();
    assert_eq!(events.len(), 2);
    assert!(events.iter().any(|run| !run.as_array().unwrap().is_empty()));
}

#[test]
fn mixed_spec_synthesis_is_exact_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("mixed1.txt");
    fs::write(&spec, format_spec(&mixed_dataset_spec(1, None).unwrap())).unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        let out = streamguard(&[
            "synth",
            "--spec",
            spec.to_str().unwrap(),
            "--pools",
            "synthetic",
            "--out",
            path.to_str().unwrap(),
            "--seed",
            "12",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        outputs.push(fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].iter().filter(|&&b| b == b'\n').count(), 19_623);
    let sidecar = fs::read_to_string(dir.path().join("a.csv.boundaries")).unwrap();
    assert_eq!(sidecar.trim(), "boundaries: 5441,10688,14972");
}
