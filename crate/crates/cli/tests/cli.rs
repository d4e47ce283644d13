use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn txguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_txguard"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(args: &[&str]) -> Output {
    let out = txguard(args);
    assert_eq!(
        code(&out),
        0,
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn small_dataset(dir: &TempDir, total: usize) -> PathBuf {
    let path = dir.path().join("d.jsonl");
    ok(&["gen", "--total", &total.to_string(), "--seed", "5", "--out", p(&path)]);
    path
}

#[test]
fn gen_writes_requested_record_count_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("d.jsonl");
    let out = ok(&["gen", "--total", "7000", "--seed", "1", "--out", p(&path)]);
    assert!(out.stdout.is_empty(), "gen keeps stdout clean");
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 7000);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("d.jsonl.meta.json")).unwrap()).unwrap();
    assert!(meta.to_string().contains("7000"), "sidecar records the spec: {meta}");
}

#[test]
fn gen_is_deterministic_under_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    let c = dir.path().join("c.jsonl");
    ok(&["gen", "--total", "300", "--seed", "9", "--out", p(&a)]);
    ok(&["--seed", "9", "gen", "--total", "300", "--out", p(&b)]);
    ok(&["gen", "--total", "300", "--seed", "10", "--out", p(&c)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn gen_accepts_proportion_file() {
    let dir = TempDir::new().unwrap();
    let props = dir.path().join("p.json");
    std::fs::write(&props, r#"{"Normal": 0.5, "FDV": 0.5}"#).unwrap();
    let path = dir.path().join("d.jsonl");
    ok(&["gen", "--total", "10", "--proportions", p(&props), "--out", p(&path)]);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.matches("\"FDV\"").count(), 5);

    std::fs::write(&props, r#"{"Normal": 0.5}"#).unwrap();
    assert_eq!(code(&txguard(&["gen", "--proportions", p(&props), "--out", p(&path)])), 1);
}

#[test]
fn train_collab_writes_one_model_per_node_and_round_log() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, 400);
    let models = dir.path().join("m");
    ok(&[
        "train", "--mode", "collab", "--nodes", "3", "--iters", "6", "--batch", "8", "--data", p(&data), "--out",
        p(&models),
    ]);
    for id in 1..=3 {
        assert!(models.join(format!("node-{id}.json")).is_file(), "node-{id}.json");
    }
    let log = std::fs::read_to_string(models.join("rounds.csv")).unwrap();
    let mut lines = log.lines();
    assert_eq!(lines.next(), Some("iteration,node,loss,test_accuracy"));
    assert_eq!(lines.count(), 6 * 3);
    assert!(models.join("test.jsonl").is_file());
}

#[test]
fn train_then_eval_then_stream() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, 300);
    let models = dir.path().join("m");
    ok(&[
        "train", "--mode", "centralized", "--iters", "5", "--batch", "8", "--no-value", "--data", p(&data),
        "--out", p(&models),
    ]);
    let model = models.join("centralized.json");
    assert!(model.is_file());

    let csv = dir.path().join("cm.csv");
    let out = ok(&[
        "eval", "--model", p(&model), "--data", p(&models.join("test.jsonl")), "--no-value", "--csv", p(&csv),
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let acc = report["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert_eq!(report["sample_count"].as_u64(), Some(60));
    let cm = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(cm.lines().next(), Some("true,Normal,DoS,OaU,FoT,Re,DeC,FDV"));
    assert_eq!(cm.lines().count(), 8);

    // the model takes 32x32 inputs; asking for the value row is a data error
    let mismatch = txguard(&["eval", "--model", p(&model), "--data", p(&data), "--csv", p(&csv)]);
    assert_eq!(code(&mismatch), 2);

    let out = ok(&["stream", "--model", p(&model), "--data", p(&data), "--no-value", "--window-ms", "100"]);
    let text = stdout(&out);
    let mut rows = text.lines();
    assert!(rows.next().unwrap().starts_with("window_index,window_start_ms,Normal"));
    let counted: usize = rows.map(|r| r.split(',').nth(9).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(counted, 300);
}

#[test]
fn training_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let data = small_dataset(&dir, 200);
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&["train", "--nodes", "2", "--iters", "4", "--batch", "4", "--data", p(&data), "--out", p(&out)]);
        std::fs::read(out.join("node-2.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn decode_prints_one_instruction_per_line() {
    let out = ok(&["decode", "0x6080604052"]);
    assert_eq!(stdout(&out), "00000000: PUSH1 0x80\n00000002: PUSH1 0x40\n00000004: MSTORE\n");
    // same listing without the prefix and from a file
    assert_eq!(stdout(&ok(&["decode", "6080604052"])), stdout(&out));
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("code.hex");
    std::fs::write(&file, "0x6080604052\n").unwrap();
    assert_eq!(stdout(&ok(&["decode", "--file", p(&file)])), stdout(&out));
}

#[test]
fn decode_agrees_with_reference_disassembler() {
    let code_hex = "6080604052348015600f57600080fd5b50603f80601d6000396000f3fe";
    let ours = stdout(&ok(&["decode", code_hex]));
    let reference = evm_disassembler::disassemble_str(code_hex).unwrap();
    assert_eq!(ours.lines().count(), reference.len());
    for (line, op) in ours.lines().zip(&reference) {
        let mut expected = format!("{:08x}: {:?}", op.offset, op.opcode);
        if !op.input.is_empty() {
            expected.push_str(" 0x");
            expected.extend(op.input.iter().map(|b| format!("{b:02x}")));
        }
        assert_eq!(line, expected);
    }
}

#[test]
fn encode_writes_pgm_of_both_shapes() {
    let dir = TempDir::new().unwrap();
    let with = dir.path().join("w.pgm");
    let without = dir.path().join("wo.pgm");
    ok(&["encode", "--bytecode", "0x6001", "--value-wei", "1000000000000000000", "--out", p(&with)]);
    ok(&["encode", "--bytecode", "0x6001", "--no-value", "--out", p(&without)]);
    let w = std::fs::read(&with).unwrap();
    let wo = std::fs::read(&without).unwrap();
    assert!(w.starts_with(b"P5\n32 33\n255\n"));
    assert!(wo.starts_with(b"P5\n32 32\n255\n"));
    let header = b"P5\n32 33\n255\n".len();
    assert_eq!(w.len(), header + 33 * 32);
    assert_eq!(&w[header..header + 2], &[0x60, 0x01]);
    // 10^18 = 0x0de0b6b3a7640000 sits in the last eight bytes of the value row
    assert_eq!(&w[w.len() - 8..], &[0x0d, 0xe0, 0xb6, 0xb3, 0xa7, 0x64, 0x00, 0x00]);

    let data = small_dataset(&dir, 5);
    ok(&["encode", "--data", p(&data), "--index", "4", "--out", p(&with)]);
    assert_eq!(code(&txguard(&["encode", "--data", p(&data), "--index", "5", "--out", p(&with)])), 2);
    assert_eq!(code(&txguard(&["encode", "--value-wei", "12x", "--out", p(&with)])), 2);
}

#[test]
fn fetch_from_recorded_fixture() {
    let fx = fixture("rpc_transactions.jsonl");
    let hash = "0x3f1e0c2f7a9b5d4c8e6a0b1c2d3e4f5061728394a5b6c7d8e9f0a1b2c3d4e5f6";
    let out = ok(&["fetch", "--fixture", p(&fx), "--hash", hash]);
    let rec: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(rec["hash"], hash);
    assert!(rec["bytecode"].as_str().unwrap().starts_with("0x6080604052"));

    let missing = format!("0x{}0bad", "0".repeat(60));
    assert_eq!(code(&txguard(&["fetch", "--fixture", p(&fx), "--hash", &missing])), 2);
    assert_eq!(code(&txguard(&["fetch", "--fixture", p(&fx), "--hash", "0x12"])), 2);
    assert_eq!(code(&txguard(&["fetch", "--fixture", p(&fx)])), 1);
}

#[test]
fn fetch_from_unreachable_node_is_runtime_failure() {
    let port = {
        let l = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let url = format!("http://127.0.0.1:{port}");
    let hash = "0x3f1e0c2f7a9b5d4c8e6a0b1c2d3e4f5061728394a5b6c7d8e9f0a1b2c3d4e5f6";
    let out = txguard(&["fetch", "--url", &url, "--retries", "0", "--timeout-ms", "500", "--hash", hash]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&txguard(&[])), 1);
    assert_eq!(code(&txguard(&["gen", "--bogus"])), 1);
    assert_eq!(code(&txguard(&["gen", "--total", "many"])), 1);
    assert_eq!(code(&txguard(&["train", "--data", "no-such-file.jsonl"])), 2);
    assert_eq!(code(&txguard(&["decode", "0x60zz"])), 2);
    assert_eq!(code(&txguard(&["--help"])), 0);
    assert_eq!(code(&txguard(&["--version"])), 0);

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{not json\n").unwrap();
    assert_eq!(code(&txguard(&["train", "--data", p(&bad)])), 2);

    let data = small_dataset(&dir, 20);
    let out = dir.path().join("m");
    assert_eq!(code(&txguard(&["train", "--nodes", "0", "--data", p(&data), "--out", p(&out)])), 1);
    assert_eq!(code(&txguard(&["train", "--test-fraction", "1.5", "--data", p(&data)])), 1);

    let blocked = dir.path().join("file");
    std::fs::write(&blocked, "").unwrap();
    let out = txguard(&["gen", "--total", "3", "--out", p(&blocked.join("sub/d.jsonl"))]);
    assert_eq!(code(&out), 3);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("exp.toml");
    let from_cfg = dir.path().join("a.jsonl");
    std::fs::write(
        &cfg,
        format!("seed = 4\ntotal = 50\nproportions = \"uniform\"\nout = {:?}\nnodes = 7\n", p(&from_cfg)),
    )
    .unwrap();
    ok(&["--config", p(&cfg), "gen"]);
    let by_flags = dir.path().join("b.jsonl");
    ok(&["gen", "--seed", "4", "--total", "50", "--proportions", "uniform", "--out", p(&by_flags)]);
    assert_eq!(std::fs::read(&from_cfg).unwrap(), std::fs::read(&by_flags).unwrap());

    // flags on the command line override the file
    let shown = stdout(&ok(&["gen", "--config", p(&cfg), "--total", "20", "--seed", "8", "--print-config"]));
    let table: toml::Table = toml::from_str(&shown).unwrap();
    assert_eq!(table["total"].as_integer(), Some(20));
    assert_eq!(table["seed"].as_integer(), Some(8));
    assert_eq!(table["proportions"].as_str(), Some("uniform"));
    assert_eq!(table["command"].as_str(), Some("gen"));

    std::fs::write(&cfg, "totall = 5\n").unwrap();
    assert_eq!(code(&txguard(&["gen", "--config", p(&cfg)])), 1);
    std::fs::write(&cfg, "total = [\n").unwrap();
    assert_eq!(code(&txguard(&["gen", "--config", p(&cfg)])), 2);
    assert_eq!(code(&txguard(&["gen", "--config", p(&dir.path().join("none.toml"))])), 2);
}

#[test]
fn no_value_from_config_can_be_reverted_on_command_line() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "no-value = true\n").unwrap();
    let on = stdout(&ok(&["train", "--config", p(&cfg), "--print-config"]));
    assert!(on.contains("no-value = true"), "{on}");
    let off = stdout(&ok(&["train", "--config", p(&cfg), "--with-value", "--print-config"]));
    assert!(off.contains("no-value = false"), "{off}");
}

#[test]
fn print_config_round_trips() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("round.toml");
    for args in [
        vec!["train", "--mode", "centralized", "--iters", "12", "--no-value", "--learning-rate", "0.01"],
        vec!["--seed", "18446744073709551615", "gen", "--total", "77"],
        vec!["fetch", "--hash", "0xaa", "--hash", "0xbb", "--retries", "0"],
        vec!["stream", "--window-ms", "250", "--queue", "2"],
        vec!["eval"],
        vec!["encode", "--bytecode", "0x00", "--value-wei", "0x10"],
        vec!["decode", "--file", "x.hex"],
    ] {
        let shown = stdout(&ok(&[args.as_slice(), &["--print-config"]].concat()));
        std::fs::write(&cfg, &shown).unwrap();
        let table: toml::Table = toml::from_str(&shown).unwrap();
        let sub = table["command"].as_str().unwrap();
        let again = stdout(&ok(&[sub, "--config", p(&cfg), "--print-config"]));
        assert_eq!(shown, again, "{args:?}");
    }
}

const SUBCOMMANDS: [&str; 7] = ["gen", "train", "eval", "stream", "decode", "encode", "fetch"];

#[test]
fn help_lists_every_flag_with_default() {
    let ignore = ["--help", "--version"];
    for sub in SUBCOMMANDS {
        let help = stdout(&ok(&[sub, "--help"]));
        let mut seen = 0;
        for entry in help.split("\n      --").skip(1) {
            let flag = entry.split([' ', '\n']).next().unwrap();
            if ignore.contains(&format!("--{flag}").as_str()) {
                continue;
            }
            let text: String = entry.split("\n  -").next().unwrap().to_string();
            assert!(text.contains("[default: "), "`{sub} --{flag}` has no default in help:\n{text}");
            seen += 1;
        }
        assert!(seen >= 3, "{sub}: {seen} flags");
    }
}

#[test]
fn help_snapshots() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots");
    let update = std::env::var_os("UPDATE_SNAPSHOTS").is_some();
    let mut stale = Vec::new();
    for sub in SUBCOMMANDS {
        let help = stdout(&ok(&[sub, "--help"]));
        let path = dir.join(format!("{sub}.help.txt"));
        if update {
            std::fs::write(&path, &help).unwrap();
            continue;
        }
        match std::fs::read_to_string(&path) {
            Ok(expected) if expected == help => {}
            _ => stale.push(sub),
        }
    }
    assert!(stale.is_empty(), "help changed for {stale:?}; rerun with UPDATE_SNAPSHOTS=1 and review the diff");
}
