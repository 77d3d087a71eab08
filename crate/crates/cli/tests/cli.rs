use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pacp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pacp")).args(args).env_remove("PACP_THREADS").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.palog");
    let b = dir.path().join("b.palog");
    for p in [&a, &b] {
        let out = pacp(&["simulate", "--n", "5", "--m", "1", "--delta0", "0", "--seed", "7", "--out", path(p)]);
        assert!(out.status.success());
        assert_eq!(json(&out)["version"], "v1");
    }
    let text = fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("PALOG v1 n=5 m=1\n"));
    assert_eq!(text, fs::read_to_string(&b).unwrap());
}

#[test]
fn loglik_round_trips_through_palog() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.palog");
    let out = pacp(&["simulate", "--n", "300", "--m", "2", "--delta0", "0.5", "--delta1", "3", "--tau", "200", "--seed", "11", "--out", path(&g)]);
    assert!(out.status.success());
    let parsed = pacp_core::AttachmentLog::parse_palog(&fs::read_to_string(&g).unwrap()).unwrap();
    let memory = pacp_core::simulator::simulate(300, 2, &pacp_core::DeltaProfile::step(0.5, 3.0, 200), 11).unwrap();
    assert_eq!(parsed, memory);
    let want = pacp_core::likelihood::log_likelihood(&memory, &pacp_core::DeltaProfile::step(0.5, 3.0, 200)).unwrap();
    let out = pacp(&["loglik", "--graph", path(&g), "--delta0", "0.5", "--delta1", "3", "--tau", "200"]);
    assert!(out.status.success());
    assert_eq!(json(&out)["result"]["value"].as_f64().unwrap(), want.value);
}

#[test]
fn lr_on_three_vertex_star() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("path3.palog");
    fs::write(&g, "PALOG v1 n=3 m=1\n2 0\n3 0\n").unwrap();
    let out = pacp(&["lr", "--graph", path(&g), "--tau", "2", "--delta0", "0", "--delta1", "1"]);
    assert!(out.status.success());
    let v = json(&out);
    let want = (6.0f64 / 7.0).ln();
    assert!((v["result"]["log_lr"].as_f64().unwrap() - want).abs() < 1e-12);
    assert!((v["result"]["log_lr"].as_f64().unwrap() + 0.1541507).abs() < 1e-7);
    assert_eq!(v["config_echo"]["tau"], 2);
    assert!(v["seed"].is_null());
}

#[test]
fn theory_table() {
    let out = pacp(&["theory", "--m", "1", "--delta0", "0", "--delta1", "2", "--kmax", "50"]);
    assert!(out.status.success());
    let v = json(&out);
    let r = &v["result"];
    let keys: Vec<&String> = r["p"].as_object().unwrap().keys().take(3).collect();
    assert_eq!(keys, ["1", "2", "3"]);
    assert!((r["p"]["1"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!((r["p"]["2"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-12);
    for k in ["ell_inf_0", "ell_inf_1", "nu0", "nu1"] {
        assert!(r[k].as_f64().unwrap() > 0.0, "{k}");
    }
}

#[test]
fn exit_code_table() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.palog");
    fs::write(&g, "PALOG v1 n=3 m=1\n2 0\n3 0\n").unwrap();
    let bad = dir.path().join("bad.palog");
    fs::write(&bad, "PALOG v1 n=3 m=1\n3 0\n2 0\n").unwrap();
    let dup = dir.path().join("dup.palog");
    fs::write(&dup, "PALOG v1 n=3 m=1\n2 0\n2 0\n3 0\n").unwrap();
    let g = path(&g);
    let bad = path(&bad);
    let dup = path(&dup);
    let cases: &[(&[&str], i32, &str)] = &[
        (&["frobnicate"], 2, "BadArguments"),
        (&["simulate", "--n", "5"], 2, "BadArguments"),
        (&["simulate", "--n", "5", "--m", "1", "--delta0", "-1"], 2, "DomainError"),
        (&["simulate", "--n", "5", "--m", "1", "--delta0", "0", "--delta1", "1"], 2, "BadArguments"),
        (&["simulate", "--n", "5", "--m", "1", "--delta0", "0", "--seed", "-3"], 2, "BadArguments"),
        (&["simulate", "--n", "5", "--m", "1", "--delta0", "0", "--delta1", "1", "--tau", "9"], 2, "BadArguments"),
        (&["lr", "--graph", "/nonexistent/g.palog", "--tau", "1", "--delta0", "0", "--delta1", "1"], 2, "Io"),
        (&["lr", "--graph", bad, "--tau", "1", "--delta0", "0", "--delta1", "1"], 2, "MissingRow"),
        (&["lr", "--graph", dup, "--tau", "1", "--delta0", "0", "--delta1", "1"], 2, "Parse"),
        (&["lr", "--graph", g, "--tau", "7", "--delta0", "0", "--delta1", "1"], 2, "BadArguments"),
        (&["lr", "--graph", g, "--tau", "1", "--delta0", "nan", "--delta1", "1"], 2, "BadArguments"),
        (&["mle", "--graph", g, "--tau", "1", "--level", "1.5"], 2, "BadArguments"),
        (&["test", "--tau", "5", "--delta0", "0", "--delta1", "1"], 2, "BadArguments"),
        (&["theory", "--m", "1", "--delta0", "0", "--delta1", "-2"], 2, "BadArguments"),
        (
            &["contiguity", "--probe", "second-moment", "--n", "100", "--delta0", "0", "--delta1", "1", "--tau", "99", "--tau-prime", "50", "--replicates", "2"],
            3,
            "PreconditionViolated",
        ),
    ];
    for (args, code, kind) in cases {
        let out = pacp(args);
        assert_eq!(out.status.code(), Some(*code), "{args:?}");
        let v = json(&out);
        assert_eq!(v["error"]["kind"], *kind, "{args:?}: {v}");
        assert_eq!(v["version"], "v1");
    }
    assert!(pacp(&["--help"]).status.success());
}

#[test]
fn report_mode_runs_despite_preconditions() {
    let out = pacp(&[
        "contiguity", "--probe", "second-moment", "--n", "100", "--delta0", "0", "--delta1", "1", "--tau", "99", "--tau-prime", "50",
        "--replicates", "20", "--preconditions", "report",
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert!(!v["result"]["notes"].as_array().unwrap().is_empty());
    assert_eq!(v["result"]["aux"]["preconditions_ok"], 0.0);
}

#[test]
fn campaign_output_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["test", "--mode", "known", "--n", "400", "--tau", "300", "--delta0", "0", "--delta1", "2", "--replicates", "24", "--seed", "5"];
    let run = |threads: Option<&str>, flag: &str, name: &str| {
        let csv = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_pacp"));
        cmd.args(args).args(["--threads", flag, "--csv", path(&csv)]).env_remove("PACP_THREADS");
        if let Some(t) = threads {
            cmd.env("PACP_THREADS", t);
        }
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
        (out.stdout, fs::read(csv).unwrap())
    };
    let one = run(None, "1", "a.csv");
    assert_eq!(one, run(None, "8", "b.csv"));
    assert_eq!(one, run(Some("3"), "1", "c.csv"));
    let v: Value = serde_json::from_slice(&one.0).unwrap();
    let r = &v["result"];
    assert!(r["type1"].as_f64().unwrap() >= 0.0 && r["type2"].as_f64().unwrap() <= 1.0);
    assert!(v["config_echo"].get("threads").is_none());
    let csv = String::from_utf8(one.1).unwrap();
    assert!(csv.starts_with("replicate,hypothesis,statistic,reject,abstained\n"));
    assert_eq!(csv.lines().count(), 1 + 48);
}

#[test]
fn martingale_probe_writes_tails() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("z.csv");
    let out = pacp(&[
        "contiguity", "--probe", "martingale", "--n", "300", "--delta0", "0", "--delta1", "1", "--tau-prime", "100", "--replicates", "50",
        "--x", "0,0.05", "--csv", path(&csv),
    ]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["result"]["tails"].as_array().unwrap().len(), 2);
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 51);
}

#[test]
fn single_graph_commands() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.palog");
    let csv = dir.path().join("profile.csv");
    assert!(pacp(&["simulate", "--n", "2000", "--m", "1", "--delta0", "0", "--delta1", "3", "--tau", "1000", "--seed", "2", "--out", path(&g)]).status.success());
    let g = path(&g);

    let v = json(&pacp(&["mle", "--graph", g, "--tau", "1000"]));
    let ci = v["result"]["ci1"].as_array().unwrap();
    assert!(ci[0].as_f64().unwrap() < ci[1].as_f64().unwrap());

    let v = json(&pacp(&["localize", "--graph", g, "--delta0", "0", "--delta1", "3", "--csv", path(&csv)]));
    let tau_hat = v["result"]["tau_hat"].as_u64().unwrap();
    assert!(tau_hat > 0 && tau_hat <= 2000);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 1 + 2001);

    let v = json(&pacp(&["test", "--graph", g, "--tau", "1000", "--delta0", "0", "--delta1", "3"]));
    assert_eq!(v["result"]["reject"], true);
    let v = json(&pacp(&["test", "--mode", "plugin", "--graph", g, "--tau", "1000"]));
    assert_eq!(v["result"]["mode"], "plugin_mle");

    let v = json(&pacp(&["reduce", "--graph", g, "--tau", "1990", "--tau-prime", "1900", "--delta0", "0", "--delta1", "3"]));
    let r = &v["result"];
    assert_eq!(r["bold_count"].as_u64().unwrap() as usize, r["bold"].as_array().unwrap().len());
    assert!((r["y"].as_f64().unwrap().ln() - r["log_y"].as_f64().unwrap()).abs() < 1e-9);
}
