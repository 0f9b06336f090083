use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const DEMO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo8.csv");

fn qfrans(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qfrans")).args(args).env_remove("QFRANS_MAX_QUBITS").output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn ok(args: &[&str]) {
    let o = qfrans(args);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a CSV written with a `#` metadata header, keyed by column name.
fn table(p: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

fn column(p: &Path, name: &str) -> Vec<String> {
    let (h, rows) = table(p);
    let k = h.iter().position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[k].clone()).collect()
}

fn floats(v: Vec<String>) -> Vec<f64> {
    v.iter().map(|x| x.parse().unwrap()).collect()
}

fn pairs_csv(p: &Path) -> BTreeSet<(u64, u64, i64)> {
    table(p).1.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap())).collect()
}

fn pairs_json(p: &Path) -> BTreeSet<(u64, u64, i64)> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
    v["pairs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|q| (q["i"].as_u64().unwrap(), q["j"].as_u64().unwrap(), q["d"].as_i64().unwrap()))
        .collect()
}

#[test]
fn demo_run_finds_the_brute_force_pairs() {
    let dir = TempDir::new().unwrap();
    let (run, brute) = (path(&dir, "run.json"), path(&dir, "pairs.csv"));
    ok(&["run", "--data", DEMO, "--h", "2", "--out", s(&run)]);
    ok(&["brute", "--data", DEMO, "--h", "2", "--out", s(&brute)]);
    let expected = pairs_csv(&brute);
    assert_eq!(expected.len(), 6);
    assert_eq!(pairs_json(&run), expected);
}

#[test]
fn run_report_is_deterministic_and_has_a_manifest() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (path(&dir, "a.json"), path(&dir, "b.json"));
    ok(&["run", "--data", DEMO, "--h", "2", "--seed", "9", "--transcripts", "--out", s(&a)]);
    ok(&["run", "--data", DEMO, "--h", "2", "--seed", "9", "--transcripts", "--out", s(&b)]);
    let (ta, tb) = (std::fs::read_to_string(&a).unwrap(), std::fs::read_to_string(&b).unwrap());
    assert_eq!(ta.replace("a.json", "b.json"), tb);
    let report: serde_json::Value = serde_json::from_str(&ta).unwrap();
    for key in ["config", "pairs", "oracle_calls", "posterior", "transcripts"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let post = &report["posterior"];
    let w: f64 = post["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((w - 1.0).abs() < 1e-9);
    assert_eq!(post["support"].as_array().unwrap().len(), post["weights"].as_array().unwrap().len());

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path(&dir, "a.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "run");
    assert_eq!(manifest["seed"], 9);
    let digest = manifest["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(manifest["wall_clock_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn real_coordinates_are_discretized() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "real.csv");
    let rows: String = [0.0, 1.5, 2.0, 4.5, 5.0, 5.5, 6.5, 7.5].iter().enumerate().map(|(i, x)| format!("{i},{x}\n")).collect();
    std::fs::write(&data, format!("label,x\n{rows}")).unwrap();
    let (run, brute) = (path(&dir, "run.json"), path(&dir, "brute.csv"));
    ok(&["run", "--data", s(&data), "--xi", "1.0", "--dx", "0.5", "--out", s(&run)]);
    ok(&["brute", "--data", DEMO, "--h", "2", "--out", s(&brute)]);
    assert_eq!(pairs_json(&run), pairs_csv(&brute));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.json");
    assert_eq!(code(&qfrans(&["run", "--data", DEMO, "--h", "0", "--out", s(&out)])), 2);
    let real = path(&dir, "real.csv");
    std::fs::write(&real, "label,x\n0,0.0\n1,0.7\n").unwrap();
    assert_eq!(code(&qfrans(&["run", "--data", s(&real), "--h", "1", "--out", s(&out)])), 2);
    assert_eq!(code(&qfrans(&["run", "--data", DEMO, "--out", s(&out)])), 2);
    assert_eq!(code(&qfrans(&["run", "--h", "2", "--out", s(&out)])), 2);
    assert_eq!(code(&qfrans(&["run", "--data", DEMO, "--h", "2", "--bogus"])), 2);
    assert_eq!(code(&qfrans(&["fps-curves", "--K", "3", "--out", s(&out)])), 2);
    assert_eq!(code(&qfrans(&["fps-curves", "--theta", "2.0", "--out", s(&out)])), 2);
    assert_eq!(code(&qfrans(&["resources", "--q1-range", "9..4", "--out", s(&out)])), 2);
    assert_eq!(code(&qfrans(&[])), 2);
    assert!(!out.exists());
    assert_eq!(code(&qfrans(&["--help"])), 0);
}

#[test]
fn data_format_errors_exit_3() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.csv");
    let cases = [
        "id,position\n0,1\n",
        "label,position\n0,1\n0,2\n",
        "label,position\n0,1\n1,two\n",
        "label,position\n0,1\n1\n",
    ];
    for (k, text) in cases.iter().enumerate() {
        let data = path(&dir, &format!("bad{k}.csv"));
        std::fs::write(&data, text).unwrap();
        let o = qfrans(&["brute", "--data", s(&data), "--h", "1", "--out", s(&out)]);
        assert_eq!(code(&o), 3, "case {k}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("line"));
    }
}

#[test]
fn capacity_refusal_exits_4() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "x.json");
    let o = Command::new(env!("CARGO_BIN_EXE_qfrans"))
        .args(["run", "--data", DEMO, "--h", "2", "--out", s(&out)])
        .env("QFRANS_MAX_QUBITS", "12")
        .output()
        .unwrap();
    assert_eq!(code(&o), 4);
    assert!(!out.exists());
    // the layout needs 2 + 2*3 + 2*12 + 12 = 44 qubits
    assert_eq!(code(&qfrans(&["run", "--data", DEMO, "--h", "2", "--q1", "12", "--out", s(&out)])), 4);
}

#[test]
fn critical_curve_reaches_high_success() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "c.csv");
    ok(&["fps-curves", "--M", "1", "--S", "1000", "--schedule", "critical", "--K", "200", "--out", s(&out)]);
    let cum = floats(column(&out, "p_cum"));
    assert_eq!(cum.len(), 200);
    assert!(cum[199] >= 0.99, "{}", cum[199]);
    assert!(cum.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn near_right_angle_gives_one_certain_row() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "c.csv");
    ok(&["fps-curves", "--theta", "1.5707963", "--K", "1", "--out", s(&out)]);
    let p = floats(column(&out, "p_i"));
    assert_eq!(p.len(), 1);
    assert!((p[0] - 1.0).abs() < 1e-12);
}

#[test]
fn same_flags_same_bytes() {
    let dir = TempDir::new().unwrap();
    for (cmd, extra) in [
        ("fps-curves", vec!["--M", "2", "--S", "64", "--K", "20", "--seed", "5"]),
        ("scaling", vec!["--S-list", "16,64,256", "--mc-samples", "200", "--seed", "5"]),
        ("noise", vec!["--q0", "6", "--trials", "2000", "--seed", "5"]),
        ("noise", vec!["--data", DEMO, "--h", "2", "--trials", "500", "--seed", "5"]),
    ] {
        let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
        let mut args = vec![cmd];
        args.extend(&extra);
        ok(&[args.clone(), vec!["--out", s(&a)]].concat());
        ok(&[args, vec!["--out", s(&b)]].concat());
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{cmd}");
    }
}

#[test]
fn scaling_table_shape_and_laws() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "s.csv");
    let spaces = "16,32,64,128,256,512,1000,1024,2048,4096,8192,16384";
    ok(&["scaling", "--S-list", spaces, "--mc-samples", "0", "--out", s(&out)]);
    let (header, rows) = table(&out);
    assert_eq!(header, ["S", "schedule", "expected_calls", "mc_mean", "mc_stderr"]);
    assert!(rows.iter().all(|r| r[3].is_empty() && r[4].is_empty()));
    let pick = |kind: &str| -> Vec<(f64, f64)> {
        rows.iter().filter(|r| r[1] == kind).map(|r| (r[0].parse().unwrap(), r[2].parse().unwrap())).collect()
    };
    let crit = pick("critical");
    let dec = pick("decreasing");
    let pow2: Vec<&(f64, f64)> = crit.iter().filter(|(sp, _)| *sp != 1000.0).collect();
    let lx: Vec<f64> = pow2.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pow2.iter().map(|p| p.1.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((0.45..=0.55).contains(&slope), "{slope}");
    let at = |v: &[(f64, f64)]| v.iter().find(|p| p.0 == 1000.0).unwrap().1;
    assert!(at(&dec) / at(&crit) <= 1.6);
}

#[test]
fn adjacent_pair_gives_one_row() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "two.csv");
    std::fs::write(&data, "label,position\n0,5\n1,6\n").unwrap();
    let out = path(&dir, "p.csv");
    ok(&["brute", "--data", s(&data), "--h", "1", "--out", s(&out)]);
    assert_eq!(pairs_csv(&out).into_iter().collect::<Vec<_>>(), vec![(1, 0, 1)]);
}

#[test]
fn brute_handles_three_axes() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "xyz.csv");
    std::fs::write(&data, "label,x,y,z\n0,0,0,0\n1,1,0,0.5\n2,4,4,4\n").unwrap();
    let out = path(&dir, "p.csv");
    ok(&["brute", "--data", s(&data), "--xi", "1.5", "--dx", "0.5", "--out", s(&out)]);
    // per-axis grid differences 2 and 1 sum to 3 = ceil(1.5 / 0.5); one unordered pair
    assert_eq!(pairs_csv(&out).into_iter().collect::<Vec<_>>(), vec![(0, 1, 3)]);
}

#[test]
fn resource_depths_grow_with_width() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "r.csv");
    ok(&["resources", "--q1-range", "4..16", "--out", s(&out)]);
    let (_, rows) = table(&out);
    let kinds: BTreeSet<String> = rows.iter().map(|r| r[0].clone()).collect();
    assert_eq!(kinds.len(), 7);
    for kind in &kinds {
        let mine: Vec<&Vec<String>> = rows.iter().filter(|r| &r[0] == kind).collect();
        assert_eq!(mine.len(), 13);
        for col in [2usize, 4] {
            let v: Vec<f64> = mine.iter().filter(|r| !r[col].is_empty()).map(|r| r[col].parse().unwrap()).collect();
            assert!(v.windows(2).all(|w| w[1] >= w[0]), "{kind} column {col}: {v:?}");
        }
    }
}

#[test]
fn noise_at_threshold_matches_tolerance() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "n.csv");
    ok(&["noise", "--q0", "30", "--rate-grid", "1.675e-4", "--trials", "10000", "--seed", "1", "--out", s(&out)]);
    let emp = floats(column(&out, "empirical_success"))[0];
    let model = floats(column(&out, "model_success"))[0];
    let sigma = (model * (1.0 - model) / 1e4).sqrt();
    assert!((model - 0.99).abs() < 1e-4);
    assert!((emp - model).abs() < 3.0 * sigma, "{emp} vs {model}");
    assert!(column(&out, "accepted")[0].is_empty());
}

#[test]
fn noise_filter_counts_every_record() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "n.csv");
    ok(&["noise", "--data", DEMO, "--h", "2", "--rate-grid", "0,0.05", "--trials", "3000", "--out", s(&out)]);
    let acc = floats(column(&out, "accepted"));
    let rej = floats(column(&out, "rejected"));
    assert_eq!(acc[0], 3000.0);
    assert_eq!(rej[0], 0.0);
    assert_eq!(acc[1] + rej[1], 3000.0);
    assert!(rej[1] > 0.0);
    assert_eq!(column(&out, "q0"), ["3", "3"]);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "run.cfg");
    std::fs::write(&cfg, "# defaults\nseed = 11\nS-list = 16,64\nmc-samples = 0\n").unwrap();
    let (a, b) = (path(&dir, "a.csv"), path(&dir, "b.csv"));
    ok(&["scaling", "--config", s(&cfg), "--out", s(&a)]);
    ok(&["scaling", "--config", s(&cfg), "--seed", "12", "--S-list", "32", "--out", s(&b)]);
    let seed_of = |p: &Path| {
        let text = std::fs::read_to_string(p).unwrap();
        text.lines().find_map(|l| l.strip_prefix("# seed: ").map(str::to_string)).unwrap()
    };
    assert_eq!(seed_of(&a), "11");
    assert_eq!(column(&a, "S"), ["16", "64", "16", "64"]);
    assert_eq!(seed_of(&b), "12");
    assert_eq!(column(&b, "S"), ["32", "32"]);
    let bad = path(&dir, "bad.cfg");
    std::fs::write(&bad, "not-a-flag = 1\n").unwrap();
    assert_eq!(code(&qfrans(&["scaling", "--config", s(&bad), "--out", s(&a)])), 2);
}
