use std::fs;
use std::path::Path;
use std::process::{Command as Proc, Output};

use serde_json::Value;
use sivsim_cli::acceptance::bundled_scenario;
use sivsim_cli::commands::Command;
use sivsim_cli::config::ParamValue;
use sivsim_cli::{parse_scenario, parse_scenario_str, run_scenario, RunManifest};

fn sivsim(args: &[&str]) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_sivsim")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn minimal_preset_file_gets_all_defaults() {
    let s = parse_scenario_str("[presets]\nemitter = \"siv-bulk\"\n", None).unwrap();
    assert_eq!(s.seed, 0);
    assert_eq!(s.params.num("level.delta_gs"), 45e9);
    assert_eq!(s.params.num("emitter.lifetime"), 1.73e-9);
    assert!(s.sweeps.is_empty());
}

#[test]
fn unit_suffix_converts_to_hz() {
    let s = parse_scenario_str("[level]\ndelta_gs = \"45 GHz\"\n", None).unwrap();
    assert_eq!(s.params.get("level.delta_gs"), Some(&ParamValue::Number(4.5e10)));
    let s = parse_scenario_str("[hom]\nlifetime = \"1730 ps\"\n[bath]\ntemperature = \"260 mK\"\n", None).unwrap();
    assert!((s.params.num("hom.lifetime") - 1.73e-9).abs() < 1e-21);
    assert!((s.params.num("bath.temperature") - 0.26).abs() < 1e-15);
}

#[test]
fn misspelled_key_is_rejected_with_suggestion() {
    let err = parse_scenario_str("[cavity]\ncooperativty = 1.0\n", None).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("cavity.cooperativty"), "{msg}");
    assert!(msg.contains("did you mean `cavity.cooperativity`"), "{msg}");
    assert!(msg.contains("2:1"), "{msg}");
}

#[test]
fn unit_mismatch_names_both_dimensions() {
    let err = parse_scenario_str("[level]\ndelta_gs = \"3 ns\"\n", None).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("unit mismatch") && msg.contains("Time") && msg.contains("Frequency"), "{msg}");
    assert!(msg.contains("2:12"), "{msg}");
}

#[test]
fn unknown_preset_is_rejected() {
    let err = parse_scenario_str("[presets]\nemitter = \"siv-bluk\"\n", None).unwrap_err();
    assert!(err.to_string().contains("siv-bulk"), "{err}");
}

#[test]
fn malformed_file_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.toml", "name = \"x\"\n[cavity\ng = 1\n");
    let o = sivsim(&["extinction", "--scenario", &path, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:2:"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_2_and_physics_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write(dir.path(), "k.toml", "[cavity]\nkapa = \"57 GHz\"\n");
    let o = sivsim(&["extinction", "--scenario", &bad_key]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean `cavity.kappa`"), "{}", stderr(&o));

    // Efficiency cannot reach an 0.9 dip at C ~ 1: the fit fails in the physics layer.
    let unreachable = write(dir.path(), "p.toml", "[presets]\nemitter = \"siv-nano\"\n[extinction]\ntarget = 0.9\n");
    let o = sivsim(&["extinction", "--scenario", &unreachable, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("extinction"), "{}", stderr(&o));
}

#[test]
fn hash_is_stable_under_key_reordering() {
    let a = "name = \"a\"\n[cavity]\ng = \"2.1 GHz\"\nkappa = \"57 GHz\"\n[bath]\ntemperature = \"5 K\"\n";
    let b = "[bath]\ntemperature = \"5000 mK\"\n[cavity]\nkappa = \"57e9 Hz\"\ng = \"2100 MHz\"\n";
    let sa = parse_scenario_str(a, None).unwrap();
    let sb = parse_scenario_str(b, None).unwrap();
    assert_eq!(sa.hash(), sb.hash());
    let sc = parse_scenario_str("[bath]\ntemperature = \"6 K\"\n", None).unwrap();
    assert_ne!(sa.hash(), sc.hash());
}

#[test]
fn normalization_round_trip_is_idempotent() {
    for name in ["relaxation", "extinction-sweep", "spin-slow-bath", "hom"] {
        let s0 = parse_scenario_str(bundled_scenario(name).unwrap(), None).unwrap();
        let once = s0.to_toml();
        let s1 = parse_scenario_str(&once, None).unwrap();
        assert_eq!(s1.hash(), s0.hash(), "{name}");
        assert_eq!(s1.to_toml(), once, "{name}");
    }
}

fn run_twice(command: Command, src: &str) -> (tempfile::TempDir, RunManifest, RunManifest) {
    let dir = tempfile::tempdir().unwrap();
    let s = parse_scenario_str(src, None).unwrap();
    let m1 = run_scenario(command, &s, &dir.path().join("a"), 1).unwrap();
    let m2 = run_scenario(command, &s, &dir.path().join("b"), 2).unwrap();
    (dir, m1, m2)
}

#[test]
fn identical_inputs_give_byte_identical_outputs() {
    let src = "[presets]\nnoise = \"ou-slow-bath\"\n[spin]\norders = [1, 4]\ncurve_points = 20\ntrajectories = 200\nmc_orders = [1, 4]\n";
    let (dir, mut m1, mut m2) = run_twice(Command::Spin, src);
    for f in &m1.outputs {
        let a = fs::read(dir.path().join("a").join(&f.file)).unwrap();
        let b = fs::read(dir.path().join("b").join(&f.file)).unwrap();
        assert_eq!(a, b, "{}", f.file);
    }
    m1.timestamp.clear();
    m2.timestamp.clear();
    assert_eq!(m1, m2);
}

#[test]
fn seed_changes_only_stochastic_outputs() {
    let src = "[presets]\nnoise = \"ou-slow-bath\"\n[spin]\norders = [1]\ncurve_points = 10\ntrajectories = 100\nmc_orders = [1]\n";
    let mut s = parse_scenario_str(src, None).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let m0 = run_scenario(Command::Spin, &s, &dir.path().join("0"), 1).unwrap();
    s.seed = 7;
    let m7 = run_scenario(Command::Spin, &s, &dir.path().join("7"), 1).unwrap();
    assert_eq!(m7.seed, 7);
    assert_eq!(m0.scenario_hash, m7.scenario_hash);
    let file = |m: &RunManifest, name: &str| m.outputs.iter().find(|o| o.file == name).unwrap().sha256.clone();
    assert_eq!(file(&m0, "curves.csv"), file(&m7, "curves.csv"));
    assert_ne!(file(&m0, "mc_curves.csv"), file(&m7, "mc_curves.csv"));
}

#[test]
fn relaxation_csv_fits_calibration() {
    let dir = tempfile::tempdir().unwrap();
    let s = parse_scenario_str(bundled_scenario("relaxation").unwrap(), None).unwrap();
    run_scenario(Command::Relaxation, &s, dir.path(), 1).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("rates.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let ti = headers.iter().position(|h| h == "temperature [K]").unwrap();
    let ri = headers.iter().position(|h| h == "total_rate [1/s]").unwrap();
    let (mut t, mut r) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec.unwrap();
        t.push(rec[ti].parse::<f64>().unwrap());
        r.push(rec[ri].parse::<f64>().unwrap());
    }
    assert_eq!(t.len(), 36);
    // Ordinary least squares, written out.
    let n = t.len() as f64;
    let (mt, mr) = (t.iter().sum::<f64>() / n, r.iter().sum::<f64>() / n);
    let sxy: f64 = t.iter().zip(&r).map(|(x, y)| (x - mt) * (y - mr)).sum();
    let sxx: f64 = t.iter().map(|x| (x - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let at5 = mr + slope * (5.0 - mt);
    assert!(((1.0 / at5) / 39e-9 - 1.0).abs() < 0.05, "{}", 1.0 / at5);
}

#[test]
fn sweep_emits_one_block_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let s = parse_scenario_str(bundled_scenario("extinction-sweep").unwrap(), None).unwrap();
    let points = s.sweep_points().len();
    assert_eq!(points, 6);
    run_scenario(Command::Extinction, &s, dir.path(), 3).unwrap();
    let csv = fs::read_to_string(dir.path().join("dip.csv")).unwrap();
    assert!(csv.starts_with("cavity.cooperativity,detuning [Hz]"));
    assert_eq!(csv.lines().count(), 1 + points * s.params.count("extinction.points") as usize);
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let pts = summary["points"].as_array().unwrap();
    // Ideal dip 1/(1+C)^2 follows the swept cooperativity.
    for (p, c) in pts.iter().zip([0.25_f64, 0.5, 1.0, 2.0, 4.0, 8.0]) {
        let t = p["summary"]["ideal_transmission"].as_f64().unwrap();
        assert!((t - 1.0 / (1.0 + c).powi(2)).abs() < 1e-9, "{c}: {t}");
    }
}

#[test]
fn sweep_over_unknown_path_is_a_config_error() {
    let err = parse_scenario_str("[[sweep]]\npath = \"cavity.gg\"\nvalues = [1.0]\n", None).unwrap_err();
    assert!(err.to_string().contains("cavity.g"), "{err}");
}

#[test]
fn compare_flags_wrong_noise_model() {
    let dir = tempfile::tempdir().unwrap();
    // Negative control: the slow OU bath gives beta near 2/3, not 1.
    let src = bundled_scenario("spin").unwrap().replace("linear-scaling", "ou-slow-bath");
    let s = parse_scenario_str(&src, None).unwrap();
    run_scenario(Command::Spin, &s, &dir.path().join("spin"), 1).unwrap();
    let o = sivsim(&["compare", dir.path().to_str().unwrap(), "--target", "spin"]);
    assert_eq!(o.status.code(), Some(1));
    let out = String::from_utf8_lossy(&o.stdout);
    let beta = out.lines().find(|l| l.contains("/scaling/beta")).unwrap();
    assert!(beta.starts_with("FAIL"), "{out}");
    assert!(out.contains("noise=ou-slow-bath"), "{out}");
}

#[test]
fn compare_counts_missing_targets_as_failures() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("unrelated")).unwrap();
    let o = sivsim(&["compare", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&o.stdout).contains("PASS"));
}

#[test]
fn compare_on_empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = sivsim(&["compare", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("empty"), "{}", stderr(&o));
    let o = sivsim(&["compare", dir.path().join("nope").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_runs_a_target_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = sivsim(&["reproduce", "--target", "thermal", "--target", "raman", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("thermal/line_ratio.csv").exists());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("0 failed"), "{out}");
}

#[test]
fn normalize_prints_reparsable_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "g2.toml", bundled_scenario("g2").unwrap());
    let o = sivsim(&["normalize", "--scenario", &path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let again = parse_scenario_str(&text, None).unwrap();
    assert_eq!(again.hash(), parse_scenario(Path::new(&path)).unwrap().hash());
}

#[test]
fn cli_writes_manifest_and_respects_seed_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "r.toml", bundled_scenario("raman").unwrap());
    let out = dir.path().join("out");
    let o = sivsim(&["raman", "--scenario", &path, "--out", out.to_str().unwrap(), "--seed", "42", "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.seed, 42);
    assert_eq!(m.command, Command::Raman);
    for f in &m.outputs {
        assert!(out.join(&f.file).exists());
    }
    let o = sivsim(&["raman", "--scenario", &path, "--seed", "-1"]);
    assert_eq!(o.status.code(), Some(2));
}
