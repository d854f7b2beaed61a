use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use visdiag::{run_diagnose, run_evaluate, run_generate, DiagnoseOptions, EvaluateOptions, GenerateOptions, RunManifest};
use visdiag_client::{EndpointSpec, Flavor};
use visdiag_core::diagnostics::default_bands;

const BLUR_SPEC: &str = "
dataset: {name: blur_small, seed: 7, output_dir: out}
scene: {setup: {resolution: low}}
variables:
  chess.count_config: {variate_type: fixed, variate_levels: 4}
  noise.blur:
    variate_type: varying_all
    variate_levels: [none, low, very_high]
    n_images: 2
questions:
  keys: [count_pieces, board_square_count]
  preprompts: [neutral, cot]
  instructions: [declarative, missing_word]
";

const COUNT_SPEC: &str = "
dataset: {name: counts, seed: 3}
scene: {setup: {resolution: low}}
variables:
  chess.count_config:
    variate_type: varying_all
    variate_levels: [1, 2, 3, 4, 5]
questions:
  keys: [count_pieces]
  preprompts: [neutral]
  instructions: [direct]
";

fn write_spec(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("spec.yaml");
    std::fs::write(&p, text).unwrap();
    p
}

fn generate(dir: &Path, text: &str) -> PathBuf {
    let spec = write_spec(dir, text);
    let out = dir.join("data");
    run_generate(&GenerateOptions { spec, out: Some(out.clone()), ..Default::default() }).unwrap();
    out
}

fn evaluate(dataset: &Path, endpoint: EndpointSpec) -> visdiag::EvaluateSummary {
    run_evaluate(&EvaluateOptions {
        dataset: dataset.to_path_buf(),
        endpoint,
        preprompts: vec![],
        instructions: vec![],
        keys: vec![],
        live: false,
        run: None,
        bank: None,
    })
    .unwrap()
}

/// Relative path -> bytes for every file under `root`.
fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/");
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn bin(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_visdiag")).args(args).output().unwrap()
}

#[test]
fn generation_is_reproducible_and_resumable() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = snapshot(&generate(a.path(), BLUR_SPEC));
    assert_eq!(first.keys().filter(|k| k.ends_with(".png")).count(), 6);
    assert_eq!(first.keys().filter(|k| k.starts_with("legends/")).count(), 12);

    // same spec in two steps, with an interruption after two scenes
    let spec = write_spec(b.path(), BLUR_SPEC);
    let out = b.path().join("data");
    let opts = GenerateOptions { spec, out: Some(out.clone()), limit: Some(2), ..Default::default() };
    let s = run_generate(&opts).unwrap();
    assert_eq!((s.rendered, s.pending), (2, 4));
    let s = run_generate(&GenerateOptions { limit: None, ..opts }).unwrap();
    assert_eq!((s.rendered, s.skipped, s.pending), (4, 2, 0));
    assert_eq!(snapshot(&out), first);
}

#[test]
fn changed_spec_is_refused_for_an_existing_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), BLUR_SPEC);
    let spec = write_spec(dir.path(), &BLUR_SPEC.replace("seed: 7", "seed: 8"));
    let err = run_generate(&GenerateOptions { spec, out: Some(out), ..Default::default() }).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("different spec"), "{err}");
}

#[test]
fn manifest_references_exactly_the_files_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), BLUR_SPEC);
    evaluate(&out, EndpointSpec::mock(Flavor::MockOracle));
    run_diagnose(&DiagnoseOptions { dataset: out.clone(), by: Some("noise.blur".into()), ..Default::default() }).unwrap();
    let m = RunManifest::load(&out).unwrap();
    let mut on_disk: Vec<String> = snapshot(&out).into_keys().filter(|k| k != "manifest.json").collect();
    on_disk.sort();
    assert_eq!(m.referenced_files(), on_disk);
    assert!(m.scenes.iter().all(|s| s.status == visdiag::Status::Scored));
}

#[test]
fn oracle_mock_scores_perfectly_and_reports_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), BLUR_SPEC);
    let s = evaluate(&out, EndpointSpec::mock(Flavor::MockOracle));
    // 6 scenes x 2 keys x 2 preprompts x 2 instructions
    assert_eq!((s.requests, s.failed, s.unparsed), (48, 0, 0));
    let again = evaluate(&out, EndpointSpec::mock(Flavor::MockOracle));
    assert_eq!(again.reused, 48);

    let opts = DiagnoseOptions { dataset: out.clone(), by: Some("noise.blur".into()), ..Default::default() };
    let r = run_diagnose(&opts).unwrap();
    assert_eq!(r.report.overall.accuracy, 1.0);
    assert_eq!(r.report.overall.mae, Some(0.0));
    let report = std::fs::read(r.report_dir.join("report.json")).unwrap();
    run_diagnose(&DiagnoseOptions { rescore: true, ..opts }).unwrap();
    assert_eq!(std::fs::read(r.report_dir.join("report.json")).unwrap(), report);
}

#[test]
fn constant_three_over_one_to_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), COUNT_SPEC);
    let s = evaluate(&out, EndpointSpec::constant("3"));
    assert_eq!((s.requests, s.records, s.unparsed), (5, 5, 0));
    let r = run_diagnose(&DiagnoseOptions {
        dataset: out,
        by: Some("chess.count_config".into()),
        bands: Some(default_bands()),
        ..Default::default()
    })
    .unwrap();
    let o = &r.report.overall;
    assert_eq!((o.n, o.accuracy, o.mae, o.mse), (5, 0.2, Some(1.2), Some(2.0)));
    assert!((o.nmae.unwrap() - 0.63).abs() < 1e-12);
    assert!(r.files.iter().any(|f| f.ends_with("bands.csv")));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = generate(dir.path(), COUNT_SPEC);
    let out_s = out.to_str().unwrap();

    let live = dir.path().join("live.yaml");
    std::fs::write(&live, "name: remote\nflavor: openai_chat\nbase_url: http://127.0.0.1:9\nmodel: m\n").unwrap();
    let o = bin(&["evaluate", "--dataset", out_s, "--endpoint", live.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--live"));

    // nothing listens on port 9: every request fails and the run is partial
    let dead = dir.path().join("dead.yaml");
    std::fs::write(
        &dead,
        "name: dead\nflavor: openai_chat\nbase_url: http://127.0.0.1:9\nmodel: m\nmax_retries: 0\ntimeout_secs: 2\n",
    )
    .unwrap();
    let o = bin(&["evaluate", "--dataset", out_s, "--endpoint", dead.to_str().unwrap(), "--live"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));

    let o = bin(&["diagnose", "--dataset", out_s]);
    assert_eq!(o.status.code(), Some(2), "no runs yet");

    let o = bin(&["generate", "--spec", dir.path().join("missing.yaml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let mock = dir.path().join("mock.yaml");
    std::fs::write(&mock, "flavor: mock_constant\nconstant: '3'\n").unwrap();
    let o = bin(&["evaluate", "--dataset", out_s, "--endpoint", mock.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin(&["diagnose", "--dataset", out_s, "--bands", "default"]);
    assert_eq!(o.status.code(), Some(2), "bands without --by");
    let by = ["--by", "chess.count_config", "--bands", "default"];
    let o = bin(&[&["diagnose", "--dataset", out_s][..], &by].concat());
    assert_eq!(o.status.code(), Some(2), "two runs and no --run");
    assert!(String::from_utf8_lossy(&o.stderr).contains("dead, mock_constant"));
    let o = bin(&[&["diagnose", "--dataset", out_s, "--run", "mock_constant"][..], &by].concat());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("accuracy=0.2000"));
}
