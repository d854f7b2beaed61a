//! Acceptance run: one PASS/FAIL/SKIP line per criterion.
//!
//! `cargo test -p visdiag --test acceptance`. The live smoke check runs only
//! when `VISDIAG_LIVE_ENDPOINT` names an endpoint file (its token variable
//! must be set too); otherwise it is reported as SKIP.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use visdiag::{run_diagnose, run_evaluate, run_generate, DiagnoseOptions, EvaluateOptions, GenerateOptions};
use visdiag_client::{parse_answer, EndpointSpec, Flavor};
use visdiag_core::answer::{AnswerKind, AnswerValue};
use visdiag_core::config::{expand_variables, parse_dataset_spec, GameKind};
use visdiag_core::diagnostics::{
    band_table, compute_suite, correlate, default_bands, l_loc, score_record, EvalRecord,
};
use visdiag_core::legend::build_legend;
use visdiag_core::qa::{extract_answer, instantiate_question, InstructionKind, PrepromptKind, QaError, QuestionBank};
use visdiag_core::render::{high_frequency_energy, render_scene};
use visdiag_core::scene::{resolve_presets, SceneConfig};
use visdiag_testkit::fixtures::*;
use visdiag_testkit::scenes::{fuzz_chess, fuzz_poker, same_answer, scene_truth};
use visdiag_testkit::specs::{brute_force, fuzz_spec};

enum Verdict {
    Pass(String),
    Fail(String),
    /// Fails as stated, for a reason recorded in the decisions ledger.
    KnownRed(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn files_under(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn generate_into(dir: &Path, spec_text: &str) -> (PathBuf, Duration) {
    let spec = dir.join("spec.yaml");
    std::fs::write(&spec, spec_text).unwrap();
    let out = dir.join("data");
    let t = Instant::now();
    run_generate(&GenerateOptions { spec, out: Some(out.clone()), ..Default::default() }).unwrap();
    (out, t.elapsed())
}

const BLUR_SPEC: &str = "
dataset: {name: blur_by_replicate, seed: 42}
scene: {setup: {resolution: low}}
variables:
  noise.blur:
    variate_type: varying_all
    variate_levels: [none, very_low, low, medium, high, very_high]
    n_images: 5
";

fn determinism() -> Verdict {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (out_a, ta) = generate_into(a.path(), BLUR_SPEC);
    let (out_b, tb) = generate_into(b.path(), BLUR_SPEC);
    let (fa, fb) = (files_under(&out_a), files_under(&out_b));
    let count = |ext: &str, dir: &str| fa.keys().filter(|k| k.starts_with(dir) && k.ends_with(ext)).count();
    let triples = [count(".png", "images"), count(".json", "legends"), count(".txt", "legends")];
    let differing = fa.iter().filter(|(k, v)| fb.get(*k) != Some(*v)).count() + fb.len().abs_diff(fa.len());
    let slowest = ta.max(tb);
    verdict(
        triples == [30; 3] && differing == 0 && slowest < Duration::from_secs(60),
        format!(
            "{:?} png/json/txt, {differing} differing files across reruns, slowest run {:.1}s (limit 60s) at 640x480",
            triples,
            slowest.as_secs_f64()
        ),
    )
}

fn expansion() -> Verdict {
    let mut bad = Vec::new();
    let mut total = 0u64;
    for seed in 0..500u64 {
        let fuzz = fuzz_spec(&mut visdiag_testkit::rng(seed));
        let exp = expand_variables(&parse_dataset_spec(&fuzz.yaml()).unwrap()).unwrap();
        let want = brute_force(&fuzz);
        total += exp.total;
        let admitted = exp.combinations.len() == want.len()
            && exp.combinations.iter().zip(&want).all(|(c, w)| {
                fuzz.vars.iter().zip(w).all(|(v, e)| e.admits(&c.assignments[&v.path]))
            });
        if exp.total as usize != want.len() || !admitted {
            bad.push(seed);
        }
    }
    verdict(bad.is_empty(), format!("500 fuzzed specs ({total} combinations), mismatching seeds {bad:?}"))
}

/// Mismatching keys for one scene, against the brute-force answers.
fn oracle_mismatches(game: GameKind, cfg: &SceneConfig, seed: u64, bank: &QuestionBank) -> Vec<String> {
    let scene = resolve_presets(cfg, seed).unwrap();
    let legend = build_legend(&scene);
    let mut bad = Vec::new();
    for key in bank.keys(game) {
        let q = instantiate_question(bank, key, game, &legend, PrepromptKind::Neutral, InstructionKind::Direct).unwrap();
        let ok = match (extract_answer(key, game, &legend, Some(&q.prompt)), scene_truth(key, &scene, Some(&q.prompt))) {
            (Ok(gt), Some(want)) => gt.kind == want.kind() && same_answer(&gt.value, &want),
            (Err(QaError::Mismatch { .. }), None) => true,
            _ => false,
        };
        if !ok {
            bad.push(format!("{key}@{seed}"));
        }
    }
    bad
}

fn oracle() -> Verdict {
    let bank = QuestionBank::builtin();
    let mut bad = Vec::new();
    let mut checked = 0;
    for seed in 0..1000u64 {
        let chess = fuzz_chess(&mut visdiag_testkit::rng(seed));
        bad.extend(oracle_mismatches(GameKind::Chess, &chess, seed, &bank));
        let poker = fuzz_poker(&mut visdiag_testkit::rng(seed));
        bad.extend(oracle_mismatches(GameKind::Poker, &poker, seed, &bank));
        checked += bank.keys(GameKind::Chess).len() + bank.keys(GameKind::Poker).len();
    }
    bad.truncate(10);
    verdict(bad.is_empty(), format!("1000 chess + 1000 poker scenes, {checked} key checks, mismatches {bad:?}"))
}

fn metrics() -> Verdict {
    let s = compute_suite(&constant_three()).unwrap();
    let nmae = s.nmae.unwrap_or(f64::NAN);
    let zero = count_record(0, 0, Some(2)).norm_error == Some(2.0) && count_record(0, 4, Some(2)).norm_error == Some(0.5);
    verdict(
        s.accuracy == 0.2 && s.mae == Some(1.2) && s.mse == Some(2.0) && (nmae - 0.63).abs() <= 1e-12 && zero,
        format!(
            "accuracy {} mae {:?} mse {:?} nmae {nmae} (|d|={:.1e}, tol 1e-12), zero-target branch {}",
            s.accuracy,
            s.mae,
            s.mse,
            (nmae - 0.63).abs(),
            if zero { "ok" } else { "wrong" }
        ),
    )
}

fn localization_loss() -> Verdict {
    let cells: Vec<[i64; 2]> = (0..4).flat_map(|r| (0..4).map(move |c| [r, c])).collect();
    let mut pairs = 0;
    let mut bad = 0;
    for &t in &cells {
        for &p in &cells {
            let brute = (t[0] - p[0]).abs() + (t[1] - p[1]).abs();
            let s = score_record(&truth(AnswerValue::Cell(t)), &parsed(Some(AnswerValue::Cell(p))));
            if l_loc(t, p) != brute || s.abs_error != Some(brute as f64) {
                bad += 1;
            }
            pairs += 1;
        }
    }
    verdict(pairs == 256 && bad == 0, format!("{pairs} cell pairs on 4x4, {bad} differ from |drow|+|dcol|"))
}

fn transcripts() -> Verdict {
    let counts: Vec<Option<i64>> = COUNTING_REPLIES
        .iter()
        .map(|r| {
            parse_answer(r, AnswerKind::Integer, InstructionKind::Declarative, PrepromptKind::Helpful)
                .value
                .and_then(|v| v.as_integer())
        })
        .collect();
    let counting_right = counts.iter().filter(|&&v| v == Some(COUNTING_TRUTH)).count();
    let counting_ok = counts == COUNTING_PARSED.map(Some) && counting_right == 3;
    let localized = LOCALIZATION_REPLIES
        .iter()
        .filter(|(key, reply)| {
            let want = if *key == "localize_row_one_piece" { LOCALIZATION_TRUTH[0] } else { LOCALIZATION_TRUTH[1] };
            parse_answer(reply, AnswerKind::Integer, InstructionKind::Declarative, PrepromptKind::Helpful).value
                == Some(AnswerValue::Integer(want))
        })
        .count();
    let detail = format!(
        "counting parses {counts:?}, {counting_right}/8 correct; localization {localized}/16 correct (criterion {LOCALIZATION_CLAIMED}/16)"
    );
    if counting_ok && localized == LOCALIZATION_CLAIMED {
        Verdict::Pass(detail)
    } else if counting_ok && localized == LOCALIZATION_MARKED {
        // every reply parses to the value its own transcript row marks;
        // those marks add up to 11, so 12 is unreachable by any parser
        Verdict::KnownRed(format!("{detail}; the transcript's per-reply marks total {LOCALIZATION_MARKED}"))
    } else {
        Verdict::Fail(detail)
    }
}

const E2E_CHESS: &str = "
dataset: {name: e2e_chess, seed: 11}
scene: {setup: {resolution: low}}
variables:
  chess.count_config:
    variate_type: varying_all
    variate_levels: [1, 2, 3, 4, 5]
    n_images: 10
";

const E2E_POKER: &str = "
dataset: {name: e2e_poker, seed: 12}
scene: {setup: {resolution: low}}
variables:
  n_players:
    variate_type: varying_all
    variate_levels: [1, 2, 3, 4, 5]
    n_images: 10
";

fn mock_end_to_end() -> Verdict {
    let t = Instant::now();
    let mut images = 0;
    let mut tasks = BTreeMap::new();
    let mut bad = Vec::new();
    for text in [E2E_CHESS, E2E_POKER] {
        let dir = tempfile::tempdir().unwrap();
        let (out, _) = generate_into(dir.path(), text);
        images += files_under(&out.join("images")).len();
        let s = run_evaluate(&EvaluateOptions {
            dataset: out.clone(),
            endpoint: EndpointSpec::mock(Flavor::MockOracle),
            preprompts: vec![],
            instructions: vec![],
            keys: vec![],
            live: false,
            run: None,
            bank: None,
        })
        .unwrap();
        if s.failed > 0 {
            bad.push(format!("{} failed requests", s.failed));
        }
        let r = run_diagnose(&DiagnoseOptions { dataset: out, ..Default::default() }).unwrap();
        for (key, suite) in &r.report.by_key {
            if suite.accuracy != 1.0 || suite.mae.is_some_and(|m| m != 0.0) || suite.unparsed_rate != 0.0 {
                bad.push(format!("{key}: acc {} mae {:?} unparsed {}", suite.accuracy, suite.mae, suite.unparsed_rate));
            }
            tasks.insert(key.clone(), suite.n);
        }
        for grid in r.report.prompt_grids.values() {
            if grid.x_levels.len() * grid.y_levels.len() != 6 {
                bad.push("prompt grid is not 3x2".into());
            }
        }
    }
    let bank = QuestionBank::builtin();
    let all = bank.keys(GameKind::Chess).len() + bank.keys(GameKind::Poker).len();
    let elapsed = t.elapsed();
    verdict(
        bad.is_empty() && images == 100 && tasks.len() == all && elapsed < Duration::from_secs(120),
        format!(
            "{images} images, {}/{all} tasks at accuracy 1, MAE 0, unparsed 0, {:.1}s (limit 120s); problems {bad:?}",
            tasks.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn correlation() -> Verdict {
    let a: Vec<f64> = (1..=6).map(f64::from).collect();
    let same = correlate(&a, &a).unwrap();
    let rev: Vec<f64> = a.iter().rev().map(|x| x.exp()).collect();
    let reversed = correlate(&a, &rev).unwrap();
    let fx = correlate(&CORR_A, &CORR_B).unwrap();
    let near = |x: Option<f64>, y: f64, tol: f64| x.is_some_and(|x| (x - y).abs() <= tol);
    verdict(
        near(same.pearson, 1.0, 1e-12)
            && near(same.spearman, 1.0, 1e-12)
            && near(reversed.spearman, -1.0, 1e-12)
            && near(fx.pearson, CORR_PEARSON, 1e-9)
            && near(fx.spearman, CORR_SPEARMAN, 1e-9),
        format!(
            "identical {:?}/{:?}, reversed spearman {:?}, fixture pearson {:?} spearman {:?} (tol 1e-9)",
            same.pearson, same.spearman, reversed.spearman, fx.pearson, fx.spearman
        ),
    )
}

fn bands() -> Verdict {
    let bands = default_bands();
    let recs: Vec<EvalRecord> = (1..=21).map(|v| count_record(v as u64, v, Some(v))).collect();
    let t = band_table(&recs, "chess.count_config", &bands).unwrap();
    let covered = (1..=21).all(|v| bands.iter().filter(|b| b.contains(v)).count() == 1);
    let n: u64 = t.rows.iter().map(|r| r.n).sum();
    verdict(
        covered && t.orphans.is_empty() && n == 21,
        format!(
            "bands {:?}, 21 levels each in exactly one band: {covered}, {} orphans",
            t.rows.iter().map(|r| format!("{}={}", r.band.name, r.n)).collect::<Vec<_>>(),
            t.orphans.len()
        ),
    )
}

fn blur() -> Verdict {
    let ladder = ["very_low", "low", "medium", "high", "very_high"];
    let energy: Vec<f64> = ladder
        .iter()
        .map(|b| high_frequency_energy(&render_scene(&resolve_presets(&blur_scene(b), 21).unwrap()).unwrap()))
        .collect();
    let decreasing = energy.windows(2).all(|w| w[1] < w[0]);
    verdict(decreasing, format!("f/9 -> f/0.5 energies {:?}", energy.iter().map(|e| e.round()).collect::<Vec<_>>()))
}

const LIVE_SPEC: &str = "
dataset: {name: live_smoke, seed: 5}
scene: {setup: {resolution: low}}
variables:
  chess.count_config: {variate_type: fixed, variate_levels: 1}
  noise.blur: {variate_type: varying_all, variate_levels: [none], n_images: 5}
questions:
  keys: [count_pieces]
  preprompts: [neutral]
  instructions: [declarative]
";

fn live_smoke() -> Verdict {
    let Some(path) = std::env::var_os("VISDIAG_LIVE_ENDPOINT") else {
        return Verdict::Skip("set VISDIAG_LIVE_ENDPOINT to an endpoint file to run".into());
    };
    let endpoint = match EndpointSpec::load(Path::new(&path)) {
        Ok(e) => e,
        Err(e) => return Verdict::Fail(format!("endpoint: {e}")),
    };
    let dir = tempfile::tempdir().unwrap();
    let (out, _) = generate_into(dir.path(), LIVE_SPEC);
    let opts = EvaluateOptions {
        dataset: out,
        endpoint,
        preprompts: vec![],
        instructions: vec![],
        keys: vec![],
        live: true,
        run: Some("live".into()),
        bank: None,
    };
    match run_evaluate(&opts) {
        Ok(s) => {
            let rate = 1.0 - s.unparsed as f64 / s.records.max(1) as f64;
            verdict(
                s.records == 5 && rate >= 0.8 && s.usage.input_tokens > 0 && s.usage.output_tokens > 0,
                format!(
                    "{} records, parse rate {rate:.2} (min 0.8), tokens {}/{}",
                    s.records, s.usage.input_tokens, s.usage.output_tokens
                ),
            )
        }
        Err(e) => Verdict::Fail(e.to_string()),
    }
}

fn main() {
    let checks: [(&str, Check); 11] = [
        ("determinism", determinism),
        ("expansion_counts", expansion),
        ("oracle_equivalence", oracle),
        ("metric_arithmetic", metrics),
        ("l_loc", localization_loss),
        ("transcript_parsing", transcripts),
        ("mock_end_to_end", mock_end_to_end),
        ("correlation", correlation),
        ("band_table", bands),
        ("blur_property", blur),
        ("live_smoke", live_smoke),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let (mut failed, mut known) = (0, 0);
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let t = Instant::now();
        let v = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::Fail(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match v {
            Verdict::Pass(d) => println!("PASS {name}: {d} [{secs:.1}s]"),
            Verdict::Skip(d) => println!("SKIP {name}: {d}"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{secs:.1}s]");
            }
            Verdict::KnownRed(d) => {
                known += 1;
                println!("FAIL {name}: {d} [{secs:.1}s] (documented, see decisions ledger)");
            }
        }
    }
    println!("acceptance: {failed} unexpected failures, {known} documented");
    if failed > 0 {
        std::process::exit(1);
    }
}
