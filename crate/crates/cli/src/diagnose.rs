//! `diagnose`: scored records -> report bundle.

use std::collections::BTreeMap;
use std::path::PathBuf;

use visdiag_client::{parse_answer_with, ChatExchange};
use visdiag_core::diagnostics::{
    band_csv, build_report, confusion, confusion_csv, correlate_levels, error_histogram, grid_csv, histogram_csv,
    level_curve_csv, level_series, report_csv, Band, EvalRecord, Metric, Report, ReportConfig,
};

use crate::evaluate::{load_legend, run_dir, vocabulary, RecordLine};
use crate::generate::load_bank;
use crate::manifest::RunManifest;
use crate::{from_jsonl, read_string, to_jsonl, write_atomic, CliError};

#[derive(Debug, Clone, Default)]
pub struct DiagnoseOptions {
    pub dataset: PathBuf,
    /// Needed only when the dataset has several runs.
    pub run: Option<String>,
    pub by: Option<String>,
    pub cross: Option<(String, String)>,
    pub bands: Option<Vec<Band>>,
    pub metric: Option<Metric>,
    /// Another `report.json` whose level curve is correlated with this one.
    pub correlate: Option<PathBuf>,
    /// Re-parse stored responses instead of trusting `records.jsonl`.
    pub rescore: bool,
    pub bank: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnoseSummary {
    pub run: String,
    pub report_dir: PathBuf,
    pub report: Report,
    pub files: Vec<String>,
}

fn pick_run(manifest: &RunManifest, run: Option<&str>) -> Result<String, CliError> {
    match run {
        Some(r) if manifest.runs.contains_key(r) => Ok(r.to_string()),
        Some(r) => Err(CliError::Validation(format!("no run `{r}` in this dataset"))),
        None => match manifest.runs.keys().collect::<Vec<_>>().as_slice() {
            [only] => Ok((*only).clone()),
            [] => Err(CliError::Validation("dataset has no evaluation runs; run `evaluate` first".into())),
            many => Err(CliError::Validation(format!(
                "dataset has several runs ({}); choose one with --run",
                many.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            ))),
        },
    }
}

fn rescore(opts: &DiagnoseOptions, manifest: &RunManifest, run: &str, lines: &mut [RecordLine]) -> Result<(), CliError> {
    let bank = load_bank(opts.bank.as_deref())?;
    let dir = run_dir(&opts.dataset, run);
    let exchanges: BTreeMap<u64, ChatExchange> =
        from_jsonl::<ChatExchange>(&dir.join("exchanges.jsonl"))?.into_iter().map(|e| (e.id, e)).collect();
    let mut legends = BTreeMap::new();
    for line in lines.iter_mut() {
        let r = &line.record;
        let ex = exchanges.get(&line.exchange_id).ok_or_else(|| {
            CliError::Validation(format!("record refers to missing exchange {}", line.exchange_id))
        })?;
        let scene = manifest
            .scenes
            .get(r.scene_index as usize)
            .ok_or_else(|| CliError::Validation(format!("record refers to missing scene {}", r.scene_index)))?;
        if !legends.contains_key(&r.scene_index) {
            legends.insert(r.scene_index, load_legend(&opts.dataset, &scene.files.legend_json)?);
        }
        let vocab = vocabulary(&bank, manifest, &r.key, &legends[&r.scene_index]);
        let parsed = parse_answer_with(
            ex.response.as_deref().unwrap_or(""),
            r.ground_truth.kind,
            r.instruction,
            r.preprompt,
            &vocab,
        );
        line.record = EvalRecord::new(
            r.scene_index,
            &r.key,
            r.variables.clone(),
            r.preprompt,
            r.instruction,
            r.ground_truth.clone(),
            parsed,
        );
    }
    Ok(())
}

pub fn run_diagnose(opts: &DiagnoseOptions) -> Result<DiagnoseSummary, CliError> {
    let mut manifest = RunManifest::load(&opts.dataset)?;
    let run = pick_run(&manifest, opts.run.as_deref())?;
    let entry = manifest.runs[&run].clone();
    let rec_path = opts.dataset.join(&entry.records);
    let mut lines: Vec<RecordLine> = from_jsonl(&rec_path)?;
    if opts.rescore {
        rescore(opts, &manifest, &run, &mut lines)?;
        write_atomic(&rec_path, to_jsonl(&lines).as_bytes())?;
    }
    let records: Vec<EvalRecord> = lines.into_iter().map(|l| l.record).collect();
    if opts.bands.is_some() && opts.by.is_none() {
        return Err(CliError::Validation("--bands needs --by <variable>".into()));
    }
    let cfg = ReportConfig { by: opts.by.clone(), cross: opts.cross.clone(), bands: opts.bands.clone(), metric: opts.metric };
    let mut report = build_report(&records, &cfg).map_err(CliError::invalid)?;
    if let Some(other) = &opts.correlate {
        let theirs: Report = serde_json::from_str(&read_string(other)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", other.display())))?;
        if report.levels.is_empty() || theirs.levels.is_empty() {
            return Err(CliError::Validation("--correlate needs level curves on both sides (use --by)".into()));
        }
        let metric = opts.metric.unwrap_or(Metric::Accuracy);
        let c = correlate_levels(&level_series(&report.levels, metric), &level_series(&theirs.levels, metric))
            .map_err(CliError::invalid)?;
        report.correlations.push(c);
    }

    let rel_dir = format!("runs/{run}/report");
    let dir = opts.dataset.join(&rel_dir);
    let mut files: Vec<(String, String)> = vec![
        ("report.json".into(), serde_json::to_string_pretty(&report).expect("report serializes") + "\n"),
        ("report.csv".into(), report_csv(&report)),
        ("confusion.csv".into(), confusion_csv(&confusion(&records))),
        ("error_histogram.csv".into(), histogram_csv(&error_histogram(&records))),
    ];
    let mut prompt_grids = String::new();
    for (key, g) in &report.prompt_grids {
        prompt_grids.push_str(&format!("# {key}\n{}", grid_csv(g)));
    }
    files.push(("prompt_grids.csv".into(), prompt_grids));
    if !report.levels.is_empty() {
        files.push(("levels.csv".into(), level_curve_csv(&report.levels)));
    }
    if let Some(b) = &report.bands {
        files.push(("bands.csv".into(), band_csv(b)));
        if !b.orphans.is_empty() {
            log::warn!("{} records fall outside every band", b.orphans.len());
        }
    }
    if let Some(g) = &report.cross {
        files.push(("cross.csv".into(), grid_csv(g)));
    }
    if let Some(g) = &report.localization {
        files.push(("localization.csv".into(), grid_csv(g)));
    }
    let mut written = Vec::new();
    for (name, body) in &files {
        write_atomic(&dir.join(name), body.as_bytes())?;
        written.push(format!("{rel_dir}/{name}"));
    }
    let run_entry = manifest.runs.get_mut(&run).expect("run picked above");
    run_entry.reports.retain(|f| !f.starts_with(&rel_dir));
    run_entry.reports.extend(written.iter().cloned());
    run_entry.reports.sort();
    // stale plot files from an earlier invocation with other options
    if let Ok(rd) = std::fs::read_dir(&dir) {
        for f in rd.flatten() {
            let name = format!("{rel_dir}/{}", f.file_name().to_string_lossy());
            if !written.contains(&name) {
                let _ = std::fs::remove_file(f.path());
            }
        }
    }
    manifest.save(&opts.dataset)?;
    Ok(DiagnoseSummary { run, report_dir: dir, report, files: written })
}
