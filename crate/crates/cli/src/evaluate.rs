//! `evaluate`: ask an endpoint every (image, question) pair of a dataset and
//! score the parsed answers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use visdiag_client::{
    accumulate_usage, parse_answer_with, query_batch, ChatExchange, ClientError, EndpointSpec, OracleHint, Querier,
    QueryRequest, UsageSummary,
};
use visdiag_core::diagnostics::EvalRecord;
use visdiag_core::legend::{parse_legend_json, Legend};
use visdiag_core::parse::default_vocabulary;
use visdiag_core::qa::{build_qa, fill_placeholders, QaItem, QuestionBank};

use crate::generate::{load_bank, parse_instructions, parse_preprompts};
use crate::manifest::{QuestionGrid, RunEntry, RunManifest, Status};
use crate::{from_jsonl, read, read_string, to_jsonl, write_atomic, CliError};

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub dataset: PathBuf,
    pub endpoint: EndpointSpec,
    /// Empty lists fall back to the grid recorded at generation time.
    pub preprompts: Vec<String>,
    pub instructions: Vec<String>,
    pub keys: Vec<String>,
    pub live: bool,
    pub run: Option<String>,
    pub bank: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub run: String,
    pub requests: u64,
    pub reused: u64,
    pub failed: u64,
    pub records: u64,
    pub unparsed: u64,
    pub usage: UsageSummary,
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordLine {
    pub exchange_id: u64,
    #[serde(flatten)]
    pub record: EvalRecord,
}

pub fn run_dir(dataset: &Path, run: &str) -> PathBuf {
    dataset.join("runs").join(run)
}

pub(crate) fn load_legend(dataset: &Path, rel: &str) -> Result<Legend, CliError> {
    let path = dataset.join(rel);
    parse_legend_json(&read_string(&path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

/// Closed vocabulary for parsing answers to `item`.
pub(crate) fn vocabulary(bank: &QuestionBank, manifest: &RunManifest, key: &str, legend: &Legend) -> Vec<String> {
    match bank.template(manifest.game, key).ok().and_then(|t| t.vocabulary) {
        Some(v) => visdiag_core::qa::vocabulary_words(v, legend),
        None => default_vocabulary(),
    }
}

fn oracle_hint(bank: &QuestionBank, manifest: &RunManifest, item: &QaItem) -> Option<OracleHint> {
    let t = bank.template(manifest.game, &item.key).ok()?;
    let stub = fill_placeholders(&t.declarative, &item.variables).ok()?;
    Some(OracleHint { stub, answer: item.ground_truth.value.to_string() })
}

fn flavor_name(e: &EndpointSpec) -> String {
    serde_json::to_value(e.flavor).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

struct Planned {
    scene: usize,
    item: QaItem,
}

pub fn run_evaluate(opts: &EvaluateOptions) -> Result<EvaluateSummary, CliError> {
    let mut manifest = RunManifest::load(&opts.dataset)?;
    opts.endpoint.validate().map_err(CliError::invalid)?;
    if !opts.endpoint.flavor.is_mock() && !opts.live {
        return Err(CliError::Validation(format!(
            "endpoint `{}` is not a mock; pass --live to send requests",
            opts.endpoint.name
        )));
    }
    let bank = load_bank(opts.bank.as_deref())?;
    let pre_names = if opts.preprompts.is_empty() { &manifest.questions.preprompts } else { &opts.preprompts };
    let ins_names = if opts.instructions.is_empty() { &manifest.questions.instructions } else { &opts.instructions };
    let keys = if opts.keys.is_empty() { manifest.questions.keys.clone() } else { opts.keys.clone() };
    let preprompts = parse_preprompts(pre_names)?;
    let instructions = parse_instructions(ins_names)?;
    for k in &keys {
        bank.template(manifest.game, k).map_err(CliError::invalid)?;
    }
    let run = opts.run.clone().unwrap_or_else(|| {
        if opts.endpoint.name.is_empty() {
            flavor_name(&opts.endpoint)
        } else {
            opts.endpoint.name.clone()
        }
    });
    if run.is_empty() || !run.chars().all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c)) || run.starts_with('.') {
        return Err(CliError::Validation(format!("run name `{run}` must be a plain identifier")));
    }
    let querier = Querier::new(opts.endpoint.clone()).map_err(|e| match e {
        ClientError::Io(source) => CliError::Io { path: PathBuf::from("endpoint"), source },
        other => CliError::invalid(other),
    })?;

    let mut planned: Vec<Planned> = Vec::new();
    let mut legends: BTreeMap<usize, Legend> = BTreeMap::new();
    let mut images: BTreeMap<usize, Arc<Vec<u8>>> = BTreeMap::new();
    for (si, scene) in manifest.scenes.iter().enumerate() {
        if scene.status < Status::Rendered {
            continue;
        }
        let legend = load_legend(&opts.dataset, &scene.files.legend_json)?;
        let items =
            build_qa(&bank, manifest.game, &legend, &keys, &preprompts, &instructions, true).map_err(CliError::invalid)?;
        planned.extend(items.into_iter().map(|item| Planned { scene: si, item }));
        images.insert(si, Arc::new(read(&opts.dataset.join(&scene.files.image))?));
        legends.insert(si, legend);
    }
    if planned.is_empty() {
        return Err(CliError::Validation(format!("{}: no rendered scenes with applicable questions", opts.dataset.display())));
    }

    let dir = run_dir(&opts.dataset, &run);
    let ex_path = dir.join("exchanges.jsonl");
    let mut previous: BTreeMap<u64, ChatExchange> = BTreeMap::new();
    if ex_path.exists() {
        for ex in from_jsonl::<ChatExchange>(&ex_path)? {
            previous.insert(ex.id, ex);
        }
    }

    let mut exchanges: Vec<ChatExchange> = Vec::with_capacity(planned.len());
    let mut todo = Vec::new();
    for (id, p) in planned.iter().enumerate() {
        let id = id as u64;
        match previous.remove(&id) {
            Some(ex) if ex.ok() && ex.prompt == p.item.prompt && ex.key == p.item.key => exchanges.push(ex),
            _ => todo.push(QueryRequest {
                id,
                key: p.item.key.clone(),
                prompt: p.item.prompt.clone(),
                image: images[&p.scene].clone(),
                media_type: "image/png".into(),
                cot: p.item.preprompt.is_cot(),
                oracle: oracle_hint(&bank, &manifest, &p.item),
            }),
        }
    }
    let reused = exchanges.len() as u64;
    if !todo.is_empty() {
        let rt = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .map_err(|e| CliError::Io { path: PathBuf::from("tokio runtime"), source: e })?;
        exchanges.extend(rt.block_on(query_batch(&querier, todo)));
    }
    exchanges.sort_by_key(|e| e.id);
    write_atomic(&ex_path, to_jsonl(&exchanges).as_bytes())?;

    let mut records = Vec::new();
    let mut scene_ok = vec![true; manifest.scenes.len()];
    for (p, ex) in planned.iter().zip(&exchanges) {
        let Some(text) = ex.response.as_deref().filter(|_| ex.ok()) else {
            scene_ok[p.scene] = false;
            continue;
        };
        let vocab = vocabulary(&bank, &manifest, &p.item.key, &legends[&p.scene]);
        let parsed = parse_answer_with(text, p.item.ground_truth.kind, p.item.instruction, p.item.preprompt, &vocab);
        let scene = &manifest.scenes[p.scene];
        records.push(RecordLine {
            exchange_id: ex.id,
            record: EvalRecord::new(
                scene.index,
                &p.item.key,
                scene.assignments.clone(),
                p.item.preprompt,
                p.item.instruction,
                p.item.ground_truth.clone(),
                parsed,
            ),
        });
    }
    let rec_path = dir.join("records.jsonl");
    write_atomic(&rec_path, to_jsonl(&records).as_bytes())?;
    let usage = accumulate_usage(&exchanges, opts.endpoint.price_in, opts.endpoint.price_out);
    let usage_path = dir.join("usage.json");
    write_atomic(&usage_path, serde_json::to_string_pretty(&usage).expect("usage serializes").as_bytes())?;

    let failed = exchanges.iter().filter(|e| !e.ok()).count() as u64;
    for (si, scene) in manifest.scenes.iter_mut().enumerate() {
        if scene.status >= Status::Rendered && legends.contains_key(&si) {
            scene.advance(Status::Evaluated);
            if scene_ok[si] {
                scene.advance(Status::Scored);
            }
        }
    }
    let rel = |f: &str| format!("runs/{run}/{f}");
    let reports = manifest.runs.get(&run).map(|r| r.reports.clone()).unwrap_or_default();
    manifest.runs.insert(
        run.clone(),
        RunEntry {
            endpoint: opts.endpoint.name.clone(),
            flavor: flavor_name(&opts.endpoint),
            model: opts.endpoint.model.clone(),
            grid: QuestionGrid {
                keys,
                preprompts: preprompts.iter().map(|p| p.as_str().to_string()).collect(),
                instructions: instructions.iter().map(|i| i.as_str().to_string()).collect(),
            },
            exchanges: rel("exchanges.jsonl"),
            records: rel("records.jsonl"),
            usage: rel("usage.json"),
            requests: exchanges.len() as u64,
            completed: exchanges.len() as u64 - failed,
            failed,
            reports,
        },
    );
    manifest.save(&opts.dataset)?;
    let unparsed = records.iter().filter(|r| r.record.unparsed).count() as u64;
    log::info!(
        "run `{run}`: {} requests ({} reused, {} failed), {} unparsed",
        exchanges.len(),
        reused,
        failed,
        unparsed
    );
    Ok(EvaluateSummary {
        run,
        requests: exchanges.len() as u64,
        reused,
        failed,
        records: records.len() as u64,
        unparsed,
        usage,
    })
}
