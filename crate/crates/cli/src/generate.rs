//! `generate`: dataset spec -> images, legends, qa files and scene exports.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;
use visdiag_core::config::{expand_variables, parse_dataset_spec, ConfigCombination, DatasetSpec};
use visdiag_core::legend::{build_legend, render_legend_json, render_legend_text};
use visdiag_core::qa::{build_qa, InstructionKind, PrepromptKind, QuestionBank};
use visdiag_core::render::{encode_png, render_scene};
use visdiag_core::scene::{export_scene_spec, resolve_presets, ResolvedScene, SceneConfig};

use crate::manifest::{QuestionGrid, RunManifest, SceneEntry, SceneFiles, Status, SPEC_FILE};
use crate::{read_string, sha256_hex, write_atomic, CliError};

/// Preprompts used when a spec names none.
pub const DEFAULT_PREPROMPTS: [PrepromptKind; 3] = [PrepromptKind::Helpful, PrepromptKind::Cot, PrepromptKind::Neutral];
pub const DEFAULT_INSTRUCTIONS: [InstructionKind; 2] = [InstructionKind::Declarative, InstructionKind::MissingWord];

#[derive(Debug, Clone, Default)]
pub struct GenerateOptions {
    pub spec: PathBuf,
    /// Defaults to the spec's `output_dir`, relative to the spec file.
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub bank: Option<PathBuf>,
    /// Stop after rendering this many new scenes (the rest stay pending).
    pub limit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub out: PathBuf,
    pub total: u64,
    pub rendered: u64,
    pub skipped: u64,
    pub pending: u64,
}

pub fn load_bank(path: Option<&Path>) -> Result<QuestionBank, CliError> {
    match path {
        Some(p) => QuestionBank::load(p).map_err(CliError::invalid),
        None => Ok(QuestionBank::builtin()),
    }
}

pub fn parse_preprompts(names: &[String]) -> Result<Vec<PrepromptKind>, CliError> {
    if names.is_empty() {
        return Ok(DEFAULT_PREPROMPTS.to_vec());
    }
    names.iter().map(|n| PrepromptKind::parse(n).map_err(CliError::invalid)).collect()
}

pub fn parse_instructions(names: &[String]) -> Result<Vec<InstructionKind>, CliError> {
    if names.is_empty() {
        return Ok(DEFAULT_INSTRUCTIONS.to_vec());
    }
    names.iter().map(|n| InstructionKind::parse(n).map_err(CliError::invalid)).collect()
}

fn load_spec(opts: &GenerateOptions) -> Result<DatasetSpec, CliError> {
    let text = read_string(&opts.spec)?;
    let mut spec = parse_dataset_spec(&text).map_err(CliError::invalid)?;
    if let Some(seed) = opts.seed {
        spec.seed = seed;
        spec.seed_declared = true;
    }
    Ok(spec)
}

pub fn resolve_combination(spec: &DatasetSpec, c: &ConfigCombination) -> Result<ResolvedScene, CliError> {
    let cfg = SceneConfig::from_assignments(spec.game, spec.base.as_ref(), &c.assignments)
        .map_err(|e| CliError::Validation(format!("combination {}: {e}", c.index)))?;
    resolve_presets(&cfg, c.derived_seed).map_err(|e| CliError::Validation(format!("combination {}: {e}", c.index)))
}

struct Rendered {
    png: Vec<u8>,
    legend_json: String,
    legend_txt: String,
    qa: String,
    scene: String,
}

fn render_one(
    spec: &DatasetSpec,
    scene: &ResolvedScene,
    bank: &QuestionBank,
    grid: (&[PrepromptKind], &[InstructionKind]),
) -> Result<Rendered, CliError> {
    let img = render_scene(scene).map_err(CliError::invalid)?;
    let png = encode_png(&img).map_err(CliError::invalid)?;
    let legend = build_legend(scene);
    let qa = build_qa(bank, spec.game, &legend, &spec.questions.keys, grid.0, grid.1, false).map_err(CliError::invalid)?;
    Ok(Rendered {
        png,
        legend_json: render_legend_json(&legend),
        legend_txt: render_legend_text(&legend),
        qa: serde_json::to_string_pretty(&qa).expect("qa serializes"),
        scene: export_scene_spec(scene).expect("scene serializes"),
    })
}

pub fn run_generate(opts: &GenerateOptions) -> Result<GenerateSummary, CliError> {
    let spec = load_spec(opts)?;
    let canonical = spec.to_yaml();
    let spec_hash = sha256_hex(canonical.as_bytes());
    let out = match &opts.out {
        Some(o) => o.clone(),
        None => opts.spec.parent().unwrap_or(Path::new(".")).join(&spec.output_dir),
    };
    let bank = load_bank(opts.bank.as_deref())?;
    let preprompts = parse_preprompts(&spec.questions.preprompts)?;
    let instructions = parse_instructions(&spec.questions.instructions)?;
    for k in &spec.questions.keys {
        bank.template(spec.game, k).map_err(CliError::invalid)?;
    }
    let expansion = expand_variables(&spec).map_err(CliError::invalid)?;

    let manifest = match RunManifest::load_if_present(&out)? {
        Some(m) if m.spec_sha256 != spec_hash => {
            return Err(CliError::Validation(format!(
                "{} was generated from a different spec (hash {}); use a fresh output directory",
                out.display(),
                m.spec_sha256
            )))
        }
        Some(m) => m,
        None => RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            dataset: spec.name.clone(),
            game: spec.game,
            piece_set: spec.piece_set,
            seed: spec.seed,
            spec_sha256: spec_hash,
            spec_file: SPEC_FILE.to_string(),
            total: expansion.total,
            questions: QuestionGrid {
                keys: spec.questions.keys.clone(),
                preprompts: preprompts.iter().map(|p| p.as_str().to_string()).collect(),
                instructions: instructions.iter().map(|i| i.as_str().to_string()).collect(),
            },
            scenes: expansion
                .combinations
                .iter()
                .map(|c| SceneEntry {
                    index: c.index,
                    derived_seed: c.derived_seed,
                    assignments: c.assignments.clone(),
                    status: Status::Pending,
                    files: SceneFiles::for_index(&spec.name, c.index),
                    image_sha256: None,
                })
                .collect(),
            runs: Default::default(),
        },
    };
    write_atomic(&out.join(SPEC_FILE), canonical.as_bytes())?;
    manifest.save(&out)?;

    let done = |e: &SceneEntry| e.status >= Status::Rendered && e.files.all().iter().all(|f| out.join(f).is_file());
    let mut todo: Vec<&ConfigCombination> =
        expansion.combinations.iter().filter(|c| !done(&manifest.scenes[c.index as usize])).collect();
    let skipped = expansion.total - todo.len() as u64;
    if let Some(limit) = opts.limit {
        todo.truncate(limit);
    }

    // Resolve everything first so a bad combination fails before any writes.
    let scenes: Vec<(u64, ResolvedScene)> = todo
        .par_iter()
        .map(|c| resolve_combination(&spec, c).map(|s| (c.index, s)))
        .collect::<Result<_, _>>()?;

    let manifest = Mutex::new(manifest);
    let grid = (preprompts.as_slice(), instructions.as_slice());
    scenes.par_iter().try_for_each(|(index, scene)| -> Result<(), CliError> {
        let r = render_one(&spec, scene, &bank, grid)?;
        let files = SceneFiles::for_index(&spec.name, *index);
        write_atomic(&out.join(&files.image), &r.png)?;
        write_atomic(&out.join(&files.legend_json), r.legend_json.as_bytes())?;
        write_atomic(&out.join(&files.legend_txt), r.legend_txt.as_bytes())?;
        write_atomic(&out.join(&files.qa), r.qa.as_bytes())?;
        write_atomic(&out.join(&files.scene), r.scene.as_bytes())?;
        let mut m = manifest.lock().expect("manifest lock");
        let entry = &mut m.scenes[*index as usize];
        entry.image_sha256 = Some(sha256_hex(&r.png));
        entry.advance(Status::Rendered);
        m.save(&out)
    })?;
    let manifest = manifest.into_inner().expect("manifest lock");
    let pending = manifest.scenes.iter().filter(|s| s.status == Status::Pending).count() as u64;
    log::info!("{}: {} rendered, {} already present, {} pending", out.display(), scenes.len(), skipped, pending);
    Ok(GenerateSummary { out, total: expansion.total, rendered: scenes.len() as u64, skipped, pending })
}
