use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use visdiag::{
    run_diagnose, run_evaluate, run_generate, CliError, DiagnoseOptions, EvaluateOptions, GenerateOptions,
};
use visdiag_client::EndpointSpec;
use visdiag_core::diagnostics::{default_bands, parse_bands, Metric};

#[derive(Parser)]
#[command(name = "visdiag", version, about = "Synthetic chess/poker scenes, model evaluation and diagnostics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Render every combination of a dataset spec.
    Generate(GenerateArgs),
    /// Query an endpoint about a generated dataset and score the answers.
    Evaluate(EvaluateArgs),
    /// Build reports from scored answers.
    Diagnose(DiagnoseArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Output directory; defaults to the spec's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Question bank JSON; the built-in bank otherwise.
    #[arg(long)]
    bank: Option<PathBuf>,
    /// Render at most this many scenes, leaving the rest for a later run.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Endpoint file (YAML or JSON).
    #[arg(long)]
    endpoint: PathBuf,
    #[arg(long, value_delimiter = ',')]
    preprompts: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    instructions: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    keys: Vec<String>,
    /// Allow requests to non-mock endpoints.
    #[arg(long)]
    live: bool,
    /// Run name; defaults to the endpoint name.
    #[arg(long)]
    run: Option<String>,
    #[arg(long)]
    bank: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    run: Option<String>,
    /// Variable for level curves, e.g. `noise.blur` or `chess.count_config`.
    #[arg(long)]
    by: Option<String>,
    /// Two variables, `x,y`, for a heatmap grid.
    #[arg(long)]
    cross: Option<String>,
    /// `default` or `Name:lo-hi,...`.
    #[arg(long)]
    bands: Option<String>,
    /// accuracy, mae, mse, nmae or unparsed.
    #[arg(long)]
    metric: Option<String>,
    /// Another report.json to correlate level curves with.
    #[arg(long)]
    correlate: Option<PathBuf>,
    /// Re-parse stored responses.
    #[arg(long)]
    rescore: bool,
    #[arg(long)]
    bank: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Generate(a) => {
            let s = run_generate(&GenerateOptions { spec: a.spec, out: a.out, seed: a.seed, bank: a.bank, limit: a.limit })?;
            println!(
                "{}: {} scenes ({} rendered, {} already present, {} pending)",
                s.out.display(),
                s.total,
                s.rendered,
                s.skipped,
                s.pending
            );
            Ok(())
        }
        Cmd::Evaluate(a) => {
            let endpoint = EndpointSpec::load(&a.endpoint).map_err(|e| CliError::Validation(e.to_string()))?;
            let s = run_evaluate(&EvaluateOptions {
                dataset: a.dataset,
                endpoint,
                preprompts: a.preprompts,
                instructions: a.instructions,
                keys: a.keys,
                live: a.live,
                run: a.run,
                bank: a.bank,
            })?;
            println!(
                "run `{}`: {} requests ({} reused, {} failed), {} records, {} unparsed, {} input / {} output tokens, cost {:.6}",
                s.run,
                s.requests,
                s.reused,
                s.failed,
                s.records,
                s.unparsed,
                s.usage.input_tokens,
                s.usage.output_tokens,
                s.usage.cost
            );
            if s.failed > 0 {
                return Err(CliError::Partial { failed: s.failed, total: s.requests });
            }
            Ok(())
        }
        Cmd::Diagnose(a) => {
            let cross = match a.cross.as_deref() {
                Some(c) => match c.split_once(',') {
                    Some((x, y)) => Some((x.trim().to_string(), y.trim().to_string())),
                    None => return Err(CliError::Validation("--cross takes `x,y`".into())),
                },
                None => None,
            };
            let bands = match a.bands.as_deref() {
                Some("default") => Some(default_bands()),
                Some(s) => Some(parse_bands(s).map_err(|e| CliError::Validation(e.to_string()))?),
                None => None,
            };
            let metric = match a.metric.as_deref() {
                Some(m) => Some(Metric::parse(m).ok_or_else(|| CliError::Validation(format!("unknown metric `{m}`")))?),
                None => None,
            };
            let s = run_diagnose(&DiagnoseOptions {
                dataset: a.dataset,
                run: a.run,
                by: a.by,
                cross,
                bands,
                metric,
                correlate: a.correlate,
                rescore: a.rescore,
                bank: a.bank,
            })?;
            let o = &s.report.overall;
            println!(
                "run `{}`: n={} accuracy={:.4} f1={:.4} mae={} unparsed={:.4}; report in {}",
                s.run,
                o.n,
                o.accuracy,
                o.f1,
                o.mae.map_or("-".into(), |m| format!("{m:.4}")),
                o.unparsed_rate,
                s.report_dir.display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
