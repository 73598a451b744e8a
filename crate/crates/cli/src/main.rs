use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use riccikit::conditions::{ConditionId, Verdict};
use riccikit::corpus::Overrides;
use riccikit::sampling::SamplingConfig;
use riccikit_cli::app::{self, OdeRequest, Selection, TensorKind, EXIT_ERROR, EXIT_MISMATCH, EXIT_OK};
use riccikit_cli::report::ReportDocument;

#[derive(Parser)]
#[command(name = "riccikit", version, about = "Check Ricci-type curvature conditions on Riemannian metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one condition, or all of them with `classify`, on a .rfm spec
    Check(CheckArgs),
    /// Print curvature components at a point
    Curvature {
        file: PathBuf,
        /// e.g. "x1=0.5,x2=1"
        #[arg(long, allow_hyphen_values = true)]
        at: String,
        #[arg(long, default_value = "ricci")]
        tensor: TensorKind,
    },
    /// Built-in closed-form families
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Built-in reduced ODE systems
    #[command(subcommand)]
    Ode(OdeCommand),
}

#[derive(Args)]
struct Sampling {
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct CheckArgs {
    file: PathBuf,
    /// rr, prs, co, qe1, qe2 or classify
    #[arg(long)]
    condition: Selection,
    #[command(flatten)]
    sampling: Sampling,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Write the JSON report here ("-" for stdout)
    #[arg(long)]
    json: Option<PathBuf>,
    /// Exit with status 2 unless every verdict equals this
    #[arg(long)]
    expect: Option<Verdict>,
    /// Record wall time in the report (breaks byte-identical output)
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum CorpusCommand {
    List,
    Export { id: String, path: PathBuf },
    Verify {
        #[arg(default_value = "all")]
        target: String,
        /// k=v pairs; numbers set parameters, anything else a free function
        #[arg(long)]
        params: Option<String>,
        #[command(flatten)]
        sampling: Sampling,
    },
}

#[derive(Subcommand)]
enum OdeCommand {
    Run {
        system: String,
        /// comma-separated initial state
        #[arg(long, allow_hyphen_values = true)]
        init: Option<String>,
        /// a:b
        #[arg(long, allow_hyphen_values = true)]
        range: Option<String>,
        #[arg(long)]
        step: Option<f64>,
        /// system parameters as k=v pairs
        #[arg(long)]
        params: Option<String>,
        /// rr, prs, co, qe1 or qe2, checked on the assembled metric
        #[arg(long)]
        verify: Option<ConditionId>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn emit(doc: &ReportDocument, json: Option<&PathBuf>) -> Result<()> {
    match json {
        Some(p) if p.as_os_str() == "-" => print!("{}", doc.to_json()),
        Some(p) => {
            std::fs::write(p, doc.to_json()).with_context(|| format!("writing {}", p.display()))?;
            print!("{}", doc.to_human());
        }
        None => print!("{}", doc.to_human()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Check(a) => {
            let spec = app::load_spec(&a.file)?;
            let cfg = SamplingConfig { points: a.sampling.points, seed: a.sampling.seed, tol: a.tol, ..SamplingConfig::default() };
            cfg.validate()?;
            let doc = app::check(&spec, a.condition, &cfg, a.timing)?;
            emit(&doc, a.json.as_ref())?;
            Ok(match a.expect {
                Some(v) if !app::expectation_met(&doc, v) => EXIT_MISMATCH,
                _ => EXIT_OK,
            })
        }
        Command::Curvature { file, at, tensor } => {
            let spec = app::load_spec(&file)?;
            let x = app::parse_point(&spec, &at)?;
            print!("{}", app::curvature(&spec, &x, tensor)?);
            Ok(EXIT_OK)
        }
        Command::Corpus(CorpusCommand::List) => {
            print!("{}", app::corpus_list());
            Ok(EXIT_OK)
        }
        Command::Corpus(CorpusCommand::Export { id, path }) => {
            app::corpus_export(&id, &path)?;
            Ok(EXIT_OK)
        }
        Command::Corpus(CorpusCommand::Verify { target, params, sampling }) => {
            let o = Overrides::parse(params.as_deref().unwrap_or("")).map_err(anyhow::Error::msg)?;
            let cfg = SamplingConfig::default().with_points(sampling.points).with_seed(sampling.seed);
            let (text, ok) = app::corpus_verify(&target, &o, &cfg)?;
            print!("{text}");
            Ok(if ok { EXIT_OK } else { EXIT_MISMATCH })
        }
        Command::Ode(OdeCommand::Run { system, init, range, step, params, verify, points, seed, json }) => {
            let o = Overrides::parse(params.as_deref().unwrap_or("")).map_err(anyhow::Error::msg)?;
            if let Some(f) = o.funcs.keys().next() {
                anyhow::bail!("ODE parameters are numeric; got '{f}'");
            }
            let req = OdeRequest {
                id: &system,
                params: o.params,
                init: init.as_deref().map(app::parse_values).transpose()?,
                range: range.as_deref().map(app::parse_range).transpose()?,
                step,
                verify,
                points,
                seed,
            };
            let out = app::ode_run(&req)?;
            print!("{}", out.summary);
            if let Some(doc) = &out.report {
                emit(doc, json.as_ref())?;
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
