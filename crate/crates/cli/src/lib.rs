//! The `alterfactual` command line.
//!
//! Every command returns its machine output as a string; `main` prints it
//! and maps errors to exit codes.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use alterfactual_analysis::condition_report;
use alterfactual_core::render::{render_explanation, TemplateSet};
use alterfactual_core::{AlterfactualMode, Explainer, Instance, RuleModel};
use alterfactual_service::{ExplainRequest, ModelSource, RequestKind, ServiceConfig};
use alterfactual_study::clock::ManualClock;
use alterfactual_study::export::{read_csv, to_csv_string};
use alterfactual_study::log::{finished_records, read_log};
use alterfactual_study::simulate::simulate;
use alterfactual_study::{finalize, SessionRecord, StudyConfig};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] alterfactual_core::Error),
    #[error(transparent)]
    Study(#[from] alterfactual_study::StudyError),
    #[error(transparent)]
    Stats(#[from] alterfactual_analysis::StatsError),
    #[error(transparent)]
    Service(#[from] alterfactual_service::ServiceError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "alterfactual", version, about = "Alterfactual and counterfactual explanations, and the user study around them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ModelArgs {
    /// Built-in model (`document`, `cactus`) or a JSON file with `schema` and
    /// `model` keys, such as a study config.
    #[arg(long, default_value = "document")]
    pub model: String,
    /// Grid stride for a numeric feature, as `feature=step`. Repeatable.
    #[arg(long = "stride", value_name = "FEATURE=STEP")]
    pub stride: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Factual,
    Counterfactual,
    Semifactual,
    Alterfactual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Irrelevance,
    Strict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate one explanation for an instance.
    Explain {
        #[command(flatten)]
        model: ModelArgs,
        /// The instance as a JSON object.
        #[arg(long)]
        instance: String,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Alterfactual mode.
        #[arg(long, value_enum, default_value = "irrelevance")]
        mode: Mode,
        /// Margin tolerance for strict alterfactuals.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Decision a counterfactual should reach.
        #[arg(long)]
        target: Option<String>,
        /// Use seeded heuristic search instead of exhaustive search.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, requires = "seed")]
        restarts: Option<u32>,
        #[arg(long, requires = "seed")]
        max_steps: Option<u32>,
        /// JSON file with an array of instances, for factual explanations.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Print the rendered sentence instead of JSON.
        #[arg(long)]
        text: bool,
    },
    /// Report which features can change the decision.
    Relevance {
        #[command(flatten)]
        model: ModelArgs,
        /// Relevance over the whole grid.
        #[arg(long, conflicts_with = "instance", required_unless_present = "instance")]
        global: bool,
        /// Relevance at one instance (JSON object).
        #[arg(long)]
        instance: Option<String>,
    },
    /// Distance from an instance to the nearest point of another decision.
    Margin {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        instance: String,
    },
    /// Run the study HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Study config file; the built-in document study when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed of the built-in study.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
        /// Environment variable that holds the admin token.
        #[arg(long, default_value = alterfactual_service::config::DEFAULT_TOKEN_ENV)]
        admin_token_env: String,
        /// Allowed browser origin. Repeatable.
        #[arg(long = "cors-origin")]
        cors_origins: Vec<String>,
    },
    /// Run synthetic bot participants and write the results CSV.
    Simulate {
        /// Study config file; the built-in document study when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        bots: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the event log here.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Per-condition statistics over a results CSV or an event log.
    Analyze {
        /// A results CSV, or a `.jsonl` event log.
        #[arg(long = "in")]
        input: PathBuf,
        /// Study config for event logs; the built-in document study when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Seed of the built-in study for event logs.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Print the built-in study config as an editable template.
    ExportConfigTemplate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

fn parse_json<T: serde::de::DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("bad {what}: {e}")))
}

impl ModelArgs {
    fn source(&self) -> Result<ModelSource> {
        if matches!(self.model.as_str(), "document" | "cactus") {
            return Ok(ModelSource::Builtin(self.model.clone()));
        }
        let text = read(Path::new(&self.model))?;
        match parse_json::<ModelSource>("model file", &text)? {
            ModelSource::Builtin(_) => Err(CliError::Input(format!("{}: expected an object", self.model))),
            inline => Ok(inline),
        }
    }

    fn stride(&self) -> Result<BTreeMap<String, u64>> {
        self.stride
            .iter()
            .map(|s| {
                let (f, n) = s
                    .split_once('=')
                    .ok_or_else(|| CliError::Input(format!("stride `{s}` is not FEATURE=STEP")))?;
                let n = n.parse().map_err(|_| CliError::Input(format!("stride `{s}` has a bad step")))?;
                Ok((f.to_string(), n))
            })
            .collect()
    }

    fn load(&self) -> Result<(RuleModel, alterfactual_core::GridOptions)> {
        Ok((self.source()?.load()?, alterfactual_core::GridOptions { stride: self.stride()? }))
    }
}

fn templates(source: &ModelSource, model: &RuleModel) -> TemplateSet {
    match source {
        ModelSource::Builtin(name) if name == "document" => TemplateSet::document(model.schema()),
        _ => TemplateSet::for_schema(model.schema()),
    }
}

fn load_study(config: Option<&Path>, seed: u64) -> Result<StudyConfig> {
    let study = match config {
        Some(p) => StudyConfig::parse(&read(p)?)?,
        None => StudyConfig::document(seed)?,
    };
    study.validate()?;
    Ok(study)
}

#[derive(Serialize)]
struct MarginOutput {
    value: alterfactual_core::Measure,
    witness: Instance,
}

/// Runs a non-serving command and returns what it prints.
pub fn execute(command: &Command) -> Result<String> {
    match command {
        Command::Explain {
            model,
            instance,
            kind,
            mode,
            epsilon,
            target,
            seed,
            restarts,
            max_steps,
            dataset,
            text,
        } => {
            let source = model.source()?;
            let request = ExplainRequest {
                model: source.clone(),
                instance: parse_json("instance", instance)?,
                kind: match kind {
                    Kind::Factual => RequestKind::Factual,
                    Kind::Counterfactual => RequestKind::Counterfactual,
                    Kind::Semifactual => RequestKind::Semifactual,
                    Kind::Alterfactual => RequestKind::Alterfactual,
                },
                mode: Some(match mode {
                    Mode::Irrelevance => AlterfactualMode::Irrelevance,
                    Mode::Strict => AlterfactualMode::Strict,
                }),
                epsilon: *epsilon,
                target: target.clone(),
                seed: *seed,
                restarts: *restarts,
                max_steps: *max_steps,
                stride: model.stride()?,
                dataset: dataset.as_deref().map(|p| parse_json("dataset", &read(p)?)).transpose()?,
            };
            let e = request.run()?;
            if *text {
                let m = source.load()?;
                Ok(render_explanation(&e, &templates(&source, &m))? + "\n")
            } else {
                Ok(json(&e))
            }
        }
        Command::Relevance { model, global, instance } => {
            let (m, opts) = model.load()?;
            let explainer = Explainer::new(&m, &opts)?;
            let report = match (global, instance) {
                (_, Some(x)) => explainer.local_relevance(&parse_json("instance", x)?)?,
                _ => explainer.global_relevance(),
            };
            Ok(json(&report))
        }
        Command::Margin { model, instance } => {
            let (m, opts) = model.load()?;
            let margin = Explainer::new(&m, &opts)?.margin(&parse_json("instance", instance)?)?;
            Ok(json(&MarginOutput {
                value: margin.value.into(),
                witness: margin.witness,
            }))
        }
        Command::Simulate {
            config,
            bots,
            seed,
            out,
            log,
        } => {
            let study = load_study(config.as_deref(), 0)?;
            // simulated time keeps the output reproducible
            let runs = simulate(&study, *bots, *seed, &ManualClock::fixed())?;
            let records: Vec<SessionRecord> =
                runs.iter().map(|r| finalize(&r.session, &study)).collect::<std::result::Result<_, _>>()?;
            let csv = to_csv_string(&records)?;
            if let Some(path) = log {
                let mut lines = String::new();
                for r in &runs {
                    for e in &r.session.log {
                        lines.push_str(&serde_json::to_string(e).expect("log entry serializes"));
                        lines.push('\n');
                    }
                }
                write(path, &lines)?;
            }
            match out {
                Some(path) => {
                    write(path, &csv)?;
                    Ok(String::new())
                }
                None => Ok(csv),
            }
        }
        Command::Analyze {
            input,
            config,
            seed,
            format,
        } => {
            let records = if input.extension().is_some_and(|e| e == "jsonl") {
                let study = load_study(config.as_deref(), *seed)?;
                finished_records(&read_log(input)?, &study)?
            } else {
                read_csv(read(input)?.as_bytes())?
            };
            let report = condition_report(&records)?;
            Ok(match format {
                ReportFormat::Text => report.to_text(),
                ReportFormat::Json => json(&report),
                ReportFormat::Csv => report.to_csv(),
            })
        }
        Command::ExportConfigTemplate { seed } => Ok(StudyConfig::document(*seed)?.to_json_pretty() + "\n"),
        Command::Serve { .. } => Err(CliError::Input("serve runs a server; use `run`".into())),
    }
}

/// Runs a command, serving until interrupted for `serve`.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Serve {
            bind,
            config,
            seed,
            data_dir,
            admin_token_env,
            cors_origins,
        } => {
            let mut sc = ServiceConfig::new(bind, data_dir);
            sc.study_config = config;
            sc.seed = seed;
            sc.admin_token_env = admin_token_env;
            sc.cors_origins = cors_origins;
            let rt = tokio::runtime::Runtime::new().map_err(|source| CliError::Io {
                path: "tokio runtime".into(),
                source,
            })?;
            rt.block_on(alterfactual_service::serve(sc)).map_err(|source| CliError::Io {
                path: bind.to_string(),
                source,
            })?;
            Ok(String::new())
        }
        command => execute(&command),
    }
}
