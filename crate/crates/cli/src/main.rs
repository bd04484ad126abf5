use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flmarket_core::document::{parse_json, GameDocument, ParseFailure, ScenarioDocument};
use flmarket_core::numfmt::{format_sig, round_json};
use flmarket_core::report::AnalysisReport;
use flmarket_core::sweep::{kappa_csv, qmin_csv, sweep_kappa, sweep_qmin, SweepConfig, CSV_DIGITS};
use flmarket_core::{verify_dominant_strategy, ImprovementProfile, DEFAULT_DELTA};
use flmarket_service::{ServeError, ServiceConfig, DEFAULT_PORT};
use serde::Serialize;

const JSON_DIGITS: usize = 15;

#[derive(Debug, Parser)]
#[command(name = "flmarket", version, about = "Market stability analysis for federated learning among competing firms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bounds, friendliness and viability for a scenario file; with --q,
    /// also the post-FL shares and the stability verdict.
    Analyze {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DELTA, allow_negative_numbers = true)]
        delta: f64,
        /// Relative improvements, comma-separated, one per firm.
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Minimum relative improvement over (theta, share, loyalty).
    SweepQmin(SweepArgs),
    /// Friendliness over (theta, sensitive firms, their share, loyalty).
    SweepKappa(SweepArgs),
    /// Brute-force check that committing all data is dominant.
    GameVerify {
        #[arg(long)]
        game: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "scenarios")]
        data_dir: PathBuf,
        /// Allowed browser origin; any when omitted.
        #[arg(long)]
        cors_origin: Option<String>,
        /// Directory of static UI assets served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct SweepArgs {
    /// JSON sweep configuration; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration's delta.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Output directory; the table goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
    format: TableFormat,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {}: {failure}", path.display())]
    Parse { path: PathBuf, failure: ParseFailure },
    #[error("invalid scenario in {}: {source}", path.display())]
    InvalidScenario { path: PathBuf, source: flmarket_core::Error },
    #[error("{0}")]
    Model(#[from] flmarket_core::Error),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Serve(#[from] ServeError),
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::FileNotFound(_) => "file-not-found",
            CliError::Read { .. } => "read",
            CliError::Parse { .. } => "parse",
            CliError::InvalidScenario { .. } => "invalid-scenario",
            CliError::Model(_) => "model",
            CliError::Write { .. } => "write",
            CliError::Serve(_) => "serve",
        }
    }
}

/// Whether the command's verdict was positive.
enum Verdict {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<Verdict, CliError> {
    match command {
        Command::Analyze { scenario, delta, q, format } => analyze(&scenario, delta, q, format),
        Command::SweepQmin(args) => {
            let config = sweep_config(&args)?;
            let rows = sweep_qmin(&config)?;
            let body = match args.format {
                TableFormat::Csv => qmin_csv(&rows),
                TableFormat::Json => json_text(&rows),
            };
            emit_table(&args, "qmin", &body)
        }
        Command::SweepKappa(args) => {
            let config = sweep_config(&args)?;
            let rows = sweep_kappa(&config)?;
            let body = match args.format {
                TableFormat::Csv => kappa_csv(&rows),
                TableFormat::Json => json_text(&rows),
            };
            emit_table(&args, "kappa", &body)
        }
        Command::GameVerify { game, format } => game_verify(&game, format),
        Command::Serve { port, data_dir, cors_origin, static_dir } => {
            let config = ServiceConfig { port, data_dir, cors_origin, static_dir };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Serve(e.into()))?;
            runtime.block_on(flmarket_service::serve(config))?;
            Ok(Verdict::Pass)
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => CliError::FileNotFound(path.to_path_buf()),
        _ => CliError::Read { path: path.to_path_buf(), source },
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    parse_json(&read_file(path)?).map_err(|failure| CliError::Parse { path: path.to_path_buf(), failure })
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("reports always serialize");
    round_json(&mut v, JSON_DIGITS);
    let mut text = serde_json::to_string_pretty(&v).expect("values always serialize");
    text.push('\n');
    text
}

fn analyze(path: &Path, delta: f64, q: Option<Vec<f64>>, format: ReportFormat) -> Result<Verdict, CliError> {
    let doc: ScenarioDocument = read_json(path)?;
    let scenario = doc
        .to_scenario()
        .map_err(|source| CliError::InvalidScenario { path: path.to_path_buf(), source })?;
    let profile = q.map(ImprovementProfile::from_relative).transpose()?;
    let report = AnalysisReport::build(&scenario, &doc.names(), delta, profile.as_ref())?;
    match format {
        ReportFormat::Text => print!("{report}"),
        ReportFormat::Json => print!("{}", json_text(&report)),
        ReportFormat::Csv => print!("{}", report_csv(&report)),
    }
    Ok(if report.verdict() { Verdict::Pass } else { Verdict::Fail })
}

fn report_csv(report: &AnalysisReport) -> String {
    let num = |x: f64| format_sig(x, CSV_DIGITS);
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut out = String::from("firm,share,r_hat,q_hat_min,q_min,status,sensitive,q,new_share,variance\n");
    for (i, firm) in report.firms.iter().enumerate() {
        let outcome = report.outcome.as_ref();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            firm.name,
            num(firm.share),
            num(report.aggregates.r_hat[i]),
            opt(firm.q_hat_min),
            opt(firm.q_min),
            firm.status,
            firm.sensitive,
            opt(outcome.map(|o| o.q[i])),
            opt(outcome.map(|o| o.new_shares[i])),
            opt(outcome.map(|o| o.variances[i])),
        ));
    }
    out
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => read_json(path)?,
        None => SweepConfig::default(),
    };
    if let Some(delta) = args.delta {
        config.delta = delta;
    }
    Ok(config)
}

fn emit_table(args: &SweepArgs, stem: &str, body: &str) -> Result<Verdict, CliError> {
    match &args.out {
        None => print!("{body}"),
        Some(dir) => {
            let ext = match args.format {
                TableFormat::Csv => "csv",
                TableFormat::Json => "json",
            };
            let path = dir.join(format!("{stem}.{ext}"));
            fs::create_dir_all(dir)
                .and_then(|_| fs::write(&path, body))
                .map_err(|source| CliError::Write { path: path.clone(), source })?;
            eprintln!("wrote {}", path.display());
        }
    }
    Ok(Verdict::Pass)
}

fn game_verify(path: &Path, format: ReportFormat) -> Result<Verdict, CliError> {
    let doc: GameDocument = read_json(path)?;
    let spec = doc.to_spec().map_err(|source| match source {
        flmarket_core::Error::InvalidScenario(_) => CliError::InvalidScenario { path: path.to_path_buf(), source },
        e => CliError::Model(e),
    })?;
    let check = verify_dominant_strategy(&spec)?;
    match format {
        ReportFormat::Json => print!("{}", json_text(&check)),
        ReportFormat::Text | ReportFormat::Csv => {
            println!("profiles checked: {}", check.evaluations);
            match &check.counterexample {
                None => println!("full commitment is a dominant strategy on the grid"),
                Some(c) => println!(
                    "counterexample: firm {} gains by committing {} instead of everything \
                     against {:?} (share {} vs {})",
                    c.firm,
                    format_sig(c.deviation, 6),
                    c.others,
                    format_sig(c.deviation_payoff, 9),
                    format_sig(c.full_commitment_payoff, 9)
                ),
            }
        }
    }
    Ok(if check.holds { Verdict::Pass } else { Verdict::Fail })
}
