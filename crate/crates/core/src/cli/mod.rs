//! The `ssls` command-line tool.

pub mod io;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::ate::{estimate_ate, ArmSample, AteDataset};
use crate::basis::{estimate_ls_augmented, estimate_ssls_augmented, BasisSpec};
use crate::estimators::{
    estimate_ls, estimate_sample_mean, estimate_ssls, Dataset, MeanEstimate, UnlabeledSize,
};
use crate::linalg::Matrix;
use crate::simlab::report::{sig6, to_csv_string, Format};
use crate::simlab::{
    render_table1, render_table2, run_simulation, run_table1, DgpSpec, Execution, GridCell,
    Setting, SimulationConfig, SimulationReport, StudyOptions,
};
use io::LoadError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Load(#[from] LoadError),

    #[error("{0}")]
    Usage(String),

    #[error("estimation failed: {0}")]
    Estimation(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Load(_) | CliError::Usage(_) => 1,
            CliError::Estimation(_) => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "ssls",
    version,
    about = "Semi-supervised estimation of a population mean"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate E[Y] from a labeled CSV and optional unlabeled covariates.
    Estimate(EstimateArgs),
    /// Run a seeded Monte Carlo study for one setting.
    Simulate(SimulateArgs),
    /// Run a grid of settings and print a loss or interval table.
    Study(StudyArgs),
    /// Estimate an average treatment effect with extra covariate-only rows.
    Ate(AteArgs),
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// text, csv or json.
    #[arg(long, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub labeled: PathBuf,
    #[arg(long, default_value = "y")]
    pub response: String,
    #[arg(long)]
    pub unlabeled: Option<PathBuf>,
    /// Known covariate mean, comma separated in covariate order.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu_file")]
    pub mu: Option<String>,
    #[arg(long)]
    pub mu_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// none, poly:D or trig:Q.
    #[arg(long)]
    pub basis: Option<BasisSpec>,
    /// Clamp regression estimates into the labeled response band.
    #[arg(long)]
    pub truncate: bool,
    /// mean, ls, ssls or all.
    #[arg(long, default_value = "all")]
    pub estimator: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// gauss-quad, heavy-tail, poisson or gauss-linear.
    #[arg(long)]
    pub setting: Setting,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    /// Unlabeled sizes, comma separated; `inf` adds nothing beyond LS.
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub m: Vec<UnlabeledSize>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Noise variance of gauss-linear.
    #[arg(long, default_value_t = 1.0)]
    pub tau2: f64,
    /// Common slope of gauss-linear.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub slope: f64,
    /// Add the oracle rows.
    #[arg(long)]
    pub oracle: bool,
    /// Add rows on expanded covariates.
    #[arg(long)]
    pub basis: Option<BasisSpec>,
    #[arg(long)]
    pub no_truncate: bool,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// 1 for average squared loss, 2 for interval length and miscoverage.
    #[arg(long, default_value_t = 1)]
    pub table: u8,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "gauss-quad,heavy-tail,poisson"
    )]
    pub setting: Vec<Setting>,
    #[arg(long, value_delimiter = ',', default_value = "1,10,50")]
    pub p: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "100,500,1000,5000")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "100,1000,10000")]
    pub m: Vec<UnlabeledSize>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long)]
    pub no_truncate: bool,
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AteArgs {
    #[arg(long)]
    pub treatment: PathBuf,
    #[arg(long)]
    pub control: PathBuf,
    /// Covariate-only rows from either arm's population.
    #[arg(long)]
    pub extra: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub response: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// One estimate as printed by `estimate`.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub estimator: String,
    pub basis: Option<String>,
    pub theta_hat: f64,
    pub variance_per_n: f64,
    pub n: usize,
    pub m: UnlabeledSize,
    pub alpha: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub ci_length: f64,
    pub truncated: bool,
    pub intercept: Option<f64>,
    pub slopes: Option<Vec<f64>>,
    /// Shift of the untruncated estimate away from `Ȳ`.
    pub adjustment: Option<f64>,
}

impl EstimateRow {
    fn new(est: &MeanEstimate, m: UnlabeledSize, y_mean: f64) -> Self {
        let center = 0.5 * (est.ci_lower + est.ci_upper);
        Self {
            estimator: est.kind.label().to_string(),
            basis: est.basis.clone(),
            theta_hat: est.theta_hat,
            variance_per_n: est.variance_per_n,
            n: est.n,
            m,
            alpha: est.alpha,
            ci_lower: est.ci_lower,
            ci_upper: est.ci_upper,
            ci_length: est.ci_length(),
            truncated: est.truncated,
            intercept: est.fit.as_ref().map(|f| f.beta1),
            slopes: est.fit.as_ref().map(|f| f.beta2.clone()),
            adjustment: est.fit.as_ref().map(|_| center - y_mean),
        }
    }
}

fn emit(output: &OutputArgs, text: String) -> CliResult<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|source| {
            CliError::Load(LoadError::Io {
                path: path.clone(),
                source,
            })
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn check_alpha_arg(alpha: f64) -> CliResult<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn csv_of_rows(rows: &[EstimateRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let _ = w.write_record([
        "estimator",
        "basis",
        "theta_hat",
        "variance_per_n",
        "n",
        "m",
        "alpha",
        "ci_lower",
        "ci_upper",
        "ci_length",
        "truncated",
        "adjustment",
    ]);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let _ = w.write_record([
            r.estimator.clone(),
            r.basis.clone().unwrap_or_default(),
            r.theta_hat.to_string(),
            r.variance_per_n.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.alpha.to_string(),
            r.ci_lower.to_string(),
            r.ci_upper.to_string(),
            r.ci_length.to_string(),
            r.truncated.to_string(),
            opt(r.adjustment),
        ]);
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
}

fn text_of_rows(rows: &[EstimateRow], covariates: &[String]) -> String {
    let mut out = String::new();
    for r in rows {
        let name = match &r.basis {
            Some(b) => format!("{} [{b}]", r.estimator),
            None => r.estimator.clone(),
        };
        let _ = writeln!(out, "{name}  (n = {}, m = {})", r.n, r.m);
        let _ = writeln!(out, "  estimate        {}", sig6(r.theta_hat));
        if r.truncated {
            let _ = writeln!(out, "  (clamped into the response band)");
        }
        let _ = writeln!(out, "  variance basis  {}", sig6(r.variance_per_n));
        let _ = writeln!(
            out,
            "  {:.0}% interval    [{}, {}]",
            100.0 * (1.0 - r.alpha),
            sig6(r.ci_lower),
            sig6(r.ci_upper)
        );
        let _ = writeln!(out, "  interval length {}", sig6(r.ci_length));
        if let Some(slopes) = &r.slopes {
            let shown: Vec<String> = slopes
                .iter()
                .enumerate()
                .map(|(j, b)| match covariates.get(j) {
                    Some(c) => format!("{c}={}", sig6(*b)),
                    None => format!("g{}={}", j + 1 - covariates.len(), sig6(*b)),
                })
                .collect();
            let _ = writeln!(out, "  slopes          {}", shown.join(" "));
        }
        if let Some(a) = r.adjustment {
            let _ = writeln!(out, "  adjustment      {}", sig6(a));
        }
    }
    out
}

fn run_estimate(args: &EstimateArgs) -> CliResult<()> {
    check_alpha_arg(args.alpha)?;
    let table = io::load_labeled_csv(&args.labeled, &args.response)?;
    let p = table.covariates.len();
    let xu = match &args.unlabeled {
        Some(path) => io::load_unlabeled_csv(path, &table.covariates, &args.response)?,
        None => Matrix::empty(p),
    };
    let mu = match (&args.mu, &args.mu_file) {
        (Some(text), _) => Some(io::parse_vector(text)?),
        (None, Some(path)) => Some(io::read_vector_file(path)?),
        (None, None) => None,
    };
    if let Some(mu) = &mu {
        if mu.len() != p {
            return Err(CliError::Usage(format!(
                "mu has {} entries but there are {p} covariates",
                mu.len()
            )));
        }
    }
    let y_mean = table.y.iter().sum::<f64>() / table.y.len() as f64;
    let ds = Dataset::new(table.y, table.x, xu, mu)?;
    let basis = args.basis.clone().unwrap_or_default();
    let plain = matches!(basis, BasisSpec::None);

    let wanted: Vec<&str> = match args.estimator.as_str() {
        "all" => {
            let mut v = vec!["mean", "ssls"];
            if ds.known_mu().is_some() {
                v.push("ls");
            }
            v
        }
        e @ ("mean" | "ls" | "ssls") => vec![e],
        other => {
            return Err(CliError::Usage(format!(
                "estimator must be mean, ls, ssls or all, got {other:?}"
            )))
        }
    };
    let explicit = args.estimator != "all";

    let mut rows = Vec::new();
    for name in wanted {
        let (est, m) = match name {
            "mean" => (
                estimate_sample_mean(&ds, args.alpha),
                UnlabeledSize::Finite(0),
            ),
            "ls" if plain => (
                estimate_ls(&ds, args.alpha, args.truncate),
                UnlabeledSize::Infinite,
            ),
            "ls" => (
                estimate_ls_augmented(&ds, &basis, args.alpha, args.truncate),
                UnlabeledSize::Infinite,
            ),
            _ if plain => (
                estimate_ssls(&ds, args.alpha, args.truncate),
                UnlabeledSize::Finite(ds.m()),
            ),
            _ => (
                estimate_ssls_augmented(&ds, &basis, args.alpha, args.truncate),
                UnlabeledSize::Finite(ds.m()),
            ),
        };
        match est {
            Ok(e) => rows.push(EstimateRow::new(&e, m, y_mean)),
            // LS on a basis without closed-form means is skipped unless asked for
            Err(crate::Error::MissingMu) if !explicit => {}
            Err(e) => return Err(e.into()),
        }
    }

    let text = match args.output.format {
        Format::Text => text_of_rows(&rows, &table.covariates),
        Format::Csv => csv_of_rows(&rows),
        Format::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
    };
    emit(&args.output, text)
}

fn execution(threads: Option<usize>) -> Execution {
    if threads == Some(1) {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

/// Runs `f` on a pool with the requested number of threads.
fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    #[cfg(feature = "parallel")]
    if let Some(t) = threads.filter(|&t| t > 1) {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        return Ok(pool.install(f));
    }
    if threads == Some(0) {
        return Err(CliError::Usage("threads must be positive".into()));
    }
    Ok(f())
}

fn render_reports(
    reports: &[SimulationReport],
    format: Format,
    text: impl FnOnce(&[SimulationReport]) -> String,
) -> String {
    match format {
        Format::Text => text(reports),
        Format::Csv => to_csv_string(reports),
        Format::Json => serde_json::to_string_pretty(reports).expect("reports serialize") + "\n",
    }
}

fn run_simulate(args: &SimulateArgs) -> CliResult<()> {
    check_alpha_arg(args.alpha)?;
    let mut spec = DgpSpec::new(args.setting, args.n, args.p, 0, args.seed);
    spec.tau2 = args.tau2;
    spec.slope = args.slope;
    let mut cfg = SimulationConfig::new(spec, args.m.clone(), args.reps);
    cfg.alpha = args.alpha;
    cfg.truncate = !args.no_truncate;
    cfg.oracle = args.oracle;
    cfg.basis = args.basis.clone();
    let exec = execution(args.threads);
    let report = with_threads(args.threads, || run_simulation(&cfg, exec))??;
    let text = render_reports(&[report], args.output.format, |r| r[0].to_text());
    emit(&args.output, text)
}

fn run_study(args: &StudyArgs) -> CliResult<()> {
    check_alpha_arg(args.alpha)?;
    if !(1..=2).contains(&args.table) {
        return Err(CliError::Usage("table must be 1 or 2".into()));
    }
    let cells: Vec<GridCell> = args
        .setting
        .iter()
        .flat_map(|&s| {
            args.p
                .iter()
                .flat_map(move |&p| args.n.iter().map(move |&n| GridCell::new(s, p, n)))
        })
        .collect();
    let mut options = StudyOptions::new(args.reps, args.seed);
    options.unlabeled = args.m.clone();
    options.alpha = args.alpha;
    options.truncate = !args.no_truncate;
    let exec = execution(args.threads);
    let reports = with_threads(args.threads, || run_table1(&cells, &options, exec))??;
    let render = if args.table == 1 {
        render_table1
    } else {
        render_table2
    };
    let text = render_reports(&reports, args.output.format, render);
    emit(&args.output, text)
}

#[derive(Debug, Serialize)]
struct AteRow {
    d_hat: f64,
    v_hat2: f64,
    alpha: f64,
    ci_lower: f64,
    ci_upper: f64,
    ci_length: f64,
    n_treatment: usize,
    n_control: usize,
    m: usize,
}

fn run_ate(args: &AteArgs) -> CliResult<()> {
    check_alpha_arg(args.alpha)?;
    let t = io::load_labeled_csv(&args.treatment, &args.response)?;
    let c = io::load_labeled_csv(&args.control, &args.response)?;
    // control columns in treatment order
    let c_x = io::load_unlabeled_csv(&args.control, &t.covariates, &args.response)?;
    let extra = match &args.extra {
        Some(path) => io::load_unlabeled_csv(path, &t.covariates, &args.response)?,
        None => Matrix::empty(t.covariates.len()),
    };
    let (n_t, n_c, m) = (t.y.len(), c.y.len(), extra.rows());
    let ds = AteDataset::new(ArmSample::new(t.y, t.x)?, ArmSample::new(c.y, c_x)?, extra)?;
    let est = estimate_ate(&ds, args.alpha)?;
    let row = AteRow {
        d_hat: est.d_hat,
        v_hat2: est.v_hat2,
        alpha: est.alpha,
        ci_lower: est.ci_lower,
        ci_upper: est.ci_upper,
        ci_length: est.ci_length(),
        n_treatment: n_t,
        n_control: n_c,
        m,
    };
    let text = match args.output.format {
        Format::Text => format!(
            "ate  (n_t = {n_t}, n_c = {n_c}, m = {m})\n  estimate        {}\n  variance        {}\n  {:.0}% interval    [{}, {}]\n  interval length {}\n",
            sig6(row.d_hat),
            sig6(row.v_hat2),
            100.0 * (1.0 - row.alpha),
            sig6(row.ci_lower),
            sig6(row.ci_upper),
            sig6(row.ci_length)
        ),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.serialize(&row).map_err(|e| CliError::Usage(e.to_string()))?;
            String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8")
        }
        Format::Json => serde_json::to_string_pretty(&row).expect("row serializes") + "\n",
    };
    emit(&args.output, text)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Estimate(a) => run_estimate(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Study(a) => run_study(a),
        Command::Ate(a) => run_ate(a),
    }
}
