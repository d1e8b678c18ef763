//! Summaries of a Monte Carlo run and their text, CSV and JSON forms.

use std::fmt::Write as _;
use std::io;

use serde::{Serialize, Serializer};

use super::dgp::Setting;
use super::runner::{Estimator, Outcome};
use crate::estimators::UnlabeledSize;

fn label<S: Serializer>(e: &Estimator, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(e.label())
}

/// Running mean and variance in insertion order.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    count: usize,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Standard error of the mean.
    fn std_error(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            (self.m2 / (self.count - 1) as f64 / self.count as f64).sqrt()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorSummary {
    #[serde(serialize_with = "label")]
    pub estimator: Estimator,
    pub m: UnlabeledSize,
    pub reps_ok: usize,
    pub failures: usize,
    pub avg_sq_loss: f64,
    pub loss_se: f64,
    pub avg_ci_length: f64,
    pub ci_length_se: f64,
    pub miscoverage: f64,
    pub misses: usize,
}

impl EstimatorSummary {
    /// Reduces outcomes in the order given; `None` counts as a failure.
    pub fn reduce<I>(estimator: Estimator, outcomes: I) -> Self
    where
        I: IntoIterator<Item = Option<Outcome>>,
    {
        let mut loss = Welford::default();
        let mut length = Welford::default();
        let (mut failures, mut misses) = (0, 0);
        for o in outcomes {
            match o {
                Some(o) => {
                    loss.push(o.sq_loss);
                    length.push(o.ci_length);
                    if !o.covered {
                        misses += 1;
                    }
                }
                None => failures += 1,
            }
        }
        let ok = loss.count;
        Self {
            estimator,
            m: estimator.unlabeled(),
            reps_ok: ok,
            failures,
            avg_sq_loss: loss.mean(),
            loss_se: loss.std_error(),
            avg_ci_length: length.mean(),
            ci_length_se: length.std_error(),
            miscoverage: if ok == 0 {
                f64::NAN
            } else {
                misses as f64 / ok as f64
            },
            misses,
        }
    }

    pub fn coverage(&self) -> f64 {
        1.0 - self.miscoverage
    }

    /// Binomial standard error of the miscoverage rate.
    pub fn miscoverage_se(&self) -> f64 {
        let r = self.miscoverage;
        (r * (1.0 - r) / self.reps_ok as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub setting: Setting,
    pub n: usize,
    pub p: usize,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub theta: f64,
    pub rows: Vec<EstimatorSummary>,
}

/// Output formats shared by the CLI commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(crate::error::Error::InvalidArgs(format!(
                "format must be text, csv or json, got {other:?}"
            ))),
        }
    }
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        return format!("{x:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

impl SimulationReport {
    pub fn row(&self, estimator: Estimator) -> Option<&EstimatorSummary> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "setting {}  n = {}  p = {}  reps = {}  alpha = {}  seed = {}  theta = {}",
            self.setting,
            self.n,
            self.p,
            self.reps,
            self.alpha,
            self.seed,
            sig6(self.theta)
        );
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>13} {:>12} {:>13} {:>10} {:>12} {:>6}",
            "estimator",
            "m",
            "avg sq loss",
            "mc se",
            "ci length",
            "coverage",
            "miscoverage",
            "fail"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<10} {:>7} {:>13} {:>12} {:>13} {:>10} {:>12} {:>6}",
                r.estimator.label(),
                r.m.to_string(),
                sig6(r.avg_sq_loss),
                sig6(r.loss_se),
                sig6(r.avg_ci_length),
                sig6(r.coverage()),
                sig6(r.miscoverage),
                r.failures
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "setting",
    "p",
    "n",
    "m",
    "estimator",
    "loss",
    "ci_length",
    "miscoverage",
    "mc_se",
];

/// Writes reports as one CSV row per estimator, at full precision.
pub fn write_csv<W: io::Write>(reports: &[SimulationReport], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for rep in reports {
        for r in &rep.rows {
            w.write_record([
                rep.setting.label().to_string(),
                rep.p.to_string(),
                rep.n.to_string(),
                r.m.to_string(),
                r.estimator.label().to_string(),
                r.avg_sq_loss.to_string(),
                r.avg_ci_length.to_string(),
                r.miscoverage.to_string(),
                r.loss_se.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(reports: &[SimulationReport]) -> String {
    let mut buf = Vec::new();
    write_csv(reports, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

fn column_header(r: &EstimatorSummary) -> String {
    match r.estimator {
        Estimator::SampleMean => "Ybar".into(),
        Estimator::Ls => "LS".into(),
        Estimator::Ssls(m) => format!("SSLS m={m}"),
        e => format!("{} m={}", e.label(), r.m),
    }
}

fn grid_table(
    reports: &[SimulationReport],
    title: &str,
    cell: impl Fn(&EstimatorSummary) -> String,
) -> String {
    let mut out = String::new();
    let Some(first) = reports.first() else {
        return out;
    };
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "{:<14} {:>4} {:>6}", "setting", "p", "n");
    for r in &first.rows {
        let _ = write!(out, " {:>22}", column_header(r));
    }
    out.push('\n');
    for rep in reports {
        let _ = write!(out, "{:<14} {:>4} {:>6}", rep.setting.label(), rep.p, rep.n);
        for r in &rep.rows {
            let _ = write!(out, " {:>22}", cell(r));
        }
        out.push('\n');
    }
    out
}

/// Average squared loss with its Monte Carlo standard error, one line per cell.
pub fn render_table1(reports: &[SimulationReport]) -> String {
    grid_table(reports, "average squared loss (mc se)", |r| {
        format!("{} ({})", sig6(r.avg_sq_loss), sig6(r.loss_se))
    })
}

/// Mean interval length and miscoverage (coverage), one line per cell.
pub fn render_table2(reports: &[SimulationReport]) -> String {
    let alpha = reports.first().map_or(0.05, |r| r.alpha);
    let title = format!(
        "interval length / miscoverage (coverage) at nominal level {}",
        sig6(1.0 - alpha)
    );
    grid_table(reports, &title, |r| {
        format!(
            "{} / {:.3} ({:.3})",
            sig6(r.avg_ci_length),
            r.miscoverage,
            r.coverage()
        )
    })
}
