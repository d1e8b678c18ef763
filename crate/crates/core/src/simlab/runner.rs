//! Seeded Monte Carlo runner.
//!
//! Every replication draws from its own RNG stream and the per-replication
//! outcomes are reduced in replication order, so a report does not depend
//! on how (or whether) the replications were spread over threads.

use serde::Serialize;

use super::dgp::{Dgp, DgpSpec, Setting};
use super::report::{EstimatorSummary, SimulationReport};
use crate::basis::{augment, augment_with_means, BasisSpec};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_ls, estimate_oracle, estimate_oracle_ss, estimate_sample_mean, estimate_ssls, Dataset,
    LabeledFit, MeanEstimate, UnlabeledSize,
};
use crate::normal::check_alpha;

/// How replications are scheduled. Without the `parallel` feature both run sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// One row of a report: an estimator at one unlabeled sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Estimator {
    SampleMean,
    Ssls(usize),
    Ls,
    Oracle,
    OracleSs(usize),
    LsAugmented,
    SslsAugmented(usize),
}

impl Estimator {
    pub fn label(self) -> &'static str {
        match self {
            Estimator::SampleMean => "mean",
            Estimator::Ssls(_) => "ssls",
            Estimator::Ls => "ls",
            Estimator::Oracle => "oracle",
            Estimator::OracleSs(_) => "oracle_ss",
            Estimator::LsAugmented => "ls_aug",
            Estimator::SslsAugmented(_) => "ssls_aug",
        }
    }

    pub fn unlabeled(self) -> UnlabeledSize {
        match self {
            Estimator::SampleMean => UnlabeledSize::Finite(0),
            Estimator::Ssls(m) | Estimator::OracleSs(m) | Estimator::SslsAugmented(m) => {
                UnlabeledSize::Finite(m)
            }
            Estimator::Ls | Estimator::Oracle | Estimator::LsAugmented => UnlabeledSize::Infinite,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub dgp: DgpSpec,
    /// Unlabeled sample sizes for the semi-supervised rows; `Infinite` maps onto LS.
    pub unlabeled: Vec<UnlabeledSize>,
    pub reps: usize,
    pub alpha: f64,
    /// Clamp LS/SSLS estimates into the response band.
    pub truncate: bool,
    pub oracle: bool,
    pub basis: Option<BasisSpec>,
}

impl SimulationConfig {
    pub fn new(dgp: DgpSpec, unlabeled: Vec<UnlabeledSize>, reps: usize) -> Self {
        Self {
            dgp,
            unlabeled,
            reps,
            alpha: 0.05,
            truncate: true,
            oracle: false,
            basis: None,
        }
    }

    fn finite_m(&self) -> Vec<usize> {
        let mut ms = Vec::new();
        for u in &self.unlabeled {
            if let UnlabeledSize::Finite(m) = *u {
                if !ms.contains(&m) {
                    ms.push(m);
                }
            }
        }
        ms
    }

    /// Report rows in output order.
    pub fn estimators(&self) -> Vec<Estimator> {
        let ms = self.finite_m();
        let mut rows = vec![Estimator::SampleMean];
        rows.extend(ms.iter().map(|&m| Estimator::Ssls(m)));
        rows.push(Estimator::Ls);
        if self.oracle {
            rows.push(Estimator::Oracle);
            rows.extend(ms.iter().map(|&m| Estimator::OracleSs(m)));
        }
        if let Some(basis) = &self.basis {
            if !matches!(basis, BasisSpec::None) {
                rows.push(Estimator::LsAugmented);
                rows.extend(ms.iter().map(|&m| Estimator::SslsAugmented(m)));
            }
        }
        rows
    }

    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        check_alpha(self.alpha)?;
        if self.reps == 0 {
            return Err(Error::InvalidArgs("reps must be positive".into()));
        }
        Ok(())
    }
}

/// Loss, interval length and coverage of one estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub sq_loss: f64,
    pub ci_length: f64,
    pub covered: bool,
}

impl Outcome {
    fn of(est: &MeanEstimate, theta: f64) -> Self {
        let err = est.theta_hat - theta;
        Self {
            sq_loss: err * err,
            ci_length: est.ci_length(),
            covered: est.covers(theta),
        }
    }
}

fn with_unlabeled_prefix(ds: &Dataset, m: usize) -> Dataset {
    Dataset::new(
        ds.y().to_vec(),
        ds.x().clone(),
        ds.x_unlabeled().head_rows(m),
        ds.known_mu().map(<[f64]>::to_vec),
    )
    .expect("prefix of a valid dataset")
}

/// Pooled covariate means over the labeled rows and the first `m` unlabeled
/// rows, for each requested `m`.
fn nested_pooled_means(ds: &Dataset, ms: &[usize]) -> Vec<Vec<f64>> {
    let lab = ds.x().column_sums();
    let n = ds.n();
    let mut order: Vec<usize> = (0..ms.len()).collect();
    order.sort_by_key(|&i| ms[i]);
    let mut out = vec![Vec::new(); ms.len()];
    let mut acc = vec![0.0; ds.p()];
    let mut used = 0;
    let xu = ds.x_unlabeled();
    for i in order {
        while used < ms[i] {
            for (a, v) in acc.iter_mut().zip(xu.row(used)) {
                *a += v;
            }
            used += 1;
        }
        let total = (n + ms[i]) as f64;
        out[i] = lab.iter().zip(&acc).map(|(l, a)| (l + a) / total).collect();
    }
    out
}

struct Replicator<'a> {
    config: &'a SimulationConfig,
    dgp: Dgp,
    rows: Vec<Estimator>,
    ms: Vec<usize>,
    basis_means: Option<Vec<f64>>,
}

impl<'a> Replicator<'a> {
    fn new(config: &'a SimulationConfig) -> Result<Self> {
        config.validate()?;
        let ms = config.finite_m();
        let mut spec = config.dgp.clone();
        spec.m = ms.iter().copied().max().unwrap_or(0);
        let dgp = Dgp::new(spec)?;
        let basis_means = config.basis.as_ref().and_then(|b| dgp.basis_means(b));
        Ok(Self {
            config,
            dgp,
            rows: config.estimators(),
            ms,
            basis_means,
        })
    }

    fn replicate(&self, rep: u64) -> Vec<Option<Outcome>> {
        let cfg = self.config;
        let (alpha, truncate) = (cfg.alpha, cfg.truncate);
        let theta = self.dgp.theta();
        let ds = self.dgp.draw(rep);
        let fit = LabeledFit::new(&ds).ok();
        let pooled = nested_pooled_means(&ds, &self.ms);
        let surface = |x: &[f64]| self.dgp.regression_surface(x);

        self.rows
            .iter()
            .map(|&row| {
                let est = match row {
                    Estimator::SampleMean => estimate_sample_mean(&ds, alpha).ok(),
                    Estimator::Ls => fit.as_ref()?.least_squares(alpha, truncate).ok(),
                    Estimator::Ssls(m) => {
                        let idx = self.ms.iter().position(|&k| k == m)?;
                        fit.as_ref()?
                            .semi_supervised_at(&pooled[idx], m, alpha, truncate)
                            .ok()
                    }
                    Estimator::Oracle => estimate_oracle(&ds, surface, theta, alpha).ok(),
                    Estimator::OracleSs(m) => {
                        estimate_oracle_ss(&with_unlabeled_prefix(&ds, m), surface, alpha).ok()
                    }
                    Estimator::LsAugmented => {
                        let basis = cfg.basis.as_ref()?;
                        let means = self.basis_means.as_ref()?;
                        let aug = augment_with_means(&ds, basis, means).ok()?;
                        estimate_ls(&aug, alpha, truncate).ok()
                    }
                    Estimator::SslsAugmented(m) => {
                        let basis = cfg.basis.as_ref()?;
                        let aug = augment(&with_unlabeled_prefix(&ds, m), basis).ok()?;
                        estimate_ssls(&aug, alpha, truncate).ok()
                    }
                };
                est.map(|e| Outcome::of(&e, theta))
            })
            .collect()
    }
}

fn collect_outcomes<F>(reps: usize, execution: Execution, f: F) -> Vec<Vec<Option<Outcome>>>
where
    F: Fn(u64) -> Vec<Option<Outcome>> + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..reps as u64).into_par_iter().map(f).collect()
        }
        _ => (0..reps as u64).map(f).collect(),
    }
}

/// Outcomes indexed `[rep][row]`; `None` marks a failed fit.
pub type OutcomeGrid = Vec<Vec<Option<Outcome>>>;

/// Per-replication outcomes for custom reductions.
pub fn run_outcomes(
    config: &SimulationConfig,
    execution: Execution,
) -> Result<(Vec<Estimator>, OutcomeGrid)> {
    let rep = Replicator::new(config)?;
    let outcomes = collect_outcomes(config.reps, execution, |r| rep.replicate(r));
    Ok((rep.rows.clone(), outcomes))
}

/// Runs all replications of one configuration and summarizes each estimator.
pub fn run_simulation(config: &SimulationConfig, execution: Execution) -> Result<SimulationReport> {
    let rep = Replicator::new(config)?;
    let outcomes = collect_outcomes(config.reps, execution, |r| rep.replicate(r));
    let rows = rep
        .rows
        .iter()
        .enumerate()
        .map(|(j, &est)| EstimatorSummary::reduce(est, outcomes.iter().map(|o| o[j])))
        .collect();
    Ok(SimulationReport {
        setting: config.dgp.setting,
        n: config.dgp.n,
        p: config.dgp.p,
        reps: config.reps,
        alpha: config.alpha,
        seed: config.dgp.seed,
        theta: rep.dgp.theta(),
        rows,
    })
}

/// One `(setting, p, n)` cell of a study grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridCell {
    pub setting: Setting,
    pub p: usize,
    pub n: usize,
}

impl GridCell {
    pub fn new(setting: Setting, p: usize, n: usize) -> Self {
        Self { setting, p, n }
    }
}

/// Shared settings of a grid study.
#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub unlabeled: Vec<UnlabeledSize>,
    pub reps: usize,
    pub seed: u64,
    pub alpha: f64,
    pub truncate: bool,
}

impl StudyOptions {
    pub fn new(reps: usize, seed: u64) -> Self {
        Self {
            unlabeled: vec![
                UnlabeledSize::Finite(100),
                UnlabeledSize::Finite(1000),
                UnlabeledSize::Finite(10_000),
            ],
            reps,
            seed,
            alpha: 0.05,
            truncate: true,
        }
    }

    fn config_for(&self, cell: GridCell) -> SimulationConfig {
        let seed = DgpSpec::cell_seed(self.seed, cell.setting, cell.p, cell.n);
        let mut cfg = SimulationConfig::new(
            DgpSpec::new(cell.setting, cell.n, cell.p, 0, seed),
            self.unlabeled.clone(),
            self.reps,
        );
        cfg.alpha = self.alpha;
        cfg.truncate = self.truncate;
        cfg
    }
}

/// Average squared losses of `Ȳ`, SSLS at each `m`, and LS over a grid.
pub fn run_table1(
    cells: &[GridCell],
    options: &StudyOptions,
    execution: Execution,
) -> Result<Vec<SimulationReport>> {
    if options.reps < 2 {
        return Err(Error::InvalidArgs(
            "a study needs at least two replications".into(),
        ));
    }
    cells
        .iter()
        .map(|&cell| run_simulation(&options.config_for(cell), execution))
        .collect()
}

/// Mean interval length and miscoverage of the same estimators at level `1 − α`.
pub fn run_table2(
    cells: &[GridCell],
    options: &StudyOptions,
    execution: Execution,
) -> Result<Vec<SimulationReport>> {
    check_alpha(options.alpha)?;
    run_table1(cells, options, execution)
}
