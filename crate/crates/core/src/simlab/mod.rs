//! Monte Carlo harness: data-generating processes, seeded streams, the
//! replication runner and report formatting.

pub mod dgp;
pub mod heavy_tail;
pub mod report;
pub mod rng;
pub mod runner;

pub use dgp::{Dgp, DgpSpec, Setting};
pub use heavy_tail::HeavyTailP3;
pub use report::{render_table1, render_table2, EstimatorSummary, Format, SimulationReport};
pub use rng::{rng_stream, SimRng};
pub use runner::{
    run_outcomes, run_simulation, run_table1, run_table2, Estimator, Execution, GridCell, Outcome,
    OutcomeGrid, SimulationConfig, StudyOptions,
};
