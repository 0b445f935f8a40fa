//! Experiment orchestration: config, seeding, the drop/realization loop and
//! the CSV / JSON artifacts.

mod config;
mod output;
mod run;
mod seed;

pub use config::{AgingSpec, ClarkeSpec, ExperimentConfig, RValue, DEFAULT_PI_SAMPLES};
pub use output::{
    cdf_path, format_sig10, read_rates, write_cdf, write_rates, write_summary, SchemeSummary, Summary, CDF_HEADER,
    RATES_HEADER,
};
pub use run::{run_experiment, scenario_dump, write_outputs, Drop, RunOutput, ScenarioDump, PERCENTILES};
pub use seed::{derive_stream, Purpose, SeedPath};
