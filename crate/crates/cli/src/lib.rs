//! Experiment driver for `grantfree-aoi`: figure presets, CSV/SVG output and
//! validation suites behind the `gfaoi` binary.

pub mod experiment;
pub mod plot;
pub mod spec;
pub mod validate;

pub use experiment::{compute, output_prefix, run_experiment, Evaluator, Results, Row, OUT_DIR_ENV};
pub use spec::{EvaluatorChoice, ExperimentSpec, Preset, Series, SeriesPolicy, Sweep, SweepVariable};
pub use validate::{validate, Check, SimSettings, Suite};
