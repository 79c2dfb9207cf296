//! Survival probabilities: paths, the shape-function representation,
//! estimators and asymptotic predictions.

mod estimate;
mod haldane;
mod path;
mod population;

pub use estimate::{estimate_survival_gf, path_survival, GfOptions, PathSurvival};
pub use haldane::{haldane_prediction, haldane_sweep, SweepRow};
pub use path::{
    backward_extinction, backward_survival, lf_exact_extinction, representation_with,
    representation_x, sample_env_path, EnvPath, Representation,
};
pub use population::{
    run_population, simulate_population, PopulationOptions, PopulationRun, Terminal,
    DEFAULT_CAP_MULTIPLIER, INDIVIDUAL_GUARD,
};
