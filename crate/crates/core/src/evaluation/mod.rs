//! Exact and sampled success probabilities, and the metrics built on them.

mod exact;
mod metrics;
mod monte_carlo;
mod report;

pub use exact::{
    exact_enumerate, exact_gl_dp, exact_glr_dp, exact_individual_dp, exact_target_dp, gl_dp_states,
    Method, UtilityVector, ENUM_LIMIT,
};
pub use metrics::{class_means, envy_from_outcomes, fairness_ratio, utilization, EnvyMatrix};
pub use monte_carlo::{monte_carlo, ClassStat, Estimate, McConfig, McResult};
pub use report::{
    evaluate, exact_auto, fmt_float, guarantees, write_csv, BoundCheck, EvalConfig, MethodChoice,
    OutcomeReport, CSV_HEADER,
};
