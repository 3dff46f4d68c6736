//! Closed-form guarantees and the checks built around them.

pub mod bounds;
pub mod example1;
pub mod hitting;
pub mod incentives;
pub mod threshold;

pub use bounds::{bounds, bounds_from, g, BoundRecord, BoundValues};
pub use example1::{example1_closed_forms, example1_exact, spl_tight_closed_form, Example1};
pub use hitting::{
    expected_tau, expected_tau_clamped, hitting_time_check, hitting_time_table, HittingCheck,
    HittingMethod, Subadditivity,
};
pub use incentives::{
    best_response_search, target_utility, ActionUniverse, BestResponse, GroupAction,
};
pub use threshold::{
    conjecture_probe, enumerate_b, enumerate_br, exact_success, in_br, poisson_tail_bound,
    poisson_tail_exact, succeeds_at_threshold, threshold_t, BrStrategy, ConjectureProbe, Threshold,
};
