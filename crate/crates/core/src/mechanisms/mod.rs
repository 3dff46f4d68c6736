//! Allocation rules and the random orders that drive them.

mod allocate;
mod coupling;
mod fair;
mod order;
mod profile;
mod run;

pub use allocate::{allocate_group_lottery, allocate_individual, tau, Allocation};
pub use coupling::{coupled_outcome, sample_coupled_triple, CoupledOutcome, CoupledTriple};
pub use fair::{build_fair_lottery, build_fair_lottery_for_sizes, FairLottery};
pub use order::{
    cmp_score, sample_uniform_order, sample_uniform_order_via_subset, sample_weighted_order,
    sample_with_replacement, weighted_order_probability, DrawOrder, OrderLaw,
};
pub use profile::{valid_groups, ActionKind, ActionProfile, MechanismKind};
pub use run::{run_mechanism, Mechanism, Scratch};
