//! Lottery mechanisms for allocating identical tickets to groups whose members
//! only benefit if the whole group is admitted.

pub mod analysis;
pub mod error;
pub mod evaluation;
pub mod instance;
pub mod mechanisms;
pub mod rng;
pub mod suites;

pub use analysis::{bounds, BoundRecord};
pub use error::{Error, Result};
pub use evaluation::{
    evaluate, monte_carlo, EvalConfig, McConfig, MethodChoice, OutcomeReport, UtilityVector,
};
pub use instance::{
    generate_named, generate_random, instance_stats, FamilyParams, Fraction, Instance,
    InstanceStats, KRule, NamedConstruction, SizeLaw,
};
pub use mechanisms::{ActionKind, ActionProfile, Allocation, MechanismKind};
