//! Joint planning of EV charging capacity investment and vehicle reassignment.
//!
//! The planning problem chooses installed capacity per location and, per time
//! slot, how many charging vehicles to redirect to nearby locations, trading
//! one-time capacity cost against recurring redirection cost. It is solved
//! either centrally as one sparse LP ([`central`]) or with a distributed
//! multiplier scheme ([`admm`]).

pub mod model;
pub mod scalar;

pub use scalar::Scalar;

pub type Instance = model::PlanningInstance<f64>;
pub type Investment = model::InvestmentPlan<f64>;
pub type Assignment = model::AssignmentPlan<f64>;
pub type Costs = model::CostBreakdown<f64>;
pub type Feasibility = model::FeasibilityReport<f64>;

pub mod central;
pub mod solution;

pub type Solution = solution::Solution<f64>;
pub mod datagen;
pub mod admm;

pub type AdmmState = admm::AdmmState<f64>;
pub mod ingest;
pub mod report;
pub mod sweep;
