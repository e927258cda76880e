//! Scored sponsored-search auction simulation.
//!
//! A single-keyword slot auction ranks advertisers by bid times quality
//! score and charges each the minimum per-click price that keeps its slot.
//! This crate implements the mechanics (allocation, pricing, surplus
//! accounting), pluggable click-through models, equilibrium checking and
//! best-response bidding dynamics, optimal-ranking oracles, and an adaptive
//! controller that steers quality scores toward the revenue-maximizing
//! ranking using observed revenue alone.
//!
//! All numerics are generic over [`scalar::Real`] (`f32` or `f64`); the
//! crate root exports `f64` aliases for the common case.

pub mod auction;
pub mod ctr;
pub mod equilibrium;
pub mod error;
pub mod optimal;
pub mod perm;
pub mod scalar;
pub mod scorer;

pub use auction::{
    price_per_click, rank_allocation, revenue_of, settle, surplus_report, TieRule,
};
pub use error::AuctionError;
pub use perm::{deviation_permutation, Permutation};
pub use scalar::Real;

/// `f64` instantiations of the core types.
pub type Instance = auction::AuctionInstance<f64>;
pub type Scores = auction::ScoringProfile<f64>;
pub type Bids = auction::BidProfile<f64>;
pub type Allocation = auction::AllocationResult<f64>;
pub type Surplus = auction::SurplusReport<f64>;
pub type Ctr = ctr::CtrModel<f64>;
pub type Behavior = equilibrium::BidderBehavior<f64>;
pub type Outcome = equilibrium::EquilibriumOutcome<f64>;
pub type ScorerParams = scorer::ScorerConfig<f64>;
pub type Report = scorer::ScorerReport<f64>;
