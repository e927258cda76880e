//! Nash-equilibrium checking and round-robin best-response bidding.
//!
//! The bidder model rests on two behavioral rules: an advertiser never bids
//! above its per-click value, and an advertiser left without a slot bids its
//! value outright. Both are enforced by the simulator and re-checked on every
//! converged outcome.

use thiserror::Error;

use crate::auction::{
    rank_allocation, revenue_of, settle, AllocationResult, AuctionInstance, BidProfile,
    ScoringProfile, TieRule,
};
use crate::error::AuctionError;
use crate::perm::Permutation;
use crate::scalar::{real, Real};

/// Parameters of the simulated bidders.
#[derive(Debug, Clone)]
pub struct BidderBehavior<T> {
    /// Hard cap on full best-response passes before giving up.
    pub max_rounds: usize,
    /// A pass with no bid moving by more than this counts as converged.
    pub bid_tolerance: T,
    /// Per-click indifference: an advertiser only changes rank when the move
    /// gains more than `indifference_per_click * max clicks` in surplus.
    pub indifference_per_click: T,
}

impl<T: Real> BidderBehavior<T> {
    /// Defaults scaled to the instance's value range: 10·N² passes and a
    /// 1e-9-relative convergence tolerance, with no switching inertia.
    pub fn for_instance(instance: &AuctionInstance<T>) -> Self {
        let n = instance.n_advertisers();
        let vmax = instance.values().iter().cloned().fold(T::zero(), T::max);
        Self {
            max_rounds: 10 * n * n,
            bid_tolerance: real::<T>(1e-9) * vmax.max(T::one()),
            indifference_per_click: T::zero(),
        }
    }

    pub fn with_indifference(mut self, per_click: T) -> Self {
        self.indifference_per_click = per_click;
        self
    }
}

/// A strictly profitable unilateral move found by the checker.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfitableDeviation<T> {
    pub advertiser: usize,
    pub target_rank: usize,
    pub gain: T,
}

/// A settled bidding state.
#[derive(Debug, Clone)]
pub struct EquilibriumOutcome<T> {
    pub bids: BidProfile<T>,
    pub allocation: AllocationResult<T>,
    pub rounds_used: usize,
}

impl<T: Real> EquilibriumOutcome<T> {
    pub fn permutation(&self) -> &Permutation {
        &self.allocation.permutation
    }

    pub fn revenue(&self) -> T {
        revenue_of(&self.allocation)
    }
}

#[derive(Debug, Error)]
pub enum SimulationError<T: Real> {
    #[error("best-response bidding did not converge within {rounds} rounds")]
    NonConvergence { rounds: usize, last: Box<EquilibriumOutcome<T>> },
    #[error("bidder behavior violated: {0}")]
    BehaviorViolation(String),
    #[error(transparent)]
    Auction(#[from] AuctionError),
}

/// Price and clicks advertiser `i` would face at `target_rank`, holding
/// everyone else's bids fixed. Moving up means outbidding the slot's current
/// occupant, so the price is that occupant's ranking score over your own
/// quality; moving down means clearing whoever would sit right behind you.
/// Both cases reduce to the `target_rank`-th highest score among the others.
fn deviation_terms<T: Real>(
    advertiser: usize,
    target_rank: usize,
    sigma: &Permutation,
    others_desc: &[T],
    scores: &ScoringProfile<T>,
    instance: &AuctionInstance<T>,
) -> Result<(T, T), AuctionError> {
    let n = instance.n_advertisers();
    if target_rank > instance.n_slots() {
        return Ok((T::zero(), T::zero()));
    }
    let price = if target_rank < n {
        others_desc[target_rank - 1] / scores.get(advertiser)
    } else {
        instance.reserve_price()
    };
    let clicks = instance.click_rate(advertiser, &sigma.deviation(advertiser, target_rank)?)?;
    Ok((price, clicks))
}

fn others_descending<T: Real>(
    advertiser: usize,
    bids: &BidProfile<T>,
    scores: &ScoringProfile<T>,
) -> Vec<T> {
    let mut g: Vec<T> = (0..bids.len())
        .filter(|&j| j != advertiser)
        .map(|j| bids.get(j) * scores.get(j))
        .collect();
    g.sort_by(|a, b| b.partial_cmp(a).expect("scores are finite"));
    g
}

/// Check the no-profitable-deviation condition: for every advertiser and
/// every alternative rank, the current surplus must be at least the deviation
/// surplus minus `slack`. Returns every violating `(advertiser, rank, gain)`.
pub fn is_nash_equilibrium<T: Real>(
    bids: &BidProfile<T>,
    scores: &ScoringProfile<T>,
    instance: &AuctionInstance<T>,
    tie: &TieRule,
    slack: T,
) -> Result<(bool, Vec<ProfitableDeviation<T>>), AuctionError> {
    let outcome = settle(bids, scores, instance, tie)?;
    let sigma = &outcome.permutation;
    let n = instance.n_advertisers();
    let mut deviations = Vec::new();
    for i in 0..n {
        let current = (instance.value(i) - outcome.prices[i]) * outcome.clicks[i];
        let others = others_descending(i, bids, scores);
        for target in 1..=n {
            if target == sigma.rank_of(i) {
                continue;
            }
            let (price, clicks) = deviation_terms(i, target, sigma, &others, scores, instance)?;
            let gain = (instance.value(i) - price) * clicks - current;
            if gain > slack {
                deviations.push(ProfitableDeviation { advertiser: i, target_rank: target, gain });
            }
        }
    }
    Ok((deviations.is_empty(), deviations))
}

/// The bid that lands advertiser `i` at `target_rank`: the midpoint of the
/// open score interval between the advertiser that would sit behind it and
/// the lower of its value cap and the advertiser that would sit ahead of it.
/// `None` when no bid in `[0, value]` reaches that rank.
fn placement_bid<T: Real>(
    advertiser: usize,
    target_rank: usize,
    others_desc: &[T],
    scores: &ScoringProfile<T>,
    cap: T,
) -> Option<T> {
    let n = others_desc.len() + 1;
    let lower = if target_rank < n { others_desc[target_rank - 1] } else { T::zero() };
    let above = if target_rank >= 2 { others_desc[target_rank - 2] } else { T::infinity() };
    let upper = cap.min(above);
    if lower >= upper {
        return None;
    }
    let two = real::<T>(2.0);
    Some(((lower + upper) / two) / scores.get(advertiser))
}

/// Round-robin best response from `initial_bids`.
///
/// Each advertiser in index order evaluates every rank it can reach with a
/// bid at or below its value and moves only when the best rank beats its
/// current surplus by more than the indifference slack; an advertiser whose
/// current rank stays best keeps its bid unchanged. An advertiser stuck
/// without a slot bids its value. The dynamic stops when a full pass moves
/// no bid by more than `bid_tolerance`.
pub fn simulate_ne<T: Real>(
    scores: &ScoringProfile<T>,
    instance: &AuctionInstance<T>,
    behavior: &BidderBehavior<T>,
    initial_bids: &BidProfile<T>,
    tie: &TieRule,
) -> Result<EquilibriumOutcome<T>, SimulationError<T>> {
    let n = instance.n_advertisers();
    let n_slots = instance.n_slots();
    let slack = behavior.indifference_per_click * instance.max_click_rate();

    let mut bids = initial_bids.clone();
    // Rule one: never bid above value, from the very first round.
    for i in 0..n {
        if bids.get(i) > instance.value(i) {
            bids.set(i, instance.value(i));
        }
    }

    let mut rounds_used = behavior.max_rounds;
    let mut converged = false;
    for round in 1..=behavior.max_rounds {
        let mut max_change = T::zero();
        for i in 0..n {
            let sigma = rank_allocation(&bids, scores, instance, tie)?;
            let others = others_descending(i, &bids, scores);
            let value = instance.value(i);
            let cap = value * scores.get(i);
            let rank_now = sigma.rank_of(i);
            let (price_now, clicks_now) =
                deviation_terms(i, rank_now, &sigma, &others, scores, instance)?;
            let current = (value - price_now) * clicks_now;

            let mut best: Option<(T, usize, T)> = None;
            for target in 1..=n {
                let Some(bid) = placement_bid(i, target, &others, scores, cap) else {
                    continue;
                };
                let (price, clicks) =
                    deviation_terms(i, target, &sigma, &others, scores, instance)?;
                let surplus = (value - price) * clicks;
                if best.is_none_or(|(s, _, _)| surplus > s) {
                    best = Some((surplus, target, bid));
                }
            }

            let unslotted = rank_now > n_slots;
            let improving = best.filter(|&(s, target, _)| target != rank_now && s > current + slack);
            let new_bid = match improving {
                Some((_, _, bid)) => Some(bid),
                None if unslotted => Some(value),
                None => None,
            };
            if let Some(nb) = new_bid {
                let change = (nb - bids.get(i)).abs();
                if change > T::zero() {
                    max_change = max_change.max(change);
                    bids.set(i, nb);
                }
            }
        }
        if max_change <= behavior.bid_tolerance {
            rounds_used = round;
            converged = true;
            break;
        }
    }

    let allocation = settle(&bids, scores, instance, tie)?;
    let outcome = EquilibriumOutcome { bids, allocation, rounds_used };
    if !converged {
        return Err(SimulationError::NonConvergence {
            rounds: behavior.max_rounds,
            last: Box::new(outcome),
        });
    }
    enforce_behavior_rules(&outcome, instance, behavior)?;
    Ok(outcome)
}

/// Converged outcomes must respect both behavioral rules; a violation is a
/// bug in the dynamics, never a recoverable state.
fn enforce_behavior_rules<T: Real>(
    outcome: &EquilibriumOutcome<T>,
    instance: &AuctionInstance<T>,
    behavior: &BidderBehavior<T>,
) -> Result<(), SimulationError<T>> {
    let n = instance.n_advertisers();
    for i in 0..n {
        let bid = outcome.bids.get(i);
        let value = instance.value(i);
        if bid > value {
            return Err(SimulationError::BehaviorViolation(format!(
                "advertiser {i} bids {bid} above value {value}"
            )));
        }
        let rank = outcome.permutation().rank_of(i);
        if rank > instance.n_slots() && (bid - value).abs() > behavior.bid_tolerance {
            return Err(SimulationError::BehaviorViolation(format!(
                "unslotted advertiser {i} bids {bid} instead of its value {value}"
            )));
        }
    }
    Ok(())
}
