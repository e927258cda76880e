//! Adaptive online quality scoring for revenue extraction.
//!
//! The controller never reads advertiser values or click-through parameters
//! directly. It watches settled bidding rounds, and alternates two moves:
//!
//! * value revealing — advertisers with known values are pinned to an
//!   ε-separated ladder of score-times-value positions whose common level
//!   rises by δ each round, squeezing the remaining advertisers until one
//!   loses its slot and bids its value outright;
//! * rank searching — each newly pinned advertiser is bubbled down the
//!   ladder by adjacent position swaps, keeping a swap only when observed
//!   revenue strictly rises.
//!
//! The run ends when every value is known and no adjacent swap improves
//! revenue.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::auction::{AuctionInstance, BidProfile, ScoringProfile, TieRule};
use crate::equilibrium::{simulate_ne, BidderBehavior, SimulationError};
use crate::error::AuctionError;
use crate::perm::Permutation;
use crate::scalar::{real, Real};

/// Tuning knobs for one controller run.
#[derive(Debug, Clone)]
pub struct ScorerConfig<T> {
    /// Uniform starting quality score.
    pub initial_score: T,
    /// Ladder gap as a fraction of the current level.
    pub epsilon_ratio: T,
    /// Per-round level increase as a fraction of the current level.
    pub delta_ratio: T,
    /// Abort threshold on the adjustment counter.
    pub max_adjustments: usize,
    /// Bidder model override; derived from the instance when absent.
    pub behavior: Option<BidderBehavior<T>>,
}

impl<T: Real> Default for ScorerConfig<T> {
    fn default() -> Self {
        Self {
            initial_score: real(100.0),
            epsilon_ratio: real(1e-3),
            delta_ratio: real(1e-2),
            max_adjustments: 20_000,
            behavior: None,
        }
    }
}

/// Bidder model used when the configuration does not supply one.
///
/// The indifference slack is set just above the surplus an advertiser could
/// scrape together by sliding down inside the ε-ladder, so pinned
/// advertisers hold their assigned slots while any real opportunity still
/// triggers a move.
pub fn default_scorer_behavior<T: Real>(
    instance: &AuctionInstance<T>,
    epsilon_ratio: T,
) -> BidderBehavior<T> {
    let n = instance.n_advertisers();
    let vmax = instance.values().iter().cloned().fold(T::zero(), T::max);
    let per_click = real::<T>(2.0) * real::<T>(n as f64) * epsilon_ratio * vmax;
    BidderBehavior::for_instance(instance).with_indifference(per_click)
}

/// One trace record per score adjustment, taken right after the following
/// settled round.
#[derive(Debug, Clone)]
pub struct TraceRow<T> {
    pub adjustments: usize,
    pub score_times_bid: Vec<T>,
    pub rank_of: Vec<usize>,
    pub revenue: T,
    pub unrevealed: usize,
}

/// Final state of a finished (or aborted) run.
#[derive(Debug, Clone)]
pub struct ScorerReport<T> {
    pub final_sigma: Permutation,
    pub final_scores: ScoringProfile<T>,
    pub final_bids: BidProfile<T>,
    pub final_prices: Vec<T>,
    pub revenue: T,
    pub adjustments: usize,
    /// Values read off forced truthful bids; NaN where a value was never
    /// revealed (aborted runs only).
    pub revealed_values: Vec<T>,
    pub terminated: bool,
    pub trace: Vec<TraceRow<T>>,
}

#[derive(Debug, Error)]
pub enum ScorerError<T: Real> {
    #[error(transparent)]
    Auction(#[from] AuctionError),
    #[error("bidding failed to settle after adjustment {adjustments}: {source}")]
    Equilibrium { adjustments: usize, source: SimulationError<T> },
    #[error("adjustment cap reached")]
    CapExceeded,
    #[error("adjustment cap reached before every value was revealed")]
    NotTerminated(Box<ScorerReport<T>>),
}

/// Controller state between adjustments.
#[derive(Debug, Clone)]
pub struct ScorerState<T> {
    scores: ScoringProfile<T>,
    bids: BidProfile<T>,
    sigma: Permutation,
    prices: Vec<T>,
    revenue: T,
    unrevealed: BTreeSet<usize>,
    /// Revealed advertisers, ladder order, highest position first.
    ladder: Vec<usize>,
    revealed_values: Vec<Option<T>>,
    ladder_level: T,
    epsilon_ratio: T,
    delta_ratio: T,
    adjustments: usize,
    max_adjustments: usize,
    trace: Vec<TraceRow<T>>,
}

/// Fresh state: every advertiser unrevealed, scores as given, counter at zero.
pub fn init<T: Real>(
    instance: &AuctionInstance<T>,
    initial_scores: ScoringProfile<T>,
    epsilon_ratio: T,
    delta_ratio: T,
    max_adjustments: usize,
) -> Result<ScorerState<T>, AuctionError> {
    let n = instance.n_advertisers();
    if n <= instance.n_slots() {
        return Err(AuctionError::NeedsExcessAdvertisers {
            advertisers: n,
            slots: instance.n_slots(),
        });
    }
    if initial_scores.len() != n {
        return Err(AuctionError::DimensionMismatch { expected: n, got: initial_scores.len() });
    }
    if !epsilon_ratio.is_finite() || epsilon_ratio <= T::zero() || delta_ratio < T::zero() {
        return Err(AuctionError::InvalidParameter(
            "epsilon ratio must be positive and delta ratio non-negative".into(),
        ));
    }
    if epsilon_ratio * real::<T>(n as f64) >= T::one() {
        return Err(AuctionError::InvalidParameter(
            "epsilon ratio too large for the advertiser count".into(),
        ));
    }
    if max_adjustments == 0 {
        return Err(AuctionError::InvalidParameter("adjustment cap must be positive".into()));
    }
    Ok(ScorerState {
        scores: initial_scores,
        bids: BidProfile::zeros(n),
        sigma: Permutation::identity(n),
        prices: vec![T::zero(); n],
        revenue: T::zero(),
        unrevealed: (0..n).collect(),
        ladder: Vec::new(),
        revealed_values: vec![None; n],
        ladder_level: T::zero(),
        epsilon_ratio,
        delta_ratio,
        adjustments: 0,
        max_adjustments,
        trace: Vec::new(),
    })
}

impl<T: Real> ScorerState<T> {
    pub fn adjustments(&self) -> usize {
        self.adjustments
    }

    pub fn unrevealed(&self) -> &BTreeSet<usize> {
        &self.unrevealed
    }

    pub fn ladder(&self) -> &[usize] {
        &self.ladder
    }

    pub fn ladder_level(&self) -> T {
        self.ladder_level
    }

    pub fn scores(&self) -> &ScoringProfile<T> {
        &self.scores
    }

    pub fn bids(&self) -> &BidProfile<T> {
        &self.bids
    }

    pub fn sigma(&self) -> &Permutation {
        &self.sigma
    }

    pub fn revenue(&self) -> T {
        self.revenue
    }

    pub fn trace(&self) -> &[TraceRow<T>] {
        &self.trace
    }

    pub fn set_initial_bids(&mut self, bids: BidProfile<T>) -> Result<(), AuctionError> {
        if bids.len() != self.bids.len() {
            return Err(AuctionError::DimensionMismatch {
                expected: self.bids.len(),
                got: bids.len(),
            });
        }
        self.bids = bids;
        Ok(())
    }

    fn epsilon(&self) -> T {
        self.ladder_level * self.epsilon_ratio
    }

    fn charge(&mut self) -> Result<(), ScorerError<T>> {
        if self.adjustments >= self.max_adjustments {
            return Err(ScorerError::CapExceeded);
        }
        self.adjustments += 1;
        Ok(())
    }

    /// Re-derive every pinned advertiser's score from its ladder position.
    fn apply_ladder(&mut self) {
        let eps = self.epsilon();
        for (k, &i) in self.ladder.iter().enumerate() {
            let position = self.ladder_level - real::<T>(k as f64) * eps;
            let vhat = self.revealed_values[i].expect("ladder members have revealed values");
            self.scores.set(i, position / vhat);
        }
    }

    fn settle_once(
        &mut self,
        instance: &AuctionInstance<T>,
        behavior: &BidderBehavior<T>,
    ) -> Result<(), ScorerError<T>> {
        let outcome =
            simulate_ne(&self.scores, instance, behavior, &self.bids, &TieRule::AdvertiserIndex)
                .map_err(|source| ScorerError::Equilibrium {
                    adjustments: self.adjustments,
                    source,
                })?;
        self.revenue = outcome.revenue();
        self.bids = outcome.bids;
        self.prices = outcome.allocation.prices;
        self.sigma = outcome.allocation.permutation;
        self.record_trace(instance);
        Ok(())
    }

    fn record_trace(&mut self, instance: &AuctionInstance<T>) {
        if self.trace.last().is_some_and(|row| row.adjustments >= self.adjustments) {
            return;
        }
        let n = instance.n_advertisers();
        let score_times_bid = (0..n).map(|i| self.scores.get(i) * self.bids.get(i)).collect();
        self.trace.push(TraceRow {
            adjustments: self.adjustments,
            score_times_bid,
            rank_of: self.sigma.rank_vector().to_vec(),
            revenue: self.revenue,
            unrevealed: self.unrevealed.len(),
        });
    }

    /// One controller round: raise the ladder, settle bidding, absorb any
    /// forced value reveals.
    pub fn step(
        &mut self,
        instance: &AuctionInstance<T>,
        behavior: &BidderBehavior<T>,
    ) -> Result<(), ScorerError<T>> {
        if !self.ladder.is_empty() && self.delta_ratio > T::zero() {
            self.charge()?;
            self.ladder_level = self.ladder_level * (T::one() + self.delta_ratio);
            self.apply_ladder();
        }
        self.settle_once(instance, behavior)?;
        self.reveal_check(instance, behavior)
    }

    /// Move every unslotted unrevealed advertiser into the ladder, reading
    /// its value off its forced truthful bid, and bubble each newcomer to
    /// its revenue-best position.
    pub fn reveal_check(
        &mut self,
        instance: &AuctionInstance<T>,
        behavior: &BidderBehavior<T>,
    ) -> Result<(), ScorerError<T>> {
        loop {
            let mut pending: Vec<usize> = self
                .unrevealed
                .iter()
                .copied()
                .filter(|&i| self.sigma.rank_of(i) > instance.n_slots())
                .collect();
            if pending.is_empty() {
                return Ok(());
            }
            pending.sort_by(|&a, &b| {
                self.bids
                    .get(a)
                    .partial_cmp(&self.bids.get(b))
                    .expect("bids are finite")
                    .then(a.cmp(&b))
            });
            let newcomer = pending[0];
            let vhat = self.bids.get(newcomer);
            if vhat <= T::zero() {
                return Err(AuctionError::InvalidParameter(format!(
                    "advertiser {newcomer} revealed a non-positive value"
                ))
                .into());
            }
            self.unrevealed.remove(&newcomer);
            self.revealed_values[newcomer] = Some(vhat);
            if self.ladder.is_empty() {
                // First reveal anchors the ladder at the advertiser's
                // current score level; nothing changes numerically.
                self.ladder_level = self.scores.get(newcomer) * vhat;
                self.ladder.push(newcomer);
                self.apply_ladder();
            } else {
                self.charge()?;
                self.ladder.insert(0, newcomer);
                self.apply_ladder();
                self.settle_once(instance, behavior)?;
            }
            self.rank_search(newcomer, instance, behavior)?;
        }
    }

    /// Bubble `newcomer` down the ladder: swap it with the advertiser pinned
    /// right below, settle, and keep the swap only when revenue strictly
    /// rises; stop at the first non-improving comparison.
    pub fn rank_search(
        &mut self,
        newcomer: usize,
        instance: &AuctionInstance<T>,
        behavior: &BidderBehavior<T>,
    ) -> Result<(), ScorerError<T>> {
        let mut k = self
            .ladder
            .iter()
            .position(|&i| i == newcomer)
            .ok_or_else(|| AuctionError::InvalidParameter("newcomer not on the ladder".into()))?;
        while k + 1 < self.ladder.len() {
            if self.try_swap(k, instance, behavior)? {
                k += 1;
            } else {
                break;
            }
        }
        Ok(())
    }

    /// Swap ladder slots `k` and `k+1`, settle, and keep the swap iff
    /// revenue strictly improved; otherwise swap back and settle again.
    fn try_swap(
        &mut self,
        k: usize,
        instance: &AuctionInstance<T>,
        behavior: &BidderBehavior<T>,
    ) -> Result<bool, ScorerError<T>> {
        let before = self.revenue;
        self.charge()?;
        self.ladder.swap(k, k + 1);
        self.apply_ladder();
        self.settle_once(instance, behavior)?;
        let floor = real::<T>(1e-9) * before.abs().max(T::one());
        if self.revenue > before + floor {
            Ok(true)
        } else {
            self.charge()?;
            self.ladder.swap(k, k + 1);
            self.apply_ladder();
            self.settle_once(instance, behavior)?;
            Ok(false)
        }
    }

    /// Full adjacent-pair sweeps over the ladder until one sweep accepts no
    /// swap.
    fn sweep_until_quiet(
        &mut self,
        instance: &AuctionInstance<T>,
        behavior: &BidderBehavior<T>,
    ) -> Result<(), ScorerError<T>> {
        loop {
            let mut accepted = false;
            for k in 0..self.ladder.len().saturating_sub(1) {
                if self.try_swap(k, instance, behavior)? {
                    accepted = true;
                }
            }
            if !accepted {
                return Ok(());
            }
        }
    }

    fn into_report(self, terminated: bool) -> ScorerReport<T> {
        ScorerReport {
            final_sigma: self.sigma,
            final_scores: self.scores,
            final_bids: self.bids,
            final_prices: self.prices,
            revenue: self.revenue,
            adjustments: self.adjustments,
            revealed_values: self
                .revealed_values
                .into_iter()
                .map(|v| v.unwrap_or_else(T::nan))
                .collect(),
            terminated,
            trace: self.trace,
        }
    }
}

fn drive<T: Real>(
    state: &mut ScorerState<T>,
    instance: &AuctionInstance<T>,
    behavior: &BidderBehavior<T>,
) -> Result<(), ScorerError<T>> {
    state.settle_once(instance, behavior)?;
    state.reveal_check(instance, behavior)?;
    while !state.unrevealed.is_empty() {
        state.step(instance, behavior)?;
    }
    state.sweep_until_quiet(instance, behavior)
}

fn run_from<T: Real>(
    instance: &AuctionInstance<T>,
    config: &ScorerConfig<T>,
    initial_scores: ScoringProfile<T>,
    initial_bids: Option<BidProfile<T>>,
) -> Result<ScorerReport<T>, ScorerError<T>> {
    let behavior = config
        .behavior
        .clone()
        .unwrap_or_else(|| default_scorer_behavior(instance, config.epsilon_ratio));
    let mut state = init(
        instance,
        initial_scores,
        config.epsilon_ratio,
        config.delta_ratio,
        config.max_adjustments,
    )?;
    if let Some(bids) = initial_bids {
        state.set_initial_bids(bids)?;
    }
    match drive(&mut state, instance, &behavior) {
        Ok(()) => Ok(state.into_report(true)),
        Err(ScorerError::CapExceeded) => {
            Err(ScorerError::NotTerminated(Box::new(state.into_report(false))))
        }
        Err(e) => Err(e),
    }
}

/// Cold run from a uniform score profile and the given (or zero) bids.
pub fn run<T: Real>(
    instance: &AuctionInstance<T>,
    config: &ScorerConfig<T>,
    initial_bids: Option<BidProfile<T>>,
) -> Result<ScorerReport<T>, ScorerError<T>> {
    let scores = ScoringProfile::uniform(config.initial_score, instance.n_advertisers())?;
    run_from(instance, config, scores, initial_bids)
}

/// Restart on changed auction parameters from a previous run's score profile
/// and bids. Values are re-elicited from scratch; because scores already sit
/// near everyone's score-times-value level, the reveals arrive almost
/// immediately and the adjustment count stays far below a cold start.
pub fn warm_start<T: Real>(
    prev: &ScorerReport<T>,
    instance: &AuctionInstance<T>,
    config: &ScorerConfig<T>,
) -> Result<ScorerReport<T>, ScorerError<T>> {
    if prev.final_scores.len() != instance.n_advertisers() {
        return Err(AuctionError::DimensionMismatch {
            expected: instance.n_advertisers(),
            got: prev.final_scores.len(),
        }
        .into());
    }
    run_from(instance, config, prev.final_scores.clone(), Some(prev.final_bids.clone()))
}
