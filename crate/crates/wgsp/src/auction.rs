//! Mechanical auction rules: score-weighted ranking, next-price payments,
//! the reserve price, and surplus accounting.

use crate::ctr::CtrModel;
use crate::error::AuctionError;
use crate::perm::Permutation;
use crate::scalar::{scores_tied, Real};

/// The search engine's per-advertiser quality scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoringProfile<T> {
    scores: Vec<T>,
}

impl<T: Real> ScoringProfile<T> {
    pub fn new(scores: Vec<T>) -> Result<Self, AuctionError> {
        if scores.is_empty() || scores.iter().any(|e| !e.is_finite() || *e <= T::zero()) {
            return Err(AuctionError::InvalidParameter(
                "quality scores must be positive and finite".into(),
            ));
        }
        Ok(Self { scores })
    }

    pub fn uniform(score: T, n: usize) -> Result<Self, AuctionError> {
        Self::new(vec![score; n])
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, advertiser: usize) -> T {
        self.scores[advertiser]
    }

    pub fn set(&mut self, advertiser: usize, score: T) {
        assert!(score > T::zero(), "quality scores must stay positive");
        self.scores[advertiser] = score;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.scores
    }
}

/// The advertisers' per-click bids.
#[derive(Debug, Clone, PartialEq)]
pub struct BidProfile<T> {
    bids: Vec<T>,
}

impl<T: Real> BidProfile<T> {
    pub fn new(bids: Vec<T>) -> Result<Self, AuctionError> {
        if bids.is_empty() || bids.iter().any(|b| *b < T::zero() || !b.is_finite()) {
            return Err(AuctionError::InvalidParameter(
                "bids must be non-negative and finite".into(),
            ));
        }
        Ok(Self { bids })
    }

    pub fn zeros(n: usize) -> Self {
        Self { bids: vec![T::zero(); n] }
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    pub fn get(&self, advertiser: usize) -> T {
        self.bids[advertiser]
    }

    pub fn set(&mut self, advertiser: usize, bid: T) {
        assert!(bid >= T::zero(), "bids must stay non-negative");
        self.bids[advertiser] = bid;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.bids
    }
}

/// How advertisers with (numerically) tied ranking scores are ordered.
#[derive(Debug, Clone)]
pub enum TieRule {
    /// Lower advertiser index wins the higher slot. The default.
    AdvertiserIndex,
    /// Ties follow the ranks of a fixed reference permutation.
    FixedOrder(Permutation),
}

impl TieRule {
    fn key(&self, advertiser: usize) -> usize {
        match self {
            TieRule::AdvertiserIndex => advertiser,
            TieRule::FixedOrder(p) => p.rank_of(advertiser),
        }
    }
}

/// A single-keyword slot auction: advertisers, slots, reserve price, and the
/// click-through model that turns rankings into clicks.
///
/// When advertisers outnumber slots, the missing slots are padded with
/// zero-click slots so every ranking stays a full bijection.
#[derive(Debug, Clone)]
pub struct AuctionInstance<T> {
    values: Vec<T>,
    n_slots: usize,
    reserve_price: T,
    ctr: CtrModel<T>,
}

impl<T: Real> AuctionInstance<T> {
    pub fn new(
        values: Vec<T>,
        n_slots: usize,
        reserve_price: T,
        ctr: CtrModel<T>,
    ) -> Result<Self, AuctionError> {
        if values.is_empty() {
            return Err(AuctionError::InvalidParameter("need at least one advertiser".into()));
        }
        if n_slots == 0 {
            return Err(AuctionError::InvalidParameter("need at least one slot".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
            return Err(AuctionError::InvalidParameter("values must be positive and finite".into()));
        }
        if reserve_price < T::zero() {
            return Err(AuctionError::InvalidParameter("reserve price must be non-negative".into()));
        }
        Ok(Self { values, n_slots, reserve_price, ctr })
    }

    pub fn n_advertisers(&self) -> usize {
        self.values.len()
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn reserve_price(&self) -> T {
        self.reserve_price
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, advertiser: usize) -> T {
        self.values[advertiser]
    }

    pub fn ctr(&self) -> &CtrModel<T> {
        &self.ctr
    }

    /// Clicks per hour for `advertiser` under `sigma`.
    pub fn click_rate(&self, advertiser: usize, sigma: &Permutation) -> Result<T, AuctionError> {
        self.ctr.rate(advertiser, sigma, self.n_slots)
    }

    pub fn max_click_rate(&self) -> T {
        self.ctr.max_rate()
    }

    fn check_dims(&self, bids: &BidProfile<T>, scores: &ScoringProfile<T>) -> Result<(), AuctionError> {
        let n = self.n_advertisers();
        if bids.len() != n {
            return Err(AuctionError::DimensionMismatch { expected: n, got: bids.len() });
        }
        if scores.len() != n {
            return Err(AuctionError::DimensionMismatch { expected: n, got: scores.len() });
        }
        Ok(())
    }
}

/// Everything the auctioneer publishes after one round: the ranking, the
/// per-click prices, and the realized click rates.
#[derive(Debug, Clone)]
pub struct AllocationResult<T> {
    pub permutation: Permutation,
    pub prices: Vec<T>,
    pub clicks: Vec<T>,
}

/// Order advertisers by bid times quality score, descending; near-equal
/// scores fall back to the tie rule.
pub fn rank_allocation<T: Real>(
    bids: &BidProfile<T>,
    scores: &ScoringProfile<T>,
    instance: &AuctionInstance<T>,
    tie: &TieRule,
) -> Result<Permutation, AuctionError> {
    instance.check_dims(bids, scores)?;
    let n = instance.n_advertisers();
    let ranking_scores: Vec<T> = (0..n).map(|i| bids.get(i) * scores.get(i)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        ranking_scores[b]
            .partial_cmp(&ranking_scores[a])
            .expect("ranking scores are finite")
    });
    // Re-order runs of tied scores by the tie policy.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && scores_tied(ranking_scores[order[end - 1]], ranking_scores[order[end]]) {
            end += 1;
        }
        order[start..end].sort_by_key(|&i| tie.key(i));
        start = end;
    }
    Permutation::from_rank_order(&order)
}

fn price_vector<T: Real>(
    sigma: &Permutation,
    bids: &BidProfile<T>,
    scores: &ScoringProfile<T>,
    instance: &AuctionInstance<T>,
) -> Vec<T> {
    let n = instance.n_advertisers();
    let s = instance.n_slots();
    let mut prices = vec![T::zero(); n];
    for rank in 1..=n.min(s) {
        let i = sigma.advertiser_at(rank);
        if rank < n {
            let below = sigma.advertiser_at(rank + 1);
            prices[i] = bids.get(below) * scores.get(below) / scores.get(i);
        } else {
            // last bidder with nobody behind it pays the reserve
            prices[i] = instance.reserve_price();
        }
    }
    prices
}

/// Per-click price for the occupant of `rank` under the default tie rule.
pub fn price_per_click<T: Real>(
    rank: usize,
    bids: &BidProfile<T>,
    scores: &ScoringProfile<T>,
    instance: &AuctionInstance<T>,
) -> Result<T, AuctionError> {
    let occupied = instance.n_advertisers().min(instance.n_slots());
    if rank < 1 || rank > occupied {
        return Err(AuctionError::RankOutOfRange { rank, max: occupied });
    }
    let sigma = rank_allocation(bids, scores, instance, &TieRule::AdvertiserIndex)?;
    let prices = price_vector(&sigma, bids, scores, instance);
    Ok(prices[sigma.advertiser_at(rank)])
}

/// Run one full auction round: rank, price, and evaluate clicks.
pub fn settle<T: Real>(
    bids: &BidProfile<T>,
    scores: &ScoringProfile<T>,
    instance: &AuctionInstance<T>,
    tie: &TieRule,
) -> Result<AllocationResult<T>, AuctionError> {
    let sigma = rank_allocation(bids, scores, instance, tie)?;
    let mut prices = price_vector(&sigma, bids, scores, instance);
    let n = instance.n_advertisers();
    let mut clicks = vec![T::zero(); n];
    for (i, rate) in clicks.iter_mut().enumerate() {
        *rate = instance.click_rate(i, &sigma)?;
    }
    // A last-slot bidder below the reserve is not served.
    for i in 0..n {
        if prices[i] > bids.get(i) {
            prices[i] = T::zero();
            clicks[i] = T::zero();
        }
    }
    Ok(AllocationResult { permutation: sigma, prices, clicks })
}

/// Surplus decomposition of one settled round.
#[derive(Debug, Clone)]
pub struct SurplusReport<T> {
    /// `(value - price) * clicks` per advertiser.
    pub per_advertiser: Vec<T>,
    /// Sum of advertiser surpluses.
    pub advertisers: T,
    /// Search-engine revenue, `sum(price * clicks)`.
    pub search_engine: T,
    /// `advertisers + search_engine`.
    pub social: T,
}

pub fn surplus_report<T: Real>(result: &AllocationResult<T>, values: &[T]) -> SurplusReport<T> {
    let per_advertiser: Vec<T> = values
        .iter()
        .zip(result.prices.iter().zip(result.clicks.iter()))
        .map(|(&v, (&p, &x))| (v - p) * x)
        .collect();
    let advertisers: T = per_advertiser.iter().cloned().sum();
    let search_engine: T = result
        .prices
        .iter()
        .zip(result.clicks.iter())
        .map(|(&p, &x)| p * x)
        .sum();
    SurplusReport {
        per_advertiser,
        advertisers,
        search_engine,
        social: advertisers + search_engine,
    }
}

/// Search-engine revenue of a settled round.
pub fn revenue_of<T: Real>(result: &AllocationResult<T>) -> T {
    result
        .prices
        .iter()
        .zip(result.clicks.iter())
        .map(|(&p, &x)| p * x)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctr::ProductFormCtr;
    use approx::assert_relative_eq;

    fn product_instance(
        values: Vec<f64>,
        q: Vec<f64>,
        s: Vec<f64>,
        n_slots: usize,
        reserve: f64,
    ) -> AuctionInstance<f64> {
        let n = values.len();
        let ctr = CtrModel::Product(ProductFormCtr::new(q, s, n, n_slots).unwrap());
        AuctionInstance::new(values, n_slots, reserve, ctr).unwrap()
    }

    #[test]
    fn ranks_by_bid_times_score() {
        // scores (3.5, 2.1, 2.0, 1.4) rank the four advertisers in order
        let inst = product_instance(
            vec![0.10, 0.10, 0.10, 0.07],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![3.0, 2.0, 1.0],
            3,
            0.0,
        );
        let e = ScoringProfile::new(vec![70.0, 30.0, 20.0, 20.0]).unwrap();
        let b = BidProfile::new(vec![0.05, 0.07, 0.10, 0.07]).unwrap();
        let sigma = rank_allocation(&b, &e, &inst, &TieRule::AdvertiserIndex).unwrap();
        assert_eq!(sigma.rank_vector(), &[1, 2, 3, 4]);

        let e2 = ScoringProfile::new(vec![40.0, 50.0, 20.0, 20.0]).unwrap();
        let b2 = BidProfile::new(vec![0.05, 0.08, 0.10, 0.07]).unwrap();
        let sigma2 = rank_allocation(&b2, &e2, &inst, &TieRule::AdvertiserIndex).unwrap();
        // scores (2.0, 3.2, 2.0, 1.4): advertiser 1 first, tie between 0 and 2
        // broken by index
        assert_eq!(sigma2.rank_vector(), &[2, 1, 3, 4]);
    }

    #[test]
    fn equal_scores_reduce_to_rank_by_bid() {
        let inst = product_instance(vec![5.0, 5.0, 5.0], vec![1.0; 3], vec![2.0, 1.0], 2, 0.0);
        let e = ScoringProfile::uniform(1.0, 3).unwrap();
        let b = BidProfile::new(vec![3.0, 2.0, 1.0]).unwrap();
        let sigma = rank_allocation(&b, &e, &inst, &TieRule::AdvertiserIndex).unwrap();
        assert_eq!(sigma.rank_vector(), &[1, 2, 3]);
    }

    #[test]
    fn next_price_rule() {
        let inst = product_instance(
            vec![0.10, 0.10, 0.10, 0.07],
            vec![1.0; 4],
            vec![3.0, 2.0, 1.0],
            3,
            0.0,
        );
        let e = ScoringProfile::new(vec![70.0, 30.0, 20.0, 20.0]).unwrap();
        let b = BidProfile::new(vec![0.05, 0.07, 0.10, 0.07]).unwrap();
        // top slot pays the runner-up score over its own quality: 2.1 / 70
        assert_relative_eq!(price_per_click(1, &b, &e, &inst).unwrap(), 0.03, max_relative = 1e-12);
        assert!(price_per_click(4, &b, &e, &inst).is_err());
    }

    #[test]
    fn single_bidder_pays_reserve() {
        let inst = product_instance(vec![4.0], vec![2.0], vec![3.0], 1, 0.0);
        let e = ScoringProfile::uniform(1.0, 1).unwrap();
        let b = BidProfile::new(vec![1.0]).unwrap();
        assert_eq!(price_per_click(1, &b, &e, &inst).unwrap(), 0.0);

        let inst_r = product_instance(vec![4.0], vec![2.0], vec![3.0], 1, 0.5);
        let out = settle(&b, &e, &inst_r, &TieRule::AdvertiserIndex).unwrap();
        assert_eq!(out.prices[0], 0.5);
        assert_eq!(out.clicks[0], 6.0);
    }

    #[test]
    fn prices_equal_values_leave_engine_everything() {
        let inst = product_instance(vec![2.0, 1.0], vec![1.0, 1.0], vec![5.0], 1, 0.0);
        let result = AllocationResult {
            permutation: Permutation::identity(2),
            prices: vec![2.0, 0.0],
            clicks: vec![5.0, 0.0],
        };
        let rep = surplus_report(&result, inst.values());
        assert_eq!(rep.per_advertiser, vec![0.0, 0.0]);
        assert_eq!(rep.search_engine, rep.social);
    }
}
