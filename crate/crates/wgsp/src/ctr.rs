//! Click-through-rate models: how many clicks per hour an advertiser
//! collects at a given rank under a full ranking.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use crate::error::AuctionError;
use crate::perm::Permutation;
use crate::scalar::Real;

/// Separable rates: `rate(i, j) = ad_factor[i] * position_factor[j]`.
///
/// Position factors are strictly descending over real slots and zero on the
/// padded slots beyond the display area.
#[derive(Debug, Clone)]
pub struct ProductFormCtr<T> {
    ad_factors: Vec<T>,
    position_factors: Vec<T>,
}

impl<T: Real> ProductFormCtr<T> {
    /// `position_factors` lists the real slots only; padded slots are implied zero.
    pub fn new(
        ad_factors: Vec<T>,
        position_factors: Vec<T>,
        n_advertisers: usize,
        n_slots: usize,
    ) -> Result<Self, AuctionError> {
        if ad_factors.len() != n_advertisers {
            return Err(AuctionError::DimensionMismatch {
                expected: n_advertisers,
                got: ad_factors.len(),
            });
        }
        let n_real = n_slots.min(n_advertisers);
        if position_factors.len() != n_real {
            return Err(AuctionError::DimensionMismatch {
                expected: n_real,
                got: position_factors.len(),
            });
        }
        if ad_factors.iter().any(|q| *q < T::zero()) {
            return Err(AuctionError::InvalidParameter(
                "ad factors must be non-negative".into(),
            ));
        }
        if position_factors.iter().any(|s| *s < T::zero()) {
            return Err(AuctionError::InvalidParameter(
                "position factors must be non-negative".into(),
            ));
        }
        if position_factors.windows(2).any(|w| w[0] <= w[1]) {
            return Err(AuctionError::InvalidParameter(
                "position factors must be strictly descending over real slots".into(),
            ));
        }
        let mut padded = position_factors;
        padded.resize(n_advertisers, T::zero());
        Ok(Self { ad_factors, position_factors: padded })
    }

    pub fn ad_factors(&self) -> &[T] {
        &self.ad_factors
    }

    /// Position factor for a 1-based rank, zero on padded slots.
    pub fn position_factor(&self, rank: usize) -> T {
        self.position_factors[rank - 1]
    }
}

/// Rates listed explicitly per ranking of a named advertiser subset.
///
/// Advertisers outside the named subset never appear in the table and are
/// assigned rate zero at every rank; the named advertisers must occupy the
/// top ranks for a lookup to succeed.
#[derive(Debug, Clone)]
pub struct TableCtr<T> {
    named: Vec<usize>,
    entries: BTreeMap<Vec<usize>, Vec<T>>,
}

impl<T: Real> TableCtr<T> {
    /// `entries` maps the named advertisers' rank vector (same order as
    /// `named`, ranks `1..=named.len()`) to their rates in the same order.
    pub fn new(
        named: Vec<usize>,
        entries: BTreeMap<Vec<usize>, Vec<T>>,
    ) -> Result<Self, AuctionError> {
        let k = named.len();
        for (ranks, rates) in &entries {
            if ranks.len() != k || rates.len() != k {
                return Err(AuctionError::DimensionMismatch { expected: k, got: ranks.len().min(rates.len()) });
            }
            let mut sorted = ranks.clone();
            sorted.sort_unstable();
            if sorted != (1..=k).collect::<Vec<_>>() {
                return Err(AuctionError::InvalidParameter(
                    "table keys must be permutations of the top ranks".into(),
                ));
            }
            if rates.iter().any(|x| *x < T::zero()) {
                return Err(AuctionError::InvalidParameter("rates must be non-negative".into()));
            }
        }
        Ok(Self { named, entries })
    }
}

/// Two-population rates. A fixed pool of users clicks only on the first
/// group's ads; a second pool clicks on any displayed ad. Both pools split
/// proportionally to the displayed ads' `ad_factor * position_factor` weight.
#[derive(Debug, Clone)]
pub struct CompetitorGroupCtr<T> {
    group1: BTreeSet<usize>,
    group1_users: T,
    group2_users: T,
    ad_factors: Vec<T>,
    position_factors: Vec<T>,
}

impl<T: Real> CompetitorGroupCtr<T> {
    pub fn new(
        group1: BTreeSet<usize>,
        group1_users: T,
        group2_users: T,
        ad_factors: Vec<T>,
        position_factors: Vec<T>,
        n_advertisers: usize,
        n_slots: usize,
    ) -> Result<Self, AuctionError> {
        if group1.is_empty() {
            return Err(AuctionError::InvalidParameter("group 1 must be non-empty".into()));
        }
        if group1.iter().any(|&i| i >= n_advertisers) {
            return Err(AuctionError::InvalidParameter("group 1 index out of range".into()));
        }
        if group1_users < T::zero() || group2_users < T::zero() {
            return Err(AuctionError::InvalidParameter("user counts must be non-negative".into()));
        }
        if ad_factors.len() != n_advertisers {
            return Err(AuctionError::DimensionMismatch { expected: n_advertisers, got: ad_factors.len() });
        }
        let n_real = n_slots.min(n_advertisers);
        if position_factors.len() != n_real {
            return Err(AuctionError::DimensionMismatch { expected: n_real, got: position_factors.len() });
        }
        if ad_factors.iter().chain(position_factors.iter()).any(|x| *x < T::zero()) {
            return Err(AuctionError::InvalidParameter("factors must be non-negative".into()));
        }
        let mut padded = position_factors;
        padded.resize(n_advertisers, T::zero());
        Ok(Self { group1, group1_users, group2_users, ad_factors, position_factors: padded })
    }

    pub fn group1(&self) -> &BTreeSet<usize> {
        &self.group1
    }
}

#[derive(Debug, Clone)]
pub enum CtrModel<T> {
    Product(ProductFormCtr<T>),
    Table(TableCtr<T>),
    CompetitorGroup(CompetitorGroupCtr<T>),
}

impl<T: Real> CtrModel<T> {
    /// Clicks per hour for `advertiser` under the full ranking `sigma` with
    /// `n_slots` real slots. Ranks beyond the real slots always yield zero.
    pub fn rate(
        &self,
        advertiser: usize,
        sigma: &Permutation,
        n_slots: usize,
    ) -> Result<T, AuctionError> {
        let rank = sigma.rank_of(advertiser);
        if rank > n_slots {
            return Ok(T::zero());
        }
        match self {
            CtrModel::Product(m) => Ok(m.ad_factors[advertiser] * m.position_factor(rank)),
            CtrModel::Table(m) => {
                let Some(pos) = m.named.iter().position(|&i| i == advertiser) else {
                    return Ok(T::zero());
                };
                let key: Vec<usize> = m.named.iter().map(|&i| sigma.rank_of(i)).collect();
                match m.entries.get(&key) {
                    Some(rates) => Ok(rates[pos]),
                    None => Err(AuctionError::TableMiss),
                }
            }
            CtrModel::CompetitorGroup(m) => {
                let weight = |i: usize| {
                    let r = sigma.rank_of(i);
                    if r > n_slots {
                        T::zero()
                    } else {
                        m.ad_factors[i] * m.position_factors[r - 1]
                    }
                };
                let w_i = weight(advertiser);
                let mut group1_total = T::zero();
                let mut all_total = T::zero();
                for k in 0..sigma.len() {
                    let w = weight(k);
                    all_total = all_total + w;
                    if m.group1.contains(&k) {
                        group1_total = group1_total + w;
                    }
                }
                let share = |users: T, total: T| {
                    if total > T::zero() {
                        users * w_i / total
                    } else {
                        T::zero()
                    }
                };
                let mut rate = share(m.group2_users, all_total);
                if m.group1.contains(&advertiser) {
                    rate = rate + share(m.group1_users, group1_total);
                }
                Ok(rate)
            }
        }
    }

    /// Upper bound on any single advertiser's rate, used to convert
    /// per-click tolerances into surplus slack.
    pub fn max_rate(&self) -> T {
        match self {
            CtrModel::Product(m) => {
                let q = m.ad_factors.iter().cloned().fold(T::zero(), T::max);
                let s = m.position_factors.iter().cloned().fold(T::zero(), T::max);
                q * s
            }
            CtrModel::Table(m) => m
                .entries
                .values()
                .flat_map(|rates| rates.iter().cloned())
                .fold(T::zero(), T::max),
            CtrModel::CompetitorGroup(m) => m.group1_users + m.group2_users,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn product_rate_uses_own_rank_only() {
        let m = ProductFormCtr::new(vec![2.0, 3.0, 5.0], vec![10.0, 4.0], 3, 2).unwrap();
        let model = CtrModel::Product(m);
        let a = Permutation::from_rank_of(vec![1, 2, 3]).unwrap();
        let b = Permutation::from_rank_of(vec![1, 3, 2]).unwrap();
        assert_eq!(model.rate(0, &a, 2).unwrap(), model.rate(0, &b, 2).unwrap());
        // padded slot
        assert_eq!(model.rate(2, &a, 2).unwrap(), 0.0);
    }

    #[test]
    fn product_rejects_non_descending_positions() {
        assert!(ProductFormCtr::new(vec![1.0, 1.0], vec![1.0, 1.0], 2, 2).is_err());
        assert!(ProductFormCtr::new(vec![1.0, 1.0], vec![1.0, 2.0], 2, 2).is_err());
        assert!(ProductFormCtr::new(vec![1.0, -1.0], vec![2.0, 1.0], 2, 2).is_err());
    }

    #[test]
    fn competitor_group_shares_split_proportionally() {
        // Hand-normalized: weights (2, 1, 1); group-1 users split 100 over
        // (2/3, 1/3); everyone splits 100 over (2/4, 1/4, 1/4).
        let m = CompetitorGroupCtr::new(
            [0usize, 1].into_iter().collect(),
            100.0,
            100.0,
            vec![1.0, 1.0, 1.0],
            vec![2.0, 1.0, 1.0],
            3,
            3,
        )
        .unwrap();
        let model = CtrModel::CompetitorGroup(m);
        let sigma = Permutation::identity(3);
        assert_relative_eq!(model.rate(0, &sigma, 3).unwrap(), 116.666666666, max_relative = 1e-9);
        assert_relative_eq!(model.rate(1, &sigma, 3).unwrap(), 58.333333333, max_relative = 1e-9);
        assert_relative_eq!(model.rate(2, &sigma, 3).unwrap(), 25.0, max_relative = 1e-9);
    }

    #[test]
    fn competitor_group_zero_denominator_gives_zero() {
        let m = CompetitorGroupCtr::new(
            [0usize].into_iter().collect(),
            100.0,
            50.0,
            vec![0.0, 1.0],
            vec![2.0, 1.0],
            2,
            2,
        )
        .unwrap();
        let model = CtrModel::CompetitorGroup(m);
        let sigma = Permutation::identity(2);
        // group-1 pool has zero total weight; only the shared pool pays out
        assert_eq!(model.rate(0, &sigma, 2).unwrap(), 0.0);
        assert_eq!(model.rate(1, &sigma, 2).unwrap(), 50.0);
    }
}
