//! Socially optimal rankings and the scoring strategy that extracts them:
//! equalizing score profiles, truthful-equilibrium verification, an
//! exhaustive optimum oracle, the product-form sort oracle, and the
//! adjacent-swap optimality test.

use crate::auction::{
    settle, surplus_report, AuctionInstance, BidProfile, ScoringProfile, TieRule,
};
use crate::ctr::ProductFormCtr;
use crate::equilibrium::is_nash_equilibrium;
use crate::error::AuctionError;
use crate::perm::{next_permutation, Permutation};
use crate::scalar::{real, Real};

const BRUTE_FORCE_LIMIT: usize = 10;

/// Scores chosen so every advertiser's score-value product sits at one
/// common level; under them truthful bidding leaves no advertiser surplus.
#[derive(Debug, Clone)]
pub struct EqualizingProfile<T> {
    pub scores: ScoringProfile<T>,
    pub common_level: T,
}

/// `scores[i] = level / values[i]`.
pub fn equalizing_profile<T: Real>(
    values: &[T],
    level: T,
) -> Result<EqualizingProfile<T>, AuctionError> {
    if !level.is_finite() || level <= T::zero() {
        return Err(AuctionError::InvalidParameter("level must be positive".into()));
    }
    if values.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
        return Err(AuctionError::InvalidParameter("values must be positive".into()));
    }
    let scores = ScoringProfile::new(values.iter().map(|&v| level / v).collect())?;
    Ok(EqualizingProfile { scores, common_level: level })
}

/// A ranking together with the social surplus it generates.
#[derive(Debug, Clone)]
pub struct RankingEvaluation<T> {
    pub permutation: Permutation,
    pub social_surplus: T,
}

/// `sum(values[i] * clicks(i, sigma))`.
pub fn social_surplus<T: Real>(
    instance: &AuctionInstance<T>,
    sigma: &Permutation,
) -> Result<T, AuctionError> {
    let mut total = T::zero();
    for i in 0..instance.n_advertisers() {
        total = total + instance.value(i) * instance.click_rate(i, sigma)?;
    }
    Ok(total)
}

/// Exhaustive search over all rankings in lexicographic rank-vector order;
/// ties keep the first (lexicographically smallest) maximizer.
pub fn brute_force_optimum<T: Real>(
    instance: &AuctionInstance<T>,
) -> Result<RankingEvaluation<T>, AuctionError> {
    let n = instance.n_advertisers();
    if n > BRUTE_FORCE_LIMIT {
        return Err(AuctionError::BruteForceTooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let mut ranks: Vec<usize> = (1..=n).collect();
    let mut best: Option<RankingEvaluation<T>> = None;
    loop {
        let sigma = Permutation::from_rank_of(ranks.clone())?;
        let value = social_surplus(instance, &sigma)?;
        if best.as_ref().is_none_or(|b| value > b.social_surplus) {
            best = Some(RankingEvaluation { permutation: sigma, social_surplus: value });
        }
        if !next_permutation(&mut ranks) {
            break;
        }
    }
    Ok(best.expect("at least one permutation"))
}

/// Sort oracle for separable rates: rank by `value * ad_factor`, descending,
/// ties by advertiser index. Agrees with the exhaustive optimum wherever the
/// rates are truly product-form.
pub fn product_form_optimum<T: Real>(
    values: &[T],
    ctr: &ProductFormCtr<T>,
) -> Result<RankingEvaluation<T>, AuctionError> {
    let n = values.len();
    if ctr.ad_factors().len() != n {
        return Err(AuctionError::DimensionMismatch { expected: n, got: ctr.ad_factors().len() });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let pa = values[a] * ctr.ad_factors()[a];
        let pb = values[b] * ctr.ad_factors()[b];
        pb.partial_cmp(&pa).expect("finite products").then(a.cmp(&b))
    });
    let sigma = Permutation::from_rank_order(&order)?;
    let mut total = T::zero();
    for (i, (&v, &q)) in values.iter().zip(ctr.ad_factors()).enumerate() {
        total = total + v * q * ctr.position_factor(sigma.rank_of(i));
    }
    Ok(RankingEvaluation { permutation: sigma, social_surplus: total })
}

/// Change in social surplus from swapping `advertiser` with the advertiser
/// ranked immediately below it. A ranking is product-form optimal exactly
/// when every such gain is non-positive.
pub fn adjacent_swap_gain<T: Real>(
    sigma: &Permutation,
    advertiser: usize,
    instance: &AuctionInstance<T>,
) -> Result<T, AuctionError> {
    let rank = sigma.rank_of(advertiser);
    if rank >= sigma.len() {
        return Err(AuctionError::RankOutOfRange { rank: rank + 1, max: sigma.len() });
    }
    let swapped = sigma.swap_ranks(rank, rank + 1)?;
    Ok(social_surplus(instance, &swapped)? - social_surplus(instance, sigma)?)
}

/// Verify that an equalizing profile plus truthful bids settles into the
/// given ranking as a no-surplus equilibrium: every advertiser ends with
/// (numerically) zero surplus, the engine collects the whole social surplus,
/// and no unilateral rank change is strictly profitable.
///
/// Requires more advertisers than slots; with spare slots a bidder could
/// shade its bid and keep a slot, so the hypothesis fails.
pub fn verify_truthful_ne<T: Real>(
    instance: &AuctionInstance<T>,
    permutation: &Permutation,
) -> Result<bool, AuctionError> {
    let n = instance.n_advertisers();
    if n <= instance.n_slots() {
        return Err(AuctionError::NeedsExcessAdvertisers {
            advertisers: n,
            slots: instance.n_slots(),
        });
    }
    if permutation.len() != n {
        return Err(AuctionError::DimensionMismatch { expected: n, got: permutation.len() });
    }
    let level = instance.values().iter().cloned().fold(T::zero(), T::max);
    let equalizing = equalizing_profile(instance.values(), level)?;
    let bids = BidProfile::new(instance.values().to_vec())?;
    let tie = TieRule::FixedOrder(permutation.clone());

    let outcome = settle(&bids, &equalizing.scores, instance, &tie)?;
    if outcome.permutation != *permutation {
        return Ok(false);
    }
    let report = surplus_report(&outcome, instance.values());
    let tol = real::<T>(1e-9) * report.social.abs().max(T::one());
    if report.per_advertiser.iter().any(|pi| pi.abs() > tol) {
        return Ok(false);
    }
    if (report.search_engine - report.social).abs() > tol {
        return Ok(false);
    }
    let (ne, _) = is_nash_equilibrium(&bids, &equalizing.scores, instance, &tie, tol)?;
    Ok(ne)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ctr::CtrModel;
    use approx::assert_relative_eq;

    fn product_instance(
        values: Vec<f64>,
        q: Vec<f64>,
        s: Vec<f64>,
        n_slots: usize,
    ) -> AuctionInstance<f64> {
        let n = values.len();
        let ctr = CtrModel::Product(ProductFormCtr::new(q, s, n, n_slots).unwrap());
        AuctionInstance::new(values, n_slots, 0.0, ctr).unwrap()
    }

    #[test]
    fn equalizing_profile_construction() {
        let e = equalizing_profile(&[2.0, 4.0], 4.0).unwrap();
        assert_eq!(e.scores.as_slice(), &[2.0, 1.0]);
        assert!(equalizing_profile(&[2.0, 0.0], 4.0).is_err());
    }

    #[test]
    fn scaled_equalizing_profiles_stay_equalizing() {
        let values = [3.0, 2.0, 1.0];
        for level in [1.0, 7.0, 1900.0] {
            let e = equalizing_profile(&values, level).unwrap();
            for (score, v) in e.scores.as_slice().iter().zip(values) {
                assert_relative_eq!(score * v, level, max_relative = 1e-12);
            }
        }
        // the truthful-equilibrium verdict does not depend on the level
        let inst = product_instance(values.to_vec(), vec![1.0; 3], vec![2.0, 1.0], 2);
        let sigma = Permutation::identity(3);
        for level in [1.0, 1000.0] {
            let e = equalizing_profile(&values, level).unwrap();
            let bids = BidProfile::new(values.to_vec()).unwrap();
            let tie = TieRule::FixedOrder(sigma.clone());
            let (ne, _) = is_nash_equilibrium(&bids, &e.scores, &inst, &tie, 1e-9).unwrap();
            assert!(ne);
        }
    }

    #[test]
    fn equalizing_profile_reference_vector() {
        let values = [19.0, 8.0, 7.0, 6.0, 5.0, 4.0, 13.0, 12.0, 1.0];
        let e = equalizing_profile(&values, 1900.0).unwrap();
        let expected = [100.0, 237.5, 271.43, 316.67, 380.0, 475.0, 146.15, 158.33, 1900.0];
        for (got, want) in e.scores.as_slice().iter().zip(expected) {
            assert_relative_eq!(*got, want, max_relative = 1e-4);
        }
    }

    #[test]
    fn brute_force_small_cases() {
        let inst = product_instance(vec![2.0, 1.0], vec![1.0, 1.0], vec![10.0, 5.0], 2);
        let best = brute_force_optimum(&inst).unwrap();
        assert_eq!(best.permutation.rank_vector(), &[1, 2]);
        assert_eq!(best.social_surplus, 25.0);
    }

    #[test]
    fn symmetric_instances_tie_break_to_identity() {
        let inst = product_instance(vec![3.0; 3], vec![1.0; 3], vec![3.0, 2.0, 1.0], 3);
        let best = brute_force_optimum(&inst).unwrap();
        assert_eq!(best.permutation.rank_vector(), &[1, 2, 3]);
    }

    #[test]
    fn brute_force_guard() {
        let inst = product_instance(
            vec![1.0; 11],
            vec![1.0; 11],
            (0..11).rev().map(|x| x as f64 + 1.0).collect(),
            11,
        );
        assert!(matches!(
            brute_force_optimum(&inst),
            Err(AuctionError::BruteForceTooLarge { .. })
        ));
    }

    #[test]
    fn sort_oracle_ranks_by_value_times_ad_factor() {
        let ctr = ProductFormCtr::new(vec![1.0, 1.0, 1.0], vec![3.0, 2.0, 1.0], 3, 3).unwrap();
        let best = product_form_optimum(&[1.0, 3.0, 2.0], &ctr).unwrap();
        assert_eq!(best.permutation.rank_vector(), &[3, 1, 2]);
    }

    #[test]
    fn swapping_equal_product_neighbours_gains_nothing() {
        // products (6, 6, 1): the top pair is interchangeable
        let inst = product_instance(vec![2.0, 3.0, 1.0], vec![3.0, 2.0, 1.0], vec![5.0, 4.0, 1.0], 3);
        let sigma = Permutation::identity(3);
        assert_eq!(adjacent_swap_gain(&sigma, 0, &inst).unwrap(), 0.0);
        assert!(adjacent_swap_gain(&sigma, 1, &inst).unwrap() < 0.0);
        assert!(matches!(
            adjacent_swap_gain(&sigma, 2, &inst),
            Err(AuctionError::RankOutOfRange { .. })
        ));
    }

    #[test]
    fn truthful_ne_requires_excess_advertisers() {
        let inst = product_instance(vec![3.0, 2.0], vec![1.0, 1.0], vec![2.0, 1.0], 2);
        assert!(matches!(
            verify_truthful_ne(&inst, &Permutation::identity(2)),
            Err(AuctionError::NeedsExcessAdvertisers { .. })
        ));
    }

    #[test]
    fn truthful_ne_holds_for_every_ranking() {
        let inst = product_instance(vec![3.0, 2.0, 1.0], vec![1.0; 3], vec![2.0, 1.0], 2);
        let mut ranks = vec![1, 2, 3];
        loop {
            let sigma = Permutation::from_rank_of(ranks.clone()).unwrap();
            assert!(verify_truthful_ne(&inst, &sigma).unwrap());
            if !next_permutation(&mut ranks) {
                break;
            }
        }
    }
}
