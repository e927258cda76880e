//! Rankings as bijections from advertisers to slots.

use crate::error::AuctionError;

/// A full ranking of `n` advertisers over slots `1..=n`.
///
/// Ranks beyond the number of real slots stand for "not displayed": the
/// auction pads the slot list so the ranking stays a bijection even when
/// advertisers outnumber slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    rank_of: Vec<usize>,
    advertiser_at: Vec<usize>,
}

impl Permutation {
    /// Build from a rank vector: `rank_of[i]` is the 1-based rank of advertiser `i`.
    pub fn from_rank_of(rank_of: Vec<usize>) -> Result<Self, AuctionError> {
        let n = rank_of.len();
        if n == 0 {
            return Err(AuctionError::InvalidParameter("empty ranking".into()));
        }
        let mut advertiser_at = vec![usize::MAX; n];
        for (adv, &rank) in rank_of.iter().enumerate() {
            if rank < 1 || rank > n {
                return Err(AuctionError::RankOutOfRange { rank, max: n });
            }
            if advertiser_at[rank - 1] != usize::MAX {
                return Err(AuctionError::InvalidParameter(format!(
                    "rank {rank} assigned twice"
                )));
            }
            advertiser_at[rank - 1] = adv;
        }
        Ok(Self { rank_of, advertiser_at })
    }

    /// Build from a slot order: `order[r - 1]` is the advertiser at rank `r`.
    pub fn from_rank_order(order: &[usize]) -> Result<Self, AuctionError> {
        let n = order.len();
        let mut rank_of = vec![0usize; n];
        for (slot, &adv) in order.iter().enumerate() {
            if adv >= n {
                return Err(AuctionError::InvalidParameter(format!(
                    "advertiser index {adv} out of range for n={n}"
                )));
            }
            if rank_of[adv] != 0 {
                return Err(AuctionError::InvalidParameter(format!(
                    "advertiser {adv} listed twice"
                )));
            }
            rank_of[adv] = slot + 1;
        }
        Self::from_rank_of(rank_of)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rank_of: (1..=n).collect(),
            advertiser_at: (0..n).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.rank_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rank_of.is_empty()
    }

    /// 1-based rank of an advertiser.
    pub fn rank_of(&self, advertiser: usize) -> usize {
        self.rank_of[advertiser]
    }

    /// Advertiser occupying a 1-based rank.
    pub fn advertiser_at(&self, rank: usize) -> usize {
        self.advertiser_at[rank - 1]
    }

    pub fn rank_vector(&self) -> &[usize] {
        &self.rank_of
    }

    /// Move `advertiser` to `target_rank`; everyone strictly between the old
    /// and new rank shifts one slot toward the vacated position.
    pub fn deviation(&self, advertiser: usize, target_rank: usize) -> Result<Self, AuctionError> {
        let n = self.len();
        if target_rank < 1 || target_rank > n {
            return Err(AuctionError::RankOutOfRange { rank: target_rank, max: n });
        }
        let from = self.rank_of[advertiser];
        if from == target_rank {
            return Ok(self.clone());
        }
        let mut rank_of = self.rank_of.clone();
        for (adv, rank) in rank_of.iter_mut().enumerate() {
            if adv == advertiser {
                *rank = target_rank;
            } else if from < target_rank && *rank > from && *rank <= target_rank {
                *rank -= 1;
            } else if from > target_rank && *rank >= target_rank && *rank < from {
                *rank += 1;
            }
        }
        Self::from_rank_of(rank_of)
    }

    /// Swap the occupants of two ranks.
    pub fn swap_ranks(&self, rank_a: usize, rank_b: usize) -> Result<Self, AuctionError> {
        let n = self.len();
        for rank in [rank_a, rank_b] {
            if rank < 1 || rank > n {
                return Err(AuctionError::RankOutOfRange { rank, max: n });
            }
        }
        let mut order = self.advertiser_at.clone();
        order.swap(rank_a - 1, rank_b - 1);
        Self::from_rank_order(&order)
    }
}

/// Free-function form of [`Permutation::deviation`].
pub fn deviation_permutation(
    sigma: &Permutation,
    advertiser: usize,
    target_rank: usize,
) -> Result<Permutation, AuctionError> {
    sigma.deviation(advertiser, target_rank)
}

/// Advance a rank vector to the next permutation in lexicographic order.
/// Returns false once the last permutation has been visited.
pub(crate) fn next_permutation(ranks: &mut [usize]) -> bool {
    let n = ranks.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && ranks[i - 1] >= ranks[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while ranks[j] <= ranks[i - 1] {
        j -= 1;
    }
    ranks.swap(i - 1, j);
    ranks[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deviation_shifts_intermediates() {
        // (A 1, B 2, C 3); A -> rank 2 gives (B 1, A 2, C 3)
        let sigma = Permutation::identity(3);
        let moved = sigma.deviation(0, 2).unwrap();
        assert_eq!(moved.rank_vector(), &[2, 1, 3]);

        // C -> rank 1 gives (C 1, A 2, B 3)
        let up = sigma.deviation(2, 1).unwrap();
        assert_eq!(up.rank_vector(), &[2, 3, 1]);
    }

    #[test]
    fn deviation_to_current_rank_is_identity() {
        let sigma = Permutation::from_rank_of(vec![2, 3, 1]).unwrap();
        assert_eq!(sigma.deviation(1, 3).unwrap(), sigma);
    }

    #[test]
    fn deviation_inverts() {
        let sigma = Permutation::from_rank_of(vec![3, 1, 4, 2]).unwrap();
        let there = sigma.deviation(0, 1).unwrap();
        let back = there.deviation(0, 3).unwrap();
        assert_eq!(back, sigma);
    }

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::from_rank_of(vec![1, 1, 3]).is_err());
        assert!(Permutation::from_rank_of(vec![1, 2, 4]).is_err());
    }

    #[test]
    fn lexicographic_enumeration_is_complete() {
        let mut ranks = vec![1, 2, 3];
        let mut seen = vec![ranks.clone()];
        while next_permutation(&mut ranks) {
            seen.push(ranks.clone());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[0], vec![1, 2, 3]);
        assert_eq!(seen[5], vec![3, 2, 1]);
    }
}
