use thiserror::Error;

/// Errors raised by auction construction and queries.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuctionError {
    #[error("expected {expected} entries, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank {rank} out of range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("click-through table has no entry for the queried ranking")]
    TableMiss,

    #[error(
        "exhaustive ranking search supports at most {limit} advertisers, got {n}; \
         use the sort-based optimum for product-form rates"
    )]
    BruteForceTooLarge { n: usize, limit: usize },

    #[error("operation requires more advertisers than slots ({advertisers} advertisers, {slots} slots)")]
    NeedsExcessAdvertisers { advertisers: usize, slots: usize },
}
