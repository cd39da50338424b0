use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("topology has no nodes")]
    EmptyTopology,
    #[error("duplicate network id `{0}`")]
    DuplicateNetwork(String),
    #[error("network `{network}` references missing parent `{parent}`")]
    MissingParent { network: String, parent: String },
    #[error("network `{network}` at tier {tier} has parent `{parent}` at tier {parent_tier}")]
    ParentTierMismatch { network: String, tier: u32, parent: String, parent_tier: u32 },
    #[error("tier-1 network `{0}` must not have a parent")]
    RootWithParent(String),
    #[error("network `{0}` at tier > 1 has no parent")]
    MissingParentLink(String),
    #[error("network `{0}` has tier 0; tiers start at 1")]
    ZeroTier(String),
    #[error("network `{0}` has non-positive capacity")]
    NonPositiveCapacity(String),
    #[error("parent links form a cycle through `{0}`")]
    Cycle(String),
    #[error("unknown network `{0}`")]
    UnknownNetwork(String),

    #[error("duplicate service id `{0}`")]
    DuplicateService(String),
    #[error("service `{0}` has non-positive mean rate")]
    NonPositiveRate(String),
    #[error("unknown service `{0}`")]
    UnknownService(String),

    #[error("user `{0}` declares a negative willingness to pay")]
    NegativeWillingness(String),
    #[error("user `{0}` has an empty attachment path")]
    EmptyPath(String),
    #[error("attachment path of user `{user}` must start at a tier-1 network, found `{network}`")]
    PathNotRooted { user: String, network: String },
    #[error("attachment path of user `{user}` breaks at `{network}`: not a child of `{previous}`")]
    PathBroken { user: String, network: String, previous: String },
    #[error("duplicate user id `{0}`")]
    DuplicateUser(String),
    #[error("unknown user `{0}`")]
    UnknownUser(String),

    #[error("multicast threshold must be at least 1, got {0}")]
    InvalidThreshold(usize),
    #[error("cannot split a charge over an empty group")]
    EmptyGroup,

    #[error("service `{0}` has no weight in the policy table")]
    MissingWeight(String),
    #[error("slot {0} is not covered by any time-of-day bucket")]
    UncoveredSlot(u64),
    #[error("invalid weight policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid flow state: {0}")]
    InvalidFlowState(String),

    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
}
