//! Cooperative allocation: operator weights take the place of bids.
//!
//! Winner determination is unchanged; each flow's per-unit price is
//! replaced by a weight computed from its state and all payments are zero.
//! Different weight functions emulate service differentiation, time-of-day
//! pricing, aging, Round Robin and First Come First Served.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::auction::{resolve, AuctionOutcome, EngineConfig, Pricing, RoundOptions};
use crate::error::{Error, Result};
use crate::model::{Bid, BidBook, ServiceCatalog, ServiceId, UserFlow};
use crate::topology::Topology;
use crate::units::{Bandwidth, Money, UnitPrice, BANDWIDTH_SCALE};

/// Weight of a flow whose inverse is undefined (never served, or started at
/// slot 0). Larger than any finite inverse: shares are at least one raw
/// bandwidth unit times one slot, so inverses never exceed 1000.
pub const SENTINEL_WEIGHT: UnitPrice = UnitPrice::from_units(1_000_000);

/// Default aging coefficient.
pub const DEFAULT_AGING_GAMMA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeBucket {
    /// First slot of the bucket.
    pub start: u64,
    /// One past the last slot.
    pub end: u64,
    pub weights: BTreeMap<ServiceId, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case")]
pub enum WeightPolicy {
    StaticService { weights: BTreeMap<ServiceId, f64> },
    TimeOfDay { buckets: Vec<TimeBucket> },
    Aging {
        weights: BTreeMap<ServiceId, f64>,
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    RoundRobin,
    Fcfs,
}

fn default_gamma() -> f64 {
    DEFAULT_AGING_GAMMA
}

/// What a weight function may look at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowState {
    pub service_id: ServiceId,
    /// Slot of flow initiation, 1-based.
    pub t_init: u64,
    /// Bandwidth received so far, summed over slots.
    pub cumulative_share: Bandwidth,
    /// Slots in which the flow was served.
    pub slots_served: u64,
    pub now: u64,
}

fn weight_from(table: &BTreeMap<ServiceId, f64>, service: &ServiceId) -> Result<UnitPrice> {
    table
        .get(service)
        .map(|w| UnitPrice::from_f64(*w))
        .ok_or_else(|| Error::MissingWeight(service.0.clone()))
}

impl WeightPolicy {
    /// Rejects non-finite or negative weights, overlapping buckets and
    /// static tables that miss a catalog service.
    pub fn validate(&self, catalog: &ServiceCatalog) -> Result<()> {
        let check_table = |t: &BTreeMap<ServiceId, f64>, complete: bool| -> Result<()> {
            for (s, w) in t {
                if !w.is_finite() || *w < 0.0 {
                    return Err(Error::InvalidPolicy(format!("weight of `{s}` must be finite and >= 0")));
                }
            }
            if complete {
                if let Some(missing) = catalog.services().iter().find(|s| !t.contains_key(&s.id)) {
                    return Err(Error::MissingWeight(missing.id.0.clone()));
                }
            }
            Ok(())
        };
        match self {
            WeightPolicy::StaticService { weights } => check_table(weights, true),
            WeightPolicy::Aging { weights, gamma } => {
                if !gamma.is_finite() || *gamma < 0.0 {
                    return Err(Error::InvalidPolicy("aging gamma must be finite and >= 0".into()));
                }
                check_table(weights, true)
            }
            WeightPolicy::TimeOfDay { buckets } => {
                let mut spans: Vec<(u64, u64)> = Vec::new();
                for b in buckets {
                    if b.start >= b.end {
                        return Err(Error::InvalidPolicy(format!("empty bucket [{}, {})", b.start, b.end)));
                    }
                    if spans.iter().any(|(s, e)| b.start < *e && *s < b.end) {
                        return Err(Error::InvalidPolicy(format!("bucket [{}, {}) overlaps another", b.start, b.end)));
                    }
                    spans.push((b.start, b.end));
                    check_table(&b.weights, false)?;
                }
                Ok(())
            }
            WeightPolicy::RoundRobin | WeightPolicy::Fcfs => Ok(()),
        }
    }

    /// The per-unit weight that replaces a flow's price.
    pub fn compute_weight(&self, flow: &FlowState) -> Result<UnitPrice> {
        if flow.now < flow.t_init {
            return Err(Error::InvalidFlowState(format!("now {} precedes t_init {}", flow.now, flow.t_init)));
        }
        match self {
            WeightPolicy::StaticService { weights } => weight_from(weights, &flow.service_id),
            WeightPolicy::TimeOfDay { buckets } => {
                let bucket = buckets
                    .iter()
                    .find(|b| b.start <= flow.now && flow.now < b.end)
                    .ok_or(Error::UncoveredSlot(flow.now))?;
                weight_from(&bucket.weights, &flow.service_id)
            }
            WeightPolicy::Aging { weights, gamma } => {
                let base = weight_from(weights, &flow.service_id)?;
                let gamma_ppm = (gamma * 1_000_000.0).round() as i64;
                let factor = 1_000_000i64.saturating_add(gamma_ppm.saturating_mul(flow.slots_served as i64));
                Ok(base.scale_ppm(factor))
            }
            WeightPolicy::RoundRobin => {
                let share = flow.cumulative_share.raw();
                if share <= 0 {
                    Ok(SENTINEL_WEIGHT)
                } else {
                    Ok(UnitPrice::reciprocal(share, BANDWIDTH_SCALE))
                }
            }
            WeightPolicy::Fcfs => {
                if flow.t_init == 0 {
                    Ok(SENTINEL_WEIGHT)
                } else {
                    Ok(UnitPrice::reciprocal(flow.t_init as i64, 0))
                }
            }
        }
    }
}

/// A flow and its scheduling state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoopFlow {
    pub flow: UserFlow,
    pub state: FlowState,
}

/// Builds the weighted bid book of one cooperative round. Each bid keeps the
/// flow's true willingness (for welfare accounting) but sorts by weight.
pub fn weighted_book(topology: &Topology, catalog: &ServiceCatalog, flows: &[CoopFlow], policy: &WeightPolicy) -> Result<BidBook> {
    let mut book = BidBook::new(topology);
    for cf in flows {
        let f = &cf.flow;
        let svc = catalog.get(&f.service_id).ok_or_else(|| Error::UnknownService(f.service_id.0.clone()))?;
        let mut bid = Bid::new(f.user_id.clone(), f.service_id.clone(), f.willingness, svc.rate, f.arrival_seq)?;
        bid.price = policy.compute_weight(&cf.state)?;
        book.register(topology, bid, &f.path)?;
    }
    Ok(book)
}

/// One cooperative round at slot `now`. Charges and revenue are zero;
/// `social_welfare` is the true willingness of the served flows and
/// `weight_sum` the sum of their weights.
pub fn run_cooperative_round(
    topology: &Topology,
    catalog: &ServiceCatalog,
    flows: &[CoopFlow],
    policy: &WeightPolicy,
    now: u64,
    config: EngineConfig,
) -> Result<AuctionOutcome> {
    let flows: Vec<CoopFlow> = flows
        .iter()
        .map(|cf| CoopFlow { flow: cf.flow.clone(), state: FlowState { now, ..cf.state.clone() } })
        .collect();
    let book = weighted_book(topology, catalog, &flows, policy)?;
    resolve(topology, &book, &RoundOptions { config, pricing: Pricing::Free, multicast: None, capacities: None })
}

/// Welfare of an outcome measured in true willingness. Identical to
/// `social_welfare` for truthful bids; provided for cross-mode comparison.
pub fn true_welfare(outcome: &AuctionOutcome) -> Money {
    outcome.winners().map(|a| a.willingness).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ServiceClass, UserId};
    use crate::topology::{NetworkId, NetworkNode};

    fn state(service: &str, t_init: u64, share: i64, now: u64) -> FlowState {
        FlowState {
            service_id: ServiceId::new(service),
            t_init,
            cumulative_share: Bandwidth::from_units(share),
            slots_served: 0,
            now,
        }
    }

    #[test]
    fn round_robin_weights() {
        let rr = WeightPolicy::RoundRobin;
        assert_eq!(rr.compute_weight(&state("x", 1, 4, 5)).unwrap(), UnitPrice::from_raw(250_000_000));
        assert_eq!(rr.compute_weight(&state("x", 1, 0, 5)).unwrap(), SENTINEL_WEIGHT);
        assert!(SENTINEL_WEIGHT > UnitPrice::reciprocal(1, BANDWIDTH_SCALE));
    }

    #[test]
    fn fcfs_weights() {
        let f = WeightPolicy::Fcfs;
        let early = f.compute_weight(&state("x", 3, 0, 9)).unwrap();
        let late = f.compute_weight(&state("x", 7, 0, 9)).unwrap();
        assert_eq!(early, UnitPrice::from_raw(333_333_333));
        assert!(early > late);
        assert_eq!(f.compute_weight(&state("x", 0, 0, 9)).unwrap(), SENTINEL_WEIGHT);
    }

    #[test]
    fn static_and_time_of_day() {
        let p = WeightPolicy::StaticService {
            weights: [(ServiceId::new("Video-HQ"), 5.0), (ServiceId::new("FTP"), 1.0)].into_iter().collect(),
        };
        assert_eq!(p.compute_weight(&state("Video-HQ", 1, 0, 1)).unwrap(), UnitPrice::from_units(5));
        assert!(p.compute_weight(&state("Video-HQ", 1, 0, 1)).unwrap() > p.compute_weight(&state("FTP", 1, 0, 1)).unwrap());
        assert_eq!(p.compute_weight(&state("VoIP", 1, 0, 1)).unwrap_err(), Error::MissingWeight("VoIP".into()));

        let tod = WeightPolicy::TimeOfDay {
            buckets: vec![
                TimeBucket { start: 1, end: 10, weights: [(ServiceId::new("FTP"), 1.0)].into_iter().collect() },
                TimeBucket { start: 10, end: 20, weights: [(ServiceId::new("FTP"), 3.0)].into_iter().collect() },
            ],
        };
        assert_eq!(tod.compute_weight(&state("FTP", 1, 0, 9)).unwrap(), UnitPrice::from_units(1));
        assert_eq!(tod.compute_weight(&state("FTP", 1, 0, 10)).unwrap(), UnitPrice::from_units(3));
        assert_eq!(tod.compute_weight(&state("FTP", 1, 0, 20)).unwrap_err(), Error::UncoveredSlot(20));
    }

    #[test]
    fn aging_grows_with_service() {
        let p = WeightPolicy::Aging { weights: [(ServiceId::new("FTP"), 2.0)].into_iter().collect(), gamma: 0.1 };
        let mut s = state("FTP", 1, 0, 5);
        assert_eq!(p.compute_weight(&s).unwrap(), UnitPrice::from_units(2));
        s.slots_served = 5;
        assert_eq!(p.compute_weight(&s).unwrap(), UnitPrice::from_units(3));
    }

    #[test]
    fn bad_flow_state_and_validation() {
        assert!(matches!(WeightPolicy::Fcfs.compute_weight(&state("x", 5, 0, 4)), Err(Error::InvalidFlowState(_))));
        let catalog = ServiceCatalog::new(vec![ServiceClass::new("FTP", Bandwidth::from_units(1))]).unwrap();
        let missing = WeightPolicy::StaticService { weights: BTreeMap::new() };
        assert_eq!(missing.validate(&catalog).unwrap_err(), Error::MissingWeight("FTP".into()));
        let negative = WeightPolicy::StaticService { weights: [(ServiceId::new("FTP"), -1.0)].into_iter().collect() };
        assert!(matches!(negative.validate(&catalog), Err(Error::InvalidPolicy(_))));
        let overlap = WeightPolicy::TimeOfDay {
            buckets: vec![
                TimeBucket { start: 1, end: 10, weights: BTreeMap::new() },
                TimeBucket { start: 5, end: 12, weights: BTreeMap::new() },
            ],
        };
        assert!(matches!(overlap.validate(&catalog), Err(Error::InvalidPolicy(_))));
    }

    fn one_network() -> (Topology, ServiceCatalog) {
        (
            Topology::build(vec![NetworkNode::new("N", 1, Bandwidth::from_units(1), None)]).unwrap(),
            ServiceCatalog::new(vec![ServiceClass::new("FTP", Bandwidth::from_units(1))]).unwrap(),
        )
    }

    fn coop_flow(name: &str, seq: u64, t_init: u64) -> CoopFlow {
        CoopFlow {
            flow: UserFlow {
                user_id: UserId::new(name),
                service_id: ServiceId::new("FTP"),
                willingness: Money::from_units(1),
                path: vec![NetworkId::from("N")],
                arrival_seq: seq,
            },
            state: FlowState { t_init, ..state("FTP", t_init, 0, t_init) },
        }
    }

    /// Serves `flows` for `slots` rounds, returning who won each slot.
    fn trace(policy: &WeightPolicy, mut flows: Vec<CoopFlow>, slots: u64) -> Vec<Vec<String>> {
        let (t, c) = one_network();
        let mut out = Vec::new();
        for now in 1..=slots {
            let active: Vec<CoopFlow> = flows.iter().filter(|f| f.state.t_init <= now).cloned().collect();
            let res = run_cooperative_round(&t, &c, &active, policy, now, EngineConfig::default()).unwrap();
            assert!(res.revenue.is_zero());
            assert!(res.assignments.iter().all(|a| a.charge.is_zero()));
            let winners: Vec<String> = res.winners().map(|a| a.user_id.0.clone()).collect();
            for f in flows.iter_mut() {
                if winners.contains(&f.flow.user_id.0) {
                    f.state.cumulative_share += Bandwidth::from_units(1);
                    f.state.slots_served += 1;
                }
            }
            out.push(winners);
        }
        out
    }

    #[test]
    fn fcfs_serves_the_first_arrival_every_slot() {
        let t = trace(&WeightPolicy::Fcfs, vec![coop_flow("f1", 0, 1), coop_flow("f2", 1, 2)], 3);
        assert_eq!(t, vec![vec!["f1".to_string()]; 3]);
    }

    #[test]
    fn round_robin_alternates() {
        let t = trace(&WeightPolicy::RoundRobin, vec![coop_flow("a", 0, 1), coop_flow("b", 1, 1)], 6);
        let flat: Vec<&str> = t.iter().map(|w| w[0].as_str()).collect();
        assert_eq!(flat, vec!["a", "b", "a", "b", "a", "b"]);
    }
}
