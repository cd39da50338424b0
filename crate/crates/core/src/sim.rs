//! Seeded slot-by-slot simulation of repeated auctions.
//!
//! Users arrive at a uniformly drawn slot, stay for a uniformly drawn
//! duration and bid every slot they are active. Network capacities
//! fluctuate uniformly around their nominal values. Each slot runs one full
//! hierarchical auction (unicast, multicast or cooperative).
//!
//! Randomness is split into independent ChaCha streams: stream 0 draws the
//! workload, stream 1 the per-slot capacities, stream 2 the strategy
//! experiment's target agent. Changing one agent's strategy therefore leaves
//! every other draw untouched.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::auction::{resolve, Claimant, EngineConfig, Pricing, RoundOptions};
use crate::coop::{FlowState, WeightPolicy};
use crate::error::{Error, Result};
use crate::model::{Bid, BidBook, ServiceCatalog, ServiceId, UserId};
use crate::topology::{NetworkId, Topology};
use crate::units::{Bandwidth, Money};

const WORKLOAD_STREAM: u64 = 0;
const CAPACITY_STREAM: u64 = 1;
const TARGET_STREAM: u64 = 2;

pub const DEFAULT_FLUCTUATION: f64 = 0.2;
pub const DEFAULT_SHADE: f64 = 0.8;
pub const DEFAULT_AGGRESS: f64 = 1.2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValueInterval {
    pub low: Money,
    pub high: Money,
}

impl ValueInterval {
    pub fn units(low: i64, high: i64) -> Self {
        ValueInterval { low: Money::from_units(low), high: Money::from_units(high) }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Money {
        Money::from_raw(rng.gen_range(self.low.raw()..=self.high.raw()))
    }
}

/// Low, medium and high value classes.
pub fn default_value_classes() -> BTreeMap<String, ValueInterval> {
    [
        ("low".to_owned(), ValueInterval::units(1, 5)),
        ("medium".to_owned(), ValueInterval::units(5, 20)),
        ("high".to_owned(), ValueInterval::units(20, 50)),
    ]
    .into_iter()
    .collect()
}

/// Bidding strategy of an agent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Bid the true value.
    #[default]
    Truthful,
    /// Bid a fraction `alpha < 1` of it.
    Shade,
    /// Bid a multiple `beta > 1` of it.
    Aggressive,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Shade, Strategy::Truthful, Strategy::Aggressive];

    pub fn label(self) -> &'static str {
        match self {
            Strategy::Truthful => "truthful",
            Strategy::Shade => "shade",
            Strategy::Aggressive => "aggressive",
        }
    }
}

fn default_fluctuation() -> f64 {
    DEFAULT_FLUCTUATION
}
fn default_shade() -> f64 {
    DEFAULT_SHADE
}
fn default_aggress() -> f64 {
    DEFAULT_AGGRESS
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationEntry {
    pub service: ServiceId,
    pub class: String,
    /// Users per network.
    pub count: usize,
    /// Networks the users attach to; every leaf when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub networks: Option<Vec<NetworkId>>,
    #[serde(default)]
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    /// Number of auction slots `T`.
    pub horizon: u32,
    pub population: Vec<PopulationEntry>,
    #[serde(default = "default_value_classes")]
    pub value_classes: BTreeMap<String, ValueInterval>,
    /// Relative half-width of the uniform capacity draw.
    #[serde(default = "default_fluctuation")]
    pub capacity_fluctuation: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fluctuation_overrides: BTreeMap<NetworkId, f64>,
    #[serde(default = "default_shade")]
    pub shade_factor: f64,
    #[serde(default = "default_aggress")]
    pub aggress_factor: f64,
    /// Redraw every agent's value independently each slot.
    #[serde(default)]
    pub per_slot_values: bool,
    /// Extra value of a slot won right after a won slot.
    #[serde(default)]
    pub continuation_bonus: Money,
    /// Set by the caller; scenario files keep the seed at their top level.
    #[serde(skip)]
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn new(horizon: u32, population: Vec<PopulationEntry>, seed: u64) -> Self {
        WorkloadSpec {
            horizon,
            population,
            value_classes: default_value_classes(),
            capacity_fluctuation: DEFAULT_FLUCTUATION,
            fluctuation_overrides: BTreeMap::new(),
            shade_factor: DEFAULT_SHADE,
            aggress_factor: DEFAULT_AGGRESS,
            per_slot_values: false,
            continuation_bonus: Money::ZERO,
            seed,
        }
    }

    pub fn validate(&self, topology: &Topology, catalog: &ServiceCatalog) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidWorkload(m));
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.population.iter().map(|p| p.count).sum::<usize>() == 0 {
            return bad("population is empty".into());
        }
        for (name, iv) in &self.value_classes {
            if iv.low.is_negative() || iv.low > iv.high {
                return bad(format!("value class `{name}` needs 0 <= low <= high"));
            }
        }
        let fl_ok = |h: f64| h.is_finite() && (0.0..1.0).contains(&h);
        if !fl_ok(self.capacity_fluctuation) {
            return bad("capacity fluctuation must lie in [0, 1)".into());
        }
        for (n, h) in &self.fluctuation_overrides {
            if topology.index_of(n).is_none() {
                return Err(Error::UnknownNetwork(n.0.clone()));
            }
            if !fl_ok(*h) {
                return bad(format!("capacity fluctuation of `{n}` must lie in [0, 1)"));
            }
        }
        if !(self.shade_factor.is_finite() && self.shade_factor > 0.0 && self.shade_factor <= 1.0) {
            return bad("shade factor must lie in (0, 1]".into());
        }
        if !(self.aggress_factor.is_finite() && self.aggress_factor >= 1.0) {
            return bad("aggress factor must be at least 1".into());
        }
        if self.continuation_bonus.is_negative() {
            return bad("continuation bonus must be non-negative".into());
        }
        for p in &self.population {
            if catalog.get(&p.service).is_none() {
                return Err(Error::UnknownService(p.service.0.clone()));
            }
            if !self.value_classes.contains_key(&p.class) {
                return bad(format!("unknown value class `{}`", p.class));
            }
            for n in p.networks.iter().flatten() {
                if topology.index_of(n).is_none() {
                    return Err(Error::UnknownNetwork(n.0.clone()));
                }
            }
        }
        Ok(())
    }

    fn factor_ppm(&self, s: Strategy) -> i64 {
        let f = match s {
            Strategy::Truthful => 1.0,
            Strategy::Shade => self.shade_factor,
            Strategy::Aggressive => self.aggress_factor,
        };
        (f * 1_000_000.0).round() as i64
    }
}

/// A simulated user.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BiddingAgent {
    pub user_id: UserId,
    pub service_id: ServiceId,
    pub rate: Bandwidth,
    pub class: String,
    /// Node indices, root first.
    pub path: Vec<usize>,
    /// First active slot `t_s`.
    pub start: u32,
    pub duration: u32,
    pub arrival_seq: u64,
    /// True per-slot value `u`.
    pub value: Money,
    /// Per-slot values when they are redrawn each slot.
    pub slot_values: Option<Vec<Money>>,
    pub strategy: Strategy,
    /// Bid multiplier in parts per million.
    pub factor_ppm: i64,
}

impl BiddingAgent {
    pub fn is_active(&self, slot: u32) -> bool {
        slot >= self.start && slot < self.start + self.duration
    }

    /// True value in `slot` before any continuation bonus.
    pub fn base_value(&self, slot: u32) -> Money {
        match &self.slot_values {
            Some(v) => v[(slot - self.start) as usize],
            None => self.value,
        }
    }

    pub fn set_strategy(&mut self, strategy: Strategy, spec: &WorkloadSpec) {
        self.strategy = strategy;
        self.factor_ppm = spec.factor_ppm(strategy);
    }
}

fn draw_window<R: Rng + ?Sized>(rng: &mut R, horizon: u32) -> (u32, u32) {
    let start = rng.gen_range(1..=horizon);
    let duration = if start == horizon { 1 } else { rng.gen_range(1..=horizon - start) };
    (start, duration)
}

/// Draws every configured user. Deterministic in `spec.seed`.
pub fn generate_workload(spec: &WorkloadSpec, topology: &Topology, catalog: &ServiceCatalog) -> Result<Vec<BiddingAgent>> {
    spec.validate(topology, catalog)?;
    let mut rng = stream_rng(spec.seed, WORKLOAD_STREAM);
    let leaves = topology.leaves();
    let mut agents = Vec::new();
    for entry in &spec.population {
        let rate = catalog.get(&entry.service).map(|s| s.rate).expect("validated");
        let interval = spec.value_classes[&entry.class];
        let targets: Vec<usize> = match &entry.networks {
            Some(ids) => ids.iter().map(|n| topology.index_of(n).expect("validated")).collect(),
            None => leaves.clone(),
        };
        for node in targets {
            let path = topology.path_to(node);
            for _ in 0..entry.count {
                let k = agents.len();
                let (start, duration) = draw_window(&mut rng, spec.horizon);
                let value = interval.draw(&mut rng);
                let slot_values = spec.per_slot_values.then(|| (0..duration).map(|_| interval.draw(&mut rng)).collect());
                agents.push(BiddingAgent {
                    user_id: UserId::new(format!("u{k:05}")),
                    service_id: entry.service.clone(),
                    rate,
                    class: entry.class.clone(),
                    path: path.clone(),
                    start,
                    duration,
                    arrival_seq: 0,
                    value,
                    slot_values,
                    strategy: entry.strategy,
                    factor_ppm: spec.factor_ppm(entry.strategy),
                });
            }
        }
    }
    let mut order: Vec<usize> = (0..agents.len()).collect();
    order.sort_by_key(|i| (agents[*i].start, *i));
    for (seq, i) in order.into_iter().enumerate() {
        agents[i].arrival_seq = seq as u64;
    }
    Ok(agents)
}

/// Per-slot allocation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Mode {
    Auction,
    Multicast {
        /// `n^(l)` per tier, tier 1 first.
        #[serde(default = "default_thresholds")]
        thresholds: Vec<usize>,
    },
    Cooperative {
        #[serde(flatten)]
        policy: WeightPolicy,
    },
}

fn default_thresholds() -> Vec<usize> {
    vec![crate::multicast::DEFAULT_THRESHOLD]
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Auction => "auction",
            Mode::Multicast { .. } => "multicast",
            Mode::Cooperative { .. } => "cooperative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SlotRecord {
    pub slot: u32,
    /// Serving node, if the agent won.
    pub node: Option<usize>,
    pub value: Money,
    pub charge: Money,
}

impl SlotRecord {
    pub fn payoff(&self) -> Money {
        let gain = if self.node.is_some() { self.value } else { Money::ZERO };
        gain - self.charge
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentMetrics {
    pub user_id: UserId,
    pub class: String,
    pub service_id: ServiceId,
    pub start: u32,
    pub duration: u32,
    pub served_slots: u32,
    pub handoffs: u32,
    pub total_charge: Money,
    /// Realized payoff: sum over slots of won value minus charge.
    pub payoff: Money,
    pub history: Vec<SlotRecord>,
}

impl AgentMetrics {
    /// Fraction of requested slots that were served.
    pub fn completion(&self) -> f64 {
        self.served_slots as f64 / self.duration as f64
    }

    pub fn payoff_from_history(&self) -> Money {
        self.history.iter().map(SlotRecord::payoff).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkSlot {
    pub slot: u32,
    pub node: usize,
    pub network: NetworkId,
    pub tier: u32,
    /// Rate offered to this network after higher-tier winners left.
    pub demand: Bandwidth,
    /// Capacity drawn for the slot.
    pub supply: Bandwidth,
    pub served: Bandwidth,
    pub winners: usize,
    pub revenue: Money,
    /// True value of the users served here.
    pub welfare: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EpisodeMetrics {
    pub agents: Vec<AgentMetrics>,
    pub networks: Vec<NetworkSlot>,
}

impl EpisodeMetrics {
    pub fn revenue(&self) -> Money {
        self.networks.iter().map(|n| n.revenue).sum()
    }

    pub fn welfare(&self) -> Money {
        self.networks.iter().map(|n| n.welfare).sum()
    }
}

fn draw_capacities(rng: &mut ChaCha8Rng, topology: &Topology, spec: &WorkloadSpec) -> Vec<Bandwidth> {
    topology
        .nodes()
        .iter()
        .map(|n| {
            let h = spec.fluctuation_overrides.get(&n.id).copied().unwrap_or(spec.capacity_fluctuation);
            let half = (h * n.capacity.raw() as f64).floor() as i64;
            let offset = if half > 0 { rng.gen_range(-half..=half) } else { 0 };
            Bandwidth::from_raw((n.capacity.raw() + offset).max(1))
        })
        .collect()
}

/// Runs slots `1..=T`.
pub fn run_episode(
    topology: &Topology,
    agents: &[BiddingAgent],
    mode: &Mode,
    spec: &WorkloadSpec,
    config: EngineConfig,
) -> Result<EpisodeMetrics> {
    if spec.horizon == 0 {
        return Err(Error::InvalidWorkload("horizon must be at least 1".into()));
    }
    if let Mode::Multicast { thresholds } = mode {
        if thresholds.is_empty() {
            return Err(Error::InvalidWorkload("multicast mode needs at least one threshold".into()));
        }
        if thresholds.len() > topology.depth() {
            return Err(Error::InvalidWorkload(format!(
                "{} multicast thresholds for {} tiers",
                thresholds.len(),
                topology.depth()
            )));
        }
    }
    if agents.iter().any(|a| a.path.iter().any(|n| *n >= topology.len())) {
        return Err(Error::UnknownNetwork("agent path outside the topology".into()));
    }
    let mut cap_rng = stream_rng(spec.seed, CAPACITY_STREAM);
    let mut metrics: Vec<AgentMetrics> = agents
        .iter()
        .map(|a| AgentMetrics {
            user_id: a.user_id.clone(),
            class: a.class.clone(),
            service_id: a.service_id.clone(),
            start: a.start,
            duration: a.duration,
            served_slots: 0,
            handoffs: 0,
            total_charge: Money::ZERO,
            payoff: Money::ZERO,
            history: Vec::with_capacity(a.duration as usize),
        })
        .collect();
    // (slot, node) of each agent's latest win.
    let mut last_win: Vec<Option<(u32, usize)>> = vec![None; agents.len()];
    let mut share: Vec<Bandwidth> = vec![Bandwidth::ZERO; agents.len()];
    let mut network_rows = Vec::with_capacity(spec.horizon as usize * topology.len());

    let (pricing, thresholds, policy) = match mode {
        Mode::Auction => (Pricing::Vcg, None, None),
        Mode::Multicast { thresholds } => (Pricing::Vcg, Some(thresholds.as_slice()), None),
        Mode::Cooperative { policy } => (Pricing::Free, None, Some(policy)),
    };

    for slot in 1..=spec.horizon {
        let caps = draw_capacities(&mut cap_rng, topology, spec);
        let mut book = BidBook::new(topology);
        let mut who = Vec::new();
        let mut values = Vec::new();
        for (i, a) in agents.iter().enumerate() {
            if !a.is_active(slot) {
                continue;
            }
            let mut value = a.base_value(slot);
            if last_win[i].is_some_and(|(s, _)| s + 1 == slot) {
                value += spec.continuation_bonus;
            }
            let mut bid = match policy {
                None => Bid::new(a.user_id.clone(), a.service_id.clone(), value.scale_ppm(a.factor_ppm), a.rate, a.arrival_seq)?,
                Some(_) => Bid::new(a.user_id.clone(), a.service_id.clone(), value, a.rate, a.arrival_seq)?,
            };
            if let Some(p) = policy {
                bid.price = p.compute_weight(&FlowState {
                    service_id: a.service_id.clone(),
                    t_init: a.start as u64,
                    cumulative_share: share[i],
                    slots_served: metrics[i].served_slots as u64,
                    now: slot as u64,
                })?;
            }
            book.register_resolved(bid, a.path.clone());
            who.push(i);
            values.push(value);
        }
        let opts = RoundOptions {
            config,
            pricing,
            multicast: thresholds,
            capacities: Some(&caps),
        };
        let outcome = resolve(topology, &book, &opts)?;

        let mut net_revenue = vec![Money::ZERO; topology.len()];
        let mut net_welfare = vec![Money::ZERO; topology.len()];
        for (k, a) in outcome.assignments.iter().enumerate() {
            let i = who[k];
            let value = values[k];
            let m = &mut metrics[i];
            m.history.push(SlotRecord { slot, node: a.node, value, charge: a.charge });
            m.total_charge += a.charge;
            if let Some(node) = a.node {
                m.served_slots += 1;
                m.payoff += value;
                share[i] += agents[i].rate;
                if let Some((s, prev)) = last_win[i] {
                    if s + 1 == slot && prev != node {
                        m.handoffs += 1;
                    }
                }
                last_win[i] = Some((slot, node));
                net_revenue[node] += a.charge;
                net_welfare[node] += value;
            }
            m.payoff -= a.charge;
        }
        for s in &outcome.networks {
            let winners = s
                .winners
                .iter()
                .map(|e| match e.claimant {
                    Claimant::User(_) => 1,
                    Claimant::Group(g) => outcome.groups[g].members.len(),
                })
                .sum();
            network_rows.push(NetworkSlot {
                slot,
                node: s.node,
                network: s.network.clone(),
                tier: s.tier,
                demand: s.offered_rate(),
                supply: s.capacity,
                served: s.served_rate(),
                winners,
                revenue: net_revenue[s.node],
                welfare: net_welfare[s.node],
            });
        }
    }
    Ok(EpisodeMetrics { agents: metrics, networks: network_rows })
}

/// Who the strategy experiment varies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSpec {
    /// Attachment network; the first leaf when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkId>,
    pub service: ServiceId,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmResult {
    pub strategy: Strategy,
    /// Mean realized payoff of the target, currency units.
    pub mean_payoff: f64,
    pub std_error: f64,
    /// Mean of `payoff(truthful) - payoff(this arm)` over replications.
    pub truthful_advantage: f64,
    /// Standard error of that paired difference.
    pub advantage_std_error: f64,
    pub payoffs: Vec<Money>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyReport {
    pub replications: usize,
    pub arms: Vec<ArmResult>,
}

impl StrategyReport {
    pub fn arm(&self, s: Strategy) -> &ArmResult {
        self.arms.iter().find(|a| a.strategy == s).expect("all arms present")
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Adds a target agent active over the whole horizon to replication
/// `rep`'s workload and replays it once per strategy with identical seeds.
/// All other agents keep their configured strategies.
pub fn strategy_payoff_experiment(
    topology: &Topology,
    catalog: &ServiceCatalog,
    base: &WorkloadSpec,
    mode: &Mode,
    target: &TargetSpec,
    replications: usize,
    config: EngineConfig,
) -> Result<StrategyReport> {
    if replications == 0 {
        return Err(Error::InvalidWorkload("replications must be at least 1".into()));
    }
    let node = match &target.network {
        Some(n) => topology.index_of(n).ok_or_else(|| Error::UnknownNetwork(n.0.clone()))?,
        None => topology.leaves()[0],
    };
    let rate = catalog.get(&target.service).ok_or_else(|| Error::UnknownService(target.service.0.clone()))?.rate;
    let interval = *base
        .value_classes
        .get(&target.class)
        .ok_or_else(|| Error::InvalidWorkload(format!("unknown value class `{}`", target.class)))?;

    let one = |rep: usize| -> Result<[Money; 3]> {
        let spec = WorkloadSpec { seed: base.seed.wrapping_add(rep as u64), ..base.clone() };
        let mut agents = generate_workload(&spec, topology, catalog)?;
        let mut rng = stream_rng(spec.seed, TARGET_STREAM);
        let value = interval.draw(&mut rng);
        let slot_values = spec.per_slot_values.then(|| (0..spec.horizon).map(|_| interval.draw(&mut rng)).collect());
        agents.push(BiddingAgent {
            user_id: UserId::new("target"),
            service_id: target.service.clone(),
            rate,
            class: target.class.clone(),
            path: topology.path_to(node),
            start: 1,
            duration: spec.horizon,
            arrival_seq: agents.len() as u64,
            value,
            slot_values,
            strategy: Strategy::Truthful,
            factor_ppm: 1_000_000,
        });
        let t = agents.len() - 1;
        let mut out = [Money::ZERO; 3];
        for (k, s) in Strategy::ALL.iter().enumerate() {
            agents[t].set_strategy(*s, &spec);
            let m = run_episode(topology, &agents, mode, &spec, config)?;
            out[k] = m.agents[t].payoff;
        }
        Ok(out)
    };
    let results: Vec<Result<[Money; 3]>> = if config.parallel {
        (0..replications).into_par_iter().map(one).collect()
    } else {
        (0..replications).map(one).collect()
    };
    let results: Vec<[Money; 3]> = results.into_iter().collect::<Result<_>>()?;
    let truthful_idx = 1;
    let arms = Strategy::ALL
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let payoffs: Vec<Money> = results.iter().map(|r| r[k]).collect();
            let xs: Vec<f64> = payoffs.iter().map(|m| m.to_f64()).collect();
            let diffs: Vec<f64> = results.iter().map(|r| (r[truthful_idx] - r[k]).to_f64()).collect();
            let (mean_payoff, std_error) = mean_se(&xs);
            let (truthful_advantage, advantage_std_error) = mean_se(&diffs);
            ArmResult { strategy: *s, mean_payoff, std_error, truthful_advantage, advantage_std_error, payoffs }
        })
        .collect();
    Ok(StrategyReport { replications, arms })
}
