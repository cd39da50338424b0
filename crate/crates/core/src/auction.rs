//! The hierarchical sealed-bid auction.
//!
//! Winner determination runs tier by tier starting at tier 1. Every network
//! of a tier is resolved independently (optionally in parallel); users who
//! win are then removed from the bid sets of all lower-tier networks on
//! their path. Once the last tier is resolved, the bids of every eventual
//! winner are purged from the losing index of each higher-tier network, and
//! each winner is charged from the losing index of the network that serves
//! it: the highest locally stored losing bids covering its rate.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BidBook, UserId};
use crate::multicast::{form_groups, split_group_charge, MulticastGroupBid};
use crate::topology::{NetworkId, Topology};
use crate::units::{div_round, Bandwidth, Money, UnitPrice};

pub mod oracle;

/// Reading of "the largest set of the highest bids that fit".
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WinnerRule {
    /// Scan in price order and admit every bid that still fits.
    #[default]
    SkipGreedy,
    /// Admit the longest sorted prefix that fits.
    Prefix,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineConfig {
    pub winner_rule: WinnerRule,
    /// Resolve same-tier networks on the rayon pool.
    pub parallel: bool,
}

impl EngineConfig {
    pub fn with_rule(winner_rule: WinnerRule) -> Self {
        EngineConfig { winner_rule, parallel: false }
    }
}

/// How winners pay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pricing {
    /// Charges from the local losing index.
    Vcg,
    /// Cooperative mode: every charge is zero.
    Free,
}

/// Everything that parameterizes one resolution of a bid book.
#[derive(Debug, Clone)]
pub struct RoundOptions<'a> {
    pub config: EngineConfig,
    pub pricing: Pricing,
    /// Multicast thresholds `n^(l)` indexed by tier - 1; `None` disables grouping.
    pub multicast: Option<&'a [usize]>,
    /// Per-node capacities overriding the topology's nominal ones.
    pub capacities: Option<&'a [Bandwidth]>,
}

impl<'a> RoundOptions<'a> {
    pub fn unicast(config: EngineConfig) -> Self {
        RoundOptions { config, pricing: Pricing::Vcg, multicast: None, capacities: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "kebab-case")]
pub enum Claimant {
    /// Index into the bid book.
    User(usize),
    /// Index into [`AuctionOutcome::groups`].
    Group(usize),
}

/// One sorted claim at one network: a unicast bid or a multicast group bid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Entry {
    pub claimant: Claimant,
    pub price: UnitPrice,
    pub rate: Bandwidth,
    /// Rank of the lead user in `(arrival_seq, user_id)` order.
    pub tie: u32,
}

/// Step-0 order: price descending, then arrival, then user id. Ties are
/// unique per claimant, so the order is total and unstable sorts suffice.
pub fn entry_order(a: &Entry, b: &Entry) -> Ordering {
    b.price.cmp(&a.price).then(a.tie.cmp(&b.tie))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkAuctionState {
    pub node: usize,
    pub network: NetworkId,
    pub tier: u32,
    pub capacity: Bandwidth,
    /// Bids present when this network was resolved, in Step-0 order.
    pub offered: Vec<Entry>,
    pub winners: Vec<Entry>,
    /// Losing bids, purged of users that won at a lower tier.
    pub losing: Vec<Entry>,
    pub residual: Bandwidth,
    /// Charge per distinct winning rate.
    pub charges: BTreeMap<Bandwidth, Money>,
}

impl NetworkAuctionState {
    pub fn new(node: usize, network: NetworkId, tier: u32, capacity: Bandwidth, mut offered: Vec<Entry>) -> Self {
        offered.sort_unstable_by(entry_order);
        NetworkAuctionState {
            node,
            network,
            tier,
            capacity,
            offered,
            winners: Vec::new(),
            losing: Vec::new(),
            residual: capacity,
            charges: BTreeMap::new(),
        }
    }

    pub fn offered_rate(&self) -> Bandwidth {
        self.offered.iter().map(|e| e.rate).sum()
    }

    pub fn served_rate(&self) -> Bandwidth {
        self.winners.iter().map(|e| e.rate).sum()
    }
}

/// Step 1 for a single network. `state.offered` must be in Step-0 order.
pub fn determine_winners(mut state: NetworkAuctionState, rule: WinnerRule) -> NetworkAuctionState {
    let (winners, losing, residual) = select_winners(&state.offered, state.capacity, rule);
    state.winners = winners;
    state.losing = losing;
    state.residual = residual;
    state
}

/// Splits sorted entries into winners and losers under `capacity`.
pub fn select_winners(sorted: &[Entry], capacity: Bandwidth, rule: WinnerRule) -> (Vec<Entry>, Vec<Entry>, Bandwidth) {
    let mut residual = capacity;
    let mut winners = Vec::new();
    let mut losing = Vec::new();
    let mut blocked = false;
    for e in sorted {
        if !blocked && e.rate <= residual {
            residual -= e.rate;
            winners.push(*e);
        } else {
            if rule == WinnerRule::Prefix {
                blocked = true;
            }
            losing.push(*e);
        }
    }
    (winners, losing, residual)
}

/// Charge for a winner of `rate` at a resolved network: walk the losing
/// index in price order, summing `price * units` until `rate` units are
/// covered. The marginal bid counts pro rata; uncovered units cost nothing.
/// Only losing bids that could use the freed capacity (`rate <= residual +
/// winner rate`) are displaced.
pub fn compute_charge_local(rate: Bandwidth, state: &NetworkAuctionState) -> Money {
    let budget = state.residual + rate;
    let mut need = rate;
    let mut acc: i128 = 0;
    for e in &state.losing {
        if need.is_zero() {
            break;
        }
        if e.rate > budget {
            continue;
        }
        let take = e.rate.min(need);
        acc += e.price.raw() as i128 * take.raw() as i128;
        need -= take;
    }
    // price (1e-9) * bandwidth (1e-3) -> money (1e-6)
    Money::from_raw(div_round(acc, 1_000_000) as i64)
}

/// Charge table over the distinct winning rates of a network.
pub fn charge_table(state: &NetworkAuctionState) -> BTreeMap<Bandwidth, Money> {
    let mut table = BTreeMap::new();
    for w in &state.winners {
        table.entry(w.rate).or_insert_with(|| compute_charge_local(w.rate, state));
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Assignment {
    pub user_id: UserId,
    pub willingness: Money,
    /// Serving network, or `None` when unserved.
    pub node: Option<usize>,
    pub network: Option<NetworkId>,
    pub tier: Option<u32>,
    pub charge: Money,
    /// Winning multicast group that serves the user.
    pub group: Option<usize>,
}

impl Assignment {
    pub fn is_winner(&self) -> bool {
        self.node.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuctionOutcome {
    pub winner_rule: WinnerRule,
    /// One per bid, in bid-book order.
    pub assignments: Vec<Assignment>,
    /// Sum of declared willingness over served users.
    pub social_welfare: Money,
    pub revenue: Money,
    /// Sum of the per-unit sort keys of winning entries.
    pub weight_sum: UnitPrice,
    /// One per network, in topology order.
    pub networks: Vec<NetworkAuctionState>,
    /// Every multicast group formed, winning or not.
    pub groups: Vec<MulticastGroupBid>,
}

impl AuctionOutcome {
    pub fn winners(&self) -> impl Iterator<Item = &Assignment> {
        self.assignments.iter().filter(|a| a.is_winner())
    }

    pub fn assignment(&self, user: &UserId) -> Option<&Assignment> {
        self.assignments.iter().find(|a| &a.user_id == user)
    }

    /// Sum of declared willingness. Same as [`AuctionOutcome::social_welfare`].
    pub fn recompute_social_welfare(&self) -> Money {
        self.winners().map(|a| a.willingness).sum()
    }

    pub fn recompute_revenue(&self) -> Money {
        self.assignments.iter().map(|a| a.charge).sum()
    }

    /// Checks the outcome-level invariants. Returns a description of the
    /// first violation.
    pub fn check_invariants(&self, book: &BidBook) -> std::result::Result<(), String> {
        for s in &self.networks {
            if s.served_rate() > s.capacity {
                return Err(format!("network {} serves {} over capacity {}", s.network, s.served_rate(), s.capacity));
            }
            for l in &s.losing {
                if s.winners.iter().any(|w| w.claimant == l.claimant) {
                    return Err(format!("network {} lists a claimant as winner and loser", s.network));
                }
            }
        }
        for a in &self.assignments {
            if a.charge > a.willingness {
                return Err(format!("user {} charged {} above willingness {}", a.user_id, a.charge, a.willingness));
            }
            if a.charge.is_negative() {
                return Err(format!("user {} has negative charge", a.user_id));
            }
            if let Some(node) = a.node {
                let idx = book.position(&a.user_id).ok_or_else(|| format!("unknown user {}", a.user_id))?;
                if !book.bids()[idx].path.contains(&node) {
                    return Err(format!("user {} served off its path", a.user_id));
                }
            }
        }
        if self.revenue > self.social_welfare {
            return Err(format!("revenue {} exceeds welfare {}", self.revenue, self.social_welfare));
        }
        Ok(())
    }
}

pub fn social_welfare(outcome: &AuctionOutcome) -> Money {
    outcome.recompute_social_welfare()
}

pub fn revenue(outcome: &AuctionOutcome) -> Money {
    outcome.recompute_revenue()
}

/// Runs the unicast auction at nominal capacities.
pub fn run_hierarchical_auction(topology: &Topology, book: &BidBook, config: EngineConfig) -> Result<AuctionOutcome> {
    resolve(topology, book, &RoundOptions::unicast(config))
}

/// Ranks bids by `(arrival_seq, user_id)`.
fn tie_ranks(book: &BidBook) -> Vec<u32> {
    let mut order: Vec<usize> = (0..book.len()).collect();
    let bids = book.bids();
    order.sort_by(|a, b| {
        let (x, y) = (&bids[*a].bid, &bids[*b].bid);
        x.arrival_seq.cmp(&y.arrival_seq).then_with(|| x.user_id.cmp(&y.user_id))
    });
    let mut rank = vec![0u32; book.len()];
    for (r, i) in order.into_iter().enumerate() {
        rank[i] = r as u32;
    }
    rank
}

struct Resolved {
    state: NetworkAuctionState,
    groups: Vec<MulticastGroupBid>,
}

/// Resolves one round: Steps 0-4 with optional multicast grouping,
/// capacity override and pricing mode.
pub fn resolve(topology: &Topology, book: &BidBook, opts: &RoundOptions<'_>) -> Result<AuctionOutcome> {
    if book.network_count() != topology.len() {
        return Err(Error::UnknownNetwork(format!(
            "bid book spans {} networks, topology has {}",
            book.network_count(),
            topology.len()
        )));
    }
    for pb in book.bids() {
        if let Some(bad) = pb.path.iter().find(|n| **n >= topology.len()) {
            return Err(Error::UnknownNetwork(format!("#{bad}")));
        }
    }
    let capacities: Vec<Bandwidth> = match opts.capacities {
        Some(c) if c.len() == topology.len() => c.to_vec(),
        Some(c) => {
            return Err(Error::UnknownNetwork(format!(
                "{} capacities given for {} networks",
                c.len(),
                topology.len()
            )))
        }
        None => topology.capacities(),
    };
    if let Some(th) = opts.multicast {
        if let Some(bad) = th.iter().find(|t| **t == 0) {
            return Err(Error::InvalidThreshold(*bad));
        }
    }

    let ranks = tie_ranks(book);
    let mut won_at: Vec<Option<usize>> = vec![None; book.len()];
    let mut served_by_group: Vec<Option<usize>> = vec![None; book.len()];
    let mut states: Vec<Option<NetworkAuctionState>> = vec![None; topology.len()];
    let mut groups: Vec<MulticastGroupBid> = Vec::new();

    for tier in 1..=topology.depth() {
        let threshold = opts.multicast.map(|th| th.get(tier - 1).copied().unwrap_or(*th.last().unwrap_or(&2)));
        let won_ref = &won_at;
        let ranks_ref = &ranks;
        let caps_ref = &capacities;
        let run_node = |node: usize| -> Resolved {
            let live: Vec<usize> = book.at(node).iter().copied().filter(|b| won_ref[*b].is_none()).collect();
            let net = topology.node(node);
            let (local_groups, unicast) = match threshold {
                Some(n) => form_groups(book, node, &net.id, &live, n, ranks_ref),
                None => (Vec::new(), live),
            };
            let mut offered: Vec<Entry> = unicast
                .iter()
                .map(|b| {
                    let bid = &book.bids()[*b].bid;
                    Entry { claimant: Claimant::User(*b), price: bid.price, rate: bid.rate, tie: ranks_ref[*b] }
                })
                .collect();
            offered.extend(local_groups.iter().enumerate().map(|(g, grp)| Entry {
                claimant: Claimant::Group(g),
                price: grp.price,
                rate: grp.rate,
                tie: grp.tie,
            }));
            let state = NetworkAuctionState::new(node, net.id.clone(), net.tier, caps_ref[node], offered);
            Resolved { state: determine_winners(state, opts.config.winner_rule), groups: local_groups }
        };
        let nodes = topology.tier(tier);
        let resolved: Vec<Resolved> = if opts.config.parallel {
            nodes.par_iter().map(|n| run_node(*n)).collect()
        } else {
            nodes.iter().map(|n| run_node(*n)).collect()
        };
        // Tier barrier: merge results back in topology order.
        for Resolved { mut state, groups: local } in resolved {
            let offset = groups.len();
            for list in [&mut state.offered, &mut state.winners, &mut state.losing] {
                for e in list.iter_mut() {
                    if let Claimant::Group(g) = &mut e.claimant {
                        *g += offset;
                    }
                }
            }
            groups.extend(local);
            for w in &state.winners {
                match w.claimant {
                    Claimant::User(b) => won_at[b] = Some(state.node),
                    Claimant::Group(g) => {
                        for m in &groups[g].members {
                            won_at[*m] = Some(state.node);
                            served_by_group[*m] = Some(g);
                        }
                    }
                }
            }
            let node = state.node;
            states[node] = Some(state);
        }
    }

    let mut states: Vec<NetworkAuctionState> =
        states.into_iter().map(|s| s.expect("every network resolved in its tier")).collect();

    // Upward update: drop eventual winners from every losing index.
    for state in &mut states {
        let mut purged = Vec::with_capacity(state.losing.len());
        let mut reorder = false;
        for mut e in std::mem::take(&mut state.losing) {
            match e.claimant {
                Claimant::User(b) => {
                    if won_at[b].is_none() {
                        purged.push(e);
                    }
                }
                Claimant::Group(g) => {
                    let left: Vec<usize> = groups[g].members.iter().copied().filter(|m| won_at[*m].is_none()).collect();
                    if left.is_empty() {
                        continue;
                    }
                    if left.len() != groups[g].members.len() {
                        e.price = left
                            .iter()
                            .map(|m| book.bids()[*m].bid.price)
                            .fold(UnitPrice::ZERO, |acc, p| acc.saturating_add(p));
                        e.tie = left.iter().map(|m| ranks[*m]).min().unwrap_or(e.tie);
                        reorder = true;
                    }
                    purged.push(e);
                }
            }
        }
        if reorder {
            purged.sort_unstable_by(entry_order);
        }
        state.losing = purged;
    }

    let mut charges = vec![Money::ZERO; book.len()];
    if opts.pricing == Pricing::Vcg {
        for state in &mut states {
            state.charges = charge_table(state);
            for w in &state.winners {
                let c = state.charges[&w.rate];
                match w.claimant {
                    Claimant::User(b) => charges[b] = c,
                    Claimant::Group(g) => {
                        let group = &groups[g];
                        let split = split_group_charge(group, book, c)?;
                        for (m, share) in group.members.iter().zip(split) {
                            charges[*m] = share;
                        }
                    }
                }
            }
        }
    }

    let assignments: Vec<Assignment> = book
        .bids()
        .iter()
        .enumerate()
        .map(|(i, pb)| {
            let node = won_at[i];
            Assignment {
                user_id: pb.bid.user_id.clone(),
                willingness: pb.bid.willingness,
                node,
                network: node.map(|n| topology.node(n).id.clone()),
                tier: node.map(|n| topology.node(n).tier),
                charge: charges[i],
                group: served_by_group[i],
            }
        })
        .collect();
    let social_welfare = assignments.iter().filter(|a| a.is_winner()).map(|a| a.willingness).sum();
    let revenue = charges.iter().copied().sum();
    let weight_sum = states
        .iter()
        .flat_map(|s| s.winners.iter())
        .fold(UnitPrice::ZERO, |acc, e| acc.saturating_add(e.price));
    for (gi, g) in groups.iter_mut().enumerate() {
        g.won = g.members.first().is_some_and(|m| served_by_group[*m] == Some(gi));
    }

    Ok(AuctionOutcome {
        winner_rule: opts.config.winner_rule,
        assignments,
        social_welfare,
        revenue,
        weight_sum,
        networks: states,
        groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bid, ServiceId};
    use crate::topology::NetworkNode;

    fn bw(u: i64) -> Bandwidth {
        Bandwidth::from_units(u)
    }

    fn entry(i: usize, p: i64, m: i64) -> Entry {
        Entry { claimant: Claimant::User(i), price: UnitPrice::from_units(p), rate: bw(m), tie: i as u32 }
    }

    fn state(capacity: i64, entries: Vec<Entry>) -> NetworkAuctionState {
        NetworkAuctionState::new(0, NetworkId::from("N"), 1, bw(capacity), entries)
    }

    fn user_bid(name: &str, p: i64, m: i64, seq: u64) -> Bid {
        Bid::new(UserId::new(name), ServiceId::new(format!("r{m}")), Money::from_units(p * m), bw(m), seq).unwrap()
    }

    #[test]
    fn skip_greedy_three_bids() {
        let s = determine_winners(state(10, vec![entry(0, 5, 5), entry(1, 3, 5), entry(2, 2, 1)]), WinnerRule::SkipGreedy);
        assert_eq!(s.winners.iter().map(|e| e.claimant).collect::<Vec<_>>(), vec![Claimant::User(0), Claimant::User(1)]);
        assert_eq!(s.losing, vec![entry(2, 2, 1)]);
        assert_eq!(s.residual, Bandwidth::ZERO);
    }

    #[test]
    fn empty_bid_set() {
        let s = determine_winners(state(10, vec![]), WinnerRule::SkipGreedy);
        assert!(s.winners.is_empty());
        assert_eq!(s.residual, bw(10));
    }

    #[test]
    fn oversized_bid_is_skipped_or_blocks() {
        let s = determine_winners(state(4, vec![entry(0, 5, 5), entry(1, 3, 4)]), WinnerRule::SkipGreedy);
        assert_eq!(s.winners, vec![entry(1, 3, 4)]);
        assert_eq!(s.losing, vec![entry(0, 5, 5)]);
        let s = determine_winners(state(4, vec![entry(0, 5, 5), entry(1, 3, 4)]), WinnerRule::Prefix);
        assert!(s.winners.is_empty());
        assert_eq!(s.losing.len(), 2);
    }

    #[test]
    fn local_charge_examples() {
        let s = determine_winners(state(10, vec![entry(0, 5, 5), entry(1, 3, 5), entry(2, 2, 1)]), WinnerRule::SkipGreedy);
        assert_eq!(compute_charge_local(bw(5), &s), Money::from_units(2));
        let none = determine_winners(state(10, vec![entry(0, 5, 5)]), WinnerRule::SkipGreedy);
        assert_eq!(compute_charge_local(bw(5), &none), Money::ZERO);
        // Fractional marginal loser: 3*1 + 1*1.
        let mut frac = state(4, vec![]);
        frac.winners = vec![entry(0, 5, 2)];
        frac.losing = vec![entry(1, 3, 1), entry(2, 1, 4)];
        frac.residual = bw(2);
        assert_eq!(compute_charge_local(bw(2), &frac), Money::from_units(4));
        // With no spare capacity the 4-unit loser cannot take the freed 2 units.
        frac.residual = Bandwidth::ZERO;
        assert_eq!(compute_charge_local(bw(2), &frac), Money::from_units(3));
    }

    #[test]
    fn oversized_loser_does_not_price_a_winner() {
        let s = determine_winners(state(4, vec![entry(0, 5, 5), entry(1, 3, 4)]), WinnerRule::SkipGreedy);
        assert_eq!(compute_charge_local(bw(4), &s), Money::ZERO);
    }

    fn two_tier() -> Topology {
        Topology::build(vec![NetworkNode::new("T1", 1, bw(5), None), NetworkNode::new("T2", 2, bw(5), Some("T1"))]).unwrap()
    }

    #[test]
    fn lower_tier_winner_leaves_no_opportunity_cost() {
        let t = two_tier();
        let mut book = BidBook::new(&t);
        book.register_resolved(user_bid("A", 4, 5, 0), vec![0]);
        book.register_resolved(user_bid("B", 3, 5, 1), vec![0, 1]);
        let out = run_hierarchical_auction(&t, &book, EngineConfig::default()).unwrap();
        assert_eq!(out.assignments[0].network, Some(NetworkId::from("T1")));
        assert_eq!(out.assignments[1].network, Some(NetworkId::from("T2")));
        assert!(out.networks[0].losing.is_empty(), "B purged from the tier-1 losing index");
        assert_eq!(out.assignments[0].charge, Money::ZERO);
        assert_eq!(out.revenue, Money::ZERO);
        assert_eq!(out.social_welfare, Money::from_units(35));
    }

    #[test]
    fn everyone_fits_nobody_pays() {
        let t = Topology::build(vec![NetworkNode::new("A", 1, bw(100), None)]).unwrap();
        let mut book = BidBook::new(&t);
        for i in 0..5 {
            book.register_resolved(user_bid(&format!("u{i}"), i + 1, 1, i as u64), vec![0]);
        }
        let out = run_hierarchical_auction(&t, &book, EngineConfig::default()).unwrap();
        assert_eq!(out.winners().count(), 5);
        assert!(out.assignments.iter().all(|a| a.charge.is_zero()));
    }

    #[test]
    fn fig2_shape_winners_never_reappear_below() {
        // One tier-1 cellular network over three WLANs.
        let t = Topology::build(vec![
            NetworkNode::new("UMTS", 1, bw(3), None),
            NetworkNode::new("WLAN1", 2, bw(2), Some("UMTS")),
            NetworkNode::new("WLAN2", 2, bw(2), Some("UMTS")),
            NetworkNode::new("WLAN3", 2, bw(2), Some("UMTS")),
        ])
        .unwrap();
        let mut book = BidBook::new(&t);
        for i in 0..12usize {
            book.register_resolved(user_bid(&format!("u{i}"), (i as i64 * 7) % 11 + 1, 1, i as u64), vec![0, 1 + i % 3]);
        }
        let out = run_hierarchical_auction(&t, &book, EngineConfig::default()).unwrap();
        let top: Vec<Claimant> = out.networks[0].winners.iter().map(|e| e.claimant).collect();
        for s in &out.networks[1..] {
            for e in &s.offered {
                assert!(!top.contains(&e.claimant));
            }
        }
        assert_eq!(out.networks[0].served_rate(), bw(3));
        out.check_invariants(&book).unwrap();
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let t = Topology::build(vec![
            NetworkNode::new("W", 1, bw(4), None),
            NetworkNode::new("A", 2, bw(2), Some("W")),
            NetworkNode::new("B", 2, bw(2), Some("W")),
        ])
        .unwrap();
        let mut book = BidBook::new(&t);
        for i in 0..20usize {
            book.register_resolved(user_bid(&format!("u{i:02}"), (i as i64 * 13) % 17, 1 + (i % 2) as i64, (i % 5) as u64), vec![0, 1 + i % 2]);
        }
        let seq = run_hierarchical_auction(&t, &book, EngineConfig { parallel: false, ..Default::default() }).unwrap();
        let par = run_hierarchical_auction(&t, &book, EngineConfig { parallel: true, ..Default::default() }).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn mismatched_book_is_rejected() {
        let t = two_tier();
        let other = Topology::build(vec![NetworkNode::new("X", 1, bw(1), None)]).unwrap();
        let book = BidBook::new(&other);
        assert!(matches!(run_hierarchical_auction(&t, &book, EngineConfig::default()), Err(Error::UnknownNetwork(_))));
    }
}
