//! Reference computations that share no code with the engine's allocation
//! logic, used to audit it.

use tierbid_core::auction::{AuctionOutcome, Claimant};
use tierbid_core::{Bandwidth, Bid, BidBook, Money, NetworkNode, ServiceId, Topology, UserId, WinnerRule};

/// Whether every user in `subset` can be given one unit at some node of
/// its path. Hall's condition over all sub-subsets: each group of users
/// must fit into the pooled capacity of the nodes they can reach.
pub fn hall_feasible(paths: &[&[usize]], units: &[i64], subset: u32) -> bool {
    let members: Vec<usize> = (0..paths.len()).filter(|i| subset >> i & 1 == 1).collect();
    let k = members.len();
    for mask in 1u32..(1u32 << k) {
        let mut reach = 0u64;
        let mut count = 0i64;
        for (j, m) in members.iter().enumerate() {
            if mask >> j & 1 == 1 {
                count += 1;
                for n in paths[*m] {
                    reach |= 1 << n;
                }
            }
        }
        let cap: i64 = (0..units.len()).filter(|n| reach >> n & 1 == 1).map(|n| units[n]).sum();
        if count > cap {
            return false;
        }
    }
    true
}

/// Maximum welfare over all feasible winner sets, when every bid has the
/// same rate. Enumerates all `2^n` subsets; keep `n` small.
pub fn optimal_welfare_equal_rate(topology: &Topology, book: &BidBook) -> Money {
    let bids = book.bids();
    assert!(bids.len() <= 16, "subset enumeration is exponential");
    let Some(rate) = bids.first().map(|b| b.bid.rate) else { return Money::ZERO };
    assert!(bids.iter().all(|b| b.bid.rate == rate), "equal rates only");
    let units: Vec<i64> = topology.nodes().iter().map(|n| n.capacity.raw() / rate.raw()).collect();
    let paths: Vec<&[usize]> = bids.iter().map(|b| b.path.as_slice()).collect();
    let mut best = Money::ZERO;
    for subset in 0u32..(1u32 << bids.len()) {
        let value: Money = (0..bids.len()).filter(|i| subset >> i & 1 == 1).map(|i| bids[i].bid.willingness).sum();
        if value > best && hall_feasible(&paths, &units, subset) {
            best = value;
        }
    }
    best
}

/// Per-network ordering violations in a finished outcome.
///
/// Skip-greedy: a bid offered at a network but not admitted there, that
/// fits the network's final residual and out-prices its cheapest winner.
/// Prefix: any non-admitted bid that out-prices any winner.
pub fn ordering_violations(outcome: &AuctionOutcome, rule: WinnerRule) -> usize {
    let mut violations = 0;
    for s in &outcome.networks {
        let Some(min_winner) = s.winners.iter().map(|e| e.price).min() else { continue };
        for e in &s.offered {
            if s.winners.iter().any(|w| w.claimant == e.claimant) {
                continue;
            }
            let bad = match rule {
                WinnerRule::SkipGreedy => e.rate <= s.residual && e.price > min_winner,
                WinnerRule::Prefix => e.price > min_winner,
            };
            if bad {
                violations += 1;
            }
        }
    }
    violations
}

/// Users a claimant stands for.
pub fn claimant_size(outcome: &AuctionOutcome, c: Claimant) -> usize {
    match c {
        Claimant::User(_) => 1,
        Claimant::Group(g) => outcome.groups[g].members.len(),
    }
}

/// Small topologies for exhaustive enumeration, built from
/// `(tier, parent index)` specs with the given capacities in units.
pub fn small_topology(shape: &[(u32, Option<usize>)], capacities: &[i64]) -> Topology {
    let ids: Vec<String> = (0..shape.len()).map(|i| format!("x{i}")).collect();
    let nodes = shape
        .iter()
        .zip(capacities)
        .enumerate()
        .map(|(i, ((tier, parent), c))| {
            NetworkNode::new(ids[i].clone(), *tier, Bandwidth::from_units(*c), parent.map(|p| ids[p].as_str()))
        })
        .collect();
    Topology::build(nodes).expect("valid shape")
}

/// Unit-rate book where user `i` attaches at `attach[i]` and bids `values[i]`.
pub fn book_from(topology: &Topology, attach: &[usize], values: &[i64]) -> BidBook {
    let mut book = BidBook::new(topology);
    for (i, (at, w)) in attach.iter().zip(values).enumerate() {
        let bid = Bid::new(
            UserId::new(format!("u{i}")),
            ServiceId::new("unit"),
            Money::from_units(*w),
            Bandwidth::from_units(1),
            i as u64,
        )
        .expect("valid bid");
        book.register_resolved(bid, topology.path_to(*at));
    }
    book
}

/// Visits every assignment of `n` users to `nodes` attachment points.
pub fn for_each_attachment(nodes: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut attach = vec![0usize; n];
    loop {
        f(&attach);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            attach[i] += 1;
            if attach[i] < nodes {
                break;
            }
            attach[i] = 0;
            i += 1;
        }
    }
}
