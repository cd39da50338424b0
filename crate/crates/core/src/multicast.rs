//! Multicast grouping.
//!
//! At each network, users requesting the same service are pooled into one
//! group bid once there are at least `n^(l)` of them. The group bids the sum
//! of its members' per-unit prices at the common service rate, so a winning
//! group serves every member with a single copy of the stream. Members'
//! unicast bids are withdrawn from that network.

use serde::Serialize;

use crate::auction::{resolve, AuctionOutcome, EngineConfig, Pricing, RoundOptions};
use crate::error::{Error, Result};
use crate::model::{BidBook, ServiceId, UserId};
use crate::topology::{NetworkId, Topology};
use crate::units::{split_proportional, Bandwidth, Money, UnitPrice};

/// Default `n^(l)` for every tier.
pub const DEFAULT_THRESHOLD: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MulticastGroupBid {
    pub group_id: String,
    pub node: usize,
    pub network: NetworkId,
    pub service_id: ServiceId,
    /// Bid-book indices of the members, in Step-0 order.
    pub members: Vec<usize>,
    pub member_ids: Vec<UserId>,
    /// Sum of member per-unit prices.
    pub price: UnitPrice,
    /// Common service rate (not the sum).
    pub rate: Bandwidth,
    /// Sum of member willingness.
    pub value: Money,
    /// Tie rank of the earliest member.
    pub tie: u32,
    pub won: bool,
}

/// Buckets the live bids of one network by service in a single pass over
/// their Step-0 order. Buckets with at least `max(threshold, 2)` members
/// become group bids; everything else survives as unicast. Groups of one
/// are never formed. Returns `(groups, surviving unicast bid indices)`.
pub fn form_groups(
    book: &BidBook,
    node: usize,
    network: &NetworkId,
    live: &[usize],
    threshold: usize,
    ranks: &[u32],
) -> (Vec<MulticastGroupBid>, Vec<usize>) {
    let bids = book.bids();
    let mut sorted = live.to_vec();
    sorted.sort_by(|a, b| {
        let (x, y) = (&bids[*a].bid, &bids[*b].bid);
        y.price.cmp(&x.price).then(ranks[*a].cmp(&ranks[*b]))
    });
    let mut buckets: Vec<(ServiceId, Vec<usize>)> = Vec::new();
    for b in &sorted {
        let svc = &bids[*b].bid.service_id;
        match buckets.iter_mut().find(|(s, _)| s == svc) {
            Some((_, members)) => members.push(*b),
            None => buckets.push((svc.clone(), vec![*b])),
        }
    }
    let need = threshold.max(2);
    let mut groups = Vec::new();
    let mut survivors = Vec::new();
    for (svc, members) in buckets {
        if members.len() < need {
            survivors.extend(members);
            continue;
        }
        let price = members.iter().fold(UnitPrice::ZERO, |acc, m| acc.saturating_add(bids[*m].bid.price));
        let value = members.iter().map(|m| bids[*m].bid.willingness).sum();
        let tie = members.iter().map(|m| ranks[*m]).min().unwrap_or(0);
        groups.push(MulticastGroupBid {
            group_id: format!("{network}/{svc}"),
            node,
            network: network.clone(),
            rate: bids[members[0]].bid.rate,
            member_ids: members.iter().map(|m| bids[*m].bid.user_id.clone()).collect(),
            service_id: svc,
            members,
            price,
            value,
            tie,
            won: false,
        });
    }
    survivors.sort_unstable();
    (groups, survivors)
}

/// Divides a group's charge in proportion to member per-unit prices. The
/// shares sum to `group_charge` exactly.
pub fn split_group_charge(group: &MulticastGroupBid, book: &BidBook, group_charge: Money) -> Result<Vec<Money>> {
    if group.members.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let weights: Vec<i64> = group.members.iter().map(|m| book.bids()[*m].bid.price.raw()).collect();
    Ok(split_proportional(group_charge, &weights))
}

/// The auction with multicast grouping at every network. `thresholds[l-1]`
/// is `n^(l)`; missing tiers reuse the last entry.
pub fn run_multicast_auction(
    topology: &Topology,
    book: &BidBook,
    thresholds: &[usize],
    config: EngineConfig,
) -> Result<AuctionOutcome> {
    let defaults = [DEFAULT_THRESHOLD];
    let th = if thresholds.is_empty() { &defaults[..] } else { thresholds };
    resolve(topology, book, &RoundOptions { config, pricing: Pricing::Vcg, multicast: Some(th), capacities: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{run_hierarchical_auction, Claimant};
    use crate::model::Bid;
    use crate::topology::NetworkNode;

    fn single(capacity: i64) -> Topology {
        Topology::build(vec![NetworkNode::new("N", 1, Bandwidth::from_units(capacity), None)]).unwrap()
    }

    fn add(book: &mut BidBook, name: &str, svc: &str, w: i64, m: i64, seq: u64) {
        let b = Bid::new(UserId::new(name), ServiceId::new(svc), Money::from_units(w), Bandwidth::from_units(m), seq).unwrap();
        book.register_resolved(b, vec![0]);
    }

    fn ranks(book: &BidBook) -> Vec<u32> {
        (0..book.len() as u32).collect()
    }

    #[test]
    fn three_video_lq_users_form_one_group() {
        let t = single(10);
        let mut book = BidBook::new(&t);
        add(&mut book, "a", "VLQ", 2, 1, 0);
        add(&mut book, "b", "VLQ", 3, 1, 1);
        add(&mut book, "c", "VLQ", 4, 1, 2);
        let (groups, rest) = form_groups(&book, 0, &NetworkId::from("N"), &[0, 1, 2], 2, &ranks(&book));
        assert!(rest.is_empty());
        assert_eq!(groups.len(), 1);
        let g = &groups[0];
        assert_eq!(g.price, UnitPrice::from_units(9));
        assert_eq!(g.rate, Bandwidth::from_units(1));
        assert_eq!(g.members, vec![2, 1, 0]);
        assert!(g.members.iter().all(|m| book.bids()[*m].bid.price < g.price));
    }

    #[test]
    fn below_threshold_or_single_stays_unicast() {
        let t = single(10);
        let mut book = BidBook::new(&t);
        add(&mut book, "f", "FTP", 2, 1, 0);
        let (groups, rest) = form_groups(&book, 0, &NetworkId::from("N"), &[0], 2, &ranks(&book));
        assert!(groups.is_empty());
        assert_eq!(rest, vec![0]);
        let (groups, rest) = form_groups(&book, 0, &NetworkId::from("N"), &[0], 1, &ranks(&book));
        assert!(groups.is_empty());
        assert_eq!(rest, vec![0]);
    }

    #[test]
    fn group_beats_stronger_unicast() {
        let t = single(1);
        let mut book = BidBook::new(&t);
        add(&mut book, "a", "VLQ", 2, 1, 0);
        add(&mut book, "b", "VLQ", 3, 1, 1);
        add(&mut book, "c", "VLQ", 4, 1, 2);
        add(&mut book, "d", "FTP", 4, 1, 3);
        let out = run_multicast_auction(&t, &book, &[2], EngineConfig::default()).unwrap();
        let s = &out.networks[0];
        assert_eq!(s.winners.len(), 1);
        assert!(matches!(s.winners[0].claimant, Claimant::Group(_)));
        assert_eq!(s.served_rate(), Bandwidth::from_units(1));
        assert_eq!(out.winners().count(), 3);
        assert_eq!(out.social_welfare, Money::from_units(9));
        // The FTP bid prices the group: 4 * 1, split 2:3:4.
        let charges: Vec<Money> = out.assignments.iter().map(|a| a.charge).collect();
        assert_eq!(charges.iter().copied().sum::<Money>(), Money::from_units(4));
        assert_eq!(charges[3], Money::ZERO);
        assert!(out.groups[0].won);
    }

    #[test]
    fn no_shared_service_reduces_to_unicast() {
        let t = single(2);
        let mut book = BidBook::new(&t);
        add(&mut book, "a", "A", 2, 1, 0);
        add(&mut book, "b", "B", 3, 1, 1);
        add(&mut book, "c", "C", 4, 1, 2);
        let multi = run_multicast_auction(&t, &book, &[2], EngineConfig::default()).unwrap();
        let uni = run_hierarchical_auction(&t, &book, EngineConfig::default()).unwrap();
        assert_eq!(multi, uni);
    }

    #[test]
    fn charge_split() {
        let t = single(1);
        let mut book = BidBook::new(&t);
        add(&mut book, "a", "V", 2, 1, 0);
        add(&mut book, "b", "V", 3, 1, 1);
        add(&mut book, "c", "V", 4, 1, 2);
        let (groups, _) = form_groups(&book, 0, &NetworkId::from("N"), &[0, 1, 2], 2, &ranks(&book));
        let g = &groups[0];
        let split = split_group_charge(g, &book, Money::from_units(3)).unwrap();
        // Members are in price order: c (4), b (3), a (2).
        assert_eq!(split, vec![Money::from_raw(1_333_333), Money::from_units(1), Money::from_raw(666_667)]);
        let zero = split_group_charge(g, &book, Money::ZERO).unwrap();
        assert!(zero.iter().all(|m| m.is_zero()));
        let mut one = g.clone();
        one.members.truncate(1);
        assert_eq!(split_group_charge(&one, &book, Money::from_units(3)).unwrap(), vec![Money::from_units(3)]);
        one.members.clear();
        assert_eq!(split_group_charge(&one, &book, Money::ZERO).unwrap_err(), Error::EmptyGroup);
    }

    #[test]
    fn zero_threshold_is_rejected() {
        let t = single(1);
        let book = BidBook::new(&t);
        assert_eq!(run_multicast_auction(&t, &book, &[0], EngineConfig::default()).unwrap_err(), Error::InvalidThreshold(0));
    }
}
