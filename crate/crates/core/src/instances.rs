//! Random single-round auction instances for audits and property checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Bid, BidBook, ServiceId, UserId};
use crate::topology::{NetworkNode, Topology};
use crate::units::{Bandwidth, Money};

/// Where users attach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coverage {
    /// Every user reaches a leaf.
    Leaves,
    /// Users attach at any node, so some lack the lower tiers.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFamily {
    pub min_users: usize,
    pub max_users: usize,
    /// Number of tiers.
    pub tiers: usize,
    /// Upper bound on the number of networks.
    pub max_networks: usize,
    /// Maximum children per node.
    pub max_children: usize,
    /// Service rates in whole units; one entry means equal rates.
    pub rates: Vec<i64>,
    /// Capacity of each network in multiples of the smallest rate.
    pub capacity_slots: (i64, i64),
    /// Willingness per slot, whole currency units.
    pub willingness: (i64, i64),
    pub coverage: Coverage,
    /// Distinct services sharing each rate.
    pub services_per_rate: usize,
}

impl InstanceFamily {
    /// Equal unit rates on 3-tier forests.
    pub fn equal_rate(max_users: usize) -> Self {
        InstanceFamily {
            min_users: 1,
            max_users,
            tiers: 3,
            max_networks: 7,
            max_children: 2,
            rates: vec![1],
            capacity_slots: (1, 4),
            willingness: (0, 40),
            coverage: Coverage::Partial,
            services_per_rate: 1,
        }
    }

    /// The catalog rates 1 and 5 mixed.
    pub fn heterogeneous(max_users: usize) -> Self {
        InstanceFamily { rates: vec![1, 5], capacity_slots: (1, 12), ..InstanceFamily::equal_rate(max_users) }
    }

    pub fn is_equal_rate(&self) -> bool {
        self.rates.len() <= 1
    }

    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> Instance {
        let topology = self.random_topology(rng);
        let targets: Vec<usize> = match self.coverage {
            Coverage::Leaves => topology.leaves(),
            Coverage::Partial => (0..topology.len()).collect(),
        };
        let users = rng.gen_range(self.min_users..=self.max_users.max(self.min_users));
        let mut book = BidBook::new(&topology);
        for u in 0..users {
            let at = targets[rng.gen_range(0..targets.len())];
            let rate = self.rates[rng.gen_range(0..self.rates.len())];
            let w = rng.gen_range(self.willingness.0..=self.willingness.1);
            let service = match self.services_per_rate {
                0 | 1 => format!("rate{rate}"),
                k => format!("rate{rate}-{}", rng.gen_range(0..k)),
            };
            let bid = Bid::new(
                UserId::new(format!("u{u:03}")),
                ServiceId::new(service),
                Money::from_units(w),
                Bandwidth::from_units(rate),
                u as u64,
            )
            .expect("generated bids are valid");
            book.register_resolved(bid, topology.path_to(at));
        }
        Instance { topology, book }
    }

    fn random_topology<R: Rng + ?Sized>(&self, rng: &mut R) -> Topology {
        let unit = *self.rates.iter().min().unwrap_or(&1);
        let cap = |rng: &mut R| Bandwidth::from_units(unit * rng.gen_range(self.capacity_slots.0..=self.capacity_slots.1));
        let mut nodes = vec![NetworkNode::new("n0", 1, cap(rng), None)];
        let mut frontier = vec![0usize];
        for tier in 2..=self.tiers {
            let mut next = Vec::new();
            for parent in frontier {
                let kids = rng.gen_range(1..=self.max_children.max(1));
                for _ in 0..kids {
                    if nodes.len() >= self.max_networks {
                        break;
                    }
                    let id = format!("n{}", nodes.len());
                    let parent_id = nodes[parent].id.0.clone();
                    nodes.push(NetworkNode::new(id, tier as u32, cap(rng), Some(&parent_id)));
                    next.push(nodes.len() - 1);
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Topology::build(nodes).expect("generated topology is a forest")
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub topology: Topology,
    pub book: BidBook,
}
