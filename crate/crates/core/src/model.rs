//! Services, user flows and bids.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{NetworkId, Topology};
use crate::units::{Bandwidth, Money, UnitPrice};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ServiceId(pub String);

impl ServiceId {
    pub fn new(id: impl Into<String>) -> Self {
        ServiceId(id.into())
    }
}

impl fmt::Display for ServiceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub String);

impl UserId {
    pub fn new(id: impl Into<String>) -> Self {
        UserId(id.into())
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A service type. Services differ only in their mean rate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceClass {
    pub id: ServiceId,
    pub rate: Bandwidth,
    #[serde(default)]
    pub label: String,
}

impl ServiceClass {
    pub fn new(id: impl Into<String>, rate: Bandwidth) -> Self {
        let id = id.into();
        ServiceClass { label: id.clone(), id: ServiceId(id), rate }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceCatalog {
    services: Vec<ServiceClass>,
    index: HashMap<ServiceId, usize>,
}

impl ServiceCatalog {
    pub fn new(services: Vec<ServiceClass>) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, s) in services.iter().enumerate() {
            if s.rate.raw() <= 0 {
                return Err(Error::NonPositiveRate(s.id.0.clone()));
            }
            if index.insert(s.id.clone(), i).is_some() {
                return Err(Error::DuplicateService(s.id.0.clone()));
            }
        }
        Ok(ServiceCatalog { services, index })
    }

    pub fn get(&self, id: &ServiceId) -> Option<&ServiceClass> {
        self.index.get(id).map(|i| &self.services[*i])
    }

    pub fn services(&self) -> &[ServiceClass] {
        &self.services
    }

    /// The distinct mean rates; its size is the number of service rates `s`.
    pub fn distinct_rates(&self) -> BTreeSet<Bandwidth> {
        self.services.iter().map(|s| s.rate).collect()
    }
}

/// A user's service request for one auction round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserFlow {
    pub user_id: UserId,
    pub service_id: ServiceId,
    /// Declared willingness to pay per slot.
    pub willingness: Money,
    /// Root-to-leaf networks the user can reach, one per tier.
    pub path: Vec<NetworkId>,
    /// Global tie-breaker; lower arrived earlier.
    pub arrival_seq: u64,
}

/// The auction's atom: `(p, m)` with `p = w / m`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bid {
    pub user_id: UserId,
    pub service_id: ServiceId,
    pub willingness: Money,
    pub rate: Bandwidth,
    pub price: UnitPrice,
    pub arrival_seq: u64,
}

impl Bid {
    /// The price is always recomputed from `willingness / rate`.
    pub fn new(user_id: UserId, service_id: ServiceId, willingness: Money, rate: Bandwidth, arrival_seq: u64) -> Result<Bid> {
        if willingness.is_negative() {
            return Err(Error::NegativeWillingness(user_id.0));
        }
        if rate.raw() <= 0 {
            return Err(Error::NonPositiveRate(service_id.0));
        }
        let price = UnitPrice::per_unit(willingness, rate);
        Ok(Bid { user_id, service_id, willingness, rate, price, arrival_seq })
    }
}

/// Builds the bid `(w/m, m)` for a flow.
pub fn make_bid(user: &UserFlow, catalog: &ServiceCatalog) -> Result<Bid> {
    let service = catalog
        .get(&user.service_id)
        .ok_or_else(|| Error::UnknownService(user.service_id.0.clone()))?;
    Bid::new(user.user_id.clone(), user.service_id.clone(), user.willingness, service.rate, user.arrival_seq)
}

/// A bid together with the networks it is registered at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacedBid {
    pub bid: Bid,
    /// Node indices, root first.
    pub path: Vec<usize>,
}

/// All bids of one round, registered per network. The same bid value sits in
/// exactly one bid set per tier along the owner's attachment path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidBook {
    bids: Vec<PlacedBid>,
    per_network: Vec<Vec<usize>>,
}

impl BidBook {
    pub fn new(topology: &Topology) -> Self {
        BidBook { bids: Vec::new(), per_network: vec![Vec::new(); topology.len()] }
    }

    /// Registers `bid` along `path`. Returns the bid's index.
    pub fn register(&mut self, topology: &Topology, bid: Bid, path: &[NetworkId]) -> Result<usize> {
        let resolved = topology.resolve_path(&bid.user_id.0, path)?;
        Ok(self.register_resolved(bid, resolved))
    }

    /// Registers an already-resolved path. The caller guarantees it is a
    /// valid root-first chain of `topology`.
    pub fn register_resolved(&mut self, bid: Bid, path: Vec<usize>) -> usize {
        let idx = self.bids.len();
        for n in &path {
            self.per_network[*n].push(idx);
        }
        self.bids.push(PlacedBid { bid, path });
        idx
    }

    /// Builds a book from flows, rejecting duplicate users.
    pub fn from_flows(topology: &Topology, catalog: &ServiceCatalog, flows: &[UserFlow]) -> Result<BidBook> {
        let mut seen = HashSet::new();
        let mut book = BidBook::new(topology);
        for f in flows {
            if !seen.insert(f.user_id.clone()) {
                return Err(Error::DuplicateUser(f.user_id.0.clone()));
            }
            let bid = make_bid(f, catalog)?;
            book.register(topology, bid, &f.path)?;
        }
        Ok(book)
    }

    pub fn bids(&self) -> &[PlacedBid] {
        &self.bids
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    /// Bid indices registered at network `node`.
    pub fn at(&self, node: usize) -> &[usize] {
        &self.per_network[node]
    }

    pub fn network_count(&self) -> usize {
        self.per_network.len()
    }

    pub fn position(&self, user: &UserId) -> Option<usize> {
        self.bids.iter().position(|b| &b.bid.user_id == user)
    }

    /// The book without `user`'s bids.
    pub fn without(&self, user: &UserId) -> BidBook {
        let mut out = BidBook { bids: Vec::new(), per_network: vec![Vec::new(); self.per_network.len()] };
        for pb in &self.bids {
            if &pb.bid.user_id != user {
                out.register_resolved(pb.bid.clone(), pb.path.clone());
            }
        }
        out
    }

    /// The book with one bid's willingness replaced (price recomputed).
    pub fn with_willingness(&self, idx: usize, willingness: Money) -> Result<BidBook> {
        let mut out = self.clone();
        let b = &self.bids[idx].bid;
        out.bids[idx].bid = Bid::new(b.user_id.clone(), b.service_id.clone(), willingness, b.rate, b.arrival_seq)?;
        Ok(out)
    }
}
