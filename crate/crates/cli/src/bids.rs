//! Bids files for single auctions and the outcome report written for them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tierbid_core::auction::{resolve, AuctionOutcome, Claimant, Pricing, RoundOptions};
use tierbid_core::units::{BANDWIDTH_SCALE, CURRENCY_SCALE};
use tierbid_core::{
    Bandwidth, BidBook, EngineConfig, Money, NetworkId, NetworkNode, ServiceCatalog, ServiceClass, ServiceId, Topology,
    UnitPrice, UserFlow, UserId, WinnerRule,
};

use crate::error::{CliError, CliResult};
use crate::scenario::{build_network, check_scales, EngineSection, ModeKind, MulticastSection, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidRecord {
    pub user: UserId,
    pub service: ServiceId,
    /// Scaled by `currency_scale`.
    pub willingness: Money,
    /// Network ids, tier 1 first.
    pub path: Vec<NetworkId>,
    /// Defaults to the record's position in the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival_seq: Option<u64>,
}

fn auction_mode() -> ModeKind {
    ModeKind::Auction
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BidsFile {
    pub currency_scale: u32,
    pub bandwidth_scale: u32,
    #[serde(default = "auction_mode")]
    pub mode: ModeKind,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default)]
    pub multicast: MulticastSection,
    /// Scenario file whose networks and services apply, relative to this file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub networks: Vec<NetworkNode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub services: Vec<ServiceClass>,
    #[serde(default)]
    pub bids: Vec<BidRecord>,
}

pub struct ResolvedBids {
    pub topology: Topology,
    pub catalog: ServiceCatalog,
    pub book: BidBook,
    pub mode: ModeKind,
    pub thresholds: Vec<usize>,
    pub config: EngineConfig,
}

impl ResolvedBids {
    pub fn options(&self) -> RoundOptions<'_> {
        let multicast = (self.mode == ModeKind::Multicast).then_some(self.thresholds.as_slice());
        RoundOptions { config: self.config, pricing: Pricing::Vcg, multicast, capacities: None }
    }

    pub fn run(&self) -> CliResult<AuctionOutcome> {
        let outcome = resolve(&self.topology, &self.book, &self.options())?;
        outcome.check_invariants(&self.book).map_err(CliError::Invariant)?;
        Ok(outcome)
    }
}

impl BidsFile {
    pub fn parse(text: &str) -> CliResult<BidsFile> {
        toml::from_str(text).map_err(|e| CliError::Validation(format!("bids parse error: {e}")))
    }

    pub fn load(path: &Path) -> CliResult<(BidsFile, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let file = Self::parse(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Ok((file, path.parent().map(Path::to_path_buf).unwrap_or_default()))
    }

    pub fn emit(&self) -> String {
        toml::to_string(self).expect("bids files always serialize")
    }

    /// Builds the bid book. `base` anchors a relative `topology` reference.
    pub fn resolve(&self, base: &Path) -> CliResult<ResolvedBids> {
        check_scales(self.currency_scale, self.bandwidth_scale)?;
        let (topology, catalog) = match &self.topology {
            Some(p) => {
                if !self.networks.is_empty() || !self.services.is_empty() {
                    return Err(CliError::Validation(
                        "give either a topology reference or inline networks and services, not both".into(),
                    ));
                }
                let scenario = ScenarioSpec::load(&base.join(p))?;
                build_network(&scenario.networks, &scenario.services)?
            }
            None => build_network(&self.networks, &self.services)?,
        };
        if self.mode == ModeKind::Cooperative {
            return Err(CliError::Validation("bids files support the auction and multicast modes".into()));
        }
        if self.mode == ModeKind::Multicast
            && (self.multicast.thresholds.is_empty()
                || self.multicast.thresholds.contains(&0)
                || self.multicast.thresholds.len() > topology.depth())
        {
            return Err(CliError::section("multicast", "need between 1 and L positive thresholds"));
        }
        let flows: Vec<UserFlow> = self
            .bids
            .iter()
            .enumerate()
            .map(|(i, b)| UserFlow {
                user_id: b.user.clone(),
                service_id: b.service.clone(),
                willingness: b.willingness,
                path: b.path.clone(),
                arrival_seq: b.arrival_seq.unwrap_or(i as u64),
            })
            .collect();
        let book = BidBook::from_flows(&topology, &catalog, &flows).map_err(|e| CliError::section("bids", e))?;
        let config = EngineConfig { winner_rule: self.engine.winner_rule, parallel: self.engine.parallel };
        Ok(ResolvedBids { topology, catalog, book, mode: self.mode, thresholds: self.multicast.thresholds.clone(), config })
    }

    /// A self-contained bids file reproducing `book` on `topology`.
    pub fn from_book(topology: &Topology, book: &BidBook, winner_rule: WinnerRule) -> BidsFile {
        let mut services: Vec<ServiceClass> = Vec::new();
        for pb in book.bids() {
            if !services.iter().any(|s| s.id == pb.bid.service_id) {
                services.push(ServiceClass::new(pb.bid.service_id.0.clone(), pb.bid.rate));
            }
        }
        BidsFile {
            currency_scale: CURRENCY_SCALE,
            bandwidth_scale: BANDWIDTH_SCALE,
            mode: ModeKind::Auction,
            engine: EngineSection { winner_rule, parallel: false },
            multicast: MulticastSection::default(),
            topology: None,
            networks: topology.nodes().to_vec(),
            services,
            bids: book
                .bids()
                .iter()
                .map(|pb| BidRecord {
                    user: pb.bid.user_id.clone(),
                    service: pb.bid.service_id.clone(),
                    willingness: pb.bid.willingness,
                    path: topology.ids(&pb.path),
                    arrival_seq: Some(pb.bid.arrival_seq),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClaimRow {
    /// A user id, or a group id for multicast group bids.
    pub claimant: String,
    pub price: UnitPrice,
    pub rate: Bandwidth,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChargeRow {
    pub rate: Bandwidth,
    pub charge: Money,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NetworkRow {
    pub network: NetworkId,
    pub tier: u32,
    pub capacity: Bandwidth,
    pub offered: Bandwidth,
    pub served: Bandwidth,
    pub residual: Bandwidth,
    pub winners: Vec<ClaimRow>,
    pub losing_index: Vec<ClaimRow>,
    pub charges: Vec<ChargeRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssignmentRow {
    pub user: UserId,
    pub willingness: Money,
    pub network: Option<NetworkId>,
    pub tier: Option<u32>,
    pub charge: Money,
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupRow {
    pub group_id: String,
    pub network: NetworkId,
    pub service: ServiceId,
    pub members: Vec<UserId>,
    pub price: UnitPrice,
    pub rate: Bandwidth,
    pub won: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutcomeReport {
    pub currency_scale: u32,
    pub bandwidth_scale: u32,
    pub price_scale: u32,
    pub input_hash: String,
    pub mode: ModeKind,
    pub winner_rule: WinnerRule,
    pub social_welfare: Money,
    pub revenue: Money,
    pub winners: Vec<UserId>,
    pub assignments: Vec<AssignmentRow>,
    pub networks: Vec<NetworkRow>,
    pub groups: Vec<GroupRow>,
}

impl OutcomeReport {
    pub fn new(resolved: &ResolvedBids, outcome: &AuctionOutcome, input_hash: String) -> Self {
        let bids = resolved.book.bids();
        let name = |c: &Claimant| match c {
            Claimant::User(i) => bids[*i].bid.user_id.0.clone(),
            Claimant::Group(g) => outcome.groups[*g].group_id.clone(),
        };
        let rows = |entries: &[tierbid_core::auction::Entry]| {
            entries.iter().map(|e| ClaimRow { claimant: name(&e.claimant), price: e.price, rate: e.rate }).collect()
        };
        OutcomeReport {
            currency_scale: CURRENCY_SCALE,
            bandwidth_scale: BANDWIDTH_SCALE,
            price_scale: tierbid_core::units::PRICE_SCALE,
            input_hash,
            mode: resolved.mode,
            winner_rule: outcome.winner_rule,
            social_welfare: outcome.social_welfare,
            revenue: outcome.revenue,
            winners: outcome.winners().map(|a| a.user_id.clone()).collect(),
            assignments: outcome
                .assignments
                .iter()
                .map(|a| AssignmentRow {
                    user: a.user_id.clone(),
                    willingness: a.willingness,
                    network: a.network.clone(),
                    tier: a.tier,
                    charge: a.charge,
                    group: a.group.map(|g| outcome.groups[g].group_id.clone()),
                })
                .collect(),
            networks: outcome
                .networks
                .iter()
                .map(|s| NetworkRow {
                    network: s.network.clone(),
                    tier: s.tier,
                    capacity: s.capacity,
                    offered: s.offered_rate(),
                    served: s.served_rate(),
                    residual: s.residual,
                    winners: rows(&s.winners),
                    losing_index: rows(&s.losing),
                    charges: s.charges.iter().map(|(r, c)| ChargeRow { rate: *r, charge: *c }).collect(),
                })
                .collect(),
            groups: outcome
                .groups
                .iter()
                .map(|g| GroupRow {
                    group_id: g.group_id.clone(),
                    network: g.network.clone(),
                    service: g.service_id.clone(),
                    members: g.member_ids.clone(),
                    price: g.price,
                    rate: g.rate,
                    won: g.won,
                })
                .collect(),
        }
    }
}
