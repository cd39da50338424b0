//! Hierarchical sealed-bid auctions for the downlink bandwidth of a
//! multi-tier wireless access network.
//!
//! - [`topology`] and [`model`]: networks, services, flows and bids.
//! - [`auction`]: tier-by-tier winner determination with local VCG charges,
//!   plus a re-execution oracle in [`auction::oracle`].
//! - [`multicast`]: group bids for users sharing a service.
//! - [`coop`]: weight policies that turn the auction into a scheduler.
//! - [`sim`]: a seeded slot-by-slot simulator with bidding agents.

pub mod auction;
pub mod coop;
pub mod error;
pub mod instances;
pub mod model;
pub mod multicast;
pub mod sim;
pub mod topology;
pub mod units;

pub use auction::{
    compute_charge_local, determine_winners, run_hierarchical_auction, AuctionOutcome, EngineConfig, WinnerRule,
};
pub use error::{Error, Result};
pub use model::{make_bid, Bid, BidBook, ServiceCatalog, ServiceClass, ServiceId, UserFlow, UserId};
pub use topology::{NetworkId, NetworkNode, Topology};
pub use units::{Bandwidth, Money, UnitPrice};
