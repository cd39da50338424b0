//! Clarke-pivot charges by full re-execution.
//!
//! A winner's charge is the welfare the other users would obtain if the
//! winner were absent, minus the welfare they obtain with it present. This
//! reruns the whole hierarchical auction once per user and is only used to
//! audit the local losing-index charges.

use crate::auction::{resolve, AuctionOutcome, RoundOptions};
use crate::error::{Error, Result};
use crate::model::{BidBook, UserId};
use crate::topology::Topology;
use crate::units::Money;

/// Welfare of everyone except `user` in `outcome`.
pub fn welfare_of_others(outcome: &AuctionOutcome, user: &UserId) -> Money {
    outcome.winners().filter(|a| &a.user_id != user).map(|a| a.willingness).sum()
}

/// `SW_{-i}` without `user` minus `SW_{-i}` with `user`.
pub fn vcg_oracle_charge(topology: &Topology, book: &BidBook, user: &UserId, opts: &RoundOptions<'_>) -> Result<Money> {
    if book.position(user).is_none() {
        return Err(Error::UnknownUser(user.0.clone()));
    }
    let with = resolve(topology, book, opts)?;
    oracle_charge_given(topology, book, &with, user, opts)
}

/// Same as [`vcg_oracle_charge`] reusing an already computed outcome of `book`.
pub fn oracle_charge_given(
    topology: &Topology,
    book: &BidBook,
    with: &AuctionOutcome,
    user: &UserId,
    opts: &RoundOptions<'_>,
) -> Result<Money> {
    let without = resolve(topology, &book.without(user), opts)?;
    Ok(without.social_welfare - welfare_of_others(with, user))
}
