//! Fixed-precision quantities.
//!
//! Currency, bandwidth and per-unit prices are scaled integers so that sort
//! order and charge arithmetic are exact and identical on every platform.
//!
//! | quantity     | raw unit                      | scale |
//! |--------------|-------------------------------|-------|
//! | [`Money`]    | 10^-6 currency                | 6     |
//! | [`Bandwidth`]| 10^-3 bandwidth unit          | 3     |
//! | [`UnitPrice`]| 10^-9 currency per unit       | 9     |
//!
//! All conversions between them round half away from zero.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

pub const CURRENCY_SCALE: u32 = 6;
pub const BANDWIDTH_SCALE: u32 = 3;
pub const PRICE_SCALE: u32 = 9;

const CURRENCY_ONE: i64 = 10i64.pow(CURRENCY_SCALE);
const BANDWIDTH_ONE: i64 = 10i64.pow(BANDWIDTH_SCALE);
const PRICE_ONE: i64 = 10i64.pow(PRICE_SCALE);

/// `numer / denom` rounded half away from zero. `denom` must be non-zero.
pub(crate) fn div_round(numer: i128, denom: i128) -> i128 {
    debug_assert!(denom != 0);
    let (n, d) = if denom < 0 { (-numer, -denom) } else { (numer, denom) };
    if n >= 0 {
        (n + d / 2) / d
    } else {
        -((-n + d / 2) / d)
    }
}

fn clamp_i64(v: i128) -> i64 {
    v.clamp(i64::MIN as i128, i64::MAX as i128) as i64
}

fn write_scaled(f: &mut fmt::Formatter<'_>, raw: i64, scale: u32) -> fmt::Result {
    let one = 10u64.pow(scale);
    let sign = if raw < 0 { "-" } else { "" };
    let abs = raw.unsigned_abs();
    write!(f, "{sign}{}.{:0width$}", abs / one, abs % one, width = scale as usize)
}

macro_rules! scaled_newtype {
    ($name:ident, $one:expr, $scale:expr) => {
        #[derive(
            Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(i64);

        impl $name {
            pub const ZERO: $name = $name(0);

            /// Wraps a raw scaled integer.
            pub const fn from_raw(raw: i64) -> Self {
                $name(raw)
            }

            /// Whole units.
            pub const fn from_units(units: i64) -> Self {
                $name(units * $one)
            }

            pub const fn raw(self) -> i64 {
                self.0
            }

            pub fn to_f64(self) -> f64 {
                self.0 as f64 / $one as f64
            }

            /// Nearest representable value to `v` units.
            pub fn from_f64(v: f64) -> Self {
                $name((v * $one as f64).round() as i64)
            }

            pub fn is_zero(self) -> bool {
                self.0 == 0
            }

            pub fn is_negative(self) -> bool {
                self.0 < 0
            }

            pub fn saturating_add(self, rhs: Self) -> Self {
                $name(self.0.saturating_add(rhs.0))
            }

            /// Multiplies by `ppm / 10^6`, rounding half away from zero.
            pub fn scale_ppm(self, ppm: i64) -> Self {
                $name(clamp_i64(div_round(self.0 as i128 * ppm as i128, 1_000_000)))
            }
        }

        impl Add for $name {
            type Output = $name;
            fn add(self, rhs: $name) -> $name {
                $name(self.0 + rhs.0)
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: $name) {
                self.0 += rhs.0;
            }
        }

        impl Sub for $name {
            type Output = $name;
            fn sub(self, rhs: $name) -> $name {
                $name(self.0 - rhs.0)
            }
        }

        impl SubAssign for $name {
            fn sub_assign(&mut self, rhs: $name) {
                self.0 -= rhs.0;
            }
        }

        impl Neg for $name {
            type Output = $name;
            fn neg(self) -> $name {
                $name(-self.0)
            }
        }

        impl Sum for $name {
            fn sum<I: Iterator<Item = $name>>(iter: I) -> $name {
                $name(iter.map(|v| v.0).sum())
            }
        }

        impl<'a> Sum<&'a $name> for $name {
            fn sum<I: Iterator<Item = &'a $name>>(iter: I) -> $name {
                $name(iter.map(|v| v.0).sum())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_scaled(f, self.0, $scale)
            }
        }
    };
}

scaled_newtype!(Money, CURRENCY_ONE, CURRENCY_SCALE);
scaled_newtype!(Bandwidth, BANDWIDTH_ONE, BANDWIDTH_SCALE);
scaled_newtype!(UnitPrice, PRICE_ONE, PRICE_SCALE);

impl UnitPrice {
    /// `total / rate`. `rate` must be positive.
    ///
    /// `per_unit(w, m) * m` reproduces `w` to within one raw currency unit
    /// for rates up to 2000 bandwidth units.
    pub fn per_unit(total: Money, rate: Bandwidth) -> UnitPrice {
        assert!(rate.0 > 0, "per-unit price needs a positive rate");
        // price_raw = total_raw * 10^9 / 10^6 / (rate_raw / 10^3)
        let numer = total.0 as i128 * (PRICE_ONE / CURRENCY_ONE) as i128 * BANDWIDTH_ONE as i128;
        UnitPrice(clamp_i64(div_round(numer, rate.0 as i128)))
    }

    /// `1 / quantity` where `quantity` is expressed in raw units of `scale`.
    pub fn reciprocal(quantity_raw: i64, scale: u32) -> UnitPrice {
        assert!(quantity_raw > 0, "reciprocal of a non-positive quantity");
        let numer = PRICE_ONE as i128 * 10i128.pow(scale);
        UnitPrice(clamp_i64(div_round(numer, quantity_raw as i128)))
    }
}

/// Price times bandwidth yields money.
impl Mul<Bandwidth> for UnitPrice {
    type Output = Money;
    fn mul(self, rate: Bandwidth) -> Money {
        let denom = (PRICE_ONE / CURRENCY_ONE) as i128 * BANDWIDTH_ONE as i128;
        Money(clamp_i64(div_round(self.0 as i128 * rate.0 as i128, denom)))
    }
}

impl Mul<UnitPrice> for Bandwidth {
    type Output = Money;
    fn mul(self, price: UnitPrice) -> Money {
        price * self
    }
}

impl Bandwidth {
    pub fn min(self, other: Bandwidth) -> Bandwidth {
        if self <= other {
            self
        } else {
            other
        }
    }
}

/// Splits `total` into parts proportional to `weights`, summing to `total`
/// exactly. Remainders go to the largest fractional parts, earlier index
/// first on ties. All weights zero splits evenly.
pub fn split_proportional(total: Money, weights: &[i64]) -> Vec<Money> {
    if weights.is_empty() {
        return Vec::new();
    }
    let even;
    let weights = if weights.iter().all(|w| *w == 0) {
        even = vec![1i64; weights.len()];
        &even[..]
    } else {
        weights
    };
    let sum: i128 = weights.iter().map(|w| *w as i128).sum();
    let t = total.0 as i128;
    let mut parts = Vec::with_capacity(weights.len());
    let mut rems = Vec::with_capacity(weights.len());
    for &w in weights {
        let prod = t * w as i128;
        let q = prod.div_euclid(sum);
        parts.push(q);
        rems.push(prod.rem_euclid(sum));
    }
    let assigned: i128 = parts.iter().sum();
    let mut leftover = t - assigned;
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|a, b| rems[*b].cmp(&rems[*a]).then(a.cmp(b)));
    for idx in order.iter().cycle() {
        if leftover <= 0 {
            break;
        }
        parts[*idx] += 1;
        leftover -= 1;
    }
    parts.into_iter().map(|p| Money(clamp_i64(p))).collect()
}
