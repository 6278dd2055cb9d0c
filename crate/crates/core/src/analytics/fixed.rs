use std::fmt;
use std::ops::Add;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative decimal with exactly two fractional digits, stored as an
/// integer count of hundredths so that sums of rounded figures stay exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed2(u64);

impl Fixed2 {
    pub const ZERO: Fixed2 = Fixed2(0);

    pub fn from_hundredths(h: u64) -> Self {
        Fixed2(h)
    }

    pub fn hundredths(self) -> u64 {
        self.0
    }

    /// `num / den` rounded half-up to two decimals. `None` when `den` is 0.
    pub fn ratio(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let (num, den) = (num as u128 * 100, den as u128);
        Some(Fixed2(((2 * num + den) / (2 * den)) as u64))
    }

    /// `100 * num / den`, rounded half-up to two decimals.
    pub fn percent(num: u64, den: u64) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let (num, den) = (num as u128 * 10_000, den as u128);
        Some(Fixed2(((2 * num + den) / (2 * den)) as u64))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl Add for Fixed2 {
    type Output = Fixed2;

    fn add(self, rhs: Fixed2) -> Fixed2 {
        Fixed2(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Fixed2 {
    fn sum<I: Iterator<Item = Fixed2>>(iter: I) -> Fixed2 {
        iter.fold(Fixed2::ZERO, Add::add)
    }
}

impl fmt::Display for Fixed2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = format!("{}.{:02}", self.0 / 100, self.0 % 100);
        f.pad(&s)
    }
}

impl Serialize for Fixed2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Fixed2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if !v.is_finite() || v < 0.0 {
            return Err(serde::de::Error::custom("expected a non-negative number"));
        }
        Ok(Fixed2((v * 100.0).round() as u64))
    }
}
