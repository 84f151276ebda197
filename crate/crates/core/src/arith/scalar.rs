use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// A value that is either an exact signed 128-bit integer or a binary float.
///
/// When the value is exact, `approx` is the exact value rounded to the nearest
/// `f64`. Exact arithmetic is checked: overflow surfaces as [`Error::Overflow`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalarValue {
    exact: Option<i128>,
    approx: f64,
}

impl ScalarValue {
    pub const ZERO: ScalarValue = ScalarValue {
        exact: Some(0),
        approx: 0.0,
    };
    pub const ONE: ScalarValue = ScalarValue {
        exact: Some(1),
        approx: 1.0,
    };

    pub fn exact(v: i128) -> Self {
        ScalarValue {
            exact: Some(v),
            approx: v as f64,
        }
    }

    pub fn approx(v: f64) -> Self {
        ScalarValue {
            exact: None,
            approx: v,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact_value(&self) -> Option<i128> {
        self.exact
    }

    pub fn to_f64(&self) -> f64 {
        self.approx
    }

    pub fn is_zero(&self) -> bool {
        match self.exact {
            Some(v) => v == 0,
            None => self.approx == 0.0,
        }
    }

    /// Drops exactness, keeping the float value.
    pub fn into_approx(self) -> Self {
        ScalarValue::approx(self.approx)
    }

    pub fn checked_add(self, rhs: Self) -> Result<Self> {
        match (self.exact, rhs.exact) {
            (Some(a), Some(b)) => a
                .checked_add(b)
                .map(ScalarValue::exact)
                .ok_or(Error::Overflow("exact addition")),
            _ => Ok(ScalarValue::approx(self.approx + rhs.approx)),
        }
    }

    pub fn checked_sub(self, rhs: Self) -> Result<Self> {
        match (self.exact, rhs.exact) {
            (Some(a), Some(b)) => a
                .checked_sub(b)
                .map(ScalarValue::exact)
                .ok_or(Error::Overflow("exact subtraction")),
            _ => Ok(ScalarValue::approx(self.approx - rhs.approx)),
        }
    }

    pub fn checked_mul(self, rhs: Self) -> Result<Self> {
        match (self.exact, rhs.exact) {
            (Some(a), Some(b)) => a
                .checked_mul(b)
                .map(ScalarValue::exact)
                .ok_or(Error::Overflow("exact multiplication")),
            _ => Ok(ScalarValue::approx(self.approx * rhs.approx)),
        }
    }

    pub fn checked_mul_int(self, m: i128) -> Result<Self> {
        self.checked_mul(ScalarValue::exact(m))
    }

    pub fn neg(self) -> Self {
        match self.exact {
            // i128::MIN never arises from the engines; saturate rather than wrap.
            Some(v) => ScalarValue::exact(v.checked_neg().unwrap_or(i128::MAX)),
            None => ScalarValue::approx(-self.approx),
        }
    }

    /// Exact equality when both sides are exact, otherwise relative closeness.
    pub fn agrees_with(&self, other: &Self, rel_tol: f64) -> bool {
        match (self.exact, other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => {
                let (a, b) = (self.approx, other.approx);
                let scale = a.abs().max(b.abs()).max(1.0);
                (a - b).abs() <= rel_tol * scale
            }
        }
    }
}

impl fmt::Display for ScalarValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(v) => write!(f, "{v}"),
            None => write!(f, "{}", self.approx),
        }
    }
}

/// Neumaier-compensated float summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Sums [`ScalarValue`]s, staying exact while every summand is exact.
///
/// Exact and inexact parts are kept apart so that a single inexact term does
/// not throw away the precision of a large exact partial sum.
#[derive(Clone, Copy, Debug)]
pub struct Accumulator {
    exact: i128,
    float: KahanSum,
    all_exact: bool,
}

impl Default for Accumulator {
    fn default() -> Self {
        Accumulator {
            exact: 0,
            float: KahanSum::new(),
            all_exact: true,
        }
    }
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: ScalarValue) -> Result<()> {
        match v.exact {
            Some(e) => {
                self.exact = self
                    .exact
                    .checked_add(e)
                    .ok_or(Error::Overflow("exact accumulation"))?;
            }
            None => {
                self.all_exact = false;
                self.float.add(v.approx);
            }
        }
        Ok(())
    }

    pub fn add_exact(&mut self, v: i128) -> Result<()> {
        self.exact = self
            .exact
            .checked_add(v)
            .ok_or(Error::Overflow("exact accumulation"))?;
        Ok(())
    }

    pub fn add_float(&mut self, v: f64) {
        self.all_exact = false;
        self.float.add(v);
    }

    pub fn finish(&self) -> ScalarValue {
        if self.all_exact {
            ScalarValue::exact(self.exact)
        } else {
            ScalarValue::approx(self.exact as f64 + self.float.value())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_overflow_is_reported() {
        let big = ScalarValue::exact(i128::MAX);
        assert_eq!(
            big.checked_add(ScalarValue::ONE),
            Err(Error::Overflow("exact addition"))
        );
        assert!(big.checked_mul_int(2).is_err());
    }

    #[test]
    fn mixing_drops_exactness() {
        let v = ScalarValue::exact(3)
            .checked_add(ScalarValue::approx(0.5))
            .unwrap();
        assert!(!v.is_exact());
        assert_eq!(v.to_f64(), 3.5);
    }

    #[test]
    fn approx_is_nearest_rounding_of_exact() {
        let v = ScalarValue::exact((1i128 << 60) + 1);
        assert_eq!(v.to_f64(), ((1i128 << 60) + 1) as f64);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let mut acc = KahanSum::new();
        acc.add(1.0);
        for _ in 0..1_000_000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1e-10)).abs() < 1e-15);
    }

    #[test]
    fn accumulator_keeps_exact_part() {
        let mut acc = Accumulator::new();
        acc.add(ScalarValue::exact(1 << 62)).unwrap();
        acc.add(ScalarValue::exact(1)).unwrap();
        assert_eq!(acc.finish().exact_value(), Some((1 << 62) + 1));
        acc.add(ScalarValue::approx(0.25)).unwrap();
        assert!(!acc.finish().is_exact());
    }
}
