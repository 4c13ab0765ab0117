//! Fixed-point values: `raw / 2^f` with `|raw| < 2^(k-1)`.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_F: u32 = 16;
pub const DEFAULT_K: u32 = 31;

#[derive(Debug, Clone, Copy, PartialEq, Error, Serialize, Deserialize)]
#[error("{value} does not fit sfix(f={f}, k={k})")]
pub struct OverflowError {
    pub value: f64,
    pub f: u32,
    pub k: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SFixValue {
    pub raw: i64,
    pub f: u32,
    pub k: u32,
}

/// Quantizes `x`, rounding half away from zero.
pub fn sfix_from_real(x: f64, f: u32, k: u32) -> Result<SFixValue, OverflowError> {
    let overflow = OverflowError { value: x, f, k };
    if !x.is_finite() || x.abs() >= 2f64.powi((k - 1 - f) as i32) {
        return Err(overflow);
    }
    SFixValue::from_raw((x * 2f64.powi(f as i32)).round() as i128, f, k).map_err(|_| overflow)
}

// Fallible, so not the operator traits.
#[allow(clippy::should_implement_trait)]
impl SFixValue {
    /// Checks the range of a raw value.
    pub fn from_raw(raw: i128, f: u32, k: u32) -> Result<Self, OverflowError> {
        let bound = 1i128 << (k - 1);
        if raw <= -bound || raw >= bound {
            return Err(OverflowError {
                value: raw as f64 / 2f64.powi(f as i32),
                f,
                k,
            });
        }
        Ok(Self { raw: raw as i64, f, k })
    }

    pub fn from_int(v: i128, f: u32, k: u32) -> Result<Self, OverflowError> {
        let raw = v.checked_mul(1i128 << f).ok_or(OverflowError { value: v as f64, f, k })?;
        Self::from_raw(raw, f, k)
    }

    pub fn to_f64(self) -> f64 {
        self.raw as f64 / 2f64.powi(self.f as i32)
    }

    fn same(self, raw: i128) -> Result<Self, OverflowError> {
        Self::from_raw(raw, self.f, self.k)
    }

    /// Exact.
    pub fn add(self, o: Self) -> Result<Self, OverflowError> {
        self.same(self.raw as i128 + o.raw as i128)
    }

    /// Exact.
    pub fn sub(self, o: Self) -> Result<Self, OverflowError> {
        self.same(self.raw as i128 - o.raw as i128)
    }

    /// Full product truncated toward negative infinity.
    pub fn mul(self, o: Self) -> Result<Self, OverflowError> {
        self.same((self.raw as i128 * o.raw as i128) >> self.f)
    }

    /// Quotient truncated toward negative infinity; `None` on a zero divisor.
    pub fn div(self, o: Self) -> Option<Result<Self, OverflowError>> {
        if o.raw == 0 {
            return None;
        }
        let n = (self.raw as i128) << self.f;
        Some(self.same(Integer::div_floor(&n, &(o.raw as i128))))
    }

    pub fn neg(self) -> Self {
        Self { raw: -self.raw, ..self }
    }
}

impl fmt::Display for SFixValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(x: f64) -> SFixValue {
        sfix_from_real(x, DEFAULT_F, DEFAULT_K).unwrap()
    }

    #[test]
    fn quantization_examples() {
        assert_eq!(q(0.5).raw, 32768);
        assert_eq!(q(0.1).raw, 6554);
        assert_eq!(q(-1.0).raw, -65536);
        // ties round away from zero
        assert_eq!(q(1.5 / 65536.0).raw, 2);
        assert_eq!(q(-1.5 / 65536.0).raw, -2);
    }

    #[test]
    fn range_is_enforced() {
        assert!(sfix_from_real(16383.99, 16, 31).is_ok());
        assert!(sfix_from_real(16384.0, 16, 31).is_err());
        assert!(sfix_from_real(-16384.0, 16, 31).is_err());
        assert!(sfix_from_real(f64::NAN, 16, 31).is_err());
        assert!(q(100.0).mul(q(200.0)).is_err());
    }

    #[test]
    fn multiplication_floors() {
        let tiny = SFixValue::from_raw(1, 16, 31).unwrap();
        assert_eq!(tiny.mul(q(0.5)).unwrap().raw, 0);
        assert_eq!(tiny.neg().mul(q(0.5)).unwrap().raw, -1);
        assert_eq!(q(1.5).mul(q(-2.0)).unwrap(), q(-3.0));
    }

    #[test]
    fn division_floors_and_rejects_zero() {
        assert_eq!(q(1.0).div(q(3.0)).unwrap().unwrap().raw, 21845);
        assert_eq!(q(-1.0).div(q(3.0)).unwrap().unwrap().raw, -21846);
        assert_eq!(q(1.0).div(q(-3.0)).unwrap().unwrap().raw, -21846);
        assert!(q(1.0).div(q(0.0)).is_none());
    }

    proptest! {
        #[test]
        fn add_sub_are_exact(a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000) {
            let x = SFixValue::from_raw(a as i128, 16, 31).unwrap();
            let y = SFixValue::from_raw(b as i128, 16, 31).unwrap();
            prop_assert_eq!(x.add(y).unwrap().raw, a + b);
            prop_assert_eq!(x.sub(y).unwrap().raw, a - b);
        }

        #[test]
        fn product_matches_floor_oracle(a in -3_000_000i64..3_000_000, b in -3_000_000i64..3_000_000) {
            let x = SFixValue::from_raw(a as i128, 16, 31).unwrap();
            let y = SFixValue::from_raw(b as i128, 16, 31).unwrap();
            let exact = (a as f64) * (b as f64) / 65536.0;
            if let Ok(p) = x.mul(y) {
                prop_assert_eq!(p.raw as f64, exact.floor());
            }
        }

        #[test]
        fn quantization_error_is_half_ulp(x in -16000.0f64..16000.0) {
            let v = q(x);
            prop_assert!((v.to_f64() - x).abs() <= 0.5 / 65536.0 + 1e-12);
        }
    }
}
