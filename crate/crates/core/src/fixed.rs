//! Fixed-point number emulation: signed two's-complement values with a given
//! number of integer bits (including sign) and fraction bits, round-to-nearest
//! -even and saturation on overflow. Values are carried as scaled `i64` raws;
//! products use an `i128` double-width intermediate before re-quantization.

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct FixedPointFormat {
    /// Integer bits, including the sign bit.
    pub integer_bits: u32,
    /// Fraction bits (`N_frac`).
    pub fraction_bits: u32,
}

impl FixedPointFormat {
    pub fn new(integer_bits: u32, fraction_bits: u32) -> Result<Self> {
        if integer_bits < 2 || fraction_bits < 1 || integer_bits + fraction_bits > 64 {
            return Err(Error::Domain(format!(
                "invalid fixed-point format Q{integer_bits}.{fraction_bits}"
            )));
        }
        Ok(Self { integer_bits, fraction_bits })
    }

    /// Smallest representable increment, `2^-N_frac`.
    pub fn resolution(&self) -> f64 {
        (self.fraction_bits as f64).exp2().recip()
    }

    /// Saturation bound `2^(integer_bits-1) - 2^-N_frac`; the range is
    /// symmetric, `[-max_value, max_value]`.
    pub fn max_value(&self) -> f64 {
        ((self.integer_bits - 1) as f64).exp2() - self.resolution()
    }

    /// Largest raw magnitude, `2^(integer_bits-1+fraction_bits) - 1`.
    pub fn max_raw(&self) -> i64 {
        (1i64 << (self.integer_bits - 1 + self.fraction_bits)) - 1
    }

    /// Nearest representable raw value, ties to even, saturating.
    pub fn to_raw(&self, x: f64) -> i64 {
        let scaled = x * (self.fraction_bits as f64).exp2();
        let max = self.max_raw();
        if !scaled.is_finite() {
            return if scaled.is_sign_negative() { -max } else { max };
        }
        let r = scaled.round_ties_even();
        if r >= max as f64 {
            max
        } else if r <= -max as f64 {
            -max
        } else {
            r as i64
        }
    }

    pub fn from_raw(&self, raw: i64) -> f64 {
        raw as f64 * self.resolution()
    }

    /// Quantizes a real value to the format.
    pub fn quantize(&self, x: f64) -> f64 {
        self.from_raw(self.to_raw(x))
    }

    /// Clamps a double-width intermediate (already at this format's scale)
    /// into range, reporting whether saturation occurred.
    pub fn saturate(&self, v: i128) -> (i64, bool) {
        let max = self.max_raw() as i128;
        if v > max {
            (max as i64, true)
        } else if v < -max {
            (-max as i64, true)
        } else {
            (v as i64, false)
        }
    }
}

/// Divides by `2^shift` with round-to-nearest-even.
pub fn rshift_round_even(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    // Arithmetic shift is floor division by 2^shift, and masking gives the
    // matching non-negative remainder — no i128 division needed.
    let q = v >> shift;
    let r = v & ((1i128 << shift) - 1);
    let half = 1i128 << (shift - 1);
    if r > half || (r == half && (q & 1) != 0) {
        q + 1
    } else {
        q
    }
}

/// Single-width variant of [`rshift_round_even`] for callers that have
/// already proven the intermediate fits an `i64`.
#[inline]
pub fn rshift_round_even_i64(v: i64, shift: u32) -> i64 {
    if shift == 0 {
        return v;
    }
    let q = v >> shift;
    let r = v & ((1i64 << shift) - 1);
    let half = 1i64 << (shift - 1);
    // Branchless so the loops around it stay vectorizable.
    let inc = ((r > half) as i64) | (((r == half) as i64) & q & 1);
    q.wrapping_add(inc)
}

/// Free-function form of [`FixedPointFormat::quantize`].
pub fn quantize(x: f64, fmt: FixedPointFormat) -> f64 {
    fmt.quantize(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rounds_half_to_even_at_coarse_resolution() {
        let fmt = FixedPointFormat::new(4, 1).unwrap();
        // 0.75 is halfway between 0.5 and 1.0; 1.0 has the even raw (2).
        assert_eq!(fmt.quantize(0.75), 1.0);
        assert_eq!(fmt.quantize(0.25), 0.0);
        assert_eq!(fmt.quantize(-0.75), -1.0);
    }

    #[test]
    fn representable_values_are_fixed_points() {
        let fmt = FixedPointFormat::new(4, 8).unwrap();
        for k in [-100i64, -3, 0, 7, 512] {
            let x = k as f64 * fmt.resolution();
            assert_eq!(fmt.quantize(x), x);
        }
    }

    #[test]
    fn saturates_at_format_bound() {
        let fmt = FixedPointFormat::new(4, 8).unwrap();
        assert_eq!(fmt.quantize(1000.0), 8.0 - 1.0 / 256.0);
        assert_eq!(fmt.quantize(1000.0), 7.99609375);
        assert_eq!(fmt.quantize(-1000.0), -7.99609375);
    }

    #[test]
    fn rejects_bad_formats() {
        assert!(FixedPointFormat::new(1, 8).is_err());
        assert!(FixedPointFormat::new(4, 0).is_err());
        assert!(FixedPointFormat::new(40, 30).is_err());
    }

    #[test]
    fn integer_rshift_rounds_half_even() {
        assert_eq!(rshift_round_even(5, 1), 2); // 2.5 -> 2
        assert_eq!(rshift_round_even(7, 1), 4); // 3.5 -> 4
        assert_eq!(rshift_round_even(-5, 1), -2);
        assert_eq!(rshift_round_even(-7, 1), -4);
        assert_eq!(rshift_round_even(12, 2), 3);
    }

    proptest! {
        #[test]
        fn single_width_rshift_matches_double_width(v in -(1i64 << 60)..(1i64 << 60), shift in 1u32..40) {
            prop_assert_eq!(
                rshift_round_even(v as i128, shift),
                rshift_round_even_i64(v, shift) as i128
            );
        }

        #[test]
        fn quantize_is_idempotent(x in -1e6f64..1e6, int_bits in 2u32..16, frac in 1u32..30) {
            let fmt = FixedPointFormat::new(int_bits, frac).unwrap();
            let q = fmt.quantize(x);
            prop_assert_eq!(fmt.quantize(q), q);
            prop_assert!(q.abs() <= fmt.max_value());
        }

        #[test]
        fn quantization_error_within_half_resolution(x in -100.0f64..100.0, frac in 1u32..20) {
            let fmt = FixedPointFormat::new(10, frac).unwrap();
            let q = fmt.quantize(x);
            if x.abs() <= fmt.max_value() {
                prop_assert!((q - x).abs() <= fmt.resolution() / 2.0 + 1e-15);
            }
        }
    }
}
