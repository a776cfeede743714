//! Uniform B-bit quantizer applied separately to the real and imaginary parts.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest supported resolution; 2^20 bins is far past the unquantized limit.
pub const MAX_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerSpec {
    bits: u32,
    step: f64,
    /// r_0 = −∞, ..., r_{2^B} = +∞
    thresholds: Vec<f64>,
    levels: Vec<f64>,
}

/// Bin indices (1-based) of the real and imaginary parts of one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct BinPair {
    pub re: u32,
    pub im: u32,
}

impl QuantizerSpec {
    pub fn uniform(bits: u32, step: f64) -> Result<Self> {
        if bits < 1 || bits > MAX_BITS {
            return Err(Error::InvalidQuantizer(format!(
                "bits must be in 1..={MAX_BITS}, got {bits}"
            )));
        }
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidQuantizer(format!(
                "step must be positive and finite, got {step}"
            )));
        }
        let bins = 1usize << bits;
        let half = (bins / 2) as f64;
        let mut thresholds = Vec::with_capacity(bins + 1);
        thresholds.push(f64::NEG_INFINITY);
        thresholds.extend((1..bins).map(|b| (b as f64 - half) * step));
        thresholds.push(f64::INFINITY);
        let mut levels: Vec<f64> = (1..bins).map(|b| thresholds[b] - 0.5 * step).collect();
        levels.push((half - 0.5) * step);
        Ok(Self {
            bits,
            step,
            thresholds,
            levels,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn num_bins(&self) -> usize {
        self.levels.len()
    }

    /// All 2^B + 1 thresholds including the infinite ends.
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// The 2^B − 1 finite thresholds.
    pub fn finite_thresholds(&self) -> &[f64] {
        &self.thresholds[1..self.thresholds.len() - 1]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level(&self, bin: usize) -> Result<f64> {
        self.check_bin(bin)?;
        Ok(self.levels[bin - 1])
    }

    /// Bin b holds (r_{b−1}, r_b]; a value on a threshold goes to the lower bin.
    pub fn bin_of(&self, y: f64) -> usize {
        1 + self.finite_thresholds().partition_point(|&r| r < y)
    }

    pub fn quantize_real(&self, y: f64) -> (f64, usize) {
        let bin = self.bin_of(y);
        (self.levels[bin - 1], bin)
    }

    pub fn quantize_complex(&self, y: Complex64) -> Complex64 {
        Complex64::new(self.quantize_real(y.re).0, self.quantize_real(y.im).0)
    }

    pub fn bin_pair(&self, y: Complex64) -> BinPair {
        BinPair {
            re: self.bin_of(y.re) as u32,
            im: self.bin_of(y.im) as u32,
        }
    }

    pub fn bin_bounds(&self, bin: usize) -> Result<(f64, f64)> {
        self.check_bin(bin)?;
        Ok(self.bounds_unchecked(bin))
    }

    pub(crate) fn bounds_unchecked(&self, bin: usize) -> (f64, f64) {
        (self.thresholds[bin - 1], self.thresholds[bin])
    }

    fn check_bin(&self, bin: usize) -> Result<()> {
        if bin == 0 || bin > self.num_bins() {
            Err(Error::BinOutOfRange {
                bin,
                max: self.num_bins(),
            })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_bit_is_a_sign_quantizer() {
        let q = QuantizerSpec::uniform(1, 0.5).unwrap();
        assert_eq!(q.thresholds(), &[f64::NEG_INFINITY, 0.0, f64::INFINITY]);
        assert_eq!(q.levels(), &[-0.25, 0.25]);
        assert_eq!(q.quantize_real(0.1), (0.25, 2));
    }

    #[test]
    fn two_bit_thresholds() {
        let q = QuantizerSpec::uniform(2, 0.7128).unwrap();
        assert_eq!(
            q.thresholds(),
            &[f64::NEG_INFINITY, -0.7128, 0.0, 0.7128, f64::INFINITY]
        );
        assert_eq!(q.bin_of(0.7128), 3);
        assert_eq!(q.bin_bounds(3).unwrap(), (0.0, 0.7128));
        let zero = q.quantize_complex(Complex64::new(0.0, 0.0));
        let l2 = q.level(2).unwrap();
        assert_eq!(zero, Complex64::new(l2, l2));
    }

    #[test]
    fn three_bit_layout_and_saturation() {
        let q = QuantizerSpec::uniform(3, 0.5).unwrap();
        assert_eq!(
            q.finite_thresholds(),
            &[-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5]
        );
        assert_eq!(q.quantize_real(-3.0), (q.levels()[0], 1));
        assert_eq!(q.levels()[7], 1.75);
    }

    #[test]
    fn complex_is_componentwise() {
        let q = QuantizerSpec::uniform(1, 0.5).unwrap();
        assert_eq!(
            q.quantize_complex(Complex64::new(0.1, -0.2)),
            Complex64::new(0.25, -0.25)
        );
    }

    #[test]
    fn bounds_edges_and_errors() {
        let q = QuantizerSpec::uniform(1, 1.0).unwrap();
        assert_eq!(q.bin_bounds(1).unwrap(), (f64::NEG_INFINITY, 0.0));
        let q3 = QuantizerSpec::uniform(3, 0.5).unwrap();
        assert_eq!(q3.bin_bounds(8).unwrap(), (1.5, f64::INFINITY));
        assert!(matches!(q3.bin_bounds(0), Err(Error::BinOutOfRange { .. })));
        assert!(q3.bin_bounds(9).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(QuantizerSpec::uniform(0, 0.5).is_err());
        assert!(QuantizerSpec::uniform(2, 0.0).is_err());
        assert!(QuantizerSpec::uniform(2, -1.0).is_err());
        assert!(QuantizerSpec::uniform(2, f64::NAN).is_err());
        assert!(QuantizerSpec::uniform(2, f64::INFINITY).is_err());
    }

    proptest! {
        #[test]
        fn fine_quantizer_error_bound(re in -100.0f64..100.0, im in -100.0f64..100.0) {
            let q = QuantizerSpec::uniform(16, 2f64.powi(-10)).unwrap();
            let y = Complex64::new(re / 4.0, im / 4.0);
            let e = q.quantize_complex(y) - y;
            prop_assert!(e.re.abs() <= q.step() / 2.0 + 1e-15);
            prop_assert!(e.im.abs() <= q.step() / 2.0 + 1e-15);
        }

        #[test]
        fn bin_contains_input(bits in 1u32..8, step in 0.01f64..2.0, y in -20.0f64..20.0) {
            let q = QuantizerSpec::uniform(bits, step).unwrap();
            let (level, b) = q.quantize_real(y);
            let (lo, hi) = q.bin_bounds(b).unwrap();
            prop_assert!(lo < y && y <= hi);
            prop_assert_eq!(level, q.levels()[b - 1]);
        }

        #[test]
        fn monotone_and_idempotent(bits in 1u32..8, step in 0.01f64..2.0, a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let q = QuantizerSpec::uniform(bits, step).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(q.bin_of(lo) <= q.bin_of(hi));
            for bin in 1..=q.num_bins() {
                prop_assert_eq!(q.bin_of(q.levels()[bin - 1]), bin);
            }
        }
    }
}
