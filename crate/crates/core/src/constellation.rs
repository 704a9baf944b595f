//! Symbol constellations and bit labelling.
//!
//! A [`Constellation`] is a set of `2^b` complex points with unit average
//! energy together with a bit-pattern labelling. Bit groups index the
//! point table directly, so `points[p]` is the symbol labelled by the
//! `b`-bit pattern `p` (first bit = most significant).

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A complex symbol alphabet with a fixed bit labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    bits_per_symbol: usize,
}

impl Constellation {
    /// Build a constellation from labelled points.
    ///
    /// `points[p]` is the symbol for bit pattern `p`. The set must have
    /// `2^bits_per_symbol` distinct points and unit average energy
    /// (mean of `|point|^2` equal to 1 within `1e-12`).
    pub fn new(points: Vec<Complex64>, bits_per_symbol: usize) -> Result<Self> {
        if points.len() != 1usize << bits_per_symbol {
            return Err(Error::Config(format!(
                "constellation needs {} points for {} bits/symbol, got {}",
                1usize << bits_per_symbol,
                bits_per_symbol,
                points.len()
            )));
        }
        let mean_energy =
            points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if (mean_energy - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "constellation mean energy is {mean_energy}, expected 1"
            )));
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::Config(format!(
                        "constellation points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(Self {
            points,
            bits_per_symbol,
        })
    }

    /// Gray-labelled QPSK:
    /// `00 -> (1+j)/sqrt(2)`, `01 -> (-1+j)/sqrt(2)`,
    /// `11 -> (-1-j)/sqrt(2)`, `10 -> (1-j)/sqrt(2)`.
    pub fn qpsk() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            points: vec![
                Complex64::new(s, s),   // 00
                Complex64::new(-s, s),  // 01
                Complex64::new(s, -s),  // 10
                Complex64::new(-s, -s), // 11
            ],
            bits_per_symbol: 2,
        }
    }

    /// Number of points, `|A|`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// The labelled point table; index = bit pattern.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    /// Symbol for a bit pattern (pattern `p < 2^b`).
    pub fn point(&self, pattern: usize) -> Complex64 {
        self.points[pattern]
    }

    /// Exact reverse lookup of a constellation point.
    ///
    /// Entries must match bit-exactly; anything else is a domain error.
    pub fn index_of(&self, symbol: Complex64) -> Result<usize> {
        self.points
            .iter()
            .position(|&p| p == symbol)
            .ok_or_else(|| Error::Domain(format!("{symbol} is not a constellation point")))
    }

    /// Nearest point in Euclidean distance; ties resolve to the lowest index.
    pub fn slice(&self, value: Complex64) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (value - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Pack `bits_per_symbol` bits (first bit most significant) into a pattern.
    pub fn pattern_of_bits(&self, bits: &[u8]) -> usize {
        debug_assert_eq!(bits.len(), self.bits_per_symbol);
        bits.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize)
    }

    /// Unpack a pattern into bits (first bit most significant).
    pub fn bits_of_pattern(&self, pattern: usize, out: &mut Vec<u8>) {
        for i in (0..self.bits_per_symbol).rev() {
            out.push(((pattern >> i) & 1) as u8);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_is_unit_energy_and_distinct() {
        let c = Constellation::qpsk();
        let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert!((e - 1.0).abs() < 1e-12);
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_ne!(c.point(i), c.point(j));
            }
        }
    }

    #[test]
    fn qpsk_gray_table() {
        let c = Constellation::qpsk();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(c.point(0b00), Complex64::new(s, s));
        assert_eq!(c.point(0b01), Complex64::new(-s, s));
        assert_eq!(c.point(0b11), Complex64::new(-s, -s));
        assert_eq!(c.point(0b10), Complex64::new(s, -s));
    }

    #[test]
    fn rejects_bad_energy_and_duplicates() {
        let p = Complex64::new(1.0, 0.0);
        assert!(Constellation::new(vec![p, -p, p, -p], 2).is_err());
        assert!(Constellation::new(vec![p * 2.0, -p * 2.0], 1).is_err());
        assert!(Constellation::new(vec![p], 1).is_err());
    }

    #[test]
    fn index_of_requires_exact_point() {
        let c = Constellation::qpsk();
        assert_eq!(c.index_of(c.point(3)).unwrap(), 3);
        assert!(c.index_of(Complex64::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn slice_picks_nearest() {
        let c = Constellation::qpsk();
        assert_eq!(c.slice(Complex64::new(0.9, 0.6)), 0);
        assert_eq!(c.slice(Complex64::new(-2.0, -0.1)), 3);
        assert_eq!(c.slice(Complex64::new(-2.0, 0.1)), 1);
    }
}
