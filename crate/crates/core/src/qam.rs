//! Gray-mapped 4-QAM and 16-QAM with unit average power.
//!
//! Bits are `u8` values 0/1, most significant bit first within each label.
//! 4-QAM labels `00, 01, 11, 10` go counterclockwise starting from
//! `(1 + j)/sqrt(2)`. 16-QAM uses the first two label bits for the in-phase
//! 4-PAM level and the last two for quadrature, each Gray coded as
//! `00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3` (scaled by `1/sqrt(10)`).

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::frame::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QamOrder {
    Qam4,
    Qam16,
}

impl QamOrder {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            4 => Ok(QamOrder::Qam4),
            16 => Ok(QamOrder::Qam16),
            o => Err(Error::Config(format!("unsupported QAM order {o}"))),
        }
    }

    pub fn order(self) -> usize {
        match self {
            QamOrder::Qam4 => 4,
            QamOrder::Qam16 => 16,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            QamOrder::Qam4 => 2,
            QamOrder::Qam16 => 4,
        }
    }
}

/// Constellation points indexed by label value.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: QamOrder,
    points: Vec<C64>,
}

fn pam4_gray(bits: usize) -> f64 {
    match bits & 0b11 {
        0b00 => -3.0,
        0b01 => -1.0,
        0b11 => 1.0,
        _ => 3.0,
    }
}

impl Constellation {
    pub fn new(order: QamOrder) -> Self {
        let points = match order {
            QamOrder::Qam4 => vec![
                C64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                C64::new(-FRAC_1_SQRT_2, FRAC_1_SQRT_2),
                C64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
                C64::new(-FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
            ],
            QamOrder::Qam16 => {
                let scale = 1.0 / 10f64.sqrt();
                (0..16)
                    .map(|label| C64::new(pam4_gray(label >> 2), pam4_gray(label)) * scale)
                    .collect()
            }
        };
        Self { order, points }
    }

    pub fn order(&self) -> QamOrder {
        self.order
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.bits_per_symbol()
    }

    /// Label of the nearest point; ties go to the lower label.
    #[inline]
    pub fn nearest(&self, y: C64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (label, p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = label;
            }
        }
        best
    }

    pub fn modulate(&self, bits: &[u8]) -> Result<Vec<C64>> {
        let bps = self.bits_per_symbol();
        if !bits.len().is_multiple_of(bps) {
            return Err(Error::Size {
                what: "bit count (multiple of bits per symbol)",
                expected: bits.len().div_ceil(bps) * bps,
                got: bits.len(),
            });
        }
        Ok(bits
            .chunks_exact(bps)
            .map(|chunk| {
                let label = chunk
                    .iter()
                    .fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
                self.points[label]
            })
            .collect())
    }

    pub fn demodulate(&self, symbols: &[C64]) -> Vec<u8> {
        let bps = self.bits_per_symbol();
        let mut bits = Vec::with_capacity(symbols.len() * bps);
        for &y in symbols {
            let label = self.nearest(y);
            for shift in (0..bps).rev() {
                bits.push(((label >> shift) & 1) as u8);
            }
        }
        bits
    }
}

pub fn qam_modulate(bits: &[u8], order: QamOrder) -> Result<Vec<C64>> {
    Constellation::new(order).modulate(bits)
}

pub fn qam_demodulate(symbols: &[C64], order: QamOrder) -> Vec<u8> {
    Constellation::new(order).demodulate(symbols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn label_bits(label: usize, bps: usize) -> Vec<u8> {
        (0..bps).rev().map(|s| ((label >> s) & 1) as u8).collect()
    }

    #[test]
    fn qam4_first_label_is_first_quadrant() {
        let s = qam_modulate(&[0, 0], QamOrder::Qam4).unwrap();
        assert!((s[0] - C64::new(1.0, 1.0) / 2f64.sqrt()).norm() < 1e-15);
    }

    #[test]
    fn qam4_labels_go_counterclockwise() {
        let s = qam_modulate(&[0, 0, 0, 1, 1, 1, 1, 0], QamOrder::Qam4).unwrap();
        let angles: Vec<f64> = s.iter().map(|z| z.arg().to_degrees()).collect();
        assert!((angles[0] - 45.0).abs() < 1e-9);
        assert!((angles[1] - 135.0).abs() < 1e-9);
        assert!((angles[2] + 135.0).abs() < 1e-9);
        assert!((angles[3] + 45.0).abs() < 1e-9);
        let power: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / 4.0;
        assert!((power - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_average_power() {
        for order in [QamOrder::Qam4, QamOrder::Qam16] {
            let c = Constellation::new(order);
            let p: f64 =
                c.points().iter().map(|z| z.norm_sqr()).sum::<f64>() / c.points().len() as f64;
            assert!((p - 1.0).abs() < 1e-12, "{order:?}");
        }
    }

    #[test]
    fn gray_adjacency() {
        for order in [QamOrder::Qam4, QamOrder::Qam16] {
            let c = Constellation::new(order);
            let pts = c.points();
            let dmin = pts
                .iter()
                .enumerate()
                .flat_map(|(i, a)| pts[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            for (i, a) in pts.iter().enumerate() {
                for (j, b) in pts.iter().enumerate() {
                    if i != j && ((a - b).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "{order:?} labels {i} {j}");
                    }
                }
            }
        }
    }

    #[test]
    fn qam16_labels_round_trip() {
        let c = Constellation::new(QamOrder::Qam16);
        for label in 0..16 {
            let bits = label_bits(label, 4);
            let s = c.modulate(&bits).unwrap();
            assert_eq!(c.demodulate(&s), bits);
        }
    }

    #[test]
    fn origin_ties_to_lowest_label() {
        assert_eq!(qam_demodulate(&[C64::new(0.0, 0.0)], QamOrder::Qam4), vec![0, 0]);
        // the four inner 16-QAM points are equidistant; 0101 (-1-j) is lowest
        assert_eq!(
            qam_demodulate(&[C64::new(0.0, 0.0)], QamOrder::Qam16),
            vec![0, 1, 0, 1]
        );
    }

    #[test]
    fn rejects_ragged_bits() {
        assert!(matches!(
            qam_modulate(&[0, 1, 1], QamOrder::Qam4),
            Err(Error::Size { .. })
        ));
        assert!(qam_modulate(&[0, 1, 1, 0, 1, 1], QamOrder::Qam16).is_err());
        assert!(QamOrder::from_order(8).is_err());
    }

    proptest! {
        #[test]
        fn demodulate_inverts_modulate(bits in proptest::collection::vec(0u8..2, 0..64), q16 in any::<bool>()) {
            let order = if q16 { QamOrder::Qam16 } else { QamOrder::Qam4 };
            let bps = order.bits_per_symbol();
            let bits = &bits[..bits.len() / bps * bps];
            let s = qam_modulate(bits, order).unwrap();
            prop_assert_eq!(qam_demodulate(&s, order), bits.to_vec());
        }
    }
}
