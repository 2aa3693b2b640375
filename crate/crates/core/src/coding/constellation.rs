use num_complex::Complex64;

use super::bit_sign;
use crate::{Error, Result};

/// Labelled symbol alphabet. Point `q` carries the bit pattern `labels[q]`,
/// first bit in the most significant position.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    labels: Vec<u32>,
    bits_per_symbol: usize,
    /// `signs[q * J + j]` is the antipodal value of bit `j` of point `q`.
    signs: Vec<f64>,
    /// Index of the point carrying each label.
    by_label: Vec<usize>,
}

impl Constellation {
    /// Gray QPSK: `00 -> (1+j)`, `01 -> (1-j)`, `10 -> (-1+j)`, `11 -> (-1-j)`,
    /// all scaled by `1/sqrt(2)`. Point indices equal label values.
    pub fn qpsk_gray() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_table(
            vec![
                Complex64::new(a, a),
                Complex64::new(a, -a),
                Complex64::new(-a, a),
                Complex64::new(-a, -a),
            ],
            vec![0b00, 0b01, 0b10, 0b11],
        )
        .expect("QPSK table is valid")
    }

    /// Arbitrary table with `2^J` points and a bijective labelling.
    pub fn from_table(points: Vec<Complex64>, labels: Vec<u32>) -> Result<Self> {
        let size = points.len();
        if size < 2 || !size.is_power_of_two() || labels.len() != size {
            return Err(Error::InvalidParameter(format!(
                "constellation needs 2^J points with one label each, got {} points and {} labels",
                size,
                labels.len()
            )));
        }
        let bits_per_symbol = size.trailing_zeros() as usize;
        let mut by_label = vec![usize::MAX; size];
        for (q, &label) in labels.iter().enumerate() {
            let slot = by_label
                .get_mut(label as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("label {label} out of range")))?;
            if *slot != usize::MAX {
                return Err(Error::InvalidParameter(format!("label {label} used twice")));
            }
            *slot = q;
        }
        let power = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / size as f64;
        if (power - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "constellation must have unit average power, got {power}"
            )));
        }
        let mut signs = Vec::with_capacity(size * bits_per_symbol);
        for &label in &labels {
            for j in 0..bits_per_symbol {
                signs.push(bit_sign(((label >> (bits_per_symbol - 1 - j)) & 1) as u8));
            }
        }
        Ok(Self {
            points,
            labels,
            bits_per_symbol,
            signs,
            by_label,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    #[inline]
    pub fn point(&self, q: usize) -> Complex64 {
        self.points[q]
    }

    pub fn label(&self, q: usize) -> u32 {
        self.labels[q]
    }

    /// Bit `j` (0 = first) of point `q`.
    pub fn bit(&self, q: usize, j: usize) -> u8 {
        ((self.labels[q] >> (self.bits_per_symbol - 1 - j)) & 1) as u8
    }

    /// Antipodal values of the bits of point `q`.
    #[inline]
    pub fn signs(&self, q: usize) -> &[f64] {
        &self.signs[q * self.bits_per_symbol..(q + 1) * self.bits_per_symbol]
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.len() as f64
    }

    /// Largest absolute real or imaginary coordinate.
    pub fn max_amplitude(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.re.abs().max(p.im.abs()))
            .fold(0.0, f64::max)
    }

    /// Point index for a group of `J` bits.
    pub fn index_of_bits(&self, bits: &[u8]) -> usize {
        let label = bits
            .iter()
            .fold(0u32, |acc, &b| (acc << 1) | u32::from(b & 1));
        self.by_label[label as usize]
    }

    /// Point indices for a bit sequence whose length is a multiple of `J`.
    pub fn map_indices(&self, bits: &[u8]) -> Result<Vec<usize>> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::InvalidParameter(format!(
                "{} bits do not fill whole {}-bit symbols",
                bits.len(),
                self.bits_per_symbol
            )));
        }
        Ok(bits
            .chunks(self.bits_per_symbol)
            .map(|chunk| self.index_of_bits(chunk))
            .collect())
    }

    pub fn map(&self, bits: &[u8]) -> Result<Vec<Complex64>> {
        Ok(self
            .map_indices(bits)?
            .into_iter()
            .map(|q| self.points[q])
            .collect())
    }

    /// Nearest point; ties go to the smallest index.
    pub fn slice(&self, value: Complex64) -> usize {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (q, p) in self.points.iter().enumerate() {
            let d = (value - p).norm_sqr();
            if d < best_dist {
                best = q;
                best_dist = d;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_points_have_unit_modulus() {
        let qpsk = Constellation::qpsk_gray();
        for p in qpsk.points() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
        assert_eq!(qpsk.bits_per_symbol(), 2);
    }

    #[test]
    fn labelling_table() {
        let qpsk = Constellation::qpsk_gray();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let mapped = qpsk.map(&[0, 0, 0, 1, 1, 0, 1, 1]).unwrap();
        assert_eq!(
            mapped,
            vec![
                Complex64::new(a, a),
                Complex64::new(a, -a),
                Complex64::new(-a, a),
                Complex64::new(-a, -a)
            ]
        );
    }

    #[test]
    fn slicing_exact_points_is_identity() {
        let qpsk = Constellation::qpsk_gray();
        for q in 0..4 {
            assert_eq!(qpsk.slice(qpsk.point(q)), q);
        }
    }

    #[test]
    fn slice_near_point() {
        let qpsk = Constellation::qpsk_gray();
        assert_eq!(qpsk.slice(Complex64::new(0.9, 0.8)), 0);
        // exact tie at the origin goes to the first point
        assert_eq!(qpsk.slice(Complex64::new(0.0, 0.0)), 0);
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        let qpsk = Constellation::qpsk_gray();
        let min_dist = 2.0f64.sqrt();
        for p in 0..4 {
            for q in 0..4 {
                let d = (qpsk.point(p) - qpsk.point(q)).norm();
                if (d - min_dist).abs() < 1e-12 {
                    assert_eq!((qpsk.label(p) ^ qpsk.label(q)).count_ones(), 1);
                }
            }
        }
    }

    #[test]
    fn odd_bit_count_is_rejected() {
        assert!(Constellation::qpsk_gray().map(&[0, 1, 1]).is_err());
    }

    #[test]
    fn table_validation() {
        let pts = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert!(Constellation::from_table(pts.clone(), vec![0, 1]).is_ok());
        assert!(Constellation::from_table(pts.clone(), vec![1, 1]).is_err());
        assert!(Constellation::from_table(vec![Complex64::new(2.0, 0.0); 2], vec![0, 1]).is_err());
    }
}
