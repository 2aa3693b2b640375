//! Multi-cell uplink channel: coupling powers, Rayleigh fading, noise
//! calibration and the received-signal model.
//!
//! BS `m` observes `r_m = sum_k g_{m,k} s_k + v_m`, where every gain is the
//! product of a unit-variance circularly-symmetric Gaussian draw and the
//! square root of the corresponding coupling power. In the multi-antenna case
//! each BS stacks `n_r` observations and each user transmits `n_t` streams;
//! all antenna pairs between a user and a BS share that link's power.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::check_len;
use crate::{Error, Result};

/// Largest number of strong interferers a BS may have.
pub const MAX_STRONG_INTERFERERS: usize = 5;

/// Draw one sample of CN(0, variance).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * scale, im * scale)
}

/// Dense row-major complex matrix. Only what the detectors need.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        check_len("matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Copy of rows `start..start + count`.
    pub fn row_block(&self, start: usize, count: usize) -> CMatrix {
        CMatrix {
            rows: count,
            cols: self.cols,
            data: self.data[start * self.cols..(start + count) * self.cols].to_vec(),
        }
    }

    /// Copy of columns `start..start + count`.
    pub fn col_block(&self, start: usize, count: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.rows, count);
        for r in 0..self.rows {
            for c in 0..count {
                out.set(r, c, self.get(r, start + c));
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len("matrix-vector product", self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Path-loss powers between every BS (row) and user (column).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    num_bs: usize,
    num_users: usize,
    entries: Vec<f64>,
    desired: Vec<usize>,
    strong_sets: Vec<Vec<usize>>,
    weak_sets: Vec<Vec<usize>>,
    rho_d: f64,
    rho_n: f64,
    rho_o: f64,
}

impl CouplingMatrix {
    /// Symmetric layout with one desired user per BS: row `m` carries
    /// `rho_d` at column `m`, `rho_n` at the `zeta` cyclically following
    /// columns and `rho_o` everywhere else.
    pub fn build(
        num_bs: usize,
        num_users: usize,
        zeta: usize,
        rho_d: f64,
        rho_n: f64,
        rho_o: f64,
    ) -> Result<Self> {
        if num_bs == 0 || num_users == 0 {
            return Err(Error::InvalidTopology(
                "need at least one BS and one user".into(),
            ));
        }
        if num_bs != num_users {
            return Err(Error::InvalidTopology(format!(
                "expected one desired user per BS, got {num_bs} BSs and {num_users} users"
            )));
        }
        if zeta > MAX_STRONG_INTERFERERS {
            return Err(Error::InvalidTopology(format!(
                "at most {MAX_STRONG_INTERFERERS} strong interferers per BS, got {zeta}"
            )));
        }
        if zeta > num_users - 1 {
            return Err(Error::InvalidTopology(format!(
                "{zeta} strong interferers requested but only {} other users exist",
                num_users - 1
            )));
        }
        for (name, value) in [("rho_d", rho_d), ("rho_n", rho_n), ("rho_o", rho_o)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be a finite nonnegative power, got {value}"
                )));
            }
        }
        if rho_d == 0.0 {
            return Err(Error::InvalidParameter("rho_d must be positive".into()));
        }

        let mut entries = vec![rho_o; num_bs * num_users];
        let mut strong_sets = Vec::with_capacity(num_bs);
        let mut weak_sets = Vec::with_capacity(num_bs);
        for m in 0..num_bs {
            entries[m * num_users + m] = rho_d;
            let strong: Vec<usize> = (1..=zeta).map(|off| (m + off) % num_users).collect();
            for &k in &strong {
                entries[m * num_users + k] = rho_n;
            }
            let weak = (0..num_users)
                .filter(|&k| k != m && !strong.contains(&k))
                .collect();
            let mut sorted = strong;
            sorted.sort_unstable();
            strong_sets.push(sorted);
            weak_sets.push(weak);
        }

        Ok(Self {
            num_bs,
            num_users,
            entries,
            desired: (0..num_bs).collect(),
            strong_sets,
            weak_sets,
            rho_d,
            rho_n,
            rho_o,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn get(&self, m: usize, k: usize) -> f64 {
        self.entries[m * self.num_users + k]
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.entries[m * self.num_users..(m + 1) * self.num_users]
    }

    pub fn desired_user(&self, m: usize) -> usize {
        self.desired[m]
    }

    /// BS that serves user `k`.
    pub fn serving_bs(&self, k: usize) -> usize {
        self.desired
            .iter()
            .position(|&d| d == k)
            .expect("every user has a serving BS")
    }

    /// Strong interferers of BS `m`, ascending.
    pub fn strong_set(&self, m: usize) -> &[usize] {
        &self.strong_sets[m]
    }

    /// Weak interferers of BS `m` (every remaining user), ascending.
    pub fn weak_set(&self, m: usize) -> &[usize] {
        &self.weak_sets[m]
    }

    /// Desired user plus strong interferers, ascending.
    pub fn coupled_users(&self, m: usize) -> Vec<usize> {
        let mut users = self.strong_sets[m].clone();
        users.push(self.desired[m]);
        users.sort_unstable();
        users
    }

    pub fn zeta(&self) -> usize {
        self.strong_sets.first().map_or(0, Vec::len)
    }

    pub fn rho_d(&self) -> f64 {
        self.rho_d
    }

    pub fn rho_n(&self) -> f64 {
        self.rho_n
    }

    pub fn rho_o(&self) -> f64 {
        self.rho_o
    }
}

/// One draw of the network channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    num_bs: usize,
    num_users: usize,
    n_t: usize,
    n_r: usize,
    /// `sqrt(rho) * h`, M x K.
    gains: CMatrix,
    /// The CN(0,1) draws, M x K.
    fading: CMatrix,
    /// (M n_r) x (K n_t) block matrix, present when either side has more
    /// than one antenna.
    mimo_block: Option<CMatrix>,
}

impl ChannelRealization {
    /// Build a realization from explicit scalar fading coefficients.
    pub fn from_fading(coupling: &CouplingMatrix, fading: CMatrix) -> Result<Self> {
        check_len("fading rows", coupling.num_bs(), fading.rows())?;
        check_len("fading cols", coupling.num_users(), fading.cols())?;
        let mut gains = CMatrix::zeros(coupling.num_bs(), coupling.num_users());
        for m in 0..coupling.num_bs() {
            for k in 0..coupling.num_users() {
                gains.set(m, k, fading.get(m, k) * coupling.get(m, k).sqrt());
            }
        }
        Ok(Self {
            num_bs: coupling.num_bs(),
            num_users: coupling.num_users(),
            n_t: 1,
            n_r: 1,
            gains,
            fading,
            mimo_block: None,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn gains(&self) -> &CMatrix {
        &self.gains
    }

    pub fn fading(&self) -> &CMatrix {
        &self.fading
    }

    pub fn mimo_block(&self) -> Option<&CMatrix> {
        self.mimo_block.as_ref()
    }

    /// Channel matrix that multiplies the stacked stream vector: the MIMO
    /// block when present, the scalar gains otherwise.
    pub fn effective(&self) -> &CMatrix {
        self.mimo_block.as_ref().unwrap_or(&self.gains)
    }

    /// Rows of [`Self::effective`] observed by BS `m` (`n_r` x `K n_t`).
    pub fn bs_block(&self, m: usize) -> CMatrix {
        self.effective().row_block(m * self.n_r, self.n_r)
    }
}

/// Draw a channel realization for the given coupling.
pub fn draw_channel<R: Rng + ?Sized>(
    coupling: &CouplingMatrix,
    n_t: usize,
    n_r: usize,
    rng: &mut R,
) -> ChannelRealization {
    assert!(n_t >= 1 && n_r >= 1, "antenna counts must be at least one");
    let (m_count, k_count) = (coupling.num_bs(), coupling.num_users());
    let mut fading = CMatrix::zeros(m_count, k_count);
    for m in 0..m_count {
        for k in 0..k_count {
            fading.set(m, k, complex_gaussian(rng, 1.0));
        }
    }
    let mut chan =
        ChannelRealization::from_fading(coupling, fading).expect("fading shape matches coupling");
    chan.n_t = n_t;
    chan.n_r = n_r;
    if n_t * n_r > 1 {
        let mut block = CMatrix::zeros(m_count * n_r, k_count * n_t);
        for m in 0..m_count {
            for k in 0..k_count {
                let amplitude = coupling.get(m, k).sqrt();
                for a in 0..n_r {
                    for b in 0..n_t {
                        let h = complex_gaussian(rng, 1.0);
                        block.set(m * n_r + a, k * n_t + b, h * amplitude);
                    }
                }
            }
        }
        chan.mimo_block = Some(block);
    }
    chan
}

/// Additive noise variance per complex sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !variance.is_finite() || variance < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be finite and nonnegative, got {variance}"
            )));
        }
        Ok(Self { variance })
    }

    pub fn noiseless() -> Self {
        Self { variance: 0.0 }
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Variance of each real dimension.
    pub fn per_dimension(&self) -> f64 {
        self.variance / 2.0
    }
}

/// Noise variance such that the desired-link SNR equals `target_snr_db`,
/// with unit symbol power and unit-variance fading.
pub fn calibrate_noise(target_snr_db: f64, coupling: &CouplingMatrix) -> NoiseSpec {
    NoiseSpec {
        variance: coupling.rho_d() / 10f64.powf(target_snr_db / 10.0),
    }
}

/// Average signal-to-interference ratio at a BS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Sir {
    Db(f64),
    /// The BS sees no interference at all.
    Infinite,
}

pub fn compute_sir(coupling: &CouplingMatrix, m: usize) -> Sir {
    let row = coupling.row(m);
    let desired = row[coupling.desired_user(m)];
    let interference: f64 = coupling
        .strong_set(m)
        .iter()
        .chain(coupling.weak_set(m))
        .map(|&k| row[k])
        .sum();
    if interference > 0.0 {
        Sir::Db(10.0 * (desired / interference).log10())
    } else {
        Sir::Infinite
    }
}

/// Received samples of all BSs: `effective * symbols + noise`, length
/// `M n_r`. `symbols` is user-major, `K n_t` long.
pub fn transmit<R: Rng + ?Sized>(
    chan: &ChannelRealization,
    symbols: &[Complex64],
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    let mut received = chan.effective().mul_vec(symbols)?;
    if noise.variance() > 0.0 {
        for r in &mut received {
            *r += complex_gaussian(rng, noise.variance());
        }
    }
    Ok(received)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn four_cell_example_layout() {
        let p = CouplingMatrix::build(4, 4, 2, 1.0, 0.5, 0.0).unwrap();
        let expected = [
            [1.0, 0.5, 0.5, 0.0],
            [0.0, 1.0, 0.5, 0.5],
            [0.5, 0.0, 1.0, 0.5],
            [0.5, 0.5, 0.0, 1.0],
        ];
        for (m, row) in expected.iter().enumerate() {
            assert_eq!(p.row(m), row);
        }
        assert_eq!(p.strong_set(2), &[0, 3]);
        assert_eq!(p.weak_set(2), &[1]);
        assert_eq!(p.coupled_users(3), vec![0, 1, 3]);
    }

    #[test]
    fn zero_strong_interferers_is_identity() {
        let p = CouplingMatrix::build(3, 3, 0, 1.0, 0.5, 0.0).unwrap();
        for m in 0..3 {
            for k in 0..3 {
                assert_eq!(p.get(m, k), if m == k { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn nine_cell_row_counts() {
        let p = CouplingMatrix::build(9, 9, 3, 1.0, 0.5, 0.0).unwrap();
        for m in 0..9 {
            let row = p.row(m);
            assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|&&x| x == 0.5).count(), 3);
            assert_eq!(row.iter().filter(|&&x| x == 0.0).count(), 5);
            assert!(!p.strong_set(m).contains(&m));
        }
    }

    #[test]
    fn rejects_bad_topologies() {
        assert!(matches!(
            CouplingMatrix::build(3, 3, 3, 1.0, 0.5, 0.0),
            Err(Error::InvalidTopology(_))
        ));
        assert!(matches!(
            CouplingMatrix::build(9, 9, 6, 1.0, 0.5, 0.0),
            Err(Error::InvalidTopology(_))
        ));
        assert!(CouplingMatrix::build(2, 3, 1, 1.0, 0.5, 0.0).is_err());
        assert!(CouplingMatrix::build(2, 2, 1, 1.0, -0.5, 0.0).is_err());
    }

    #[test]
    fn zero_coupling_gives_exact_zero_gain() {
        let p = CouplingMatrix::build(4, 4, 2, 1.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let chan = draw_channel(&p, 1, 1, &mut rng);
        assert_eq!(chan.gains().get(0, 3), c(0.0, 0.0));
        assert_eq!(chan.gains().get(1, 0), c(0.0, 0.0));
        assert!(chan.mimo_block().is_none());
    }

    #[test]
    fn mean_gain_power_matches_coupling() {
        let p = CouplingMatrix::build(2, 2, 1, 1.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mean: f64 = (0..draws)
            .map(|_| {
                draw_channel(&p, 1, 1, &mut rng)
                    .gains()
                    .get(0, 1)
                    .norm_sqr()
            })
            .sum::<f64>()
            / draws as f64;
        assert!((0.49..=0.51).contains(&mean), "mean |g|^2 = {mean}");
    }

    #[test]
    fn mimo_block_shape() {
        let p = CouplingMatrix::build(2, 2, 1, 1.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chan = draw_channel(&p, 2, 2, &mut rng);
        let block = chan.mimo_block().unwrap();
        assert_eq!((block.rows(), block.cols()), (4, 4));
        assert_eq!(chan.bs_block(1).rows(), 2);
        assert_eq!(chan.bs_block(1).row(0), block.row(2));
    }

    #[test]
    fn noiseless_single_user() {
        let p = CouplingMatrix::build(1, 1, 0, 1.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chan = draw_channel(&p, 1, 1, &mut rng);
        let s = c(1.0, -1.0) / 2f64.sqrt();
        let r = transmit(&chan, &[s], NoiseSpec::noiseless(), &mut rng).unwrap();
        assert_eq!(r, vec![chan.gains().get(0, 0) * s]);
    }

    #[test]
    fn noiseless_matches_dot_products() {
        let p = CouplingMatrix::build(4, 4, 2, 1.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let chan = draw_channel(&p, 1, 1, &mut rng);
        let s: Vec<Complex64> = (0..4).map(|k| c(k as f64 - 1.5, 0.5)).collect();
        let r = transmit(&chan, &s, NoiseSpec::noiseless(), &mut rng).unwrap();
        for m in 0..4 {
            let mut acc = c(0.0, 0.0);
            for k in 0..4 {
                acc += chan.gains().get(m, k) * s[k];
            }
            assert!((acc - r[m]).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_signal_is_pure_noise() {
        let p = CouplingMatrix::build(1, 1, 0, 1.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let chan = draw_channel(&p, 1, 1, &mut rng);
        let noise = NoiseSpec::new(0.3).unwrap();
        let n = 50_000;
        let power: f64 = (0..n)
            .map(|_| transmit(&chan, &[c(0.0, 0.0)], noise, &mut rng).unwrap()[0].norm_sqr())
            .sum::<f64>()
            / n as f64;
        assert!((power - 0.3).abs() < 0.01, "power {power}");
    }

    #[test]
    fn transmit_rejects_wrong_length() {
        let p = CouplingMatrix::build(2, 2, 1, 1.0, 0.5, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let chan = draw_channel(&p, 1, 1, &mut rng);
        assert!(matches!(
            transmit(&chan, &[c(1.0, 0.0)], NoiseSpec::noiseless(), &mut rng),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn noise_calibration() {
        let p = CouplingMatrix::build(1, 1, 0, 1.0, 0.5, 0.0).unwrap();
        assert!((calibrate_noise(0.0, &p).variance() - 1.0).abs() < 1e-15);
        assert!((calibrate_noise(10.0, &p).variance() - 0.1).abs() < 1e-15);
        assert!((calibrate_noise(3.0, &p).variance() - 0.501_187_233_627_272_3).abs() < 1e-12);
    }

    #[test]
    fn sir_values() {
        let two = CouplingMatrix::build(4, 4, 2, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(compute_sir(&two, 0), Sir::Db(0.0));
        let one = CouplingMatrix::build(2, 2, 1, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(compute_sir(&one, 1), Sir::Db(0.0));
        let three = CouplingMatrix::build(9, 9, 3, 1.0, 0.5, 0.0).unwrap();
        match compute_sir(&three, 4) {
            Sir::Db(db) => assert!((db - (-1.760_912_590_556_812_4)).abs() < 1e-12),
            Sir::Infinite => panic!("expected finite SIR"),
        }
        let none = CouplingMatrix::build(3, 3, 0, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(compute_sir(&none, 0), Sir::Infinite);
    }
}
