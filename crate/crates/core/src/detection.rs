//! Soft demapping and the probability machinery between the decoder and the
//! interference cancellers: bit and symbol probabilities from LLRs, soft
//! symbol statistics, and the sorted candidate lists exchanged by the
//! reduced-message-passing scheme.

use num_complex::Complex64;

use crate::coding::{clip_llr, Constellation};
use crate::error::check_len;
use crate::{Error, Result};

/// Default cap on the number of joint candidates a detector will enumerate.
pub const DEFAULT_GAMMA_CAP: u64 = 4096;

/// Probability that a bit takes the antipodal value `sign` (`+1` or `-1`)
/// given its LLR.
#[inline]
pub fn bit_prob(llr: f64, sign: f64) -> f64 {
    0.5 * (1.0 + sign * (0.5 * clip_llr(llr)).tanh())
}

/// Distribution of one transmitted symbol over the constellation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPosterior {
    pub probs: Vec<f64>,
}

impl SymbolPosterior {
    pub fn uniform(size: usize) -> Self {
        Self {
            probs: vec![1.0 / size as f64; size],
        }
    }

    pub fn point_mass(size: usize, q: usize) -> Self {
        let mut probs = vec![0.0; size];
        probs[q] = 1.0;
        Self { probs }
    }

    pub fn sum(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Symbol probabilities from the `J` bit LLRs of one symbol, assuming
/// independent bits.
pub fn symbol_posterior(llrs: &[f64], constellation: &Constellation) -> SymbolPosterior {
    debug_assert_eq!(llrs.len(), constellation.bits_per_symbol());
    let probs = (0..constellation.len())
        .map(|q| {
            constellation
                .signs(q)
                .iter()
                .zip(llrs)
                .map(|(&s, &l)| bit_prob(l, s))
                .product()
        })
        .collect();
    SymbolPosterior { probs }
}

/// First- and second-order statistics of a symbol under its posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftSymbol {
    pub mean: Complex64,
    pub second_moment: f64,
    pub variance: f64,
}

impl SoftSymbol {
    /// A symbol known exactly.
    pub fn certain(point: Complex64) -> Self {
        Self {
            mean: point,
            second_moment: point.norm_sqr(),
            variance: 0.0,
        }
    }

    /// Nothing known: zero mean, full constellation power.
    pub fn unknown(constellation: &Constellation) -> Self {
        let power = constellation.average_power();
        Self {
            mean: Complex64::new(0.0, 0.0),
            second_moment: power,
            variance: power,
        }
    }
}

pub fn soft_symbol(post: &SymbolPosterior, constellation: &Constellation) -> SoftSymbol {
    let mut mean = Complex64::new(0.0, 0.0);
    let mut second_moment = 0.0;
    for (p, c) in post.probs.iter().zip(constellation.points()) {
        mean += c * p;
        second_moment += p * c.norm_sqr();
    }
    SoftSymbol {
        mean,
        second_moment,
        variance: (second_moment - mean.norm_sqr()).max(0.0),
    }
}

/// Constellation indices sorted by descending probability.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    pub entries: Vec<(usize, f64)>,
    pub threshold: f64,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(q, _)| q)
    }

    /// Same constellation indices in the same order.
    pub fn same_indices(&self, other: &CandidateList) -> bool {
        self.entries.len() == other.entries.len() && self.indices().eq(other.indices())
    }
}

/// Keep the points with probability at least `rho_th`, most likely first,
/// at most `tau_max` of them. If nothing clears the threshold the most
/// likely point is kept alone. Ties sort by constellation index.
pub fn build_candidate_list(
    post: &SymbolPosterior,
    rho_th: f64,
    tau_max: usize,
) -> Result<CandidateList> {
    if !(0.0..1.0).contains(&rho_th) {
        return Err(Error::InvalidParameter(format!(
            "list threshold must lie in [0, 1), got {rho_th}"
        )));
    }
    if tau_max == 0 || tau_max > post.probs.len() {
        return Err(Error::InvalidParameter(format!(
            "list length cap must lie in 1..={}, got {tau_max}",
            post.probs.len()
        )));
    }
    let mut order: Vec<(usize, f64)> = post.probs.iter().copied().enumerate().collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut entries: Vec<(usize, f64)> = order
        .iter()
        .copied()
        .filter(|&(_, p)| p >= rho_th)
        .take(tau_max)
        .collect();
    if entries.is_empty() {
        entries.push(order[0]);
    }
    Ok(CandidateList {
        entries,
        threshold: rho_th,
    })
}

/// Joint list size: the product of the per-user list lengths (saturating).
pub fn list_size<'a>(lists: impl IntoIterator<Item = &'a CandidateList>) -> u64 {
    lists
        .into_iter()
        .fold(1u64, |acc, l| acc.saturating_mul(l.len() as u64))
}

/// All joint candidates as constellation-index vectors, one entry per list,
/// in lexicographic order with the first list outermost.
pub fn enumerate_candidates(lists: &[CandidateList], cap: u64) -> Result<Vec<Vec<usize>>> {
    let gamma = list_size(lists);
    if gamma > cap {
        return Err(Error::ListExplosion { gamma, cap });
    }
    let mut out = Vec::with_capacity(gamma as usize);
    let mut odo = Odometer::new(lists.iter().map(CandidateList::len).collect());
    loop {
        out.push(
            odo.digits()
                .iter()
                .zip(lists)
                .map(|(&d, l)| l.entries[d].0)
                .collect(),
        );
        if !odo.advance() {
            break;
        }
    }
    Ok(out)
}

/// Mixed-radix counter with the last digit moving fastest.
#[derive(Debug, Clone)]
pub struct Odometer {
    radices: Vec<usize>,
    digits: Vec<usize>,
}

impl Odometer {
    pub fn new(radices: Vec<usize>) -> Self {
        assert!(radices.iter().all(|&r| r > 0), "radices must be positive");
        let digits = vec![0; radices.len()];
        Self { radices, digits }
    }

    pub fn digits(&self) -> &[usize] {
        &self.digits
    }

    /// Step to the next combination; `false` once every combination has been
    /// visited (the counter wraps back to zero).
    pub fn advance(&mut self) -> bool {
        for pos in (0..self.digits.len()).rev() {
            self.digits[pos] += 1;
            if self.digits[pos] < self.radices[pos] {
                return true;
            }
            self.digits[pos] = 0;
        }
        false
    }
}

/// Exact log-sum-exp marginalisation or its max approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DemapMode {
    #[default]
    LogSum,
    MaxLog,
}

/// A soft-demapping problem: observation `residual = gains * s + noise`
/// with `s` a vector of `streams` constellation symbols.
#[derive(Debug, Clone, Copy)]
pub struct DemapProblem<'a> {
    /// Post-cancellation observation, one entry per receive dimension.
    pub residual: &'a [Complex64],
    /// Row-major `residual.len() x streams` gain matrix.
    pub gains: &'a [Complex64],
    /// Effective noise variance of every receive dimension.
    pub noise_var: &'a [f64],
    /// A priori LLRs, `J` per stream, stream-major.
    pub priors: &'a [f64],
}

/// Extrinsic LLRs of every bit of every stream, obtained by marginalising
/// the exact posterior over all `|A|^streams` hypotheses and removing each
/// bit's own prior.
pub fn demap_llr(
    constellation: &Constellation,
    problem: &DemapProblem<'_>,
    mode: DemapMode,
) -> Result<Vec<f64>> {
    let n_obs = problem.residual.len();
    check_len("demap noise variances", n_obs, problem.noise_var.len())?;
    if n_obs == 0 || !problem.gains.len().is_multiple_of(n_obs) {
        return Err(Error::Shape {
            context: "demap gains",
            expected: n_obs,
            actual: problem.gains.len(),
        });
    }
    let streams = problem.gains.len() / n_obs;
    let bits = constellation.bits_per_symbol();
    check_len("demap priors", streams * bits, problem.priors.len())?;
    if let Some(&bad) = problem.noise_var.iter().find(|&&v| v.is_nan() || v <= 0.0) {
        return Err(Error::NonPositiveVariance(bad));
    }

    let size = constellation.len();
    if streams == 1 && size <= SMALL_ALPHABET {
        return Ok(demap_single_stream(constellation, problem, mode));
    }
    let priors: Vec<f64> = problem.priors.iter().map(|&l| clip_llr(l)).collect();
    let inv_var: Vec<f64> = problem.noise_var.iter().map(|v| 1.0 / v).collect();

    // contributions[(s * size + q) * n_obs + n] = G[n, s] * c_q
    let mut contributions = Vec::with_capacity(streams * size * n_obs);
    let mut prior_terms = Vec::with_capacity(streams * size);
    for s in 0..streams {
        for q in 0..size {
            let c = constellation.point(q);
            for n in 0..n_obs {
                contributions.push(problem.gains[n * streams + s] * c);
            }
            prior_terms.push(
                0.5 * constellation
                    .signs(q)
                    .iter()
                    .zip(&priors[s * bits..(s + 1) * bits])
                    .map(|(sg, l)| sg * l)
                    .sum::<f64>(),
            );
        }
    }

    let hypotheses = size.pow(streams as u32);
    let mut metrics = Vec::with_capacity(hypotheses);
    let mut odo = Odometer::new(vec![size; streams]);
    let mut y = vec![Complex64::new(0.0, 0.0); n_obs];
    loop {
        y.copy_from_slice(problem.residual);
        let mut metric = 0.0;
        for (s, &q) in odo.digits().iter().enumerate() {
            let base = (s * size + q) * n_obs;
            for (yn, c) in y.iter_mut().zip(&contributions[base..base + n_obs]) {
                *yn -= c;
            }
            metric += prior_terms[s * size + q];
        }
        metric -= y
            .iter()
            .zip(&inv_var)
            .map(|(yn, iv)| yn.norm_sqr() * iv)
            .sum::<f64>();
        metrics.push(metric);
        if !odo.advance() {
            break;
        }
    }

    let global_max = metrics.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // per bit: [sum for +1, sum for -1] and the matching maxima
    let mut sums = vec![[0.0f64; 2]; streams * bits];
    let mut maxima = vec![[f64::NEG_INFINITY; 2]; streams * bits];
    let mut odo = Odometer::new(vec![size; streams]);
    for &metric in &metrics {
        let weight = if mode == DemapMode::LogSum {
            (metric - global_max).exp()
        } else {
            0.0
        };
        for (s, &q) in odo.digits().iter().enumerate() {
            for (j, &sign) in constellation.signs(q).iter().enumerate() {
                let side = usize::from(sign < 0.0);
                let idx = s * bits + j;
                sums[idx][side] += weight;
                if metric > maxima[idx][side] {
                    maxima[idx][side] = metric;
                }
            }
        }
        odo.advance();
    }

    let side_value = |idx: usize, side: usize| -> f64 {
        let sum = sums[idx][side];
        if mode == DemapMode::LogSum && sum > 1e-300 {
            global_max + sum.ln()
        } else {
            maxima[idx][side]
        }
    };
    Ok((0..streams * bits)
        .map(|idx| side_value(idx, 0) - side_value(idx, 1) - priors[idx])
        .collect())
}

/// Largest alphabet handled by the allocation-free single-stream path.
const SMALL_ALPHABET: usize = 16;

/// [`demap_llr`] for one stream, on the stack. Inputs are already validated.
fn demap_single_stream(
    constellation: &Constellation,
    problem: &DemapProblem<'_>,
    mode: DemapMode,
) -> Vec<f64> {
    let size = constellation.len();
    let bits = constellation.bits_per_symbol();
    let mut priors = [0.0; 4];
    for (p, &l) in priors.iter_mut().zip(problem.priors) {
        *p = clip_llr(l);
    }
    let mut metrics = [0.0; SMALL_ALPHABET];
    for (q, metric) in metrics.iter_mut().enumerate().take(size) {
        let c = constellation.point(q);
        let mut m: f64 = constellation
            .signs(q)
            .iter()
            .zip(&priors)
            .map(|(sg, l)| 0.5 * sg * l)
            .sum();
        for ((r, g), v) in problem
            .residual
            .iter()
            .zip(problem.gains)
            .zip(problem.noise_var)
        {
            m -= (r - g * c).norm_sqr() / v;
        }
        *metric = m;
    }
    let global_max = metrics[..size]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = Vec::with_capacity(bits);
    for j in 0..bits {
        let mut sums = [0.0f64; 2];
        let mut maxima = [f64::NEG_INFINITY; 2];
        for (q, &metric) in metrics[..size].iter().enumerate() {
            let side = usize::from(constellation.signs(q)[j] < 0.0);
            if mode == DemapMode::LogSum {
                sums[side] += (metric - global_max).exp();
            }
            maxima[side] = maxima[side].max(metric);
        }
        let side_value = |side: usize| {
            if mode == DemapMode::LogSum && sums[side] > 1e-300 {
                global_max + sums[side].ln()
            } else {
                maxima[side]
            }
        };
        out.push(side_value(0) - side_value(1) - priors[j]);
    }
    out
}

/// Single-stream, single-observation form of [`demap_llr`].
pub fn demap_scalar(
    constellation: &Constellation,
    residual: Complex64,
    gain: Complex64,
    sigma_eff2: f64,
    priors: &[f64],
    mode: DemapMode,
) -> Result<Vec<f64>> {
    demap_llr(
        constellation,
        &DemapProblem {
            residual: &[residual],
            gains: &[gain],
            noise_var: &[sigma_eff2],
            priors,
        },
        mode,
    )
}
