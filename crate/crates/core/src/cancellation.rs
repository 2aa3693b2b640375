//! Interference replicas and their subtraction from the received signal.
//!
//! A replica has one entry per transmitted stream (user-major, `n_t` streams
//! per user). Positions that belong to the stream(s) being detected are
//! protected and held at exactly zero, so they never enter the subtracted
//! term.

use num_complex::Complex64;

use crate::channel::CMatrix;
use crate::coding::Constellation;
use crate::detection::SoftSymbol;
use crate::error::check_len;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplicaKind {
    /// Posterior means.
    Soft,
    /// Sliced posterior means.
    Hard,
    /// Entries of the candidate vector chosen by list selection.
    Rmp,
    /// The transmitted symbols themselves.
    Genie,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaVector {
    pub values: Vec<Complex64>,
    pub kind: ReplicaKind,
    /// Zeroed positions, ascending.
    pub protected: Vec<usize>,
}

impl ReplicaVector {
    fn new(
        mut values: Vec<Complex64>,
        kind: ReplicaKind,
        mut protected: Vec<usize>,
    ) -> Result<Self> {
        protected.sort_unstable();
        protected.dedup();
        for &p in &protected {
            let slot = values.get_mut(p).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "protected position {p} outside a replica of length {}",
                    protected.len()
                ))
            })?;
            *slot = Complex64::new(0.0, 0.0);
        }
        Ok(Self {
            values,
            kind,
            protected,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_protected(&self, pos: usize) -> bool {
        self.protected.binary_search(&pos).is_ok()
    }
}

/// Soft means of every user except `protect` (single-antenna users).
pub fn soft_replica(soft: &[SoftSymbol], protect: usize) -> Result<ReplicaVector> {
    ReplicaVector::new(
        soft.iter().map(|s| s.mean).collect(),
        ReplicaKind::Soft,
        vec![protect],
    )
}

/// Sliced soft means of every user except `protect`.
pub fn hard_replica(
    soft: &[SoftSymbol],
    protect: usize,
    constellation: &Constellation,
) -> Result<ReplicaVector> {
    ReplicaVector::new(
        soft.iter()
            .map(|s| constellation.point(constellation.slice(s.mean)))
            .collect(),
        ReplicaKind::Hard,
        vec![protect],
    )
}

/// Replica built from a selected candidate vector of constellation indices.
pub fn rmp_replica(
    selected: &[usize],
    constellation: &Constellation,
    protected: &[usize],
) -> Result<ReplicaVector> {
    ReplicaVector::new(
        selected.iter().map(|&q| constellation.point(q)).collect(),
        ReplicaKind::Rmp,
        protected.to_vec(),
    )
}

/// Replica of the transmitted symbols themselves.
pub fn genie_replica(
    truth: &[usize],
    constellation: &Constellation,
    protected: &[usize],
) -> Result<ReplicaVector> {
    let mut replica = rmp_replica(truth, constellation, protected)?;
    replica.kind = ReplicaKind::Genie;
    Ok(replica)
}

fn check_streams(soft: &[SoftSymbol], n_t: usize) -> Result<usize> {
    if n_t == 0 || !soft.len().is_multiple_of(n_t) {
        return Err(Error::InvalidParameter(format!(
            "{} soft symbols do not split into users of {n_t} streams",
            soft.len()
        )));
    }
    Ok(soft.len() / n_t)
}

/// Cancel every other user; all `n_t` streams of `user` stay in the residual.
pub fn user_based_replica(soft: &[SoftSymbol], n_t: usize, user: usize) -> Result<ReplicaVector> {
    let users = check_streams(soft, n_t)?;
    if user >= users {
        return Err(Error::InvalidParameter(format!("no user {user}")));
    }
    ReplicaVector::new(
        soft.iter().map(|s| s.mean).collect(),
        ReplicaKind::Soft,
        (user * n_t..(user + 1) * n_t).collect(),
    )
}

/// Cancel every stream except stream `stream` of `user`, including the
/// user's own other streams.
pub fn stream_based_replica(
    soft: &[SoftSymbol],
    n_t: usize,
    user: usize,
    stream: usize,
) -> Result<ReplicaVector> {
    let users = check_streams(soft, n_t)?;
    if user >= users || stream >= n_t {
        return Err(Error::InvalidParameter(format!(
            "no stream ({user}, {stream})"
        )));
    }
    ReplicaVector::new(
        soft.iter().map(|s| s.mean).collect(),
        ReplicaKind::Soft,
        vec![user * n_t + stream],
    )
}

/// `received - gains * replica`.
pub fn cancel(
    received: &[Complex64],
    gains: &CMatrix,
    replica: &ReplicaVector,
) -> Result<Vec<Complex64>> {
    check_len("cancel rows", gains.rows(), received.len())?;
    let subtracted = gains.mul_vec(&replica.values)?;
    Ok(received
        .iter()
        .zip(subtracted)
        .map(|(r, s)| r - s)
        .collect())
}

/// Residual noise after cancellation, per receive dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveNoise {
    pub per_dimension: Vec<f64>,
}

/// `sigma_v2 + sum_l |G[n, l]|^2 * uncertainty[l]` for every row `n`.
pub fn residual_noise(
    gains: &CMatrix,
    sigma_v2: f64,
    uncertainty: &[f64],
) -> Result<EffectiveNoise> {
    check_len("residual noise", gains.cols(), uncertainty.len())?;
    Ok(EffectiveNoise {
        per_dimension: (0..gains.rows())
            .map(|n| {
                sigma_v2
                    + gains
                        .row(n)
                        .iter()
                        .zip(uncertainty)
                        .map(|(g, u)| g.norm_sqr() * u)
                        .sum::<f64>()
            })
            .collect(),
    })
}

/// Effective noise seen by the demapper after cancelling with `replica`.
///
/// Soft cancellation leaves each cancelled stream's posterior variance,
/// passed through its channel gain. Hard, list-selected and genie
/// cancellation treat the replica as exact.
pub fn effective_variance(
    replica: &ReplicaVector,
    soft: &[SoftSymbol],
    gains: &CMatrix,
    sigma_v2: f64,
) -> Result<EffectiveNoise> {
    check_len("effective variance", replica.len(), soft.len())?;
    match replica.kind {
        ReplicaKind::Soft => {
            let uncertainty: Vec<f64> = soft
                .iter()
                .enumerate()
                .map(|(l, s)| {
                    if replica.is_protected(l) {
                        0.0
                    } else {
                        s.variance
                    }
                })
                .collect();
            residual_noise(gains, sigma_v2, &uncertainty)
        }
        ReplicaKind::Hard | ReplicaKind::Rmp | ReplicaKind::Genie => Ok(EffectiveNoise {
            per_dimension: vec![sigma_v2; gains.rows()],
        }),
    }
}
