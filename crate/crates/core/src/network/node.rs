use std::sync::Arc;

use num_complex::Complex64;

use super::selection::{argmin_index, partial_distances};
use crate::cancellation::{cancel, residual_noise, ReplicaKind, ReplicaVector};
use crate::channel::CMatrix;
use crate::coding::{Constellation, ConvCode, DecoderOutput, Interleaver};
use crate::detection::{
    demap_llr, enumerate_candidates, soft_symbol, symbol_posterior, CandidateList, DemapMode,
    DemapProblem, SymbolPosterior,
};
use crate::error::check_len;
use crate::{Error, Result};

/// Smallest effective noise variance handed to the demapper, so that a
/// noiseless channel with nothing left to cancel stays well defined.
const NOISE_FLOOR: f64 = 1e-9;

/// How the streams of a multi-antenna user are separated at its own BS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum MimoCancellation {
    /// Cancel other users only and demap the user's streams jointly.
    #[default]
    UserBased,
    /// Also cancel the user's other streams with its own soft estimates and
    /// demap one stream at a time.
    StreamBased,
}

/// How a BS accounts for the other users when nothing has been exchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum LocalDetection {
    /// Demap the own streams jointly with the strong interferers, whose
    /// symbols are marginalised under uniform priors. Weak users are noise.
    #[default]
    Joint,
    /// Treat every other user as Gaussian noise.
    Gaussian,
}

/// Which decoder output the exchanged symbol estimates are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum EstimateSource {
    /// A posteriori LLRs of the coded bits.
    #[default]
    Posterior,
    /// Extrinsic LLRs of the coded bits (the demapper's a priori input).
    Extrinsic,
}

/// Everything base station `bs` is allowed to look at: its own samples, its
/// own channel rows and the static topology. Stream positions are user-major,
/// `n_t` per user.
#[derive(Debug, Clone)]
pub struct LocalView {
    pub bs: usize,
    pub user: usize,
    pub n_t: usize,
    /// Positions received strongly (own user and strong interferers), ascending.
    pub coupled: Vec<usize>,
    /// Received samples per symbol time, `n_r` each.
    pub observations: Vec<Vec<Complex64>>,
    /// Channel rows per symbol time (`n_r` x `K n_t`). A single entry means
    /// the channel is constant over the frame.
    pub gains: Vec<CMatrix>,
    pub sigma_v2: f64,
}

impl LocalView {
    pub fn slots(&self) -> usize {
        self.observations.len()
    }

    pub fn gains_at(&self, t: usize) -> &CMatrix {
        &self.gains[if self.gains.len() == 1 { 0 } else { t }]
    }

    pub fn own_positions(&self) -> std::ops::Range<usize> {
        self.user * self.n_t..(self.user + 1) * self.n_t
    }

    fn is_own(&self, p: usize) -> bool {
        self.own_positions().contains(&p)
    }
}

/// Per-symbol-time estimates of every stream, indexed `[slot][position]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    pub kind: ReplicaKind,
    pub values: Vec<Vec<Complex64>>,
    /// Residual variance left by cancelling with `values`.
    pub uncertainty: Vec<Vec<f64>>,
    /// Cancel every position, not only the strongly received ones.
    pub all_positions: bool,
}

/// What a BS receives from the backhaul before one detection pass.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeInput {
    /// No cooperation: other users are treated as Gaussian noise.
    Unknown,
    Estimates(Arc<Estimates>),
    /// Candidate lists `[slot][position]`; the BS cancels with its own
    /// minimum-distance candidate.
    Lists(Arc<Vec<Vec<CandidateList>>>),
}

/// A base station detecting its own user.
#[derive(Debug, Clone)]
pub struct BsNode {
    view: LocalView,
    constellation: Constellation,
    code: ConvCode,
    interleaver: Interleaver,
    mode: DemapMode,
    mimo: MimoCancellation,
    local: LocalDetection,
    /// Demapper a priori LLRs in transmitted (interleaved) bit order.
    prior: Vec<f64>,
    decoded: Option<DecoderOutput>,
    residual: Vec<Vec<Complex64>>,
    /// Effective noise per slot and receive antenna, floored.
    noise: Vec<Vec<f64>>,
    /// Own-stream columns of the channel per slot, row-major `n_r x n_t`.
    own_gains: Vec<Vec<Complex64>>,
    /// Own and strong-interferer columns per slot, own first, for joint
    /// local detection.
    local_gains: Vec<Vec<Complex64>>,
    local_streams: usize,
    /// The current residual still contains the strong interferers.
    joint: bool,
}

impl BsNode {
    pub fn new(
        view: LocalView,
        constellation: Constellation,
        code: ConvCode,
        interleaver: Interleaver,
        mode: DemapMode,
        mimo: MimoCancellation,
        local: LocalDetection,
    ) -> Result<Self> {
        let coded = view.slots() * view.n_t * constellation.bits_per_symbol();
        check_len("interleaver", coded, interleaver.len())?;
        if view.gains.is_empty() || (view.gains.len() != 1 && view.gains.len() != view.slots()) {
            return Err(Error::Shape {
                context: "per-slot gains",
                expected: view.slots(),
                actual: view.gains.len(),
            });
        }
        let own: Vec<usize> = view.own_positions().collect();
        let columns = |cols: &[usize]| -> Vec<Vec<Complex64>> {
            view.gains
                .iter()
                .map(|g| {
                    (0..g.rows())
                        .flat_map(|n| cols.iter().map(move |&p| g.get(n, p)))
                        .collect()
                })
                .collect()
        };
        let own_gains = columns(&own);
        let mut local_cols = own.clone();
        if local == LocalDetection::Joint {
            local_cols.extend(view.coupled.iter().filter(|p| !own.contains(p)));
        }
        let local_gains = columns(&local_cols);
        let mut node = Self {
            residual: view.observations.clone(),
            noise: Vec::new(),
            own_gains,
            local_gains,
            local_streams: local_cols.len(),
            joint: false,
            view,
            constellation,
            code,
            interleaver,
            mode,
            mimo,
            local,
            prior: vec![0.0; coded],
            decoded: None,
        };
        node.apply(&NodeInput::Unknown, u64::MAX)?;
        Ok(node)
    }

    pub fn view(&self) -> &LocalView {
        &self.view
    }

    fn bits(&self) -> usize {
        self.constellation.bits_per_symbol()
    }

    /// Cancel interference according to `input`. Returns the per-slot list
    /// size when the input carries candidate lists.
    pub fn apply(&mut self, input: &NodeInput, gamma_cap: u64) -> Result<Option<Vec<u64>>> {
        let power = self.constellation.average_power();
        let slots = self.view.slots();
        let mut residual = Vec::with_capacity(slots);
        let mut noise = Vec::with_capacity(slots);
        let mut gammas = None;
        match input {
            NodeInput::Unknown => {
                for t in 0..slots {
                    let gains = self.view.gains_at(t);
                    let uncertainty: Vec<f64> = (0..gains.cols())
                        .map(|p| {
                            let modelled = self.view.is_own(p)
                                || (self.local == LocalDetection::Joint
                                    && self.view.coupled.binary_search(&p).is_ok());
                            if modelled {
                                0.0
                            } else {
                                power
                            }
                        })
                        .collect();
                    residual.push(self.view.observations[t].clone());
                    noise.push(
                        residual_noise(gains, self.view.sigma_v2, &uncertainty)?.per_dimension,
                    );
                }
            }
            NodeInput::Estimates(est) => {
                check_len("estimate slots", slots, est.values.len())?;
                for t in 0..slots {
                    let (values, uncertainty) = self.merge_estimates(
                        t,
                        &est.values[t],
                        &est.uncertainty[t],
                        est.all_positions,
                    )?;
                    let (r, n) = self.cancel_slot(t, values, &uncertainty, est.kind)?;
                    residual.push(r);
                    noise.push(n);
                }
            }
            NodeInput::Lists(lists) => {
                check_len("list slots", slots, lists.len())?;
                let mut per_slot = Vec::with_capacity(slots);
                for t in 0..slots {
                    let (selected, gamma) = self.local_argmin(t, &lists[t], gamma_cap)?;
                    per_slot.push(gamma);
                    let cols = self.view.gains_at(t).cols();
                    let mut values = vec![Complex64::new(0.0, 0.0); cols];
                    let mut uncertainty = vec![0.0; cols];
                    for p in 0..cols {
                        if self.view.is_own(p) {
                            continue;
                        }
                        match self.view.coupled.iter().position(|&c| c == p) {
                            Some(i) => values[p] = self.constellation.point(selected[i]),
                            None => uncertainty[p] = power,
                        }
                    }
                    let (r, n) = self.cancel_slot(t, values, &uncertainty, ReplicaKind::Rmp)?;
                    residual.push(r);
                    noise.push(n);
                }
                gammas = Some(per_slot);
            }
        }
        for n in noise.iter_mut().flatten() {
            *n = n.max(NOISE_FLOOR);
        }
        self.residual = residual;
        self.noise = noise;
        self.joint = matches!(input, NodeInput::Unknown) && self.local_streams > self.view.n_t;
        Ok(gammas)
    }

    /// Keep the estimates this BS may use; everything else is noise.
    fn merge_estimates(
        &self,
        t: usize,
        values: &[Complex64],
        uncertainty: &[f64],
        all_positions: bool,
    ) -> Result<(Vec<Complex64>, Vec<f64>)> {
        let cols = self.view.gains_at(t).cols();
        check_len("estimate positions", cols, values.len())?;
        check_len("estimate positions", cols, uncertainty.len())?;
        let power = self.constellation.average_power();
        let mut v = vec![Complex64::new(0.0, 0.0); cols];
        let mut u = vec![0.0; cols];
        for p in 0..cols {
            if self.view.is_own(p) {
                continue;
            }
            if all_positions || self.view.coupled.binary_search(&p).is_ok() {
                v[p] = values[p];
                u[p] = uncertainty[p];
            } else {
                u[p] = power;
            }
        }
        Ok((v, u))
    }

    fn cancel_slot(
        &self,
        t: usize,
        values: Vec<Complex64>,
        uncertainty: &[f64],
        kind: ReplicaKind,
    ) -> Result<(Vec<Complex64>, Vec<f64>)> {
        let gains = self.view.gains_at(t);
        let replica = ReplicaVector {
            values,
            kind,
            protected: self.view.own_positions().collect(),
        };
        let r = cancel(&self.view.observations[t], gains, &replica)?;
        let n = residual_noise(gains, self.view.sigma_v2, uncertainty)?.per_dimension;
        Ok((r, n))
    }

    /// Minimum-distance candidate over the strongly received positions.
    /// Returns the candidate (one index per coupled position) and Γ.
    pub fn local_argmin(
        &self,
        t: usize,
        lists: &[CandidateList],
        gamma_cap: u64,
    ) -> Result<(Vec<usize>, u64)> {
        let coupled: Vec<CandidateList> = self
            .view
            .coupled
            .iter()
            .map(|&p| {
                lists.get(p).cloned().ok_or(Error::Shape {
                    context: "candidate lists",
                    expected: p + 1,
                    actual: lists.len(),
                })
            })
            .collect::<Result<_>>()?;
        let candidates = enumerate_candidates(&coupled, gamma_cap)?;
        let gamma = candidates.len() as u64;
        let metrics = self.partials(t, &self.view.coupled, &candidates);
        let best = argmin_index(&metrics);
        Ok((candidates.into_iter().nth(best).unwrap_or_default(), gamma))
    }

    /// Local squared distance of every candidate, entry `i` of a candidate
    /// sitting on position `positions[i]`.
    pub fn partials(&self, t: usize, positions: &[usize], candidates: &[Vec<usize>]) -> Vec<f64> {
        partial_distances(
            &self.view.observations[t],
            self.view.gains_at(t),
            positions,
            candidates,
            &self.constellation,
        )
    }

    /// `rounds` demapper/decoder exchanges on the current residual.
    pub fn turbo(&mut self, rounds: usize) -> Result<()> {
        let bits = self.bits();
        let n_t = self.view.n_t;
        let own: Vec<usize> = self.view.own_positions().collect();
        let mut joint_priors = vec![0.0; self.local_streams * bits];
        for _ in 0..rounds {
            let mut extrinsic = vec![0.0; self.prior.len()];
            for t in 0..self.view.slots() {
                let gains = self.view.gains_at(t);
                let n_r = gains.rows();
                let span = t * n_t * bits..(t + 1) * n_t * bits;
                let noise = &self.noise[t];
                let g_slot = if self.own_gains.len() == 1 { 0 } else { t };
                if self.joint {
                    joint_priors[..n_t * bits].copy_from_slice(&self.prior[span.clone()]);
                    let out = demap_llr(
                        &self.constellation,
                        &DemapProblem {
                            residual: &self.residual[t],
                            gains: &self.local_gains[g_slot],
                            noise_var: noise,
                            priors: &joint_priors,
                        },
                        self.mode,
                    )?;
                    extrinsic[span].copy_from_slice(&out[..n_t * bits]);
                } else if n_t == 1 || self.mimo == MimoCancellation::UserBased {
                    let out = demap_llr(
                        &self.constellation,
                        &DemapProblem {
                            residual: &self.residual[t],
                            gains: &self.own_gains[g_slot],
                            noise_var: noise,
                            priors: &self.prior[span.clone()],
                        },
                        self.mode,
                    )?;
                    extrinsic[span].copy_from_slice(&out);
                } else {
                    let soft: Vec<_> = (0..n_t)
                        .map(|a| {
                            let b = (t * n_t + a) * bits;
                            soft_symbol(
                                &symbol_posterior(&self.prior[b..b + bits], &self.constellation),
                                &self.constellation,
                            )
                        })
                        .collect();
                    for a in 0..n_t {
                        let mut r = self.residual[t].clone();
                        let mut nv = noise.clone();
                        for (b, s) in soft.iter().enumerate().filter(|&(b, _)| b != a) {
                            for n in 0..n_r {
                                let g = gains.get(n, own[b]);
                                r[n] -= g * s.mean;
                                nv[n] += g.norm_sqr() * s.variance;
                            }
                        }
                        let g: Vec<Complex64> = (0..n_r).map(|n| gains.get(n, own[a])).collect();
                        let b = (t * n_t + a) * bits;
                        let out = demap_llr(
                            &self.constellation,
                            &DemapProblem {
                                residual: &r,
                                gains: &g,
                                noise_var: &nv,
                                priors: &self.prior[b..b + bits],
                            },
                            self.mode,
                        )?;
                        extrinsic[b..b + bits].copy_from_slice(&out);
                    }
                }
            }
            let decoded = self
                .code
                .decode(&self.interleaver.deinterleave(&extrinsic)?)?;
            self.prior = self.interleaver.interleave(&decoded.extrinsic.values)?;
            self.decoded = Some(decoded);
        }
        Ok(())
    }

    /// Symbol probabilities of the own user in transmit order, from the
    /// decoder output selected by `source`. Uniform before the first decode.
    pub fn posteriors(&self, source: EstimateSource) -> Result<Vec<SymbolPosterior>> {
        let bits = self.bits();
        let llrs = match (&self.decoded, source) {
            (None, _) => {
                let symbols = self.prior.len() / bits;
                return Ok(vec![
                    SymbolPosterior::uniform(self.constellation.len());
                    symbols
                ]);
            }
            (Some(d), EstimateSource::Posterior) => {
                self.interleaver.interleave(&d.app_coded.values)?
            }
            (Some(_), EstimateSource::Extrinsic) => self.prior.clone(),
        };
        Ok(llrs
            .chunks(bits)
            .map(|c| symbol_posterior(c, &self.constellation))
            .collect())
    }

    /// Message bit decisions from the latest decode.
    pub fn decisions(&self) -> Option<&[u8]> {
        self.decoded.as_ref().map(|d| d.decisions.as_slice())
    }

    pub fn decoder_output(&self) -> Option<&DecoderOutput> {
        self.decoded.as_ref()
    }
}
