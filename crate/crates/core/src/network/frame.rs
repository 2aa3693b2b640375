use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use super::backhaul::{
    meter_hard, meter_rmp_lists, meter_rmp_partials, meter_rmp_reports, meter_soft, BackhaulLedger,
    Link, Node,
};
use super::node::{BsNode, Estimates, LocalView, NodeInput};
use super::selection::{su_select, BsReport, SuStrategy};
use super::{DidConfig, Strategy};
use crate::cancellation::ReplicaKind;
use crate::channel::{draw_channel, transmit, ChannelRealization, CouplingMatrix, NoiseSpec};
use crate::coding::{Constellation, ConvCode, DecoderOutput, Interleaver};
use crate::detection::{
    build_candidate_list, demap_llr, enumerate_candidates, soft_symbol, CandidateList,
    DemapProblem, SymbolPosterior,
};
use crate::{Error, Result};

/// Largest hypothesis count the joint reference detector will enumerate.
const JOINT_HYPOTHESIS_CAP: usize = 1 << 16;

/// Coherence of the fading over a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum Fading {
    /// Independent draw every symbol time.
    #[default]
    Fast,
    /// One draw for the whole frame.
    Block,
}

impl Fading {
    pub fn name(self) -> &'static str {
        match self {
            Fading::Fast => "fast",
            Fading::Block => "block",
        }
    }
}

impl fmt::Display for Fading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Fading::Fast),
            "block" => Ok(Fading::Block),
            _ => Err(Error::InvalidParameter(format!(
                "unknown fading model '{s}'"
            ))),
        }
    }
}

/// Static per-run setup: topology, code, constellation and interleavers.
#[derive(Debug, Clone)]
pub struct FrameSetup {
    pub coupling: CouplingMatrix,
    pub n_t: usize,
    pub n_r: usize,
    pub constellation: Constellation,
    pub code: ConvCode,
    pub message_len: usize,
    pub interleavers: Vec<Interleaver>,
    pub fading: Fading,
}

impl FrameSetup {
    pub fn new(
        coupling: CouplingMatrix,
        n_t: usize,
        n_r: usize,
        message_len: usize,
        interleaver_seed: u64,
        fading: Fading,
    ) -> Result<Self> {
        if n_t == 0 || n_r == 0 {
            return Err(Error::InvalidParameter(
                "antenna counts must be positive".into(),
            ));
        }
        if message_len == 0 {
            return Err(Error::EmptyMessage);
        }
        let code = ConvCode::new();
        let constellation = Constellation::qpsk_gray();
        let coded = code.coded_len(message_len);
        let per_slot = constellation.bits_per_symbol() * n_t;
        if !coded.is_multiple_of(per_slot) {
            return Err(Error::InvalidParameter(format!(
                "{coded} coded bits do not fill whole symbol times of {per_slot} bits"
            )));
        }
        let interleavers = (0..coupling.num_users())
            .map(|k| Interleaver::new(coded, user_seed(interleaver_seed, k)))
            .collect();
        Ok(Self {
            coupling,
            n_t,
            n_r,
            constellation,
            code,
            message_len,
            interleavers,
            fading,
        })
    }

    pub fn num_users(&self) -> usize {
        self.coupling.num_users()
    }

    pub fn num_bs(&self) -> usize {
        self.coupling.num_bs()
    }

    pub fn coded_len(&self) -> usize {
        self.code.coded_len(self.message_len)
    }

    pub fn symbols_per_user(&self) -> usize {
        self.coded_len() / self.constellation.bits_per_symbol()
    }

    pub fn slots(&self) -> usize {
        self.symbols_per_user() / self.n_t
    }

    pub fn positions(&self) -> usize {
        self.num_users() * self.n_t
    }

    /// Inputs of base station `m` for `frame`.
    pub fn local_view(&self, frame: &Frame, m: usize) -> LocalView {
        let n_r = self.n_r;
        LocalView {
            bs: m,
            user: self.coupling.desired_user(m),
            n_t: self.n_t,
            coupled: self
                .coupling
                .coupled_users(m)
                .into_iter()
                .flat_map(|k| k * self.n_t..(k + 1) * self.n_t)
                .collect(),
            observations: frame
                .received
                .iter()
                .map(|r| r[m * n_r..(m + 1) * n_r].to_vec())
                .collect(),
            gains: frame.channels.iter().map(|c| c.bs_block(m)).collect(),
            sigma_v2: frame.noise_variance,
        }
    }

    pub fn node(&self, frame: &Frame, m: usize, config: &DidConfig) -> Result<BsNode> {
        let view = self.local_view(frame, m);
        let interleaver = self.interleavers[view.user].clone();
        BsNode::new(
            view,
            self.constellation.clone(),
            self.code.clone(),
            interleaver,
            config.demap_mode,
            config.mimo,
            config.local,
        )
    }
}

fn user_seed(master: u64, k: usize) -> u64 {
    master ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(k as u64 + 1)
}

/// One transmitted and received coded frame.
#[derive(Debug, Clone)]
pub struct Frame {
    pub messages: Vec<Vec<u8>>,
    /// Constellation indices per user in transmit order; symbol
    /// `t n_t + a` leaves antenna `a` at symbol time `t`.
    pub symbols: Vec<Vec<usize>>,
    /// One realization per symbol time, or a single one for block fading.
    pub channels: Vec<ChannelRealization>,
    /// Stacked samples of all BSs per symbol time.
    pub received: Vec<Vec<Complex64>>,
    pub noise_variance: f64,
}

impl Frame {
    pub fn channel(&self, t: usize) -> &ChannelRealization {
        &self.channels[if self.channels.len() == 1 { 0 } else { t }]
    }

    /// Transmitted constellation indices of all positions at time `t`.
    pub fn transmitted(&self, n_t: usize, t: usize) -> Vec<usize> {
        self.symbols
            .iter()
            .flat_map(|s| s[t * n_t..(t + 1) * n_t].iter().copied())
            .collect()
    }
}

/// Draw messages, channels and noise. The random stream is consumed in the
/// same order for every noise level, so a frame index seeds identical
/// messages and fading at every SNR.
pub fn generate_frame<R: Rng + ?Sized>(
    setup: &FrameSetup,
    noise: NoiseSpec,
    rng: &mut R,
) -> Result<Frame> {
    let mut messages = Vec::with_capacity(setup.num_users());
    let mut symbols = Vec::with_capacity(setup.num_users());
    for k in 0..setup.num_users() {
        let message: Vec<u8> = (0..setup.message_len)
            .map(|_| rng.random_range(0..2u8))
            .collect();
        let coded = setup.interleavers[k].interleave(&setup.code.encode(&message)?)?;
        symbols.push(setup.constellation.map_indices(&coded)?);
        messages.push(message);
    }
    let draws = match setup.fading {
        Fading::Fast => setup.slots(),
        Fading::Block => 1,
    };
    let channels: Vec<ChannelRealization> = (0..draws)
        .map(|_| draw_channel(&setup.coupling, setup.n_t, setup.n_r, rng))
        .collect();
    let mut frame = Frame {
        messages,
        symbols,
        channels,
        received: Vec::with_capacity(setup.slots()),
        noise_variance: noise.variance(),
    };
    for t in 0..setup.slots() {
        let s: Vec<Complex64> = frame
            .transmitted(setup.n_t, t)
            .into_iter()
            .map(|q| setup.constellation.point(q))
            .collect();
        let r = transmit(frame.channel(t), &s, noise, rng)?;
        frame.received.push(r);
    }
    Ok(frame)
}

/// Endpoint-inclusive uniform quantizer with `2^bits` levels on
/// `[-amplitude, amplitude]`.
pub fn quantize(x: f64, bits: u32, amplitude: f64) -> f64 {
    let steps = ((1u64 << bits) - 1) as f64;
    let step = 2.0 * amplitude / steps;
    let idx = ((x.clamp(-amplitude, amplitude) + amplitude) / step).round();
    -amplitude + idx * step
}

/// Mean Γ per network iteration over frames that reached it.
pub fn average_gamma(per_frame: &[Vec<f64>]) -> Vec<f64> {
    let len = per_frame.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = per_frame.iter().filter_map(|g| g.get(i).copied()).collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FrameOutcome {
    /// Message decisions per user.
    pub decisions: Vec<Vec<u8>>,
    pub bit_errors: usize,
    /// Bit errors after the local pass and after every completed network
    /// iteration.
    pub errors_per_pass: Vec<usize>,
    pub ledger: BackhaulLedger,
    /// Mean Γ per symbol time of every network iteration (list strategies).
    pub gamma: Vec<f64>,
    /// Set when the frame stopped early; decisions then come from the last
    /// completed pass.
    pub failure: Option<Error>,
    /// Backhaul input of every BS, `[iteration][bs]`, when recording.
    pub messages: Vec<Vec<NodeInput>>,
    /// Final decoder state of every BS.
    pub decoder_outputs: Vec<Option<DecoderOutput>>,
}

fn count_errors(frame: &Frame, decisions: &[Vec<u8>]) -> usize {
    frame
        .messages
        .iter()
        .zip(decisions)
        .map(|(m, d)| m.iter().zip(d).filter(|(a, b)| a != b).count())
        .sum()
}

fn node_decisions(setup: &FrameSetup, nodes: &[BsNode]) -> Vec<Vec<u8>> {
    let mut out = vec![vec![0u8; setup.message_len]; setup.num_users()];
    for node in nodes {
        if let Some(d) = node.decisions() {
            out[node.view().user] = d.to_vec();
        }
    }
    out
}

/// Detect one frame with `strategy`.
pub fn run_frame(
    strategy: Strategy,
    setup: &FrameSetup,
    frame: &Frame,
    config: &DidConfig,
) -> Result<FrameOutcome> {
    config.validate()?;
    if strategy == Strategy::JointMl {
        return run_joint_ml(setup, frame, config);
    }
    let mut nodes: Vec<BsNode> = (0..setup.num_bs())
        .map(|m| setup.node(frame, m, config))
        .collect::<Result<_>>()?;
    for node in &mut nodes {
        node.turbo(config.schedule.turbo_iterations)?;
    }
    let mut state = Exchange::new(setup, config);
    let mut errors_per_pass = vec![count_errors(frame, &node_decisions(setup, &nodes))];
    let mut failure = None;
    for it in 1..=config.schedule.network_iterations {
        let inputs = match state.inputs(strategy, it, frame, &nodes) {
            Ok(inputs) => inputs,
            Err(e @ Error::ListExplosion { .. }) => {
                failure = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        let mut gammas = Vec::new();
        let mut exploded = None;
        for (node, input) in nodes.iter_mut().zip(&inputs) {
            match node.apply(input, config.gamma_cap) {
                Ok(g) => gammas.extend(g.unwrap_or_default()),
                Err(e @ Error::ListExplosion { .. }) => {
                    exploded = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(e) = exploded {
            failure = Some(e);
            break;
        }
        if !gammas.is_empty() {
            state.record_gamma(&gammas);
            for (m, node) in nodes.iter().enumerate() {
                let per_bs = &gammas[m * setup.slots()..(m + 1) * setup.slots()];
                debug_assert_eq!(node.view().bs, m);
                if setup.coupling.strong_set(m).is_empty() {
                    continue;
                }
                meter_rmp_reports(&mut state.ledger, it, to_su(m), per_bs);
            }
        }
        for node in &mut nodes {
            node.turbo(config.schedule.turbo_iterations)?;
        }
        if config.record_messages {
            state.messages.push(inputs);
        }
        errors_per_pass.push(count_errors(frame, &node_decisions(setup, &nodes)));
    }
    let decisions = node_decisions(setup, &nodes);
    Ok(FrameOutcome {
        bit_errors: count_errors(frame, &decisions),
        decisions,
        errors_per_pass,
        ledger: state.ledger,
        gamma: state.gamma,
        failure,
        messages: state.messages,
        decoder_outputs: nodes.iter().map(|n| n.decoder_output().cloned()).collect(),
    })
}

fn to_su(m: usize) -> Link {
    Link::new(Node::Bs(m), Node::SelectionUnit)
}

/// Backhaul state carried across network iterations.
struct Exchange<'a> {
    setup: &'a FrameSetup,
    config: &'a DidConfig,
    ledger: BackhaulLedger,
    gamma: Vec<f64>,
    messages: Vec<Vec<NodeInput>>,
    previous_hard: Option<Vec<Vec<usize>>>,
    previous_lists: Option<Vec<Vec<CandidateList>>>,
}

impl<'a> Exchange<'a> {
    fn new(setup: &'a FrameSetup, config: &'a DidConfig) -> Self {
        Self {
            setup,
            config,
            ledger: BackhaulLedger::new(),
            gamma: Vec::new(),
            messages: Vec::new(),
            previous_hard: None,
            previous_lists: None,
        }
    }

    fn record_gamma(&mut self, gammas: &[u64]) {
        self.gamma
            .push(gammas.iter().map(|&g| g as f64).sum::<f64>() / gammas.len() as f64);
    }

    /// Links `serving BS of k -> m` for every BS `m` that receives `k` strongly.
    fn peer_links(&self, k: usize) -> Vec<Link> {
        let c = &self.setup.coupling;
        (0..c.num_bs())
            .filter(|&m| c.strong_set(m).contains(&k))
            .map(|m| Link::new(Node::Bs(c.serving_bs(k)), Node::Bs(m)))
            .collect()
    }

    fn posteriors(&self, nodes: &[BsNode]) -> Result<Vec<Vec<SymbolPosterior>>> {
        (0..self.setup.num_users())
            .map(|k| nodes[self.setup.coupling.serving_bs(k)].posteriors(self.config.source))
            .collect()
    }

    /// Reshape per-user, per-symbol values into `[slot][position]`.
    fn by_slot<T: Clone>(&self, per_user: &[Vec<T>]) -> Vec<Vec<T>> {
        let n_t = self.setup.n_t;
        (0..self.setup.slots())
            .map(|t| {
                per_user
                    .iter()
                    .flat_map(|u| u[t * n_t..(t + 1) * n_t].iter().cloned())
                    .collect()
            })
            .collect()
    }

    fn common(&self, est: Estimates) -> Vec<NodeInput> {
        vec![NodeInput::Estimates(Arc::new(est)); self.setup.num_bs()]
    }

    fn inputs(
        &mut self,
        strategy: Strategy,
        it: usize,
        frame: &Frame,
        nodes: &[BsNode],
    ) -> Result<Vec<NodeInput>> {
        let setup = self.setup;
        let qam = &setup.constellation;
        let symbols = setup.symbols_per_user() as u64;
        match strategy {
            Strategy::Isolated => Ok(vec![NodeInput::Unknown; setup.num_bs()]),
            Strategy::PerfectIc => {
                let values = frame
                    .symbols
                    .iter()
                    .map(|s| s.iter().map(|&q| qam.point(q)).collect::<Vec<_>>())
                    .collect::<Vec<_>>();
                let zeros = vec![vec![0.0; setup.symbols_per_user()]; setup.num_users()];
                Ok(self.common(Estimates {
                    kind: ReplicaKind::Genie,
                    values: self.by_slot(&values),
                    uncertainty: self.by_slot(&zeros),
                    all_positions: true,
                }))
            }
            Strategy::SoftIc => {
                let amp = qam.max_amplitude();
                let power = qam.average_power();
                let bits = self.config.quant_bits;
                let mut values = Vec::new();
                let mut uncertainty = Vec::new();
                for post in self.posteriors(nodes)? {
                    let (v, u): (Vec<Complex64>, Vec<f64>) = post
                        .iter()
                        .map(|p| {
                            let mean = soft_symbol(p, qam).mean;
                            let q = Complex64::new(
                                quantize(mean.re, bits, amp),
                                quantize(mean.im, bits, amp),
                            );
                            (q, (power - q.norm_sqr()).max(0.0))
                        })
                        .unzip();
                    values.push(v);
                    uncertainty.push(u);
                }
                for k in 0..setup.num_users() {
                    let links = self.peer_links(k);
                    meter_soft(&mut self.ledger, it, &links, symbols, bits);
                }
                Ok(self.common(Estimates {
                    kind: ReplicaKind::Soft,
                    values: self.by_slot(&values),
                    uncertainty: self.by_slot(&uncertainty),
                    all_positions: false,
                }))
            }
            Strategy::HardIc => {
                let decisions: Vec<Vec<usize>> = self
                    .posteriors(nodes)?
                    .iter()
                    .map(|post| {
                        post.iter()
                            .map(|p| qam.slice(soft_symbol(p, qam).mean))
                            .collect()
                    })
                    .collect();
                for (k, now) in decisions.iter().enumerate() {
                    let links = self.peer_links(k);
                    let prev = self.previous_hard.as_ref().map(|p| p[k].as_slice());
                    meter_hard(
                        &mut self.ledger,
                        it,
                        &links,
                        now,
                        prev,
                        qam.bits_per_symbol(),
                    )?;
                }
                let values: Vec<Vec<Complex64>> = decisions
                    .iter()
                    .map(|d| d.iter().map(|&q| qam.point(q)).collect())
                    .collect();
                let zeros = vec![vec![0.0; setup.symbols_per_user()]; setup.num_users()];
                self.previous_hard = Some(decisions);
                Ok(self.common(Estimates {
                    kind: ReplicaKind::Hard,
                    values: self.by_slot(&values),
                    uncertainty: self.by_slot(&zeros),
                    all_positions: false,
                }))
            }
            Strategy::Rmp => self.rmp_inputs(it, nodes),
            Strategy::JointMl => unreachable!("joint detection has no exchange"),
        }
    }

    fn rmp_inputs(&mut self, it: usize, nodes: &[BsNode]) -> Result<Vec<NodeInput>> {
        let setup = self.setup;
        let config = self.config;
        let qam = &setup.constellation;
        let lists: Vec<Vec<CandidateList>> = self
            .posteriors(nodes)?
            .iter()
            .map(|post| {
                post.iter()
                    .map(|p| build_candidate_list(p, config.rho_th, config.tau_max))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for (k, user_lists) in lists.iter().enumerate() {
            if self.peer_links(k).is_empty() {
                continue;
            }
            let prev = self.previous_lists.as_ref().map(|p| p[k].as_slice());
            let link = to_su(setup.coupling.serving_bs(k));
            meter_rmp_lists(
                &mut self.ledger,
                it,
                link,
                user_lists,
                prev,
                qam.bits_per_symbol(),
            )?;
        }
        let slotted = Arc::new(self.by_slot(&lists));
        self.previous_lists = Some(lists);
        if config.su == SuStrategy::LocalArgmin {
            return Ok(vec![NodeInput::Lists(slotted); setup.num_bs()]);
        }

        // Global enumeration over every position; one common selection.
        let all: Vec<usize> = (0..setup.positions()).collect();
        let mut values = Vec::with_capacity(setup.slots());
        let mut gammas = Vec::with_capacity(setup.slots());
        for (t, slot_lists) in slotted.iter().enumerate() {
            let candidates = enumerate_candidates(slot_lists, config.gamma_cap)?;
            let reports: Vec<BsReport> = nodes
                .iter()
                .map(|n| {
                    BsReport::from_partials(
                        n.view().bs,
                        n.partials(t, &all, &candidates),
                        config.su == SuStrategy::SumOfPartials,
                    )
                })
                .collect();
            let chosen = su_select(&reports, setup.num_bs(), candidates.len(), config.su)?;
            values.push(
                candidates[chosen.for_bs(0)]
                    .iter()
                    .map(|&q| qam.point(q))
                    .collect::<Vec<_>>(),
            );
            gammas.push(candidates.len() as u64);
        }
        for m in 0..setup.num_bs() {
            if setup.coupling.strong_set(m).is_empty() {
                continue;
            }
            if config.su == SuStrategy::SumOfPartials {
                meter_rmp_partials(&mut self.ledger, it, to_su(m), &gammas, config.quant_bits);
            } else {
                meter_rmp_reports(&mut self.ledger, it, to_su(m), &gammas);
            }
        }
        self.record_gamma(&gammas);
        Ok(self.common(Estimates {
            kind: ReplicaKind::Rmp,
            uncertainty: vec![vec![0.0; setup.positions()]; setup.slots()],
            values,
            all_positions: true,
        }))
    }
}

/// Centralized reference: every BS forwards its samples and channel, and one
/// detector demaps all streams jointly against all observations.
fn run_joint_ml(setup: &FrameSetup, frame: &Frame, config: &DidConfig) -> Result<FrameOutcome> {
    let qam = &setup.constellation;
    let bits = qam.bits_per_symbol();
    let positions = setup.positions();
    let hypotheses = (qam.len() as f64).powi(positions as i32);
    if hypotheses > JOINT_HYPOTHESIS_CAP as f64 {
        return Err(Error::InvalidParameter(format!(
            "joint detection over {positions} streams exceeds {JOINT_HYPOTHESIS_CAP} hypotheses"
        )));
    }
    let n_t = setup.n_t;
    let users = setup.num_users();
    let coded = setup.coded_len();
    let mut priors = vec![vec![0.0; coded]; users];
    let mut outputs: Vec<Option<DecoderOutput>> = vec![None; users];
    let noise = vec![frame.noise_variance.max(1e-9); setup.num_bs() * setup.n_r];
    let mut stacked = vec![0.0; positions * bits];
    for _ in 0..config.schedule.turbo_iterations {
        let mut extrinsic = vec![vec![0.0; coded]; users];
        for t in 0..setup.slots() {
            for p in 0..positions {
                let (k, a) = (p / n_t, p % n_t);
                let b = (t * n_t + a) * bits;
                stacked[p * bits..(p + 1) * bits].copy_from_slice(&priors[k][b..b + bits]);
            }
            let out = demap_llr(
                qam,
                &DemapProblem {
                    residual: &frame.received[t],
                    gains: frame.channel(t).effective().as_slice(),
                    noise_var: &noise,
                    priors: &stacked,
                },
                config.demap_mode,
            )?;
            for p in 0..positions {
                let (k, a) = (p / n_t, p % n_t);
                let b = (t * n_t + a) * bits;
                extrinsic[k][b..b + bits].copy_from_slice(&out[p * bits..(p + 1) * bits]);
            }
        }
        for k in 0..users {
            let il = &setup.interleavers[k];
            let decoded = setup.code.decode(&il.deinterleave(&extrinsic[k])?)?;
            priors[k] = il.interleave(&decoded.extrinsic.values)?;
            outputs[k] = Some(decoded);
        }
    }
    let decisions: Vec<Vec<u8>> = outputs
        .iter()
        .map(|o| o.as_ref().map(|d| d.decisions.clone()).unwrap_or_default())
        .collect();
    let errors = count_errors(frame, &decisions);
    Ok(FrameOutcome {
        decisions,
        bit_errors: errors,
        errors_per_pass: vec![errors],
        ledger: BackhaulLedger::new(),
        gamma: Vec::new(),
        failure: None,
        messages: Vec::new(),
        decoder_outputs: outputs,
    })
}
