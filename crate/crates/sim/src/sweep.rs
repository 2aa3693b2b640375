//! Seeded Monte Carlo sweeps.
//!
//! Frame `i` draws from `ChaCha8Rng(seed)` on stream `i`, so every strategy
//! and SNR point sees the same messages and fading, and the results do not
//! depend on how frames are spread over worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use netdid_core::channel::calibrate_noise;
use netdid_core::network::{generate_frame, run_frame, DidConfig, FrameSetup, Strategy};

use crate::config::SimConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub strategy: Strategy,
    pub snr_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub ber: f64,
    /// Standard error of the BER estimate from the per-frame error spread.
    pub ber_std_err: f64,
    /// Mean Γ per symbol time, per network iteration. Empty for strategies
    /// without candidate lists.
    pub gamma: Vec<f64>,
    pub total_backhaul_bits: u64,
    /// Backhaul bits per detected coded symbol.
    pub bits_per_symbol: f64,
    /// Frames whose candidate enumeration hit the cap.
    pub failed_frames: u64,
    /// Fewer bit errors than the stopping rule asks for.
    pub low_confidence: bool,
}

/// Per-frame figures kept by the accumulator.
#[derive(Debug, Clone)]
struct FrameStats {
    bit_errors: u64,
    gamma: Vec<f64>,
    backhaul_bits: u64,
    failed: bool,
}

#[derive(Debug, Default)]
struct Accumulator {
    frames: u64,
    bit_errors: u64,
    squared_errors: f64,
    gamma_sum: Vec<f64>,
    gamma_count: Vec<u64>,
    backhaul_bits: u64,
    failed: u64,
}

impl Accumulator {
    fn add(&mut self, s: &FrameStats) {
        self.frames += 1;
        self.bit_errors += s.bit_errors;
        self.squared_errors += (s.bit_errors as f64).powi(2);
        if self.gamma_sum.len() < s.gamma.len() {
            self.gamma_sum.resize(s.gamma.len(), 0.0);
            self.gamma_count.resize(s.gamma.len(), 0);
        }
        for (i, g) in s.gamma.iter().enumerate() {
            self.gamma_sum[i] += g;
            self.gamma_count[i] += 1;
        }
        self.backhaul_bits += s.backhaul_bits;
        self.failed += u64::from(s.failed);
    }
}

/// Everything needed to simulate single frames of one configuration.
pub struct FrameRunner {
    pub setup: FrameSetup,
    pub did: DidConfig,
    pub seed: u64,
}

impl FrameRunner {
    pub fn new(config: &SimConfig, zeta: usize) -> Result<Self> {
        Ok(Self {
            setup: config.frame_setup(zeta)?,
            did: config.did_config()?,
            seed: config.seed,
        })
    }

    fn run(&self, strategy: Strategy, snr_db: f64, index: u64) -> Result<FrameStats> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let noise = calibrate_noise(snr_db, &self.setup.coupling);
        let frame = generate_frame(&self.setup, noise, &mut rng)?;
        let out = run_frame(strategy, &self.setup, &frame, &self.did)?;
        Ok(FrameStats {
            bit_errors: out.bit_errors as u64,
            gamma: out.gamma,
            backhaul_bits: out.ledger.total(),
            failed: out.failure.is_some(),
        })
    }

    fn batch(
        &self,
        strategy: Strategy,
        snr_db: f64,
        range: std::ops::Range<u64>,
    ) -> Result<Vec<FrameStats>> {
        range
            .into_par_iter()
            .map(|i| self.run(strategy, snr_db, i))
            .collect()
    }

    /// Simulate one point until at least `min_frames` frames and
    /// `min_errors` bit errors, or `max_frames` frames.
    pub fn point(&self, strategy: Strategy, snr_db: f64, stopping: Stopping) -> Result<ResultRow> {
        let mut acc = Accumulator::default();
        let mut next = 0;
        let mut size = stopping.min_frames;
        while next < stopping.max_frames {
            let end = (next + size).min(stopping.max_frames);
            for s in self.batch(strategy, snr_db, next..end)? {
                acc.add(&s);
            }
            next = end;
            if acc.bit_errors >= stopping.min_errors {
                break;
            }
            size = stopping.batch;
        }
        Ok(self.row(strategy, snr_db, &acc, stopping.min_errors))
    }

    fn row(
        &self,
        strategy: Strategy,
        snr_db: f64,
        acc: &Accumulator,
        min_errors: u64,
    ) -> ResultRow {
        let n = acc.frames as f64;
        let bits_per_frame = (self.setup.num_users() * self.setup.message_len) as f64;
        let ber = acc.bit_errors as f64 / (n * bits_per_frame);
        let mean = acc.bit_errors as f64 / n;
        let variance = if acc.frames > 1 {
            ((acc.squared_errors - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        let symbols = n * (self.setup.num_users() * self.setup.symbols_per_user()) as f64;
        ResultRow {
            strategy,
            snr_db,
            frames: acc.frames,
            bit_errors: acc.bit_errors,
            ber,
            ber_std_err: (variance / n).sqrt() / bits_per_frame,
            gamma: acc
                .gamma_sum
                .iter()
                .zip(&acc.gamma_count)
                .map(|(s, &c)| s / c as f64)
                .collect(),
            total_backhaul_bits: acc.backhaul_bits,
            bits_per_symbol: acc.backhaul_bits as f64 / symbols,
            failed_frames: acc.failed,
            low_confidence: acc.bit_errors < min_errors,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stopping {
    pub min_frames: u64,
    pub min_errors: u64,
    pub max_frames: u64,
    pub batch: u64,
}

impl Stopping {
    pub fn from_config(c: &SimConfig) -> Self {
        Self {
            min_frames: c.min_frames,
            min_errors: c.min_errors,
            max_frames: c.max_frames,
            batch: c.batch,
        }
    }

    /// Exactly `frames` frames.
    pub fn fixed(frames: u64) -> Self {
        Self {
            min_frames: frames,
            min_errors: 0,
            max_frames: frames,
            batch: frames,
        }
    }
}

/// Every configured strategy at every SNR, sorted by (strategy, SNR).
pub fn run_sweep(config: &SimConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    if config.phi == config.cells && config.cells > 1 {
        if let Some(s) = config.strategies.iter().find(|&&s| s != Strategy::JointMl) {
            return Err(Error::Config(format!(
                "phi = {} leaves no inter-cluster exchange for '{s}'",
                config.phi
            )));
        }
    }
    let runner = FrameRunner::new(config, config.zeta)?;
    let stopping = Stopping::from_config(config);
    let mut strategies = config.strategies.clone();
    strategies.sort();
    strategies.dedup();
    let mut snrs = config.snr_db.clone();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    let mut rows = Vec::with_capacity(strategies.len() * snrs.len());
    for &strategy in &strategies {
        for &snr in &snrs {
            rows.push(runner.point(strategy, snr, stopping)?);
        }
    }
    Ok(rows)
}

/// Backhaul scheme of one curve in the bits-versus-ζ table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackhaulScheme {
    Soft { quant_bits: u32 },
    Hard,
    Rmp,
}

impl BackhaulScheme {
    pub const CURVES: [BackhaulScheme; 4] = [
        BackhaulScheme::Soft { quant_bits: 3 },
        BackhaulScheme::Soft { quant_bits: 6 },
        BackhaulScheme::Hard,
        BackhaulScheme::Rmp,
    ];

    pub fn label(self) -> String {
        match self {
            BackhaulScheme::Soft { quant_bits } => format!("soft-q{quant_bits}"),
            BackhaulScheme::Hard => "hard".into(),
            BackhaulScheme::Rmp => "rmp".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackhaulRow {
    pub zeta: usize,
    pub scheme: String,
    pub frames: u64,
    pub bits_per_symbol: f64,
}

/// Mean backhaul bits per detected symbol for each scheme and ζ.
pub fn run_backhaul(config: &SimConfig) -> Result<Vec<BackhaulRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for &zeta in &config.backhaul_zetas {
        for scheme in BackhaulScheme::CURVES {
            let mut c = config.clone();
            let strategy = match scheme {
                BackhaulScheme::Soft { quant_bits } => {
                    c.quant_bits = quant_bits;
                    Strategy::SoftIc
                }
                BackhaulScheme::Hard => Strategy::HardIc,
                BackhaulScheme::Rmp => Strategy::Rmp,
            };
            let runner = FrameRunner::new(&c, zeta)?;
            let row = runner.point(
                strategy,
                config.backhaul_snr_db,
                Stopping::fixed(config.backhaul_frames),
            )?;
            rows.push(BackhaulRow {
                zeta,
                scheme: scheme.label(),
                frames: row.frames,
                bits_per_symbol: row.bits_per_symbol,
            });
        }
    }
    Ok(rows)
}
