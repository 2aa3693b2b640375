//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored; lists are comma separated.
//! Unknown keys are rejected so typos cannot silently fall back to defaults.

use std::fmt::Write as _;
use std::path::Path;

use netdid_core::channel::CouplingMatrix;
use netdid_core::detection::{DemapMode, DEFAULT_GAMMA_CAP};
use netdid_core::network::{
    DidConfig, EstimateSource, Fading, FrameSetup, IterationSchedule, LocalDetection,
    MimoCancellation, Strategy, SuStrategy,
};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub cells: usize,
    pub users: usize,
    pub zeta: usize,
    pub rho_d: f64,
    pub rho_n: f64,
    pub rho_o: f64,
    pub n_t: usize,
    pub n_r: usize,
    /// Cells per cluster. 1 is distributed detection; `cells` is the
    /// single-cluster joint reference.
    pub phi: usize,
    pub code: String,
    pub constellation: String,
    pub message_len: usize,
    pub fading: Fading,
    pub strategies: Vec<Strategy>,
    pub su: SuStrategy,
    pub rho_th: f64,
    pub tau_max: usize,
    pub gamma_cap: u64,
    pub quant_bits: u32,
    pub network_iterations: usize,
    pub turbo_iterations: usize,
    pub demap: DemapMode,
    pub mimo: MimoCancellation,
    /// Detection before any exchange: joint with strong interferers or Gaussian.
    pub local: LocalDetection,
    pub source: EstimateSource,
    pub snr_db: Vec<f64>,
    pub min_frames: u64,
    pub min_errors: u64,
    pub max_frames: u64,
    /// Frames simulated between checks of the stopping rule.
    pub batch: u64,
    pub seed: u64,
    /// ζ values of the backhaul curve.
    pub backhaul_zetas: Vec<usize>,
    pub backhaul_frames: u64,
    pub backhaul_snr_db: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        let did = DidConfig::default();
        Self {
            cells: 4,
            users: 4,
            zeta: 2,
            rho_d: 1.0,
            rho_n: 0.5,
            rho_o: 0.0,
            n_t: 1,
            n_r: 1,
            phi: 1,
            code: "conv75".into(),
            constellation: "qpsk".into(),
            message_len: 510,
            fading: Fading::Fast,
            strategies: vec![Strategy::SoftIc, Strategy::HardIc, Strategy::Rmp],
            su: did.su,
            rho_th: did.rho_th,
            tau_max: did.tau_max,
            gamma_cap: DEFAULT_GAMMA_CAP,
            quant_bits: did.quant_bits,
            network_iterations: did.schedule.network_iterations,
            turbo_iterations: did.schedule.turbo_iterations,
            demap: did.demap_mode,
            mimo: did.mimo,
            local: did.local,
            source: did.source,
            snr_db: vec![4.0, 6.0, 8.0, 10.0],
            min_frames: 200,
            min_errors: 100,
            max_frames: 20_000,
            batch: 50,
            seed: 1,
            backhaul_zetas: vec![1, 2, 3, 4, 5],
            backhaul_frames: 20,
            backhaul_snr_db: 10.0,
        }
    }
}

fn demap_name(m: DemapMode) -> &'static str {
    match m {
        DemapMode::LogSum => "log-sum",
        DemapMode::MaxLog => "max-log",
    }
}

fn mimo_name(m: MimoCancellation) -> &'static str {
    match m {
        MimoCancellation::UserBased => "user",
        MimoCancellation::StreamBased => "stream",
    }
}

fn local_name(l: LocalDetection) -> &'static str {
    match l {
        LocalDetection::Joint => "joint",
        LocalDetection::Gaussian => "gaussian",
    }
}

fn source_name(s: EstimateSource) -> &'static str {
    match s {
        EstimateSource::Posterior => "posterior",
        EstimateSource::Extrinsic => "extrinsic",
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Config(format!("{key} = {value}: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| bad(key, value, e))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| num(key, s))
        .collect()
}

impl SimConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Defaults overridden by every assignment in `text`, then validated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            config
                .apply(line)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    /// Apply one `key=value` assignment without validating.
    pub fn apply(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key = value, got '{assignment}'")))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "cells" => self.cells = num(key, value)?,
            "users" => self.users = num(key, value)?,
            "zeta" => self.zeta = num(key, value)?,
            "rho_d" => self.rho_d = num(key, value)?,
            "rho_n" => self.rho_n = num(key, value)?,
            "rho_o" => self.rho_o = num(key, value)?,
            "n_t" => self.n_t = num(key, value)?,
            "n_r" => self.n_r = num(key, value)?,
            "phi" => self.phi = num(key, value)?,
            "code" => self.code = value.to_string(),
            "constellation" => self.constellation = value.to_string(),
            "message_len" => self.message_len = num(key, value)?,
            "fading" => self.fading = num(key, value)?,
            "strategies" => self.strategies = list(key, value)?,
            "su" => self.su = num(key, value)?,
            "rho_th" => self.rho_th = num(key, value)?,
            "tau_max" => self.tau_max = num(key, value)?,
            "gamma_cap" => self.gamma_cap = num(key, value)?,
            "quant_bits" => self.quant_bits = num(key, value)?,
            "network_iterations" => self.network_iterations = num(key, value)?,
            "turbo_iterations" => self.turbo_iterations = num(key, value)?,
            "demap" => {
                self.demap = match value {
                    "log-sum" => DemapMode::LogSum,
                    "max-log" => DemapMode::MaxLog,
                    _ => return Err(bad(key, value, "expected log-sum or max-log")),
                }
            }
            "mimo" => {
                self.mimo = match value {
                    "user" => MimoCancellation::UserBased,
                    "stream" => MimoCancellation::StreamBased,
                    _ => return Err(bad(key, value, "expected user or stream")),
                }
            }
            "local" => {
                self.local = match value {
                    "joint" => LocalDetection::Joint,
                    "gaussian" => LocalDetection::Gaussian,
                    _ => return Err(bad(key, value, "expected joint or gaussian")),
                }
            }
            "source" => {
                self.source = match value {
                    "posterior" => EstimateSource::Posterior,
                    "extrinsic" => EstimateSource::Extrinsic,
                    _ => return Err(bad(key, value, "expected posterior or extrinsic")),
                }
            }
            "snr_db" => self.snr_db = list(key, value)?,
            "min_frames" => self.min_frames = num(key, value)?,
            "min_errors" => self.min_errors = num(key, value)?,
            "max_frames" => self.max_frames = num(key, value)?,
            "batch" => self.batch = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "backhaul_zetas" => self.backhaul_zetas = list(key, value)?,
            "backhaul_frames" => self.backhaul_frames = num(key, value)?,
            "backhaul_snr_db" => self.backhaul_snr_db = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("cells", self.cells as u64),
            ("users", self.users as u64),
            ("n_t", self.n_t as u64),
            ("n_r", self.n_r as u64),
            ("phi", self.phi as u64),
            ("message_len", self.message_len as u64),
            ("tau_max", self.tau_max as u64),
            ("gamma_cap", self.gamma_cap),
            ("network_iterations", self.network_iterations as u64),
            ("turbo_iterations", self.turbo_iterations as u64),
            ("min_frames", self.min_frames),
            ("max_frames", self.max_frames),
            ("batch", self.batch),
            ("backhaul_frames", self.backhaul_frames),
        ];
        if let Some((name, _)) = counts.iter().find(|c| c.1 == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config(
                "snr_db must be a nonempty list of finite values".into(),
            ));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("strategies must not be empty".into()));
        }
        if self.code != "conv75" {
            return Err(Error::Config(format!(
                "unsupported code '{}', only conv75",
                self.code
            )));
        }
        if self.constellation != "qpsk" {
            return Err(Error::Config(format!(
                "unsupported constellation '{}', only qpsk",
                self.constellation
            )));
        }
        if self.phi != 1 && self.phi != self.cells {
            return Err(Error::Config(format!(
                "phi must be 1 (distributed) or {} (one cluster), got {}",
                self.cells, self.phi
            )));
        }
        if self.min_frames > self.max_frames {
            return Err(Error::Config("min_frames exceeds max_frames".into()));
        }
        self.coupling()?;
        self.did_config()?;
        self.frame_setup(self.zeta)?;
        Ok(())
    }

    pub fn coupling(&self) -> Result<CouplingMatrix> {
        self.coupling_with(self.zeta)
    }

    pub fn coupling_with(&self, zeta: usize) -> Result<CouplingMatrix> {
        Ok(CouplingMatrix::build(
            self.cells, self.users, zeta, self.rho_d, self.rho_n, self.rho_o,
        )?)
    }

    pub fn did_config(&self) -> Result<DidConfig> {
        let config = DidConfig {
            schedule: IterationSchedule::new(self.network_iterations, self.turbo_iterations)?,
            su: self.su,
            rho_th: self.rho_th,
            tau_max: self.tau_max,
            gamma_cap: self.gamma_cap,
            quant_bits: self.quant_bits,
            demap_mode: self.demap,
            mimo: self.mimo,
            local: self.local,
            source: self.source,
            record_messages: false,
        };
        config.validate()?;
        Ok(config)
    }

    /// Interleavers are fixed per run and derived from the master seed.
    pub fn frame_setup(&self, zeta: usize) -> Result<FrameSetup> {
        Ok(FrameSetup::new(
            self.coupling_with(zeta)?,
            self.n_t,
            self.n_r,
            self.message_len,
            self.seed.wrapping_add(0x5EED),
            self.fading,
        )?)
    }

    /// Every field as `key = value`, parseable by [`SimConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("cells", self.cells.to_string());
        kv("users", self.users.to_string());
        kv("zeta", self.zeta.to_string());
        kv("rho_d", self.rho_d.to_string());
        kv("rho_n", self.rho_n.to_string());
        kv("rho_o", self.rho_o.to_string());
        kv("n_t", self.n_t.to_string());
        kv("n_r", self.n_r.to_string());
        kv("phi", self.phi.to_string());
        kv("code", self.code.clone());
        kv("constellation", self.constellation.clone());
        kv("message_len", self.message_len.to_string());
        kv("fading", self.fading.to_string());
        kv("strategies", join(&self.strategies));
        kv("su", self.su.name().to_string());
        kv("rho_th", self.rho_th.to_string());
        kv("tau_max", self.tau_max.to_string());
        kv("gamma_cap", self.gamma_cap.to_string());
        kv("quant_bits", self.quant_bits.to_string());
        kv("network_iterations", self.network_iterations.to_string());
        kv("turbo_iterations", self.turbo_iterations.to_string());
        kv("demap", demap_name(self.demap).to_string());
        kv("mimo", mimo_name(self.mimo).to_string());
        kv("local", local_name(self.local).to_string());
        kv("source", source_name(self.source).to_string());
        kv("snr_db", join(&self.snr_db));
        kv("min_frames", self.min_frames.to_string());
        kv("min_errors", self.min_errors.to_string());
        kv("max_frames", self.max_frames.to_string());
        kv("batch", self.batch.to_string());
        kv("seed", self.seed.to_string());
        kv("backhaul_zetas", join(&self.backhaul_zetas));
        kv("backhaul_frames", self.backhaul_frames.to_string());
        kv("backhaul_snr_db", self.backhaul_snr_db.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = SimConfig::default();
        c.strategies = vec![Strategy::Rmp, Strategy::Isolated];
        c.snr_db = vec![-1.5, 0.1, 7.0];
        c.su = SuStrategy::Plurality;
        c.demap = DemapMode::MaxLog;
        c.mimo = MimoCancellation::StreamBased;
        c.local = LocalDetection::Gaussian;
        c.rho_th = 0.15;
        assert_eq!(SimConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = SimConfig::parse("# 9-cell\n\ncells = 9 # cells\nusers=9\nzeta = 3\n").unwrap();
        assert_eq!((c.cells, c.users, c.zeta), (9, 9, 3));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "cells = 0",
            "snr_db =",
            "strategies = nope",
            "colour = red",
            "cells 4",
            "zeta = 4",
            "constellation = 16qam",
            "phi = 3",
            "min_frames = 10\nmax_frames = 5",
            "rho_th = 1.5",
        ] {
            assert!(SimConfig::parse(text).is_err(), "{text}");
        }
    }
}
