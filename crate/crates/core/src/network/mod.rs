//! Network-level detection: base-station nodes, the selection unit, the
//! iteration schedule and backhaul metering.
//!
//! Every frame starts with one local pass in which each BS treats the other
//! users as noise. Each network iteration then publishes the decoders'
//! a posteriori estimates, exchanges them over the (metered) backhaul,
//! cancels and runs the turbo loop again.

mod backhaul;
mod frame;
mod node;
mod selection;

use std::fmt;
use std::str::FromStr;

pub use backhaul::{
    index_bits, meter_hard, meter_rmp_lists, meter_rmp_partials, meter_rmp_reports, meter_soft,
    BackhaulLedger, Link, MessageKind, Node,
};
pub use frame::{
    average_gamma, generate_frame, quantize, run_frame, Fading, Frame, FrameOutcome, FrameSetup,
};
pub use node::{
    BsNode, EstimateSource, Estimates, LocalDetection, LocalView, MimoCancellation, NodeInput,
};
pub use selection::{argmin_index, partial_distances, su_select, BsReport, Selection, SuStrategy};

use crate::detection::{DemapMode, DEFAULT_GAMMA_CAP};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    /// No cooperation.
    Isolated,
    /// Cancellation with the transmitted symbols (isolated-cell bound).
    PerfectIc,
    SoftIc,
    HardIc,
    /// Candidate-list exchange with minimum-distance selection.
    Rmp,
    /// Centralized exhaustive MAP detection over all users and all BSs.
    JointMl,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Isolated,
        Strategy::PerfectIc,
        Strategy::SoftIc,
        Strategy::HardIc,
        Strategy::Rmp,
        Strategy::JointMl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Isolated => "isolated",
            Strategy::PerfectIc => "perfect-ic",
            Strategy::SoftIc => "soft-ic",
            Strategy::HardIc => "hard-ic",
            Strategy::Rmp => "rmp",
            Strategy::JointMl => "joint-ml",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IterationSchedule {
    pub network_iterations: usize,
    pub turbo_iterations: usize,
}

impl Default for IterationSchedule {
    fn default() -> Self {
        Self {
            network_iterations: 4,
            turbo_iterations: 10,
        }
    }
}

impl IterationSchedule {
    pub fn new(network_iterations: usize, turbo_iterations: usize) -> Result<Self> {
        if network_iterations == 0 || turbo_iterations == 0 {
            return Err(Error::InvalidParameter(
                "iteration counts must be at least one".into(),
            ));
        }
        Ok(Self {
            network_iterations,
            turbo_iterations,
        })
    }
}

/// Detector settings shared by all strategies.
#[derive(Debug, Clone, PartialEq)]
pub struct DidConfig {
    pub schedule: IterationSchedule,
    pub su: SuStrategy,
    pub rho_th: f64,
    pub tau_max: usize,
    pub gamma_cap: u64,
    /// Bits per real dimension of an exchanged soft symbol.
    pub quant_bits: u32,
    pub demap_mode: DemapMode,
    pub mimo: MimoCancellation,
    /// Detection before anything has been exchanged.
    pub local: LocalDetection,
    pub source: EstimateSource,
    /// Keep every node's backhaul input for replay.
    pub record_messages: bool,
}

impl Default for DidConfig {
    fn default() -> Self {
        Self {
            schedule: IterationSchedule::default(),
            su: SuStrategy::default(),
            rho_th: 0.2,
            tau_max: 4,
            gamma_cap: DEFAULT_GAMMA_CAP,
            quant_bits: 6,
            demap_mode: DemapMode::default(),
            mimo: MimoCancellation::default(),
            local: LocalDetection::default(),
            source: EstimateSource::default(),
            record_messages: false,
        }
    }
}

impl DidConfig {
    pub fn validate(&self) -> Result<()> {
        IterationSchedule::new(
            self.schedule.network_iterations,
            self.schedule.turbo_iterations,
        )?;
        if !(0.0..1.0).contains(&self.rho_th) {
            return Err(Error::InvalidParameter(format!(
                "rho_th must lie in [0, 1), got {}",
                self.rho_th
            )));
        }
        if self.tau_max == 0 || self.gamma_cap == 0 {
            return Err(Error::InvalidParameter(
                "tau_max and gamma_cap must be positive".into(),
            ));
        }
        if !(1..=16).contains(&self.quant_bits) {
            return Err(Error::InvalidParameter(format!(
                "quantizer bits must lie in 1..=16, got {}",
                self.quant_bits
            )));
        }
        Ok(())
    }
}
