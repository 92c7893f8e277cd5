//! Continuous-time co-simulation of one optoelectronic neuron: an AdEx
//! membrane, the buffer driving a MOSCAP ring modulator through its RC
//! limit, the ring's coupled-mode optics, a dither bias lock and the
//! supply-side energy per spike.

// `!(x > 0.0)` checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adex;
pub mod energy;
pub mod moscap;
pub mod preset;
pub mod regime;
pub mod stabilize;

pub use adex::{adex_integrate, AdexParams, AdexTrace};
pub use energy::{energy_account, EnergyBreakdown, EnergyReport};
pub use moscap::{cavity_rates, cmt_ring_output, moscap_drive, MoscapMrmParams};
pub use preset::{run_preset, InputPulse, RingSetup, SpikeShape, TransientPreset, TransientRun, PRESET_NAMES};
pub use regime::{classify_regime, mean_rate, Regime};
pub use stabilize::{bias_stabilize, BiasLoop, LockReport};

pub type AdexParamsF64 = AdexParams<f64>;
pub type MoscapMrmParamsF64 = MoscapMrmParams<f64>;
