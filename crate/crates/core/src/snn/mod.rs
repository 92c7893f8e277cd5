//! Spiking network engine: LIF dynamics, network assembly with BPTT, loss,
//! optimizer and the training loop.

pub mod gradcheck;
pub mod init;
pub mod lif;
pub mod loss;
pub mod network;
pub mod optim;
pub mod train;

pub use gradcheck::{grad_check, GradCheckReport};
pub use init::{init_parameters, InitRanges};
pub use lif::{lif_step, soft_spike, surrogate_grad, LifParams, LifStep, ResetMode};
pub use loss::{decode_prediction, loss_ce_motm, softmax, spike_counts, MotmLoss};
pub use network::{
    DenseBlock, ForwardMode, ForwardOutput, ForwardRngs, LayerSpec, Network, NetworkSpec, ParamGroup, ParamRole,
    PhotonicSpec, SpikeModel, SynapseSpec,
};
pub use optim::{adamw_step, cosine_lr, AdamW, AdamWConfig};
pub use train::{evaluate, train, train_from, BatchMetrics, EpochMetrics, EvalReport, TrainOutcome};
