//! Photonic spiking neural network simulation: optical tile signal path,
//! LIF dynamics with surrogate-gradient training, and design-space tooling.

// `!(x > 0.0)` checks also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dataset;
pub mod design;
pub mod error;
pub mod optile;
pub mod photonic;
pub mod rng;
pub mod scalar;
pub mod snn;
pub mod units;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type MrmParams64 = photonic::MrmParams<f64>;
pub type CombSource64 = photonic::CombSource<f64>;
pub type PdParams64 = photonic::PdParams<f64>;
pub type OpTileConfig64 = optile::OpTileConfig<f64>;
pub type LifParams64 = snn::LifParams<f64>;
pub type MrmParams32 = photonic::MrmParams<f32>;
pub type OpTileConfig32 = optile::OpTileConfig<f32>;
