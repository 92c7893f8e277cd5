//! Compact device models: all-pass microring modulators, the multi-wavelength
//! comb source, and noisy photodetectors.

pub(crate) mod comb;
mod mrm;
mod pd;

pub use comb::{generate_comb_offsets, load_comb_offsets, save_comb_offsets, CombOffset, CombSource};
pub use mrm::{MrmParams, Notch};
pub use pd::{pd_detect, PdParams};
