use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{NetworkSpec, ParamRole};
use crate::rng::{names, stream};
use crate::scalar::Scalar;

/// Uniform initialization ranges for the photonic parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitRanges {
    pub w_exc: (f64, f64),
    pub w_inh: (f64, f64),
    pub gain: (f64, f64),
}

impl Default for InitRanges {
    fn default() -> Self {
        Self {
            w_exc: (-2.0, 2.0),
            w_inh: (-3.0, 1.0),
            gain: (-0.9, 1.1),
        }
    }
}

/// Draws the flat parameter vector from the `init` sub-stream of `seed`.
/// Dense weights use `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
pub fn init_parameters<S: Scalar>(spec: &NetworkSpec<S>, ranges: &InitRanges, seed: u64) -> Vec<S> {
    let mut rng = stream(seed, names::INIT);
    let mut params = vec![S::zero(); spec.n_params()];
    for g in spec.param_groups() {
        let (lo, hi) = match g.role {
            ParamRole::ExcitatoryRow => ranges.w_exc,
            ParamRole::InhibitoryRow => ranges.w_inh,
            ParamRole::Gain => ranges.gain,
            ParamRole::Dense => {
                let b = 1.0 / (g.fan_in as f64).sqrt();
                (-b, b)
            }
        };
        for p in &mut params[g.offset..g.offset + g.len] {
            *p = S::of(rng.random_range(lo..hi));
        }
    }
    params
}
