use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetMode {
    /// `mem - threshold` after a spike.
    #[default]
    Subtract,
    /// `0` after a spike.
    Zero,
}

/// Discrete-time leaky integrate-and-fire parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifParams<S> {
    /// Membrane decay per timestep, in (0, 1).
    pub beta: S,
    pub threshold: S,
    /// Absolute refractory period in timesteps.
    pub t_ref: usize,
    /// Arctan surrogate slope `k`.
    pub surrogate_slope: S,
    pub reset: ResetMode,
    /// Treat the reset term as a constant in the backward pass.
    pub detach_reset: bool,
}

impl<S: Scalar> LifParams<S> {
    pub fn new(beta: S, threshold: S) -> Self {
        Self {
            beta,
            threshold,
            t_ref: 0,
            surrogate_slope: S::of(2.0),
            reset: ResetMode::Subtract,
            detach_reset: true,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.beta > S::zero() && self.beta < S::one()) {
            return Err(crate::Error::InvalidParameter(format!(
                "beta must lie in (0,1), got {}",
                self.beta
            )));
        }
        if !(self.threshold > S::zero()) {
            return Err(crate::Error::InvalidParameter(format!(
                "threshold must be > 0, got {}",
                self.threshold
            )));
        }
        if !(self.surrogate_slope > S::zero()) {
            return Err(crate::Error::InvalidParameter("surrogate slope must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifStep<S> {
    pub spike: bool,
    /// Integrated membrane before the reset.
    pub pre_reset: S,
    /// Membrane carried to the next step.
    pub mem: S,
    pub counter: usize,
}

/// `mem' = beta * mem + drive`; spikes iff `mem' > threshold` and the neuron is not refractory.
pub fn lif_step<S: Scalar>(mem: S, drive: S, p: &LifParams<S>, refractory_counter: usize) -> LifStep<S> {
    let u = p.beta * mem + drive;
    let spike = refractory_counter == 0 && u > p.threshold;
    let (mem, counter) = if spike {
        let m = match p.reset {
            ResetMode::Subtract => u - p.threshold,
            ResetMode::Zero => S::zero(),
        };
        (m, p.t_ref)
    } else {
        (u, refractory_counter.saturating_sub(1))
    };
    LifStep {
        spike,
        pre_reset: u,
        mem,
        counter,
    }
}

/// Derivative of the arctan spike surrogate `atan(pi k u / 2) / pi + 1/2`:
/// `(k/2) / (1 + (pi k u / 2)^2)`.
#[inline]
pub fn surrogate_grad<S: Scalar>(u: S, k: S) -> S {
    let x = S::PI() * k * u / S::of(2.0);
    k / S::of(2.0) / (S::one() + x * x)
}

/// The smooth function whose derivative is [`surrogate_grad`].
#[inline]
pub fn soft_spike<S: Scalar>(u: S, k: S) -> S {
    (S::PI() * k * u / S::of(2.0)).atan() / S::PI() + S::of(0.5)
}
