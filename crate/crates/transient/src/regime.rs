//! Firing-pattern labels from spike times.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Tonic,
    Adapting,
    Bursting,
    Silent,
    /// None of the other patterns matched.
    Irregular,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Tonic => "tonic",
            Regime::Adapting => "adapting",
            Regime::Bursting => "bursting",
            Regime::Silent => "silent",
            Regime::Irregular => "irregular",
        };
        f.write_str(s)
    }
}

pub const TONIC_MAX_CV: f64 = 0.05;
pub const ADAPT_MIN_RATIO: f64 = 1.02;
pub const ADAPT_MIN_ISIS: usize = 3;
pub const BURST_MIN_RATIO: f64 = 5.0;

pub fn isis(spikes: &[f64]) -> Vec<f64> {
    spikes.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Coefficient of variation (population standard deviation over mean).
pub fn cv(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Ratio of the upper to the lower cluster mean of the best two-cluster
/// split of the sorted values (minimum within-cluster sum of squares).
pub fn cluster_ratio(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let sse = |xs: &[f64]| {
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (m, xs.iter().map(|x| (x - m).powi(2)).sum::<f64>())
    };
    (1..v.len())
        .map(|k| {
            let (lo, a) = sse(&v[..k]);
            let (hi, b) = sse(&v[k..]);
            (a + b, hi / lo)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, r)| r)
}

/// Checks in order: silent, bursting, adapting, tonic; anything else is
/// irregular.
pub fn classify_regime(spikes: &[f64]) -> Regime {
    if spikes.len() < 2 {
        return Regime::Silent;
    }
    let d = isis(spikes);
    if cluster_ratio(&d).is_some_and(|r| r > BURST_MIN_RATIO) {
        return Regime::Bursting;
    }
    if d.len() >= ADAPT_MIN_ISIS && d.windows(2).all(|w| w[1] >= ADAPT_MIN_RATIO * w[0]) {
        return Regime::Adapting;
    }
    if cv(&d) < TONIC_MAX_CV {
        return Regime::Tonic;
    }
    Regime::Irregular
}

/// Spikes per second over `[first spike, last spike]`.
pub fn mean_rate(spikes: &[f64]) -> f64 {
    match spikes {
        [first, .., last] if last > first => (spikes.len() - 1) as f64 / (last - first),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_isis(d: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0];
        for x in d {
            t.push(t.last().unwrap() + x);
        }
        t
    }

    #[test]
    fn examples() {
        let tonic: Vec<f64> = (0..10).map(|k| k as f64 * 1e-9).collect();
        assert_eq!(classify_regime(&tonic), Regime::Tonic);
        assert!((mean_rate(&tonic) - 1e9).abs() < 1.0);
        assert_eq!(
            classify_regime(&from_isis(&[1e-9, 1.5e-9, 2.3e-9, 3.6e-9])),
            Regime::Adapting
        );
        let mut burst = vec![0.8e-9; 4];
        burst.push(10e-9);
        burst.extend([0.8e-9; 4]);
        burst.push(10e-9);
        assert_eq!(classify_regime(&from_isis(&burst)), Regime::Bursting);
        assert_eq!(classify_regime(&[]), Regime::Silent);
        assert_eq!(classify_regime(&[1e-9]), Regime::Silent);
        assert_eq!(classify_regime(&from_isis(&[1.0, 2.0, 1.0, 2.0])), Regime::Irregular);
    }

    #[test]
    fn two_adapting_isis_are_not_enough() {
        assert_eq!(classify_regime(&from_isis(&[1.0, 1.5])), Regime::Irregular);
    }

    proptest! {
        #[test]
        fn periodic_trains_are_tonic(period in 1e-10f64..1e-8, n in 2usize..40, t0 in 0.0f64..1e-8) {
            let s: Vec<f64> = (0..n).map(|k| t0 + k as f64 * period).collect();
            prop_assert_eq!(classify_regime(&s), Regime::Tonic);
        }

        #[test]
        fn geometric_growth_is_adapting(isi0 in 1e-10f64..1e-9, g in 1.03f64..1.4, n in 3usize..6) {
            let d: Vec<f64> = (0..n).map(|k| isi0 * g.powi(k as i32)).collect();
            // keep the spread below the burst ratio
            prop_assume!(d[n - 1] / d[0] < 5.0);
            prop_assert_eq!(classify_regime(&from_isis(&d)), Regime::Adapting);
        }
    }
}
