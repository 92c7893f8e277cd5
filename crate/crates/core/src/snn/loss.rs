use crate::scalar::Scalar;

/// Cross-entropy on max-over-time membrane logits.
#[derive(Debug, Clone, PartialEq)]
pub struct MotmLoss<S> {
    pub loss: S,
    pub logits: Vec<S>,
    /// Timestep holding each neuron's maximum (first occurrence).
    pub argmax_t: Vec<usize>,
    pub probs: Vec<S>,
}

/// `mem` is `[T x n_classes]` row-major.
pub fn loss_ce_motm<S: Scalar>(mem: &[S], n_classes: usize, target: usize) -> MotmLoss<S> {
    assert!(n_classes > 0 && target < n_classes && mem.len().is_multiple_of(n_classes) && !mem.is_empty());
    let mut logits = vec![S::neg_infinity(); n_classes];
    let mut argmax_t = vec![0; n_classes];
    for (t, row) in mem.chunks(n_classes).enumerate() {
        for (n, &v) in row.iter().enumerate() {
            if v > logits[n] {
                logits[n] = v;
                argmax_t[n] = t;
            }
        }
    }
    let probs = softmax(&logits);
    let max = logits.iter().copied().fold(S::neg_infinity(), S::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<S>().ln();
    MotmLoss {
        loss: lse - logits[target],
        logits,
        argmax_t,
        probs,
    }
}

impl<S: Scalar> MotmLoss<S> {
    /// d(loss)/d(mem), non-zero only at each neuron's argmax timestep. `scale`
    /// multiplies the result (e.g. 1/batch for mean reduction).
    pub fn grad_mem(&self, steps: usize, target: usize, scale: S) -> Vec<S> {
        let n = self.logits.len();
        let mut g = vec![S::zero(); steps * n];
        for k in 0..n {
            let onehot = if k == target { S::one() } else { S::zero() };
            g[self.argmax_t[k] * n + k] = (self.probs[k] - onehot) * scale;
        }
        g
    }
}

pub fn softmax<S: Scalar>(z: &[S]) -> Vec<S> {
    let max = z.iter().copied().fold(S::neg_infinity(), S::max);
    let e: Vec<S> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: S = e.iter().copied().sum();
    e.into_iter().map(|v| v / sum).collect()
}

/// Argmax of per-neuron spike counts; ties go to the lowest index.
pub fn decode_prediction<S: Scalar>(counts: &[S]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Sums a `[T x n]` spike raster into per-neuron counts.
pub fn spike_counts<S: Scalar>(spikes: &[S], n: usize) -> Vec<S> {
    let mut c = vec![S::zero(); n];
    for row in spikes.chunks(n) {
        for (a, &s) in c.iter_mut().zip(row) {
            *a += s;
        }
    }
    c
}
