//! Finite-difference check of the BPTT gradient.

use std::time::Instant;

use super::loss::loss_ce_motm;
use super::network::{ForwardMode, ForwardRngs, Network, NetworkSpec, SpikeModel};
use crate::error::Result;
use crate::rng::{names, stream};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Parameters whose probe flipped a spike or moved a max-over-time index.
    pub skipped: usize,
    pub max_rel_err: f64,
    pub worst_param: usize,
    pub seconds: f64,
}

fn rngs() -> ForwardRngs {
    ForwardRngs {
        noise: stream(0, names::NOISE),
        dropout: stream(0, names::DROPOUT),
    }
}

struct Probe {
    loss: f64,
    spikes: Vec<Vec<f64>>,
    argmax: Vec<usize>,
}

fn probe(
    net: &mut Network<f64>,
    raster: &[f64],
    steps: usize,
    params: &[f64],
    target: usize,
    mode: ForwardMode,
) -> Result<Probe> {
    net.prepare(params)?;
    net.forward(raster, steps, params, mode, &mut rngs())?;
    let l = loss_ce_motm(net.output_mem(), net.n_outputs(), target);
    Ok(Probe {
        loss: l.loss,
        spikes: net.output().spikes,
        argmax: l.argmax_t,
    })
}

/// Compares the analytic gradient of the MOTM cross-entropy with central
/// differences, probe size `1e-5 * max(1, |p|)`. Relative error is
/// `|a - b| / max(|a|, |b|, abs_floor)`; the floor keeps partials that sit near
/// the difference quotient's round-off level (about `eps * |loss| / h`) from
/// dominating. Parameters whose probe moves a max-over-time index, or (with
/// binary spikes) flips any spike, are skipped.
pub fn grad_check(
    spec: &NetworkSpec<f64>,
    params: &[f64],
    raster: &[f64],
    steps: usize,
    target: usize,
    spikes: SpikeModel,
    abs_floor: f64,
) -> Result<GradCheckReport> {
    let start = Instant::now();
    let mode = ForwardMode {
        noise: false,
        dropout_p: 0.0,
        spikes,
    };
    let mut net = Network::new(spec.clone())?;
    let base = probe(&mut net, raster, steps, params, target, mode)?;
    let l = loss_ce_motm(net.output_mem(), net.n_outputs(), target);
    let g_mem = l.grad_mem(steps, target, 1.0);
    let mut grads = vec![0.0; params.len()];
    net.backward(&g_mem, params, &mut grads)?;
    net.flush_gradients(params, &mut grads)?;

    let mut report = GradCheckReport {
        checked: 0,
        skipped: 0,
        max_rel_err: 0.0,
        worst_param: 0,
        seconds: 0.0,
    };
    let mut p = params.to_vec();
    for i in 0..params.len() {
        let h = 1e-5 * params[i].abs().max(1.0);
        p[i] = params[i] + h;
        let plus = probe(&mut net, raster, steps, &p, target, mode)?;
        p[i] = params[i] - h;
        let minus = probe(&mut net, raster, steps, &p, target, mode)?;
        p[i] = params[i];
        let flipped = [&plus, &minus]
            .iter()
            .any(|q| (spikes != SpikeModel::Soft && q.spikes != base.spikes) || q.argmax != base.argmax);
        if flipped {
            report.skipped += 1;
            continue;
        }
        let fd = (plus.loss - minus.loss) / (2.0 * h);
        let a = grads[i];
        let rel = (a - fd).abs() / a.abs().max(fd.abs()).max(abs_floor);
        report.checked += 1;
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_param = i;
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}
