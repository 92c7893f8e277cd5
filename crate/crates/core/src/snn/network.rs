//! Multi-layer network assembly and the BPTT engine.
//!
//! Parameters live in one flat vector: every weight first (layer by layer,
//! tile-major or block-major, row-major inside), then every per-neuron gain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::lif::{lif_step, soft_spike, surrogate_grad, LifParams, ResetMode};
use crate::error::{Error, Result};
use crate::optile::{tile_powers, NeuralStage, OpTileConfig, RowTransmissions};
use crate::photonic::{pd_detect, PdParams};
use crate::rng::StreamRng;
use crate::scalar::Scalar;

/// Photonic layer: parallel Op-Tiles, each owning a contiguous input slice and
/// a contiguous run of neurons.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonicSpec<S> {
    pub tiles: Vec<OpTileConfig<S>>,
    pub pd: PdParams<S>,
}

/// One dense block mapping `inputs[in_offset..in_offset + n_in]` to the next
/// `n_out` neurons of the layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenseBlock {
    pub in_offset: usize,
    pub n_in: usize,
    pub n_out: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynapseSpec<S> {
    Photonic(PhotonicSpec<S>),
    Dense(Vec<DenseBlock>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec<S> {
    pub synapse: SynapseSpec<S>,
    pub lif: LifParams<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec<S> {
    pub layers: Vec<LayerSpec<S>>,
}

/// What a slice of the parameter vector is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    ExcitatoryRow,
    InhibitoryRow,
    Gain,
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamGroup {
    pub name: String,
    pub role: ParamRole,
    pub offset: usize,
    pub len: usize,
    /// Fan-in of a dense block; 0 otherwise.
    pub fan_in: usize,
}

impl<S: Scalar> SynapseSpec<S> {
    pub fn n_inputs(&self) -> usize {
        match self {
            SynapseSpec::Photonic(p) => p.tiles.iter().map(|t| t.n_inp).sum(),
            SynapseSpec::Dense(blocks) => blocks.iter().map(|b| b.in_offset + b.n_in).max().unwrap_or(0),
        }
    }

    pub fn n_outputs(&self) -> usize {
        match self {
            SynapseSpec::Photonic(p) => p.tiles.iter().map(|t| t.n_neurons()).sum(),
            SynapseSpec::Dense(blocks) => blocks.iter().map(|b| b.n_out).sum(),
        }
    }

    pub fn n_weights(&self) -> usize {
        match self {
            SynapseSpec::Photonic(p) => p.tiles.iter().map(|t| t.n_weights()).sum(),
            SynapseSpec::Dense(blocks) => blocks.iter().map(|b| b.n_in * b.n_out).sum(),
        }
    }

    pub fn n_gains(&self) -> usize {
        match self {
            SynapseSpec::Photonic(_) => self.n_outputs(),
            SynapseSpec::Dense(_) => 0,
        }
    }
}

impl<S: Scalar> NetworkSpec<S> {
    pub fn n_inputs(&self) -> usize {
        self.layers.first().map_or(0, |l| l.synapse.n_inputs())
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.synapse.n_outputs())
    }

    pub fn n_weights(&self) -> usize {
        self.layers.iter().map(|l| l.synapse.n_weights()).sum()
    }

    pub fn n_gains(&self) -> usize {
        self.layers.iter().map(|l| l.synapse.n_gains()).sum()
    }

    pub fn n_params(&self) -> usize {
        self.n_weights() + self.n_gains()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParameter("network has no layers".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            layer.lif.validate()?;
            match &layer.synapse {
                SynapseSpec::Photonic(p) => {
                    if p.tiles.is_empty() {
                        return Err(Error::InvalidParameter(format!("layer {l} has no tiles")));
                    }
                    p.pd.validate()?;
                    for t in &p.tiles {
                        t.validate()?;
                    }
                }
                SynapseSpec::Dense(blocks) => {
                    if blocks.is_empty() || blocks.iter().any(|b| b.n_in == 0 || b.n_out == 0) {
                        return Err(Error::InvalidParameter(format!("layer {l} has an empty dense block")));
                    }
                }
            }
            if l > 0 {
                let prev = self.layers[l - 1].synapse.n_outputs();
                if prev != layer.synapse.n_inputs() {
                    return Err(Error::DimensionMismatch {
                        what: "layer fan-in vs previous layer width",
                        expected: prev,
                        got: layer.synapse.n_inputs(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Named layout of the flat parameter vector.
    pub fn param_groups(&self) -> Vec<ParamGroup> {
        let mut groups = Vec::new();
        let mut off = 0;
        for (l, layer) in self.layers.iter().enumerate() {
            match &layer.synapse {
                SynapseSpec::Photonic(p) => {
                    for (k, t) in p.tiles.iter().enumerate() {
                        for r in 0..t.n_out_rows {
                            let exc = r % 2 == 0;
                            groups.push(ParamGroup {
                                name: format!("layer{l}.tile{k}.row{r}.{}", if exc { "exc" } else { "inh" }),
                                role: if exc {
                                    ParamRole::ExcitatoryRow
                                } else {
                                    ParamRole::InhibitoryRow
                                },
                                offset: off,
                                len: t.n_inp,
                                fan_in: 0,
                            });
                            off += t.n_inp;
                        }
                    }
                }
                SynapseSpec::Dense(blocks) => {
                    for (b, blk) in blocks.iter().enumerate() {
                        groups.push(ParamGroup {
                            name: format!("layer{l}.block{b}"),
                            role: ParamRole::Dense,
                            offset: off,
                            len: blk.n_in * blk.n_out,
                            fan_in: blk.n_in,
                        });
                        off += blk.n_in * blk.n_out;
                    }
                }
            }
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if let SynapseSpec::Photonic(p) = &layer.synapse {
                for (k, t) in p.tiles.iter().enumerate() {
                    groups.push(ParamGroup {
                        name: format!("layer{l}.tile{k}.gain"),
                        role: ParamRole::Gain,
                        offset: off,
                        len: t.n_neurons(),
                        fan_in: 0,
                    });
                    off += t.n_neurons();
                }
            }
        }
        groups
    }

    /// Same network with every comb rescaled so its maximum line sits at `new_max_dbm`.
    pub fn with_source_power(&self, old_max_dbm: S, new_max_dbm: S) -> Self {
        let mut out = self.clone();
        for layer in &mut out.layers {
            if let SynapseSpec::Photonic(p) = &mut layer.synapse {
                for t in &mut p.tiles {
                    t.comb = t.comb.with_max_power(old_max_dbm, new_max_dbm);
                }
            }
        }
        out
    }
}

/// How spikes are produced in the forward pass and differentiated in the backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeModel {
    /// Heaviside forward, arctan surrogate backward.
    #[default]
    Surrogate,
    /// Heaviside forward, zero spike derivative backward (exact gradient of the
    /// piecewise-smooth forward map).
    Hard,
    /// Arctan sigmoid forward with its exact derivative backward.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForwardMode {
    pub noise: bool,
    /// Per-timestep drive dropout; 0 at evaluation.
    pub dropout_p: f64,
    pub spikes: SpikeModel,
}

impl ForwardMode {
    pub fn eval(noise: bool) -> Self {
        Self {
            noise,
            dropout_p: 0.0,
            spikes: SpikeModel::Surrogate,
        }
    }
}

/// Generators consumed by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardRngs {
    pub noise: StreamRng,
    pub dropout: StreamRng,
}

#[derive(Debug, Clone)]
struct TileState<S> {
    cfg: OpTileConfig<S>,
    stage: NeuralStage<S>,
    rows: Option<RowTransmissions<S>>,
    source_w: Vec<S>,
    split: S,
    in_off: usize,
    out_off: usize,
    w_off: usize,
    g_off: usize,
    /// d(loss)/d(T_row[r][j]) accumulated until [`Network::flush_gradients`].
    g_row: Vec<S>,
    t_neural: Vec<S>,
    p_bus: Vec<S>,
    current: Vec<S>,
    row_power: Vec<S>,
    g_r: Vec<S>,
    g_tn: Vec<S>,
}

#[derive(Debug, Clone)]
struct BlockState {
    blk: DenseBlock,
    out_off: usize,
    w_off: usize,
}

#[derive(Debug, Clone)]
enum SynState<S> {
    Photonic { tiles: Vec<TileState<S>>, pd: PdParams<S> },
    Dense(Vec<BlockState>),
}

#[derive(Debug, Clone)]
struct LayerState<S> {
    syn: SynState<S>,
    lif: LifParams<S>,
    n_out: usize,
    /// `[T x n_out]` traces of the last forward pass.
    u: Vec<S>,
    s: Vec<S>,
    sp: Vec<S>,
    mask: Vec<S>,
    mem: Vec<S>,
    counter: Vec<usize>,
    drive: Vec<S>,
    g_mem: Vec<S>,
    g_s: Vec<S>,
    g_drive: Vec<S>,
}

/// Runtime network: spec plus per-sample caches for BPTT.
#[derive(Debug, Clone)]
pub struct Network<S> {
    spec: NetworkSpec<S>,
    layers: Vec<LayerState<S>>,
    n_inputs: usize,
    n_params: usize,
    steps: usize,
    input: Vec<S>,
}

/// Copy of the traces of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput<S> {
    pub steps: usize,
    /// Pre-reset membrane of the output layer, `[T x n_out]`.
    pub output_mem: Vec<S>,
    /// Spikes of every layer, each `[T x n_l]`.
    pub spikes: Vec<Vec<S>>,
}

impl<S: Scalar> Network<S> {
    pub fn new(spec: NetworkSpec<S>) -> Result<Self> {
        spec.validate()?;
        let n_weights = spec.n_weights();
        let mut w_off = 0;
        let mut g_off = n_weights;
        let mut layers = Vec::with_capacity(spec.layers.len());
        for layer in &spec.layers {
            let n_out = layer.synapse.n_outputs();
            let syn = match &layer.synapse {
                SynapseSpec::Photonic(p) => {
                    let mut tiles = Vec::new();
                    let (mut in_off, mut out_off) = (0, 0);
                    for cfg in &p.tiles {
                        let n = cfg.n_inp;
                        tiles.push(TileState {
                            stage: NeuralStage::new(cfg),
                            rows: None,
                            source_w: cfg.comb.peak_powers_w()[..n].to_vec(),
                            split: S::one() / S::of(cfg.n_out_rows as f64),
                            in_off,
                            out_off,
                            w_off,
                            g_off,
                            g_row: vec![S::zero(); cfg.n_weights()],
                            t_neural: Vec::new(),
                            p_bus: Vec::new(),
                            current: Vec::new(),
                            row_power: vec![S::zero(); cfg.n_out_rows],
                            g_r: vec![S::zero(); cfg.n_out_rows],
                            g_tn: vec![S::zero(); n],
                            cfg: cfg.clone(),
                        });
                        in_off += n;
                        out_off += cfg.n_neurons();
                        w_off += cfg.n_weights();
                        g_off += cfg.n_neurons();
                    }
                    SynState::Photonic { tiles, pd: p.pd }
                }
                SynapseSpec::Dense(blocks) => {
                    let mut out = Vec::new();
                    let mut out_off = 0;
                    for &blk in blocks {
                        out.push(BlockState { blk, out_off, w_off });
                        out_off += blk.n_out;
                        w_off += blk.n_in * blk.n_out;
                    }
                    SynState::Dense(out)
                }
            };
            layers.push(LayerState {
                syn,
                lif: layer.lif,
                n_out,
                u: Vec::new(),
                s: Vec::new(),
                sp: Vec::new(),
                mask: Vec::new(),
                mem: vec![S::zero(); n_out],
                counter: vec![0; n_out],
                drive: vec![S::zero(); n_out],
                g_mem: vec![S::zero(); n_out],
                g_s: vec![S::zero(); n_out],
                g_drive: vec![S::zero(); n_out],
            });
        }
        Ok(Self {
            n_inputs: spec.n_inputs(),
            n_params: spec.n_params(),
            spec,
            layers,
            steps: 0,
            input: Vec::new(),
        })
    }

    pub fn spec(&self) -> &NetworkSpec<S> {
        &self.spec
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn n_outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.n_out)
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// Recomputes the weight-bank transmissions; call after every parameter update.
    pub fn prepare(&mut self, params: &[S]) -> Result<()> {
        self.check_params(params)?;
        for layer in &mut self.layers {
            if let SynState::Photonic { tiles, .. } = &mut layer.syn {
                for t in tiles {
                    let nw = t.cfg.n_weights();
                    t.rows = Some(RowTransmissions::new(&t.cfg, &params[t.w_off..t.w_off + nw]));
                }
            }
        }
        Ok(())
    }

    fn check_params(&self, params: &[S]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected: self.n_params,
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Runs one sample. `raster` is `[steps x n_inputs]` row-major.
    pub fn forward(
        &mut self,
        raster: &[S],
        steps: usize,
        params: &[S],
        mode: ForwardMode,
        rngs: &mut ForwardRngs,
    ) -> Result<()> {
        self.check_params(params)?;
        if raster.len() != steps * self.n_inputs {
            return Err(Error::DimensionMismatch {
                what: "input raster",
                expected: steps * self.n_inputs,
                got: raster.len(),
            });
        }
        if mode.spikes == SpikeModel::Soft && self.layers.iter().any(|l| l.lif.t_ref != 0) {
            return Err(Error::InvalidParameter("soft spikes require t_ref = 0".into()));
        }
        self.steps = steps;
        self.input.clear();
        self.input.extend_from_slice(raster);
        let keep = S::of(1.0 / (1.0 - mode.dropout_p));
        for layer in &mut self.layers {
            let n = layer.n_out;
            for v in [&mut layer.u, &mut layer.s, &mut layer.sp, &mut layer.mask] {
                v.clear();
                v.resize(steps * n, S::zero());
            }
            layer.mem.fill(S::zero());
            layer.counter.fill(0);
            if let SynState::Photonic { tiles, .. } = &mut layer.syn {
                for t in tiles {
                    if t.rows.is_none() {
                        return Err(Error::InvalidParameter(
                            "network not prepared for these parameters".into(),
                        ));
                    }
                    let (n_in, nn) = (t.cfg.n_inp, t.cfg.n_neurons());
                    for v in [&mut t.t_neural, &mut t.p_bus] {
                        v.clear();
                        v.resize(steps * n_in, S::zero());
                    }
                    t.current.clear();
                    t.current.resize(steps * nn, S::zero());
                }
            }
        }

        let n_in0 = self.n_inputs;
        for t in 0..steps {
            for l in 0..self.layers.len() {
                let (prev, rest) = self.layers.split_at_mut(l);
                let layer = &mut rest[0];
                let x: &[S] = if l == 0 {
                    &self.input[t * n_in0..(t + 1) * n_in0]
                } else {
                    let p = &prev[l - 1];
                    &p.s[t * p.n_out..(t + 1) * p.n_out]
                };
                synapse_forward(
                    &mut layer.syn,
                    t,
                    x,
                    params,
                    mode.noise,
                    &mut rngs.noise,
                    &mut layer.drive,
                );
                let n = layer.n_out;
                let p = layer.lif;
                for i in 0..n {
                    let idx = t * n + i;
                    let m = if mode.dropout_p > 0.0 {
                        if rngs.dropout.random::<f64>() < mode.dropout_p {
                            S::zero()
                        } else {
                            keep
                        }
                    } else {
                        S::one()
                    };
                    layer.mask[idx] = m;
                    let d = layer.drive[i] * m;
                    match mode.spikes {
                        SpikeModel::Soft => {
                            let u = p.beta * layer.mem[i] + d;
                            let s = soft_spike(u - p.threshold, p.surrogate_slope);
                            layer.mem[i] = match p.reset {
                                ResetMode::Subtract => u - p.threshold * s,
                                ResetMode::Zero => u * (S::one() - s),
                            };
                            layer.u[idx] = u;
                            layer.s[idx] = s;
                            layer.sp[idx] = surrogate_grad(u - p.threshold, p.surrogate_slope);
                        }
                        SpikeModel::Surrogate | SpikeModel::Hard => {
                            let gate = layer.counter[i] == 0;
                            let st = lif_step(layer.mem[i], d, &p, layer.counter[i]);
                            layer.mem[i] = st.mem;
                            layer.counter[i] = st.counter;
                            layer.u[idx] = st.pre_reset;
                            layer.s[idx] = if st.spike { S::one() } else { S::zero() };
                            layer.sp[idx] = if gate && mode.spikes == SpikeModel::Surrogate {
                                surrogate_grad(st.pre_reset - p.threshold, p.surrogate_slope)
                            } else {
                                S::zero()
                            };
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Steps of the last forward pass.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Pre-reset membrane of the output layer, `[T x n_out]`.
    pub fn output_mem(&self) -> &[S] {
        &self.layers.last().expect("validated non-empty").u
    }

    /// Spikes of layer `l`, `[T x n_l]`.
    pub fn layer_spikes(&self, l: usize) -> &[S] {
        &self.layers[l].s
    }

    /// Pre-reset membrane of layer `l`, `[T x n_l]`.
    pub fn layer_mem(&self, l: usize) -> &[S] {
        &self.layers[l].u
    }

    /// Total spikes per output neuron over the last forward pass.
    pub fn output_spike_counts(&self) -> Vec<S> {
        let last = self.layers.last().expect("validated non-empty");
        let mut counts = vec![S::zero(); last.n_out];
        for row in last.s.chunks(last.n_out) {
            for (c, &s) in counts.iter_mut().zip(row) {
                *c += s;
            }
        }
        counts
    }

    pub fn output(&self) -> ForwardOutput<S> {
        ForwardOutput {
            steps: self.steps,
            output_mem: self.output_mem().to_vec(),
            spikes: self.layers.iter().map(|l| l.s.clone()).collect(),
        }
    }

    /// Backpropagates `g_out_mem = d(loss)/d(output_mem)` through the last
    /// forward pass, accumulating into `grads`. Weight-bank gradients stay
    /// pending until [`Network::flush_gradients`].
    pub fn backward(&mut self, g_out_mem: &[S], params: &[S], grads: &mut [S]) -> Result<()> {
        self.check_params(params)?;
        self.check_params(grads)?;
        let n_last = self.n_outputs();
        if g_out_mem.len() != self.steps * n_last {
            return Err(Error::DimensionMismatch {
                what: "output membrane gradient",
                expected: self.steps * n_last,
                got: g_out_mem.len(),
            });
        }
        for layer in &mut self.layers {
            layer.g_mem.fill(S::zero());
        }
        let n_layers = self.layers.len();
        let n_in0 = self.n_inputs;
        for t in (0..self.steps).rev() {
            for layer in &mut self.layers {
                layer.g_s.fill(S::zero());
            }
            for l in (0..n_layers).rev() {
                let (prev, rest) = self.layers.split_at_mut(l);
                let layer = &mut rest[0];
                let n = layer.n_out;
                let p = layer.lif;
                let coupled = !p.detach_reset;
                for i in 0..n {
                    let idx = t * n + i;
                    let (u, s, sp) = (layer.u[idx], layer.s[idx], layer.sp[idx]);
                    let gm = layer.g_mem[i];
                    let (dmem_du, reset_coeff) = match p.reset {
                        ResetMode::Subtract => (S::one(), p.threshold),
                        ResetMode::Zero => (S::one() - s, u),
                    };
                    let mut g_spike = layer.g_s[i];
                    if coupled {
                        g_spike -= reset_coeff * gm;
                    }
                    let mut gu = gm * dmem_du + g_spike * sp;
                    if l + 1 == n_layers {
                        gu += g_out_mem[idx];
                    }
                    layer.g_drive[i] = gu * layer.mask[idx];
                    layer.g_mem[i] = p.beta * gu;
                }
                let (x, g_x): (&[S], Option<&mut [S]>) = if l == 0 {
                    (&self.input[t * n_in0..(t + 1) * n_in0], None)
                } else {
                    let pl = &mut prev[l - 1];
                    (&pl.s[t * pl.n_out..(t + 1) * pl.n_out], Some(&mut pl.g_s[..]))
                };
                synapse_backward(&mut layer.syn, t, x, &layer.g_drive, params, grads, g_x);
            }
        }
        Ok(())
    }

    /// Chains the pending weight-bank gradients into `grads` and clears them.
    pub fn flush_gradients(&mut self, params: &[S], grads: &mut [S]) -> Result<()> {
        self.check_params(params)?;
        self.check_params(grads)?;
        for layer in &mut self.layers {
            if let SynState::Photonic { tiles, .. } = &mut layer.syn {
                for t in tiles {
                    let nw = t.cfg.n_weights();
                    let rows = t
                        .rows
                        .as_ref()
                        .ok_or_else(|| Error::InvalidParameter("network not prepared".into()))?;
                    rows.weight_gradient(
                        &t.cfg,
                        &params[t.w_off..t.w_off + nw],
                        &t.g_row,
                        &mut grads[t.w_off..t.w_off + nw],
                    );
                    t.g_row.fill(S::zero());
                }
            }
        }
        Ok(())
    }
}

fn synapse_forward<S: Scalar>(
    syn: &mut SynState<S>,
    t: usize,
    x: &[S],
    params: &[S],
    noise: bool,
    rng: &mut StreamRng,
    drive: &mut [S],
) {
    match syn {
        SynState::Photonic { tiles, pd } => {
            for ts in tiles {
                let (n, nn) = (ts.cfg.n_inp, ts.cfg.n_neurons());
                let rows = ts.rows.as_ref().expect("checked in forward");
                let xs = &x[ts.in_off..ts.in_off + n];
                let tn = &mut ts.t_neural[t * n..(t + 1) * n];
                let pb = &mut ts.p_bus[t * n..(t + 1) * n];
                tile_powers(&ts.stage, rows, &ts.source_w, ts.split, xs, tn, pb, &mut ts.row_power);
                for m in 0..nn {
                    let ie = pd_detect(ts.row_power[2 * m], pd, rng, noise);
                    let ii = pd_detect(ts.row_power[2 * m + 1], pd, rng, noise);
                    let i = ie - ii;
                    ts.current[t * nn + m] = i;
                    drive[ts.out_off + m] = params[ts.g_off + m] * i / ts.cfg.i_unit;
                }
            }
        }
        SynState::Dense(blocks) => {
            for b in blocks.iter() {
                let (ni, no) = (b.blk.n_in, b.blk.n_out);
                let xs = &x[b.blk.in_offset..b.blk.in_offset + ni];
                for o in 0..no {
                    let w = &params[b.w_off + o * ni..b.w_off + (o + 1) * ni];
                    drive[b.out_off + o] = w.iter().zip(xs).map(|(&w, &x)| w * x).sum();
                }
            }
        }
    }
}

fn synapse_backward<S: Scalar>(
    syn: &mut SynState<S>,
    t: usize,
    x: &[S],
    g_drive: &[S],
    params: &[S],
    grads: &mut [S],
    mut g_x: Option<&mut [S]>,
) {
    match syn {
        SynState::Photonic { tiles, pd } => {
            for ts in tiles {
                let (n, nn) = (ts.cfg.n_inp, ts.cfg.n_neurons());
                let gd = &g_drive[ts.out_off..ts.out_off + nn];
                if gd.iter().all(|&g| g == S::zero()) {
                    continue;
                }
                for m in 0..nn {
                    let i = ts.current[t * nn + m];
                    grads[ts.g_off + m] += gd[m] * i / ts.cfg.i_unit;
                    let gi = gd[m] * params[ts.g_off + m] / ts.cfg.i_unit;
                    ts.g_r[2 * m] = pd.responsivity * gi;
                    ts.g_r[2 * m + 1] = -pd.responsivity * gi;
                }
                let pb = &ts.p_bus[t * n..(t + 1) * n];
                for (r, &gr) in ts.g_r.iter().enumerate() {
                    for (g, &p) in ts.g_row[r * n..(r + 1) * n].iter_mut().zip(pb) {
                        *g += gr * p;
                    }
                }
                if let Some(gx) = g_x.as_deref_mut() {
                    let rows = ts.rows.as_ref().expect("checked in forward");
                    ts.g_tn.fill(S::zero());
                    for (r, &gr) in ts.g_r.iter().enumerate() {
                        for (g, &tr) in ts.g_tn.iter_mut().zip(rows.row(r)) {
                            *g += gr * tr;
                        }
                    }
                    for j in 0..n {
                        ts.g_tn[j] *= ts.source_w[j] * ts.split;
                    }
                    let xs = &x[ts.in_off..ts.in_off + n];
                    let tn = &ts.t_neural[t * n..(t + 1) * n];
                    ts.stage.backward(xs, tn, &ts.g_tn, &mut gx[ts.in_off..ts.in_off + n]);
                }
            }
        }
        SynState::Dense(blocks) => {
            for b in blocks.iter() {
                let (ni, no) = (b.blk.n_in, b.blk.n_out);
                let xs = &x[b.blk.in_offset..b.blk.in_offset + ni];
                for o in 0..no {
                    let g = g_drive[b.out_off + o];
                    if g == S::zero() {
                        continue;
                    }
                    let base = b.w_off + o * ni;
                    for (k, &xv) in xs.iter().enumerate() {
                        grads[base + k] += g * xv;
                    }
                    if let Some(gx) = g_x.as_deref_mut() {
                        for k in 0..ni {
                            gx[b.blk.in_offset + k] += params[base + k] * g;
                        }
                    }
                }
            }
        }
    }
}
