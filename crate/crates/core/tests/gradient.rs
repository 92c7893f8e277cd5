use rand::Rng;
use sephia_core::config::{ExperimentConfig, TileShape};
use sephia_core::rng::stream;
use sephia_core::snn::{grad_check, init_parameters, NetworkSpec, ResetMode, SpikeModel};

fn spec(tiles: Vec<Vec<TileShape>>, thresholds: Vec<f64>, n_classes: usize, reset: ResetMode) -> NetworkSpec<f64> {
    let mut cfg = ExperimentConfig::default();
    cfg.network.tiles = tiles;
    cfg.network.thresholds = thresholds;
    cfg.network.n_classes = n_classes;
    cfg.network.reset = reset;
    cfg.network.detach_reset = false;
    cfg.network_spec().unwrap()
}

fn t(n_inp: usize, n_out_rows: usize) -> TileShape {
    TileShape { n_inp, n_out_rows }
}

/// Init draws with gains boosted so neurons fire within three steps.
fn params(spec: &NetworkSpec<f64>, seed: u64) -> Vec<f64> {
    let mut p = init_parameters(spec, &Default::default(), seed);
    let mut rng = stream(seed, "gains");
    for v in &mut p[spec.n_weights()..] {
        *v = rng.random_range(1.0..4.0);
    }
    p
}

fn raster(steps: usize, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, "raster");
    (0..steps * n)
        .map(|_| if rng.random::<f64>() < 0.6 { 1.0 } else { 0.0 })
        .collect()
}

#[test]
fn hard_spikes_single_layer_toy() {
    let s = spec(vec![vec![t(2, 4), t(2, 4)]], vec![0.5], 4, ResetMode::Subtract);
    let mut checked = 0;
    for seed in 0..4 {
        let p = params(&s, seed);
        let r = grad_check(
            &s,
            &p,
            &raster(3, 4, seed),
            3,
            seed as usize % 4,
            SpikeModel::Hard,
            1e-6,
        )
        .unwrap();
        assert!(r.max_rel_err < 1e-4, "{r:?}");
        checked += r.checked;
    }
    assert!(checked > 40);
}

#[test]
fn soft_spikes_two_layers_match_exactly() {
    for reset in [ResetMode::Subtract, ResetMode::Zero] {
        let s = spec(vec![vec![t(2, 4), t(2, 4)], vec![t(4, 4)]], vec![0.5, 0.25], 2, reset);
        for seed in 0..3 {
            let p = params(&s, seed);
            let r = grad_check(&s, &p, &raster(5, 4, seed), 5, 1, SpikeModel::Soft, 1e-6).unwrap();
            assert!(r.max_rel_err < 1e-4, "{reset:?} {r:?}");
            assert!(r.checked >= p.len() - 2);
        }
    }
}

#[test]
fn dense_layers_match() {
    let mut cfg = ExperimentConfig::default();
    cfg.network.kind = sephia_core::config::NetKind::BlockSparse;
    cfg.network.dense_inputs = 6;
    cfg.network.dense_hidden = 4;
    cfg.network.detach_reset = false;
    let s = cfg.network_spec::<f64>().unwrap();
    let mut p = init_parameters(&s, &Default::default(), 3);
    for v in &mut p {
        *v *= 3.0;
    }
    let r = grad_check(&s, &p, &raster(6, 6, 1), 6, 2, SpikeModel::Soft, 1e-6).unwrap();
    assert!(r.max_rel_err < 1e-4, "{r:?}");
}
