//! JSON experiment configuration. Every field has a default, so `{}` is the
//! reference experiment (100 GHz spacing, Q 10K, ER 15 dB, 6 dBm).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optile::OpTileConfig;
use crate::photonic::comb::parse_comb_offsets;
use crate::photonic::{CombSource, MrmParams, PdParams};
use crate::scalar::Scalar;
use crate::snn::{
    AdamWConfig, DenseBlock, InitRanges, LayerSpec, LifParams, NetworkSpec, PhotonicSpec, ResetMode, SynapseSpec,
};
use crate::units::{wavelength_to_frequency, LAMBDA_REF};

/// The committed comb power file shared by every run.
pub const DEFAULT_COMB_OFFSETS: &str = include_str!("../data/comb_offsets.json");

/// Seed name the committed comb file was drawn from (parent seed 0).
pub const COMB_OFFSETS_SEED_NAME: &str = "comb_offsets";

/// `(spacing GHz, weight shift range pm, neural spike shift pm)`.
pub const SHIFT_TABLE: [(f64, f64, f64); 3] = [(100.0, -400.0, -335.0), (63.0, -250.0, -210.0), (50.0, -200.0, -165.0)];

/// Looks up the tabulated shift pair for a channel spacing.
pub fn shifts_for_spacing(delta_omega_ghz: f64) -> Option<(f64, f64)> {
    SHIFT_TABLE
        .iter()
        .find(|(d, _, _)| (d - delta_omega_ghz).abs() < 1e-9)
        .map(|&(_, max, neural)| (max, neural))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdConfig {
    pub responsivity_a_per_w: f64,
    pub f_cut_ghz: f64,
    pub temperature_k: f64,
    pub r_load_ohm: f64,
    pub i_dark_na: f64,
}

impl Default for PdConfig {
    fn default() -> Self {
        Self {
            responsivity_a_per_w: 0.5,
            f_cut_ghz: 2.5,
            temperature_k: 300.0,
            r_load_ohm: 50.0,
            i_dark_na: 1.0,
        }
    }
}

impl PdConfig {
    pub fn params<S: Scalar>(&self) -> PdParams<S> {
        PdParams {
            responsivity: S::of(self.responsivity_a_per_w),
            f_cut: S::of(self.f_cut_ghz * 1e9),
            temperature: S::of(self.temperature_k),
            r_load: S::of(self.r_load_ohm),
            i_dark: S::of(self.i_dark_na * 1e-9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotonicsConfig {
    /// Peak power of the strongest comb line (dBm).
    pub p_max_dbm: f64,
    pub delta_omega_ghz: f64,
    /// Weight-MRM shift range; taken from the spacing table when absent.
    pub dlambda_max_pm: Option<f64>,
    /// Neural-MRM spike shift; taken from the spacing table when absent.
    pub dlambda_neural_pm: Option<f64>,
    pub q_factor: f64,
    pub er_db: f64,
    pub il_db: f64,
    pub linewidth_fwhm_ghz: f64,
    pub comb_channels: usize,
    /// Alternative comb power file; the committed one is used when absent.
    pub comb_offsets_file: Option<PathBuf>,
    /// Current mapped to unit membrane drive (mA).
    pub i_unit_ma: f64,
    pub pd: PdConfig,
}

impl Default for PhotonicsConfig {
    fn default() -> Self {
        Self {
            p_max_dbm: 6.0,
            delta_omega_ghz: 100.0,
            dlambda_max_pm: None,
            dlambda_neural_pm: None,
            q_factor: 10_000.0,
            er_db: 15.0,
            il_db: 0.2,
            linewidth_fwhm_ghz: 8.0,
            comb_channels: 16,
            comb_offsets_file: None,
            i_unit_ma: 1.0,
            pd: PdConfig::default(),
        }
    }
}

impl PhotonicsConfig {
    /// `(dlambda_max_pm, dlambda_neural_pm)` after applying the spacing table.
    pub fn shifts(&self) -> Result<(f64, f64)> {
        let table = shifts_for_spacing(self.delta_omega_ghz);
        let max = self.dlambda_max_pm.or(table.map(|t| t.0));
        let neural = self.dlambda_neural_pm.or(table.map(|t| t.1));
        match (max, neural) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(Error::InvalidParameter(format!(
                "photonics.dlambda_max_pm / photonics.dlambda_neural_pm must be given for a {} GHz spacing",
                self.delta_omega_ghz
            ))),
        }
    }

    pub fn comb_offsets(&self) -> Result<Vec<f64>> {
        let offsets = match &self.comb_offsets_file {
            Some(p) => crate::photonic::load_comb_offsets(p)?,
            None => parse_comb_offsets(DEFAULT_COMB_OFFSETS)?,
        };
        if offsets.len() < self.comb_channels {
            return Err(Error::InvalidParameter(format!(
                "comb file has {} channels, {} requested",
                offsets.len(),
                self.comb_channels
            )));
        }
        Ok(offsets[..self.comb_channels].to_vec())
    }

    pub fn comb<S: Scalar>(&self) -> Result<CombSource<S>> {
        let offs: Vec<S> = self.comb_offsets()?.into_iter().map(S::of).collect();
        CombSource::from_offsets(
            S::of(wavelength_to_frequency(LAMBDA_REF)),
            S::of(self.delta_omega_ghz * 1e9),
            S::of(self.p_max_dbm),
            &offs,
            S::of(self.linewidth_fwhm_ghz * 1e9),
        )
    }

    pub fn mrm<S: Scalar>(&self) -> Result<MrmParams<S>> {
        MrmParams::new(
            S::of(wavelength_to_frequency(LAMBDA_REF)),
            S::of(self.q_factor),
            S::of(self.er_db),
            S::of(self.il_db),
        )
    }

    pub fn tile<S: Scalar>(&self, n_inp: usize, n_out_rows: usize) -> Result<OpTileConfig<S>> {
        let (max, neural) = self.shifts()?;
        let cfg = OpTileConfig {
            n_inp,
            n_out_rows,
            dlambda_max_pm: S::of(max),
            dlambda_neural_pm: S::of(neural),
            mrm: self.mrm()?,
            comb: self.comb()?,
            i_unit: S::of(self.i_unit_ma * 1e-3),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileShape {
    pub n_inp: usize,
    pub n_out_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    #[default]
    Photonic,
    FullyConnected,
    BlockSparse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub kind: NetKind,
    /// Tiles per photonic layer.
    pub tiles: Vec<Vec<TileShape>>,
    /// Input width of the dense baselines; features are zero-padded up to it.
    pub dense_inputs: usize,
    pub dense_hidden: usize,
    /// Diagonal blocks in the first block-sparse layer.
    pub sparse_blocks: usize,
    pub n_classes: usize,
    /// One threshold per layer.
    pub thresholds: Vec<f64>,
    pub beta: f64,
    pub t_ref: usize,
    pub surrogate_slope: f64,
    /// Zero reset keeps the pre-reset membrane bounded by the drive, so the
    /// max-over-time loss cannot grow by saturating every output neuron.
    pub reset: ResetMode,
    pub detach_reset: bool,
    pub time_steps: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        let t = |n_inp, n_out_rows| TileShape { n_inp, n_out_rows };
        Self {
            kind: NetKind::Photonic,
            tiles: vec![vec![t(16, 16), t(16, 16)], vec![t(16, 8)]],
            dense_inputs: 36,
            dense_hidden: 18,
            sparse_blocks: 2,
            n_classes: 4,
            thresholds: vec![0.5, 0.25],
            beta: 0.99,
            t_ref: 0,
            surrogate_slope: 2.0,
            reset: ResetMode::Zero,
            detach_reset: true,
            time_steps: 35,
        }
    }
}

impl NetworkConfig {
    fn lif<S: Scalar>(&self, layer: usize) -> Result<LifParams<S>> {
        let th = *self
            .thresholds
            .get(layer)
            .ok_or_else(|| Error::InvalidParameter(format!("network.thresholds has no entry for layer {layer}")))?;
        let p = LifParams {
            beta: S::of(self.beta),
            threshold: S::of(th),
            t_ref: self.t_ref,
            surrogate_slope: S::of(self.surrogate_slope),
            reset: self.reset,
            detach_reset: self.detach_reset,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Directory with the four IDX files; `SEPHIA_DATA_DIR` or `data/fashion-mnist` when absent.
    pub data_dir: Option<PathBuf>,
    pub classes: Vec<u8>,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub pca_components: usize,
    /// Cached projection; fitted and written on first use when absent.
    pub pca_file: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            classes: vec![0, 1, 4, 5],
            n_train: 21760,
            n_val: 2048,
            n_test: 3900,
            pca_components: 32,
            pca_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr0: f64,
    pub dropout_p: f64,
    pub noise_enabled: bool,
    pub adamw: AdamWConfig,
    /// Evaluate one validation batch after every step (for the SMA curve).
    pub val_every_batch: bool,
    pub sma_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            batch_size: 128,
            lr0: 0.04,
            dropout_p: 0.15,
            noise_enabled: true,
            adamw: AdamWConfig::default(),
            val_every_batch: true,
            sma_window: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub photonics: PhotonicsConfig,
    pub network: NetworkConfig,
    pub data: DataConfig,
    pub train: TrainConfig,
    pub init: InitRanges,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.train;
        if t.batch_size == 0 {
            return Err(Error::InvalidParameter("train.batch_size must be > 0".into()));
        }
        if !(0.0..1.0).contains(&t.dropout_p) {
            return Err(Error::InvalidParameter("train.dropout_p must lie in [0,1)".into()));
        }
        if !(t.lr0 >= 0.0) {
            return Err(Error::InvalidParameter("train.lr0 must be >= 0".into()));
        }
        if self.network.time_steps == 0 {
            return Err(Error::InvalidParameter("network.time_steps must be > 0".into()));
        }
        if self.data.classes.len() != self.network.n_classes {
            return Err(Error::InvalidParameter(
                "data.classes must list network.n_classes classes".into(),
            ));
        }
        if self.photonics.il_db < 0.0 {
            return Err(Error::InvalidParameter("photonics.il_db must be >= 0".into()));
        }
        self.photonics.pd.params::<f64>().validate()?;
        self.network_spec::<f64>()?;
        Ok(())
    }

    pub fn network_spec<S: Scalar>(&self) -> Result<NetworkSpec<S>> {
        let n = &self.network;
        let spec = match n.kind {
            NetKind::Photonic => {
                let pd = self.photonics.pd.params();
                let mut layers = Vec::new();
                for (l, shapes) in n.tiles.iter().enumerate() {
                    let tiles = shapes
                        .iter()
                        .map(|s| self.photonics.tile(s.n_inp, s.n_out_rows))
                        .collect::<Result<Vec<_>>>()?;
                    layers.push(LayerSpec {
                        synapse: SynapseSpec::Photonic(PhotonicSpec { tiles, pd }),
                        lif: n.lif(l)?,
                    });
                }
                NetworkSpec { layers }
            }
            NetKind::FullyConnected | NetKind::BlockSparse => {
                let blocks = if n.kind == NetKind::FullyConnected {
                    1
                } else {
                    n.sparse_blocks
                };
                if blocks == 0 || !n.dense_inputs.is_multiple_of(blocks) || !n.dense_hidden.is_multiple_of(blocks) {
                    return Err(Error::InvalidParameter(
                        "network.sparse_blocks must divide dense_inputs and dense_hidden".into(),
                    ));
                }
                let (bi, bo) = (n.dense_inputs / blocks, n.dense_hidden / blocks);
                let first = (0..blocks)
                    .map(|b| DenseBlock {
                        in_offset: b * bi,
                        n_in: bi,
                        n_out: bo,
                    })
                    .collect();
                let second = vec![DenseBlock {
                    in_offset: 0,
                    n_in: n.dense_hidden,
                    n_out: n.n_classes,
                }];
                NetworkSpec {
                    layers: vec![
                        LayerSpec {
                            synapse: SynapseSpec::Dense(first),
                            lif: n.lif(0)?,
                        },
                        LayerSpec {
                            synapse: SynapseSpec::Dense(second),
                            lif: n.lif(1)?,
                        },
                    ],
                }
            }
        };
        spec.validate()?;
        if spec.n_outputs() != n.n_classes {
            return Err(Error::DimensionMismatch {
                what: "output neurons vs classes",
                expected: n.n_classes,
                got: spec.n_outputs(),
            });
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_seed;

    #[test]
    fn committed_comb_file_matches_its_seed() {
        let expected = crate::photonic::generate_comb_offsets(16, derive_seed(0, COMB_OFFSETS_SEED_NAME));
        let loaded = parse_comb_offsets(DEFAULT_COMB_OFFSETS).unwrap();
        assert_eq!(loaded, expected.iter().map(|o| o.offset_db).collect::<Vec<_>>());
    }

    #[test]
    fn reference_network_has_660_parameters() {
        let cfg = ExperimentConfig::default();
        let spec = cfg.network_spec::<f64>().unwrap();
        assert_eq!(spec.n_weights(), 640);
        assert_eq!(spec.n_gains(), 20);
        assert_eq!(spec.n_params(), 660);
        assert_eq!(spec.n_inputs(), 32);
        assert_eq!(spec.n_outputs(), 4);
    }

    #[test]
    fn baseline_parameter_counts() {
        let mut cfg = ExperimentConfig::default();
        cfg.network.kind = NetKind::FullyConnected;
        assert_eq!(cfg.network_spec::<f64>().unwrap().n_params(), 720);
        cfg.network.kind = NetKind::BlockSparse;
        assert_eq!(cfg.network_spec::<f64>().unwrap().n_params(), 396);
    }

    #[test]
    fn empty_json_is_reference() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.photonics.shifts().unwrap(), (-400.0, -335.0));
    }

    #[test]
    fn unknown_key_and_spacing_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"photonics": {"q": 3}}"#).is_err());
        let err = ExperimentConfig::from_json(r#"{"photonics": {"delta_omega_ghz": 75}}"#).unwrap_err();
        assert!(err.to_string().contains("dlambda_max_pm"));
        assert!(ExperimentConfig::from_json(
            r#"{"photonics": {"delta_omega_ghz": 75, "dlambda_max_pm": -300, "dlambda_neural_pm": -250}}"#
        )
        .is_ok());
    }
}
