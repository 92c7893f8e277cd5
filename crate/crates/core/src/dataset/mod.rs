//! Fashion-article image ingestion: IDX files, 4-class subset, seeded splits,
//! PCA features and rate coding.

pub mod encode;
pub mod idx;
pub mod pca;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::Serialize;

pub use encode::{encode_probabilities, rate_encode};
pub use idx::{load_split, read_idx_images, read_idx_labels, IdxImages, LabeledImages};
pub use pca::{fit_pca, fit_pca_rows, PcaModel};

use crate::config::DataConfig;
use crate::error::{Error, Result};
use crate::rng::{names, stream};

/// Environment variable naming the dataset directory.
pub const DATA_DIR_ENV: &str = "SEPHIA_DATA_DIR";

/// A sample ready for encoding: normalized PCA features and relabeled class.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub probs: Vec<f64>,
    pub label: usize,
}

/// Indices into the original files, by split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    /// Indices into the test file.
    pub test: Vec<usize>,
    pub train_pool: usize,
    pub test_pool: usize,
    /// Filtered training images left out of both train and validation.
    pub discarded_train: usize,
    pub discarded_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataSummary {
    pub data_dir: PathBuf,
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub discarded_train: usize,
    pub discarded_test: usize,
    pub test_class_counts: Vec<usize>,
    pub pca_explained_ratio: f64,
    pub pca_fit_samples: usize,
}

#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
    pub pca: PcaModel,
    pub splits: SplitIndices,
    pub summary: DataSummary,
}

/// `data.data_dir`, else `$SEPHIA_DATA_DIR`, else `<workspace>/data/fashion-mnist`.
pub fn resolve_data_dir(cfg: &DataConfig) -> Result<PathBuf> {
    let dir = cfg
        .data_dir
        .clone()
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fashion-mnist"));
    if idx::locate(&dir, "train-images-idx3-ubyte").is_err() {
        return Err(Error::InvalidParameter(format!(
            "data.data_dir: no IDX dataset at {} (set data.data_dir or {DATA_DIR_ENV})",
            dir.display()
        )));
    }
    Ok(dir)
}

/// Keeps the listed classes, relabeled by their position in `classes`.
/// Returns `(index, new_label)` pairs in file order.
pub fn filter_classes(labels: &[u8], classes: &[u8]) -> Vec<(usize, usize)> {
    labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| classes.iter().position(|c| c == l).map(|k| (i, k)))
        .collect()
}

/// Shuffles the filtered pools with the `split` sub-stream of `seed` and cuts
/// train / validation / test.
pub fn split_indices(
    train_pool: &[(usize, usize)],
    test_pool: &[(usize, usize)],
    cfg: &DataConfig,
    seed: u64,
) -> Result<SplitIndices> {
    if cfg.n_train + cfg.n_val > train_pool.len() || cfg.n_test > test_pool.len() {
        return Err(Error::InvalidParameter(format!(
            "data: requested {}+{} train/val and {} test, pools hold {} and {}",
            cfg.n_train,
            cfg.n_val,
            cfg.n_test,
            train_pool.len(),
            test_pool.len()
        )));
    }
    let mut rng = stream(seed, names::SPLIT);
    let mut tr: Vec<usize> = train_pool.iter().map(|p| p.0).collect();
    tr.shuffle(&mut rng);
    let mut te: Vec<usize> = test_pool.iter().map(|p| p.0).collect();
    te.shuffle(&mut rng);
    Ok(SplitIndices {
        train: tr[..cfg.n_train].to_vec(),
        val: tr[cfg.n_train..cfg.n_train + cfg.n_val].to_vec(),
        test: te[..cfg.n_test].to_vec(),
        train_pool: tr.len(),
        test_pool: te.len(),
        discarded_train: tr.len() - cfg.n_train - cfg.n_val,
        discarded_test: te.len() - cfg.n_test,
    })
}

fn pixels(images: &IdxImages, i: usize, out: &mut [f64]) {
    for (o, &p) in out.iter_mut().zip(images.image(i)) {
        *o = p as f64 / 255.0;
    }
}

/// PCA fitted on every image of the training file, cached as JSON.
pub fn load_or_fit_pca(train: &IdxImages, n_components: usize, cache: Option<&Path>) -> Result<PcaModel> {
    if let Some(p) = cache.filter(|p| p.exists()) {
        let m = PcaModel::load(p)?;
        if m.n_components == n_components && m.dim == train.dim() && m.fit_samples == train.n {
            return Ok(m);
        }
    }
    let m = fit_pca_rows(train.n, train.dim(), n_components, |i, out| pixels(train, i, out))?;
    if let Some(p) = cache {
        // the cache is an optimization; an unwritable location only costs a refit
        let _ = m.save(p);
    }
    Ok(m)
}

/// Loads the files, fits (or reuses) the projection, splits by seed and
/// normalizes with training-split bounds.
pub fn prepare(cfg: &DataConfig, seed: u64) -> Result<PreparedData> {
    let dir = resolve_data_dir(cfg)?;
    let train_file = load_split(&dir, "train")?;
    let test_file = load_split(&dir, "t10k")?;
    let cache = cfg
        .pca_file
        .clone()
        .unwrap_or_else(|| dir.join(format!("pca{}_train.json", cfg.pca_components)));
    let mut pca = load_or_fit_pca(&train_file.images, cfg.pca_components, Some(&cache))?;

    let train_pool = filter_classes(&train_file.labels, &cfg.classes);
    let test_pool = filter_classes(&test_file.labels, &cfg.classes);
    let splits = split_indices(&train_pool, &test_pool, cfg, seed)?;
    let train_labels: HashMap<usize, usize> = train_pool.iter().copied().collect();
    let test_labels: HashMap<usize, usize> = test_pool.iter().copied().collect();

    let mut buf = vec![0.0; train_file.images.dim()];
    let mut project = |images: &IdxImages, i: usize| {
        pixels(images, i, &mut buf);
        pca.project(&buf)
    };
    let train_z: Vec<Vec<f64>> = splits.train.iter().map(|&i| project(&train_file.images, i)).collect();
    let val_z: Vec<Vec<f64>> = splits.val.iter().map(|&i| project(&train_file.images, i)).collect();
    let test_z: Vec<Vec<f64>> = splits.test.iter().map(|&i| project(&test_file.images, i)).collect();
    pca.fit_normalization(train_z.iter().map(|v| v.as_slice()));

    let to_samples = |zs: &[Vec<f64>], idx: &[usize], labels: &HashMap<usize, usize>| {
        zs.iter()
            .zip(idx)
            .map(|(z, i)| {
                Ok(Sample {
                    probs: pca.normalize(z)?,
                    label: labels[i],
                })
            })
            .collect::<Result<Vec<_>>>()
    };
    let train = to_samples(&train_z, &splits.train, &train_labels)?;
    let val = to_samples(&val_z, &splits.val, &train_labels)?;
    let test = to_samples(&test_z, &splits.test, &test_labels)?;
    let mut test_class_counts = vec![0; cfg.classes.len()];
    for s in &test {
        test_class_counts[s.label] += 1;
    }
    let summary = DataSummary {
        data_dir: dir,
        n_train: train.len(),
        n_val: val.len(),
        n_test: test.len(),
        discarded_train: splits.discarded_train,
        discarded_test: splits.discarded_test,
        test_class_counts,
        pca_explained_ratio: pca.explained_ratio(),
        pca_fit_samples: pca.fit_samples,
    };
    Ok(PreparedData {
        train,
        val,
        test,
        pca,
        splits,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filter_relabels_in_class_order() {
        let labels = [5, 2, 0, 4, 1, 9, 5];
        assert_eq!(
            filter_classes(&labels, &[0, 1, 4, 5]),
            vec![(0, 3), (2, 0), (3, 2), (4, 1), (6, 3)]
        );
    }

    #[test]
    fn splits_are_disjoint_and_sized() {
        let pool: Vec<(usize, usize)> = (0..100).map(|i| (i * 2, i % 4)).collect();
        let test: Vec<(usize, usize)> = (0..30).map(|i| (i, i % 4)).collect();
        let cfg = DataConfig {
            n_train: 60,
            n_val: 25,
            n_test: 28,
            ..Default::default()
        };
        let s = split_indices(&pool, &test, &cfg, 11).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (60, 25, 28));
        assert_eq!(s.discarded_train, 15);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).copied().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 85);
        assert_eq!(split_indices(&pool, &test, &cfg, 11).unwrap(), s);
        assert_ne!(split_indices(&pool, &test, &cfg, 12).unwrap().train, s.train);
        let too_many = DataConfig { n_train: 99, ..cfg };
        assert!(split_indices(&pool, &test, &too_many, 1).is_err());
    }
}
