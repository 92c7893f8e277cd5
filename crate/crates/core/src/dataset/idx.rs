//! IDX image/label files, raw or gzip-compressed.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;

use crate::error::{Error, Result};

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImages {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    /// `n * rows * cols` bytes, image-major.
    pub pixels: Vec<u8>,
}

impl IdxImages {
    pub fn dim(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let d = self.dim();
        &self.pixels[i * d..(i + 1) * d]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledImages {
    pub images: IdxImages,
    pub labels: Vec<u8>,
}

fn idx_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Idx {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    let raw = fs::read(path).map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| idx_err(path, format!("gzip: {e}")))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| idx_err(path, "truncated header"))
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let b = read_bytes(path)?;
    let magic = be_u32(&b, 0, path)?;
    if magic != IMAGE_MAGIC {
        return Err(idx_err(
            path,
            format!("image magic {magic:#010x}, expected {IMAGE_MAGIC:#010x}"),
        ));
    }
    let n = be_u32(&b, 4, path)? as usize;
    let rows = be_u32(&b, 8, path)? as usize;
    let cols = be_u32(&b, 12, path)? as usize;
    let body = &b[16..];
    if body.len() != n * rows * cols {
        return Err(idx_err(
            path,
            format!("{} pixel bytes for {n} images of {rows}x{cols}", body.len()),
        ));
    }
    Ok(IdxImages {
        n,
        rows,
        cols,
        pixels: body.to_vec(),
    })
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let b = read_bytes(path)?;
    let magic = be_u32(&b, 0, path)?;
    if magic != LABEL_MAGIC {
        return Err(idx_err(
            path,
            format!("label magic {magic:#010x}, expected {LABEL_MAGIC:#010x}"),
        ));
    }
    let n = be_u32(&b, 4, path)? as usize;
    let body = &b[8..];
    if body.len() != n {
        return Err(idx_err(path, format!("{} label bytes, header says {n}", body.len())));
    }
    Ok(body.to_vec())
}

/// `dir/name` or `dir/name.gz`, whichever exists.
pub fn locate(dir: &Path, name: &str) -> Result<PathBuf> {
    let plain = dir.join(name);
    let gz = dir.join(format!("{name}.gz"));
    if plain.exists() {
        Ok(plain)
    } else if gz.exists() {
        Ok(gz)
    } else {
        Err(Error::io(
            &plain,
            std::io::Error::new(std::io::ErrorKind::NotFound, "IDX file (or .gz) not found"),
        ))
    }
}

/// Loads `{prefix}-images-idx3-ubyte` and `{prefix}-labels-idx1-ubyte`.
pub fn load_split(dir: &Path, prefix: &str) -> Result<LabeledImages> {
    let ip = locate(dir, &format!("{prefix}-images-idx3-ubyte"))?;
    let lp = locate(dir, &format!("{prefix}-labels-idx1-ubyte"))?;
    let images = read_idx_images(&ip)?;
    let labels = read_idx_labels(&lp)?;
    if images.n != labels.len() {
        return Err(idx_err(&lp, format!("{} labels for {} images", labels.len(), images.n)));
    }
    Ok(LabeledImages { images, labels })
}

fn write_bytes(path: &Path, bytes: &[u8], gzip: bool) -> Result<()> {
    let data = if gzip {
        let mut enc = GzEncoder::new(Vec::new(), Compression::default());
        enc.write_all(bytes).map_err(|e| Error::io(path, e))?;
        enc.finish().map_err(|e| Error::io(path, e))?
    } else {
        bytes.to_vec()
    };
    fs::write(path, data).map_err(|e| Error::io(path, e))
}

pub fn write_idx_images(path: &Path, images: &IdxImages, gzip: bool) -> Result<()> {
    let mut b = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGE_MAGIC, images.n as u32, images.rows as u32, images.cols as u32] {
        b.extend_from_slice(&v.to_be_bytes());
    }
    b.extend_from_slice(&images.pixels);
    write_bytes(path, &b, gzip)
}

pub fn write_idx_labels(path: &Path, labels: &[u8], gzip: bool) -> Result<()> {
    let mut b = Vec::with_capacity(8 + labels.len());
    b.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    b.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    b.extend_from_slice(labels);
    write_bytes(path, &b, gzip)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> IdxImages {
        IdxImages {
            n: 3,
            rows: 2,
            cols: 2,
            pixels: (0..12).collect(),
        }
    }

    #[test]
    fn round_trip_raw_and_gz() {
        let dir = tempfile::tempdir().unwrap();
        for gz in [false, true] {
            let p = dir.path().join(format!("x{gz}"));
            write_idx_images(&p, &sample(), gz).unwrap();
            assert_eq!(read_idx_images(&p).unwrap(), sample());
            let q = dir.path().join(format!("y{gz}"));
            write_idx_labels(&q, &[1, 2, 3], gz).unwrap();
            assert_eq!(read_idx_labels(&q).unwrap(), vec![1, 2, 3]);
        }
    }

    #[test]
    fn magic_and_size_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lab");
        write_idx_labels(&p, &[1, 2], false).unwrap();
        assert!(matches!(read_idx_images(&p), Err(Error::Idx { .. })));
        let empty = dir.path().join("empty");
        fs::write(&empty, b"").unwrap();
        assert!(matches!(read_idx_images(&empty), Err(Error::Idx { .. })));
        let mut bytes = fs::read(&p).unwrap();
        bytes.pop();
        fs::write(&p, bytes).unwrap();
        assert!(read_idx_labels(&p).is_err());
    }

    #[test]
    fn count_mismatch_between_files() {
        let dir = tempfile::tempdir().unwrap();
        write_idx_images(&dir.path().join("train-images-idx3-ubyte"), &sample(), false).unwrap();
        write_idx_labels(&dir.path().join("train-labels-idx1-ubyte.gz"), &[0, 1], true).unwrap();
        let err = load_split(dir.path(), "train").unwrap_err();
        assert!(err.to_string().contains("2 labels for 3 images"), "{err}");
    }
}
