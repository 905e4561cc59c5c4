use std::fs;
use std::path::Path;

use super::dataset::{Dataset, Split};
use crate::{Error, Result};

/// Training samples held out from the tail of the MNIST training file.
pub const MNIST_VALIDATION_SIZE: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdxType {
    U8,
    I8,
    I16,
    I32,
    F32,
    F64,
}

impl IdxType {
    pub fn code(self) -> u8 {
        match self {
            IdxType::U8 => 0x08,
            IdxType::I8 => 0x09,
            IdxType::I16 => 0x0B,
            IdxType::I32 => 0x0C,
            IdxType::F32 => 0x0D,
            IdxType::F64 => 0x0E,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0x08 => IdxType::U8,
            0x09 => IdxType::I8,
            0x0B => IdxType::I16,
            0x0C => IdxType::I32,
            0x0D => IdxType::F32,
            0x0E => IdxType::F64,
            _ => return None,
        })
    }

    pub fn width(self) -> usize {
        match self {
            IdxType::U8 | IdxType::I8 => 1,
            IdxType::I16 => 2,
            IdxType::I32 | IdxType::F32 => 4,
            IdxType::F64 => 8,
        }
    }
}

/// An IDX array with its payload kept as raw big-endian bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct IdxArray {
    pub dtype: IdxType,
    pub dims: Vec<u32>,
    pub data: Vec<u8>,
}

impl IdxArray {
    pub fn len(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn from_u8(dims: Vec<u32>, values: Vec<u8>) -> Result<Self> {
        Self::checked(IdxType::U8, dims, values)
    }

    pub fn from_f64(dims: Vec<u32>, values: &[f64]) -> Result<Self> {
        let data = values.iter().flat_map(|v| v.to_be_bytes()).collect();
        Self::checked(IdxType::F64, dims, data)
    }

    pub fn from_i32(dims: Vec<u32>, values: &[i32]) -> Result<Self> {
        let data = values.iter().flat_map(|v| v.to_be_bytes()).collect();
        Self::checked(IdxType::I32, dims, data)
    }

    fn checked(dtype: IdxType, dims: Vec<u32>, data: Vec<u8>) -> Result<Self> {
        let a = Self { dtype, dims, data };
        if a.dims.is_empty() || a.dims.len() > 255 || a.len() * dtype.width() != a.data.len() {
            return Err(Error::Config(format!(
                "{} payload bytes do not match dims {:?}",
                a.data.len(),
                a.dims
            )));
        }
        Ok(a)
    }

    /// Element values widened to f64.
    pub fn to_f64(&self) -> Vec<f64> {
        let w = self.dtype.width();
        self.data
            .chunks_exact(w)
            .map(|c| match self.dtype {
                IdxType::U8 => f64::from(c[0]),
                IdxType::I8 => f64::from(c[0] as i8),
                IdxType::I16 => f64::from(i16::from_be_bytes([c[0], c[1]])),
                IdxType::I32 => f64::from(i32::from_be_bytes(c.try_into().unwrap())),
                IdxType::F32 => f64::from(f32::from_be_bytes(c.try_into().unwrap())),
                IdxType::F64 => f64::from_be_bytes(c.try_into().unwrap()),
            })
            .collect()
    }
}

pub fn read_idx(bytes: &[u8]) -> Result<IdxArray> {
    if bytes.len() < 4 {
        return Err(Error::parse(bytes.len() as u64, "truncated magic number"));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(Error::parse(
            0,
            format!(
                "bad magic {:02x}{:02x}{:02x}{:02x}",
                bytes[0], bytes[1], bytes[2], bytes[3]
            ),
        ));
    }
    let dtype = IdxType::from_code(bytes[2])
        .ok_or_else(|| Error::parse(2, format!("unknown element type 0x{:02x}", bytes[2])))?;
    let ndim = bytes[3] as usize;
    if ndim == 0 {
        return Err(Error::parse(3, "zero dimensions"));
    }
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(Error::parse(
            bytes.len() as u64,
            "truncated dimension header",
        ));
    }
    let dims: Vec<u32> = bytes[4..header]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()))
        .collect();
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .and_then(|n| n.checked_mul(dtype.width()))
        .ok_or_else(|| Error::parse(4, "dimension product overflows"))?;
    let payload = &bytes[header..];
    if payload.len() < count {
        return Err(Error::parse(
            bytes.len() as u64,
            format!("truncated payload: expected {count} bytes after offset {header}"),
        ));
    }
    if payload.len() > count {
        return Err(Error::parse(
            (header + count) as u64,
            "trailing bytes after payload",
        ));
    }
    Ok(IdxArray {
        dtype,
        dims,
        data: payload.to_vec(),
    })
}

pub fn write_idx(a: &IdxArray) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * a.dims.len() + a.data.len());
    out.extend_from_slice(&[0, 0, a.dtype.code(), a.dims.len() as u8]);
    for d in &a.dims {
        out.extend_from_slice(&d.to_be_bytes());
    }
    out.extend_from_slice(&a.data);
    out
}

fn read_file(path: &Path) -> Result<IdxArray> {
    let bytes = fs::read(path)?;
    read_idx(&bytes).map_err(|e| match e {
        Error::Parse { offset, msg } => Error::Parse {
            offset,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    })
}

/// Loads an image/label IDX pair. Unsigned-byte images are scaled by 1/255 and flattened
/// row-major; 2-D double arrays are taken as-is.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let images = read_file(images_path.as_ref())?;
    let labels = read_file(labels_path.as_ref())?;
    let (n, width, features) = match (images.dtype, images.dims.len()) {
        (IdxType::U8, 3) => {
            let n = images.dims[0] as usize;
            let w = images.dims[1] as usize * images.dims[2] as usize;
            (
                n,
                w,
                images.data.iter().map(|&p| f64::from(p) / 255.0).collect(),
            )
        }
        (IdxType::F64, 2) => (
            images.dims[0] as usize,
            images.dims[1] as usize,
            images.to_f64(),
        ),
        (t, d) => {
            return Err(Error::parse(
                2,
                format!(
                    "unsupported image array: type 0x{:02x} with {d} dims",
                    t.code()
                ),
            ))
        }
    };
    if labels.dims.len() != 1 || !matches!(labels.dtype, IdxType::U8 | IdxType::I32) {
        return Err(Error::parse(2, "labels must be a 1-D byte or int array"));
    }
    if labels.dims[0] as usize != n {
        return Err(Error::parse(
            4,
            format!("{n} images but {} labels", labels.dims[0]),
        ));
    }
    let mut ids = Vec::with_capacity(n);
    for (i, v) in labels.to_f64().into_iter().enumerate() {
        if v < 0.0 {
            return Err(Error::parse(
                (8 + i * labels.dtype.width()) as u64,
                format!("negative label {v}"),
            ));
        }
        ids.push(v as usize);
    }
    let min_classes = if images.dtype == IdxType::U8 { 10 } else { 1 };
    let class_count = ids.iter().max().map_or(1, |&m| m + 1).max(min_classes);
    Dataset::new(features, width, ids, class_count, Split::Train)
}

/// Writes features as a 2-D double array and labels as bytes (or ints above 255 classes).
pub fn save_idx(
    ds: &Dataset,
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<()> {
    let images = IdxArray::from_f64(vec![ds.len() as u32, ds.n_features() as u32], ds.features())?;
    let labels = if ds.class_count() <= 256 {
        IdxArray::from_u8(
            vec![ds.len() as u32],
            ds.labels().iter().map(|&l| l as u8).collect(),
        )?
    } else {
        let v: Vec<i32> = ds.labels().iter().map(|&l| l as i32).collect();
        IdxArray::from_i32(vec![ds.len() as u32], &v)?
    };
    fs::write(images_path, write_idx(&images))?;
    fs::write(labels_path, write_idx(&labels))?;
    Ok(())
}

/// Loads the canonical MNIST files from `dir` as (train, val, test), holding out the last
/// [`MNIST_VALIDATION_SIZE`] training samples for validation.
pub fn load_mnist(dir: impl AsRef<Path>) -> Result<(Dataset, Dataset, Dataset)> {
    let dir = dir.as_ref();
    let train = load_idx(
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
    )?;
    let test = load_idx(
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
    )?
    .with_split(Split::Test);
    let (train, val) = train.split_tail(MNIST_VALIDATION_SIZE, Split::Val)?;
    Ok((train, val, test))
}
