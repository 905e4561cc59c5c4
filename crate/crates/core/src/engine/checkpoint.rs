use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::model::{Activation, SparseModel};
use crate::topology::{DegreeKind, JunctionPattern};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SPPCKPT\0";
const VERSION: u32 = 1;

/// Little-endian binary: magic, version, layer sizes, activations, then per junction the
/// degree kind, CSR offsets, left indices, weights and biases.
pub fn write_checkpoint(model: &SparseModel, mut w: impl Write) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let sizes = model.layer_sizes();
    buf.extend_from_slice(&(model.num_junctions() as u32).to_le_bytes());
    for &n in sizes {
        buf.extend_from_slice(&(n as u64).to_le_bytes());
    }
    buf.extend(model.activations().iter().map(|a| a.code()));
    for (j, p) in model.patterns().iter().enumerate() {
        buf.push(match p.kind() {
            DegreeKind::Regular => 0,
            DegreeKind::Variable => 1,
        });
        for &o in p.offsets() {
            buf.extend_from_slice(&(o as u64).to_le_bytes());
        }
        for &k in p.left_indices() {
            buf.extend_from_slice(&k.to_le_bytes());
        }
        for v in model.weights[j].iter().chain(&model.biases[j]) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::parse(
                self.bytes.len() as u64,
                format!("truncated checkpoint reading {what}"),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn size(&mut self, what: &str) -> Result<usize> {
        let at = self.pos;
        let v = self.u64(what)?;
        usize::try_from(v)
            .ok()
            .filter(|&v| v <= self.bytes.len() * 8)
            .ok_or_else(|| Error::parse(at as u64, format!("implausible {what} {v}")))
    }
}

pub fn read_checkpoint(mut r: impl Read) -> Result<SparseModel> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut c = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if c.take(8, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::parse(0, "not a sparsepipe checkpoint"));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::parse(
            8,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    let l = c.u32("junction count")? as usize;
    if l == 0 || l > bytes.len() {
        return Err(Error::parse(12, format!("implausible junction count {l}")));
    }
    let sizes = (0..=l)
        .map(|_| c.size("layer size"))
        .collect::<Result<Vec<_>>>()?;
    let mut activations = Vec::with_capacity(l);
    for _ in 0..l {
        let at = c.pos;
        let code = c.u8("activation")?;
        activations.push(
            Activation::from_code(code)
                .ok_or_else(|| Error::parse(at as u64, format!("unknown activation {code}")))?,
        );
    }
    let (mut patterns, mut weights, mut biases) = (Vec::new(), Vec::new(), Vec::new());
    for j in 0..l {
        let at = c.pos;
        let kind = match c.u8("degree kind")? {
            0 => DegreeKind::Regular,
            1 => DegreeKind::Variable,
            k => return Err(Error::parse(at as u64, format!("unknown degree kind {k}"))),
        };
        let offsets = (0..=sizes[j + 1])
            .map(|_| c.size("offset"))
            .collect::<Result<Vec<_>>>()?;
        let at = c.pos;
        if offsets[0] != 0 || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::parse(
                at as u64,
                format!("junction {}: offsets not monotone", j + 1),
            ));
        }
        let edges = offsets[sizes[j + 1]];
        let left = (0..edges)
            .map(|_| c.u32("left index"))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<Vec<usize>> = offsets
            .windows(2)
            .map(|w| left[w[0]..w[1]].iter().map(|&k| k as usize).collect())
            .collect();
        let p = JunctionPattern::from_rows(sizes[j], sizes[j + 1], &rows, kind)
            .map_err(|e| Error::parse(at as u64, format!("junction {}: {e}", j + 1)))?;
        patterns.push(p);
        weights.push(
            (0..edges)
                .map(|_| c.f64("weight"))
                .collect::<Result<Vec<_>>>()?,
        );
        biases.push(
            (0..sizes[j + 1])
                .map(|_| c.f64("bias"))
                .collect::<Result<Vec<_>>>()?,
        );
    }
    if c.pos != bytes.len() {
        return Err(Error::parse(
            c.pos as u64,
            "trailing bytes after checkpoint",
        ));
    }
    SparseModel::with_activations(sizes, patterns, weights, biases, activations)
}

pub fn save_checkpoint(model: &SparseModel, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SparseModel> {
    read_checkpoint(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::init_model;
    use crate::topology::generate_structured_random;

    fn model() -> SparseModel {
        let pats = vec![
            generate_structured_random(6, 4, 2, 1).unwrap(),
            JunctionPattern::from_rows(4, 3, &[vec![0, 3], vec![], vec![2]], DegreeKind::Variable)
                .unwrap(),
        ];
        let mut m = init_model(pats, vec![6, 4, 3], 2, 0.1).unwrap();
        m.weights[0][0] = -0.0;
        m.weights[0][1] = f64::MIN_POSITIVE / 4.0;
        m
    }

    #[test]
    fn exact_round_trip() {
        let m = model();
        let mut buf = Vec::new();
        write_checkpoint(&m, &mut buf).unwrap();
        let back = read_checkpoint(&buf[..]).unwrap();
        assert_eq!(back.patterns(), m.patterns());
        for (a, b) in back
            .weights
            .iter()
            .flatten()
            .zip(m.weights.iter().flatten())
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back, m);
        let mut again = Vec::new();
        write_checkpoint(&back, &mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let mut buf = Vec::new();
        write_checkpoint(&model(), &mut buf).unwrap();
        assert!(matches!(
            read_checkpoint(&buf[..buf.len() - 3]),
            Err(Error::Parse { .. })
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(
            read_checkpoint(&bad[..]),
            Err(Error::Parse { offset: 0, .. })
        ));
        let mut long = buf;
        long.push(0);
        assert!(read_checkpoint(&long[..]).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&model(), &path).unwrap();
        assert_eq!(load_checkpoint(&path).unwrap(), model());
    }
}
