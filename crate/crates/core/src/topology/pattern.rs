use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::{Error, Result};

pub const PATTERN_MAGIC: &str = "sparsepipe-pattern v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DegreeKind {
    Regular,
    Variable,
}

impl DegreeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DegreeKind::Regular => "regular",
            DegreeKind::Variable => "variable",
        }
    }
}

/// Connectivity of one junction.
///
/// Edges are stored grouped by right neuron; the position of an edge in that flat
/// list is its weight number. Right neuron `j` owns edges
/// `offsets[j]..offsets[j + 1]`, and `left[e]` is the left neuron of edge `e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JunctionPattern {
    n_left: usize,
    n_right: usize,
    offsets: Vec<usize>,
    left: Vec<u32>,
    kind: DegreeKind,
}

impl JunctionPattern {
    /// Builds a pattern from per-right-neuron lists of left indices, in weight order.
    ///
    /// A `Regular` kind is checked: equal in-degrees and equal out-degrees.
    pub fn from_rows(
        n_left: usize,
        n_right: usize,
        rows: &[Vec<usize>],
        kind: DegreeKind,
    ) -> Result<Self> {
        if rows.len() != n_right {
            return Err(Error::Pattern(format!(
                "expected {n_right} right neurons, got {}",
                rows.len()
            )));
        }
        if n_left > u32::MAX as usize {
            return Err(Error::Pattern("left layer too large".into()));
        }
        let mut offsets = Vec::with_capacity(n_right + 1);
        let mut left = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        let mut seen = vec![usize::MAX; n_left];
        offsets.push(0);
        for (j, row) in rows.iter().enumerate() {
            for &k in row {
                if k >= n_left {
                    return Err(Error::Pattern(format!(
                        "right neuron {j}: left index {k} out of range 0..{n_left}"
                    )));
                }
                if seen[k] == j {
                    return Err(Error::Pattern(format!(
                        "right neuron {j}: duplicate edge to left neuron {k}"
                    )));
                }
                seen[k] = j;
                left.push(k as u32);
            }
            offsets.push(left.len());
        }
        let p = Self {
            n_left,
            n_right,
            offsets,
            left,
            kind,
        };
        if kind == DegreeKind::Regular {
            p.check_regular()?;
        }
        Ok(p)
    }

    pub fn fully_connected(n_left: usize, n_right: usize) -> Self {
        let rows: Vec<Vec<usize>> = (0..n_right).map(|_| (0..n_left).collect()).collect();
        Self::from_rows(n_left, n_right, &rows, DegreeKind::Regular)
            .expect("fully connected pattern is valid")
    }

    fn check_regular(&self) -> Result<()> {
        let d_in = self.in_degree(0);
        if let Some(j) = (0..self.n_right).find(|&j| self.in_degree(j) != d_in) {
            return Err(Error::Pattern(format!(
                "not regular: right neuron {j} has in-degree {} (expected {d_in})",
                self.in_degree(j)
            )));
        }
        let outs = self.out_degrees();
        let d_out = outs[0];
        if let Some(k) = outs.iter().position(|&d| d != d_out) {
            return Err(Error::Pattern(format!(
                "not regular: left neuron {k} has out-degree {} (expected {d_out})",
                outs[k]
            )));
        }
        Ok(())
    }

    pub fn n_left(&self) -> usize {
        self.n_left
    }

    pub fn n_right(&self) -> usize {
        self.n_right
    }

    pub fn kind(&self) -> DegreeKind {
        self.kind
    }

    pub fn edge_count(&self) -> usize {
        self.left.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Left neuron of every edge, in weight order.
    pub fn left_indices(&self) -> &[u32] {
        &self.left
    }

    pub fn row(&self, j: usize) -> &[u32] {
        &self.left[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.n_right).map(move |j| self.row(j))
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_left];
        for &k in &self.left {
            d[k as usize] += 1;
        }
        d
    }

    /// Right neuron owning edge `e`.
    pub fn right_of(&self, e: usize) -> usize {
        self.offsets.partition_point(|&o| o <= e) - 1
    }

    pub fn density(&self) -> f64 {
        self.edge_count() as f64 / (self.n_left * self.n_right) as f64
    }

    /// Same connections regardless of the order edges are numbered in.
    pub fn same_connections(&self, other: &Self) -> bool {
        if self.n_left != other.n_left || self.n_right != other.n_right {
            return false;
        }
        (0..self.n_right).all(|j| {
            let mut a = self.row(j).to_vec();
            let mut b = other.row(j).to_vec();
            a.sort_unstable();
            b.sort_unstable();
            a == b
        })
    }

    /// Dense `n_right x n_left` 0/1 mask, row-major.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.n_left * self.n_right];
        for j in 0..self.n_right {
            for &k in self.row(j) {
                m[j * self.n_left + k as usize] = true;
            }
        }
        m
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{PATTERN_MAGIC}").unwrap();
        writeln!(s, "{} {} {}", self.n_left, self.n_right, self.kind.as_str()).unwrap();
        for row in self.rows() {
            let mut first = true;
            for k in row {
                if !first {
                    s.push(' ');
                }
                first = false;
                write!(s, "{k}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut lines = r.lines();
        let mut offset = 0u64;
        let mut next = |lines: &mut std::io::Lines<_>| -> Result<Option<(u64, String)>> {
            match lines.next() {
                Some(line) => {
                    let line: String = line?;
                    let at = offset;
                    offset += line.len() as u64 + 1;
                    Ok(Some((at, line)))
                }
                None => Ok(None),
            }
        };
        let (at, magic) = next(&mut lines)?.ok_or_else(|| Error::parse(0, "empty pattern file"))?;
        if magic.trim_end() != PATTERN_MAGIC {
            return Err(Error::parse(
                at,
                format!("expected header {PATTERN_MAGIC:?}"),
            ));
        }
        let (at, dims) = next(&mut lines)?.ok_or_else(|| Error::parse(at, "missing dimensions"))?;
        let parts: Vec<&str> = dims.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::parse(at, "expected `n_left n_right degree_kind`"));
        }
        let n_left: usize = parts[0]
            .parse()
            .map_err(|_| Error::parse(at, "bad n_left"))?;
        let n_right: usize = parts[1]
            .parse()
            .map_err(|_| Error::parse(at, "bad n_right"))?;
        let kind = match parts[2] {
            "regular" => DegreeKind::Regular,
            "variable" => DegreeKind::Variable,
            other => return Err(Error::parse(at, format!("unknown degree kind {other:?}"))),
        };
        let mut rows = Vec::with_capacity(n_right);
        for j in 0..n_right {
            let (at, line) = next(&mut lines)?
                .ok_or_else(|| Error::parse(at, format!("missing row for right neuron {j}")))?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::parse(at, format!("bad index in row {j}")))?;
            rows.push(row);
        }
        Self::from_rows(n_left, n_right, &rows, kind)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        Self::read_from(s.as_bytes())
    }
}

/// Left and right neurons with no edges at all.
pub fn find_disconnected(p: &JunctionPattern) -> (Vec<usize>, Vec<usize>) {
    let left = p
        .out_degrees()
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(k, _)| k)
        .collect();
    let right = (0..p.n_right()).filter(|&j| p.in_degree(j) == 0).collect();
    (left, right)
}
