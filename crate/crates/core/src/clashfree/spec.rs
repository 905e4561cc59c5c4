use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::seeded;
use crate::{Error, Result};

pub const SPEC_MAGIC: &str = "sparsepipe-cfspec v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CfType {
    /// One seed vector, addresses advance cyclically for every sweep.
    Type1,
    /// A fresh seed vector for each sweep.
    Type2,
    /// A full address matrix per sweep; each column is a permutation of `0..D`.
    Type3,
}

impl CfType {
    pub fn number(self) -> u8 {
        match self {
            CfType::Type1 => 1,
            CfType::Type2 => 2,
            CfType::Type3 => 3,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(CfType::Type1),
            2 => Ok(CfType::Type2),
            3 => Ok(CfType::Type3),
            _ => Err(Error::Spec(format!("unknown clash-free type {n}"))),
        }
    }
}

impl fmt::Display for CfType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl FromStr for CfType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let n: u8 = s
            .trim()
            .parse()
            .map_err(|_| Error::Spec(format!("bad clash-free type {s:?}")))?;
        Self::from_number(n)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Seeds {
    /// `phi`, one start address per memory.
    Type1(Vec<usize>),
    /// One `phi` per sweep.
    Type2(Vec<Vec<usize>>),
    /// One `D x z` address matrix per sweep, indexed `[sweep][cycle][memory]`.
    Type3(Vec<Vec<Vec<usize>>>),
}

/// Everything needed to regenerate a junction's left-memory access schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClashFreeSpec {
    z: usize,
    depth: usize,
    sweeps: usize,
    seeds: Seeds,
    dither: Option<Vec<Vec<usize>>>,
}

impl ClashFreeSpec {
    /// Validates and assembles a spec.
    ///
    /// `dither`, when present, holds lane-to-memory permutations: one for type 1,
    /// one per sweep for types 2 and 3.
    pub fn new(
        z: usize,
        depth: usize,
        sweeps: usize,
        seeds: Seeds,
        dither: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if z == 0 || depth == 0 || sweeps == 0 {
            return Err(Error::Spec(format!(
                "z={z}, D={depth}, sweeps={sweeps} must all be positive"
            )));
        }
        let check_vec = |v: &[usize], what: &str| -> Result<()> {
            if v.len() != z {
                return Err(Error::Spec(format!(
                    "{what}: expected {z} entries, got {}",
                    v.len()
                )));
            }
            if let Some(a) = v.iter().find(|&&a| a >= depth) {
                return Err(Error::Spec(format!(
                    "{what}: address {a} outside 0..{depth}"
                )));
            }
            Ok(())
        };
        match &seeds {
            Seeds::Type1(phi) => check_vec(phi, "seed vector")?,
            Seeds::Type2(phis) => {
                if phis.len() != sweeps {
                    return Err(Error::Spec(format!(
                        "type 2 needs {sweeps} seed vectors, got {}",
                        phis.len()
                    )));
                }
                for (s, phi) in phis.iter().enumerate() {
                    check_vec(phi, &format!("sweep {s} seed vector"))?;
                }
            }
            Seeds::Type3(mats) => {
                if mats.len() != sweeps {
                    return Err(Error::Spec(format!(
                        "type 3 needs {sweeps} address matrices, got {}",
                        mats.len()
                    )));
                }
                for (s, mat) in mats.iter().enumerate() {
                    if mat.len() != depth {
                        return Err(Error::Spec(format!(
                            "sweep {s}: matrix needs {depth} rows, got {}",
                            mat.len()
                        )));
                    }
                    for (c, row) in mat.iter().enumerate() {
                        check_vec(row, &format!("sweep {s} row {c}"))?;
                    }
                    for m in 0..z {
                        let mut seen = vec![false; depth];
                        for row in mat {
                            if std::mem::replace(&mut seen[row[m]], true) {
                                return Err(Error::Spec(format!(
                                    "sweep {s}: column {m} is not a permutation of 0..{depth}"
                                )));
                            }
                        }
                    }
                }
            }
        }
        if let Some(perms) = &dither {
            let expected = match seeds {
                Seeds::Type1(_) => 1,
                _ => sweeps,
            };
            if perms.len() != expected {
                return Err(Error::Spec(format!(
                    "expected {expected} dither permutations, got {}",
                    perms.len()
                )));
            }
            for (i, p) in perms.iter().enumerate() {
                let mut seen = vec![false; z];
                if p.len() != z
                    || p.iter()
                        .any(|&m| m >= z || std::mem::replace(&mut seen[m], true))
                {
                    return Err(Error::Spec(format!(
                        "dither {i} is not a permutation of 0..{z}"
                    )));
                }
            }
        }
        Ok(Self {
            z,
            depth,
            sweeps,
            seeds,
            dither,
        })
    }

    /// Natural-order access: every cycle reads the same address from all memories.
    /// This is the schedule of a fully connected junction.
    pub fn natural(z: usize, depth: usize, sweeps: usize) -> Self {
        Self::new(z, depth, sweeps, Seeds::Type1(vec![0; z]), None)
            .expect("natural order spec is valid")
    }

    pub fn cf_type(&self) -> CfType {
        match self.seeds {
            Seeds::Type1(_) => CfType::Type1,
            Seeds::Type2(_) => CfType::Type2,
            Seeds::Type3(_) => CfType::Type3,
        }
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn n_left(&self) -> usize {
        self.z * self.depth
    }

    /// Junction cycle length without flush cycles.
    pub fn cycles(&self) -> usize {
        self.depth * self.sweeps
    }

    pub fn seeds(&self) -> &Seeds {
        &self.seeds
    }

    pub fn dither(&self) -> Option<&[Vec<usize>]> {
        self.dither.as_deref()
    }

    /// Address read from `memory` in global cycle `cycle`.
    pub fn address(&self, cycle: usize, memory: usize) -> usize {
        let sweep = cycle / self.depth;
        let local = cycle % self.depth;
        match &self.seeds {
            Seeds::Type1(phi) => (phi[memory] + local) % self.depth,
            Seeds::Type2(phis) => (phis[sweep][memory] + local) % self.depth,
            Seeds::Type3(mats) => mats[sweep][local][memory],
        }
    }

    /// Memory served to `lane` during `sweep`.
    pub fn memory_for_lane(&self, sweep: usize, lane: usize) -> usize {
        match &self.dither {
            None => lane,
            Some(perms) if perms.len() == 1 => perms[0][lane],
            Some(perms) => perms[sweep][lane],
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let row = |s: &mut String, v: &[usize]| {
            let line: Vec<String> = v.iter().map(usize::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        };
        writeln!(s, "{SPEC_MAGIC}").unwrap();
        writeln!(
            s,
            "{} {} {} {} {}",
            self.cf_type(),
            self.z,
            self.depth,
            self.sweeps,
            u8::from(self.dither.is_some())
        )
        .unwrap();
        match &self.seeds {
            Seeds::Type1(phi) => row(&mut s, phi),
            Seeds::Type2(phis) => phis.iter().for_each(|p| row(&mut s, p)),
            Seeds::Type3(mats) => mats.iter().flatten().for_each(|r| row(&mut s, r)),
        }
        if let Some(perms) = &self.dither {
            perms.iter().for_each(|p| row(&mut s, p));
        }
        s
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut offset = 0u64;
        let all: Vec<(u64, &str)> = text
            .split_inclusive('\n')
            .map(|l| {
                let at = offset;
                offset += l.len() as u64;
                (at, l.trim_end_matches(['\n', '\r']))
            })
            .collect();
        let end = offset;
        let mut lines = all.into_iter();
        let (_, magic) = lines
            .next()
            .ok_or_else(|| Error::parse(0, "empty spec file"))?;
        if magic != SPEC_MAGIC {
            return Err(Error::parse(0, format!("expected header {SPEC_MAGIC:?}")));
        }
        let (at, head) = lines
            .next()
            .ok_or_else(|| Error::parse(0, "missing spec header"))?;
        let nums = parse_row(at, head)?;
        if nums.len() != 5 {
            return Err(Error::parse(at, "expected `type z D sweeps dither`"));
        }
        let cf_type =
            CfType::from_number(nums[0] as u8).map_err(|e| Error::parse(at, e.to_string()))?;
        let (z, depth, sweeps, dithered) = (nums[1], nums[2], nums[3], nums[4] != 0);
        let mut take = |n: usize| -> Result<Vec<Vec<usize>>> {
            (0..n)
                .map(|_| {
                    let (at, l) = lines
                        .next()
                        .ok_or_else(|| Error::parse(end, "spec file truncated"))?;
                    parse_row(at, l)
                })
                .collect()
        };
        let seeds = match cf_type {
            CfType::Type1 => Seeds::Type1(take(1)?.remove(0)),
            CfType::Type2 => Seeds::Type2(take(sweeps)?),
            CfType::Type3 => {
                let rows = take(sweeps * depth)?;
                Seeds::Type3(rows.chunks(depth.max(1)).map(<[_]>::to_vec).collect())
            }
        };
        let dither = if dithered {
            let n = if cf_type == CfType::Type1 { 1 } else { sweeps };
            Some(take(n)?)
        } else {
            None
        };
        Self::new(z, depth, sweeps, seeds, dither)
    }

    pub fn read_from(mut r: impl BufRead) -> Result<Self> {
        let mut s = String::new();
        r.read_to_string(&mut s)?;
        Self::from_text(&s)
    }
}

fn parse_row(at: u64, line: &str) -> Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| Error::parse(at, format!("bad number {t:?}")))
        })
        .collect()
}

/// Draws a random clash-free spec for a junction with `n_left` left neurons.
pub fn generate_spec(
    n_left: usize,
    d_out: usize,
    z: usize,
    cf_type: CfType,
    dither: bool,
    seed: u64,
) -> Result<ClashFreeSpec> {
    if z == 0 || n_left % z != 0 {
        return Err(Error::Spec(format!(
            "parallelism {z} does not divide {n_left} left neurons; pad the layer first"
        )));
    }
    if d_out == 0 {
        return Err(Error::Spec("out-degree must be positive".into()));
    }
    let depth = n_left / z;
    let mut rng = seeded(seed);
    let phi =
        |rng: &mut _| -> Vec<usize> { (0..z).map(|_| Rng::random_range(rng, 0..depth)).collect() };
    let seeds = match cf_type {
        CfType::Type1 => Seeds::Type1(phi(&mut rng)),
        CfType::Type2 => Seeds::Type2((0..d_out).map(|_| phi(&mut rng)).collect()),
        CfType::Type3 => Seeds::Type3(
            (0..d_out)
                .map(|_| {
                    let mut mat = vec![vec![0; z]; depth];
                    let mut col: Vec<usize> = (0..depth).collect();
                    for m in 0..z {
                        col.shuffle(&mut rng);
                        for (c, &a) in col.iter().enumerate() {
                            mat[c][m] = a;
                        }
                    }
                    mat
                })
                .collect(),
        ),
    };
    let dither = dither.then(|| {
        let n = if cf_type == CfType::Type1 { 1 } else { d_out };
        (0..n)
            .map(|_| {
                let mut p: Vec<usize> = (0..z).collect();
                p.shuffle(&mut rng);
                p
            })
            .collect()
    });
    ClashFreeSpec::new(z, depth, d_out, seeds, dither)
}
