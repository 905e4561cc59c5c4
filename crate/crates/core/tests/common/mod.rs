//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use num_integer::Integer;
use rand::Rng;
use sparsepipe::clashfree::CfType;
use sparsepipe::engine::{init_model, update_step, Gradients, Optimizer};
use sparsepipe::pipesim::{
    simulate, BankKind, Mode, PipelineConfig, PipelineTrace, Rw, SimOutcome,
};
use sparsepipe::rng::seeded;
use sparsepipe::topology::{
    generate_random_with_edges, generate_structured_random, JunctionPattern, NetworkConfig,
};
use sparsepipe::{SparseModel, TrainConfig};

/// Cell `(memory, address)` read by `lane` in `cycle`, straight from the schedule
/// definitions: the lane is routed to a memory by the sweep's dither permutation and the
/// memory's address comes from its seed.
fn cell(
    kind: u8,
    depth: usize,
    z: usize,
    seeds: &[usize],
    dither: &[usize],
    cycle: usize,
    lane: usize,
) -> (usize, usize) {
    let sweep = cycle / depth;
    let within = cycle % depth;
    let dz = if kind == 1 { 0 } else { sweep * z };
    let memory = if dither.is_empty() {
        lane
    } else {
        let per = if kind == 1 { 0 } else { sweep };
        dither[per * z + lane]
    };
    let address = match kind {
        1 => (seeds[memory] + cycle) % depth,
        2 => (seeds[dz + memory] + within) % depth,
        _ => seeds[(sweep * depth + within) * z + memory],
    };
    (memory, address)
}

fn for_each_assignment(radix: usize, len: usize, mut f: impl FnMut(&[usize])) {
    let mut v = vec![0; len];
    loop {
        f(&v);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            v[i] += 1;
            if v[i] < radix {
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == p.len() {
            out.push(p.clone());
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            rec(k + 1, p, out);
            p.swap(k, i);
        }
    }
    rec(0, &mut p, &mut out);
    out
}

/// Type-3 seed matrices for one sweep: each memory column is a permutation of addresses.
fn type3_sweeps(depth: usize, z: usize) -> Vec<Vec<usize>> {
    let perms = permutations(depth);
    let mut out = Vec::new();
    for_each_assignment(perms.len(), z, |choice| {
        let mut m = vec![0; depth * z];
        for (mem, &pi) in choice.iter().enumerate() {
            for c in 0..depth {
                m[c * z + mem] = perms[pi][c];
            }
        }
        out.push(m);
    });
    out
}

/// Number of distinct connection structures over every seed and dither choice.
///
/// Two choices are the same structure when, cycle by cycle, each right-neuron group
/// reads the same set of cells; lane order inside a group does not matter. Returns
/// `None` when the enumeration would exceed `limit` combinations.
pub fn brute_force_count(
    kind: u8,
    depth: usize,
    z: usize,
    d_out: usize,
    d_in: usize,
    dither: bool,
    limit: u64,
) -> Option<u64> {
    let cycles = depth * d_out;
    let seed_choices: Vec<Vec<usize>> = match kind {
        1 => {
            let mut v = Vec::new();
            for_each_assignment(depth, z, |s| v.push(s.to_vec()));
            v
        }
        2 => {
            let mut v = Vec::new();
            if (depth as u64).checked_pow((z * d_out) as u32)? > limit {
                return None;
            }
            for_each_assignment(depth, z * d_out, |s| v.push(s.to_vec()));
            v
        }
        _ => {
            let per = type3_sweeps(depth, z);
            if (per.len() as u64).checked_pow(d_out as u32)? > limit {
                return None;
            }
            let mut v = Vec::new();
            for_each_assignment(per.len(), d_out, |choice| {
                v.push(
                    choice
                        .iter()
                        .flat_map(|&i| per[i].iter().copied())
                        .collect(),
                );
            });
            v
        }
    };
    let dither_choices: Vec<Vec<usize>> = if dither {
        let perms = permutations(z);
        let n = if kind == 1 { 1 } else { d_out };
        if (perms.len() as u64)
            .checked_pow(n as u32)?
            .checked_mul(seed_choices.len() as u64)?
            > limit
        {
            return None;
        }
        let mut v = Vec::new();
        for_each_assignment(perms.len(), n, |choice| {
            v.push(
                choice
                    .iter()
                    .flat_map(|&i| perms[i].iter().copied())
                    .collect(),
            );
        });
        v
    } else {
        vec![Vec::new()]
    };
    let mut seen = HashSet::new();
    for seeds in &seed_choices {
        for dither in &dither_choices {
            let mut key = Vec::with_capacity(cycles * z);
            for c in 0..cycles {
                let mut row: Vec<(usize, usize, usize)> = (0..z)
                    .map(|lane| {
                        let (m, a) = cell(kind, depth, z, seeds, dither, c, lane);
                        ((c * z + lane) / d_in, m, a)
                    })
                    .collect();
                row.sort_unstable();
                key.extend(row);
            }
            seen.insert(key);
        }
    }
    Some(seen.len() as u64)
}

/// Dense network with an explicit 0/1 mask, used as the reference for sparse numerics.
#[derive(Debug, Clone)]
pub struct MaskedDense {
    pub sizes: Vec<usize>,
    /// `w[j][r][k]`: weight from left neuron k to right neuron r of junction j.
    pub w: Vec<Vec<Vec<f64>>>,
    pub mask: Vec<Vec<Vec<bool>>>,
    pub b: Vec<Vec<f64>>,
}

pub struct DenseGrads {
    pub w: Vec<Vec<Vec<f64>>>,
    pub b: Vec<Vec<f64>>,
}

impl MaskedDense {
    pub fn from_sparse(model: &SparseModel) -> Self {
        let sizes = model.layer_sizes().to_vec();
        let mut w = Vec::new();
        let mut mask = Vec::new();
        for (j, p) in model.patterns().iter().enumerate() {
            let mut wj = vec![vec![0.0; sizes[j]]; sizes[j + 1]];
            let mut mj = vec![vec![false; sizes[j]]; sizes[j + 1]];
            for r in 0..sizes[j + 1] {
                for (i, &k) in p.row(r).iter().enumerate() {
                    wj[r][k as usize] = model.weights[j][p.offsets()[r] + i];
                    mj[r][k as usize] = true;
                }
            }
            w.push(wj);
            mask.push(mj);
        }
        Self {
            sizes,
            w,
            mask,
            b: model.biases.clone(),
        }
    }

    /// Pre-activations and activations per layer.
    pub fn forward(&self, x: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let l = self.w.len();
        let mut hs = vec![x.to_vec()];
        let mut acts = vec![x.to_vec()];
        for j in 0..l {
            let prev = &acts[j];
            let h: Vec<f64> = (0..self.sizes[j + 1])
                .map(|r| {
                    (0..self.sizes[j])
                        .map(|k| self.w[j][r][k] * prev[k])
                        .sum::<f64>()
                        + self.b[j][r]
                })
                .collect();
            let a = if j + 1 == l {
                let m = h.iter().cloned().fold(f64::MIN, f64::max);
                let e: Vec<f64> = h.iter().map(|v| (v - m).exp()).collect();
                let s: f64 = e.iter().sum();
                e.iter().map(|v| v / s).collect()
            } else {
                h.iter().map(|&v| v.max(0.0)).collect()
            };
            hs.push(h);
            acts.push(a);
        }
        (hs, acts)
    }

    /// Full dense gradients; masked-out entries are computed too and then zeroed.
    pub fn backward(&self, x: &[f64], label: usize) -> DenseGrads {
        let l = self.w.len();
        let (hs, acts) = self.forward(x);
        let mut delta: Vec<f64> = acts[l]
            .iter()
            .enumerate()
            .map(|(r, &a)| a - if r == label { 1.0 } else { 0.0 })
            .collect();
        let mut gw = vec![Vec::new(); l];
        let mut gb = vec![Vec::new(); l];
        for j in (0..l).rev() {
            gw[j] = (0..self.sizes[j + 1])
                .map(|r| {
                    (0..self.sizes[j])
                        .map(|k| {
                            if self.mask[j][r][k] {
                                acts[j][k] * delta[r]
                            } else {
                                0.0
                            }
                        })
                        .collect()
                })
                .collect();
            gb[j] = delta.clone();
            if j > 0 {
                delta = (0..self.sizes[j])
                    .map(|k| {
                        let s: f64 = (0..self.sizes[j + 1])
                            .map(|r| self.w[j][r][k] * delta[r])
                            .sum();
                        if hs[j][k] > 0.0 {
                            s
                        } else {
                            0.0
                        }
                    })
                    .collect();
            }
        }
        DenseGrads { w: gw, b: gb }
    }

    pub fn sgd_step(&mut self, g: &DenseGrads, lr: f64) {
        for j in 0..self.w.len() {
            for r in 0..self.sizes[j + 1] {
                for k in 0..self.sizes[j] {
                    if self.mask[j][r][k] {
                        self.w[j][r][k] -= lr * g.w[j][r][k];
                    }
                }
                self.b[j][r] -= lr * g.b[j][r];
            }
        }
    }
}

/// Random tiny network: 1 to 3 junctions of at most 10 neurons per layer, each
/// junction structured, unstructured or fully connected.
pub fn tiny_model(seed: u64) -> SparseModel {
    let mut rng = seeded(seed);
    let l = rng.random_range(1..=3);
    let mut sizes: Vec<usize> = (0..=l).map(|_| rng.random_range(2..=10)).collect();
    sizes[l] = sizes[l].max(2);
    let patterns = (0..l)
        .map(|j| {
            let (a, b) = (sizes[j], sizes[j + 1]);
            let s = rng.random::<u64>();
            match rng.random_range(0..3) {
                0 => {
                    let step = b / a.gcd(&b);
                    let d_out = step * rng.random_range(1..=b / step);
                    generate_structured_random(a, b, d_out, s).unwrap()
                }
                1 => {
                    let edges = rng.random_range(1..=a * b);
                    generate_random_with_edges(a, b, edges, s).unwrap()
                }
                _ => JunctionPattern::fully_connected(a, b),
            }
        })
        .collect();
    let mut m = init_model(patterns, sizes.clone(), seed, 0.0).unwrap();
    for b in m.biases.iter_mut().flatten() {
        *b = rng.random_range(-0.5..0.5);
    }
    m
}

pub fn tiny_input(model: &SparseModel, seed: u64) -> (Vec<f64>, usize) {
    let mut rng = seeded(seed ^ 0xabcd);
    let x = (0..model.layer_sizes()[0])
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let label = rng.random_range(0..*model.layer_sizes().last().unwrap());
    (x, label)
}

/// Random small pipeline: up to 3 junctions, `z <= 4`, memory depth `<= 4`.
pub fn random_setup(seed: u64, mode: Mode) -> (PipelineConfig, SparseModel) {
    let mut rng = seeded(seed);
    loop {
        let l = rng.random_range(1..=3usize);
        let z: Vec<usize> = (0..l).map(|_| rng.random_range(1..=4)).collect();
        let mut sizes: Vec<usize> = z.iter().map(|&z| z * rng.random_range(1..=4)).collect();
        sizes.push(rng.random_range(2..=8));
        let mut d_out = Vec::new();
        for j in 0..l {
            let (a, b) = (sizes[j], sizes[j + 1]);
            let ok: Vec<usize> = (1..=b).filter(|d| (a * d) % b == 0).collect();
            d_out.push(ok[rng.random_range(0..ok.len())]);
        }
        let Ok(net) = NetworkConfig::new(sizes.clone(), d_out).and_then(|n| n.with_parallelism(z))
        else {
            continue;
        };
        let cf = CfType::from_number(rng.random_range(1..=3)).unwrap();
        let dither = rng.random_bool(0.5);
        let Ok((cfg, pats)) = PipelineConfig::generate(net, cf, dither, vec![], mode, rng.random())
        else {
            continue;
        };
        let model = init_model(pats, sizes, rng.random(), 0.1).unwrap();
        return (cfg, model);
    }
}

pub fn samples(n: usize, width: usize, classes: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = seeded(seed);
    let xs = (0..n)
        .map(|_| (0..width).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let ys = (0..n).map(|_| rng.random_range(0..classes)).collect();
    (xs, ys)
}

pub fn run(
    model: &SparseModel,
    cfg: &PipelineConfig,
    train: &TrainConfig,
    xs: &[Vec<f64>],
    ys: &[usize],
) -> SimOutcome {
    let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    simulate(model, cfg, train, &refs, ys).unwrap()
}

/// Port usage per memory and cycle, counted from the raw trace. Repeated accesses to
/// one cell in one direction share a port.
pub fn port_violations(trace: &PipelineTrace) -> Vec<String> {
    let mut uses: HashMap<(u32, u32, BankKind, u16, u16, u32), HashSet<(u32, Rw)>> = HashMap::new();
    for a in &trace.accesses {
        uses.entry((a.slot, a.cycle, a.bank, a.layer, a.version, a.memory))
            .or_default()
            .insert((a.address, a.rw));
    }
    let mut bad = Vec::new();
    for (key, cells) in uses {
        let reads = cells.iter().filter(|c| c.1 == Rw::Read).count();
        let writes = cells.len() - reads;
        let ok = if key.2 == BankKind::Act || key.2 == BankKind::ActDeriv {
            cells.len() <= 1
        } else {
            reads <= 1 && writes <= 1
        };
        if !ok {
            bad.push(format!("{key:?}: {cells:?}"));
        }
    }
    bad
}

pub fn engine_m1(
    model: &SparseModel,
    train: &TrainConfig,
    xs: &[Vec<f64>],
    ys: &[usize],
) -> SparseModel {
    let mut m = model.clone();
    let mut opt = Optimizer::new(&m, train);
    let mut g = Gradients::zeros(&m);
    for (x, &y) in xs.iter().zip(ys) {
        let mut s = m.forward(x).unwrap();
        m.backward_into(&mut s, y, &mut g, false).unwrap();
        update_step(&mut m, &g, &mut opt).unwrap();
    }
    m
}

pub fn bits(m: &SparseModel) -> Vec<u64> {
    m.weights
        .iter()
        .chain(&m.biases)
        .flatten()
        .map(|v| v.to_bits())
        .collect()
}
