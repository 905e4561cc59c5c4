use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{DegreeKind, JunctionPattern};
use crate::rng::{seeded, SeedRng};
use crate::{Error, Result};

const MAX_LOCAL_FAILURES: usize = 100;

/// Random regular bipartite pattern with out-degree `d_out` on the left and
/// in-degree `n_left * d_out / n_right` on the right.
///
/// Left "stubs" (each left index repeated `d_out` times) are shuffled and dealt to
/// right neurons in blocks of `d_in`. A stub that duplicates an edge already in its
/// block is swapped with a random stub elsewhere; after too many failed swaps the
/// whole shuffle restarts. Junctions more than half full are built as the complement
/// of a sparse pattern.
pub fn generate_structured_random(
    n_left: usize,
    n_right: usize,
    d_out: usize,
    seed: u64,
) -> Result<JunctionPattern> {
    if n_left == 0 || n_right == 0 || d_out == 0 || d_out > n_right {
        return Err(Error::Config(format!(
            "infeasible structured junction ({n_left}, {n_right}) with out-degree {d_out}"
        )));
    }
    if (n_left * d_out) % n_right != 0 {
        return Err(Error::Config(format!(
            "in-degree {n_left}*{d_out}/{n_right} is not an integer"
        )));
    }
    let d_in = n_left * d_out / n_right;
    if d_in == n_left {
        return Ok(JunctionPattern::fully_connected(n_left, n_right));
    }

    if 2 * d_in > n_left {
        let sparse = generate_structured_random(n_left, n_right, n_right - d_out, seed)?;
        let rows: Vec<Vec<usize>> = sparse
            .rows()
            .map(|r| {
                let mut keep = vec![true; n_left];
                for &k in r {
                    keep[k as usize] = false;
                }
                (0..n_left).filter(|&k| keep[k]).collect()
            })
            .collect();
        return JunctionPattern::from_rows(n_left, n_right, &rows, DegreeKind::Regular);
    }

    let mut rng = seeded(seed);
    let mut stubs: Vec<usize> = (0..n_left)
        .flat_map(|k| std::iter::repeat_n(k, d_out))
        .collect();
    loop {
        stubs.shuffle(&mut rng);
        if repair(&mut stubs, d_in, &mut rng) {
            break;
        }
        log::debug!("structured pattern repair failed, reshuffling");
    }

    let rows: Vec<Vec<usize>> = stubs
        .chunks(d_in)
        .map(|c| {
            let mut r = c.to_vec();
            r.sort_unstable();
            r
        })
        .collect();
    JunctionPattern::from_rows(n_left, n_right, &rows, DegreeKind::Regular)
}

fn block_contains(stubs: &[usize], d_in: usize, block: usize, value: usize, skip: usize) -> bool {
    let start = block * d_in;
    stubs[start..start + d_in]
        .iter()
        .enumerate()
        .any(|(i, &v)| start + i != skip && v == value)
}

/// Removes duplicate edges in place by swapping. Returns `false` to request a restart.
fn repair(stubs: &mut [usize], d_in: usize, rng: &mut SeedRng) -> bool {
    let total = stubs.len();
    for pos in 0..total {
        let mut failures = 0;
        let block = pos / d_in;
        let start = block * d_in;
        while stubs[start..pos].contains(&stubs[pos]) {
            let q = rng.random_range(0..total);
            let other = q / d_in;
            let ok = other != block
                && !block_contains(stubs, d_in, block, stubs[q], pos)
                && !block_contains(stubs, d_in, other, stubs[pos], q);
            if ok {
                stubs.swap(pos, q);
            } else {
                failures += 1;
                if failures > MAX_LOCAL_FAILURES {
                    return false;
                }
            }
        }
    }
    true
}

/// Edge count for a density, snapped to the nearest integer (with a warning when
/// the density is not exactly representable).
pub fn edges_for_density(n_left: usize, n_right: usize, rho: f64) -> usize {
    let exact = rho * (n_left * n_right) as f64;
    let edges = exact.round() as usize;
    if (exact - edges as f64).abs() > 1e-9 {
        log::warn!(
            "density {rho} of a {n_left}x{n_right} junction is not achievable exactly; using {edges} edges"
        );
    }
    edges
}

/// Random pre-defined sparsity: `round(rho * n_left * n_right)` distinct edges drawn
/// uniformly without replacement, with no degree constraints.
pub fn generate_random_unstructured(
    n_left: usize,
    n_right: usize,
    rho: f64,
    seed: u64,
) -> Result<JunctionPattern> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Config(format!("density {rho} outside (0, 1]")));
    }
    let edges = edges_for_density(n_left, n_right, rho);
    generate_random_with_edges(n_left, n_right, edges, seed)
}

pub fn generate_random_with_edges(
    n_left: usize,
    n_right: usize,
    edges: usize,
    seed: u64,
) -> Result<JunctionPattern> {
    let total = n_left * n_right;
    if edges == 0 || edges > total {
        return Err(Error::Config(format!(
            "edge count {edges} outside 1..={total}"
        )));
    }
    let mut rng = seeded(seed);
    let mut picked = index::sample(&mut rng, total, edges).into_vec();
    picked.sort_unstable();
    let mut rows = vec![Vec::new(); n_right];
    for idx in picked {
        rows[idx / n_left].push(idx % n_left);
    }
    JunctionPattern::from_rows(n_left, n_right, &rows, DegreeKind::Variable)
}
