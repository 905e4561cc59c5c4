use super::model::SparseModel;
use crate::topology::{DegreeKind, JunctionPattern};
use crate::{Error, Result};

/// Keeps the `ceil(rho * N_left * N_right)` largest-magnitude weights of each junction.
///
/// Equal magnitudes keep the lower edge index. Kept edges stay in their original order and
/// biases are copied unchanged.
pub fn prune_threshold(
    model: &SparseModel,
    rho: &[f64],
) -> Result<(Vec<JunctionPattern>, SparseModel)> {
    if rho.len() != model.num_junctions() {
        return Err(Error::Config(format!(
            "{} target densities for {} junctions",
            rho.len(),
            model.num_junctions()
        )));
    }
    let mut patterns = Vec::with_capacity(rho.len());
    let mut weights = Vec::with_capacity(rho.len());
    for (j, (&r, p)) in rho.iter().zip(model.patterns()).enumerate() {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Config(format!(
                "junction {}: density {r} outside (0, 1]",
                j + 1
            )));
        }
        let w = &model.weights[j];
        let keep = ((r * (p.n_left() * p.n_right()) as f64).ceil() as usize).min(w.len());
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
        let mut kept = vec![false; w.len()];
        order[..keep].iter().for_each(|&e| kept[e] = true);
        let offs = p.offsets();
        let mut rows = Vec::with_capacity(p.n_right());
        let mut new_w = Vec::with_capacity(keep);
        for (row_idx, row) in p.rows().enumerate() {
            let mut out = Vec::new();
            for (i, &k) in row.iter().enumerate() {
                let e = offs[row_idx] + i;
                if kept[e] {
                    out.push(k as usize);
                    new_w.push(w[e]);
                }
            }
            rows.push(out);
        }
        patterns.push(JunctionPattern::from_rows(
            p.n_left(),
            p.n_right(),
            &rows,
            DegreeKind::Variable,
        )?);
        weights.push(new_w);
    }
    let pruned = SparseModel::with_activations(
        model.layer_sizes().to_vec(),
        patterns.clone(),
        weights,
        model.biases.clone(),
        model.activations().to_vec(),
    )?;
    Ok((patterns, pruned))
}
