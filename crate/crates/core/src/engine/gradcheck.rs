use super::model::{LayerState, SparseModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    Weight { junction: usize, edge: usize },
    Bias { junction: usize, neuron: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<ParamId>,
    pub checked: usize,
    /// Parameters whose ±ε perturbation changes which ReLUs are active.
    pub excluded: Vec<ParamId>,
}

/// Magnitudes below this are compared absolutely.
const REL_FLOOR: f64 = 1e-8;

fn relu_mask(model: &SparseModel, state: &mut LayerState, input: &[f64]) -> Result<Vec<bool>> {
    model.forward_into(input, state)?;
    let l = model.num_junctions();
    Ok(state.h[1..l].iter().flatten().map(|&h| h > 0.0).collect())
}

/// Compares analytic gradients with central differences `(l(θ+ε) − l(θ−ε)) / 2ε`.
///
/// The relative error of a parameter is `|a − n| / max(|a|, |n|, 1e-8)`.
pub fn grad_check(
    model: &SparseModel,
    input: &[f64],
    label: usize,
    eps: f64,
) -> Result<GradCheckReport> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let mut state = LayerState::new(model.layer_sizes());
    model.forward_into(input, &mut state)?;
    let base_mask: Vec<bool> = state.h[1..model.num_junctions()]
        .iter()
        .flatten()
        .map(|&h| h > 0.0)
        .collect();
    let analytic = model.backward(&mut state, label)?;

    let mut params = Vec::new();
    for j in 0..model.num_junctions() {
        params
            .extend((0..model.weights[j].len()).map(|edge| ParamId::Weight { junction: j, edge }));
        params.extend((0..model.biases[j].len()).map(|neuron| ParamId::Bias {
            junction: j,
            neuron,
        }));
    }

    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        excluded: Vec::new(),
    };
    for id in params {
        let (orig, a) = match id {
            ParamId::Weight { junction, edge } => (
                model.weights[junction][edge],
                analytic.weights[junction][edge],
            ),
            ParamId::Bias { junction, neuron } => (
                model.biases[junction][neuron],
                analytic.biases[junction][neuron],
            ),
        };
        let mut eval = |v: f64| -> Result<(f64, Vec<bool>)> {
            match id {
                ParamId::Weight { junction, edge } => probe.weights[junction][edge] = v,
                ParamId::Bias { junction, neuron } => probe.biases[junction][neuron] = v,
            }
            let mask = relu_mask(&probe, &mut state, input)?;
            Ok((
                super::model::cross_entropy(&state.h[probe.num_junctions()], label),
                mask,
            ))
        };
        let (lp, mp) = eval(orig + eps)?;
        let (lm, mm) = eval(orig - eps)?;
        eval(orig)?;
        if mp != base_mask || mm != base_mask {
            report.excluded.push(id);
            continue;
        }
        let n = (lp - lm) / (2.0 * eps);
        let err = (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR);
        report.checked += 1;
        if report.worst.is_none() || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst = Some(id);
        }
    }
    Ok(report)
}
