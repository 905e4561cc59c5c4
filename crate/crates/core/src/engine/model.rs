use rand_distr::{Distribution, Normal};

use crate::rng::seeded;
use crate::topology::JunctionPattern;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Softmax,
}

impl Activation {
    pub fn code(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Softmax => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Softmax),
            _ => None,
        }
    }
}

/// Weights aligned with pattern edge order, one bias per non-input neuron.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseModel {
    layer_sizes: Vec<usize>,
    patterns: Vec<JunctionPattern>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    activations: Vec<Activation>,
}

impl SparseModel {
    /// ReLU hidden layers and a softmax output.
    pub fn new(
        layer_sizes: Vec<usize>,
        patterns: Vec<JunctionPattern>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let l = patterns.len();
        let mut activations = vec![Activation::Relu; l];
        if let Some(last) = activations.last_mut() {
            *last = Activation::Softmax;
        }
        Self::with_activations(layer_sizes, patterns, weights, biases, activations)
    }

    pub fn with_activations(
        layer_sizes: Vec<usize>,
        patterns: Vec<JunctionPattern>,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
        activations: Vec<Activation>,
    ) -> Result<Self> {
        check_shapes(&layer_sizes, &patterns)?;
        let l = patterns.len();
        if weights.len() != l || biases.len() != l || activations.len() != l {
            return Err(Error::Config(format!(
                "{l} junctions but {} weight tables, {} bias vectors, {} activations",
                weights.len(),
                biases.len(),
                activations.len()
            )));
        }
        for j in 0..l {
            if weights[j].len() != patterns[j].edge_count() {
                return Err(Error::Config(format!(
                    "junction {}: {} weights for {} edges",
                    j + 1,
                    weights[j].len(),
                    patterns[j].edge_count()
                )));
            }
            if biases[j].len() != layer_sizes[j + 1] {
                return Err(Error::Config(format!(
                    "junction {}: {} biases for {} neurons",
                    j + 1,
                    biases[j].len(),
                    layer_sizes[j + 1]
                )));
            }
            if weights[j].iter().chain(&biases[j]).any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "junction {}: non-finite parameter",
                    j + 1
                )));
            }
        }
        if activations[..l - 1]
            .iter()
            .any(|&a| a == Activation::Softmax)
        {
            return Err(Error::Config(
                "softmax is only supported on the output layer".into(),
            ));
        }
        Ok(Self {
            layer_sizes,
            patterns,
            weights,
            biases,
            activations,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn patterns(&self) -> &[JunctionPattern] {
        &self.patterns
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn num_junctions(&self) -> usize {
        self.patterns.len()
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>()
            + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .all(|v| v.is_finite())
    }

    /// Runs the forward pass into `state`.
    pub fn forward_into(&self, input: &[f64], state: &mut LayerState) -> Result<()> {
        if input.len() != self.layer_sizes[0] {
            return Err(Error::Config(format!(
                "input has {} values, layer 0 has {} neurons",
                input.len(),
                self.layer_sizes[0]
            )));
        }
        if let Some(i) = input.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("input {i} is not finite")));
        }
        state.a[0].copy_from_slice(input);
        for j in 0..self.num_junctions() {
            let (lo, hi) = state.a.split_at_mut(j + 1);
            junction_forward(
                &self.patterns[j],
                &self.weights[j],
                &self.biases[j],
                &lo[j],
                &mut state.h[j + 1],
            );
            activate(
                self.activations[j],
                &state.h[j + 1],
                &mut hi[0],
                &mut state.da[j + 1],
            );
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<LayerState> {
        let mut s = LayerState::new(&self.layer_sizes);
        self.forward_into(input, &mut s)?;
        Ok(s)
    }

    /// Backpropagates from a class label after [`forward_into`](Self::forward_into).
    ///
    /// With `accumulate` the gradients are added to `grads`, otherwise they overwrite it.
    pub fn backward_into(
        &self,
        state: &mut LayerState,
        label: usize,
        grads: &mut Gradients,
        accumulate: bool,
    ) -> Result<()> {
        let l = self.num_junctions();
        let n_out = self.layer_sizes[l];
        if label >= n_out {
            return Err(Error::Config(format!("label {label} >= {n_out} classes")));
        }
        if self.activations[l - 1] != Activation::Softmax {
            return Err(Error::Config(
                "backward needs a softmax output layer".into(),
            ));
        }
        for (r, d) in state.delta[l].iter_mut().enumerate() {
            let y = if r == label { 1.0 } else { 0.0 };
            *d = state.a[l][r] - y;
        }
        for j in (0..l).rev() {
            let p = &self.patterns[j];
            let (gw, gb) = (&mut grads.weights[j], &mut grads.biases[j]);
            let delta = &state.delta[j + 1];
            let a_left = &state.a[j];
            let offs = p.offsets();
            let left = p.left_indices();
            for r in 0..p.n_right() {
                let d = delta[r];
                let (s, e) = (offs[r], offs[r + 1]);
                if accumulate {
                    for (g, &k) in gw[s..e].iter_mut().zip(&left[s..e]) {
                        *g += a_left[k as usize] * d;
                    }
                    gb[r] += d;
                } else {
                    for (g, &k) in gw[s..e].iter_mut().zip(&left[s..e]) {
                        *g = a_left[k as usize] * d;
                    }
                    gb[r] = d;
                }
            }
            if j > 0 {
                let (lo, hi) = state.delta.split_at_mut(j + 1);
                junction_backprop(p, &self.weights[j], &hi[0], &mut state.acc[j]);
                for ((dl, &da), &acc) in lo[j].iter_mut().zip(&state.da[j]).zip(&state.acc[j]) {
                    *dl = da * acc;
                }
            }
        }
        Ok(())
    }

    pub fn backward(&self, state: &mut LayerState, label: usize) -> Result<Gradients> {
        let mut g = Gradients::zeros(self);
        self.backward_into(state, label, &mut g, false)?;
        Ok(g)
    }

    /// Cross-entropy loss of one sample.
    pub fn loss(&self, input: &[f64], label: usize) -> Result<f64> {
        let s = self.forward(input)?;
        Ok(cross_entropy(&s.h[self.num_junctions()], label))
    }
}

fn check_shapes(layer_sizes: &[usize], patterns: &[JunctionPattern]) -> Result<()> {
    if patterns.is_empty() || layer_sizes.len() != patterns.len() + 1 {
        return Err(Error::Config(format!(
            "{} layer sizes need {} patterns, got {}",
            layer_sizes.len(),
            layer_sizes.len().saturating_sub(1),
            patterns.len()
        )));
    }
    for (j, p) in patterns.iter().enumerate() {
        if p.n_left() != layer_sizes[j] || p.n_right() != layer_sizes[j + 1] {
            return Err(Error::Config(format!(
                "junction {}: pattern is {}x{}, layers are {}x{}",
                j + 1,
                p.n_left(),
                p.n_right(),
                layer_sizes[j],
                layer_sizes[j + 1]
            )));
        }
    }
    Ok(())
}

/// He-normal weights with the receiving neuron's in-degree as fan-in, constant biases.
pub fn init_model(
    patterns: Vec<JunctionPattern>,
    layer_sizes: Vec<usize>,
    seed: u64,
    bias_init: f64,
) -> Result<SparseModel> {
    check_shapes(&layer_sizes, &patterns)?;
    let mut rng = seeded(seed);
    let mut weights = Vec::with_capacity(patterns.len());
    for p in &patterns {
        let mut w = Vec::with_capacity(p.edge_count());
        for r in 0..p.n_right() {
            let fan_in = p.in_degree(r);
            if fan_in == 0 {
                continue;
            }
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
            w.extend((0..fan_in).map(|_| normal.sample(&mut rng)));
        }
        weights.push(w);
    }
    let biases = layer_sizes[1..]
        .iter()
        .map(|&n| vec![bias_init; n])
        .collect();
    SparseModel::new(layer_sizes, patterns, weights, biases)
}

/// Per-layer buffers; index 0 is the input layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    pub h: Vec<Vec<f64>>,
    pub a: Vec<Vec<f64>>,
    pub da: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
    acc: Vec<Vec<f64>>,
}

impl LayerState {
    pub fn new(layer_sizes: &[usize]) -> Self {
        let z = || {
            layer_sizes
                .iter()
                .map(|&n| vec![0.0; n])
                .collect::<Vec<_>>()
        };
        Self {
            h: z(),
            a: z(),
            da: z(),
            delta: z(),
            acc: z(),
        }
    }

    pub fn output(&self) -> &[f64] {
        self.a.last().expect("at least one layer")
    }
}

/// Weight and bias gradients shaped like a model.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(model: &SparseModel) -> Self {
        Self {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn fill_zero(&mut self) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .for_each(|v| v.fill(0.0));
    }

    pub fn scale(&mut self, s: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flatten()
            .for_each(|v| *v *= s);
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .all(|v| v.is_finite())
    }
}

/// `out[r] = Σ_e w[e]·input[left[e]] + b[r]`, accumulated in edge order.
#[inline]
pub fn junction_forward(p: &JunctionPattern, w: &[f64], b: &[f64], input: &[f64], out: &mut [f64]) {
    let offs = p.offsets();
    let left = p.left_indices();
    for r in 0..p.n_right() {
        let (s, e) = (offs[r], offs[r + 1]);
        let mut acc = 0.0;
        for (wi, &k) in w[s..e].iter().zip(&left[s..e]) {
            acc += wi * input[k as usize];
        }
        out[r] = acc + b[r];
    }
}

/// Scatters `w[e]·delta[right(e)]` onto left neurons in edge order.
#[inline]
pub fn junction_backprop(p: &JunctionPattern, w: &[f64], delta: &[f64], acc: &mut [f64]) {
    acc.fill(0.0);
    let offs = p.offsets();
    let left = p.left_indices();
    for r in 0..p.n_right() {
        let d = delta[r];
        let (s, e) = (offs[r], offs[r + 1]);
        for (wi, &k) in w[s..e].iter().zip(&left[s..e]) {
            acc[k as usize] += wi * d;
        }
    }
}

pub(crate) fn activate(kind: Activation, h: &[f64], a: &mut [f64], da: &mut [f64]) {
    match kind {
        Activation::Relu => {
            for ((a, da), &h) in a.iter_mut().zip(da.iter_mut()).zip(h) {
                if h > 0.0 {
                    *a = h;
                    *da = 1.0;
                } else {
                    *a = 0.0;
                    *da = 0.0;
                }
            }
        }
        Activation::Softmax => {
            let m = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for (a, &h) in a.iter_mut().zip(h) {
                *a = (h - m).exp();
                sum += *a;
            }
            for (a, da) in a.iter_mut().zip(da.iter_mut()) {
                *a /= sum;
                *da = *a * (1.0 - *a);
            }
        }
    }
}

/// `-log softmax(h)[label]`, computed stably from pre-activations.
pub fn cross_entropy(h: &[f64], label: usize) -> f64 {
    let m = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + h.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
    lse - h[label]
}
