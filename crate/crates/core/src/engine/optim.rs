use super::model::{Gradients, SparseModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd,
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        /// Learning rate at step t is `lr / (1 + decay * t)`.
        decay: f64,
    },
}

impl OptimizerKind {
    pub fn adam_default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            decay: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    /// Coefficient of ½‖W‖², so the gradient term is `l2 * W`.
    pub l2: f64,
    /// Per-junction L1 coefficients; missing entries are 0.
    pub l1: Vec<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            optimizer: OptimizerKind::adam_default(),
            l2: 0.0,
            l1: Vec::new(),
            batch_size: 1,
            epochs: 50,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning rate must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1");
        }
        if !(self.l2.is_finite() && self.l2 >= 0.0)
            || self.l1.iter().any(|g| !(g.is_finite() && *g >= 0.0))
        {
            return bad("penalty coefficients must be finite and non-negative");
        }
        if let OptimizerKind::Adam {
            beta1,
            beta2,
            epsilon,
            decay,
        } = self.optimizer
        {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                return bad("Adam betas must lie in [0, 1)");
            }
            if !(epsilon > 0.0) || !(decay >= 0.0) {
                return bad("Adam epsilon must be positive and decay non-negative");
            }
        }
        Ok(())
    }

    pub fn l1_for(&self, junction: usize) -> f64 {
        self.l1.get(junction).copied().unwrap_or(0.0)
    }
}

/// Step-dependent scalars shared by every element updated in one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    lr: f64,
    l2: f64,
    bias_correction1: f64,
    bias_correction2: f64,
}

/// Optimizer state: Adam moments per weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    l2: f64,
    l1: Vec<f64>,
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    steps: u64,
}

impl Optimizer {
    pub fn new(model: &SparseModel, cfg: &TrainConfig) -> Self {
        let zeros = |v: &Vec<Vec<f64>>| match cfg.optimizer {
            OptimizerKind::Sgd => Vec::new(),
            OptimizerKind::Adam { .. } => v.iter().map(|x| vec![0.0; x.len()]).collect(),
        };
        Self {
            kind: cfg.optimizer,
            learning_rate: cfg.learning_rate,
            l2: cfg.l2,
            l1: (0..model.num_junctions()).map(|j| cfg.l1_for(j)).collect(),
            m_w: zeros(&model.weights),
            v_w: zeros(&model.weights),
            m_b: zeros(&model.biases),
            v_b: zeros(&model.biases),
            steps: 0,
        }
    }

    /// Number of completed steps.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Scalars for the 1-based step `t`.
    pub fn params(&self, t: u64) -> StepParams {
        match self.kind {
            OptimizerKind::Sgd => StepParams {
                lr: self.learning_rate,
                l2: self.l2,
                bias_correction1: 1.0,
                bias_correction2: 1.0,
            },
            OptimizerKind::Adam {
                beta1,
                beta2,
                decay,
                ..
            } => StepParams {
                lr: self.learning_rate / (1.0 + decay * (t - 1) as f64),
                l2: self.l2,
                bias_correction1: 1.0 - beta1.powf(t as f64),
                bias_correction2: 1.0 - beta2.powf(t as f64),
            },
        }
    }

    #[inline]
    fn apply(
        kind: OptimizerKind,
        hp: &StepParams,
        p: &mut f64,
        g: f64,
        m: Option<(&mut f64, &mut f64)>,
    ) {
        match (kind, m) {
            (
                OptimizerKind::Adam {
                    beta1,
                    beta2,
                    epsilon,
                    ..
                },
                Some((m, v)),
            ) => {
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let m_hat = *m / hp.bias_correction1;
                let v_hat = *v / hp.bias_correction2;
                *p -= hp.lr * m_hat / (v_hat.sqrt() + epsilon);
            }
            _ => *p -= hp.lr * g,
        }
    }

    /// Updates one weight from its data gradient, adding the L2 and L1 penalty terms.
    #[inline]
    pub fn update_weight(
        &mut self,
        hp: &StepParams,
        junction: usize,
        edge: usize,
        w: &mut f64,
        grad: f64,
    ) {
        let sign = if *w > 0.0 {
            1.0
        } else if *w < 0.0 {
            -1.0
        } else {
            0.0
        };
        let g = grad + hp.l2 * *w + self.l1[junction] * sign;
        let before = *w;
        let moments = match self.kind {
            OptimizerKind::Sgd => None,
            OptimizerKind::Adam { .. } => {
                Some((&mut self.m_w[junction][edge], &mut self.v_w[junction][edge]))
            }
        };
        Self::apply(self.kind, hp, w, g, moments);
        // with SGD a pure penalty step stops at zero instead of overshooting
        if self.kind == OptimizerKind::Sgd
            && grad == 0.0
            && before != 0.0
            && (*w > 0.0) != (before > 0.0)
        {
            *w = 0.0;
        }
    }

    #[inline]
    pub fn update_bias(
        &mut self,
        hp: &StepParams,
        junction: usize,
        neuron: usize,
        b: &mut f64,
        grad: f64,
    ) {
        let moments = match self.kind {
            OptimizerKind::Sgd => None,
            OptimizerKind::Adam { .. } => Some((
                &mut self.m_b[junction][neuron],
                &mut self.v_b[junction][neuron],
            )),
        };
        Self::apply(self.kind, hp, b, grad, moments);
    }

    /// Marks one step as complete.
    pub fn finish_step(&mut self) {
        self.steps += 1;
    }
}

/// Applies one optimizer step to every parameter.
pub fn update_step(model: &mut SparseModel, grads: &Gradients, opt: &mut Optimizer) -> Result<()> {
    if !grads.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite gradient at step {}",
            opt.steps + 1
        )));
    }
    let hp = opt.params(opt.steps + 1);
    for j in 0..model.num_junctions() {
        for (e, (w, &g)) in model.weights[j]
            .iter_mut()
            .zip(&grads.weights[j])
            .enumerate()
        {
            opt.update_weight(&hp, j, e, w, g);
        }
        for (r, (b, &g)) in model.biases[j].iter_mut().zip(&grads.biases[j]).enumerate() {
            opt.update_bias(&hp, j, r, b, g);
        }
    }
    opt.finish_step();
    if !model.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite parameter after step {}",
            opt.steps
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::JunctionPattern;

    fn model(w: Vec<f64>) -> SparseModel {
        let n = w.len();
        SparseModel::new(
            vec![n, 1],
            vec![JunctionPattern::fully_connected(n, 1)],
            vec![w],
            vec![vec![0.0]],
        )
        .unwrap()
    }

    fn sgd(lr: f64, l2: f64, l1: f64) -> TrainConfig {
        TrainConfig {
            learning_rate: lr,
            optimizer: OptimizerKind::Sgd,
            l2,
            l1: vec![l1],
            ..TrainConfig::default()
        }
    }

    #[test]
    fn unit_sgd_step_subtracts_gradient() {
        let mut m = model(vec![0.3, -1.7]);
        let cfg = sgd(1.0, 0.0, 0.0);
        let mut opt = Optimizer::new(&m, &cfg);
        let g = Gradients {
            weights: vec![vec![0.1, 0.25]],
            biases: vec![vec![-0.5]],
        };
        update_step(&mut m, &g, &mut opt).unwrap();
        assert_eq!(m.weights[0], vec![0.3 - 0.1, -1.7 - 0.25]);
        assert_eq!(m.biases[0], vec![0.5]);
    }

    #[test]
    fn l1_shrinks_without_crossing() {
        let mut m = model(vec![0.5, -0.5, 0.0, 0.01]);
        let cfg = sgd(0.1, 0.0, 0.2);
        let mut opt = Optimizer::new(&m, &cfg);
        let g = Gradients::zeros(&m);
        update_step(&mut m, &g, &mut opt).unwrap();
        assert!((m.weights[0][0] - 0.48).abs() < 1e-15);
        assert!((m.weights[0][1] + 0.48).abs() < 1e-15);
        assert_eq!(m.weights[0][2], 0.0);
        assert_eq!(m.weights[0][3], 0.0);
    }

    #[test]
    fn l2_gradient_is_lambda_w() {
        let mut m = model(vec![2.0]);
        let mut opt = Optimizer::new(&m, &sgd(0.5, 0.1, 0.0));
        let g = Gradients::zeros(&m);
        update_step(&mut m, &g, &mut opt).unwrap();
        assert!((m.weights[0][0] - (2.0 - 0.5 * 0.1 * 2.0)).abs() < 1e-15);
    }

    #[test]
    fn adam_zero_gradient_leaves_parameters() {
        let mut m = model(vec![0.3, -0.2]);
        let before = m.clone();
        let cfg = TrainConfig::default();
        let mut opt = Optimizer::new(&m, &cfg);
        let g = Gradients::zeros(&m);
        update_step(&mut m, &g, &mut opt).unwrap();
        assert_eq!(m, before);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut m = model(vec![0.0]);
        let cfg = TrainConfig::default();
        let mut opt = Optimizer::new(&m, &cfg);
        let g = Gradients {
            weights: vec![vec![3.0]],
            biases: vec![vec![-0.01]],
        };
        update_step(&mut m, &g, &mut opt).unwrap();
        assert!((m.weights[0][0] + 1e-3).abs() < 1e-9);
        assert!((m.biases[0][0] - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn adam_learning_rate_decays() {
        let m = model(vec![0.0]);
        let cfg = TrainConfig {
            optimizer: OptimizerKind::Adam {
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
                decay: 0.5,
            },
            ..TrainConfig::default()
        };
        let opt = Optimizer::new(&m, &cfg);
        assert_eq!(opt.params(1).lr, 1e-3);
        assert_eq!(opt.params(3).lr, 1e-3 / 2.0);
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut m = model(vec![0.0]);
        let mut opt = Optimizer::new(&m, &sgd(1.0, 0.0, 0.0));
        let g = Gradients {
            weights: vec![vec![f64::INFINITY]],
            biases: vec![vec![0.0]],
        };
        assert!(matches!(
            update_step(&mut m, &g, &mut opt),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(TrainConfig {
            batch_size: 0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: -1.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            l1: vec![-0.1],
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_ok());
    }
}
