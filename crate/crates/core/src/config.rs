use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::PrunePolicy;
use crate::regularizers::{DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Hyperparameters of the alternating optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Weight of the smoothness term.
    pub gamma1: f64,
    /// Weight of the alignment term.
    pub gamma2: f64,
    /// L1 weight on the feature selector (the soft-threshold is
    /// `lr_structure * lambda1`).
    pub lambda1: f64,
    /// Blend weight of the learned similarity.
    pub alpha: f64,
    /// Gaussian kernel width.
    pub tau: f64,
    pub lr_gcn: f64,
    pub lr_structure: f64,
    /// Outer iterations.
    pub outer_iters: usize,
    /// Structure updates per outer iteration.
    pub structure_iters: usize,
    /// GCN steps per structure update.
    pub gcn_iters: usize,
    pub hidden: usize,
    /// Projection rows; `None` means `d`.
    pub projection_dim: Option<usize>,
    pub prune: PrunePolicy,
    /// Include the classification loss in the structure gradient.
    pub include_gnn_in_structure_step: bool,
    pub seed: u64,
    pub power_tol: f64,
    pub power_max_iter: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma1: 1e-4,
            gamma2: 1e-3,
            lambda1: 0.01,
            alpha: 0.7,
            tau: 1.0,
            lr_gcn: 0.2,
            lr_structure: 0.01,
            outer_iters: 50,
            structure_iters: 1,
            gcn_iters: 4,
            hidden: 16,
            projection_dim: None,
            prune: PrunePolicy::None,
            include_gnn_in_structure_step: true,
            seed: 0,
            power_tol: DEFAULT_TOL,
            power_max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Combined weights `θ1 = γ1`, `θ2 = γ1 λ1`, `θ3 = γ2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl TrainConfig {
    /// Sets `γ1, λ1, γ2` from θ-form weights. `θ2 > 0` with `θ1 = 0` has
    /// no γ/λ equivalent and is rejected.
    pub fn apply_theta(&mut self, theta: Theta) -> Result<()> {
        let Theta { theta1, theta2, theta3 } = theta;
        if theta1 < 0.0 || theta2 < 0.0 || theta3 < 0.0 {
            return Err(Error::validation("theta weights must be nonnegative"));
        }
        self.gamma1 = theta1;
        self.gamma2 = theta3;
        self.lambda1 = if theta2 == 0.0 {
            0.0
        } else if theta1 > 0.0 {
            theta2 / theta1
        } else {
            return Err(Error::validation(
                "theta2 > 0 requires theta1 > 0 (theta2 = gamma1 * lambda1)",
            ));
        };
        Ok(())
    }

    pub fn theta(&self) -> Theta {
        Theta {
            theta1: self.gamma1,
            theta2: self.gamma1 * self.lambda1,
            theta3: self.gamma2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("gamma1", self.gamma1),
            ("gamma2", self.gamma2),
            ("lambda1", self.lambda1),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        let pos = [
            ("tau", self.tau),
            ("lr_gcn", self.lr_gcn),
            ("lr_structure", self.lr_structure),
            ("power_tol", self.power_tol),
        ];
        for (name, v) in pos {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::validation(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        let counts = [
            ("structure_iters", self.structure_iters),
            ("gcn_iters", self.gcn_iters),
            ("hidden", self.hidden),
            ("power_max_iter", self.power_max_iter),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::validation(format!("{name} must be positive")));
            }
        }
        if self.projection_dim == Some(0) {
            return Err(Error::validation("projection_dim must be positive"));
        }
        match self.prune {
            PrunePolicy::Knn { k: 0 } => Err(Error::validation("knn prune needs k >= 1")),
            PrunePolicy::Epsilon { epsilon } if !(epsilon >= 0.0) => {
                Err(Error::validation("epsilon prune needs epsilon >= 0"))
            }
            _ => Ok(()),
        }
    }
}
