use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Matérn 5/2 hyperparameters on normalized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub signal_var: f64,
    pub lengthscales: Vec<f64>,
    pub noise_var: f64,
}

impl GpHyperparams {
    pub fn is_valid(&self) -> bool {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        pos(self.signal_var) && pos(self.noise_var) && self.lengthscales.iter().all(|&l| pos(l))
    }
}

/// `σ_f² (1 + √5 d + 5d²/3) exp(-√5 d)` with `d` the lengthscale-weighted
/// Euclidean distance.
pub fn matern52(x: &[f64], y: &[f64], hyp: &GpHyperparams) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let d2: f64 = x
        .iter()
        .zip(y)
        .zip(&hyp.lengthscales)
        .map(|((a, b), l)| {
            let z = (a - b) / l;
            z * z
        })
        .sum();
    let d = d2.sqrt();
    let s5d = 5.0f64.sqrt() * d;
    hyp.signal_var * (1.0 + s5d + 5.0 * d2 / 3.0) * (-s5d).exp()
}
