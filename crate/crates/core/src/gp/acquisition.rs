use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::GpModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    /// Uniform random starts in the unit cube.
    pub n_candidates: usize,
    /// Best starts refined by pattern search.
    pub n_refine: usize,
    /// Pattern search stops once its step falls below this.
    pub min_step: f64,
    /// Added to the incumbent in expected improvement.
    pub ei_offset: f64,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig { n_candidates: 1024, n_refine: 8, min_step: 1e-4, ei_offset: 0.0 }
    }
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * core::f64::consts::PI).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// E[max(Y - f_best, 0)] for Y ~ N(μ, σ²).
pub fn expected_improvement(mu: f64, sigma: f64, f_best: f64) -> Result<f64> {
    if sigma.is_nan() || sigma < 0.0 {
        return Err(Error::invalid(alloc::format!("predictive std must be >= 0, got {sigma}")));
    }
    let diff = mu - f_best;
    if sigma == 0.0 {
        return Ok(diff.max(0.0));
    }
    let z = diff / sigma;
    Ok((diff * std_normal_cdf(z) + sigma * std_normal_pdf(z)).max(0.0))
}

/// Multi-start maximization of `f` over the unit cube `[0, 1]^dim`.
///
/// Scores `n_candidates` uniform points, refines the `n_refine` best by a
/// compass search that halves its step down to `min_step`, then polishes each
/// coordinate with a golden-section search. Ties keep the lower index.
/// Coordinates listed in `frozen` stay at 0.
pub fn maximize_unit<R: Rng + ?Sized>(
    dim: usize,
    frozen: &[bool],
    f: &dyn Fn(&[f64]) -> f64,
    cfg: &AcquisitionConfig,
    rng: &mut R,
) -> Vec<f64> {
    let n = cfg.n_candidates.max(1);
    let candidates: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|d| if frozen[d] { 0.0 } else { rng.random::<f64>() }).collect())
        .collect();
    let scores: Vec<f64> = candidates.iter().map(|c| sanitize(f(c))).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut best = (candidates[order[0]].clone(), scores[order[0]]);
    for &i in order.iter().take(cfg.n_refine.max(1)) {
        let (x, v) = refine(candidates[i].clone(), scores[i], frozen, f, cfg.min_step);
        if v > best.1 {
            best = (x, v);
        }
    }
    best.0
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

fn refine(mut x: Vec<f64>, mut fx: f64, frozen: &[bool], f: &dyn Fn(&[f64]) -> f64, min_step: f64) -> (Vec<f64>, f64) {
    let mut step = 0.25;
    while step >= min_step {
        let mut improved = false;
        for d in 0..x.len() {
            if frozen[d] {
                continue;
            }
            for dir in [1.0, -1.0] {
                let old = x[d];
                x[d] = (old + dir * step).clamp(0.0, 1.0);
                let v = sanitize(f(&x));
                if v > fx {
                    fx = v;
                    improved = true;
                    break;
                }
                x[d] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    // golden-section polish on the final pattern bracket
    let radius = 2.0 * step.max(min_step);
    for d in 0..x.len() {
        if frozen[d] {
            continue;
        }
        let lo = (x[d] - radius).max(0.0);
        let hi = (x[d] + radius).min(1.0);
        let mut trial = x.clone();
        let mut g = |v: f64| {
            trial[d] = v;
            sanitize(f(&trial))
        };
        let (v, fv) = super::golden_max(&mut g, lo, hi, x[d], fx, 1e-9);
        x[d] = v;
        fx = fv;
    }
    (x, fx)
}

fn frozen_dims(model: &GpModel) -> Vec<bool> {
    model.search_box().dims.iter().map(|d| d.max <= d.min).collect()
}

/// φ maximizing expected improvement over the best observed return.
pub fn maximize_acquisition<R: Rng + ?Sized>(model: &GpModel, cfg: &AcquisitionConfig, rng: &mut R) -> Vec<f64> {
    let f_best = model.best_standardized() + cfg.ei_offset;
    let ei = |u: &[f64]| {
        let (m, v) = model.posterior_unit(u);
        expected_improvement(m, v.sqrt(), f_best).unwrap_or(0.0)
    };
    let dim = model.search_box().dim();
    let u = maximize_unit(dim, &frozen_dims(model), &ei, cfg, rng);
    model.search_box().denormalize(&u)
}

/// φ maximizing the posterior mean.
pub fn map_phi<R: Rng + ?Sized>(model: &GpModel, cfg: &AcquisitionConfig, rng: &mut R) -> Vec<f64> {
    let mean = |u: &[f64]| model.posterior_unit(u).0;
    let dim = model.search_box().dim();
    let u = maximize_unit(dim, &frozen_dims(model), &mean, cfg, rng);
    model.search_box().denormalize(&u)
}
