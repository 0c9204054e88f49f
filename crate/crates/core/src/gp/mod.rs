//! Gaussian-process regression over the search box and the acquisition
//! search built on it.
//!
//! Inputs are mapped into the unit cube of the [`SearchBox`]; outputs are
//! standardized with the dataset mean and std. Everything the model returns
//! through [`GpModel::posterior`] is back on the original scales.

mod acquisition;
mod kernel;
mod linalg;

pub use acquisition::{expected_improvement, map_phi, maximize_acquisition, maximize_unit, AcquisitionConfig};
pub use kernel::{matern52, GpHyperparams};

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::domains::SearchBox;
use crate::error::{Error, Result};

/// Smallest output std used for standardization.
pub const STD_GUARD: f64 = 1e-8;
pub const JITTER_START: f64 = 1e-10;
pub const JITTER_MAX: f64 = 1e-4;

/// Observed pairs (φ, Ĵ).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BoDataset {
    pub phis: Vec<Vec<f64>>,
    pub returns: Vec<f64>,
}

impl BoDataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// Appends a row after checking φ ∈ Φ and a finite return.
    pub fn push(&mut self, search_box: &SearchBox, phi: Vec<f64>, ret: f64) -> Result<()> {
        search_box.check(&phi)?;
        if !ret.is_finite() {
            return Err(Error::invalid("dataset returns must be finite"));
        }
        self.phis.push(phi);
        self.returns.push(ret);
        Ok(())
    }

    /// Index and value of the highest return; ties go to the earliest row.
    pub fn best(&self) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &r) in self.returns.iter().enumerate() {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((i, r));
            }
        }
        best
    }
}

/// Search ranges (inclusive, positive) and effort for the
/// marginal-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpFitConfig {
    pub signal_var: (f64, f64),
    pub lengthscale: (f64, f64),
    pub noise_var: (f64, f64),
    /// Log-spaced grid points per hyperparameter.
    pub grid_points: usize,
    /// Coordinate refinement sweeps after the grid.
    pub refine_sweeps: usize,
}

impl Default for GpFitConfig {
    fn default() -> Self {
        GpFitConfig {
            signal_var: (0.05, 20.0),
            lengthscale: (0.05, 5.0),
            noise_var: (1e-6, 1.0),
            grid_points: 7,
            refine_sweeps: 3,
        }
    }
}

impl GpFitConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [("signal_var", self.signal_var), ("lengthscale", self.lengthscale), ("noise_var", self.noise_var)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::invalid(alloc::format!("{name}: bounds must satisfy 0 < lo <= hi")));
            }
        }
        if self.grid_points == 0 {
            return Err(Error::invalid("grid_points must be >= 1"));
        }
        Ok(())
    }
}

/// A fitted, immutable GP posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    search_box: SearchBox,
    hyp: GpHyperparams,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    y_mean: f64,
    y_std: f64,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    log_marginal_likelihood: f64,
}

struct Factor {
    chol: Vec<f64>,
    alpha: Vec<f64>,
    jitter: f64,
    lml: f64,
}

fn factorize(x: &[Vec<f64>], y: &[f64], hyp: &GpHyperparams) -> Result<Factor> {
    let n = x.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = matern52(&x[i], &x[j], hyp);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
        k[i * n + i] += hyp.noise_var;
    }
    let mut jitter = JITTER_START;
    loop {
        let mut kj = k.clone();
        for i in 0..n {
            kj[i * n + i] += jitter;
        }
        if let Some(chol) = linalg::cholesky(&kj, n) {
            let mut alpha = y.to_vec();
            linalg::solve_lower(&chol, n, &mut alpha);
            let fit: f64 = alpha.iter().map(|a| a * a).sum();
            let log_det: f64 = (0..n).map(|i| chol[i * n + i].ln()).sum();
            let lml = -0.5 * fit - log_det - 0.5 * n as f64 * (2.0 * core::f64::consts::PI).ln();
            linalg::solve_upper_t(&chol, n, &mut alpha);
            return Ok(Factor { chol, alpha, jitter, lml });
        }
        if jitter >= JITTER_MAX {
            return Err(Error::IllConditioned { jitter });
        }
        jitter *= 10.0;
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 || lo == hi {
        return vec![(lo * hi).sqrt()];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Maximizes `f` over `[lo, hi]` by golden-section search; returns the best
/// of the final bracket midpoint and `start` (with value `f_start`).
fn golden_max(f: &mut impl FnMut(f64) -> f64, lo: f64, hi: f64, start: f64, f_start: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let (x, fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    if fx > f_start {
        (x, fx)
    } else {
        (start, f_start)
    }
}

/// Unit-cube inputs, standardized outputs, output mean and std.
type Prepared = (Vec<Vec<f64>>, Vec<f64>, f64, f64);

impl GpModel {
    /// Fits hyperparameters by maximizing the log marginal likelihood: a
    /// log-space grid with one shared lengthscale, then golden-section
    /// coordinate refinement of every hyperparameter in log space.
    pub fn fit(data: &BoDataset, search_box: &SearchBox, cfg: &GpFitConfig) -> Result<Self> {
        if data.len() < 2 {
            return Err(Error::InsufficientData { need: 2, have: data.len() });
        }
        cfg.validate()?;
        let dim = search_box.dim();
        let (x, y, _, _) = Self::prepare(data, search_box)?;
        let eval = |h: &GpHyperparams| factorize(&x, &y, h).map(|f| f.lml).unwrap_or(f64::NEG_INFINITY);

        let mut best: Option<(GpHyperparams, f64)> = None;
        for &sf in &log_grid(cfg.signal_var.0, cfg.signal_var.1, cfg.grid_points) {
            for &ell in &log_grid(cfg.lengthscale.0, cfg.lengthscale.1, cfg.grid_points) {
                for &sn in &log_grid(cfg.noise_var.0, cfg.noise_var.1, cfg.grid_points) {
                    let h = GpHyperparams { signal_var: sf, lengthscales: vec![ell; dim], noise_var: sn };
                    let v = eval(&h);
                    if best.as_ref().is_none_or(|(_, b)| v > *b) {
                        best = Some((h, v));
                    }
                }
            }
        }
        let (mut hyp, mut lml) = best.expect("grid is non-empty");
        if !lml.is_finite() {
            return Err(Error::IllConditioned { jitter: JITTER_MAX });
        }

        // coordinates: 0 = signal, 1..=dim = lengthscales, dim + 1 = noise
        let bounds = |c: usize| match c {
            0 => cfg.signal_var,
            c if c == dim + 1 => cfg.noise_var,
            _ => cfg.lengthscale,
        };
        for _ in 0..cfg.refine_sweeps {
            for c in 0..dim + 2 {
                let (lo, hi) = bounds(c);
                if lo == hi {
                    continue;
                }
                let get = |h: &GpHyperparams| match c {
                    0 => h.signal_var,
                    c if c == dim + 1 => h.noise_var,
                    c => h.lengthscales[c - 1],
                };
                let set = |h: &mut GpHyperparams, v: f64| match c {
                    0 => h.signal_var = v,
                    c if c == dim + 1 => h.noise_var = v,
                    c => h.lengthscales[c - 1] = v,
                };
                let mut trial = hyp.clone();
                let mut f = |log_v: f64| {
                    set(&mut trial, log_v.exp());
                    eval(&trial)
                };
                let (log_v, v) = golden_max(&mut f, lo.ln(), hi.ln(), get(&hyp).ln(), lml, 1e-3);
                if v > lml {
                    set(&mut hyp, log_v.exp().clamp(lo, hi));
                    lml = v;
                }
            }
        }
        Self::fit_with(data, search_box, hyp)
    }

    /// Conditions on `data` with fixed hyperparameters. Needs one row.
    pub fn fit_with(data: &BoDataset, search_box: &SearchBox, hyp: GpHyperparams) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InsufficientData { need: 1, have: 0 });
        }
        if !hyp.is_valid() {
            return Err(Error::invalid("GP hyperparameters must be finite and > 0"));
        }
        if hyp.lengthscales.len() != search_box.dim() {
            return Err(Error::DimensionMismatch { expected: search_box.dim(), got: hyp.lengthscales.len() });
        }
        let (x, y, y_mean, y_std) = Self::prepare(data, search_box)?;
        let f = factorize(&x, &y, &hyp)?;
        Ok(GpModel {
            search_box: search_box.clone(),
            hyp,
            x,
            y,
            y_mean,
            y_std,
            chol: f.chol,
            alpha: f.alpha,
            jitter: f.jitter,
            log_marginal_likelihood: f.lml,
        })
    }

    /// Normalized inputs and standardized outputs. A single row cannot be
    /// centered, so it keeps a zero offset and unit scale.
    fn prepare(data: &BoDataset, search_box: &SearchBox) -> Result<Prepared> {
        if data.phis.len() != data.returns.len() {
            return Err(Error::DimensionMismatch { expected: data.phis.len(), got: data.returns.len() });
        }
        let mut x = Vec::with_capacity(data.len());
        for phi in &data.phis {
            search_box.check(phi)?;
            x.push(search_box.normalize(phi));
        }
        if data.returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::invalid("dataset returns must be finite"));
        }
        let n = data.len() as f64;
        let (mean, std) = if data.len() < 2 {
            (0.0, 1.0)
        } else {
            let mean = data.returns.iter().sum::<f64>() / n;
            let var = data.returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
            (mean, var.sqrt().max(STD_GUARD))
        };
        let y = data.returns.iter().map(|r| (r - mean) / std).collect();
        Ok((x, y, mean, std))
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyp
    }

    pub fn search_box(&self) -> &SearchBox {
        &self.search_box
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Output offset and scale used for standardization.
    pub fn standardization(&self) -> (f64, f64) {
        (self.y_mean, self.y_std)
    }

    /// Highest standardized training target.
    pub fn best_standardized(&self) -> f64 {
        self.y.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Latent mean and variance at a unit-cube point, standardized scale.
    pub fn posterior_unit(&self, u: &[f64]) -> (f64, f64) {
        let n = self.y.len();
        let mut k: Vec<f64> = self.x.iter().map(|xi| matern52(xi, u, &self.hyp)).collect();
        let mean: f64 = k.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        linalg::solve_lower(&self.chol, n, &mut k);
        let reduction: f64 = k.iter().map(|v| v * v).sum();
        (mean, (self.hyp.signal_var - reduction).max(0.0))
    }

    /// Latent mean and variance at φ on the original return scale.
    pub fn posterior(&self, phi: &[f64]) -> Result<(f64, f64)> {
        if phi.len() != self.search_box.dim() {
            return Err(Error::DimensionMismatch { expected: self.search_box.dim(), got: phi.len() });
        }
        let (m, v) = self.posterior_unit(&self.search_box.normalize(phi));
        Ok((self.y_mean + self.y_std * m, self.y_std * self.y_std * v))
    }
}
