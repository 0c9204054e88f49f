//! GP posterior slices over two search-space coordinates.

use std::io::Write;

use bayrn_core::bayrn::RunEvent;
use bayrn_core::gp::{BoDataset, GpModel};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub phi1: f64,
    pub phi2: f64,
    pub mean: f64,
    pub std: f64,
}

/// Posterior mean and std on a `resolution × resolution` grid over search
/// coordinates `dims` (0-based), row-major in the first coordinate. The
/// remaining coordinates are held at the run's φ*, or at the best observed
/// φ if the run has no final record yet.
///
/// A finished run is re-fitted with its logged final hyperparameters, so
/// the surface is the one φ* was read from.
pub fn gp_grid(cfg: &ExperimentConfig, events: &[RunEvent], dims: (usize, usize), resolution: usize) -> Result<Vec<GridRow>> {
    let sbox = &cfg.domain.search_box;
    let (i, j) = dims;
    if i == j || i >= sbox.dim() || j >= sbox.dim() {
        return Err(LabError::config("dims", format!("need two distinct indices below {}, got {i},{j}", sbox.dim())));
    }
    if resolution < 2 {
        return Err(LabError::config("resolution", "must be at least 2"));
    }

    let mut data = BoDataset::new();
    let mut hyp = None;
    let mut anchor = None;
    for e in events {
        match e {
            RunEvent::InitCandidate { candidate, .. } => data.push(sbox, candidate.phi.clone(), candidate.j_hat)?,
            RunEvent::BoIteration { candidate, .. } => data.push(sbox, candidate.phi.clone(), candidate.j_hat)?,
            RunEvent::Final { candidate, hyperparams, .. } => {
                hyp = Some(hyperparams.clone());
                anchor = Some(candidate.phi.clone());
            }
        }
    }
    let model = match hyp {
        Some(h) => GpModel::fit_with(&data, sbox, h)?,
        None => GpModel::fit(&data, sbox, &cfg.bayrn.gp)?,
    };
    let mut phi = match anchor {
        Some(a) => a,
        None => {
            let (best, _) = data.best().ok_or(bayrn_core::Error::InsufficientData { need: 1, have: 0 })?;
            data.phis[best].clone()
        }
    };

    let axis = |d: usize, k: usize| {
        let b = &sbox.dims[d];
        b.min + (b.max - b.min) * k as f64 / (resolution - 1) as f64
    };
    let mut rows = Vec::with_capacity(resolution * resolution);
    for a in 0..resolution {
        for b in 0..resolution {
            phi[i] = axis(i, a);
            phi[j] = axis(j, b);
            let (mean, var) = model.posterior(&phi)?;
            rows.push(GridRow { phi1: phi[i], phi2: phi[j], mean, std: var.sqrt() });
        }
    }
    Ok(rows)
}

/// Writes rows under the header `phi1,phi2,mean,std`.
pub fn write_csv<W: Write>(rows: &[GridRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
