//! Domain parameters, their sampling distributions and the search box.
//!
//! A [`DomainSpace`] ties together three tables:
//!
//! - per-parameter [`DomainParamSpec`]s (nominal value and plausibility clamp),
//! - a template of [`DistrEntry`]s giving each randomized parameter its family
//!   and default mean/variance,
//! - the [`SearchBox`] Φ, whose coordinates each select the mean or the
//!   variance of one template entry.
//!
//! A point φ of the box is a plain `&[f64]` aligned with the box dimensions.
//! Coordinates of the template the box does not mention keep their defaults,
//! and parameters without a template entry stay at their nominal value.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One concrete simulator instance: parameter id -> value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DomainParams {
    values: BTreeMap<String, f64>,
}

impl DomainParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, id: &str, value: f64) {
        self.values.insert(id.to_string(), value);
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.values.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<f64> {
        self.get(id).ok_or_else(|| Error::UnknownParameter(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Multiplies the listed parameters by the given factors.
    pub fn scaled(&self, factors: &[(&str, f64)]) -> Result<Self> {
        let mut out = self.clone();
        for (id, f) in factors {
            let v = self.require(id)?;
            out.set(id, v * f);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Normal,
    Uniform,
}

/// Nominal value and hard plausibility interval of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainParamSpec {
    pub id: String,
    pub nominal: f64,
    pub lower: f64,
    pub upper: f64,
}

impl DomainParamSpec {
    /// Clamp interval `[0.2 nominal, 5 nominal]` for positive nominals,
    /// `[0, ∞)` otherwise.
    pub fn with_default_clamp(id: &str, nominal: f64) -> Self {
        let (lower, upper) = if nominal > 0.0 {
            (0.2 * nominal, 5.0 * nominal)
        } else {
            (0.0, f64::INFINITY)
        };
        DomainParamSpec { id: id.to_string(), nominal, lower, upper }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.nominal.is_finite() {
            return Err(Error::invalid(format!("{}: nominal must be finite", self.id)));
        }
        if !(self.lower <= self.nominal && self.nominal <= self.upper) {
            return Err(Error::invalid(format!(
                "{}: clamp [{}, {}] does not contain nominal {}",
                self.id, self.lower, self.upper, self.nominal
            )));
        }
        Ok(())
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }
}

/// Sampling distribution of one parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistrEntry {
    pub param: String,
    pub family: Family,
    pub mean: f64,
    pub variance: f64,
}

impl DistrEntry {
    /// Draws one value before clamping. The uniform family is centered on
    /// the mean with half-width `√(3 variance)`, which makes its variance
    /// exactly `variance`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.variance == 0.0 {
            return self.mean;
        }
        match self.family {
            Family::Normal => {
                let z: f64 = rng.sample(StandardNormal);
                self.mean + self.variance.sqrt() * z
            }
            Family::Uniform => {
                let half = (3.0 * self.variance).sqrt();
                let u: f64 = rng.random();
                self.mean - half + 2.0 * half * u
            }
        }
    }

    /// Support of the draw for the uniform family, `None` for normal.
    pub fn uniform_support(&self) -> Option<(f64, f64)> {
        match self.family {
            Family::Uniform => {
                let half = (3.0 * self.variance).sqrt();
                Some((self.mean - half, self.mean + half))
            }
            Family::Normal => None,
        }
    }
}

/// The materialized distribution ν(ξ; φ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainDistrParams {
    pub entries: Vec<DistrEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Moment {
    Mean,
    Variance,
}

/// One coordinate of Φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDim {
    pub param: String,
    pub moment: Moment,
    pub min: f64,
    pub max: f64,
}

impl BoxDim {
    pub fn label(&self) -> String {
        match self.moment {
            Moment::Mean => format!("E[{}]", self.param),
            Moment::Variance => format!("V[{}]", self.param),
        }
    }
}

/// The box Φ = [φ_min, φ_max].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SearchBox {
    pub dims: Vec<BoxDim>,
}

impl SearchBox {
    pub fn new(dims: Vec<BoxDim>) -> Self {
        SearchBox { dims }
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.dims.iter().map(|d| d.min).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.dims.iter().map(|d| d.max).collect()
    }

    pub fn validate(&self) -> Result<()> {
        for d in &self.dims {
            if !(d.min.is_finite() && d.max.is_finite() && d.min <= d.max) {
                return Err(Error::invalid(format!("{}: empty range [{}, {}]", d.label(), d.min, d.max)));
            }
            if d.moment == Moment::Variance && d.min < 0.0 {
                return Err(Error::invalid(format!("{}: variance range must be >= 0", d.label())));
            }
        }
        Ok(())
    }

    /// Errors with `OutOfBox` on the first coordinate outside its range.
    pub fn check(&self, phi: &[f64]) -> Result<()> {
        if phi.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: phi.len() });
        }
        for (d, &v) in self.dims.iter().zip(phi) {
            if !(d.min <= v && v <= d.max) {
                return Err(Error::OutOfBox { name: d.label(), value: v, min: d.min, max: d.max });
            }
        }
        Ok(())
    }

    pub fn contains(&self, phi: &[f64]) -> bool {
        self.check(phi).is_ok()
    }

    /// Uniform draw over the box.
    pub fn random_phi<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.dims
            .iter()
            .map(|d| {
                let u: f64 = rng.random();
                (d.min + (d.max - d.min) * u).min(d.max)
            })
            .collect()
    }

    /// Affine map into the unit cube. Degenerate coordinates map to 0.
    pub fn normalize(&self, phi: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(phi)
            .map(|(d, &v)| {
                let w = d.max - d.min;
                if w > 0.0 {
                    (v - d.min) / w
                } else {
                    0.0
                }
            })
            .collect()
    }

    /// Inverse of [`SearchBox::normalize`], clamped into the box.
    pub fn denormalize(&self, unit: &[f64]) -> Vec<f64> {
        self.dims
            .iter()
            .zip(unit)
            .map(|(d, &u)| (d.min + (d.max - d.min) * u).clamp(d.min, d.max))
            .collect()
    }
}

/// Specs, distribution template and search box of one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpace {
    pub specs: Vec<DomainParamSpec>,
    pub template: Vec<DistrEntry>,
    pub search_box: SearchBox,
}

impl DomainSpace {
    pub fn spec(&self, id: &str) -> Option<&DomainParamSpec> {
        self.specs.iter().find(|s| s.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.specs.iter().enumerate() {
            s.validate()?;
            if self.specs[..i].iter().any(|o| o.id == s.id) {
                return Err(Error::invalid(format!("duplicate parameter `{}`", s.id)));
            }
        }
        for (i, e) in self.template.iter().enumerate() {
            if self.spec(&e.param).is_none() {
                return Err(Error::UnknownParameter(e.param.clone()));
            }
            if self.template[..i].iter().any(|o| o.param == e.param) {
                return Err(Error::invalid(format!("duplicate distribution for `{}`", e.param)));
            }
            if !(e.variance.is_finite() && e.variance >= 0.0 && e.mean.is_finite()) {
                return Err(Error::invalid(format!("{}: bad mean/variance", e.param)));
            }
        }
        self.search_box.validate()?;
        for (i, d) in self.search_box.dims.iter().enumerate() {
            if !self.template.iter().any(|e| e.param == d.param) {
                return Err(Error::invalid(format!(
                    "search box coordinate {} refers to `{}` which has no distribution",
                    i, d.param
                )));
            }
            if self.search_box.dims[..i].iter().any(|o| o.param == d.param && o.moment == d.moment) {
                return Err(Error::invalid(format!("duplicate search box coordinate {}", d.label())));
            }
        }
        Ok(())
    }

    /// All parameters at their nominal values.
    pub fn nominal(&self) -> DomainParams {
        let mut d = DomainParams::new();
        for s in &self.specs {
            d.set(&s.id, s.nominal);
        }
        d
    }

    /// The distribution selected by φ. Errors with `OutOfBox` when φ ∉ Φ.
    pub fn distribution(&self, phi: &[f64]) -> Result<DomainDistrParams> {
        self.search_box.check(phi)?;
        let mut entries = self.template.clone();
        for (d, &v) in self.search_box.dims.iter().zip(phi) {
            let e = entries
                .iter_mut()
                .find(|e| e.param == d.param)
                .ok_or_else(|| Error::UnknownParameter(d.param.clone()))?;
            match d.moment {
                Moment::Mean => e.mean = v,
                Moment::Variance => e.variance = v,
            }
        }
        Ok(DomainDistrParams { entries })
    }

    /// Zero-variance distribution centered on the nominal values.
    pub fn nominal_distribution(&self) -> DomainDistrParams {
        let entries = self
            .template
            .iter()
            .map(|e| DistrEntry {
                mean: self.spec(&e.param).map_or(e.mean, |s| s.nominal),
                variance: 0.0,
                ..e.clone()
            })
            .collect();
        DomainDistrParams { entries }
    }

    /// Draws ξ ~ ν(ξ; distr): each listed parameter independently from its
    /// family, then clamped to its plausibility interval.
    pub fn sample<R: Rng + ?Sized>(&self, distr: &DomainDistrParams, rng: &mut R) -> Result<DomainParams> {
        let mut d = self.nominal();
        for e in &distr.entries {
            let spec = self.spec(&e.param).ok_or_else(|| Error::UnknownParameter(e.param.clone()))?;
            d.set(&e.param, spec.clamp(e.draw(rng)));
        }
        Ok(d)
    }

    /// `sample(distribution(φ))`.
    pub fn sample_domain<R: Rng + ?Sized>(&self, phi: &[f64], rng: &mut R) -> Result<DomainParams> {
        let distr = self.distribution(phi)?;
        self.sample(&distr, rng)
    }
}
