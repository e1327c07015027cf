//! Tabulated classical probability densities of the coupling parameter on a
//! real grid.
//!
//! The canonical representation is a density sampled at strictly increasing
//! nodes, integrated with the trapezoid rule (distribution-agnostic and
//! second-order accurate). Constructors auto-renormalize and report the
//! factor, since measured spectra arrive unnormalized. Densities are the
//! canonical form; sampling lives in [`crate::postselect`].
//!
//! Only continuous densities are represented. A discrete parameter can be
//! approximated through [`GridDistribution::from_table`] with narrow spikes,
//! but true point-mass semantics are left as an extension.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Normalization tolerance: ∫f must be within this of 1 after construction.
pub const NORM_TOL: f64 = 1e-9;

/// Round-off guard: quadrature variances in (-VAR_CLAMP, 0) are clamped to 0.
pub const VAR_CLAMP: f64 = 1e-14;

/// Probability density tabulated on a strictly increasing grid with trapezoid
/// quadrature weights. Immutable after construction.
///
/// Moments are computed by quadrature when the distribution is built;
/// [`GridDistribution::affine`] propagates them through its exact moment
/// laws instead of recomputing on the mapped nodes, where the node rounding
/// of a large offset would contaminate the variance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDistribution {
    /// Quadrature rule identifier; only the trapezoid rule is implemented.
    quadrature: &'static str,
    nodes: Vec<f64>,
    densities: Vec<f64>,
    #[serde(skip)]
    weights: Vec<f64>,
    /// Factor the raw input integrated to before renormalization.
    renormalization: f64,
    #[serde(skip)]
    moments: Moments,
}

const TRAPEZOID: &str = "trapezoid";

/// Mean, variance and standard deviation under the stored quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub std: f64,
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![0.0; n];
    w[0] = (nodes[1] - nodes[0]) / 2.0;
    w[n - 1] = (nodes[n - 1] - nodes[n - 2]) / 2.0;
    for i in 1..n - 1 {
        w[i] = (nodes[i + 1] - nodes[i - 1]) / 2.0;
    }
    w
}

impl GridDistribution {
    /// Build from raw nodes and nonnegative density values, renormalizing so
    /// that the trapezoid integral is 1. The raw integral is kept as the
    /// renormalization factor.
    pub fn from_table(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} nodes but {} density values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 3 {
            return Err(Error::InvalidDistribution(format!(
                "need at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite node".into()));
        }
        if nodes.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidDistribution(
                "nodes must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution("non-finite density".into()));
        }
        if let Some(v) = values.iter().find(|&&v| v < 0.0) {
            return Err(Error::InvalidDistribution(format!("negative density {v}")));
        }
        let weights = trapezoid_weights(&nodes);
        let raw_integral: f64 = weights.iter().zip(&values).map(|(w, v)| w * v).sum();
        if raw_integral <= 0.0 {
            return Err(Error::InvalidDistribution(
                "density integrates to zero".into(),
            ));
        }
        let densities: Vec<f64> = values.iter().map(|v| v / raw_integral).collect();
        let moments = quad_moments(&nodes, &densities, &weights);
        Ok(Self {
            quadrature: TRAPEZOID,
            nodes,
            densities,
            weights,
            renormalization: raw_integral,
            moments,
        })
    }

    /// Normalized Gaussian sampled on `n` uniform nodes over mean ± span·sigma.
    ///
    /// `n` must be odd so a node lands on the mean, and ≥ 5: with span ≥ 6
    /// a 3-node grid carries essentially all its mass on the center node and
    /// cannot represent the density. `span ≥ 6` keeps the truncated tail
    /// mass negligible.
    pub fn gaussian(mean: f64, sigma: f64, n: usize, span: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
        }
        if n < 5 || n.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "n must be odd and ≥ 5, got {n} (a 3-node grid is degenerate)"
            )));
        }
        if !(span >= 6.0) {
            return Err(Error::InvalidParameter(format!("span must be ≥ 6 sigma, got {span}")));
        }
        let lo = mean - span * sigma;
        let hi = mean + span * sigma;
        let nodes = linspace(lo, hi, n);
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let values = nodes
            .iter()
            .map(|&x| {
                let z = (x - mean) / sigma;
                norm * (-0.5 * z * z).exp()
            })
            .collect();
        Self::from_table(nodes, values)
    }

    /// Exponential density Γe^{-Γt} on [0, span/Γ]. `span ≥ 20` bounds the
    /// truncated tail mass below ~2e-9.
    pub fn exponential(rate: f64, n: usize, span: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::InvalidParameter(format!("rate must be > 0, got {rate}")));
        }
        if n < 3 {
            return Err(Error::InvalidParameter(format!("n must be ≥ 3, got {n}")));
        }
        if !(span >= 20.0) {
            return Err(Error::InvalidParameter(format!(
                "span must be ≥ 20 mean lifetimes, got {span}"
            )));
        }
        let nodes = linspace(0.0, span / rate, n);
        let values = nodes.iter().map(|&t| rate * (-rate * t).exp()).collect();
        Self::from_table(nodes, values)
    }

    /// Constant density 1/(b−a) on [a, b].
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidParameter(format!(
                "uniform support requires a < b, got [{a}, {b}]"
            )));
        }
        if n < 3 {
            return Err(Error::InvalidParameter(format!("n must be ≥ 3, got {n}")));
        }
        let nodes = linspace(a, b, n);
        let values = vec![1.0 / (b - a); n];
        Self::from_table(nodes, values)
    }

    /// Distribution of y = a·x + b. Nodes are mapped, densities divided by
    /// |a|, and the node order reversed when a < 0 to keep the grid
    /// increasing. The quadrature integral is preserved exactly and the
    /// moments follow the exact laws mean' = a·mean + b, var' = a²·var.
    pub fn affine(&self, a: f64, b: f64) -> Result<Self> {
        if a == 0.0 {
            return Err(Error::InvalidParameter(
                "affine slope a = 0 would collapse the distribution to a point mass".into(),
            ));
        }
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::NonFinite("affine coefficients"));
        }
        let mut nodes: Vec<f64> = self.nodes.iter().map(|&x| a * x + b).collect();
        let mut densities: Vec<f64> = self.densities.iter().map(|&f| f / a.abs()).collect();
        if a < 0.0 {
            nodes.reverse();
            densities.reverse();
        }
        let weights = trapezoid_weights(&nodes);
        let variance = a * a * self.moments.variance;
        Ok(Self {
            quadrature: TRAPEZOID,
            nodes,
            densities,
            weights,
            renormalization: 1.0,
            moments: Moments {
                mean: a * self.moments.mean + b,
                variance,
                std: variance.sqrt(),
            },
        })
    }

    /// Quadrature mean and variance (cached at construction; affine maps
    /// propagate them exactly).
    pub fn moments(&self) -> Moments {
        self.moments
    }

    /// Third standardized moment (skewness); 0 for zero-width distributions.
    pub fn skewness(&self) -> f64 {
        let m = self.moments();
        if m.std == 0.0 {
            return 0.0;
        }
        self.quad(|x, f| ((x - m.mean) / m.std).powi(3) * f)
    }

    /// Trapezoid integral Σᵢ wᵢ·g(xᵢ, fᵢ).
    pub fn quad<F: Fn(f64, f64) -> f64>(&self, g: F) -> f64 {
        self.weights
            .iter()
            .zip(self.nodes.iter().zip(&self.densities))
            .map(|(w, (&x, &f))| w * g(x, f))
            .sum()
    }

    /// Total quadrature mass Σ wᵢfᵢ (1 up to round-off).
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().zip(&self.densities).map(|(w, f)| w * f).sum()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Factor by which the raw input was divided during construction.
    pub fn renormalization(&self) -> f64 {
        self.renormalization
    }

    /// Quadrature rule identifier ("trapezoid").
    pub fn quadrature(&self) -> &'static str {
        self.quadrature
    }

    /// Emit as two-column CSV `node,density` with a header line. Values are
    /// printed in shortest round-trip form, so re-ingesting reproduces the
    /// distribution bit-exactly.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["node", "density"])?;
        for (x, f) in self.nodes.iter().zip(&self.densities) {
            w.write_record([format!("{x}"), format!("{f}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Ingest the CSV format of [`GridDistribution::write_csv`]. The
    /// `node,density` header line is required; values renormalize as in
    /// [`GridDistribution::from_table`].
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        {
            let headers = r.headers()?;
            let ok = headers.len() >= 2
                && headers.get(0).map(str::trim) == Some("node")
                && headers.get(1).map(str::trim) == Some("density");
            if !ok {
                return Err(Error::InvalidDistribution(format!(
                    "expected header `node,density`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let x: f64 = record
                .get(0)
                .ok_or_else(|| Error::InvalidDistribution("missing node column".into()))?
                .trim()
                .parse()
                .map_err(|e| Error::InvalidDistribution(format!("bad node value: {e}")))?;
            let f: f64 = record
                .get(1)
                .ok_or_else(|| Error::InvalidDistribution("missing density column".into()))?
                .trim()
                .parse()
                .map_err(|e| Error::InvalidDistribution(format!("bad density value: {e}")))?;
            nodes.push(x);
            values.push(f);
        }
        Self::from_table(nodes, values)
    }

    /// Rebuild a distribution from already-normalized parts. Used by the
    /// Bayes update, which normalizes analytically; the invariant is checked
    /// in debug builds.
    pub(crate) fn from_normalized_parts(nodes: Vec<f64>, densities: Vec<f64>) -> Self {
        let weights = trapezoid_weights(&nodes);
        let moments = quad_moments(&nodes, &densities, &weights);
        let dist = Self {
            quadrature: TRAPEZOID,
            nodes,
            densities,
            weights,
            renormalization: 1.0,
            moments,
        };
        debug_assert!(
            (dist.total_mass() - 1.0).abs() < NORM_TOL,
            "posterior mass {} out of tolerance",
            dist.total_mass()
        );
        dist
    }
}

/// Trapezoid mean and variance. A variance in (-1e-14, 0) from round-off is
/// clamped to zero with a warning.
fn quad_moments(nodes: &[f64], densities: &[f64], weights: &[f64]) -> Moments {
    let sum = |g: &dyn Fn(f64, f64) -> f64| -> f64 {
        weights
            .iter()
            .zip(nodes.iter().zip(densities))
            .map(|(w, (&x, &f))| w * g(x, f))
            .sum()
    };
    let mean = sum(&|x, f| x * f);
    let mut variance = sum(&|x, f| (x - mean).powi(2) * f);
    if variance < 0.0 {
        if variance > -VAR_CLAMP {
            log::warn!("quadrature variance {variance:e} clamped to 0");
        } else {
            debug_assert!(false, "variance {variance} below clamp window");
        }
        variance = 0.0;
    }
    Moments {
        mean,
        variance,
        std: variance.sqrt(),
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + i as f64 * step })
        .collect()
}
