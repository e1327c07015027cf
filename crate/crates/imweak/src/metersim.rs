//! Quantum-meter realization of the standard pointer formalism on a
//! discretized wavefunction, and its exact equivalence with the classical
//! Bayes engine.
//!
//! The meter is stored in the P-representation, where the interaction
//! `e^{-ikPC}` is diagonal: the post-selected amplitude at node p is
//! `⟨Φ|e^{-ikpC}|Ψ⟩·ψ(p)` with no time-stepping error. The conjugate Q
//! representation is derived on demand by a discrete Fourier transform with
//! kernel `e^{+iqp}`; with that sign convention the conjugate-mean shift for
//! the canonical qubit comes out positive, matching the pointer-shift
//! formula `δQ = k·Re C_w`.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{HermitianObservable, TransitionKernel, TwoStateVector};

/// Normalization tolerance for meter construction.
pub const NORM_TOL: f64 = 1e-9;

/// Relative imaginary-amplitude bound below which a meter counts as
/// real-valued for the conjugate-shift premise.
pub const REAL_TOL: f64 = 1e-12;

/// Discretized complex meter wavefunction in the P-representation on a
/// uniform grid. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MeterWavefunction {
    p_nodes: Vec<f64>,
    amplitudes: Vec<C64>,
    dp: f64,
}

/// Measured vs predicted pointer shifts for one meter run.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MeterShiftReport {
    /// Measured ⟨P⟩ change.
    pub delta_p: f64,
    /// 2k·Im(C_w)·Var(P).
    pub delta_p_predicted: f64,
    /// Measured ⟨Q⟩ change in the conjugate representation.
    pub delta_q: f64,
    /// k·Re(C_w).
    pub delta_q_predicted: f64,
    /// Var(P) of the initial meter.
    pub var_p: f64,
    /// Post-selection probability of the run.
    pub probability: f64,
}

impl MeterWavefunction {
    /// Build from a uniform grid start/step and raw amplitudes, normalizing
    /// so that Σ|ψ|²Δp = 1.
    pub fn from_amplitudes(p_start: f64, dp: f64, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::InvalidMeter(format!(
                "need at least 2 nodes, got {}",
                amplitudes.len()
            )));
        }
        if !(dp > 0.0) || !p_start.is_finite() {
            return Err(Error::InvalidMeter(format!("bad grid: start {p_start}, step {dp}")));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidMeter("non-finite amplitude".into()));
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dp;
        if norm_sq <= 0.0 {
            return Err(Error::InvalidMeter("zero wavefunction".into()));
        }
        let scale = norm_sq.sqrt().recip();
        let p_nodes = (0..amplitudes.len()).map(|j| p_start + j as f64 * dp).collect();
        Ok(Self {
            p_nodes,
            amplitudes: amplitudes.into_iter().map(|a| a * scale).collect(),
            dp,
        })
    }

    /// Real Gaussian meter centered at p = 0 with Var(P) = sigma_p².
    ///
    /// `n` must be a power of two ≥ 256 and `span ≥ 8` (in units of sigma_p)
    /// so the transform is cheap and truncation negligible.
    pub fn gaussian(sigma_p: f64, n: usize, span: f64) -> Result<Self> {
        if !(sigma_p > 0.0) {
            return Err(Error::InvalidMeter(format!("sigma_p must be > 0, got {sigma_p}")));
        }
        if n < 256 || !n.is_power_of_two() {
            return Err(Error::InvalidMeter(format!(
                "n must be a power of two ≥ 256, got {n}"
            )));
        }
        if !(span >= 8.0) {
            return Err(Error::InvalidMeter(format!("span must be ≥ 8 sigma_p, got {span}")));
        }
        let dp = 2.0 * span * sigma_p / n as f64;
        let p_start = -span * sigma_p;
        // |ψ|² is the N(0, sigma_p²) density, so Var(P) = sigma_p²
        let amplitudes = (0..n)
            .map(|j| {
                let p = p_start + j as f64 * dp;
                C64::new((-p * p / (4.0 * sigma_p * sigma_p)).exp(), 0.0)
            })
            .collect();
        Self::from_amplitudes(p_start, dp, amplitudes)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn p_nodes(&self) -> &[f64] {
        &self.p_nodes
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dp(&self) -> f64 {
        self.dp
    }

    /// Σ|ψ|²Δp, 1 up to round-off.
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.dp
    }

    /// ⟨P⟩ under |ψ(p)|².
    pub fn mean_p(&self) -> f64 {
        self.p_nodes
            .iter()
            .zip(&self.amplitudes)
            .map(|(&p, a)| p * a.norm_sqr())
            .sum::<f64>()
            * self.dp
    }

    /// Var(P) under |ψ(p)|².
    pub fn var_p(&self) -> f64 {
        let mean = self.mean_p();
        self.p_nodes
            .iter()
            .zip(&self.amplitudes)
            .map(|(&p, a)| (p - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            * self.dp
    }

    /// Probability density |ψ(p)|² at the nodes.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Whether the amplitudes are real-valued to within [`REAL_TOL`] of the
    /// largest magnitude.
    pub fn is_real(&self) -> bool {
        self.max_imag() <= REAL_TOL * self.max_abs()
    }

    fn max_imag(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }

    fn max_abs(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Emit as CSV `p,re,im` with header.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "re", "im"])?;
        for (p, a) in self.p_nodes.iter().zip(&self.amplitudes) {
            w.write_record([format!("{p}"), format!("{}", a.re), format!("{}", a.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Ingest the CSV format of [`MeterWavefunction::write_csv`]. The
    /// `p,re,im` header line is required and the grid must be uniform to
    /// within 1e-9 relative.
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        {
            let headers = r.headers()?;
            let ok = headers.len() >= 3
                && headers.get(0).map(str::trim) == Some("p")
                && headers.get(1).map(str::trim) == Some("re")
                && headers.get(2).map(str::trim) == Some("im");
            if !ok {
                return Err(Error::InvalidMeter(format!(
                    "expected header `p,re,im`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                )));
            }
        }
        let mut nodes: Vec<f64> = Vec::new();
        let mut amps: Vec<C64> = Vec::new();
        for record in r.records() {
            let record = record?;
            let get = |i: usize, name: &str| -> Result<f64> {
                record
                    .get(i)
                    .ok_or_else(|| Error::InvalidMeter(format!("missing {name} column")))?
                    .trim()
                    .parse()
                    .map_err(|e| Error::InvalidMeter(format!("bad {name} value: {e}")))
            };
            nodes.push(get(0, "p")?);
            amps.push(C64::new(get(1, "re")?, get(2, "im")?));
        }
        if nodes.len() < 2 {
            return Err(Error::InvalidMeter("need at least 2 rows".into()));
        }
        let dp = nodes[1] - nodes[0];
        if !(dp > 0.0) {
            return Err(Error::InvalidMeter("grid not increasing".into()));
        }
        for w in nodes.windows(2) {
            if ((w[1] - w[0]) / dp - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMeter("grid not uniform".into()));
            }
        }
        Self::from_amplitudes(nodes[0], dp, amps)
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.len() == other.len()
            && self.dp == other.dp
            && self.p_nodes[0] == other.p_nodes[0]
    }

    /// Conjugate-variable mean ⟨Q⟩ from the discrete transform
    /// ψ̃(q) ∝ Σⱼ ψ(pⱼ)·e^{+iq·pⱼ}.
    fn mean_q(&self) -> f64 {
        let n = self.len();
        let mut buf: Vec<C64> = self.amplitudes.clone();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let dq = 2.0 * std::f64::consts::PI / (n as f64 * self.dp);
        let mut num = 0.0;
        let mut den = 0.0;
        for (m, a) in buf.iter().enumerate() {
            let s = if m < n.div_ceil(2) { m as f64 } else { m as f64 - n as f64 };
            let q = s * dq;
            let w = a.norm_sqr();
            num += q * w;
            den += w;
        }
        num / den
    }

    /// Total probability mass in the conjugate representation, normalized so
    /// that it equals [`MeterWavefunction::norm_sq`] when Parseval holds.
    pub fn q_norm_sq(&self) -> f64 {
        let n = self.len();
        let mut buf: Vec<C64> = self.amplitudes.clone();
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        let dq = 2.0 * std::f64::consts::PI / (n as f64 * self.dp);
        let scale = self.dp * self.dp / (2.0 * std::f64::consts::PI);
        buf.iter().map(|a| a.norm_sqr()).sum::<f64>() * scale * dq
    }
}

/// Couple the meter to the system via `e^{-ikPC}` and post-select: the
/// returned meter is renormalized and the second value is the selection
/// probability Σ|⟨Φ|e^{-ikpC}|Ψ⟩ψ(p)|²Δp.
pub fn postselect_meter(
    meter: &MeterWavefunction,
    k: f64,
    observable: &HermitianObservable,
    tsv: &TwoStateVector,
) -> Result<(MeterWavefunction, f64)> {
    if !k.is_finite() {
        return Err(Error::NonFinite("coupling k"));
    }
    let kernel = TransitionKernel::new(observable, tsv)?;
    let amplitudes: Vec<C64> = meter
        .p_nodes
        .iter()
        .zip(&meter.amplitudes)
        .map(|(&p, a)| kernel.amplitude(k * p) * a)
        .collect();
    let probability: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * meter.dp;
    if probability < crate::postselect::MIN_AVG_PROBABILITY {
        return Err(Error::VanishingPostselection { probability });
    }
    let after = MeterWavefunction::from_amplitudes(meter.p_nodes[0], meter.dp, amplitudes)?;
    Ok((after, probability))
}

/// ⟨P⟩ change between two meters on the same grid.
pub fn p_shift(before: &MeterWavefunction, after: &MeterWavefunction) -> Result<f64> {
    if !before.same_grid(after) {
        return Err(Error::GridMismatch);
    }
    Ok(after.mean_p() - before.mean_p())
}

/// ⟨Q⟩ change between two meters on the same grid, computed in the conjugate
/// representation.
///
/// The pointer-shift formula assumes a real-valued initial wavefunction, so
/// a complex `before` meter is refused; use [`q_shift_unchecked`] to compute
/// the difference anyway (it then carries no first-order guarantee).
pub fn q_shift(before: &MeterWavefunction, after: &MeterWavefunction) -> Result<f64> {
    if !before.is_real() {
        return Err(Error::ComplexMeter {
            max_imag: before.max_imag(),
        });
    }
    q_shift_unchecked(before, after)
}

/// [`q_shift`] without the real-valuedness premise on the initial meter.
pub fn q_shift_unchecked(
    before: &MeterWavefunction,
    after: &MeterWavefunction,
) -> Result<f64> {
    if !before.same_grid(after) {
        return Err(Error::GridMismatch);
    }
    Ok(after.mean_q() - before.mean_q())
}

/// Run one meter interaction and collect measured and predicted shifts.
pub fn shift_report(
    meter: &MeterWavefunction,
    k: f64,
    observable: &HermitianObservable,
    tsv: &TwoStateVector,
) -> Result<(MeterShiftReport, MeterWavefunction)> {
    let wv = crate::qcore::weak_value(observable, tsv)?;
    let (after, probability) = postselect_meter(meter, k, observable, tsv)?;
    let var_p = meter.var_p();
    let report = MeterShiftReport {
        delta_p: p_shift(meter, &after)?,
        delta_p_predicted: 2.0 * k * wv.im * var_p,
        delta_q: q_shift(meter, &after)?,
        delta_q_predicted: k * wv.re,
        var_p,
        probability,
    };
    Ok((report, after))
}
