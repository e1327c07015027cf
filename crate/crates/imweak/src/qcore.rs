//! Finite-dimensional quantum states, Hermitian observables, weak values and
//! exact unitary propagation.
//!
//! States are plain complex amplitude vectors; observables carry a cached
//! spectral decomposition so that `e^{-ikC}` is evaluated exactly (no series
//! truncation) at O(d²) per application. Everything here is immutable after
//! construction and safe to share across threads.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for normalization and Hermiticity checks.
pub const NORM_TOL: f64 = 1e-12;

/// Default overlap magnitude below which a pre/post pair is rejected as
/// degenerate: weak values diverge and the first-order expansion breaks.
pub const OVERLAP_TOL: f64 = 1e-10;

/// Complex amplitude vector of a d-level system.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<C64>,
}

impl StateVector {
    /// Build a state from amplitudes, requiring unit norm within [`NORM_TOL`].
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let v = DVector::from_vec(amplitudes);
        let norm_sq = v.iter().map(|a| a.norm_sqr()).sum::<f64>();
        if (norm_sq - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(Self { amplitudes: v })
    }

    /// Build a state from arbitrary finite amplitudes, normalizing them.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::NotNormalized { norm_sq: 0.0 });
        }
        Ok(Self { amplitudes: v.map(|a| a / norm) })
    }

    /// |0⟩-like basis state of dimension `dim` with a 1 at `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::from_element(dim, C64::new(0.0, 0.0));
        v[index] = C64::new(1.0, 0.0);
        Self { amplitudes: v }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    /// Squared L2 norm Σ|aᵢ|².
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn from_dvector_unchecked(v: DVector<C64>) -> Self {
        Self { amplitudes: v }
    }
}

/// d×d complex self-adjoint matrix with its spectral decomposition cached at
/// construction. Eigenvalues are real; eigenvectors form a unitary basis.
#[derive(Debug, Clone)]
pub struct HermitianObservable {
    entries: DMatrix<C64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
}

impl HermitianObservable {
    /// Build an observable, rejecting matrices whose entrywise deviation from
    /// their conjugate transpose exceeds [`NORM_TOL`].
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("observable entries"));
        }
        let max_asymmetry = hermitian_defect(&entries);
        if max_asymmetry > NORM_TOL {
            return Err(Error::NotHermitian { max_asymmetry });
        }
        // Symmetrize before decomposing so round-off in the input cannot leak
        // imaginary eigenvalue parts.
        let sym = (&entries + entries.adjoint()).map(|a| a * 0.5);
        let eig = sym.symmetric_eigen();
        Ok(Self {
            entries,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    /// Build from rows of `[re, im]` pairs (row-major).
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rows.iter().map(Vec::len).find(|&l| l != d).unwrap_or(0),
            });
        }
        let m = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Self::new(m)
    }

    /// Diagonal observable with the given real eigenvalues.
    pub fn diagonal(values: &[f64]) -> Self {
        let d = values.len();
        let m = DMatrix::from_fn(d, d, |i, j| {
            if i == j { C64::new(values[i], 0.0) } else { C64::new(0.0, 0.0) }
        });
        Self::new(m).expect("diagonal real matrix is Hermitian")
    }

    /// The d-dimensional identity.
    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    /// Pauli X (σₓ).
    pub fn pauli_x() -> Self {
        let m = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0), C64::new(1.0, 0.0),
            C64::new(1.0, 0.0), C64::new(0.0, 0.0),
        ]);
        Self::new(m).expect("σₓ is Hermitian")
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    /// Apply the observable to a vector: C·v.
    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.entries * v
    }
}

fn hermitian_defect(m: &DMatrix<C64>) -> f64 {
    let adj = m.adjoint();
    (m - adj).iter().map(|a| a.norm()).fold(0.0, f64::max)
}

/// Pre-selected |Ψ⟩ and post-selected |Φ⟩ pair with the overlap ⟨Φ|Ψ⟩ cached.
#[derive(Debug, Clone)]
pub struct TwoStateVector {
    pre: StateVector,
    post: StateVector,
    overlap: C64,
}

impl TwoStateVector {
    /// Pair a pre- and post-selection state, rejecting (nearly) orthogonal
    /// pairs at the default tolerance [`OVERLAP_TOL`].
    pub fn new(pre: StateVector, post: StateVector) -> Result<Self> {
        Self::with_tolerance(pre, post, OVERLAP_TOL)
    }

    /// Same as [`TwoStateVector::new`] with an explicit overlap tolerance.
    pub fn with_tolerance(pre: StateVector, post: StateVector, tolerance: f64) -> Result<Self> {
        if pre.dim() != post.dim() {
            return Err(Error::DimensionMismatch {
                expected: pre.dim(),
                found: post.dim(),
            });
        }
        let overlap = inner(&post, &pre);
        if overlap.norm() <= tolerance {
            return Err(Error::DegenerateSelection {
                overlap: overlap.norm(),
                tolerance,
            });
        }
        Ok(Self { pre, post, overlap })
    }

    pub fn pre(&self) -> &StateVector {
        &self.pre
    }

    pub fn post(&self) -> &StateVector {
        &self.post
    }

    /// Cached ⟨Φ|Ψ⟩.
    pub fn overlap(&self) -> C64 {
        self.overlap
    }

    pub fn dim(&self) -> usize {
        self.pre.dim()
    }
}

/// Complex weak value split into real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeakValue {
    pub re: f64,
    pub im: f64,
}

impl WeakValue {
    pub fn as_complex(self) -> C64 {
        C64::new(self.re, self.im)
    }
}

impl From<C64> for WeakValue {
    fn from(z: C64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Precomputed spectral data for evaluating ⟨Φ|e^{-ikC}|Ψ⟩ at many couplings.
///
/// With C = V·diag(λ)·V†, the amplitude is Σⱼ cⱼ·e^{-ikλⱼ} where
/// cⱼ = ⟨Φ|vⱼ⟩⟨vⱼ|Ψ⟩. Reduces each evaluation to O(d) after an O(d²) setup;
/// the Bayes engine, the Monte-Carlo sampler and the meter simulation all
/// share this path.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    eigenvalues: Vec<f64>,
    coefficients: Vec<C64>,
    overlap: C64,
}

impl TransitionKernel {
    pub fn new(observable: &HermitianObservable, tsv: &TwoStateVector) -> Result<Self> {
        if observable.dim() != tsv.dim() {
            return Err(Error::DimensionMismatch {
                expected: observable.dim(),
                found: tsv.dim(),
            });
        }
        let v = observable.eigenvectors();
        let pre_coeffs = v.adjoint() * tsv.pre().amplitudes();
        let post_coeffs = v.adjoint() * tsv.post().amplitudes();
        let coefficients: Vec<C64> = post_coeffs
            .iter()
            .zip(pre_coeffs.iter())
            .map(|(b, a)| b.conj() * a)
            .collect();
        Ok(Self {
            eigenvalues: observable.eigenvalues().iter().copied().collect(),
            coefficients,
            overlap: tsv.overlap(),
        })
    }

    /// ⟨Φ|e^{-ikC}|Ψ⟩.
    pub fn amplitude(&self, k: f64) -> C64 {
        self.eigenvalues
            .iter()
            .zip(&self.coefficients)
            .map(|(&lambda, c)| c * C64::from_polar(1.0, -k * lambda))
            .sum()
    }

    /// |⟨Φ|e^{-ikC}|Ψ⟩|², clamped into [0, 1] against round-off.
    pub fn probability(&self, k: f64) -> f64 {
        let p = self.amplitude(k).norm_sqr();
        debug_assert!((-1e-12..=1.0 + 1e-12).contains(&p), "probability {p} out of range");
        p.clamp(0.0, 1.0)
    }

    /// Cached ⟨Φ|Ψ⟩ of the underlying pair.
    pub fn overlap(&self) -> C64 {
        self.overlap
    }
}

/// Inner product ⟨bra|ket⟩ = Σᵢ conj(braᵢ)·ketᵢ.
pub fn inner(bra: &StateVector, ket: &StateVector) -> C64 {
    debug_assert_eq!(bra.dim(), ket.dim());
    bra.amplitudes.dotc(&ket.amplitudes)
}

/// Checked variant of [`inner`] for callers with unvalidated dimensions.
pub fn inner_checked(bra: &StateVector, ket: &StateVector) -> Result<C64> {
    if bra.dim() != ket.dim() {
        return Err(Error::DimensionMismatch {
            expected: bra.dim(),
            found: ket.dim(),
        });
    }
    Ok(inner(bra, ket))
}

/// Weak value ⟨Φ|C|Ψ⟩ / ⟨Φ|Ψ⟩ of the observable for a pre/post pair.
pub fn weak_value(observable: &HermitianObservable, tsv: &TwoStateVector) -> Result<WeakValue> {
    if observable.dim() != tsv.dim() {
        return Err(Error::DimensionMismatch {
            expected: observable.dim(),
            found: tsv.dim(),
        });
    }
    let numerator = tsv
        .post
        .amplitudes
        .dotc(&observable.apply(&tsv.pre.amplitudes));
    Ok(WeakValue::from(numerator / tsv.overlap))
}

/// Exact unitary propagation e^{-ikC}·ψ via the cached spectral decomposition.
pub fn evolve(observable: &HermitianObservable, k: f64, psi: &StateVector) -> Result<StateVector> {
    if observable.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: observable.dim(),
            found: psi.dim(),
        });
    }
    if !k.is_finite() {
        return Err(Error::NonFinite("coupling k"));
    }
    let v = observable.eigenvectors();
    // coefficients in the eigenbasis
    let coeffs = v.adjoint() * &psi.amplitudes;
    let rotated = DVector::from_iterator(
        psi.dim(),
        coeffs
            .iter()
            .zip(observable.eigenvalues().iter())
            .map(|(c, &lambda)| c * C64::from_polar(1.0, -k * lambda)),
    );
    Ok(StateVector::from_dvector_unchecked(v * rotated))
}

/// Real expectation value ⟨ψ|C|ψ⟩; asserts the imaginary residue is below
/// [`NORM_TOL`] before discarding it.
pub fn expectation(observable: &HermitianObservable, psi: &StateVector) -> Result<f64> {
    if observable.dim() != psi.dim() {
        return Err(Error::DimensionMismatch {
            expected: observable.dim(),
            found: psi.dim(),
        });
    }
    let value = psi.amplitudes.dotc(&observable.apply(&psi.amplitudes));
    debug_assert!(value.im.abs() < NORM_TOL, "expectation imaginary residue {}", value.im);
    Ok(value.re)
}
