//! Shared generators and invariant checks used by both the property suite
//! and the acceptance suite. Each `check_*` function validates one module
//! invariant for one instance and panics with context on violation.

#![allow(dead_code)]

use imweak::dist::GridDistribution;
use imweak::metersim::{self, MeterWavefunction};
use imweak::postselect::{self, canonical_qubit};
use imweak::qcore::{
    self, HermitianObservable, StateVector, TransitionKernel, TwoStateVector, WeakValue,
};
use imweak::scenarios;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> HermitianObservable {
    let raw = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let herm = (&raw + raw.adjoint()).map(|z| z * 0.5);
    HermitianObservable::new(herm).expect("symmetrized matrix is Hermitian")
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> StateVector {
    loop {
        let amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        if amps.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3 {
            return StateVector::normalized(amps).expect("nonzero amplitudes");
        }
    }
}

/// Random pre/post pair with overlap magnitude above `min_overlap`.
pub fn random_tsv<R: Rng>(rng: &mut R, dim: usize, min_overlap: f64) -> TwoStateVector {
    loop {
        let pre = random_state(rng, dim);
        let post = random_state(rng, dim);
        if let Ok(tsv) = TwoStateVector::new(pre, post) {
            if tsv.overlap().norm() >= min_overlap {
                return tsv;
            }
        }
    }
}

/// Random distribution from a random constructor, as the dist invariants ask.
pub fn random_distribution<R: Rng>(rng: &mut R) -> GridDistribution {
    match rng.gen_range(0..4) {
        0 => {
            let mean = rng.gen_range(-1.0..1.0);
            let sigma = rng.gen_range(0.01..0.5);
            let n = 2 * rng.gen_range(100..400) + 1;
            let span = rng.gen_range(6.0..10.0);
            GridDistribution::gaussian(mean, sigma, n, span).unwrap()
        }
        1 => {
            let rate = rng.gen_range(0.5..4.0);
            let n = rng.gen_range(1000..3000);
            let span = rng.gen_range(20.0..40.0);
            GridDistribution::exponential(rate, n, span).unwrap()
        }
        2 => {
            let a = rng.gen_range(-2.0..1.0);
            let b = a + rng.gen_range(0.1..3.0);
            let n = rng.gen_range(100..1000);
            GridDistribution::uniform(a, b, n).unwrap()
        }
        _ => {
            let n = rng.gen_range(50..400);
            let x0 = rng.gen_range(-1.0..1.0);
            let nodes: Vec<f64> = (0..n).map(|i| x0 + i as f64 * 0.01).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            match GridDistribution::from_table(nodes, values) {
                Ok(d) => d,
                // all-zero draw is astronomically unlikely but handled
                Err(_) => GridDistribution::uniform(0.0, 1.0, 100).unwrap(),
            }
        }
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

// ---- qcore invariants ----

pub fn check_unitarity(obs: &HermitianObservable, k: f64, psi: &StateVector) {
    let out = qcore::evolve(obs, k, psi).unwrap();
    let norm = out.norm_sq().sqrt();
    assert!(
        (norm - 1.0).abs() < 1e-12,
        "evolution broke the norm: ‖Uψ‖ = {norm} (k = {k})"
    );
}

pub fn check_composition(obs: &HermitianObservable, k1: f64, k2: f64, psi: &StateVector) {
    let two_step = qcore::evolve(obs, k1, &qcore::evolve(obs, k2, psi).unwrap()).unwrap();
    let one_step = qcore::evolve(obs, k1 + k2, psi).unwrap();
    let diff = two_step
        .amplitudes()
        .iter()
        .zip(one_step.amplitudes().iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(diff < 1e-10, "composition violated: max diff {diff}");
}

pub fn check_weak_value_linearity(
    c1: &HermitianObservable,
    c2: &HermitianObservable,
    alpha: f64,
    beta: f64,
    tsv: &TwoStateVector,
) {
    let combined = HermitianObservable::new(
        c1.entries().map(|z| z * alpha) + c2.entries().map(|z| z * beta),
    )
    .unwrap();
    let w1 = qcore::weak_value(c1, tsv).unwrap().as_complex();
    let w2 = qcore::weak_value(c2, tsv).unwrap().as_complex();
    let w = qcore::weak_value(&combined, tsv).unwrap().as_complex();
    let diff = (w - (alpha * w1 + beta * w2)).norm();
    assert!(diff < 1e-10, "weak value not linear: diff {diff}");
}

pub fn check_selfselection_weak_value_real(obs: &HermitianObservable, psi: &StateVector) {
    let tsv = TwoStateVector::new(psi.clone(), psi.clone()).unwrap();
    let wv = qcore::weak_value(obs, &tsv).unwrap();
    assert!(
        wv.im.abs() < 1e-12,
        "Φ=Ψ must give a real weak value, got Im = {}",
        wv.im
    );
}

pub fn check_identity_weak_value(tsv: &TwoStateVector) {
    let id = HermitianObservable::identity(tsv.dim());
    let wv = qcore::weak_value(&id, tsv).unwrap();
    assert!(
        (wv.re - 1.0).abs() < 1e-12 && wv.im.abs() < 1e-12,
        "identity weak value must be 1, got {wv:?}"
    );
}

// ---- dist invariants ----

pub fn check_normalization(dist: &GridDistribution) {
    let mass = dist.total_mass();
    assert!((mass - 1.0).abs() < 1e-9, "mass {mass} not normalized");
    assert!(dist.densities().iter().all(|&f| f >= 0.0), "negative density");
}

pub fn check_affine_moment_laws(dist: &GridDistribution, a: f64, b: f64) {
    let mapped = dist.affine(a, b).unwrap();
    check_normalization(&mapped);
    let m0 = dist.moments();
    let m1 = mapped.moments();
    let mean_expect = a * m0.mean + b;
    let var_expect = a * a * m0.variance;
    let mean_scale = mean_expect.abs().max(a.abs() * m0.std).max(1e-30);
    assert!(
        (m1.mean - mean_expect).abs() <= 1e-12 * mean_scale,
        "affine mean law: {} vs {}",
        m1.mean,
        mean_expect
    );
    assert!(
        (m1.variance - var_expect).abs() <= 1e-12 * var_expect.abs().max(1e-300),
        "affine variance law: {} vs {}",
        m1.variance,
        var_expect
    );
}

// ---- postselect invariants ----

pub fn check_posterior_normalized_positive(
    dist: &GridDistribution,
    obs: &HermitianObservable,
    tsv: &TwoStateVector,
) {
    let (post, p) = postselect::posterior(dist, obs, tsv).unwrap();
    assert!(p > 0.0 && p <= 1.0 + 1e-12, "average probability {p}");
    check_normalization(&post);
}

pub fn check_prob_bounds_and_quadratic_remainder(
    obs: &HermitianObservable,
    tsv: &TwoStateVector,
) {
    let kernel = TransitionKernel::new(obs, tsv).unwrap();
    let fit = |points: usize| -> f64 {
        (0..points)
            .map(|i| {
                let k = -0.2 + 0.4 * i as f64 / (points - 1) as f64;
                let pe = kernel.probability(k);
                assert!((0.0..=1.0).contains(&pe), "prob_exact out of bounds: {pe}");
                if k.abs() < 1e-3 {
                    return 0.0;
                }
                let pf = postselect::prob_first_order(obs, tsv, k).unwrap();
                (pe - pf).abs() / (k * k)
            })
            .fold(0.0, f64::max)
    };
    let m_coarse = fit(21);
    let m_fine = fit(41);
    assert!(m_coarse.is_finite() && m_fine.is_finite(), "remainder fit diverged");
    // the fitted quadratic-remainder constant is stable under refinement
    let scale = m_coarse.max(m_fine);
    if scale > 1e-12 {
        assert!(
            (m_fine - m_coarse).abs() <= 0.5 * scale,
            "remainder constant unstable: {m_coarse} vs {m_fine}"
        );
    }
}

/// Halving the width of a centered Gaussian divides the exact-vs-analytic
/// relative gap by ~4 (window [3, 5]).
///
/// The window is a finite-width probe of the quadratic error law, so it only
/// holds where the quadratic term dominates; near a cancellation with the
/// next order any window fails. Dominance is certified on a coarser width
/// pair first: if gap(2σ)/gap(σ) is itself in [3, 5], the higher-order
/// coefficient ratio is bounded tightly enough that the window on (σ, σ/2)
/// is guaranteed. Returns false (nothing asserted) for instances where
/// dominance cannot be established.
pub fn check_oracle_scaling(obs: &HermitianObservable, tsv: &TwoStateVector) -> bool {
    let gap = |sigma: f64| -> f64 {
        let f = GridDistribution::gaussian(0.0, sigma, 2001, 8.0).unwrap();
        let exact = postselect::exact_shift(&f, obs, tsv).unwrap();
        let wv = qcore::weak_value(obs, tsv).unwrap();
        let analytic = postselect::analytic_shift(wv, &f);
        if exact.abs() < 1e-12 {
            return f64::NAN;
        }
        (exact - analytic).abs() / exact.abs()
    };
    let coarse = gap(0.04);
    let g1 = gap(0.02);
    let g2 = gap(0.01);
    if !coarse.is_finite() || !g1.is_finite() || !g2.is_finite() {
        return false;
    }
    // dominance gate: quadratic behavior on the coarse pair, above noise
    if coarse < 1e-6 || g1 < 1e-7 || !(3.0..=5.0).contains(&(coarse / g1)) {
        return false;
    }
    let factor = g1 / g2;
    assert!(
        (3.0..=5.0).contains(&factor),
        "oracle gap scaling factor {factor} outside [3, 5] (gaps {coarse}, {g1}, {g2})"
    );
    true
}

pub fn check_offset_identity_at_zero_mean(
    obs: &HermitianObservable,
    tsv: &TwoStateVector,
    sigma: f64,
) {
    let f = GridDistribution::gaussian(0.0, sigma, 801, 8.0).unwrap();
    let dec = postselect::offset_decomposition(&f, obs, tsv).unwrap();
    let plain = qcore::weak_value(obs, tsv).unwrap();
    assert!(
        (dec.modified_weak_value.re - plain.re).abs() < 1e-12
            && (dec.modified_weak_value.im - plain.im).abs() < 1e-12,
        "zero-mean offset decomposition moved the weak value: {:?} vs {:?}",
        dec.modified_weak_value,
        plain
    );
}

pub fn check_validity_formula_identity(wv: WeakValue, dist: &GridDistribution) {
    let v = postselect::validity(wv, dist);
    let m = dist.moments();
    let shift = postselect::analytic_shift(wv, dist);
    assert!(
        (shift.abs() - 2.0 * v.ratio * m.std).abs() <= 1e-12 * shift.abs().max(1e-300),
        "|analytic shift| must equal 2·ratio·std"
    );
    assert!(
        (v.shift_over_std - 2.0 * v.ratio).abs() < 1e-15,
        "shift/std must be 2·ratio"
    );
    if v.ratio < 0.5 && m.std > 0.0 {
        assert!(
            shift.abs() < m.std,
            "ratio {} < 1/2 but shift {} ≥ std {}",
            v.ratio,
            shift,
            m.std
        );
    }
}

// ---- metersim invariants ----

pub fn check_cross_formalism_identity(
    obs: &HermitianObservable,
    tsv: &TwoStateVector,
    sigma_p: f64,
    k: f64,
) {
    let meter = MeterWavefunction::gaussian(sigma_p, 512, 8.0).unwrap();
    let (after, prob) = metersim::postselect_meter(&meter, k, obs, tsv).unwrap();

    let f = GridDistribution::from_table(meter.p_nodes().to_vec(), meter.density()).unwrap();
    let coupling = f.affine(k, 0.0).unwrap();
    let (post_k, avg_p) = postselect::posterior(&coupling, obs, tsv).unwrap();
    let post_p = post_k.affine(1.0 / k, 0.0).unwrap();

    assert!(
        (prob - avg_p).abs() < 1e-12,
        "selection probabilities disagree: {prob} vs {avg_p}"
    );
    let max_diff = after
        .density()
        .iter()
        .zip(post_p.densities())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(max_diff < 1e-12, "meter density vs posterior: max diff {max_diff}");
}

pub fn check_parseval(meter: &MeterWavefunction) {
    let diff = (meter.q_norm_sq() - meter.norm_sq()).abs();
    assert!(diff < 1e-10, "Parseval violated: {diff}");
}

/// δP tracks 2k·Im(C_w)·Var(P) better as the interaction weakens.
pub fn check_p_shift_first_order(
    obs: &HermitianObservable,
    tsv: &TwoStateVector,
    sigma_p: f64,
    k: f64,
) {
    let meter = MeterWavefunction::gaussian(sigma_p, 512, 8.0).unwrap();
    let wv = qcore::weak_value(obs, tsv).unwrap();
    if wv.im.abs() < 0.05 {
        return;
    }
    let rel_err = |kk: f64| -> f64 {
        let (after, _) = metersim::postselect_meter(&meter, kk, obs, tsv).unwrap();
        let measured = metersim::p_shift(&meter, &after).unwrap();
        let predicted = 2.0 * kk * wv.im * meter.var_p();
        (measured - predicted).abs() / predicted.abs()
    };
    let full = rel_err(k);
    let half = rel_err(k / 2.0);
    assert!(
        half <= 0.75 * full + 1e-9,
        "halving k did not shrink the δP error: {full} → {half}"
    );
}

// ---- scenario invariants ----

pub fn check_scenario_identities(report: &scenarios::ScenarioReport, slope: f64) {
    let mapped = report.postselection.analytic_shift / slope;
    let formula = report.physical_shift_formula;
    assert!(
        (formula - mapped).abs() <= 1e-12 * formula.abs().max(mapped.abs()).max(1e-300),
        "physical formula {formula} vs mapped analytic shift {mapped}"
    );
    let independent = report.postselection.weak_value_used.im.abs()
        * report.coupling_distribution.moments().std;
    assert!(
        (report.postselection.validity_ratio - independent).abs()
            <= 1e-12 * independent.max(1e-300),
        "validity ratio {} vs independent recomputation {independent}",
        report.postselection.validity_ratio
    );
}

/// Exact-vs-formula relative gap for a scenario report.
pub fn scenario_gap(report: &scenarios::ScenarioReport) -> f64 {
    (report.physical_shift - report.physical_shift_formula).abs() / report.physical_shift.abs()
}

/// Canonical-pair helper shared with the acceptance suite.
pub fn canonical() -> (HermitianObservable, TwoStateVector) {
    canonical_qubit()
}
