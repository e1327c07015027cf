//! Experiment geometries in physical units: white-light phase estimation,
//! femtosecond Michelson interferometry, atomic spontaneous emission and
//! Doppler velocimetry.
//!
//! Each preset maps its physical parameters onto a dimensionless coupling
//! distribution by an affine transform, runs the Bayes engine with the mean
//! offset split into the pre-selected state (optical carriers make the mean
//! coupling huge), and maps the resulting shift back into physical units.

use serde::Serialize;

use crate::dist::GridDistribution;
use crate::error::{Error, Result};
use crate::postselect::{self, PostselectionReport, ReportOptions};
use crate::qcore::{HermitianObservable, StateVector, TwoStateVector};

use num_complex::Complex64 as C64;

pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Default post-selection angle from orthogonality.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Scenario outcome: the mapped coupling distribution, the full Bayes report
/// and the shift translated back into the physical readout variable.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    /// Scenario name, verbatim.
    pub scenario: String,
    /// Distribution of the dimensionless coupling after the affine map.
    pub coupling_distribution: GridDistribution,
    pub postselection: PostselectionReport,
    /// Exact shift mapped into physical units.
    pub physical_shift: f64,
    /// Unit of `physical_shift` ("rad/s" or "s").
    pub physical_shift_unit: String,
    /// Per-scenario first-order expression, computed from the physical
    /// parameters: 2·Im(C_w)·slope·Var(input).
    pub physical_shift_formula: f64,
    /// Set only by the Doppler preset when the mirror speed is zero.
    pub no_motion: bool,
}

/// Equal-superposition pre-selection with post-selection rotated by `epsilon`
/// from orthogonality carrying a 90° phase: Ψ = (1,1)/√2,
/// Φ = (1, -e^{2iε})/√2. For the polarization projector this amplifies
/// Im C_w to cot(ε)/2 ≈ 1/(2ε).
pub fn near_orthogonal_tsv(epsilon: f64) -> Result<TwoStateVector> {
    near_orthogonal_tsv_with_phase(epsilon, 0.0)
}

/// [`near_orthogonal_tsv`] with an extra post-selection phase,
/// Φ = (1, -e^{i(2ε+φ)})/√2. Used to hold the modified weak value fixed
/// while the mean coupling changes.
pub fn near_orthogonal_tsv_with_phase(epsilon: f64, extra_phase: f64) -> Result<TwoStateVector> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be > 0, got {epsilon}"
        )));
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let pre = StateVector::new(vec![C64::new(s, 0.0), C64::new(s, 0.0)])?;
    let phase = C64::from_polar(s, 2.0 * epsilon + extra_phase);
    let post = StateVector::new(vec![C64::new(s, 0.0), -phase])?;
    TwoStateVector::new(pre, post)
}

/// Projector onto one polarization: eigenvalues {0, 1}.
pub fn polarization_projector() -> HermitianObservable {
    HermitianObservable::diagonal(&[0.0, 1.0])
}

/// Two-level observable with magnetic quantum numbers ±1.
pub fn magnetic_two_level() -> HermitianObservable {
    HermitianObservable::diagonal(&[1.0, -1.0])
}

fn run_mapped(
    name: &str,
    input: &GridDistribution,
    slope: f64,
    tsv: &TwoStateVector,
    observable: &HermitianObservable,
    unit: &str,
) -> Result<ScenarioReport> {
    let coupling = input.affine(slope, 0.0)?;
    let rep = postselect::report(&coupling, observable, tsv, ReportOptions::default())?;
    let input_variance = input.moments().variance;
    let formula = 2.0 * rep.weak_value_used.im * slope * input_variance;
    Ok(ScenarioReport {
        scenario: name.to_string(),
        physical_shift: rep.exact_shift / slope,
        physical_shift_unit: unit.to_string(),
        physical_shift_formula: formula,
        no_motion: false,
        coupling_distribution: coupling,
        postselection: rep,
    })
}

/// Phase estimation with broadband light: a polarization-dependent delay
/// `tau` couples to the optical frequency, k = ω·τ. The spectrometer
/// readout is the mean-frequency shift δω = 2·Im(C_w)·τ·Var(ω).
pub fn white_light_phase(
    tau: f64,
    spectrum: &GridDistribution,
    tsv: &TwoStateVector,
    observable: &HermitianObservable,
) -> Result<ScenarioReport> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    run_mapped("white_light_phase", spectrum, tau, tsv, observable, "rad/s")
}

/// Same analysis as [`white_light_phase`] with a femtosecond-laser source;
/// the preset differs only in the default spectrum shape.
pub fn michelson_fs(
    tau: f64,
    spectrum: &GridDistribution,
    tsv: &TwoStateVector,
    observable: &HermitianObservable,
) -> Result<ScenarioReport> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    run_mapped("michelson_fs", spectrum, tau, tsv, observable, "rad/s")
}

/// Grid resolution for the internally built exponential decay distribution.
pub const ATOMIC_GRID_N: usize = 20001;
pub const ATOMIC_GRID_SPAN: f64 = 30.0;

/// Atomic spontaneous emission: a level splitting `2·omega` acts while the
/// atom stays excited, k = Ω·t with t exponentially distributed at decay
/// rate `gamma`. The readout is the mean-decay-time shift
/// δt = 2·Im(C_w)·Ω·Var(t) with Var(t) = 1/Γ².
pub fn atomic_emission(
    omega: f64,
    gamma: f64,
    tsv: &TwoStateVector,
    observable: &HermitianObservable,
) -> Result<ScenarioReport> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be > 0, got {omega}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be > 0, got {gamma}")));
    }
    let decay = GridDistribution::exponential(gamma, ATOMIC_GRID_N, ATOMIC_GRID_SPAN)?;
    run_mapped("atomic_emission", &decay, omega, tsv, observable, "s")
}

/// Doppler velocimetry: a mirror moving at `v` stretches one path by v·t,
/// k = v·t·2π/λ over the pulse's temporal profile. The readout is the
/// mean-arrival-time shift δt = 2·Im(C_w)·v·(2π/λ)·Var(t).
///
/// A zero mirror speed degenerates the affine map; rather than failing, the
/// report comes back with zero shifts, the unmapped temporal profile as the
/// coupling, and the `no_motion` flag set.
pub fn doppler(
    v: f64,
    lambda: f64,
    temporal_profile: &GridDistribution,
    tsv: &TwoStateVector,
    observable: &HermitianObservable,
) -> Result<ScenarioReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    if v == 0.0 {
        return no_motion_report(temporal_profile, tsv, observable);
    }
    let slope = v * 2.0 * std::f64::consts::PI / lambda;
    run_mapped("doppler", temporal_profile, slope, tsv, observable, "s")
}

/// With no motion the coupling vanishes identically: the likelihood is the
/// constant P(Φ|0), the posterior equals the prior and every shift is zero.
fn no_motion_report(
    profile: &GridDistribution,
    tsv: &TwoStateVector,
    observable: &HermitianObservable,
) -> Result<ScenarioReport> {
    let wv = crate::qcore::weak_value(observable, tsv)?;
    let moments = profile.moments();
    let avg_probability = postselect::prob_exact(observable, tsv, 0.0)?;
    let rep = PostselectionReport {
        avg_probability,
        posterior: profile.clone(),
        prior_moments: moments,
        posterior_moments: moments,
        exact_shift: 0.0,
        analytic_shift: 0.0,
        validity_ratio: 0.0,
        weak_ok: true,
        prior_skewness: profile.skewness(),
        weak_value_used: wv,
    };
    Ok(ScenarioReport {
        scenario: "doppler".to_string(),
        coupling_distribution: profile.clone(),
        postselection: rep,
        physical_shift: 0.0,
        physical_shift_unit: "s".to_string(),
        physical_shift_formula: 0.0,
        no_motion: true,
    })
}

/// Default parameter sets for the four presets.
pub mod presets {
    use super::*;

    pub const GRID_N: usize = 8001;

    /// White light: 800 nm carrier, delay of 10 optical cycles (so the
    /// carrier rotation is an exact multiple of 2π and the amplification
    /// geometry survives the offset), flat spectrum 1.3e12 rad/s wide.
    pub const WHITE_LIGHT_LAMBDA: f64 = 800e-9;
    pub const WHITE_LIGHT_CYCLES: f64 = 10.0;
    pub const WHITE_LIGHT_WIDTH: f64 = 1.3e12;

    /// Fiber-laser Michelson: 1560 nm carrier, Gaussian spectrum.
    pub const MICHELSON_LAMBDA: f64 = 1560e-9;
    pub const MICHELSON_CYCLES: f64 = 10.0;
    pub const MICHELSON_SIGMA: f64 = 3.0e11;

    /// Atomic emission: ~1.6 ns lifetime, splitting chosen deep in the weak
    /// regime for the amplified default geometry.
    pub const ATOMIC_OMEGA: f64 = 1.25e6;
    pub const ATOMIC_GAMMA: f64 = 6.25e8;

    /// Doppler: HeNe wavelength, µm/s mirror, ms-scale Gaussian pulse.
    pub const DOPPLER_V: f64 = 1e-6;
    pub const DOPPLER_LAMBDA: f64 = 633e-9;
    pub const DOPPLER_T0: f64 = 1e-3;
    pub const DOPPLER_SIGMA_T: f64 = 1e-4;

    pub struct OpticalParams {
        pub tau: f64,
        pub spectrum: GridDistribution,
        pub tsv: TwoStateVector,
        pub observable: HermitianObservable,
    }

    pub struct AtomicParams {
        pub omega: f64,
        pub gamma: f64,
        pub tsv: TwoStateVector,
        pub observable: HermitianObservable,
    }

    pub struct DopplerParams {
        pub v: f64,
        pub lambda: f64,
        pub profile: GridDistribution,
        pub tsv: TwoStateVector,
        pub observable: HermitianObservable,
    }

    fn carrier_delay(lambda: f64, cycles: f64) -> (f64, f64) {
        let omega0 = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda;
        let tau = 2.0 * std::f64::consts::PI * cycles / omega0;
        (omega0, tau)
    }

    pub fn white_light() -> OpticalParams {
        white_light_with_width(WHITE_LIGHT_WIDTH)
    }

    pub fn white_light_with_width(width: f64) -> OpticalParams {
        let (omega0, tau) = carrier_delay(WHITE_LIGHT_LAMBDA, WHITE_LIGHT_CYCLES);
        let spectrum =
            GridDistribution::uniform(omega0 - width / 2.0, omega0 + width / 2.0, GRID_N)
                .expect("default white-light spectrum");
        OpticalParams {
            tau,
            spectrum,
            tsv: near_orthogonal_tsv(DEFAULT_EPSILON).expect("default selection pair"),
            observable: polarization_projector(),
        }
    }

    pub fn michelson() -> OpticalParams {
        michelson_with_width(MICHELSON_SIGMA)
    }

    pub fn michelson_with_width(sigma: f64) -> OpticalParams {
        let (omega0, tau) = carrier_delay(MICHELSON_LAMBDA, MICHELSON_CYCLES);
        let spectrum = GridDistribution::gaussian(omega0, sigma, GRID_N, 8.0)
            .expect("default fs spectrum");
        OpticalParams {
            tau,
            spectrum,
            tsv: near_orthogonal_tsv(DEFAULT_EPSILON).expect("default selection pair"),
            observable: polarization_projector(),
        }
    }

    pub fn atomic() -> AtomicParams {
        AtomicParams {
            omega: ATOMIC_OMEGA,
            gamma: ATOMIC_GAMMA,
            tsv: near_orthogonal_tsv(DEFAULT_EPSILON).expect("default selection pair"),
            observable: magnetic_two_level(),
        }
    }

    pub fn doppler() -> DopplerParams {
        doppler_with_width(DOPPLER_SIGMA_T)
    }

    pub fn doppler_with_width(sigma_t: f64) -> DopplerParams {
        let profile = GridDistribution::gaussian(DOPPLER_T0, sigma_t, GRID_N, 8.0)
            .expect("default temporal profile");
        DopplerParams {
            v: DOPPLER_V,
            lambda: DOPPLER_LAMBDA,
            profile,
            tsv: near_orthogonal_tsv(DEFAULT_EPSILON).expect("default selection pair"),
            observable: polarization_projector(),
        }
    }
}
