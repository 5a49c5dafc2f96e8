//! Analog (RF) beamformer design.
//!
//! The IAB combiner and precoder solve a constrained trace minimisation
//!
//! ```text
//!     min_W Tr(W^H R W)   s.t.   W^H H F = α I
//! ```
//!
//! whose Lagrangian stationary point is `W = α R⁻¹ H F (F^H H^H R⁻¹ H F)⁻¹`.
//! The normalisation `α = 1/‖W‖_F` depends on `W` itself, so the problem is
//! solved with `α = 1` and the result rescaled afterwards; the scale does not
//! change the minimising direction.
//!
//! The gNB precoder and UE combiner are a regularised ZF and an MMSE filter.
//! All four outputs are unconstrained and are mapped onto the
//! constant-amplitude set by [`ca_project`].

use num_complex::Complex64;

use crate::linalg::{self, hermitian_eigenvalues, hermitian_solve};
use crate::{ComplexMatrix, Error, Result};

/// Condition threshold below which a Gram matrix counts as singular.
pub const SINGULARITY_RATIO: f64 = 1e-10;

/// SI-plus-noise covariance seen by an IAB beamformer.
#[derive(Debug, Clone)]
pub struct InterferenceCovariance {
    pub matrix: ComplexMatrix,
    pub si_power: f64,
    pub noise_variance: f64,
}

/// `R = ρ_s H_s F F^H H_s^H + σ² I`: SI and noise at the IAB receive array for
/// a given IAB transmit beamformer.
pub fn rx_si_covariance(
    si: &ComplexMatrix,
    iab_precoder: &ComplexMatrix,
    si_power: f64,
    noise_variance: f64,
) -> Result<InterferenceCovariance> {
    if si.ncols() != iab_precoder.nrows() {
        return Err(Error::shape(
            "rx_si_covariance",
            format!("H_s {:?} vs F {:?}", si.shape(), iab_precoder.shape()),
        ));
    }
    let leak = si * iab_precoder;
    Ok(covariance(&leak, si_power, noise_variance))
}

/// `S = ρ_s H_s^H W W^H H_s + σ² I`: the transmit-side dual of
/// [`rx_si_covariance`].
pub fn tx_si_covariance(
    si: &ComplexMatrix,
    iab_combiner: &ComplexMatrix,
    si_power: f64,
    noise_variance: f64,
) -> Result<InterferenceCovariance> {
    if si.nrows() != iab_combiner.nrows() {
        return Err(Error::shape(
            "tx_si_covariance",
            format!("H_s {:?} vs W {:?}", si.shape(), iab_combiner.shape()),
        ));
    }
    let leak = si.adjoint() * iab_combiner;
    Ok(covariance(&leak, si_power, noise_variance))
}

fn covariance(leak: &ComplexMatrix, si_power: f64, noise_variance: f64) -> InterferenceCovariance {
    let n = leak.nrows();
    let mut matrix = (leak * leak.adjoint()) * Complex64::new(si_power, 0.0);
    for i in 0..n {
        matrix[(i, i)] += noise_variance;
    }
    InterferenceCovariance {
        matrix: linalg::hermitian_part(&matrix),
        si_power,
        noise_variance,
    }
}

/// A constrained minimiser together with its normalisation scalar.
#[derive(Debug, Clone)]
pub struct ConstrainedSolution {
    pub beamformer: ComplexMatrix,
    /// `α` (or `β`): the solution satisfies `X^H H F = scale · I`.
    pub scale: f64,
}

/// Solves `min Tr(X^H C X)` s.t. `X^H E = scale I` for covariance `C` and
/// effective channel `E`, normalising `‖X‖_F = 1`.
fn constrained_trace_min(
    cov: &ComplexMatrix,
    effective: &ComplexMatrix,
) -> Result<ConstrainedSolution> {
    if cov.nrows() != effective.nrows() {
        return Err(Error::shape(
            "constrained_trace_min",
            format!(
                "covariance {:?} vs effective channel {:?}",
                cov.shape(),
                effective.shape()
            ),
        ));
    }
    let whitened = hermitian_solve(cov, effective, "interference covariance")?;
    let gram = linalg::hermitian_part(&(effective.adjoint() * &whitened));
    let eig = hermitian_eigenvalues(&gram);
    let largest = eig.first().copied().unwrap_or(0.0);
    let smallest = eig.last().copied().unwrap_or(0.0);
    let ratio = if largest > 0.0 {
        smallest / largest
    } else {
        0.0
    };
    if !(ratio >= SINGULARITY_RATIO) {
        return Err(Error::NearSingularConstraint { ratio });
    }
    // X0 = C⁻¹ E G⁻¹, and G is Hermitian so X0^H = G⁻¹ (C⁻¹ E)^H.
    let unnormalised = hermitian_solve(&gram, &whitened.adjoint(), "constraint Gram matrix")
        .map_err(|_| Error::NearSingularConstraint { ratio })?
        .adjoint();
    let scale = 1.0 / linalg::frobenius_sq(&unnormalised).sqrt();
    Ok(ConstrainedSolution {
        beamformer: unnormalised * Complex64::new(scale, 0.0),
        scale,
    })
}

/// IAB RF combiner minimising received SI power subject to
/// `W^H H_b F_gNB = α I`.
pub fn constrained_min_combiner(
    cov: &InterferenceCovariance,
    backhaul: &ComplexMatrix,
    gnb_precoder: &ComplexMatrix,
) -> Result<ConstrainedSolution> {
    if backhaul.ncols() != gnb_precoder.nrows() {
        return Err(Error::shape(
            "constrained_min_combiner",
            format!(
                "H_b {:?} vs F_gNB {:?}",
                backhaul.shape(),
                gnb_precoder.shape()
            ),
        ));
    }
    constrained_trace_min(&cov.matrix, &(backhaul * gnb_precoder))
}

/// IAB RF precoder minimising leaked SI power subject to
/// `W_UE^H H_a F = β I`.
pub fn constrained_min_precoder(
    cov: &InterferenceCovariance,
    access: &ComplexMatrix,
    ue_combiner: &ComplexMatrix,
) -> Result<ConstrainedSolution> {
    if access.nrows() != ue_combiner.nrows() {
        return Err(Error::shape(
            "constrained_min_precoder",
            format!("H_a {:?} vs W_UE {:?}", access.shape(), ue_combiner.shape()),
        ));
    }
    constrained_trace_min(&cov.matrix, &(access.adjoint() * ue_combiner))
}

/// Rank of the effective channel `W^H H F` relative to the number of RF
/// chains; the analog stage should preserve the signal dimension.
pub fn preserves_signal_dimension(
    combiner: &ComplexMatrix,
    channel: &ComplexMatrix,
    precoder: &ComplexMatrix,
) -> bool {
    let effective = combiner.adjoint() * channel * precoder;
    let s = linalg::singular_values(&effective);
    let expected = combiner.ncols().min(precoder.ncols());
    match s.first() {
        Some(&top) if top > 0.0 => {
            s.iter().filter(|&&v| v / top > SINGULARITY_RATIO).count() == expected
        }
        _ => expected == 0,
    }
}

/// `(E E^H + reg I)⁻¹ E`, shared by the MMSE combiner and the RZF precoder.
fn regularized_filter(effective: &ComplexMatrix, reg: f64) -> Result<ComplexMatrix> {
    let n = effective.nrows();
    let mut gram = effective * effective.adjoint();
    for i in 0..n {
        gram[(i, i)] += reg;
    }
    hermitian_solve(&gram, effective, "regularised Gram matrix")
}

/// UE RF combiner: the Wiener filter
/// `(H_a F F^H H_a^H + (N_UE/SNR_a) I)⁻¹ H_a F`.
pub fn mmse_combiner_ue(
    access: &ComplexMatrix,
    iab_precoder: &ComplexMatrix,
    snr: f64,
) -> Result<ComplexMatrix> {
    if access.ncols() != iab_precoder.nrows() {
        return Err(Error::shape(
            "mmse_combiner_ue",
            format!(
                "H_a {:?} vs F_IAB {:?}",
                access.shape(),
                iab_precoder.shape()
            ),
        ));
    }
    let n_ue = access.nrows() as f64;
    regularized_filter(&(access * iab_precoder), n_ue / snr)
}

/// gNB RF precoder: regularised ZF
/// `(H_b^H W W^H H_b + (N_IAB/SNR_b) I)⁻¹ H_b^H W`.
pub fn regzf_precoder_gnb(
    backhaul: &ComplexMatrix,
    iab_combiner: &ComplexMatrix,
    snr: f64,
) -> Result<ComplexMatrix> {
    if backhaul.nrows() != iab_combiner.nrows() {
        return Err(Error::shape(
            "regzf_precoder_gnb",
            format!(
                "H_b {:?} vs W_IAB {:?}",
                backhaul.shape(),
                iab_combiner.shape()
            ),
        ));
    }
    let n_iab = backhaul.nrows() as f64;
    regularized_filter(&(backhaul.adjoint() * iab_combiner), n_iab / snr)
}

/// Constant-amplitude projection: every entry becomes `exp(i ∠x) / √N` with `N`
/// the number of rows. Exact zeros get phase 0.
pub fn ca_project(x: &ComplexMatrix) -> ComplexMatrix {
    let amplitude = 1.0 / (x.nrows() as f64).sqrt();
    x.map(|z| {
        if z.re == 0.0 && z.im == 0.0 {
            Complex64::new(amplitude, 0.0)
        } else {
            Complex64::from_polar(amplitude, z.im.atan2(z.re))
        }
    })
}

/// True when every entry has modulus `1/√rows` to within `tol`.
pub fn is_constant_amplitude(x: &ComplexMatrix, tol: f64) -> bool {
    let amplitude = 1.0 / (x.nrows() as f64).sqrt();
    x.iter().all(|z| (z.norm() - amplitude).abs() <= tol)
}
