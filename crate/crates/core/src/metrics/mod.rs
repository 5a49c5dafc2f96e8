//! Link spectral efficiencies, the SI-free upper bound, effective SI power and
//! the flop model.
//!
//! Rates are in bits/s/Hz (base-2 logarithms). Determinants are evaluated from
//! the eigenvalues of a Hermitian Gram matrix `I + B^H B`, so the result is
//! always real and non-negative.

pub mod flops;

use num_complex::Complex64;

use crate::channel::ChannelSet;
use crate::digital::HybridBeamformerSet;
use crate::linalg::{self, frobenius_sq, log2_det_identity_plus_gram};
use crate::{ComplexMatrix, Error, Result};

/// Relative diagonal loading applied to a noise covariance that fails to
/// factor.
pub const COVARIANCE_JITTER: f64 = 1e-12;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Transmit powers and noise level for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    /// Backhaul transmit power `ρ_b`, linear.
    pub backhaul_power: f64,
    /// Access transmit power `ρ_a`, linear.
    pub access_power: f64,
    /// SI power `ρ_s`, linear.
    pub si_power: f64,
    /// `σ²`.
    pub noise_variance: f64,
}

impl OperatingPoint {
    /// Both links at the same SNR with `σ² = 1`.
    pub fn from_db(snr_db: f64, si_power_db: f64) -> Self {
        OperatingPoint {
            backhaul_power: db_to_linear(snr_db),
            access_power: db_to_linear(snr_db),
            si_power: db_to_linear(si_power_db),
            noise_variance: 1.0,
        }
    }

    pub fn backhaul_snr(&self) -> f64 {
        self.backhaul_power / self.noise_variance
    }

    pub fn access_snr(&self) -> f64 {
        self.access_power / self.noise_variance
    }

    pub fn without_self_interference(self) -> Self {
        OperatingPoint {
            si_power: 0.0,
            ..self
        }
    }
}

/// A rate together with a note on whether its noise covariance needed
/// diagonal loading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEval {
    pub bits: f64,
    pub jittered: bool,
}

/// `log2 det(I + ρ Q⁻¹ A A^H)` with `A = W^H H F`.
fn log_det_rate(
    combiner: &ComplexMatrix,
    channel: &ComplexMatrix,
    precoder: &ComplexMatrix,
    power: f64,
    noise_cov: &ComplexMatrix,
) -> Result<RateEval> {
    let effective = combiner.adjoint() * channel * precoder;
    let mut jittered = false;
    let chol = match linalg::cholesky(noise_cov, "noise covariance") {
        Ok(c) => c,
        Err(_) => {
            let trace = linalg::trace_real(noise_cov);
            if !(trace > 0.0) {
                return Err(Error::SingularNoiseCovariance);
            }
            jittered = true;
            let mut loaded = linalg::hermitian_part(noise_cov);
            for i in 0..loaded.nrows() {
                loaded[(i, i)] += COVARIANCE_JITTER * trace;
            }
            linalg::cholesky(&loaded, "noise covariance")
                .map_err(|_| Error::SingularNoiseCovariance)?
        }
    };
    // det(I + ρ Q⁻¹ A A^H) = det(I + B^H B) with B = √ρ L⁻¹ A.
    let b = chol
        .l()
        .solve_lower_triangular(&effective)
        .ok_or(Error::SingularNoiseCovariance)?
        * Complex64::new(power.sqrt(), 0.0);
    Ok(RateEval {
        bits: log2_det_identity_plus_gram(&b),
        jittered,
    })
}

fn check_shapes(
    combiner: &ComplexMatrix,
    channel: &ComplexMatrix,
    precoder: &ComplexMatrix,
    op: &'static str,
) -> Result<()> {
    if combiner.nrows() != channel.nrows() || channel.ncols() != precoder.nrows() {
        return Err(Error::shape(
            op,
            format!(
                "W {:?}, H {:?}, F {:?}",
                combiner.shape(),
                channel.shape(),
                precoder.shape()
            ),
        ));
    }
    Ok(())
}

/// Backhaul spectral efficiency at the IAB node with SI from its own
/// transmitter treated as noise. Arguments are composed (RF·BB) beamformers.
pub fn backhaul_rate_matrices(
    iab_combiner: &ComplexMatrix,
    gnb_precoder: &ComplexMatrix,
    iab_precoder: &ComplexMatrix,
    channels: &ChannelSet,
    point: &OperatingPoint,
) -> Result<RateEval> {
    check_shapes(
        iab_combiner,
        &channels.backhaul,
        gnb_precoder,
        "backhaul_rate",
    )?;
    check_shapes(
        iab_combiner,
        &channels.self_interference,
        iab_precoder,
        "backhaul_rate",
    )?;
    let leak = iab_combiner.adjoint() * &channels.self_interference * iab_precoder;
    let noise_cov = (&leak * leak.adjoint()) * Complex64::new(point.si_power, 0.0)
        + (iab_combiner.adjoint() * iab_combiner) * Complex64::new(point.noise_variance, 0.0);
    log_det_rate(
        iab_combiner,
        &channels.backhaul,
        gnb_precoder,
        point.backhaul_power,
        &noise_cov,
    )
}

/// Access spectral efficiency at the UE (no SI term).
pub fn access_rate_matrices(
    ue_combiner: &ComplexMatrix,
    iab_precoder: &ComplexMatrix,
    channels: &ChannelSet,
    point: &OperatingPoint,
) -> Result<RateEval> {
    check_shapes(ue_combiner, &channels.access, iab_precoder, "access_rate")?;
    let noise_cov =
        (ue_combiner.adjoint() * ue_combiner) * Complex64::new(point.noise_variance, 0.0);
    log_det_rate(
        ue_combiner,
        &channels.access,
        iab_precoder,
        point.access_power,
        &noise_cov,
    )
}

pub fn backhaul_rate(
    beams: &HybridBeamformerSet,
    channels: &ChannelSet,
    point: &OperatingPoint,
) -> Result<f64> {
    backhaul_rate_matrices(
        &beams.iab_combiner.composed(),
        &beams.gnb_precoder.composed(),
        &beams.iab_precoder.composed(),
        channels,
        point,
    )
    .map(|r| r.bits)
}

pub fn access_rate(
    beams: &HybridBeamformerSet,
    channels: &ChannelSet,
    point: &OperatingPoint,
) -> Result<f64> {
    access_rate_matrices(
        &beams.ue_combiner.composed(),
        &beams.iab_precoder.composed(),
        channels,
        point,
    )
    .map(|r| r.bits)
}

/// SI-free bound `Σ_{ℓ < N_s} log2(1 + σ_ℓ(H)² SNR)`. Streams beyond the
/// number of singular values contribute nothing.
pub fn upper_bound(channel: &ComplexMatrix, snr: f64, num_streams: usize) -> f64 {
    linalg::singular_values(channel)
        .into_iter()
        .take(num_streams)
        .map(|s| (1.0 + s * s * snr).log2())
        .sum()
}

/// Per-link rates of one design, alongside the SI-free bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub backhaul: f64,
    pub access: f64,
    pub sum: f64,
    pub bound_backhaul: f64,
    pub bound_access: f64,
    /// Some noise covariance needed diagonal loading.
    pub jittered: bool,
}

impl LinkRates {
    pub fn bound_sum(&self) -> f64 {
        self.bound_backhaul + self.bound_access
    }
}

pub fn link_rates(
    beams: &HybridBeamformerSet,
    channels: &ChannelSet,
    point: &OperatingPoint,
) -> Result<LinkRates> {
    let w_iab = beams.iab_combiner.composed();
    let f_iab = beams.iab_precoder.composed();
    let b = backhaul_rate_matrices(
        &w_iab,
        &beams.gnb_precoder.composed(),
        &f_iab,
        channels,
        point,
    )?;
    let a = access_rate_matrices(&beams.ue_combiner.composed(), &f_iab, channels, point)?;
    Ok(LinkRates {
        backhaul: b.bits,
        access: a.bits,
        sum: b.bits + a.bits,
        bound_backhaul: upper_bound(&channels.backhaul, point.backhaul_snr(), beams.num_streams),
        bound_access: upper_bound(&channels.access, point.access_snr(), beams.num_streams),
        jittered: b.jittered || a.jittered,
    })
}

/// Effective SI power `J = ρ_s ‖W^H H_s F‖²_F` and the total SI-plus-noise
/// power `J + σ² N_RF`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiPower {
    pub effective: f64,
    pub total: f64,
}

pub fn effective_si_power(
    combiner: &ComplexMatrix,
    precoder: &ComplexMatrix,
    si: &ComplexMatrix,
    si_power: f64,
    noise_variance: f64,
) -> Result<SiPower> {
    check_shapes(combiner, si, precoder, "effective_si_power")?;
    let leak = combiner.adjoint() * si * precoder;
    let effective = si_power * frobenius_sq(&leak);
    Ok(SiPower {
        effective,
        total: effective + noise_variance * combiner.ncols() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar_channels(h: f64) -> ChannelSet {
        ChannelSet {
            backhaul: ComplexMatrix::from_element(1, 1, c(h)),
            access: ComplexMatrix::from_element(1, 1, c(h)),
            self_interference: ComplexMatrix::from_element(1, 1, c(1.0)),
        }
    }

    #[test]
    fn scalar_backhaul_chain_is_one_bit() {
        let one = ComplexMatrix::from_element(1, 1, c(1.0));
        let point = OperatingPoint {
            backhaul_power: 1.0,
            access_power: 1.0,
            si_power: 0.0,
            noise_variance: 1.0,
        };
        let r = backhaul_rate_matrices(&one, &one, &one, &scalar_channels(1.0), &point).unwrap();
        assert!((r.bits - 1.0).abs() < 1e-15);
        assert!(!r.jittered);
    }

    #[test]
    fn zero_power_zero_rate() {
        let one = ComplexMatrix::from_element(1, 1, c(1.0));
        let point = OperatingPoint {
            backhaul_power: 0.0,
            access_power: 0.0,
            si_power: 5.0,
            noise_variance: 1.0,
        };
        let ch = scalar_channels(2.0);
        assert_eq!(
            backhaul_rate_matrices(&one, &one, &one, &ch, &point)
                .unwrap()
                .bits,
            0.0
        );
        assert_eq!(
            access_rate_matrices(&one, &one, &ch, &point).unwrap().bits,
            0.0
        );
    }

    #[test]
    fn scalar_access_is_shannon() {
        let one = ComplexMatrix::from_element(1, 1, c(1.0));
        let snr = 7.0;
        let point = OperatingPoint {
            backhaul_power: snr,
            access_power: snr,
            si_power: 0.0,
            noise_variance: 1.0,
        };
        let r = access_rate_matrices(&one, &one, &scalar_channels(1.0), &point).unwrap();
        assert!((r.bits - (1.0 + snr).log2()).abs() < 1e-14);
    }

    #[test]
    fn zero_combiner_is_singular() {
        let zero = ComplexMatrix::zeros(1, 1);
        let one = ComplexMatrix::from_element(1, 1, c(1.0));
        let point = OperatingPoint::from_db(0.0, 0.0);
        assert!(matches!(
            access_rate_matrices(&zero, &one, &scalar_channels(1.0), &point),
            Err(Error::SingularNoiseCovariance)
        ));
    }

    #[test]
    fn bound_examples() {
        let eye = ComplexMatrix::identity(2, 2);
        assert!((upper_bound(&eye, 1.0, 2) - 2.0).abs() < 1e-14);
        let h = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(2.0)]));
        assert!((upper_bound(&h, 1.0, 2) - (5f64.log2() + 1.0)).abs() < 1e-14);
        assert!((upper_bound(&h, 1.0, 5) - upper_bound(&h, 1.0, 2)).abs() < 1e-15);
    }

    #[test]
    fn si_power_noise_floor() {
        let w = ComplexMatrix::identity(3, 2);
        let hs = ComplexMatrix::from_element(3, 3, c(1.0));
        let p = effective_si_power(&w, &w, &hs, 0.0, 2.0).unwrap();
        assert_eq!(p.effective, 0.0);
        assert_eq!(p.total, 4.0);
    }

    #[test]
    fn db_conversion() {
        assert!((db_to_linear(5.0) - 3.1622776601683795).abs() < 1e-12);
        assert_eq!(db_to_linear(0.0), 1.0);
    }
}
