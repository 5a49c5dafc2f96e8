//! Narrowband clustered mmWave channels and the full-duplex SI channel.
//!
//! Backhaul (gNB → IAB) and access (IAB → UE) links use the clustered
//! geometric model with uniform linear arrays. The SI channel between the
//! co-located IAB transmit and receive arrays mixes a deterministic
//! spherical-wavefront LOS term with a clustered NLOS term through a Rician
//! factor.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::{ComplexMatrix, Error, Result};

/// Uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub num_antennas: usize,
    /// Element pitch in wavelengths.
    pub element_spacing: f64,
}

impl ArrayGeometry {
    pub fn half_wavelength(num_antennas: usize) -> Self {
        ArrayGeometry {
            num_antennas,
            element_spacing: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_antennas == 0 {
            return Err(Error::InvalidGeometry(
                "array needs at least one antenna".into(),
            ));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "element spacing must be positive, got {}",
                self.element_spacing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterChannelParams {
    pub num_clusters: usize,
    pub rays_per_cluster: usize,
    /// Standard deviation of the per-ray angular offset, radians.
    pub angular_spread: f64,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
}

impl ClusterChannelParams {
    pub fn validate(&self) -> Result<()> {
        self.tx.validate()?;
        self.rx.validate()?;
        if self.num_clusters == 0 || self.rays_per_cluster == 0 {
            return Err(Error::InvalidGeometry(
                "cluster and ray counts must be positive".into(),
            ));
        }
        if !(self.angular_spread > 0.0 && self.angular_spread < PI) {
            return Err(Error::InvalidGeometry(format!(
                "angular spread must lie in (0, pi), got {}",
                self.angular_spread
            )));
        }
        Ok(())
    }
}

/// Placement of the IAB transmit array relative to its receive array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransceiverGeometry {
    /// Gap between the arrays, in wavelengths.
    pub gap: f64,
    /// Incline between the arrays, radians, strictly inside (0, pi).
    pub incline: f64,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
}

impl TransceiverGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.incline > 0.0 && self.incline < PI) {
            return Err(Error::InvalidGeometry(format!(
                "transceiver incline must lie strictly inside (0, pi), got {}",
                self.incline
            )));
        }
        if !(self.gap > 0.0 && self.gap.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "transceiver gap must be positive, got {}",
                self.gap
            )));
        }
        if self.tx_antennas == 0 || self.rx_antennas == 0 {
            return Err(Error::InvalidGeometry(
                "arrays need at least one antenna".into(),
            ));
        }
        Ok(())
    }
}

/// One propagation path of the clustered model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub gain: Complex64,
    pub aoa: f64,
    pub aod: f64,
    /// Relative delay in symbol periods. Sampled for completeness; the
    /// narrowband model does not use it.
    pub delay: f64,
}

/// One channel realisation.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// Backhaul, `N_IAB × N_gNB`.
    pub backhaul: ComplexMatrix,
    /// Access, `N_UE × N_IAB`.
    pub access: ComplexMatrix,
    /// Self-interference, `N_IAB × N_IAB`.
    pub self_interference: ComplexMatrix,
}

impl ChannelSet {
    pub fn n_gnb(&self) -> usize {
        self.backhaul.ncols()
    }

    pub fn n_iab(&self) -> usize {
        self.backhaul.nrows()
    }

    pub fn n_ue(&self) -> usize {
        self.access.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n_iab = self.n_iab();
        if self.access.ncols() != n_iab || self.self_interference.shape() != (n_iab, n_iab) {
            return Err(Error::shape(
                "ChannelSet",
                format!(
                    "backhaul {:?}, access {:?}, SI {:?}",
                    self.backhaul.shape(),
                    self.access.shape(),
                    self.self_interference.shape()
                ),
            ));
        }
        let finite = |m: &ComplexMatrix| m.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !(finite(&self.backhaul) && finite(&self.access) && finite(&self.self_interference)) {
            return Err(Error::shape("ChannelSet", "non-finite entry"));
        }
        Ok(())
    }

    /// The same realisation with the SI channel removed.
    pub fn without_self_interference(&self) -> ChannelSet {
        ChannelSet {
            self_interference: ComplexMatrix::zeros(self.n_iab(), self.n_iab()),
            ..self.clone()
        }
    }
}

/// ULA response `a(θ)_k = exp(i 2π (d/λ) k sin θ) / √N`.
pub fn array_response(theta: f64, geometry: &ArrayGeometry) -> ComplexMatrix {
    let n = geometry.num_antennas;
    let amplitude = 1.0 / (n as f64).sqrt();
    let step = 2.0 * PI * geometry.element_spacing * theta.sin();
    ComplexMatrix::from_fn(n, 1, |k, _| {
        Complex64::from_polar(amplitude, step * k as f64)
    })
}

/// Sums the rays into `√(N_RX N_TX / (C R_c)) Σ α a_RX(θ) a_TX(φ)^H`.
/// The normalisation uses the number of rays supplied.
pub fn cluster_channel_from_rays(
    rays: &[Ray],
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(rx.num_antennas, tx.num_antennas);
    if rays.is_empty() {
        return h;
    }
    for ray in rays {
        let a_rx = array_response(ray.aoa, rx);
        let a_tx = array_response(ray.aod, tx);
        h.gerc(
            ray.gain,
            &a_rx.column(0),
            &a_tx.column(0),
            Complex64::new(1.0, 0.0),
        );
    }
    let scale = ((rx.num_antennas * tx.num_antennas) as f64 / rays.len() as f64).sqrt();
    h * Complex64::new(scale, 0.0)
}

/// Draws the rays of one clustered channel: cluster centres uniform on
/// (−π/2, π/2), Laplacian ray offsets with standard deviation equal to the
/// angular spread, CN(0, 1) gains.
pub fn sample_rays<R: Rng + ?Sized>(params: &ClusterChannelParams, rng: &mut R) -> Vec<Ray> {
    let centre = Uniform::new(-FRAC_PI_2, FRAC_PI_2).expect("non-empty range");
    // Laplace(0, b) has standard deviation b√2.
    let laplace_scale = params.angular_spread / std::f64::consts::SQRT_2;
    let laplace = |rng: &mut R| {
        let a: f64 = Exp1.sample(rng);
        let b: f64 = Exp1.sample(rng);
        laplace_scale * (a - b)
    };
    let mut rays = Vec::with_capacity(params.num_clusters * params.rays_per_cluster);
    for _ in 0..params.num_clusters {
        let aoa_centre = centre.sample(rng);
        let aod_centre = centre.sample(rng);
        for _ in 0..params.rays_per_cluster {
            let aoa = aoa_centre + laplace(rng);
            let aod = aod_centre + laplace(rng);
            let gain = standard_complex_normal(rng);
            let delay: f64 = rng.random();
            rays.push(Ray {
                gain,
                aoa,
                aod,
                delay,
            });
        }
    }
    rays
}

pub fn sample_cluster_channel<R: Rng + ?Sized>(
    params: &ClusterChannelParams,
    rng: &mut R,
) -> ComplexMatrix {
    let rays = sample_rays(params, rng);
    cluster_channel_from_rays(&rays, &params.rx, &params.tx)
}

pub(crate) fn standard_complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Distance in wavelengths between TX element `p` and RX element `q`
/// (both 1-based), with half-wavelength element pitch on both arrays.
pub fn element_distance(p: usize, q: usize, geom: &TransceiverGeometry) -> Result<f64> {
    geom.validate()?;
    if p == 0 || q == 0 {
        return Err(Error::InvalidGeometry("element indices are 1-based".into()));
    }
    let (sin, cos) = geom.incline.sin_cos();
    // d / tan(ω) written as d cos(ω) / sin(ω) stays finite at ω = π/2.
    let along_rx = geom.gap * cos / sin + (q - 1) as f64 * 0.5;
    let along_tx = geom.gap / sin + (p - 1) as f64 * 0.5;
    let sq = along_rx * along_rx + along_tx * along_tx - 2.0 * along_rx * along_tx * cos;
    Ok(sq.max(0.0).sqrt())
}

/// Near-field LOS SI channel, `[H]_{qp} = exp(−i 2π d_pq) / d_pq`, distances in
/// wavelengths. Rows index the receive array.
pub fn los_si_channel(geom: &TransceiverGeometry) -> Result<ComplexMatrix> {
    geom.validate()?;
    let mut h = ComplexMatrix::zeros(geom.rx_antennas, geom.tx_antennas);
    for q in 0..geom.rx_antennas {
        for p in 0..geom.tx_antennas {
            let d = element_distance(p + 1, q + 1, geom)?;
            h[(q, p)] = Complex64::from_polar(1.0 / d, -2.0 * PI * d);
        }
    }
    Ok(h)
}

/// Rician mixture `√(κ/(κ+1)) H_LOS + √(1/(κ+1)) H_NLOS`.
pub fn si_channel(kappa: f64, los: &ComplexMatrix, nlos: &ComplexMatrix) -> Result<ComplexMatrix> {
    if los.shape() != nlos.shape() {
        return Err(Error::shape(
            "si_channel",
            format!("LOS {:?} vs NLOS {:?}", los.shape(), nlos.shape()),
        ));
    }
    if !(kappa >= 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "Rician factor must be >= 0, got {kappa}"
        )));
    }
    let los_weight = if kappa.is_infinite() {
        1.0
    } else {
        (kappa / (kappa + 1.0)).sqrt()
    };
    let nlos_weight = if kappa.is_infinite() {
        0.0
    } else {
        (1.0 / (kappa + 1.0)).sqrt()
    };
    Ok(los * Complex64::new(los_weight, 0.0) + nlos * Complex64::new(nlos_weight, 0.0))
}

/// Rescales `h` so that `‖h‖²_F = target`. A zero matrix is returned unchanged.
pub fn normalize_frobenius(h: &ComplexMatrix, target: f64) -> ComplexMatrix {
    let norm_sq = crate::linalg::frobenius_sq(h);
    if norm_sq == 0.0 {
        return h.clone();
    }
    h * Complex64::new((target / norm_sq).sqrt(), 0.0)
}

/// Everything needed to draw a [`ChannelSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub backhaul: ClusterChannelParams,
    pub access: ClusterChannelParams,
    pub si_nlos: ClusterChannelParams,
    pub transceiver: TransceiverGeometry,
    /// Rician factor, linear.
    pub rician_factor: f64,
    /// Rescale `H_s` to `‖H_s‖²_F = N_IAB²` after mixing.
    pub normalize_si: bool,
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        self.backhaul.validate()?;
        self.access.validate()?;
        self.si_nlos.validate()?;
        self.transceiver.validate()
    }

    /// Deterministic draw from a 64-bit seed.
    pub fn realize(&self, seed: u64) -> Result<ChannelSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(&mut rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelSet> {
        let backhaul = sample_cluster_channel(&self.backhaul, rng);
        let access = sample_cluster_channel(&self.access, rng);
        let nlos = sample_cluster_channel(&self.si_nlos, rng);
        let los = los_si_channel(&self.transceiver)?;
        let mut si = si_channel(self.rician_factor, &los, &nlos)?;
        if self.normalize_si {
            let n = si.nrows() as f64;
            si = normalize_frobenius(&si, n * n);
        }
        let set = ChannelSet {
            backhaul,
            access,
            self_interference: si,
        };
        set.validate()?;
        Ok(set)
    }
}
