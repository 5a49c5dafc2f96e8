//! Baseband stage, the alternating hybrid design loop, the all-digital
//! benchmark and the SI-agnostic baselines.
//!
//! # Design loop
//!
//! Each pass of [`hybrid_design`] updates the four RF beamformers in turn,
//! always using the most recent value of the others:
//!
//! 1. IAB combiner from the SI covariance of the current IAB precoder.
//! 2. IAB precoder from the SI covariance of the new IAB combiner.
//! 3. UE combiner (MMSE) for the new IAB precoder.
//! 4. gNB precoder (regularised ZF) for the new IAB combiner.
//!
//! Each RF update is projected onto the constant-amplitude set as soon as it
//! is computed. The four baseband factors are then recomputed with
//! [`digital_stage`] and the composed beamformers refreshed. The loop stops
//! when the relative change of the SI-plus-noise objective
//! `Tr(W_RF^H R W_RF)` falls below the tolerance.
//!
//! The all-digital benchmark runs the same loop with per-antenna beamformers
//! of width `N_s`, no constant-amplitude projection, and unit Frobenius norm
//! on the closed-form outputs.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analog::{self, ca_project};
use crate::channel::ChannelSet;
use crate::linalg::{self, dominant_left_singular_vectors, frobenius_sq, thin_svd};
use crate::metrics::flops::{self, DesignKind, Dimensions};
use crate::metrics::{self, OperatingPoint};
use crate::{ComplexMatrix, Error, Result};

/// Threshold on `σ_min/σ_max` below which an RF matrix is rank deficient.
pub const RF_RANK_RATIO: f64 = 1e-10;

/// Relative increase of the objective tolerated before a pass is counted as
/// non-monotone.
pub const MONOTONE_BAND: f64 = 0.01;

/// An RF/baseband factor pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBeamformer {
    pub rf: ComplexMatrix,
    pub bb: ComplexMatrix,
}

impl HybridBeamformer {
    /// RF matrix with an identity-padded baseband stage.
    pub fn from_rf(rf: ComplexMatrix, num_streams: usize) -> Self {
        let bb = linalg::identity_padded(rf.ncols(), num_streams);
        HybridBeamformer { rf, bb }
    }

    pub fn composed(&self) -> ComplexMatrix {
        &self.rf * &self.bb
    }
}

/// Precoders and combiners of the three nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBeamformerSet {
    pub gnb_precoder: HybridBeamformer,
    pub iab_precoder: HybridBeamformer,
    pub iab_combiner: HybridBeamformer,
    pub ue_combiner: HybridBeamformer,
    pub num_streams: usize,
}

impl HybridBeamformerSet {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &HybridBeamformer)> {
        [
            ("F_gNB", &self.gnb_precoder),
            ("F_IAB", &self.iab_precoder),
            ("W_IAB", &self.iab_combiner),
            ("W_UE", &self.ue_combiner),
        ]
        .into_iter()
    }
}

/// Optimal baseband stage for a fixed RF stage.
///
/// With `X_RF = U S V^H`, returns `X_BB = V S⁻¹ Q` where `Q` holds the `n`
/// dominant left singular vectors of `U^H A`. The composed beamformer
/// `X_RF X_BB = U Q` is semi-unitary and maximises
/// `log det(I + ρ Q^H U^H A A^H U Q)` over semi-unitary `Q`.
pub fn digital_stage(x_rf: &ComplexMatrix, a: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    let (m, l) = x_rf.shape();
    if a.nrows() != m || l > m || n > l || n == 0 {
        return Err(Error::shape(
            "digital_stage",
            format!("X_RF {:?}, A {:?}, N = {n}", x_rf.shape(), a.shape()),
        ));
    }
    let svd = thin_svd(x_rf);
    let ratio = svd.inverse_condition();
    if !(ratio >= RF_RANK_RATIO) {
        return Err(Error::RankDeficientRf { ratio });
    }
    let projected = svd.u.adjoint() * a;
    let mut q = dominant_left_singular_vectors(&projected, n);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        q.row_mut(i).scale_mut(1.0 / s);
    }
    Ok(&svd.v * q)
}

/// How the RF stage is seeded before the first pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initialization {
    /// Dominant singular vectors of each node's link channel.
    Svd,
    /// Uniformly random phases from the given seed.
    Random(u64),
}

/// Solver settings and operating point for one design run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignParams {
    pub point: OperatingPoint,
    pub num_streams: usize,
    pub num_rf: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub init: Initialization,
}

impl DesignParams {
    fn width(&self, kind: DesignKind) -> usize {
        match kind {
            DesignKind::Hybrid => self.num_rf,
            DesignKind::AllDigital => self.num_streams,
        }
    }

    fn dimensions(&self, channels: &ChannelSet) -> Dimensions {
        Dimensions {
            n_gnb: channels.n_gnb(),
            n_iab: channels.n_iab(),
            n_ue: channels.n_ue(),
            n_rf: self.num_rf,
            n_streams: self.num_streams,
        }
    }

    fn validate(&self, channels: &ChannelSet, kind: DesignKind) -> Result<()> {
        channels.validate()?;
        let width = self.width(kind);
        let min_antennas = channels.n_gnb().min(channels.n_iab()).min(channels.n_ue());
        if self.num_streams == 0 || self.num_streams > width || width > min_antennas {
            return Err(Error::Config(format!(
                "need 0 < N_s ({}) <= beamformer width ({width}) <= min antennas ({min_antennas})",
                self.num_streams
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// Per-pass history of a design run.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTrace {
    /// Effective SI power of the RF stage before the first pass.
    pub initial_analog_si: f64,
    /// Effective SI power of the composed beamformers before the first pass.
    pub initial_hybrid_si: f64,
    pub initial_objective: f64,
    /// `ρ_s ‖W_RF^H H_s F_RF‖²` after each pass.
    pub analog_si: Vec<f64>,
    /// `ρ_s ‖W^H H_s F‖²` of the composed beamformers after each pass.
    pub hybrid_si: Vec<f64>,
    /// Convergence objective `Tr(W_RF^H R W_RF)` after each pass.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Passes (from the second on) where the objective rose by more than
    /// [`MONOTONE_BAND`].
    pub non_monotone_passes: usize,
    /// Passes after which an RF stage collapsed the signal dimension.
    pub dimension_warnings: usize,
    pub flops_estimate: u64,
}

impl DesignTrace {
    pub fn final_analog_si(&self) -> f64 {
        self.analog_si
            .last()
            .copied()
            .unwrap_or(self.initial_analog_si)
    }

    pub fn final_hybrid_si(&self) -> f64 {
        self.hybrid_si
            .last()
            .copied()
            .unwrap_or(self.initial_hybrid_si)
    }

    /// Initial over final analog SI power.
    pub fn analog_reduction(&self) -> f64 {
        self.initial_analog_si / self.final_analog_si()
    }
}

struct LoopState {
    w_iab: HybridBeamformer,
    f_iab: HybridBeamformer,
    w_ue: HybridBeamformer,
    f_gnb: HybridBeamformer,
}

impl LoopState {
    fn into_set(self, num_streams: usize) -> HybridBeamformerSet {
        HybridBeamformerSet {
            gnb_precoder: self.f_gnb,
            iab_precoder: self.f_iab,
            iab_combiner: self.w_iab,
            ue_combiner: self.w_ue,
            num_streams,
        }
    }
}

fn unit_frobenius(x: ComplexMatrix) -> ComplexMatrix {
    let norm = frobenius_sq(&x).sqrt();
    if norm > 0.0 {
        x * Complex64::new(1.0 / norm, 0.0)
    } else {
        x
    }
}

/// Maps a raw RF update onto the feasible set of the design.
fn restrict(x: ComplexMatrix, kind: DesignKind) -> ComplexMatrix {
    match kind {
        DesignKind::Hybrid => ca_project(&x),
        DesignKind::AllDigital => unit_frobenius(x),
    }
}

fn initial_rf(
    channels: &ChannelSet,
    params: &DesignParams,
    kind: DesignKind,
) -> [ComplexMatrix; 4] {
    let width = params.width(kind);
    let raw = match params.init {
        Initialization::Svd => {
            let b = thin_svd(&channels.backhaul);
            let a = thin_svd(&channels.access);
            [
                b.u.columns(0, width).into_owned(),
                a.v.columns(0, width).into_owned(),
                a.u.columns(0, width).into_owned(),
                b.v.columns(0, width).into_owned(),
            ]
        }
        Initialization::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut phases = |rows: usize| {
                ComplexMatrix::from_fn(rows, width, |_, _| {
                    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
                })
            };
            [
                phases(channels.n_iab()),
                phases(channels.n_iab()),
                phases(channels.n_ue()),
                phases(channels.n_gnb()),
            ]
        }
    };
    raw.map(|x| restrict(x, kind))
}

fn initial_state(channels: &ChannelSet, params: &DesignParams, kind: DesignKind) -> LoopState {
    let [w_iab, f_iab, w_ue, f_gnb] = initial_rf(channels, params, kind);
    let n_s = params.num_streams;
    LoopState {
        w_iab: HybridBeamformer::from_rf(w_iab, n_s),
        f_iab: HybridBeamformer::from_rf(f_iab, n_s),
        w_ue: HybridBeamformer::from_rf(w_ue, n_s),
        f_gnb: HybridBeamformer::from_rf(f_gnb, n_s),
    }
}

/// One sweep of the four RF updates.
fn update_rf(
    state: &mut LoopState,
    channels: &ChannelSet,
    params: &DesignParams,
    kind: DesignKind,
) -> Result<()> {
    let point = &params.point;
    let hs = &channels.self_interference;

    let r = analog::rx_si_covariance(hs, &state.f_iab.rf, point.si_power, point.noise_variance)?;
    let w = analog::constrained_min_combiner(&r, &channels.backhaul, &state.f_gnb.rf)?;
    state.w_iab.rf = restrict(w.beamformer, kind);

    let s = analog::tx_si_covariance(hs, &state.w_iab.rf, point.si_power, point.noise_variance)?;
    let f = analog::constrained_min_precoder(&s, &channels.access, &state.w_ue.rf)?;
    state.f_iab.rf = restrict(f.beamformer, kind);

    let w_ue = analog::mmse_combiner_ue(&channels.access, &state.f_iab.rf, point.access_snr())?;
    state.w_ue.rf = restrict(w_ue, kind);

    let f_gnb =
        analog::regzf_precoder_gnb(&channels.backhaul, &state.w_iab.rf, point.backhaul_snr())?;
    state.f_gnb.rf = restrict(f_gnb, kind);
    Ok(())
}

/// Recomputes the four baseband factors, each against the current composed
/// beamformer at the far end of its link.
fn update_baseband(state: &mut LoopState, channels: &ChannelSet, n_s: usize) -> Result<()> {
    let hb = &channels.backhaul;
    let ha = &channels.access;
    state.w_iab.bb = digital_stage(&state.w_iab.rf, &(hb * state.f_gnb.composed()), n_s)?;
    state.f_iab.bb = digital_stage(
        &state.f_iab.rf,
        &(ha.adjoint() * state.w_ue.composed()),
        n_s,
    )?;
    state.w_ue.bb = digital_stage(&state.w_ue.rf, &(ha * state.f_iab.composed()), n_s)?;
    state.f_gnb.bb = digital_stage(
        &state.f_gnb.rf,
        &(hb.adjoint() * state.w_iab.composed()),
        n_s,
    )?;
    Ok(())
}

struct Snapshot {
    analog_si: f64,
    hybrid_si: f64,
    objective: f64,
}

fn snapshot(state: &LoopState, channels: &ChannelSet, point: &OperatingPoint) -> Result<Snapshot> {
    let hs = &channels.self_interference;
    let analog = metrics::effective_si_power(
        &state.w_iab.rf,
        &state.f_iab.rf,
        hs,
        point.si_power,
        point.noise_variance,
    )?;
    let hybrid = metrics::effective_si_power(
        &state.w_iab.composed(),
        &state.f_iab.composed(),
        hs,
        point.si_power,
        point.noise_variance,
    )?;
    Ok(Snapshot {
        analog_si: analog.effective,
        hybrid_si: hybrid.effective,
        objective: analog.effective + point.noise_variance * frobenius_sq(&state.w_iab.rf),
    })
}

fn run_loop(
    channels: &ChannelSet,
    params: &DesignParams,
    kind: DesignKind,
) -> Result<(LoopState, DesignTrace)> {
    params.validate(channels, kind)?;
    let n_s = params.num_streams;
    let mut state = initial_state(channels, params, kind);
    if kind == DesignKind::Hybrid {
        update_baseband(&mut state, channels, n_s)?;
    }
    let start = snapshot(&state, channels, &params.point)?;

    let mut trace = DesignTrace {
        initial_analog_si: start.analog_si,
        initial_hybrid_si: start.hybrid_si,
        initial_objective: start.objective,
        analog_si: Vec::new(),
        hybrid_si: Vec::new(),
        objective: Vec::new(),
        iterations: 0,
        converged: false,
        non_monotone_passes: 0,
        dimension_warnings: 0,
        flops_estimate: 0,
    };

    let mut previous = start.objective;
    while trace.iterations < params.max_iters {
        update_rf(&mut state, channels, params, kind)?;
        update_baseband(&mut state, channels, n_s)?;
        trace.iterations += 1;

        if !analog::preserves_signal_dimension(&state.w_iab.rf, &channels.backhaul, &state.f_gnb.rf)
            || !analog::preserves_signal_dimension(
                &state.w_ue.rf,
                &channels.access,
                &state.f_iab.rf,
            )
        {
            trace.dimension_warnings += 1;
        }

        let snap = snapshot(&state, channels, &params.point)?;
        if trace.iterations >= 2 && snap.objective > previous * (1.0 + MONOTONE_BAND) {
            trace.non_monotone_passes += 1;
        }
        trace.analog_si.push(snap.analog_si);
        trace.hybrid_si.push(snap.hybrid_si);
        trace.objective.push(snap.objective);

        let change = (snap.objective - previous).abs() / previous;
        previous = snap.objective;
        if change < params.tol {
            trace.converged = true;
            break;
        }
    }
    trace.flops_estimate =
        flops::design_flops(&params.dimensions(channels), kind, trace.iterations);
    Ok((state, trace))
}

/// Alternating hybrid analog/digital design.
pub fn hybrid_design(
    channels: &ChannelSet,
    params: &DesignParams,
) -> Result<(HybridBeamformerSet, DesignTrace)> {
    let (state, trace) = run_loop(channels, params, DesignKind::Hybrid)?;
    Ok((state.into_set(params.num_streams), trace))
}

/// Unconstrained per-antenna benchmark. The returned set has identity RF
/// factors and the semi-unitary beamformers as baseband factors.
pub fn all_digital_design(
    channels: &ChannelSet,
    params: &DesignParams,
) -> Result<(HybridBeamformerSet, DesignTrace)> {
    let (state, trace) = run_loop(channels, params, DesignKind::AllDigital)?;
    let full = |x: HybridBeamformer| {
        let composed = x.composed();
        HybridBeamformer {
            rf: linalg::identity(composed.nrows()),
            bb: composed,
        }
    };
    let set = HybridBeamformerSet {
        gnb_precoder: full(state.f_gnb),
        iab_precoder: full(state.f_iab),
        iab_combiner: full(state.w_iab),
        ue_combiner: full(state.w_ue),
        num_streams: params.num_streams,
    };
    Ok((set, trace))
}

/// SI-agnostic hybrid baseline: constant-amplitude projections of the
/// dominant singular vectors of `H_b` and `H_a`, followed by the optimal
/// baseband stage.
pub fn svd_baseline_design(
    channels: &ChannelSet,
    params: &DesignParams,
) -> Result<HybridBeamformerSet> {
    params.validate(channels, DesignKind::Hybrid)?;
    let svd_params = DesignParams {
        init: Initialization::Svd,
        ..*params
    };
    let mut state = initial_state(channels, &svd_params, DesignKind::Hybrid);
    update_baseband(&mut state, channels, params.num_streams)?;
    Ok(state.into_set(params.num_streams))
}

/// Half-duplex comparator: SI-free eigen-beamforming on each link, with the
/// two links sharing the resource in time.
pub fn half_duplex_evaluate(channels: &ChannelSet, params: &DesignParams) -> Result<f64> {
    let beams = svd_baseline_design(channels, params)?;
    let point = params.point.without_self_interference();
    let rates = metrics::link_rates(&beams, channels, &point)?;
    Ok(0.5 * rates.sum)
}
