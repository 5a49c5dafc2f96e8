//! Simulation configuration.
//!
//! Configs are flat TOML files whose keys mirror the system parameter names.
//! Missing keys take the reference values below; unknown keys are rejected.
//!
//! ```toml
//! n_gnb = 32
//! n_iab = 32
//! n_ue = 4
//! si_power_db = 15.0
//! snr_db = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
//! trials = 200
//! master_seed = 7
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayGeometry, ChannelModel, ClusterChannelParams, TransceiverGeometry};
use crate::digital::{DesignParams, Initialization};
use crate::metrics::flops::Dimensions;
use crate::metrics::{db_to_linear, OperatingPoint};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Svd,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Informational only; the model is narrowband.
    pub carrier_frequency_ghz: f64,
    /// Informational only.
    pub bandwidth_mhz: f64,
    pub n_gnb: usize,
    pub n_iab: usize,
    pub n_ue: usize,
    pub num_clusters: usize,
    pub rays_per_cluster: usize,
    pub angular_spread_deg: f64,
    /// ULA pitch in wavelengths for the far-field arrays.
    pub element_spacing: f64,
    pub gap_wavelengths: f64,
    pub incline_deg: f64,
    pub rician_factor_db: f64,
    pub si_power_db: f64,
    pub noise_variance: f64,
    pub num_streams: usize,
    pub num_rf: usize,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub tol: f64,
    pub max_iters: usize,
    /// Rescale every SI channel to `‖H_s‖²_F = N_IAB²`.
    pub normalize_si: bool,
    pub init: InitMode,
    /// Worker threads for sweeps; 0 picks the number of cores.
    pub threads: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            carrier_frequency_ghz: 28.0,
            bandwidth_mhz: 850.0,
            n_gnb: 32,
            n_iab: 32,
            n_ue: 4,
            num_clusters: 6,
            rays_per_cluster: 8,
            angular_spread_deg: 20.0,
            element_spacing: 0.5,
            gap_wavelengths: 2.0,
            incline_deg: 30.0,
            rician_factor_db: 5.0,
            si_power_db: 15.0,
            noise_variance: 1.0,
            num_streams: 2,
            num_rf: 2,
            snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
            trials: 1000,
            master_seed: 1,
            tol: 1e-4,
            max_iters: 50,
            normalize_si: true,
            init: InitMode::Svd,
            threads: 0,
        }
    }
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        for (name, v) in [
            ("n_gnb", self.n_gnb),
            ("n_iab", self.n_iab),
            ("n_ue", self.n_ue),
            ("num_clusters", self.num_clusters),
            ("rays_per_cluster", self.rays_per_cluster),
            ("num_streams", self.num_streams),
            ("num_rf", self.num_rf),
            ("trials", self.trials),
            ("max_iters", self.max_iters),
        ] {
            if v == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        let min_antennas = self.n_gnb.min(self.n_iab).min(self.n_ue);
        if self.num_streams > self.num_rf || self.num_rf > min_antennas {
            return fail(format!(
                "need num_streams ({}) <= num_rf ({}) <= min antennas ({min_antennas})",
                self.num_streams, self.num_rf
            ));
        }
        if self.snr_db.is_empty() {
            return fail("snr_db sweep is empty".into());
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return fail("snr_db entries must be finite".into());
        }
        if !(self.tol > 0.0) {
            return fail(format!("tol must be positive, got {}", self.tol));
        }
        if !(self.noise_variance > 0.0) {
            return fail(format!(
                "noise_variance must be positive, got {}",
                self.noise_variance
            ));
        }
        if !self.si_power_db.is_finite() || !self.rician_factor_db.is_finite() {
            return fail("si_power_db and rician_factor_db must be finite".into());
        }
        self.channel_model().validate()
    }

    pub fn dimensions(&self) -> Dimensions {
        Dimensions {
            n_gnb: self.n_gnb,
            n_iab: self.n_iab,
            n_ue: self.n_ue,
            n_rf: self.num_rf,
            n_streams: self.num_streams,
        }
    }

    pub fn channel_model(&self) -> ChannelModel {
        let spread = self.angular_spread_deg.to_radians();
        let ula = |n| ArrayGeometry {
            num_antennas: n,
            element_spacing: self.element_spacing,
        };
        let link = |rx, tx| ClusterChannelParams {
            num_clusters: self.num_clusters,
            rays_per_cluster: self.rays_per_cluster,
            angular_spread: spread,
            tx: ula(tx),
            rx: ula(rx),
        };
        ChannelModel {
            backhaul: link(self.n_iab, self.n_gnb),
            access: link(self.n_ue, self.n_iab),
            si_nlos: link(self.n_iab, self.n_iab),
            transceiver: TransceiverGeometry {
                gap: self.gap_wavelengths,
                incline: self.incline_deg.to_radians(),
                tx_antennas: self.n_iab,
                rx_antennas: self.n_iab,
            },
            rician_factor: db_to_linear(self.rician_factor_db),
            normalize_si: self.normalize_si,
        }
    }

    /// Both links at `snr_db`, SI at the configured power.
    pub fn operating_point(&self, snr_db: f64) -> OperatingPoint {
        OperatingPoint {
            backhaul_power: db_to_linear(snr_db) * self.noise_variance,
            access_power: db_to_linear(snr_db) * self.noise_variance,
            si_power: db_to_linear(self.si_power_db),
            noise_variance: self.noise_variance,
        }
    }

    /// Design settings at `snr_db`; `init_seed` seeds random initialisation.
    pub fn design_params(&self, snr_db: f64, init_seed: u64) -> DesignParams {
        DesignParams {
            point: self.operating_point(snr_db),
            num_streams: self.num_streams,
            num_rf: self.num_rf,
            tol: self.tol,
            max_iters: self.max_iters,
            init: match self.init {
                InitMode::Svd => Initialization::Svd,
                InitMode::Random => Initialization::Random(init_seed),
            },
        }
    }
}

/// Parses an inclusive `start:stop:step` range in dB.
pub fn parse_snr_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::Config(format!("SNR range must be start:stop:step, got {spec:?}"));
    let values = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<Vec<f64>>>()?;
    let (start, stop, step) = match values.as_slice() {
        [start] => (*start, *start, 1.0),
        [start, stop, step] => (*start, *stop, *step),
        _ => return Err(bad()),
    };
    if !(step > 0.0) || stop < start || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + step * i as f64).collect())
}
