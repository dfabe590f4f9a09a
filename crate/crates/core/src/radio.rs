//! Sector antenna patterns, the three-state mmWave channel, and the
//! Shannon-fit rate model.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::geometry::{angle_from_boresight, Point, Region};
use crate::units::{db_to_linear, dbm_to_watts};

/// Flat-top sector pattern: main-lobe gain inside the beamwidth, back-lobe
/// gain everywhere else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub main_lobe_db: f64,
    pub back_lobe_db: f64,
    pub beamwidth_deg: f64,
}

impl AntennaPattern {
    /// (20 dB, -10 dB, 5°)
    pub const BS_DEFAULT: Self = Self {
        main_lobe_db: 20.0,
        back_lobe_db: -10.0,
        beamwidth_deg: 5.0,
    };
    /// (10 dB, -10 dB, 30°)
    pub const UE_DEFAULT: Self = Self {
        main_lobe_db: 10.0,
        back_lobe_db: -10.0,
        beamwidth_deg: 30.0,
    };

    pub fn validate(&self, prefix: &str, errors: &mut Vec<FieldError>) {
        if !(self.main_lobe_db > self.back_lobe_db) {
            errors.push(FieldError::new(
                format!("{prefix}.main_lobe_db"),
                "main lobe gain must exceed back lobe gain",
            ));
        }
        if !(self.beamwidth_deg > 0.0 && self.beamwidth_deg < 360.0) {
            errors.push(FieldError::new(
                format!("{prefix}.beamwidth_deg"),
                "beamwidth must lie in (0, 360)",
            ));
        }
    }

    /// Linear gain at `phi_deg` off boresight.
    pub fn gain(&self, phi_deg: f64) -> f64 {
        if phi_deg.abs() <= self.beamwidth_deg / 2.0 {
            db_to_linear(self.main_lobe_db)
        } else {
            db_to_linear(self.back_lobe_db)
        }
    }

    pub(crate) fn linear(&self) -> LinearPattern {
        LinearPattern {
            main: db_to_linear(self.main_lobe_db),
            back: db_to_linear(self.back_lobe_db),
            cos_half_beam: (self.beamwidth_deg.to_radians() / 2.0).cos(),
        }
    }
}

/// Pattern in linear units with the beam edge expressed as a cosine, so the
/// slot loop can decide main/back lobe from a dot product of unit vectors.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LinearPattern {
    pub main: f64,
    pub back: f64,
    cos_half_beam: f64,
}

impl LinearPattern {
    #[inline]
    pub fn gain_for_cos(&self, cos_phi: f64) -> f64 {
        if cos_phi >= self.cos_half_beam {
            self.main
        } else {
            self.back
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Path loss at 1 m, dB.
    pub intercept_db: f64,
    /// Distance exponent (loss grows by `10 * exponent` dB per decade).
    pub exponent: f64,
    /// Log-normal shadowing standard deviation, dB.
    pub shadowing_db: f64,
}

impl PathLossParams {
    pub fn path_loss_db(&self, d_m: f64) -> f64 {
        self.intercept_db + 10.0 * self.exponent * d_m.log10()
    }
}

/// Distance-dependent LOS/NLOS/outage channel.
///
/// `p_out(d) = max(0, 1 - exp(-d / outage_decay_m + outage_offset))` and
/// `p_los(d) = (1 - p_out(d)) * exp(-d / los_decay_m)`; NLOS takes the rest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub carrier_ghz: f64,
    pub los: PathLossParams,
    pub nlos: PathLossParams,
    pub outage_decay_m: f64,
    pub outage_offset: f64,
    pub los_decay_m: f64,
}

impl ChannelParams {
    /// 73 GHz measurement-based fit: LOS (69.8 dB, 2.0, 5.8 dB), NLOS
    /// (86.6 dB, 2.45, 8.0 dB), 1/a_out = 30 m, b_out = 5.2, 1/a_los = 67.1 m.
    pub const MMWAVE_73GHZ: Self = Self {
        carrier_ghz: 73.0,
        los: PathLossParams {
            intercept_db: 69.8,
            exponent: 2.0,
            shadowing_db: 5.8,
        },
        nlos: PathLossParams {
            intercept_db: 86.6,
            exponent: 2.45,
            shadowing_db: 8.0,
        },
        outage_decay_m: 30.0,
        outage_offset: 5.2,
        los_decay_m: 67.1,
    };

    pub fn validate(&self, prefix: &str, errors: &mut Vec<FieldError>) {
        let mut need = |ok: bool, field: &str, msg: &str| {
            if !ok {
                errors.push(FieldError::new(format!("{prefix}.{field}"), msg));
            }
        };
        need(self.carrier_ghz > 0.0, "carrier_ghz", "must be positive");
        for (name, p) in [("los", &self.los), ("nlos", &self.nlos)] {
            need(p.exponent > 0.0, &format!("{name}.exponent"), "must be positive");
            need(p.shadowing_db >= 0.0, &format!("{name}.shadowing_db"), "must be nonnegative");
            need(p.intercept_db.is_finite(), &format!("{name}.intercept_db"), "must be finite");
        }
        need(self.outage_decay_m > 0.0, "outage_decay_m", "must be positive");
        need(self.los_decay_m > 0.0, "los_decay_m", "must be positive");
        need(
            self.outage_offset >= 0.0 && self.outage_offset.is_finite(),
            "outage_offset",
            "must be finite and nonnegative",
        );
    }

    pub fn outage_probability(&self, d_m: f64) -> f64 {
        (1.0 - (-d_m / self.outage_decay_m + self.outage_offset).exp()).max(0.0)
    }

    pub fn los_probability(&self, d_m: f64) -> f64 {
        (1.0 - self.outage_probability(d_m)) * (-d_m / self.los_decay_m).exp()
    }

    pub fn nlos_probability(&self, d_m: f64) -> f64 {
        (1.0 - self.outage_probability(d_m) - self.los_probability(d_m)).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    Los,
    Nlos,
    Outage,
}

impl LinkClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkClass::Los => "los",
            LinkClass::Nlos => "nlos",
            LinkClass::Outage => "outage",
        }
    }
}

/// Slow (per-drop) state of one BS–UE link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub class: LinkClass,
    pub shadowing_db: f64,
    /// Linear power gain excluding antennas and fading; zero iff outage.
    pub mean_path_gain: f64,
}

impl LinkState {
    pub const OUTAGE: Self = Self {
        class: LinkClass::Outage,
        shadowing_db: 0.0,
        mean_path_gain: 0.0,
    };

    /// Deterministic state with the given class and shadowing.
    pub fn with_shadowing(class: LinkClass, d_m: f64, shadowing_db: f64, params: &ChannelParams) -> Self {
        let pl = match class {
            LinkClass::Los => params.los,
            LinkClass::Nlos => params.nlos,
            LinkClass::Outage => return Self::OUTAGE,
        };
        Self {
            class,
            shadowing_db,
            mean_path_gain: db_to_linear(-(pl.path_loss_db(d_m) + shadowing_db)),
        }
    }
}

pub fn draw_link_state<R: Rng + ?Sized>(d_m: f64, params: &ChannelParams, rng: &mut R) -> Result<LinkState> {
    if !(d_m > 0.0) {
        return Err(Error::param("distance", format!("must be positive, got {d_m}")));
    }
    let p_out = params.outage_probability(d_m);
    let p_los = params.los_probability(d_m);
    let u: f64 = rng.random();
    let class = if u < p_out {
        return Ok(LinkState::OUTAGE);
    } else if u < p_out + p_los {
        LinkClass::Los
    } else {
        LinkClass::Nlos
    };
    let sigma = match class {
        LinkClass::Los => params.los.shadowing_db,
        _ => params.nlos.shadowing_db,
    };
    let z: f64 = StandardNormal.sample(rng);
    Ok(LinkState::with_shadowing(class, d_m, sigma * z, params))
}

/// Rayleigh block-fading power gain: unit-mean exponential.
#[inline]
pub fn fading_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateModel {
    /// Overhead fraction α.
    pub overhead: f64,
    /// Loss factor β applied to SINR.
    pub loss: f64,
    pub noise_figure_db: f64,
    pub noise_psd_dbm_hz: f64,
    pub tx_power_dbm: f64,
}

impl Default for RateModel {
    fn default() -> Self {
        Self {
            overhead: 0.2,
            loss: 0.5,
            noise_figure_db: 7.0,
            noise_psd_dbm_hz: -174.0,
            tx_power_dbm: 30.0,
        }
    }
}

impl RateModel {
    pub fn validate(&self, prefix: &str, errors: &mut Vec<FieldError>) {
        if !(0.0..1.0).contains(&self.overhead) {
            errors.push(FieldError::new(format!("{prefix}.overhead"), "must lie in [0, 1)"));
        }
        if !(self.loss > 0.0 && self.loss <= 1.0) {
            errors.push(FieldError::new(format!("{prefix}.loss"), "must lie in (0, 1]"));
        }
        for (name, v) in [
            ("noise_figure_db", self.noise_figure_db),
            ("noise_psd_dbm_hz", self.noise_psd_dbm_hz),
            ("tx_power_dbm", self.tx_power_dbm),
        ] {
            if !v.is_finite() {
                errors.push(FieldError::new(format!("{prefix}.{name}"), "must be finite"));
            }
        }
    }

    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    /// Thermal noise plus noise figure over bandwidth `w_hz`, in watts.
    pub fn noise_power(&self, w_hz: f64) -> f64 {
        db_to_linear(self.noise_figure_db) * dbm_to_watts(self.noise_psd_dbm_hz) * w_hz
    }

    /// `(1 - α) W log2(1 + β sinr)` bits/s.
    pub fn rate(&self, w_hz: f64, sinr: f64) -> f64 {
        (1.0 - self.overhead) * w_hz * (self.loss * sinr).ln_1p() / std::f64::consts::LN_2
    }
}

/// One co-band interfering transmission as seen by a victim UE.
#[derive(Debug, Clone, Copy)]
pub struct Transmitter {
    pub bs: Point,
    /// The UE this BS is beaming toward in the current slot.
    pub scheduled_ue: Point,
    /// Link from this BS to the victim.
    pub link: LinkState,
    pub fading: f64,
}

/// Aggregate interference at `victim`, whose own beam points at `serving_bs`.
/// Departure angles are measured off each transmitter's beam toward its
/// scheduled UE; arrival angles off the victim's beam toward its server.
pub fn interference_power(
    victim: Point,
    serving_bs: Point,
    transmitters: &[Transmitter],
    bs_pattern: &AntennaPattern,
    ue_pattern: &AntennaPattern,
    tx_power_w: f64,
    region: Region,
) -> Result<f64> {
    let mut total = 0.0;
    for t in transmitters {
        let departure = angle_from_boresight(t.bs, t.scheduled_ue, victim, region)?;
        let arrival = angle_from_boresight(victim, serving_bs, t.bs, region)?;
        total += tx_power_w
            * bs_pattern.gain(departure)
            * ue_pattern.gain(arrival)
            * t.link.mean_path_gain
            * t.fading;
    }
    Ok(total)
}
