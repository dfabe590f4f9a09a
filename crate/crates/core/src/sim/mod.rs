//! Time-slotted downlink simulation of several operators under a sharing regime.

mod association;
mod drop;
mod scheduler;

pub use association::{associate, operative_bandwidth, Association, SharingRegime};
pub use drop::{run_drop, DropLinks, DropOutcome};
pub use scheduler::{schedule_slot, CellEntry, SchedulerPolicy};

use serde::{Deserialize, Serialize};

use crate::error::{Error, FieldError, Result};
use crate::exec::Execution;
use crate::geometry::{Deployment, Region};
use crate::radio::{AntennaPattern, ChannelParams, LinkClass, RateModel};
use crate::rng::{DropStream, Streams};
use crate::stats::{self, BootstrapSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub bandwidth_hz: f64,
    pub bs_per_km2: f64,
    pub ue_per_km2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceMode {
    #[default]
    Sinr,
    /// Ignore interference entirely (rates from SNR).
    SnrOnly,
}

/// Everything about a run except who owns what.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::drops")]
    pub drops: usize,
    #[serde(default = "defaults::slots")]
    pub slots: usize,
    #[serde(default)]
    pub policy: SchedulerPolicy,
    #[serde(default)]
    pub interference: InterferenceMode,
    #[serde(default = "Region::unit_km_torus")]
    pub region: Region,
    #[serde(default = "defaults::bs_antenna")]
    pub bs_antenna: AntennaPattern,
    #[serde(default = "defaults::ue_antenna")]
    pub ue_antenna: AntennaPattern,
    #[serde(default = "defaults::channel")]
    pub channel: ChannelParams,
    #[serde(default)]
    pub rate_model: RateModel,
    #[serde(default)]
    pub bootstrap: BootstrapSpec,
}

mod defaults {
    use super::*;

    pub fn drops() -> usize {
        20
    }
    pub fn slots() -> usize {
        10_000
    }
    pub fn bs_antenna() -> AntennaPattern {
        AntennaPattern::BS_DEFAULT
    }
    pub fn ue_antenna() -> AntennaPattern {
        AntennaPattern::UE_DEFAULT
    }
    pub fn channel() -> ChannelParams {
        ChannelParams::MMWAVE_73GHZ
    }
}

impl Default for SimSettings {
    /// Desk scale: 1 km² torus, 10⁴ slots, 20 drops, 73 GHz channel.
    fn default() -> Self {
        Self {
            seed: 0,
            drops: defaults::drops(),
            slots: defaults::slots(),
            policy: SchedulerPolicy::default(),
            interference: InterferenceMode::default(),
            region: Region::unit_km_torus(),
            bs_antenna: AntennaPattern::BS_DEFAULT,
            ue_antenna: AntennaPattern::UE_DEFAULT,
            channel: ChannelParams::MMWAVE_73GHZ,
            rate_model: RateModel::default(),
            bootstrap: BootstrapSpec::default(),
        }
    }
}

impl SimSettings {
    /// Full-scale run length (10⁵ slots).
    pub fn full_scale(mut self) -> Self {
        self.slots = 100_000;
        self
    }

    pub fn validate(&self, errors: &mut Vec<FieldError>) {
        if self.drops == 0 {
            errors.push(FieldError::new("sim.drops", "must be at least 1"));
        }
        if self.slots == 0 {
            errors.push(FieldError::new("sim.slots", "must be at least 1"));
        }
        if !(self.region.side_m > 0.0 && self.region.side_m.is_finite()) {
            errors.push(FieldError::new("sim.region.side_m", "must be positive"));
        }
        self.bs_antenna.validate("sim.bs_antenna", errors);
        self.ue_antenna.validate("sim.ue_antenna", errors);
        self.channel.validate("sim.channel", errors);
        self.rate_model.validate("sim.rate_model", errors);
        if !(self.bootstrap.level > 0.0 && self.bootstrap.level < 1.0) {
            errors.push(FieldError::new("sim.bootstrap.level", "must lie in (0, 1)"));
        }
        if self.bootstrap.resamples == 0 {
            errors.push(FieldError::new("sim.bootstrap.resamples", "must be at least 1"));
        }
    }
}

/// One fully specified simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub regime: SharingRegime,
    pub operators: Vec<OperatorConfig>,
    #[serde(default)]
    pub sim: SimSettings,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.operators.is_empty() {
            errors.push(FieldError::new("operators", "at least one operator is required"));
        }
        for (i, op) in self.operators.iter().enumerate() {
            for (name, v) in [
                ("bandwidth_hz", op.bandwidth_hz),
                ("bs_per_km2", op.bs_per_km2),
                ("ue_per_km2", op.ue_per_km2),
            ] {
                if !(v >= 0.0 && v.is_finite()) {
                    errors.push(FieldError::new(
                        format!("operators[{i}].{name}"),
                        format!("must be finite and nonnegative, got {v}"),
                    ));
                }
            }
        }
        self.sim.validate(&mut errors);
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(errors))
        }
    }

    pub fn streams(&self) -> Streams {
        Streams::new(self.sim.seed)
    }
}

/// Class of a UE's serving link, or `Outside` when it has no admissible BS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServingLink {
    Los,
    Nlos,
    Outage,
    Outside,
}

impl ServingLink {
    pub fn as_str(self) -> &'static str {
        match self {
            ServingLink::Los => "los",
            ServingLink::Nlos => "nlos",
            ServingLink::Outage => "outage",
            ServingLink::Outside => "outside",
        }
    }
}

impl From<LinkClass> for ServingLink {
    fn from(c: LinkClass) -> Self {
        match c {
            LinkClass::Los => ServingLink::Los,
            LinkClass::Nlos => ServingLink::Nlos,
            LinkClass::Outage => ServingLink::Outage,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UeRate {
    pub drop: u32,
    /// 0-based operator index.
    pub operator: u16,
    /// Index of the UE within its drop.
    pub ue_index: u32,
    pub rate_bps: f64,
    pub link: ServingLink,
}

/// Per-UE long-run rates pooled over drops. Outage and unserved UEs are
/// kept as zero-rate samples.
#[derive(Debug, Clone, PartialEq)]
pub struct RateDistribution {
    pub regime: SharingRegime,
    pub drops: usize,
    pub samples: Vec<UeRate>,
}

impl RateDistribution {
    pub fn rates(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.rate_bps).collect()
    }

    pub fn operator_rates(&self, operator: usize) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| usize::from(s.operator) == operator)
            .map(|s| s.rate_bps)
            .collect()
    }

    pub fn fifth_percentile(&self) -> Result<f64> {
        stats::fifth_percentile(&self.rates())
    }
}

/// Samples a drop's deployment and slow link states from its own substreams.
pub fn prepare_drop(scenario: &Scenario, streams: &Streams, drop: u64) -> Result<(Deployment, DropLinks)> {
    let intensities: Vec<(f64, f64)> = scenario
        .operators
        .iter()
        .map(|o| (o.bs_per_km2, o.ue_per_km2))
        .collect();
    let mut geo = streams.drop_stream(drop, DropStream::Geometry);
    let deployment = Deployment::sample(scenario.sim.region, &intensities, &mut geo)?;
    let mut shadow = streams.drop_stream(drop, DropStream::Shadowing);
    let links = DropLinks::draw(&deployment, &scenario.sim.channel, &mut shadow)?;
    Ok((deployment, links))
}

/// Runs every drop (in parallel when `exec` allows) and pools the per-UE rates
/// in drop order.
pub fn simulate(scenario: &Scenario, exec: Execution) -> Result<RateDistribution> {
    scenario.validate()?;
    let streams = scenario.streams();
    let per_drop = exec.try_map_indexed(scenario.sim.drops, |d| -> Result<Vec<UeRate>> {
        let (deployment, links) = prepare_drop(scenario, &streams, d as u64)?;
        let out = run_drop(&deployment, &links, scenario, &streams, d as u64);
        Ok(deployment
            .ue
            .iter()
            .enumerate()
            .map(|(u, site)| UeRate {
                drop: d as u32,
                operator: site.operator as u16,
                ue_index: u as u32,
                rate_bps: out.rates[u],
                link: out.serving[u],
            })
            .collect())
    })?;
    Ok(RateDistribution {
        regime: scenario.regime,
        drops: scenario.sim.drops,
        samples: per_drop.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateSummary {
    pub count: usize,
    pub fifth_percentile_bps: f64,
    pub ci_lo_bps: f64,
    pub ci_hi_bps: f64,
    pub mean_bps: f64,
    pub zero_rate_fraction: f64,
}

/// Bootstrap domain used for rate summaries.
pub const SUMMARY_BOOTSTRAP_DOMAIN: u16 = 1;

pub fn summarize(rates: &[f64], spec: BootstrapSpec, streams: &Streams, exec: Execution) -> Result<RateSummary> {
    let p5 = stats::fifth_percentile(rates)?;
    let (lo, hi) = stats::bootstrap_ci(
        rates,
        |s| stats::nearest_rank_in_place(s, 0.05).unwrap_or(f64::NAN),
        spec,
        streams,
        SUMMARY_BOOTSTRAP_DOMAIN,
        exec,
    )?;
    Ok(RateSummary {
        count: rates.len(),
        fifth_percentile_bps: p5,
        ci_lo_bps: lo,
        ci_hi_bps: hi,
        mean_bps: stats::mean(rates),
        zero_rate_fraction: rates.iter().filter(|&&r| r == 0.0).count() as f64 / rates.len() as f64,
    })
}
