//! Empirical network externality `h(n)`: fifth-percentile rate as a function
//! of network size under three ways of scaling resources with the network.

use serde::{Deserialize, Serialize};

use crate::demand::{Externality, Interpolated};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sim::{self, OperatorConfig, Scenario, SharingRegime, SimSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenResourceScenario {
    /// BSs and spectrum both grow with the network.
    NoOpen,
    /// BSs are open to everyone; spectrum grows with the network.
    OpenBs,
    /// Spectrum is open to everyone; BSs grow with the network.
    OpenSpectrum,
}

impl OpenResourceScenario {
    pub const ALL: [OpenResourceScenario; 3] = [
        OpenResourceScenario::NoOpen,
        OpenResourceScenario::OpenBs,
        OpenResourceScenario::OpenSpectrum,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OpenResourceScenario::NoOpen => "no_open",
            OpenResourceScenario::OpenBs => "open_bs",
            OpenResourceScenario::OpenSpectrum => "open_spectrum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.as_str() == s)
    }

    /// Lower end of the region used to fit each scenario's slope.
    pub fn default_fit_from(self) -> f64 {
        match self {
            OpenResourceScenario::NoOpen => 0.25,
            OpenResourceScenario::OpenBs => 0.35,
            OpenResourceScenario::OpenSpectrum => 0.45,
        }
    }
}

/// Resources of a network that owns everything.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceCaps {
    pub bs_per_km2: f64,
    pub bandwidth_hz: f64,
    pub ue_per_km2: f64,
}

impl Default for ResourceCaps {
    fn default() -> Self {
        Self {
            bs_per_km2: 100.0,
            bandwidth_hz: 1e9,
            ue_per_km2: 500.0,
        }
    }
}

impl ResourceCaps {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("bs_per_km2", self.bs_per_km2),
            ("bandwidth_hz", self.bandwidth_hz),
            ("ue_per_km2", self.ue_per_km2),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter {
                    name,
                    reason: format!("cap must be positive, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Resources available to a network of size `n`, as a one-operator config.
///
/// With a non-empty `coalition`, the shared dimensions scale with the
/// coalition's total size instead of `n`.
pub fn scenario_resources(n: f64, scenario: OpenResourceScenario, caps: &ResourceCaps, coalition: &[f64]) -> Result<OperatorConfig> {
    if !(0.0..=1.0).contains(&n) {
        return Err(Error::param("n", format!("network size must lie in [0, 1], got {n}")));
    }
    let pooled = if coalition.is_empty() {
        n
    } else {
        coalition.iter().sum()
    };
    if coalition.iter().any(|c| !(*c >= 0.0)) || pooled > 1.0 + 1e-12 {
        return Err(Error::param("coalition", format!("sizes must be nonnegative with sum <= 1, got {coalition:?}")));
    }
    let (bs, w) = match scenario {
        OpenResourceScenario::NoOpen => (pooled, pooled),
        OpenResourceScenario::OpenBs => (1.0, pooled),
        OpenResourceScenario::OpenSpectrum => (pooled, 1.0),
    };
    Ok(OperatorConfig {
        bs_per_km2: bs * caps.bs_per_km2,
        bandwidth_hz: w * caps.bandwidth_hz,
        ue_per_km2: n * caps.ue_per_km2,
    })
}

/// Simulated fifth-percentile rate at one network size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawPoint {
    pub n: f64,
    pub rate_bps: f64,
    pub ci_lo_bps: f64,
    pub ci_hi_bps: f64,
}

impl RawPoint {
    pub fn zero(n: f64) -> Self {
        Self {
            n,
            rate_bps: 0.0,
            ci_lo_bps: 0.0,
            ci_hi_bps: 0.0,
        }
    }
}

/// Size at which the open-BS curve is evaluated in place of `n = 0`.
pub const OPEN_BS_ORIGIN: f64 = 0.01;

/// The scenario that the network `n` runs.
pub fn point_scenario(scenario: OpenResourceScenario, n: f64, caps: &ResourceCaps, sim: &SimSettings) -> Result<Scenario> {
    Ok(Scenario {
        regime: SharingRegime::NoSharing,
        operators: vec![scenario_resources(n, scenario, caps, &[])?],
        sim: sim.clone(),
    })
}

pub fn simulate_point(scenario: OpenResourceScenario, n: f64, caps: &ResourceCaps, sim: &SimSettings, exec: Execution) -> Result<RawPoint> {
    let sc = point_scenario(scenario, n, caps, sim)?;
    let dist = sim::simulate(&sc, exec)?;
    let summary = sim::summarize(&dist.rates(), sim.bootstrap, &sc.streams(), exec)?;
    Ok(RawPoint {
        n,
        rate_bps: summary.fifth_percentile_bps,
        ci_lo_bps: summary.ci_lo_bps,
        ci_hi_bps: summary.ci_hi_bps,
    })
}

/// Where the curve starts: zero for an empty network, or the open-BS value
/// at a tiny network.
pub fn origin_size(scenario: OpenResourceScenario) -> Option<f64> {
    (scenario == OpenResourceScenario::OpenBs).then_some(OPEN_BS_ORIGIN)
}

/// Default size grid: step 0.025 up to 0.3, then step 0.05 up to 1.
pub fn default_grid() -> Vec<f64> {
    let fine = (2..=12).map(|i| i as f64 * 0.025);
    let coarse = (7..=20).map(|i| i as f64 * 0.05);
    fine.chain(coarse).map(|v| (v * 1e10).round() / 1e10).collect()
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Empty("network-size grid"));
    }
    if grid.iter().any(|&n| !(n > 0.0 && n <= 1.0)) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("grid", "sizes must be strictly increasing within (0, 1]"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: f64,
    pub h: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub raw_rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalityCurve {
    pub scenario: OpenResourceScenario,
    /// Rate that maps to `h = 1`.
    pub normalizer_bps: f64,
    pub points: Vec<CurvePoint>,
}

impl ExternalityCurve {
    /// Normalizes raw points (origin first if present) by `normalizer_bps`.
    pub fn from_raw(scenario: OpenResourceScenario, raw: &[RawPoint], normalizer_bps: f64) -> Result<Self> {
        if !(normalizer_bps > 0.0 && normalizer_bps.is_finite()) {
            return Err(Error::Infeasible(format!(
                "baseline fifth-percentile rate is {normalizer_bps}; cannot normalize"
            )));
        }
        let points: Vec<CurvePoint> = raw
            .iter()
            .map(|r| CurvePoint {
                n: r.n,
                h: r.rate_bps / normalizer_bps,
                ci_lo: r.ci_lo_bps / normalizer_bps,
                ci_hi: r.ci_hi_bps / normalizer_bps,
                raw_rate_bps: r.rate_bps,
            })
            .collect();
        if points.windows(2).any(|w| !(w[1].n > w[0].n)) {
            return Err(Error::param("n", "curve sizes must be strictly increasing"));
        }
        Ok(Self {
            scenario,
            normalizer_bps,
            points,
        })
    }

    pub fn interpolant(&self) -> Result<Interpolated> {
        Interpolated::new(self.points.iter().map(|p| (p.n, p.h)))
    }

    pub fn at(&self, n: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| (p.n - n).abs() < 1e-12)
    }
}

impl Externality for ExternalityCurve {
    fn h(&self, n: f64) -> f64 {
        // Rebuilt per call; callers evaluating many points should use `interpolant`.
        self.interpolant().map(|i| i.h(n)).unwrap_or(0.0)
    }
}

/// Raw curve for one scenario on `grid`, with its origin point first.
pub fn raw_curve(scenario: OpenResourceScenario, caps: &ResourceCaps, grid: &[f64], sim: &SimSettings, exec: Execution) -> Result<Vec<RawPoint>> {
    validate_grid(grid)?;
    let mut out = Vec::with_capacity(grid.len() + 1);
    out.push(match origin_size(scenario) {
        Some(eps) => simulate_point(scenario, eps, caps, sim, exec)?,
        None => RawPoint::zero(0.0),
    });
    for &n in grid {
        out.push(simulate_point(scenario, n, caps, sim, exec)?);
    }
    Ok(out)
}

/// Estimates `h` for each scenario, normalized by the no-open network at full size.
pub fn estimate_h(
    scenarios: &[OpenResourceScenario],
    caps: &ResourceCaps,
    grid: &[f64],
    sim: &SimSettings,
    exec: Execution,
) -> Result<Vec<ExternalityCurve>> {
    caps.validate()?;
    let baseline = simulate_point(OpenResourceScenario::NoOpen, 1.0, caps, sim, exec)?;
    scenarios
        .iter()
        .map(|&s| ExternalityCurve::from_raw(s, &raw_curve(s, caps, grid, sim, exec)?, baseline.rate_bps))
        .collect()
}

/// Least-squares slope of `h` over points with `n >= n_min`.
pub fn fit_slope(curve: &ExternalityCurve, n_min: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve
        .points
        .iter()
        .filter(|p| p.n >= n_min - 1e-12)
        .map(|p| (p.n, p.h))
        .collect();
    if pts.len() < 2 {
        return Err(Error::param("n_min", format!("need two points at or above {n_min}, have {}", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
