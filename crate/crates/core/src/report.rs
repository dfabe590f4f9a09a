//! Deterministic CSV and JSON renderings of every result type.
//!
//! CSV files open with a `#` comment line carrying the config hash and seed.
//! JSON documents carry the same line as their leading `header` field.

use std::fmt::Write;

use serde::Serialize;

use crate::demand::{DemandCurve, EquilibriumSet};
use crate::duopoly::{GameRegime, SweepCell};
use crate::externality::ExternalityCurve;
use crate::sim::{RateDistribution, RateSummary, SharingRegime};

/// Identity of a run, stamped on everything it writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Stamp {
    pub config_hash: String,
    pub seed: u64,
}

impl Stamp {
    pub fn header_line(&self) -> String {
        format!("config_hash={} seed={}", self.config_hash, self.seed)
    }

    fn csv(&self, columns: &str) -> String {
        format!("# {}\n{columns}\n", self.header_line())
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report values serialize");
    s.push('\n');
    s
}

/// One row per UE; operators are numbered from 1.
pub fn rates_csv(stamp: &Stamp, dist: &RateDistribution) -> String {
    let mut out = stamp.csv("drop,operator,ue_index,rate_bps,link_class");
    for s in &dist.samples {
        writeln!(out, "{},{},{},{},{}", s.drop, s.operator + 1, s.ue_index, s.rate_bps, s.link.as_str()).unwrap();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct OperatorSummary {
    /// Numbered from 1.
    pub operator: usize,
    #[serde(flatten)]
    pub summary: RateSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeSummary {
    pub regime: SharingRegime,
    #[serde(flatten)]
    pub summary: RateSummary,
    pub operators: Vec<OperatorSummary>,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    header: String,
    config_hash: &'a str,
    seed: u64,
    name: &'a str,
    ci_level: f64,
    regimes: &'a [RegimeSummary],
}

pub fn summary_json(stamp: &Stamp, name: &str, ci_level: f64, regimes: &[RegimeSummary]) -> String {
    json(&SummaryDoc {
        header: stamp.header_line(),
        config_hash: &stamp.config_hash,
        seed: stamp.seed,
        name,
        ci_level,
        regimes,
    })
}

pub fn curves_csv(stamp: &Stamp, curves: &[ExternalityCurve]) -> String {
    let mut out = stamp.csv("scenario,n,h,ci_lo,ci_hi,raw_rate_bps");
    for c in curves {
        // The synthetic zero-network origin is implied, not written.
        for p in c.points.iter().filter(|p| p.n > 0.0) {
            writeln!(out, "{},{},{},{},{},{}", c.scenario.as_str(), p.n, p.h, p.ci_lo, p.ci_hi, p.raw_rate_bps).unwrap();
        }
    }
    out
}

#[derive(Serialize)]
struct CurveMeta<'a> {
    scenario: &'a str,
    normalizer_bps: f64,
    slope: Option<f64>,
    slope_from: f64,
}

#[derive(Serialize)]
struct CurvesDoc<'a> {
    header: String,
    config_hash: &'a str,
    seed: u64,
    curves: Vec<CurveMeta<'a>>,
}

/// Normalization constant and fitted slope per curve.
pub fn curves_meta_json(stamp: &Stamp, curves: &[ExternalityCurve], slopes: &[(f64, Option<f64>)]) -> String {
    json(&CurvesDoc {
        header: stamp.header_line(),
        config_hash: &stamp.config_hash,
        seed: stamp.seed,
        curves: curves
            .iter()
            .zip(slopes)
            .map(|(c, &(from, slope))| CurveMeta {
                scenario: c.scenario.as_str(),
                normalizer_bps: c.normalizer_bps,
                slope,
                slope_from: from,
            })
            .collect(),
    })
}

pub fn demand_csv(stamp: &Stamp, curve: &DemandCurve) -> String {
    let mut out = stamp.csv("n,p,revenue");
    for p in &curve.points {
        writeln!(out, "{},{},{}", p.n, p.p, p.revenue).unwrap();
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioEquilibria {
    pub scenario: String,
    pub omega_hat: f64,
    pub critical_mass: f64,
    pub critical_mass_grid: f64,
    pub by_cost: Vec<EquilibriumSet>,
}

#[derive(Serialize)]
struct EquilibriaDoc<'a> {
    header: String,
    config_hash: &'a str,
    seed: u64,
    scenarios: &'a [ScenarioEquilibria],
}

pub fn equilibria_json(stamp: &Stamp, scenarios: &[ScenarioEquilibria]) -> String {
    json(&EquilibriaDoc {
        header: stamp.header_line(),
        config_hash: &stamp.config_hash,
        seed: stamp.seed,
        scenarios,
    })
}

/// Three rows per feasible cell (one per regime), one `infeasible` row otherwise.
pub fn sweep_csv(stamp: &Stamp, cells: &[SweepCell]) -> String {
    let mut out = stamp.csv("omega_hat,mu,regime,q2,p1,p2,n1,n2,coverage,profit1,profit2,uniqueness_flag,interior_flag");
    for c in cells {
        if c.equilibria.is_empty() {
            writeln!(out, "{},{},infeasible,,,,,,,,,false,false", c.omega_hat, c.mu).unwrap();
            continue;
        }
        for regime in GameRegime::ALL {
            let Some(e) = c.get(regime) else { continue };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.omega_hat,
                c.mu,
                regime.as_str(),
                e.q2,
                e.p1,
                e.p2,
                e.market.n1,
                e.market.n2,
                e.coverage(),
                e.profit1,
                e.profit2,
                e.unique,
                e.market.interior
            )
            .unwrap();
        }
    }
    out
}
