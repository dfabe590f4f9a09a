//! Vertically differentiated duopoly with network effects, with and without
//! resource sharing, plus the monopoly benchmark.
//!
//! Consumers have types uniform on `[0, ω̂]`; a type-`ω` consumer buying from
//! firm `i` gets `ω q_i + μ q_i ñ_i − p_i`, where `ñ_i` is the firm's own share
//! or, when the firms share resources, the combined share. Both firms have
//! marginal cost equal to their quality.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub q_hat: f64,
    pub omega_hat: f64,
    pub mu: f64,
}

impl GameParams {
    pub fn new(q_hat: f64, omega_hat: f64, mu: f64) -> Result<Self> {
        let p = Self { q_hat, omega_hat, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { q_hat, omega_hat, mu } = *self;
        if !(q_hat > 0.0 && q_hat.is_finite()) {
            return Err(Error::Infeasible(format!("max quality must be positive, got {q_hat}")));
        }
        if !(omega_hat > 1.0 && omega_hat.is_finite()) {
            return Err(Error::Infeasible(format!("type scale must exceed 1, got {omega_hat}")));
        }
        if !(mu >= 0.0 && mu < 1.0_f64.min(omega_hat / 2.0)) {
            return Err(Error::Infeasible(format!(
                "network intensity {mu} outside [0, min(1, {}))",
                omega_hat / 2.0
            )));
        }
        Ok(())
    }
}

/// Marginal consumer types and market shares for given qualities and prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketOutcome {
    /// Type indifferent between the two firms.
    pub omega_bar: f64,
    /// Type indifferent between firm 2 and not buying.
    pub omega_under: f64,
    pub n1: f64,
    pub n2: f64,
    /// `0 < ω̲ < ω̄ < ω̂`.
    pub interior: bool,
}

fn share_system(q1: f64, q2: f64, p1: f64, p2: f64, params: &GameParams, compatible: bool) -> (Matrix4<f64>, Vector4<f64>) {
    let GameParams { omega_hat: w, mu, .. } = *params;
    let dq = q1 - q2;
    #[rustfmt::skip]
    let a = if compatible {
        Matrix4::new(
            dq,   0.0, mu * dq, mu * dq,
            0.0,  q2,  mu * q2, mu * q2,
            1.0,  0.0, w,       0.0,
            -1.0, 1.0, 0.0,     w,
        )
    } else {
        Matrix4::new(
            dq,   0.0, mu * q1, -mu * q2,
            0.0,  q2,  0.0,     mu * q2,
            1.0,  0.0, w,       0.0,
            -1.0, 1.0, 0.0,     w,
        )
    };
    (a, Vector4::new(p1 - p2, p2, w, 0.0))
}

/// Solves the marginal-consumer and share equations as one linear system.
///
/// The result is returned as solved; `interior` tells whether it describes a
/// market in which both firms sell.
pub fn solve_shares(q1: f64, q2: f64, p1: f64, p2: f64, params: &GameParams, compatible: bool) -> Result<MarketOutcome> {
    if !(q1 > q2 && q2 > 0.0) {
        return Err(Error::param("q", format!("need q1 > q2 > 0, got q1={q1}, q2={q2}")));
    }
    let (a, b) = share_system(q1, q2, p1, p2, params, compatible);
    let x = a
        .lu()
        .solve(&b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular(format!("q1={q1}, q2={q2}, params={params:?}")))?;
    let (omega_bar, omega_under) = (x[0], x[1]);
    Ok(MarketOutcome {
        omega_bar,
        omega_under,
        n1: x[2],
        n2: x[3],
        interior: 0.0 < omega_under && omega_under < omega_bar && omega_bar < params.omega_hat,
    })
}

/// Residuals of the four defining equations at `m`.
pub fn share_residuals(q1: f64, q2: f64, p1: f64, p2: f64, params: &GameParams, compatible: bool, m: &MarketOutcome) -> [f64; 4] {
    let (a, b) = share_system(q1, q2, p1, p2, params, compatible);
    let r = a * Vector4::new(m.omega_bar, m.omega_under, m.n1, m.n2) - b;
    [r[0], r[1], r[2], r[3]]
}

/// Share of a firm selling alone at quality `q` and price `p`, in `[0, 1]`.
pub fn solo_share(q: f64, p: f64, params: &GameParams) -> f64 {
    let w = params.omega_hat;
    ((w * q - p) / (q * (w - params.mu))).clamp(0.0, 1.0)
}

/// Shares `(n1, n2)` including the corners the linear system does not describe:
/// one firm priced out, or the market fully covered.
pub fn demand(q1: f64, q2: f64, p1: f64, p2: f64, params: &GameParams, compatible: bool) -> Result<(f64, f64)> {
    let m = solve_shares(q1, q2, p1, p2, params, compatible)?;
    if m.interior {
        return Ok((m.n1, m.n2));
    }
    if m.n2 <= 0.0 || m.omega_under >= m.omega_bar {
        return Ok((solo_share(q1, p1, params), 0.0));
    }
    if m.n1 <= 0.0 || m.omega_bar >= params.omega_hat {
        return Ok((0.0, solo_share(q2, p2, params)));
    }
    // Everyone buys: ω̲ pinned at 0 and n2 = 1 − n1.
    let GameParams { omega_hat: w, mu, .. } = *params;
    let dq = q1 - q2;
    let n1 = if compatible {
        1.0 - (p1 - p2 - mu * dq) / (w * dq)
    } else {
        (w * dq - mu * q2 - (p1 - p2)) / (w * dq - mu * (q1 + q2))
    }
    .clamp(0.0, 1.0);
    Ok((n1, 1.0 - n1))
}

/// `q1 / q2 > ω̂² / ((ω̂ − μ)(ω̂ − 2μ))`: the price stage has a unique
/// equilibrium with both prices above cost.
pub fn check_uniqueness(q1: f64, q2: f64, params: &GameParams) -> Result<bool> {
    let GameParams { omega_hat: w, mu, .. } = *params;
    if mu >= w / 2.0 {
        return Err(Error::Infeasible(format!("network intensity {mu} must be below {}", w / 2.0)));
    }
    if !(q2 > 0.0) {
        return Err(Error::param("q2", "must be positive"));
    }
    Ok(q1 / q2 > uniqueness_threshold(params))
}

pub fn uniqueness_threshold(params: &GameParams) -> f64 {
    let GameParams { omega_hat: w, mu, .. } = *params;
    w * w / ((w - mu) * (w - 2.0 * mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameRegime {
    NoSharing,
    Sharing,
    Monopoly,
}

impl GameRegime {
    pub const ALL: [GameRegime; 3] = [GameRegime::NoSharing, GameRegime::Sharing, GameRegime::Monopoly];

    pub fn as_str(self) -> &'static str {
        match self {
            GameRegime::NoSharing => "no_sharing",
            GameRegime::Sharing => "sharing",
            GameRegime::Monopoly => "monopoly",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DuopolyEquilibrium {
    pub regime: GameRegime,
    pub params: GameParams,
    pub q1: f64,
    /// Zero under monopoly.
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
    pub market: MarketOutcome,
    pub profit1: f64,
    pub profit2: f64,
    /// Uniqueness condition on the quality ratio; always true for a monopoly.
    pub unique: bool,
}

impl DuopolyEquilibrium {
    pub fn coverage(&self) -> f64 {
        self.market.n1 + self.market.n2
    }

    fn duopoly(regime: GameRegime, params: GameParams, q2: f64, p1: f64, p2: f64) -> Result<Self> {
        let q1 = params.q_hat;
        let compatible = regime == GameRegime::Sharing;
        let market = solve_shares(q1, q2, p1, p2, &params, compatible)?;
        Ok(Self {
            regime,
            params,
            q1,
            q2,
            p1,
            p2,
            market,
            profit1: market.n1 * (p1 - q1),
            profit2: market.n2 * (p2 - q2),
            unique: check_uniqueness(q1, q2, &params)?,
        })
    }
}

pub fn no_sharing_quality(params: &GameParams) -> f64 {
    let GameParams { q_hat, omega_hat: w, mu } = *params;
    let root = (3.0 * (3.0 * w * w + 28.0 * w * mu - 20.0 * mu * mu)).sqrt();
    q_hat * (w - mu).powi(2) * (11.0 * w - 10.0 * mu - root) / (2.0 * w * w * (7.0 * w - 5.0 * mu))
}

pub fn no_sharing_prices(q1: f64, q2: f64, params: &GameParams) -> (f64, f64) {
    let GameParams { omega_hat: w, mu, .. } = *params;
    let d = 4.0 * q1 * (w - mu).powi(2) - q2 * w * w;
    let p1 = q1 * (1.0 + (w - 1.0) * (2.0 * q1 * (w - mu).powi(2) - q2 * w * (2.0 * w - mu)) / d);
    let p2 = q2 * (1.0 + (w - 1.0) * (q1 * (w - mu) * (w - 2.0 * mu) - q2 * w * w) / d);
    (p1, p2)
}

pub fn sharing_quality(params: &GameParams) -> f64 {
    let GameParams { q_hat, omega_hat: w, mu } = *params;
    q_hat * (4.0 * w - 3.0 * mu) / (7.0 * w - 6.0 * mu)
}

pub fn sharing_prices(q1: f64, q2: f64, params: &GameParams) -> (f64, f64) {
    let GameParams { omega_hat: w, mu, .. } = *params;
    let d = (4.0 * w - 3.0 * mu) * q1 - w * q2;
    let markup = w * (w - 1.0) * (q1 - q2) / d;
    (q1 * (1.0 + 2.0 * markup), q2 * (1.0 + markup))
}

pub fn equilibrium_no_sharing(params: &GameParams) -> Result<DuopolyEquilibrium> {
    params.validate()?;
    let q2 = no_sharing_quality(params);
    let (p1, p2) = no_sharing_prices(params.q_hat, q2, params);
    DuopolyEquilibrium::duopoly(GameRegime::NoSharing, *params, q2, p1, p2)
}

pub fn equilibrium_sharing(params: &GameParams) -> Result<DuopolyEquilibrium> {
    params.validate()?;
    let q2 = sharing_quality(params);
    let (p1, p2) = sharing_prices(params.q_hat, q2, params);
    DuopolyEquilibrium::duopoly(GameRegime::Sharing, *params, q2, p1, p2)
}

pub fn equilibrium_monopoly(params: &GameParams) -> Result<DuopolyEquilibrium> {
    params.validate()?;
    let GameParams { q_hat: q1, omega_hat: w, mu } = *params;
    let p1 = q1 * (w - 1.0) / 2.0;
    let n1 = (w * q1 - p1) / (q1 * (w - mu));
    let omega_bar = w * (1.0 - n1);
    Ok(DuopolyEquilibrium {
        regime: GameRegime::Monopoly,
        params: *params,
        q1,
        q2: 0.0,
        p1,
        p2: 0.0,
        market: MarketOutcome {
            omega_bar,
            omega_under: omega_bar,
            n1,
            n2: 0.0,
            interior: 0.0 < omega_bar && omega_bar < w,
        },
        profit1: n1 * (p1 - q1),
        profit2: 0.0,
        unique: true,
    })
}

pub fn equilibrium(regime: GameRegime, params: &GameParams) -> Result<DuopolyEquilibrium> {
    match regime {
        GameRegime::NoSharing => equilibrium_no_sharing(params),
        GameRegime::Sharing => equilibrium_sharing(params),
        GameRegime::Monopoly => equilibrium_monopoly(params),
    }
}

/// Largest profit gain either firm can get by moving its own price within
/// `±rel` of the equilibrium price on a `2 * steps + 1` point grid.
pub fn max_deviation_gain(eq: &DuopolyEquilibrium, rel: f64, steps: usize) -> Result<(f64, f64)> {
    if eq.regime == GameRegime::Monopoly {
        return Err(Error::param("regime", "deviation check needs two firms"));
    }
    let compatible = eq.regime == GameRegime::Sharing;
    let (q1, q2) = (eq.q1, eq.q2);
    let base = demand(q1, q2, eq.p1, eq.p2, &eq.params, compatible)?;
    let base = (base.0 * (eq.p1 - q1), base.1 * (eq.p2 - q2));
    let mut gain = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for k in 0..=2 * steps {
        let f = 1.0 - rel + rel * k as f64 / steps as f64;
        let (n1, _) = demand(q1, q2, eq.p1 * f, eq.p2, &eq.params, compatible)?;
        gain.0 = gain.0.max(n1 * (eq.p1 * f - q1) - base.0);
        let (_, n2) = demand(q1, q2, eq.p1, eq.p2 * f, &eq.params, compatible)?;
        gain.1 = gain.1.max(n2 * (eq.p2 * f - q2) - base.1);
    }
    Ok(gain)
}

/// Evenly spaced grid from `start` to `end` inclusive, rounded to 10 decimals.
pub fn axis(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && end >= start && start.is_finite() && end.is_finite()) {
        return Err(Error::param("axis", format!("bad range {start}..{end} step {step}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((start + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

/// One `(ω̂, μ)` cell of a sweep: the three equilibria, or why there are none.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub omega_hat: f64,
    pub mu: f64,
    pub equilibria: Vec<DuopolyEquilibrium>,
    pub infeasible: Option<String>,
}

impl SweepCell {
    pub fn get(&self, regime: GameRegime) -> Option<&DuopolyEquilibrium> {
        self.equilibria.iter().find(|e| e.regime == regime)
    }
}

/// Evaluates every `(μ, ω̂)` cell, `μ` outermost.
pub fn sweep(q_hat: f64, omega_hats: &[f64], mus: &[f64], exec: Execution) -> Result<Vec<SweepCell>> {
    if omega_hats.is_empty() || mus.is_empty() {
        return Err(Error::Empty("sweep grid"));
    }
    let n_w = omega_hats.len();
    exec.try_map_indexed(n_w * mus.len(), |i| {
        let (mu, omega_hat) = (mus[i / n_w], omega_hats[i % n_w]);
        let params = GameParams { q_hat, omega_hat, mu };
        let mut cell = SweepCell {
            omega_hat,
            mu,
            equilibria: Vec::new(),
            infeasible: None,
        };
        if let Err(e) = params.validate() {
            cell.infeasible = Some(e.to_string());
            return Ok(cell);
        }
        for regime in GameRegime::ALL {
            cell.equilibria.push(equilibrium(regime, &params)?);
        }
        Ok(cell)
    })
}
