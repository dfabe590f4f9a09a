//! Fulfilled-expectations demand, critical mass and competitive equilibria for
//! a network good with uniformly distributed consumer types on `[0, ω̂]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Root and argmax tolerance in `n`.
pub const N_TOL: f64 = 1e-10;

/// Default number of grid intervals used to bracket roots and the maximum.
pub const DEFAULT_GRID_INTERVALS: usize = 1000;

/// A network-externality function `h` on `[0, 1]`.
pub trait Externality {
    fn h(&self, n: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Externality for F {
    fn h(&self, n: f64) -> f64 {
        self(n)
    }
}

/// `h(n) = n`, the self-test externality.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LinearExternality;

impl Externality for LinearExternality {
    fn h(&self, n: f64) -> f64 {
        n
    }
}

/// Piecewise-linear interpolant through sampled `(n, h)` points.
///
/// Outside the sampled range the end values are held constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolated {
    n: Vec<f64>,
    h: Vec<f64>,
}

impl Interpolated {
    pub fn new(points: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let (n, h): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
        if n.is_empty() {
            return Err(Error::Empty("externality samples"));
        }
        if n.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("n", "grid must be strictly increasing"));
        }
        if h.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("h", "values must be finite and nonnegative"));
        }
        Ok(Self { n, h })
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.n.iter().copied().zip(self.h.iter().copied())
    }
}

impl Externality for Interpolated {
    fn h(&self, x: f64) -> f64 {
        let k = self.n.partition_point(|&v| v <= x);
        if k == 0 {
            return self.h[0];
        }
        if k == self.n.len() {
            return self.h[k - 1];
        }
        let (x0, x1) = (self.n[k - 1], self.n[k]);
        let t = (x - x0) / (x1 - x0);
        self.h[k - 1] + t * (self.h[k] - self.h[k - 1])
    }
}

/// Utility of a type-`omega` consumer buying at `price` when the network has size `n`.
pub fn surplus(omega: f64, n: f64, price: f64, h: &impl Externality) -> f64 {
    omega * h.h(n) - price
}

/// `p(n; n) = ω̂ (1 − n) h(n)`: the price at which exactly a fraction `n`
/// buys when everyone expects the network to have size `n`.
pub fn fe_price(h: &impl Externality, omega_hat: f64, n: f64) -> f64 {
    omega_hat * (1.0 - n) * h.h(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandPoint {
    pub n: f64,
    pub p: f64,
    pub revenue: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandCurve {
    pub omega_hat: f64,
    pub points: Vec<DemandPoint>,
}

/// Tabulates demand and revenue on `intervals + 1` evenly spaced sizes.
pub fn fe_demand(h: &impl Externality, omega_hat: f64, intervals: usize) -> Result<DemandCurve> {
    check_omega_hat(omega_hat)?;
    if intervals == 0 {
        return Err(Error::param("intervals", "must be positive"));
    }
    let points = (0..=intervals)
        .map(|i| {
            let n = i as f64 / intervals as f64;
            let p = fe_price(h, omega_hat, n);
            DemandPoint { n, p, revenue: n * p }
        })
        .collect();
    Ok(DemandCurve { omega_hat, points })
}

fn check_omega_hat(omega_hat: f64) -> Result<()> {
    if omega_hat > 0.0 && omega_hat.is_finite() {
        Ok(())
    } else {
        Err(Error::Infeasible(format!("type scale must be positive, got {omega_hat}")))
    }
}

/// Golden-section maximization of a function unimodal on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > N_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    (a + b) / 2.0
}

/// Grid argmax of `f` on `[0, 1]` (smallest index on ties), refined by
/// golden-section search over the neighbouring intervals.
fn argmax_refined(f: impl Fn(f64) -> f64, intervals: usize) -> (f64, f64) {
    let at = |i: usize| i as f64 / intervals as f64;
    let mut best = 0;
    let mut best_v = f(0.0);
    for i in 1..=intervals {
        let v = f(at(i));
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    let lo = at(best.saturating_sub(1));
    let hi = at((best + 1).min(intervals));
    let x = golden_max(&f, lo, hi);
    if f(x) > best_v {
        (x, f(x))
    } else {
        (at(best), best_v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalMass {
    /// Best size on the tabulation grid.
    pub grid_n: f64,
    pub n: f64,
    pub price: f64,
}

/// Size maximizing `p(n; n)`.
pub fn critical_mass(h: &impl Externality, omega_hat: f64, intervals: usize) -> Result<CriticalMass> {
    check_omega_hat(omega_hat)?;
    let f = |n: f64| fe_price(h, omega_hat, n);
    let at = |i: usize| i as f64 / intervals as f64;
    let grid_n = (0..=intervals)
        .map(at)
        .fold((0.0, f(0.0)), |acc, n| if f(n) > acc.1 { (n, f(n)) } else { acc })
        .0;
    let (n, price) = argmax_refined(f, intervals);
    Ok(CriticalMass { grid_n, n, price })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub n: f64,
    pub stability: Stability,
}

/// Competitive equilibria at marginal cost `cost`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumSet {
    pub cost: f64,
    pub critical_mass: f64,
    pub max_price: f64,
    /// Unstable tipping point.
    pub tipping: Option<f64>,
    /// Largest stable size.
    pub upper: Option<f64>,
    pub equilibria: Vec<Equilibrium>,
    /// Size maximizing `n (p(n; n) − c)` for a single seller.
    pub monopoly_n: f64,
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    // invariant: f(lo) and f(hi) have opposite signs (f(lo) < 0 <= f(hi) or the reverse)
    let lo_neg = f(lo) < 0.0;
    while hi - lo > N_TOL {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Classifies the equilibria of a perfectly competitive market at cost `cost`.
///
/// Zero is always a stable equilibrium. When the cost is below the demand
/// peak, the first and last crossings of `p(n; n) = c` are the unstable
/// tipping point and the stable upper equilibrium.
pub fn equilibria(h: &impl Externality, omega_hat: f64, cost: f64, intervals: usize) -> Result<EquilibriumSet> {
    check_omega_hat(omega_hat)?;
    if !(cost >= 0.0 && cost.is_finite()) {
        return Err(Error::param("cost", format!("must be finite and nonnegative, got {cost}")));
    }
    let cm = critical_mass(h, omega_hat, intervals)?;
    let excess = |n: f64| fe_price(h, omega_hat, n) - cost;
    let (monopoly_n, _) = argmax_refined(|n| n * excess(n), intervals);
    let mut set = EquilibriumSet {
        cost,
        critical_mass: cm.n,
        max_price: cm.price,
        tipping: None,
        upper: None,
        equilibria: vec![Equilibrium {
            n: 0.0,
            stability: Stability::Stable,
        }],
        monopoly_n,
    };
    if cost > cm.price {
        return Ok(set);
    }
    if cost == cm.price && cost > 0.0 {
        set.tipping = Some(cm.n);
        set.upper = Some(cm.n);
        set.equilibria.push(Equilibrium {
            n: cm.n,
            stability: Stability::Stable,
        });
        return Ok(set);
    }

    let at = |i: usize| i as f64 / intervals as f64;
    let first = (0..=intervals).find(|&i| excess(at(i)) >= 0.0);
    let last = (0..=intervals).rev().find(|&i| excess(at(i)) >= 0.0);
    let (first, last) = match (first, last) {
        (Some(f), Some(l)) => (f, l),
        // The peak lies strictly between grid points: bracket around it.
        _ => {
            let tip = bisect(excess, at(((cm.n * intervals as f64).floor()) as usize), cm.n);
            let up = bisect(excess, cm.n, at(((cm.n * intervals as f64).ceil()) as usize));
            set.tipping = Some(tip);
            set.upper = Some(up);
            set.equilibria.push(Equilibrium {
                n: tip,
                stability: Stability::Unstable,
            });
            set.equilibria.push(Equilibrium {
                n: up,
                stability: Stability::Stable,
            });
            return Ok(set);
        }
    };
    let tip = if first == 0 {
        0.0
    } else {
        bisect(excess, at(first - 1), at(first))
    };
    let up = if last == intervals {
        1.0
    } else {
        bisect(excess, at(last), at(last + 1))
    };
    set.tipping = Some(tip);
    set.upper = Some(up);
    if tip > 0.0 {
        set.equilibria.push(Equilibrium {
            n: tip,
            stability: Stability::Unstable,
        });
    }
    set.equilibria.push(Equilibrium {
        n: up,
        stability: Stability::Stable,
    });
    Ok(set)
}
