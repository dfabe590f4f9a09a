//! Summary statistics over per-UE rate samples.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng::Streams;

/// Nearest-rank quantile: the `ceil(q * n)`-th smallest sample (1-based).
/// Reorders `samples` in place.
pub fn nearest_rank_in_place(samples: &mut [f64], q: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("quantile of no samples"));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::param("q", format!("must lie in [0, 1], got {q}")));
    }
    let n = samples.len();
    // The epsilon keeps exact products like 0.05 * 100 from rounding up a rank.
    let rank = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let idx = rank.min(n) - 1;
    let (_, v, _) = samples.select_nth_unstable_by(idx, f64::total_cmp);
    Ok(*v)
}

pub fn nearest_rank(samples: &[f64], q: f64) -> Result<f64> {
    nearest_rank_in_place(&mut samples.to_vec(), q)
}

pub fn fifth_percentile(samples: &[f64]) -> Result<f64> {
    nearest_rank(samples, 0.05)
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSpec {
    pub level: f64,
    pub resamples: usize,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self {
            level: 0.95,
            resamples: 1000,
        }
    }
}

/// Percentile-bootstrap interval of `statistic`.
///
/// Resample `i` draws from analysis stream `(domain, i)` of `streams`, so the
/// interval is reproducible and independent of execution mode. The interval
/// is widened, if needed, to contain the full-sample estimate.
pub fn bootstrap_ci<F>(
    samples: &[f64],
    statistic: F,
    spec: BootstrapSpec,
    streams: &Streams,
    domain: u16,
    exec: Execution,
) -> Result<(f64, f64)>
where
    F: Fn(&mut [f64]) -> f64 + Sync + Send,
{
    if samples.is_empty() {
        return Err(Error::Empty("bootstrap of no samples"));
    }
    if !(spec.level > 0.0 && spec.level < 1.0) {
        return Err(Error::param("level", format!("must lie in (0, 1), got {}", spec.level)));
    }
    if spec.resamples == 0 {
        return Err(Error::param("resamples", "must be at least 1"));
    }
    let n = samples.len();
    let mut stats = exec.map_indexed(spec.resamples, |i| {
        let mut rng = streams.analysis_stream(domain, i as u64);
        let mut resample: Vec<f64> = (0..n).map(|_| samples[rng.random_range(0..n)]).collect();
        statistic(&mut resample)
    });
    let tail = (1.0 - spec.level) / 2.0;
    let lo = nearest_rank_in_place(&mut stats, tail)?;
    let hi = nearest_rank_in_place(&mut stats, 1.0 - tail)?;
    let estimate = statistic(&mut samples.to_vec());
    Ok((lo.min(estimate), hi.max(estimate)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov
/// distribution (small-sample correction of Stephens). Tied values are
/// stepped together.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS test needs two nonempty samples"));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    })
}

/// `Q(λ) = 2 Σ_{k≥1} (-1)^{k-1} exp(-2 k² λ²)`.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = sign * (-2.0 * kf * kf * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
