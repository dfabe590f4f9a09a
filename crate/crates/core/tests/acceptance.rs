//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::sync::OnceLock;
use std::time::Instant;

use mmshare::config::{self, DuopolyConfig, SimulateConfig};
use mmshare::demand::{self, LinearExternality, DEFAULT_GRID_INTERVALS};
use mmshare::duopoly::{self, DuopolyEquilibrium, GameParams, GameRegime, SweepCell};
use mmshare::exec::Execution;
use mmshare::externality::{self, ExternalityCurve, OpenResourceScenario, ResourceCaps};
use mmshare::geometry::{sample_hppp, Deployment, Point, Region, Site};
use mmshare::radio::{fading_sample, LinkClass, LinkState, RateModel};
use mmshare::report::{self, Stamp};
use mmshare::rng::Streams;
use mmshare::sim::{self, run_drop, DropLinks, RateDistribution, Scenario, SchedulerPolicy, SharingRegime};
use mmshare::stats;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// Independent market-share oracle: every consumer type picks the best of
// {firm 1, firm 2, nothing} given expected sizes, and expectations are
// iterated to a fixed point.

fn choice_shares(q: [f64; 2], p: [f64; 2], expect: [f64; 2], omega_hat: f64, mu: f64) -> [f64; 2] {
    let a = [mu * q[0] * expect[0], mu * q[1] * expect[1]];
    let u = |i: usize, w: f64| w * q[i] + a[i] - p[i];
    let mut cuts = vec![0.0, omega_hat];
    for w in [(p[0] - a[0]) / q[0], (p[1] - a[1]) / q[1], (p[0] - p[1] - a[0] + a[1]) / (q[0] - q[1])] {
        if w > 0.0 && w < omega_hat {
            cuts.push(w);
        }
    }
    cuts.sort_by(f64::total_cmp);
    let mut n = [0.0; 2];
    for s in cuts.windows(2) {
        let mid = 0.5 * (s[0] + s[1]);
        let (u1, u2) = (u(0, mid), u(1, mid));
        let len = (s[1] - s[0]) / omega_hat;
        if u1 > 0.0 && u1 >= u2 {
            n[0] += len;
        } else if u2 > 0.0 && u2 > u1 {
            n[1] += len;
        }
    }
    n
}

fn oracle_shares(q: [f64; 2], p: [f64; 2], omega_hat: f64, mu: f64, compatible: bool) -> [f64; 2] {
    let mut n = [0.4, 0.3];
    for _ in 0..10_000 {
        let expect = if compatible { [n[0] + n[1]; 2] } else { n };
        let next = choice_shares(q, p, expect, omega_hat, mu);
        let damped = [0.5 * (n[0] + next[0]), 0.5 * (n[1] + next[1])];
        let step = (damped[0] - n[0]).abs().max((damped[1] - n[1]).abs());
        n = damped;
        if step < 1e-13 {
            break;
        }
    }
    n
}

fn oracle_profits(e: &DuopolyEquilibrium, p: [f64; 2]) -> [f64; 2] {
    let n = oracle_shares(
        [e.q1, e.q2],
        p,
        e.params.omega_hat,
        e.params.mu,
        e.regime == GameRegime::Sharing,
    );
    [n[0] * (p[0] - e.q1), n[1] * (p[1] - e.q2)]
}

// ---------------------------------------------------------------------------

fn figs8_9() -> &'static (Vec<SweepCell>, f64) {
    static CELLS: OnceLock<(Vec<SweepCell>, f64)> = OnceLock::new();
    CELLS.get_or_init(|| {
        let cfg: DuopolyConfig = config::preset("figs8_9").unwrap();
        let t = Instant::now();
        let cells = duopoly::sweep(cfg.q_hat, &cfg.omega_axis().unwrap(), &cfg.mu, Execution::Parallel).unwrap();
        (cells, t.elapsed().as_secs_f64())
    })
}

fn run_preset(name: &str, regimes: Option<&[SharingRegime]>, exec: Execution) -> Vec<RateDistribution> {
    let mut cfg: SimulateConfig = config::preset(name).unwrap();
    if let Some(r) = regimes {
        cfg.regimes = r.to_vec();
    }
    cfg.scenarios().iter().map(|s| sim::simulate(s, exec).unwrap()).collect()
}

fn fig4() -> &'static Vec<RateDistribution> {
    static RUN: OnceLock<Vec<RateDistribution>> = OnceLock::new();
    RUN.get_or_init(|| run_preset("fig4_symmetric", None, Execution::Parallel))
}

fn criterion_1() -> Check {
    let t = Instant::now();
    let eq = demand::equilibria(&LinearExternality, 1.0, 0.1, DEFAULT_GRID_INTERVALS).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let r = 0.6f64.sqrt();
    let (lo, hi) = ((1.0 - r) / 2.0, (1.0 + r) / 2.0);
    let tip = eq.tipping.unwrap_or(f64::NAN);
    let up = eq.upper.unwrap_or(f64::NAN);
    ensure(
        (tip - lo).abs() < 1e-6 && (up - hi).abs() < 1e-6 && (eq.critical_mass - 0.5).abs() < 1e-6 && secs < 1.0,
        format!("n'={tip:.9} n''={up:.9} n0={:.9} in {secs:.4}s", eq.critical_mass),
    )
}

fn criterion_2() -> Check {
    let q2s = duopoly::sharing_quality(&GameParams::new(1.5, 2.0, 0.25).unwrap());
    let mut notes = vec![format!("q2,S(1.5,2,0.25)={q2s}")];
    let mut ok = (q2s - 0.87).abs() < 1e-12;

    for w in [1.5, 2.0, 3.0, 4.0] {
        let p = GameParams::new(1.5, w, 0.0).unwrap();
        let ns = duopoly::equilibrium_no_sharing(&p).unwrap();
        let s = duopoly::equilibrium_sharing(&p).unwrap();
        let target = 4.0 * 1.5 / 7.0;
        ok &= (ns.q2 - target).abs() < 1e-12 && (s.q2 - target).abs() < 1e-12;
        ok &= (ns.profit1 - s.profit1).abs() < 1e-10 && (ns.profit2 - s.profit2).abs() < 1e-10;
    }

    // Unilateral price deviations on a +-10% grid, scored with the oracle.
    let (cells, secs) = figs8_9();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for cell in cells {
        for regime in [GameRegime::NoSharing, GameRegime::Sharing] {
            let Some(e) = cell.get(regime) else { continue };
            let base = oracle_profits(e, [e.p1, e.p2]);
            for k in 0..=200 {
                let f = 0.9 + 0.2 * k as f64 / 200.0;
                let g1 = oracle_profits(e, [e.p1 * f, e.p2])[0] - base[0];
                let g2 = oracle_profits(e, [e.p1, e.p2 * f])[1] - base[1];
                worst = worst.max(g1).max(g2);
            }
            checked += 1;
        }
    }
    ok &= worst <= 1e-6 && *secs < 10.0;
    notes.push(format!("max deviation gain {worst:.2e} over {checked} equilibria; sweep {secs:.3}s"));
    ensure(ok, notes.join("; "))
}

fn criterion_3a() -> Check {
    let (cells, _) = figs8_9();
    let mut feasible = 0;
    let mut bad = Vec::new();
    for c in cells {
        let (Some(ns), Some(s)) = (c.get(GameRegime::NoSharing), c.get(GameRegime::Sharing)) else {
            continue;
        };
        feasible += 1;
        if s.profit2 < ns.profit2 - 1e-12 {
            bad.push(format!("(w={}, mu={})", c.omega_hat, c.mu));
        }
    }
    ensure(
        bad.is_empty() && feasible > 0,
        format!("pi2,S >= pi2,NS on {}/{feasible} feasible cells {}", feasible - bad.len(), bad.join(" ")),
    )
}

fn criterion_3b() -> Check {
    let (cells, _) = figs8_9();
    let row: Vec<(f64, f64, f64)> = cells
        .iter()
        .filter(|c| c.mu == 0.7 && !c.equilibria.is_empty())
        .map(|c| {
            (
                c.omega_hat,
                c.get(GameRegime::NoSharing).unwrap().profit1,
                c.get(GameRegime::Sharing).unwrap().profit1,
            )
        })
        .collect();
    let (first, last) = (row.first().copied(), row.last().copied());
    let (Some(lo), Some(hi)) = (first, last) else {
        return Err("no feasible mu=0.7 cells".into());
    };
    ensure(
        lo.1 > lo.2 && hi.2 >= hi.1,
        format!(
            "mu=0.7: w={} pi1,NS={:.5} pi1,S={:.5}; w={} pi1,NS={:.5} pi1,S={:.5}",
            lo.0, lo.1, lo.2, hi.0, hi.1, hi.2
        ),
    )
}

fn criterion_4() -> Check {
    let t = Instant::now();
    let dist = &run_preset("fig5_asymmetric", Some(&[SharingRegime::FullSharing]), Execution::Parallel)[0];
    let (a, b) = (dist.operator_rates(0), dist.operator_rates(1));
    let ks = stats::ks_two_sample(&a, &b).map_err(|e| e.to_string())?;
    ensure(
        ks.p_value >= 0.01,
        format!(
            "KS D={:.4} p={:.4} (n1={}, n2={}) in {:.1}s",
            ks.statistic,
            ks.p_value,
            a.len(),
            b.len(),
            t.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_5() -> Check {
    let t = Instant::now();
    let runs = fig4();
    let mut s = Vec::new();
    for d in runs {
        let streams = Streams::new(0);
        let summary = sim::summarize(&d.rates(), Default::default(), &streams, Execution::Parallel).map_err(|e| e.to_string())?;
        s.push((d.regime, summary));
    }
    let get = |r: SharingRegime| s.iter().find(|x| x.0 == r).unwrap().1;
    let none = get(SharingRegime::NoSharing);
    let bs = get(SharingRegime::BsSharingOnly);
    let spec = get(SharingRegime::SpectrumSharingOnly);
    let full = get(SharingRegime::FullSharing);
    let ok = full.fifth_percentile_bps >= bs.fifth_percentile_bps
        && full.fifth_percentile_bps >= spec.fifth_percentile_bps
        && bs.fifth_percentile_bps >= none.fifth_percentile_bps
        && spec.fifth_percentile_bps >= none.fifth_percentile_bps
        && full.ci_lo_bps > none.ci_hi_bps;
    let fmt = |name: &str, x: sim::RateSummary| {
        format!(
            "{name} {:.3e} [{:.3e}, {:.3e}]",
            x.fifth_percentile_bps, x.ci_lo_bps, x.ci_hi_bps
        )
    };
    ensure(
        ok,
        format!(
            "{}; {}; {}; {}; {:.1}s",
            fmt("none", none),
            fmt("bs", bs),
            fmt("spectrum", spec),
            fmt("full", full),
            t.elapsed().as_secs_f64()
        ),
    )
}

/// One BS serving `n` LOS UEs spread between 40 m and 160 m.
fn single_cell(n: usize, policy: SchedulerPolicy, slots: usize) -> (Vec<f64>, Vec<u64>) {
    let region = Region::unit_km_torus();
    let bs = Site {
        pos: Point::new(500.0, 500.0),
        operator: 0,
    };
    let ue: Vec<Site> = (0..n)
        .map(|i| {
            let d = 40.0 + 120.0 * i as f64 / (n.max(2) - 1) as f64;
            let a = i as f64 * 2.4;
            Site {
                pos: Point::new(500.0 + d * a.cos(), 500.0 + d * a.sin()),
                operator: 0,
            }
        })
        .collect();
    let dep = Deployment {
        region,
        bs: vec![bs],
        ue,
    };
    let mut sc: Scenario = Scenario {
        regime: SharingRegime::NoSharing,
        operators: vec![sim::OperatorConfig {
            bandwidth_hz: 1e9,
            bs_per_km2: 1.0,
            ue_per_km2: n as f64,
        }],
        sim: Default::default(),
    };
    sc.sim.slots = slots;
    sc.sim.policy = policy;
    let ch = sc.sim.channel;
    let links = DropLinks::from_fn(&dep, |b, u| {
        let d = mmshare::geometry::distance(dep.bs[b].pos, dep.ue[u].pos, region);
        LinkState::with_shadowing(LinkClass::Los, d, 0.0, &ch)
    });
    let out = run_drop(&dep, &links, &sc, &Streams::new(99), 0);
    (out.rates, out.slots_won)
}

fn criterion_6() -> Check {
    let slots = 100_000;
    let mut worst_share = 0.0f64;
    let mut gains = Vec::new();
    let mut dominated = true;
    for n in [2usize, 5, 10] {
        let (opp, won) = single_cell(n, SchedulerPolicy::TemporalFairOpportunistic, slots);
        for w in &won {
            worst_share = worst_share.max((*w as f64 / slots as f64 - 1.0 / n as f64).abs());
        }
        let (rr, _) = single_cell(n, SchedulerPolicy::RoundRobin, slots);
        dominated &= opp.iter().zip(&rr).all(|(o, r)| o >= r);
        gains.push(stats::mean(&opp) / stats::mean(&rr) - 1.0);
    }
    let increasing = gains.windows(2).all(|g| g[1] > g[0]);
    ensure(
        worst_share <= 0.02 && dominated && gains[0] >= 0.0 && increasing,
        format!(
            "max |share - 1/N| = {worst_share:.4}; per-UE dominance {dominated}; mean gain over RR at N=2,5,10: {:.4}, {:.4}, {:.4}",
            gains[0], gains[1], gains[2]
        ),
    )
}

fn criterion_7() -> Check {
    let t = Instant::now();
    let caps = ResourceCaps::default();
    let grid = externality::default_grid();
    let sim = Default::default();
    let curves =
        externality::estimate_h(&OpenResourceScenario::ALL, &caps, &grid, &sim, Execution::Parallel).map_err(|e| e.to_string())?;
    let by = |s: OpenResourceScenario| curves.iter().find(|c| c.scenario == s).unwrap();
    let (noopen, openbs, openspec) = (
        by(OpenResourceScenario::NoOpen),
        by(OpenResourceScenario::OpenBs),
        by(OpenResourceScenario::OpenSpectrum),
    );
    let mut notes = Vec::new();
    let mut ok = true;

    let mut small_ok = true;
    for &n in grid.iter().filter(|&&n| n <= 0.3 + 1e-12) {
        let (a, b) = (openbs.at(n).unwrap(), noopen.at(n).unwrap());
        small_ok &= a.ci_lo > b.ci_hi;
    }
    ok &= small_ok;
    notes.push(format!("open_bs above no_open for n<=0.3: {small_ok}"));

    let nondecreasing = |c: &ExternalityCurve| c.points.windows(2).all(|w| w[1].ci_hi >= w[0].ci_lo);
    for c in [noopen, openbs, openspec] {
        let mono = nondecreasing(c);
        ok &= mono;
        if !mono {
            notes.push(format!("{} not nondecreasing", c.scenario.as_str()));
        }
    }

    let slope = |c: &ExternalityCurve| externality::fit_slope(c, c.scenario.default_fit_from()).unwrap();
    let (m_no, m_bs, m_sp) = (slope(noopen), slope(openbs), slope(openspec));
    let within = |m: f64, target: f64| (m - target).abs() <= 0.5 * target;
    let slopes_ok = m_no > m_sp && m_sp > m_bs && within(m_no, 0.7) && within(m_sp, 0.4) && within(m_bs, 0.25);
    ok &= slopes_ok;
    notes.push(format!(
        "slopes no_open={m_no:.3} open_spectrum={m_sp:.3} open_bs={m_bs:.3}; normalizer {:.3e} bps; {:.0}s",
        noopen.normalizer_bps,
        t.elapsed().as_secs_f64()
    ));
    for c in [noopen, openbs, openspec] {
        let hs: Vec<String> = c.points.iter().map(|p| format!("{}:{:.3}", p.n, p.h)).collect();
        notes.push(format!("{} h = {}", c.scenario.as_str(), hs.join(" ")));
    }
    ensure(ok, notes.join("; "))
}

fn criterion_8() -> Check {
    let stamp = Stamp {
        config_hash: config::config_hash(&config::preset::<SimulateConfig>("fig4_symmetric").unwrap()),
        seed: 1,
    };
    let first: Vec<String> = fig4().iter().map(|d| report::rates_csv(&stamp, d)).collect();
    let again: Vec<String> = run_preset("fig4_symmetric", None, Execution::Sequential)
        .iter()
        .map(|d| report::rates_csv(&stamp, d))
        .collect();
    let cfg: DuopolyConfig = config::preset("figs8_9").unwrap();
    let sweep_csv = |exec| {
        report::sweep_csv(
            &stamp,
            &duopoly::sweep(cfg.q_hat, &cfg.omega_axis().unwrap(), &cfg.mu, exec).unwrap(),
        )
    };
    let sweeps_equal = sweep_csv(Execution::Parallel) == sweep_csv(Execution::Sequential);
    let bytes: usize = first.iter().map(String::len).sum();
    ensure(
        first == again && sweeps_equal,
        format!("fig4 rate CSVs ({bytes} bytes) identical across reruns: {}; figs8_9 sweep identical: {sweeps_equal}", first == again),
    )
}

fn criterion_9() -> Check {
    // Poisson goodness of fit of hPPP counts.
    let region = Region::unit_km_torus();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let draws = 10_000;
    let mut counts = vec![0usize; 400];
    for _ in 0..draws {
        counts[sample_hppp(100.0, region, &mut rng).unwrap().len()] += 1;
    }
    let pois = Poisson::new(100.0).unwrap();
    // Bins with expected count >= 5, tails pooled.
    let expected: Vec<f64> = (0..400).map(|k| pois.pmf(k as u64) * draws as f64).collect();
    let lo = (0..400).find(|&k| expected[k] >= 5.0).unwrap();
    let hi = (0..400).rev().find(|&k| expected[k] >= 5.0).unwrap();
    let mut chi2 = 0.0;
    let mut bins = 0;
    let mut add = |obs: f64, exp: f64| {
        chi2 += (obs - exp).powi(2) / exp;
        bins += 1;
    };
    add(counts[..lo].iter().sum::<usize>() as f64, pois.cdf(lo as u64 - 1) * draws as f64);
    for k in lo..=hi {
        add(counts[k] as f64, expected[k]);
    }
    add(counts[hi + 1..].iter().sum::<usize>() as f64, (1.0 - pois.cdf(hi as u64)) * draws as f64);
    let crit = ChiSquared::new((bins - 1) as f64).unwrap().inverse_cdf(0.99);
    let gof = chi2 < crit;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 1_000_000;
    let fmean = (0..n).map(|_| fading_sample(&mut rng)).sum::<f64>() / n as f64;
    let fading_ok = (fmean - 1.0).abs() < 0.01;

    let r = RateModel::default().rate(1e9, 10.0);
    let hand = 0.8e9 * 6f64.ln() / 2f64.ln();
    let rate_ok = ((r - hand) / hand).abs() < 5e-7 && (r / 1e6).round() == 2068.0;

    ensure(
        gof && fading_ok && rate_ok,
        format!("PPP chi2={chi2:.1} < {crit:.1} ({bins} bins); fading mean {fmean:.5}; rate {r:.6e} (hand {hand:.6e})"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("1 analytic demand oracle", criterion_1),
        ("2 duopoly closed forms", criterion_2),
        ("3a low-end sharing preference", criterion_3a),
        ("3b high-end crossing at mu=0.7", criterion_3b),
        ("4 full-sharing symmetry", criterion_4),
        ("5 sharing dominance", criterion_5),
        ("6 scheduler properties", criterion_6),
        ("7 externality shape", criterion_7),
        ("8 determinism", criterion_8),
        ("9 statistical unit checks", criterion_9),
    ];
    // Optional positional filters select criteria by name prefix, e.g. `-- 5 7`.
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (name, check) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {name}: PASS ({secs:.1}s) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {name}: FAIL ({secs:.1}s) {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
