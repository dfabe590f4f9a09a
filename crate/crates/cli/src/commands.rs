use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mmshare::config::{self, DemandConfig, DemandSource, DuopolyConfig, ExternalityConfig, RunConfig, SimulateConfig};
use mmshare::demand::{self, Externality, LinearExternality};
use mmshare::duopoly;
use mmshare::error::{Error, FieldError};
use mmshare::exec::{self, Execution};
use mmshare::externality::{self, CurvePoint, ExternalityCurve, OpenResourceScenario, RawPoint};
use mmshare::report::{self, OperatorSummary, RegimeSummary, ScenarioEquilibria, Stamp};
use mmshare::sim;

use crate::cache::PointCache;
use crate::output::{io_failure, unix_now, Manifest, Outputs};
use crate::{exit, Failure};

pub struct Options {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub threads: usize,
}

impl Options {
    fn load<C: RunConfig>(&self) -> Result<C, Failure> {
        let mut cfg: C = match (&self.config, &self.preset) {
            (Some(path), None) => {
                let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
                config::parse(&text)?
            }
            (None, Some(name)) => config::preset(name)?,
            _ => {
                return Err(Failure::new(exit::VALIDATION, "give exactly one of a config path or --preset"));
            }
        };
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        exec::configure_threads(self.threads);
        if self.threads == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn run_dir(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

struct Run<C: RunConfig> {
    cfg: C,
    stamp: Stamp,
    dir: PathBuf,
    started_at: u64,
    outputs: Outputs,
}

impl<C: RunConfig> Run<C> {
    fn new(opts: &Options, cfg: C) -> Self {
        let stamp = Stamp {
            config_hash: config::config_hash(&cfg),
            seed: cfg.seed(),
        };
        Self {
            dir: opts.run_dir(cfg.name()),
            cfg,
            stamp,
            started_at: unix_now(),
            outputs: Outputs::default(),
        }
    }

    fn add(&mut self, file: &str, contents: String) {
        self.outputs.add(self.dir.join(file), contents);
    }

    fn finish(mut self, cache: Vec<crate::output::CacheUse>) -> Result<Vec<PathBuf>, Failure> {
        let manifest = Manifest {
            command: C::KIND,
            name: self.cfg.name().to_string(),
            config_hash: self.stamp.config_hash.clone(),
            seed: self.stamp.seed,
            version: env!("CARGO_PKG_VERSION"),
            started_at: self.started_at,
            finished_at: unix_now(),
            outputs: self.outputs.paths(),
            cache,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        self.add("manifest.json", text);
        self.outputs.commit()
    }
}

pub fn simulate(opts: &Options) -> Result<Vec<PathBuf>, Failure> {
    let cfg: SimulateConfig = opts.load()?;
    let exec = opts.execution();
    let mut run = Run::new(opts, cfg);
    let mut summaries = Vec::new();
    for scenario in run.cfg.scenarios() {
        let dist = sim::simulate(&scenario, exec)?;
        let streams = scenario.streams();
        let spec = scenario.sim.bootstrap;
        let operators = (0..scenario.operators.len())
            .map(|op| -> Result<OperatorSummary, Error> {
                Ok(OperatorSummary {
                    operator: op + 1,
                    summary: sim::summarize(&dist.operator_rates(op), spec, &streams, exec)?,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        summaries.push(RegimeSummary {
            regime: scenario.regime,
            summary: sim::summarize(&dist.rates(), spec, &streams, exec)?,
            operators,
        });
        let file = format!("rates_{}.csv", scenario.regime.as_str());
        let csv = report::rates_csv(&run.stamp, &dist);
        run.add(&file, csv);
    }
    let json = report::summary_json(&run.stamp, run.cfg.name(), run.cfg.sim.bootstrap.level, &summaries);
    run.add("summary.json", json);
    run.finish(Vec::new())
}

/// Curves for every scenario of `cfg`, each point through the cache.
fn cached_curves(cfg: &ExternalityConfig, cache: &mut PointCache, exec: Execution) -> Result<Vec<ExternalityCurve>, Failure> {
    let baseline = cache.point(OpenResourceScenario::NoOpen, 1.0, &cfg.caps, &cfg.sim, exec)?;
    let mut curves = Vec::new();
    for &scenario in &cfg.scenarios {
        let mut raw = vec![match externality::origin_size(scenario) {
            Some(eps) => cache.point(scenario, eps, &cfg.caps, &cfg.sim, exec)?,
            None => RawPoint::zero(0.0),
        }];
        for &n in &cfg.grid {
            raw.push(cache.point(scenario, n, &cfg.caps, &cfg.sim, exec)?);
        }
        curves.push(ExternalityCurve::from_raw(scenario, &raw, baseline.rate_bps)?);
    }
    Ok(curves)
}

fn slopes(curves: &[ExternalityCurve]) -> Vec<(f64, Option<f64>)> {
    curves
        .iter()
        .map(|c| {
            let from = c.scenario.default_fit_from();
            (from, externality::fit_slope(c, from).ok())
        })
        .collect()
}

pub fn externality(opts: &Options, grid: Option<Vec<f64>>) -> Result<Vec<PathBuf>, Failure> {
    let mut cfg: ExternalityConfig = opts.load()?;
    if let Some(g) = grid {
        cfg.grid = g;
        cfg.validate()?;
    }
    let exec = opts.execution();
    let mut cache = PointCache::new(opts.out_dir.join(".cache"));
    let curves = cached_curves(&cfg, &mut cache, exec)?;
    let mut run = Run::new(opts, cfg);
    let csv = report::curves_csv(&run.stamp, &curves);
    run.add("curves.csv", csv);
    let meta = report::curves_meta_json(&run.stamp, &curves, &slopes(&curves));
    run.add("curves.json", meta);
    run.finish(cache.uses)
}

pub struct DemandOverrides {
    pub analytic: bool,
    pub curve: Option<PathBuf>,
    pub omega_hat: Option<f64>,
    pub costs: Option<Vec<f64>>,
}

fn read_curves(path: &Path) -> Result<Vec<ExternalityCurve>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let bad = |msg: String| Failure::from(Error::Validation(vec![FieldError::new(path.display().to_string(), msg)]));
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let mut by_scenario: BTreeMap<OpenResourceScenario, Vec<CurvePoint>> = BTreeMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        if row.len() != 6 {
            return Err(bad(format!("expected 6 columns, found {}", row.len())));
        }
        let scenario = OpenResourceScenario::parse(&row[0]).ok_or_else(|| bad(format!("unknown scenario `{}`", &row[0])))?;
        let num = |i: usize| row[i].parse::<f64>().map_err(|e| bad(format!("column {i}: {e}")));
        by_scenario.entry(scenario).or_default().push(CurvePoint {
            n: num(1)?,
            h: num(2)?,
            ci_lo: num(3)?,
            ci_hi: num(4)?,
            raw_rate_bps: num(5)?,
        });
    }
    if by_scenario.is_empty() {
        return Err(bad("no curve rows".into()));
    }
    Ok(by_scenario
        .into_iter()
        .map(|(scenario, mut points)| {
            if externality::origin_size(scenario).is_none() && points[0].n > 0.0 {
                points.insert(0, CurvePoint { n: 0.0, h: 0.0, ci_lo: 0.0, ci_hi: 0.0, raw_rate_bps: 0.0 });
            }
            let normalizer_bps = points
                .iter()
                .find(|p| p.h > 0.0)
                .map(|p| p.raw_rate_bps / p.h)
                .unwrap_or(1.0);
            ExternalityCurve {
                scenario,
                normalizer_bps,
                points,
            }
        })
        .collect())
}

fn analyse(
    name: &str,
    h: &impl Externality,
    cfg: &DemandConfig,
    stamp: &Stamp,
    run_files: &mut Vec<(String, String)>,
) -> Result<ScenarioEquilibria, Failure> {
    let curve = demand::fe_demand(h, cfg.omega_hat, cfg.grid_intervals)?;
    run_files.push((format!("demand_{name}.csv"), report::demand_csv(stamp, &curve)));
    let cm = demand::critical_mass(h, cfg.omega_hat, cfg.grid_intervals)?;
    let by_cost = cfg
        .costs
        .iter()
        .map(|&c| demand::equilibria(h, cfg.omega_hat, c, cfg.grid_intervals))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScenarioEquilibria {
        scenario: name.to_string(),
        omega_hat: cfg.omega_hat,
        critical_mass: cm.n,
        critical_mass_grid: cm.grid_n,
        by_cost,
    })
}

pub fn demand(opts: &Options, o: DemandOverrides) -> Result<Vec<PathBuf>, Failure> {
    let mut cfg: DemandConfig = match (&opts.config, &opts.preset) {
        (None, None) if o.analytic || o.curve.is_some() => DemandConfig {
            name: "demand".into(),
            seed: 0,
            omega_hat: 1.0,
            costs: vec![0.1],
            grid_intervals: demand::DEFAULT_GRID_INTERVALS,
            source: DemandSource::Analytic,
        },
        _ => opts.load()?,
    };
    if o.analytic {
        cfg.source = DemandSource::Analytic;
    }
    if let Some(path) = o.curve {
        cfg.source = DemandSource::CurveFile { path };
    }
    if let Some(w) = o.omega_hat {
        cfg.omega_hat = w;
    }
    if let Some(c) = o.costs {
        cfg.costs = c;
    }
    if let Some(seed) = opts.seed {
        cfg.set_seed(seed);
    }
    cfg.validate()?;

    let exec = opts.execution();
    let mut cache = PointCache::new(opts.out_dir.join(".cache"));
    let mut run = Run::new(opts, cfg.clone());
    let mut files = Vec::new();
    let mut results = Vec::new();
    match &cfg.source {
        DemandSource::Analytic => results.push(analyse("analytic", &LinearExternality, &cfg, &run.stamp, &mut files)?),
        DemandSource::CurveFile { path } => {
            for c in read_curves(path)? {
                results.push(analyse(c.scenario.as_str(), &c.interpolant()?, &cfg, &run.stamp, &mut files)?);
            }
        }
        DemandSource::Simulated { externality } => {
            for c in cached_curves(externality, &mut cache, exec)? {
                results.push(analyse(c.scenario.as_str(), &c.interpolant()?, &cfg, &run.stamp, &mut files)?);
            }
        }
    }
    for (file, text) in files {
        run.add(&file, text);
    }
    let json = report::equilibria_json(&run.stamp, &results);
    run.add("equilibria.json", json);
    run.finish(cache.uses)
}

pub fn duopoly(opts: &Options, q_hat: Option<f64>, mu: Option<Vec<f64>>) -> Result<Vec<PathBuf>, Failure> {
    let mut cfg: DuopolyConfig = opts.load()?;
    if let Some(q) = q_hat {
        cfg.q_hat = q;
    }
    if let Some(m) = mu {
        cfg.mu = m;
    }
    cfg.validate()?;
    let exec = opts.execution();
    let cells = duopoly::sweep(cfg.q_hat, &cfg.omega_axis()?, &cfg.mu, exec)?;
    if cells.iter().all(|c| c.equilibria.is_empty()) {
        let reason = cells.first().and_then(|c| c.infeasible.clone()).unwrap_or_default();
        return Err(Failure::new(exit::INFEASIBLE, format!("no feasible cell in the sweep ({reason})")));
    }
    let mut run = Run::new(opts, cfg);
    let csv = report::sweep_csv(&run.stamp, &cells);
    run.add("sweep.csv", csv);
    run.finish(Vec::new())
}
