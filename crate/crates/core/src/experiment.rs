//! Experiment configuration and the sweeps driven by `wnc-sim`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{ski_rental_adapter, SearchRange};
use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::netsim::{
    compare_line_network, compare_single_relay, empirical_ratio, BernoulliTraffic, LineNetwork, RatioPolicy, TrafficSpec,
};
use crate::primal_dual::ratio_bound_f64;
use crate::relay::CostModel;
use crate::verify::{golden_single_packet, golden_staggered_pair, golden_offline_optimum, run_verify, CheckOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Verify,
    SingleRelaySweep,
    LineNetworkSweep,
    SkiRentalSweep,
    GoldenExamples,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown experiment kind {s:?}")))
    }
}

/// A cost written either as a JSON number or as a string such as `"7/2"`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "CostLiteral", into = "String")]
pub struct CostValue(pub String);

#[derive(Deserialize)]
#[serde(untagged)]
enum CostLiteral {
    Number(serde_json::Number),
    Text(String),
}

impl From<CostLiteral> for CostValue {
    fn from(c: CostLiteral) -> Self {
        match c {
            CostLiteral::Number(n) => CostValue(n.to_string()),
            CostLiteral::Text(s) => CostValue(s),
        }
    }
}

impl From<CostValue> for String {
    fn from(c: CostValue) -> Self {
        c.0
    }
}

impl CostValue {
    pub fn model(&self) -> Result<CostModel> {
        self.0.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub costs: Vec<CostValue>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub sigma2: Vec<f64>,
    pub relays: Vec<usize>,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Random instances per verification suite.
    pub verify_instances: usize,
    /// Threshold draws per ski-rental instance.
    pub draws: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::SingleRelaySweep,
            costs: ["5", "10", "15"].iter().map(|c| CostValue(c.to_string())).collect(),
            p1: vec![0.5],
            p2: (1..=9).map(|k| k as f64 / 10.0).collect(),
            sigma2: vec![0.0],
            relays: vec![2, 3, 4, 5, 6],
            horizon: 10_000,
            replications: 20,
            seed: 1,
            output_dir: PathBuf::from("results"),
            verify_instances: 2_000,
            draws: 10_000,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn cost_models(&self) -> Result<Vec<CostModel>> {
        self.costs.iter().map(|c| c.model()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        let cms = self.cost_models().map_err(|e| Error::Config(e.to_string()))?;
        let needs_grid = matches!(
            self.kind,
            ExperimentKind::SingleRelaySweep | ExperimentKind::LineNetworkSweep | ExperimentKind::SkiRentalSweep
        );
        if needs_grid && cms.is_empty() {
            return bad("cost grid is empty");
        }
        if matches!(self.kind, ExperimentKind::SingleRelaySweep | ExperimentKind::LineNetworkSweep) {
            if self.p1.is_empty() || self.p2.is_empty() || self.sigma2.is_empty() {
                return bad("traffic grid is empty");
            }
            if self.horizon == 0 || self.replications == 0 {
                return bad("horizon and replications must be positive");
            }
            for &p in self.p1.iter().chain(&self.p2) {
                if !(0.0..=1.0).contains(&p) {
                    return bad(&format!("arrival probability {p} outside [0, 1]"));
                }
            }
            for &s in &self.sigma2 {
                BernoulliTraffic::new(0.5, 0.5, s).map_err(|e| Error::Config(e.to_string()))?;
            }
        }
        if self.kind == ExperimentKind::LineNetworkSweep && (self.relays.is_empty() || self.relays.iter().any(|&r| r < 2)) {
            return bad("relay grid must be non-empty with at least 2 relays per line");
        }
        if self.kind == ExperimentKind::SkiRentalSweep && self.draws == 0 {
            return bad("draws must be positive");
        }
        if self.kind == ExperimentKind::Verify && self.verify_instances == 0 {
            return bad("verify_instances must be positive");
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Hex SHA-256 of the resolved configuration, output directory excluded.
    pub fn hash(&self) -> String {
        let keyed = Self { output_dir: PathBuf::new(), ..self.clone() };
        let digest = Sha256::digest(serde_json::to_string(&keyed).expect("config serializes").as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    /// Human-readable lines for the terminal.
    pub lines: Vec<String>,
    /// A verification check failed.
    pub failed: bool,
}

/// One point of the single-relay sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRelayRow {
    pub p1: f64,
    pub p2: f64,
    pub sigma2: f64,
    pub c: String,
    pub seed_base: u64,
    /// `(policy, mean_cost, ratio, mean_coded, se_coded)` for proposed,
    /// optimized threshold and C-threshold.
    pub policies: Vec<(String, f64, f64, f64, f64)>,
    pub best: (u64, u64),
    pub table: Vec<(u64, u64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineRow {
    pub relays: usize,
    pub p1: f64,
    pub p2: f64,
    pub sigma2: f64,
    pub c: String,
    pub seed_base: u64,
    pub proposed: (f64, f64),
    pub threshold: (f64, f64),
    pub ratio: f64,
    pub best: (u64, u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkiRow {
    pub c: String,
    pub t: usize,
    pub opt: f64,
    pub mean_cost: f64,
    pub ratio: f64,
    pub bound: f64,
    pub seed_base: u64,
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

fn seed_for(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

pub fn single_relay_sweep(cfg: &ExperimentConfig) -> Result<Vec<SingleRelayRow>> {
    let cms = cfg.cost_models()?;
    let mut points = Vec::new();
    for &sigma2 in &cfg.sigma2 {
        for (ci, cm) in cms.iter().enumerate() {
            for &p1 in &cfg.p1 {
                for &p2 in &cfg.p2 {
                    points.push((sigma2, ci, cm.clone(), p1, p2));
                }
            }
        }
    }
    let indexed: Vec<(usize, _)> = points.into_iter().enumerate().collect();
    par_map(&indexed, |(k, (sigma2, ci, cm, p1, p2))| {
        let seed_base = seed_for(cfg.seed, *k);
        let spec = TrafficSpec::bernoulli(BernoulliTraffic::new(*p1, *p2, *sigma2)?, cfg.horizon, seed_base);
        let cmp = compare_single_relay(&spec, cm, cfg.replications, SearchRange::default_for(cm))?;
        let policies = cmp
            .summaries()
            .iter()
            .map(|s| (s.policy.name().to_string(), s.mean_cost(), cmp.ratio(s), s.mean_coded(), s.se_coded()))
            .collect();
        Ok(SingleRelayRow {
            p1: *p1,
            p2: *p2,
            sigma2: *sigma2,
            c: cfg.costs[*ci].0.clone(),
            seed_base,
            policies,
            best: (cmp.search.best.theta1, cmp.search.best.theta2),
            table: cmp.search.table,
        })
    })
    .into_iter()
    .collect()
}

pub fn line_network_sweep(cfg: &ExperimentConfig) -> Result<Vec<LineRow>> {
    let cms = cfg.cost_models()?;
    let mut points = Vec::new();
    for &sigma2 in &cfg.sigma2 {
        for (ci, cm) in cms.iter().enumerate() {
            for &p1 in &cfg.p1 {
                for &p2 in &cfg.p2 {
                    for &r in &cfg.relays {
                        points.push((sigma2, ci, cm.clone(), p1, p2, r));
                    }
                }
            }
        }
    }
    let indexed: Vec<(usize, _)> = points.into_iter().enumerate().collect();
    par_map(&indexed, |(k, (sigma2, ci, cm, p1, p2, r))| {
        // Every relay count sees the same end-node traffic.
        let seed_base = seed_for(cfg.seed, *k / cfg.relays.len());
        let spec = TrafficSpec::bernoulli(BernoulliTraffic::new(*p1, *p2, *sigma2)?, cfg.horizon, seed_base);
        let net = LineNetwork::uniform(*r, cm.clone())?;
        let cmp = compare_line_network(&net, &spec, cfg.replications, SearchRange::default_for(cm))?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let mean_u = |v: &[u64]| v.iter().sum::<u64>() as f64 / v.len() as f64;
        Ok(LineRow {
            relays: *r,
            p1: *p1,
            p2: *p2,
            sigma2: *sigma2,
            c: cfg.costs[*ci].0.clone(),
            seed_base,
            proposed: (mean(&cmp.proposed), mean_u(&cmp.proposed_coded)),
            threshold: (mean(&cmp.threshold), mean_u(&cmp.threshold_coded)),
            ratio: cmp.ratio(),
            best: (cmp.search.best.theta1, cmp.search.best.theta2),
        })
    })
    .into_iter()
    .collect()
}

/// Ski-rental instances `T = 1, ..., 3 ceil(C)` for every cost.
pub fn ski_rental_sweep(cfg: &ExperimentConfig) -> Result<Vec<SkiRow>> {
    let cms = cfg.cost_models()?;
    let mut rows = Vec::new();
    for (ci, cm) in cms.iter().enumerate() {
        let seed_base = seed_for(cfg.seed, ci);
        let ts: Vec<usize> = (1..=3 * cm.ceil_c() as usize).collect();
        let patterns = ts.iter().map(|&t| ski_rental_adapter(t)).collect::<Result<Vec<_>>>()?;
        let stats = empirical_ratio(&patterns, cm, RatioPolicy::OneSided, cfg.draws, seed_base)?;
        let bound = ratio_bound_f64(cm);
        for (t, s) in ts.into_iter().zip(stats.samples) {
            rows.push(SkiRow { c: cfg.costs[ci].0.clone(), t, opt: s.opt, mean_cost: s.mean_cost, ratio: s.ratio, bound, seed_base });
        }
    }
    Ok(rows)
}

fn create(dir: &Path, name: &str, report: &mut RunReport) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path)?;
    report.files.push(path);
    Ok(BufWriter::new(file))
}

fn sigma_tag(s: f64) -> String {
    format!("{s}").replace('.', "p")
}

fn write_single_relay(rows: &[SingleRelayRow], cfg: &ExperimentConfig, hash: &str, report: &mut RunReport) -> Result<()> {
    let dir = &cfg.output_dir;
    for &sigma2 in &cfg.sigma2 {
        let tag = sigma_tag(sigma2);
        let rows: Vec<&SingleRelayRow> = rows.iter().filter(|r| r.sigma2 == sigma2).collect();
        let mut w = csv::Writer::from_writer(create(dir, &format!("ratio_sigma2_{tag}.csv"), report)?);
        w.write_record(["p2", "C", "policy", "mean_cost", "mean_ratio", "coded_count", "seed_base", "config_hash"])?;
        for r in &rows {
            for (name, cost, ratio, coded, _) in &r.policies {
                w.write_record([f(r.p2), r.c.clone(), name.clone(), f(*cost), f(*ratio), f(*coded), r.seed_base.to_string(), hash.into()])?;
            }
        }
        w.flush()?;

        let mut dat = create(dir, &format!("ratio_sigma2_{tag}.dat"), report)?;
        let mut series = Vec::new();
        for c in &cfg.costs {
            writeln!(dat, "# C = {}\n# p2 proposed optimized-threshold c-threshold", c.0)?;
            let block: Vec<&&SingleRelayRow> = rows.iter().filter(|r| r.c == c.0).collect();
            for r in &block {
                let ratios: Vec<String> = r.policies.iter().map(|p| f(p.2)).collect();
                writeln!(dat, "{} {}", f(r.p2), ratios.join(" "))?;
            }
            writeln!(dat, "\n")?;
            for (k, name) in ["proposed", "c-threshold"].iter().enumerate() {
                let idx = if k == 0 { 0 } else { 2 };
                series.push((format!("{name}, C={}", c.0), block.iter().map(|r| (r.p2, r.policies[idx].2)).collect()));
            }
        }
        dat.flush()?;
        let svg = line_chart_svg(&format!("Cost ratio to optimized threshold, sigma2 = {sigma2}"), "p2", "ratio", &series);
        create(dir, &format!("ratio_sigma2_{tag}.svg"), report)?.write_all(svg.as_bytes())?;
    }

    let mut w = csv::Writer::from_writer(create(dir, "coded_counts.csv", report)?);
    w.write_record(["p2", "C", "sigma2", "policy", "coded_count", "coded_se", "seed_base", "config_hash"])?;
    for r in rows {
        for (name, _, _, coded, se) in &r.policies {
            w.write_record([f(r.p2), r.c.clone(), f(r.sigma2), name.clone(), f(*coded), f(*se), r.seed_base.to_string(), hash.into()])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(dir, "thresholds.csv", report)?);
    w.write_record(["p2", "C", "sigma2", "theta1", "theta2", "mean_cost", "best", "seed_base", "config_hash"])?;
    for r in rows {
        for &(a, b, cost) in &r.table {
            let best = (a, b) == r.best;
            w.write_record([
                f(r.p2),
                r.c.clone(),
                f(r.sigma2),
                a.to_string(),
                b.to_string(),
                f(cost),
                best.to_string(),
                r.seed_base.to_string(),
                hash.into(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_line(rows: &[LineRow], cfg: &ExperimentConfig, hash: &str, report: &mut RunReport) -> Result<()> {
    let dir = &cfg.output_dir;
    let mut w = csv::Writer::from_writer(create(dir, "line_ratios.csv", report)?);
    w.write_record(["relays", "p2", "C", "sigma2", "policy", "mean_cost", "mean_ratio", "coded_count", "theta1", "theta2", "seed_base", "config_hash"])?;
    for r in rows {
        for (name, (cost, coded), ratio) in [("proposed", r.proposed, r.ratio), ("optimized-threshold", r.threshold, 1.0)] {
            w.write_record([
                r.relays.to_string(),
                f(r.p2),
                r.c.clone(),
                f(r.sigma2),
                name.into(),
                f(cost),
                f(ratio),
                f(coded),
                r.best.0.to_string(),
                r.best.1.to_string(),
                r.seed_base.to_string(),
                hash.into(),
            ])?;
        }
    }
    w.flush()?;

    let mut dat = create(dir, "line_ratios.dat", report)?;
    let mut series = Vec::new();
    for &sigma2 in &cfg.sigma2 {
        for c in &cfg.costs {
            for &p2 in &cfg.p2 {
                writeln!(dat, "# C = {} p2 = {p2} sigma2 = {sigma2}\n# relays ratio", c.0)?;
                let pts: Vec<(f64, f64)> = rows
                    .iter()
                    .filter(|r| r.c == c.0 && r.p2 == p2 && r.sigma2 == sigma2)
                    .map(|r| (r.relays as f64, r.ratio))
                    .collect();
                for (x, y) in &pts {
                    writeln!(dat, "{x} {}", f(*y))?;
                }
                writeln!(dat, "\n")?;
                series.push((format!("C={}, p2={p2}", c.0), pts));
            }
        }
    }
    dat.flush()?;
    let svg = line_chart_svg("Line network: proposed over optimized threshold", "relays", "ratio", &series);
    create(dir, "line_ratios.svg", report)?.write_all(svg.as_bytes())?;
    Ok(())
}

fn write_ski(rows: &[SkiRow], cfg: &ExperimentConfig, hash: &str, report: &mut RunReport) -> Result<()> {
    let dir = &cfg.output_dir;
    let mut w = csv::Writer::from_writer(create(dir, "ski_rental.csv", report)?);
    w.write_record(["C", "T", "opt", "mean_cost", "ratio", "bound", "seed_base", "config_hash"])?;
    for r in rows {
        w.write_record([r.c.clone(), r.t.to_string(), f(r.opt), f(r.mean_cost), f(r.ratio), f(r.bound), r.seed_base.to_string(), hash.into()])?;
    }
    w.flush()?;
    let mut dat = create(dir, "ski_rental.dat", report)?;
    let mut series = Vec::new();
    for c in &cfg.costs {
        writeln!(dat, "# C = {}\n# T ratio bound", c.0)?;
        let pts: Vec<&SkiRow> = rows.iter().filter(|r| r.c == c.0).collect();
        for r in &pts {
            writeln!(dat, "{} {} {}", r.t, f(r.ratio), f(r.bound))?;
        }
        writeln!(dat, "\n")?;
        series.push((format!("C={}", c.0), pts.iter().map(|r| (r.t as f64, r.ratio)).collect()));
    }
    dat.flush()?;
    let svg = line_chart_svg("Ski rental: expected cost over OPT", "T", "ratio", &series);
    create(dir, "ski_rental.svg", report)?.write_all(svg.as_bytes())?;
    Ok(())
}

fn write_checks(outcomes: &[CheckOutcome], cfg: &ExperimentConfig, hash: &str, report: &mut RunReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(&cfg.output_dir, "verify.csv", report)?);
    w.write_record(["check", "instances", "failures", "first_failure", "seed_base", "config_hash"])?;
    for o in outcomes {
        let first = o.failures.first().cloned().unwrap_or_default();
        w.write_record([o.name.to_string(), o.instances.to_string(), o.failures.len().to_string(), first, cfg.seed.to_string(), hash.into()])?;
        let status = if o.passed() { "ok" } else { "FAILED" };
        report.lines.push(format!("{status:>6}  {} ({} instances)", o.name, o.instances));
        for fail in &o.failures {
            report.lines.push(format!("        {fail}"));
        }
    }
    report.failed = outcomes.iter().any(|o| !o.passed());
    w.flush()?;
    Ok(())
}

/// Validates `cfg`, runs it and writes every output under `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let hash = cfg.hash();
    let mut report = RunReport::default();
    create(&cfg.output_dir, "config.json", &mut report)?.write_all(cfg.to_json().as_bytes())?;
    match cfg.kind {
        ExperimentKind::Verify => {
            let outcomes = run_verify(cfg.seed, cfg.verify_instances);
            write_checks(&outcomes, cfg, &hash, &mut report)?;
        }
        ExperimentKind::GoldenExamples => {
            let single = |name, r: std::result::Result<(), String>| CheckOutcome { name, instances: 1, failures: r.err().into_iter().collect() };
            let outcomes = [
                single("golden: lone packet rounding, C = 2", golden_single_packet()),
                single("golden: staggered pair trace, C = 2", golden_staggered_pair()),
                single("golden: offline optimum, C = 4", golden_offline_optimum()),
            ];
            write_checks(&outcomes, cfg, &hash, &mut report)?;
        }
        ExperimentKind::SingleRelaySweep => {
            let rows = single_relay_sweep(cfg)?;
            for r in &rows {
                let ratios: Vec<String> = r.policies.iter().map(|p| format!("{}={:.3}", p.0, p.2)).collect();
                report.lines.push(format!("sigma2={} C={} p2={}: {}", r.sigma2, r.c, r.p2, ratios.join(" ")));
            }
            write_single_relay(&rows, cfg, &hash, &mut report)?;
        }
        ExperimentKind::LineNetworkSweep => {
            let rows = line_network_sweep(cfg)?;
            for r in &rows {
                report.lines.push(format!("R={} sigma2={} C={} p2={}: ratio {:.3}", r.relays, r.sigma2, r.c, r.p2, r.ratio));
            }
            write_line(&rows, cfg, &hash, &mut report)?;
        }
        ExperimentKind::SkiRentalSweep => {
            let rows = ski_rental_sweep(cfg)?;
            for c in &cfg.costs {
                let worst = rows.iter().filter(|r| r.c == c.0).map(|r| r.ratio).fold(0.0, f64::max);
                let bound = rows.iter().find(|r| r.c == c.0).map_or(f64::NAN, |r| r.bound);
                report.lines.push(format!("C={}: worst ratio {worst:.4}, bound {bound:.4}", c.0));
            }
            write_ski(&rows, cfg, &hash, &mut report)?;
        }
    }
    Ok(report)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Static SVG line chart with one polyline per series.
pub fn line_chart_svg(title: &str, xlabel: &str, ylabel: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 420.0, 60.0, 170.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|s| s.1.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts.filter(|p| p.0.is_finite() && p.1.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(s, r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.2}</text>"#, sx(fx), top + ph + 16.0, fx);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.3}</text>"#, left - 4.0, sy(fy) + 4.0, fy);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 10.0, escape(xlabel));
    let _ = writeln!(s, r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#, top + ph / 2.0, top + ph / 2.0, escape(ylabel));
    for (k, (name, data)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = data
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let ly = top + 14.0 + 16.0 * k as f64;
        let lx = left + pw + 10.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/>"#, ly - 4.0, lx + 18.0, ly - 4.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, lx + 22.0, escape(name));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            costs: vec![CostValue("3".into())],
            p2: vec![0.2],
            relays: vec![2, 3],
            horizon: 200,
            replications: 3,
            output_dir: dir.to_path_buf(),
            verify_instances: 20,
            draws: 50,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn config_round_trip_and_hash() {
        let cfg = ExperimentConfig::from_json(r#"{"kind":"line-network-sweep","costs":[5, "7/2", 2.5],"seed":9}"#).unwrap();
        assert_eq!(cfg.kind, ExperimentKind::LineNetworkSweep);
        assert_eq!(cfg.costs.iter().map(|c| c.0.as_str()).collect::<Vec<_>>(), ["5", "7/2", "2.5"]);
        assert_eq!(cfg.horizon, 10_000);
        let again = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let other = ExperimentConfig { seed: 10, ..cfg.clone() };
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"bogus":1}"#).is_err());
        let ok = ExperimentConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            ExperimentConfig { costs: vec![], ..ok.clone() },
            ExperimentConfig { costs: vec![CostValue("1".into())], ..ok.clone() },
            ExperimentConfig { p2: vec![], ..ok.clone() },
            ExperimentConfig { p2: vec![1.5], ..ok.clone() },
            ExperimentConfig { sigma2: vec![-1.0], ..ok.clone() },
            ExperimentConfig { replications: 0, ..ok.clone() },
            ExperimentConfig { kind: ExperimentKind::LineNetworkSweep, relays: vec![1], ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))), "{bad:?}");
        }
        assert!("ski-rental-sweep".parse::<ExperimentKind>().is_ok());
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn single_point_sweep_writes_one_row_per_policy() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny(ExperimentKind::SingleRelaySweep, dir.path());
        run_experiment(&cfg).unwrap();
        let text = fs::read_to_string(dir.path().join("ratio_sigma2_0.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p2,C,policy,mean_cost,mean_ratio,coded_count,seed_base,config_hash");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("0.200000,3,optimized-threshold,"));
        assert!(lines[2].contains(",1.000000,"));
        assert!(lines.iter().skip(1).all(|l| l.ends_with(&cfg.hash())));
        assert!(fs::read_to_string(dir.path().join("ratio_sigma2_0.svg")).unwrap().starts_with("<svg"));
    }

    #[test]
    fn sweeps_are_reproducible() {
        for kind in [ExperimentKind::LineNetworkSweep, ExperimentKind::SkiRentalSweep, ExperimentKind::GoldenExamples] {
            let a = tempfile::tempdir().unwrap();
            let b = tempfile::tempdir().unwrap();
            let ra = run_experiment(&tiny(kind, a.path())).unwrap();
            run_experiment(&tiny(kind, b.path())).unwrap();
            assert!(!ra.failed);
            for path in &ra.files {
                let name = path.file_name().unwrap();
                if name == "config.json" {
                    continue;
                }
                assert_eq!(fs::read(path).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name:?}");
            }
        }
    }
}
