//! Single-relay and line-network simulation, traffic generation and
//! empirical ratio measurement.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::baselines::{mean_cost_on, optimize_thresholds, SearchRange, ThresholdPolicy, ThresholdSearch};
use crate::error::{Error, Result};
use crate::exec::{par_map, par_map_range};
use crate::oracle::{opt_one_sided, opt_two_sided};
use crate::relay::{run_policy_with, ArrivalPattern, CostLedger, CostModel, RelayQueues, RunOptions, SchedulingPolicy};
use crate::scheduler::{OneSidedRandomized, ProposedPolicy, TwoSidedRandomized};

/// Generator for stream `stream` of `seed`. Streams never overlap.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Traffic stream of replication `rep`.
fn traffic_stream(rep: u64) -> u64 {
    2 * rep
}

/// Stream for the policy's own randomness in replication `rep`.
fn policy_stream(rep: u64) -> u64 {
    2 * rep + 1
}

/// Bernoulli arrivals whose per-slot success probabilities are Gaussian
/// draws truncated to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliTraffic {
    pub p1: f64,
    pub p2: f64,
    pub sigma2: f64,
}

impl BernoulliTraffic {
    pub fn new(p1: f64, p2: f64, sigma2: f64) -> Result<Self> {
        if !(p1.is_finite() && p2.is_finite()) || !(sigma2.is_finite() && sigma2 >= 0.0) {
            return Err(Error::Config(format!("bad traffic parameters p1={p1} p2={p2} sigma2={sigma2}")));
        }
        Ok(Self { p1, p2, sigma2 })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrafficKind {
    Deterministic(ArrivalPattern),
    Bernoulli(BernoulliTraffic),
    /// Ski-rental instance with the partner in slot `t`.
    SkiRental(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSpec {
    pub kind: TrafficKind,
    pub horizon: usize,
    pub seed: u64,
}

impl TrafficSpec {
    pub fn bernoulli(traffic: BernoulliTraffic, horizon: usize, seed: u64) -> Self {
        Self { kind: TrafficKind::Bernoulli(traffic), horizon, seed }
    }

    /// Arrival pattern of replication `rep`.
    pub fn pattern(&self, rep: u64) -> Result<ArrivalPattern> {
        match &self.kind {
            TrafficKind::Deterministic(p) => Ok(p.clone()),
            TrafficKind::Bernoulli(b) => {
                gen_bernoulli_truncated_gaussian(b, self.horizon, &mut stream_rng(self.seed, traffic_stream(rep)))
            }
            TrafficKind::SkiRental(t) => crate::baselines::ski_rental_adapter(*t),
        }
    }

    pub fn patterns(&self, replications: usize) -> Result<Vec<ArrivalPattern>> {
        par_map_range(replications, |r| self.pattern(r as u64)).into_iter().collect()
    }
}

fn truncated_draw<R: Rng + ?Sized>(p: f64, normal: Option<&Normal<f64>>, rng: &mut R) -> bool {
    let prob = match normal {
        Some(n) => n.sample(rng),
        None => p,
    };
    let prob = prob.clamp(0.0, 1.0);
    rng.gen::<f64>() < prob
}

pub fn gen_bernoulli_truncated_gaussian<R: Rng + ?Sized>(
    traffic: &BernoulliTraffic,
    horizon: usize,
    rng: &mut R,
) -> Result<ArrivalPattern> {
    if horizon == 0 {
        return Err(Error::InvalidPattern("horizon must be at least 1".into()));
    }
    let sd = traffic.sigma2.sqrt();
    let n1 = (sd > 0.0).then(|| Normal::new(traffic.p1, sd)).transpose().map_err(|e| Error::Config(e.to_string()))?;
    let n2 = (sd > 0.0).then(|| Normal::new(traffic.p2, sd)).transpose().map_err(|e| Error::Config(e.to_string()))?;
    let mut a1 = Vec::with_capacity(horizon);
    let mut a2 = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        a1.push(truncated_draw(traffic.p1, n1.as_ref(), rng) as u32);
        a2.push(truncated_draw(traffic.p2, n2.as_ref(), rng) as u32);
    }
    ArrivalPattern::new(a1, a2)
}

/// `E[max(min(P, 1), 0)]` for `P ~ N(mean, sigma2)`.
pub fn truncated_gaussian_mean(mean: f64, sigma2: f64) -> f64 {
    if sigma2 == 0.0 {
        return mean.clamp(0.0, 1.0);
    }
    let s = sigma2.sqrt();
    let pdf = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let cdf = |z: f64| 0.5 * libm::erfc(-z / std::f64::consts::SQRT_2);
    let (a, b) = (-mean / s, (1.0 - mean) / s);
    mean * (cdf(b) - cdf(a)) + s * (pdf(a) - pdf(b)) + (1.0 - cdf(b))
}

/// Policies the simulator knows how to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    Proposed,
    OptimizedThreshold,
    CThreshold,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Proposed => "proposed",
            PolicyKind::OptimizedThreshold => "optimized-threshold",
            PolicyKind::CThreshold => "c-threshold",
        }
    }
}

/// Per-replication results of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: PolicyKind,
    pub costs: Vec<f64>,
    pub coded: Vec<u64>,
    /// Largest per-slot transmission count seen in any replication.
    pub max_transmissions: u64,
}

fn mean(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count();
    if n == 0 {
        return 0.0;
    }
    xs.sum::<f64>() / n as f64
}

fn std_err(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = xs.clone().count();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs.clone());
    let var = xs.map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

impl PolicySummary {
    pub fn mean_cost(&self) -> f64 {
        mean(self.costs.iter().copied())
    }

    pub fn se_cost(&self) -> f64 {
        std_err(self.costs.iter().copied())
    }

    pub fn mean_coded(&self) -> f64 {
        mean(self.coded.iter().map(|&c| c as f64))
    }

    pub fn se_coded(&self) -> f64 {
        std_err(self.coded.iter().map(|&c| c as f64))
    }
}

fn max_slot_transmissions(ledger: &CostLedger) -> u64 {
    ledger.trace.iter().map(|r| r.decision.total()).max().unwrap_or(0)
}

fn single_run<P: SchedulingPolicy>(pattern: &ArrivalPattern, policy: &mut P, cm: &CostModel, slots: usize) -> Result<(f64, u64, u64)> {
    let out = run_policy_with(pattern, policy, cm, RunOptions { keep_trace: true, slots: Some(slots) })?;
    Ok((out.ledger.total_f64(), out.ledger.coded, max_slot_transmissions(&out.ledger)))
}

fn summarize(policy: PolicyKind, runs: Vec<Result<(f64, u64, u64)>>) -> Result<PolicySummary> {
    let mut s = PolicySummary { policy, costs: Vec::new(), coded: Vec::new(), max_transmissions: 0 };
    for r in runs {
        let (cost, coded, max_tx) = r?;
        s.costs.push(cost);
        s.coded.push(coded);
        s.max_transmissions = s.max_transmissions.max(max_tx);
    }
    Ok(s)
}

/// Runs `policy` on `patterns` (replication `r` uses `patterns[r]`) for
/// `slots` slots each, under the one-transmission constraint. Packets left
/// after the last slot go out in the runner's final flush.
pub fn run_on_patterns(
    patterns: &[ArrivalPattern],
    policy: PolicyKind,
    threshold: ThresholdPolicy,
    cm: &CostModel,
    slots: usize,
    seed: u64,
) -> Result<PolicySummary> {
    let idx: Vec<usize> = (0..patterns.len()).collect();
    let runs = par_map(&idx, |&r| {
        let p = &patterns[r];
        match policy {
            PolicyKind::Proposed => {
                let u = stream_rng(seed, policy_stream(r as u64)).gen::<f64>();
                let mut pol = ProposedPolicy::<f64>::new(cm, u)?;
                single_run(p, &mut pol, cm, slots)
            }
            PolicyKind::OptimizedThreshold | PolicyKind::CThreshold => {
                let mut pol = threshold.constrained(true);
                single_run(p, &mut pol, cm, slots)
            }
        }
    });
    summarize(policy, runs)
}

/// Simulates one policy over `replications` seeded draws of `spec`. The
/// optimized threshold is searched on the same draws.
pub fn run_single_relay(spec: &TrafficSpec, policy: PolicyKind, cm: &CostModel, replications: usize) -> Result<PolicySummary> {
    let patterns = spec.patterns(replications)?;
    let threshold = match policy {
        PolicyKind::OptimizedThreshold => {
            search_single_relay(&patterns, cm, SearchRange::default_for(cm), spec.horizon)?.best
        }
        _ => ThresholdPolicy::c_threshold(cm),
    };
    run_on_patterns(&patterns, policy, threshold, cm, spec.horizon, spec.seed)
}

pub fn search_single_relay(
    patterns: &[ArrivalPattern],
    cm: &CostModel,
    range: SearchRange,
    slots: usize,
) -> Result<ThresholdSearch> {
    optimize_thresholds(range, true, |p| mean_cost_on(patterns, cm, p, Some(slots)))
}

/// The three single-relay policies on common traffic draws.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleRelayComparison {
    pub proposed: PolicySummary,
    pub optimized: PolicySummary,
    pub c_threshold: PolicySummary,
    pub search: ThresholdSearch,
}

impl SingleRelayComparison {
    pub fn ratio(&self, s: &PolicySummary) -> f64 {
        s.mean_cost() / self.optimized.mean_cost()
    }

    pub fn summaries(&self) -> [&PolicySummary; 3] {
        [&self.proposed, &self.optimized, &self.c_threshold]
    }
}

pub fn compare_single_relay(spec: &TrafficSpec, cm: &CostModel, replications: usize, range: SearchRange) -> Result<SingleRelayComparison> {
    let patterns = spec.patterns(replications)?;
    let search = search_single_relay(&patterns, cm, range, spec.horizon)?;
    let proposed = run_on_patterns(&patterns, PolicyKind::Proposed, search.best, cm, spec.horizon, spec.seed)?;
    let optimized = run_on_patterns(&patterns, PolicyKind::OptimizedThreshold, search.best, cm, spec.horizon, spec.seed)?;
    let c_threshold =
        run_on_patterns(&patterns, PolicyKind::CThreshold, ThresholdPolicy::c_threshold(cm), cm, spec.horizon, spec.seed)?;
    Ok(SingleRelayComparison { proposed, optimized, c_threshold, search })
}

/// Relays `0..R` between a left source/sink and a right source/sink.
/// Queue 1 of each relay carries left-to-right traffic, queue 2 the reverse.
#[derive(Debug, Clone, PartialEq)]
pub struct LineNetwork {
    pub cms: Vec<CostModel>,
}

impl LineNetwork {
    pub fn uniform(relays: usize, cm: CostModel) -> Result<Self> {
        if relays == 0 {
            return Err(Error::Config("a line network needs at least one relay".into()));
        }
        Ok(Self { cms: vec![cm; relays] })
    }

    pub fn relays(&self) -> usize {
        self.cms.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinePolicy {
    Proposed,
    /// The same thresholds at every relay.
    Threshold(ThresholdPolicy),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineOutcome {
    pub ledgers: Vec<CostLedger>,
    /// Packets absorbed by the right and left end nodes.
    pub delivered: (u64, u64),
    pub max_transmissions: u64,
}

impl LineOutcome {
    pub fn total(&self) -> Rational64 {
        self.ledgers.iter().map(|l| l.total()).sum()
    }

    pub fn total_f64(&self) -> f64 {
        self.total().to_f64().unwrap_or(f64::NAN)
    }

    pub fn coded(&self) -> u64 {
        self.ledgers.iter().map(|l| l.coded).sum()
    }
}

/// Runs the line for `pattern.horizon()` slots. External Q1 arrivals enter
/// relay 0 and external Q2 arrivals enter the last relay. A transmission in
/// slot `t` reaches the neighbour in slot `t + 1`; packets still queued at
/// the end are not charged further.
pub fn run_line_once(net: &LineNetwork, pattern: &ArrivalPattern, policy: LinePolicy, rng: &mut ChaCha8Rng) -> Result<LineOutcome> {
    let r = net.relays();
    let mut policies: Vec<Box<dyn SchedulingPolicy>> = Vec::with_capacity(r);
    for cm in &net.cms {
        policies.push(match policy {
            LinePolicy::Proposed => Box::new(ProposedPolicy::<f64>::new(cm, rng.gen::<f64>())?),
            LinePolicy::Threshold(tp) => Box::new(tp.constrained(true)),
        });
    }
    let mut ledgers: Vec<CostLedger> = net.cms.iter().map(CostLedger::new).collect();
    let mut queues = vec![RelayQueues::default(); r];
    let mut inflight = vec![(0u32, 0u32); r];
    let mut delivered = (0u64, 0u64);
    let mut max_tx = 0;
    for slot in 1..=pattern.horizon() {
        let ext = pattern.arrivals(slot);
        let mut arrivals = std::mem::replace(&mut inflight, vec![(0, 0); r]);
        arrivals[0].0 += ext.0;
        arrivals[r - 1].1 += ext.1;
        for k in 0..r {
            let q = RelayQueues::new(queues[k].q1 + arrivals[k].0 as u64, queues[k].q2 + arrivals[k].1 as u64);
            let d = policies[k].decide(slot, q, arrivals[k])?;
            d.validate(q).map_err(|reason| Error::InvalidDecision { slot, reason })?;
            if d.total() > 1 {
                return Err(Error::InvalidDecision { slot, reason: format!("relay {k} sends {} packets", d.total()) });
            }
            max_tx = max_tx.max(d.total());
            ledgers[k].record(slot, q, d, false);
            queues[k] = d.remaining(q);
            let right = (d.coded + d.uncoded1) as u32;
            let left = (d.coded + d.uncoded2) as u32;
            if k + 1 < r {
                inflight[k + 1].0 += right;
            } else {
                delivered.0 += right as u64;
            }
            if k > 0 {
                inflight[k - 1].1 += left;
            } else {
                delivered.1 += left as u64;
            }
        }
    }
    Ok(LineOutcome { ledgers, delivered, max_transmissions: max_tx })
}

pub fn run_line_network(net: &LineNetwork, spec: &TrafficSpec, policy: LinePolicy, replications: usize) -> Result<Vec<LineOutcome>> {
    par_map_range(replications, |rep| {
        let pattern = spec.pattern(rep as u64)?;
        run_line_once(net, &pattern, policy, &mut stream_rng(spec.seed, policy_stream(rep as u64)))
    })
    .into_iter()
    .collect()
}

/// Proposed policy against the best shared threshold pair on a line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineComparison {
    pub proposed: Vec<f64>,
    pub threshold: Vec<f64>,
    pub proposed_coded: Vec<u64>,
    pub threshold_coded: Vec<u64>,
    pub search: ThresholdSearch,
}

impl LineComparison {
    pub fn ratio(&self) -> f64 {
        mean(self.proposed.iter().copied()) / mean(self.threshold.iter().copied())
    }
}

pub fn compare_line_network(net: &LineNetwork, spec: &TrafficSpec, replications: usize, range: SearchRange) -> Result<LineComparison> {
    let patterns = spec.patterns(replications)?;
    let run = |policy: LinePolicy| -> Result<Vec<LineOutcome>> {
        let idx: Vec<usize> = (0..patterns.len()).collect();
        crate::exec::seq_map(&idx, |&rep| run_line_once(net, &patterns[rep], policy, &mut stream_rng(spec.seed, policy_stream(rep as u64))))
            .into_iter()
            .collect()
    };
    let search = optimize_thresholds(range, true, |tp| {
        let outs = run(LinePolicy::Threshold(tp))?;
        Ok(mean(outs.iter().map(|o| o.total_f64())))
    })?;
    let idx: Vec<usize> = (0..patterns.len()).collect();
    let prop: Vec<LineOutcome> = par_map(&idx, |&rep| {
        run_line_once(net, &patterns[rep], LinePolicy::Proposed, &mut stream_rng(spec.seed, policy_stream(rep as u64)))
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let thr = run(LinePolicy::Threshold(search.best))?;
    Ok(LineComparison {
        proposed: prop.iter().map(|o| o.total_f64()).collect(),
        threshold: thr.iter().map(|o| o.total_f64()).collect(),
        proposed_coded: prop.iter().map(|o| o.coded()).collect(),
        threshold_coded: thr.iter().map(|o| o.coded()).collect(),
        search,
    })
}

/// Which randomized policy to measure against the offline optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RatioPolicy {
    OneSided,
    TwoSided,
}

/// Ratio of the mean reduced cost to OPT for one pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub mean_cost: f64,
    pub opt: f64,
    /// `mean_cost / opt`; 1 when both are zero, infinite when only OPT is.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioStats {
    pub samples: Vec<RatioSample>,
    pub mean: f64,
    pub max: f64,
    /// Patterns with OPT = 0 but a positive policy cost.
    pub infinite: usize,
}

/// Reduced cost `J - C N2` of one randomized run with threshold `u`.
pub fn reduced_cost(pattern: &ArrivalPattern, cm: &CostModel, policy: RatioPolicy, u: f64) -> Result<Rational64> {
    let opts = RunOptions { keep_trace: false, slots: None };
    let out = match policy {
        RatioPolicy::OneSided => {
            let mut pol = OneSidedRandomized::for_pattern(pattern, cm, u)?;
            run_policy_with(pattern, &mut pol, cm, opts)?
        }
        RatioPolicy::TwoSided => {
            let mut pol = TwoSidedRandomized::new(cm, u)?;
            run_policy_with(pattern, &mut pol, cm, opts)?
        }
    };
    Ok(out.ledger.reduced(pattern.n2()))
}

/// Monte-Carlo estimate of `E_u[J] / OPT` for each pattern using `draws`
/// seeded threshold draws.
pub fn empirical_ratio(
    patterns: &[ArrivalPattern],
    cm: &CostModel,
    policy: RatioPolicy,
    draws: usize,
    seed: u64,
) -> Result<RatioStats> {
    let idx: Vec<usize> = (0..patterns.len()).collect();
    let samples: Vec<Result<RatioSample>> = par_map(&idx, |&k| {
        let p = &patterns[k];
        let opt = match policy {
            RatioPolicy::OneSided => opt_one_sided(p, cm)?.cost,
            RatioPolicy::TwoSided => opt_two_sided(p, cm),
        };
        let mut rng = stream_rng(seed, k as u64);
        let mut sum = 0.0;
        for _ in 0..draws {
            let u = rng.gen::<f64>();
            sum += reduced_cost(p, cm, policy, u)?.to_f64().unwrap_or(f64::NAN);
        }
        let mean_cost = sum / draws.max(1) as f64;
        let opt = opt.to_f64().unwrap_or(f64::NAN);
        let ratio = if opt > 0.0 {
            mean_cost / opt
        } else if mean_cost <= 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        Ok(RatioSample { mean_cost, opt, ratio })
    });
    let samples: Vec<RatioSample> = samples.into_iter().collect::<Result<_>>()?;
    let infinite = samples.iter().filter(|s| s.ratio.is_infinite()).count();
    let finite = samples.iter().map(|s| s.ratio).filter(|r| r.is_finite());
    let mean = mean(finite.clone());
    let max = finite.fold(0.0, f64::max);
    Ok(RatioStats { samples, mean, max, infinite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::ski_rental_adapter;
    use crate::primal_dual::ratio_bound_f64;

    fn cm(c: i64) -> CostModel {
        CostModel::integer(c).unwrap()
    }

    #[test]
    fn degenerate_bernoulli() {
        let t = BernoulliTraffic::new(1.0, 0.0, 0.0).unwrap();
        let p = gen_bernoulli_truncated_gaussian(&t, 50, &mut stream_rng(1, 0)).unwrap();
        assert!(p.a1_slice().iter().all(|&a| a == 1));
        assert!(p.a2_slice().iter().all(|&a| a == 0));
    }

    #[test]
    fn bernoulli_rate() {
        let t = BernoulliTraffic::new(0.5, 0.5, 0.0).unwrap();
        let n = 10_000;
        let p = gen_bernoulli_truncated_gaussian(&t, n, &mut stream_rng(7, 0)).unwrap();
        let rate = p.n1() as f64 / n as f64;
        let sd = (0.25f64 / n as f64).sqrt();
        assert!((rate - 0.5).abs() < 3.0 * sd, "{rate}");
    }

    #[test]
    fn truncated_means() {
        assert!((truncated_gaussian_mean(0.5, 2.0) - 0.5).abs() < 1e-6);
        assert!(truncated_gaussian_mean(0.1, 2.0) > 0.3);
        assert_eq!(truncated_gaussian_mean(0.1, 0.0), 0.1);
        let t = BernoulliTraffic::new(0.1, 0.1, 2.0).unwrap();
        let n = 20_000;
        let p = gen_bernoulli_truncated_gaussian(&t, n, &mut stream_rng(3, 0)).unwrap();
        let rate = p.n1() as f64 / n as f64;
        assert!((rate - truncated_gaussian_mean(0.1, 2.0)).abs() < 0.015, "{rate}");
    }

    #[test]
    fn idle_traffic_costs_nothing() {
        let spec = TrafficSpec::bernoulli(BernoulliTraffic::new(0.0, 0.0, 0.0).unwrap(), 100, 1);
        for kind in [PolicyKind::Proposed, PolicyKind::CThreshold, PolicyKind::OptimizedThreshold] {
            let s = run_single_relay(&spec, kind, &cm(5), 3).unwrap();
            assert_eq!(s.mean_cost(), 0.0);
        }
        let net = LineNetwork::uniform(2, cm(5)).unwrap();
        let out = run_line_network(&net, &spec, LinePolicy::Proposed, 2).unwrap();
        assert!(out.iter().all(|o| o.total() == Rational64::from(0)));
    }

    #[test]
    fn line_two_relays_hand_trace() {
        // A enters relay 0 in slot 1, B enters relay 1 in slot 2.
        let p = ArrivalPattern::from_arrival_slots(5, &[1], &[2]).unwrap();
        let net = LineNetwork::uniform(2, cm(5)).unwrap();
        let out = run_line_once(&net, &p, LinePolicy::Threshold(ThresholdPolicy::new(0, 0)), &mut stream_rng(0, 0)).unwrap();
        // Slot 1: relay 0 sends A. Slot 2: relay 1 codes A with B.
        // Slot 3: relay 0 forwards B to the left end.
        assert_eq!(out.coded(), 1);
        assert_eq!(out.delivered, (1, 1));
        assert_eq!(out.ledgers[0].transmissions, 2);
        assert_eq!(out.ledgers[1].transmissions, 1);
        assert_eq!(out.total(), Rational64::from(15));
    }

    #[test]
    fn propagation_takes_one_slot_per_hop() {
        let p = ArrivalPattern::from_arrival_slots(4, &[1], &[]).unwrap();
        let net = LineNetwork::uniform(4, cm(2)).unwrap();
        let out = run_line_once(&net, &p, LinePolicy::Threshold(ThresholdPolicy::new(0, 0)), &mut stream_rng(0, 0)).unwrap();
        assert_eq!(out.delivered.0, 1);
        let p = ArrivalPattern::from_arrival_slots(3, &[1], &[]).unwrap();
        let out = run_line_once(&net, &p, LinePolicy::Threshold(ThresholdPolicy::new(0, 0)), &mut stream_rng(0, 0)).unwrap();
        assert_eq!(out.delivered.0, 0);
    }

    #[test]
    fn ski_rental_ratio_within_bound() {
        let c = cm(2);
        let patterns: Vec<_> = (1..=6).map(|t| ski_rental_adapter(t).unwrap()).collect();
        let stats = empirical_ratio(&patterns, &c, RatioPolicy::OneSided, 2000, 11).unwrap();
        assert_eq!(stats.infinite, 0);
        assert!(stats.max <= ratio_bound_f64(&c) + 0.05, "{stats:?}");
        assert_eq!(stats.samples[0].ratio, 1.0);
    }

    #[test]
    fn seeded_runs_repeat() {
        let spec = TrafficSpec::bernoulli(BernoulliTraffic::new(0.5, 0.3, 0.0).unwrap(), 500, 42);
        let a = run_single_relay(&spec, PolicyKind::Proposed, &cm(5), 4).unwrap();
        let b = run_single_relay(&spec, PolicyKind::Proposed, &cm(5), 4).unwrap();
        assert_eq!(a, b);
        assert!(a.max_transmissions <= 1);
    }
}
