//! Threshold comparison policies, exhaustive threshold search, and the
//! ski-rental instance builder.

use std::io::Write;

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::relay::{run_policy_with, ArrivalPattern, CostModel, Decision, RelayQueues, RunOptions, SchedulingPolicy};

/// Codes every available pair; when exactly one queue is left non-empty and
/// holds more than its threshold, sends one uncoded packet from it.
///
/// With `constrained` at most one transmission goes out per slot, coded
/// first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ThresholdPolicy {
    pub theta1: u64,
    pub theta2: u64,
    pub constrained: bool,
}

impl ThresholdPolicy {
    pub fn new(theta1: u64, theta2: u64) -> Self {
        Self { theta1, theta2, constrained: false }
    }

    /// Transmit uncoded once more than `C` packets wait; for integer queue
    /// sizes that is a threshold of `floor(C)`.
    pub fn c_threshold(cm: &CostModel) -> Self {
        let c = cm.floor_c();
        Self::new(c, c)
    }

    pub fn constrained(mut self, on: bool) -> Self {
        self.constrained = on;
        self
    }

    pub fn decide_queues(&self, q: RelayQueues) -> Decision {
        let mut coded = q.q1.min(q.q2);
        if self.constrained {
            coded = coded.min(1);
            if coded == 1 {
                return Decision::new(1, 0, 0);
            }
        }
        let r1 = q.q1 - coded;
        let r2 = q.q2 - coded;
        match (r1 > 0, r2 > 0) {
            (true, false) if r1 > self.theta1 => Decision::new(coded, 1, 0),
            (false, true) if r2 > self.theta2 => Decision::new(coded, 0, 1),
            _ => Decision::new(coded, 0, 0),
        }
    }
}

impl SchedulingPolicy for ThresholdPolicy {
    fn decide(&mut self, _: usize, queues: RelayQueues, _: (u32, u32)) -> Result<Decision> {
        Ok(self.decide_queues(queues))
    }
}

/// Sends everything at once: pairs coded, the rest uncoded.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransmitAll;

impl SchedulingPolicy for TransmitAll {
    fn decide(&mut self, _: usize, q: RelayQueues, _: (u32, u32)) -> Result<Decision> {
        Ok(Decision::greedy(q, q.q1.max(q.q2)))
    }
}

/// Codes pairs and never sends anything uncoded.
#[derive(Debug, Clone, Copy, Default)]
pub struct CodeOnly;

impl SchedulingPolicy for CodeOnly {
    fn decide(&mut self, _: usize, q: RelayQueues, _: (u32, u32)) -> Result<Decision> {
        Ok(Decision::new(q.q1.min(q.q2), 0, 0))
    }
}

/// Inclusive threshold grid `{lo, ..., hi}` applied to both queues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchRange {
    pub lo: u64,
    pub hi: u64,
}

impl SearchRange {
    pub fn new(lo: u64, hi: u64) -> Result<Self> {
        if lo > hi {
            return Err(Error::EmptySearchRange);
        }
        Ok(Self { lo, hi })
    }

    /// `{0, ..., ceil(C)}`.
    pub fn default_for(cm: &CostModel) -> Self {
        Self { lo: 0, hi: cm.ceil_c() }
    }

    /// All pairs in lexicographic order.
    pub fn grid(&self) -> Vec<(u64, u64)> {
        (self.lo..=self.hi).flat_map(|a| (self.lo..=self.hi).map(move |b| (a, b))).collect()
    }
}

/// How a threshold pair is applied in a multi-relay network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// One pair per queue of a single relay.
    PerQueue,
    /// Every relay uses the same pair: all left-to-right queues share
    /// `theta1`, all right-to-left queues share `theta2`.
    PerSideShared,
}

/// Outcome of an exhaustive search.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub best: ThresholdPolicy,
    pub best_cost: f64,
    /// `(theta1, theta2, mean_cost)` for every grid point, in grid order.
    pub table: Vec<(u64, u64, f64)>,
}

impl ThresholdSearch {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_threshold_sweep(&self.table, w)
    }
}

pub fn write_threshold_sweep<W: Write>(table: &[(u64, u64, f64)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theta1", "theta2", "mean_cost"])?;
    for (a, b, c) in table {
        out.write_record([a.to_string(), b.to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

/// Evaluates `cost` on every grid pair and returns the minimizer; ties go
/// to the lexicographically smallest pair.
pub fn optimize_thresholds<F>(range: SearchRange, constrained: bool, cost: F) -> Result<ThresholdSearch>
where
    F: Fn(ThresholdPolicy) -> Result<f64> + Sync + Send,
{
    let grid = range.grid();
    let costs = par_map(&grid, |&(a, b)| cost(ThresholdPolicy::new(a, b).constrained(constrained)));
    let mut table = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (k, (&(a, b), c)) in grid.iter().zip(costs).enumerate() {
        let c = c?;
        table.push((a, b, c));
        if best.map_or(true, |(_, bc)| c < bc) {
            best = Some((k, c));
        }
    }
    let (k, best_cost) = best.ok_or(Error::EmptySearchRange)?;
    let (a, b) = grid[k];
    Ok(ThresholdSearch { best: ThresholdPolicy::new(a, b).constrained(constrained), best_cost, table })
}

/// Mean total cost of `policy` over `patterns`, each run for `slots` slots
/// (the drain window when `None`).
pub fn mean_cost_on(
    patterns: &[ArrivalPattern],
    cm: &CostModel,
    policy: ThresholdPolicy,
    slots: Option<usize>,
) -> Result<f64> {
    if patterns.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for p in patterns {
        let mut pol = policy;
        let out = run_policy_with(p, &mut pol, cm, RunOptions { keep_trace: false, slots })?;
        sum += out.ledger.total_f64();
    }
    Ok(sum / patterns.len() as f64)
}

/// Exhaustive search over fixed patterns. Passing several seeded
/// replications of a traffic model averages them with common random numbers.
pub fn optimize_thresholds_on(
    patterns: &[ArrivalPattern],
    cm: &CostModel,
    range: SearchRange,
    constrained: bool,
    slots: Option<usize>,
) -> Result<ThresholdSearch> {
    optimize_thresholds(range, constrained, |p| mean_cost_on(patterns, cm, p, slots))
}

/// One Q1 packet in slot 1 and its partner in slot `t`: the skier rents on
/// day `s` exactly when the relay idles in slot `s`.
pub fn ski_rental_adapter(t: usize) -> Result<ArrivalPattern> {
    if t == 0 {
        return Err(Error::InvalidPattern("ski-rental day must be at least 1".into()));
    }
    ArrivalPattern::from_arrival_slots(t, &[1], &[t])
}
