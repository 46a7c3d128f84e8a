//! Slot-indexed model of a single relay: arrival patterns, queue dynamics,
//! decisions and the total-cost ledger shared by every policy and oracle.
//!
//! Slots are 1-indexed. In slot `t` the relay first sees the arrivals
//! `(A1(t), A2(t))`, then transmits `D(t)` packets, then pays one unit per
//! packet left in either queue.

use std::io::{Read, Write};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-slot arrival counts over a finite horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrivalPattern {
    a1: Vec<u32>,
    a2: Vec<u32>,
}

impl ArrivalPattern {
    pub fn new(a1: Vec<u32>, a2: Vec<u32>) -> Result<Self> {
        if a1.len() != a2.len() {
            return Err(Error::InvalidPattern(format!(
                "queue sequences differ in length ({} vs {})",
                a1.len(),
                a2.len()
            )));
        }
        if a1.is_empty() {
            return Err(Error::InvalidPattern("horizon must be at least one slot".into()));
        }
        Ok(Self { a1, a2 })
    }

    /// A horizon of idle slots.
    pub fn idle(horizon: usize) -> Self {
        let horizon = horizon.max(1);
        Self { a1: vec![0; horizon], a2: vec![0; horizon] }
    }

    /// Builds a pattern from lists of arrival slots (one entry per packet).
    pub fn from_arrival_slots(horizon: usize, q1_slots: &[usize], q2_slots: &[usize]) -> Result<Self> {
        let horizon = q1_slots.iter().chain(q2_slots).copied().max().unwrap_or(1).max(horizon).max(1);
        let mut p = Self::idle(horizon);
        for &s in q1_slots {
            if s == 0 {
                return Err(Error::InvalidPattern("slots are 1-indexed".into()));
            }
            p.a1[s - 1] += 1;
        }
        for &s in q2_slots {
            if s == 0 {
                return Err(Error::InvalidPattern("slots are 1-indexed".into()));
            }
            p.a2[s - 1] += 1;
        }
        Ok(p)
    }

    pub fn horizon(&self) -> usize {
        self.a1.len()
    }

    /// `A1(t)`; zero outside the horizon.
    pub fn a1(&self, slot: usize) -> u32 {
        slot.checked_sub(1).and_then(|i| self.a1.get(i)).copied().unwrap_or(0)
    }

    /// `A2(t)`; zero outside the horizon.
    pub fn a2(&self, slot: usize) -> u32 {
        slot.checked_sub(1).and_then(|i| self.a2.get(i)).copied().unwrap_or(0)
    }

    pub fn arrivals(&self, slot: usize) -> (u32, u32) {
        (self.a1(slot), self.a2(slot))
    }

    pub fn a1_slice(&self) -> &[u32] {
        &self.a1
    }

    pub fn a2_slice(&self) -> &[u32] {
        &self.a2
    }

    pub fn n1(&self) -> u64 {
        self.a1.iter().map(|&a| a as u64).sum()
    }

    pub fn n2(&self) -> u64 {
        self.a2.iter().map(|&a| a as u64).sum()
    }

    /// Cumulative `n2(t) = sum_{tau <= t} A2(tau)`.
    pub fn n2_through(&self, slot: usize) -> u64 {
        self.a2.iter().take(slot).map(|&a| a as u64).sum()
    }

    /// Cumulative Q2 arrivals for every slot `1..=horizon`.
    pub fn n2_cumulative(&self) -> Vec<u64> {
        self.a2
            .iter()
            .scan(0u64, |acc, &a| {
                *acc += a as u64;
                Some(*acc)
            })
            .collect()
    }

    /// Arrival slot of every Q1 packet, in arrival order.
    pub fn q1_arrival_slots(&self) -> Vec<usize> {
        expand_slots(&self.a1)
    }

    /// Arrival slot of every Q2 packet, in arrival order.
    pub fn q2_arrival_slots(&self) -> Vec<usize> {
        expand_slots(&self.a2)
    }

    /// Last slot of the run including the drain window: `T + floor(C) + 1`.
    pub fn drain_end(&self, cm: &CostModel) -> usize {
        self.horizon() + cm.floor_c() as usize + 1
    }

    /// All Q1 packets present in slot 1 and none later.
    pub fn is_one_sided(&self) -> bool {
        self.a1.iter().skip(1).all(|&a| a == 0)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for (i, (&a1, &a2)) in self.a1.iter().zip(&self.a2).enumerate() {
            out.serialize(PatternRow { slot: i + 1, a1, a2 })?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let mut a1 = Vec::new();
        let mut a2 = Vec::new();
        for row in rdr.deserialize() {
            let row: PatternRow = row?;
            if row.slot != a1.len() + 1 {
                return Err(Error::InvalidPattern(format!(
                    "expected slot {}, found {}",
                    a1.len() + 1,
                    row.slot
                )));
            }
            a1.push(row.a1);
            a2.push(row.a2);
        }
        Self::new(a1, a2)
    }
}

fn expand_slots(counts: &[u32]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| std::iter::repeat(i + 1).take(a as usize))
        .collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct PatternRow {
    slot: usize,
    a1: u32,
    a2: u32,
}

/// Queue occupancy `(Q1(t), Q2(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RelayQueues {
    pub q1: u64,
    pub q2: u64,
}

impl RelayQueues {
    pub fn new(q1: u64, q2: u64) -> Self {
        Self { q1, q2 }
    }

    pub fn total(&self) -> u64 {
        self.q1 + self.q2
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }
}

/// Transmissions in one slot, split by kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Decision {
    pub coded: u64,
    pub uncoded1: u64,
    pub uncoded2: u64,
}

impl Decision {
    pub const IDLE: Decision = Decision { coded: 0, uncoded1: 0, uncoded2: 0 };

    pub fn new(coded: u64, uncoded1: u64, uncoded2: u64) -> Self {
        Self { coded, uncoded1, uncoded2 }
    }

    /// `D(t)`.
    pub fn total(&self) -> u64 {
        self.coded + self.uncoded1 + self.uncoded2
    }

    pub fn is_idle(&self) -> bool {
        self.total() == 0
    }

    /// Splits `k` transmissions with coded pairs formed first; remaining
    /// uncoded transmissions drain the longer queue first.
    pub fn greedy(q: RelayQueues, k: u64) -> Self {
        let coded = q.q1.min(q.q2).min(k);
        let mut left = k - coded;
        let (mut r1, mut r2) = (q.q1 - coded, q.q2 - coded);
        let (mut u1, mut u2) = (0, 0);
        while left > 0 && r1 + r2 > 0 {
            if r1 >= r2 {
                u1 += 1;
                r1 -= 1;
            } else {
                u2 += 1;
                r2 -= 1;
            }
            left -= 1;
        }
        Self { coded, uncoded1: u1, uncoded2: u2 }
    }

    /// Checks the split against the queues it will be applied to.
    pub fn validate(&self, q: RelayQueues) -> std::result::Result<(), String> {
        if self.coded > q.q1.min(q.q2) {
            return Err(format!("{} coded packets but queues are {:?}", self.coded, q));
        }
        if self.coded + self.uncoded1 > q.q1 {
            return Err(format!("serves {} packets from Q1 holding {}", self.coded + self.uncoded1, q.q1));
        }
        if self.coded + self.uncoded2 > q.q2 {
            return Err(format!("serves {} packets from Q2 holding {}", self.coded + self.uncoded2, q.q2));
        }
        Ok(())
    }

    /// Queues left at the end of the slot once this decision is served.
    pub fn remaining(&self, q: RelayQueues) -> RelayQueues {
        RelayQueues {
            q1: q.q1.saturating_sub(self.coded + self.uncoded1),
            q2: q.q2.saturating_sub(self.coded + self.uncoded2),
        }
    }
}

/// Transmission cost `C` in holding-slot units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    c: Rational64,
}

impl CostModel {
    /// Requires `C > 1`; for `C <= 1` waiting is never worthwhile.
    pub fn new(c: Rational64) -> Result<Self> {
        if c <= Rational64::from_integer(1) {
            return Err(Error::InvalidCost(format!("transmission cost must exceed 1, got {c}")));
        }
        Ok(Self { c })
    }

    pub fn integer(c: i64) -> Result<Self> {
        Self::new(Rational64::from_integer(c))
    }

    /// Costs `c_coded` per coded and `c_uncoded` per uncoded transmission,
    /// reduced to the single effective cost `2*c_uncoded - c_coded`.
    pub fn non_consistent(c_coded: Rational64, c_uncoded: Rational64) -> Result<Self> {
        Self::new(effective_cost(c_coded, c_uncoded)?)
    }

    pub fn c(&self) -> Rational64 {
        self.c
    }

    pub fn c_f64(&self) -> f64 {
        self.c.to_f64().unwrap_or(f64::NAN)
    }

    pub fn floor_c(&self) -> u64 {
        self.c.floor().to_integer() as u64
    }

    pub fn ceil_c(&self) -> u64 {
        self.c.ceil().to_integer() as u64
    }
}

impl FromStr for CostModel {
    type Err = Error;

    /// Parses decimal literals such as `10`, `1.5` or `7/2` exactly.
    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_decimal_ratio(s)?)
    }
}

impl std::fmt::Display for CostModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", format_ratio(self.c))
    }
}

/// Parses `a`, `a.b` or `p/q` into an exact rational.
pub fn parse_decimal_ratio(s: &str) -> Result<Rational64> {
    let s = s.trim();
    let bad = || Error::InvalidCost(format!("cannot parse {s:?} as a rational number"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 12 || !frac.chars().all(|ch| ch.is_ascii_digit()) {
        return Err(bad());
    }
    let negative = int.starts_with('-');
    let int: i64 = if int.is_empty() || int == "-" { 0 } else { int.parse().map_err(|_| bad())? };
    let denom = 10i64.pow(frac.len() as u32);
    let frac: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let numer = int.abs() * denom + frac;
    Ok(Rational64::new(if negative { -numer } else { numer }, denom))
}

/// Integers print without a denominator; other values print as decimals.
pub fn format_ratio(r: Rational64) -> String {
    if r.is_integer() {
        r.to_integer().to_string()
    } else {
        format!("{}", r.to_f64().unwrap_or(f64::NAN))
    }
}

/// Effective transmission cost when coded packets cost `c_coded` and uncoded
/// packets cost `c_uncoded`: `2*c_uncoded - c_coded`.
pub fn effective_cost(c_coded: Rational64, c_uncoded: Rational64) -> Result<Rational64> {
    if c_uncoded <= Rational64::zero() || c_coded < c_uncoded {
        return Err(Error::InvalidCost(format!(
            "need c_coded >= c_uncoded > 0, got ({c_coded}, {c_uncoded})"
        )));
    }
    let eff = c_uncoded * 2 - c_coded;
    if eff < Rational64::zero() {
        return Err(Error::InvalidCost(format!(
            "coding never saves cost: 2*{c_uncoded} - {c_coded} < 0"
        )));
    }
    Ok(eff)
}

/// Applies `D(t)` then the next slot's arrivals.
pub fn queue_step(q: RelayQueues, d: Decision, next_arrivals: (u32, u32)) -> Result<RelayQueues> {
    d.validate(q).map_err(|reason| Error::InvalidDecision { slot: 0, reason })?;
    let r = d.remaining(q);
    Ok(RelayQueues { q1: r.q1 + next_arrivals.0 as u64, q2: r.q2 + next_arrivals.1 as u64 })
}

/// `(C * D(t), packets left at slot end)` for queues seen before service.
pub fn slot_cost(q_before: RelayQueues, d: Decision, cm: &CostModel) -> (Rational64, Rational64) {
    let tx = cm.c() * d.total() as i64;
    let hold = d.remaining(q_before).total() as i64;
    (tx, Rational64::from_integer(hold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub decision: Decision,
    pub holding: u64,
}

/// Transmission and holding totals of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostLedger {
    pub c: Rational64,
    pub transmissions: u64,
    pub coded: u64,
    pub holding: u64,
    /// Packets still queued at the end of the drain window, force-sent at cost C each.
    pub flushed: u64,
    pub trace: Vec<SlotRecord>,
}

impl CostLedger {
    pub fn new(cm: &CostModel) -> Self {
        Self { c: cm.c(), transmissions: 0, coded: 0, holding: 0, flushed: 0, trace: Vec::new() }
    }

    pub fn record(&mut self, slot: usize, q_before: RelayQueues, d: Decision, keep_trace: bool) {
        let holding = d.remaining(q_before).total();
        self.transmissions += d.total();
        self.coded += d.coded;
        self.holding += holding;
        if keep_trace {
            self.trace.push(SlotRecord { slot, decision: d, holding });
        }
    }

    pub fn tx_cost(&self) -> Rational64 {
        self.c * self.transmissions as i64
    }

    pub fn holding_cost(&self) -> Rational64 {
        Rational64::from_integer(self.holding as i64)
    }

    /// `J(A, pi)`.
    pub fn total(&self) -> Rational64 {
        self.tx_cost() + self.holding_cost()
    }

    pub fn total_f64(&self) -> f64 {
        self.total().to_f64().unwrap_or(f64::NAN)
    }

    /// `J - C * N2`, the cost the one- and two-sided problems minimize.
    pub fn reduced(&self, n2: u64) -> Rational64 {
        self.total() - self.c * n2 as i64
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["slot", "tx_cost", "holding_cost"])?;
        for r in &self.trace {
            let tx = self.c * r.decision.total() as i64;
            out.write_record([r.slot.to_string(), format_ratio(tx), r.holding.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A per-slot online decision rule.
pub trait SchedulingPolicy {
    /// Called once per slot after the arrivals have joined `queues`.
    fn decide(&mut self, slot: usize, queues: RelayQueues, arrivals: (u32, u32)) -> Result<Decision>;
}

impl<P: SchedulingPolicy + ?Sized> SchedulingPolicy for Box<P> {
    fn decide(&mut self, slot: usize, queues: RelayQueues, arrivals: (u32, u32)) -> Result<Decision> {
        (**self).decide(slot, queues, arrivals)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub ledger: CostLedger,
    /// Occupancy after the last drain slot, before the flush.
    pub final_queues: RelayQueues,
    pub slots: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub keep_trace: bool,
    /// Simulated slots; defaults to the drain window end.
    pub slots: Option<usize>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { keep_trace: true, slots: None }
    }
}

/// Drives `policy` over `pattern` through the drain window.
pub fn run_policy<P: SchedulingPolicy + ?Sized>(
    pattern: &ArrivalPattern,
    policy: &mut P,
    cm: &CostModel,
) -> Result<RunOutcome> {
    run_policy_with(pattern, policy, cm, RunOptions::default())
}

pub fn run_policy_with<P: SchedulingPolicy + ?Sized>(
    pattern: &ArrivalPattern,
    policy: &mut P,
    cm: &CostModel,
    opts: RunOptions,
) -> Result<RunOutcome> {
    let end = opts.slots.unwrap_or_else(|| pattern.drain_end(cm));
    let mut ledger = CostLedger::new(cm);
    let (a1, a2) = pattern.arrivals(1);
    let mut q = RelayQueues::new(a1 as u64, a2 as u64);
    for slot in 1..=end {
        let arrivals = pattern.arrivals(slot);
        let d = policy.decide(slot, q, arrivals)?;
        d.validate(q).map_err(|reason| Error::InvalidDecision { slot, reason })?;
        ledger.record(slot, q, d, opts.keep_trace);
        q = queue_step(q, d, pattern.arrivals(slot + 1))?;
    }
    // Arrivals past `end` are outside the pattern, so `q` is the leftover.
    let final_queues = q;
    if !q.is_empty() {
        let flush = Decision::greedy(q, q.q1.max(q.q2));
        ledger.transmissions += flush.total();
        ledger.coded += flush.coded;
        ledger.flushed = q.total();
    }
    Ok(RunOutcome { ledger, final_queues, slots: end })
}
