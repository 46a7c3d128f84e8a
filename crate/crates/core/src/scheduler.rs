//! Randomized rounding of the fractional primal-dual trajectory into
//! per-slot transmission decisions.
//!
//! A single threshold `u ~ U[0,1)` is drawn once. Each time the aggregate
//! mass `X(t) = sum_i x_i` passes `u + k` for an integer `k`, one uncoded
//! packet is sent and the threshold moves up by one. The expected number of
//! uncoded transmissions in a slot is therefore the mass increment of that
//! slot.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::primal_dual::{PdState, StepReport};
use crate::relay::{ArrivalPattern, CostModel, Decision, RelayQueues, SchedulingPolicy};
use crate::scalar::Scalar;

/// Shared threshold `u + shifts` and the aggregate mass seen so far.
#[derive(Debug, Clone)]
pub struct RoundingState<S> {
    u: S,
    threshold: S,
    x: S,
    shifts: u64,
}

impl<S: Scalar> RoundingState<S> {
    pub fn new(u: S) -> Self {
        assert!(u >= S::zero() && u < S::one(), "u must lie in [0, 1)");
        Self { threshold: u.clone(), u, x: S::zero(), shifts: 0 }
    }

    /// Initial draw `u`.
    pub fn u(&self) -> &S {
        &self.u
    }

    /// Number of crossings so far.
    pub fn shifts(&self) -> u64 {
        self.shifts
    }

    /// `X` after the last slot.
    pub fn x(&self) -> &S {
        &self.x
    }

    /// Current comparison point `u + shifts`.
    pub fn threshold(&self) -> &S {
        &self.threshold
    }

    /// Raises `X` by `delta` and returns how many integer shifts of `u` fall
    /// in `[X_pre, X)`.
    pub fn advance(&mut self, delta: S) -> u64 {
        let next = self.x.clone() + delta;
        self.advance_to(next)
    }

    pub fn advance_to(&mut self, x: S) -> u64 {
        self.x = x;
        let mut k = 0;
        while self.threshold.strictly_less(&self.x) {
            self.threshold = self.threshold.clone() + S::one();
            k += 1;
        }
        self.shifts += k;
        k
    }
}

/// One row of the decision trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionRecord {
    pub slot: usize,
    pub decision: Decision,
    /// Threshold shifts made this slot, including clamped ones.
    pub u_shift: u64,
}

pub fn write_decision_trace<W: Write>(records: &[DecisionRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["slot", "coded", "uncoded_q1", "uncoded_q2", "u_shift"])?;
    for r in records {
        out.write_record([
            r.slot.to_string(),
            r.decision.coded.to_string(),
            r.decision.uncoded1.to_string(),
            r.decision.uncoded2.to_string(),
            r.u_shift.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Counters every randomized policy keeps for the cap checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PolicyStats {
    /// Largest number of threshold crossings in one slot.
    pub max_crossings: u64,
    /// Largest number of transmissions in one slot.
    pub max_transmissions: u64,
    /// Crossings that found no waiting packet to send.
    pub clamped: u64,
    /// Owner changes of the waiting queue.
    pub flips: u64,
}

impl PolicyStats {
    fn note(&mut self, crossings: u64, sent: u64, d: Decision) {
        self.max_crossings = self.max_crossings.max(crossings);
        self.max_transmissions = self.max_transmissions.max(d.total());
        self.clamped += crossings - sent;
    }
}

/// Physically waiting packets, keyed by primal-dual index.
///
/// Coding takes the most recent packet; an uncoded send takes the packet with
/// the most updates (largest `x_i`), ties to the earliest arrival.
#[derive(Debug, Clone, Default)]
pub struct WaitingBook {
    present: BTreeSet<usize>,
    ranked: BTreeSet<(Reverse<u32>, usize)>,
    counts: BTreeMap<usize, u32>,
}

impl WaitingBook {
    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn insert(&mut self, i: usize) {
        self.present.insert(i);
        self.ranked.insert((Reverse(0), i));
        self.counts.insert(i, 0);
    }

    /// Records one more update for `i` if it is still waiting.
    pub fn bump(&mut self, i: usize) {
        if let Some(c) = self.counts.get_mut(&i) {
            self.ranked.remove(&(Reverse(*c), i));
            *c += 1;
            self.ranked.insert((Reverse(*c), i));
        }
    }

    fn remove(&mut self, i: usize) {
        let c = self.counts.remove(&i).expect("packet is waiting");
        self.ranked.remove(&(Reverse(c), i));
        self.present.remove(&i);
    }

    pub fn take_for_coding(&mut self) -> Option<usize> {
        let i = *self.present.iter().next_back()?;
        self.remove(i);
        Some(i)
    }

    pub fn take_uncoded(&mut self) -> Option<usize> {
        let &(_, i) = self.ranked.iter().next()?;
        self.remove(i);
        Some(i)
    }

    pub fn clear(&mut self) {
        *self = Self::default();
    }
}

/// Result of one scheduling step.
#[derive(Debug, Clone)]
pub struct Scheduled<S> {
    pub decision: Decision,
    /// Threshold crossings before clamping to the waiting packets.
    pub crossings: u64,
    pub report: Option<StepReport<S>>,
}

/// One-sided slot: code `min(Q1, A2)` pairs, send leftover Q2 arrivals
/// uncoded, and if Q1 still holds packets advance the fractional state and
/// send one uncoded Q1 packet per crossing.
///
/// `q` is the occupancy seen at the start of the slot (arrivals included) and
/// `n2_t` the cumulative Q2 count.
pub fn schedule_step_one_sided<S: Scalar>(
    rs: &mut RoundingState<S>,
    pd: &mut PdState<S>,
    q: RelayQueues,
    n2_t: u64,
) -> Scheduled<S> {
    let coded = q.q1.min(q.q2);
    let uncoded2 = q.q2 - coded;
    let left = q.q1 - coded;
    if left == 0 {
        return Scheduled { decision: Decision::new(coded, 0, uncoded2), crossings: 0, report: None };
    }
    let report = pd.step_one_sided(n2_t);
    let crossings = rs.advance(report.delta_x.clone());
    let uncoded1 = crossings.min(left);
    Scheduled { decision: Decision::new(coded, uncoded1, uncoded2), crossings, report: Some(report) }
}

/// Two-sided slot without a transmission cap: each Q2 arrival codes with the
/// most recent waiting Q1 packet, the rest go uncoded; crossings of the
/// shared threshold send waiting Q1 packets uncoded. The caller registers
/// this slot's Q1 arrivals in `book` first.
pub fn schedule_step_two_sided<S: Scalar>(
    rs: &mut RoundingState<S>,
    pd: &mut PdState<S>,
    book: &mut WaitingBook,
    q: RelayQueues,
    arrivals: (u32, u32),
) -> Scheduled<S> {
    let report = pd.step_two_sided(arrivals);
    finish_two_sided(rs, book, q, report)
}

/// As [`schedule_step_two_sided`] with at most one transmission per slot.
/// Arrivals must already be spread to at most one per queue.
pub fn schedule_step_constrained<S: Scalar>(
    rs: &mut RoundingState<S>,
    pd: &mut PdState<S>,
    book: &mut WaitingBook,
    q: RelayQueues,
    arrivals: (u32, u32),
) -> Result<Scheduled<S>> {
    let report = pd.step_constrained(arrivals)?;
    let s = finish_two_sided(rs, book, q, report);
    assert!(s.decision.total() <= 1, "constrained step produced {:?}", s.decision);
    Ok(s)
}

fn finish_two_sided<S: Scalar>(
    rs: &mut RoundingState<S>,
    book: &mut WaitingBook,
    q: RelayQueues,
    report: StepReport<S>,
) -> Scheduled<S> {
    let coded = q.q1.min(q.q2);
    let uncoded2 = q.q2 - coded;
    for _ in 0..coded {
        book.take_for_coding();
    }
    for &i in &report.updated {
        book.bump(i);
    }
    let crossings = rs.advance(report.delta_x.clone());
    let mut uncoded1 = 0;
    for _ in 0..crossings {
        if book.take_uncoded().is_none() {
            break;
        }
        uncoded1 += 1;
    }
    Scheduled { decision: Decision::new(coded, uncoded1, uncoded2), crossings, report: Some(report) }
}

/// Defers arrivals beyond one per slot and queue to the following slots,
/// extending the horizon as needed.
pub fn spread_arrivals(pattern: &ArrivalPattern) -> ArrivalPattern {
    fn spread(a: &[u32]) -> Vec<u32> {
        let mut out = Vec::with_capacity(a.len());
        let mut pending = 0u64;
        for &n in a {
            pending += n as u64;
            out.push(pending.min(1) as u32);
            pending = pending.saturating_sub(1);
        }
        while pending > 0 {
            out.push(1);
            pending -= 1;
        }
        out
    }
    let mut a1 = spread(pattern.a1_slice());
    let mut a2 = spread(pattern.a2_slice());
    let len = a1.len().max(a2.len());
    a1.resize(len, 0);
    a2.resize(len, 0);
    ArrivalPattern::new(a1, a2).expect("spreading keeps a valid pattern")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Q1,
    Q2,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Q1 => Side::Q2,
            Side::Q2 => Side::Q1,
        }
    }

    /// `(owner-side, other-side)` view of a per-queue pair.
    pub fn orient<T: Copy>(self, pair: (T, T)) -> (T, T) {
        match self {
            Side::Q1 => pair,
            Side::Q2 => (pair.1, pair.0),
        }
    }
}

/// Waiting queue `Q_w` owned by one original queue, plus the per-slot count
/// `Q_c` of arrivals that found a partner immediately.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaitingCodingQueues {
    pub qw: u64,
    pub owner: Side,
    pub qc: u64,
}

impl Default for WaitingCodingQueues {
    fn default() -> Self {
        Self { qw: 0, owner: Side::Q1, qc: 0 }
    }
}

/// Routes one slot of arrivals `(A1, A2)`. Returns the new queues, the coded
/// pair count and whether the owner changed.
pub fn waiting_coding_route(wc: WaitingCodingQueues, arrivals: (u64, u64)) -> (WaitingCodingQueues, u64, bool) {
    let (same, other) = wc.owner.orient(arrivals);
    let waiting = wc.qw + same;
    let coded = waiting.min(other);
    let excess = other - coded;
    if excess > 0 {
        (WaitingCodingQueues { qw: excess, owner: wc.owner.other(), qc: coded }, coded, true)
    } else {
        (WaitingCodingQueues { qw: waiting - coded, owner: wc.owner, qc: coded }, coded, false)
    }
}

/// One-sided randomized policy for `n1` Q1 packets present from slot 1.
#[derive(Debug, Clone)]
pub struct OneSidedRandomized<S> {
    pd: PdState<S>,
    rounding: RoundingState<S>,
    n2: u64,
    stats: PolicyStats,
    trace: Option<Vec<DecisionRecord>>,
}

impl<S: Scalar> OneSidedRandomized<S> {
    pub fn new(cm: &CostModel, n1: usize, u: S) -> Result<Self> {
        Ok(Self {
            pd: PdState::one_sided(cm, n1, false)?,
            rounding: RoundingState::new(u),
            n2: 0,
            stats: PolicyStats::default(),
            trace: None,
        })
    }

    pub fn for_pattern(pattern: &ArrivalPattern, cm: &CostModel, u: S) -> Result<Self> {
        if !pattern.is_one_sided() {
            return Err(Error::NotOneSided("Q1 arrivals after slot 1".into()));
        }
        Self::new(cm, pattern.n1() as usize, u)
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn stats(&self) -> PolicyStats {
        self.stats
    }

    pub fn rounding(&self) -> &RoundingState<S> {
        &self.rounding
    }

    pub fn pd(&self) -> &PdState<S> {
        &self.pd
    }

    pub fn trace(&self) -> &[DecisionRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }
}

impl<S: Scalar> SchedulingPolicy for OneSidedRandomized<S> {
    fn decide(&mut self, slot: usize, queues: RelayQueues, arrivals: (u32, u32)) -> Result<Decision> {
        if slot > 1 && arrivals.0 > 0 {
            return Err(Error::NotOneSided(format!("Q1 arrival in slot {slot}")));
        }
        self.n2 += arrivals.1 as u64;
        let s = schedule_step_one_sided(&mut self.rounding, &mut self.pd, queues, self.n2);
        self.stats.note(s.crossings, s.decision.uncoded1, s.decision);
        if let Some(t) = self.trace.as_mut() {
            t.push(DecisionRecord { slot, decision: s.decision, u_shift: s.crossings });
        }
        Ok(s.decision)
    }
}

/// Two-sided randomized policy where only Q1 packets wait and Q2 packets are
/// served on arrival. `constrained` enables the one-transmission variant.
#[derive(Debug, Clone)]
pub struct TwoSidedRandomized<S> {
    pd: PdState<S>,
    rounding: RoundingState<S>,
    book: WaitingBook,
    stats: PolicyStats,
    trace: Option<Vec<DecisionRecord>>,
}

impl<S: Scalar> TwoSidedRandomized<S> {
    pub fn new(cm: &CostModel, u: S) -> Result<Self> {
        Self::build(PdState::two_sided(cm, false)?, u)
    }

    pub fn constrained(cm: &CostModel, u: S) -> Result<Self> {
        Self::build(PdState::constrained(cm, false)?, u)
    }

    fn build(pd: PdState<S>, u: S) -> Result<Self> {
        Ok(Self {
            pd,
            rounding: RoundingState::new(u),
            book: WaitingBook::default(),
            stats: PolicyStats::default(),
            trace: None,
        })
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn stats(&self) -> PolicyStats {
        self.stats
    }

    pub fn pd(&self) -> &PdState<S> {
        &self.pd
    }

    pub fn rounding(&self) -> &RoundingState<S> {
        &self.rounding
    }

    pub fn trace(&self) -> &[DecisionRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }
}

impl<S: Scalar> SchedulingPolicy for TwoSidedRandomized<S> {
    fn decide(&mut self, slot: usize, queues: RelayQueues, arrivals: (u32, u32)) -> Result<Decision> {
        let base = self.pd.packets();
        for k in 0..arrivals.0 as usize {
            self.book.insert(base + k);
        }
        let s = match self.pd.mode() {
            crate::primal_dual::PdMode::Constrained => {
                schedule_step_constrained(&mut self.rounding, &mut self.pd, &mut self.book, queues, arrivals)?
            }
            _ => schedule_step_two_sided(&mut self.rounding, &mut self.pd, &mut self.book, queues, arrivals),
        };
        self.stats.note(s.crossings, s.decision.uncoded1, s.decision);
        if let Some(t) = self.trace.as_mut() {
            t.push(DecisionRecord { slot, decision: s.decision, u_shift: s.crossings });
        }
        Ok(s.decision)
    }
}

/// The full single-relay policy: waiting-coding queues, the one-transmission
/// variant of the two-sided state machine, and online spreading of bursts.
///
/// Each owner change of the waiting queue starts a fresh fractional state;
/// the rounding threshold is kept across them so `X` accumulates.
#[derive(Debug, Clone)]
pub struct ProposedPolicy<S> {
    cm: CostModel,
    pd: PdState<S>,
    rounding: RoundingState<S>,
    book: WaitingBook,
    wc: WaitingCodingQueues,
    pending: (u64, u64),
    stats: PolicyStats,
    trace: Option<Vec<DecisionRecord>>,
}

impl<S: Scalar> ProposedPolicy<S> {
    pub fn new(cm: &CostModel, u: S) -> Result<Self> {
        Ok(Self {
            cm: *cm,
            pd: PdState::constrained(cm, false)?,
            rounding: RoundingState::new(u),
            book: WaitingBook::default(),
            wc: WaitingCodingQueues::default(),
            pending: (0, 0),
            stats: PolicyStats::default(),
            trace: None,
        })
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn stats(&self) -> PolicyStats {
        self.stats
    }

    pub fn waiting(&self) -> WaitingCodingQueues {
        self.wc
    }

    pub fn rounding(&self) -> &RoundingState<S> {
        &self.rounding
    }

    pub fn trace(&self) -> &[DecisionRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    fn admit(&mut self, pd_arrivals: (u32, u32), dx: &mut S) -> Result<()> {
        let base = self.pd.packets();
        for k in 0..pd_arrivals.0 as usize {
            self.book.insert(base + k);
        }
        let report = self.pd.step_constrained(pd_arrivals)?;
        for &i in &report.updated {
            self.book.bump(i);
        }
        *dx = dx.clone() + report.delta_x;
        Ok(())
    }
}

impl<S: Scalar> SchedulingPolicy for ProposedPolicy<S> {
    fn decide(&mut self, slot: usize, queues: RelayQueues, arrivals: (u32, u32)) -> Result<Decision> {
        self.pending.0 += arrivals.0 as u64;
        self.pending.1 += arrivals.1 as u64;
        let released = (self.pending.0.min(1), self.pending.1.min(1));
        self.pending.0 -= released.0;
        self.pending.1 -= released.1;

        let owner = self.wc.owner;
        let (wc, coded, flip) = waiting_coding_route(self.wc, released);
        let (same, _) = owner.orient(released);
        let mut dx = S::zero();
        // The old epoch sees its own arrivals and the coded partners.
        self.admit((same as u32, coded as u32), &mut dx)?;
        for _ in 0..coded {
            self.book.take_for_coding();
        }
        if flip {
            self.stats.flips += 1;
            self.pd = PdState::constrained(&self.cm, false)?;
            self.book.clear();
            self.admit((wc.qw as u32, 0), &mut dx)?;
        }
        self.wc = wc;

        let crossings = self.rounding.advance(dx);
        let mut sent = 0;
        if coded == 0 {
            for _ in 0..crossings {
                if self.wc.qw == 0 || self.book.take_uncoded().is_none() {
                    break;
                }
                self.wc.qw -= 1;
                sent += 1;
            }
        }
        let decision = match self.wc.owner {
            Side::Q1 => Decision::new(coded, sent, 0),
            Side::Q2 => Decision::new(coded, 0, sent),
        };
        assert!(decision.total() <= 1, "slot {slot}: {decision:?} breaks the transmission cap");
        debug_assert_eq!(
            self.wc.owner.orient((queues.q1, queues.q2)).0,
            self.wc.qw + sent + coded + self.wc.owner.orient(self.pending).0,
        );
        self.stats.note(crossings, sent, decision);
        if let Some(t) = self.trace.as_mut() {
            t.push(DecisionRecord { slot, decision, u_shift: crossings });
        }
        Ok(decision)
    }
}

/// Draws `u ~ U[0,1)`.
pub fn draw_u<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.gen::<f64>()
}

#[cfg(test)]
mod tests {
    use num_rational::{BigRational, Rational64};

    use super::*;
    use crate::relay::run_policy;
    use crate::scalar::big_ratio;

    fn cm(c: i64) -> CostModel {
        CostModel::integer(c).unwrap()
    }

    fn ru(n: i64, d: i64) -> BigRational {
        big_ratio(n, d)
    }

    #[test]
    fn rounding_crossings() {
        let mut rs = RoundingState::new(ru(3, 10));
        assert_eq!(rs.advance(ru(2, 5)), 1);
        assert_eq!(rs.advance(ru(3, 5)), 0);
        let mut rs = RoundingState::new(ru(7, 10));
        assert_eq!(rs.advance(ru(2, 5)), 0);
        assert_eq!(rs.advance(ru(3, 5)), 1);
        assert_eq!(rs.threshold(), &ru(17, 10));
        let mut rs = RoundingState::new(0.0f64);
        assert_eq!(rs.advance(2.5), 3);
        assert_eq!(rs.shifts(), 3);
    }

    #[test]
    fn rounding_boundary_is_half_open() {
        // X landing exactly on u + k does not cross it.
        let mut rs = RoundingState::new(ru(1, 2));
        assert_eq!(rs.advance(ru(1, 2)), 0);
        assert_eq!(rs.advance(ru(1, 100)), 1);
    }

    #[test]
    fn one_sided_c2_single_packet() {
        let p = ArrivalPattern::from_arrival_slots(1, &[1], &[]).unwrap();
        for (u, slot) in [(ru(3, 10), 1usize), (ru(7, 10), 2)] {
            let mut pol = OneSidedRandomized::for_pattern(&p, &cm(2), u).unwrap().with_trace();
            let out = run_policy(&p, &mut pol, &cm(2)).unwrap();
            let sent: Vec<usize> = pol.trace().iter().filter(|r| r.decision.uncoded1 > 0).map(|r| r.slot).collect();
            assert_eq!(sent, vec![slot]);
            assert_eq!(out.ledger.flushed, 0);
        }
    }

    #[test]
    fn one_sided_frozen_mass_stops_sending() {
        let p = ArrivalPattern::from_arrival_slots(8, &[1, 1], &[]).unwrap();
        let mut pol = OneSidedRandomized::for_pattern(&p, &cm(2), 0.99).unwrap().with_trace();
        run_policy(&p, &mut pol, &cm(2)).unwrap();
        let total: u64 = pol.trace().iter().map(|r| r.decision.uncoded1).sum();
        assert_eq!(total, 2);
        assert!(pol.trace().iter().skip(2).all(|r| r.decision.is_idle()));
    }

    #[test]
    fn one_sided_rejects_late_q1() {
        let p = ArrivalPattern::from_arrival_slots(3, &[1, 2], &[]).unwrap();
        assert!(OneSidedRandomized::<f64>::for_pattern(&p, &cm(2), 0.5).is_err());
    }

    #[test]
    fn two_sided_example_with_half_threshold() {
        let p = ArrivalPattern::from_arrival_slots(4, &[1, 3], &[]).unwrap();
        let mut pol = TwoSidedRandomized::new(&cm(2), ru(1, 2)).unwrap().with_trace();
        run_policy(&p, &mut pol, &cm(2)).unwrap();
        let sent: Vec<usize> = pol.trace().iter().filter(|r| r.decision.uncoded1 > 0).map(|r| r.slot).collect();
        assert_eq!(sent, vec![2, 4]);
        assert_eq!(pol.rounding().x(), &ru(2, 1));
    }

    #[test]
    fn two_sided_codes_q2_arrivals() {
        let p = ArrivalPattern::from_arrival_slots(3, &[1], &[2, 3]).unwrap();
        let mut pol = TwoSidedRandomized::new(&cm(5), 0.999).unwrap().with_trace();
        let out = run_policy(&p, &mut pol, &cm(5)).unwrap();
        assert_eq!(pol.trace()[1].decision, Decision::new(1, 0, 0));
        assert_eq!(pol.trace()[2].decision, Decision::new(0, 0, 1));
        assert_eq!(out.ledger.total(), Rational64::from(11));
        let idle = ArrivalPattern::idle(3);
        let mut pol = TwoSidedRandomized::new(&cm(5), 0.2).unwrap().with_trace();
        run_policy(&idle, &mut pol, &cm(5)).unwrap();
        assert!(pol.trace().iter().all(|r| r.decision.is_idle()));
    }

    #[test]
    fn constrained_caps_transmissions() {
        let p = ArrivalPattern::from_arrival_slots(6, &[1, 2, 3], &[3, 5]).unwrap();
        let mut pol = TwoSidedRandomized::constrained(&cm(3), 0.0).unwrap().with_trace();
        run_policy(&p, &mut pol, &cm(3)).unwrap();
        assert!(pol.stats().max_transmissions <= 1);
        // Q2 arrival with nothing waiting goes out uncoded.
        let p = ArrivalPattern::from_arrival_slots(2, &[], &[1]).unwrap();
        let mut pol = TwoSidedRandomized::constrained(&cm(3), 0.5).unwrap().with_trace();
        run_policy(&p, &mut pol, &cm(3)).unwrap();
        assert_eq!(pol.trace()[0].decision, Decision::new(0, 0, 1));
        let bursty = ArrivalPattern::new(vec![2], vec![0]).unwrap();
        let mut pol = TwoSidedRandomized::constrained(&cm(3), 0.5).unwrap();
        assert!(matches!(run_policy(&bursty, &mut pol, &cm(3)), Err(Error::BurstyArrivals { .. })));
    }

    #[test]
    fn spreading() {
        let p = ArrivalPattern::new(vec![0, 3, 0, 0], vec![0; 4]).unwrap();
        assert_eq!(spread_arrivals(&p).a1_slice(), &[0, 1, 1, 1]);
        let p = ArrivalPattern::new(vec![1, 0, 1], vec![0, 1, 0]).unwrap();
        assert_eq!(spread_arrivals(&p), p);
        let p = ArrivalPattern::new(vec![2, 0], vec![3, 0]).unwrap();
        let s = spread_arrivals(&p);
        assert_eq!(s.a1_slice(), &[1, 1, 0]);
        assert_eq!(s.a2_slice(), &[1, 1, 1]);
    }

    #[test]
    fn waiting_coding_examples() {
        let wc = WaitingCodingQueues { qw: 2, owner: Side::Q1, qc: 0 };
        let (next, coded, flip) = waiting_coding_route(wc, (1, 5));
        assert_eq!((next.qw, next.owner, coded, flip), (2, Side::Q2, 3, true));
        let (next, coded, flip) = waiting_coding_route(WaitingCodingQueues::default(), (4, 0));
        assert_eq!((next.qw, next.owner, coded, flip), (4, Side::Q1, 0, false));
        let wc = WaitingCodingQueues { qw: 3, owner: Side::Q1, qc: 0 };
        let (next, coded, flip) = waiting_coding_route(wc, (0, 2));
        assert_eq!((next.qw, next.owner, coded, flip), (1, Side::Q1, 2, false));
        let wc = WaitingCodingQueues { qw: 1, owner: Side::Q2, qc: 0 };
        let (next, coded, flip) = waiting_coding_route(wc, (1, 0));
        assert_eq!((next.qw, next.owner, coded, flip), (0, Side::Q2, 1, false));
    }

    #[test]
    fn book_choices() {
        let mut b = WaitingBook::default();
        for i in 0..3 {
            b.insert(i);
        }
        b.bump(1);
        b.bump(2);
        b.bump(2);
        assert_eq!(b.take_uncoded(), Some(2));
        assert_eq!(b.take_for_coding(), Some(1));
        b.bump(7);
        assert_eq!(b.take_uncoded(), Some(0));
        assert!(b.is_empty());
        assert_eq!(b.take_for_coding(), None);
    }

    #[test]
    fn proposed_alternating_short_run() {
        // u close to one keeps X below the threshold for a few pairs, so each
        // Q1 packet waits one slot and codes.
        let p = ArrivalPattern::new(vec![1, 0, 1, 0], vec![0, 1, 0, 1]).unwrap();
        let cm = cm(10);
        let mut pol = ProposedPolicy::new(&cm, 0.999).unwrap().with_trace();
        let out = run_policy(&p, &mut pol, &cm).unwrap();
        assert_eq!(out.ledger.coded, 2);
        assert_eq!(out.ledger.total(), Rational64::from(2 * (10 + 1)));
        assert!(pol.stats().max_transmissions <= 1);
    }

    #[test]
    fn proposed_flips_owner() {
        let p = ArrivalPattern::new(vec![0, 0, 1], vec![1, 0, 0]).unwrap();
        let cm = cm(5);
        let mut pol = ProposedPolicy::new(&cm, 0.999).unwrap().with_trace();
        let out = run_policy(&p, &mut pol, &cm).unwrap();
        assert_eq!(pol.stats().flips, 1);
        assert_eq!(out.ledger.coded, 1);
        assert_eq!(pol.trace()[2].decision, Decision::new(1, 0, 0));
    }

    #[test]
    fn proposed_spreads_bursts_online() {
        let p = ArrivalPattern::new(vec![3, 0, 0, 0], vec![0, 0, 0, 0]).unwrap();
        let cm = cm(2);
        let mut pol = ProposedPolicy::new(&cm, 0.0).unwrap().with_trace();
        let out = run_policy(&p, &mut pol, &cm).unwrap();
        assert!(pol.stats().max_transmissions <= 1);
        assert_eq!(out.ledger.transmissions, 3);
    }

    #[test]
    fn decision_trace_csv() {
        let recs = [DecisionRecord { slot: 1, decision: Decision::new(1, 0, 0), u_shift: 0 }];
        let mut buf = Vec::new();
        write_decision_trace(&recs, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "slot,coded,uncoded_q1,uncoded_q2,u_shift\n1,1,0,0,0\n");
    }
}
