//! Exact offline optima.
//!
//! Two independent routes for the two-sided problem: the constraint-set
//! construction followed by the per-interval closed form, and an exhaustive
//! matching search. The one-sided problem is solved by enumerating the
//! integer number of uncoded packets.

use std::collections::HashMap;
use std::io::Write;

use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::relay::{ArrivalPattern, CostModel};

/// Per-slot constraint sets produced by the LIFO matching rule.
///
/// Packet indices are 0-based Q1 arrival order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSetTrace {
    /// `I(t)` for `t = 1..=horizon`, ascending.
    pub sets: Vec<Vec<usize>>,
    /// Indices removed in each slot, in removal order.
    pub removals: Vec<Vec<usize>>,
    pub arrival_slot: Vec<usize>,
    pub removal_slot: Vec<Option<usize>>,
}

impl ConstraintSetTrace {
    /// `I(t)`; the set is frozen after the horizon.
    pub fn set_at(&self, slot: usize) -> &[usize] {
        if slot == 0 || self.sets.is_empty() {
            return &[];
        }
        let idx = slot.min(self.sets.len()) - 1;
        &self.sets[idx]
    }

    pub fn packets(&self) -> usize {
        self.arrival_slot.len()
    }
}

/// Replays the constraint-set rule: inherit `I(t-1)`, insert this slot's Q1
/// arrivals, then remove the most recent index once per Q2 arrival.
pub fn identify_constraints(pattern: &ArrivalPattern) -> ConstraintSetTrace {
    let mut stack: Vec<usize> = Vec::new();
    let mut trace = ConstraintSetTrace {
        sets: Vec::with_capacity(pattern.horizon()),
        removals: Vec::with_capacity(pattern.horizon()),
        arrival_slot: Vec::new(),
        removal_slot: Vec::new(),
    };
    for slot in 1..=pattern.horizon() {
        for _ in 0..pattern.a1(slot) {
            stack.push(trace.arrival_slot.len());
            trace.arrival_slot.push(slot);
            trace.removal_slot.push(None);
        }
        let mut q2 = pattern.a2(slot);
        let mut removed = Vec::new();
        while q2 != 0 {
            // indices are pushed in increasing order, so the top is max I(t)
            let Some(i) = stack.pop() else { break };
            trace.removal_slot[i] = Some(slot);
            removed.push(i);
            q2 -= 1;
        }
        trace.sets.push(stack.clone());
        trace.removals.push(removed);
    }
    trace
}

/// Waiting interval `[alpha, beta]` of one Q1 packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub alpha: usize,
    pub beta: usize,
    /// True when `beta` is the sentinel (never matched).
    pub open: bool,
}

impl Interval {
    pub fn len(&self) -> usize {
        (self.beta + 1).saturating_sub(self.alpha)
    }

    pub fn is_empty(&self) -> bool {
        self.beta < self.alpha
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintIntervals {
    pub intervals: Vec<Interval>,
    /// `beta` assigned to packets that are never matched.
    pub sentinel: usize,
}

impl ConstraintIntervals {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["packet", "alpha", "beta"])?;
        for (i, iv) in self.intervals.iter().enumerate() {
            out.write_record([(i + 1).to_string(), iv.alpha.to_string(), iv.beta.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Converts a trace into intervals. Matched packets end the slot before their
/// removal (empty when matched on arrival); unmatched packets run to the
/// drain-window end, which is at least `alpha + C - 1`.
pub fn extract_intervals(trace: &ConstraintSetTrace, pattern: &ArrivalPattern, cm: &CostModel) -> ConstraintIntervals {
    let sentinel = pattern.drain_end(cm);
    let intervals = trace
        .arrival_slot
        .iter()
        .zip(&trace.removal_slot)
        .map(|(&alpha, removal)| match removal {
            Some(r) => Interval { alpha, beta: r - 1, open: false },
            None => Interval { alpha, beta: sentinel, open: true },
        })
        .collect();
    ConstraintIntervals { intervals, sentinel }
}

/// `sum_i min(beta_i - alpha_i + 1, C)`, empty intervals contributing zero.
pub fn opt_two_sided_closed_form(intervals: &ConstraintIntervals, cm: &CostModel) -> Rational64 {
    intervals
        .intervals
        .iter()
        .map(|iv| Rational64::from_integer(iv.len() as i64).min(cm.c()))
        .sum()
}

/// Two-sided optimum via constraint sets and the closed form.
pub fn opt_two_sided(pattern: &ArrivalPattern, cm: &CostModel) -> Rational64 {
    let trace = identify_constraints(pattern);
    opt_two_sided_closed_form(&extract_intervals(&trace, pattern, cm), cm)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneSidedOpt {
    pub cost: Rational64,
    /// Number of Q1 packets sent uncoded in slot 1 (smallest minimizer).
    pub x: u64,
}

fn require_one_sided(pattern: &ArrivalPattern) -> Result<()> {
    if !pattern.is_one_sided() {
        return Err(Error::NotOneSided("Q1 packets arrive after slot 1".into()));
    }
    Ok(())
}

/// Holding demand `N1 - n2(t)` for every slot of the drain window.
fn one_sided_demands(pattern: &ArrivalPattern, cm: &CostModel) -> Vec<i64> {
    let n1 = pattern.n1() as i64;
    let cum = pattern.n2_cumulative();
    let total = pattern.n2() as i64;
    (1..=pattern.drain_end(cm))
        .map(|t| n1 - cum.get(t - 1).map_or(total, |&v| v as i64))
        .collect()
}

/// Smallest `x` that strands nothing: `max(0, N1 - N2)`.
pub fn one_sided_min_x(pattern: &ArrivalPattern) -> u64 {
    pattern.n1().saturating_sub(pattern.n2())
}

/// `C*x + sum_t max(N1 - n2(t) - x, 0)` over the drain window, for real `x`.
pub fn one_sided_objective(pattern: &ArrivalPattern, cm: &CostModel, x: f64) -> f64 {
    let hold: f64 = one_sided_demands(pattern, cm).iter().map(|&d| (d as f64 - x).max(0.0)).sum();
    cm.c_f64() * x + hold
}

/// Integer optimum of the one-sided problem.
pub fn opt_one_sided(pattern: &ArrivalPattern, cm: &CostModel) -> Result<OneSidedOpt> {
    require_one_sided(pattern)?;
    let demands = one_sided_demands(pattern, cm);
    let mut best: Option<OneSidedOpt> = None;
    for x in one_sided_min_x(pattern)..=pattern.n1() {
        let hold: i64 = demands.iter().map(|&d| (d - x as i64).max(0)).sum();
        let cost = cm.c() * x as i64 + Rational64::from_integer(hold);
        if best.as_ref().map_or(true, |b| cost < b.cost) {
            best = Some(OneSidedOpt { cost, x });
        }
    }
    Ok(best.unwrap_or(OneSidedOpt { cost: Rational64::zero(), x: 0 }))
}

/// Minimum of the relaxed one-sided program over real `x`, by ternary search
/// on the convex piecewise-linear objective.
pub fn one_sided_relaxation_min(pattern: &ArrivalPattern, cm: &CostModel) -> Result<f64> {
    require_one_sided(pattern)?;
    let (mut lo, mut hi) = (one_sided_min_x(pattern) as f64, pattern.n1() as f64);
    let f = |x: f64| one_sided_objective(pattern, cm, x);
    for _ in 0..200 {
        if hi - lo < 1e-13 {
            break;
        }
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    Ok(f(lo).min(f(hi)).min(f(0.5 * (lo + hi))))
}

/// Largest instance (packets per side) the exhaustive matcher accepts.
pub const BRUTE_FORCE_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingOpt {
    pub cost: Rational64,
    /// Q2 partner of every Q1 packet, if coded.
    pub partner: Vec<Option<usize>>,
}

/// Exhaustive search over partial matchings of Q1 packets to later-or-equal
/// Q2 packets. A matched packet holds `min(T2 - T1, C)`; an unmatched one
/// pays `C`.
pub fn opt_two_sided_bruteforce(pattern: &ArrivalPattern, cm: &CostModel) -> Result<MatchingOpt> {
    let t1 = pattern.q1_arrival_slots();
    let t2 = pattern.q2_arrival_slots();
    if t1.len() > BRUTE_FORCE_LIMIT || t2.len() > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge { n1: t1.len(), n2: t2.len(), limit: BRUTE_FORCE_LIMIT });
    }
    let mut memo = HashMap::new();
    let cost = best_matching(0, 0, &t1, &t2, cm.c(), &mut memo);

    let mut partner = vec![None; t1.len()];
    let mut mask = 0u32;
    for i in 0..t1.len() {
        let rest = |m: u32, memo: &mut HashMap<(usize, u32), Rational64>| best_matching(i + 1, m, &t1, &t2, cm.c(), memo);
        let target = best_matching(i, mask, &t1, &t2, cm.c(), &mut memo);
        if cm.c() + rest(mask, &mut memo) == target {
            continue;
        }
        for j in 0..t2.len() {
            if mask & (1 << j) != 0 || t2[j] < t1[i] {
                continue;
            }
            let pair = Rational64::from_integer((t2[j] - t1[i]) as i64).min(cm.c());
            if pair + rest(mask | (1 << j), &mut memo) == target {
                partner[i] = Some(j);
                mask |= 1 << j;
                break;
            }
        }
    }
    Ok(MatchingOpt { cost, partner })
}

fn best_matching(
    i: usize,
    mask: u32,
    t1: &[usize],
    t2: &[usize],
    c: Rational64,
    memo: &mut HashMap<(usize, u32), Rational64>,
) -> Rational64 {
    if i == t1.len() {
        return Rational64::zero();
    }
    if let Some(&v) = memo.get(&(i, mask)) {
        return v;
    }
    let mut best = c + best_matching(i + 1, mask, t1, t2, c, memo);
    for j in 0..t2.len() {
        if mask & (1 << j) != 0 || t2[j] < t1[i] {
            continue;
        }
        let pair = Rational64::from_integer((t2[j] - t1[i]) as i64).min(c);
        let v = pair + best_matching(i + 1, mask | (1 << j), t1, t2, c, memo);
        if v < best {
            best = v;
        }
    }
    memo.insert((i, mask), best);
    best
}

/// Ratio helper shared by the experiment code.
pub fn ratio_f64(num: Rational64, den: Rational64) -> f64 {
    (num / den).to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: i64) -> CostModel {
        CostModel::integer(v).unwrap()
    }

    fn r(v: i64) -> Rational64 {
        Rational64::from_integer(v)
    }

    /// Q1 packets in slots 1 and 2, one Q2 packet in slot 3.
    fn two_then_one() -> ArrivalPattern {
        ArrivalPattern::from_arrival_slots(3, &[1, 2], &[3]).unwrap()
    }

    #[test]
    fn constraint_sets_two_then_one() {
        let tr = identify_constraints(&two_then_one());
        assert_eq!(tr.sets, vec![vec![0], vec![0, 1], vec![0]]);
        assert_eq!(tr.removals[2], vec![1]);
        let iv = extract_intervals(&tr, &two_then_one(), &c(4));
        assert_eq!(iv.intervals[0], Interval { alpha: 1, beta: iv.sentinel, open: true });
        assert_eq!(iv.intervals[1], Interval { alpha: 2, beta: 2, open: false });
        assert_eq!(opt_two_sided_closed_form(&iv, &c(4)), r(5));
    }

    #[test]
    fn no_q2_traffic_accumulates() {
        let p = ArrivalPattern::new(vec![1, 0, 2, 1], vec![0; 4]).unwrap();
        let tr = identify_constraints(&p);
        assert_eq!(tr.sets.last().unwrap(), &vec![0, 1, 2, 3]);
        for w in tr.sets.windows(2) {
            assert!(w[0].iter().all(|i| w[1].contains(i)));
        }
        let iv = extract_intervals(&tr, &p, &c(3));
        assert!(iv.intervals.iter().all(|i| i.open));
        assert_eq!(opt_two_sided_closed_form(&iv, &c(3)), r(12));
    }

    #[test]
    fn excess_q2_arrivals_empty_the_set() {
        let p = ArrivalPattern::new(vec![2, 0], vec![0, 5]).unwrap();
        let tr = identify_constraints(&p);
        assert!(tr.sets[1].is_empty());
        assert_eq!(tr.removals[1], vec![1, 0]);
    }

    #[test]
    fn simultaneous_match_is_empty_interval() {
        let p = ArrivalPattern::new(vec![1], vec![1]).unwrap();
        let tr = identify_constraints(&p);
        let iv = extract_intervals(&tr, &p, &c(4));
        assert_eq!(iv.intervals[0], Interval { alpha: 1, beta: 0, open: false });
        assert!(iv.intervals[0].is_empty());
        assert_eq!(opt_two_sided_closed_form(&iv, &c(4)), r(0));
    }

    #[test]
    fn closed_form_small_cases() {
        let p = ArrivalPattern::from_arrival_slots(4, &[3], &[4]).unwrap();
        assert_eq!(opt_two_sided(&p, &c(4)), r(1));
        assert_eq!(opt_two_sided(&ArrivalPattern::idle(3), &c(4)), r(0));
    }

    #[test]
    fn bruteforce_examples() {
        let m = opt_two_sided_bruteforce(&two_then_one(), &c(4)).unwrap();
        assert_eq!(m.cost, r(5));
        assert_eq!(m.partner, vec![None, Some(0)]);

        let p = ArrivalPattern::new(vec![1, 1, 1], vec![0; 3]).unwrap();
        assert_eq!(opt_two_sided_bruteforce(&p, &c(3)).unwrap().cost, r(9));

        let p = ArrivalPattern::new(vec![1], vec![1]).unwrap();
        assert_eq!(opt_two_sided_bruteforce(&p, &c(3)).unwrap().cost, r(0));
    }

    #[test]
    fn bruteforce_rejects_large_instances() {
        let p = ArrivalPattern::new(vec![9], vec![1]).unwrap();
        assert!(matches!(opt_two_sided_bruteforce(&p, &c(3)), Err(Error::InstanceTooLarge { .. })));
    }

    #[test]
    fn one_sided_examples() {
        let p = ArrivalPattern::from_arrival_slots(3, &[1], &[3]).unwrap();
        assert_eq!(opt_one_sided(&p, &c(4)).unwrap(), OneSidedOpt { cost: r(2), x: 0 });

        let p = ArrivalPattern::from_arrival_slots(5, &[1, 1], &[2, 5]).unwrap();
        assert_eq!(opt_one_sided(&p, &c(3)).unwrap(), OneSidedOpt { cost: r(4), x: 1 });

        assert_eq!(opt_one_sided(&ArrivalPattern::idle(4), &c(3)).unwrap().cost, r(0));

        let p = ArrivalPattern::new(vec![0, 1], vec![0, 0]).unwrap();
        assert!(matches!(opt_one_sided(&p, &c(3)), Err(Error::NotOneSided(_))));
    }

    #[test]
    fn one_sided_deficit_forces_uncoded() {
        // three packets, one partner: two must go uncoded
        let p = ArrivalPattern::from_arrival_slots(2, &[1, 1, 1], &[2]).unwrap();
        let opt = opt_one_sided(&p, &c(5)).unwrap();
        assert_eq!(opt, OneSidedOpt { cost: r(11), x: 2 });
    }

    #[test]
    fn relaxation_matches_integer_on_example() {
        let p = ArrivalPattern::from_arrival_slots(5, &[1, 1], &[2, 5]).unwrap();
        let relaxed = one_sided_relaxation_min(&p, &c(3)).unwrap();
        assert!((relaxed - 4.0).abs() < 1e-9);
    }

    #[test]
    fn interval_csv() {
        let tr = identify_constraints(&two_then_one());
        let iv = extract_intervals(&tr, &two_then_one(), &c(4));
        let mut buf = Vec::new();
        iv.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, format!("packet,alpha,beta\n1,1,{}\n2,2,2\n", iv.sentinel));
    }
}
