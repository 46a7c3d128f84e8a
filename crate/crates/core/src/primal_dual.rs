//! Fractional online primal-dual state machines.
//!
//! Every waiting packet `i` carries a fractional "sent uncoded" mass `x_i`.
//! While the packet is constrained and `x_i < 1`, each slot sets
//! `z_i(t) = 1 - x_i`, grows `x_i <- x_i (1 + 1/C) + 1/(theta C)` and raises
//! the matching dual variable to one. With
//! `theta = (1 + 1/C)^floor(C) - 1` the mass reaches exactly one after
//! `floor(C)` updates, after which the packet is frozen.
//!
//! Three variants share the update:
//! * one-sided: all Q1 packets present in slot 1; slot `t` updates packets
//!   `n2(t)+1 ..= N1` (1-based);
//! * two-sided: the constraint set `I(t)` is maintained LIFO and every member
//!   with `x_i < 1` is updated;
//! * constrained: as two-sided, but no packet is updated in a slot with a
//!   Q2 arrival, which keeps the per-slot mass increment at most one.

use std::io::Write;

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::relay::CostModel;
use crate::scalar::Scalar;

/// `theta = (1 + 1/C)^floor(C) - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta<S> {
    pub value: S,
    pub c: Rational64,
}

impl<S: Scalar> Theta<S> {
    pub fn new(c: Rational64) -> Result<Self> {
        if c <= Rational64::from_integer(1) {
            return Err(Error::InvalidCost(format!("theta needs C > 1, got {c}")));
        }
        let growth = S::one() + S::one() / S::from_ratio(c);
        let mut pow = S::one();
        for _ in 0..c.floor().to_integer() {
            pow = pow * growth.clone();
        }
        Ok(Self { value: pow - S::one(), c })
    }

    /// Competitive bound `1 + 1/theta`.
    pub fn ratio_bound(&self) -> S {
        S::one() + S::one() / self.value.clone()
    }
}

pub fn compute_theta<S: Scalar>(cm: &CostModel) -> Result<Theta<S>> {
    Theta::new(cm.c())
}

/// `1 + 1/theta(C)` as a float.
pub fn ratio_bound_f64(cm: &CostModel) -> f64 {
    compute_theta::<f64>(cm).map(|t| t.ratio_bound()).unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdMode {
    OneSided { n1: usize },
    TwoSided,
    Constrained,
}

/// What one slot changed.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport<S> {
    pub slot: usize,
    /// Packets whose `x_i` grew, in update order.
    pub updated: Vec<usize>,
    /// Packets removed from `I(t)` this slot (two-sided variants).
    pub removed: Vec<usize>,
    /// `sum_i (x_i after - x_i before)`.
    pub delta_x: S,
    /// Primal objective increment `C * delta_x + sum_i z_i(t)`.
    pub delta_primal: S,
    /// Dual objective increment.
    pub delta_dual: u64,
    /// Whether any dual variable was set this slot.
    pub w: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Objectives<S> {
    pub primal: S,
    pub dual: u64,
}

/// Full per-slot history, kept only when requested.
#[derive(Debug, Clone)]
pub struct PdTrace<S> {
    /// `(slot, packet, x_i after update, z_i(t))` for every update.
    pub updates: Vec<(usize, usize, S, S)>,
    /// `I(t)` for each slot (two-sided variants).
    pub sets: Vec<Vec<usize>>,
    /// `n2(t)` for each slot (one-sided).
    pub n2: Vec<u64>,
    /// `w(t)` for each slot (one-sided).
    pub w: Vec<bool>,
}

impl<S> Default for PdTrace<S> {
    fn default() -> Self {
        Self { updates: Vec::new(), sets: Vec::new(), n2: Vec::new(), w: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct PdState<S> {
    mode: PdMode,
    theta: Theta<S>,
    c: S,
    growth: S,
    step: S,
    floor_c: u32,
    x: Vec<S>,
    updates: Vec<u32>,
    /// `I(t)`, ascending, so the most recent index is on top.
    stack: Vec<usize>,
    slot: usize,
    x_sum: S,
    z_sum: S,
    dual: u64,
    w_slots: u64,
    trace: Option<PdTrace<S>>,
}

impl<S: Scalar> PdState<S> {
    fn with_mode(cm: &CostModel, mode: PdMode, trace: bool) -> Result<Self> {
        let theta = compute_theta::<S>(cm)?;
        let c = S::from_ratio(cm.c());
        let growth = S::one() + S::one() / c.clone();
        let step = S::one() / (theta.value.clone() * c.clone());
        let n = match mode {
            PdMode::OneSided { n1 } => n1,
            _ => 0,
        };
        Ok(Self {
            mode,
            theta,
            c,
            growth,
            step,
            floor_c: cm.floor_c() as u32,
            x: vec![S::zero(); n],
            updates: vec![0; n],
            stack: Vec::new(),
            slot: 0,
            x_sum: S::zero(),
            z_sum: S::zero(),
            dual: 0,
            w_slots: 0,
            trace: trace.then(PdTrace::default),
        })
    }

    /// State for `n1` Q1 packets all present in slot 1.
    pub fn one_sided(cm: &CostModel, n1: usize, trace: bool) -> Result<Self> {
        Self::with_mode(cm, PdMode::OneSided { n1 }, trace)
    }

    pub fn two_sided(cm: &CostModel, trace: bool) -> Result<Self> {
        Self::with_mode(cm, PdMode::TwoSided, trace)
    }

    pub fn constrained(cm: &CostModel, trace: bool) -> Result<Self> {
        Self::with_mode(cm, PdMode::Constrained, trace)
    }

    pub fn mode(&self) -> PdMode {
        self.mode
    }

    pub fn theta(&self) -> &Theta<S> {
        &self.theta
    }

    /// Last completed slot.
    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn packets(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self, i: usize) -> &S {
        &self.x[i]
    }

    pub fn xs(&self) -> &[S] {
        &self.x
    }

    /// Number of updates packet `i` has received; also `sum_t w_i(t)`.
    pub fn updates(&self, i: usize) -> u32 {
        self.updates[i]
    }

    /// `x = sum_i x_i`.
    pub fn x_total(&self) -> &S {
        &self.x_sum
    }

    /// Current `I(t)`.
    pub fn constraint_set(&self) -> &[usize] {
        &self.stack
    }

    pub fn is_frozen(&self, i: usize) -> bool {
        !self.x[i].below_one()
    }

    /// `sum_t w(t)` in the one-sided variant.
    pub fn w_slots(&self) -> u64 {
        self.w_slots
    }

    pub fn trace(&self) -> Option<&PdTrace<S>> {
        self.trace.as_ref()
    }

    pub fn objectives(&self) -> Objectives<S> {
        Objectives { primal: self.c.clone() * self.x_sum.clone() + self.z_sum.clone(), dual: self.dual }
    }

    fn update(&mut self, i: usize, report: &mut StepReport<S>) {
        let old = self.x[i].clone();
        let z = S::one() - old.clone();
        let new = old.clone() * self.growth.clone() + self.step.clone();
        let dx = new.clone() - old;
        self.x[i] = new.clone();
        self.updates[i] += 1;
        self.x_sum = self.x_sum.clone() + dx.clone();
        self.z_sum = self.z_sum.clone() + z.clone();
        report.delta_x = report.delta_x.clone() + dx.clone();
        report.delta_primal = report.delta_primal.clone() + self.c.clone() * dx + z.clone();
        report.updated.push(i);
        if let Some(tr) = self.trace.as_mut() {
            tr.updates.push((self.slot, i, new, z));
        }
    }

    fn begin_slot(&mut self) -> StepReport<S> {
        self.slot += 1;
        StepReport {
            slot: self.slot,
            updated: Vec::new(),
            removed: Vec::new(),
            delta_x: S::zero(),
            delta_primal: S::zero(),
            delta_dual: 0,
            w: false,
        }
    }

    /// One-sided slot given the cumulative Q2 count `n2(t)`.
    pub fn step_one_sided(&mut self, n2_t: u64) -> StepReport<S> {
        let PdMode::OneSided { n1 } = self.mode else {
            panic!("step_one_sided on a {:?} state", self.mode);
        };
        let mut report = self.begin_slot();
        for i in (n2_t as usize).min(n1)..n1 {
            if self.x[i].below_one() {
                self.update(i, &mut report);
                report.w = true;
            }
        }
        if report.w {
            self.w_slots += 1;
            report.delta_dual = n1 as u64 - n2_t.min(n1 as u64);
            self.dual += report.delta_dual;
        }
        if let Some(tr) = self.trace.as_mut() {
            tr.n2.push(n2_t);
            tr.w.push(report.w);
        }
        report
    }

    /// Set maintenance: insert Q1 arrivals, remove the most recent index once
    /// per Q2 arrival.
    fn maintain_set(&mut self, arrivals: (u32, u32), report: &mut StepReport<S>) {
        for _ in 0..arrivals.0 {
            self.stack.push(self.x.len());
            self.x.push(S::zero());
            self.updates.push(0);
        }
        for _ in 0..arrivals.1 {
            match self.stack.pop() {
                Some(i) => report.removed.push(i),
                None => break,
            }
        }
    }

    fn update_set(&mut self, report: &mut StepReport<S>) {
        // Members are updated every slot they are in I(t), so update counts
        // never decrease toward the bottom and frozen packets form a prefix.
        for k in (0..self.stack.len()).rev() {
            let i = self.stack[k];
            if !self.x[i].below_one() {
                break;
            }
            self.update(i, report);
        }
        report.w = !report.updated.is_empty();
        report.delta_dual = report.updated.len() as u64;
        self.dual += report.delta_dual;
    }

    fn record_set(&mut self) {
        if let Some(tr) = self.trace.as_mut() {
            tr.sets.push(self.stack.clone());
        }
    }

    /// Two-sided slot with arrivals `(A1(t), A2(t))`.
    pub fn step_two_sided(&mut self, arrivals: (u32, u32)) -> StepReport<S> {
        assert_eq!(self.mode, PdMode::TwoSided, "step_two_sided on a {:?} state", self.mode);
        let mut report = self.begin_slot();
        self.maintain_set(arrivals, &mut report);
        self.update_set(&mut report);
        self.record_set();
        report
    }

    /// Two-sided slot under the one-transmission constraint: no updates in
    /// slots with a Q2 arrival. Arrivals must be at most one per queue.
    pub fn step_constrained(&mut self, arrivals: (u32, u32)) -> Result<StepReport<S>> {
        assert_eq!(self.mode, PdMode::Constrained, "step_constrained on a {:?} state", self.mode);
        for (queue, count) in [(1u8, arrivals.0), (2u8, arrivals.1)] {
            if count > 1 {
                return Err(Error::BurstyArrivals { slot: self.slot + 1, queue, count });
            }
        }
        let mut report = self.begin_slot();
        self.maintain_set(arrivals, &mut report);
        if arrivals.1 == 0 {
            self.update_set(&mut report);
        }
        self.record_set();
        Ok(report)
    }

    /// Writes `slot,packet,x_i,z_i,w_i` for every recorded update
    /// (1-based packet numbers).
    pub fn write_trace_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["slot", "packet", "x_i", "z_i", "w_i"])?;
        if let Some(tr) = &self.trace {
            for (slot, i, x, z) in &tr.updates {
                out.write_record([
                    slot.to_string(),
                    (i + 1).to_string(),
                    x.to_f64().to_string(),
                    z.to_f64().to_string(),
                    "1".to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// `floor(C)`, the number of updates that freezes a packet.
    pub fn freeze_after(&self) -> u32 {
        self.floor_c
    }
}

/// `((1 + 1/C)^j - 1) / theta`, the mass after `j` updates.
pub fn mass_after_updates<S: Scalar>(cm: &CostModel, j: u32) -> Result<S> {
    let theta = compute_theta::<S>(cm)?;
    let growth = S::one() + S::one() / S::from_ratio(cm.c());
    let mut pow = S::one();
    for _ in 0..j {
        pow = pow * growth.clone();
    }
    Ok((pow - S::one()) / theta.value)
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::scalar::big_ratio;

    fn cm(c: i64) -> CostModel {
        CostModel::integer(c).unwrap()
    }

    #[test]
    fn theta_values() {
        assert_eq!(compute_theta::<BigRational>(&cm(2)).unwrap().value, big_ratio(5, 4));
        let t = compute_theta::<BigRational>(&"1.5".parse().unwrap()).unwrap();
        assert_eq!(t.value, big_ratio(2, 3));
        let t10 = compute_theta::<f64>(&cm(10)).unwrap().value;
        assert!((t10 - (1.1f64.powi(10) - 1.0)).abs() < 1e-12);
        assert!((t10 - 1.593_742_460_1).abs() < 1e-9);
        assert!(Theta::<f64>::new(Rational64::from_integer(1)).is_err());
        assert!(Theta::<f64>::new(Rational64::new(1, 2)).is_err());
    }

    #[test]
    fn ratio_bounds() {
        assert_eq!(compute_theta::<BigRational>(&cm(2)).unwrap().ratio_bound(), big_ratio(9, 5));
        assert!((ratio_bound_f64(&cm(10)) - 1.627_453).abs() < 1e-6);
    }

    #[test]
    fn one_sided_updates_follow_example() {
        let mut st = PdState::<BigRational>::one_sided(&cm(2), 1, false).unwrap();
        let r = st.step_one_sided(0);
        assert_eq!(st.x(0), &big_ratio(2, 5));
        assert!(r.w);
        st.step_one_sided(0);
        assert_eq!(st.x(0), &big_ratio(1, 1));
        let r = st.step_one_sided(0);
        assert!(!r.w);
        assert!(r.updated.is_empty());
        assert_eq!(st.x(0), &big_ratio(1, 1));
    }

    #[test]
    fn one_sided_empty_range() {
        let mut st = PdState::<BigRational>::one_sided(&cm(2), 1, false).unwrap();
        st.step_one_sided(1);
        let obj = st.objectives();
        assert_eq!(obj.primal, big_ratio(0, 1));
        assert_eq!(obj.dual, 0);
    }

    #[test]
    fn two_sided_removal_freezes_packet() {
        let mut st = PdState::<BigRational>::two_sided(&cm(3), false).unwrap();
        st.step_two_sided((2, 0));
        let r = st.step_two_sided((0, 1));
        assert_eq!(r.removed, vec![1]);
        assert_eq!(r.updated, vec![0]);
        let frozen = st.x(1).clone();
        for _ in 0..5 {
            st.step_two_sided((0, 0));
        }
        assert_eq!(st.x(1), &frozen);
        assert_eq!(st.updates(1), 1);
        assert_eq!(st.updates(0), 3);
    }

    #[test]
    fn idle_two_sided_stays_zero() {
        let mut st = PdState::<BigRational>::two_sided(&cm(3), false).unwrap();
        for _ in 0..4 {
            let r = st.step_two_sided((0, 0));
            assert!(r.updated.is_empty());
        }
        assert_eq!(st.packets(), 0);
        assert_eq!(st.objectives(), Objectives { primal: big_ratio(0, 1), dual: 0 });
    }

    #[test]
    fn constrained_skips_updates_on_q2_slots() {
        let mut st = PdState::<BigRational>::constrained(&cm(3), false).unwrap();
        st.step_constrained((1, 0)).unwrap();
        st.step_constrained((1, 0)).unwrap();
        let r = st.step_constrained((0, 1)).unwrap();
        assert_eq!(r.removed, vec![1]);
        assert!(r.updated.is_empty());
        assert_eq!(r.delta_x, big_ratio(0, 1));
        let r = st.step_constrained((0, 0)).unwrap();
        assert_eq!(r.updated, vec![0]);
        assert!(matches!(st.step_constrained((2, 0)), Err(Error::BurstyArrivals { queue: 1, .. })));
    }

    #[test]
    fn constrained_matches_two_sided_without_q2() {
        let mut a = PdState::<BigRational>::constrained(&cm(4), false).unwrap();
        let mut b = PdState::<BigRational>::two_sided(&cm(4), false).unwrap();
        for arr in [(1, 0), (0, 0), (1, 0), (1, 0), (0, 0)] {
            let ra = a.step_constrained(arr).unwrap();
            let rb = b.step_two_sided(arr);
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn mass_after_floor_c_updates_is_one() {
        for c in [2, 3, 7, 10] {
            let m = mass_after_updates::<BigRational>(&cm(c), c as u32).unwrap();
            assert_eq!(m, big_ratio(1, 1));
        }
        let m = mass_after_updates::<BigRational>(&"2.5".parse().unwrap(), 2).unwrap();
        assert_eq!(m, big_ratio(1, 1));
    }

    #[test]
    fn trace_csv_rows() {
        let mut st = PdState::<BigRational>::two_sided(&cm(2), true).unwrap();
        st.step_two_sided((1, 0));
        st.step_two_sided((0, 0));
        let mut buf = Vec::new();
        st.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "slot,packet,x_i,z_i,w_i\n1,1,0.4,1,1\n2,1,1,0.6,1\n");
    }
}
