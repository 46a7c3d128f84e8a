//! Instantiated linear programs in CPLEX LP text format, for cross-checking
//! the closed forms with an external solver.
//!
//! The infinite slot index is truncated at the drain-window end. Slots whose
//! right-hand side is non-positive are dropped together with their `z`
//! variable; those constraints hold trivially at `z = 0`.

use std::fmt::Write as _;

use crate::oracle::identify_constraints;
use crate::relay::{format_ratio, ArrivalPattern, CostModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpKind {
    /// `min C x + sum z(t)` s.t. `x + z(t) >= N1 - n2(t)`.
    OneSidedPrimal,
    /// `max sum (N1 - n2(t)) w(t)` s.t. `sum w(t) <= C`, `0 <= w <= 1`.
    OneSidedDual,
    /// Per-packet constraints `x_i + z_i(t) >= 1` for `i in I(t)`.
    TwoSidedPrimal,
    TwoSidedDual,
    /// Aggregate constraints over all Q1 packets arrived by `t`; not a valid
    /// model of the two-sided problem, kept for comparison.
    Aggregate,
}

struct LpText {
    sense: &'static str,
    objective: Vec<String>,
    constraints: Vec<String>,
    bounds: Vec<String>,
}

impl LpText {
    fn render(self, title: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "\\ {title}");
        let _ = writeln!(s, "{}", self.sense);
        if self.objective.is_empty() {
            let _ = writeln!(s, " obj: 0");
        } else {
            let _ = writeln!(s, " obj: {}", self.objective.join(" + "));
        }
        let _ = writeln!(s, "Subject To");
        for c in &self.constraints {
            let _ = writeln!(s, " {c}");
        }
        if !self.bounds.is_empty() {
            let _ = writeln!(s, "Bounds");
            for b in &self.bounds {
                let _ = writeln!(s, " {b}");
            }
        }
        let _ = writeln!(s, "End");
        s
    }
}

pub fn lp_export(pattern: &ArrivalPattern, cm: &CostModel, kind: LpKind) -> String {
    let c = format_ratio(cm.c());
    let end = pattern.drain_end(cm);
    let n2 = |t: usize| pattern.n2_through(t) as i64;
    match kind {
        LpKind::OneSidedPrimal | LpKind::OneSidedDual => {
            let n1 = pattern.n1() as i64;
            let slots: Vec<(usize, i64)> =
                (1..=end).map(|t| (t, n1 - n2(t))).filter(|&(_, d)| d > 0).collect();
            if kind == LpKind::OneSidedPrimal {
                let mut objective = Vec::new();
                if !slots.is_empty() {
                    objective.push(format!("{c} x"));
                }
                objective.extend(slots.iter().map(|(t, _)| format!("z_{t}")));
                let constraints = slots.iter().map(|(t, d)| format!("c_{t}: x + z_{t} >= {d}")).collect();
                LpText { sense: "Minimize", objective, constraints, bounds: vec![] }.render("one-sided primal")
            } else {
                let objective = slots.iter().map(|(t, d)| format!("{d} w_{t}")).collect();
                let mut constraints = Vec::new();
                if !slots.is_empty() {
                    let sum: Vec<String> = slots.iter().map(|(t, _)| format!("w_{t}")).collect();
                    constraints.push(format!("budget: {} <= {c}", sum.join(" + ")));
                }
                let bounds = slots.iter().map(|(t, _)| format!("0 <= w_{t} <= 1")).collect();
                LpText { sense: "Maximize", objective, constraints, bounds }.render("one-sided dual")
            }
        }
        LpKind::TwoSidedPrimal | LpKind::TwoSidedDual => {
            let trace = identify_constraints(pattern);
            let pairs: Vec<(usize, usize)> = (1..=end)
                .flat_map(|t| trace.set_at(t).iter().map(move |&i| (i + 1, t)).collect::<Vec<_>>())
                .collect();
            if kind == LpKind::TwoSidedPrimal {
                let mut objective: Vec<String> =
                    (1..=trace.packets()).map(|i| format!("{c} x{i}")).collect();
                objective.extend(pairs.iter().map(|(i, t)| format!("z{i}_{t}")));
                let constraints =
                    pairs.iter().map(|(i, t)| format!("c{i}_{t}: x{i} + z{i}_{t} >= 1")).collect();
                LpText { sense: "Minimize", objective, constraints, bounds: vec![] }.render("two-sided primal")
            } else {
                let objective = pairs.iter().map(|(i, t)| format!("w{i}_{t}")).collect();
                let constraints = (1..=trace.packets())
                    .filter_map(|i| {
                        let terms: Vec<String> =
                            pairs.iter().filter(|p| p.0 == i).map(|(i, t)| format!("w{i}_{t}")).collect();
                        (!terms.is_empty()).then(|| format!("budget{i}: {} <= {c}", terms.join(" + ")))
                    })
                    .collect();
                let bounds = pairs.iter().map(|(i, t)| format!("0 <= w{i}_{t} <= 1")).collect();
                LpText { sense: "Maximize", objective, constraints, bounds }.render("two-sided dual")
            }
        }
        LpKind::Aggregate => {
            let n1 = pattern.n1() as usize;
            let mut objective: Vec<String> = (1..=n1).map(|i| format!("{c} x{i}")).collect();
            let mut constraints = Vec::new();
            let mut arrived = 0usize;
            for t in 1..=end {
                arrived += pattern.a1(t) as usize;
                let rhs = arrived as i64 - n2(t);
                if rhs <= 0 {
                    continue;
                }
                let xs: Vec<String> = (1..=arrived).map(|i| format!("x{i}")).collect();
                objective.push(format!("z_{t}"));
                constraints.push(format!("c_{t}: {} + z_{t} >= {rhs}", xs.join(" + ")));
            }
            LpText { sense: "Minimize", objective, constraints, bounds: vec![] }.render("aggregate primal")
        }
    }
}
