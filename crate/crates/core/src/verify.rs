//! Self-checks behind `wnc-sim verify`: golden traces, oracle agreement,
//! primal/dual feasibility, the fractional ratio bound and per-slot caps on
//! seeded random instances.

use num_rational::{BigRational, Rational64};
use num_traits::ToPrimitive;
use rand::Rng;

use crate::exec::par_map_range;
use crate::netsim::stream_rng;
use crate::oracle::{
    extract_intervals, identify_constraints, opt_one_sided, opt_two_sided, opt_two_sided_bruteforce,
    opt_two_sided_closed_form, one_sided_relaxation_min,
};
use crate::primal_dual::{compute_theta, PdState};
use crate::relay::{run_policy, ArrivalPattern, CostModel};
use crate::scalar::{big_ratio, Scalar};
use crate::scheduler::{spread_arrivals, OneSidedRandomized, TwoSidedRandomized};

/// Random pattern with at most `max_per_side` packets per queue.
pub fn random_two_sided<R: Rng + ?Sized>(rng: &mut R, max_per_side: usize, max_horizon: usize) -> ArrivalPattern {
    let horizon = rng.gen_range(1..=max_horizon);
    let n1 = rng.gen_range(0..=max_per_side);
    let n2 = rng.gen_range(0..=max_per_side);
    let q1: Vec<usize> = (0..n1).map(|_| rng.gen_range(1..=horizon)).collect();
    let q2: Vec<usize> = (0..n2).map(|_| rng.gen_range(1..=horizon)).collect();
    ArrivalPattern::from_arrival_slots(horizon, &q1, &q2).expect("slots are in range")
}

/// Random one-sided pattern: `N1` packets in slot 1, Q2 packets anywhere.
pub fn random_one_sided<R: Rng + ?Sized>(rng: &mut R, max_n1: usize, max_n2: usize, max_horizon: usize) -> ArrivalPattern {
    let horizon = rng.gen_range(1..=max_horizon);
    let n1 = rng.gen_range(0..=max_n1);
    let n2 = rng.gen_range(0..=max_n2);
    let q2: Vec<usize> = (0..n2).map(|_| rng.gen_range(1..=horizon)).collect();
    ArrivalPattern::from_arrival_slots(horizon, &vec![1; n1], &q2).expect("slots are in range")
}

/// Cost grid used by the random suites.
pub const SUITE_COSTS: [i64; 4] = [2, 3, 5, 8];

fn dump(p: &ArrivalPattern, cm: &CostModel) -> String {
    format!("C={} a1={:?} a2={:?}", cm.c(), p.a1_slice(), p.a2_slice())
}

fn big(r: Rational64) -> BigRational {
    <BigRational as Scalar>::from_ratio(r)
}

/// C = 2: theta = 5/4; a lone Q1 packet goes out in slot 1 when u = 0.3 and
/// in slot 2 when u = 0.7.
pub fn golden_single_packet() -> Result<(), String> {
    let cm = CostModel::integer(2).map_err(|e| e.to_string())?;
    let theta = compute_theta::<BigRational>(&cm).map_err(|e| e.to_string())?;
    if theta.value != big_ratio(5, 4) {
        return Err(format!("theta = {}", theta.value));
    }
    let p = ArrivalPattern::from_arrival_slots(1, &[1], &[]).map_err(|e| e.to_string())?;
    for (u, slot) in [(big_ratio(3, 10), 1), (big_ratio(7, 10), 2)] {
        let mut pol = OneSidedRandomized::<BigRational>::for_pattern(&p, &cm, u.clone()).map_err(|e| e.to_string())?;
        let out = run_policy(&p, &mut pol, &cm).map_err(|e| e.to_string())?;
        let sent: Vec<usize> = out.ledger.trace.iter().filter(|r| r.decision.uncoded1 > 0).map(|r| r.slot).collect();
        if sent != vec![slot] || out.ledger.flushed != 0 {
            return Err(format!("u = {u}: uncoded in slots {sent:?}, flushed {}", out.ledger.flushed));
        }
    }
    Ok(())
}

/// Q1 packets in slots 1 and 3, C = 2: each packet's mass goes 2/5 then 1.
pub fn golden_staggered_pair() -> Result<(), String> {
    let cm = CostModel::integer(2).map_err(|e| e.to_string())?;
    let p = ArrivalPattern::from_arrival_slots(4, &[1, 3], &[]).map_err(|e| e.to_string())?;
    let mut pd = PdState::<BigRational>::two_sided(&cm, false).map_err(|e| e.to_string())?;
    let expect = [(0, big_ratio(2, 5)), (0, big_ratio(1, 1)), (1, big_ratio(2, 5)), (1, big_ratio(1, 1))];
    for (slot, (i, x)) in expect.into_iter().enumerate() {
        let r = pd.step_two_sided(p.arrivals(slot + 1));
        if r.updated != vec![i] || pd.x(i) != &x {
            return Err(format!("slot {}: updated {:?}, x = {:?}", slot + 1, r.updated, pd.xs()));
        }
    }
    let obj = pd.objectives();
    if obj.dual != 4 || obj.primal != big_ratio(36, 5) {
        return Err(format!("objectives {:?}", obj));
    }
    Ok(())
}

/// Q1 packets in slots 1 and 2, Q2 in slot 3, C = 4: OPT = 5.
pub fn golden_offline_optimum() -> Result<(), String> {
    let cm = CostModel::integer(4).map_err(|e| e.to_string())?;
    let p = ArrivalPattern::from_arrival_slots(3, &[1, 2], &[3]).map_err(|e| e.to_string())?;
    let trace = identify_constraints(&p);
    if trace.sets != vec![vec![0], vec![0, 1], vec![0]] {
        return Err(format!("constraint sets {:?}", trace.sets));
    }
    let closed = opt_two_sided_closed_form(&extract_intervals(&trace, &p, &cm), &cm);
    let brute = opt_two_sided_bruteforce(&p, &cm).map_err(|e| e.to_string())?.cost;
    if closed != Rational64::from(5) || brute != closed {
        return Err(format!("closed form {closed}, brute force {brute}"));
    }
    Ok(())
}

pub fn check_oracles(p: &ArrivalPattern, cm: &CostModel) -> Result<(), String> {
    let closed = opt_two_sided(p, cm);
    let brute = opt_two_sided_bruteforce(p, cm).map_err(|e| e.to_string())?.cost;
    if closed != brute {
        return Err(format!("closed form {closed} != brute force {brute}: {}", dump(p, cm)));
    }
    Ok(())
}

pub fn check_integrality(p: &ArrivalPattern, cm: &CostModel) -> Result<(), String> {
    let int = opt_one_sided(p, cm).map_err(|e| e.to_string())?.cost.to_f64().unwrap_or(f64::NAN);
    let relaxed = one_sided_relaxation_min(p, cm).map_err(|e| e.to_string())?;
    if (int - relaxed).abs() > 1e-9 {
        return Err(format!("integer {int} vs relaxation {relaxed}: {}", dump(p, cm)));
    }
    Ok(())
}

fn check_bound(primal: &BigRational, dual: u64, opt: Rational64, cm: &CostModel) -> Result<(), String> {
    let theta = compute_theta::<BigRational>(cm).map_err(|e| e.to_string())?;
    let bound = theta.ratio_bound();
    let dual = BigRational::from_u64(dual);
    if primal != &(bound.clone() * dual.clone()) {
        return Err(format!("primal {primal} is not (1 + 1/theta) * dual {dual}"));
    }
    if dual > big(opt) {
        return Err(format!("dual {dual} exceeds OPT {opt}"));
    }
    if primal > &(bound * big(opt)) {
        return Err(format!("primal {primal} above bound times OPT {opt}"));
    }
    Ok(())
}

/// Feasibility, duality and ratio checks for the one-sided state machine.
pub fn check_pd_one_sided(p: &ArrivalPattern, cm: &CostModel) -> Result<(), String> {
    let n1 = p.n1() as usize;
    let end = p.drain_end(cm);
    let mut pd = PdState::<BigRational>::one_sided(cm, n1, true).map_err(|e| e.to_string())?;
    for t in 1..=end {
        pd.step_one_sided(p.n2_through(t));
    }
    let tr = pd.trace().expect("trace on");
    let x = pd.x_total().clone();
    for t in 1..=end {
        let z: BigRational = tr.updates.iter().filter(|u| u.0 == t).fold(<BigRational as Scalar>::zero(), |a, u| a + u.3.clone());
        let need = n1 as i64 - p.n2_through(t).min(n1 as u64) as i64;
        if x.clone() + z < BigRational::from_integer(need.into()) {
            return Err(format!("primal constraint of slot {t} violated: {}", dump(p, cm)));
        }
    }
    if BigRational::from_u64(pd.w_slots()) > big(cm.c()) {
        return Err(format!("dual budget exceeded ({} slots): {}", pd.w_slots(), dump(p, cm)));
    }
    for i in 0..n1 {
        check_freeze(&pd, i, cm).map_err(|e| format!("{e}: {}", dump(p, cm)))?;
    }
    let opt = opt_one_sided(p, cm).map_err(|e| e.to_string())?.cost;
    let obj = pd.objectives();
    check_bound(&obj.primal, obj.dual, opt, cm).map_err(|e| format!("{e}: {}", dump(p, cm)))
}

fn check_freeze(pd: &PdState<BigRational>, i: usize, cm: &CostModel) -> Result<(), String> {
    let k = pd.updates(i);
    if k as u64 > cm.floor_c() {
        return Err(format!("packet {i} updated {k} times"));
    }
    if (k as u64 == cm.floor_c()) != !pd.x(i).below_one() {
        return Err(format!("packet {i}: {k} updates but x = {}", pd.x(i)));
    }
    if pd.x(i) > &BigRational::from_integer(1.into()) {
        return Err(format!("packet {i}: x = {} above one", pd.x(i)));
    }
    Ok(())
}

/// Same checks for the two-sided state machine.
pub fn check_pd_two_sided(p: &ArrivalPattern, cm: &CostModel) -> Result<(), String> {
    let end = p.drain_end(cm);
    let mut pd = PdState::<BigRational>::two_sided(cm, true).map_err(|e| e.to_string())?;
    for t in 1..=end {
        pd.step_two_sided(p.arrivals(t));
    }
    let tr = pd.trace().expect("trace on");
    let one = BigRational::from_integer(1.into());
    for t in 1..=end {
        for &i in &tr.sets[t - 1] {
            let z = tr.updates.iter().find(|u| u.0 == t && u.1 == i).map_or(<BigRational as Scalar>::zero(), |u| u.3.clone());
            if pd.x(i).clone() + z < one {
                return Err(format!("constraint of packet {i} in slot {t} violated: {}", dump(p, cm)));
            }
        }
    }
    for i in 0..pd.packets() {
        if BigRational::from_u64(pd.updates(i) as u64) > big(cm.c()) {
            return Err(format!("dual budget of packet {i} exceeded: {}", dump(p, cm)));
        }
        check_freeze(&pd, i, cm).map_err(|e| format!("{e}: {}", dump(p, cm)))?;
    }
    let obj = pd.objectives();
    check_bound(&obj.primal, obj.dual, opt_two_sided(p, cm), cm).map_err(|e| format!("{e}: {}", dump(p, cm)))
}

/// Per-slot caps: at most three uncoded packets per slot in the one-sided
/// policy, one transmission per slot in the constrained two-sided policy.
pub fn check_caps(one_sided: &ArrivalPattern, two_sided: &ArrivalPattern, cm: &CostModel, u: f64) -> Result<(), String> {
    let mut pol = OneSidedRandomized::for_pattern(one_sided, cm, u).map_err(|e| e.to_string())?;
    run_policy(one_sided, &mut pol, cm).map_err(|e| e.to_string())?;
    if pol.stats().max_crossings > 3 {
        return Err(format!("{} uncoded packets in one slot: {}", pol.stats().max_crossings, dump(one_sided, cm)));
    }
    let spread = spread_arrivals(two_sided);
    let mut pol = TwoSidedRandomized::constrained(cm, u).map_err(|e| e.to_string())?;
    run_policy(&spread, &mut pol, cm).map_err(|e| e.to_string())?;
    if pol.stats().max_transmissions > 1 {
        return Err(format!("{} transmissions in one slot: {}", pol.stats().max_transmissions, dump(&spread, cm)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub instances: usize,
    pub failures: Vec<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn suite<F>(name: &'static str, instances: usize, seed: u64, stream: u64, f: F) -> CheckOutcome
where
    F: Fn(&mut rand_chacha::ChaCha8Rng, &CostModel) -> Result<(), String> + Sync + Send,
{
    let results = par_map_range(instances, |k| {
        let mut rng = stream_rng(seed, stream * 1_000_003 + k as u64);
        let cm = CostModel::integer(SUITE_COSTS[k % SUITE_COSTS.len()]).expect("C > 1");
        f(&mut rng, &cm)
    });
    CheckOutcome { name, instances, failures: results.into_iter().filter_map(|r| r.err()).take(5).collect() }
}

/// Runs every check; `instances` random patterns per suite.
pub fn run_verify(seed: u64, instances: usize) -> Vec<CheckOutcome> {
    let single = |name, r: Result<(), String>| CheckOutcome { name, instances: 1, failures: r.err().into_iter().collect() };
    vec![
        single("golden: lone packet rounding, C = 2", golden_single_packet()),
        single("golden: staggered pair trace, C = 2", golden_staggered_pair()),
        single("golden: offline optimum, C = 4", golden_offline_optimum()),
        suite("closed form equals exhaustive matching", instances, seed, 1, |rng, cm| {
            check_oracles(&random_two_sided(rng, 6, 20), cm)
        }),
        suite("one-sided relaxation is integral", instances, seed, 2, |rng, cm| {
            check_integrality(&random_one_sided(rng, 8, 8, 20), cm)
        }),
        suite("one-sided primal-dual feasibility and ratio", instances, seed, 3, |rng, cm| {
            check_pd_one_sided(&random_one_sided(rng, 6, 6, 15), cm)
        }),
        suite("two-sided primal-dual feasibility and ratio", instances, seed, 4, |rng, cm| {
            check_pd_two_sided(&random_two_sided(rng, 6, 15), cm)
        }),
        suite("per-slot transmission caps", instances, seed, 5, |rng, cm| {
            // The three-packet bound presumes N1 <= C.
            let one = random_one_sided(rng, cm.floor_c() as usize, 12, 20);
            let two = random_two_sided(rng, 8, 20);
            check_caps(&one, &two, cm, rng.gen::<f64>())
        }),
    ]
}
