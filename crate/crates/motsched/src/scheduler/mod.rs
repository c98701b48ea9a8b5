//! Branch-and-bound solver for the discrete scheduling subproblem.
//!
//! Decisions are presence first (most-constrained optional activity, absent
//! branch first), then times earliest-start-first. Propagation keeps
//! start/duration/end boxes linked, prunes resource overloads on compulsory
//! parts, and runs three-valued evaluation plus unit propagation over the
//! temporal formula trees. Every emitted schedule is re-checked by the
//! validator before it leaves the solver.
//!
//! Absent activities are fixed to the canonical times start = 0,
//! end = duration lower bound. Difference atoms read times from absent
//! activities too, so pinning them keeps the search space small while the
//! brute-force oracle enumerates the exact same space.

mod brute;
mod encode;

pub use brute::{brute_force_schedule, BruteForceError};
pub use encode::{encode_continuity, ConfFluent, ContinuityEncoding, ContinuityError};

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{horizon, Anchor, Formula, Schedule, SchedulingProblem, TimeRef};
use crate::semantics::{makespan, validate_schedule};

/// Outcome of a scheduling call.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerStatus {
    /// A valid schedule was found (not proven optimal).
    Valid,
    /// A valid schedule was found and proven makespan-optimal.
    Optimal,
    /// No valid schedule exists within the horizon.
    Unsat,
    /// The deadline elapsed before any decision.
    Timeout,
}

/// Search objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Satisfy,
    MinMakespan,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum P {
    True,
    False,
    Open,
}

/// Per-activity search box. Bounds are inclusive; `e` is kept consistent
/// with `s + d` by propagation.
#[derive(Clone)]
struct Dom {
    p: P,
    s_lo: i64,
    s_hi: i64,
    d_lo: i64,
    d_hi: i64,
    e_lo: i64,
    e_hi: i64,
}

struct Conflict;

#[derive(Clone, Copy, PartialEq, Eq)]
enum K {
    T,
    F,
    U,
}

fn time_bounds(t: &TimeRef, doms: &[Dom]) -> (i64, i64) {
    let d = &doms[t.activity.index()];
    let k = t.offset as i64;
    match t.anchor {
        Anchor::Start => (d.s_lo + k, d.s_hi + k),
        Anchor::End => (d.e_lo - k, d.e_hi - k),
    }
}

fn eval3(f: &Formula, doms: &[Dom]) -> K {
    match f {
        Formula::True => K::T,
        Formula::False => K::F,
        Formula::Presence(a) => match doms[a.index()].p {
            P::True => K::T,
            P::False => K::F,
            P::Open => K::U,
        },
        Formula::Diff { lhs, rhs, max } => {
            let (l_lo, l_hi) = time_bounds(lhs, doms);
            let (r_lo, r_hi) = time_bounds(rhs, doms);
            if l_hi - r_lo <= *max {
                K::T
            } else if l_lo - r_hi > *max {
                K::F
            } else {
                K::U
            }
        }
        Formula::Not(g) => match eval3(g, doms) {
            K::T => K::F,
            K::F => K::T,
            K::U => K::U,
        },
        Formula::And(gs) => {
            let mut out = K::T;
            for g in gs {
                match eval3(g, doms) {
                    K::F => return K::F,
                    K::U => out = K::U,
                    K::T => {}
                }
            }
            out
        }
        Formula::Or(gs) => {
            let mut out = K::F;
            for g in gs {
                match eval3(g, doms) {
                    K::T => return K::T,
                    K::U => out = K::U,
                    K::F => {}
                }
            }
            out
        }
        Formula::Implies(a, b) => match (eval3(a, doms), eval3(b, doms)) {
            (K::F, _) | (_, K::T) => K::T,
            (K::T, K::F) => K::F,
            _ => K::U,
        },
    }
}

struct Searcher<'a> {
    sp: &'a SchedulingProblem,
    objective: Objective,
    deadline: Option<Instant>,
    /// How often each activity appears in constraint atoms.
    occ: Vec<usize>,
    /// Tie-break priorities; the declaration index when seed = 0.
    tie: Vec<u64>,
    /// Potential writers per (fluent, value), used for support pruning.
    writers: Vec<Vec<Vec<usize>>>,
    cap: Option<i64>,
    incumbent: Option<Schedule>,
    nodes: u64,
    stop: bool,
    timed_out: bool,
}

impl<'a> Searcher<'a> {
    fn set_presence(&self, doms: &mut [Dom], i: usize, v: bool, changed: &mut bool) -> Result<(), Conflict> {
        let lb = self.sp.activities[i].duration.0 as i64;
        let d = &mut doms[i];
        match (d.p, v) {
            (P::True, true) | (P::False, false) => Ok(()),
            (P::True, false) | (P::False, true) => Err(Conflict),
            (P::Open, true) => {
                d.p = P::True;
                *changed = true;
                Ok(())
            }
            (P::Open, false) => {
                // Canonical absent times: start 0, end at the duration
                // lower bound. Must fit the already-tightened box.
                if d.s_lo > 0 || d.s_hi < 0 || d.d_lo > lb || d.d_hi < lb || d.e_lo > lb || d.e_hi < lb {
                    return Err(Conflict);
                }
                d.p = P::False;
                d.s_lo = 0;
                d.s_hi = 0;
                d.d_lo = lb;
                d.d_hi = lb;
                d.e_lo = lb;
                d.e_hi = lb;
                *changed = true;
                Ok(())
            }
        }
    }

    fn tighten_value_hi(&self, doms: &mut [Dom], t: &TimeRef, hi: i64, changed: &mut bool) -> Result<(), Conflict> {
        let d = &mut doms[t.activity.index()];
        let k = t.offset as i64;
        match t.anchor {
            Anchor::Start => {
                if d.s_hi > hi - k {
                    d.s_hi = hi - k;
                    *changed = true;
                }
                if d.s_lo > d.s_hi {
                    return Err(Conflict);
                }
            }
            Anchor::End => {
                if d.e_hi > hi + k {
                    d.e_hi = hi + k;
                    *changed = true;
                }
                if d.e_lo > d.e_hi {
                    return Err(Conflict);
                }
            }
        }
        Ok(())
    }

    fn tighten_value_lo(&self, doms: &mut [Dom], t: &TimeRef, lo: i64, changed: &mut bool) -> Result<(), Conflict> {
        let d = &mut doms[t.activity.index()];
        let k = t.offset as i64;
        match t.anchor {
            Anchor::Start => {
                if d.s_lo < lo - k {
                    d.s_lo = lo - k;
                    *changed = true;
                }
                if d.s_lo > d.s_hi {
                    return Err(Conflict);
                }
            }
            Anchor::End => {
                if d.e_lo < lo + k {
                    d.e_lo = lo + k;
                    *changed = true;
                }
                if d.e_lo > d.e_hi {
                    return Err(Conflict);
                }
            }
        }
        Ok(())
    }

    fn require_true(&self, f: &Formula, doms: &mut [Dom], changed: &mut bool) -> Result<(), Conflict> {
        match f {
            Formula::True => Ok(()),
            Formula::False => Err(Conflict),
            Formula::Presence(a) => self.set_presence(doms, a.index(), true, changed),
            Formula::Diff { lhs, rhs, max } => {
                // value(lhs) - value(rhs) <= max must hold in the final
                // assignment, so bounds tighten on both sides.
                let (_, r_hi) = time_bounds(rhs, doms);
                self.tighten_value_hi(doms, lhs, r_hi + max, changed)?;
                let (l_lo, _) = time_bounds(lhs, doms);
                self.tighten_value_lo(doms, rhs, l_lo - max, changed)
            }
            Formula::Not(g) => self.require_false(g, doms, changed),
            Formula::And(gs) => {
                for g in gs {
                    self.require_true(g, doms, changed)?;
                }
                Ok(())
            }
            Formula::Or(gs) => {
                let mut open = None;
                for g in gs {
                    match eval3(g, doms) {
                        K::T => return Ok(()),
                        K::U => {
                            if open.is_some() {
                                return Ok(()); // two live disjuncts: nothing to force
                            }
                            open = Some(g);
                        }
                        K::F => {}
                    }
                }
                match open {
                    Some(g) => self.require_true(g, doms, changed),
                    None => Err(Conflict),
                }
            }
            Formula::Implies(a, b) => match eval3(a, doms) {
                K::T => self.require_true(b, doms, changed),
                K::F => Ok(()),
                K::U => match eval3(b, doms) {
                    K::F => self.require_false(a, doms, changed),
                    _ => Ok(()),
                },
            },
        }
    }

    fn require_false(&self, f: &Formula, doms: &mut [Dom], changed: &mut bool) -> Result<(), Conflict> {
        match f {
            Formula::True => Err(Conflict),
            Formula::False => Ok(()),
            Formula::Presence(a) => self.set_presence(doms, a.index(), false, changed),
            Formula::Diff { lhs, rhs, max } => {
                // Negation: value(lhs) - value(rhs) >= max + 1.
                let (r_lo, _) = time_bounds(rhs, doms);
                self.tighten_value_lo(doms, lhs, r_lo + max + 1, changed)?;
                let (_, l_hi) = time_bounds(lhs, doms);
                self.tighten_value_hi(doms, rhs, l_hi - max - 1, changed)
            }
            Formula::Not(g) => self.require_true(g, doms, changed),
            Formula::Or(gs) => {
                for g in gs {
                    self.require_false(g, doms, changed)?;
                }
                Ok(())
            }
            Formula::And(gs) => {
                let mut open = None;
                for g in gs {
                    match eval3(g, doms) {
                        K::F => return Ok(()),
                        K::U => {
                            if open.is_some() {
                                return Ok(());
                            }
                            open = Some(g);
                        }
                        K::T => {}
                    }
                }
                match open {
                    Some(g) => self.require_false(g, doms, changed),
                    None => Err(Conflict),
                }
            }
            Formula::Implies(a, b) => {
                self.require_true(a, doms, changed)?;
                self.require_false(b, doms, changed)
            }
        }
    }

    fn propagate(&self, doms: &mut [Dom]) -> Result<(), Conflict> {
        let mut changed = true;
        while changed {
            changed = false;

            for (i, a) in self.sp.activities.iter().enumerate() {
                let d = &mut doms[i];
                if d.p == P::True {
                    if let Some(cap) = self.cap {
                        if d.e_hi > cap {
                            d.e_hi = cap;
                            changed = true;
                        }
                    }
                }
                let _ = a;
                let (ns_lo, ns_hi) = (d.s_lo.max(d.e_lo - d.d_hi), d.s_hi.min(d.e_hi - d.d_lo));
                let (nd_lo, nd_hi) = (d.d_lo.max(d.e_lo - d.s_hi), d.d_hi.min(d.e_hi - d.s_lo));
                let (ne_lo, ne_hi) = (d.e_lo.max(d.s_lo + d.d_lo), d.e_hi.min(d.s_hi + d.d_hi));
                if ns_lo != d.s_lo || ns_hi != d.s_hi || nd_lo != d.d_lo || nd_hi != d.d_hi
                    || ne_lo != d.e_lo || ne_hi != d.e_hi
                {
                    d.s_lo = ns_lo;
                    d.s_hi = ns_hi;
                    d.d_lo = nd_lo;
                    d.d_hi = nd_hi;
                    d.e_lo = ne_lo;
                    d.e_hi = ne_hi;
                    changed = true;
                }
                if d.s_lo > d.s_hi || d.d_lo > d.d_hi || d.e_lo > d.e_hi {
                    return Err(Conflict);
                }
            }

            self.check_resources(doms)?;

            for f in &self.sp.constraints {
                match eval3(f, doms) {
                    K::F => return Err(Conflict),
                    K::T => {}
                    K::U => self.require_true(f, doms, &mut changed)?,
                }
            }

            self.check_fluent_support(doms, &mut changed)?;
        }
        Ok(())
    }

    /// Overload check on compulsory parts: a present activity certainly
    /// occupies [s_hi, e_lo] whenever that interval is nonempty.
    fn check_resources(&self, doms: &[Dom]) -> Result<(), Conflict> {
        if self.sp.resources.is_empty() {
            return Ok(());
        }
        let max_t = doms.iter().map(|d| d.e_lo).max().unwrap_or(0).max(0) as usize;
        let mut events: Vec<Vec<(usize, i64)>> = vec![Vec::new(); self.sp.resources.len()];
        for (i, a) in self.sp.activities.iter().enumerate() {
            let d = &doms[i];
            if d.p != P::True || d.s_hi > d.e_lo {
                continue;
            }
            for (r, g) in &a.resource_usage {
                if *g > 0 {
                    events[r.index()].push((d.s_hi.max(0) as usize, *g as i64));
                    events[r.index()].push((d.e_lo as usize + 1, -(*g as i64)));
                }
            }
        }
        for (ri, r) in self.sp.resources.iter().enumerate() {
            if events[ri].is_empty() {
                continue;
            }
            let mut profile = vec![0i64; max_t + 2];
            for (t, dg) in &events[ri] {
                profile[(*t).min(max_t + 1)] += dg;
            }
            let mut load = 0i64;
            for dg in &profile {
                load += dg;
                if load > r.capacity as i64 {
                    return Err(Conflict);
                }
            }
        }
        Ok(())
    }

    /// A present activity conditioned on f = v needs v achievable: v is the
    /// initial value or some not-yet-excluded activity can write it.
    fn check_fluent_support(&self, doms: &mut [Dom], changed: &mut bool) -> Result<(), Conflict> {
        for i in 0..self.sp.activities.len() {
            if doms[i].p == P::False {
                continue;
            }
            let mut unsupported = false;
            for c in &self.sp.activities[i].conditions {
                let f = &self.sp.fluents[c.fluent.index()];
                if f.initial == c.value {
                    continue;
                }
                let ws = &self.writers[c.fluent.index()][c.value];
                if !ws.iter().any(|w| doms[*w].p != P::False) {
                    unsupported = true;
                    break;
                }
            }
            if unsupported {
                match doms[i].p {
                    P::True => return Err(Conflict),
                    P::Open => self.set_presence(doms, i, false, changed)?,
                    P::False => {}
                }
            }
        }
        Ok(())
    }

    fn select_branch(&self, doms: &[Dom]) -> Branch {
        let mut best: Option<(usize, (usize, u64))> = None;
        for (i, d) in doms.iter().enumerate() {
            if d.p == P::Open {
                let key = (usize::MAX - self.occ[i], self.tie[i]);
                if best.is_none_or(|(_, bk)| key < bk) {
                    best = Some((i, key));
                }
            }
        }
        if let Some((i, _)) = best {
            return Branch::Presence(i);
        }
        let mut pick: Option<(usize, (i64, u64), bool)> = None;
        for (i, d) in doms.iter().enumerate() {
            if d.p != P::True {
                continue;
            }
            let start_open = d.s_lo < d.s_hi;
            if !start_open && d.d_lo == d.d_hi {
                continue;
            }
            let key = (d.s_lo, self.tie[i]);
            if pick.is_none_or(|(_, pk, _)| key < pk) {
                pick = Some((i, key, start_open));
            }
        }
        match pick {
            Some((i, _, true)) => Branch::Start(i),
            Some((i, _, false)) => Branch::Duration(i),
            None => Branch::Leaf,
        }
    }

    fn extract(&self, doms: &[Dom]) -> Schedule {
        Schedule {
            present: doms.iter().map(|d| d.p == P::True).collect(),
            start: doms.iter().map(|d| d.s_lo as u64).collect(),
            end: doms.iter().map(|d| d.e_lo as u64).collect(),
        }
    }

    fn run(&mut self, doms: &mut [Dom]) {
        if self.stop || self.timed_out {
            return;
        }
        self.nodes += 1;
        if self.nodes.is_multiple_of(256) {
            if let Some(dl) = self.deadline {
                if Instant::now() >= dl {
                    self.timed_out = true;
                    return;
                }
            }
        }
        if self.propagate(doms).is_err() {
            return;
        }
        match self.select_branch(doms) {
            Branch::Leaf => {
                let sched = self.extract(doms);
                if !validate_schedule(self.sp, &sched).is_empty() {
                    return;
                }
                match self.objective {
                    Objective::Satisfy => {
                        self.incumbent = Some(sched);
                        self.stop = true;
                    }
                    Objective::MinMakespan => {
                        let m = makespan(&sched) as i64;
                        self.incumbent = Some(sched);
                        if m == 0 {
                            self.stop = true; // nothing can beat an empty span
                        } else {
                            self.cap = Some(m - 1);
                        }
                    }
                }
            }
            Branch::Presence(i) => {
                // Absent first: favors small schedules and cheap incumbents.
                let mut left = doms.to_vec();
                let mut dummy = false;
                if self.set_presence(&mut left, i, false, &mut dummy).is_ok() {
                    self.run(&mut left);
                }
                let mut right = doms.to_vec();
                if self.set_presence(&mut right, i, true, &mut dummy).is_ok() {
                    self.run(&mut right);
                }
            }
            Branch::Start(i) => {
                let v = doms[i].s_lo;
                let mut left = doms.to_vec();
                left[i].s_hi = v;
                self.run(&mut left);
                let mut right = doms.to_vec();
                right[i].s_lo = v + 1;
                self.run(&mut right);
            }
            Branch::Duration(i) => {
                let v = doms[i].d_lo;
                let mut left = doms.to_vec();
                left[i].d_hi = v;
                self.run(&mut left);
                let mut right = doms.to_vec();
                right[i].d_lo = v + 1;
                self.run(&mut right);
            }
        }
    }
}

fn count_occurrences(f: &Formula, occ: &mut [usize]) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Presence(a) => occ[a.index()] += 1,
        Formula::Diff { lhs, rhs, .. } => {
            occ[lhs.activity.index()] += 1;
            occ[rhs.activity.index()] += 1;
        }
        Formula::Not(g) => count_occurrences(g, occ),
        Formula::And(gs) | Formula::Or(gs) => {
            for g in gs {
                count_occurrences(g, occ);
            }
        }
        Formula::Implies(a, b) => {
            count_occurrences(a, occ);
            count_occurrences(b, occ);
        }
    }
}

enum Branch {
    Presence(usize),
    Start(usize),
    Duration(usize),
    Leaf,
}

/// Solves the scheduling problem. `deadline` bounds wall time; `seed`
/// randomizes tie-breaking only (0 keeps declaration order), so results are
/// deterministic given (problem, objective, seed).
pub fn get_schedule(
    sp: &SchedulingProblem,
    objective: Objective,
    deadline: Option<Instant>,
    seed: u64,
) -> (Option<Schedule>, SchedulerStatus) {
    let n = sp.activities.len();
    // Closed spans consume duration + 1 ticks, so a fully serialized
    // schedule needs one separating tick per activity beyond the duration
    // sum. The oracle enumerates the same extended bound.
    let h = horizon(sp) as i64 + n as i64;

    let mut occ = vec![0usize; n];
    for f in &sp.constraints {
        count_occurrences(f, &mut occ);
    }
    let tie: Vec<u64> = if seed == 0 {
        (0..n as u64).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random()).collect()
    };

    let mut writers: Vec<Vec<Vec<usize>>> =
        sp.fluents.iter().map(|f| vec![Vec::new(); f.domain.len()]).collect();
    for (i, a) in sp.activities.iter().enumerate() {
        for e in &a.effects {
            writers[e.fluent.index()][e.value].push(i);
        }
    }

    let mut searcher = Searcher {
        sp,
        objective,
        deadline,
        occ,
        tie,
        writers,
        cap: None,
        incumbent: None,
        nodes: 0,
        stop: false,
        timed_out: false,
    };

    let mut doms: Vec<Dom> = sp
        .activities
        .iter()
        .map(|a| Dom {
            p: if a.optional { P::Open } else { P::True },
            s_lo: 0,
            s_hi: h,
            d_lo: a.duration.0 as i64,
            d_hi: a.duration.1 as i64,
            e_lo: 0,
            e_hi: h,
        })
        .collect();

    searcher.run(&mut doms);

    let (sched, status) = match (objective, searcher.timed_out, searcher.incumbent) {
        (Objective::Satisfy, _, Some(s)) => (Some(s), SchedulerStatus::Valid),
        (Objective::Satisfy, true, None) => (None, SchedulerStatus::Timeout),
        (Objective::Satisfy, false, None) => (None, SchedulerStatus::Unsat),
        (Objective::MinMakespan, true, Some(s)) => (Some(s), SchedulerStatus::Valid),
        (Objective::MinMakespan, true, None) => (None, SchedulerStatus::Timeout),
        (Objective::MinMakespan, false, Some(s)) => (Some(s), SchedulerStatus::Optimal),
        (Objective::MinMakespan, false, None) => (None, SchedulerStatus::Unsat),
    };
    if let Some(s) = &sched {
        let v = validate_schedule(sp, s);
        assert!(v.is_empty(), "solver emitted an invalid schedule: {v:?}");
    }
    (sched, status)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Activity, ActivityId, Effect, Fluent, FluentCondition, FluentId, Resource, ResourceId};

    fn act(name: &str, optional: bool, dur: (u64, u64)) -> Activity {
        Activity {
            name: name.into(),
            optional,
            duration: dur,
            resource_usage: vec![],
            conditions: vec![],
            effects: vec![],
            motion: None,
        }
    }

    #[test]
    fn empty_problem_is_trivially_optimal() {
        let sp = SchedulingProblem::empty();
        let (s, status) = get_schedule(&sp, Objective::MinMakespan, None, 0);
        assert_eq!(status, SchedulerStatus::Optimal);
        assert_eq!(makespan(&s.unwrap()), 0);
    }

    #[test]
    fn unary_resource_serializes_with_one_tick_gap() {
        let mut sp = SchedulingProblem::empty();
        sp.resources.push(Resource { name: "m".into(), capacity: 1 });
        let mut a = act("a", false, (2, 2));
        a.resource_usage.push((ResourceId(0), 1));
        let mut b = act("b", false, (3, 3));
        b.resource_usage.push((ResourceId(0), 1));
        sp.activities = vec![a, b];
        let (s, status) = get_schedule(&sp, Objective::MinMakespan, None, 0);
        assert_eq!(status, SchedulerStatus::Optimal);
        let s = s.unwrap();
        // Closed spans on a unary resource: meeting schedules share a tick,
        // so the later activity starts one tick past the earlier one's end.
        assert_eq!(makespan(&s), 6);
        let (bs, bstatus) = brute_force_schedule(&sp, Objective::MinMakespan).unwrap();
        assert_eq!(bstatus, SchedulerStatus::Optimal);
        assert_eq!(makespan(&bs.unwrap()), 6);
    }

    #[test]
    fn unachievable_fluent_condition_is_unsat() {
        let mut sp = SchedulingProblem::empty();
        sp.use_fluents = true;
        sp.fluents.push(Fluent {
            name: "f".into(),
            domain: vec!["a".into(), "b".into()],
            initial: 0,
        });
        let mut a = act("needs_b", false, (1, 2));
        a.conditions.push(FluentCondition {
            from: TimeRef::start_of(ActivityId(0)),
            to: TimeRef::end_of(ActivityId(0)),
            fluent: FluentId(0),
            value: 1,
        });
        sp.activities = vec![a];
        let (s, status) = get_schedule(&sp, Objective::Satisfy, None, 0);
        assert_eq!(status, SchedulerStatus::Unsat);
        assert!(s.is_none());
        let (_, bstatus) = brute_force_schedule(&sp, Objective::Satisfy).unwrap();
        assert_eq!(bstatus, SchedulerStatus::Unsat);
    }

    #[test]
    fn fluent_condition_pulls_in_its_writer() {
        let mut sp = SchedulingProblem::empty();
        sp.use_fluents = true;
        sp.fluents.push(Fluent {
            name: "door".into(),
            domain: vec!["closed".into(), "open".into()],
            initial: 0,
        });
        let mut opener = act("open", true, (2, 2));
        opener.effects.push(Effect {
            at: TimeRef::end_of(ActivityId(0)),
            fluent: FluentId(0),
            value: 1,
        });
        let mut pass = act("pass", false, (3, 3));
        pass.conditions.push(FluentCondition {
            from: TimeRef::start_of(ActivityId(1)),
            to: TimeRef::end_of(ActivityId(1)),
            fluent: FluentId(0),
            value: 1,
        });
        sp.activities = vec![opener, pass];
        let (s, status) = get_schedule(&sp, Objective::MinMakespan, None, 0);
        assert_eq!(status, SchedulerStatus::Optimal);
        let s = s.unwrap();
        assert!(s.present[0], "the optional opener must be pulled in");
        assert!(s.start[1] >= s.end[0], "pass cannot start before the door opens");
        assert_eq!(makespan(&s), 5, "open [0,2], pass [2,5]");
    }

    #[test]
    fn unforced_optional_activity_stays_absent() {
        let mut sp = SchedulingProblem::empty();
        sp.activities = vec![act("maybe", true, (4, 9))];
        let (s, status) = get_schedule(&sp, Objective::MinMakespan, None, 0);
        assert_eq!(status, SchedulerStatus::Optimal);
        let s = s.unwrap();
        assert!(!s.present[0]);
        assert_eq!(makespan(&s), 0);
    }

    #[test]
    fn presence_and_ordering_constraints_are_honored() {
        let mut sp = SchedulingProblem::empty();
        sp.activities = vec![act("a", true, (2, 4)), act("b", true, (1, 1))];
        sp.constraints.push(Formula::Presence(ActivityId(0)));
        sp.constraints.push(Formula::implies(
            Formula::Presence(ActivityId(0)),
            Formula::Presence(ActivityId(1)),
        ));
        // b strictly after a.
        sp.constraints.push(Formula::lt(
            TimeRef::end_of(ActivityId(0)),
            TimeRef::start_of(ActivityId(1)),
        ));
        let (s, status) = get_schedule(&sp, Objective::MinMakespan, None, 0);
        assert_eq!(status, SchedulerStatus::Optimal);
        let s = s.unwrap();
        assert!(s.present[0] && s.present[1]);
        assert!(s.start[1] > s.end[0]);
        assert_eq!(makespan(&s), 4, "a [0,2], b [3,4]");
    }

    #[test]
    fn expired_deadline_times_out_without_an_answer() {
        let mut sp = SchedulingProblem::empty();
        for i in 0..8 {
            sp.activities.push(act(&format!("a{i}"), true, (1, 6)));
        }
        sp.resources.push(Resource { name: "m".into(), capacity: 1 });
        for a in &mut sp.activities {
            a.resource_usage.push((ResourceId(0), 1));
            a.optional = false;
        }
        let deadline = Instant::now();
        let (s, status) = get_schedule(&sp, Objective::MinMakespan, Some(deadline), 0);
        // Either we timed out empty-handed or found an incumbent first;
        // with an already-expired deadline and 8 activities the search
        // cannot finish, so OPTIMAL must not be claimed.
        assert_ne!(status, SchedulerStatus::Optimal);
        if status == SchedulerStatus::Timeout {
            assert!(s.is_none());
        }
    }

    #[test]
    fn seeds_change_tie_breaking_but_not_validity() {
        let mut sp = SchedulingProblem::empty();
        sp.resources.push(Resource { name: "m".into(), capacity: 1 });
        for i in 0..3 {
            let mut a = act(&format!("a{i}"), false, (2, 2));
            a.resource_usage.push((ResourceId(0), 1));
            sp.activities.push(a);
        }
        let (s0, st0) = get_schedule(&sp, Objective::MinMakespan, None, 0);
        let (s0b, st0b) = get_schedule(&sp, Objective::MinMakespan, None, 0);
        assert_eq!(st0, st0b);
        assert_eq!(s0, s0b, "same seed must reproduce the same schedule");
        let (s7, st7) = get_schedule(&sp, Objective::MinMakespan, None, 7);
        assert_eq!(st7, SchedulerStatus::Optimal);
        assert_eq!(makespan(&s7.unwrap()), makespan(&s0.unwrap()));
    }

    #[test]
    fn refinement_style_disjunction_forces_a_gap() {
        // An appended implication in refinement shape: if both present,
        // either b ends before a starts or b starts after a ends.
        let mut sp = SchedulingProblem::empty();
        sp.activities = vec![act("a", false, (3, 3)), act("b", false, (3, 3))];
        let a = ActivityId(0);
        let b = ActivityId(1);
        sp.constraints.push(Formula::implies(
            Formula::and(vec![Formula::Presence(a), Formula::Presence(b)]),
            Formula::or(vec![
                Formula::lt(TimeRef::end_of(b), TimeRef::start_of(a)),
                Formula::lt(TimeRef::end_of(a), TimeRef::start_of(b)),
            ]),
        ));
        let (s, status) = get_schedule(&sp, Objective::MinMakespan, None, 0);
        assert_eq!(status, SchedulerStatus::Optimal);
        let s = s.unwrap();
        assert_eq!(makespan(&s), 7, "two 3-tick spans with a strict gap");
        let (bs, _) = brute_force_schedule(&sp, Objective::MinMakespan).unwrap();
        assert_eq!(makespan(&bs.unwrap()), 7);
    }
}
