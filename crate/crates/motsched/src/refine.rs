//! Feedback from motion planning to scheduling: a failed planner call is
//! distilled into a constraint over activity presences and times that every
//! later schedule candidate must satisfy, so the scheduler can only propose
//! candidates that change something the planner can exploit.
//!
//! Every learned constraint is an implication `guard -> body`. The guard
//! ([`rcond`]) captures the schedule pattern that reproduced the failed
//! query: group members present, each object's first motion kept first, and
//! every rival motion kept clear of the group. The body lists the repair
//! alternatives: some blocking object parked elsewhere (`chconf`), a member
//! started sooner, or a member's window widened to what the planner
//! actually needed. Guards evaluate true on the schedule that produced them
//! and bodies evaluate false, so the producing candidate is always cut.
//!
//! The module also owns the trajectory cache: planner verdicts keyed by the
//! geometry-and-timing shape of the query, so interchangeable objects and
//! time-shifted repeats of the same group reuse earlier work.

use std::collections::hash_map::Entry;
use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    config_eq, Activity, ActivityId, Configuration, FluentCondition, FluentId, Formula, ObjectId,
    Problem, Sample, Schedule, SchedulingProblem, TimeRef, Trajectory,
};
use crate::motion::{ConflictReport, GroupQuery, MotionOutcome, PlannedMotion};
use crate::scheduler::{ConfFluent, ContinuityEncoding};

#[derive(Debug, Error)]
pub enum RefineError {
    #[error("activity {0:?} failed geometrically but reported no blocking objects")]
    NoBlockers(ActivityId),
    #[error("a blocker report with blocking objects cannot prove infeasibility")]
    BlockersPresent(ActivityId),
    #[error("temporal refinement needs at least one planned group member")]
    NoTimings,
    #[error("every planned member fits its scheduled window; nothing to refine")]
    TimingsFit,
    #[error("object {0:?} has no tracked configuration value for the blocked spot")]
    UntrackedConfiguration(ObjectId),
}

// ---------------------------------------------------------------------------
// Parallel motion groups
// ---------------------------------------------------------------------------

/// Maximal set of present motion activities linked, transitively, by
/// closed-interval time overlap: sharing even a single tick joins two
/// activities, and a chain of overlaps joins its endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelMotionGroup {
    /// Members sorted by (start, index).
    pub activities: Vec<ActivityId>,
    /// Earliest member start.
    pub s_min: u64,
}

/// Splits the present motion activities of a schedule into parallel motion
/// groups, returned in ascending `s_min` order.
pub fn compute_groups(sp: &SchedulingProblem, rho: &Schedule) -> Vec<ParallelMotionGroup> {
    debug_assert_eq!(rho.present.len(), sp.activities.len());
    let mut movers: Vec<usize> = (0..sp.activities.len())
        .filter(|&i| sp.activities[i].motion.is_some() && rho.present[i])
        .collect();
    movers.sort_by_key(|&i| (rho.start[i], i));
    // Sorted sweep: an activity starting at or before the running max end
    // overlaps the member attaining it, so the component keeps growing.
    let mut out: Vec<ParallelMotionGroup> = Vec::new();
    let mut max_end = 0;
    for i in movers {
        match out.last_mut() {
            Some(g) if rho.start[i] <= max_end => {
                g.activities.push(ActivityId(i));
                max_end = max_end.max(rho.end[i]);
            }
            _ => {
                out.push(ParallelMotionGroup {
                    activities: vec![ActivityId(i)],
                    s_min: rho.start[i],
                });
                max_end = rho.end[i];
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Guard: the schedule pattern that reproduces a group
// ---------------------------------------------------------------------------

/// The recreate condition of a group: members present, each moved object's
/// earliest member still the first of its members to run, and every rival
/// motion activity, if present, entirely before or entirely after the whole
/// group. Auxiliary activities never count as rivals. Holds on any schedule
/// that reproduces the group; holds in particular on the one it came from.
pub fn rcond(sp: &SchedulingProblem, g: &ParallelMotionGroup) -> Formula {
    let mut parts: Vec<Formula> = g.activities.iter().map(|&a| Formula::Presence(a)).collect();
    // Members arrive (start, index)-sorted, so the first hit per object is
    // its earliest member.
    let mut first: HashMap<ObjectId, ActivityId> = HashMap::new();
    for &a in &g.activities {
        let o = sp.activities[a.index()].motion.as_ref().expect("group member moves").object;
        match first.entry(o) {
            Entry::Vacant(v) => {
                v.insert(a);
            }
            Entry::Occupied(m) => {
                parts.push(Formula::le(TimeRef::end_of(*m.get()), TimeRef::start_of(a)));
            }
        }
    }
    let members: BTreeSet<usize> = g.activities.iter().map(|a| a.index()).collect();
    for (r, act) in sp.activities.iter().enumerate() {
        if act.motion.is_none() || members.contains(&r) {
            continue;
        }
        let rid = ActivityId(r);
        let before = Formula::and(
            g.activities
                .iter()
                .map(|&a| Formula::lt(TimeRef::end_of(rid), TimeRef::start_of(a)))
                .collect(),
        );
        let after = Formula::and(
            g.activities
                .iter()
                .map(|&a| Formula::lt(TimeRef::end_of(a), TimeRef::start_of(rid)))
                .collect(),
        );
        parts.push(Formula::implies(Formula::Presence(rid), Formula::or(vec![before, after])));
    }
    Formula::and(parts)
}

// ---------------------------------------------------------------------------
// Repair alternative: object parked away from a blocked spot
// ---------------------------------------------------------------------------

/// One repair alternative without fluents: `object` is out of `blocked` for
/// the whole span of `b`. Either nothing ever parks it there (first
/// disjunct, impossible when it starts there), or some motion parks it
/// elsewhere before `b` starts and no return to `blocked` lands in between.
pub fn chconf_fluent_free(
    sp: &SchedulingProblem,
    b: ActivityId,
    object: ObjectId,
    blocked: &Configuration,
    initial: &Configuration,
) -> Formula {
    let mut away: Vec<ActivityId> = Vec::new();
    let mut back: Vec<ActivityId> = Vec::new();
    for (i, act) in sp.activities.iter().enumerate() {
        let Some(mc) = &act.motion else { continue };
        if mc.object != object {
            continue;
        }
        if config_eq(&mc.goal, blocked) {
            back.push(ActivityId(i));
        } else {
            away.push(ActivityId(i));
        }
    }
    let b_start = TimeRef::start_of(b);
    let b_end = TimeRef::end_of(b);
    let mut alts: Vec<Formula> = Vec::new();
    if config_eq(blocked, initial) {
        alts.push(Formula::False);
    } else {
        alts.push(Formula::and(
            back.iter()
                .map(|&x| {
                    Formula::implies(
                        Formula::Presence(x),
                        Formula::lt(b_end, TimeRef::start_of(x)),
                    )
                })
                .collect(),
        ));
    }
    for &h in &away {
        let mut req =
            vec![Formula::Presence(h), Formula::lt(TimeRef::end_of(h), b_start)];
        for &x in &back {
            req.push(Formula::implies(
                Formula::Presence(x),
                Formula::or(vec![
                    Formula::lt(TimeRef::end_of(x), TimeRef::start_of(h)),
                    Formula::lt(b_end, TimeRef::start_of(x)),
                ]),
            ));
        }
        alts.push(Formula::and(req));
    }
    Formula::or(alts)
}

// ---------------------------------------------------------------------------
// Refinements
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementKind {
    Geometric,
    Temporal,
}

/// Whether a refinement answers the planner query that produced it or was
/// propagated to an interchangeable activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementOrigin {
    Primary,
    Generalized { from: ActivityId },
}

/// One learned constraint. `guard -> body` is what lands in the problem;
/// the remaining fields record where it came from. Guards of primary
/// refinements hold on the producing schedule while their bodies do not.
#[derive(Debug, Clone, Serialize)]
pub struct Refinement {
    pub kind: RefinementKind,
    pub origin: RefinementOrigin,
    /// The group the guard talks about.
    pub group: Vec<ActivityId>,
    /// Object configurations current at the group start.
    pub conf: Vec<Configuration>,
    pub guard: Formula,
    pub body: Formula,
    /// Blocking (activity, object) pairs the body offers alternatives for.
    pub blocking: Vec<(ActivityId, ObjectId)>,
    /// Achieved (delay, duration) seconds per planned member, for temporal
    /// refinements.
    pub timings: Vec<(ActivityId, f64, f64)>,
}

impl Refinement {
    /// The constraint as pushed into the refined problem.
    pub fn constraint(&self) -> Formula {
        Formula::implies(self.guard.clone(), self.body.clone())
    }
}

/// Achieved timing of one planned group member, in seconds relative to the
/// group start.
#[derive(Debug, Clone, Copy)]
pub struct TimingEstimate {
    pub activity: ActivityId,
    pub delay: f64,
    pub duration: f64,
}

/// Pads a schedule over the original activities with canonical absent rows
/// for auxiliaries materialized since it was produced.
pub fn extended_schedule(rho: &Schedule, sp: &SchedulingProblem) -> Schedule {
    let mut s = rho.clone();
    for a in &sp.activities[rho.present.len()..] {
        s.present.push(false);
        s.start.push(0);
        s.end.push(a.duration.0);
    }
    s
}

/// Where `object` rests at tick `t` of a group's run under `rho`: the goal
/// of the last group member parking it at or before `t`, else its
/// group-start spot.
pub fn parked_at(
    sp: &SchedulingProblem,
    g: &ParallelMotionGroup,
    object: ObjectId,
    t: u64,
    conf: &[Configuration],
    rho: &Schedule,
) -> Configuration {
    let mut best: Option<(u64, usize, Configuration)> = None;
    for &a in &g.activities {
        let Some(mc) = &sp.activities[a.index()].motion else { continue };
        if mc.object != object {
            continue;
        }
        let e = rho.end[a.index()];
        if e <= t && best.is_none_or(|(be, bi, _)| (e, a.index()) > (be, bi)) {
            best = Some((e, a.index(), mc.goal));
        }
    }
    best.map_or(conf[object.index()], |(_, _, q)| q)
}

/// Every object's resting configuration at tick `t` of a group's run.
pub fn parked_scene(
    sp: &SchedulingProblem,
    g: &ParallelMotionGroup,
    t: u64,
    conf: &[Configuration],
    rho: &Schedule,
) -> Vec<Configuration> {
    (0..conf.len()).map(|oi| parked_at(sp, g, ObjectId(oi), t, conf, rho)).collect()
}

/// Accumulates refinements against a working copy of the encoded scheduling
/// problem. One refiner lives per solver restart; refinements reset with
/// it, the trajectory cache does not.
pub struct Refiner {
    /// The problem being refined: grows constraints and, in fluent mode,
    /// optional condition-carrier activities.
    pub problem: SchedulingProblem,
    pub log: Vec<Refinement>,
    conf_fluents: Vec<Option<ConfFluent>>,
    initials: Vec<Configuration>,
    classes: Vec<String>,
    tick_seconds: f64,
    /// (host, object) -> carriers materialized so far, one per fluent value.
    carriers: HashMap<(ActivityId, ObjectId), Vec<(usize, ActivityId)>>,
}

impl Refiner {
    pub fn new(p: &Problem, enc: &ContinuityEncoding) -> Refiner {
        Refiner {
            problem: enc.problem.clone(),
            log: Vec::new(),
            conf_fluents: enc.conf_fluents.clone(),
            initials: p.objects.iter().map(|o| o.initial).collect(),
            classes: p.objects.iter().map(|o| o.equivalence_key()).collect(),
            tick_seconds: p.tick_seconds,
            carriers: HashMap::new(),
        }
    }

    /// Repair alternative for one (activity, object, blocked spot) triple,
    /// in whichever continuity mode the problem uses.
    fn chconf(
        &mut self,
        b: ActivityId,
        object: ObjectId,
        blocked: &Configuration,
    ) -> Result<Formula, RefineError> {
        if self.problem.use_fluents {
            self.chconf_fluent(b, object, blocked)
        } else {
            Ok(chconf_fluent_free(
                &self.problem,
                b,
                object,
                blocked,
                &self.initials[object.index()],
            ))
        }
    }

    /// Fluent-mode repair alternative: a disjunction over carrier
    /// activities, one per alternative value of the object's configuration
    /// fluent, each requiring its value across exactly the span of `b`.
    /// Carriers are materialized once per (host, object, value) and shared
    /// between refinements; carriers of the same pair exclude one another.
    pub fn chconf_fluent(
        &mut self,
        b: ActivityId,
        object: ObjectId,
        blocked: &Configuration,
    ) -> Result<Formula, RefineError> {
        let Some(cf) = &self.conf_fluents[object.index()] else {
            // Nothing ever moves the object, so no alternative value exists.
            return Ok(Formula::or(vec![]));
        };
        let fluent = cf.fluent;
        let blocked_v = cf
            .configs
            .iter()
            .position(|q| config_eq(q, blocked))
            .ok_or(RefineError::UntrackedConfiguration(object))?;
        let values: Vec<usize> = (0..cf.configs.len()).filter(|&v| v != blocked_v).collect();
        let terms = values
            .into_iter()
            .map(|v| {
                let id = self.carrier(b, object, fluent, v);
                Formula::and(vec![
                    Formula::Presence(id),
                    Formula::eq(TimeRef::start_of(id), TimeRef::start_of(b)),
                    Formula::eq(TimeRef::end_of(id), TimeRef::end_of(b)),
                ])
            })
            .collect();
        Ok(Formula::or(terms))
    }

    fn carrier(&mut self, b: ActivityId, object: ObjectId, fluent: FluentId, v: usize) -> ActivityId {
        let have = self.carriers.entry((b, object)).or_default();
        if let Some(&(_, id)) = have.iter().find(|(val, _)| *val == v) {
            return id;
        }
        let siblings: Vec<ActivityId> = have.iter().map(|&(_, id)| id).collect();
        let id = ActivityId(self.problem.activities.len());
        let name = format!(
            "{}|{}={}",
            self.problem.activities[b.index()].name,
            self.problem.fluents[fluent.index()].name,
            self.problem.fluents[fluent.index()].domain[v],
        );
        let duration = self.problem.activities[b.index()].duration;
        self.problem.activities.push(Activity {
            name,
            optional: true,
            duration,
            resource_usage: vec![],
            conditions: vec![FluentCondition {
                from: TimeRef::start_of(id),
                to: TimeRef::end_of(id),
                fluent,
                value: v,
            }],
            effects: vec![],
            motion: None,
        });
        for s in siblings {
            self.problem
                .constraints
                .push(Formula::not(Formula::and(vec![
                    Formula::Presence(id),
                    Formula::Presence(s),
                ])));
        }
        self.carriers.get_mut(&(b, object)).expect("entry created above").push((v, id));
        id
    }

    fn push(&mut self, r: Refinement) {
        self.problem.constraints.push(r.constraint());
        self.log.push(r);
    }

    /// Learns from a geometric failure of `failed` inside its group: under
    /// the group's recreate condition, some reported blocker must be parked
    /// away from where it stood during `failed`. For singleton groups the
    /// refinement is propagated to interchangeable activities whose start
    /// the planner reached and whose goal it proved unreachable. Returns
    /// how many refinements were added.
    pub fn add_geometric_refinements(
        &mut self,
        g: &ParallelMotionGroup,
        failed: ActivityId,
        report: &ConflictReport,
        conf: &[Configuration],
        rho: &Schedule,
    ) -> Result<usize, RefineError> {
        if report.blockers.is_empty() {
            return Err(RefineError::NoBlockers(failed));
        }
        let guard = rcond(&self.problem, g);
        let s_b = rho.start[failed.index()];
        let pairs: Vec<(ObjectId, Configuration)> = report
            .blockers
            .iter()
            .map(|&o| (o, parked_at(&self.problem, g, o, s_b, conf, rho)))
            .collect();
        let mut terms = Vec::new();
        let mut blocking = Vec::new();
        for (o, q) in &pairs {
            terms.push(self.chconf(failed, *o, q)?);
            blocking.push((failed, *o));
        }
        self.push(Refinement {
            kind: RefinementKind::Geometric,
            origin: RefinementOrigin::Primary,
            group: g.activities.clone(),
            conf: conf.to_vec(),
            guard,
            body: Formula::or(terms),
            blocking,
            timings: vec![],
        });
        let mut count = 1;
        if g.activities.len() == 1 {
            count += self.generalize_geometric(g.activities[0], report, &pairs, conf)?;
        }
        Ok(count)
    }

    /// Propagates a singleton geometric refinement to every activity moving
    /// an interchangeable object from a configuration the planner reached
    /// to one it proved unreachable: the same parked blockers defeat it.
    fn generalize_geometric(
        &mut self,
        a: ActivityId,
        report: &ConflictReport,
        pairs: &[(ObjectId, Configuration)],
        conf: &[Configuration],
    ) -> Result<usize, RefineError> {
        let mc_a = self.problem.activities[a.index()].motion.clone().expect("failed member moves");
        let class = self.classes[mc_a.object.index()].clone();
        let mut count = 0;
        let n = self.problem.activities.len();
        for i in 0..n {
            if i == a.index() {
                continue;
            }
            let Some(mc2) = self.problem.activities[i].motion.clone() else { continue };
            if self.classes[mc2.object.index()] != class
                || report.unreachable.iter().any(|q| config_eq(q, &mc2.start))
                || !report.unreachable.iter().any(|q| config_eq(q, &mc2.goal))
            {
                continue;
            }
            let a2 = ActivityId(i);
            let mut terms = Vec::new();
            let mut blocking = Vec::new();
            for (o, q) in pairs {
                if *o == mc2.object {
                    continue;
                }
                terms.push(self.chconf(a2, *o, q)?);
                blocking.push((a2, *o));
            }
            if terms.is_empty() {
                continue;
            }
            let g2 = ParallelMotionGroup { activities: vec![a2], s_min: 0 };
            self.push(Refinement {
                kind: RefinementKind::Geometric,
                origin: RefinementOrigin::Generalized { from: a },
                group: vec![a2],
                conf: conf.to_vec(),
                guard: rcond(&self.problem, &g2),
                body: Formula::or(terms),
                blocking,
                timings: vec![],
            });
            count += 1;
        }
        Ok(count)
    }

    /// Learns from a planner failure that involved no movable object: the
    /// group's schedule pattern is impossible outright, so the guard itself
    /// is banned. Singleton groups propagate to interchangeable activities
    /// with a reached start and an unreachable goal, which face a scene at
    /// least as hard.
    pub fn add_infeasible_refinements(
        &mut self,
        g: &ParallelMotionGroup,
        failed: ActivityId,
        report: &ConflictReport,
        conf: &[Configuration],
    ) -> Result<usize, RefineError> {
        if !report.blockers.is_empty() {
            return Err(RefineError::BlockersPresent(failed));
        }
        self.push(Refinement {
            kind: RefinementKind::Geometric,
            origin: RefinementOrigin::Primary,
            group: g.activities.clone(),
            conf: conf.to_vec(),
            guard: rcond(&self.problem, g),
            body: Formula::False,
            blocking: vec![],
            timings: vec![],
        });
        let mut count = 1;
        if g.activities.len() != 1 {
            return Ok(count);
        }
        let a = g.activities[0];
        let mc_a = self.problem.activities[a.index()].motion.clone().expect("failed member moves");
        let class = self.classes[mc_a.object.index()].clone();
        let n = self.problem.activities.len();
        for i in 0..n {
            if i == a.index() {
                continue;
            }
            let Some(mc2) = self.problem.activities[i].motion.clone() else { continue };
            if self.classes[mc2.object.index()] != class
                || report.unreachable.iter().any(|q| config_eq(q, &mc2.start))
                || !report.unreachable.iter().any(|q| config_eq(q, &mc2.goal))
            {
                continue;
            }
            let a2 = ActivityId(i);
            let g2 = ParallelMotionGroup { activities: vec![a2], s_min: 0 };
            self.push(Refinement {
                kind: RefinementKind::Geometric,
                origin: RefinementOrigin::Generalized { from: a },
                group: vec![a2],
                conf: conf.to_vec(),
                guard: rcond(&self.problem, &g2),
                body: Formula::False,
                blocking: vec![],
                timings: vec![],
            });
            count += 1;
        }
        Ok(count)
    }

    /// Learns from planned motions that do not fit their scheduled windows.
    /// Under the group's recreate condition, either some standing object is
    /// parked elsewhere, or some planned member starts closer to the group
    /// start than it did, or some overrunning member's window grows to the
    /// ticks the planner needed. Singleton groups propagate the duration
    /// demand to activities with an interchangeable object and identical
    /// endpoints. Returns how many refinements were added.
    pub fn add_temporal_refinements(
        &mut self,
        g: &ParallelMotionGroup,
        estimates: &[TimingEstimate],
        conf: &[Configuration],
        rho: &Schedule,
    ) -> Result<usize, RefineError> {
        let m = estimates
            .iter()
            .map(|e| e.activity)
            .min_by_key(|a| (rho.start[a.index()], a.index()))
            .ok_or(RefineError::NoTimings)?;
        let s_m = rho.start[m.index()];
        struct Row {
            a: ActivityId,
            delta: u64,
            dur: u64,
            need: u64,
        }
        let rows: Vec<Row> = estimates
            .iter()
            .map(|e| {
                let i = e.activity.index();
                // Ticks needed to cover the achieved delay plus duration; a
                // whisker of slack forgives float noise at exact multiples.
                let need =
                    (((e.delay + e.duration) / self.tick_seconds) - 1e-9).ceil().max(0.0) as u64;
                Row { a: e.activity, delta: rho.start[i] - s_m, dur: rho.end[i] - rho.start[i], need }
            })
            .collect();
        if rows.iter().all(|r| r.need <= r.delta + r.dur) {
            return Err(RefineError::TimingsFit);
        }
        let guard = rcond(&self.problem, g);
        let moved: BTreeSet<ObjectId> = g
            .activities
            .iter()
            .map(|a| self.problem.activities[a.index()].motion.as_ref().expect("member moves").object)
            .collect();
        let mut terms = Vec::new();
        let mut blocking = Vec::new();
        // Standing objects pin the scene: any of them parked elsewhere
        // changes the planning problem, so each is a repair alternative.
        for &a in &g.activities {
            for (oi, q) in conf.iter().enumerate() {
                let o = ObjectId(oi);
                if moved.contains(&o) {
                    continue;
                }
                let q = *q;
                terms.push(self.chconf(a, o, &q)?);
                blocking.push((a, o));
            }
        }
        for r in &rows {
            if r.delta > 0 {
                terms.push(Formula::Diff {
                    lhs: TimeRef::start_of(r.a),
                    rhs: TimeRef::start_of(m),
                    max: r.delta as i64 - 1,
                });
            }
        }
        for r in &rows {
            if r.need > r.delta + r.dur {
                terms.push(Formula::not(Formula::Diff {
                    lhs: TimeRef::end_of(r.a),
                    rhs: TimeRef::start_of(m),
                    max: r.need as i64 - 1,
                }));
            }
        }
        let timings: Vec<(ActivityId, f64, f64)> =
            estimates.iter().map(|e| (e.activity, e.delay, e.duration)).collect();
        self.push(Refinement {
            kind: RefinementKind::Temporal,
            origin: RefinementOrigin::Primary,
            group: g.activities.clone(),
            conf: conf.to_vec(),
            guard,
            body: Formula::or(terms),
            blocking,
            timings: timings.clone(),
        });
        let mut count = 1;
        if g.activities.len() == 1 && rows.len() == 1 {
            let a = g.activities[0];
            let need = rows[0].need;
            let mc_a =
                self.problem.activities[a.index()].motion.clone().expect("failed member moves");
            let class = self.classes[mc_a.object.index()].clone();
            let n = self.problem.activities.len();
            for i in 0..n {
                if i == a.index() {
                    continue;
                }
                let Some(mc2) = self.problem.activities[i].motion.clone() else { continue };
                // Duration bounds only transfer between identical motion
                // problems: same object class, same endpoints.
                if self.classes[mc2.object.index()] != class
                    || !config_eq(&mc2.start, &mc_a.start)
                    || !config_eq(&mc2.goal, &mc_a.goal)
                {
                    continue;
                }
                let a2 = ActivityId(i);
                let mut terms2 = Vec::new();
                let mut blocking2 = Vec::new();
                for (oi, q) in conf.iter().enumerate() {
                    let o = ObjectId(oi);
                    if o == mc_a.object || o == mc2.object {
                        continue;
                    }
                    let q = *q;
                    terms2.push(self.chconf(a2, o, &q)?);
                    blocking2.push((a2, o));
                }
                terms2.push(Formula::not(Formula::Diff {
                    lhs: TimeRef::end_of(a2),
                    rhs: TimeRef::start_of(a2),
                    max: need as i64 - 1,
                }));
                let g2 = ParallelMotionGroup { activities: vec![a2], s_min: g.s_min };
                self.push(Refinement {
                    kind: RefinementKind::Temporal,
                    origin: RefinementOrigin::Generalized { from: a },
                    group: vec![a2],
                    conf: conf.to_vec(),
                    guard: rcond(&self.problem, &g2),
                    body: Formula::or(terms2),
                    blocking: blocking2,
                    timings: timings.clone(),
                });
                count += 1;
            }
        }
        Ok(count)
    }
}

// ---------------------------------------------------------------------------
// Trajectory cache
// ---------------------------------------------------------------------------

/// Bit-exact canonical form of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonConfig {
    x: u64,
    y: u64,
    heading: u64,
}

fn canon_config(q: &Configuration) -> CanonConfig {
    CanonConfig { x: q.x.to_bits(), y: q.y.to_bits(), heading: q.heading_or_zero().to_bits() }
}

/// One moving entry of a canonical query. Objects collapse to their
/// equivalence class so interchangeable objects share cache lines; delay
/// and window are the scheduled seconds relative to the group start.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonItem {
    class: String,
    start: CanonConfig,
    goal: CanonConfig,
    delay: u64,
    window: u64,
}

/// Canonical shape of a planner query. The group start itself is excluded:
/// queries differing only by a time shift are the same problem.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CacheKey {
    /// Static reachability probe for one mover.
    Path { class: String, start: CanonConfig, goal: CanonConfig, parked: Vec<(String, CanonConfig)> },
    /// Timed group query, items sorted canonically.
    Group { items: Vec<CanonItem>, parked: Vec<(String, CanonConfig)> },
}

/// A canonical key plus the mapping back from canonical positions to the
/// concrete query, needed to reinstate cached verdicts.
#[derive(Debug, Clone)]
pub struct KeyedQuery {
    pub key: CacheKey,
    /// Canonical item position -> index into the query's entries.
    pub item_to_entry: Vec<usize>,
    /// Canonical parked position -> object.
    pub parked_to_object: Vec<ObjectId>,
}

/// Canonicalizes a timed group query.
pub fn group_key(p: &Problem, query: &GroupQuery) -> KeyedQuery {
    let moving: BTreeSet<ObjectId> = query.entries.iter().map(|e| e.object).collect();
    let mut items: Vec<(CanonItem, usize)> = query
        .entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            (
                CanonItem {
                    class: p.objects[e.object.index()].equivalence_key(),
                    start: canon_config(&e.start),
                    goal: canon_config(&e.goal),
                    delay: e.delay.to_bits(),
                    window: e.duration.to_bits(),
                },
                k,
            )
        })
        .collect();
    items.sort();
    let (parked, parked_to_object) = canon_parked(p, &query.conf, &moving);
    KeyedQuery {
        key: CacheKey::Group { items: items.iter().map(|(i, _)| i.clone()).collect(), parked },
        item_to_entry: items.into_iter().map(|(_, k)| k).collect(),
        parked_to_object,
    }
}

/// Canonicalizes a static reachability probe.
pub fn path_key(
    p: &Problem,
    object: ObjectId,
    start: &Configuration,
    goal: &Configuration,
    conf: &[Configuration],
) -> KeyedQuery {
    let moving: BTreeSet<ObjectId> = [object].into_iter().collect();
    let (parked, parked_to_object) = canon_parked(p, conf, &moving);
    KeyedQuery {
        key: CacheKey::Path {
            class: p.objects[object.index()].equivalence_key(),
            start: canon_config(start),
            goal: canon_config(goal),
            parked,
        },
        item_to_entry: vec![0],
        parked_to_object,
    }
}

fn canon_parked(
    p: &Problem,
    conf: &[Configuration],
    moving: &BTreeSet<ObjectId>,
) -> (Vec<(String, CanonConfig)>, Vec<ObjectId>) {
    let mut parked: Vec<((String, CanonConfig), ObjectId)> = (0..p.objects.len())
        .map(ObjectId)
        .filter(|o| !moving.contains(o))
        .map(|o| ((p.objects[o.index()].equivalence_key(), canon_config(&conf[o.index()])), o))
        .collect();
    parked.sort();
    (parked.iter().map(|(k, _)| k.clone()).collect(), parked.into_iter().map(|(_, o)| o).collect())
}

/// Scene role of an object inside a canonical query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonObject {
    Item(usize),
    Parked(usize),
}

/// Cached verdict of a reachability probe.
#[derive(Debug, Clone)]
pub struct CachedPath {
    pub found: bool,
    pub unreachable: Vec<Configuration>,
    pub blockers: Vec<CanonObject>,
}

/// Cached verdict of a group query: planned motions in canonical item
/// positions with clocks rebased to the group start, plus the failing item
/// if planning stopped early.
#[derive(Debug, Clone)]
pub struct CachedGroup {
    pub planned: Vec<CachedMotion>,
    pub failure: Option<CachedFailure>,
}

#[derive(Debug, Clone)]
pub struct CachedMotion {
    pub item: usize,
    pub trajectory: Trajectory,
    pub delay: f64,
    pub duration: f64,
    pub fits: bool,
}

#[derive(Debug, Clone)]
pub struct CachedFailure {
    pub item: usize,
    pub unreachable: Vec<Configuration>,
    pub blockers: Vec<CanonObject>,
}

#[derive(Debug, Clone)]
pub enum CachedResult {
    Path(CachedPath),
    Group(CachedGroup),
}

impl CachedResult {
    /// Definite answers never expire; failures and overruns are only as
    /// good as the budget that produced them.
    fn is_definite(&self) -> bool {
        match self {
            CachedResult::Path(p) => p.found,
            CachedResult::Group(g) => g.failure.is_none() && g.planned.iter().all(|m| m.fits),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CacheEntry {
    /// Iteration budget of the producing planner call.
    pub budget: u64,
    pub result: CachedResult,
}

/// Planner verdicts keyed by canonical query shape. Shared within one solve
/// call across solver restarts; reads are concurrent, writes exclusive.
#[derive(Debug, Default)]
pub struct TrajectoryCache {
    map: RwLock<HashMap<CacheKey, CacheEntry>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl TrajectoryCache {
    pub fn new() -> TrajectoryCache {
        TrajectoryCache::default()
    }

    /// Returns the stored verdict when it is definite or was produced with
    /// at least the requested budget; stale failures miss so they can be
    /// retried with more effort.
    pub fn lookup(&self, key: &CacheKey, budget: u64) -> Option<CacheEntry> {
        let map = self.map.read().expect("cache lock");
        match map.get(key).filter(|e| e.result.is_definite() || e.budget >= budget) {
            Some(e) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(e.clone())
            }
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    /// Stores a verdict, never downgrading a definite entry to a failure
    /// and never shrinking a failure's budget.
    pub fn store(&self, key: CacheKey, entry: CacheEntry) {
        let mut map = self.map.write().expect("cache lock");
        match map.entry(key) {
            Entry::Vacant(v) => {
                v.insert(entry);
            }
            Entry::Occupied(mut o) => {
                let cur = o.get();
                if entry.result.is_definite()
                    || (!cur.result.is_definite() && entry.budget >= cur.budget)
                {
                    o.insert(entry);
                }
            }
        }
    }

    /// (hits, misses) since construction.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Shifts a trajectory's clock by `dt` seconds.
fn shift_trajectory(t: &Trajectory, dt: f64) -> Trajectory {
    Trajectory { samples: t.samples.iter().map(|s| Sample { t: s.t + dt, ..*s }).collect() }
}

fn canon_object(o: ObjectId, query: Option<&GroupQuery>, keyed: &KeyedQuery) -> CanonObject {
    if let Some(q) = query {
        if let Some(pos) = (0..keyed.item_to_entry.len())
            .find(|&k| q.entries[keyed.item_to_entry[k]].object == o)
        {
            return CanonObject::Item(pos);
        }
    }
    let pos = keyed
        .parked_to_object
        .iter()
        .position(|&p| p == o)
        .expect("blocker is part of the scene");
    CanonObject::Parked(pos)
}

fn object_of(c: CanonObject, query: Option<&GroupQuery>, keyed: &KeyedQuery) -> ObjectId {
    match c {
        CanonObject::Item(k) => {
            query.expect("item role needs a group query").entries[keyed.item_to_entry[k]].object
        }
        CanonObject::Parked(k) => keyed.parked_to_object[k],
    }
}

/// Canonicalizes a reachability verdict for storage.
pub fn cache_path_verdict(found: bool, report: &ConflictReport, keyed: &KeyedQuery) -> CachedResult {
    CachedResult::Path(CachedPath {
        found,
        unreachable: report.unreachable.clone(),
        blockers: report.blockers.iter().map(|&o| canon_object(o, None, keyed)).collect(),
    })
}

/// Reinstates a cached reachability verdict.
pub fn path_verdict(cached: &CachedPath, keyed: &KeyedQuery) -> (bool, ConflictReport) {
    (
        cached.found,
        ConflictReport {
            unreachable: cached.unreachable.clone(),
            blockers: cached.blockers.iter().map(|&c| object_of(c, None, keyed)).collect(),
        },
    )
}

/// Canonicalizes a group verdict for storage: activities become canonical
/// item positions and trajectory clocks rebase to the group start.
pub fn cache_group_verdict(
    outcome: &MotionOutcome,
    query: &GroupQuery,
    keyed: &KeyedQuery,
) -> CachedResult {
    let item_of = |a: ActivityId| -> usize {
        (0..keyed.item_to_entry.len())
            .find(|&k| query.entries[keyed.item_to_entry[k]].activity == a)
            .expect("planned activity is part of the query")
    };
    CachedResult::Group(CachedGroup {
        planned: outcome
            .planned
            .iter()
            .map(|m| CachedMotion {
                item: item_of(m.activity),
                trajectory: shift_trajectory(&m.trajectory, -query.s_min_seconds),
                delay: m.delay,
                duration: m.duration,
                fits: m.fits_window,
            })
            .collect(),
        failure: outcome.failure.as_ref().map(|(a, report)| CachedFailure {
            item: item_of(*a),
            unreachable: report.unreachable.clone(),
            blockers: report.blockers.iter().map(|&o| canon_object(o, Some(query), keyed)).collect(),
        }),
    })
}

/// Reinstates a cached group verdict against a concrete query.
pub fn group_verdict(
    cached: &CachedGroup,
    query: &GroupQuery,
    keyed: &KeyedQuery,
) -> MotionOutcome {
    let entry = |item: usize| &query.entries[keyed.item_to_entry[item]];
    MotionOutcome {
        planned: cached
            .planned
            .iter()
            .map(|m| PlannedMotion {
                activity: entry(m.item).activity,
                trajectory: shift_trajectory(&m.trajectory, query.s_min_seconds),
                delay: m.delay,
                duration: m.duration,
                fits_window: m.fits,
            })
            .collect(),
        failure: cached.failure.as_ref().map(|f| {
            (
                entry(f.item).activity,
                ConflictReport {
                    unreachable: f.unreachable.clone(),
                    blockers: f
                        .blockers
                        .iter()
                        .map(|&c| object_of(c, Some(query), keyed))
                        .collect(),
                },
            )
        }),
    }
}
