//! Schedule and plan semantics: fluent timelines, formula evaluation, and
//! the two validators (discrete schedule checks and full plan checks).
//!
//! The plan validator is independent of the solver: it re-derives every
//! judgement from the problem file and the plan file alone.

use std::fmt;

use crate::geometry::{collides, footprint_of, footprint_of_obstacle, inflate, within_bounds, Footprint};
use crate::model::{
    ActivityId, Configuration, FluentId, Formula, ObjectId, Plan, Problem, Schedule,
    SchedulingProblem,
};

/// Time step in seconds for sampled collision checking.
pub const COLLISION_CHECK_STEP: f64 = 0.05;
/// Tolerance for trajectory chain continuity, in meters.
pub const CONTINUITY_TOLERANCE: f64 = 1e-6;
/// Relative tolerance on speed and acceleration limits.
pub const DYNAMIC_TOLERANCE: f64 = 0.01;

/// What a validator found wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    ConflictingEffects,
    DurationBounds,
    ResourceOveruse,
    TemporalConstraint,
    FluentCondition,
    ObjectOverlapInTime,
    Collision,
    DynamicInfeasible,
    Discontinuity,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::ConflictingEffects => "CONFLICTING_EFFECTS",
            ViolationKind::DurationBounds => "DURATION_BOUNDS",
            ViolationKind::ResourceOveruse => "RESOURCE_OVERUSE",
            ViolationKind::TemporalConstraint => "TEMPORAL_CONSTRAINT",
            ViolationKind::FluentCondition => "FLUENT_CONDITION",
            ViolationKind::ObjectOverlapInTime => "OBJECT_OVERLAP_IN_TIME",
            ViolationKind::Collision => "COLLISION",
            ViolationKind::DynamicInfeasible => "DYNAMIC_INFEASIBLE",
            ViolationKind::Discontinuity => "DISCONTINUITY",
        };
        f.write_str(s)
    }
}

/// A single validation finding. `tick` is set for discrete findings,
/// `seconds` for continuous ones; either may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Names of the entities involved (activities, objects, resources).
    pub subjects: Vec<String>,
    pub tick: Option<u64>,
    pub seconds: Option<f64>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={} subjects={}", self.kind, self.subjects.join(","))?;
        if let Some(t) = self.tick {
            write!(f, " tick={t}")?;
        }
        if let Some(s) = self.seconds {
            write!(f, " seconds={s:.3}")?;
        }
        write!(f, " detail={}", self.detail)
    }
}

/// Evaluates a temporal formula over a schedule's total presence/time maps.
pub fn evaluate_formula(f: &Formula, s: &Schedule) -> bool {
    match f {
        Formula::True => true,
        Formula::False => false,
        Formula::Presence(a) => s.is_present(*a),
        Formula::Diff { lhs, rhs, max } => s.value_of(lhs) - s.value_of(rhs) <= *max,
        Formula::Not(g) => !evaluate_formula(g, s),
        Formula::And(gs) => gs.iter().all(|g| evaluate_formula(g, s)),
        Formula::Or(gs) => gs.iter().any(|g| evaluate_formula(g, s)),
        Formula::Implies(a, b) => !evaluate_formula(a, s) || evaluate_formula(b, s),
    }
}

/// Value of a fluent at tick `t` under a schedule.
///
/// An effect firing exactly at `t` wins; otherwise the value carries over
/// from `t - 1`, bottoming out at the declared initial value. Callers should
/// ensure the schedule is non-conflicting; if two present effects collide at
/// the same tick the one from the highest-indexed activity wins, so the
/// result is still deterministic.
pub fn fluent_value_at(sp: &SchedulingProblem, s: &Schedule, fluent: FluentId, t: u64) -> usize {
    let mut best: Option<(u64, usize, usize)> = None; // (time, activity index, value)
    for (i, a) in sp.activities.iter().enumerate() {
        if !s.present[i] {
            continue;
        }
        for e in &a.effects {
            if e.fluent != fluent {
                continue;
            }
            let at = s.value_of(&e.at);
            if at < 0 || at as u64 > t {
                continue;
            }
            let key = (at as u64, i, e.value);
            if best.is_none_or(|b| (key.0, key.1) > (b.0, b.1)) {
                best = Some(key);
            }
        }
    }
    match best {
        Some((_, _, v)) => v,
        None => sp.fluents[fluent.index()].initial,
    }
}

/// Flags every pair of present effects that write the same fluent at the
/// same tick, which would make the timeline ambiguous.
pub fn check_non_conflicting(sp: &SchedulingProblem, s: &Schedule) -> Vec<Violation> {
    let mut writes: Vec<(FluentId, i64, usize)> = Vec::new();
    for (i, a) in sp.activities.iter().enumerate() {
        if !s.present[i] {
            continue;
        }
        for e in &a.effects {
            writes.push((e.fluent, s.value_of(&e.at), i));
        }
    }
    writes.sort();
    let mut out = Vec::new();
    for w in writes.windows(2) {
        let (f1, t1, i1) = w[0];
        let (f2, t2, i2) = w[1];
        if f1 == f2 && t1 == t2 {
            out.push(Violation {
                kind: ViolationKind::ConflictingEffects,
                subjects: vec![
                    sp.activities[i1].name.clone(),
                    sp.activities[i2].name.clone(),
                ],
                tick: u64::try_from(t1).ok(),
                seconds: None,
                detail: format!(
                    "both write fluent {} at the same tick",
                    sp.fluents[f1.index()].name
                ),
            });
        }
    }
    out
}

/// Largest end tick over present activities; 0 when nothing is present.
pub fn makespan(s: &Schedule) -> u64 {
    s.present
        .iter()
        .zip(&s.end)
        .filter_map(|(p, e)| p.then_some(*e))
        .max()
        .unwrap_or(0)
}

/// Full discrete validation of a schedule against its problem. An empty
/// result means the schedule is valid.
pub fn validate_schedule(sp: &SchedulingProblem, s: &Schedule) -> Vec<Violation> {
    assert_eq!(
        s.len(),
        sp.activities.len(),
        "schedule length must match the activity count"
    );
    let mut out = check_non_conflicting(sp, s);

    for (i, a) in sp.activities.iter().enumerate() {
        if !s.present[i] {
            continue;
        }
        if s.end[i] < s.start[i] {
            out.push(Violation {
                kind: ViolationKind::DurationBounds,
                subjects: vec![a.name.clone()],
                tick: Some(s.start[i]),
                seconds: None,
                detail: format!("end {} precedes start {}", s.end[i], s.start[i]),
            });
            continue;
        }
        let dur = s.end[i] - s.start[i];
        if dur < a.duration.0 || dur > a.duration.1 {
            out.push(Violation {
                kind: ViolationKind::DurationBounds,
                subjects: vec![a.name.clone()],
                tick: Some(s.start[i]),
                seconds: None,
                detail: format!(
                    "duration {} outside bounds [{}, {}]",
                    dur, a.duration.0, a.duration.1
                ),
            });
        }
    }

    // Resource profiles over closed activity spans [start, end].
    let max_end = s
        .present
        .iter()
        .zip(&s.end)
        .filter_map(|(p, e)| p.then_some(*e))
        .max()
        .unwrap_or(0);
    for (ri, r) in sp.resources.iter().enumerate() {
        for t in 0..=max_end {
            let mut used = 0u64;
            let mut users: Vec<&str> = Vec::new();
            for (i, a) in sp.activities.iter().enumerate() {
                if !s.present[i] || s.start[i] > t || s.end[i] < t {
                    continue;
                }
                let g = a.usage_of(crate::model::ResourceId(ri));
                if g > 0 {
                    used += g;
                    users.push(&a.name);
                }
            }
            if used > r.capacity {
                out.push(Violation {
                    kind: ViolationKind::ResourceOveruse,
                    subjects: users.iter().map(|n| n.to_string()).collect(),
                    tick: Some(t),
                    seconds: None,
                    detail: format!("resource {} used {} of {}", r.name, used, r.capacity),
                });
            }
        }
    }

    for (ci, f) in sp.constraints.iter().enumerate() {
        if !evaluate_formula(f, s) {
            out.push(Violation {
                kind: ViolationKind::TemporalConstraint,
                subjects: vec![format!("constraint#{ci}")],
                tick: None,
                seconds: None,
                detail: "temporal constraint evaluates to false".to_string(),
            });
        }
    }

    for (i, a) in sp.activities.iter().enumerate() {
        if !s.present[i] {
            continue;
        }
        for c in &a.conditions {
            let from = s.value_of(&c.from).max(0) as u64;
            let to = s.value_of(&c.to);
            if to < from as i64 {
                continue; // empty window holds vacuously
            }
            for t in from..=(to as u64) {
                let v = fluent_value_at(sp, s, c.fluent, t);
                if v != c.value {
                    let fl = &sp.fluents[c.fluent.index()];
                    out.push(Violation {
                        kind: ViolationKind::FluentCondition,
                        subjects: vec![a.name.clone()],
                        tick: Some(t),
                        seconds: None,
                        detail: format!(
                            "requires {} = {} but it is {}",
                            fl.name, fl.domain[c.value], fl.domain[v]
                        ),
                    });
                    break; // one finding per condition is enough
                }
            }
        }
    }

    out
}

/// Present motion activities per object, each list sorted by start tick.
pub fn motion_chains(p: &Problem, s: &Schedule) -> Vec<Vec<ActivityId>> {
    let mut chains: Vec<Vec<ActivityId>> = vec![Vec::new(); p.objects.len()];
    for (i, a) in p.scheduling.activities.iter().enumerate() {
        if i >= s.len() || !s.present[i] {
            continue;
        }
        if let Some(mc) = &a.motion {
            chains[mc.object.index()].push(ActivityId(i));
        }
    }
    for chain in &mut chains {
        chain.sort_by_key(|a| (s.start[a.index()], a.index()));
    }
    chains
}

/// Configuration of an object at an absolute time in seconds: its initial
/// configuration before any motion, the live trajectory during an activity,
/// and the last reached configuration between and after activities.
pub fn object_config_at(p: &Problem, plan: &Plan, object: ObjectId, t: f64) -> Configuration {
    let s = &plan.schedule;
    let ts = p.tick_seconds;
    let chain = &motion_chains(p, s)[object.index()];
    let mut current = p.objects[object.index()].initial;
    for a in chain {
        let i = a.index();
        let start_s = s.start[i] as f64 * ts;
        if t < start_s {
            break;
        }
        if let Some(tr) = plan.trajectories[i].as_ref() {
            current = tr.config_at(t);
        }
    }
    current
}

fn span_violation(
    kind: ViolationKind,
    subjects: Vec<String>,
    seconds: f64,
    detail: String,
) -> Violation {
    Violation { kind, subjects, tick: None, seconds: Some(seconds), detail }
}

/// Full validation of a plan: discrete schedule checks plus trajectory
/// structure, continuity, dynamic feasibility, and sampled collisions.
pub fn validate_plan(p: &Problem, plan: &Plan) -> Vec<Violation> {
    let sp = &p.scheduling;
    let s = &plan.schedule;
    let ts = p.tick_seconds;
    let mut out = validate_schedule(sp, s);

    // Same-object motion activities must not overlap in time (closed spans).
    for chain in &motion_chains(p, s) {
        for w in chain.windows(2) {
            let (a, b) = (w[0].index(), w[1].index());
            if s.end[a] >= s.start[b] {
                out.push(Violation {
                    kind: ViolationKind::ObjectOverlapInTime,
                    subjects: vec![
                        sp.activities[a].name.clone(),
                        sp.activities[b].name.clone(),
                    ],
                    tick: Some(s.start[b]),
                    seconds: None,
                    detail: "activities moving the same object overlap".to_string(),
                });
            }
        }
    }

    // Structure: exactly the present motion activities carry trajectories.
    for (i, a) in sp.activities.iter().enumerate() {
        let has = plan.trajectories.get(i).is_some_and(|t| t.is_some());
        let needs = s.present[i] && a.motion.is_some();
        if needs && !has {
            out.push(Violation {
                kind: ViolationKind::Discontinuity,
                subjects: vec![a.name.clone()],
                tick: Some(s.start[i]),
                seconds: None,
                detail: "present motion activity has no trajectory".to_string(),
            });
        }
        if !needs && has {
            out.push(Violation {
                kind: ViolationKind::Discontinuity,
                subjects: vec![a.name.clone()],
                tick: None,
                seconds: None,
                detail: "trajectory attached to an absent or motion-free activity".to_string(),
            });
        }
        if let (true, Some(Some(tr))) = (needs, plan.trajectories.get(i)) {
            if tr.samples.is_empty() {
                out.push(Violation {
                    kind: ViolationKind::Discontinuity,
                    subjects: vec![a.name.clone()],
                    tick: Some(s.start[i]),
                    seconds: None,
                    detail: "trajectory has no samples".to_string(),
                });
                continue;
            }
            let start_s = s.start[i] as f64 * ts;
            let end_s = s.end[i] as f64 * ts;
            if (tr.start_time() - start_s).abs() > 1e-9 {
                out.push(span_violation(
                    ViolationKind::Discontinuity,
                    vec![a.name.clone()],
                    tr.start_time(),
                    format!("first sample at {:.3}s, activity starts at {:.3}s", tr.start_time(), start_s),
                ));
            }
            if tr.end_time() > end_s + 1e-9 {
                out.push(span_violation(
                    ViolationKind::Discontinuity,
                    vec![a.name.clone()],
                    tr.end_time(),
                    format!("last sample at {:.3}s is past the activity end {:.3}s", tr.end_time(), end_s),
                ));
            }
            let mut times_ok = true;
            for w in tr.samples.windows(2) {
                if w[1].t < w[0].t {
                    times_ok = false;
                }
            }
            if !times_ok {
                out.push(span_violation(
                    ViolationKind::Discontinuity,
                    vec![a.name.clone()],
                    tr.start_time(),
                    "sample times are not monotone".to_string(),
                ));
            }
        }
    }

    // Continuity: chains start at the object's initial configuration, each
    // trajectory realizes its motion constraint, and consecutive
    // trajectories hand over exactly.
    for (oi, chain) in motion_chains(p, s).iter().enumerate() {
        let mut prev: Configuration = p.objects[oi].initial;
        let mut prev_name = format!("initial({})", p.objects[oi].name);
        for a in chain {
            let i = a.index();
            let tr = match plan.trajectories.get(i).and_then(|t| t.as_ref()) {
                Some(tr) if !tr.samples.is_empty() => tr,
                _ => continue, // already reported above
            };
            let mc = sp.activities[i].motion.as_ref().unwrap();
            let first = tr.samples[0].configuration();
            let last = tr.samples.last().unwrap().configuration();
            if first.dist_xy(&prev) > CONTINUITY_TOLERANCE {
                out.push(span_violation(
                    ViolationKind::Discontinuity,
                    vec![prev_name.clone(), sp.activities[i].name.clone()],
                    tr.start_time(),
                    format!("object jumps {:.6} m between motions", first.dist_xy(&prev)),
                ));
            }
            if first.dist_xy(&mc.start) > CONTINUITY_TOLERANCE {
                out.push(span_violation(
                    ViolationKind::Discontinuity,
                    vec![sp.activities[i].name.clone()],
                    tr.start_time(),
                    "trajectory does not begin at the motion start configuration".to_string(),
                ));
            }
            if last.dist_xy(&mc.goal) > CONTINUITY_TOLERANCE {
                out.push(span_violation(
                    ViolationKind::Discontinuity,
                    vec![sp.activities[i].name.clone()],
                    tr.end_time(),
                    "trajectory does not end at the motion goal configuration".to_string(),
                ));
            }
            prev = last;
            prev_name = sp.activities[i].name.clone();
        }
    }

    // Dynamic feasibility: per-segment speed and between-segment
    // acceleration, both within the relative tolerance.
    for (i, a) in sp.activities.iter().enumerate() {
        let tr = match plan.trajectories.get(i).and_then(|t| t.as_ref()) {
            Some(tr) if s.present[i] && tr.samples.len() >= 2 => tr,
            _ => continue,
        };
        let obj = &p.objects[a.motion.as_ref().unwrap().object.index()];
        let v_cap = obj.control.max_speed * (1.0 + DYNAMIC_TOLERANCE);
        let a_cap = obj.control.max_accel * (1.0 + DYNAMIC_TOLERANCE);
        let mut prev_v: Option<(f64, f64, f64)> = None; // (vx, vy, dt)
        for w in tr.samples.windows(2) {
            let dt = w[1].t - w[0].t;
            if dt <= 0.0 {
                let moved = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
                if moved > CONTINUITY_TOLERANCE {
                    out.push(span_violation(
                        ViolationKind::DynamicInfeasible,
                        vec![a.name.clone()],
                        w[0].t,
                        "displacement over a zero-length time step".to_string(),
                    ));
                }
                continue;
            }
            let vx = (w[1].x - w[0].x) / dt;
            let vy = (w[1].y - w[0].y) / dt;
            let speed = vx.hypot(vy);
            if speed > v_cap {
                out.push(span_violation(
                    ViolationKind::DynamicInfeasible,
                    vec![a.name.clone()],
                    w[0].t,
                    format!("segment speed {:.3} exceeds limit {:.3}", speed, obj.control.max_speed),
                ));
            }
            if let Some((pvx, pvy, pdt)) = prev_v {
                let mid_gap = (pdt + dt) / 2.0;
                let acc = ((vx - pvx).hypot(vy - pvy)) / mid_gap;
                if acc > a_cap {
                    out.push(span_violation(
                        ViolationKind::DynamicInfeasible,
                        vec![a.name.clone()],
                        w[0].t,
                        format!(
                            "acceleration {:.3} between segments exceeds limit {:.3}",
                            acc, obj.control.max_accel
                        ),
                    ));
                }
            }
            prev_v = Some((vx, vy, dt));
        }
    }

    // Sampled collision checking with speed-scaled inflation: between two
    // samples a body can stray at most v * step / 2 from its sampled spot,
    // so inflating every footprint by that much makes the sweep
    // conservative for piecewise-linear motion.
    let mut t_end: f64 = 0.0;
    for tr in plan.trajectories.iter().flatten() {
        t_end = t_end.max(tr.end_time());
    }
    let obstacles: Vec<Footprint> =
        p.workspace.obstacles.iter().map(footprint_of_obstacle).collect();
    let n_obj = p.objects.len();
    let mut reported: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let steps = (t_end / COLLISION_CHECK_STEP).ceil() as usize + 1;
    for k in 0..=steps {
        let t = (k as f64 * COLLISION_CHECK_STEP).min(t_end);
        let fps: Vec<Footprint> = (0..n_obj)
            .map(|oi| {
                let c = object_config_at(p, plan, ObjectId(oi), t);
                let fp = footprint_of(&p.objects[oi].geometry, &c);
                inflate(&fp, p.objects[oi].control.max_speed * COLLISION_CHECK_STEP / 2.0)
            })
            .collect();
        for i in 0..n_obj {
            for j in (i + 1)..n_obj {
                if reported.contains(&(i, j)) {
                    continue;
                }
                if collides(&fps[i], &fps[j]) {
                    reported.insert((i, j));
                    out.push(span_violation(
                        ViolationKind::Collision,
                        vec![p.objects[i].name.clone(), p.objects[j].name.clone()],
                        t,
                        "objects collide".to_string(),
                    ));
                }
            }
            for (obi, ob) in obstacles.iter().enumerate() {
                let key = (i, n_obj + obi);
                if reported.contains(&key) {
                    continue;
                }
                if collides(&fps[i], ob) {
                    reported.insert(key);
                    out.push(span_violation(
                        ViolationKind::Collision,
                        vec![p.objects[i].name.clone(), format!("obstacle#{obi}")],
                        t,
                        "object collides with a static obstacle".to_string(),
                    ));
                }
            }
            let key = (i, usize::MAX);
            if !reported.contains(&key) && !within_bounds(&fps[i], &p.workspace.bounds, 0.0) {
                reported.insert(key);
                out.push(span_violation(
                    ViolationKind::Collision,
                    vec![p.objects[i].name.clone(), "workspace-bounds".to_string()],
                    t,
                    "object leaves the workspace".to_string(),
                ));
            }
        }
        if k as f64 * COLLISION_CHECK_STEP >= t_end {
            break;
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Activity, Anchor, Effect, Fluent, FluentCondition, Resource, ResourceId, TimeRef,
    };

    fn sp_with_fluent() -> SchedulingProblem {
        SchedulingProblem {
            fluents: vec![Fluent {
                name: "door".into(),
                domain: vec!["closed".into(), "open".into()],
                initial: 0,
            }],
            resources: vec![Resource { name: "r".into(), capacity: 1 }],
            activities: vec![
                Activity {
                    name: "open".into(),
                    optional: true,
                    duration: (2, 2),
                    resource_usage: vec![],
                    conditions: vec![],
                    effects: vec![Effect {
                        at: TimeRef::end_of(ActivityId(0)),
                        fluent: FluentId(0),
                        value: 1,
                    }],
                    motion: None,
                },
                Activity {
                    name: "pass".into(),
                    optional: true,
                    duration: (1, 5),
                    resource_usage: vec![],
                    conditions: vec![FluentCondition {
                        from: TimeRef::start_of(ActivityId(1)),
                        to: TimeRef::end_of(ActivityId(1)),
                        fluent: FluentId(0),
                        value: 1,
                    }],
                    effects: vec![],
                    motion: None,
                },
            ],
            constraints: vec![],
            use_fluents: true,
        }
    }

    #[test]
    fn fluent_value_carries_forward_from_effects() {
        let sp = sp_with_fluent();
        // open runs [1,3]: effect at 3 flips the door to open.
        let s = Schedule {
            present: vec![true, false],
            start: vec![1, 0],
            end: vec![3, 1],
        };
        assert_eq!(fluent_value_at(&sp, &s, FluentId(0), 0), 0, "initial before any effect");
        assert_eq!(fluent_value_at(&sp, &s, FluentId(0), 2), 0);
        assert_eq!(fluent_value_at(&sp, &s, FluentId(0), 3), 1, "effect applies at its tick");
        assert_eq!(fluent_value_at(&sp, &s, FluentId(0), 9), 1, "value persists");
    }

    #[test]
    fn fluent_effect_at_tick_zero_overrides_initial() {
        let mut sp = sp_with_fluent();
        sp.activities[0].effects[0].at = TimeRef::start_of(ActivityId(0));
        let s = Schedule { present: vec![true, false], start: vec![0, 0], end: vec![2, 1] };
        assert_eq!(fluent_value_at(&sp, &s, FluentId(0), 0), 1);
    }

    #[test]
    fn absent_activities_have_no_effects() {
        let sp = sp_with_fluent();
        let s = Schedule { present: vec![false, false], start: vec![1, 0], end: vec![3, 1] };
        assert_eq!(fluent_value_at(&sp, &s, FluentId(0), 10), 0);
    }

    #[test]
    fn fluent_condition_violation_is_reported_with_window_tick() {
        let sp = sp_with_fluent();
        // pass runs [2,4] but the door only opens at 5.
        let s = Schedule { present: vec![true, true], start: vec![3, 2], end: vec![5, 4] };
        let v = validate_schedule(&sp, &s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::FluentCondition);
        assert_eq!(v[0].subjects, vec!["pass".to_string()]);
        assert_eq!(v[0].tick, Some(2));
    }

    #[test]
    fn conflicting_effects_are_flagged() {
        let mut sp = sp_with_fluent();
        sp.activities[1].effects.push(Effect {
            at: TimeRef::start_of(ActivityId(1)),
            fluent: FluentId(0),
            value: 0,
        });
        sp.activities[1].conditions.clear();
        // open's end and pass's start coincide at tick 3.
        let s = Schedule { present: vec![true, true], start: vec![1, 3], end: vec![3, 4] };
        let v = check_non_conflicting(&sp, &s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::ConflictingEffects);
        assert_eq!(v[0].tick, Some(3));
    }

    #[test]
    fn resource_overuse_uses_closed_spans() {
        let sp = SchedulingProblem {
            fluents: vec![],
            resources: vec![Resource { name: "r".into(), capacity: 1 }],
            activities: (0..2)
                .map(|i| Activity {
                    name: format!("a{i}"),
                    optional: false,
                    duration: (2, 5),
                    resource_usage: vec![(ResourceId(0), 1)],
                    conditions: vec![],
                    effects: vec![],
                    motion: None,
                })
                .collect(),
            constraints: vec![],
            use_fluents: false,
        };
        // Spans [0,2] and [2,4] share tick 2: closed-interval overuse.
        let s = Schedule { present: vec![true, true], start: vec![0, 2], end: vec![2, 4] };
        let v = validate_schedule(&sp, &s);
        assert!(
            v.iter().any(|x| x.kind == ViolationKind::ResourceOveruse && x.tick == Some(2)),
            "meeting at a shared tick must overuse a unary resource: {v:?}"
        );
        // Separated by one tick they are fine.
        let s = Schedule { present: vec![true, true], start: vec![0, 3], end: vec![2, 5] };
        assert!(validate_schedule(&sp, &s).is_empty());
    }

    #[test]
    fn duration_bounds_checked_for_present_only() {
        let sp = sp_with_fluent();
        let mut s = Schedule { present: vec![true, false], start: vec![0, 0], end: vec![9, 0] };
        let v = validate_schedule(&sp, &s);
        assert!(v.iter().any(|x| x.kind == ViolationKind::DurationBounds));
        s.present[0] = false;
        s.end[0] = 2;
        assert!(validate_schedule(&sp, &s).is_empty(), "absent activities are unconstrained");
    }

    #[test]
    fn formula_semantics_on_total_time_maps() {
        let s = Schedule { present: vec![true, false], start: vec![2, 0], end: vec![5, 1] };
        let a0 = ActivityId(0);
        let a1 = ActivityId(1);
        assert!(evaluate_formula(&Formula::Presence(a0), &s));
        assert!(!evaluate_formula(&Formula::Presence(a1), &s));
        // Difference atoms read times even from absent activities.
        let diff = Formula::Diff {
            lhs: TimeRef { activity: a1, anchor: Anchor::End, offset: 0 },
            rhs: TimeRef { activity: a0, anchor: Anchor::Start, offset: 0 },
            max: -1,
        };
        assert!(evaluate_formula(&diff, &s), "1 - 2 <= -1");
        assert!(!evaluate_formula(&Formula::Or(vec![]), &s), "empty or is false");
        assert!(evaluate_formula(&Formula::And(vec![]), &s), "empty and is true");
        assert!(evaluate_formula(
            &Formula::implies(Formula::Presence(a1), Formula::False),
            &s
        ));
    }

    #[test]
    fn makespan_ignores_absent_activities() {
        let s = Schedule { present: vec![false, true], start: vec![0, 1], end: vec![50, 4] };
        assert_eq!(makespan(&s), 4);
        let none = Schedule { present: vec![false], start: vec![0], end: vec![3] };
        assert_eq!(makespan(&none), 0);
    }
}
