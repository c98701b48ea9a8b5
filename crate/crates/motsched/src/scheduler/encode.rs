//! Continuity encodings: schedules must chain each object's motions so that
//! every motion starts where the previous one ended (or at the object's
//! initial configuration). Two interchangeable compilations exist, one via
//! a configuration-tracking fluent per object and one via pure ordering
//! constraints.

use thiserror::Error;

use crate::model::{
    config_eq, ActivityId, Configuration, Effect, Fluent, FluentCondition, FluentId, Formula,
    Problem, SchedulingProblem, TimeRef,
};

#[derive(Debug, Error)]
pub enum ContinuityError {
    #[error("the ordering-based continuity encoding requires a problem without declared fluents")]
    FluentsDeclared,
}

/// Configuration-tracking fluent introduced for one object. Domain value `k`
/// stands for `configs[k]`; the object's initial configuration sits at 0.
#[derive(Debug, Clone)]
pub struct ConfFluent {
    pub fluent: FluentId,
    pub configs: Vec<Configuration>,
}

/// A compiled continuity encoding: the augmented scheduling problem plus the
/// per-object configuration table (empty slots for unmoved objects, all
/// slots empty under the ordering compilation).
#[derive(Debug, Clone)]
pub struct ContinuityEncoding {
    pub problem: SchedulingProblem,
    pub conf_fluents: Vec<Option<ConfFluent>>,
}

/// Augments the scheduling problem so that valid schedules are exactly
/// those whose per-object motion chains are configuration-continuous.
///
/// With `use_fluents`, each moved object gets a fluent over its relevant
/// configurations (motion endpoints plus the initial configuration); every
/// motion activity then requires the object at its start configuration when
/// it begins and parks it at the goal when it ends. Without fluents, the
/// same set of schedules is carved out by ordering constraints: a motion
/// whose start differs from another's goal may not be its immediate
/// successor, and a motion not starting at the initial configuration needs
/// some predecessor.
pub fn encode_continuity(
    p: &Problem,
    use_fluents: bool,
) -> Result<ContinuityEncoding, ContinuityError> {
    let mut sp = p.scheduling.clone();
    let mut conf_fluents: Vec<Option<ConfFluent>> = vec![None; p.objects.len()];
    let mut per_obj: Vec<Vec<usize>> = vec![Vec::new(); p.objects.len()];
    for (i, a) in sp.activities.iter().enumerate() {
        if let Some(mc) = &a.motion {
            per_obj[mc.object.index()].push(i);
        }
    }

    if use_fluents {
        sp.use_fluents = true;
        for (oi, ids) in per_obj.iter().enumerate() {
            if ids.is_empty() {
                continue;
            }
            // Relevant configurations of this object: initial first, then
            // motion endpoints in declaration order.
            let mut configs: Vec<Configuration> = vec![p.objects[oi].initial];
            for &i in ids {
                let mc = sp.activities[i].motion.clone().expect("motion activity");
                for c in [mc.start, mc.goal] {
                    if !configs.iter().any(|q| config_eq(q, &c)) {
                        configs.push(c);
                    }
                }
            }
            let fid = FluentId(sp.fluents.len());
            sp.fluents.push(Fluent {
                name: format!("conf({})", p.objects[oi].name),
                domain: (0..configs.len()).map(|k| format!("q{k}")).collect(),
                initial: 0,
            });
            for &i in ids {
                let mc = sp.activities[i].motion.clone().expect("motion activity");
                let si = configs.iter().position(|q| config_eq(q, &mc.start)).unwrap();
                let gi = configs.iter().position(|q| config_eq(q, &mc.goal)).unwrap();
                let aid = ActivityId(i);
                sp.activities[i].conditions.push(FluentCondition {
                    from: TimeRef::start_of(aid),
                    to: TimeRef::start_of(aid),
                    fluent: fid,
                    value: si,
                });
                sp.activities[i].effects.push(Effect {
                    at: TimeRef::end_of(aid),
                    fluent: fid,
                    value: gi,
                });
            }
            conf_fluents[oi] = Some(ConfFluent { fluent: fid, configs });
        }
    } else {
        if !sp.fluents.is_empty() {
            return Err(ContinuityError::FluentsDeclared);
        }
        for (oi, ids) in per_obj.iter().enumerate() {
            let init = p.objects[oi].initial;
            for &b in ids {
                let mcb = sp.activities[b].motion.clone().expect("motion activity");
                let bid = ActivityId(b);
                if !config_eq(&mcb.start, &init) {
                    // Not starting at the initial configuration: some other
                    // motion of this object must run earlier.
                    let preds = ids
                        .iter()
                        .filter(|&&x| x != b)
                        .map(|&x| {
                            Formula::and(vec![
                                Formula::Presence(ActivityId(x)),
                                Formula::lt(TimeRef::end_of(ActivityId(x)), TimeRef::start_of(bid)),
                            ])
                        })
                        .collect();
                    sp.constraints
                        .push(Formula::implies(Formula::Presence(bid), Formula::or(preds)));
                }
                for &a in ids {
                    if a == b {
                        continue;
                    }
                    let mca = sp.activities[a].motion.clone().expect("motion activity");
                    if config_eq(&mca.goal, &mcb.start) {
                        continue;
                    }
                    // Mismatched handover: b may follow a only with another
                    // motion strictly between them.
                    let aid = ActivityId(a);
                    let ante = Formula::and(vec![
                        Formula::Presence(aid),
                        Formula::Presence(bid),
                        Formula::lt(TimeRef::end_of(aid), TimeRef::start_of(bid)),
                    ]);
                    let between = ids
                        .iter()
                        .filter(|&&x| x != a && x != b)
                        .map(|&x| {
                            let xid = ActivityId(x);
                            Formula::and(vec![
                                Formula::Presence(xid),
                                Formula::lt(TimeRef::end_of(aid), TimeRef::start_of(xid)),
                                Formula::lt(TimeRef::end_of(xid), TimeRef::start_of(bid)),
                            ])
                        })
                        .collect();
                    sp.constraints.push(Formula::implies(ante, Formula::or(between)));
                }
            }
        }
    }
    Ok(ContinuityEncoding { problem: sp, conf_fluents })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Activity, Bounds, ControlModel, Geometry, MotionConstraint, MovableObject, ObjectId,
        Resource, ResourceId, Schedule, WorkspaceModel,
    };
    use crate::semantics::validate_schedule;

    fn at(x: f64, y: f64) -> Configuration {
        Configuration::at(x, y)
    }

    /// One disk object at (0,0) with the given motions, all mandatory,
    /// each claiming the object's unary resource.
    fn tiny_problem(motions: &[(&str, Configuration, Configuration)]) -> Problem {
        let activities = motions
            .iter()
            .map(|(name, s, g)| Activity {
                name: (*name).into(),
                optional: false,
                duration: (1, 3),
                resource_usage: vec![(ResourceId(0), 1)],
                conditions: vec![],
                effects: vec![],
                motion: Some(MotionConstraint { object: ObjectId(0), start: *s, goal: *g }),
            })
            .collect();
        Problem {
            scheduling: SchedulingProblem {
                fluents: vec![],
                resources: vec![Resource { name: "bot".into(), capacity: 1 }],
                activities,
                constraints: vec![],
                use_fluents: false,
            },
            objects: vec![MovableObject {
                name: "bot".into(),
                geometry: Geometry::Disk { radius: 0.1 },
                control: ControlModel { max_speed: 1.0, max_accel: 1.0, model_id: "omni".into() },
                initial: at(0.0, 0.0),
            }],
            workspace: WorkspaceModel {
                bounds: Bounds { min_x: -10.0, min_y: -10.0, max_x: 10.0, max_y: 10.0 },
                obstacles: vec![],
            },
            tick_seconds: 1.0,
        }
    }

    /// Sequential schedule placing activity `order[k]` at [3k, 3k+1].
    fn sequenced(n: usize, order: &[usize]) -> Schedule {
        let mut s = Schedule { present: vec![true; n], start: vec![0; n], end: vec![0; n] };
        for (slot, &i) in order.iter().enumerate() {
            s.start[i] = 3 * slot as u64;
            s.end[i] = 3 * slot as u64 + 1;
        }
        s
    }

    fn accepts(sp: &SchedulingProblem, s: &Schedule) -> bool {
        validate_schedule(sp, s).is_empty()
    }

    #[test]
    fn out_and_back_chain_must_run_in_order() {
        let p = tiny_problem(&[
            ("out", at(0.0, 0.0), at(1.0, 0.0)),
            ("back", at(1.0, 0.0), at(0.0, 0.0)),
        ]);
        for fluents in [true, false] {
            let sp = encode_continuity(&p, fluents).unwrap().problem;
            assert!(accepts(&sp, &sequenced(2, &[0, 1])), "fluents={fluents}: out then back");
            assert!(!accepts(&sp, &sequenced(2, &[1, 0])), "fluents={fluents}: back cannot lead");
        }
    }

    #[test]
    fn identical_motion_cannot_directly_repeat() {
        let p = tiny_problem(&[
            ("go1", at(0.0, 0.0), at(1.0, 0.0)),
            ("go2", at(0.0, 0.0), at(1.0, 0.0)),
        ]);
        for fluents in [true, false] {
            let sp = encode_continuity(&p, fluents).unwrap().problem;
            assert!(!accepts(&sp, &sequenced(2, &[0, 1])), "fluents={fluents}");
            assert!(!accepts(&sp, &sequenced(2, &[1, 0])), "fluents={fluents}");
        }
    }

    #[test]
    fn single_motion_must_leave_from_the_initial_configuration() {
        let ok = tiny_problem(&[("go", at(0.0, 0.0), at(2.0, 0.0))]);
        let bad = tiny_problem(&[("go", at(2.0, 0.0), at(0.0, 0.0))]);
        for fluents in [true, false] {
            let sp = encode_continuity(&ok, fluents).unwrap().problem;
            assert!(accepts(&sp, &sequenced(1, &[0])), "fluents={fluents}");
            let sp = encode_continuity(&bad, fluents).unwrap().problem;
            assert!(!accepts(&sp, &sequenced(1, &[0])), "fluents={fluents}");
        }
    }

    #[test]
    fn three_motion_cycle_admits_exactly_the_cyclic_order() {
        let (i, a, b) = (at(0.0, 0.0), at(1.0, 0.0), at(0.0, 1.0));
        let p = tiny_problem(&[("ia", i, a), ("ab", a, b), ("bi", b, i)]);
        let orders: [[usize; 3]; 6] =
            [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for fluents in [true, false] {
            let sp = encode_continuity(&p, fluents).unwrap().problem;
            for order in &orders {
                let expected = *order == [0, 1, 2];
                assert_eq!(
                    accepts(&sp, &sequenced(3, order)),
                    expected,
                    "fluents={fluents}, order={order:?}"
                );
            }
        }
    }

    #[test]
    fn ordering_encoding_rejects_problems_with_declared_fluents() {
        let mut p = tiny_problem(&[("go", at(0.0, 0.0), at(1.0, 0.0))]);
        p.scheduling.use_fluents = true;
        p.scheduling.fluents.push(Fluent {
            name: "f".into(),
            domain: vec!["x".into()],
            initial: 0,
        });
        assert!(matches!(
            encode_continuity(&p, false),
            Err(ContinuityError::FluentsDeclared)
        ));
        assert!(encode_continuity(&p, true).is_ok());
    }
}
