//! Sampling-based motion planning: a geometric layer that answers
//! reachability queries against a frozen scene, and a space-time layer that
//! plans timed trajectories among static obstacles, frozen objects, and
//! previously committed moving objects.
//!
//! Both layers instrument their collision checker: every rejected extension
//! records which movable objects intersected the attempted segment, feeding
//! the conflict reports consumed by the refinement machinery.

mod profile;
mod rrt;
mod spacetime;

pub use profile::{estimate_duration, extract_timing, trapezoid_position};

use std::collections::BTreeSet;

use crate::geometry::{collides, footprint_of, footprint_of_obstacle, inflate, within_bounds, Footprint};
use crate::model::{
    ActivityId, Configuration, Geometry, MovableObject, ObjectId, Problem, Trajectory,
    WorkspaceModel,
};

/// Tunable planner knobs. Budgets are expressed in iterations so results
/// are deterministic given a seed; `iterations_per_second` converts the
/// engine's planning-time budget.
#[derive(Debug, Clone)]
pub struct PlannerParams {
    /// Probability of sampling the goal configuration.
    pub goal_bias: f64,
    /// Probability of sampling one of the problem configurations.
    pub config_bias: f64,
    /// Probability of growing a waiting/braking edge (space-time layer).
    pub wait_bias: f64,
    /// Probability of pairing a sample with a departure time and growing
    /// the node that can just make it, instead of the spatially nearest
    /// one (space-time layer). Without this the tree keeps pulling toward
    /// frontiers that a moving obstacle has already invalidated.
    pub time_bias: f64,
    /// Maximum extension length of a geometric tree edge, meters.
    pub step: f64,
    /// Spatial resolution of edge collision sampling, meters.
    pub edge_resolution: f64,
    /// A configuration counts reached if a tree node is this close, meters.
    pub goal_tolerance: f64,
    /// Displacement below this is considered standing still, meters.
    pub eps_move: f64,
    /// Duration of one space-time tree edge, seconds.
    pub time_step: f64,
    /// Iteration budget granted per second of planning time.
    pub iterations_per_second: f64,
    /// Extra clearance beyond the speed-scaled minimum, meters. The
    /// validator checks sampled footprints inflated by `max_speed * 0.025`
    /// each, and the planner's emitted polyline cuts chords of its ramp
    /// arcs (sagitta up to `max_accel * time_step^2 / 8`), so a scene
    /// inflates by those amounts plus this slack.
    pub margin_slack: f64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            goal_bias: 0.05,
            config_bias: 0.10,
            wait_bias: 0.15,
            time_bias: 0.5,
            step: 0.2,
            edge_resolution: 0.05,
            goal_tolerance: 0.05,
            eps_move: 1e-3,
            time_step: 0.25,
            iterations_per_second: 2000.0,
            margin_slack: 0.02,
        }
    }
}

enum Placement {
    Frozen(Configuration),
    Moving(Trajectory),
}

struct SceneEntry {
    id: ObjectId,
    geometry: Geometry,
    placement: Placement,
    /// Clearance the planned object keeps from this one.
    inflation: f64,
}

/// The world one object is planned against: workspace bounds, static
/// obstacles, and every other object either frozen at its current
/// configuration or following a committed trajectory.
pub struct Scene<'a> {
    workspace: &'a WorkspaceModel,
    obstacle_footprints: Vec<Footprint>,
    entries: Vec<SceneEntry>,
    static_inflation: f64,
}

impl<'a> Scene<'a> {
    /// Scene for planning `moving`, with all other objects frozen at
    /// `conf` (indexed by object id). Clearances are derived from the
    /// validator's sampling rule: an object's checked footprint is
    /// inflated by `max_speed * 0.025`, and this planner's own emitted
    /// polyline can deviate from its checked arcs by up to
    /// `max_accel * time_step^2 / 8`.
    pub fn new(
        problem: &'a Problem,
        moving: ObjectId,
        conf: &[Configuration],
        params: &PlannerParams,
    ) -> Scene<'a> {
        let me = &problem.objects[moving.index()].control;
        let own = me.max_speed * crate::semantics::COLLISION_CHECK_STEP / 2.0
            + me.max_accel * params.time_step * params.time_step / 8.0
            + params.margin_slack;
        let entries = problem
            .objects
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != moving.index())
            .map(|(i, o)| SceneEntry {
                id: ObjectId(i),
                geometry: o.geometry.clone(),
                placement: Placement::Frozen(conf[i]),
                inflation: own
                    + o.control.max_speed * crate::semantics::COLLISION_CHECK_STEP / 2.0,
            })
            .collect();
        Scene {
            workspace: &problem.workspace,
            obstacle_footprints: problem
                .workspace
                .obstacles
                .iter()
                .map(footprint_of_obstacle)
                .collect(),
            entries,
            static_inflation: own,
        }
    }

    /// Replaces an object's frozen placement with a committed trajectory.
    /// Before its first sample the object sits at the first configuration,
    /// afterwards it parks at the last.
    pub fn commit(&mut self, object: ObjectId, trajectory: Trajectory) {
        for e in &mut self.entries {
            if e.id == object {
                e.placement = Placement::Moving(trajectory);
                return;
            }
        }
        panic!("object {object} is not part of this scene");
    }

    /// True if `geometry` placed at `cfg` is free at time `t`. On a hit,
    /// the ids of intersecting movable objects are added to `blockers`
    /// (static obstacles and bounds violations are not recorded there).
    pub fn free_at(
        &self,
        geometry: &Geometry,
        cfg: &Configuration,
        t: f64,
        blockers: Option<&mut BTreeSet<ObjectId>>,
    ) -> bool {
        let fp = footprint_of(geometry, cfg);
        let fp_static = inflate(&fp, self.static_inflation);
        if !within_bounds(&fp_static, &self.workspace.bounds, 0.0) {
            return false;
        }
        for ob in &self.obstacle_footprints {
            if collides(&fp_static, ob) {
                return false;
            }
        }
        match blockers {
            None => {
                for e in &self.entries {
                    if collides(&inflate(&fp, e.inflation), &self.entry_footprint(e, t)) {
                        return false;
                    }
                }
                true
            }
            Some(out) => {
                let mut free = true;
                for e in &self.entries {
                    if collides(&inflate(&fp, e.inflation), &self.entry_footprint(e, t)) {
                        out.insert(e.id);
                        free = false;
                    }
                }
                free
            }
        }
    }

    fn entry_footprint(&self, e: &SceneEntry, t: f64) -> Footprint {
        let cfg = match &e.placement {
            Placement::Frozen(c) => *c,
            Placement::Moving(tr) => tr.config_at(t),
        };
        footprint_of(&e.geometry, &cfg)
    }
}

/// What a failed planning attempt learned: problem configurations the tree
/// never reached, and the movable objects whose footprints rejected at
/// least one extension. The planned object itself never appears.
#[derive(Debug, Clone, Default)]
pub struct ConflictReport {
    pub unreachable: Vec<Configuration>,
    pub blockers: BTreeSet<ObjectId>,
}

/// One activity inside a group motion query. `delay` and `duration` are
/// the scheduled values in seconds relative to the group start.
#[derive(Debug, Clone)]
pub struct GroupQueryEntry {
    pub activity: ActivityId,
    pub object: ObjectId,
    pub start: Configuration,
    pub goal: Configuration,
    pub delay: f64,
    pub duration: f64,
}

/// A parallel group to plan: its entries, the current configuration of
/// every object (blocking obstacles included), and the group start in
/// absolute seconds.
#[derive(Debug, Clone)]
pub struct GroupQuery {
    pub entries: Vec<GroupQueryEntry>,
    pub conf: Vec<Configuration>,
    pub s_min_seconds: f64,
}

/// A successfully planned activity: its trajectory plus the achieved
/// timing (delay from the group start, moving duration) and whether the
/// trajectory fits the scheduled window.
#[derive(Debug, Clone)]
pub struct PlannedMotion {
    pub activity: ActivityId,
    pub trajectory: Trajectory,
    pub delay: f64,
    pub duration: f64,
    pub fits_window: bool,
}

/// Result of a group planning call. Planning stops at the first activity
/// that fails outright (`failure`) or overruns its window; `planned` holds
/// everything planned up to and including that point.
#[derive(Debug, Clone, Default)]
pub struct MotionOutcome {
    pub planned: Vec<PlannedMotion>,
    pub failure: Option<(ActivityId, ConflictReport)>,
}

impl MotionOutcome {
    /// Activities whose trajectories fit their scheduled windows.
    pub fn solved(&self) -> Vec<ActivityId> {
        self.planned.iter().filter(|p| p.fits_window).map(|p| p.activity).collect()
    }

    pub fn all_fit(&self) -> bool {
        self.failure.is_none() && self.planned.iter().all(|p| p.fits_window)
    }
}

/// Geometric reachability query for a single activity: grows a random tree
/// from `start` in the frozen scene and reports whether `goal` was
/// connected. On failure the report lists unreached problem configurations
/// and the objects that rejected extensions.
#[allow(clippy::too_many_arguments)]
pub fn get_path(
    scene: &Scene,
    object: &MovableObject,
    start: Configuration,
    goal: Configuration,
    problem_configs: &[Configuration],
    budget: u64,
    params: &PlannerParams,
    seed: u64,
) -> (bool, ConflictReport) {
    let plan = rrt::plan_geometric(scene, object, start, goal, problem_configs, budget, params, seed);
    if plan.found {
        (true, ConflictReport::default())
    } else {
        (
            false,
            ConflictReport {
                unreachable: problem_configs
                    .iter()
                    .zip(&plan.reached)
                    .filter(|(_, r)| !**r)
                    .map(|(c, _)| *c)
                    .collect(),
                blockers: plan.blockers,
            },
        )
    }
}

fn mix_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_add(k.wrapping_mul(0x9E3779B97F4A7C15))
}

/// Appends a later trajectory of the same object; between the two the
/// object is parked, so interpolation across the seam stays put.
fn append_trajectory(base: &mut Trajectory, ext: &Trajectory) {
    let last = base.samples.last().map_or(f64::NEG_INFINITY, |s| s.t);
    base.samples.extend(ext.samples.iter().filter(|s| s.t > last).cloned());
}

/// Plans a parallel group one activity at a time in ascending scheduled
/// delay (ties by activity name). Each activity is planned in space-time
/// against static obstacles, frozen objects, and the trajectories already
/// committed for earlier group members. An activity may depart later or
/// run longer than scheduled; the achieved timing is measured from its
/// trajectory. Planning returns early when an activity cannot be planned
/// at all or does not fit its window.
pub fn get_motion(
    problem: &Problem,
    query: &GroupQuery,
    budget: u64,
    params: &PlannerParams,
    seed: u64,
) -> MotionOutcome {
    let mut order: Vec<usize> = (0..query.entries.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (&query.entries[i], &query.entries[j]);
        a.delay
            .total_cmp(&b.delay)
            .then_with(|| {
                let an = &problem.scheduling.activities[a.activity.index()].name;
                let bn = &problem.scheduling.activities[b.activity.index()].name;
                an.cmp(bn)
            })
    });

    let window_top = query
        .entries
        .iter()
        .map(|e| e.delay + e.duration)
        .fold(0.0f64, f64::max);
    let horizon = query.s_min_seconds + 2.0 * window_top + 10.0;
    let problem_configs = problem.problem_configurations();

    let mut out = MotionOutcome::default();
    let mut committed: Vec<(ObjectId, Trajectory)> = Vec::new();
    for (k, &ei) in order.iter().enumerate() {
        let entry = &query.entries[ei];
        let object = &problem.objects[entry.object.index()];
        let mut scene = Scene::new(problem, entry.object, &query.conf, params);
        for (oid, tr) in &committed {
            // An object's own earlier legs are not obstacles to it; its
            // continuity with them is the scheduler's responsibility.
            if *oid != entry.object {
                scene.commit(*oid, tr.clone());
            }
        }
        let depart = query.s_min_seconds + entry.delay;
        let window_end = depart + entry.duration;
        let plan = spacetime::plan_space_time(
            &scene,
            object,
            entry.start,
            entry.goal,
            &problem_configs,
            depart,
            horizon,
            budget,
            params,
            mix_seed(seed, k as u64),
        );
        match plan.trajectory {
            Some(trajectory) => {
                let (delay, duration) =
                    extract_timing(&trajectory, query.s_min_seconds, params.eps_move);
                let fits = trajectory.end_time() <= window_end + 1e-9;
                if fits {
                    match committed.iter_mut().find(|(o, _)| *o == entry.object) {
                        // A later leg of the same object extends its
                        // committed clock instead of replacing it, so other
                        // members see the whole chain.
                        Some((_, prev)) => append_trajectory(prev, &trajectory),
                        None => committed.push((entry.object, trajectory.clone())),
                    }
                }
                out.planned.push(PlannedMotion {
                    activity: entry.activity,
                    trajectory,
                    delay,
                    duration,
                    fits_window: fits,
                });
                if !fits {
                    return out; // enough information for a temporal refinement
                }
            }
            None => {
                out.failure = Some((
                    entry.activity,
                    ConflictReport {
                        unreachable: problem_configs
                            .iter()
                            .zip(&plan.reached)
                            .filter(|(_, r)| !**r)
                            .map(|(c, _)| *c)
                            .collect(),
                        blockers: plan.blockers,
                    },
                ));
                return out;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Bounds, Configuration, ControlModel, Obstacle, Plan, Schedule, WorkspaceModel,
    };
    use crate::semantics::{validate_plan, ViolationKind};

    fn disk_robot(name: &str, x: f64, y: f64) -> MovableObject {
        MovableObject {
            name: name.into(),
            geometry: Geometry::Disk { radius: 0.3 },
            control: ControlModel { max_speed: 1.0, max_accel: 1.0, model_id: "omni".into() },
            initial: Configuration::at(x, y),
        }
    }

    /// 10 x 3 workspace with a 0.9 m wide corridor between x=3 and x=7,
    /// open bulbs at both ends. Two 0.3-radius robots cannot pass inside.
    fn corridor_problem(robots: Vec<MovableObject>) -> Problem {
        let gap_lo = 1.5 - 0.45;
        let gap_hi = 1.5 + 0.45;
        Problem {
            scheduling: crate::model::SchedulingProblem::empty(),
            objects: robots,
            workspace: WorkspaceModel {
                bounds: Bounds { min_x: 0.0, min_y: 0.0, max_x: 10.0, max_y: 3.0 },
                obstacles: vec![
                    Obstacle {
                        vertices: vec![(3.0, 0.0), (7.0, 0.0), (7.0, gap_lo), (3.0, gap_lo)],
                    },
                    Obstacle {
                        vertices: vec![(3.0, gap_hi), (7.0, gap_hi), (7.0, 3.0), (3.0, 3.0)],
                    },
                ],
            },
            tick_seconds: 1.0,
        }
    }

    #[test]
    fn free_space_direct_motion_matches_the_velocity_profile() {
        let p = corridor_problem(vec![disk_robot("r1", 1.0, 1.5)]);
        let p = Problem {
            workspace: WorkspaceModel {
                bounds: p.workspace.bounds,
                obstacles: vec![], // open room
            },
            ..p
        };
        let query = GroupQuery {
            entries: vec![GroupQueryEntry {
                activity: ActivityId(0),
                object: ObjectId(0),
                start: Configuration::at(1.0, 1.5),
                goal: Configuration::at(5.0, 1.5),
                delay: 0.0,
                duration: 20.0,
            }],
            conf: vec![Configuration::at(1.0, 1.5)],
            s_min_seconds: 0.0,
        };
        let out = get_motion(&p, &query, 20_000, &PlannerParams::default(), 1);
        assert!(out.failure.is_none());
        assert_eq!(out.planned.len(), 1);
        let m = &out.planned[0];
        assert!(m.fits_window);
        assert!((m.delay - 0.0).abs() < 1e-9, "no reason to wait in free space");
        assert!(
            (m.duration - 5.0).abs() < 1e-6,
            "4 m at v=1, a=1 takes 5 s, got {}",
            m.duration
        );
        let last = m.trajectory.samples.last().unwrap();
        assert!(last.configuration().dist_xy(&Configuration::at(5.0, 1.5)) < 1e-9);
    }

    #[test]
    fn zero_length_motion_is_a_parked_trajectory() {
        let p = corridor_problem(vec![disk_robot("r1", 1.0, 1.5)]);
        let query = GroupQuery {
            entries: vec![GroupQueryEntry {
                activity: ActivityId(0),
                object: ObjectId(0),
                start: Configuration::at(1.0, 1.5),
                goal: Configuration::at(1.0, 1.5),
                delay: 0.0,
                duration: 5.0,
            }],
            conf: vec![Configuration::at(1.0, 1.5)],
            s_min_seconds: 0.0,
        };
        let out = get_motion(&p, &query, 1000, &PlannerParams::default(), 1);
        let m = &out.planned[0];
        assert!(m.fits_window);
        assert_eq!((m.delay, m.duration), (0.0, 0.0));
    }

    #[test]
    fn chained_legs_of_one_object_share_a_group() {
        // Back-to-back legs of the same robot plus a bystander planned
        // after both: the bystander's scene sees the whole chain as one
        // committed clock, and neither leg treats the other as an obstacle.
        let p = corridor_problem(vec![
            disk_robot("r1", 1.0, 0.75),
            disk_robot("r2", 9.0, 2.25),
        ]);
        let p = Problem {
            workspace: WorkspaceModel {
                bounds: p.workspace.bounds,
                obstacles: vec![],
            },
            ..p
        };
        let query = GroupQuery {
            entries: vec![
                GroupQueryEntry {
                    activity: ActivityId(0),
                    object: ObjectId(0),
                    start: Configuration::at(1.0, 0.75),
                    goal: Configuration::at(5.0, 0.75),
                    delay: 0.0,
                    duration: 6.0,
                },
                GroupQueryEntry {
                    activity: ActivityId(1),
                    object: ObjectId(0),
                    start: Configuration::at(5.0, 0.75),
                    goal: Configuration::at(9.0, 0.75),
                    delay: 6.0,
                    duration: 6.0,
                },
                GroupQueryEntry {
                    activity: ActivityId(2),
                    object: ObjectId(1),
                    start: Configuration::at(9.0, 2.25),
                    goal: Configuration::at(1.0, 2.25),
                    delay: 7.0,
                    duration: 12.0,
                },
            ],
            conf: vec![Configuration::at(1.0, 0.75), Configuration::at(9.0, 2.25)],
            s_min_seconds: 0.0,
        };
        let out = get_motion(&p, &query, 20_000, &PlannerParams::default(), 1);
        assert!(out.failure.is_none(), "open room, nothing to fail on");
        assert!(out.all_fit());
        assert_eq!(out.planned.len(), 3);
        let leg2 = &out.planned[1];
        let first = leg2.trajectory.samples.first().unwrap();
        assert!(first.t >= 6.0 - 1e-9, "second leg departs in its own window");
        assert!(first.configuration().dist_xy(&Configuration::at(5.0, 0.75)) < 1e-9);
    }

    #[test]
    fn corridor_crossers_coordinate_in_time() {
        // Two robots trade sides through a single-file corridor. The later
        // one must wait for the corridor to clear or crawl behind, so its
        // achieved timing exceeds its unimpeded straight-line time.
        let p = corridor_problem(vec![
            disk_robot("r1", 1.2, 1.0),
            disk_robot("r2", 8.8, 2.0),
        ]);
        let starts = [Configuration::at(1.2, 1.0), Configuration::at(8.8, 2.0)];
        let goals = [Configuration::at(8.8, 1.0), Configuration::at(1.2, 2.0)];
        let mut sp = crate::model::SchedulingProblem::empty();
        for (i, name) in ["m1", "m2"].iter().enumerate() {
            sp.resources.push(crate::model::Resource {
                name: p.objects[i].name.clone(),
                capacity: 1,
            });
            sp.activities.push(crate::model::Activity {
                name: (*name).into(),
                optional: false,
                duration: (1, 60),
                resource_usage: vec![(crate::model::ResourceId(i), 1)],
                conditions: vec![],
                effects: vec![],
                motion: Some(crate::model::MotionConstraint {
                    object: ObjectId(i),
                    start: starts[i],
                    goal: goals[i],
                }),
            });
        }
        let full = Problem { scheduling: sp, ..p };
        let query = GroupQuery {
            entries: (0..2)
                .map(|i| GroupQueryEntry {
                    activity: ActivityId(i),
                    object: ObjectId(i),
                    start: starts[i],
                    goal: goals[i],
                    delay: 0.0,
                    duration: 40.0,
                })
                .collect(),
            conf: starts.to_vec(),
            s_min_seconds: 0.0,
        };
        let out = get_motion(&full, &query, 40_000, &PlannerParams::default(), 3);
        assert!(out.failure.is_none(), "both crossings should be plannable");
        assert_eq!(out.planned.len(), 2, "{:?}", out.planned.len());
        let second = &out.planned[1];
        let unimpeded = estimate_duration(7.6, &full.objects[1].control);
        assert!(
            second.delay + second.duration > unimpeded + 0.2,
            "second robot must lose time coordinating: delay {} + duration {} vs {}",
            second.delay,
            second.duration,
            unimpeded
        );
        let ends: Vec<u64> = out
            .planned
            .iter()
            .map(|m| m.trajectory.end_time().ceil() as u64)
            .collect();
        let plan = Plan {
            schedule: Schedule {
                present: vec![true, true],
                start: vec![0, 0],
                end: ends.clone(),
            },
            trajectories: out.planned.iter().map(|m| Some(m.trajectory.clone())).collect(),
        };
        let violations = validate_plan(&full, &plan);
        assert!(
            violations.iter().all(|v| v.kind != ViolationKind::Collision
                && v.kind != ViolationKind::DynamicInfeasible
                && v.kind != ViolationKind::Discontinuity),
            "planner output must validate cleanly: {violations:?}"
        );
    }

    #[test]
    fn blocked_goal_reports_the_squatting_object() {
        // A robot parked on the only route through the corridor.
        let p = corridor_problem(vec![
            disk_robot("runner", 1.2, 1.5),
            disk_robot("squatter", 5.0, 1.5),
        ]);
        let params = PlannerParams::default();
        let scene = Scene::new(&p, ObjectId(0), &[Configuration::at(1.2, 1.5), Configuration::at(5.0, 1.5)], &params);
        let goal = Configuration::at(8.8, 1.5);
        let configs = vec![Configuration::at(1.2, 1.5), goal];
        let (found, report) = get_path(
            &scene,
            &p.objects[0],
            Configuration::at(1.2, 1.5),
            goal,
            &configs,
            6_000,
            &params,
            5,
        );
        assert!(!found);
        assert!(
            report.blockers.contains(&ObjectId(1)),
            "the squatting robot must be reported: {:?}",
            report.blockers
        );
        assert!(
            report.unreachable.iter().any(|c| c.dist_xy(&goal) < 1e-9),
            "the far side is unreachable"
        );
        assert!(
            !report.unreachable.iter().any(|c| c.dist_xy(&Configuration::at(1.2, 1.5)) < 1e-9),
            "the start side stays reachable"
        );
    }

    #[test]
    fn open_goal_is_found_and_reports_nothing() {
        let p = corridor_problem(vec![disk_robot("runner", 1.2, 1.5)]);
        let params = PlannerParams::default();
        let scene = Scene::new(&p, ObjectId(0), &[Configuration::at(1.2, 1.5)], &params);
        let goal = Configuration::at(8.8, 1.5);
        let (found, report) = get_path(
            &scene,
            &p.objects[0],
            Configuration::at(1.2, 1.5),
            goal,
            &[goal],
            20_000,
            &params,
            5,
        );
        assert!(found, "an open corridor wider than the robot must be passable");
        assert!(report.blockers.is_empty() && report.unreachable.is_empty());
    }
}
