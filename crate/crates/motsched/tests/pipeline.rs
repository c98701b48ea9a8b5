//! End-to-end exercise of the library surface: parse a problem, schedule
//! it, plan the motions per parallel group, feed timing overruns back as
//! refinement constraints, and validate the final plan down to the
//! trajectory level, including a JSON round trip.

use motsched::format::{parse_plan, parse_problem, plan_to_json};
use motsched::model::{Configuration, Plan, Trajectory};
use motsched::motion::{get_motion, GroupQuery, GroupQueryEntry, PlannerParams};
use motsched::refine::{compute_groups, extended_schedule, Refiner, TimingEstimate};
use motsched::scheduler::{encode_continuity, get_schedule, Objective};
use motsched::semantics::{validate_plan, validate_schedule};

const CORRIDOR: &str = r#"{
  "format_version": 1,
  "tick_seconds": 1.0,
  "resources": [{"name": "bot", "capacity": 1}],
  "objects": [
    {"name": "bot",
     "geometry": {"disk": {"radius": 0.3}},
     "control": {"max_speed": 1.0, "max_accel": 1.0, "model_id": "omni-v1"},
     "initial": {"x": 1.0, "y": 1.0}},
    {"name": "slab",
     "geometry": {"rectangle": {"width": 0.3, "height": 2.0}},
     "control": {"max_speed": 1.0, "max_accel": 2.0, "model_id": "slide-v1"},
     "initial": {"x": 5.0, "y": 4.5}}
  ],
  "workspace": {
    "bounds": {"x_min": 0.0, "y_min": 0.0, "x_max": 10.0, "y_max": 6.0},
    "obstacles": []
  },
  "activities": [
    {"name": "deliver", "optional": false, "duration": [4, 15],
     "resources": {"bot": 1},
     "motion": {"object": "bot",
                "start": {"x": 1.0, "y": 1.0},
                "goal": {"x": 9.0, "y": 1.0}}},
    {"name": "stow", "optional": false, "duration": [3, 12],
     "motion": {"object": "slab",
                "start": {"x": 5.0, "y": 4.5},
                "goal": {"x": 2.0, "y": 4.5}}}
  ]
}"#;

/// One scheduling pass plus motion planning for every group, feeding any
/// failure back into the refiner. Returns the finished plan once every
/// trajectory fits its scheduled window.
fn solve_round(
    refiner: &mut Refiner,
    problem: &motsched::model::Problem,
) -> Option<Plan> {
    let (rho, _) = get_schedule(&refiner.problem, Objective::MinMakespan, None, 0);
    let rho = rho.expect("scheduling stays feasible under refinement");
    assert!(
        validate_schedule(&refiner.problem, &rho).is_empty(),
        "scheduler output validates"
    );
    let groups = compute_groups(&refiner.problem, &rho);
    let mut trajectories: Vec<Option<Trajectory>> =
        vec![None; refiner.problem.activities.len()];
    let mut conf: Vec<Configuration> = problem.objects.iter().map(|o| o.initial).collect();
    for g in &groups {
        let entries: Vec<GroupQueryEntry> = g
            .activities
            .iter()
            .map(|&a| {
                let i = a.index();
                let mc = refiner.problem.activities[i].motion.as_ref().unwrap();
                GroupQueryEntry {
                    activity: a,
                    object: mc.object,
                    start: mc.start,
                    goal: mc.goal,
                    delay: (rho.start[i] - g.s_min) as f64 * problem.tick_seconds,
                    duration: (rho.end[i] - rho.start[i]) as f64 * problem.tick_seconds,
                }
            })
            .collect();
        let query = GroupQuery {
            entries,
            conf: conf.clone(),
            s_min_seconds: g.s_min as f64 * problem.tick_seconds,
        };
        let out = get_motion(problem, &query, 40_000, &PlannerParams::default(), 7);
        if let Some((failed, report)) = &out.failure {
            refiner
                .add_geometric_refinements(g, *failed, report, &conf, &rho)
                .expect("failure report yields a refinement");
            return None;
        }
        if !out.all_fit() {
            let estimates: Vec<TimingEstimate> = out
                .planned
                .iter()
                .map(|m| TimingEstimate {
                    activity: m.activity,
                    delay: m.delay,
                    duration: m.duration,
                })
                .collect();
            refiner
                .add_temporal_refinements(g, &estimates, &conf, &rho)
                .expect("overrun yields a refinement");
            return None;
        }
        for m in out.planned {
            trajectories[m.activity.index()] = Some(m.trajectory);
        }
        for &a in &g.activities {
            let mc = refiner.problem.activities[a.index()].motion.as_ref().unwrap();
            conf[mc.object.index()] = mc.goal;
        }
    }
    Some(Plan { schedule: extended_schedule(&rho, &refiner.problem), trajectories })
}

#[test]
fn corridor_delivery_schedules_plans_and_validates() {
    let p = parse_problem(CORRIDOR).expect("problem parses");
    let enc = encode_continuity(&p, false).expect("continuity encodes");
    let mut refiner = Refiner::new(&p, &enc);
    let mut plan = None;
    for _ in 0..10 {
        plan = solve_round(&mut refiner, &p);
        if plan.is_some() {
            break;
        }
    }
    let plan = plan.expect("refinement loop converges within ten rounds");
    assert!(
        !refiner.log.is_empty(),
        "minimal windows cannot fit the real motion times, so at least one \
         refinement was learned"
    );
    let violations = validate_plan(&p, &plan);
    assert!(violations.is_empty(), "independent validation is clean: {violations:?}");
    for (i, t) in plan.trajectories.iter().enumerate() {
        let name = &p.scheduling.activities[i].name;
        assert!(t.is_some(), "{name} carries a trajectory");
    }
    let json = plan_to_json(&plan, &p);
    let back = parse_plan(&json, &p).expect("emitted plan parses back");
    assert_eq!(back.schedule, plan.schedule, "schedule survives the JSON round trip");
    assert_eq!(
        back.trajectories[0].as_ref().map(|t| t.samples.len()),
        plan.trajectories[0].as_ref().map(|t| t.samples.len())
    );
}
