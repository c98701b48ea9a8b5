//! Interleaved solve loop: the scheduler proposes candidate schedules, the
//! motion planner checks them group by group, and every failed check comes
//! back as a symbolic refinement constraint until a candidate survives in
//! full.
//!
//! Checking is layered. Before a group is planned jointly, each member gets
//! two cheap singleton probes: a static reachability check against the
//! objects parked around it, then a lone space-time check of its scheduled
//! window. Most refinements are learned there, keeping multi-object planner
//! calls rare. All planner verdicts are cached by canonical scene shape, so
//! repeated candidates with the same local geometry cost nothing, and the
//! cache survives constraint resets.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashSet;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::model::{
    ActivityId, Configuration, Formula, ObjectId, Plan, Problem, Schedule, TimeRef, Trajectory,
};
use crate::motion::{
    get_motion, get_path, GroupQuery, GroupQueryEntry, MotionOutcome, PlannedMotion,
    PlannerParams, Scene,
};
use crate::refine::{
    cache_group_verdict, cache_path_verdict, compute_groups, extended_schedule, group_key,
    group_verdict, parked_scene, path_key, path_verdict, CacheEntry, CachedResult,
    ParallelMotionGroup, Refinement, RefinementKind, RefinementOrigin, Refiner, TimingEstimate,
    TrajectoryCache,
};
use crate::scheduler::{
    encode_continuity, get_schedule, ContinuityError, Objective, SchedulerStatus,
};
use crate::semantics::{evaluate_formula, validate_plan};

/// Knobs of the interleaved solver.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Initial per-query planner budget, seconds of planner effort
    /// (converted through `params.iterations_per_second`). Doubles on every
    /// constraint reset.
    pub t_p: f64,
    /// Cap for the doubling planner budget, seconds.
    pub t_p_max: f64,
    /// Wall-clock limit for the whole solve, seconds.
    pub timeout: f64,
    pub objective: Objective,
    /// Randomizes scheduler tie-breaking and planner sampling.
    pub seed: u64,
    /// With layering on, singleton probes run before each full group query.
    pub layering: bool,
    /// Compile object continuity with configuration fluents instead of
    /// ordering constraints.
    pub use_fluents: bool,
    /// Forbid any two motion activities from overlapping (baseline mode for
    /// measuring the benefit of parallel motion).
    pub sequential: bool,
    pub params: PlannerParams,
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig {
            t_p: 10.0,
            t_p_max: 160.0,
            timeout: 600.0,
            objective: Objective::MinMakespan,
            seed: 0,
            layering: true,
            use_fluents: false,
            sequential: false,
            params: PlannerParams::default(),
        }
    }
}

/// Final verdict of a solve call.
#[derive(Debug)]
pub enum SolveOutcome {
    /// A schedule with validated trajectories for every present motion.
    Plan(Box<Plan>),
    /// The very first scheduling attempt was proven infeasible; motion never
    /// entered the picture.
    Unsolvable,
    /// The wall clock ran out before a verdict.
    Incomplete,
}

impl SolveOutcome {
    pub fn plan(&self) -> Option<&Plan> {
        match self {
            SolveOutcome::Plan(p) => Some(p),
            _ => None,
        }
    }
}

/// Which check produced a refinement: a singleton probe or the joint group
/// query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckLayer {
    Single,
    Group,
}

/// One refinement-emitting planner verdict.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementEvent {
    /// Scheduling iteration whose candidate was refined.
    pub iteration: usize,
    pub kind: RefinementKind,
    pub layer: CheckLayer,
    /// The failed or overrunning activity the planner reported on.
    pub activity: ActivityId,
    /// Objects the planner named as blockers, if any.
    pub blockers: Vec<ObjectId>,
    /// Constraints added, propagated copies included.
    pub added: usize,
    /// Whether every primary constraint of the batch held its guard and
    /// falsified its body on the producing candidate.
    pub cuts_producer: bool,
}

/// One scheduler invocation that produced a candidate.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Candidate makespan over the declared activities.
    pub makespan: u64,
    /// Scheduler proved the candidate optimal for the current constraints.
    pub proven_optimal: bool,
    /// Candidate survived every check and became the plan.
    pub accepted: bool,
}

/// Instrumentation of one solve call.
#[derive(Debug, Default, Serialize)]
pub struct RunLog {
    pub iterations: Vec<IterationRecord>,
    pub events: Vec<RefinementEvent>,
    /// Every constraint learned, in order, across resets.
    pub refinements: Vec<Refinement>,
    /// Singleton probe queries issued (cache hits included).
    pub single_queries: u64,
    /// Joint group queries issued (cache hits included).
    pub group_queries: u64,
    pub cache_hits: u64,
    pub cache_misses: u64,
    pub scheduler_seconds: f64,
    pub planner_seconds: f64,
    pub total_seconds: f64,
    /// Constraint resets after infeasible refined problems.
    pub resets: usize,
    /// Planner budget in force when the loop ended, seconds.
    pub final_t_p: f64,
    /// The accepted candidate carried a scheduler optimality proof.
    pub optimal: bool,
}

impl RunLog {
    /// Refinement event counts as (singleton geometric, singleton temporal,
    /// group combined).
    pub fn refinement_triple(&self) -> (usize, usize, usize) {
        let mut t = (0, 0, 0);
        for e in &self.events {
            match (e.layer, e.kind) {
                (CheckLayer::Single, RefinementKind::Geometric) => t.0 += 1,
                (CheckLayer::Single, RefinementKind::Temporal) => t.1 += 1,
                (CheckLayer::Group, _) => t.2 += 1,
            }
        }
        t
    }
}

/// Outcome plus instrumentation.
#[derive(Debug)]
pub struct SolveReport {
    pub outcome: SolveOutcome,
    pub log: RunLog,
}

fn budget_of(t_p: f64, params: &PlannerParams) -> u64 {
    ((t_p * params.iterations_per_second) as u64).max(1)
}

fn mix(seed: u64, salt: u64) -> u64 {
    seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn schedule_digest(rho: &Schedule) -> u64 {
    let mut h = DefaultHasher::new();
    rho.present.hash(&mut h);
    rho.start.hash(&mut h);
    rho.end.hash(&mut h);
    h.finish()
}

/// Makespan over the declared activities only, ignoring any condition
/// carriers a refiner appended.
fn declared_makespan(rho: &Schedule, n: usize) -> u64 {
    (0..n).filter(|&i| rho.present[i]).map(|i| rho.end[i]).max().unwrap_or(0)
}

enum CandidateVerdict {
    Accepted(Box<Plan>),
    Refined,
    DeadlineHit,
}

enum ProbeVerdict {
    Pass,
    Refined,
}

/// Solves the problem by interleaving scheduling with layered motion checks.
///
/// Each candidate schedule is checked group by group in start order,
/// threading the objects' configurations through. Any refinement aborts back
/// to the scheduler. An infeasible refined problem is never final: the
/// learned constraints are dropped, the planner budget doubles (capped at
/// `t_p_max`), and only a failure of the very first scheduling proves the
/// problem unsolvable. Accepted plans are re-validated from scratch before
/// being returned.
pub fn solve(p: &Problem, config: &EngineConfig) -> Result<SolveReport, ContinuityError> {
    let t0 = Instant::now();
    let t_p_max = config.t_p_max.min(config.timeout);
    let mut t_p = config.t_p.min(t_p_max);
    let deadline = t0 + Duration::from_secs_f64(config.timeout.max(0.0));

    let mut enc = encode_continuity(p, config.use_fluents)?;
    if config.sequential {
        let movers: Vec<ActivityId> = (0..enc.problem.activities.len())
            .filter(|&i| enc.problem.activities[i].motion.is_some())
            .map(ActivityId)
            .collect();
        for (k, &i) in movers.iter().enumerate() {
            for &j in &movers[k + 1..] {
                enc.problem.constraints.push(Formula::implies(
                    Formula::and(vec![Formula::Presence(i), Formula::Presence(j)]),
                    Formula::or(vec![
                        Formula::lt(TimeRef::end_of(i), TimeRef::start_of(j)),
                        Formula::lt(TimeRef::end_of(j), TimeRef::start_of(i)),
                    ]),
                ));
            }
        }
    }

    let mut run = Run {
        p,
        config,
        problem_configs: p.problem_configurations(),
        cache: TrajectoryCache::new(),
        log: RunLog::default(),
        deadline,
        budget: budget_of(t_p, &config.params),
    };
    let mut refiner = Refiner::new(p, &enc);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut iteration: usize = 0;
    let n = p.scheduling.activities.len();

    let outcome = loop {
        if Instant::now() >= run.deadline {
            break SolveOutcome::Incomplete;
        }
        let ts = Instant::now();
        let (rho, status) =
            get_schedule(&refiner.problem, config.objective, Some(run.deadline), config.seed);
        run.log.scheduler_seconds += ts.elapsed().as_secs_f64();
        let Some(rho) = rho else {
            match status {
                SchedulerStatus::Timeout => break SolveOutcome::Incomplete,
                _ => {
                    if iteration == 0 {
                        break SolveOutcome::Unsolvable;
                    }
                    // The learned constraints starved the scheduler, so some
                    // of them overcut (the planner budget was too small to
                    // see the surviving pattern). Drop them, double the
                    // budget, keep the cache: definite verdicts stay valid,
                    // stale failures expire on their own.
                    t_p = (2.0 * t_p).min(t_p_max);
                    run.budget = budget_of(t_p, &config.params);
                    run.log.resets += 1;
                    refiner = Refiner::new(p, &enc);
                    seen.clear();
                    iteration += 1;
                    continue;
                }
            }
        };
        assert!(
            seen.insert(schedule_digest(&rho)),
            "scheduler repeated a refuted candidate"
        );
        let proven_optimal = status == SchedulerStatus::Optimal;
        let mut rec = IterationRecord {
            iteration,
            makespan: declared_makespan(&rho, n),
            proven_optimal,
            accepted: false,
        };
        match run.check_candidate(&mut refiner, &rho, iteration) {
            CandidateVerdict::Accepted(plan) => {
                rec.accepted = true;
                run.log.iterations.push(rec);
                run.log.optimal = proven_optimal;
                break SolveOutcome::Plan(plan);
            }
            CandidateVerdict::Refined => run.log.iterations.push(rec),
            CandidateVerdict::DeadlineHit => {
                run.log.iterations.push(rec);
                break SolveOutcome::Incomplete;
            }
        }
        iteration += 1;
    };

    let (hits, misses) = run.cache.stats();
    run.log.cache_hits = hits;
    run.log.cache_misses = misses;
    run.log.final_t_p = t_p;
    run.log.total_seconds = t0.elapsed().as_secs_f64();
    Ok(SolveReport { outcome, log: run.log })
}

struct Run<'a> {
    p: &'a Problem,
    config: &'a EngineConfig,
    problem_configs: Vec<Configuration>,
    cache: TrajectoryCache,
    log: RunLog,
    deadline: Instant,
    budget: u64,
}

impl Run<'_> {
    /// Checks one candidate group by group, threading configurations, and
    /// assembles the plan if everything passes.
    fn check_candidate(
        &mut self,
        refiner: &mut Refiner,
        rho: &Schedule,
        iteration: usize,
    ) -> CandidateVerdict {
        let n = self.p.scheduling.activities.len();
        let mut conf: Vec<Configuration> = self.p.objects.iter().map(|o| o.initial).collect();
        let mut trajectories: Vec<Option<Trajectory>> = vec![None; n];
        for g in &compute_groups(&refiner.problem, rho) {
            if self.config.layering {
                for &a in &g.activities {
                    if Instant::now() >= self.deadline {
                        return CandidateVerdict::DeadlineHit;
                    }
                    if let ProbeVerdict::Refined =
                        self.geometric_probe(refiner, g, a, &conf, rho, iteration)
                    {
                        return CandidateVerdict::Refined;
                    }
                }
                for &a in &g.activities {
                    if Instant::now() >= self.deadline {
                        return CandidateVerdict::DeadlineHit;
                    }
                    if let ProbeVerdict::Refined =
                        self.temporal_probe(refiner, g, a, &conf, rho, iteration)
                    {
                        return CandidateVerdict::Refined;
                    }
                }
            }
            if Instant::now() >= self.deadline {
                return CandidateVerdict::DeadlineHit;
            }
            match self.group_check(refiner, g, &conf, rho, iteration) {
                Ok(planned) => {
                    for m in planned {
                        trajectories[m.activity.index()] = Some(m.trajectory);
                    }
                }
                Err(ProbeVerdict::Refined) | Err(ProbeVerdict::Pass) => {
                    return CandidateVerdict::Refined;
                }
            }
            // Members are (start, index)-sorted, so the last write per
            // object is its final goal within the group.
            for &a in &g.activities {
                let mc = refiner.problem.activities[a.index()]
                    .motion
                    .as_ref()
                    .expect("group member moves");
                conf[mc.object.index()] = mc.goal;
            }
        }
        // Project back onto the declared activities: condition carriers
        // materialized by refinements live past index n and carry no motion.
        let mut schedule = rho.clone();
        schedule.present.truncate(n);
        schedule.start.truncate(n);
        schedule.end.truncate(n);
        let plan = Plan { schedule, trajectories };
        let violations = validate_plan(self.p, &plan);
        assert!(violations.is_empty(), "accepted plan must validate: {violations:?}");
        CandidateVerdict::Accepted(Box::new(plan))
    }

    /// Static reachability probe of one member against the objects parked
    /// around it at its scheduled start.
    fn geometric_probe(
        &mut self,
        refiner: &mut Refiner,
        g: &ParallelMotionGroup,
        a: ActivityId,
        conf: &[Configuration],
        rho: &Schedule,
        iteration: usize,
    ) -> ProbeVerdict {
        let mc =
            refiner.problem.activities[a.index()].motion.clone().expect("group member moves");
        let scene_conf = parked_scene(&refiner.problem, g, rho.start[a.index()], conf, rho);
        let keyed = path_key(self.p, mc.object, &mc.start, &mc.goal, &scene_conf);
        self.log.single_queries += 1;
        let (found, report) = match self.cache.lookup(&keyed.key, self.budget) {
            Some(CacheEntry { result: CachedResult::Path(cp), .. }) => path_verdict(&cp, &keyed),
            _ => {
                let tp = Instant::now();
                let scene = Scene::new(self.p, mc.object, &scene_conf, &self.config.params);
                let (found, report) = get_path(
                    &scene,
                    &self.p.objects[mc.object.index()],
                    mc.start,
                    mc.goal,
                    &self.problem_configs,
                    self.budget,
                    &self.config.params,
                    mix(self.config.seed, a.index() as u64),
                );
                self.log.planner_seconds += tp.elapsed().as_secs_f64();
                self.cache.store(
                    keyed.key.clone(),
                    CacheEntry {
                        budget: self.budget,
                        result: cache_path_verdict(found, &report, &keyed),
                    },
                );
                (found, report)
            }
        };
        if found {
            return ProbeVerdict::Pass;
        }
        let added = if report.blockers.is_empty() {
            refiner.add_infeasible_refinements(g, a, &report, conf)
        } else {
            refiner.add_geometric_refinements(g, a, &report, conf, rho)
        }
        .expect("a failed probe is refinable");
        self.record_event(refiner, added, iteration, CheckLayer::Single, a, rho);
        ProbeVerdict::Refined
    }

    /// Lone space-time probe of one member inside its scheduled window,
    /// against the same parked scene as the geometric probe.
    fn temporal_probe(
        &mut self,
        refiner: &mut Refiner,
        g: &ParallelMotionGroup,
        a: ActivityId,
        conf: &[Configuration],
        rho: &Schedule,
        iteration: usize,
    ) -> ProbeVerdict {
        let mc =
            refiner.problem.activities[a.index()].motion.clone().expect("group member moves");
        let tick = self.p.tick_seconds;
        let s_a = rho.start[a.index()];
        let query = GroupQuery {
            entries: vec![GroupQueryEntry {
                activity: a,
                object: mc.object,
                start: mc.start,
                goal: mc.goal,
                delay: 0.0,
                duration: (rho.end[a.index()] - s_a) as f64 * tick,
            }],
            conf: parked_scene(&refiner.problem, g, s_a, conf, rho),
            s_min_seconds: s_a as f64 * tick,
        };
        self.log.single_queries += 1;
        let outcome = self.run_group_query(&query, mix(self.config.seed, 0x51 ^ a.index() as u64));
        self.refine_from_outcome(refiner, g, &outcome, conf, rho, iteration, CheckLayer::Single)
            .map_or(ProbeVerdict::Pass, |_| ProbeVerdict::Refined)
    }

    /// Joint space-time planning of a whole group, prioritized in scheduled
    /// delay order against the threaded configurations.
    fn group_check(
        &mut self,
        refiner: &mut Refiner,
        g: &ParallelMotionGroup,
        conf: &[Configuration],
        rho: &Schedule,
        iteration: usize,
    ) -> Result<Vec<PlannedMotion>, ProbeVerdict> {
        let tick = self.p.tick_seconds;
        let entries = g
            .activities
            .iter()
            .map(|&a| {
                let mc = refiner.problem.activities[a.index()]
                    .motion
                    .clone()
                    .expect("group member moves");
                GroupQueryEntry {
                    activity: a,
                    object: mc.object,
                    start: mc.start,
                    goal: mc.goal,
                    delay: (rho.start[a.index()] - g.s_min) as f64 * tick,
                    duration: (rho.end[a.index()] - rho.start[a.index()]) as f64 * tick,
                }
            })
            .collect();
        let query = GroupQuery {
            entries,
            conf: conf.to_vec(),
            s_min_seconds: g.s_min as f64 * tick,
        };
        self.log.group_queries += 1;
        let seed = mix(self.config.seed, 0x6702 ^ g.activities[0].index() as u64);
        let outcome = self.run_group_query(&query, seed);
        match self.refine_from_outcome(refiner, g, &outcome, conf, rho, iteration, CheckLayer::Group)
        {
            Some(_) => Err(ProbeVerdict::Refined),
            None => Ok(outcome.planned),
        }
    }

    /// Runs one space-time query through the cache.
    fn run_group_query(&mut self, query: &GroupQuery, seed: u64) -> MotionOutcome {
        let keyed = group_key(self.p, query);
        match self.cache.lookup(&keyed.key, self.budget) {
            Some(CacheEntry { result: CachedResult::Group(cg), .. }) => {
                group_verdict(&cg, query, &keyed)
            }
            _ => {
                let tp = Instant::now();
                let outcome = get_motion(self.p, query, self.budget, &self.config.params, seed);
                self.log.planner_seconds += tp.elapsed().as_secs_f64();
                self.cache.store(
                    keyed.key.clone(),
                    CacheEntry {
                        budget: self.budget,
                        result: cache_group_verdict(&outcome, query, &keyed),
                    },
                );
                outcome
            }
        }
    }

    /// Turns a planner verdict into refinements: an outright failure becomes
    /// a geometric refinement (or an infeasibility ban when nothing was
    /// blamed), an overrun becomes a temporal refinement from the achieved
    /// timings. Returns the failed or anchoring activity when refinements
    /// were added.
    #[allow(clippy::too_many_arguments)]
    fn refine_from_outcome(
        &mut self,
        refiner: &mut Refiner,
        g: &ParallelMotionGroup,
        outcome: &MotionOutcome,
        conf: &[Configuration],
        rho: &Schedule,
        iteration: usize,
        layer: CheckLayer,
    ) -> Option<ActivityId> {
        if let Some((failed, report)) = &outcome.failure {
            let added = if report.blockers.is_empty() {
                refiner.add_infeasible_refinements(g, *failed, report, conf)
            } else {
                refiner.add_geometric_refinements(g, *failed, report, conf, rho)
            }
            .expect("a failed query is refinable");
            self.record_event(refiner, added, iteration, layer, *failed, rho);
            return Some(*failed);
        }
        if !outcome.all_fit() {
            let estimates: Vec<TimingEstimate> = outcome
                .planned
                .iter()
                .map(|m| TimingEstimate {
                    activity: m.activity,
                    delay: m.delay,
                    duration: m.duration,
                })
                .collect();
            let focus = outcome
                .planned
                .iter()
                .find(|m| !m.fits_window)
                .map(|m| m.activity)
                .expect("an overrunning member exists");
            let added = refiner
                .add_temporal_refinements(g, &estimates, conf, rho)
                .expect("overrunning timings are refinable");
            self.record_event(refiner, added, iteration, layer, focus, rho);
            return Some(focus);
        }
        None
    }

    /// Logs the batch of refinements just pushed onto the refiner.
    fn record_event(
        &mut self,
        refiner: &Refiner,
        added: usize,
        iteration: usize,
        layer: CheckLayer,
        activity: ActivityId,
        rho: &Schedule,
    ) {
        let batch = &refiner.log[refiner.log.len() - added..];
        let primary = &batch[0];
        let ext = extended_schedule(rho, &refiner.problem);
        let cuts_producer = batch
            .iter()
            .filter(|r| matches!(r.origin, RefinementOrigin::Primary))
            .all(|r| evaluate_formula(&r.guard, &ext) && !evaluate_formula(&r.body, &ext));
        let mut blockers: Vec<ObjectId> = primary.blocking.iter().map(|&(_, o)| o).collect();
        blockers.sort_by_key(|o| o.index());
        blockers.dedup();
        self.log.events.push(RefinementEvent {
            iteration,
            kind: primary.kind,
            layer,
            activity,
            blockers,
            added,
            cuts_producer,
        });
        self.log.refinements.extend(batch.iter().cloned());
    }
}
