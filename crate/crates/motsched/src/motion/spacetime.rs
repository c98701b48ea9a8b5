//! Space-time layer: plans one object through a scene of static obstacles,
//! frozen objects, and committed moving trajectories. The tree lives in
//! (x, y, velocity, time); edges last one fixed time step and change
//! velocity by at most `max_accel * time_step`, so the emitted polyline
//! respects the validator's per-segment speed and acceleration checks by
//! construction.
//!
//! Goal connection is analytic: from any rest node, a time-optimal
//! straight-line velocity profile to the goal is collision-checked and, if
//! clean, becomes the trajectory tail. In open space the root connect
//! succeeds immediately and yields the exact point-to-point optimum.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{config_eq, Configuration, MovableObject, ObjectId, Sample, Trajectory};

use super::profile::{estimate_duration, trapezoid_position};
use super::{Placement, PlannerParams, Scene};

pub(crate) struct TimedPlan {
    pub trajectory: Option<Trajectory>,
    /// Parallel to the problem configurations: approached by the tree.
    pub reached: Vec<bool>,
    pub blockers: BTreeSet<ObjectId>,
}

#[derive(Clone, Copy)]
struct Node {
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    t: f64,
    parent: usize,
}

impl Node {
    fn speed(&self) -> f64 {
        (self.vx * self.vx + self.vy * self.vy).sqrt()
    }

    fn at_rest(&self) -> bool {
        self.speed() < 1e-9
    }
}

/// Spatial hash cell for nearest-neighbor queries.
const NN_CELL: f64 = 0.2;
/// Positions within one centimeter count as the same column.
const COLUMN_CELL: f64 = 0.01;

struct Tree {
    nodes: Vec<Node>,
    grid: HashMap<(i64, i64), Vec<usize>>,
    /// (cm cell, time-step index) pairs already occupied.
    visited: HashSet<(i64, i64, i64)>,
    /// Failed extension attempts per node. Nodes that keep failing stop
    /// being nearest-neighbor candidates, otherwise a node whose moment
    /// has passed (an obstacle now blocks it forever) shadows every
    /// extendable node behind it.
    fails: Vec<u32>,
    depart: f64,
    time_step: f64,
}

/// Failed extensions after which a node stops attracting samples.
const FAIL_LIMIT: u32 = 12;

fn cell(v: f64, size: f64) -> i64 {
    (v / size).round() as i64
}

impl Tree {
    fn new(root: Node, depart: f64, time_step: f64) -> Tree {
        let mut t = Tree {
            nodes: Vec::new(),
            grid: HashMap::new(),
            visited: HashSet::new(),
            fails: Vec::new(),
            depart,
            time_step,
        };
        t.insert(root);
        t
    }

    fn key(&self, n: &Node) -> (i64, i64, i64) {
        (
            cell(n.x, COLUMN_CELL),
            cell(n.y, COLUMN_CELL),
            ((n.t - self.depart) / self.time_step).round() as i64,
        )
    }

    fn occupied(&self, n: &Node) -> bool {
        self.visited.contains(&self.key(n))
    }

    fn insert(&mut self, n: Node) -> usize {
        let idx = self.nodes.len();
        self.fails.push(0);
        self.visited.insert(self.key(&n));
        self.grid
            .entry((cell(n.x, NN_CELL), cell(n.y, NN_CELL)))
            .or_default()
            .push(idx);
        self.nodes.push(n);
        idx
    }

    /// Extendable node closest to (x, y); ties prefer the earliest time.
    /// Expanding ring search over the spatial hash. When every node has
    /// failed out, all counters reset: the obstacles that caused the
    /// failures may have moved on.
    fn nearest(&mut self, x: f64, y: f64) -> usize {
        loop {
            let (cx, cy) = (cell(x, NN_CELL), cell(y, NN_CELL));
            let mut best: Option<(f64, f64, usize)> = None;
            let mut r: i64 = 0;
            loop {
                if let Some((d, _, _)) = best {
                    if (r - 1) as f64 * NN_CELL > d {
                        break;
                    }
                }
                for dx in -r..=r {
                    for dy in -r..=r {
                        if dx.abs().max(dy.abs()) != r {
                            continue;
                        }
                        if let Some(ids) = self.grid.get(&(cx + dx, cy + dy)) {
                            for &i in ids {
                                if self.fails[i] >= FAIL_LIMIT {
                                    continue;
                                }
                                let n = &self.nodes[i];
                                let d = ((n.x - x).powi(2) + (n.y - y).powi(2)).sqrt();
                                let cand = (d, n.t, i);
                                if best.is_none()
                                    || (cand.0, cand.1) < (best.unwrap().0, best.unwrap().1)
                                {
                                    best = Some(cand);
                                }
                            }
                        }
                    }
                }
                r += 1;
                if r > 100_000 {
                    break;
                }
            }
            match best {
                Some((_, _, i)) => return i,
                None => {
                    for f in &mut self.fails {
                        *f = 0;
                    }
                }
            }
        }
    }

    /// Node that can still reach (x, y) by t_target with the least spare
    /// time, assuming straight full-speed travel. Purely spatial proximity
    /// keeps pulling growth toward frontiers whose moment has passed; this
    /// favors nodes whose departure time actually matches the sample. None
    /// when no extendable node can make it in time.
    fn nearest_in_time(&self, x: f64, y: f64, t_target: f64, v_max: f64) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for (i, n) in self.nodes.iter().enumerate() {
            if self.fails[i] >= FAIL_LIMIT {
                continue;
            }
            let d = (n.x - x).hypot(n.y - y);
            let slack = t_target - n.t - d / v_max;
            if slack < 0.0 {
                continue;
            }
            if best.is_none() || slack < best.unwrap().0 {
                best = Some((slack, i));
            }
        }
        best.map(|(_, i)| i)
    }
}

struct Planner<'a, 'b> {
    scene: &'b Scene<'a>,
    object: &'b MovableObject,
    start: Configuration,
    goal: Configuration,
    params: &'b PlannerParams,
    horizon: f64,
    blockers: BTreeSet<ObjectId>,
}

impl Planner<'_, '_> {
    fn heading_at(&self, progress_to_goal: Option<f64>) -> Option<f64> {
        match (self.start.heading, self.goal.heading, progress_to_goal) {
            (None, None, _) => None,
            (s, g, Some(w)) => {
                let (s, g) = (s.unwrap_or(0.0), g.unwrap_or(0.0));
                Some(s + (g - s) * w)
            }
            (s, g, None) => s.or(g).map(|_| self.start.heading_or_zero()),
        }
    }

    fn free(&mut self, x: f64, y: f64, heading: Option<f64>, t: f64) -> bool {
        let cfg = Configuration { x, y, heading };
        self.scene
            .free_at(&self.object.geometry, &cfg, t, Some(&mut self.blockers))
    }

    /// Checks the ramp arc of one tree edge: velocity interpolates v0 -> v1
    /// over `duration`, position integrates it. Samples cover both the
    /// spatial resolution and the validator's 0.05 s time cadence.
    fn edge_free(&mut self, from: &Node, v1: (f64, f64), duration: f64) -> bool {
        let disp =
            ((from.vx + v1.0) / 2.0 * duration).hypot((from.vy + v1.1) / 2.0 * duration);
        let m = ((disp / self.params.edge_resolution).ceil() as usize)
            .max((duration / crate::semantics::COLLISION_CHECK_STEP).ceil() as usize)
            .max(1);
        let heading = self.heading_at(None);
        for k in 1..=m {
            let tau = duration * k as f64 / m as f64;
            let x = from.x + from.vx * tau + (v1.0 - from.vx) * tau * tau / (2.0 * duration);
            let y = from.y + from.vy * tau + (v1.1 - from.vy) * tau * tau / (2.0 * duration);
            if !self.free(x, y, heading, from.t + tau) {
                return false;
            }
        }
        true
    }

    /// Time-optimal straight run from a rest node to the goal. Returns the
    /// trajectory tail (samples after the node) if collision-free and
    /// within the horizon.
    fn direct_connect(&mut self, node: &Node) -> Option<(Vec<Sample>, f64)> {
        debug_assert!(node.at_rest());
        let dist = (self.goal.x - node.x).hypot(self.goal.y - node.y);
        if dist <= self.params.eps_move {
            let arrival = node.t;
            let s = Sample {
                t: arrival,
                x: self.goal.x,
                y: self.goal.y,
                heading: self.goal.heading,
            };
            return Some((vec![s], arrival));
        }
        let total = estimate_duration(dist, &self.object.control);
        let arrival = node.t + total;
        if arrival > self.horizon {
            return None;
        }
        let (ux, uy) = ((self.goal.x - node.x) / dist, (self.goal.y - node.y) / dist);
        let m = ((dist / self.params.edge_resolution).ceil() as usize)
            .max((total / (self.params.time_step / 5.0)).ceil() as usize)
            .max(1);
        for k in 1..=m {
            let tau = total * k as f64 / m as f64;
            let s = trapezoid_position(dist, &self.object.control, tau);
            let heading = self.heading_at(Some(s / dist));
            if !self.free(node.x + ux * s, node.y + uy * s, heading, node.t + tau) {
                return None;
            }
        }
        let mut tail = Vec::new();
        let mut j = 1usize;
        loop {
            let t = node.t + j as f64 * self.params.time_step;
            if t >= arrival - 1e-6 {
                break;
            }
            let s = trapezoid_position(dist, &self.object.control, t - node.t);
            tail.push(Sample {
                t,
                x: node.x + ux * s,
                y: node.y + uy * s,
                heading: self.heading_at(Some(s / dist)),
            });
            j += 1;
        }
        tail.push(Sample {
            t: arrival,
            x: self.goal.x,
            y: self.goal.y,
            heading: self.goal.heading,
        });
        Some((tail, arrival))
    }
}

/// Where this node comes to rest under maximal braking.
fn stop_point(n: &Node, max_accel: f64) -> (f64, f64) {
    let sp = n.speed();
    if sp < 1e-9 {
        return (n.x, n.y);
    }
    let brake_dist = sp / (2.0 * max_accel);
    (n.x + n.vx * brake_dist, n.y + n.vy * brake_dist)
}

/// Extends a maximal-braking chain of tree edges from `idx` until the
/// object rests. Every edge is collision-checked and become part of the
/// tree, so a successful goal connect afterwards assembles like any path.
fn brake_to_rest(
    planner: &mut Planner,
    tree: &mut Tree,
    mut idx: usize,
    horizon: f64,
) -> Option<usize> {
    let dt = planner.params.time_step;
    let accel = planner.object.control.max_accel;
    let a_step = accel * dt;
    loop {
        let n = tree.nodes[idx];
        if n.at_rest() {
            return Some(idx);
        }
        if n.t + dt > horizon {
            return None;
        }
        let sp = n.speed();
        let (v1, pos1) = if sp <= a_step {
            let ts = sp / accel;
            ((0.0, 0.0), (n.x + n.vx * ts / 2.0, n.y + n.vy * ts / 2.0))
        } else {
            let f = 1.0 - a_step / sp;
            let v1 = (n.vx * f, n.vy * f);
            (v1, (n.x + (n.vx + v1.0) / 2.0 * dt, n.y + (n.vy + v1.1) / 2.0 * dt))
        };
        let new = Node { x: pos1.0, y: pos1.1, vx: v1.0, vy: v1.1, t: n.t + dt, parent: idx };
        if tree.occupied(&new) || !planner.edge_free(&n, v1, dt) {
            return None;
        }
        idx = tree.insert(new);
    }
}

/// Adds one edge to the tree; `None` if the slot is taken, the edge
/// collides, or the horizon is exceeded, charging a failure to `from_idx`.
fn grow_edge(
    planner: &mut Planner,
    tree: &mut Tree,
    from_idx: usize,
    v1: (f64, f64),
    pos1: (f64, f64),
    steps: u32,
    horizon: f64,
) -> Option<usize> {
    let from = tree.nodes[from_idx];
    let duration = steps as f64 * planner.params.time_step;
    let t1 = from.t + duration;
    let new = Node { x: pos1.0, y: pos1.1, vx: v1.0, vy: v1.1, t: t1, parent: from_idx };
    if t1 > horizon || tree.occupied(&new) || !planner.edge_free(&from, v1, duration) {
        tree.fails[from_idx] += 1;
        return None;
    }
    Some(tree.insert(new))
}

/// Goal connection gate for a freshly inserted node: brake to rest, then
/// run the analytic straight-line profile. Attempted whenever the braking
/// point is markedly closer to the goal than any attempt so far, plus
/// occasionally at random to cover scenes that change over time.
fn connect_gate(
    planner: &mut Planner,
    tree: &mut Tree,
    rng: &mut ChaCha8Rng,
    idx: usize,
    best_rest_dist: &mut f64,
    horizon: f64,
) -> Option<(usize, Vec<Sample>, f64)> {
    let node = tree.nodes[idx];
    let stop = stop_point(&node, planner.object.control.max_accel);
    let d_goal = (planner.goal.x - stop.0).hypot(planner.goal.y - stop.1);
    let promising = d_goal < *best_rest_dist - 0.25;
    if !promising && rng.random::<f64>() >= 0.05 {
        return None;
    }
    *best_rest_dist = best_rest_dist.min(d_goal);
    let rest_idx = brake_to_rest(planner, tree, idx, horizon)?;
    let rest = tree.nodes[rest_idx];
    let (tail, arrival) = planner.direct_connect(&rest)?;
    Some((rest_idx, tail, arrival))
}

fn chain_of(tree: &Tree, mut idx: usize) -> Vec<usize> {
    let mut chain = vec![idx];
    while tree.nodes[idx].parent != idx {
        idx = tree.nodes[idx].parent;
        chain.push(idx);
    }
    chain.reverse();
    chain
}

fn assemble(planner: &Planner, tree: &Tree, idx: usize, tail: Vec<Sample>) -> Trajectory {
    let heading = planner.heading_at(None);
    let mut samples: Vec<Sample> = chain_of(tree, idx)
        .into_iter()
        .map(|i| {
            let n = &tree.nodes[i];
            Sample { t: n.t, x: n.x, y: n.y, heading }
        })
        .collect();
    if let Some(first) = tail.first() {
        if let Some(last) = samples.last() {
            if first.t - last.t < 1e-9 {
                samples.pop();
            }
        }
    }
    samples.extend(tail);
    Trajectory { samples }
}

/// Plans a timed trajectory from `start` (departing at or after `depart`
/// seconds, absolute) to `goal`. On success the trajectory begins with a
/// sample exactly at `depart` and ends exactly at the goal configuration.
/// On failure, reports which problem configurations the tree reached and
/// which objects blocked extensions.
#[allow(clippy::too_many_arguments)]
pub(crate) fn plan_space_time(
    scene: &Scene,
    object: &MovableObject,
    start: Configuration,
    goal: Configuration,
    problem_configs: &[Configuration],
    depart: f64,
    horizon: f64,
    budget: u64,
    params: &PlannerParams,
    seed: u64,
) -> TimedPlan {
    let mut planner = Planner {
        scene,
        object,
        start,
        goal,
        params,
        horizon,
        blockers: BTreeSet::new(),
    };
    let mut reached: Vec<bool> = problem_configs
        .iter()
        .map(|c| c.dist_xy(&start) <= params.goal_tolerance)
        .collect();

    if config_eq(&start, &goal) {
        let s = Sample { t: depart, x: start.x, y: start.y, heading: start.heading };
        return TimedPlan {
            trajectory: Some(Trajectory { samples: vec![s] }),
            reached,
            blockers: planner.blockers,
        };
    }

    let root = Node { x: start.x, y: start.y, vx: 0.0, vy: 0.0, t: depart, parent: 0 };
    let mut tree = Tree::new(root, depart, params.time_step);

    // In an unobstructed scene this immediately yields the point-to-point
    // optimum and no search happens at all.
    let mut found: Option<(usize, Vec<Sample>, f64)> =
        planner.direct_connect(&root).map(|(tail, arrival)| (0, tail, arrival));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = &scene.workspace.bounds;
    let a_step = object.control.max_accel * params.time_step;
    let v_max = object.control.max_speed;
    let mut best_rest_dist = f64::INFINITY;

    // Departure timing only matters around moving obstacles; in a static
    // scene timed samples would just delay the plan for no benefit.
    let time_bias = if scene.entries.iter().any(|e| matches!(e.placement, Placement::Moving(_)))
    {
        params.time_bias
    } else {
        0.0
    };

    // Longest greedy extension run toward one sampled target.
    const CHAIN_CAP: usize = 64;
    // After a first connection the search continues with the horizon
    // clamped to the best arrival, so an unlucky late first hit still
    // converges toward an early one; it stops once improvements dry up.
    const IMPROVE_STALL: u64 = 2000;
    let mut since_improve: u64 = 0;

    if found.is_none() {
        let mark_reached = |n: &Node, reached: &mut Vec<bool>| {
            for (i, c) in problem_configs.iter().enumerate() {
                if !reached[i]
                    && c.dist_xy(&Configuration::at(n.x, n.y)) <= params.goal_tolerance
                {
                    reached[i] = true;
                }
            }
        };

        'search: for _ in 0..budget {
            let h_eff = match &found {
                Some((_, _, arrival)) => {
                    since_improve += 1;
                    if since_improve > IMPROVE_STALL {
                        break 'search;
                    }
                    *arrival - params.time_step
                }
                None => horizon,
            };
            planner.horizon = h_eff;

            let r: f64 = rng.random();
            let target = if r < params.goal_bias {
                goal
            } else if r < params.goal_bias + params.config_bias && !problem_configs.is_empty() {
                problem_configs[rng.random_range(0..problem_configs.len())]
            } else {
                Configuration {
                    x: rng.random_range(bounds.min_x..=bounds.max_x),
                    y: rng.random_range(bounds.min_y..=bounds.max_y),
                    heading: None,
                }
            };
            // Part of the samples pair the spatial target with a departure
            // time drawn early-biased from the window; the least-slack node
            // then idles until leaving just in time. The window subtracts
            // the onward travel to the goal, so an attempt through this
            // target can still finish before the horizon. The rest extend
            // the spatially nearest frontier immediately, with an
            // occasional random-length idle (or hard brake when moving).
            let t_go = (target.x - goal.x).hypot(target.y - goal.y) / v_max;
            let span = h_eff - t_go - depart;
            let timed = if span > 0.0 && rng.random::<f64>() < time_bias {
                let u: f64 = rng.random();
                let t_target = depart + u * u * span;
                tree.nearest_in_time(target.x, target.y, t_target, v_max).map(|i| {
                    let n = tree.nodes[i];
                    let d = (n.x - target.x).hypot(n.y - target.y);
                    (i, t_target - n.t - d / v_max)
                })
            } else {
                None
            };

            let mut cur;
            match timed {
                Some((ni, slack)) => {
                    cur = ni;
                    let node = tree.nodes[ni];
                    let k = (slack / params.time_step).floor() as u32;
                    if node.at_rest() && k >= 1 {
                        let Some(idx) = grow_edge(
                            &mut planner,
                            &mut tree,
                            cur,
                            (0.0, 0.0),
                            (node.x, node.y),
                            k,
                            h_eff,
                        ) else {
                            continue;
                        };
                        mark_reached(&tree.nodes[idx], &mut reached);
                        if let Some(hit) = connect_gate(
                            &mut planner,
                            &mut tree,
                            &mut rng,
                            idx,
                            &mut best_rest_dist,
                            h_eff,
                        ) {
                            if found.as_ref().is_none_or(|f| hit.2 < f.2) {
                                since_improve = 0;
                                found = Some(hit);
                            }
                        }
                        cur = idx;
                    }
                }
                None => {
                    cur = tree.nearest(target.x, target.y);
                    if rng.random::<f64>() < params.wait_bias {
                        let node = tree.nodes[cur];
                        let (v1, pos1, steps) = if node.at_rest() {
                            let mut k = 1u32 << rng.random_range(0..6);
                            let room = ((h_eff - node.t) / params.time_step).floor();
                            if (k as f64) > room {
                                k = room.max(0.0) as u32;
                            }
                            if k == 0 {
                                continue;
                            }
                            ((0.0, 0.0), (node.x, node.y), k)
                        } else {
                            // Brake as hard as possible; a full stop lands
                            // exactly where the decelerating arc ends.
                            let sp = node.speed();
                            if sp <= a_step {
                                let ts = sp / object.control.max_accel;
                                (
                                    (0.0, 0.0),
                                    (node.x + node.vx * ts / 2.0, node.y + node.vy * ts / 2.0),
                                    1,
                                )
                            } else {
                                let f = 1.0 - a_step / sp;
                                let v1 = (node.vx * f, node.vy * f);
                                (
                                    v1,
                                    (
                                        node.x + (node.vx + v1.0) / 2.0 * params.time_step,
                                        node.y + (node.vy + v1.1) / 2.0 * params.time_step,
                                    ),
                                    1,
                                )
                            }
                        };
                        let Some(idx) =
                            grow_edge(&mut planner, &mut tree, cur, v1, pos1, steps, h_eff)
                        else {
                            continue;
                        };
                        mark_reached(&tree.nodes[idx], &mut reached);
                        if let Some(hit) = connect_gate(
                            &mut planner,
                            &mut tree,
                            &mut rng,
                            idx,
                            &mut best_rest_dist,
                            h_eff,
                        ) {
                            if found.as_ref().is_none_or(|f| hit.2 < f.2) {
                                since_improve = 0;
                                found = Some(hit);
                            }
                        }
                        cur = idx;
                    }
                }
            }

            // Greedy run: keep stepping toward the same target until
            // blocked, like the connect variant of tree planners, so
            // long straight stretches cost one sample instead of many.
            // A blocked straight step retries at 45 degrees to either
            // side, letting runs slide around corners (a doorway edge, a
            // wall end) instead of dying against them.
            for _ in 0..CHAIN_CAP {
                let node = tree.nodes[cur];
                let (dx, dy) = (target.x - node.x, target.y - node.y);
                let d = dx.hypot(dy);
                if d < params.step / 2.0 {
                    break;
                }
                let dir = (dx / d, dy / d);
                let flip = if rng.random::<bool>() { 1.0 } else { -1.0 };
                const COS: f64 = std::f64::consts::FRAC_1_SQRT_2;
                let mut grown = None;
                for rot in [0.0, flip, -flip] {
                    let (ux, uy) = if rot == 0.0 {
                        dir
                    } else {
                        (
                            COS * (dir.0 - rot * dir.1),
                            COS * (dir.1 + rot * dir.0),
                        )
                    };
                    let v_des = (ux * v_max, uy * v_max);
                    let (ax, ay) = (v_des.0 - node.vx, v_des.1 - node.vy);
                    let an = ax.hypot(ay);
                    let v1 = if an <= a_step {
                        v_des
                    } else {
                        (node.vx + ax / an * a_step, node.vy + ay / an * a_step)
                    };
                    let pos1 = (
                        node.x + (node.vx + v1.0) / 2.0 * params.time_step,
                        node.y + (node.vy + v1.1) / 2.0 * params.time_step,
                    );
                    grown = grow_edge(&mut planner, &mut tree, cur, v1, pos1, 1, h_eff);
                    if grown.is_some() {
                        break;
                    }
                }
                let Some(idx) = grown else {
                    break;
                };
                mark_reached(&tree.nodes[idx], &mut reached);
                if let Some(hit) =
                    connect_gate(&mut planner, &mut tree, &mut rng, idx, &mut best_rest_dist, h_eff)
                {
                    if found.as_ref().is_none_or(|f| hit.2 < f.2) {
                        since_improve = 0;
                        found = Some(hit);
                    }
                }
                cur = idx;
            }
        }
    }


    let Some((idx, tail, arrival)) = found else {
        return TimedPlan { trajectory: None, reached, blockers: planner.blockers };
    };

    // Shortcut pass: the first reachable rest node along the chain with an
    // earlier analytic arrival replaces the rest of the path.
    let mut best = (idx, tail, arrival);
    for &i in &chain_of(&tree, idx) {
        if i == best.0 {
            break;
        }
        let n = tree.nodes[i];
        if !n.at_rest() {
            continue;
        }
        if let Some((tail, arrival)) = planner.direct_connect(&n) {
            if arrival < best.2 - 1e-9 {
                best = (i, tail, arrival);
                break;
            }
        }
    }

    let trajectory = assemble(&planner, &tree, best.0, best.1);
    TimedPlan { trajectory: Some(trajectory), reached, blockers: planner.blockers }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        Bounds, ControlModel, Geometry, Obstacle, Problem, SchedulingProblem, WorkspaceModel,
    };

    fn room(objects: Vec<MovableObject>, obstacles: Vec<Obstacle>) -> Problem {
        Problem {
            scheduling: SchedulingProblem::empty(),
            objects,
            workspace: WorkspaceModel {
                bounds: Bounds { min_x: 0.0, min_y: 0.0, max_x: 10.0, max_y: 6.0 },
                obstacles,
            },
            tick_seconds: 1.0,
        }
    }

    fn robot(name: &str, x: f64, y: f64) -> MovableObject {
        MovableObject {
            name: name.into(),
            geometry: Geometry::Disk { radius: 0.3 },
            control: ControlModel { max_speed: 1.0, max_accel: 1.0, model_id: "omni".into() },
            initial: Configuration::at(x, y),
        }
    }

    #[test]
    fn open_room_gives_the_exact_trapezoid_arrival() {
        let p = room(vec![robot("r", 1.0, 3.0)], vec![]);
        let params = PlannerParams::default();
        let scene = Scene::new(&p, ObjectId(0), &[Configuration::at(1.0, 3.0)], &params);
        let plan = plan_space_time(
            &scene,
            &p.objects[0],
            Configuration::at(1.0, 3.0),
            Configuration::at(5.0, 3.0),
            &[],
            2.0,
            100.0,
            10_000,
            &params,
            1,
        );
        let tr = plan.trajectory.expect("open room is solvable");
        assert!((tr.start_time() - 2.0).abs() < 1e-12);
        assert!((tr.end_time() - 7.0).abs() < 1e-9, "4 m at v=1 a=1 is 5 s, got {}", tr.end_time() - 2.0);
        let last = tr.samples.last().unwrap();
        assert!((last.x - 5.0).abs() < 1e-9 && (last.y - 3.0).abs() < 1e-9);
    }

    #[test]
    fn parked_blocker_forces_a_wait_or_detour() {
        // A parked robot sits on the straight line; the mover still gets
        // there, just not along the unimpeded optimum.
        let p = room(
            vec![robot("mover", 1.0, 3.0), robot("lump", 3.0, 3.0)],
            vec![],
        );
        let params = PlannerParams::default();
        let scene = Scene::new(
            &p,
            ObjectId(0),
            &[Configuration::at(1.0, 3.0), Configuration::at(3.0, 3.0)],
            &params,
        );
        let plan = plan_space_time(
            &scene,
            &p.objects[0],
            Configuration::at(1.0, 3.0),
            Configuration::at(5.0, 3.0),
            &[],
            0.0,
            100.0,
            20_000,
            &params,
            2,
        );
        let tr = plan.trajectory.expect("detour around a parked disk exists");
        assert!(tr.end_time() > 5.0 + 0.2, "cannot be as fast as the straight line");
        assert!(plan.blockers.contains(&ObjectId(1)), "the lump blocked some extensions");
        let last = tr.samples.last().unwrap();
        assert!((last.x - 5.0).abs() < 1e-9 && (last.y - 3.0).abs() < 1e-9);
    }

    #[test]
    fn horizon_cuts_off_unreachably_late_goals() {
        let p = room(vec![robot("r", 1.0, 3.0)], vec![]);
        let params = PlannerParams::default();
        let scene = Scene::new(&p, ObjectId(0), &[Configuration::at(1.0, 3.0)], &params);
        let plan = plan_space_time(
            &scene,
            &p.objects[0],
            Configuration::at(1.0, 3.0),
            Configuration::at(9.0, 3.0),
            &[],
            0.0,
            2.0, // 8 m cannot fit in 2 s at v=1
            2_000,
            &params,
            3,
        );
        assert!(plan.trajectory.is_none());
    }

    #[test]
    fn start_equals_goal_is_a_single_parked_sample() {
        let p = room(vec![robot("r", 1.0, 3.0)], vec![]);
        let params = PlannerParams::default();
        let scene = Scene::new(&p, ObjectId(0), &[Configuration::at(1.0, 3.0)], &params);
        let plan = plan_space_time(
            &scene,
            &p.objects[0],
            Configuration::at(1.0, 3.0),
            Configuration::at(1.0, 3.0),
            &[],
            4.0,
            100.0,
            100,
            &params,
            4,
        );
        let tr = plan.trajectory.unwrap();
        assert_eq!(tr.samples.len(), 1);
        assert!((tr.samples[0].t - 4.0).abs() < 1e-12);
    }

    #[test]
    fn moving_blocker_clears_and_the_plan_works_around_it() {
        // A committed trajectory squats on the straight line at departure
        // time and then drives away; the mover must wait or arc around,
        // so it arrives later than the unimpeded optimum of 5 s.
        let p = room(
            vec![robot("mover", 1.0, 3.0), robot("crosser", 3.0, 3.0)],
            vec![],
        );
        let params = PlannerParams::default();
        let mut scene = Scene::new(
            &p,
            ObjectId(0),
            &[Configuration::at(1.0, 3.0), Configuration::at(3.0, 3.0)],
            &params,
        );
        // The crosser idles until t=2, then drives straight up 2.5 m.
        let mut samples = vec![];
        for k in 0..=28 {
            let t = k as f64 * 0.25;
            let s = trapezoid_position(5.0, &p.objects[1].control, (t - 2.0).max(0.0));
            samples.push(Sample { t, x: 3.0, y: 3.0 + s.min(2.5), heading: None });
        }
        scene.commit(ObjectId(1), Trajectory { samples });
        let plan = plan_space_time(
            &scene,
            &p.objects[0],
            Configuration::at(1.0, 3.0),
            Configuration::at(5.0, 3.0),
            &[],
            0.0,
            100.0,
            20_000,
            &params,
            5,
        );
        let tr = plan.trajectory.expect("the line clears after a couple of seconds");
        assert!(plan.blockers.contains(&ObjectId(1)));
        assert!(tr.end_time() > 5.0 + 0.2, "got {}", tr.end_time());
        let last = tr.samples.last().unwrap();
        assert!((last.x - 5.0).abs() < 1e-9 && (last.y - 3.0).abs() < 1e-9);
    }

    #[test]
    fn same_seed_reproduces_the_same_trajectory() {
        let p = room(
            vec![robot("mover", 1.0, 3.0), robot("lump", 3.0, 3.0)],
            vec![],
        );
        let params = PlannerParams::default();
        let run = || {
            let scene = Scene::new(
                &p,
                ObjectId(0),
                &[Configuration::at(1.0, 3.0), Configuration::at(3.0, 3.0)],
                &params,
            );
            plan_space_time(
                &scene,
                &p.objects[0],
                Configuration::at(1.0, 3.0),
                Configuration::at(5.0, 3.0),
                &[],
                0.0,
                100.0,
                8_000,
                &params,
                9,
            )
            .trajectory
        };
        assert_eq!(run(), run());
    }
}
