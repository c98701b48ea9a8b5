//! Geometric layer: a rapidly exploring random tree over configurations,
//! time ignored, every other object frozen. Used to answer "is this motion
//! possible at all, and if not, what stands in the way".

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::{Configuration, MovableObject, ObjectId};

use super::{PlannerParams, Scene};

pub(crate) struct GeomPlan {
    pub found: bool,
    /// Parallel to the problem configurations passed in: true when some
    /// tree node came within `goal_tolerance`.
    pub reached: Vec<bool>,
    pub blockers: BTreeSet<ObjectId>,
}

fn lerp(a: &Configuration, b: &Configuration, w: f64) -> Configuration {
    Configuration {
        x: a.x + (b.x - a.x) * w,
        y: a.y + (b.y - a.y) * w,
        heading: match (a.heading, b.heading) {
            (None, None) => None,
            (ha, hb) => {
                let (ha, hb) = (ha.unwrap_or(0.0), hb.unwrap_or(0.0));
                Some(ha + (hb - ha) * w)
            }
        },
    }
}

/// Grows a tree from `start` toward `goal`. Success means an exact
/// collision-free connection to `goal`. The tree also keeps track of which
/// problem configurations it approached, so a failure can report what was
/// unreachable.
#[allow(clippy::too_many_arguments)]
pub(crate) fn plan_geometric(
    scene: &Scene,
    object: &MovableObject,
    start: Configuration,
    goal: Configuration,
    problem_configs: &[Configuration],
    budget: u64,
    params: &PlannerParams,
    seed: u64,
) -> GeomPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blockers = BTreeSet::new();
    let mut nodes: Vec<Configuration> = vec![start];
    let mut reached: Vec<bool> = problem_configs
        .iter()
        .map(|c| c.dist_xy(&start) <= params.goal_tolerance)
        .collect();

    // Checks the straight segment from `from` to `to`, `from` exclusive.
    let edge_free = |from: &Configuration,
                         to: &Configuration,
                         blockers: &mut BTreeSet<ObjectId>|
     -> bool {
        let len = from.dist_xy(to);
        let steps = (len / params.edge_resolution).ceil().max(1.0) as usize;
        let mut free = true;
        for k in 1..=steps {
            let cfg = lerp(from, to, k as f64 / steps as f64);
            if !scene.free_at(&object.geometry, &cfg, 0.0, Some(blockers)) {
                free = false;
                break;
            }
        }
        free
    };

    let try_goal_connect =
        |from: &Configuration, blockers: &mut BTreeSet<ObjectId>| -> bool {
            from.dist_xy(&goal) <= params.goal_tolerance && edge_free(from, &goal, blockers)
        };

    if try_goal_connect(&start, &mut blockers) {
        return GeomPlan { found: true, reached, blockers };
    }

    let bounds = &scene.workspace.bounds;
    for _ in 0..budget {
        let r: f64 = rng.random();
        let target = if r < params.goal_bias {
            goal
        } else if r < params.goal_bias + params.config_bias && !problem_configs.is_empty() {
            problem_configs[rng.random_range(0..problem_configs.len())]
        } else {
            Configuration {
                x: rng.random_range(bounds.min_x..=bounds.max_x),
                y: rng.random_range(bounds.min_y..=bounds.max_y),
                heading: goal.heading,
            }
        };

        let (ni, _) = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, n.dist_xy(&target)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let near = nodes[ni];
        let dist = near.dist_xy(&target);
        if dist < 1e-12 {
            continue;
        }
        let new = lerp(&near, &target, (params.step / dist).min(1.0));
        if !edge_free(&near, &new, &mut blockers) {
            continue;
        }
        for (i, c) in problem_configs.iter().enumerate() {
            if !reached[i] && c.dist_xy(&new) <= params.goal_tolerance {
                reached[i] = true;
            }
        }
        if try_goal_connect(&new, &mut blockers) {
            return GeomPlan { found: true, reached, blockers };
        }
        nodes.push(new);
    }

    GeomPlan { found: false, reached, blockers }
}
