//! Problem model: fluents, activities, resources, temporal constraints,
//! movable objects, and the workspace they live in.
//!
//! A scheduling problem is purely discrete (integer ticks); the surrounding
//! problem adds geometry so that activities can carry motion constraints.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! index_id {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub const fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

index_id!(
    /// Index of an activity within its problem.
    ActivityId
);
index_id!(
    /// Index of a fluent within its problem.
    FluentId
);
index_id!(
    /// Index of a resource within its problem.
    ResourceId
);
index_id!(
    /// Index of a movable object within its problem.
    ObjectId
);

/// A discrete state variable with a finite, ordered domain of symbolic values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fluent {
    pub name: String,
    /// Ordered set of symbolic values; a fluent value is an index into it.
    pub domain: Vec<String>,
    /// Index into `domain` holding at time zero.
    pub initial: usize,
}

/// A renewable resource with a fixed capacity per tick.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resource {
    pub name: String,
    pub capacity: u64,
}

/// Which endpoint of an activity a time reference is anchored to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anchor {
    Start,
    End,
}

/// A symbolic time point: an activity's start plus `offset` ticks, or its
/// end minus `offset` ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeRef {
    pub activity: ActivityId,
    pub anchor: Anchor,
    pub offset: u64,
}

impl TimeRef {
    pub const fn start_of(activity: ActivityId) -> Self {
        TimeRef { activity, anchor: Anchor::Start, offset: 0 }
    }

    pub const fn end_of(activity: ActivityId) -> Self {
        TimeRef { activity, anchor: Anchor::End, offset: 0 }
    }
}

/// Boolean formula over activity presence and time-difference atoms.
///
/// `Diff { lhs, rhs, max }` holds iff `value(lhs) - value(rhs) <= max`,
/// evaluated over the schedule's (total) start/end maps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Formula {
    True,
    False,
    Presence(ActivityId),
    Diff { lhs: TimeRef, rhs: TimeRef, max: i64 },
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn and(items: Vec<Formula>) -> Formula {
        Formula::And(items)
    }

    pub fn or(items: Vec<Formula>) -> Formula {
        Formula::Or(items)
    }

    pub fn implies(lhs: Formula, rhs: Formula) -> Formula {
        Formula::Implies(Box::new(lhs), Box::new(rhs))
    }

    /// Associated constructor, not an operator: mirrors [`Formula::and`].
    #[allow(clippy::should_implement_trait)]
    pub fn not(item: Formula) -> Formula {
        Formula::Not(Box::new(item))
    }

    /// `value(lhs) <= value(rhs)` as a difference atom.
    pub fn le(lhs: TimeRef, rhs: TimeRef) -> Formula {
        Formula::Diff { lhs, rhs, max: 0 }
    }

    /// `value(lhs) < value(rhs)` as a difference atom.
    pub fn lt(lhs: TimeRef, rhs: TimeRef) -> Formula {
        Formula::Diff { lhs, rhs, max: -1 }
    }

    /// `value(lhs) == value(rhs)` as a conjunction of two difference atoms.
    pub fn eq(lhs: TimeRef, rhs: TimeRef) -> Formula {
        Formula::And(vec![Formula::le(lhs, rhs), Formula::le(rhs, lhs)])
    }

    /// All activities referenced anywhere in the formula.
    pub fn referenced_activities(&self, out: &mut Vec<ActivityId>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Presence(a) => out.push(*a),
            Formula::Diff { lhs, rhs, .. } => {
                out.push(lhs.activity);
                out.push(rhs.activity);
            }
            Formula::Not(f) => f.referenced_activities(out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.referenced_activities(out);
                }
            }
            Formula::Implies(a, b) => {
                a.referenced_activities(out);
                b.referenced_activities(out);
            }
        }
    }
}

/// Requires `fluent == value` at every tick of the window `[from, to]`
/// whenever the owning activity is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FluentCondition {
    pub from: TimeRef,
    pub to: TimeRef,
    pub fluent: FluentId,
    /// Index into the fluent's domain.
    pub value: usize,
}

/// Sets `fluent := value` at time `at` when the owning activity is present.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Effect {
    pub at: TimeRef,
    pub fluent: FluentId,
    /// Index into the fluent's domain.
    pub value: usize,
}

/// A planar configuration. `heading` is meaningful only for geometries with
/// orientation; disks leave it `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub x: f64,
    pub y: f64,
    pub heading: Option<f64>,
}

impl Configuration {
    pub const fn at(x: f64, y: f64) -> Self {
        Configuration { x, y, heading: None }
    }

    pub fn dist_xy(&self, other: &Configuration) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn heading_or_zero(&self) -> f64 {
        self.heading.unwrap_or(0.0)
    }
}

/// Rigid body shape of a movable object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Disk { radius: f64 },
    /// Axis extents before rotation by the configuration heading.
    Rectangle { width: f64, height: f64 },
}

/// Velocity and acceleration limits plus a symbolic control model tag.
///
/// Two objects are interchangeable for planning exactly when their geometry
/// parameters and `model_id` both match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlModel {
    pub max_speed: f64,
    pub max_accel: f64,
    pub model_id: String,
}

/// A rigid body that activities may move around the workspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovableObject {
    pub name: String,
    pub geometry: Geometry,
    pub control: ControlModel,
    pub initial: Configuration,
}

impl MovableObject {
    /// Key under which objects are interchangeable: identical geometry
    /// parameters and identical control model id.
    pub fn equivalence_key(&self) -> String {
        match &self.geometry {
            Geometry::Disk { radius } => {
                format!("disk:{:.9}:{}", radius, self.control.model_id)
            }
            Geometry::Rectangle { width, height } => {
                format!("rect:{:.9}x{:.9}:{}", width, height, self.control.model_id)
            }
        }
    }
}

/// Moves `object` from `start` to `goal`; the scheduler decides when, the
/// motion planner decides how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionConstraint {
    pub object: ObjectId,
    pub start: Configuration,
    pub goal: Configuration,
}

/// A unit of work. Optional activities may be left out of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Activity {
    pub name: String,
    pub optional: bool,
    /// Inclusive duration bounds in ticks; both at least 1.
    pub duration: (u64, u64),
    /// Sparse per-resource demand, constant over the activity's span.
    pub resource_usage: Vec<(ResourceId, u64)>,
    pub conditions: Vec<FluentCondition>,
    pub effects: Vec<Effect>,
    pub motion: Option<MotionConstraint>,
}

impl Activity {
    pub fn usage_of(&self, r: ResourceId) -> u64 {
        self.resource_usage
            .iter()
            .find(|(rid, _)| *rid == r)
            .map(|(_, g)| *g)
            .unwrap_or(0)
    }
}

/// The discrete side of a problem: what must or may happen, and when.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulingProblem {
    pub fluents: Vec<Fluent>,
    pub resources: Vec<Resource>,
    pub activities: Vec<Activity>,
    pub constraints: Vec<Formula>,
    /// Selects the continuity encoding: configuration fluents when true,
    /// pure ordering formulas when false (which requires `fluents` empty).
    pub use_fluents: bool,
}

impl SchedulingProblem {
    pub fn empty() -> Self {
        SchedulingProblem {
            fluents: Vec::new(),
            resources: Vec::new(),
            activities: Vec::new(),
            constraints: Vec::new(),
            use_fluents: false,
        }
    }
}

/// Axis-aligned workspace bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

/// Convex polygonal obstacle, vertices in counter-clockwise order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub vertices: Vec<(f64, f64)>,
}

/// The planar world shared by all movable objects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceModel {
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
}

/// A full problem instance: discrete scheduling plus geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub scheduling: SchedulingProblem,
    pub objects: Vec<MovableObject>,
    pub workspace: WorkspaceModel,
    /// Seconds of wall time represented by one scheduler tick.
    pub tick_seconds: f64,
}

impl Problem {
    /// All distinct configurations mentioned by motion constraints, in a
    /// deterministic order. Object initial configurations are not included.
    pub fn problem_configurations(&self) -> Vec<Configuration> {
        let mut out: Vec<Configuration> = Vec::new();
        for a in &self.scheduling.activities {
            if let Some(mc) = &a.motion {
                for c in [mc.start, mc.goal] {
                    if !out.iter().any(|q| config_eq(q, &c)) {
                        out.push(c);
                    }
                }
            }
        }
        out
    }

    pub fn activity_id_by_name(&self, name: &str) -> Option<ActivityId> {
        self.scheduling
            .activities
            .iter()
            .position(|a| a.name == name)
            .map(ActivityId)
    }

    pub fn object_id_by_name(&self, name: &str) -> Option<ObjectId> {
        self.objects.iter().position(|o| o.name == name).map(ObjectId)
    }
}

/// Exact configuration equality; generators and refinements reuse the same
/// constants, so bitwise comparison is the intended semantics.
pub fn config_eq(a: &Configuration, b: &Configuration) -> bool {
    a.x == b.x && a.y == b.y && a.heading_or_zero() == b.heading_or_zero()
}

/// Latest tick any schedule for this problem can use: the sum of all
/// duration upper bounds. Grows monotonically as activities are added.
pub fn horizon(sp: &SchedulingProblem) -> u64 {
    sp.activities.iter().map(|a| a.duration.1).sum()
}

/// A start/end/presence assignment for every activity of a problem.
///
/// Start and end are total maps: absent activities still carry values so
/// that difference atoms remain well defined. Solvers and oracles use the
/// canonical assignment (start 0, minimal duration) for absent activities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub present: Vec<bool>,
    pub start: Vec<u64>,
    pub end: Vec<u64>,
}

impl Schedule {
    /// All-absent schedule with canonical timing for `sp`.
    pub fn empty_for(sp: &SchedulingProblem) -> Schedule {
        let n = sp.activities.len();
        let mut s = Schedule {
            present: vec![false; n],
            start: vec![0; n],
            end: vec![0; n],
        };
        for (i, a) in sp.activities.iter().enumerate() {
            s.end[i] = a.duration.0;
        }
        s
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn is_present(&self, a: ActivityId) -> bool {
        self.present[a.index()]
    }

    /// Concrete tick of a symbolic time point; may be negative when the
    /// offset reaches past an end anchor.
    pub fn value_of(&self, t: &TimeRef) -> i64 {
        let i = t.activity.index();
        match t.anchor {
            Anchor::Start => self.start[i] as i64 + t.offset as i64,
            Anchor::End => self.end[i] as i64 - t.offset as i64,
        }
    }

    /// Restrict to the first `n` activities (drops encoding helpers).
    pub fn truncated(&self, n: usize) -> Schedule {
        Schedule {
            present: self.present[..n].to_vec(),
            start: self.start[..n].to_vec(),
            end: self.end[..n].to_vec(),
        }
    }
}

/// Timed configuration sample along a trajectory; `t` is in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: Option<f64>,
}

impl Sample {
    pub fn configuration(&self) -> Configuration {
        Configuration { x: self.x, y: self.y, heading: self.heading }
    }
}

/// Piecewise-linear motion of one object over absolute seconds. The object
/// rests at the final sample after the trajectory ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    /// Interpolated configuration at time `t`, clamped to the sample range.
    pub fn config_at(&self, t: f64) -> Configuration {
        assert!(!self.samples.is_empty(), "trajectory has no samples");
        let first = &self.samples[0];
        if t <= first.t {
            return first.configuration();
        }
        let last = self.samples.last().unwrap();
        if t >= last.t {
            return last.configuration();
        }
        let mut hi = 1;
        while self.samples[hi].t < t {
            hi += 1;
        }
        let a = &self.samples[hi - 1];
        let b = &self.samples[hi];
        let span = b.t - a.t;
        let w = if span <= 0.0 { 0.0 } else { (t - a.t) / span };
        let heading = match (a.heading, b.heading) {
            (Some(ha), Some(hb)) => Some(ha + (hb - ha) * w),
            (h, None) | (None, h) => h,
        };
        Configuration {
            x: a.x + (b.x - a.x) * w,
            y: a.y + (b.y - a.y) * w,
            heading,
        }
    }

    pub fn start_time(&self) -> f64 {
        self.samples.first().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn end_time(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }
}

/// A schedule decorated with one trajectory per present motion activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub schedule: Schedule,
    /// Indexed like the problem's activities; `None` for activities without
    /// motion and for absent activities.
    pub trajectories: Vec<Option<Trajectory>>,
}

/// One structural defect found by [`validate_problem`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemError {
    /// Name of the offending entity (activity, fluent, object, ...).
    pub entity: String,
    pub message: String,
}

impl fmt::Display for ProblemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

fn check_time_ref(
    t: &TimeRef,
    n_activities: usize,
    entity: &str,
    what: &str,
    errors: &mut Vec<ProblemError>,
) {
    if t.activity.index() >= n_activities {
        errors.push(ProblemError {
            entity: entity.to_string(),
            message: format!("{what} references unknown activity #{}", t.activity),
        });
    }
}

fn check_formula(
    f: &Formula,
    n_activities: usize,
    entity: &str,
    errors: &mut Vec<ProblemError>,
) {
    match f {
        Formula::True | Formula::False => {}
        Formula::Presence(a) => {
            if a.index() >= n_activities {
                errors.push(ProblemError {
                    entity: entity.to_string(),
                    message: format!("presence atom references unknown activity #{a}"),
                });
            }
        }
        Formula::Diff { lhs, rhs, .. } => {
            check_time_ref(lhs, n_activities, entity, "difference atom", errors);
            check_time_ref(rhs, n_activities, entity, "difference atom", errors);
        }
        Formula::Not(g) => check_formula(g, n_activities, entity, errors),
        Formula::And(gs) | Formula::Or(gs) => {
            for g in gs {
                check_formula(g, n_activities, entity, errors);
            }
        }
        Formula::Implies(a, b) => {
            check_formula(a, n_activities, entity, errors);
            check_formula(b, n_activities, entity, errors);
        }
    }
}

/// Structural validation of a full problem instance. Returns every defect
/// found; an empty list means the problem is well formed.
pub fn validate_problem(p: &Problem) -> Vec<ProblemError> {
    let mut errors = Vec::new();
    let sp = &p.scheduling;
    let n_act = sp.activities.len();

    if !(p.tick_seconds > 0.0 && p.tick_seconds.is_finite()) {
        errors.push(ProblemError {
            entity: "problem".to_string(),
            message: format!("tick_seconds must be positive and finite, got {}", p.tick_seconds),
        });
    }
    let b = &p.workspace.bounds;
    if !(b.min_x < b.max_x && b.min_y < b.max_y) {
        errors.push(ProblemError {
            entity: "workspace".to_string(),
            message: "bounds must have positive extent".to_string(),
        });
    }
    for (i, obs) in p.workspace.obstacles.iter().enumerate() {
        if obs.vertices.len() < 3 {
            errors.push(ProblemError {
                entity: format!("obstacle #{i}"),
                message: "needs at least 3 vertices".to_string(),
            });
        }
    }

    if !sp.use_fluents && !sp.fluents.is_empty() {
        errors.push(ProblemError {
            entity: "problem".to_string(),
            message: "use_fluents is false but fluents are declared".to_string(),
        });
    }
    for fl in &sp.fluents {
        if fl.domain.is_empty() {
            errors.push(ProblemError {
                entity: fl.name.clone(),
                message: "fluent domain is empty".to_string(),
            });
        } else if fl.initial >= fl.domain.len() {
            errors.push(ProblemError {
                entity: fl.name.clone(),
                message: format!(
                    "initial value index {} outside domain of size {}",
                    fl.initial,
                    fl.domain.len()
                ),
            });
        }
    }
    for r in &sp.resources {
        if r.capacity == 0 {
            errors.push(ProblemError {
                entity: r.name.clone(),
                message: "resource capacity must be at least 1".to_string(),
            });
        }
    }

    for o in &p.objects {
        let geom_ok = match &o.geometry {
            Geometry::Disk { radius } => *radius > 0.0,
            Geometry::Rectangle { width, height } => *width > 0.0 && *height > 0.0,
        };
        if !geom_ok {
            errors.push(ProblemError {
                entity: o.name.clone(),
                message: "geometry extents must be positive".to_string(),
            });
        }
        if !(o.control.max_speed > 0.0 && o.control.max_accel > 0.0) {
            errors.push(ProblemError {
                entity: o.name.clone(),
                message: "control limits must be positive".to_string(),
            });
        }
    }

    for (i, a) in sp.activities.iter().enumerate() {
        let id = ActivityId(i);
        if a.duration.0 < 1 {
            errors.push(ProblemError {
                entity: a.name.clone(),
                message: "duration lower bound must be at least 1 tick".to_string(),
            });
        }
        if a.duration.0 > a.duration.1 {
            errors.push(ProblemError {
                entity: a.name.clone(),
                message: format!(
                    "duration bounds [{}, {}] are inverted",
                    a.duration.0, a.duration.1
                ),
            });
        }
        for (rid, g) in &a.resource_usage {
            if rid.index() >= sp.resources.len() {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: format!("uses unknown resource #{rid}"),
                });
            } else if *g > sp.resources[rid.index()].capacity {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: format!(
                        "demand {} exceeds capacity {} of resource {}",
                        g,
                        sp.resources[rid.index()].capacity,
                        sp.resources[rid.index()].name
                    ),
                });
            }
        }
        for c in &a.conditions {
            if c.fluent.index() >= sp.fluents.len() {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: format!("condition references unknown fluent #{}", c.fluent),
                });
            } else if c.value >= sp.fluents[c.fluent.index()].domain.len() {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: format!(
                        "condition value index {} outside domain of fluent {}",
                        c.value,
                        sp.fluents[c.fluent.index()].name
                    ),
                });
            }
            if c.from.activity != id || c.to.activity != id {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: "condition window must be anchored to the owning activity"
                        .to_string(),
                });
            }
        }
        for e in &a.effects {
            if e.fluent.index() >= sp.fluents.len() {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: format!("effect references unknown fluent #{}", e.fluent),
                });
            } else if e.value >= sp.fluents[e.fluent.index()].domain.len() {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: format!(
                        "effect value index {} outside domain of fluent {}",
                        e.value,
                        sp.fluents[e.fluent.index()].name
                    ),
                });
            }
            if e.at.activity != id {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: "effect time must be anchored to the owning activity".to_string(),
                });
            }
        }
        if let Some(mc) = &a.motion {
            if mc.object.index() >= p.objects.len() {
                errors.push(ProblemError {
                    entity: a.name.clone(),
                    message: format!("motion references unknown object #{}", mc.object),
                });
            } else {
                // Moving an object claims that object's unary resource slot:
                // the activity must demand exactly 1 of a resource named
                // after the object.
                let obj_name = &p.objects[mc.object.index()].name;
                let claimed = sp
                    .resources
                    .iter()
                    .position(|r| &r.name == obj_name)
                    .map(|ri| a.usage_of(ResourceId(ri)))
                    .unwrap_or(0);
                if claimed != 1 {
                    errors.push(ProblemError {
                        entity: a.name.clone(),
                        message: format!(
                            "moves object {obj_name} but does not claim its unary resource"
                        ),
                    });
                }
            }
        }
    }

    let mut seen: HashMap<&str, ()> = HashMap::new();
    for a in &sp.activities {
        if seen.insert(a.name.as_str(), ()).is_some() {
            errors.push(ProblemError {
                entity: a.name.clone(),
                message: "duplicate activity name".to_string(),
            });
        }
    }

    for (i, f) in sp.constraints.iter().enumerate() {
        check_formula(f, n_act, &format!("constraint #{i}"), &mut errors);
    }

    errors
}
