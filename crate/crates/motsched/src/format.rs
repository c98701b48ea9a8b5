//! Problem and plan file formats.
//!
//! Files are strict JSON: unknown fields are rejected so that instance files
//! stay self-certifying. Entities reference each other by name in files and
//! by index in memory; this module resolves both directions. Every file
//! carries `"format_version": 1`.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    Activity, ActivityId, Anchor, Bounds, Configuration, ControlModel, Effect, Fluent,
    FluentCondition, FluentId, Formula, Geometry, MotionConstraint, MovableObject, ObjectId,
    Obstacle, Plan, Problem, Resource, ResourceId, Sample, Schedule, SchedulingProblem, TimeRef,
    Trajectory, WorkspaceModel,
};

/// Version stamped into and required of every problem and plan file.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("syntax error: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("unsupported format_version {found}, expected {FORMAT_VERSION}")]
    Version { found: u32 },
    #[error("{path}: {message}")]
    Resolve { path: String, message: String },
}

fn resolve_err<T>(path: impl Into<String>, message: impl Into<String>) -> Result<T, FormatError> {
    Err(FormatError::Resolve { path: path.into(), message: message.into() })
}

// ---------------------------------------------------------------------------
// File mirror types
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    format_version: u32,
    tick_seconds: f64,
    #[serde(default)]
    use_fluents: bool,
    #[serde(default)]
    fluents: Vec<FluentFile>,
    #[serde(default)]
    resources: Vec<ResourceFile>,
    #[serde(default)]
    objects: Vec<ObjectFile>,
    workspace: WorkspaceFile,
    #[serde(default)]
    activities: Vec<ActivityFile>,
    #[serde(default)]
    constraints: Vec<FormulaFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FluentFile {
    name: String,
    domain: Vec<String>,
    initial: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResourceFile {
    name: String,
    capacity: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum GeometryFile {
    Disk { radius: f64 },
    Rectangle { width: f64, height: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    heading: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ControlFile {
    max_speed: f64,
    max_accel: f64,
    model_id: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectFile {
    name: String,
    geometry: GeometryFile,
    control: ControlFile,
    initial: ConfigFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundsFile {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleFile {
    vertices: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkspaceFile {
    bounds: BoundsFile,
    #[serde(default)]
    obstacles: Vec<ObstacleFile>,
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct TimeRefFile {
    activity: String,
    anchor: Anchor,
    #[serde(default)]
    offset: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionFile {
    from: TimeRefFile,
    to: TimeRefFile,
    fluent: String,
    value: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EffectFile {
    at: TimeRefFile,
    fluent: String,
    value: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionFile {
    object: String,
    start: ConfigFile,
    goal: ConfigFile,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActivityFile {
    name: String,
    optional: bool,
    duration: [u64; 2],
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    resources: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    conditions: Vec<ConditionFile>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    effects: Vec<EffectFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    motion: Option<MotionFile>,
}

#[derive(Serialize, Deserialize, Clone)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum FormulaFile {
    True,
    False,
    Presence(String),
    Diff {
        lhs: TimeRefFile,
        rhs: TimeRefFile,
        max: i64,
    },
    Not(Box<FormulaFile>),
    And(Vec<FormulaFile>),
    Or(Vec<FormulaFile>),
    Implies {
        #[serde(rename = "if")]
        cond: Box<FormulaFile>,
        then: Box<FormulaFile>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    format_version: u32,
    activities: Vec<PlanActivityFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanActivityFile {
    name: String,
    present: bool,
    start: u64,
    end: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trajectory: Option<TrajectoryFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectoryFile {
    /// Each sample is `[t, x, y]` or `[t, x, y, heading]`, t in seconds.
    samples: Vec<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// Name resolution
// ---------------------------------------------------------------------------

struct Names {
    activities: HashMap<String, ActivityId>,
    fluents: HashMap<String, FluentId>,
    resources: HashMap<String, ResourceId>,
    objects: HashMap<String, ObjectId>,
}

fn build_map<T, I>(
    items: &[T],
    name_of: impl Fn(&T) -> &str,
    mk: impl Fn(usize) -> I,
    what: &str,
) -> Result<HashMap<String, I>, FormatError> {
    let mut m = HashMap::new();
    for (i, item) in items.iter().enumerate() {
        let n = name_of(item);
        if m.insert(n.to_string(), mk(i)).is_some() {
            return resolve_err(format!("{what}[{i}]"), format!("duplicate {what} name `{n}`"));
        }
    }
    Ok(m)
}

impl Names {
    fn build(f: &ProblemFile) -> Result<Self, FormatError> {
        Ok(Names {
            activities: build_map(&f.activities, |a| &a.name, ActivityId, "activities")?,
            fluents: build_map(&f.fluents, |x| &x.name, FluentId, "fluents")?,
            resources: build_map(&f.resources, |x| &x.name, ResourceId, "resources")?,
            objects: build_map(&f.objects, |x| &x.name, ObjectId, "objects")?,
        })
    }

    fn activity(&self, name: &str, path: &str) -> Result<ActivityId, FormatError> {
        match self.activities.get(name) {
            Some(id) => Ok(*id),
            None => resolve_err(path, format!("unknown activity `{name}`")),
        }
    }

    fn fluent(&self, name: &str, path: &str) -> Result<FluentId, FormatError> {
        match self.fluents.get(name) {
            Some(id) => Ok(*id),
            None => resolve_err(path, format!("unknown fluent `{name}`")),
        }
    }

    fn object(&self, name: &str, path: &str) -> Result<ObjectId, FormatError> {
        match self.objects.get(name) {
            Some(id) => Ok(*id),
            None => resolve_err(path, format!("unknown object `{name}`")),
        }
    }
}

fn resolve_timeref(t: &TimeRefFile, names: &Names, path: &str) -> Result<TimeRef, FormatError> {
    Ok(TimeRef {
        activity: names.activity(&t.activity, path)?,
        anchor: t.anchor,
        offset: t.offset,
    })
}

fn resolve_fluent_value(
    fluents: &[FluentFile],
    fluent: FluentId,
    value: &str,
    path: &str,
) -> Result<usize, FormatError> {
    let f = &fluents[fluent.index()];
    match f.domain.iter().position(|v| v == value) {
        Some(i) => Ok(i),
        None => resolve_err(path, format!("value `{value}` is not in the domain of `{}`", f.name)),
    }
}

fn resolve_formula(f: &FormulaFile, names: &Names, path: &str) -> Result<Formula, FormatError> {
    Ok(match f {
        FormulaFile::True => Formula::True,
        FormulaFile::False => Formula::False,
        FormulaFile::Presence(a) => Formula::Presence(names.activity(a, path)?),
        FormulaFile::Diff { lhs, rhs, max } => Formula::Diff {
            lhs: resolve_timeref(lhs, names, path)?,
            rhs: resolve_timeref(rhs, names, path)?,
            max: *max,
        },
        FormulaFile::Not(g) => Formula::Not(Box::new(resolve_formula(g, names, path)?)),
        FormulaFile::And(gs) => Formula::And(
            gs.iter().map(|g| resolve_formula(g, names, path)).collect::<Result<_, _>>()?,
        ),
        FormulaFile::Or(gs) => Formula::Or(
            gs.iter().map(|g| resolve_formula(g, names, path)).collect::<Result<_, _>>()?,
        ),
        FormulaFile::Implies { cond, then } => Formula::Implies(
            Box::new(resolve_formula(cond, names, path)?),
            Box::new(resolve_formula(then, names, path)?),
        ),
    })
}

fn config_of(c: &ConfigFile) -> Configuration {
    Configuration { x: c.x, y: c.y, heading: c.heading }
}

/// Parses a problem file. Name resolution failures are reported with a
/// field path; semantic checks are left to problem validation.
pub fn parse_problem(text: &str) -> Result<Problem, FormatError> {
    let file: ProblemFile = serde_json::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(FormatError::Version { found: file.format_version });
    }
    let names = Names::build(&file)?;

    let fluents = file
        .fluents
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let path = format!("fluents[{i}].initial");
            let initial = match f.domain.iter().position(|v| v == &f.initial) {
                Some(ix) => ix,
                None => {
                    return resolve_err(
                        path,
                        format!("initial value `{}` is not in the domain", f.initial),
                    )
                }
            };
            Ok(Fluent { name: f.name.clone(), domain: f.domain.clone(), initial })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;

    let resources = file
        .resources
        .iter()
        .map(|r| Resource { name: r.name.clone(), capacity: r.capacity })
        .collect();

    let objects = file
        .objects
        .iter()
        .map(|o| MovableObject {
            name: o.name.clone(),
            geometry: match o.geometry {
                GeometryFile::Disk { radius } => Geometry::Disk { radius },
                GeometryFile::Rectangle { width, height } => Geometry::Rectangle { width, height },
            },
            control: ControlModel {
                max_speed: o.control.max_speed,
                max_accel: o.control.max_accel,
                model_id: o.control.model_id.clone(),
            },
            initial: config_of(&o.initial),
        })
        .collect();

    let mut activities = Vec::with_capacity(file.activities.len());
    for (i, a) in file.activities.iter().enumerate() {
        let mut resource_usage = Vec::new();
        for (rname, demand) in &a.resources {
            let path = format!("activities[{i}].resources.{rname}");
            match names.resources.get(rname) {
                Some(id) => resource_usage.push((*id, *demand)),
                None => return resolve_err(path, format!("unknown resource `{rname}`")),
            }
        }
        resource_usage.sort_by_key(|(r, _)| *r);
        let mut conditions = Vec::new();
        for (ci, c) in a.conditions.iter().enumerate() {
            let path = format!("activities[{i}].conditions[{ci}]");
            let fluent = names.fluent(&c.fluent, &path)?;
            conditions.push(FluentCondition {
                from: resolve_timeref(&c.from, &names, &path)?,
                to: resolve_timeref(&c.to, &names, &path)?,
                fluent,
                value: resolve_fluent_value(&file.fluents, fluent, &c.value, &path)?,
            });
        }
        let mut effects = Vec::new();
        for (ei, e) in a.effects.iter().enumerate() {
            let path = format!("activities[{i}].effects[{ei}]");
            let fluent = names.fluent(&e.fluent, &path)?;
            effects.push(Effect {
                at: resolve_timeref(&e.at, &names, &path)?,
                fluent,
                value: resolve_fluent_value(&file.fluents, fluent, &e.value, &path)?,
            });
        }
        let motion = match &a.motion {
            None => None,
            Some(m) => {
                let path = format!("activities[{i}].motion.object");
                Some(MotionConstraint {
                    object: names.object(&m.object, &path)?,
                    start: config_of(&m.start),
                    goal: config_of(&m.goal),
                })
            }
        };
        activities.push(Activity {
            name: a.name.clone(),
            optional: a.optional,
            duration: (a.duration[0], a.duration[1]),
            resource_usage,
            conditions,
            effects,
            motion,
        });
    }

    let constraints = file
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| resolve_formula(c, &names, &format!("constraints[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Problem {
        scheduling: SchedulingProblem {
            fluents,
            resources,
            activities,
            constraints,
            use_fluents: file.use_fluents,
        },
        objects,
        workspace: WorkspaceModel {
            bounds: Bounds {
                min_x: file.workspace.bounds.x_min,
                min_y: file.workspace.bounds.y_min,
                max_x: file.workspace.bounds.x_max,
                max_y: file.workspace.bounds.y_max,
            },
            obstacles: file
                .workspace
                .obstacles
                .iter()
                .map(|o| Obstacle { vertices: o.vertices.iter().map(|v| (v[0], v[1])).collect() })
                .collect(),
        },
        tick_seconds: file.tick_seconds,
    })
}

// ---------------------------------------------------------------------------
// Serialization (memory -> file)
// ---------------------------------------------------------------------------

fn file_config(c: &Configuration) -> ConfigFile {
    ConfigFile { x: c.x, y: c.y, heading: c.heading }
}

fn file_timeref(t: &TimeRef, p: &Problem) -> TimeRefFile {
    TimeRefFile {
        activity: p.scheduling.activities[t.activity.index()].name.clone(),
        anchor: t.anchor,
        offset: t.offset,
    }
}

fn file_formula(f: &Formula, p: &Problem) -> FormulaFile {
    match f {
        Formula::True => FormulaFile::True,
        Formula::False => FormulaFile::False,
        Formula::Presence(a) => {
            FormulaFile::Presence(p.scheduling.activities[a.index()].name.clone())
        }
        Formula::Diff { lhs, rhs, max } => FormulaFile::Diff {
            lhs: file_timeref(lhs, p),
            rhs: file_timeref(rhs, p),
            max: *max,
        },
        Formula::Not(g) => FormulaFile::Not(Box::new(file_formula(g, p))),
        Formula::And(gs) => FormulaFile::And(gs.iter().map(|g| file_formula(g, p)).collect()),
        Formula::Or(gs) => FormulaFile::Or(gs.iter().map(|g| file_formula(g, p)).collect()),
        Formula::Implies(a, b) => FormulaFile::Implies {
            cond: Box::new(file_formula(a, p)),
            then: Box::new(file_formula(b, p)),
        },
    }
}

fn problem_file(p: &Problem) -> ProblemFile {
    let sp = &p.scheduling;
    ProblemFile {
        format_version: FORMAT_VERSION,
        tick_seconds: p.tick_seconds,
        use_fluents: sp.use_fluents,
        fluents: sp
            .fluents
            .iter()
            .map(|f| FluentFile {
                name: f.name.clone(),
                domain: f.domain.clone(),
                initial: f.domain[f.initial].clone(),
            })
            .collect(),
        resources: sp
            .resources
            .iter()
            .map(|r| ResourceFile { name: r.name.clone(), capacity: r.capacity })
            .collect(),
        objects: p
            .objects
            .iter()
            .map(|o| ObjectFile {
                name: o.name.clone(),
                geometry: match o.geometry {
                    Geometry::Disk { radius } => GeometryFile::Disk { radius },
                    Geometry::Rectangle { width, height } => {
                        GeometryFile::Rectangle { width, height }
                    }
                },
                control: ControlFile {
                    max_speed: o.control.max_speed,
                    max_accel: o.control.max_accel,
                    model_id: o.control.model_id.clone(),
                },
                initial: file_config(&o.initial),
            })
            .collect(),
        workspace: WorkspaceFile {
            bounds: BoundsFile {
                x_min: p.workspace.bounds.min_x,
                y_min: p.workspace.bounds.min_y,
                x_max: p.workspace.bounds.max_x,
                y_max: p.workspace.bounds.max_y,
            },
            obstacles: p
                .workspace
                .obstacles
                .iter()
                .map(|o| ObstacleFile { vertices: o.vertices.iter().map(|&(x, y)| [x, y]).collect() })
                .collect(),
        },
        activities: sp
            .activities
            .iter()
            .map(|a| ActivityFile {
                name: a.name.clone(),
                optional: a.optional,
                duration: [a.duration.0, a.duration.1],
                resources: a
                    .resource_usage
                    .iter()
                    .map(|(r, g)| (sp.resources[r.index()].name.clone(), *g))
                    .collect(),
                conditions: a
                    .conditions
                    .iter()
                    .map(|c| ConditionFile {
                        from: file_timeref(&c.from, p),
                        to: file_timeref(&c.to, p),
                        fluent: sp.fluents[c.fluent.index()].name.clone(),
                        value: sp.fluents[c.fluent.index()].domain[c.value].clone(),
                    })
                    .collect(),
                effects: a
                    .effects
                    .iter()
                    .map(|e| EffectFile {
                        at: file_timeref(&e.at, p),
                        fluent: sp.fluents[e.fluent.index()].name.clone(),
                        value: sp.fluents[e.fluent.index()].domain[e.value].clone(),
                    })
                    .collect(),
                motion: a.motion.as_ref().map(|m| MotionFile {
                    object: p.objects[m.object.index()].name.clone(),
                    start: file_config(&m.start),
                    goal: file_config(&m.goal),
                }),
            })
            .collect(),
        constraints: sp.constraints.iter().map(|c| file_formula(c, p)).collect(),
    }
}

/// Serializes a problem to its canonical pretty-printed JSON form.
pub fn problem_to_json(p: &Problem) -> String {
    let mut s = serde_json::to_string_pretty(&problem_file(p)).expect("problem serializes");
    s.push('\n');
    s
}

/// Serializes a plan against its problem (activity ids become names).
pub fn plan_to_json(plan: &Plan, p: &Problem) -> String {
    let file = PlanFile {
        format_version: FORMAT_VERSION,
        activities: p
            .scheduling
            .activities
            .iter()
            .enumerate()
            .map(|(i, a)| PlanActivityFile {
                name: a.name.clone(),
                present: plan.schedule.present[i],
                start: plan.schedule.start[i],
                end: plan.schedule.end[i],
                trajectory: plan.trajectories.get(i).and_then(|t| t.as_ref()).map(|t| {
                    TrajectoryFile {
                        samples: t
                            .samples
                            .iter()
                            .map(|s| match s.heading {
                                Some(h) => vec![s.t, s.x, s.y, h],
                                None => vec![s.t, s.x, s.y],
                            })
                            .collect(),
                    }
                }),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("plan serializes");
    s.push('\n');
    s
}

/// Parses a plan file against its problem. Every activity of the problem
/// must appear exactly once; trajectories are attached by activity name.
pub fn parse_plan(text: &str, p: &Problem) -> Result<Plan, FormatError> {
    let file: PlanFile = serde_json::from_str(text)?;
    if file.format_version != FORMAT_VERSION {
        return Err(FormatError::Version { found: file.format_version });
    }
    let n = p.scheduling.activities.len();
    let mut schedule = Schedule {
        present: vec![false; n],
        start: vec![0; n],
        end: vec![0; n],
    };
    let mut trajectories: Vec<Option<Trajectory>> = vec![None; n];
    let mut seen = vec![false; n];
    for (i, pa) in file.activities.iter().enumerate() {
        let path = format!("activities[{i}]");
        let id = match p.activity_id_by_name(&pa.name) {
            Some(id) => id,
            None => return resolve_err(path, format!("unknown activity `{}`", pa.name)),
        };
        if seen[id.index()] {
            return resolve_err(path, format!("duplicate entry for activity `{}`", pa.name));
        }
        seen[id.index()] = true;
        schedule.present[id.index()] = pa.present;
        schedule.start[id.index()] = pa.start;
        schedule.end[id.index()] = pa.end;
        if let Some(tf) = &pa.trajectory {
            let mut samples = Vec::with_capacity(tf.samples.len());
            for (si, raw) in tf.samples.iter().enumerate() {
                let spath = format!("activities[{i}].trajectory.samples[{si}]");
                match raw.as_slice() {
                    [t, x, y] => samples.push(Sample { t: *t, x: *x, y: *y, heading: None }),
                    [t, x, y, h] => {
                        samples.push(Sample { t: *t, x: *x, y: *y, heading: Some(*h) })
                    }
                    _ => {
                        return resolve_err(
                            spath,
                            format!("sample must have 3 or 4 numbers, got {}", raw.len()),
                        )
                    }
                }
            }
            trajectories[id.index()] = Some(Trajectory { samples });
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return resolve_err(
            "activities",
            format!("missing entry for activity `{}`", p.scheduling.activities[missing].name),
        );
    }
    Ok(Plan { schedule, trajectories })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_problem;

    /// A small instance touching every format feature: fluents, conditions,
    /// effects, motion, mixed geometry, an obstacle, and nested formulas.
    fn full_problem() -> Problem {
        let text = r#"{
  "format_version": 1,
  "tick_seconds": 1.0,
  "use_fluents": true,
  "fluents": [
    {"name": "door", "domain": ["closed", "open"], "initial": "closed"}
  ],
  "resources": [
    {"name": "robot", "capacity": 1},
    {"name": "slab", "capacity": 1}
  ],
  "objects": [
    {"name": "robot",
     "geometry": {"disk": {"radius": 0.3}},
     "control": {"max_speed": 1.0, "max_accel": 1.0, "model_id": "omni-v1"},
     "initial": {"x": 1.0, "y": 1.0}},
    {"name": "slab",
     "geometry": {"rectangle": {"width": 1.8, "height": 0.2}},
     "control": {"max_speed": 2.0, "max_accel": 4.0, "model_id": "slide-v1"},
     "initial": {"x": 5.0, "y": 2.0, "heading": 1.5707963267948966}}
  ],
  "workspace": {
    "bounds": {"x_min": 0.0, "y_min": 0.0, "x_max": 10.0, "y_max": 6.0},
    "obstacles": [
      {"vertices": [[4.0, 0.0], [4.4, 0.0], [4.4, 1.0], [4.0, 1.0]]}
    ]
  },
  "activities": [
    {"name": "go", "optional": true, "duration": [2, 12],
     "resources": {"robot": 1},
     "conditions": [
       {"from": {"activity": "go", "anchor": "start", "offset": 0},
        "to": {"activity": "go", "anchor": "end", "offset": 0},
        "fluent": "door", "value": "open"}
     ],
     "motion": {"object": "robot",
                "start": {"x": 1.0, "y": 1.0},
                "goal": {"x": 9.0, "y": 1.0}}},
    {"name": "open_door", "optional": true, "duration": [2, 4],
     "resources": {"slab": 1},
     "effects": [
       {"at": {"activity": "open_door", "anchor": "end", "offset": 0},
        "fluent": "door", "value": "open"}
     ],
     "motion": {"object": "slab",
                "start": {"x": 5.0, "y": 2.0, "heading": 1.5707963267948966},
                "goal": {"x": 5.0, "y": 3.8, "heading": 1.5707963267948966}}}
  ],
  "constraints": [
    {"presence": "go"},
    {"implies": {"if": {"presence": "go"},
                 "then": {"or": [{"presence": "open_door"}, "false"]}}},
    {"not": {"diff": {"lhs": {"activity": "go", "anchor": "end", "offset": 0},
                      "rhs": {"activity": "open_door", "anchor": "start", "offset": 1},
                      "max": -3}}},
    {"and": ["true"]}
  ]
}"#;
        parse_problem(text).expect("fixture parses")
    }

    #[test]
    fn parse_serialize_round_trip_is_identity() {
        let p = full_problem();
        assert!(validate_problem(&p).is_empty(), "fixture must be well formed");
        let json = problem_to_json(&p);
        let p2 = parse_problem(&json).expect("serialized form parses");
        assert_eq!(p, p2);
        assert_eq!(problem_to_json(&p2), json, "second round trip is stable");
    }

    #[test]
    fn empty_input_is_a_syntax_error() {
        assert!(matches!(parse_problem(""), Err(FormatError::Syntax(_))));
        assert!(matches!(parse_problem("{}"), Err(FormatError::Syntax(_))));
    }

    #[test]
    fn unknown_field_is_rejected_by_name() {
        let p = full_problem();
        let json = problem_to_json(&p).replace("\"tick_seconds\"", "\"tick_secondz\"");
        let err = parse_problem(&json).unwrap_err();
        assert!(
            err.to_string().contains("tick_secondz"),
            "error should name the unknown field: {err}"
        );
    }

    #[test]
    fn wrong_version_is_rejected() {
        let p = full_problem();
        let json = problem_to_json(&p).replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(parse_problem(&json), Err(FormatError::Version { found: 2 })));
    }

    #[test]
    fn unknown_names_are_reported_with_a_path() {
        let p = full_problem();
        let json = problem_to_json(&p).replace("\"presence\": \"go\"", "\"presence\": \"gone\"");
        let err = parse_problem(&json).unwrap_err().to_string();
        assert!(err.contains("constraints[0]") && err.contains("gone"), "{err}");

        let json = problem_to_json(&p).replace("\"value\": \"open\"", "\"value\": \"ajar\"");
        let err = parse_problem(&json).unwrap_err().to_string();
        assert!(err.contains("ajar"), "{err}");
    }

    #[test]
    fn duplicate_activity_names_are_rejected() {
        let p = full_problem();
        let json = problem_to_json(&p).replace("\"name\": \"open_door\"", "\"name\": \"go\"");
        let err = parse_problem(&json).unwrap_err().to_string();
        assert!(err.contains("duplicate") && err.contains("go"), "{err}");
    }

    #[test]
    fn plan_round_trip_preserves_schedule_and_samples() {
        let p = full_problem();
        let plan = Plan {
            schedule: Schedule {
                present: vec![true, true],
                start: vec![4, 0],
                end: vec![16, 2],
            },
            trajectories: vec![
                Some(Trajectory {
                    samples: vec![
                        Sample { t: 4.0, x: 1.0, y: 1.0, heading: None },
                        Sample { t: 10.0, x: 5.0, y: 1.0, heading: None },
                        Sample { t: 16.0, x: 9.0, y: 1.0, heading: None },
                    ],
                }),
                Some(Trajectory {
                    samples: vec![
                        Sample { t: 0.0, x: 5.0, y: 2.0, heading: Some(std::f64::consts::FRAC_PI_2) },
                        Sample { t: 2.0, x: 5.0, y: 3.8, heading: Some(std::f64::consts::FRAC_PI_2) },
                    ],
                }),
            ],
        };
        let json = plan_to_json(&plan, &p);
        let plan2 = parse_plan(&json, &p).expect("plan parses");
        assert_eq!(plan, plan2);
    }

    #[test]
    fn plan_must_cover_every_activity_exactly_once() {
        let p = full_problem();
        let missing = r#"{
  "format_version": 1,
  "activities": [
    {"name": "go", "present": false, "start": 0, "end": 2}
  ]
}"#;
        let err = parse_plan(missing, &p).unwrap_err().to_string();
        assert!(err.contains("open_door"), "{err}");

        let unknown = r#"{
  "format_version": 1,
  "activities": [
    {"name": "zap", "present": false, "start": 0, "end": 2}
  ]
}"#;
        let err = parse_plan(unknown, &p).unwrap_err().to_string();
        assert!(err.contains("zap"), "{err}");
    }

    #[test]
    fn short_trajectory_samples_are_rejected() {
        let p = full_problem();
        let bad = r#"{
  "format_version": 1,
  "activities": [
    {"name": "go", "present": true, "start": 0, "end": 2,
     "trajectory": {"samples": [[0.0, 1.0]]}},
    {"name": "open_door", "present": false, "start": 0, "end": 2}
  ]
}"#;
        let err = parse_plan(bad, &p).unwrap_err().to_string();
        assert!(err.contains("3 or 4"), "{err}");
    }
}
