//! Optional-activity scheduling interleaved with sampling-based space-time
//! motion planning.
//!
//! The library is organized bottom-up:
//!
//! - [`model`]: problem, schedule, and plan data types plus problem-level
//!   validation.
//! - [`geometry`]: footprints and strict-interior collision predicates.
//! - [`semantics`]: fluent timelines, formula evaluation, and the schedule
//!   and plan validators.
//! - [`scheduler`]: branch-and-bound solver for the discrete subproblem,
//!   continuity encodings, and an exhaustive reference solver.
//! - [`motion`]: sampling-based path and space-time planners over timed
//!   scenes of moving footprints.
//! - [`refine`]: constraints learned from planner verdicts, parallel motion
//!   groups, and the trajectory cache.
//! - [`engine`]: the interleaved solve loop tying scheduler, planner, and
//!   refinements together.

pub mod engine;
pub mod format;
pub mod geometry;
pub mod model;
pub mod motion;
pub mod refine;
pub mod scheduler;
pub mod semantics;
