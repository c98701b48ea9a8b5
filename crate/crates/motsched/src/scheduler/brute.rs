//! Exhaustive reference solver for small instances. Enumerates every
//! presence, start, and duration assignment (absent activities pinned to
//! the canonical times, like the main solver), filters with the validator,
//! and reports the same statuses as `get_schedule`.

use thiserror::Error;

use super::{Objective, SchedulerStatus};
use crate::model::{horizon, Schedule, SchedulingProblem};
use crate::semantics::{makespan, validate_schedule};

/// Guard limits keeping the enumeration tractable.
pub const MAX_ORACLE_HORIZON: u64 = 30;
pub const MAX_ORACLE_ACTIVITIES: usize = 6;

#[derive(Debug, Error)]
#[error("instance too large for exhaustive search: {detail}")]
pub struct BruteForceError {
    detail: String,
}

struct Enumerator<'a> {
    sp: &'a SchedulingProblem,
    h: u64,
    objective: Objective,
    best: Option<Schedule>,
    best_makespan: u64,
    done: bool,
}

impl<'a> Enumerator<'a> {
    fn rec(&mut self, i: usize, sched: &mut Schedule) {
        if self.done {
            return;
        }
        if i == self.sp.activities.len() {
            if !validate_schedule(self.sp, sched).is_empty() {
                return;
            }
            match self.objective {
                Objective::Satisfy => {
                    self.best = Some(sched.clone());
                    self.done = true;
                }
                Objective::MinMakespan => {
                    let m = makespan(sched);
                    if self.best.is_none() || m < self.best_makespan {
                        self.best = Some(sched.clone());
                        self.best_makespan = m;
                    }
                }
            }
            return;
        }
        let a = &self.sp.activities[i];
        if a.optional {
            sched.present[i] = false;
            sched.start[i] = 0;
            sched.end[i] = a.duration.0;
            self.rec(i + 1, sched);
        }
        sched.present[i] = true;
        for s in 0..=self.h {
            for d in a.duration.0..=a.duration.1 {
                if s + d > self.h {
                    break;
                }
                sched.start[i] = s;
                sched.end[i] = s + d;
                self.rec(i + 1, sched);
            }
        }
        sched.present[i] = false;
        sched.start[i] = 0;
        sched.end[i] = a.duration.0;
    }
}

/// Exhaustively solves an instance within the guard limits. Agrees with
/// `get_schedule` on status and on the optimal makespan.
pub fn brute_force_schedule(
    sp: &SchedulingProblem,
    objective: Objective,
) -> Result<(Option<Schedule>, SchedulerStatus), BruteForceError> {
    let h = horizon(sp);
    if h > MAX_ORACLE_HORIZON {
        return Err(BruteForceError {
            detail: format!("horizon {h} exceeds {MAX_ORACLE_HORIZON}"),
        });
    }
    if sp.activities.len() > MAX_ORACLE_ACTIVITIES {
        return Err(BruteForceError {
            detail: format!(
                "{} activities exceed {MAX_ORACLE_ACTIVITIES}",
                sp.activities.len()
            ),
        });
    }
    let mut en = Enumerator {
        sp,
        // Same extended bound as the main solver: one separating tick per
        // activity beyond the duration sum.
        h: h + sp.activities.len() as u64,
        objective,
        best: None,
        best_makespan: 0,
        done: false,
    };
    let mut sched = Schedule::empty_for(sp);
    en.rec(0, &mut sched);
    let status = match (objective, &en.best) {
        (Objective::Satisfy, Some(_)) => SchedulerStatus::Valid,
        (Objective::MinMakespan, Some(_)) => SchedulerStatus::Optimal,
        (_, None) => SchedulerStatus::Unsat,
    };
    Ok((en.best, status))
}
