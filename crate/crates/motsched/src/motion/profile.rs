//! Symmetric trapezoidal velocity profiles and trajectory timing analysis.

use crate::model::{ControlModel, Trajectory};

/// Travel time for a straight motion of `distance` meters from rest to
/// rest: accelerate at the limit, cruise at top speed if the distance
/// allows, decelerate symmetrically.
pub fn estimate_duration(distance: f64, control: &ControlModel) -> f64 {
    if distance <= 0.0 {
        return 0.0;
    }
    let v = control.max_speed;
    let a = control.max_accel;
    if distance >= v * v / a {
        distance / v + v / a
    } else {
        2.0 * (distance / a).sqrt()
    }
}

/// Arc position after `t` seconds along the trapezoidal profile covering
/// `distance` meters. Clamps to the endpoints outside [0, T].
pub fn trapezoid_position(distance: f64, control: &ControlModel, t: f64) -> f64 {
    if distance <= 0.0 || t <= 0.0 {
        return 0.0;
    }
    let v = control.max_speed;
    let a = control.max_accel;
    let total = estimate_duration(distance, control);
    if t >= total {
        return distance;
    }
    if distance >= v * v / a {
        let t_ramp = v / a;
        let d_ramp = v * v / (2.0 * a);
        if t < t_ramp {
            0.5 * a * t * t
        } else if t < total - t_ramp {
            d_ramp + v * (t - t_ramp)
        } else {
            let r = total - t;
            distance - 0.5 * a * r * r
        }
    } else {
        let t_half = (distance / a).sqrt();
        if t < t_half {
            0.5 * a * t * t
        } else {
            let r = total - t;
            distance - 0.5 * a * r * r
        }
    }
}

/// Measured timing of a trajectory relative to a group start `s_min`:
/// the delay until the first sample interval with displacement above
/// `eps_move`, and the span from there to the end of the last such
/// interval. A trajectory that never moves yields (0, 0).
pub fn extract_timing(traj: &Trajectory, s_min: f64, eps_move: f64) -> (f64, f64) {
    let mut first: Option<f64> = None;
    let mut last: Option<f64> = None;
    for w in traj.samples.windows(2) {
        let moved = (w[1].x - w[0].x).hypot(w[1].y - w[0].y)
            + (w[1].heading.unwrap_or(0.0) - w[0].heading.unwrap_or(0.0)).abs();
        if moved > eps_move {
            if first.is_none() {
                first = Some(w[0].t);
            }
            last = Some(w[1].t);
        }
    }
    match (first, last) {
        (Some(f), Some(l)) => (f - s_min, l - f),
        _ => (0.0, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sample;

    fn ctrl(v: f64, a: f64) -> ControlModel {
        ControlModel { max_speed: v, max_accel: a, model_id: "test".into() }
    }

    #[test]
    fn duration_covers_trapezoid_and_triangle_cases() {
        let c = ctrl(1.0, 1.0);
        assert_eq!(estimate_duration(0.0, &c), 0.0);
        assert!((estimate_duration(4.0, &c) - 5.0).abs() < 1e-12, "cruise phase: 4/1 + 1/1");
        assert!((estimate_duration(0.25, &c) - 1.0).abs() < 1e-12, "triangular: 2*sqrt(0.25)");
    }

    #[test]
    fn position_profile_is_monotone_and_exact_at_endpoints() {
        let c = ctrl(1.0, 1.0);
        for &d in &[0.25, 1.0, 4.0, 10.0] {
            let total = estimate_duration(d, &c);
            let mut prev = 0.0;
            let steps = 200;
            for k in 0..=steps {
                let t = total * k as f64 / steps as f64;
                let p = trapezoid_position(d, &c, t);
                assert!(p + 1e-9 >= prev, "profile must not move backward");
                prev = p;
            }
            assert!((trapezoid_position(d, &c, total) - d).abs() < 1e-9);
            assert_eq!(trapezoid_position(d, &c, -1.0), 0.0);
            assert!((trapezoid_position(d, &c, total + 5.0) - d).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_speed_respects_the_limit() {
        let c = ctrl(2.0, 0.5);
        let d = 7.0;
        let total = estimate_duration(d, &c);
        let dt = 0.01;
        let mut t = 0.0;
        while t + dt <= total {
            let v = (trapezoid_position(d, &c, t + dt) - trapezoid_position(d, &c, t)) / dt;
            assert!(v <= c.max_speed + 1e-6, "speed {v} above limit at t={t}");
            t += dt;
        }
    }

    fn traj(pts: &[(f64, f64)]) -> Trajectory {
        Trajectory {
            samples: pts.iter().map(|&(t, x)| Sample { t, x, y: 0.0, heading: None }).collect(),
        }
    }

    #[test]
    fn timing_of_wait_then_move() {
        let tr = traj(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 1.0), (4.0, 2.0), (5.0, 3.0)]);
        let (delay, dur) = extract_timing(&tr, 0.0, 1e-3);
        assert_eq!((delay, dur), (2.0, 3.0));
    }

    #[test]
    fn timing_of_motionless_trajectory_is_zero_by_convention() {
        let tr = traj(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(extract_timing(&tr, 0.0, 1e-3), (0.0, 0.0));
    }

    #[test]
    fn stop_and_go_spans_the_full_moving_window() {
        let tr = traj(&[(0.0, 0.0), (1.0, 1.0), (2.0, 1.0), (3.0, 2.0)]);
        let (delay, dur) = extract_timing(&tr, 0.0, 1e-3);
        assert_eq!((delay, dur), (0.0, 3.0));
    }

    #[test]
    fn delay_is_relative_to_the_group_start() {
        let tr = traj(&[(4.0, 0.0), (5.0, 0.0), (6.0, 1.0)]);
        let (delay, dur) = extract_timing(&tr, 4.0, 1e-3);
        assert_eq!((delay, dur), (1.0, 1.0));
    }
}
