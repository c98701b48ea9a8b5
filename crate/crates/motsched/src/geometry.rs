//! Planar footprints and exact collision tests.
//!
//! Collision means the interiors intersect: two shapes that merely touch
//! (tangent disks, rectangles sharing an edge) do not collide. All tests
//! are strict-inequality comparisons to keep that boundary convention.

use crate::model::{Bounds, Configuration, Geometry, Obstacle};

/// Space actually occupied by a shape placed at a configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum Footprint {
    Circle { cx: f64, cy: f64, r: f64 },
    /// Oriented rectangle: center, half extents, rotation in radians.
    Rect { cx: f64, cy: f64, hw: f64, hh: f64, heading: f64 },
    /// Convex polygon, counter-clockwise vertices (static obstacles).
    Poly { pts: Vec<(f64, f64)> },
}

/// Footprint of `geometry` placed at `config`.
pub fn footprint_of(geometry: &Geometry, config: &Configuration) -> Footprint {
    match geometry {
        Geometry::Disk { radius } => Footprint::Circle { cx: config.x, cy: config.y, r: *radius },
        Geometry::Rectangle { width, height } => Footprint::Rect {
            cx: config.x,
            cy: config.y,
            hw: width / 2.0,
            hh: height / 2.0,
            heading: config.heading_or_zero(),
        },
    }
}

pub fn footprint_of_obstacle(o: &Obstacle) -> Footprint {
    Footprint::Poly { pts: o.vertices.clone() }
}

/// Grow a footprint outward by `margin`. For rectangles the half extents
/// grow by the margin, which covers (a superset of) all points within
/// `margin` of the original shape; used for conservative sampled checks.
pub fn inflate(fp: &Footprint, margin: f64) -> Footprint {
    match fp {
        Footprint::Circle { cx, cy, r } => {
            Footprint::Circle { cx: *cx, cy: *cy, r: r + margin }
        }
        Footprint::Rect { cx, cy, hw, hh, heading } => Footprint::Rect {
            cx: *cx,
            cy: *cy,
            hw: hw + margin,
            hh: hh + margin,
            heading: *heading,
        },
        Footprint::Poly { .. } => {
            assert!(margin == 0.0, "polygon obstacles are never inflated");
            fp.clone()
        }
    }
}

fn rect_corners(cx: f64, cy: f64, hw: f64, hh: f64, heading: f64) -> [(f64, f64); 4] {
    let (s, c) = heading.sin_cos();
    let rot = |dx: f64, dy: f64| (cx + dx * c - dy * s, cy + dx * s + dy * c);
    [rot(-hw, -hh), rot(hw, -hh), rot(hw, hh), rot(-hw, hh)]
}

fn corner_list(fp: &Footprint) -> Vec<(f64, f64)> {
    match fp {
        Footprint::Circle { .. } => unreachable!("circles have no corners"),
        Footprint::Rect { cx, cy, hw, hh, heading } => {
            rect_corners(*cx, *cy, *hw, *hh, *heading).to_vec()
        }
        Footprint::Poly { pts } => pts.clone(),
    }
}

fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn point_segment_dist2(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len2 = dot(ab, ab);
    let t = if len2 <= 0.0 { 0.0 } else { (dot(ap, ab) / len2).clamp(0.0, 1.0) };
    let q = (a.0 + ab.0 * t, a.1 + ab.1 * t);
    let d = (p.0 - q.0, p.1 - q.1);
    dot(d, d)
}

/// Strictly inside a convex CCW polygon (boundary points are outside).
fn point_strictly_in_convex(p: (f64, f64), pts: &[(f64, f64)]) -> bool {
    let n = pts.len();
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
        if cross <= 0.0 {
            return false;
        }
    }
    true
}

fn circle_vs_poly(cx: f64, cy: f64, r: f64, pts: &[(f64, f64)]) -> bool {
    if point_strictly_in_convex((cx, cy), pts) {
        return true;
    }
    let n = pts.len();
    let r2 = r * r;
    for i in 0..n {
        if point_segment_dist2((cx, cy), pts[i], pts[(i + 1) % n]) < r2 {
            return true;
        }
    }
    false
}

/// Separating-axis test for convex polygons; strict overlap on every axis
/// is required for a collision, so tangency separates.
fn poly_vs_poly(a: &[(f64, f64)], b: &[(f64, f64)]) -> bool {
    for (first, second) in [(a, b), (b, a)] {
        let n = first.len();
        for i in 0..n {
            let p = first[i];
            let q = first[(i + 1) % n];
            // Outward normal of edge p->q for a CCW polygon.
            let axis = (q.1 - p.1, p.0 - q.0);
            let (mut min_a, mut max_a) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in first {
                let d = dot(axis, *v);
                min_a = min_a.min(d);
                max_a = max_a.max(d);
            }
            let (mut min_b, mut max_b) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in second {
                let d = dot(axis, *v);
                min_b = min_b.min(d);
                max_b = max_b.max(d);
            }
            if max_a <= min_b || max_b <= min_a {
                return false;
            }
        }
    }
    true
}

/// True iff the interiors of the two footprints intersect.
pub fn collides(a: &Footprint, b: &Footprint) -> bool {
    match (a, b) {
        (Footprint::Circle { cx: x1, cy: y1, r: r1 }, Footprint::Circle { cx: x2, cy: y2, r: r2 }) => {
            let dx = x1 - x2;
            let dy = y1 - y2;
            let rr = r1 + r2;
            dx * dx + dy * dy < rr * rr
        }
        (Footprint::Circle { cx, cy, r }, other) | (other, Footprint::Circle { cx, cy, r }) => {
            circle_vs_poly(*cx, *cy, *r, &corner_list(other))
        }
        (a, b) => poly_vs_poly(&corner_list(a), &corner_list(b)),
    }
}

/// True iff the footprint lies entirely inside the workspace bounds,
/// keeping at least `margin` of clearance.
pub fn within_bounds(fp: &Footprint, b: &Bounds, margin: f64) -> bool {
    match fp {
        Footprint::Circle { cx, cy, r } => {
            cx - r - margin >= b.min_x
                && cx + r + margin <= b.max_x
                && cy - r - margin >= b.min_y
                && cy + r + margin <= b.max_y
        }
        other => corner_list(other).iter().all(|(x, y)| {
            *x - margin >= b.min_x
                && *x + margin <= b.max_x
                && *y - margin >= b.min_y
                && *y + margin <= b.max_y
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(cx: f64, cy: f64, half: f64) -> Footprint {
        Footprint::Rect { cx, cy, hw: half, hh: half, heading: 0.0 }
    }

    #[test]
    fn disk_disk_tangency_is_not_collision() {
        let a = Footprint::Circle { cx: 0.0, cy: 0.0, r: 0.5 };
        let close = Footprint::Circle { cx: 0.9, cy: 0.0, r: 0.5 };
        let tangent = Footprint::Circle { cx: 1.0, cy: 0.0, r: 0.5 };
        let apart = Footprint::Circle { cx: 1.1, cy: 0.0, r: 0.5 };
        assert!(collides(&a, &close));
        assert!(!collides(&a, &tangent), "touching disks must not collide");
        assert!(!collides(&a, &apart));
    }

    #[test]
    fn rectangles_sharing_an_edge_do_not_collide() {
        let a = square(0.0, 0.0, 1.0);
        let touching = square(2.0, 0.0, 1.0);
        let overlapping = square(1.9, 0.0, 1.0);
        assert!(!collides(&a, &touching), "shared edge must not collide");
        assert!(collides(&a, &overlapping));
        assert!(collides(&a, &a));
    }

    #[test]
    fn rotated_rectangle_hits_what_axis_aligned_box_misses() {
        // A diamond (square rotated 45 degrees) reaches sqrt(2) along the
        // axes, so it overlaps a disk that its bounding box only touches.
        let diamond = Footprint::Rect {
            cx: 0.0,
            cy: 0.0,
            hw: 1.0,
            hh: 1.0,
            heading: std::f64::consts::FRAC_PI_4,
        };
        let disk = Footprint::Circle { cx: 1.3, cy: 0.0, r: 0.25 };
        assert!(collides(&diamond, &disk));
        let axis_aligned = square(0.0, 0.0, 1.0);
        assert!(!collides(&axis_aligned, &disk));
    }

    #[test]
    fn circle_inside_polygon_collides() {
        let poly = Footprint::Poly {
            pts: vec![(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0)],
        };
        let inside = Footprint::Circle { cx: 2.0, cy: 2.0, r: 0.1 };
        let tangent_outside = Footprint::Circle { cx: -0.5, cy: 2.0, r: 0.5 };
        let poking = Footprint::Circle { cx: -0.4, cy: 2.0, r: 0.5 };
        assert!(collides(&poly, &inside));
        assert!(!collides(&poly, &tangent_outside), "tangent circle must not collide");
        assert!(collides(&poly, &poking));
    }

    #[test]
    fn collision_is_symmetric() {
        let shapes = vec![
            Footprint::Circle { cx: 0.3, cy: 0.1, r: 0.6 },
            square(0.5, 0.0, 0.5),
            Footprint::Poly { pts: vec![(0.0, -1.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0)] },
            Footprint::Rect { cx: 2.5, cy: 0.0, hw: 0.4, hh: 0.2, heading: 0.7 },
        ];
        for a in &shapes {
            for b in &shapes {
                assert_eq!(collides(a, b), collides(b, a), "collides({a:?}, {b:?}) asymmetric");
            }
        }
    }

    #[test]
    fn inflation_grows_shapes_conservatively() {
        let a = Footprint::Circle { cx: 0.0, cy: 0.0, r: 0.5 };
        let tangent = Footprint::Circle { cx: 1.0, cy: 0.0, r: 0.5 };
        assert!(!collides(&a, &tangent));
        assert!(collides(&inflate(&a, 0.05), &tangent));

        let r = square(0.0, 0.0, 1.0);
        let touching = square(2.0, 0.0, 1.0);
        assert!(collides(&inflate(&r, 0.01), &touching));
    }

    #[test]
    fn bounds_containment_respects_margin() {
        let b = Bounds { min_x: 0.0, min_y: 0.0, max_x: 10.0, max_y: 5.0 };
        let fp = Footprint::Circle { cx: 0.6, cy: 2.5, r: 0.5 };
        assert!(within_bounds(&fp, &b, 0.0));
        assert!(!within_bounds(&fp, &b, 0.2));
        let rect = Footprint::Rect { cx: 9.6, cy: 2.5, hw: 0.5, hh: 0.5, heading: 0.0 };
        assert!(!within_bounds(&rect, &b, 0.0));
    }
}
