//! Planar convex hull and exact set diameter.

use robust::{orient2d, Coord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist2(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Point { x, y }
    }
}

/// Sign of the turn `a → b → c`, evaluated exactly: positive for
/// counter-clockwise.
fn orient(a: Point, b: Point, c: Point) -> f64 {
    orient2d(
        Coord { x: a.x, y: a.y },
        Coord { x: b.x, y: b.y },
        Coord { x: c.x, y: c.y },
    )
}

/// Counter-clockwise convex hull (Andrew's monotone chain), starting at the
/// lowest-leftmost point. Collinear boundary points are dropped; an
/// all-collinear input yields its two extreme points and a single distinct
/// point yields itself.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_unstable_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }

    let mut hull: Vec<Point> = Vec::with_capacity(pts.len() + 1);
    for &p in &pts {
        while hull.len() >= 2 && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len
            && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_product(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Sign of `u × v` with `u = b - a` and `v = d - c`, evaluated exactly.
fn cross_sign(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (ux, uy, vx, vy) = (b.x - a.x, b.y - a.y, d.x - c.x, d.y - c.y);
    let left = ux * vy;
    let right = uy * vx;
    let approx = left - right;
    let bound = 8.0 * f64::EPSILON * (left.abs() + right.abs());
    if approx.abs() > bound {
        return approx.signum();
    }
    let u = [two_sum(b.x, -a.x), two_sum(b.y, -a.y)];
    let v = [two_sum(d.x, -c.x), two_sum(d.y, -c.y)];
    let mut expansion: Vec<f64> = Vec::with_capacity(16);
    let mut grow = |t: f64| {
        let mut q = t;
        for h in expansion.iter_mut() {
            let (s, e) = two_sum(q, *h);
            *h = e;
            q = s;
        }
        expansion.push(q);
    };
    for (p, q, sign) in [(u[0], v[1], 1.0), (u[1], v[0], -1.0)] {
        for x in [p.0, p.1] {
            for y in [q.0, q.1] {
                let (hi, lo) = two_product(x, y);
                grow(sign * hi);
                grow(sign * lo);
            }
        }
    }
    expansion
        .iter()
        .rev()
        .find(|&&h| h != 0.0)
        .map_or(0.0, |h| h.signum())
}

/// Squared diameter of a convex polygon given counter-clockwise.
///
/// Rotating calipers: for each edge the farthest vertex is tracked with a
/// pointer that only moves forward. Both ends of every edge are compared
/// against the antipodal vertex and its neighbours, which also covers pairs
/// of parallel edges.
fn hull_diameter2(hull: &[Point]) -> f64 {
    let n = hull.len();
    match n {
        0 | 1 => return 0.0,
        2 => return hull[0].dist2(hull[1]),
        _ => {}
    }
    let mut best = 0.0f64;
    let mut j = 1;
    for i in 0..n {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        let mut steps = 0;
        while steps < n && cross_sign(a, b, hull[j], hull[(j + 1) % n]) > 0.0 {
            j = (j + 1) % n;
            steps += 1;
        }
        for k in [j, (j + 1) % n, (j + n - 1) % n] {
            let c = hull[k];
            best = best.max(a.dist2(c)).max(b.dist2(c));
        }
    }
    best
}

/// Largest distance between any two points.
///
/// `O(n log n)` via [`convex_hull`] and rotating calipers. Returns `None` for
/// fewer than two points.
pub fn max_pairwise_distance(points: &[Point]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    Some(hull_diameter2(&convex_hull(points)).sqrt())
}

/// Reference `O(n²)` diameter.
pub fn brute_force_diameter(points: &[Point]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let mut best = 0.0f64;
    for (i, &p) in points.iter().enumerate() {
        for &q in &points[i + 1..] {
            best = best.max(p.dist2(q));
        }
    }
    Some(best.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().copied().map(Point::from).collect()
    }

    #[test]
    fn cross_sign_matches_integer_arithmetic() {
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as i64 % (1 << 40)) - (1 << 39)
        };
        for _ in 0..20_000 {
            let c: Vec<i64> = (0..8).map(|_| next()).collect();
            let exact = (c[2] - c[0]) as i128 * (c[7] - c[5]) as i128
                - (c[3] - c[1]) as i128 * (c[6] - c[4]) as i128;
            let p = |i: usize| Point::new(c[i] as f64, c[i + 1] as f64);
            assert_eq!(cross_sign(p(0), p(2), p(4), p(6)), exact.signum() as f64);
        }
    }

    #[test]
    fn cross_sign_of_nearly_parallel_vectors() {
        let a = Point::new(0.1, 0.1);
        let b = Point::new(0.1 + 1e-17 + 0.3, 0.1 + 0.3);
        assert_eq!(cross_sign(a, b, a, b), 0.0);
        let c = Point::new(0.0, 0.0);
        let d = Point::new(3.0, 3.0 + 3.0 * f64::EPSILON);
        assert_eq!(cross_sign(c, Point::new(1.0, 1.0), c, d), 1.0);
        assert_eq!(cross_sign(c, d, c, Point::new(1.0, 1.0)), -1.0);
    }

    #[test]
    fn sliver_hulls_match_brute_force() {
        let mut state = 11u64;
        let mut unit = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..300 {
            let (dx, dy) = (unit() - 0.5, unit() - 0.5);
            let n = 2 + (unit() * 200.0) as usize;
            let v: Vec<Point> = (0..n)
                .map(|_| {
                    let t = (unit() * 1000.0).floor();
                    Point::new(t * dx, t * dy)
                })
                .collect();
            assert_eq!(max_pairwise_distance(&v), brute_force_diameter(&v));
        }
    }

    #[test]
    fn square_hull_drops_interior() {
        let hull = convex_hull(&pts(&[(0., 0.), (1., 0.), (0., 1.), (1., 1.), (0.5, 0.5)]));
        assert_eq!(hull, pts(&[(0., 0.), (1., 0.), (1., 1.), (0., 1.)]));
    }

    #[test]
    fn collinear_hull_is_segment() {
        let hull = convex_hull(&pts(&[(1., 1.), (0., 0.), (2., 2.)]));
        assert_eq!(hull, pts(&[(0., 0.), (2., 2.)]));
        let hull = convex_hull(&pts(&[(0., 0.), (1., 0.), (2., 0.), (2., 1.), (1., 1.), (0., 1.)]));
        assert_eq!(hull.len(), 4);
    }

    #[test]
    fn singleton_and_duplicates() {
        assert_eq!(convex_hull(&pts(&[(3., 7.)])), pts(&[(3., 7.)]));
        assert_eq!(convex_hull(&pts(&[(3., 7.), (3., 7.)])), pts(&[(3., 7.)]));
        assert_eq!(max_pairwise_distance(&pts(&[(3., 7.), (3., 7.)])), Some(0.0));
        assert_eq!(max_pairwise_distance(&pts(&[(3., 7.)])), None);
    }

    #[test]
    fn unit_square_diameter() {
        let d = max_pairwise_distance(&pts(&[(0., 0.), (1., 0.), (0., 1.), (1., 1.)])).unwrap();
        assert_eq!(d, 2f64.sqrt());
    }

    #[test]
    fn lattice_corner_diameter() {
        // Cell centres of an 11x11 block: corners ten cells apart on both axes.
        let mut v = Vec::new();
        for r in 0..=10 {
            for c in 0..=10 {
                v.push(Point::new(c as f64, r as f64));
            }
        }
        assert_eq!(max_pairwise_distance(&v).unwrap(), 10.0 * 2f64.sqrt());
    }

    #[test]
    fn regular_polygons_match_brute_force() {
        for n in 3..64 {
            let v: Vec<Point> = (0..n)
                .map(|k| {
                    let t = k as f64 * std::f64::consts::TAU / n as f64;
                    Point::new(1e3 * t.cos(), 1e3 * t.sin())
                })
                .collect();
            assert_eq!(max_pairwise_distance(&v), brute_force_diameter(&v), "n={n}");
        }
    }

    proptest! {
        #[test]
        fn calipers_equal_brute_force(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..200)) {
            let v = pts(&v);
            prop_assert_eq!(max_pairwise_distance(&v), brute_force_diameter(&v));
        }

        #[test]
        fn calipers_equal_brute_force_on_lattice(v in prop::collection::vec((0i32..12, 0i32..12), 2..200)) {
            let v: Vec<Point> = v.into_iter().map(|(x, y)| Point::new(x as f64, y as f64)).collect();
            prop_assert_eq!(max_pairwise_distance(&v), brute_force_diameter(&v));
        }

        #[test]
        fn hull_contains_every_point(v in prop::collection::vec((-50f64..50., -50f64..50.), 3..100)) {
            let v = pts(&v);
            let hull = convex_hull(&v);
            if hull.len() >= 3 {
                for i in 0..hull.len() {
                    let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                    for &p in &v {
                        prop_assert!(orient(a, b, p) >= 0.0);
                    }
                }
            }
        }
    }
}
