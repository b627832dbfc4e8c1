//! Exact 2D convex geometry in gradient space.
//!
//! Discrete subdifferentials are intersections of slabs `lower <= p·e <= upper`.
//! They are computed here by successive half-plane clipping of a convex
//! polygon. Degenerate results (points, segments, empty) are ordinary values.

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// `{p : normal·p <= offset}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub normal: Vec2,
    pub offset: f64,
}

impl HalfPlane {
    pub fn new(normal: Vec2, offset: f64) -> Self {
        debug_assert!(normal != [0.0, 0.0], "half-plane normal must be nonzero");
        HalfPlane { normal, offset }
    }
}

/// `{p : lower <= p·e <= upper}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabConstraint {
    pub e: Vec2,
    pub lower: f64,
    pub upper: f64,
}

impl SlabConstraint {
    pub fn new(e: Vec2, lower: f64, upper: f64) -> Self {
        SlabConstraint { e, lower, upper }
    }

    /// The two half-planes bounding the slab.
    pub fn half_planes(&self) -> [HalfPlane; 2] {
        [
            HalfPlane::new(self.e, self.upper),
            HalfPlane::new([-self.e[0], -self.e[1]], -self.lower),
        ]
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let s = dot(p, self.e);
        s >= self.lower - tol && s <= self.upper + tol
    }
}

/// Convex polygon with counterclockwise vertices. May be empty, a point or a
/// segment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Vec2>,
}

impl ConvexPolygon {
    pub fn empty() -> Self {
        ConvexPolygon::default()
    }

    /// Takes vertices already in counterclockwise convex position.
    pub fn from_ccw(vertices: Vec<Vec2>) -> Self {
        ConvexPolygon { vertices }
    }

    pub fn rectangle(min: Vec2, max: Vec2) -> Self {
        if min[0] > max[0] || min[1] > max[1] {
            return ConvexPolygon::empty();
        }
        ConvexPolygon {
            vertices: vec![min, [max[0], min[1]], max, [min[0], max[1]]],
        }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; zero for fewer than three vertices.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        // relative to the first vertex to limit cancellation
        let o = v[0];
        let mut twice = 0.0;
        for k in 1..v.len() - 1 {
            twice += cross(o, v[k], v[k + 1]);
        }
        (0.5 * twice).max(0.0)
    }

    pub fn perimeter(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 2 {
            return 0.0;
        }
        (0..v.len())
            .map(|i| {
                let a = v[i];
                let b = v[(i + 1) % v.len()];
                ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
            })
            .sum()
    }

    /// Axis-aligned bounding box `(min, max)`, `None` when empty.
    pub fn bounds(&self) -> Option<(Vec2, Vec2)> {
        let first = *self.vertices.first()?;
        let mut lo = first;
        let mut hi = first;
        for v in &self.vertices[1..] {
            lo = [lo[0].min(v[0]), lo[1].min(v[1])];
            hi = [hi[0].max(v[0]), hi[1].max(v[1])];
        }
        Some((lo, hi))
    }

    /// Diameter of the bounding box.
    pub fn scale(&self) -> f64 {
        self.bounds()
            .map(|(lo, hi)| ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt())
            .unwrap_or(0.0)
    }

    /// `(min, max)` of `p·n` over the polygon.
    pub fn support(&self, n: Vec2) -> Option<(f64, f64)> {
        let mut it = self.vertices.iter().map(|&v| dot(v, n));
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), s| (lo.min(s), hi.max(s))))
    }

    /// Smallest cross product of consecutive edges (convexity witness).
    pub fn min_turn(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        if n < 3 {
            return 0.0;
        }
        (0..n)
            .map(|i| cross(v[i], v[(i + 1) % n], v[(i + 2) % n]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Intersection with a half-plane. Vertices within `tol` of the line
    /// count as inside.
    pub fn clip(&self, hp: &HalfPlane, tol: f64) -> ConvexPolygon {
        let mut out = Vec::with_capacity(self.vertices.len() + 1);
        clip_into(&self.vertices, hp.normal, hp.offset, tol, &mut out);
        ConvexPolygon { vertices: out }
    }

    /// In-place intersection with a slab, reusing `scratch`.
    pub(crate) fn clip_slab_in_place(
        &mut self,
        n: Vec2,
        lower: f64,
        upper: f64,
        tol: f64,
        scratch: &mut Vec<Vec2>,
    ) {
        scratch.clear();
        clip_into(&self.vertices, n, upper, tol, scratch);
        self.vertices.clear();
        clip_into(scratch, [-n[0], -n[1]], -lower, tol, &mut self.vertices);
    }
}

/// Sutherland-Hodgman step against `{p : n·p <= c}` for a convex input.
fn clip_into(input: &[Vec2], n: Vec2, c: f64, tol: f64, out: &mut Vec<Vec2>) {
    let len = input.len();
    if len == 0 {
        return;
    }
    let dist: fn(Vec2, Vec2, f64) -> f64 = |p, n, c| dot(p, n) - c;
    if len == 1 {
        if dist(input[0], n, c) <= tol {
            out.push(input[0]);
        }
        return;
    }
    let push = |out: &mut Vec<Vec2>, p: Vec2| {
        if let Some(last) = out.last() {
            if (last[0] - p[0]).abs() <= tol && (last[1] - p[1]).abs() <= tol {
                return;
            }
        }
        out.push(p);
    };
    for i in 0..len {
        let s = input[i];
        let e = input[(i + 1) % len];
        let ds = dist(s, n, c);
        let de = dist(e, n, c);
        let s_in = ds <= tol;
        let e_in = de <= tol;
        if s_in {
            push(out, s);
        }
        if s_in != e_in && (ds > 0.0) != (de > 0.0) {
            let t = ds / (ds - de);
            push(out, [s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])]);
        }
    }
    // the wrap-around may duplicate the first vertex
    while out.len() > 1 {
        let (f, l) = (out[0], out[out.len() - 1]);
        if (f[0] - l[0]).abs() <= tol && (f[1] - l[1]).abs() <= tol {
            out.pop();
        } else {
            break;
        }
    }
}

/// Intersection of slab constraints with a bounded seed polygon.
///
/// Returns [`Error::SeedBoxActive`] when the seed still bounds the result
/// although axis slabs were supplied, meaning the seed did not contain the
/// feasible set.
pub fn intersect_constraints(
    constraints: &[SlabConstraint],
    seed_box: &ConvexPolygon,
) -> Result<ConvexPolygon> {
    let scale = seed_box.scale().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let mut poly = seed_box.clone();
    let mut scratch = Vec::new();
    for c in constraints {
        if poly.is_empty() {
            break;
        }
        poly.clip_slab_in_place(c.e, c.lower, c.upper, tol, &mut scratch);
    }
    let has_axis = [0, 1].iter().all(|&k| {
        constraints
            .iter()
            .any(|c| c.e[1 - k] == 0.0 && c.e[k] != 0.0)
    });
    if has_axis && !poly.is_empty() {
        let s = seed_box.vertices();
        for i in 0..s.len() {
            let a = s[i];
            let b = s[(i + 1) % s.len()];
            // vertices of the output that sit on this seed edge, and an edge
            // of the output lying along it
            let on: Vec<_> = poly
                .vertices()
                .iter()
                .filter(|&&p| cross(a, b, p).abs() <= tol * scale)
                .collect();
            if on.len() >= 2 {
                let binding = constraints.iter().any(|c| {
                    on.iter().all(|&&p| {
                        let s = dot(p, c.e);
                        (s - c.upper).abs() <= tol * (1.0 + c.upper.abs())
                            || (s - c.lower).abs() <= tol * (1.0 + c.lower.abs())
                    })
                });
                if !binding {
                    return Err(Error::SeedBoxActive);
                }
            }
        }
    }
    Ok(poly)
}

/// Box `[lower_1/e, upper_1/e] x [lower_2/e, upper_2/e]` from the shortest
/// axis slabs, inflated about its center by `factor`.
pub fn seed_box(constraints: &[SlabConstraint], factor: f64) -> Option<ConvexPolygon> {
    let mut ranges = [None::<(f64, f64, f64)>; 2];
    for c in constraints {
        for k in 0..2 {
            if c.e[1 - k] == 0.0 && c.e[k] != 0.0 {
                let len = c.e[k].abs();
                let (lo, hi) = if c.e[k] > 0.0 {
                    (c.lower / c.e[k], c.upper / c.e[k])
                } else {
                    (c.upper / c.e[k], c.lower / c.e[k])
                };
                if ranges[k].map_or(true, |(l, _, _)| len < l) {
                    ranges[k] = Some((len, lo, hi));
                }
            }
        }
    }
    let [(_, lo0, hi0), (_, lo1, hi1)] = [ranges[0]?, ranges[1]?];
    let c = [(lo0 + hi0) / 2.0, (lo1 + hi1) / 2.0];
    let r = [
        ((hi0 - lo0).abs() / 2.0 * factor).max(1e-300),
        ((hi1 - lo1).abs() / 2.0 * factor).max(1e-300),
    ];
    Some(ConvexPolygon::rectangle(
        [c[0] - r[0], c[1] - r[1]],
        [c[0] + r[0], c[1] + r[1]],
    ))
}

/// Intersection of two convex polygons (`a` clipped by each edge of `b`).
pub fn polygon_intersect(a: &ConvexPolygon, b: &ConvexPolygon) -> ConvexPolygon {
    if a.is_empty() || b.is_empty() {
        return ConvexPolygon::empty();
    }
    let scale = a.scale().max(b.scale()).max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let a = reduce_degenerate(a, tol);
    let b = reduce_degenerate(b, tol);
    // keep the proper polygon (if any) in `a`
    let (a, b) = if a.vertices().len() < 3 { (b, a) } else { (a, b) };
    let (av, bv) = (a.vertices(), b.vertices());
    if av.len() < 3 {
        return lower_dimensional_intersect(av, bv, tol);
    }
    // clip the lower-dimensional set (or `a`) by the edges of the other one
    let (mut out, clipper) = if bv.len() >= 3 { (a.clone(), bv) } else { (b.clone(), av) };
    for i in 0..clipper.len() {
        let (p, q) = (clipper[i], clipper[(i + 1) % clipper.len()]);
        // outward normal of a ccw edge
        let n = [q[1] - p[1], p[0] - q[0]];
        if n == [0.0, 0.0] {
            continue;
        }
        out = out.clip(&HalfPlane::new(n, dot(n, p)), tol * scale);
        if out.is_empty() {
            break;
        }
    }
    out
}

/// Drops repeated vertices and collapses a flat polygon to its two extreme
/// points.
fn reduce_degenerate(poly: &ConvexPolygon, tol: f64) -> ConvexPolygon {
    let mut v: Vec<Vec2> = Vec::with_capacity(poly.vertices().len());
    for &p in poly.vertices() {
        if !v.iter().any(|q| (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol) {
            v.push(p);
        }
    }
    if v.len() >= 3 {
        let reduced = ConvexPolygon::from_ccw(v.clone());
        let s = reduced.scale();
        if reduced.area() > tol * s {
            return reduced;
        }
        // collinear: keep the farthest pair
        let mut best = (0, 1, -1.0);
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                let d = (v[i][0] - v[j][0]).powi(2) + (v[i][1] - v[j][1]).powi(2);
                if d > best.2 {
                    best = (i, j, d);
                }
            }
        }
        v = vec![v[best.0], v[best.1]];
    }
    ConvexPolygon::from_ccw(v)
}

/// Intersection of two sets that are each a point or a segment.
fn lower_dimensional_intersect(a: &[Vec2], b: &[Vec2], tol: f64) -> ConvexPolygon {
    let on_segment = |p: Vec2, s: &[Vec2]| -> bool {
        match s.len() {
            1 => (p[0] - s[0][0]).abs() <= tol && (p[1] - s[0][1]).abs() <= tol,
            _ => {
                let d = [s[1][0] - s[0][0], s[1][1] - s[0][1]];
                let len = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let t = dot([p[0] - s[0][0], p[1] - s[0][1]], d) / (len * len);
                cross(s[0], s[1], p).abs() <= tol * len && (-tol / len..=1.0 + tol / len).contains(&t)
            }
        }
    };
    if a.len() == 1 || b.len() == 1 {
        let (p, other) = if a.len() == 1 { (a[0], b) } else { (b[0], a) };
        return if on_segment(p, other) {
            ConvexPolygon::from_ccw(vec![p])
        } else {
            ConvexPolygon::empty()
        };
    }
    let d = [a[1][0] - a[0][0], a[1][1] - a[0][1]];
    let e = [b[1][0] - b[0][0], b[1][1] - b[0][1]];
    let denom = d[0] * e[1] - d[1] * e[0];
    let (la, lb) = (dot(d, d).sqrt(), dot(e, e).sqrt());
    if denom.abs() <= tol * la.max(lb) {
        if cross(a[0], a[1], b[0]).abs() > tol * la {
            return ConvexPolygon::empty();
        }
        // collinear: overlap of parameter ranges along `a`
        let t = |p: Vec2| dot([p[0] - a[0][0], p[1] - a[0][1]], d) / (la * la);
        let (t0, t1) = (t(b[0]).min(t(b[1])), t(b[0]).max(t(b[1])));
        let (lo, hi) = (t0.max(0.0), t1.min(1.0));
        if hi < lo - tol / la {
            return ConvexPolygon::empty();
        }
        let at = |s: f64| [a[0][0] + s * d[0], a[0][1] + s * d[1]];
        if hi - lo <= tol / la {
            return ConvexPolygon::from_ccw(vec![at(lo.min(hi))]);
        }
        return ConvexPolygon::from_ccw(vec![at(lo), at(hi)]);
    }
    let w = [b[0][0] - a[0][0], b[0][1] - a[0][1]];
    let s = (w[0] * e[1] - w[1] * e[0]) / denom;
    let p = [a[0][0] + s * d[0], a[0][1] + s * d[1]];
    if on_segment(p, a) && on_segment(p, b) {
        ConvexPolygon::from_ccw(vec![p])
    } else {
        ConvexPolygon::empty()
    }
}

/// Brute-force area: cell centers of a `resolution x resolution` grid over
/// `bounds` satisfying every constraint, times the cell area.
///
/// The error is at most about `perimeter * cell_diagonal` for a convex set.
pub fn rasterize_area_oracle(
    constraints: &[SlabConstraint],
    bounds: (Vec2, Vec2),
    resolution: usize,
) -> f64 {
    let resolution = resolution.max(16);
    let (lo, hi) = bounds;
    let dx = (hi[0] - lo[0]) / resolution as f64;
    let dy = (hi[1] - lo[1]) / resolution as f64;
    let mut count = 0usize;
    for i in 0..resolution {
        let px = lo[0] + (i as f64 + 0.5) * dx;
        // the feasible set on a vertical line is an interval; find it directly
        let mut ymin = f64::NEG_INFINITY;
        let mut ymax = f64::INFINITY;
        let mut feasible = true;
        for c in constraints {
            let (ex, ey) = (c.e[0], c.e[1]);
            let base = ex * px;
            if ey == 0.0 {
                if base < c.lower || base > c.upper {
                    feasible = false;
                    break;
                }
            } else {
                let a = (c.lower - base) / ey;
                let b = (c.upper - base) / ey;
                ymin = ymin.max(a.min(b));
                ymax = ymax.min(a.max(b));
            }
        }
        if !feasible || ymax < ymin {
            continue;
        }
        // count cell centers lo1 + (j + 1/2) dy within [ymin, ymax]
        let jlo = ((ymin - lo[1]) / dy - 0.5).ceil().max(0.0);
        let jhi = ((ymax - lo[1]) / dy - 0.5).floor().min(resolution as f64 - 1.0);
        if jhi >= jlo {
            count += (jhi - jlo) as usize + 1;
        }
    }
    count as f64 * dx * dy
}
