//! The lattice `Z_h^2` restricted to a closed convex domain.
//!
//! Lattice points are stored as integer multipliers `m` with `x = m * h`, so
//! set membership and direction arithmetic are exact. Real coordinates are
//! derived on demand.
//!
//! A lattice point `x` of the open domain is *interior* when `x ± h r_i` lie in
//! the closed domain for both axes; every other lattice point of the closed
//! domain is a *boundary* point. Near curved or slanted edges this places a few
//! points of the open domain in the boundary set, where the solver pins values
//! from the convex extension of the boundary data.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer multiplier of a lattice point or lattice vector.
pub type Multiplier = [i64; 2];

/// Bounded convex domain descriptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainShape {
    /// Axis-aligned rectangle `[min.0, max.0] x [min.1, max.1]`.
    Rect { min: [f64; 2], max: [f64; 2] },
    /// Closed disc.
    Disc { center: [f64; 2], radius: f64 },
    /// Convex polygon; vertices in either orientation.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl DomainShape {
    pub fn square(lo: f64, hi: f64) -> Self {
        DomainShape::Rect {
            min: [lo, lo],
            max: [hi, hi],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |p: &[f64; 2]| p[0].is_finite() && p[1].is_finite();
        match self {
            DomainShape::Rect { min, max } => {
                if !finite(min) || !finite(max) || min[0] >= max[0] || min[1] >= max[1] {
                    return Err(Error::InvalidDomain(format!(
                        "rectangle needs min < max, got {min:?} / {max:?}"
                    )));
                }
            }
            DomainShape::Disc { center, radius } => {
                if !finite(center) || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidDomain(format!(
                        "disc needs a positive radius, got {radius}"
                    )));
                }
            }
            DomainShape::Polygon { vertices } => {
                if vertices.len() < 3 || !vertices.iter().all(finite) {
                    return Err(Error::InvalidDomain(
                        "polygon needs at least three finite vertices".into(),
                    ));
                }
                let n = vertices.len();
                let mut sign = 0.0f64;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let c = vertices[(i + 2) % n];
                    let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
                    if cross.abs() <= 1e-14 {
                        continue;
                    }
                    if sign == 0.0 {
                        sign = cross.signum();
                    } else if cross.signum() != sign {
                        return Err(Error::InvalidDomain("polygon is not convex".into()));
                    }
                }
                if sign == 0.0 {
                    return Err(Error::InvalidDomain("polygon is degenerate".into()));
                }
            }
        }
        Ok(())
    }

    /// Counterclockwise polygon vertices (polygons only).
    fn ccw_vertices(vertices: &[[f64; 2]]) -> Vec<[f64; 2]> {
        let n = vertices.len();
        let twice_area: f64 = (0..n)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum();
        let mut v = vertices.to_vec();
        if twice_area < 0.0 {
            v.reverse();
        }
        v
    }

    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            DomainShape::Rect { min, max } => (*min, *max),
            DomainShape::Disc { center, radius } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
            DomainShape::Polygon { vertices } => {
                let mut lo = [f64::INFINITY; 2];
                let mut hi = [f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            DomainShape::Disc { radius, .. } => 2.0 * radius,
            _ => {
                let (lo, hi) = self.bounding_box();
                ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).sqrt()
            }
        }
    }

    /// Smallest `R` with the domain contained in the closed ball `B_R(0)`.
    pub fn max_norm(&self) -> f64 {
        let norm = |p: [f64; 2]| (p[0] * p[0] + p[1] * p[1]).sqrt();
        match self {
            DomainShape::Rect { min, max } => [
                [min[0], min[1]],
                [min[0], max[1]],
                [max[0], min[1]],
                [max[0], max[1]],
            ]
            .into_iter()
            .map(norm)
            .fold(0.0, f64::max),
            DomainShape::Disc { center, radius } => norm(*center) + radius,
            DomainShape::Polygon { vertices } => {
                vertices.iter().copied().map(norm).fold(0.0, f64::max)
            }
        }
    }

    /// Signed excess: negative inside, zero on the boundary, positive outside.
    /// Euclidean distance for discs, max-of-edge-distances for polygons.
    pub fn excess(&self, p: [f64; 2]) -> f64 {
        match self {
            DomainShape::Rect { min, max } => (min[0] - p[0])
                .max(p[0] - max[0])
                .max(min[1] - p[1])
                .max(p[1] - max[1]),
            DomainShape::Disc { center, radius } => {
                ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt() - radius
            }
            DomainShape::Polygon { vertices } => {
                let v = Self::ccw_vertices(vertices);
                let n = v.len();
                (0..n)
                    .map(|i| {
                        let a = v[i];
                        let b = v[(i + 1) % n];
                        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
                        let len = (ex * ex + ey * ey).sqrt();
                        // outward normal of a ccw edge is (ey, -ex)
                        (ey * (p[0] - a[0]) - ex * (p[1] - a[1])) / len
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// The vertical section `{y : (x, y) in closed domain}` as an interval.
    pub fn vertical_section(&self, x: f64) -> Option<(f64, f64)> {
        match self {
            DomainShape::Rect { min, max } => {
                (x >= min[0] && x <= max[0]).then_some((min[1], max[1]))
            }
            DomainShape::Disc { center, radius } => {
                let dx = x - center[0];
                let s = radius * radius - dx * dx;
                (s >= 0.0).then(|| (center[1] - s.sqrt(), center[1] + s.sqrt()))
            }
            DomainShape::Polygon { vertices } => {
                let n = vertices.len();
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    let (x0, x1) = (a[0].min(b[0]), a[0].max(b[0]));
                    if x < x0 || x > x1 {
                        continue;
                    }
                    if (b[0] - a[0]).abs() < 1e-300 {
                        lo = lo.min(a[1].min(b[1]));
                        hi = hi.max(a[1].max(b[1]));
                    } else {
                        let t = (x - a[0]) / (b[0] - a[0]);
                        let y = a[1] + t * (b[1] - a[1]);
                        lo = lo.min(y);
                        hi = hi.max(y);
                    }
                }
                (lo <= hi).then_some((lo, hi))
            }
        }
    }
}

/// Whether a lattice point lies in the interior set or the boundary set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Interior,
    Boundary,
}

/// Which lattice directions the operators enumerate at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StencilPolicy {
    /// Axis directions and the two diagonals.
    NinePoint,
    /// Directions whose largest integer component is at most `k`.
    Radius(u32),
    /// Every admissible direction.
    #[default]
    Full,
}

impl StencilPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            StencilPolicy::Radius(0) => Err(Error::InvalidConfig(
                "stencil radius must be at least 1".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Largest allowed integer component, if capped.
    pub fn cap(&self) -> Option<i64> {
        match self {
            StencilPolicy::NinePoint => Some(1),
            StencilPolicy::Radius(k) => Some(i64::from(*k)),
            StencilPolicy::Full => None,
        }
    }

    pub fn allows(&self, m: Multiplier) -> bool {
        self.cap()
            .map_or(true, |k| m[0].abs().max(m[1].abs()) <= k)
    }
}

/// Lattice points of a closed convex domain, split into interior and boundary.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    h: f64,
    shape: DomainShape,
    tol: f64,
    diameter_bound: f64,
    points: Vec<Multiplier>,
    kinds: Vec<PointKind>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
    grid_min: Multiplier,
    grid_dims: [usize; 2],
    slots: Vec<u32>,
}

const EMPTY_SLOT: u32 = u32::MAX;

impl LatticeDomain {
    /// Enumerates `closure ∩ Z_h^2` and classifies every point.
    pub fn build(shape: DomainShape, h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidMeshLength(h));
        }
        shape.validate()?;
        let tol = 1e-12 * shape.diameter();
        let (lo, hi) = shape.bounding_box();
        let imin = ((lo[0] - tol) / h).ceil() as i64;
        let imax = ((hi[0] + tol) / h).floor() as i64;
        let jmin = ((lo[1] - tol) / h).ceil() as i64;
        let jmax = ((hi[1] + tol) / h).floor() as i64;
        if imax < imin || jmax < jmin {
            return Err(Error::EmptyInterior(h));
        }
        let grid_dims = [(imax - imin + 1) as usize, (jmax - jmin + 1) as usize];
        if grid_dims[0].saturating_mul(grid_dims[1]) > 50_000_000 {
            return Err(Error::InvalidDomain(format!(
                "lattice too large ({} x {} points)",
                grid_dims[0], grid_dims[1]
            )));
        }
        let mut slots = vec![EMPTY_SLOT; grid_dims[0] * grid_dims[1]];
        let mut points = Vec::new();
        for i in imin..=imax {
            for j in jmin..=jmax {
                let p = [i as f64 * h, j as f64 * h];
                if shape.excess(p) <= tol {
                    let slot = (i - imin) as usize * grid_dims[1] + (j - jmin) as usize;
                    slots[slot] = points.len() as u32;
                    points.push([i, j]);
                }
            }
        }

        let mut dom = LatticeDomain {
            h,
            shape,
            tol,
            diameter_bound: 0.0,
            points,
            kinds: Vec::new(),
            interior: Vec::new(),
            boundary: Vec::new(),
            grid_min: [imin, jmin],
            grid_dims,
            slots,
        };

        let mut kinds = Vec::with_capacity(dom.points.len());
        for (idx, &m) in dom.points.iter().enumerate() {
            let strictly_inside = dom.shape.excess(dom.coords_of(m)) < -tol;
            let neighbors_closed = [[1, 0], [-1, 0], [0, 1], [0, -1]]
                .iter()
                .all(|d| dom.index_of([m[0] + d[0], m[1] + d[1]]).is_some());
            if strictly_inside && neighbors_closed {
                kinds.push(PointKind::Interior);
                dom.interior.push(idx);
            } else {
                kinds.push(PointKind::Boundary);
                dom.boundary.push(idx);
            }
        }
        dom.kinds = kinds;
        if dom.interior.is_empty() {
            return Err(Error::EmptyInterior(h));
        }
        let lattice_max = dom
            .points
            .iter()
            .map(|&m| {
                let p = dom.coords_of(m);
                (p[0] * p[0] + p[1] * p[1]).sqrt()
            })
            .fold(0.0, f64::max);
        dom.diameter_bound = dom.shape.max_norm().max(lattice_max);
        Ok(dom)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn shape(&self) -> &DomainShape {
        &self.shape
    }

    /// Absolute membership tolerance (`1e-12 * diameter`).
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// `Δ` with the domain contained in `B_Δ(0)`.
    pub fn diameter_bound(&self) -> f64 {
        self.diameter_bound
    }

    /// All lattice points of the closed domain, in lexicographic order.
    pub fn points(&self) -> &[Multiplier] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn kind(&self, idx: usize) -> PointKind {
        self.kinds[idx]
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.kinds[idx] == PointKind::Interior
    }

    pub fn point(&self, idx: usize) -> Multiplier {
        self.points[idx]
    }

    pub fn coords(&self, idx: usize) -> [f64; 2] {
        self.coords_of(self.points[idx])
    }

    pub fn coords_of(&self, m: Multiplier) -> [f64; 2] {
        [m[0] as f64 * self.h, m[1] as f64 * self.h]
    }

    /// Index of a lattice point of the closed domain.
    pub fn index_of(&self, m: Multiplier) -> Option<usize> {
        let di = m[0] - self.grid_min[0];
        let dj = m[1] - self.grid_min[1];
        if di < 0 || dj < 0 || di as usize >= self.grid_dims[0] || dj as usize >= self.grid_dims[1]
        {
            return None;
        }
        match self.slots[di as usize * self.grid_dims[1] + dj as usize] {
            EMPTY_SLOT => None,
            s => Some(s as usize),
        }
    }

    /// Index of an interior point, or an error naming the point.
    pub fn interior_index(&self, m: Multiplier) -> Result<usize> {
        match self.index_of(m) {
            Some(idx) if self.is_interior(idx) => Ok(idx),
            _ => Err(Error::NotInterior { point: m }),
        }
    }

    /// Nearest lattice multiplier to a real point (no membership check).
    pub fn nearest_multiplier(&self, p: [f64; 2]) -> Multiplier {
        [(p[0] / self.h).round() as i64, (p[1] / self.h).round() as i64]
    }

    /// Whether `x ± e` both lie in the closed domain.
    pub fn admissible(&self, x: Multiplier, e: Multiplier) -> bool {
        self.index_of([x[0] + e[0], x[1] + e[1]]).is_some()
            && self.index_of([x[0] - e[0], x[1] - e[1]]).is_some()
    }

    /// Largest integer component over all lattice vectors between domain points.
    pub fn extent(&self) -> i64 {
        self.grid_dims[0].max(self.grid_dims[1]) as i64 - 1
    }
}

/// Real values on `Ω_h ∪ ∂Ω_h`, indexed like [`LatticeDomain::points`].
#[derive(Debug, Clone)]
pub struct MeshFunction {
    domain: Arc<LatticeDomain>,
    values: Vec<f64>,
}

impl MeshFunction {
    pub fn from_values(domain: Arc<LatticeDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidConfig(format!(
                "mesh function has {} values for {} lattice points",
                values.len(),
                domain.len()
            )));
        }
        Ok(MeshFunction { domain, values })
    }

    /// Restriction `r_h(f)` of a function of the real coordinates.
    pub fn restrict<F: Fn([f64; 2]) -> f64>(domain: Arc<LatticeDomain>, f: F) -> Self {
        let values = (0..domain.len()).map(|i| f(domain.coords(i))).collect();
        MeshFunction { domain, values }
    }

    pub fn constant(domain: Arc<LatticeDomain>, c: f64) -> Self {
        let values = vec![c; domain.len()];
        MeshFunction { domain, values }
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn get(&self, m: Multiplier) -> Option<f64> {
        self.domain.index_of(m).map(|i| self.values[i])
    }

    pub fn set(&mut self, m: Multiplier, value: f64) -> Result<()> {
        let idx = self
            .domain
            .index_of(m)
            .ok_or(Error::NotInDomain { point: m })?;
        self.values[idx] = value;
        Ok(())
    }

    /// `max |v - w|` over the points whose index satisfies `filter`.
    pub fn max_abs_diff_where<F: Fn(usize) -> bool>(&self, other: &MeshFunction, filter: F) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .enumerate()
            .filter(|(i, _)| filter(*i))
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A nonzero lattice vector `m * h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeDirection {
    pub m: Multiplier,
    pub h: f64,
}

impl LatticeDirection {
    pub fn new(m: Multiplier, h: f64) -> Self {
        debug_assert!(m != [0, 0], "lattice direction must be nonzero");
        LatticeDirection { m, h }
    }

    pub fn vector(&self) -> [f64; 2] {
        [self.m[0] as f64 * self.h, self.m[1] as f64 * self.h]
    }

    pub fn norm(&self) -> f64 {
        self.h * ((self.m[0] * self.m[0] + self.m[1] * self.m[1]) as f64).sqrt()
    }

    pub fn is_primitive(&self) -> bool {
        gcd(self.m[0], self.m[1]) == 1
    }

    /// Angle in `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        let a = (self.m[1] as f64).atan2(self.m[0] as f64);
        if a < 0.0 {
            a + std::f64::consts::TAU
        } else {
            a
        }
    }

    /// 90° counterclockwise rotation.
    pub fn rotated(&self) -> Self {
        LatticeDirection::new([-self.m[1], self.m[0]], self.h)
    }
}

/// Representative of `±m` with angle in `[0, π)`.
pub(crate) fn canonical(m: Multiplier) -> Multiplier {
    if m[1] > 0 || (m[1] == 0 && m[0] > 0) {
        m
    } else {
        [-m[0], -m[1]]
    }
}

/// Primitive canonical multipliers with components bounded by `extent`,
/// sorted by length then angle.
pub(crate) fn primitive_candidates(extent: i64) -> Vec<Multiplier> {
    let mut out = Vec::new();
    for b in 0..=extent {
        for a in -extent..=extent {
            if (b == 0 && a <= 0) || gcd(a, b) != 1 {
                continue;
            }
            out.push([a, b]);
        }
    }
    out.sort_by(|p, q| {
        let np = p[0] * p[0] + p[1] * p[1];
        let nq = q[0] * q[0] + q[1] * q[1];
        np.cmp(&nq).then_with(|| {
            let ap = (p[1] as f64).atan2(p[0] as f64);
            let aq = (q[1] as f64).atan2(q[0] as f64);
            ap.total_cmp(&aq)
        })
    });
    out
}

/// Second difference `v(x+e) - 2 v(x) + v(x-e)`.
pub fn delta_e(v: &MeshFunction, x: Multiplier, e: Multiplier) -> Result<f64> {
    let d = v.domain();
    let c = d.index_of(x).ok_or(Error::NotInDomain { point: x })?;
    let p = d.index_of([x[0] + e[0], x[1] + e[1]]);
    let m = d.index_of([x[0] - e[0], x[1] - e[1]]);
    match (p, m) {
        (Some(p), Some(m)) if e != [0, 0] => {
            Ok(v.value(p) - 2.0 * v.value(c) + v.value(m))
        }
        _ => Err(Error::InadmissibleDirection {
            point: x,
            direction: e,
        }),
    }
}

/// Primitive admissible directions at an interior point, one per antipodal
/// pair, sorted by length then angle.
pub fn admissible_directions(
    d: &LatticeDomain,
    x: Multiplier,
    policy: StencilPolicy,
) -> Result<Vec<LatticeDirection>> {
    d.interior_index(x)?;
    let extent = policy.cap().unwrap_or(i64::MAX).min(d.extent());
    Ok(primitive_candidates(extent)
        .into_iter()
        .filter(|&m| d.admissible(x, m))
        .map(|m| LatticeDirection::new(m, d.h()))
        .collect())
}

/// A pair of orthogonal lattice vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalBasis {
    pub vectors: [LatticeDirection; 2],
}

impl OrthogonalBasis {
    pub fn dot(&self) -> i64 {
        let [a, b] = self.vectors;
        a.m[0] * b.m[0] + a.m[1] * b.m[1]
    }
}

/// Orthogonal bases `(e, e⊥)` with both vectors primitive and admissible,
/// de-duplicated up to sign and order.
pub fn orthogonal_bases(
    d: &LatticeDomain,
    x: Multiplier,
    policy: StencilPolicy,
) -> Result<Vec<OrthogonalBasis>> {
    let dirs = admissible_directions(d, x, policy)?;
    let mut out = Vec::new();
    for e in &dirs {
        let perp = e.rotated();
        // keep each unordered pair once: e is the member with angle in [0, π/2)
        if e.angle() >= std::f64::consts::FRAC_PI_2 {
            continue;
        }
        if policy.allows(perp.m) && d.admissible(x, perp.m) {
            out.push(OrthogonalBasis {
                vectors: [*e, perp],
            });
        }
    }
    Ok(out)
}
