//! Discrete Monge-Ampère operators on wide stencils.
//!
//! * `ma0`: infimum over orthogonal lattice bases of the normalized product of
//!   second differences.
//! * `ma1`: area of the discrete normal mapping cut by slabs from every
//!   admissible orthogonal basis.
//! * `ma2`: area of the discrete normal mapping cut by a slab for every
//!   admissible lattice vector.
//! * `ma3`: polar quadrature of the `ma2` set on the angles of the stencil.
//! * `nine_point_product`: the closed-form product on the 9-point stencil,
//!   which equals the area of the axis box and bounds `ma1` from above.
//!
//! Slabs are taken over every admissible multiple `k e` of each primitive
//! direction, so the sets are exact for arbitrary mesh functions; for discrete
//! convex input only `k = 1` binds.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexPolygon, Vec2};
use crate::lattice::{
    canonical, primitive_candidates, LatticeDirection, LatticeDomain, MeshFunction, Multiplier,
};

pub use crate::lattice::StencilPolicy;

/// Which discrete Monge-Ampère operator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Ma0,
    Ma1,
    Ma2,
    Ma3,
    NinePointProduct,
}

/// One primitive direction at a point and its admissible multiples.
#[derive(Debug, Clone)]
struct Ray {
    m: [i32; 2],
    /// The 90° rotation is admissible too, so the ray belongs to a basis.
    basis: bool,
    /// Neighbor indices `(x + k m, x - k m)` for `k = 1..`.
    steps: Vec<(u32, u32)>,
}

/// Precomputed wide stencil of one interior point.
#[derive(Debug, Clone)]
pub struct PointStencil {
    index: usize,
    point: Multiplier,
    h: f64,
    rays: Vec<Ray>,
    /// `1 / (k h)` for `k = 1..`.
    inv_len: Arc<[f64]>,
}

/// Which slab family cuts the discrete normal mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Bases,
    All,
}

impl PointStencil {
    fn build(
        domain: &LatticeDomain,
        index: usize,
        policy: StencilPolicy,
        candidates: &[Multiplier],
        inv_len: Arc<[f64]>,
    ) -> Self {
        let x = domain.point(index);
        let cap = policy.cap().unwrap_or(i64::MAX);
        let admissible = |m: Multiplier| policy.allows(m) && domain.admissible(x, m);
        let mut rays = Vec::new();
        for &m in candidates {
            if m[0].abs().max(m[1].abs()) > cap || !domain.admissible(x, m) {
                continue;
            }
            let mut steps = Vec::new();
            let mut k = 1i64;
            loop {
                let km = [k * m[0], k * m[1]];
                if !policy.allows(km) {
                    break;
                }
                match (
                    domain.index_of([x[0] + km[0], x[1] + km[1]]),
                    domain.index_of([x[0] - km[0], x[1] - km[1]]),
                ) {
                    (Some(p), Some(q)) => steps.push((p as u32, q as u32)),
                    _ => break,
                }
                k += 1;
            }
            rays.push(Ray {
                m: [m[0] as i32, m[1] as i32],
                basis: admissible([-m[1], m[0]]),
                steps,
            });
        }
        debug_assert!(rays.len() >= 2 && rays[0].m == [1, 0] && rays[1].m == [0, 1]);
        PointStencil {
            index,
            point: x,
            h: domain.h(),
            rays,
            inv_len,
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn point(&self) -> Multiplier {
        self.point
    }

    /// Number of primitive directions (antipodal classes).
    pub fn num_directions(&self) -> usize {
        self.rays.len()
    }

    pub fn directions(&self) -> impl Iterator<Item = LatticeDirection> + '_ {
        self.rays
            .iter()
            .map(|r| LatticeDirection::new([r.m[0] as i64, r.m[1] as i64], self.h))
    }

    /// Indices of every point this stencil reads (excluding the center).
    pub fn neighbors(&self) -> impl Iterator<Item = usize> + '_ {
        self.rays
            .iter()
            .flat_map(|r| r.steps.iter().flat_map(|&(p, q)| [p as usize, q as usize]))
    }

    /// Tightest slab `lower <= p·m <= upper` over the multiples of a ray, with
    /// the center value replaced by `center`.
    #[inline]
    fn ray_bounds(&self, ray: &Ray, values: &[f64], center: f64) -> (f64, f64) {
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for (&(p, q), &inv) in ray.steps.iter().zip(self.inv_len.iter()) {
            upper = upper.min((values[p as usize] - center) * inv);
            lower = lower.max((center - values[q as usize]) * inv);
        }
        (lower, upper)
    }

    /// Clips the slabs of `family`. Returns the polygon in coordinates
    /// relative to the returned offset, or `None` when `early_exit` detects a
    /// zero-area result.
    fn clip_family(
        &self,
        values: &[f64],
        center: f64,
        family: Family,
        early_exit: bool,
    ) -> Option<(ConvexPolygon, Vec2)> {
        let (lo0, hi0) = self.ray_bounds(&self.rays[0], values, center);
        let (lo1, hi1) = self.ray_bounds(&self.rays[1], values, center);
        let (w0, w1) = (hi0 - lo0, hi1 - lo1);
        let scale = lo0
            .abs()
            .max(hi0.abs())
            .max(lo1.abs())
            .max(hi1.abs())
            .max(f64::MIN_POSITIVE);
        let tol = 1e-12 * scale;
        if w0 < -tol || w1 < -tol {
            return if early_exit {
                None
            } else {
                Some((ConvexPolygon::empty(), [0.0, 0.0]))
            };
        }
        if early_exit && (w0 <= tol || w1 <= tol) {
            return None;
        }
        let offset = [0.5 * (lo0 + hi0), 0.5 * (lo1 + hi1)];
        let (hw0, hw1) = (0.5 * w0.max(0.0), 0.5 * w1.max(0.0));
        let mut poly = ConvexPolygon::rectangle([-hw0, -hw1], [hw0, hw1]);
        let mut bb_lo = [-hw0, -hw1];
        let mut bb_hi = [hw0, hw1];
        let mut scratch = Vec::with_capacity(16);

        for ray in &self.rays[2..] {
            if family == Family::Bases && !ray.basis {
                continue;
            }
            let m = [ray.m[0] as f64, ray.m[1] as f64];
            let (lo, hi) = self.ray_bounds(ray, values, center);
            let shift = offset[0] * m[0] + offset[1] * m[1];
            let (lo, hi) = (lo - shift, hi - shift);
            let mtol = tol * (m[0].abs() + m[1].abs());
            if early_exit && hi - lo <= mtol {
                return None;
            }
            let smax = (m[0] * bb_lo[0]).max(m[0] * bb_hi[0]) + (m[1] * bb_lo[1]).max(m[1] * bb_hi[1]);
            let smin = (m[0] * bb_lo[0]).min(m[0] * bb_hi[0]) + (m[1] * bb_lo[1]).min(m[1] * bb_hi[1]);
            if smax <= hi + mtol && smin >= lo - mtol {
                continue;
            }
            if let Some((pmin, pmax)) = poly.support(m) {
                if pmax <= hi + mtol && pmin >= lo - mtol {
                    continue;
                }
            }
            poly.clip_slab_in_place(m, lo, hi, mtol, &mut scratch);
            match poly.bounds() {
                None => {
                    return if early_exit {
                        None
                    } else {
                        Some((ConvexPolygon::empty(), offset))
                    };
                }
                Some((l, u)) => {
                    bb_lo = l;
                    bb_hi = u;
                }
            }
        }
        Some((poly, offset))
    }

    fn family_area(&self, values: &[f64], center: f64, family: Family) -> f64 {
        match self.clip_family(values, center, family, true) {
            None => 0.0,
            Some((poly, _)) => poly.area(),
        }
    }

    fn family_polygon(&self, values: &[f64], center: f64, family: Family) -> ConvexPolygon {
        let (poly, o) = self
            .clip_family(values, center, family, false)
            .expect("no early exit requested");
        ConvexPolygon::from_ccw(
            poly.vertices()
                .iter()
                .map(|v| [v[0] + o[0], v[1] + o[1]])
                .collect(),
        )
    }

    /// `ma1` with the center value replaced by `center`.
    pub fn ma1_at(&self, values: &[f64], center: f64) -> f64 {
        self.family_area(values, center, Family::Bases)
    }

    /// `ma2` with the center value replaced by `center`.
    pub fn ma2_at(&self, values: &[f64], center: f64) -> f64 {
        self.family_area(values, center, Family::All)
    }

    /// The set cut by basis slabs (the `ma1` polygon) in gradient space.
    pub fn basis_polygon(&self, values: &[f64]) -> ConvexPolygon {
        self.family_polygon(values, values[self.index], Family::Bases)
    }

    /// The set cut by all slabs (the `ma2` polygon) in gradient space.
    pub fn full_polygon(&self, values: &[f64]) -> ConvexPolygon {
        self.family_polygon(values, values[self.index], Family::All)
    }

    #[inline]
    fn second_difference(&self, ray: &Ray, values: &[f64], center: f64) -> f64 {
        let (p, q) = ray.steps[0];
        values[p as usize] - 2.0 * center + values[q as usize]
    }

    /// Raw `ma0`: infimum over primitive orthogonal bases of
    /// `Δ_e v Δ_e⊥ v / (|e| |e⊥|)`. May be negative off the convex cone.
    pub fn ma0_at(&self, values: &[f64], center: f64) -> f64 {
        self.ma0_impl(values, center, false)
    }

    /// Monotone extension of `ma0` off the convex cone: per basis
    /// `Δ_e⁺ Δ_e⊥⁺ / (|e| |e⊥|) + Δ_e⁻ + Δ_e⊥⁻` with `Δ⁻ = min(Δ, 0)`. Equals
    /// `ma0` on discrete convex input and is negative wherever a basis second
    /// difference is.
    pub fn ma0_convexified_at(&self, values: &[f64], center: f64) -> f64 {
        self.ma0_impl(values, center, true)
    }

    fn ma0_impl(&self, values: &[f64], center: f64, convexified: bool) -> f64 {
        let mut best = f64::INFINITY;
        for ray in &self.rays {
            // one basis per unordered pair: the member with angle in [0, π/2)
            if !ray.basis || ray.m[0] <= 0 {
                continue;
            }
            let perp = canonical([-(ray.m[1] as i64), ray.m[0] as i64]);
            let Some(other) = self
                .rays
                .iter()
                .find(|r| r.m == [perp[0] as i32, perp[1] as i32])
            else {
                continue;
            };
            let len2 = ((ray.m[0] * ray.m[0] + ray.m[1] * ray.m[1]) as f64) * self.h * self.h;
            let a = self.second_difference(ray, values, center);
            let b = self.second_difference(other, values, center);
            let value = if convexified {
                a.max(0.0) * b.max(0.0) / len2 + a.min(0.0) + b.min(0.0)
            } else {
                a * b / len2
            };
            best = best.min(value);
        }
        best
    }

    /// `min Δ_e v / |e|^2` over all admissible lattice vectors.
    pub fn lambda1_at(&self, values: &[f64], center: f64) -> f64 {
        let mut best = f64::INFINITY;
        for ray in &self.rays {
            let n2 = (ray.m[0] * ray.m[0] + ray.m[1] * ray.m[1]) as f64 * self.h * self.h;
            for (k, &(p, q)) in ray.steps.iter().enumerate() {
                let kk = ((k + 1) * (k + 1)) as f64;
                let d = values[p as usize] - 2.0 * center + values[q as usize];
                best = best.min(d / (kk * n2));
            }
        }
        best
    }

    /// Smallest second difference over all admissible vectors, with the value
    /// at the point itself replaced by `center`.
    pub fn min_second_difference(&self, values: &[f64], center: f64) -> f64 {
        let c = center;
        self.rays
            .iter()
            .flat_map(|r| r.steps.iter())
            .map(|&(p, q)| values[p as usize] - 2.0 * c + values[q as usize])
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed-form 9-point product `Π (v(x+h r_i) - 2v(x) + v(x-h r_i)) / h`.
    pub fn nine_point_product_at(&self, values: &[f64], center: f64) -> Result<f64> {
        let has = |m: [i32; 2]| self.rays.iter().any(|r| r.m == m);
        if !(has([1, 1]) && has([-1, 1])) {
            return Err(Error::IncompleteStencil(self.point));
        }
        let a = self.second_difference(&self.rays[0], values, center);
        let b = self.second_difference(&self.rays[1], values, center);
        Ok(a * b / (self.h * self.h))
    }

    /// Polar description of the `ma2` set about `origin` in gradient space.
    pub fn polar_profile_about(&self, values: &[f64], origin: Vec2) -> PolarProfile {
        let center = values[self.index];
        let mut directions = Vec::with_capacity(self.rays.len());
        for ray in &self.rays {
            let (lo, hi) = self.ray_bounds(ray, values, center);
            let e = LatticeDirection::new([ray.m[0] as i64, ray.m[1] as i64], self.h);
            let v = e.vector();
            let shift = origin[0] * v[0] + origin[1] * v[1];
            // bounds are on p·m; differences are on p·e = h p·m
            directions.push(PolarDirection {
                angle: e.angle(),
                e,
                forward: hi * self.h - shift,
                backward: lo * self.h - shift,
            });
        }
        let mut angles: Vec<f64> = directions
            .iter()
            .flat_map(|d| [d.angle, d.angle + PI])
            .collect();
        angles.sort_by(f64::total_cmp);
        PolarProfile {
            directions,
            angles,
            origin,
        }
    }

    /// Centered-difference gradient (center of the axis box).
    pub fn centered_gradient(&self, values: &[f64]) -> Vec2 {
        let g = |ray: &Ray| {
            let (p, q) = ray.steps[0];
            (values[p as usize] - values[q as usize]) / (2.0 * self.h)
        };
        [g(&self.rays[0]), g(&self.rays[1])]
    }

    /// Polar quadrature of the `ma2` set about the centered-difference
    /// gradient, on the stencil angles refined `refinement` times.
    pub fn ma3_at(&self, values: &[f64], center: f64, refinement: usize) -> f64 {
        let mut vals;
        let values = if center != values[self.index] {
            vals = values.to_vec();
            vals[self.index] = center;
            &vals[..]
        } else {
            values
        };
        let profile = self.polar_profile_about(values, self.centered_gradient(values));
        profile.quadrature(refinement)
    }
}

/// One direction of a polar profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarDirection {
    /// `θ'` in `[0, π)`.
    pub angle: f64,
    pub e: LatticeDirection,
    /// `v(x+e) - v(x) - origin·e`, tightened over admissible multiples.
    pub forward: f64,
    /// `v(x) - v(x-e) - origin·e`, tightened over admissible multiples.
    pub backward: f64,
}

/// Directions, differences and sorted angles `{θ'_j} ∪ {θ'_j + π}` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarProfile {
    pub directions: Vec<PolarDirection>,
    pub angles: Vec<f64>,
    /// Gradient-space point the polar coordinates are centered on.
    pub origin: Vec2,
}

/// Directions with `cos(θ - θ') <= COS_CUTOFF` do not bind a ray.
const COS_CUTOFF: f64 = 1e-12;

impl PolarProfile {
    pub fn num_directions(&self) -> usize {
        self.directions.len()
    }

    /// `(R_-, R_+)` along the ray of angle `theta`; infinite when no direction
    /// binds.
    pub fn r_bounds(&self, theta: f64) -> (f64, f64) {
        let mut r_minus = f64::NEG_INFINITY;
        let mut r_plus = f64::INFINITY;
        for d in &self.directions {
            let len = d.e.norm();
            let c = (theta - d.angle).cos();
            if c > COS_CUTOFF {
                r_plus = r_plus.min(d.forward / (len * c));
                r_minus = r_minus.max(d.backward / (len * c));
            } else if c < -COS_CUTOFF {
                // the antipodal representative -e at angle θ' + π
                let c = -c;
                r_plus = r_plus.min(-d.backward / (len * c));
                r_minus = r_minus.max(-d.forward / (len * c));
            }
        }
        (r_minus, r_plus)
    }

    /// Left-endpoint quadrature of `½ (R_+² - max(R_-, 0)²)^+` over the full
    /// circle, including the interval from the last angle back to the first.
    pub fn quadrature(&self, refinement: usize) -> f64 {
        let refinement = refinement.max(1);
        let n = self.angles.len();
        let mut total = 0.0;
        for k in 0..n {
            let a = self.angles[k];
            let b = if k + 1 < n {
                self.angles[k + 1]
            } else {
                self.angles[0] + TAU
            };
            let step = (b - a) / refinement as f64;
            if step <= 0.0 {
                continue;
            }
            for s in 0..refinement {
                let theta = a + s as f64 * step;
                let (rm, rp) = self.r_bounds(theta);
                let rp = rp.max(0.0);
                let rm = rm.max(0.0);
                total += 0.5 * step * (rp * rp - rm * rm).max(0.0);
            }
        }
        total
    }
}

/// Wide stencils for every interior point of a domain under a policy.
#[derive(Debug, Clone)]
pub struct Stencil {
    domain: Arc<LatticeDomain>,
    policy: StencilPolicy,
    points: Vec<PointStencil>,
    slot: Vec<u32>,
}

impl Stencil {
    pub fn new(domain: Arc<LatticeDomain>, policy: StencilPolicy) -> Result<Self> {
        policy.validate()?;
        let extent = policy.cap().unwrap_or(i64::MAX).min(domain.extent());
        let candidates = primitive_candidates(extent);
        let inv_len = inverse_lengths(&domain);
        let mut slot = vec![u32::MAX; domain.len()];
        let points = domain
            .interior()
            .iter()
            .enumerate()
            .map(|(k, &idx)| {
                slot[idx] = k as u32;
                PointStencil::build(&domain, idx, policy, &candidates, inv_len.clone())
            })
            .collect();
        Ok(Stencil {
            domain,
            policy,
            points,
            slot,
        })
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn policy(&self) -> StencilPolicy {
        self.policy
    }

    /// Stencils in the order of [`LatticeDomain::interior`].
    pub fn points(&self) -> &[PointStencil] {
        &self.points
    }

    /// Stencil of an interior point, by domain index.
    pub fn at_index(&self, idx: usize) -> Option<&PointStencil> {
        match self.slot.get(idx) {
            Some(&s) if s != u32::MAX => Some(&self.points[s as usize]),
            _ => None,
        }
    }

    pub fn at(&self, x: Multiplier) -> Result<&PointStencil> {
        let idx = self.domain.interior_index(x)?;
        Ok(self.at_index(idx).expect("interior point has a stencil"))
    }

    /// Evaluates an operator at an interior point. `ma3` uses `refinement`.
    pub fn evaluate(&self, kind: OperatorKind, v: &[f64], idx: usize, refinement: usize) -> f64 {
        let st = self.at_index(idx).expect("interior point");
        let c = v[idx];
        match kind {
            OperatorKind::Ma0 => st.ma0_at(v, c),
            OperatorKind::Ma1 => st.ma1_at(v, c),
            OperatorKind::Ma2 => st.ma2_at(v, c),
            OperatorKind::Ma3 => st.ma3_at(v, c, refinement),
            OperatorKind::NinePointProduct => st.nine_point_product_at(v, c).unwrap_or(f64::NAN),
        }
    }

    /// Evaluates an operator on every interior point (in interior order).
    pub fn evaluate_all(&self, kind: OperatorKind, v: &MeshFunction, refinement: usize) -> Vec<f64> {
        self.domain
            .interior()
            .iter()
            .map(|&idx| self.evaluate(kind, v.values(), idx, refinement))
            .collect()
    }
}

fn point_stencil(v: &MeshFunction, x: Multiplier, policy: StencilPolicy) -> Result<PointStencil> {
    policy.validate()?;
    let d = v.domain();
    let idx = d.interior_index(x)?;
    let extent = policy.cap().unwrap_or(i64::MAX).min(d.extent());
    Ok(PointStencil::build(
        d,
        idx,
        policy,
        &primitive_candidates(extent),
        inverse_lengths(d),
    ))
}

fn inverse_lengths(d: &LatticeDomain) -> Arc<[f64]> {
    (1..=2 * d.extent() + 1)
        .map(|k| 1.0 / (k as f64 * d.h()))
        .collect()
}

/// `min_e Δ_e v(x) / |e|^2` over admissible directions under `policy`.
pub fn lambda1(v: &MeshFunction, x: Multiplier, policy: StencilPolicy) -> Result<f64> {
    let st = point_stencil(v, x, policy)?;
    Ok(st.lambda1_at(v.values(), v.values()[st.index]))
}

/// Whether every admissible second difference is at least `-tol`.
pub fn is_discrete_convex(v: &MeshFunction, policy: StencilPolicy, tol: f64) -> Result<bool> {
    Ok(convexity_defect(v, policy)? <= tol)
}

/// `-min Δ_e v(x)` over interior points and admissible vectors (clamped at 0).
pub fn convexity_defect(v: &MeshFunction, policy: StencilPolicy) -> Result<f64> {
    let stencil = Stencil::new(v.domain().clone(), policy)?;
    Ok(stencil_convexity_defect(&stencil, v))
}

pub(crate) fn stencil_convexity_defect(stencil: &Stencil, v: &MeshFunction) -> f64 {
    let min = stencil
        .points()
        .iter()
        .map(|st| st.min_second_difference(v.values(), v.values()[st.index()]))
        .fold(f64::INFINITY, f64::min);
    (-min).max(0.0)
}

pub fn ma0(v: &MeshFunction, x: Multiplier, policy: StencilPolicy) -> Result<f64> {
    let st = point_stencil(v, x, policy)?;
    Ok(st.ma0_at(v.values(), v.values()[st.index]))
}

pub fn ma1(v: &MeshFunction, x: Multiplier, policy: StencilPolicy) -> Result<f64> {
    let st = point_stencil(v, x, policy)?;
    Ok(st.ma1_at(v.values(), v.values()[st.index]))
}

pub fn ma2(v: &MeshFunction, x: Multiplier, policy: StencilPolicy) -> Result<f64> {
    let st = point_stencil(v, x, policy)?;
    Ok(st.ma2_at(v.values(), v.values()[st.index]))
}

pub fn ma3(
    v: &MeshFunction,
    x: Multiplier,
    policy: StencilPolicy,
    angle_refinement: usize,
) -> Result<f64> {
    let st = point_stencil(v, x, policy)?;
    Ok(st.ma3_at(v.values(), v.values()[st.index], angle_refinement))
}

/// The `ma1` set (basis slabs) at `x`.
pub fn subdifferential_bases(
    v: &MeshFunction,
    x: Multiplier,
    policy: StencilPolicy,
) -> Result<ConvexPolygon> {
    Ok(point_stencil(v, x, policy)?.basis_polygon(v.values()))
}

/// The `ma2` set (all slabs) at `x`.
pub fn subdifferential_full(
    v: &MeshFunction,
    x: Multiplier,
    policy: StencilPolicy,
) -> Result<ConvexPolygon> {
    Ok(point_stencil(v, x, policy)?.full_polygon(v.values()))
}

pub fn nine_point_product(v: &MeshFunction, x: Multiplier) -> Result<f64> {
    let st = point_stencil(v, x, StencilPolicy::NinePoint)?;
    st.nine_point_product_at(v.values(), v.values()[st.index])
}

/// Polar profile with raw differences (polar coordinates about `p = 0`).
pub fn polar_profile(v: &MeshFunction, x: Multiplier, policy: StencilPolicy) -> Result<PolarProfile> {
    let st = point_stencil(v, x, policy)?;
    Ok(st.polar_profile_about(v.values(), [0.0, 0.0]))
}

pub fn r_bounds(profile: &PolarProfile, theta: f64) -> (f64, f64) {
    profile.r_bounds(theta)
}

/// `sup_x (x·p - v(x))` over lattice points of the open domain.
pub fn discrete_legendre(v: &MeshFunction, p: Vec2) -> f64 {
    let d = v.domain();
    (0..d.len())
        .filter(|&i| d.shape().excess(d.coords(i)) < -d.tolerance())
        .map(|i| {
            let x = d.coords(i);
            x[0] * p[0] + x[1] * p[1] - v.value(i)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DomainShape;

    fn square(h: f64) -> Arc<LatticeDomain> {
        Arc::new(LatticeDomain::build(DomainShape::square(-1.0, 1.0), h).unwrap())
    }

    fn quadratic(d: &Arc<LatticeDomain>) -> MeshFunction {
        MeshFunction::restrict(d.clone(), |p| 0.5 * (p[0] * p[0] + p[1] * p[1]))
    }

    fn cone(d: &Arc<LatticeDomain>) -> MeshFunction {
        MeshFunction::restrict(d.clone(), |p| (p[0] * p[0] + p[1] * p[1]).sqrt())
    }

    const OCTAGON: f64 = 3.313708498984761; // 8 (√2 - 1)

    #[test]
    fn lambda1_examples() {
        let d = square(0.25);
        let full = StencilPolicy::Full;
        assert!((lambda1(&quadratic(&d), [1, -1], full).unwrap() - 1.0).abs() < 1e-12);
        let affine = MeshFunction::restrict(d.clone(), |p| p[0] - 3.0 * p[1]);
        assert!(lambda1(&affine, [0, 0], full).unwrap().abs() < 1e-12);
        let neg = MeshFunction::restrict(d.clone(), |p| -0.5 * (p[0] * p[0] + p[1] * p[1]));
        assert!((lambda1(&neg, [2, 1], full).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn convexity_checks() {
        let d = square(0.25);
        assert!(is_discrete_convex(&cone(&d), StencilPolicy::Full, 1e-12).unwrap());
        let mut bumped = quadratic(&d);
        bumped.set([0, 0], 0.2).unwrap();
        assert!(!is_discrete_convex(&bumped, StencilPolicy::NinePoint, 0.0).unwrap());
    }

    #[test]
    fn ma0_examples() {
        for h in [0.5, 0.25, 0.125] {
            let d = square(h);
            let q = ma0(&quadratic(&d), [0, 0], StencilPolicy::Full).unwrap();
            assert!((q - h * h).abs() < 1e-14);
            let c = ma0(&cone(&d), [0, 0], StencilPolicy::Full).unwrap();
            assert!((c - 4.0).abs() < 1e-12);
        }
        let d = square(0.25);
        let affine = MeshFunction::restrict(d.clone(), |p| 0.7 * p[0] + 0.1);
        assert!(ma0(&affine, [1, 2], StencilPolicy::Full).unwrap().abs() < 1e-14);
    }

    #[test]
    fn ma1_ma2_examples() {
        let d = square(1.0);
        let c = cone(&d);
        assert!((ma1(&c, [0, 0], StencilPolicy::Full).unwrap() - OCTAGON).abs() < 1e-12);
        assert!((ma2(&c, [0, 0], StencilPolicy::Full).unwrap() - OCTAGON).abs() < 1e-12);
        assert!((nine_point_product(&c, [0, 0]).unwrap() - 4.0).abs() < 1e-12);

        let d = square(0.125);
        let q = quadratic(&d);
        for x in [[0, 0], [3, -2], [-6, 6]] {
            assert!((ma1(&q, x, StencilPolicy::Full).unwrap() - 0.015625).abs() < 1e-12);
            assert!((ma2(&q, x, StencilPolicy::Full).unwrap() - 0.015625).abs() < 1e-12);
        }
        let affine = MeshFunction::restrict(d.clone(), |p| 2.0 * p[0] + p[1]);
        assert_eq!(ma1(&affine, [1, 1], StencilPolicy::Full).unwrap(), 0.0);
        assert_eq!(ma2(&affine, [1, 1], StencilPolicy::Full).unwrap(), 0.0);
        let ridge = MeshFunction::restrict(d.clone(), |p| p[0].abs());
        assert_eq!(ma2(&ridge, [0, 3], StencilPolicy::Full).unwrap(), 0.0);
        assert_eq!(ma2(&ridge, [2, 3], StencilPolicy::Full).unwrap(), 0.0);
    }

    #[test]
    fn polygon_matches_area() {
        let d = square(0.25);
        let c = cone(&d);
        let poly = subdifferential_full(&c, [0, 0], StencilPolicy::Full).unwrap();
        let a = ma2(&c, [0, 0], StencilPolicy::Full).unwrap();
        assert!((poly.area() - a).abs() < 1e-12);
        assert!(poly.min_turn() >= -1e-12);
    }

    #[test]
    fn polar_profile_center() {
        let d = square(1.0);
        let q = quadratic(&d);
        let prof = polar_profile(&q, [0, 0], StencilPolicy::Full).unwrap();
        assert_eq!(prof.num_directions(), 4);
        assert_eq!(prof.angles.len(), 8);
        for (k, a) in prof.angles.iter().enumerate() {
            assert!((a - k as f64 * PI / 4.0).abs() < 1e-12);
        }
        for dir in &prof.directions {
            let n2 = dir.e.norm().powi(2);
            assert!((dir.forward - n2 / 2.0).abs() < 1e-15);
            assert!((dir.backward + n2 / 2.0).abs() < 1e-15);
        }
        let (rm, rp) = prof.r_bounds(0.0);
        assert!((rp - 0.5).abs() < 1e-12 && rm < 0.0);
        let (_, rp) = prof.r_bounds(PI / 4.0);
        assert!((rp - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let disc = DomainShape::Disc {
            center: [0.0, 0.0],
            radius: 1.0,
        };
        let d = Arc::new(LatticeDomain::build(disc, 0.5).unwrap());
        let near = polar_profile(&quadratic(&d), [1, 0], StencilPolicy::Full).unwrap();
        assert_eq!(near.num_directions(), 2);
        assert_eq!(near.angles.len(), 4);
    }

    #[test]
    fn cone_polar_bounds() {
        let d = square(1.0);
        let prof = polar_profile(&cone(&d), [0, 0], StencilPolicy::Full).unwrap();
        let theta = 0.3f64;
        let (rm, rp) = prof.r_bounds(theta);
        let expect_plus = prof
            .directions
            .iter()
            .map(|d| 1.0 / (theta - d.angle).cos().abs())
            .fold(f64::INFINITY, f64::min);
        assert!((rp - expect_plus).abs() < 1e-12);
        assert!((rm + expect_plus).abs() < 1e-12);
    }

    #[test]
    fn ma3_quadrature() {
        let d = square(1.0);
        let q = quadratic(&d);
        let coarse = ma3(&q, [0, 0], StencilPolicy::Full, 1).unwrap();
        assert!((coarse - 3.0 * PI / 8.0).abs() < 1e-12);
        let fine = ma3(&q, [0, 0], StencilPolicy::Full, 64).unwrap();
        assert!((fine - 1.0).abs() < 0.01);
        let affine = MeshFunction::restrict(d.clone(), |p| p[0] + 2.0 * p[1]);
        assert_eq!(ma3(&affine, [0, 0], StencilPolicy::Full, 4).unwrap(), 0.0);
    }

    #[test]
    fn ma3_off_center_uses_shifted_origin() {
        let d = square(0.25);
        let q = quadratic(&d);
        let a2 = ma2(&q, [2, -1], StencilPolicy::Full).unwrap();
        let a3 = ma3(&q, [2, -1], StencilPolicy::Full, 64).unwrap();
        assert!((a3 - a2).abs() < 0.01 * a2, "{a3} vs {a2}");
    }

    #[test]
    fn legendre_examples() {
        let d = square(0.25);
        let q = quadratic(&d);
        assert!((discrete_legendre(&q, [0.5, -0.25]) - 0.5 * (0.25 + 0.0625)).abs() < 1e-14);
        let lin = MeshFunction::restrict(d.clone(), |p| 0.3 * p[0] - 0.7 * p[1]);
        assert!(discrete_legendre(&lin, [0.3, -0.7]).abs() < 1e-14);
    }

    #[test]
    fn degenerate_slab_polygon_is_a_segment() {
        let d = square(0.25);
        let ridge = MeshFunction::restrict(d.clone(), |p| p[0].abs());
        let poly = subdifferential_full(&ridge, [0, 1], StencilPolicy::Full).unwrap();
        assert_eq!(poly.area(), 0.0);
        assert!(!poly.is_empty());
        // the segment p2 = 0, -1 <= p1 <= 1
        let (lo, hi) = poly.bounds().unwrap();
        assert!((lo[0] + 1.0).abs() < 1e-12 && (hi[0] - 1.0).abs() < 1e-12);
        assert!(lo[1].abs() < 1e-12 && hi[1].abs() < 1e-12);
    }

    #[test]
    fn non_convex_center_gives_empty_set() {
        let d = square(0.25);
        let mut v = quadratic(&d);
        v.set([0, 0], 1.0).unwrap();
        assert_eq!(ma2(&v, [0, 0], StencilPolicy::Full).unwrap(), 0.0);
        assert!(subdifferential_full(&v, [0, 0], StencilPolicy::Full)
            .unwrap()
            .is_empty());
        assert!(ma0(&v, [0, 0], StencilPolicy::Full).unwrap() > 0.0);
    }
}
