//! Damped Euler iteration for the discrete Dirichlet problem
//! `M[u](x) = h^2 f(x)` on interior points with `u = g̃` on boundary points.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, MeshFunction, Multiplier, StencilPolicy};
use crate::measure::DiscretizedSource;
use crate::operators::{stencil_convexity_defect, OperatorKind, PointStencil, Stencil};

/// Catalog of convex boundary extensions `g̃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum BoundaryData {
    /// `a |x - center|^2 / 2 + b·x + c`, convex for `a >= 0`.
    Quadratic {
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        b: [f64; 2],
        #[serde(default)]
        c: f64,
    },
    /// `|x - center|`.
    Cone {
        #[serde(default)]
        center: [f64; 2],
    },
    /// `|x_1|`.
    Ridge,
    /// `|x - center|^p / p`, convex for `p >= 1`.
    RadialPower {
        p: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `b·x + c`.
    Affine {
        #[serde(default)]
        b: [f64; 2],
        #[serde(default)]
        c: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl BoundaryData {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match *self {
            BoundaryData::Quadratic { a, .. } if !(a >= 0.0 && a.is_finite()) => {
                bad(format!("quadratic needs a >= 0 for convexity, got {a}"))
            }
            BoundaryData::RadialPower { p, .. } if !(p >= 1.0 && p.is_finite()) => {
                bad(format!("radial power needs p >= 1 for convexity, got {p}"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            BoundaryData::Quadratic { a, center, b, c } => {
                let d = [x[0] - center[0], x[1] - center[1]];
                0.5 * a * (d[0] * d[0] + d[1] * d[1]) + b[0] * x[0] + b[1] * x[1] + c
            }
            BoundaryData::Cone { center } => (x[0] - center[0]).hypot(x[1] - center[1]),
            BoundaryData::Ridge => x[0].abs(),
            BoundaryData::RadialPower { p, center } => {
                (x[0] - center[0]).hypot(x[1] - center[1]).powf(p) / p
            }
            BoundaryData::Affine { b, c } => b[0] * x[0] + b[1] * x[1] + c,
        }
    }

    /// Restriction to every lattice point of the domain.
    pub fn restrict(&self, d: &Arc<LatticeDomain>) -> MeshFunction {
        MeshFunction::restrict(d.clone(), |p| self.eval(p))
    }

    /// `max |g̃|` over the lattice points of the domain.
    pub fn max_abs(&self, d: &LatticeDomain) -> f64 {
        (0..d.len())
            .map(|i| self.eval(d.coords(i)).abs())
            .fold(0.0, f64::max)
    }
}

/// Starting iterate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    /// `g̃` restricted to all lattice points.
    #[default]
    GTilde,
    /// Discrete harmonic function with boundary values `g̃`.
    Harmonic,
}

/// Update pattern of one iteration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// Simultaneous update `v - ν F[v]`.
    #[default]
    Euler,
    /// Lexicographic pointwise solves.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_operator")]
    pub operator: OperatorKind,
    #[serde(default)]
    pub policy: StencilPolicy,
    #[serde(default = "default_nu")]
    pub nu: f64,
    /// Defaults to `1e-10 max |g̃|`.
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Sup-norm residual target; defaults to `1e-8 max(h^2, h^2 max f)`.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub init: Init,
    #[serde(default)]
    pub sweep: Sweep,
    /// Angular refinement of the polar quadrature (`ma3` only).
    #[serde(default = "default_refinement")]
    pub angle_refinement: usize,
}

fn default_operator() -> OperatorKind {
    OperatorKind::Ma2
}
fn default_nu() -> f64 {
    0.1
}
fn default_max_iter() -> usize {
    200_000
}
fn default_refinement() -> usize {
    1
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            operator: default_operator(),
            policy: StencilPolicy::default(),
            nu: default_nu(),
            epsilon: None,
            tol: None,
            max_iter: default_max_iter(),
            init: Init::default(),
            sweep: Sweep::default(),
            angle_refinement: default_refinement(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::InvalidConfig(format!("nu must lie in (0, 1], got {}", self.nu)));
        }
        if let Some(e) = self.epsilon {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {e}")));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidConfig(format!("tol must be positive, got {t}")));
            }
        }
        if self.angle_refinement == 0 {
            return Err(Error::InvalidConfig("angle_refinement must be >= 1".into()));
        }
        self.policy.validate()
    }

    /// Copy with `epsilon` and `tol` filled in for a concrete problem.
    pub fn resolved(&self, f: &DiscretizedSource, g: &BoundaryData) -> SolverConfig {
        let d = f.domain();
        let h2 = d.h() * d.h();
        let fmax = d.interior().iter().map(|&i| f.f.value(i)).fold(0.0, f64::max);
        let mut out = self.clone();
        out.epsilon = Some(self.epsilon.unwrap_or(1e-10 * g.max_abs(d)));
        out.tol = Some(self.tol.unwrap_or(1e-8 * h2.max(h2 * fmax)));
        out
    }

    fn epsilon_value(&self) -> f64 {
        self.epsilon.unwrap_or(0.0)
    }

    fn tol_value(&self) -> f64 {
        self.tol.unwrap_or(1e-8)
    }
}

/// Stability diagnostic `max |v| <= 2Δ (Σ ma2 / π)^(1/2) + max_boundary |v|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stability {
    /// `max |v|` over interior points.
    pub alpha: f64,
    /// Bound including the boundary offset.
    pub bound: f64,
    pub satisfied: bool,
    /// `2Δ (Σ ma2 / π)^(1/2)` without the boundary offset.
    pub unmodified_bound: f64,
    pub unmodified_satisfied: bool,
    /// `max |v|` over boundary points.
    pub boundary_max: f64,
    /// `Σ ma2` over interior points.
    pub measure_total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub solution: MeshFunction,
    pub iterations: usize,
    /// Sup-norm residual of every accepted iterate, starting with the initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub final_residual: f64,
    pub backtracks: usize,
    /// `-min Δ_e v` over interior points and admissible vectors, clamped at 0.
    pub convexity_defect: f64,
    pub stability: Stability,
    /// `Σ ma2` over interior points.
    pub measure_total: f64,
    /// Configuration with defaults resolved.
    pub config: SolverConfig,
    /// Conventions in force for this run.
    pub notes: Vec<String>,
}

/// Per-point residual rule.
#[derive(Clone, Copy)]
enum Rule {
    /// `target - max(op, 0) - min(Δ_min, 0) + ε v`.
    Op { op: OperatorKind, target: f64 },
}

struct Problem<'a> {
    stencil: &'a Stencil,
    /// Aligned with `stencil.points()`.
    rules: Vec<Rule>,
    epsilon: f64,
    refinement: usize,
}

impl Problem<'_> {
    fn point_residual(&self, k: usize, values: &[f64], center: f64) -> f64 {
        let st = &self.stencil.points()[k];
        let Rule::Op { op, target } = self.rules[k];
        let m = operator_value(st, op, values, center, self.refinement);
        // Areas vanish on non-convex stencils, which would make every locally
        // non-convex value a root where the target is 0. The negative part of
        // the smallest second difference restores a sign there and is zero on
        // discrete convex functions. The convexified ma0 carries it already.
        let m = if op == OperatorKind::Ma0 {
            m
        } else {
            m.max(0.0) + st.min_second_difference(values, center).min(0.0)
        };
        target - m + self.epsilon * center
    }

    /// Residual at interior points (interior order).
    fn residual(&self, values: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.stencil.points().iter().enumerate().map(|(k, st)| {
            self.point_residual(k, values, values[st.index()])
        }));
    }
}

fn operator_value(st: &PointStencil, op: OperatorKind, values: &[f64], center: f64, refinement: usize) -> f64 {
    match op {
        OperatorKind::Ma0 => st.ma0_convexified_at(values, center),
        OperatorKind::Ma1 => st.ma1_at(values, center),
        OperatorKind::Ma2 => st.ma2_at(values, center),
        OperatorKind::Ma3 => st.ma3_at(values, center, refinement),
        OperatorKind::NinePointProduct => st
            .nine_point_product_at(values, center)
            .unwrap_or_else(|_| st.ma1_at(values, center)),
    }
}

fn sup(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |a, &b| a.max(b.abs()))
}

fn check_source(d: &Arc<LatticeDomain>, f: &DiscretizedSource) -> Result<()> {
    let other = f.domain();
    if !Arc::ptr_eq(d, other)
        && (d.h() != other.h() || d.len() != other.len() || d.shape() != other.shape())
    {
        return Err(Error::InvalidConfig("source data lives on a different lattice".into()));
    }
    if let Some(&i) = d.interior().iter().find(|&&i| !(f.f.value(i) >= 0.0)) {
        return Err(Error::InvalidMeasure(format!(
            "source data must be nonnegative, got {} at {:?}",
            f.f.value(i),
            d.point(i)
        )));
    }
    Ok(())
}

/// `F(x) = h^2 f(x) - max(ma(v, x), 0) - min(Δ_min v(x), 0) + ε v(x)` at
/// interior points, 0 on the boundary. `Δ_min` is the smallest second
/// difference over the stencil, so the extra term vanishes on discrete convex
/// `v`.
pub fn residual(v: &MeshFunction, f: &DiscretizedSource, cfg: &SolverConfig) -> Result<MeshFunction> {
    cfg.validate()?;
    let d = v.domain();
    check_source(d, f)?;
    let stencil = Stencil::new(d.clone(), cfg.policy)?;
    let problem = standard_problem(&stencil, f, cfg);
    let mut r = Vec::new();
    problem.residual(v.values(), &mut r);
    Ok(scatter(d, &r))
}

/// One damped update `v - ν F[v]` at interior points.
pub fn euler_step(
    v: &MeshFunction,
    f: &DiscretizedSource,
    cfg: &SolverConfig,
    nu_current: f64,
) -> Result<MeshFunction> {
    let r = residual(v, f, cfg)?;
    let mut next = v.clone();
    for &i in v.domain().interior() {
        next.values_mut()[i] -= nu_current * r.value(i);
    }
    Ok(next)
}

fn scatter(d: &Arc<LatticeDomain>, interior_values: &[f64]) -> MeshFunction {
    let mut values = vec![0.0; d.len()];
    for (&i, &r) in d.interior().iter().zip(interior_values) {
        values[i] = r;
    }
    MeshFunction::from_values(d.clone(), values).expect("length matches")
}

fn standard_problem<'a>(stencil: &'a Stencil, f: &DiscretizedSource, cfg: &SolverConfig) -> Problem<'a> {
    let h2 = stencil.domain().h().powi(2);
    Problem {
        stencil,
        rules: stencil
            .points()
            .iter()
            .map(|st| Rule::Op {
                op: cfg.operator,
                target: h2 * f.f.value(st.index()),
            })
            .collect(),
        epsilon: cfg.epsilon_value(),
        refinement: cfg.angle_refinement,
    }
}

/// Solves `M[u] = h^2 f` on interior points with `u = g̃` on the boundary.
pub fn solve(
    d: &Arc<LatticeDomain>,
    f: &DiscretizedSource,
    g: &BoundaryData,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    g.validate()?;
    check_source(d, f)?;
    let cfg = cfg.resolved(f, g);
    let stencil = Stencil::new(d.clone(), cfg.policy)?;
    let problem = standard_problem(&stencil, f, &cfg);
    let mut notes = vec![if cfg.operator == OperatorKind::Ma0 {
        "residual F = h^2 f - ma0 + epsilon v with the convexity-enforcing ma0 extension".to_string()
    } else {
        format!(
            "residual F = h^2 f - max({:?}, 0) - min(smallest second difference, 0) + epsilon v",
            cfg.operator
        )
    }];
    if cfg.operator == OperatorKind::Ma3 {
        notes.push("ma3 quadrature includes the wrap-around interval".into());
    }
    run(d, g, &cfg, &stencil, &problem, notes)
}

/// Mixed scheme: `ma3(x)` equals the point mass at the listed points (the
/// mass-style datum, so no further `h^2` factor) and `ma0(x) = 0` elsewhere.
pub fn solve_mixed(
    d: &Arc<LatticeDomain>,
    dirac_points: &[Multiplier],
    f: &DiscretizedSource,
    g: &BoundaryData,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    cfg.validate()?;
    g.validate()?;
    check_source(d, f)?;
    let mut dirac_idx = Vec::with_capacity(dirac_points.len());
    for &m in dirac_points {
        dirac_idx.push(d.interior_index(m)?);
    }
    if let Some(&i) = d
        .interior()
        .iter()
        .find(|&&i| f.f.value(i) != 0.0 && !dirac_idx.contains(&i))
    {
        return Err(Error::InvalidMeasure(format!(
            "mixed scheme needs f = 0 away from the point masses, got {} at {:?}",
            f.f.value(i),
            d.point(i)
        )));
    }
    let cfg = cfg.resolved(f, g);
    let h2 = d.h() * d.h();
    let stencil = Stencil::new(d.clone(), cfg.policy)?;
    let problem = Problem {
        stencil: &stencil,
        rules: stencil
            .points()
            .iter()
            .map(|st| {
                if dirac_idx.contains(&st.index()) {
                    // mass-style data: the point mass itself, h^2 f
                    Rule::Op {
                        op: OperatorKind::Ma3,
                        target: h2 * f.f.value(st.index()),
                    }
                } else {
                    Rule::Op {
                        op: OperatorKind::Ma0,
                        target: 0.0,
                    }
                }
            })
            .collect(),
        epsilon: cfg.epsilon_value(),
        refinement: cfg.angle_refinement,
    };
    let notes = vec![
        "mixed scheme: ma3 = point mass at dirac points (mass-style data), ma0 = 0 elsewhere".into(),
        "ma0 in the residual is the convexity-enforcing extension (negative parts of basis second differences added)".into(),
        "ma3 quadrature includes the wrap-around interval".into(),
    ];
    run(d, g, &cfg, &stencil, &problem, notes)
}

fn run(
    d: &Arc<LatticeDomain>,
    g: &BoundaryData,
    cfg: &SolverConfig,
    stencil: &Stencil,
    problem: &Problem,
    notes: Vec<String>,
) -> Result<SolveReport> {
    let mut v = match cfg.init {
        Init::GTilde => g.restrict(d),
        Init::Harmonic => harmonic_init(d, g),
    };
    let tol = cfg.tol_value();
    let (iterations, history, backtracks) = match cfg.sweep {
        Sweep::Euler => euler_loop(&mut v, problem, cfg.nu, tol, cfg.max_iter)?,
        Sweep::GaussSeidel => gauss_seidel_loop(&mut v, problem, cfg.nu, tol, cfg.max_iter)?,
    };
    let final_residual = *history.last().expect("initial residual recorded");
    let stability = stability_with(&v, stencil);
    Ok(SolveReport {
        convexity_defect: stencil_convexity_defect(stencil, &v),
        measure_total: stability.measure_total,
        stability,
        solution: v,
        iterations,
        converged: final_residual <= tol,
        final_residual,
        residual_history: history,
        backtracks,
        config: cfg.clone(),
        notes,
    })
}

/// Returns `(iterations, accepted residual history, backtracks)`.
fn euler_loop(
    v: &mut MeshFunction,
    problem: &Problem,
    nu: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(usize, Vec<f64>, usize)> {
    let interior: Vec<usize> = problem.stencil.points().iter().map(|s| s.index()).collect();
    let mut res = Vec::with_capacity(interior.len());
    problem.residual(v.values(), &mut res);
    let mut r = sup(&res);
    if !r.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let mut history = vec![r];
    let mut candidate = v.values().to_vec();
    let mut cand_res = Vec::with_capacity(interior.len());
    let mut nu_cur = nu;
    let mut backtracks = 0;
    let mut it = 0;
    while it < max_iter && r > tol {
        it += 1;
        candidate.copy_from_slice(v.values());
        for (k, &i) in interior.iter().enumerate() {
            candidate[i] -= nu_cur * res[k];
        }
        problem.residual(&candidate, &mut cand_res);
        let rc = sup(&cand_res);
        if !rc.is_finite() || candidate.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(it));
        }
        if rc > r {
            backtracks += 1;
            nu_cur *= 0.5;
            if nu_cur < 1e-14 * nu {
                break;
            }
            continue;
        }
        v.values_mut().copy_from_slice(&candidate);
        std::mem::swap(&mut res, &mut cand_res);
        r = rc;
        history.push(r);
        // recover the configured step after a successful update
        nu_cur = (nu_cur * 1.25).min(nu);
    }
    Ok((it, history, backtracks))
}

/// Lexicographic sweeps solving each pointwise equation; each sweep counts as
/// one iteration. Exact pointwise solves can raise the sup-norm residual at
/// points visited earlier, so the history of this mode need not be monotone.
fn gauss_seidel_loop(
    v: &mut MeshFunction,
    problem: &Problem,
    nu: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(usize, Vec<f64>, usize)> {
    let mut res = Vec::new();
    problem.residual(v.values(), &mut res);
    let mut r = sup(&res);
    if !r.is_finite() {
        return Err(Error::NonFinite(0));
    }
    let point_tol = 1e-2 * tol;
    // secant slope of each pointwise equation from its previous solve
    let mut slopes = vec![0.0f64; problem.stencil.points().len()];
    let mut history = vec![r];
    let mut it = 0;
    while it < max_iter && r > tol {
        it += 1;
        for (k, st) in problem.stencil.points().iter().enumerate() {
            let i = st.index();
            let t0 = v.values()[i];
            let vals = v.values();
            let g = |t: f64| problem.point_residual(k, vals, t);
            let g0 = g(t0);
            if g0.abs() <= point_tol {
                continue;
            }
            let t_new = pointwise_update(&g, t0, g0, &mut slopes[k], point_tol)
                .unwrap_or(t0 - nu * g0);
            v.values_mut()[i] = t_new;
        }
        problem.residual(v.values(), &mut res);
        let rn = sup(&res);
        if !rn.is_finite() {
            return Err(Error::NonFinite(it));
        }
        r = rn;
        history.push(r);
    }
    Ok((it, history, 0))
}

/// One pointwise solve: a secant step with the remembered slope, accepted
/// when it does not overshoot; otherwise a bracketed root solve.
fn pointwise_update<G: Fn(f64) -> f64>(
    g: &G,
    t0: f64,
    g0: f64,
    slope: &mut f64,
    ftol: f64,
) -> Option<f64> {
    if *slope > 0.0 {
        let t1 = t0 - g0 / *slope;
        let g1 = g(t1);
        if g1.is_finite() && (g1.abs() <= ftol || ((g1 > 0.0) == (g0 > 0.0) && g1.abs() < g0.abs())) {
            if t1 != t0 && g1 != g0 {
                *slope = (g0 - g1) / (t0 - t1);
            }
            return Some(t1);
        }
    }
    let t = scalar_root(g, t0, g0, ftol)?;
    if t != t0 {
        let s = (g0 - g(t)) / (t0 - t);
        *slope = if s.is_finite() && s > 0.0 { s } else { 0.0 };
    }
    Some(t)
}

/// Root of the nondecreasing map `g` near `t0` (with `g(t0) = g0`): geometric
/// bracketing followed by the Illinois variant of regula falsi. `None` when
/// no sign change is found.
fn scalar_root<G: Fn(f64) -> f64>(g: &G, t0: f64, g0: f64, ftol: f64) -> Option<f64> {
    let dir = if g0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = g0.abs().max(1e-14 * (1.0 + t0.abs()));
    let (mut a, mut fa) = (t0, g0);
    let (mut b, mut fb) = (t0, g0);
    let mut bracketed = false;
    for _ in 0..100 {
        b = t0 + dir * step;
        fb = g(b);
        if !fb.is_finite() {
            return None;
        }
        if fb.abs() <= ftol {
            return Some(b);
        }
        if (fb > 0.0) != (g0 > 0.0) {
            bracketed = true;
            break;
        }
        a = b;
        fa = fb;
        step *= 2.0;
    }
    if !bracketed {
        return None;
    }
    let mut side = 0;
    for _ in 0..100 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mut c = (a * fb - b * fa) / (fb - fa);
        if !(c > lo && c < hi) {
            c = 0.5 * (lo + hi);
        }
        if c <= lo || c >= hi {
            break;
        }
        let fc = g(c);
        if fc.abs() <= ftol {
            return Some(c);
        }
        if (fc > 0.0) == (fb > 0.0) {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Some(if g(a).abs() <= g(b).abs() { a } else { b })
}

/// `(max |v| over interior, 2Δ (Σ ma2/π)^(1/2) + max |v| over boundary,
/// satisfied)` plus the bound without the boundary offset.
pub fn stability_diagnostic(v: &MeshFunction, policy: StencilPolicy) -> Result<Stability> {
    let stencil = Stencil::new(v.domain().clone(), policy)?;
    Ok(stability_with(v, &stencil))
}

fn stability_with(v: &MeshFunction, stencil: &Stencil) -> Stability {
    let d = v.domain();
    let alpha = d.interior().iter().map(|&i| v.value(i).abs()).fold(0.0, f64::max);
    let boundary_max = d.boundary().iter().map(|&i| v.value(i).abs()).fold(0.0, f64::max);
    let measure_total: f64 = stencil
        .points()
        .iter()
        .map(|st| st.ma2_at(v.values(), v.value(st.index())))
        .sum();
    let unmodified_bound = 2.0 * d.shape().diameter() * (measure_total / std::f64::consts::PI).sqrt();
    let bound = unmodified_bound + boundary_max;
    Stability {
        alpha,
        bound,
        satisfied: alpha <= bound,
        unmodified_bound,
        unmodified_satisfied: alpha <= unmodified_bound,
        boundary_max,
        measure_total,
    }
}

/// Discrete harmonic function with boundary values `g̃` (5-point Laplacian,
/// damped Jacobi to sup-residual `1e-10`).
pub fn harmonic_init(d: &Arc<LatticeDomain>, g: &BoundaryData) -> MeshFunction {
    let mut v = g.restrict(d);
    let nbrs: Vec<[usize; 4]> = d
        .interior()
        .iter()
        .map(|&i| {
            let x = d.point(i);
            let at = |m: Multiplier| d.index_of(m).expect("interior points have axis neighbors");
            [
                at([x[0] + 1, x[1]]),
                at([x[0] - 1, x[1]]),
                at([x[0], x[1] + 1]),
                at([x[0], x[1] - 1]),
            ]
        })
        .collect();
    // interior starts at zero rather than inheriting the curvature of g̃
    for &i in d.interior() {
        v.values_mut()[i] = 0.0;
    }
    let scale = g.max_abs(d).max(1.0);
    let omega = 0.9;
    let mut next = v.values().to_vec();
    for _ in 0..10_000_000 {
        let vals = v.values();
        let mut r = 0.0f64;
        for (k, &i) in d.interior().iter().enumerate() {
            let n = nbrs[k];
            let avg = 0.25 * (vals[n[0]] + vals[n[1]] + vals[n[2]] + vals[n[3]]);
            r = r.max((avg - vals[i]).abs());
            next[i] = vals[i] + omega * (avg - vals[i]);
        }
        if r <= 1e-10 * scale {
            break;
        }
        v.values_mut().copy_from_slice(&next);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DomainShape;
    use crate::measure::{discretize_measure, SourceMeasure};

    fn square(lo: f64, hi: f64, h: f64) -> Arc<LatticeDomain> {
        Arc::new(LatticeDomain::build(DomainShape::square(lo, hi), h).unwrap())
    }

    fn quad() -> BoundaryData {
        BoundaryData::Quadratic {
            a: 1.0,
            center: [0.0, 0.0],
            b: [0.0, 0.0],
            c: 0.0,
        }
    }

    fn exact_cfg() -> SolverConfig {
        SolverConfig {
            epsilon: Some(0.0),
            ..SolverConfig::default()
        }
    }

    #[test]
    fn residual_of_exact_quadratic() {
        let d = square(-1.0, 1.0, 0.125);
        let f = discretize_measure(&SourceMeasure::lebesgue(), &d).unwrap();
        let r = residual(&quad().restrict(&d), &f, &exact_cfg()).unwrap();
        assert!(r.values().iter().all(|x| x.abs() <= 1e-12));
    }

    #[test]
    fn residual_of_affine() {
        let d = square(-1.0, 1.0, 0.25);
        let f = discretize_measure(&SourceMeasure::lebesgue(), &d).unwrap();
        let g = BoundaryData::Affine { b: [1.0, -2.0], c: 0.5 };
        let v = g.restrict(&d);
        let cfg = SolverConfig {
            epsilon: Some(1e-3),
            ..SolverConfig::default()
        };
        let r = residual(&v, &f, &cfg).unwrap();
        for &i in d.interior() {
            assert!((r.value(i) - (0.0625 + 1e-3 * v.value(i))).abs() < 1e-15);
        }
        for &i in d.boundary() {
            assert_eq!(r.value(i), 0.0);
        }
    }

    #[test]
    fn residual_of_ridge() {
        let d = square(-1.0, 1.0, 0.125);
        let f = DiscretizedSource::zero(d.clone());
        let r = residual(&BoundaryData::Ridge.restrict(&d), &f, &exact_cfg()).unwrap();
        assert!(r.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn euler_step_fixed_points() {
        let d = square(-1.0, 1.0, 0.25);
        let zero = DiscretizedSource::zero(d.clone());
        let v = MeshFunction::constant(d.clone(), 0.0);
        let next = euler_step(&v, &zero, &SolverConfig::default(), 0.1).unwrap();
        assert_eq!(next.values(), v.values());

        let f = discretize_measure(&SourceMeasure::lebesgue(), &d).unwrap();
        let q = quad().restrict(&d);
        let next = euler_step(&q, &f, &exact_cfg(), 0.1).unwrap();
        assert!(next.max_abs_diff_where(&q, |_| true) < 1e-15);
    }

    #[test]
    fn single_unknown_problem() {
        // unit square with h = 0.5 has the single interior point (0.5, 0.5)
        let d = square(0.0, 1.0, 0.5);
        assert_eq!(d.interior().len(), 1);
        let f = discretize_measure(&SourceMeasure::lebesgue(), &d).unwrap();
        let cfg = SolverConfig {
            init: Init::Harmonic,
            ..exact_cfg()
        };
        let rep = solve(&d, &f, &quad(), &cfg).unwrap();
        assert!(rep.converged);
        assert!((rep.solution.get([1, 1]).unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn quadratic_solve_is_exact() {
        let d = square(-1.0, 1.0, 0.125);
        let f = discretize_measure(&SourceMeasure::lebesgue(), &d).unwrap();
        let rep = solve(&d, &f, &quad(), &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        let exact = quad().restrict(&d);
        assert!(rep.solution.max_abs_diff_where(&exact, |_| true) <= 1e-5);
        assert!(rep.stability.satisfied);
    }

    #[test]
    fn ridge_solve_is_exact() {
        let d = square(-1.0, 1.0, 0.125);
        let f = DiscretizedSource::zero(d.clone());
        let rep = solve(&d, &f, &BoundaryData::Ridge, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        let exact = BoundaryData::Ridge.restrict(&d);
        assert!(rep.solution.max_abs_diff_where(&exact, |_| true) <= 1e-5);
    }

    #[test]
    fn harmonic_init_examples() {
        let d = square(-1.0, 1.0, 0.25);
        let g = BoundaryData::Affine { b: [0.5, -1.0], c: 2.0 };
        let v = harmonic_init(&d, &g);
        assert!(v.max_abs_diff_where(&g.restrict(&d), |_| true) < 1e-8);

        let d = square(0.0, 1.0, 0.5);
        let v = harmonic_init(&d, &quad());
        let b = quad();
        let avg = 0.25
            * (b.eval([0.0, 0.5]) + b.eval([1.0, 0.5]) + b.eval([0.5, 0.0]) + b.eval([0.5, 1.0]));
        assert!((v.get([1, 1]).unwrap() - avg).abs() < 1e-9);
    }

    #[test]
    fn stability_examples() {
        let d = square(-1.0, 1.0, 0.25);
        let ones = MeshFunction::constant(d.clone(), 1.0);
        let s = stability_diagnostic(&ones, StencilPolicy::Full).unwrap();
        assert_eq!(s.alpha, 1.0);
        assert_eq!(s.measure_total, 0.0);
        assert_eq!(s.bound, 1.0);
        assert!(s.satisfied);
        assert!(!s.unmodified_satisfied);
    }

    #[test]
    fn mixed_affine_problem() {
        let d = square(-1.0, 1.0, 0.25);
        let f = DiscretizedSource::zero(d.clone());
        let g = BoundaryData::Affine { b: [0.3, 0.2], c: 1.0 };
        let rep = solve_mixed(&d, &[], &f, &g, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        assert!(rep.solution.max_abs_diff_where(&g.restrict(&d), |_| true) < 1e-8);
    }

    #[test]
    fn gauss_seidel_quadratic_from_harmonic() {
        let d = square(-1.0, 1.0, 0.25);
        let f = discretize_measure(&SourceMeasure::lebesgue(), &d).unwrap();
        let cfg = SolverConfig {
            init: Init::Harmonic,
            sweep: Sweep::GaussSeidel,
            ..exact_cfg()
        };
        let rep = solve(&d, &f, &quad(), &cfg).unwrap();
        assert!(rep.converged, "{:?}", rep.residual_history.last());
        assert!(rep.solution.max_abs_diff_where(&quad().restrict(&d), |_| true) < 1e-6);
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            nu: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            epsilon: Some(-1.0),
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
