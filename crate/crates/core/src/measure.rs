//! Source measures: analytic densities plus point masses, their lattice
//! discretization, counting measures and per-set discrete Monge-Ampère
//! measures.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DomainShape, LatticeDomain, MeshFunction, Multiplier, StencilPolicy};
use crate::operators::{OperatorKind, Stencil};

/// Catalog of analytic densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Density {
    Constant { value: f64 },
    /// `(p - 1) r^(2p - 4)`, the Monge-Ampère density of `r^p / p`.
    RadialPower {
        p: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    Zero,
}

impl Density {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Density::Constant { value } if !(value >= 0.0 && value.is_finite()) => Err(
                Error::InvalidMeasure(format!("constant density must be finite and >= 0, got {value}")),
            ),
            Density::RadialPower { p, .. } if !(p > 1.0 && p.is_finite()) => Err(
                Error::InvalidMeasure(format!("radial power needs p > 1, got {p}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            Density::Constant { value } => value,
            Density::RadialPower { p, center } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                if p == 2.0 {
                    1.0
                } else {
                    (p - 1.0) * r.powf(2.0 * p - 4.0)
                }
            }
            Density::Zero => 0.0,
        }
    }
}

/// A point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dirac {
    pub location: [f64; 2],
    pub mass: f64,
}

/// Finite Borel measure: optional density plus point masses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceMeasure {
    #[serde(default)]
    pub density: Option<Density>,
    #[serde(default)]
    pub diracs: Vec<Dirac>,
}

impl SourceMeasure {
    pub fn lebesgue() -> Self {
        SourceMeasure {
            density: Some(Density::Constant { value: 1.0 }),
            diracs: Vec::new(),
        }
    }

    pub fn dirac(location: [f64; 2], mass: f64) -> Self {
        SourceMeasure {
            density: None,
            diracs: vec![Dirac { location, mass }],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(d) = &self.density {
            d.validate()?;
        }
        for d in &self.diracs {
            if !(d.mass > 0.0 && d.mass.is_finite()) {
                return Err(Error::InvalidMeasure(format!(
                    "dirac mass must be positive and finite, got {}",
                    d.mass
                )));
            }
            if !(d.location[0].is_finite() && d.location[1].is_finite()) {
                return Err(Error::InvalidMeasure("dirac location must be finite".into()));
            }
        }
        Ok(())
    }

    pub fn density_at(&self, x: [f64; 2]) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d.eval(x))
    }

    /// `ν(B ∩ Ω)`: density integral by adaptive quadrature plus the point
    /// masses inside the closed box and the open domain.
    pub fn mass_of_box(&self, shape: &DomainShape, b: &BorelBox) -> f64 {
        let (lo, hi) = shape.bounding_box();
        let window = BorelBox {
            min: [b.min[0].max(lo[0]), b.min[1].max(lo[1])],
            max: [b.max[0].min(hi[0]), b.max[1].min(hi[1])],
        };
        let mut total = 0.0;
        if let Some(density) = &self.density {
            if window.min[0] < window.max[0] && window.min[1] < window.max[1] {
                total += integrate_density(density, shape, &window, 1e-8);
            }
        }
        for d in &self.diracs {
            if b.contains(d.location) && shape.excess(d.location) < 0.0 {
                total += d.mass;
            }
        }
        total
    }

    /// `ν(Ω)`.
    pub fn total_mass(&self, shape: &DomainShape) -> f64 {
        let (lo, hi) = shape.bounding_box();
        self.mass_of_box(shape, &BorelBox { min: lo, max: hi })
    }

    /// Rejects boxes whose boundary passes through a point mass.
    pub fn check_boxes(&self, boxes: &[BorelBox]) -> Result<()> {
        for b in boxes {
            b.validate()?;
            let scale = 1e-12 * (1.0 + b.max[0].abs().max(b.max[1].abs()));
            if self.diracs.iter().any(|d| b.on_boundary(d.location, scale)) {
                return Err(Error::BoxCutsDirac([b.min[0], b.min[1], b.max[0], b.max[1]]));
            }
        }
        Ok(())
    }
}

/// Closed axis-aligned rectangle `[a1, b1] x [a2, b2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BorelBox {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl BorelBox {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self> {
        let b = BorelBox { min, max };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min[0] < self.max[0] && self.min[1] < self.max[1] {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "box needs min < max componentwise, got {:?} .. {:?}",
                self.min, self.max
            )))
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        (0..2).all(|i| self.min[i] <= p[i] && p[i] <= self.max[i])
    }

    fn on_boundary(&self, p: [f64; 2], tol: f64) -> bool {
        let inside = (0..2).all(|i| self.min[i] - tol <= p[i] && p[i] <= self.max[i] + tol);
        let strictly = (0..2).all(|i| self.min[i] + tol < p[i] && p[i] < self.max[i] - tol);
        inside && !strictly
    }

    /// Compact label used in report tables.
    pub fn label(&self) -> String {
        format!(
            "[{};{}]x[{};{}]",
            self.min[0], self.max[0], self.min[1], self.max[1]
        )
    }
}

/// Lattice data `f_h` of a source measure.
#[derive(Debug, Clone)]
pub struct DiscretizedSource {
    pub f: MeshFunction,
    /// `h^2 Σ f(x)`.
    pub total: f64,
    /// Interior points that received a point mass.
    pub dirac_points: Vec<Multiplier>,
    /// Snapping notes (e.g. a point mass moved more than `2h`).
    pub warnings: Vec<String>,
}

impl DiscretizedSource {
    pub fn domain(&self) -> &Arc<LatticeDomain> {
        self.f.domain()
    }

    /// Identically zero data.
    pub fn zero(domain: Arc<LatticeDomain>) -> Self {
        DiscretizedSource {
            f: MeshFunction::constant(domain, 0.0),
            total: 0.0,
            dirac_points: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Samples the density at interior points and moves each point mass to the
/// nearest interior lattice point as `mass / h^2`.
pub fn discretize_measure(nu: &SourceMeasure, d: &Arc<LatticeDomain>) -> Result<DiscretizedSource> {
    nu.validate()?;
    let h = d.h();
    let mut values = vec![0.0; d.len()];
    if let Some(density) = &nu.density {
        for &i in d.interior() {
            values[i] = density.eval(d.coords(i));
        }
    }
    let mut dirac_points = Vec::new();
    let mut warnings = Vec::new();
    for dirac in &nu.diracs {
        let loc = dirac.location;
        if d.shape().excess(loc) >= 0.0 {
            return Err(Error::DiracOutsideDomain(loc[0], loc[1]));
        }
        // interior() is lexicographic, so strict improvement keeps the first tie
        let mut best: Option<(usize, f64)> = None;
        let slack = 1e-12 * h * h;
        for &i in d.interior() {
            let c = d.coords(i);
            let dist2 = (c[0] - loc[0]).powi(2) + (c[1] - loc[1]).powi(2);
            if best.map_or(true, |(_, b)| dist2 < b - slack) {
                best = Some((i, dist2));
            }
        }
        let (i, dist2) = best.expect("domain has interior points");
        values[i] += dirac.mass / (h * h);
        let m = d.point(i);
        if !dirac_points.contains(&m) {
            dirac_points.push(m);
        }
        if dist2.sqrt() > 2.0 * h {
            warnings.push(format!(
                "point mass at ({}, {}) moved {:.3e} (> 2h) to lattice point {:?}",
                loc[0],
                loc[1],
                dist2.sqrt(),
                d.coords(i)
            ));
        }
    }
    let total = h * h * d.interior().iter().map(|&i| values[i]).sum::<f64>();
    Ok(DiscretizedSource {
        f: MeshFunction::from_values(d.clone(), values)?,
        total,
        dirac_points,
        warnings,
    })
}

/// `h^2` times the sum of `f` over interior lattice points in the closed box.
pub fn counting_measure(f: &DiscretizedSource, b: &BorelBox) -> f64 {
    let d = f.domain();
    let h = d.h();
    h * h
        * d.interior()
            .iter()
            .filter(|&&i| b.contains(d.coords(i)))
            .map(|&i| f.f.value(i))
            .sum::<f64>()
}

/// `Σ ma_op(v, x)` over interior lattice points in the closed box.
pub fn ma_measure_of_set(
    v: &MeshFunction,
    b: &BorelBox,
    op: OperatorKind,
    policy: StencilPolicy,
) -> Result<f64> {
    let stencil = Stencil::new(v.domain().clone(), policy)?;
    stencil_measure_of_set(&stencil, v, b, op)
}

/// As [`ma_measure_of_set`] with a prebuilt stencil.
pub fn stencil_measure_of_set(
    stencil: &Stencil,
    v: &MeshFunction,
    b: &BorelBox,
    op: OperatorKind,
) -> Result<f64> {
    if !matches!(op, OperatorKind::Ma1 | OperatorKind::Ma2) {
        return Err(Error::InvalidConfig(format!(
            "set measures are defined for ma1 and ma2, got {op:?}"
        )));
    }
    let d = v.domain();
    Ok(d.interior()
        .iter()
        .filter(|&&i| b.contains(d.coords(i)))
        .map(|&i| stencil.evaluate(op, v.values(), i, 1))
        .sum())
}

/// One row of a weak-convergence table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakConvergenceRow {
    pub h: f64,
    pub bx: BorelBox,
    pub measured: f64,
    pub expected: f64,
    pub gap: f64,
}

/// Compares discrete Monge-Ampère measures of boxes with `ν(B)` across a mesh
/// sweep.
pub fn weak_convergence_report(
    v_per_h: &[(f64, MeshFunction)],
    nu: &SourceMeasure,
    boxes: &[BorelBox],
    op: OperatorKind,
    policy: StencilPolicy,
) -> Result<Vec<WeakConvergenceRow>> {
    nu.check_boxes(boxes)?;
    let mut rows = Vec::new();
    for (h, v) in v_per_h {
        let stencil = Stencil::new(v.domain().clone(), policy)?;
        for b in boxes {
            let measured = stencil_measure_of_set(&stencil, v, b, op)?;
            let expected = nu.mass_of_box(v.domain().shape(), b);
            rows.push(WeakConvergenceRow {
                h: *h,
                bx: *b,
                measured,
                expected,
                gap: (measured - expected).abs(),
            });
        }
    }
    Ok(rows)
}

/// `∫_{B ∩ Ω} density` by nested adaptive Simpson over exact vertical
/// sections of the domain.
fn integrate_density(density: &Density, shape: &DomainShape, window: &BorelBox, tol: f64) -> f64 {
    let inner = |x: f64| -> f64 {
        let Some((y0, y1)) = shape.vertical_section(x) else {
            return 0.0;
        };
        let (a, b) = (y0.max(window.min[1]), y1.min(window.max[1]));
        if a >= b {
            return 0.0;
        }
        adaptive_simpson(&|y| density.eval([x, y]), a, b, tol * 1e-2)
    };
    adaptive_simpson(&inner, window.min[0], window.max[0], tol)
}

pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    // always split a few times so narrow features are not skipped
    if depth == 0 || (depth <= 44 && delta.abs() <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
