use std::sync::Arc;

use ma_core::lattice::delta_e;
use ma_core::measure::discretize_measure;
use ma_core::solver::{harmonic_init, residual, solve};
use ma_core::{
    BoundaryData, Density, DomainShape, Init, LatticeDomain, OperatorKind, SolveReport, SolverConfig, SourceMeasure,
    StencilPolicy, Sweep,
};
use nalgebra::{DMatrix, DVector};

fn square(n: usize) -> Arc<LatticeDomain> {
    Arc::new(LatticeDomain::build(DomainShape::square(-1.0, 1.0), 2.0 / n as f64).unwrap())
}

fn quadratic() -> BoundaryData {
    BoundaryData::Quadratic { a: 1.0, center: [0.0, 0.0], b: [0.0, 0.0], c: 0.0 }
}

fn constant(value: f64) -> SourceMeasure {
    SourceMeasure { density: Some(Density::Constant { value }), diracs: vec![] }
}

fn run(n: usize, nu: &SourceMeasure, g: &BoundaryData, cfg: &SolverConfig) -> (Arc<LatticeDomain>, SolveReport) {
    let d = square(n);
    let f = discretize_measure(nu, &d).unwrap();
    let report = solve(&d, &f, g, cfg).unwrap();
    (d, report)
}

fn gauss_seidel() -> SolverConfig {
    SolverConfig { sweep: Sweep::GaussSeidel, ..SolverConfig::default() }
}

#[test]
fn boundary_values_stay_pinned() {
    let g = BoundaryData::Cone { center: [0.0, 0.0] };
    for cfg in [SolverConfig { max_iter: 50, ..SolverConfig::default() }, gauss_seidel()] {
        let (d, report) = run(8, &constant(0.5), &g, &cfg);
        for &i in d.boundary() {
            assert_eq!(report.solution.value(i), g.eval(d.coords(i)));
        }
    }
}

#[test]
fn euler_history_is_monotone() {
    let (_, report) = run(8, &constant(2.0), &quadratic(), &SolverConfig::default());
    assert!(report.converged);
    assert!(report.residual_history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn converged_solutions_are_fixed_points() {
    let cases = [
        (constant(2.0), quadratic(), SolverConfig::default()),
        (SourceMeasure::dirac([0.0, 0.0], std::f64::consts::PI), BoundaryData::Cone { center: [0.0, 0.0] }, gauss_seidel()),
    ];
    for (nu, g, cfg) in cases {
        let (d, report) = run(8, &nu, &g, &cfg);
        assert!(report.converged);
        let f = discretize_measure(&nu, &d).unwrap();
        let r = residual(&report.solution, &f, &report.config).unwrap();
        let sup = d.interior().iter().map(|&i| r.value(i).abs()).fold(0.0, f64::max);
        assert!(sup <= report.config.tol.unwrap(), "residual {sup}");
    }
}

#[test]
fn larger_data_gives_smaller_solutions() {
    let (d, base) = run(8, &constant(1.0), &quadratic(), &gauss_seidel());
    for lambda in [1.5, 3.0] {
        let (_, scaled) = run(8, &constant(lambda), &quadratic(), &gauss_seidel());
        assert!(scaled.converged);
        let tol = scaled.config.tol.unwrap();
        for &i in d.interior() {
            assert!(scaled.solution.value(i) <= base.solution.value(i) + tol);
        }
    }
}

#[test]
fn initialization_does_not_change_the_solution() {
    let from_g = run(8, &constant(2.0), &quadratic(), &gauss_seidel()).1;
    let cfg = SolverConfig { init: Init::Harmonic, ..gauss_seidel() };
    let (d, from_h) = run(8, &constant(2.0), &quadratic(), &cfg);
    assert!(from_g.converged && from_h.converged);
    let gap = from_g.solution.max_abs_diff_where(&from_h.solution, |_| true);
    assert!(gap <= 1e-4, "gap {gap}");
    assert!(d.interior().len() > 1);
}

#[test]
fn solutions_are_discrete_convex() {
    let cases = [
        (constant(1.0), quadratic(), OperatorKind::Ma2),
        (constant(0.0), BoundaryData::Ridge, OperatorKind::Ma2),
        (SourceMeasure::dirac([0.0, 0.0], std::f64::consts::PI), BoundaryData::Cone { center: [0.0, 0.0] }, OperatorKind::Ma1),
    ];
    for (nu, g, op) in cases {
        let cfg = SolverConfig { operator: op, ..gauss_seidel() };
        let (d, report) = run(8, &nu, &g, &cfg);
        assert!(report.converged);
        for &i in d.interior() {
            let x = d.point(i);
            for e in [[1, 0], [0, 1], [1, 1], [1, -1]] {
                if let Ok(delta) = delta_e(&report.solution, x, e) {
                    assert!(delta >= -1e-7, "{op:?} {g:?}: {delta} at {x:?} along {e:?}");
                }
            }
        }
    }
    // the Euler default on a smaller mesh as well
    let (_, report) = run(4, &constant(1.0), &BoundaryData::Cone { center: [0.0, 0.0] }, &SolverConfig::default());
    assert!(report.converged && report.convexity_defect <= 1e-7);
}

/// Dense 5-point Laplace solve with Dirichlet data, independent of the
/// iterative implementation.
fn dense_harmonic(d: &LatticeDomain, g: &BoundaryData) -> Vec<f64> {
    let n = d.interior().len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (row, &i) in d.interior().iter().enumerate() {
        let x = d.point(i);
        a[(row, row)] = 4.0;
        for m in [[x[0] + 1, x[1]], [x[0] - 1, x[1]], [x[0], x[1] + 1], [x[0], x[1] - 1]] {
            let j = d.index_of(m).unwrap();
            match d.interior().iter().position(|&k| k == j) {
                Some(col) => a[(row, col)] -= 1.0,
                None => b[row] += g.eval(d.coords(j)),
            }
        }
    }
    a.lu().solve(&b).unwrap().iter().copied().collect()
}

#[test]
fn harmonic_init_matches_dense_solve() {
    let shapes = [
        DomainShape::square(-1.0, 1.0),
        DomainShape::Disc { center: [0.0, 0.0], radius: 1.0 },
    ];
    for shape in shapes {
        for n in [2usize, 4, 8] {
            let d = Arc::new(LatticeDomain::build(shape.clone(), 2.0 / n as f64).unwrap());
            for g in [quadratic(), BoundaryData::Cone { center: [0.2, -0.1] }] {
                let v = harmonic_init(&d, &g);
                let exact = dense_harmonic(&d, &g);
                for (&i, &u) in d.interior().iter().zip(&exact) {
                    assert!((v.value(i) - u).abs() <= 1e-8, "{} vs {u}", v.value(i));
                }
            }
        }
    }
}

#[test]
fn policies_agree_on_the_quadratic() {
    for policy in [StencilPolicy::NinePoint, StencilPolicy::Radius(2), StencilPolicy::Full] {
        let cfg = SolverConfig { policy, epsilon: Some(0.0), ..gauss_seidel() };
        let (d, report) = run(8, &constant(1.0), &quadratic(), &cfg);
        assert!(report.converged);
        let exact = quadratic().restrict(&d);
        assert!(report.solution.max_abs_diff_where(&exact, |_| true) <= 1e-6);
    }
}
