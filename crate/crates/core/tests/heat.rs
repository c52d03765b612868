use std::f64::consts::PI;

use approx::assert_relative_eq;
use lipheat::femcore::{assemble, build_mesh, far_field_cutoff, DiscreteOperator, Mesh};
use lipheat::geometry::Manifold;
use lipheat::heat::{
    conservativeness_check, control_pair, doubling_constant, dyadic_times, evolve, even_times, gaussian_bound_check,
    geometric_times, heat_kernel, holdout_check, mean_value_check, p_integrable, sobolev_ratio,
    verify_decoupled_bound, HeatScheme, KernelSet,
};
use lipheat::spectral::{frozen_fk_constant, radius_field};
use nalgebra::DMatrix;

fn setup(bounds: &[[f64; 2]], metric: Option<DMatrix<f64>>, h: f64, cutoff: bool) -> (Mesh, DiscreteOperator) {
    let mesh = build_mesh(&Manifold::euclidean_box(bounds, metric).unwrap(), h).unwrap();
    let op = assemble(&mesh).unwrap();
    let op = if cutoff { far_field_cutoff(&op, &mesh).unwrap() } else { op };
    (mesh, op)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn constants_are_invariant_under_neumann_flow() {
    let (_, op) = setup(&[[0.0, 1.0], [0.0, 1.0]], None, 1.0 / 16.0, false);
    let u = evolve(&op, &vec![3.0; op.n_free()], 0.4, 32).unwrap();
    assert!(u.iter().all(|v| (v - 3.0).abs() < 1e-11));
}

#[test]
fn sine_mode_decays_at_half_the_eigenvalue() {
    let (mesh, op) = setup(&[[0.0, 1.0]], None, 1.0 / 64.0, true);
    let f: Vec<f64> = (0..mesh.n_vertices()).map(|v| (PI * mesh.vertex(v)[0]).sin()).collect();
    let t = 0.1;
    let u = op.extend_vector(&evolve(&op, &op.restrict_vector(&f), t, 64).unwrap());
    let mid = mesh.nearest_vertex(&[0.5]);
    assert_relative_eq!(u[mid], (-PI * PI * t / 2.0).exp(), max_relative = 0.01);
}

#[test]
fn evolution_is_linear() {
    let (mesh, op) = setup(&[[0.0, 1.0], [0.0, 1.0]], None, 1.0 / 16.0, true);
    let f: Vec<f64> = (0..mesh.n_vertices()).map(|v| mesh.vertex(v)[0] * (1.0 - mesh.vertex(v)[1])).collect();
    let g: Vec<f64> = (0..mesh.n_vertices()).map(|v| (3.0 * mesh.vertex(v)[1]).cos()).collect();
    let (f, g) = (op.restrict_vector(&f), op.restrict_vector(&g));
    let combo: Vec<f64> = f.iter().zip(&g).map(|(a, b)| 2.0 * a - 0.5 * b).collect();
    let uf = evolve(&op, &f, 0.2, 16).unwrap();
    let ug = evolve(&op, &g, 0.2, 16).unwrap();
    let uc = evolve(&op, &combo, 0.2, 16).unwrap();
    for i in 0..uc.len() {
        assert!((uc[i] - (2.0 * uf[i] - 0.5 * ug[i])).abs() < 1e-10);
    }
}

#[test]
fn kernel_is_symmetric() {
    let (mesh, op) = setup(&[[-1.0, 1.0], [-1.0, 1.0]], None, 1.0 / 8.0, true);
    let x = mesh.nearest_vertex(&[0.25, -0.125]);
    let y = mesh.nearest_vertex(&[-0.5, 0.375]);
    let times = [0.05, 0.2];
    let px = heat_kernel(&op, x, &times, HeatScheme::default()).unwrap();
    let py = heat_kernel(&op, y, &times, HeatScheme::default()).unwrap();
    for k in 0..times.len() {
        assert_relative_eq!(px.columns[k][y], py.columns[k][x], max_relative = 1e-8);
    }
}

#[test]
fn neumann_kernel_conserves_mass() {
    let (mesh, op) = setup(&[[0.0, 1.0], [0.0, 1.0]], None, 1.0 / 16.0, false);
    let src = [mesh.nearest_vertex(&[0.5, 0.5]), mesh.nearest_vertex(&[0.0, 0.0])];
    let set = KernelSet::compute(&mesh, &op, &src, &dyadic_times(1.0, 4), HeatScheme::default()).unwrap();
    for row in conservativeness_check(&set) {
        assert!(row.iter().all(|m| (m - 1.0).abs() < 1e-9), "{row:?}");
    }
}

#[test]
fn dirichlet_mass_matches_eigen_series() {
    let (mesh, op) = setup(&[[0.0, 1.0]], None, 1.0 / 128.0, true);
    let x = mesh.nearest_vertex(&[0.5]);
    let times = [0.0125, 0.025, 0.05, 0.1];
    let grid = heat_kernel(&op, x, &times, HeatScheme::default()).unwrap();
    let mass = grid.mass_profile(&lipheat::heat::lumped_mass(&mesh));
    let survival = |t: f64| -> f64 {
        (0..50)
            .map(|k| (2 * k + 1) as f64)
            .map(|n| 4.0 / (n * PI) * (n * PI * 0.5).sin() * (-n * n * PI * PI * t / 2.0).exp())
            .sum()
    };
    assert_relative_eq!(mass[2], survival(0.05), max_relative = 0.02);
    assert!(mass.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn gaussian_ratio_on_the_line() {
    let (mesh, op) = setup(&[[-5.0, 5.0]], None, 1.0 / 32.0, true);
    let src = [mesh.nearest_vertex(&[0.0]), mesh.nearest_vertex(&[1.0])];
    let set = KernelSet::compute(&mesh, &op, &src, &dyadic_times(1.0, 5), HeatScheme::default()).unwrap();
    let loose = gaussian_bound_check(&set, 0.5, 1e-8).unwrap();
    let tight = gaussian_bound_check(&set, 2.0, 1e-8).unwrap();
    assert!(loose.samples > 0 && loose.sup_ratio <= 1.0);
    assert!(tight.sup_ratio <= loose.sup_ratio);
    // the ratio at the source is vol(B1)/sqrt(2 pi)
    assert_relative_eq!(loose.sup_ratio, 2.0 / (2.0 * PI).sqrt(), max_relative = 0.02);
    assert!(gaussian_bound_check(&set, 0.0, 1e-8).is_err());
}

#[test]
fn decoupled_constant_on_the_line() {
    let (mesh, op) = setup(&[[-5.0, 5.0]], None, 1.0 / 32.0, true);
    let rf = radius_field(&mesh, 2.0, 100.0, 2.0).unwrap();
    let src = [mesh.nearest_vertex(&[0.0])];
    let times = dyadic_times(1.0, 5);
    let set = KernelSet::compute(&mesh, &op, &src, &times, HeatScheme::default()).unwrap();
    let rep = verify_decoupled_bound(&set, &rf).unwrap();
    assert_relative_eq!(rep.c_fit, (2.0 * PI).powf(-0.5), max_relative = 0.02);
    assert_eq!(rep.rows.len(), times.len());
    let cp = control_pair(&set, &rf, even_times).unwrap();
    let held = holdout_check(&cp, &set, |_, k| !even_times(0, k), 0.05).unwrap();
    assert_eq!(held.violations, 0);
    assert!(held.samples == 2 && held.max_ratio <= 1.05);
}

#[test]
fn p_integrability_closed_form() {
    assert!(p_integrable(2, 3.0));
    assert!(!p_integrable(2, 1.0));
    assert!(!p_integrable(1, 0.5));
    assert!(p_integrable(1, 0.6));
    assert!(!p_integrable(3, 1.5));
    assert!(!p_integrable(2, 0.0));
}

#[test]
fn mean_value_constant_against_gaussian_oracle() {
    let (mesh, op) = setup(&[[-3.0, 3.0], [-3.0, 3.0]], None, 1.0 / 16.0, true);
    let src = [mesh.nearest_vertex(&[0.0, 0.0])];
    let times = geometric_times(1.0 / 16.0, 1.0, 17).unwrap();
    let set = KernelSet::compute(&mesh, &op, &src, &times, HeatScheme::default()).unwrap();
    let (t, tau) = (1.0, 0.5);
    let a = frozen_fk_constant(2.0, 2);
    let got = mean_value_check(&set, 0, t, tau, 1.0, a).unwrap();
    // exact Gaussian integrated over the same graph ball with the same lumped masses
    let gauss = |s: f64, v: usize| {
        let y = mesh.vertex(v);
        (2.0 * PI * s).recip() * (-(y[0] * y[0] + y[1] * y[1]) / (2.0 * s)).exp()
    };
    let ball: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| set.distances[0][v] < tau.sqrt()).collect();
    let integral = simpson(|s| ball.iter().map(|&v| gauss(s, v) * set.mass[v]).sum(), t - tau, t, 200);
    let oracle = gauss(t, src[0]) * tau * tau * a / integral;
    assert_relative_eq!(got.c_mv, oracle, max_relative = 0.02);
    assert!(mean_value_check(&set, 0, t, t, 1.0, a).is_err());
}

#[test]
fn doubling_is_close_to_one_on_flat_space() {
    let (mesh, _) = setup(&[[-2.0, 2.0], [-2.0, 2.0]], None, 1.0 / 16.0, false);
    let samples = [mesh.nearest_vertex(&[0.0, 0.0]), mesh.nearest_vertex(&[0.5, -0.25])];
    let rep = doubling_constant(&mesh, &samples, 1.0).unwrap();
    assert!(rep.pairs > 0);
    assert!(rep.constant >= 1.0 && rep.constant < 1.5, "{rep:?}");
}

#[test]
fn sobolev_ratio_is_invariant_under_isometry() {
    let (m1, o1) = setup(&[[-2.0, 2.0], [-2.0, 2.0]], None, 1.0 / 8.0, false);
    let (m2, o2) = setup(&[[-1.0, 1.0], [-1.0, 1.0]], Some(DMatrix::identity(2, 2) * 4.0), 1.0 / 16.0, false);
    let x1 = m1.nearest_vertex(&[0.0, 0.0]);
    let x2 = m2.nearest_vertex(&[0.0, 0.0]);
    let r1 = sobolev_ratio(&m1, &o1, x1, 1.0, 8, 7).unwrap();
    let r2 = sobolev_ratio(&m2, &o2, x2, 1.0, 8, 7).unwrap();
    assert!(r1.ratio > 0.0 && r1.ratio.is_finite());
    assert_relative_eq!(r1.ratio, r2.ratio, max_relative = 1e-8);
}
