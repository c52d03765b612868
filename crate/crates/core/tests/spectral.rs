use std::f64::consts::PI;

use approx::assert_relative_eq;
use lipheat::femcore::{assemble, build_mesh, dirichlet_restrict, far_field_cutoff, Mesh};
use lipheat::geometry::{Manifold, PsiProfile};
use lipheat::spectral::{
    bessel_j0, bessel_j0_first_root, domain_quotient, euclidean_radius, faber_krahn_constant, faber_krahn_sweep,
    frozen_fk_constant, lambda1, radius_field, FkSweepConfig, RadiusContext, RadiusLimit,
};
use nalgebra::{DMatrix, DVector};

fn interval(lo: f64, hi: f64, metric: Option<f64>) -> Manifold {
    Manifold::euclidean_box(&[[lo, hi]], metric.map(|c| DMatrix::from_element(1, 1, c))).unwrap()
}

fn cutoff_lambda(m: &Manifold, h: f64) -> f64 {
    let mesh = build_mesh(m, h).unwrap();
    let op = far_field_cutoff(&assemble(&mesh).unwrap(), &mesh).unwrap();
    lambda1(&op).unwrap().lambda1
}

#[test]
fn bessel_root_oracle() {
    let j = bessel_j0_first_root();
    assert!((j - 2.404_825_557_695_773).abs() < 1e-10);
    assert!(bessel_j0(j).abs() < 1e-12);
    assert_relative_eq!(bessel_j0(1.0), 0.765_197_686_557_966_6, epsilon = 1e-14);
    assert_relative_eq!(faber_krahn_constant(2), PI * j * j, epsilon = 1e-12);
    assert_relative_eq!(faber_krahn_constant(1), PI * PI, epsilon = 1e-12);
    assert_relative_eq!(frozen_fk_constant(2.0, 2), PI * j * j / 8.0, epsilon = 1e-12);
}

#[test]
fn interval_eigenvalue_and_metric_scaling() {
    let l = 2.0;
    let lam = cutoff_lambda(&interval(0.0, l, None), l / 64.0);
    assert_relative_eq!(lam, PI * PI / (l * l), max_relative = 0.01);
    let flat = cutoff_lambda(&interval(0.0, 1.0, None), 1.0 / 64.0);
    let scaled = cutoff_lambda(&interval(0.0, 1.0, Some(9.0)), 1.0 / 64.0);
    assert_relative_eq!(scaled, flat / 9.0, max_relative = 0.01);
}

#[test]
fn residual_is_small() {
    let mesh = build_mesh(&Manifold::euclidean_box(&[[0.0, 1.0], [0.0, 1.0]], None).unwrap(), 1.0 / 16.0).unwrap();
    let op = far_field_cutoff(&assemble(&mesh).unwrap(), &mesh).unwrap();
    let e = lambda1(&op).unwrap();
    assert!(e.residual < 1e-8);
    assert!(e.eigenvector.iter().sum::<f64>() > 0.0);
    assert_relative_eq!(e.lambda1, 2.0 * PI * PI, max_relative = 0.02);
}

fn disk_cells(mesh: &Mesh, r: f64) -> Vec<usize> {
    (0..mesh.n_cells())
        .filter(|&c| mesh.cell(c).iter().all(|&v| mesh.vertex(v).iter().map(|x| x * x).sum::<f64>() <= r * r + 1e-12))
        .collect()
}

#[test]
fn unit_disk_eigenvalue() {
    let j = bessel_j0_first_root();
    let mesh = build_mesh(&Manifold::euclidean_box(&[[-1.1, 1.1], [-1.1, 1.1]], None).unwrap(), 1.0 / 64.0).unwrap();
    let op = assemble(&mesh).unwrap();
    let inside: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&v| mesh.vertex(v).iter().map(|x| x * x).sum::<f64>() < 1.0)
        .collect();
    let lam = lambda1(&dirichlet_restrict(&op, &inside).unwrap()).unwrap().lambda1;
    assert_relative_eq!(lam, j * j, max_relative = 0.02);
    // the staircase of cells inside the closed disk bounds it from above
    let (upper, vol, _) = domain_quotient(&mesh, &op, &disk_cells(&mesh, 1.0)).unwrap();
    assert!(vol < PI && upper > j * j && upper < 1.05 * j * j);
}

#[test]
fn faber_krahn_quotients() {
    // 1D: q = π² for every interval
    let mesh = build_mesh(&interval(0.0, 1.0, None), 1.0 / 128.0).unwrap();
    let op = assemble(&mesh).unwrap();
    for (a, b) in [(0.25, 0.75), (0.125, 0.375)] {
        let cells: Vec<usize> = (0..mesh.n_cells())
            .filter(|&c| {
                let x = mesh.barycenter(c)[0];
                x > a && x < b
            })
            .collect();
        let (_, vol, q) = domain_quotient(&mesh, &op, &cells).unwrap();
        assert_relative_eq!(vol, b - a, epsilon = 1e-12);
        assert_relative_eq!(q, PI * PI, max_relative = 0.02);
    }
    // 2D disk: the extremal value π j₀,₁²
    let mesh = build_mesh(&Manifold::euclidean_box(&[[-0.6, 0.6], [-0.6, 0.6]], None).unwrap(), 1.0 / 64.0).unwrap();
    let op = assemble(&mesh).unwrap();
    let (_, _, q) = domain_quotient(&mesh, &op, &disk_cells(&mesh, 0.5)).unwrap();
    assert_relative_eq!(q, faber_krahn_constant(2), max_relative = 0.03);
    assert!(q >= faber_krahn_constant(2) * 0.999);
}

#[test]
fn sweep_on_anisotropic_metric() {
    let g = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5]));
    let m = Manifold::euclidean_box(&[[-1.0, 1.0], [-1.0, 1.0]], Some(g)).unwrap();
    let mesh = build_mesh(&m, 1.0 / 16.0).unwrap();
    let op = assemble(&mesh).unwrap();
    let center = mesh.nearest_vertex(&[0.0, 0.0]);
    let cfg = FkSweepConfig { center, radius: 0.8, n_domains: 100, seed: 3, b: 2.0 };
    let rep = faber_krahn_sweep(&mesh, &op, &cfg).unwrap();
    assert_eq!(rep.samples.len(), 100);
    assert_eq!(rep.violations, 0);
    assert!(rep.min_q >= frozen_fk_constant(2.0, 2));
    assert_eq!(rep.min_q, rep.samples[rep.argmin].q);
    let again = faber_krahn_sweep(&mesh, &op, &cfg).unwrap();
    assert_eq!(rep.min_q.to_bits(), again.min_q.to_bits());
}

#[test]
fn half_space_domains_are_reflected() {
    let m = Manifold::half_space_box(&[[-1.0, 1.0], [0.0, 1.0]], None).unwrap();
    let mesh = build_mesh(&m, 1.0 / 16.0).unwrap();
    let op = assemble(&mesh).unwrap();
    let center = mesh.nearest_vertex(&[0.0, 0.0]);
    let rep = faber_krahn_sweep(&mesh, &op, &FkSweepConfig { center, radius: 0.6, n_domains: 40, seed: 1, b: 2.0 }).unwrap();
    assert!(rep.samples.iter().any(|s| s.touches_boundary && s.q_reflected.is_some()));
    assert_eq!(rep.violations, 0);
}

#[test]
fn radius_in_a_flat_box_is_the_distance_to_the_cutoff() {
    let mesh = build_mesh(&Manifold::euclidean_box(&[[0.0, 1.0], [0.0, 1.0]], None).unwrap(), 1.0 / 16.0).unwrap();
    let x = mesh.nearest_vertex(&[0.5, 0.5]);
    let (r, limit) = euclidean_radius(&mesh, x, 2.0).unwrap();
    assert_relative_eq!(r, 0.5, max_relative = 1e-3);
    assert_eq!(limit, RadiusLimit::Compactness);
}

#[test]
fn constant_metric_is_rescaled_away() {
    let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
    let mesh = build_mesh(&Manifold::euclidean_box(&[[0.0, 1.0], [0.0, 1.0]], Some(g)).unwrap(), 1.0 / 16.0).unwrap();
    let ctx = RadiusContext::new(&mesh, 2.0).unwrap();
    for p in [[0.5, 0.5], [0.25, 0.625]] {
        let x = mesh.nearest_vertex(&p);
        let (r, limit) = ctx.euclidean_radius(x);
        assert_eq!(limit, RadiusLimit::Compactness);
        assert_relative_eq!(r, ctx.compactness_radius(x), max_relative = 1e-3);
    }
}

#[test]
fn flat_profile_radius_at_the_origin_hits_the_box() {
    let psi = PsiProfile::new(&[[0.0, 0.0], [2.0, 2.0]], Some(1.0), None).unwrap();
    let m = Manifold::spherically_symmetric(&[[-1.0, 1.0], [-1.0, 1.0]], psi, 1.0 / 16.0).unwrap();
    let mesh = build_mesh(&m, 1.0 / 16.0).unwrap();
    let (r, limit) = euclidean_radius(&mesh, mesh.nearest_vertex(&[0.0, 0.0]), 2.0).unwrap();
    assert_eq!(limit, RadiusLimit::Compactness);
    assert_relative_eq!(r, 1.0, max_relative = 1e-3);
}

#[test]
fn radius_field_truncation() {
    let mesh = build_mesh(&Manifold::euclidean_box(&[[0.0, 1.0], [0.0, 1.0]], None).unwrap(), 1.0 / 8.0).unwrap();
    let rf = radius_field(&mesh, 2.0, 10.0, 2.0).unwrap();
    for (k, &v) in rf.vertices.iter().enumerate() {
        let z = mesh.vertex(v);
        let dist = z[0].min(1.0 - z[0]).min(z[1]).min(1.0 - z[1]);
        assert_relative_eq!(rf.r_e[k], dist, max_relative = 1e-3);
        assert_eq!(rf.r[k], rf.r_e[k] / 2.0);
    }
    let rf = radius_field(&mesh, 2.0, 0.1, 2.0).unwrap();
    for (k, _) in rf.vertices.iter().enumerate() {
        assert!(rf.r[k] > 0.0 && rf.r[k] <= 0.05);
        if rf.r_e[k] >= 0.1 {
            assert_eq!(rf.r[k], 0.05);
        }
    }
    assert!(radius_field(&mesh, 2.0, 1.0, 1.0).is_err());
    assert!(radius_field(&mesh, 1.0, 1.0, 2.0).is_err());
}
