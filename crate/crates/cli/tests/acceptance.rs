//! Acceptance suite: one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use lipheat::femcore::{assemble, build_mesh, dirichlet_restrict, far_field_cutoff, DiscreteOperator, Mesh};
use lipheat::geometry::{path_distance, Manifold, PsiProfile};
use lipheat::heat::{
    control_pair, dyadic_times, even_times, geometric_times, heat_kernel, holdout_check, mean_value_check,
    p_integrable, verify_decoupled_bound, HeatScheme, KernelSet,
};
use lipheat::kato::{
    feynman_kac_mc, gradient_estimate_check, gradient_tolerance, kato_criterion_check, kato_integral,
    riesz_criterion, schroedinger_evolve, surface_kato, FkConfig, KatoMeasure,
};
use lipheat::spectral::{
    bessel_j0_first_root, faber_krahn_sweep, frozen_fk_constant, lambda1, radius_field, FkSweepConfig,
};
use nalgebra::DMatrix;

// pinned tolerances
const AC1_TOL_D1: f64 = 0.03;
const AC1_TOL_D2: f64 = 0.05;
const AC1_MAX_SECONDS: f64 = 60.0;
const AC2_TOL_INTERVAL: f64 = 0.01;
const AC2_TOL_DISK: f64 = 0.02;
const AC2_BESSEL_TOL: f64 = 1e-10;
const AC3_MIN_DOMAINS: usize = 100;
const AC4_STABILITY: f64 = 0.10;
const AC4_EUCLID_WINDOW: (f64, f64) = (0.9, 1.1);
const AC5_SLACK: f64 = 1.05;
const AC6_SLACK: f64 = 0.05;
const AC8_SURFACE_BAND: f64 = 0.15;
const AC8_RIESZ_TOL: f64 = 0.05;
const AC9_CK_TOL: f64 = 1e-4;
const AC9_SCALAR_TOL: f64 = 1e-8;
const AC9_MC_SE: f64 = 3.0;
const AC11_STABILITY: f64 = 0.10;

const B: f64 = 2.0;
const EPS1: f64 = 1.0;
const EPS2: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[derive(Clone, Copy)]
enum Fixture {
    Euclid1,
    Euclid2,
    Diag,
    Cone,
}

impl Fixture {
    fn name(self) -> &'static str {
        match self {
            Fixture::Euclid1 => "euclid-1d",
            Fixture::Euclid2 => "euclid-2d",
            Fixture::Diag => "diag(2,1/2)",
            Fixture::Cone => "cone",
        }
    }

    fn manifold(self) -> Manifold {
        match self {
            Fixture::Euclid1 => Manifold::euclidean_box(&[[-5.0, 5.0]], None).unwrap(),
            Fixture::Euclid2 => Manifold::euclidean_box(&[[-2.0, 2.0], [-2.0, 2.0]], None).unwrap(),
            Fixture::Diag => {
                let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![B, 1.0 / B]));
                Manifold::euclidean_box(&[[-2.0, 2.0], [-2.0, 2.0]], Some(g)).unwrap()
            }
            Fixture::Cone => cone(&[[-1.2, 1.2], [-1.2, 1.2]]),
        }
    }

    /// Coarse mesh width; the refinement halves it.
    fn h(self) -> f64 {
        match self {
            Fixture::Euclid1 => 1.0 / 32.0,
            _ => 1.0 / 16.0,
        }
    }

    fn eps1(self) -> f64 {
        match self {
            Fixture::Euclid1 => 100.0,
            _ => EPS1,
        }
    }

    fn source_points(self) -> Vec<Vec<f64>> {
        match self {
            Fixture::Euclid1 => vec![vec![0.0], vec![1.5], vec![-3.0], vec![4.0], vec![-4.5]],
            Fixture::Cone => vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.25, -0.5], vec![-0.75, 0.75], vec![1.0, 0.25]],
            _ => vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.25, -0.75], vec![-1.0, 1.0], vec![1.5, 0.5]],
        }
    }
}

/// `ψ(r) = min{r, 2 - r}`.
fn cone(bounds: &[[f64; 2]]) -> Manifold {
    let psi = PsiProfile::new(&[[0.0, 0.0], [1.0, 1.0], [1.9, 0.1]], Some(1.0), None).unwrap();
    Manifold::spherically_symmetric(bounds, psi, 1.0 / 32.0).unwrap()
}

struct Level {
    mesh: Mesh,
    op: DiscreteOperator,
}

fn level(m: &Manifold, h: f64) -> Level {
    let mesh = build_mesh(m, h).unwrap();
    let op = far_field_cutoff(&assemble(&mesh).unwrap(), &mesh).unwrap();
    Level { mesh, op }
}

fn sources(mesh: &Mesh, pts: &[Vec<f64>]) -> Vec<usize> {
    pts.iter().map(|p| mesh.nearest_vertex(p)).collect()
}

fn ac1() -> Outcome {
    let mut worst = [0.0_f64; 2];
    let mut secs = [0.0_f64; 2];
    for d in [1usize, 2] {
        let start = Instant::now();
        let m = Manifold::euclidean_box(&vec![[-5.0, 5.0]; d], None).unwrap();
        let lv = level(&m, 1.0 / 64.0);
        let x = lv.mesh.nearest_vertex(&vec![0.0; d]);
        let times = geometric_times(0.05, 0.5, 5).unwrap();
        let g = heat_kernel(&lv.op, x, &times, HeatScheme::default()).unwrap();
        for (t, col) in g.times.iter().zip(&g.columns) {
            let exact = (2.0 * PI * t).powf(-(d as f64) / 2.0);
            worst[d - 1] = worst[d - 1].max(rel(col[x], exact));
        }
        secs[d - 1] = start.elapsed().as_secs_f64();
    }
    let pass = worst[0] <= AC1_TOL_D1 && worst[1] <= AC1_TOL_D2 && secs.iter().all(|&s| s < AC1_MAX_SECONDS);
    outcome(
        pass,
        format!(
            "max rel err d=1 {:.2e} (tol {AC1_TOL_D1}), d=2 {:.2e} (tol {AC1_TOL_D2}); runtime {:.1}s / {:.1}s",
            worst[0], worst[1], secs[0], secs[1]
        ),
    )
}

fn ac2() -> Outcome {
    let j = bessel_j0_first_root();
    let bessel_ok = (j - 2.404_825_557_695_773).abs() <= AC2_BESSEL_TOL;
    let lv = level(&Manifold::euclidean_box(&[[0.0, 1.0]], None).unwrap(), 1.0 / 64.0);
    let l_int = lambda1(&lv.op).unwrap().lambda1;
    let m = Manifold::euclidean_box(&[[-1.1, 1.1], [-1.1, 1.1]], None).unwrap();
    let mesh = build_mesh(&m, 1.0 / 128.0).unwrap();
    let op = assemble(&mesh).unwrap();
    let inside: Vec<usize> = (0..mesh.n_vertices())
        .filter(|&v| mesh.vertex(v).iter().map(|x| x * x).sum::<f64>() < 1.0)
        .collect();
    let l_disk = lambda1(&dirichlet_restrict(&op, &inside).unwrap()).unwrap().lambda1;
    let e1 = rel(l_int, PI * PI);
    let e2 = rel(l_disk, j * j);
    outcome(
        bessel_ok && e1 <= AC2_TOL_INTERVAL && e2 <= AC2_TOL_DISK,
        format!("j01 = {j:.12}; interval rel err {e1:.2e}; disk rel err {e2:.2e}"),
    )
}

fn ac3() -> Outcome {
    let cases: Vec<(&str, Manifold, f64)> = vec![
        ("euclid-1d", Manifold::euclidean_box(&[[-1.0, 1.0]], None).unwrap(), 1.0 / 32.0),
        ("euclid-2d", Manifold::euclidean_box(&[[-1.0, 1.0], [-1.0, 1.0]], None).unwrap(), 1.0 / 16.0),
        ("diag(2,1/2)", Fixture::Diag.manifold(), 1.0 / 16.0),
        ("cone", Fixture::Cone.manifold(), 1.0 / 16.0),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m, h) in cases {
        let lv = level(&m, h);
        let d = m.dim();
        let center = lv.mesh.nearest_vertex(&vec![0.0; d]);
        let cfg = FkSweepConfig { center, radius: 0.8, n_domains: AC3_MIN_DOMAINS, seed: 7, b: B };
        let rep = faber_krahn_sweep(&lv.mesh, &lv.op, &cfg).unwrap();
        let ok = rep.samples.len() >= AC3_MIN_DOMAINS && rep.violations == 0 && rep.min_q >= rep.a;
        pass &= ok;
        parts.push(format!("{name}: min q {:.3} vs a {:.3}, {} violations", rep.min_q, rep.a, rep.violations));
    }
    outcome(pass, parts.join("; "))
}

struct HeatRun {
    set: KernelSet,
    rf: lipheat::spectral::RadiusField,
    c_fit: f64,
}

fn heat_run(f: Fixture, h: f64, times: &[f64]) -> HeatRun {
    let m = f.manifold();
    let lv = level(&m, h);
    let rf = radius_field(&lv.mesh, B, f.eps1(), EPS2).unwrap();
    let src = sources(&lv.mesh, &f.source_points());
    let set = KernelSet::compute(&lv.mesh, &lv.op, &src, times, HeatScheme::default()).unwrap();
    let c_fit = verify_decoupled_bound(&set, &rf).unwrap().c_fit;
    HeatRun { set, rf, c_fit }
}

const FIXTURES: [Fixture; 4] = [Fixture::Euclid1, Fixture::Euclid2, Fixture::Diag, Fixture::Cone];

fn base_times() -> Vec<f64> {
    dyadic_times(1.0, 5)
}

fn doubled_times() -> Vec<f64> {
    geometric_times(1.0 / 16.0, 1.0, 9).unwrap()
}

fn ac4_ac6_ac11() -> (Outcome, Outcome, Outcome) {
    let mut pass4 = true;
    let mut pass6 = true;
    let mut pass11 = true;
    let mut d4 = Vec::new();
    let mut d6 = Vec::new();
    let mut d11 = Vec::new();
    for f in FIXTURES {
        let coarse = heat_run(f, f.h(), &base_times());
        let fine = heat_run(f, f.h() / 2.0, &base_times());
        let dbl = heat_run(f, f.h(), &doubled_times());
        let dh = rel(fine.c_fit, coarse.c_fit);
        let dt = rel(dbl.c_fit, coarse.c_fit);
        let ok = coarse.c_fit.is_finite() && dh <= AC4_STABILITY && dt <= AC4_STABILITY;
        pass4 &= ok;
        d4.push(format!("{}: C_fit {:.4} (h/2 {:+.1}%, 2K {:+.1}%)", f.name(), coarse.c_fit, 100.0 * dh, 100.0 * dt));
        if let Fixture::Euclid1 = f {
            let target = (2.0 * PI).powf(-0.5);
            let r = fine.c_fit / target;
            let ok = r >= AC4_EUCLID_WINDOW.0 && r <= AC4_EUCLID_WINDOW.1;
            pass4 &= ok;
            d4.push(format!("euclid-1d C_fit/(2pi)^-1/2 = {r:.4}"));
        }

        for run in [&coarse, &fine] {
            let cp = control_pair(&run.set, &run.rf, even_times).unwrap();
            let hold = holdout_check(&cp, &run.set, |g, k| !even_times(g, k), AC6_SLACK).unwrap();
            let dominated = cp.c_fit <= run.c_fit * (1.0 + 1e-12);
            pass6 &= hold.violations == 0 && hold.samples > 0 && dominated;
            d6.push(format!(
                "{}: held-out max ratio {:.3} over {} samples, C_cp {:.4} <= C_dec {:.4}",
                f.name(),
                hold.max_ratio,
                hold.samples,
                cp.c_fit,
                run.c_fit
            ));
        }

        let a = frozen_fk_constant(B, f.manifold().dim());
        let mut worst: f64 = 0.0;
        let mut finite = true;
        for t in [0.25, 0.5, 1.0] {
            for q in [1.0, 2.0] {
                let c0 = mean_value_check(&coarse.set, 0, t, t / 2.0, q, a).unwrap().c_mv;
                let c1 = mean_value_check(&fine.set, 0, t, t / 2.0, q, a).unwrap().c_mv;
                finite &= c0.is_finite() && c1.is_finite() && c0 > 0.0;
                worst = worst.max(rel(c1, c0));
            }
        }
        pass11 &= finite && worst <= AC11_STABILITY;
        d11.push(format!("{}: max refinement change {:.1}%", f.name(), 100.0 * worst));
    }
    for d in [1usize, 2, 3] {
        for p in [0.5, 0.75, 1.0, 1.5, 2.0, 3.0] {
            if p_integrable(d, p) != integrability_oracle(d, p) {
                pass6 = false;
                d6.push(format!("p-integrability mismatch at d={d}, p={p}"));
            }
        }
    }
    (outcome(pass4, d4.join("; ")), outcome(pass6, d6.join("; ")), outcome(pass11, d11.join("; ")))
}

/// Converges iff successive decades of `∫ Σ^{1/p}` near 0 shrink geometrically.
fn integrability_oracle(d: usize, p: f64) -> bool {
    let sigma = |t: f64| 1.0 + (EPS1 / EPS2).powi(d as i32) * t.powf(-(d as f64) / 2.0);
    let decade = |lo: f64| {
        let n = 4000;
        let (a, b) = (lo.ln(), (10.0 * lo).ln());
        (0..n)
            .map(|i| {
                let u = a + (b - a) * (i as f64 + 0.5) / n as f64;
                let t = u.exp();
                sigma(t).powf(1.0 / p) * t * (b - a) / n as f64
            })
            .sum::<f64>()
    };
    decade(1e-9) / decade(1e-8) < 0.999
}

fn ac5() -> Outcome {
    let cases: Vec<(&str, Manifold, f64)> = vec![
        ("euclid-1d", Manifold::euclidean_box(&[[-1.0, 1.0]], None).unwrap(), 1.0 / 32.0),
        ("euclid-2d", Manifold::euclidean_box(&[[-1.0, 1.0], [-1.0, 1.0]], None).unwrap(), 1.0 / 6.0),
        ("diag(2,1/2)", Fixture::Diag.manifold(), 1.0 / 3.0),
        ("cone", cone(&[[-1.2, 1.2], [-1.2, 1.2]]), 0.2),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m, h) in cases {
        let mesh = build_mesh(&m, h).unwrap();
        assert!(mesh.n_vertices() <= 200, "{name} has {} vertices", mesh.n_vertices());
        let rf = radius_field(&mesh, B, EPS1, EPS2).unwrap();
        let mut violations = 0;
        let mut worst: f64 = 0.0;
        for (i, &u) in rf.vertices.iter().enumerate() {
            for (j, &v) in rf.vertices.iter().enumerate().skip(i + 1) {
                let d = path_distance(&mesh, u, v).unwrap();
                let lhs = (rf.r[i] - rf.r[j]).abs();
                let bound = d / EPS2;
                worst = worst.max(lhs / bound);
                if lhs > bound * AC5_SLACK {
                    violations += 1;
                }
            }
        }
        pass &= violations == 0;
        parts.push(format!("{name}: {} vertices, max ratio {:.3}, {violations} violations", rf.vertices.len(), worst));
    }
    outcome(pass, parts.join("; "))
}

fn ac7() -> Outcome {
    let x0 = [0.013, 0.007];
    let m = Fixture::Euclid2.manifold();
    let lv = level(&m, 1.0 / 32.0);
    let rf = radius_field(&lv.mesh, B, EPS1, EPS2).unwrap();
    let pts = vec![vec![0.0, 0.0], vec![0.03, 0.0], vec![0.5, 0.0], vec![-1.0, 0.5], vec![1.0, 1.0]];
    let src = sources(&lv.mesh, &pts);
    let times = geometric_times(1e-3, 1e-1, 9).unwrap();
    let set = KernelSet::compute(&lv.mesh, &lv.op, &src, &times, HeatScheme::default()).unwrap();
    let cp = control_pair(&set, &rf, |_, _| true).unwrap();
    let k = KatoMeasure::volume(&lv.mesh, |z| ((z[0] - x0[0]).powi(2) + (z[1] - x0[1]).powi(2)).sqrt().powf(-0.5))
        .with_exponent(3.0);
    let js: Vec<f64> = [1e-1, 1e-2, 1e-3].iter().map(|&t| kato_integral(&set, &lv.mesh, &k, t).unwrap()).collect();
    let decreasing = js.windows(2).all(|w| w[1] < w[0]);
    let rep = kato_criterion_check(&set, &k, &cp, 3.0).unwrap();
    outcome(
        decreasing && rep.min_slack >= 0.0,
        format!(
            "J(0.1, 0.01, 0.001) = {:.4e}, {:.4e}, {:.4e}; min slack {:.3e} over {} samples",
            js[0],
            js[1],
            js[2],
            rep.min_slack,
            rep.rows.len()
        ),
    )
}

fn ac8() -> Outcome {
    let m = Manifold::half_space_box(&[[-1.0, 1.0], [0.0, 1.0]], None).unwrap();
    let lv = level(&m, 1.0 / 64.0);
    let x = lv.mesh.nearest_vertex(&[0.0, 0.0]);
    let times = geometric_times(1e-3, 1e-1, 9).unwrap();
    let set = KernelSet::compute(&lv.mesh, &lv.op, &[x], &times, HeatScheme::default()).unwrap();
    let l = KatoMeasure::surface(&lv.mesh, |_| 1.0).unwrap();
    let ts = geometric_times(1e-2, 1e-1, 5).unwrap();
    let ratios: Vec<f64> = ts.iter().map(|&t| surface_kato(&set, &lv.mesh, &l, t).unwrap() / t.sqrt()).collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let band = ratios.iter().map(|r| rel(*r, mean)).fold(0.0, f64::max);

    let m3 = Manifold::half_space_box(&[[-1.0, 1.0], [-1.0, 1.0], [0.0, 0.125]], None).unwrap();
    let mesh3 = build_mesh(&m3, 1.0 / 32.0).unwrap();
    let l3 = KatoMeasure::surface(&mesh3, |_| 1.0).unwrap();
    let radii: Vec<f64> = (2..=6).map(|k| 0.1 * k as f64).collect();
    let origin = mesh3.nearest_vertex(&[0.0, 0.0, 0.0]);
    let prof = riesz_criterion(&mesh3, &l3, 4.0, &radii, &[origin]).unwrap();
    let n = radii.len() as f64;
    let (mx, my) = (radii.iter().sum::<f64>() / n, prof.values.iter().sum::<f64>() / n);
    let slope = radii.iter().zip(&prof.values).map(|(r, v)| (r - mx) * (v - my)).sum::<f64>()
        / radii.iter().map(|r| (r - mx) * (r - mx)).sum::<f64>();
    let e = rel(slope, 2.0 * PI);
    outcome(
        band <= AC8_SURFACE_BAND && e <= AC8_RIESZ_TOL,
        format!("J_sigma/sqrt(t) mean {mean:.4}, max deviation {:.1}%; Riesz slope {slope:.4} (2pi rel err {:.2}%)", 100.0 * band, 100.0 * e),
    )
}

fn ac9() -> Outcome {
    // Chapman–Kolmogorov on small meshes, with equal step sizes on both sides
    let mut ck: f64 = 0.0;
    for (m, h) in [
        (Manifold::euclidean_box(&[[0.0, 1.0]], None).unwrap(), 1.0 / 16.0),
        (Manifold::euclidean_box(&[[-1.0, 1.0], [-1.0, 1.0]], None).unwrap(), 1.0 / 6.0),
    ] {
        let lv = level(&m, h);
        let (t, s) = (0.05, 0.05);
        let scheme = HeatScheme { steps_first: 1024, steps_per_segment: 1024, smoothing_steps: 2 };
        let src = lipheat::heat::spread_sources(&lv.op, 4);
        let set = KernelSet::compute(&lv.mesh, &lv.op, &src, &[t, t + s], scheme).unwrap();
        let mass = &set.mass;
        for gx in &set.grids {
            for gy in &set.grids {
                let conv: f64 =
                    gx.columns[0].iter().zip(&gy.columns[0]).zip(mass).map(|((a, b), w)| a * b * w).sum();
                ck = ck.max(rel(conv, gx.columns[1][gy.source]));
            }
        }
    }

    // constant potential
    let lv = level(&Manifold::euclidean_box(&[[0.0, 1.0]], None).unwrap(), 1.0 / 32.0);
    let c = 3.0;
    let q = 0.7;
    let f0: Vec<f64> = lv.op.free_dofs().iter().map(|&v| (PI * lv.mesh.vertex(v)[0]).sin()).collect();
    let kc = KatoMeasure::volume(&lv.mesh, |_| c);
    let us = schroedinger_evolve(&lv.op, &lv.mesh, &kc, q, &f0, 0.1, 64).unwrap();
    let uh = lipheat::heat::evolve(&lv.op, &f0, 0.1, 64).unwrap();
    let factor = (-q * c * 0.1 / 2.0).exp();
    let scalar = us.iter().zip(&uh).map(|(a, b)| (a - factor * b).abs()).fold(0.0, f64::max)
        / uh.iter().fold(0.0_f64, |a, b| a.max(b.abs()));

    // Feynman–Kac Monte Carlo against the form semigroup (q = 2)
    let bump = KatoMeasure::volume(&lv.mesh, |z| 5.0 * (-(z[0] - 0.5).powi(2) / 0.01).exp());
    let ones = vec![1.0; lv.mesh.n_vertices()];
    let t = 0.1;
    let starts: Vec<usize> = [0.25, 0.5, 0.75].iter().map(|&x| lv.mesh.nearest_vertex(&[x])).collect();
    let mc = feynman_kac_mc(&lv.op, &bump, &ones, &FkConfig { paths: 100_000, t, seed: 42 }, &starts).unwrap();
    let form = schroedinger_evolve(&lv.op, &lv.mesh, &bump, 2.0, &vec![1.0; lv.op.n_free()], t, 512).unwrap();
    let form = lv.op.extend_vector(&form);
    let z = mc.iter().map(|e| (e.mean - form[e.vertex]).abs() / e.std_error).fold(0.0, f64::max);
    outcome(
        ck <= AC9_CK_TOL && scalar <= AC9_SCALAR_TOL && z <= AC9_MC_SE,
        format!("Chapman-Kolmogorov rel err {ck:.2e}; scalar potential err {scalar:.2e}; MC max |z| {z:.2}"),
    )
}

fn ac10() -> Outcome {
    // the Neumann boundary of a chart box is not convex in the sphere metric,
    // so the cap is checked away from it
    let sin = PsiProfile::from_fn(f64::sin, 2.0, 800, 1.0, None).unwrap();
    let fixtures: Vec<(&str, Manifold, f64, f64)> = vec![
        ("flat", Manifold::euclidean_box(&[[-1.0, 1.0], [-1.0, 1.0]], None).unwrap(), 0.0, f64::INFINITY),
        ("sin", Manifold::spherically_symmetric(&[[-1.4, 1.4], [-1.4, 1.4]], sin, 1.0 / 32.0).unwrap(), 1.0, 0.9),
    ];
    let tests: Vec<Box<dyn Fn(&[f64]) -> f64>> = vec![
        Box::new(|z| z[0]),
        Box::new(|z| z[0] + 2.0 * z[1]),
        Box::new(|z| (-4.0 * (z[0] * z[0] + z[1] * z[1])).exp()),
        Box::new(|z| (-8.0 * ((z[0] - 0.3).powi(2) + (z[1] + 0.2).powi(2))).exp()),
        Box::new(|z| (PI * z[0] / 2.0).cos() * (PI * z[1] / 2.0).cos()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m, k, inner) in fixtures {
        let mut v = Vec::new();
        for h in [1.0 / 16.0, 1.0 / 32.0] {
            let mesh = build_mesh(&m, h).unwrap();
            let op = assemble(&mesh).unwrap();
            let kappa = KatoMeasure::volume(&mesh, |_| k);
            let mut worst: f64 = 0.0;
            for f in &tests {
                let fv: Vec<f64> = (0..mesh.n_vertices()).map(|i| f(mesh.vertex(i))).collect();
                let rep = gradient_estimate_check(&mesh, &op, &kappa, &fv, 0.05, 64).unwrap();
                let inside = |c: usize| mesh.barycenter(c).iter().all(|x| x.abs() < inner);
                worst = worst.max(rep.relative_violation_where(inside));
            }
            pass &= worst <= gradient_tolerance(h);
            v.push(worst);
        }
        pass &= v[1] <= v[0];
        parts.push(format!("{name}: rel violation {:.2e} (h) -> {:.2e} (h/2), tol {:.2e} -> {:.2e}", v[0], v[1], gradient_tolerance(1.0 / 16.0), gradient_tolerance(1.0 / 32.0)));
    }
    outcome(pass, parts.join("; "))
}

fn ac12() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cone = dir.path().join("cone.toml");
    std::fs::write(
        &cone,
        "[manifold]\nkind = \"spherically_symmetric\"\nd = 2\nbounds = [[-1.2, 1.2], [-1.2, 1.2]]\n\
         psi_table = [[0.0, 0.0], [1.0, 1.0], [1.9, 0.1]]\nlip_psi = 1.0\n\n[mesh]\nh = 0.0625\n",
    )
    .unwrap();
    let flat = dir.path().join("flat.toml");
    std::fs::write(&flat, "[manifold]\nkind = \"euclidean_box\"\nd = 2\nbounds = [[-1.0, 1.0], [-1.0, 1.0]]\n\n[mesh]\nh = 0.0625\n")
        .unwrap();
    let bin = env!("CARGO_BIN_EXE_lipheat");
    let run = |cfg: &Path, threads: &str, sub: &[&str], out: &Path| -> bool {
        let mut cmd = Command::new(bin);
        cmd.args(sub).arg("--config").arg(cfg).args(["--seed", "7", "--threads", threads, "--out"]).arg(out);
        cmd.output().map(|o| o.status.success()).unwrap_or(false)
    };
    let subs: Vec<(&Path, Vec<&str>)> = vec![
        (&cone, vec!["radius", "--b", "2", "--eps1", "1", "--eps2", "2"]),
        (&cone, vec!["fk", "--x", "0,0", "--r", "0.8", "--n", "100"]),
        (&cone, vec!["heatkernel", "--sources", "4", "--tmin", "0.0625", "--tmax", "1", "--K", "5"]),
        (&flat, vec!["fkmc", "--paths", "2000", "--t", "0.05", "--starts", "3"]),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (cfg, sub) in subs {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "4"] {
            let out = dir.path().join(format!("{}-{threads}-{}.csv", sub[0], outputs.len()));
            if !run(cfg, threads, &sub, &out) {
                pass = false;
                parts.push(format!("{} failed at --threads {threads}", sub[0]));
                break;
            }
            outputs.push(std::fs::read(&out).unwrap());
        }
        let same = outputs.len() == 3 && outputs.windows(2).all(|w| w[0] == w[1]);
        pass &= same;
        parts.push(format!("{}: {}", sub[0], if same { "identical" } else { "differs" }));
    }
    outcome(pass, parts.join("; "))
}

fn print(id: &str, secs: f64, o: &Outcome) {
    println!("{id} {} ({secs:.1}s) {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
}

fn main() {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with("AC")).collect();
    let want = |id: &str| only.is_empty() || only.iter().any(|o| o == id);
    let single: [(&str, fn() -> Outcome); 9] = [
        ("AC01", ac1),
        ("AC02", ac2),
        ("AC03", ac3),
        ("AC05", ac5),
        ("AC07", ac7),
        ("AC08", ac8),
        ("AC09", ac9),
        ("AC10", ac10),
        ("AC12", ac12),
    ];
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    for (id, f) in single {
        if want(id) {
            let start = Instant::now();
            let o = f();
            print(id, start.elapsed().as_secs_f64(), &o);
            results.push((id, o));
        }
    }
    if want("AC04") || want("AC06") || want("AC11") {
        let start = Instant::now();
        let (a4, a6, a11) = ac4_ac6_ac11();
        let secs = start.elapsed().as_secs_f64();
        for (id, o) in [("AC04", a4), ("AC06", a6), ("AC11", a11)] {
            print(id, secs, &o);
            results.push((id, o));
        }
    }
    results.sort_by_key(|(id, _)| *id);
    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(id, _)| *id).collect();
    println!("acceptance: {} passed, {} failed {:?}", results.len() - failed.len(), failed.len(), failed);
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
