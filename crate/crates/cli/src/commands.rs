use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use lipheat::femcore::{export_mesh, Mesh};
use lipheat::heat::{
    conservativeness_check, control_pair, even_times, gaussian_bound_check, geometric_times, holdout_check,
    lumped_mass, mean_value_check, spread_sources, verify_decoupled_bound, HeatKernelGrid, HeatScheme, KernelSet,
};
use lipheat::kato::{
    feynman_kac_mc, kato_criterion_check, kato_integral, schroedinger_evolve, surface_kato, FkConfig, KatoMeasure,
    MeasureKind,
};
use lipheat::spectral::{faber_krahn_sweep, frozen_fk_constant, lambda1, radius_field, FkSweepConfig, RadiusField, RadiusLimit};

use crate::config::{self, Loaded, Setup, Tolerances};
use crate::output::{column, manifest_path, parse_f64, parse_usize, read_csv, write_atomic, Cell, Csv, RunManifest};
use crate::{Cli, CliError, Command, FkArgs, FkmcArgs, Global, HeatArgs, KatoArgs, RadiusArgs, ReportArgs, VerifyArgs, VerifyKind};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut tol = Tolerances::default();
    tol.apply(&cli.global.tol_override)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot build thread pool: {e}")))?;
    pool.install(|| dispatch(cli, &tol))
}

fn dispatch(cli: Cli, tol: &Tolerances) -> Result<(), CliError> {
    let g = &cli.global;
    match &cli.command {
        Command::Mesh => mesh(g, tol),
        Command::Eig => eig(g, tol),
        Command::Fk(a) => fk(g, tol, a),
        Command::Radius(a) => radius(g, tol, a),
        Command::Heatkernel(a) => heatkernel(g, tol, a),
        Command::Verify(a) => verify(g, tol, a),
        Command::Kato(a) => kato(g, tol, a),
        Command::Fkmc(a) => fkmc(g, tol, a),
        Command::Report(a) => report(g, a),
    }
}

struct Run<'a> {
    out: PathBuf,
    tol: &'a Tolerances,
    manifest: RunManifest,
    clock: Instant,
}

impl<'a> Run<'a> {
    fn start(name: &str, g: &Global, tol: &'a Tolerances, loaded: Option<&Loaded>) -> Result<Self, CliError> {
        let out = g.out.clone().ok_or_else(|| CliError::Usage("--out is required".into()))?;
        let manifest = RunManifest::new(name, loaded.map(|l| l.raw.as_slice()), g.seed);
        Ok(Self { out, tol, manifest, clock: Instant::now() })
    }

    fn lap(&mut self, stage: &str) {
        self.manifest.stage(stage, self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }

    fn finish(mut self, body: String, failure: Option<String>) -> Result<(), CliError> {
        self.lap("compute");
        write_atomic(&self.out, body.as_bytes())?;
        if let Some(f) = &failure {
            self.manifest.note("failure", f);
        }
        write_atomic(&manifest_path(&self.out), self.manifest.render(self.tol).as_bytes())?;
        match failure {
            Some(f) => Err(CliError::Assertion(f)),
            None => Ok(()),
        }
    }
}

fn load(g: &Global) -> Result<Loaded, CliError> {
    let path = g.config.as_ref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
    config::load(path)
}

fn coords(mesh: &Mesh, v: usize) -> impl Iterator<Item = Cell> + '_ {
    mesh.vertex(v).iter().map(|x| Cell::F(*x))
}

fn coord_header(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x{i}")).collect()
}

fn mesh(g: &Global, tol: &Tolerances) -> Result<(), CliError> {
    let loaded = load(g)?;
    let mut run = Run::start("mesh", g, tol, Some(&loaded))?;
    let s = loaded.config.setup()?;
    run.manifest.note("vertices", s.mesh.n_vertices());
    run.manifest.note("cells", s.mesh.n_cells());
    run.finish(export_mesh(&s.mesh), None)
}

fn eig(g: &Global, tol: &Tolerances) -> Result<(), CliError> {
    let loaded = load(g)?;
    let mut run = Run::start("eig", g, tol, Some(&loaded))?;
    let s = loaded.config.setup()?;
    run.lap("setup");
    let e = lambda1(&s.op)?;
    let mut csv = Csv::new(&["lambda1", "residual", "iterations", "n_free"]);
    csv.row(&[Cell::F(e.lambda1), Cell::F(e.residual), Cell::U(e.iterations), Cell::U(s.op.n_free())]);
    run.finish(csv.into_string(), None)
}

fn fk(g: &Global, tol: &Tolerances, a: &FkArgs) -> Result<(), CliError> {
    let loaded = load(g)?;
    let mut run = Run::start("fk", g, tol, Some(&loaded))?;
    let s = loaded.config.setup()?;
    if a.x.len() != s.mesh.dim() {
        return Err(CliError::Usage(format!("--x needs {} coordinates", s.mesh.dim())));
    }
    run.lap("setup");
    let center = s.mesh.nearest_vertex(&a.x);
    let cfg = FkSweepConfig { center, radius: a.r, n_domains: a.n, seed: g.seed, b: a.b };
    let rep = faber_krahn_sweep(&s.mesh, &s.op, &cfg)?;
    let mut csv = Csv::new(&["domain", "cells", "volume", "q", "touches_boundary", "q_reflected", "redraws"]);
    for d in &rep.samples {
        csv.row(&[
            Cell::U(d.index),
            Cell::U(d.cells.len()),
            Cell::F(d.volume),
            Cell::F(d.q),
            Cell::S(d.touches_boundary.to_string()),
            d.q_reflected.map_or(Cell::S(String::new()), Cell::F),
            Cell::U(d.redraws),
        ]);
    }
    run.manifest.note("min_q", rep.min_q);
    run.manifest.note("a", rep.a);
    run.manifest.note("c_d", rep.c_d);
    run.manifest.note("violations", rep.violations);
    let failure = (rep.violations > 0).then(|| format!("{} domains below a = {}", rep.violations, rep.a));
    run.finish(csv.into_string(), failure)
}

fn limit_name(l: RadiusLimit) -> &'static str {
    match l {
        RadiusLimit::Compactness => "compactness",
        RadiusLimit::Ellipticity => "ellipticity",
        RadiusLimit::Unbounded => "unbounded",
    }
}

fn radius(g: &Global, tol: &Tolerances, a: &RadiusArgs) -> Result<(), CliError> {
    let loaded = load(g)?;
    let mut run = Run::start("radius", g, tol, Some(&loaded))?;
    let s = loaded.config.setup()?;
    run.lap("setup");
    let rf = radius_field(&s.mesh, a.b, a.eps1, a.eps2)?;
    let mut header = vec!["vertex".to_string()];
    header.extend(coord_header(s.mesh.dim()));
    header.extend(["r_E", "R", "limit"].map(String::from));
    let mut csv = Csv::with_header(header);
    for (k, &v) in rf.vertices.iter().enumerate() {
        let mut row = vec![Cell::U(v)];
        row.extend(coords(&s.mesh, v));
        row.extend([Cell::F(rf.r_e[k]), Cell::F(rf.r[k]), Cell::S(limit_name(rf.limit[k]).into())]);
        csv.row(&row);
    }
    run.manifest.note("b", a.b);
    run.manifest.note("eps1", a.eps1);
    run.manifest.note("eps2", a.eps2);
    run.finish(csv.into_string(), None)
}

fn heatkernel(g: &Global, tol: &Tolerances, a: &HeatArgs) -> Result<(), CliError> {
    let loaded = load(g)?;
    let mut run = Run::start("heatkernel", g, tol, Some(&loaded))?;
    let s = loaded.config.setup()?;
    let times = geometric_times(a.tmin, a.tmax, a.k)?;
    let sources = spread_sources(&s.op, a.sources);
    run.lap("setup");
    let set = KernelSet::compute(&s.mesh, &s.op, &sources, &times, HeatScheme::default())?;
    let mut csv = Csv::new(&["source", "t", "vertex", "p"]);
    let mut clamps = 0;
    let mut min_raw: f64 = 0.0;
    for grid in &set.grids {
        clamps += grid.clamps;
        min_raw = min_raw.min(grid.min_raw);
        for (t, col) in grid.times.iter().zip(&grid.columns) {
            for (v, p) in col.iter().enumerate() {
                csv.row(&[Cell::U(grid.source), Cell::F(*t), Cell::U(v), Cell::F(*p)]);
            }
        }
    }
    let scheme = HeatScheme::default();
    run.manifest.note("steps_first", scheme.steps_first);
    run.manifest.note("steps_per_segment", scheme.steps_per_segment);
    run.manifest.note("smoothing_steps", scheme.smoothing_steps);
    run.manifest.note("clamps", clamps);
    run.manifest.note("min_raw", min_raw);
    run.finish(csv.into_string(), None)
}

/// Rebuilds a [`KernelSet`] from a `heatkernel` CSV on the configured mesh.
fn read_kernels(path: &Path, s: &Setup) -> Result<KernelSet, CliError> {
    let (header, rows) = read_csv(path)?;
    let (cs, ct, cv, cp) =
        (column(&header, "source", path)?, column(&header, "t", path)?, column(&header, "vertex", path)?, column(&header, "p", path)?);
    let n = s.mesh.n_vertices();
    let mut grids: Vec<HeatKernelGrid> = Vec::new();
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    for row in &rows {
        let source = parse_usize(&row[cs], path)?;
        let t = parse_f64(&row[ct], path)?;
        let v = parse_usize(&row[cv], path)?;
        let p = parse_f64(&row[cp], path)?;
        if v >= n {
            return Err(CliError::Usage(format!("{}: vertex {v} not on the configured mesh", path.display())));
        }
        let gi = *index.entry(source).or_insert_with(|| {
            grids.push(HeatKernelGrid {
                source,
                times: Vec::new(),
                columns: Vec::new(),
                clamps: 0,
                min_raw: 0.0,
                scheme: HeatScheme::default(),
            });
            grids.len() - 1
        });
        let grid = &mut grids[gi];
        if grid.times.last() != Some(&t) {
            grid.times.push(t);
            grid.columns.push(vec![0.0; n]);
        }
        grid.columns.last_mut().unwrap()[v] = p;
    }
    if grids.is_empty() {
        return Err(CliError::Usage(format!("{} holds no kernel samples", path.display())));
    }
    if grids.iter().any(|gr| gr.times != grids[0].times) {
        return Err(CliError::Usage(format!("{}: sources use different time grids", path.display())));
    }
    let sources: Vec<usize> = grids.iter().map(|gr| gr.source).collect();
    let distances = lipheat::par::map_slice(&sources, |&x| s.mesh.distances_from(&[x], None));
    Ok(KernelSet { dim: s.mesh.dim(), mass: lumped_mass(&s.mesh), grids, distances })
}

fn read_radius(path: &Path, a: &RadiusArgs) -> Result<RadiusField, CliError> {
    let (header, rows) = read_csv(path)?;
    let (cv, ce, cr) = (column(&header, "vertex", path)?, column(&header, "r_E", path)?, column(&header, "R", path)?);
    let cl = header.iter().position(|h| h == "limit");
    let mut rf = RadiusField {
        b: a.b,
        eps1: a.eps1,
        eps2: a.eps2,
        vertices: Vec::new(),
        r_e: Vec::new(),
        r: Vec::new(),
        limit: Vec::new(),
    };
    for row in &rows {
        rf.vertices.push(parse_usize(&row[cv], path)?);
        rf.r_e.push(parse_f64(&row[ce], path)?);
        rf.r.push(parse_f64(&row[cr], path)?);
        rf.limit.push(match cl.map(|c| row[c].as_str()) {
            Some("ellipticity") => RadiusLimit::Ellipticity,
            Some("unbounded") => RadiusLimit::Unbounded,
            _ => RadiusLimit::Compactness,
        });
    }
    if rf.vertices.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage(format!("{}: vertices must be strictly increasing", path.display())));
    }
    Ok(rf)
}

/// Refuses kernels computed from a different configuration.
fn check_provenance(input: &Path, loaded: &Loaded) -> Result<(), CliError> {
    let Ok(text) = std::fs::read_to_string(manifest_path(input)) else { return Ok(()) };
    let want = crate::output::sha256_hex(&loaded.raw);
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("config_sha256 = ") {
            if rest.trim_matches('"') != want {
                return Err(CliError::Usage(format!("{} was computed from a different config", input.display())));
            }
        }
    }
    Ok(())
}

fn verify(g: &Global, tol: &Tolerances, a: &VerifyArgs) -> Result<(), CliError> {
    let loaded = load(g)?;
    check_provenance(&a.input, &loaded)?;
    let name = format!("verify {:?}", a.kind).to_lowercase();
    let mut run = Run::start(&name, g, tol, Some(&loaded))?;
    let s = loaded.config.setup()?;
    let set = read_kernels(&a.input, &s)?;
    let needs_radius = matches!(a.kind, VerifyKind::Decoupled | VerifyKind::Controlpair);
    let rf = match (&a.radius, needs_radius) {
        (Some(p), _) => Some(read_radius(p, &a.field)?),
        (None, true) => return Err(CliError::Usage("--radius is required for this check".into())),
        (None, false) => None,
    };
    run.lap("load");
    let (body, failure) = match a.kind {
        VerifyKind::Decoupled => {
            let rep = verify_decoupled_bound(&set, rf.as_ref().unwrap())?;
            let mut csv = Csv::new(&["source", "t", "R", "sup_p", "scaled"]);
            for r in &rep.rows {
                csv.row(&[Cell::U(r.source), Cell::F(r.t), Cell::F(r.r), Cell::F(r.sup_p), Cell::F(r.scaled)]);
            }
            run.manifest.note("c_fit", rep.c_fit);
            (csv.into_string(), (!rep.c_fit.is_finite()).then(|| "C_fit is not finite".to_string()))
        }
        VerifyKind::Controlpair => {
            let cp = control_pair(&set, rf.as_ref().unwrap(), even_times)?;
            let slack = tol.get("holdout_slack");
            let hold = holdout_check(&cp, &set, |gi, k| !even_times(gi, k), slack)?;
            let mut csv = Csv::new(&["source", "t", "sup_p", "sigma", "xi", "bound_ratio", "held_out"]);
            for (gi, grid) in set.grids.iter().enumerate() {
                let xi = cp.xi_at(grid.source).unwrap_or(f64::NAN);
                for (k, (t, col)) in grid.times.iter().zip(&grid.columns).enumerate() {
                    let sup = col.iter().copied().fold(0.0, f64::max);
                    let ratio = cp.ratio(sup, *t, grid.source).unwrap_or(f64::NAN) / cp.c_fit;
                    csv.row(&[
                        Cell::U(grid.source),
                        Cell::F(*t),
                        Cell::F(sup),
                        Cell::F(cp.sigma(*t)),
                        Cell::F(xi),
                        Cell::F(ratio),
                        Cell::S((!even_times(gi, k)).to_string()),
                    ]);
                }
            }
            run.manifest.note("c_fit", cp.c_fit);
            run.manifest.note("holdout_max_ratio", hold.max_ratio);
            run.manifest.note("holdout_violations", hold.violations);
            for p in [1.0, 2.0, 3.0] {
                run.manifest.note(&format!("p_integrable_{p}"), cp.p_integrable(p));
            }
            let failure = (hold.violations > 0)
                .then(|| format!("{} held-out samples exceed the pair by more than {slack}", hold.violations));
            (csv.into_string(), failure)
        }
        VerifyKind::Gaussian => {
            let rep = gaussian_bound_check(&set, a.eps, tol.get("gaussian_floor"))?;
            let mut csv = Csv::new(&["eps", "sup_ratio", "samples", "floored"]);
            csv.row(&[Cell::F(a.eps), Cell::F(rep.sup_ratio), Cell::U(rep.samples), Cell::U(rep.floored)]);
            (csv.into_string(), (!rep.sup_ratio.is_finite()).then(|| "Gaussian ratio is not finite".to_string()))
        }
        VerifyKind::Meanvalue => {
            let a_fk = frozen_fk_constant(a.field.b, set.dim);
            let t1 = set.times()[0];
            let mut csv = Csv::new(&["source", "t", "tau", "q", "c_mv"]);
            let mut bad = 0;
            for (gi, grid) in set.grids.iter().enumerate() {
                for &t in grid.times.iter().filter(|&&t| t / 2.0 >= t1) {
                    for q in [1.0, 2.0] {
                        let m = mean_value_check(&set, gi, t, t / 2.0, q, a_fk)?;
                        if !(m.c_mv.is_finite() && m.c_mv > 0.0) {
                            bad += 1;
                        }
                        csv.row(&[Cell::U(m.source), Cell::F(m.t), Cell::F(m.tau), Cell::F(m.q), Cell::F(m.c_mv)]);
                    }
                }
            }
            run.manifest.note("a", a_fk);
            (csv.into_string(), (bad > 0).then(|| format!("{bad} mean-value constants are not finite")))
        }
        VerifyKind::Mass => {
            let profiles = conservativeness_check(&set);
            let limit = 1.0 + tol.get("mass");
            let mut csv = Csv::new(&["source", "t", "mass"]);
            let mut over = 0;
            for (grid, prof) in set.grids.iter().zip(&profiles) {
                for (t, m) in grid.times.iter().zip(prof) {
                    if *m > limit {
                        over += 1;
                    }
                    csv.row(&[Cell::U(grid.source), Cell::F(*t), Cell::F(*m)]);
                }
            }
            (csv.into_string(), (over > 0).then(|| format!("{over} kernels carry mass above {limit}")))
        }
    };
    run.finish(body, failure)
}

fn load_measure(path: &Path, mesh: &Mesh) -> Result<KatoMeasure, CliError> {
    Ok(KatoMeasure::from_config(&config::load_measure(path)?, mesh)?)
}

fn kato(g: &Global, tol: &Tolerances, a: &KatoArgs) -> Result<(), CliError> {
    let loaded = load(g)?;
    let mut run = Run::start("kato", g, tol, Some(&loaded))?;
    let s = loaded.config.setup()?;
    let kappa = load_measure(&a.measure, &s.mesh)?;
    let t_lo = a.t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_hi = a.t.iter().copied().fold(0.0, f64::max);
    let times = geometric_times(a.tmin.unwrap_or(t_lo / 16.0), t_hi, a.k)?;
    let sources = spread_sources(&s.op, a.sources);
    run.lap("setup");
    let set = KernelSet::compute(&s.mesh, &s.op, &sources, &times, HeatScheme::default())?;
    run.lap("kernels");
    let mut csv = Csv::new(&["t", "J"]);
    let mut ts = a.t.clone();
    ts.sort_by(f64::total_cmp);
    for &t in &ts {
        let j = match kappa.kind {
            MeasureKind::VolumeDensity => kato_integral(&set, &s.mesh, &kappa, t)?,
            MeasureKind::SurfaceDensity => surface_kato(&set, &s.mesh, &kappa, t)?,
        };
        csv.row(&[Cell::F(t), Cell::F(j)]);
    }
    let mut failure = None;
    if let (Some(p), MeasureKind::VolumeDensity) = (kappa.exponent, kappa.kind) {
        let rf = radius_field(&s.mesh, a.field.b, a.field.eps1, a.field.eps2)?;
        let cp = control_pair(&set, &rf, |_, _| true)?;
        let rep = kato_criterion_check(&set, &kappa, &cp, p)?;
        run.manifest.note("criterion_p", p);
        run.manifest.note("criterion_min_slack", rep.min_slack);
        if rep.min_slack < 0.0 {
            failure = Some(format!("integrated kernel bound violated (slack {:e})", rep.min_slack));
        }
    }
    run.finish(csv.into_string(), failure)
}

fn fkmc(g: &Global, tol: &Tolerances, a: &FkmcArgs) -> Result<(), CliError> {
    let loaded = load(g)?;
    let mut run = Run::start("fkmc", g, tol, Some(&loaded))?;
    let s = loaded.config.setup()?;
    let kappa = match &a.measure {
        Some(p) => load_measure(p, &s.mesh)?,
        None => KatoMeasure::volume(&s.mesh, |_| 0.0),
    };
    let starts = spread_sources(&s.op, a.starts);
    let ones = vec![1.0; s.mesh.n_vertices()];
    run.lap("setup");
    let cfg = FkConfig { paths: a.paths, t: a.t, seed: g.seed };
    let mc = feynman_kac_mc(&s.op, &kappa, &ones, &cfg, &starts)?;
    let form = s.op.extend_vector(&schroedinger_evolve(&s.op, &s.mesh, &kappa, 2.0, &vec![1.0; s.op.n_free()], a.t, a.steps)?);
    let mut header = vec!["vertex".to_string()];
    header.extend(coord_header(s.mesh.dim()));
    header.extend(["mean", "std_error", "form", "z"].map(String::from));
    let mut csv = Csv::with_header(header);
    let mut worst: f64 = 0.0;
    for e in &mc {
        let z = if e.std_error > 0.0 { (e.mean - form[e.vertex]) / e.std_error } else { 0.0 };
        worst = worst.max(z.abs());
        let mut row = vec![Cell::U(e.vertex)];
        row.extend(coords(&s.mesh, e.vertex));
        row.extend([Cell::F(e.mean), Cell::F(e.std_error), Cell::F(form[e.vertex]), Cell::F(z)]);
        csv.row(&row);
    }
    run.manifest.note("max_abs_z", worst);
    let sigma = tol.get("mc_sigma");
    let failure = (worst > sigma).then(|| format!("Monte Carlo off by {worst:.2} standard errors"));
    run.finish(csv.into_string(), failure)
}

fn report(g: &Global, a: &ReportArgs) -> Result<(), CliError> {
    let out = g.out.clone().ok_or_else(|| CliError::Usage("--out is required".into()))?;
    let mut md = String::from("# lipheat summary\n");
    for path in &a.input {
        let (header, rows) = read_csv(path)?;
        let title = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        writeln!(md, "\n## {title}\n").unwrap();
        writeln!(md, "| {} |", header.join(" | ")).unwrap();
        writeln!(md, "|{}", "---|".repeat(header.len())).unwrap();
        for row in rows.iter().take(a.max_rows) {
            writeln!(md, "| {} |", row.join(" | ")).unwrap();
        }
        if rows.len() > a.max_rows {
            writeln!(md, "\n{} of {} rows shown.", a.max_rows, rows.len()).unwrap();
        }
    }
    write_atomic(&out, md.as_bytes())
}
