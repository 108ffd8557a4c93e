//! Ready-made problems shared by the command line and the examples.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::assembly::FormParams;
use crate::diagnostics::{low_phase_centroid_height, rms_normal_velocity, strain_energy};
use crate::error::{Error, Result};
use crate::fe_space::{FEFunction, FESpace};
use crate::geometry::{ActiveMesh, BackgroundMesh, BoundingBox, LevelSetSurface};
use crate::io::config::{preset, IcPattern, SimConfig};
use crate::io::{print_config, write_csv, write_vtk, PointField};
use crate::models::{ic, lb, ChSolver, LbLevel, NsInput, NsSolver, RunSummary, Simulation};
use crate::physics::MaterialParams;
use crate::solvers::{Preconditioner, SolverOptions};
use crate::Vec3;

/// Mesh, spaces and stabilization parameters of one configuration.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Arc<ActiveMesh>,
    pub scalar: Arc<FESpace>,
    /// `None` when the flow is switched off.
    pub vector: Option<Arc<FESpace>>,
    pub form: FormParams,
}

pub fn discretize(cfg: &SimConfig) -> Result<Discretization> {
    let errs = cfg.validate();
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let g = &cfg.geometry;
    let bg = BackgroundMesh::build(BoundingBox::cube(g.bbox_half), g.n_per_axis)?;
    let mesh = Arc::new(ActiveMesh::build(bg, LevelSetSurface::sphere(g.center, g.radius))?);
    let scalar = Arc::new(FESpace::scalar(mesh.clone(), cfg.fem.scalar_degree)?);
    let vector = if cfg.flow {
        Some(Arc::new(FESpace::vector(mesh.clone(), cfg.fem.velocity_degree)?))
    } else {
        None
    };
    let form = FormParams::new(mesh.h, cfg.physics.eps, cfg.physics.sigma_gamma, cfg.scheme.gamma_c);
    Ok(Discretization {
        mesh,
        scalar,
        vector,
        form,
    })
}

pub fn krylov_options(tol: f64, cfg: &SimConfig) -> SolverOptions {
    SolverOptions {
        tol,
        max_iter: cfg.scheme.max_iter,
        restart: cfg.scheme.restart,
        preconditioner: Preconditioner::Ilu0,
    }
}

pub fn initial_phase(cfg: &SimConfig, space: &Arc<FESpace>) -> Result<FEFunction> {
    let g = &cfg.geometry;
    let eps = cfg.physics.eps;
    match cfg.ic.pattern {
        IcPattern::Bernoulli => ic::bernoulli(space, cfg.ic.a_d, cfg.ic.seed),
        IcPattern::Band => Ok(ic::band(space, g.center, g.radius, cfg.ic.latitude_deg.to_radians(), eps)),
        IcPattern::Caps => ic::caps(
            space,
            g.center,
            g.radius,
            cfg.ic.a_d,
            ic::tilted_axis(cfg.ic.tilt_deg.to_radians()),
            eps,
        ),
    }
}

pub fn build_simulation(cfg: &SimConfig) -> Result<Simulation> {
    let d = discretize(cfg)?;
    let ch = ChSolver::new(
        d.scalar.clone(),
        cfg.physics.clone(),
        d.form.clone(),
        krylov_options(cfg.scheme.ch_tol, cfg),
    )?;
    let ns = match &d.vector {
        Some(vs) => Some(NsSolver::new(
            vs.clone(),
            d.scalar.clone(),
            cfg.physics.clone(),
            d.form.clone(),
            krylov_options(cfg.scheme.ns_tol, cfg),
            cfg.scheme.convection,
        )?),
        None => None,
    };
    let c0 = initial_phase(cfg, &d.scalar)?;
    let mut sim = Simulation::new(ch, ns, cfg.scheme.clone(), c0)?;
    sim.min_domain_triangles = cfg.diagnostics.min_domain_triangles;
    if cfg.electrostatics.enabled {
        sim = sim.with_electrostatics(cfg.electrostatics.params.clone());
    }
    Ok(sim)
}

/// Writes `c`, `mu` and, with flow, `p` and `u` at the surface vertices.
pub fn write_snapshot(sim: &Simulation, path: &Path) -> Result<()> {
    let s = &sim.state;
    let p = s.p.as_ref().map(|p| FEFunction::new(sim.ch.space.clone(), p.clone()));
    let mut fields = vec![PointField::Scalar("c", &s.c), PointField::Scalar("mu", &s.mu)];
    if let (Some(p), Some(u)) = (&p, &s.u) {
        fields.push(PointField::Scalar("p", p));
        fields.push(PointField::Vector("u", u));
    }
    let title = format!("step {} t {:e}", s.step, s.t);
    write_vtk(path, &sim.ch.space.mesh, &fields, &title)
}

/// Output files of a run.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub config: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub vtk: Vec<PathBuf>,
}

/// Writes the resolved configuration, periodic and final VTK snapshots and
/// the diagnostics CSV into `out`.
pub struct Recorder {
    dir: PathBuf,
    vtk_every: usize,
    pub artifacts: Artifacts,
}

impl Recorder {
    pub fn create(dir: &Path, cfg: &SimConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let config = dir.join("config.toml");
        std::fs::write(&config, print_config(cfg))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            vtk_every: cfg.output.vtk_every,
            artifacts: Artifacts {
                config: Some(config),
                ..Default::default()
            },
        })
    }

    pub fn snapshot(&mut self, sim: &Simulation) -> Result<()> {
        let path = self.dir.join(format!("state_{:06}.vtk", sim.state.step));
        write_snapshot(sim, &path)?;
        self.artifacts.vtk.push(path);
        Ok(())
    }

    pub fn on_accept(&mut self, sim: &Simulation) -> Result<()> {
        if self.vtk_every > 0 && sim.state.step % self.vtk_every == 0 {
            self.snapshot(sim)?;
        }
        Ok(())
    }

    pub fn finish(mut self, sim: &Simulation, csv_name: &str) -> Result<Artifacts> {
        if self.artifacts.vtk.last().is_none_or(|p| !p.ends_with(format!("state_{:06}.vtk", sim.state.step))) {
            self.snapshot(sim)?;
        }
        let csv = self.dir.join(csv_name);
        write_csv(&csv, &sim.rows)?;
        self.artifacts.csv = Some(csv);
        Ok(self.artifacts)
    }
}

/// Runs the configured simulation; with `out`, writes its files there.
pub fn run_simulation(cfg: &SimConfig, out: Option<&Path>) -> Result<(Simulation, RunSummary, Artifacts)> {
    let mut sim = build_simulation(cfg)?;
    let Some(dir) = out else {
        let summary = sim.run()?;
        return Ok((sim, summary, Artifacts::default()));
    };
    let mut rec = Recorder::create(dir, cfg)?;
    rec.snapshot(&sim)?;
    let summary = sim.run_with(|s| rec.on_accept(s))?;
    let artifacts = rec.finish(&sim, &cfg.output.csv)?;
    Ok((sim, summary, artifacts))
}

pub fn summary_text(s: &RunSummary) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "steps            {} ({} rejected)", s.steps, s.rejections);
    let _ = writeln!(o, "final time       {:.6e}", s.t);
    let _ = writeln!(
        o,
        "mass             {:.12e} -> {:.12e} (relative change {:.2e})",
        s.mass_initial,
        s.mass_final,
        ((s.mass_final - s.mass_initial) / s.mass_initial).abs()
    );
    let _ = writeln!(
        o,
        "lyapunov         {:.6e} -> {:.6e}, {} increasing steps, largest {:.2e} L0",
        s.lyapunov_initial, s.lyapunov_final, s.lyapunov_increases, s.max_relative_increase
    );
    let _ = writeln!(
        o,
        "scheme energy    {:.6e} -> {:.6e}, {} increasing steps, largest {:.2e} E0",
        s.energy_initial, s.energy_final, s.energy_increases, s.max_relative_energy_increase
    );
    let _ = writeln!(o, "dissipation sum  {:.6e}", s.dissipation_sum);
    let _ = writeln!(o, "wall time        {:.2?}", s.wall_time);
    o
}

/// Laplace-Beltrami manufactured-solution study on the unit sphere.
pub fn lb_study(levels: &[usize], half: f64, center: Vec3, with_condition: bool) -> Result<Vec<LbLevel>> {
    lb::lb_convergence(levels, half, center, with_condition, &SolverOptions::spd(1e-12))
}

pub fn lb_table(levels: &[LbLevel]) -> String {
    let rates = lb::eoc(levels);
    let mut s = String::new();
    let _ = writeln!(s, "{:>4} {:>8} {:>7} {:>12} {:>6} {:>12} {:>6} {:>10}", "n", "h", "dofs", "L2", "eoc", "H1", "eoc", "cond");
    for (k, l) in levels.iter().enumerate() {
        let (r2, r1) = match k {
            0 => ("-".to_string(), "-".to_string()),
            _ => (format!("{:.2}", rates[k - 1].0), format!("{:.2}", rates[k - 1].1)),
        };
        let cond = l.condition.map_or("-".to_string(), |c| format!("{c:.3e}"));
        let _ = writeln!(
            s,
            "{:>4} {:>8.4} {:>7} {:>12.4e} {:>6} {:>12.4e} {:>6} {:>10}",
            l.n_per_axis, l.h, l.n_dofs, l.l2, r2, l.h1, r1, cond
        );
    }
    s
}

/// Steady Stokes solve and its approach by time stepping.
#[derive(Debug, Clone)]
pub struct StokesReport {
    pub n_per_axis: usize,
    pub h: f64,
    pub velocity_dofs: usize,
    /// `‖u_steady‖_{l²}` of the coefficient vector.
    pub steady_norm: f64,
    pub steady_rms_normal: f64,
    /// `(t, ‖uⁿ - u_steady‖ / ‖u_steady‖)` after every step.
    pub history: Vec<(f64, f64)>,
    /// `∫|E_s(u)|²` of the interpolated rotation `e_z × x/|x|`.
    pub rotation_strain_energy: f64,
}

/// Tangential forcing `n × ∇_Γ(xy) + ∇_Γ z` on the unit sphere.
pub fn stokes_forcing(x: &Vec3) -> Vec3 {
    let n = x.normalize();
    let p = |v: Vec3| v - n * n.dot(&v);
    n.cross(&p(Vec3::new(x.y, x.x, 0.0))) + p(Vec3::z())
}

fn uniform_fluid() -> MaterialParams {
    MaterialParams {
        rho1: 1.0,
        rho2: 1.0,
        eta1: 1.0,
        eta2: 1.0,
        ..MaterialParams::default()
    }
}

/// Momentum solver for a uniform fluid on the unit sphere in `[-half, half]³`.
pub fn uniform_stokes_solver(n_per_axis: usize, half: f64, convection: bool) -> Result<NsSolver> {
    let bg = BackgroundMesh::build(BoundingBox::cube(half), n_per_axis)?;
    let mesh = Arc::new(ActiveMesh::build(bg, LevelSetSurface::unit_sphere())?);
    let ps = Arc::new(FESpace::scalar(mesh.clone(), 1)?);
    let vs = Arc::new(FESpace::vector(mesh.clone(), 2)?);
    let mat = uniform_fluid();
    let form = FormParams::new(mesh.h, mat.eps, mat.sigma_gamma, 1.0);
    NsSolver::new(vs, ps, mat, form, SolverOptions::gmres(1e-10), convection)
}

/// Solves the steady problem for [`stokes_forcing`], then time-steps the
/// momentum equation at rest with the same load for `steps` steps of `dt`.
pub fn stokes_demo(n_per_axis: usize, half: f64, steps: usize, dt: f64) -> Result<StokesReport> {
    let ns = uniform_stokes_solver(n_per_axis, half, false)?;
    let mesh = ns.vspace.mesh.clone();
    let force: Vec<Vec3> = mesh.surface_qp.iter().map(|q| stokes_forcing(&q.x)).collect();
    let (u_ss, _, _) = ns.steady_stokes(&force, 1.0)?;
    let load = ns.nonrotational_load(&force)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let steady_norm = norm(&u_ss.coefficients);
    let c = ns.pspace.constant(0.5);
    let mu = ns.pspace.zero();
    let mut u = ns.vspace.zero();
    let mut p: Option<Vec<f64>> = None;
    let mut history = Vec::with_capacity(steps);
    for k in 1..=steps {
        let r = ns.step(&NsInput {
            u_prev: &u,
            p_prev: p.as_deref(),
            c_prev: &c,
            c_next: &c,
            mu_next: &mu,
            force: None,
            load: Some(&load),
            dt,
        })?;
        u = r.u;
        p = Some(r.p);
        let diff: Vec<f64> = u.coefficients.iter().zip(&u_ss.coefficients).map(|(a, b)| a - b).collect();
        history.push((k as f64 * dt, norm(&diff) / steady_norm));
    }
    let rot = ns.vspace.interpolate_vector(|x| Vec3::z().cross(&x.normalize()));
    Ok(StokesReport {
        n_per_axis,
        h: mesh.h,
        velocity_dofs: ns.vspace.n_dofs(),
        steady_norm,
        steady_rms_normal: rms_normal_velocity(&u_ss),
        history,
        rotation_strain_energy: strain_energy(&rot),
    })
}

/// Outcome of an electrostatic reorientation run.
#[derive(Debug, Clone)]
pub struct ForceDemoReport {
    pub preset: Option<String>,
    pub a_d: f64,
    pub partition_fraction: f64,
    /// First time the centroid of `{c <= ½}` lies below the center.
    pub reorientation_time: Option<f64>,
    /// `(t, centroid height)` after every accepted step.
    pub heights: Vec<(f64, f64)>,
    pub summary: RunSummary,
}

/// Desk-scale settings for the reorientation experiment with the named preset.
pub fn force_demo_config(preset_name: &str) -> Result<SimConfig> {
    let p = preset(preset_name).ok_or_else(|| Error::Config(vec![format!("preset: unknown preset \"{preset_name}\"")]))?;
    let mut cfg = SimConfig::default();
    cfg.preset = Some(p.name.to_string());
    cfg.geometry.n_per_axis = 12;
    cfg.ic.pattern = IcPattern::Caps;
    cfg.ic.a_d = p.a_d;
    cfg.electrostatics.enabled = true;
    cfg.electrostatics.params.partition_fraction = p.partition_fraction.unwrap_or(0.5);
    cfg.electrostatics.params.force_scale = FORCE_DEMO_SCALE;
    cfg.scheme.t_end = 40.0;
    cfg.scheme.dt = 0.05;
    cfg.scheme.dt_max = 0.2;
    Ok(cfg)
}

/// Brings the plane-field force density, about `10⁷ N/m²`, to order one.
pub const FORCE_DEMO_SCALE: f64 = 1e-8;

/// Runs until the low phase faces the plane or `t_end`.
pub fn force_demo(cfg: &SimConfig, out: Option<&Path>) -> Result<ForceDemoReport> {
    if !cfg.electrostatics.enabled || !cfg.flow {
        return Err(Error::Config(vec![
            "force-demo needs electrostatics.enabled = true and scheme.flow = true".into(),
        ]));
    }
    let threshold = cfg.electrostatics.params.phase_threshold;
    let mut sim = build_simulation(cfg)?;
    let mut rec = match out {
        Some(dir) => {
            let mut r = Recorder::create(dir, cfg)?;
            r.snapshot(&sim)?;
            Some(r)
        }
        None => None,
    };
    let height = |s: &Simulation| low_phase_centroid_height(&s.state.c, threshold);
    let mut heights = Vec::new();
    if let Some(z) = height(&sim) {
        heights.push((0.0, z));
    }
    let mut reorientation_time = None;
    while !sim.finished() {
        if !sim.advance()? {
            continue;
        }
        if let Some(r) = rec.as_mut() {
            r.on_accept(&sim)?;
        }
        if let Some(z) = height(&sim) {
            heights.push((sim.state.t, z));
            if z < 0.0 {
                reorientation_time = Some(sim.state.t);
                break;
            }
        }
    }
    if let Some(r) = rec {
        r.finish(&sim, &cfg.output.csv)?;
    }
    Ok(ForceDemoReport {
        preset: cfg.preset.clone(),
        a_d: cfg.ic.a_d,
        partition_fraction: cfg.electrostatics.params.partition_fraction,
        reorientation_time,
        heights,
        summary: sim.summary(),
    })
}
