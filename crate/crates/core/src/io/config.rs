//! Run configuration in a sectioned `key = value` format (a TOML subset).
//!
//! ```text
//! preset = "pat3"            # optional, see PRESETS
//!
//! [geometry]
//! n_per_axis = 20            # required
//! radius = 1.0
//! center = [0.0, 0.0, 0.0]
//! bbox_half = 1.5
//!
//! [scheme]
//! t_end = 1.0                # required
//!
//! [ic]
//! pattern = "bernoulli"      # required: bernoulli | band | caps
//! a_d = 0.29                 # required unless a preset supplies it
//! ```
//!
//! `print_config(&SimConfig::default())` lists every key with its default.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::models::{LyapunovMonitor, MonitoredEnergy, SchemeParams};
use crate::physics::{ElectrostaticParams, MaterialParams, MobilityKind};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct GeometryConfig {
    pub radius: f64,
    pub center: Vec3,
    /// The background box is `[-bbox_half, bbox_half]³`.
    pub bbox_half: f64,
    pub n_per_axis: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FemConfig {
    pub scalar_degree: usize,
    pub velocity_degree: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElectrostaticsConfig {
    pub enabled: bool,
    /// Height of the charged plane; informational, the field is uniform.
    pub plane_height: f64,
    pub params: ElectrostaticParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcPattern {
    Bernoulli,
    Band,
    Caps,
}

impl IcPattern {
    pub fn name(self) -> &'static str {
        match self {
            IcPattern::Bernoulli => "bernoulli",
            IcPattern::Band => "band",
            IcPattern::Caps => "caps",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcConfig {
    pub pattern: IcPattern,
    pub a_d: f64,
    pub seed: u64,
    /// Angle between the `caps` axis and `+z`, in degrees.
    pub tilt_deg: f64,
    /// Latitude of the `band` interface, in degrees.
    pub latitude_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Write a VTK snapshot every this many accepted steps; 0 disables.
    pub vtk_every: usize,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Minority-phase components with fewer triangles are not counted.
    pub min_domain_triangles: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub preset: Option<String>,
    pub geometry: GeometryConfig,
    pub fem: FemConfig,
    pub physics: MaterialParams,
    pub electrostatics: ElectrostaticsConfig,
    pub scheme: SchemeParams,
    /// Solve the momentum equations; `false` gives a pure phase-field run.
    pub flow: bool,
    pub ic: IcConfig,
    pub diagnostics: DiagnosticsConfig,
    pub output: OutputConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            preset: None,
            geometry: GeometryConfig {
                radius: 1.0,
                center: Vec3::zeros(),
                bbox_half: 1.5,
                n_per_axis: 20,
            },
            fem: FemConfig {
                scalar_degree: 1,
                velocity_degree: 2,
            },
            physics: MaterialParams::default(),
            electrostatics: ElectrostaticsConfig {
                enabled: false,
                plane_height: -1.5,
                params: ElectrostaticParams::default(),
            },
            scheme: SchemeParams::default(),
            flow: true,
            ic: IcConfig {
                pattern: IcPattern::Bernoulli,
                a_d: 0.29,
                seed: 0,
                tilt_deg: 60.0,
                latitude_deg: 0.0,
            },
            diagnostics: DiagnosticsConfig { min_domain_triangles: 3 },
            output: OutputConfig {
                directory: PathBuf::from("out"),
                vtk_every: 0,
                csv: "diagnostics.csv".into(),
            },
        }
    }
}

/// Named compositions: `a_d` is the area fraction of the `c ≈ 1` phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub a_d: f64,
    /// Share of the vesicle charge carried by the `c ≈ 0` phase.
    pub partition_fraction: Option<f64>,
    pub description: &'static str,
}

pub const PRESETS: [Preset; 5] = [
    Preset {
        name: "pat1",
        a_d: 0.108,
        partition_fraction: Some(0.9757),
        description: "DOPC:DPPC:Chol 59.4:20:20, 15 C",
    },
    Preset {
        name: "pat2",
        a_d: 0.3457,
        partition_fraction: Some(0.9019),
        description: "DOPC:DPPC:Chol 41.9:42.5:15, 17.5 C",
    },
    Preset {
        name: "pat3",
        a_d: 0.7037,
        partition_fraction: Some(0.6715),
        description: "DOPC:DPPC:Chol 24.4:50:25, 15 C",
    },
    Preset {
        name: "mix-1-1-15",
        a_d: 0.29,
        partition_fraction: None,
        description: "DOPC:DPPC:Chol 1:1:15%, 25 C",
    },
    Preset {
        name: "mix-1-2-25",
        a_d: 0.71,
        partition_fraction: None,
        description: "DOPC:DPPC:Chol 1:2:25%",
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name.eq_ignore_ascii_case(name))
}

pub const REQUIRED_KEYS: [&str; 4] = ["geometry.n_per_axis", "scheme.t_end", "ic.pattern", "ic.a_d"];

struct Reader {
    table: Table,
    errors: Vec<String>,
    known: BTreeSet<String>,
}

impl Reader {
    fn lookup(&mut self, path: &str) -> Option<Value> {
        self.known.insert(path.to_string());
        let (sec, key) = path.split_once('.').unwrap_or(("", path));
        if sec.is_empty() {
            return self.table.get(key).cloned();
        }
        match self.table.get(sec) {
            Some(Value::Table(t)) => t.get(key).cloned(),
            _ => None,
        }
    }

    fn type_error(&mut self, path: &str, want: &str, got: &Value) {
        self.errors.push(format!("{path}: expected {want}, got {}", got.type_str()));
    }

    fn missing(&mut self, path: &str) {
        self.errors.push(format!("{path}: required key is missing"));
    }

    fn f64_opt(&mut self, path: &str) -> Option<f64> {
        match self.lookup(path)? {
            Value::Float(v) => Some(v),
            Value::Integer(v) => Some(v as f64),
            other => {
                self.type_error(path, "a number", &other);
                None
            }
        }
    }

    fn f64(&mut self, path: &str, default: f64) -> f64 {
        self.f64_opt(path).unwrap_or(default)
    }

    fn uint_opt(&mut self, path: &str) -> Option<u64> {
        match self.lookup(path)? {
            Value::Integer(v) if v >= 0 => Some(v as u64),
            Value::Integer(v) => {
                self.errors.push(format!("{path}: must be non-negative, got {v}"));
                None
            }
            other => {
                self.type_error(path, "a non-negative integer", &other);
                None
            }
        }
    }

    fn usize(&mut self, path: &str, default: usize) -> usize {
        self.uint_opt(path).map_or(default, |v| v as usize)
    }

    fn bool(&mut self, path: &str, default: bool) -> bool {
        match self.lookup(path) {
            None => default,
            Some(Value::Boolean(b)) => b,
            Some(other) => {
                self.type_error(path, "true or false", &other);
                default
            }
        }
    }

    fn string_opt(&mut self, path: &str) -> Option<String> {
        match self.lookup(path)? {
            Value::String(s) => Some(s),
            other => {
                self.type_error(path, "a string", &other);
                None
            }
        }
    }

    fn choice<T: Copy>(&mut self, path: &str, default: T, options: &[(&str, T)]) -> T {
        let Some(s) = self.string_opt(path) else {
            return default;
        };
        match options.iter().find(|(n, _)| n.eq_ignore_ascii_case(&s)) {
            Some((_, v)) => *v,
            None => {
                let names: Vec<&str> = options.iter().map(|o| o.0).collect();
                self.errors.push(format!("{path}: expected one of {}, got \"{s}\"", names.join(", ")));
                default
            }
        }
    }

    fn vec3(&mut self, path: &str, default: Vec3) -> Vec3 {
        match self.lookup(path) {
            None => default,
            Some(Value::Array(a)) if a.len() == 3 => {
                let mut out = default;
                for (k, v) in a.iter().enumerate() {
                    match v {
                        Value::Float(f) => out[k] = *f,
                        Value::Integer(i) => out[k] = *i as f64,
                        other => {
                            self.type_error(path, "an array of three numbers", other);
                            return default;
                        }
                    }
                }
                out
            }
            Some(other) => {
                self.type_error(path, "an array of three numbers", &other);
                default
            }
        }
    }

    fn unknown_keys(&mut self) {
        let mut found = Vec::new();
        for (k, v) in &self.table {
            match v {
                Value::Table(t) => {
                    let known_section = self.known.iter().any(|p| p.split_once('.').is_some_and(|(s, _)| s == k));
                    if !known_section {
                        found.push(format!("[{k}]: unknown section"));
                        continue;
                    }
                    for key in t.keys() {
                        let path = format!("{k}.{key}");
                        if !self.known.contains(&path) {
                            found.push(format!("{path}: unknown key"));
                        }
                    }
                }
                _ if self.known.contains(k) => {}
                _ => found.push(format!("{k}: unknown key")),
            }
        }
        self.errors.extend(found);
    }
}

/// Parses and validates a configuration, reporting every problem at once.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![format!("syntax error: {}", e.message())]))?;
    let mut r = Reader {
        table,
        errors: Vec::new(),
        known: BTreeSet::new(),
    };
    let d = SimConfig::default();

    let preset_name = r.string_opt("preset");
    let preset = match &preset_name {
        Some(n) => match preset(n) {
            Some(p) => Some(*p),
            None => {
                let names: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
                r.errors.push(format!("preset: unknown preset \"{n}\", expected one of {}", names.join(", ")));
                None
            }
        },
        None => None,
    };

    let n_per_axis = r.uint_opt("geometry.n_per_axis").map(|v| v as usize);
    if n_per_axis.is_none() && !r.errors.iter().any(|e| e.starts_with("geometry.n_per_axis")) {
        r.missing("geometry.n_per_axis");
    }
    let geometry = GeometryConfig {
        radius: r.f64("geometry.radius", d.geometry.radius),
        center: r.vec3("geometry.center", d.geometry.center),
        bbox_half: r.f64("geometry.bbox_half", d.geometry.bbox_half),
        n_per_axis: n_per_axis.unwrap_or(d.geometry.n_per_axis),
    };
    let fem = FemConfig {
        scalar_degree: r.usize("fem.scalar_degree", d.fem.scalar_degree),
        velocity_degree: r.usize("fem.velocity_degree", d.fem.velocity_degree),
    };

    let dm = &d.physics;
    let physics = MaterialParams {
        rho1: r.f64("physics.rho1", dm.rho1),
        rho2: r.f64("physics.rho2", dm.rho2),
        eta1: r.f64("physics.eta1", dm.eta1),
        eta2: r.f64("physics.eta2", dm.eta2),
        sigma_gamma: r.f64("physics.sigma_gamma", dm.sigma_gamma),
        eps: r.f64("physics.eps", dm.eps),
        diffusivity: r.f64("physics.diffusivity", dm.diffusivity),
        mobility: r.choice(
            "physics.mobility",
            dm.mobility,
            &[("degenerate", MobilityKind::Degenerate), ("constant", MobilityKind::Constant)],
        ),
        alpha: r.f64("physics.alpha", dm.alpha),
    };

    let de = &d.electrostatics.params;
    let pf_default = preset.and_then(|p| p.partition_fraction).unwrap_or(de.partition_fraction);
    let electrostatics = ElectrostaticsConfig {
        enabled: r.bool("electrostatics.enabled", d.electrostatics.enabled),
        plane_height: r.f64("electrostatics.plane_height", d.electrostatics.plane_height),
        params: ElectrostaticParams {
            zeta_guv: r.f64("electrostatics.zeta_guv", de.zeta_guv),
            zeta_suv: r.f64("electrostatics.zeta_suv", de.zeta_suv),
            kappa: r.f64("electrostatics.kappa", de.kappa),
            x_slip: r.f64("electrostatics.x_slip", de.x_slip),
            eps_r: r.f64("electrostatics.eps_r", de.eps_r),
            eps0: r.f64("electrostatics.eps0", de.eps0),
            partition_fraction: r.f64("electrostatics.partition_fraction", pf_default),
            field_includes_eps_r: r.bool("electrostatics.field_includes_eps_r", de.field_includes_eps_r),
            phase_threshold: r.f64("electrostatics.phase_threshold", de.phase_threshold),
            force_scale: r.f64("electrostatics.force_scale", de.force_scale),
        },
    };

    let ds = &d.scheme;
    let t_end = r.f64_opt("scheme.t_end");
    if t_end.is_none() && !r.errors.iter().any(|e| e.starts_with("scheme.t_end")) {
        r.missing("scheme.t_end");
    }
    let scheme = SchemeParams {
        dt: r.f64("scheme.dt", ds.dt),
        dt_min: r.f64("scheme.dt_min", ds.dt_min),
        dt_max: r.f64("scheme.dt_max", ds.dt_max),
        t_end: t_end.unwrap_or(ds.t_end),
        max_steps: r.usize("scheme.max_steps", ds.max_steps),
        adaptive: r.bool("scheme.adaptive", ds.adaptive),
        gamma_c: r.f64("scheme.gamma_c", ds.gamma_c),
        ch_tol: r.f64("scheme.ch_tol", ds.ch_tol),
        ns_tol: r.f64("scheme.ns_tol", ds.ns_tol),
        max_iter: r.usize("scheme.max_iter", ds.max_iter),
        restart: r.usize("scheme.restart", ds.restart),
        monitor: r.choice(
            "scheme.monitor",
            ds.monitor,
            &[("enforce", LyapunovMonitor::Enforce), ("record", LyapunovMonitor::Record)],
        ),
        monitored: r.choice(
            "scheme.monitored",
            ds.monitored,
            &[("scheme", MonitoredEnergy::Scheme), ("lyapunov", MonitoredEnergy::Lyapunov)],
        ),
        monitor_tol: r.f64("scheme.monitor_tol", ds.monitor_tol),
        convection: r.bool("scheme.convection", ds.convection),
        diagnostics_every: r.usize("scheme.diagnostics_every", ds.diagnostics_every),
    };
    let flow = r.bool("scheme.flow", d.flow);

    let pattern = if r.lookup("ic.pattern").is_none() {
        r.missing("ic.pattern");
        d.ic.pattern
    } else {
        r.choice(
            "ic.pattern",
            d.ic.pattern,
            &[("bernoulli", IcPattern::Bernoulli), ("band", IcPattern::Band), ("caps", IcPattern::Caps)],
        )
    };
    let a_d = match (r.f64_opt("ic.a_d"), preset) {
        (Some(v), _) => v,
        (None, Some(p)) => p.a_d,
        (None, None) => {
            if !r.errors.iter().any(|e| e.starts_with("ic.a_d")) {
                r.missing("ic.a_d");
            }
            d.ic.a_d
        }
    };
    let ic = IcConfig {
        pattern,
        a_d,
        seed: r.uint_opt("ic.seed").unwrap_or(d.ic.seed),
        tilt_deg: r.f64("ic.tilt_deg", d.ic.tilt_deg),
        latitude_deg: r.f64("ic.latitude_deg", d.ic.latitude_deg),
    };
    let diagnostics = DiagnosticsConfig {
        min_domain_triangles: r.usize("diagnostics.min_domain_triangles", d.diagnostics.min_domain_triangles),
    };
    let output = OutputConfig {
        directory: r.string_opt("output.directory").map_or(d.output.directory.clone(), PathBuf::from),
        vtk_every: r.usize("output.vtk_every", d.output.vtk_every),
        csv: r.string_opt("output.csv").unwrap_or(d.output.csv.clone()),
    };
    r.unknown_keys();

    let cfg = SimConfig {
        preset: preset.map(|p| p.name.to_string()),
        geometry,
        fem,
        physics,
        electrostatics,
        scheme,
        flow,
        ic,
        diagnostics,
        output,
    };
    let mut errors = r.errors;
    errors.extend(cfg.validate());
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::Config(errors))
    }
}

impl SimConfig {
    /// Range checks on all values; empty when valid.
    pub fn validate(&self) -> Vec<String> {
        let mut e = Vec::new();
        let g = &self.geometry;
        if !(g.radius > 0.0 && g.radius.is_finite()) {
            e.push(format!("geometry.radius: must be positive, got {}", g.radius));
        }
        if !(g.bbox_half > 0.0 && g.bbox_half.is_finite()) {
            e.push(format!("geometry.bbox_half: must be positive, got {}", g.bbox_half));
        } else if g.center.iter().any(|c| c.abs() + g.radius >= g.bbox_half) {
            e.push(format!(
                "geometry.bbox_half: the sphere of radius {} at {:?} must lie strictly inside [-{h}, {h}]³",
                g.radius,
                g.center.as_slice(),
                h = g.bbox_half
            ));
        }
        if g.n_per_axis < 2 {
            e.push(format!("geometry.n_per_axis: must be at least 2, got {}", g.n_per_axis));
        }
        if self.fem.scalar_degree != 1 {
            e.push(format!("fem.scalar_degree: only 1 is supported, got {}", self.fem.scalar_degree));
        }
        if self.fem.velocity_degree != self.fem.scalar_degree + 1 {
            e.push(format!(
                "fem.velocity_degree: must equal scalar_degree + 1 (Taylor-Hood), got {}",
                self.fem.velocity_degree
            ));
        }
        e.extend(self.physics.validate());
        e.extend(self.electrostatics.params.validate());
        if !self.electrostatics.plane_height.is_finite() {
            e.push("electrostatics.plane_height: must be finite".into());
        }
        e.extend(self.scheme.validate());
        if !(0.0..=1.0).contains(&self.ic.a_d) {
            e.push(format!("ic.a_d: must lie in [0, 1], got {}", self.ic.a_d));
        }
        for (k, v) in [("ic.tilt_deg", self.ic.tilt_deg), ("ic.latitude_deg", self.ic.latitude_deg)] {
            if !v.is_finite() {
                e.push(format!("{k}: must be finite"));
            }
        }
        if self.output.csv.is_empty() {
            e.push("output.csv: must be a file name".into());
        }
        e
    }

    pub fn mesh_size(&self) -> f64 {
        2.0 * self.geometry.bbox_half / self.geometry.n_per_axis as f64
    }
}

fn quote(s: &str) -> String {
    Value::String(s.to_string()).to_string()
}

/// Every key with its value, in the format read by [`parse_config`].
pub fn print_config(c: &SimConfig) -> String {
    let mut s = String::new();
    let f = |v: f64| format!("{v:?}");
    if let Some(p) = &c.preset {
        let _ = writeln!(s, "preset = {}\n", quote(p));
    }
    let g = &c.geometry;
    let _ = writeln!(s, "[geometry]");
    let _ = writeln!(s, "n_per_axis = {}", g.n_per_axis);
    let _ = writeln!(s, "radius = {}", f(g.radius));
    let _ = writeln!(s, "center = [{}, {}, {}]", f(g.center.x), f(g.center.y), f(g.center.z));
    let _ = writeln!(s, "bbox_half = {}", f(g.bbox_half));
    let _ = writeln!(s, "\n[fem]");
    let _ = writeln!(s, "scalar_degree = {}", c.fem.scalar_degree);
    let _ = writeln!(s, "velocity_degree = {}", c.fem.velocity_degree);
    let m = &c.physics;
    let _ = writeln!(s, "\n[physics]");
    for (k, v) in [
        ("rho1", m.rho1),
        ("rho2", m.rho2),
        ("eta1", m.eta1),
        ("eta2", m.eta2),
        ("sigma_gamma", m.sigma_gamma),
        ("eps", m.eps),
        ("diffusivity", m.diffusivity),
        ("alpha", m.alpha),
    ] {
        let _ = writeln!(s, "{k} = {}", f(v));
    }
    let mob = match m.mobility {
        MobilityKind::Degenerate => "degenerate",
        MobilityKind::Constant => "constant",
    };
    let _ = writeln!(s, "mobility = {}", quote(mob));
    let e = &c.electrostatics;
    let p = &e.params;
    let _ = writeln!(s, "\n[electrostatics]");
    let _ = writeln!(s, "enabled = {}", e.enabled);
    let _ = writeln!(s, "plane_height = {}", f(e.plane_height));
    for (k, v) in [
        ("zeta_guv", p.zeta_guv),
        ("zeta_suv", p.zeta_suv),
        ("kappa", p.kappa),
        ("x_slip", p.x_slip),
        ("eps_r", p.eps_r),
        ("eps0", p.eps0),
        ("partition_fraction", p.partition_fraction),
        ("phase_threshold", p.phase_threshold),
        ("force_scale", p.force_scale),
    ] {
        let _ = writeln!(s, "{k} = {}", f(v));
    }
    let _ = writeln!(s, "field_includes_eps_r = {}", p.field_includes_eps_r);
    let sc = &c.scheme;
    let _ = writeln!(s, "\n[scheme]");
    let _ = writeln!(s, "flow = {}", c.flow);
    for (k, v) in [
        ("t_end", sc.t_end),
        ("dt", sc.dt),
        ("dt_min", sc.dt_min),
        ("dt_max", sc.dt_max),
        ("gamma_c", sc.gamma_c),
        ("ch_tol", sc.ch_tol),
        ("ns_tol", sc.ns_tol),
        ("monitor_tol", sc.monitor_tol),
    ] {
        let _ = writeln!(s, "{k} = {}", f(v));
    }
    for (k, v) in [
        ("max_steps", sc.max_steps),
        ("max_iter", sc.max_iter),
        ("restart", sc.restart),
        ("diagnostics_every", sc.diagnostics_every),
    ] {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "adaptive = {}", sc.adaptive);
    let _ = writeln!(s, "convection = {}", sc.convection);
    let mon = match sc.monitor {
        LyapunovMonitor::Enforce => "enforce",
        LyapunovMonitor::Record => "record",
    };
    let watched = match sc.monitored {
        MonitoredEnergy::Scheme => "scheme",
        MonitoredEnergy::Lyapunov => "lyapunov",
    };
    let _ = writeln!(s, "monitor = {}", quote(mon));
    let _ = writeln!(s, "monitored = {}", quote(watched));
    let ic = &c.ic;
    let _ = writeln!(s, "\n[ic]");
    let _ = writeln!(s, "pattern = {}", quote(ic.pattern.name()));
    let _ = writeln!(s, "a_d = {}", f(ic.a_d));
    let _ = writeln!(s, "seed = {}", ic.seed);
    let _ = writeln!(s, "tilt_deg = {}", f(ic.tilt_deg));
    let _ = writeln!(s, "latitude_deg = {}", f(ic.latitude_deg));
    let _ = writeln!(s, "\n[diagnostics]");
    let _ = writeln!(s, "min_domain_triangles = {}", c.diagnostics.min_domain_triangles);
    let o = &c.output;
    let _ = writeln!(s, "\n[output]");
    let _ = writeln!(s, "directory = {}", quote(&o.directory.to_string_lossy()));
    let _ = writeln!(s, "vtk_every = {}", o.vtk_every);
    let _ = writeln!(s, "csv = {}", quote(&o.csv));
    s
}
