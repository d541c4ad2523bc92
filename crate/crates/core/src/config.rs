//! Run configuration: flat `key = value` text plus command-line overrides.
//!
//! Lines starting with `#` or `;` are comments and `[section]` headers are
//! ignored, so INI files work unchanged. Numbers may be written as fractions
//! (`h = 1/50`); `inf` is accepted where an infinite Robin weight makes sense.

use std::path::{Path, PathBuf};

use crate::band::BandMode;
use crate::error::{Error, Result};
use crate::geometry::{load_obj, Surface};
use crate::manufactured::Rhs;
use crate::solve::{Method, Mode, SolverConfig};

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub surface: String,
    pub radius: f64,
    pub torus_major: f64,
    pub torus_minor: f64,
    pub arc_min: f64,
    pub arc_max: f64,
    pub mesh_path: Option<PathBuf>,
    pub mesh_height: Option<f64>,
    pub curvature_bound: Option<f64>,
    pub h: f64,
    pub p: Option<usize>,
    pub band: BandMode,
    pub rhs: Rhs,
    pub solver: SolverConfig,
    max_iter_set: bool,
    alpha_cross_set: bool,
    pub output: PathBuf,
    /// Grid spacings for sweeps; `None` means the arc study's defaults, or
    /// the single `h` for the iteration-count sweeps.
    pub sweep_h: Option<Vec<f64>>,
    /// `f64::INFINITY` marks the RAS limit column.
    pub sweep_alpha: Vec<f64>,
    pub sweep_overlap: Vec<usize>,
    pub sweep_nsub: Vec<usize>,
    /// α^× = cross_factor · α in sweeps.
    pub cross_factor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            surface: "sphere".into(),
            radius: 1.0,
            torus_major: 2.0 / 3.0,
            torus_minor: 1.0 / 3.0,
            arc_min: 0.0,
            arc_max: 2.0,
            mesh_path: None,
            mesh_height: None,
            curvature_bound: None,
            h: 1.0 / 25.0,
            p: None,
            band: BandMode::Tube,
            rhs: Rhs::Manufactured { k: 2.0 },
            solver: SolverConfig::default(),
            max_iter_set: false,
            alpha_cross_set: false,
            output: PathBuf::from("out"),
            sweep_h: None,
            sweep_alpha: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0, 8.0, 16.0, f64::INFINITY],
            sweep_overlap: vec![2, 4, 8],
            sweep_nsub: vec![4, 8, 16],
            cross_factor: 1.0,
        }
    }
}

pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("'{s}' is not a number"));
    if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    if let Some((a, b)) = s.split_once('/') {
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        return Ok(a / b);
    }
    s.parse().map_err(|_| bad())
}

fn parse_finite(key: &str, s: &str) -> Result<f64> {
    let v = parse_number(s)?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{key} must be finite, got '{s}'")));
    }
    Ok(v)
}

fn parse_usize(key: &str, s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key} must be a non-negative integer, got '{s}'")))
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').filter(|t| !t.trim().is_empty()).map(|t| f(t.trim())).collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') || line.starts_with('[') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected 'key = value'", origin.display(), n + 1))
            })?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("{}:{}: {e}", origin.display(), n + 1)))?;
        }
        Ok(())
    }

    /// Apply one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let key = key.trim().replace('-', "_");
        match key.as_str() {
            "surface" => self.surface = v.to_ascii_lowercase(),
            "radius" => self.radius = parse_finite(&key, v)?,
            "torus_major" => self.torus_major = parse_finite(&key, v)?,
            "torus_minor" => self.torus_minor = parse_finite(&key, v)?,
            "arc_min" => self.arc_min = parse_finite(&key, v)?,
            "arc_max" => self.arc_max = parse_finite(&key, v)?,
            "mesh" | "mesh_path" => self.mesh_path = Some(PathBuf::from(v)),
            "mesh_height" => self.mesh_height = Some(parse_finite(&key, v)?),
            "curvature_bound" => self.curvature_bound = Some(parse_finite(&key, v)?),
            "h" => self.h = parse_finite(&key, v)?,
            "p" => self.p = Some(parse_usize(&key, v)?),
            "band" => self.band = v.parse()?,
            "c" => self.solver.c = parse_finite(&key, v)?,
            "rhs" => self.rhs = v.parse()?,
            "method" => {
                self.solver.method = match v.to_ascii_lowercase().as_str() {
                    "ras" => Method::Ras,
                    "oras" => Method::Oras,
                    _ => return Err(Error::Config(format!("method must be ras or oras, got '{v}'"))),
                }
            }
            "mode" => {
                self.solver.mode = match v.to_ascii_lowercase().as_str() {
                    "stationary" | "solver" => Mode::Stationary,
                    "gmres" | "preconditioner" => Mode::Gmres,
                    _ => return Err(Error::Config(format!("mode must be stationary or gmres, got '{v}'"))),
                }
            }
            "rel_tol" | "tol" => self.solver.rel_tol = parse_finite(&key, v)?,
            "max_iter" => {
                self.solver.max_iter = parse_usize(&key, v)?;
                self.max_iter_set = true;
            }
            "restart" | "gmres_restart" => {
                self.solver.gmres_restart = match v {
                    "none" | "0" | "" => None,
                    _ => Some(parse_usize(&key, v)?),
                }
            }
            "n_sub" | "subdomains" => self.solver.n_sub = parse_usize(&key, v)?,
            "n_overlap" | "overlap" => self.solver.n_overlap = parse_usize(&key, v)?,
            "alpha" => self.solver.alpha = parse_finite(&key, v)?,
            "alpha_cross" => {
                self.solver.alpha_cross = parse_finite(&key, v)?;
                self.alpha_cross_set = true;
            }
            "seed" => {
                self.solver.seed = v
                    .parse()
                    .map_err(|_| Error::Config(format!("seed must be an integer, got '{v}'")))?
            }
            "workers" => self.solver.workers = parse_usize(&key, v)?,
            "output" | "output_dir" => self.output = PathBuf::from(v),
            "sweep_h" => self.sweep_h = Some(parse_list(v, |t| parse_finite("sweep_h", t))?),
            "sweep_alpha" => self.sweep_alpha = parse_list(v, parse_number)?,
            "sweep_overlap" => self.sweep_overlap = parse_list(v, |t| parse_usize("sweep_overlap", t))?,
            "sweep_nsub" => self.sweep_nsub = parse_list(v, |t| parse_usize("sweep_nsub", t))?,
            "cross_factor" => self.cross_factor = parse_finite(&key, v)?,
            _ => return Err(Error::Config(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Fill dependent defaults and check every range before any compute.
    pub fn finalize(&mut self) -> Result<()> {
        if !self.alpha_cross_set {
            self.solver.alpha_cross = self.solver.alpha;
        }
        if !self.max_iter_set {
            self.solver.max_iter = match self.solver.mode {
                Mode::Stationary => 5000,
                Mode::Gmres => 2000,
            };
        }
        if !(self.h > 0.0) {
            return Err(Error::Config(format!("h must be positive, got {}", self.h)));
        }
        if self.p == Some(0) {
            return Err(Error::Config("interpolation degree p must be at least 1".into()));
        }
        match self.surface.as_str() {
            "circle" | "arc" | "sphere" | "torus" => {}
            "mesh" if self.mesh_path.is_none() => {
                return Err(Error::Config("surface = mesh requires mesh_path".into()))
            }
            "mesh" => {}
            s => {
                return Err(Error::Config(format!(
                    "unknown surface '{s}' (circle, arc, sphere, torus, mesh)"
                )))
            }
        }
        if self.sweep_alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Config("sweep_alpha values must be positive".into()));
        }
        if self.sweep_h.iter().flatten().any(|h| !(*h > 0.0)) {
            return Err(Error::Config("sweep_h values must be positive".into()));
        }
        if !(self.cross_factor >= 1.0) {
            return Err(Error::Config(format!("cross_factor must be at least 1, got {}", self.cross_factor)));
        }
        self.solver.validate()
    }

    pub fn dim(&self) -> usize {
        match self.surface.as_str() {
            "circle" | "arc" => 2,
            _ => 3,
        }
    }

    /// Degree default: bicubic in the plane, triquadratic in space.
    pub fn degree(&self) -> usize {
        self.p.unwrap_or(if self.dim() == 2 { 3 } else { 2 })
    }

    pub fn build_surface(&self) -> Result<Surface> {
        match self.surface.as_str() {
            "circle" => Surface::circle(self.radius),
            "arc" => Surface::arc(self.radius, self.arc_min, self.arc_max),
            "sphere" => Surface::sphere(self.radius),
            "torus" => Surface::torus(self.torus_major, self.torus_minor),
            "mesh" => {
                let path = self
                    .mesh_path
                    .as_ref()
                    .ok_or_else(|| Error::Config("surface = mesh requires mesh_path".into()))?;
                let mut mesh = load_obj(path, self.mesh_height)?;
                if mesh.skipped_degenerate > 0 {
                    log::warn!("{}: skipped {} degenerate triangles", path.display(), mesh.skipped_degenerate);
                }
                if let Some(k) = self.curvature_bound {
                    mesh.curvature_bound = Some(k);
                }
                Ok(Surface::mesh(mesh))
            }
            s => Err(Error::Config(format!("unknown surface '{s}'"))),
        }
    }
}
