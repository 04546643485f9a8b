//! Run configuration: flat `key = value` pairs grouped in `[section]`s.
//!
//! ```text
//! [mesh]        nx, ny, lx, ly
//! [model]       kind = euler2d | swe-linear | swe-nonlinear
//!               integrator = poisson | midpoint | semi-implicit
//!               stabilization = none | apvm | supg-q, tau
//!               k_max, velocity_transport = pv-flux | vector-invariant, upwind
//! [physics]     f, g, h, b            (f and b are expressions in x, y)
//! [time]        dt, steps
//! [initial]     kind = rest | geostrophic-jet | gaussian-vortex | custom
//!               u0 (jet), amplitude, radius (vortex), u, v, h, omega (custom)
//! [output]      dir, dump_interval, dump_format = text | vtk
//! [solver]      newton_rtol, newton_max_iter, linear_rtol
//! [dispersion]  kx_min, kx_max, nkx, ky_min, ky_max, nky
//! ```
//!
//! Every key is optional; unknown sections or keys are rejected.

use std::path::{Path, PathBuf};

use ini::Ini;

use super::expr::Expr;
use crate::error::{Error, Result};
use crate::swe_nonlinear::{Integrator, Stabilization, VelocityTransport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Euler2d,
    SweLinear,
    SweNonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpFormat {
    Text,
    Vtk,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Rest,
    /// Zonal jet `U(y) = u0 (sin⁴(πy/Ly) - 3/8)` in geostrophic balance.
    GeostrophicJet { u0: f64 },
    /// Gaussian stream function `amplitude·exp(-r²/(2 radius²))` centred in
    /// the domain, in geostrophic balance.
    GaussianVortex { amplitude: f64, radius: f64 },
    /// Analytic fields; `h` is the depth (nonlinear) or elevation (linear).
    Custom {
        u: Option<Expr>,
        v: Option<Expr>,
        h: Option<Expr>,
        omega: Option<Expr>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range1d {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Range1d {
    pub fn points(&self) -> Vec<f64> {
        match self.n {
            0 => Vec::new(),
            1 => vec![self.min],
            n => (0..n)
                .map(|i| self.min + (self.max - self.min) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshConfig,
    pub model: ModelKind,
    pub integrator: Integrator,
    pub stabilization: Stabilization,
    /// Stabilization timescale; `None` means `Δt/2`.
    pub tau: Option<f64>,
    pub k_max: usize,
    pub velocity_transport: VelocityTransport,
    pub upwind: bool,
    pub f: Expr,
    pub g: f64,
    /// Mean depth.
    pub h: f64,
    pub b: Expr,
    pub dt: f64,
    pub steps: usize,
    pub initial: InitialCondition,
    pub output_dir: PathBuf,
    /// Field dumps every this many steps; 0 disables them.
    pub dump_interval: usize,
    pub dump_format: DumpFormat,
    pub newton_rtol: f64,
    pub newton_max_iter: usize,
    pub linear_rtol: f64,
    pub kx: Range1d,
    pub ky: Range1d,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mesh: MeshConfig {
                nx: 16,
                ny: 16,
                lx: 1.0,
                ly: 1.0,
            },
            model: ModelKind::SweNonlinear,
            integrator: Integrator::Poisson,
            stabilization: Stabilization::None,
            tau: None,
            k_max: 4,
            velocity_transport: VelocityTransport::PvFlux,
            upwind: true,
            f: Expr::Num(10.0),
            g: 10.0,
            h: 1.0,
            b: Expr::Num(0.0),
            dt: 0.01,
            steps: 10,
            initial: InitialCondition::Rest,
            output_dir: PathBuf::from("output"),
            dump_interval: 0,
            dump_format: DumpFormat::Text,
            newton_rtol: 1e-10,
            newton_max_iter: 30,
            linear_rtol: 1e-12,
            kx: Range1d {
                min: 0.0,
                max: f64::NAN,
                n: 17,
            },
            ky: Range1d { min: 0.0, max: 0.0, n: 1 },
        }
    }
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse '{v}'")))
}

fn parse_expr(section: &str, key: &str, v: &str) -> Result<Expr> {
    Expr::parse(v).map_err(|e| Error::Config(format!("[{section}] {key}: {e}")))
}

fn parse_bool(section: &str, key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("[{section}] {key}: expected a boolean, got '{v}'"))),
    }
}

fn choice<T: Copy>(section: &str, key: &str, v: &str, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(name, _)| *name == v.trim())
        .map(|(_, t)| *t)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("[{section}] {key}: '{v}' is not one of {}", names.join(", ")))
        })
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut c = Self::default();
        let mut ic_kind = "rest".to_string();
        let (mut u0, mut amplitude, mut radius) = (0.1, 0.05, 0.1);
        let (mut cu, mut cv, mut ch, mut comega) = (None, None, None, None);
        let mut kx_max = None;
        for (section, props) in ini.iter() {
            let sec = section.unwrap_or("");
            for (key, v) in props.iter() {
                match (sec, key) {
                    ("mesh", "nx") => c.mesh.nx = parse_num(sec, key, v)?,
                    ("mesh", "ny") => c.mesh.ny = parse_num(sec, key, v)?,
                    ("mesh", "lx") => c.mesh.lx = parse_num(sec, key, v)?,
                    ("mesh", "ly") => c.mesh.ly = parse_num(sec, key, v)?,
                    ("model", "kind") => {
                        c.model = choice(
                            sec,
                            key,
                            v,
                            &[
                                ("euler2d", ModelKind::Euler2d),
                                ("swe-linear", ModelKind::SweLinear),
                                ("swe-nonlinear", ModelKind::SweNonlinear),
                            ],
                        )?
                    }
                    ("model", "integrator") => {
                        c.integrator = choice(
                            sec,
                            key,
                            v,
                            &[
                                ("poisson", Integrator::Poisson),
                                ("midpoint", Integrator::Midpoint),
                                ("semi-implicit", Integrator::SemiImplicit),
                            ],
                        )?
                    }
                    ("model", "stabilization") => {
                        c.stabilization = choice(
                            sec,
                            key,
                            v,
                            &[
                                ("none", Stabilization::None),
                                ("apvm", Stabilization::Apvm),
                                ("supg-q", Stabilization::SupgQ),
                            ],
                        )?
                    }
                    ("model", "tau") => c.tau = Some(parse_num(sec, key, v)?),
                    ("model", "k_max") => c.k_max = parse_num(sec, key, v)?,
                    ("model", "velocity_transport") => {
                        c.velocity_transport = choice(
                            sec,
                            key,
                            v,
                            &[
                                ("pv-flux", VelocityTransport::PvFlux),
                                ("vector-invariant", VelocityTransport::VectorInvariant),
                            ],
                        )?
                    }
                    ("model", "upwind") => c.upwind = parse_bool(sec, key, v)?,
                    ("physics", "f") => c.f = parse_expr(sec, key, v)?,
                    ("physics", "g") => c.g = parse_num(sec, key, v)?,
                    ("physics", "h") => c.h = parse_num(sec, key, v)?,
                    ("physics", "b") => c.b = parse_expr(sec, key, v)?,
                    ("time", "dt") => c.dt = parse_num(sec, key, v)?,
                    ("time", "steps") => c.steps = parse_num(sec, key, v)?,
                    ("initial", "kind") => ic_kind = v.trim().to_string(),
                    ("initial", "u0") => u0 = parse_num(sec, key, v)?,
                    ("initial", "amplitude") => amplitude = parse_num(sec, key, v)?,
                    ("initial", "radius") => radius = parse_num(sec, key, v)?,
                    ("initial", "u") => cu = Some(parse_expr(sec, key, v)?),
                    ("initial", "v") => cv = Some(parse_expr(sec, key, v)?),
                    ("initial", "h") => ch = Some(parse_expr(sec, key, v)?),
                    ("initial", "omega") => comega = Some(parse_expr(sec, key, v)?),
                    ("output", "dir") => c.output_dir = PathBuf::from(v.trim()),
                    ("output", "dump_interval") => c.dump_interval = parse_num(sec, key, v)?,
                    ("output", "dump_format") => {
                        c.dump_format = choice(sec, key, v, &[("text", DumpFormat::Text), ("vtk", DumpFormat::Vtk)])?
                    }
                    ("solver", "newton_rtol") => c.newton_rtol = parse_num(sec, key, v)?,
                    ("solver", "newton_max_iter") => c.newton_max_iter = parse_num(sec, key, v)?,
                    ("solver", "linear_rtol") => c.linear_rtol = parse_num(sec, key, v)?,
                    ("dispersion", "kx_min") => c.kx.min = parse_num(sec, key, v)?,
                    ("dispersion", "kx_max") => kx_max = Some(parse_num(sec, key, v)?),
                    ("dispersion", "nkx") => c.kx.n = parse_num(sec, key, v)?,
                    ("dispersion", "ky_min") => c.ky.min = parse_num(sec, key, v)?,
                    ("dispersion", "ky_max") => c.ky.max = parse_num(sec, key, v)?,
                    ("dispersion", "nky") => c.ky.n = parse_num(sec, key, v)?,
                    _ if sec.is_empty() => return Err(Error::Config(format!("key '{key}' outside any section"))),
                    _ => return Err(Error::Config(format!("unknown key '{key}' in [{sec}]"))),
                }
            }
            if !matches!(
                sec,
                "" | "mesh" | "model" | "physics" | "time" | "initial" | "output" | "solver" | "dispersion"
            ) {
                return Err(Error::Config(format!("unknown section [{sec}]")));
            }
        }
        c.kx.max = kx_max.unwrap_or(std::f64::consts::PI * c.mesh.nx as f64 / c.mesh.lx);
        c.initial = match ic_kind.as_str() {
            "rest" => InitialCondition::Rest,
            "geostrophic-jet" => InitialCondition::GeostrophicJet { u0 },
            "gaussian-vortex" => InitialCondition::GaussianVortex { amplitude, radius },
            "custom" => InitialCondition::Custom {
                u: cu,
                v: cv,
                h: ch,
                omega: comega,
            },
            other => {
                return Err(Error::Config(format!(
                    "[initial] kind: '{other}' is not one of rest, geostrophic-jet, gaussian-vortex, custom"
                )))
            }
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.mesh.nx < 3 || self.mesh.ny < 3 {
            return bad(format!("mesh {}x{} needs at least 3 cells per direction", self.mesh.nx, self.mesh.ny));
        }
        if !(self.mesh.lx > 0.0 && self.mesh.ly > 0.0) {
            return bad("mesh extents must be positive".into());
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("time step {} must be positive", self.dt));
        }
        if !(self.g > 0.0 && self.h > 0.0) {
            return bad("g and h must be positive".into());
        }
        if self.tau.is_some_and(|t| !(t >= 0.0 && t.is_finite())) {
            return bad("tau must be finite and >= 0".into());
        }
        if self.k_max == 0 {
            return bad("k_max must be at least 1".into());
        }
        if !(self.newton_rtol > 0.0 && self.linear_rtol > 0.0) || self.newton_max_iter == 0 {
            return bad("solver tolerances must be positive".into());
        }
        if self.model == ModelKind::SweLinear && self.f.constant().is_none() {
            return bad("the linear model needs a constant f".into());
        }
        if let InitialCondition::GaussianVortex { radius, .. } = self.initial {
            if !(radius > 0.0) {
                return bad("vortex radius must be positive".into());
            }
        }
        if let InitialCondition::Custom { omega, u, v, h } = &self.initial {
            if self.model == ModelKind::Euler2d && omega.is_none() {
                return bad("custom Euler initial data needs 'omega'".into());
            }
            if self.model != ModelKind::Euler2d && (u.is_none() && v.is_none() && h.is_none()) {
                return bad("custom shallow water initial data needs at least one of u, v, h".into());
            }
        }
        for r in [&self.kx, &self.ky] {
            if !(r.min.is_finite() && r.max.is_finite()) || r.n == 0 {
                return bad("dispersion ranges must be finite with at least one point".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.mesh.nx, 16);
        assert_eq!(c.model, ModelKind::SweNonlinear);
        assert_eq!(c.initial, InitialCondition::Rest);
        assert!((c.kx.max - 16.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn full_config_round_trip() {
        let text = "
[mesh]
nx = 8
ny = 12
lx = 2
ly = 1
[model]
kind = swe-nonlinear
integrator = semi-implicit
stabilization = apvm
tau = 0.002
k_max = 3
velocity_transport = vector-invariant
upwind = false
[physics]
f = 10 + sin(2*pi*y)
g = 9.81
h = 2
b = 0.1*cos(2*pi*x)
[time]
dt = 0.005
steps = 7
[initial]
kind = custom
u = sin(2*pi*y)
h = 2
[output]
dir = /tmp/out
dump_interval = 2
dump_format = vtk
[solver]
newton_rtol = 1e-12
[dispersion]
nkx = 5
ky_max = 3
nky = 2
";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!((c.mesh.nx, c.mesh.ny, c.mesh.lx), (8, 12, 2.0));
        assert_eq!(c.integrator, Integrator::SemiImplicit);
        assert_eq!(c.stabilization, Stabilization::Apvm);
        assert_eq!(c.tau, Some(0.002));
        assert_eq!(c.velocity_transport, VelocityTransport::VectorInvariant);
        assert!(!c.upwind);
        assert!((c.f.eval(0.0, 0.25) - 11.0).abs() < 1e-15);
        assert_eq!(c.steps, 7);
        assert_eq!(c.dump_format, DumpFormat::Vtk);
        assert_eq!(c.ky.points(), vec![0.0, 3.0]);
        assert_eq!(c.kx.points().len(), 5);
        assert!(matches!(c.initial, InitialCondition::Custom { u: Some(_), v: None, .. }));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "[mesh]\nnx = two",
            "[mesh]\nnx = 2",
            "[model]\nkind = fluid",
            "[physics]\nf = sin(",
            "[bogus]\nx = 1",
            "[time]\nspeed = 1",
            "[initial]\nkind = storm",
            "[model]\nkind = swe-linear\n[physics]\nf = y",
            "[model]\nkind = euler2d\n[initial]\nkind = custom",
            "[time]\ndt = -1",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn missing_file_is_an_io_error() {
        assert!(matches!(RunConfig::load("/nonexistent/run.ini"), Err(Error::Io { .. })));
    }
}
