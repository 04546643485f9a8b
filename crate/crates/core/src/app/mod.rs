//! Command-line front end: configuration, experiment drivers, diagnostics
//! output, field dumps and the built-in verification suite.

pub mod config;
pub mod dump;
pub mod expr;
pub mod sim;
pub mod verify;

use std::path::{Path, PathBuf};

pub use config::{DumpFormat, InitialCondition, ModelKind, RunConfig};
pub use expr::Expr;
pub use sim::{DiagnosticsRecord, Simulation};
pub use verify::{verify, FaultInjection, VerifyReport};

use crate::error::{Error, Result};
use crate::swe_linear::{BlochSymbol, DispersionParams};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "DERHAM_OUTPUT_DIR";

pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VERIFY_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const INVARIANT: i32 = 4;
    pub const IO: i32 = 5;
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Expression { .. }
        | Error::InvalidArgument(_)
        | Error::InvalidMesh(_)
        | Error::OutOfRange { .. }
        | Error::DimensionMismatch { .. } => exit::CONFIG,
        Error::Io { .. } | Error::Format(_) => exit::IO,
        Error::NonPositiveDepth { .. } | Error::Invariant(_) | Error::NonRealFrequency { .. } => exit::INVARIANT,
        Error::NotConverged { .. } | Error::Stagnation { .. } | Error::Diverged { .. } | Error::Breakdown(_) => {
            exit::SOLVER
        }
    }
}

/// Output directory: the override if given, else the configured one.
pub fn output_dir(config: &RunConfig, env_override: Option<&Path>) -> PathBuf {
    match env_override {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => config.output_dir.clone(),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn dump_state(sim: &Simulation, dir: &Path, format: DumpFormat) -> Result<Vec<PathBuf>> {
    let dc = sim.complex();
    let mut paths = Vec::new();
    for (name, field) in sim.fields()? {
        let step = sim.step_count();
        let path = match format {
            DumpFormat::Text => {
                let p = dir.join(format!("{name}_{step:06}.txt"));
                dump::write_text(dc, &field, &p)?;
                p
            }
            DumpFormat::Vtk => {
                let p = dir.join(format!("{name}_{step:06}.vtk"));
                dump::write_vtk(dc, name, &field, &p)?;
                p
            }
        };
        paths.push(path);
    }
    Ok(paths)
}

/// Outcome of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub diagnostics: PathBuf,
    pub records: Vec<DiagnosticsRecord>,
    pub dumps: Vec<PathBuf>,
}

/// Run the configured experiment, writing `diagnostics.csv` (and dumps)
/// into `dir`. Rows are flushed as they are produced, so a failed run
/// leaves the completed steps on disk.
pub fn run(config: &RunConfig, dir: &Path) -> Result<RunSummary> {
    create_dir(dir)?;
    let path = dir.join(DIAGNOSTICS_FILE);
    let mut sim = Simulation::new(config)?;
    let mut writer = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    writer
        .write_record(DiagnosticsRecord::HEADER)
        .map_err(|e| csv_error(&path, e))?;
    let mut records = Vec::with_capacity(config.steps + 1);
    let mut dumps = Vec::new();
    let mut emit = |r: DiagnosticsRecord, writer: &mut csv::Writer<std::fs::File>| -> Result<()> {
        writer.write_record(r.to_row()).map_err(|e| csv_error(&path, e))?;
        writer.flush().map_err(|e| Error::io(&path, e))?;
        records.push(r);
        Ok(())
    };
    emit(sim.record(0, 0.0)?, &mut writer)?;
    if config.dump_interval > 0 {
        dumps.extend(dump_state(&sim, dir, config.dump_format)?);
    }
    for _ in 0..config.steps {
        let (iters, residual) = sim.advance()?;
        emit(sim.record(iters, residual)?, &mut writer)?;
        if config.dump_interval > 0 && sim.step_count() % config.dump_interval == 0 {
            dumps.extend(dump_state(&sim, dir, config.dump_format)?);
        }
    }
    Ok(RunSummary {
        diagnostics: path,
        records,
        dumps,
    })
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{other:?}")),
    }
}

/// Dump the initial state's fields into `dir`.
pub fn dump_initial(config: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let sim = Simulation::new(config)?;
    dump_state(&sim, dir, config.dump_format)
}

/// Dispersion CSV `kx,ky,omega1,omega2,omega3` over the configured grid,
/// `kx` varying fastest.
pub fn dispersion_csv(config: &RunConfig) -> Result<String> {
    let f = config
        .f
        .constant()
        .ok_or_else(|| Error::Config("dispersion analysis needs a constant f".into()))?;
    let params = DispersionParams { f, g: config.g, h: config.h };
    let (dx, dy) = (
        config.mesh.lx / config.mesh.nx as f64,
        config.mesh.ly / config.mesh.ny as f64,
    );
    let symbol = BlochSymbol::new(&params, dx, dy)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Format(e.to_string());
    w.write_record(["kx", "ky", "omega1", "omega2", "omega3"]).map_err(io)?;
    let (kxs, kys) = (config.kx.points(), config.ky.points());
    let pairs: Vec<(f64, f64)> = kys.iter().flat_map(|&ky| kxs.iter().map(move |&kx| (kx, ky))).collect();
    for (kx, ky) in pairs {
        let om = symbol.frequencies(kx, ky)?;
        w.write_record([
            format!("{kx:e}"),
            format!("{ky:e}"),
            format!("{:e}", om[0]),
            format!("{:e}", om[1]),
            format!("{:e}", om[2]),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn columns(records: &[DiagnosticsRecord]) -> Vec<Vec<f64>> {
        let get = |r: &DiagnosticsRecord| vec![r.energy, r.enstrophy, r.mass, r.total_vorticity, r.div_l2];
        let rows: Vec<Vec<f64>> = records.iter().map(get).collect();
        (0..5).map(|k| rows.iter().map(|r| r[k]).collect()).collect()
    }

    fn spread(v: &[f64]) -> f64 {
        let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), x| (a.min(*x), b.max(*x)));
        (hi - lo) / hi.abs().max(lo.abs()).max(1.0)
    }

    #[test]
    fn rest_state_run_has_constant_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig::parse("[mesh]\nnx = 8\nny = 8\n[time]\nsteps = 10\n").unwrap();
        let s = run(&c, dir.path()).unwrap();
        assert_eq!(s.records.len(), 11);
        for col in columns(&s.records) {
            assert!(spread(&col) < 1e-12, "{col:?}");
        }
        let text = std::fs::read_to_string(&s.diagnostics).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "step,time,energy,enstrophy,mass,total_vorticity,div_l2,newton_iters,residual_norm"
        );
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn linear_jet_run_conserves_energy() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig::parse(
            "[mesh]\nnx = 12\nny = 12\n[model]\nkind = swe-linear\n[time]\ndt = 0.02\nsteps = 100\n[initial]\nkind = geostrophic-jet\n",
        )
        .unwrap();
        let s = run(&c, dir.path()).unwrap();
        let e: Vec<f64> = s.records.iter().map(|r| r.energy).collect();
        assert!(e[0] > 0.0);
        assert!(spread(&e) < 1e-11, "{}", spread(&e));
    }

    #[test]
    fn every_model_and_initial_condition_runs() {
        let cases = [
            "[model]\nkind = euler2d\n[initial]\nkind = gaussian-vortex",
            "[model]\nkind = euler2d\n[initial]\nkind = custom\nomega = sin(2*pi*x)*cos(2*pi*y)",
            "[model]\nkind = swe-linear\n[initial]\nkind = custom\nh = 0.01*sin(2*pi*x)",
            "[model]\nkind = swe-nonlinear\nintegrator = semi-implicit\n[initial]\nkind = gaussian-vortex",
            "[model]\nkind = swe-nonlinear\nintegrator = midpoint\nstabilization = apvm\n[initial]\nkind = geostrophic-jet",
            "[model]\nkind = swe-nonlinear\nstabilization = supg-q\n[physics]\nb = 0.01*cos(2*pi*x)\n[initial]\nkind = custom\nu = 0.1*sin(2*pi*y)",
        ];
        for text in cases {
            let dir = tempfile::tempdir().unwrap();
            let c = RunConfig::parse(&format!("[mesh]\nnx = 6\nny = 6\n[time]\nsteps = 3\n{text}\n[output]\ndump_interval = 3\n")).unwrap();
            let s = run(&c, dir.path()).unwrap_or_else(|e| panic!("{text}: {e}"));
            assert_eq!(s.records.len(), 4);
            assert!(s.records.iter().all(|r| r.is_finite()));
            assert!(!s.dumps.is_empty());
            for p in &s.dumps {
                dump::read_text(p).unwrap();
            }
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let c = RunConfig::parse(
            "[mesh]\nnx = 8\nny = 8\n[time]\nsteps = 5\n[model]\nintegrator = semi-implicit\n[initial]\nkind = geostrophic-jet\n",
        )
        .unwrap();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let pa = run(&c, a.path()).unwrap().diagnostics;
        let pb = run(&c, b.path()).unwrap().diagnostics;
        assert_eq!(std::fs::read(pa).unwrap(), std::fs::read(pb).unwrap());
    }

    #[test]
    fn dispersion_examples() {
        let c = RunConfig::parse("[dispersion]\nkx_max = 0\nnkx = 1\n").unwrap();
        let csv = dispersion_csv(&c).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "kx,ky,omega1,omega2,omega3");
        let w: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
        assert!((w[2] + 10.0).abs() < 1e-10 && w[3].abs() < 1e-10 && (w[4] - 10.0).abs() < 1e-10);

        let c = RunConfig::parse("[physics]\nf = 0\n[dispersion]\nnkx = 9\nnky = 3\nky_max = 5\n").unwrap();
        let csv = dispersion_csv(&c).unwrap();
        assert_eq!(csv.lines().count(), 1 + 27);
        let c = RunConfig::parse("[physics]\nf = 0\n[dispersion]\nnkx = 33\n").unwrap();
        let w3: Vec<f64> = dispersion_csv(&c)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
            .collect();
        assert!(w3.windows(2).all(|p| p[1] > p[0]), "{w3:?}");

        let c = RunConfig::parse("[dispersion]\nkx_max = 1000\n").unwrap();
        assert!(matches!(dispersion_csv(&c), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            exit_code(&Error::Config("x".into())),
            exit_code(&Error::Breakdown("x")),
            exit_code(&Error::NonPositiveDepth { cell: 0, value: -1.0 }),
            exit_code(&Error::io("/x", std::io::Error::other("x"))),
            exit::VERIFY_FAILED,
            exit::SUCCESS,
        ];
        let mut sorted = codes.to_vec();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
    }

    #[test]
    fn output_override_takes_precedence() {
        let c = RunConfig::default();
        assert_eq!(output_dir(&c, None), PathBuf::from("output"));
        assert_eq!(output_dir(&c, Some(Path::new("/tmp/x"))), PathBuf::from("/tmp/x"));
        assert_eq!(output_dir(&c, Some(Path::new(""))), PathBuf::from("output"));
    }
}
