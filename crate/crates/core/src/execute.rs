//! Runs a validated config and lays out its output directory:
//! `manifest.txt` first (status `running`), then snapshots as they are
//! produced, then diagnostics, then the final manifest.

use std::f64::consts::TAU;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::azimuthal::{
    classify, simulate_autonomous, stationary_bin_averages, stationary_density, AngularDensity,
    AutonomousRun, TerrainProfile,
};
use crate::config::{serialize, Mode, RunConfig, TransitionKind};
use crate::error::{Error, Result};
use crate::fd::{
    run_to_steady, smell_field, step_two_state_with_stats, AveragingSeries, DensityGrid,
    NormOrder, TransitionOp, TwoStateGrid, DENSITY_HEADER, FIELD_HEADER,
};
use crate::kernels::{eta_fourier_auto, eta_images_auto, kernel_l1, run_study, semigroup_defect};
use crate::particles::{self, position_density_norm, ParticleState, SimClock, SnapshotSink};

pub const OUT_ENV: &str = "FORMICA_OUT";
pub const MANIFEST: &str = "manifest.txt";

/// Ordered `key = value` lines in the config grammar.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<(String, String)>,
}

impl Manifest {
    fn set(&mut self, key: &str, value: String) {
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn text(&mut self, key: &str, value: impl std::fmt::Display) {
        let v = value.to_string().replace('"', "'");
        self.set(key, format!("\"{v}\""));
    }

    pub fn number(&mut self, key: &str, value: f64) {
        self.set(key, format!("{value:?}"));
    }

    pub fn integer(&mut self, key: &str, value: u64) {
        self.set(key, value.to_string());
    }

    pub fn flag(&mut self, key: &str, value: bool) {
        self.set(key, value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.trim_matches('"'))
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST);
        fs::write(&path, self.render()).map_err(|e| Error::io(&path, e))
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    /// File names relative to `dir`, in creation order.
    pub files: Vec<String>,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let digest = Sha256::digest(serialize(cfg).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// `FORMICA_OUT`, else the given directory, else the config's `out`, else
/// `formica-out`.
pub fn output_root(cli_out: Option<&Path>, cfg: &RunConfig) -> PathBuf {
    if let Some(env) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    cli_out
        .map(Path::to_path_buf)
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("formica-out"))
}

/// Directory for one run below `root`: `<mode>-<first 12 hash digits>`.
pub fn run_dir(root: &Path, cfg: &RunConfig) -> PathBuf {
    root.join(format!("{}-{}", cfg.mode, &config_hash(cfg)[..12]))
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    fn io_err(&self, name: &str) -> impl Fn(std::io::Error) -> Error {
        let path = self.dir.join(name);
        move |e| Error::io(&path, e)
    }

    fn write_all(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let mut w = self.create(name)?;
        w.write_all(body).map_err(self.io_err(name))?;
        w.flush().map_err(self.io_err(name))
    }
}

/// Executes `cfg` into `dir`. Whatever happens, `dir/manifest.txt` ends with
/// `status = "completed"` or `status = "failed"` plus a reason.
pub fn execute(cfg: &RunConfig, dir: &Path) -> Result<RunOutput> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::default();
    manifest.text("status", "running");
    manifest.text("mode", cfg.mode);
    if let Some(p) = &cfg.preset {
        manifest.text("preset", p);
    }
    manifest.integer("seed", cfg.seed);
    manifest.text("config_hash", config_hash(cfg));
    manifest.text("version", env!("CARGO_PKG_VERSION"));
    describe(cfg, &mut manifest);
    manifest.write(dir)?;

    let mut out = Outputs {
        dir: dir.to_path_buf(),
        files: Vec::new(),
    };
    let config_text = serialize(cfg);
    let result = out
        .write_all("config.txt", config_text.as_bytes())
        .and_then(|_| match cfg.mode {
            Mode::Particles => run_particles(cfg, &mut out, &mut manifest),
            Mode::Fd => run_fd(cfg, &mut out, &mut manifest),
            Mode::Fd2State => run_fd2(cfg, &mut out, &mut manifest),
            Mode::Azimuthal => run_azimuthal(cfg, &mut out, &mut manifest),
            Mode::Kernels => run_kernels(cfg, &mut out, &mut manifest),
        });
    match result {
        Ok(()) => {
            manifest.text("status", "completed");
            manifest.text("files", out.files.join(","));
            manifest.write(dir)?;
            Ok(RunOutput {
                dir: dir.to_path_buf(),
                manifest,
                files: out.files,
            })
        }
        Err(e) => {
            manifest.text("status", "failed");
            manifest.text("reason", &e);
            manifest.text("files", out.files.join(","));
            // the original error matters more than a failure to record it
            let _ = manifest.write(dir);
            Err(e)
        }
    }
}

fn describe(cfg: &RunConfig, m: &mut Manifest) {
    match cfg.mode {
        Mode::Particles => {
            m.text("rate_convention", cfg.particles.rate_convention);
            m.number("eps", cfg.particles.to_config().eps());
        }
        Mode::Fd | Mode::Fd2State => {
            m.text("discretization", "implicit Euler, c then rho, conservative fluxes");
            m.text("advection", cfg.fd.advection);
            m.flag("verbatim", cfg.fd.verbatim);
            m.text("negativity", cfg.fd.negativity);
            m.number("solver_tol", cfg.fd.solver_tol);
            m.integer("solver_max_iter", cfg.fd.max_iter as u64);
            m.text("solver", "bicgstab, jacobi preconditioned");
            if cfg.mode == Mode::Fd2State {
                m.text("transition", cfg.two_state.transition);
                m.text("exchange", "implicit including J");
            }
        }
        Mode::Azimuthal => {}
        Mode::Kernels => {
            m.text("kernel_domain", cfg.kernels.domain);
            m.text("kernel_normalization", "unit mass; cosine series scaled by 1/(2pi)");
        }
    }
}

struct ParticleWriter {
    particles: BufWriter<File>,
    particles_path: PathBuf,
    field_dir: PathBuf,
    field_names: Vec<String>,
    rate_convention: crate::spectral::RateConvention,
    bins: usize,
    norms: Vec<(u64, f64, [f64; 3])>,
}

impl SnapshotSink for ParticleWriter {
    fn snapshot(&mut self, clock: &SimClock, state: &ParticleState) -> Result<()> {
        let t = clock.t();
        let step = clock.step_index;
        let path = self.particles_path.clone();
        let err = |e| Error::io(&path, e);
        for (i, (x, th)) in state.xs.iter().zip(&state.thetas).enumerate() {
            writeln!(
                self.particles,
                "{step},{t},{i},{},{},{}",
                x.x1(),
                x.x2(),
                th.value()
            )
            .map_err(err)?;
        }
        self.particles.flush().map_err(err)?;
        let name = format!("field/step_{step:08}.csv");
        let fpath = self.field_dir.join(format!("step_{step:08}.csv"));
        let file = File::create(&fpath).map_err(|e| Error::io(&fpath, e))?;
        let mut w = BufWriter::new(file);
        state
            .total_field
            .write_snapshot(&mut w, self.rate_convention, step, t)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&fpath, e))?;
        self.field_names.push(name);
        let norms = NormOrder::ALL.map(|o| position_density_norm(state, self.bins, o.exponent()));
        self.norms.push((step, t, norms));
        Ok(())
    }
}

fn run_particles(cfg: &RunConfig, out: &mut Outputs, manifest: &mut Manifest) -> Result<()> {
    let pcfg = cfg.particles.to_config();
    let mut particles = out.create("particles.csv")?;
    writeln!(particles, "step,t,i,x1,x2,theta").map_err(out.io_err("particles.csv"))?;
    let field_dir = out.dir.join("field");
    fs::create_dir_all(&field_dir).map_err(|e| Error::io(&field_dir, e))?;
    let mut sink = ParticleWriter {
        particles,
        particles_path: out.dir.join("particles.csv"),
        field_dir,
        field_names: Vec::new(),
        rate_convention: pcfg.rate_convention,
        bins: cfg.particles.density_bins,
        norms: Vec::new(),
    };
    let result = particles::run(&cfg.model, &pcfg, cfg.seed, &mut sink);
    out.files.append(&mut sink.field_names);
    let (_, summary) = result?;

    let mut diag = out.create("diagnostics.csv")?;
    let io = out.io_err("diagnostics.csv");
    writeln!(diag, "step,t,density_l2,density_l4,density_linf").map_err(&io)?;
    for (step, t, n) in &sink.norms {
        writeln!(diag, "{step},{t},{},{},{}", n[0], n[1], n[2]).map_err(&io)?;
    }
    diag.flush().map_err(&io)?;
    manifest.integer("steps", summary.steps);
    manifest.number("max_total_drift", summary.max_total_drift);
    manifest.number("median_step_seconds", summary.median_step_seconds());
    for (k, order) in NormOrder::ALL.iter().enumerate() {
        let first = sink.norms.first().map_or(f64::NAN, |n| n.2[k]);
        let max = sink.norms.iter().map(|n| n.2[k]).fold(f64::NEG_INFINITY, f64::max);
        manifest.number(&format!("averaging_growth_l{order}"), max / first);
    }
    Ok(())
}

fn fd_initial(cfg: &RunConfig, mass: f64) -> DensityGrid {
    let fd = &cfg.fd;
    DensityGrid::new(
        fd.n_x,
        fd.n_theta,
        vec![mass / TAU; fd.n_x * fd.n_theta],
        fd.initial_field(),
    )
}

struct FdDiagnostics {
    rows: Vec<String>,
    series: Vec<AveragingSeries>,
}

impl FdDiagnostics {
    fn new() -> Self {
        FdDiagnostics {
            rows: Vec::new(),
            series: NormOrder::ALL.iter().map(|o| AveragingSeries::new(*o)).collect(),
        }
    }

    fn record(&mut self, step: u64, t: f64, g: &DensityGrid) {
        for s in &mut self.series {
            s.push(g);
        }
        let n = |k: usize| self.series[k].values.last().copied().unwrap_or(f64::NAN);
        self.rows.push(format!(
            "{step},{t},{},{},{},{},{},{}",
            g.mass(),
            g.min_rho(),
            g.max_rho(),
            n(0),
            n(1),
            n(2)
        ));
    }

    fn finish(&self, out: &mut Outputs, manifest: &mut Manifest) -> Result<()> {
        let mut w = out.create("diagnostics.csv")?;
        let io = out.io_err("diagnostics.csv");
        writeln!(w, "step,t,mass,min_rho,max_rho,norm_l2,norm_l4,norm_linf").map_err(&io)?;
        for row in &self.rows {
            writeln!(w, "{row}").map_err(&io)?;
        }
        w.flush().map_err(&io)?;
        for s in &self.series {
            manifest.number(&format!("averaging_growth_l{}", s.order), s.growth_ratio());
        }
        Ok(())
    }
}

fn check_mass(before: f64, after: f64, t: f64) -> Result<f64> {
    let drift = ((after - before) / before).abs();
    if drift > 1e-9 {
        return Err(Error::Invariant(format!(
            "mass changed by {drift:.3e} (relative) in the step ending at t={t}"
        )));
    }
    Ok(drift)
}

fn run_fd(cfg: &RunConfig, out: &mut Outputs, manifest: &mut Manifest) -> Result<()> {
    let params = cfg.fd.params(&cfg.model);
    let grid = fd_initial(cfg, cfg.fd.mass);
    let mut density = out.create("density.csv")?;
    let mut field = out.create("field.csv")?;
    let dio = out.io_err("density.csv");
    let fio = out.io_err("field.csv");
    writeln!(density, "{DENSITY_HEADER}").map_err(&dio)?;
    writeln!(field, "{FIELD_HEADER}").map_err(&fio)?;
    grid.write_density_rows(&mut density, 0.0).map_err(&dio)?;
    grid.write_field_rows(&mut field, 0.0).map_err(&fio)?;

    let mut diag = FdDiagnostics::new();
    diag.record(0, 0.0, &grid);
    let every = cfg.fd.snapshot_every;
    let mut last_mass = grid.mass();
    let mut worst_drift: f64 = 0.0;
    let mut last_written = 0;
    let outcome = run_to_steady(
        &grid,
        &params,
        cfg.fd.dt,
        cfg.fd.t_max,
        cfg.fd.steady_tol,
        |step, t, g| {
            let m = g.mass();
            worst_drift = worst_drift.max(check_mass(last_mass, m, t)?);
            last_mass = m;
            diag.record(step, t, g);
            if step % every == 0 {
                g.write_density_rows(&mut density, t).map_err(&dio)?;
                g.write_field_rows(&mut field, t).map_err(&fio)?;
                density.flush().map_err(&dio)?;
                field.flush().map_err(&fio)?;
                last_written = step;
            }
            Ok(())
        },
    );
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let _ = diag.finish(out, manifest);
            return Err(e);
        }
    };
    if outcome.steps != last_written && outcome.steps > 0 {
        outcome
            .grid
            .write_density_rows(&mut density, outcome.t_stop)
            .map_err(&dio)?;
        outcome
            .grid
            .write_field_rows(&mut field, outcome.t_stop)
            .map_err(&fio)?;
    }
    density.flush().map_err(&dio)?;
    field.flush().map_err(&fio)?;
    diag.finish(out, manifest)?;

    let avg = outcome.grid.theta_average();
    let max = avg.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = avg.iter().copied().fold(f64::INFINITY, f64::min);
    manifest.flag("converged", outcome.converged);
    manifest.number("t_stop", outcome.t_stop);
    manifest.integer("steps", outcome.steps);
    manifest.number("max_mass_drift", worst_drift);
    manifest.number("final_min_rho", outcome.grid.min_rho());
    manifest.number("averaged_max_over_min", max / min);
    Ok(())
}

fn wrapped_normal_kernel(n_theta: usize, spread: f64) -> AngularDensity {
    let values = (0..n_theta)
        .map(|k| {
            let th = k as f64 * TAU / n_theta as f64;
            (-6..=6)
                .map(|m| {
                    let d = th + m as f64 * TAU;
                    (-d * d / (2.0 * spread * spread)).exp()
                })
                .sum()
        })
        .collect();
    AngularDensity { values }
}

pub fn two_state_initial(cfg: &RunConfig) -> Result<(TwoStateGrid, TransitionOp)> {
    let ts = &cfg.two_state;
    let (alpha_rate, beta_rate) = ts.rates(cfg.fd.n_x);
    let smell_alpha = smell_field(&alpha_rate, ts.smell_gamma, ts.smell_sigma, ts.smell_chi_alpha)?;
    let smell_beta = smell_field(&beta_rate, ts.smell_gamma, ts.smell_sigma, ts.smell_chi_beta)?;
    let grid = TwoStateGrid {
        alpha: fd_initial(cfg, cfg.fd.mass * ts.alpha_fraction),
        beta: fd_initial(cfg, cfg.fd.mass * (1.0 - ts.alpha_fraction)),
        alpha_rate,
        beta_rate,
        smell_alpha,
        smell_beta,
    };
    let op = match ts.transition {
        TransitionKind::Identity => TransitionOp::Identity,
        TransitionKind::UTurn => TransitionOp::UTurn,
        TransitionKind::Convolution => {
            TransitionOp::convolution(&wrapped_normal_kernel(cfg.fd.n_theta, ts.kernel_spread))?
        }
    };
    Ok((grid, op))
}

/// Density of both states together, carrying the α field.
fn combined(g: &TwoStateGrid) -> DensityGrid {
    let rho = g.alpha.rho.iter().zip(&g.beta.rho).map(|(a, b)| a + b).collect();
    DensityGrid::new(g.n_x(), g.n_theta(), rho, g.alpha.c.clone())
}

fn run_fd2(cfg: &RunConfig, out: &mut Outputs, manifest: &mut Manifest) -> Result<()> {
    let params = cfg.fd.params(&cfg.model);
    let (mut grid, op) = two_state_initial(cfg)?;
    let names = ["density_alpha.csv", "density_beta.csv", "field_alpha.csv", "field_beta.csv"];
    let mut writers = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let mut w = out.create(name)?;
        let header = if i < 2 { DENSITY_HEADER } else { FIELD_HEADER };
        writeln!(w, "{header}").map_err(out.io_err(name))?;
        writers.push(w);
    }
    let paths: Vec<PathBuf> = names.iter().map(|n| out.dir.join(n)).collect();
    let write_all = |g: &TwoStateGrid, t: f64, writers: &mut Vec<BufWriter<File>>| -> Result<()> {
        let r = g
            .alpha
            .write_density_rows(&mut writers[0], t)
            .map_err(|e| Error::io(&paths[0], e))
            .and(g.beta.write_density_rows(&mut writers[1], t).map_err(|e| Error::io(&paths[1], e)))
            .and(g.alpha.write_field_rows(&mut writers[2], t).map_err(|e| Error::io(&paths[2], e)))
            .and(g.beta.write_field_rows(&mut writers[3], t).map_err(|e| Error::io(&paths[3], e)));
        r?;
        for (w, p) in writers.iter_mut().zip(&paths) {
            w.flush().map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    };
    write_all(&grid, 0.0, &mut writers)?;

    let dt = cfg.fd.dt;
    let steps = (cfg.fd.t_max / dt + 1e-9).floor() as u64;
    let m0 = grid.total_mass();
    let mut rows = vec![format!(
        "0,0,{},{},{},{}",
        grid.alpha.mass(),
        grid.beta.mass(),
        m0,
        grid.alpha.min_rho().min(grid.beta.min_rho())
    )];
    let mut last_mass = m0;
    let mut worst_drift: f64 = 0.0;
    let mut series: Vec<AveragingSeries> =
        NormOrder::ALL.iter().map(|o| AveragingSeries::new(*o)).collect();
    let mut push_series = |g: &TwoStateGrid| {
        let both = combined(g);
        series.iter_mut().for_each(|s| s.push(&both));
    };
    push_series(&grid);
    let mut outcome = Ok(());
    for n in 1..=steps {
        let t = n as f64 * dt;
        let next = match step_two_state_with_stats(&grid, &params, &op, &cfg.two_state.production, dt) {
            Ok((g, _)) => g,
            Err(Error::NegativeDensity { min, max, .. }) => {
                outcome = Err(Error::NegativeDensity { t, min, max });
                break;
            }
            Err(e) => {
                outcome = Err(e);
                break;
            }
        };
        let m = next.total_mass();
        match check_mass(last_mass, m, t) {
            Ok(d) => worst_drift = worst_drift.max(d),
            Err(e) => {
                outcome = Err(e);
                break;
            }
        }
        last_mass = m;
        grid = next;
        push_series(&grid);
        rows.push(format!(
            "{n},{t},{},{},{},{}",
            grid.alpha.mass(),
            grid.beta.mass(),
            m,
            grid.alpha.min_rho().min(grid.beta.min_rho())
        ));
        if n % cfg.fd.snapshot_every == 0 || n == steps {
            write_all(&grid, t, &mut writers)?;
        }
    }
    let mut diag = out.create("diagnostics.csv")?;
    let io = out.io_err("diagnostics.csv");
    writeln!(diag, "step,t,mass_alpha,mass_beta,total_mass,min_rho").map_err(&io)?;
    for row in &rows {
        writeln!(diag, "{row}").map_err(&io)?;
    }
    diag.flush().map_err(&io)?;
    outcome?;
    for s in &series {
        manifest.number(&format!("averaging_growth_l{}", s.order), s.growth_ratio());
    }
    manifest.number("max_total_mass_drift", worst_drift);
    manifest.number("final_mass_alpha", grid.alpha.mass());
    manifest.number("final_mass_beta", grid.beta.mass());
    Ok(())
}

fn run_azimuthal(cfg: &RunConfig, out: &mut Outputs, manifest: &mut Manifest) -> Result<()> {
    let az = &cfg.azimuthal;
    let profile = TerrainProfile::new(az.p, az.a, cfg.model.chi, cfg.model.tau);
    let regime = classify(&profile, az.n_grid)?;
    manifest.text("classification", regime);
    let exact = stationary_density(&profile, az.n_grid)?;
    let mut w = out.create("stationary.csv")?;
    exact
        .write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(out.io_err("stationary.csv"))?;

    let run = AutonomousRun {
        dt: az.dt,
        n_steps: (az.t_end / az.dt).round() as u64,
        n_samples: az.samples,
        bins: az.bins,
        seed: cfg.seed,
    };
    let histogram = simulate_autonomous(&profile, &run)?;
    let mut w = out.create("histogram.csv")?;
    histogram
        .write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(out.io_err("histogram.csv"))?;
    let reference = stationary_bin_averages(&profile, az.bins)?;
    manifest.number("l1_distance", histogram.l1_distance(&reference));
    Ok(())
}

fn run_kernels(cfg: &RunConfig, out: &mut Outputs, manifest: &mut Manifest) -> Result<()> {
    let report = run_study(&cfg.kernels.study())?;
    let mut w = out.create("kernels.csv")?;
    report
        .write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(out.io_err("kernels.csv"))?;
    let mut w = out.create("kernels_summary.txt")?;
    report
        .write_summary(&mut w)
        .and_then(|_| w.flush())
        .map_err(out.io_err("kernels_summary.txt"))?;

    let n = cfg.kernels.semigroup_n;
    let mut gap: f64 = 0.0;
    for t in [0.05, 0.2, 1.0] {
        for i in 0..n {
            let x = i as f64 * TAU / n as f64;
            gap = gap.max((eta_images_auto(t, x)?.value - eta_fourier_auto(t, x)?.value).abs());
        }
    }
    let mut mass_gap: f64 = 0.0;
    for t in [0.05, 0.5, 5.0] {
        mass_gap = mass_gap.max((kernel_l1(t)? - 1.0).abs());
    }
    manifest.flag("exponents_match", report.all_pass());
    manifest.number("derivative_l1_exponent", report.derivative_fit);
    manifest.number("images_vs_fourier_max_gap", gap);
    manifest.number("unit_mass_max_gap", mass_gap);
    manifest.number("semigroup_defect", semigroup_defect(0.1, 0.1, n)?);
    Ok(())
}
