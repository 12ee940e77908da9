//! One function per subcommand. Each writes its CSV into the output directory and
//! returns `key=value` summary lines.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rough_core::catalog::{delay_vector_field, vector_field};
use rough_core::dde::{self, solve_dde_with, InitialSegment};
use rough_core::fbm::{check_hurst, ls_slope, mc_scaling_exponent, mc_validate_area, FbmSampler, ScalingLevel};
use rough_core::increments::{Grid, Path1};
use rough_core::io;
use rough_core::lift::{lift_linear, verify_delayed, verify_lift, DelayedLift};
use rough_core::sde::{march, picard_solve, solve_sde_with, DEFAULT_GAMMA};
use rayon::prelude::*;
use rough_core::tensor::{max_abs, max_diff};

use crate::config::{DriverConfig, McMode, RunConfig, SdeMethod, Signal, Solver};
use crate::CliError;

/// Largest relative audit residual still reported as passing.
pub const AUDIT_TOL: f64 = 1e-12;
/// Ratio between the reference resolution and the finest rung of a convergence ladder.
pub const REFERENCE_FACTOR: usize = 16;
/// Ladder errors below this multiple of the solution scale count as exact.
const EXACT_TOL: f64 = 1e-12;

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub inject_fault: bool,
}

pub type Summary = Vec<(String, String)>;

fn kv(key: &str, value: impl ToString) -> (String, String) {
    (key.to_string(), value.to_string())
}

fn create(ctx: &Context, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    std::fs::create_dir_all(&ctx.out)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", ctx.out.display())))?;
    let path = ctx.out.join(name);
    let file = File::create(&path).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn step(cfg: &DriverConfig, n: usize) -> Result<f64, CliError> {
    if !(cfg.t_end > 0.0 && cfg.t_end.is_finite()) {
        return Err(CliError::Config(format!("T must be positive, got {}", cfg.t_end)));
    }
    if n == 0 {
        return Err(CliError::Config("n must be positive".into()));
    }
    Ok(cfg.t_end / n as f64)
}

/// Cells before the origin needed to cover the largest delay.
fn history_cells(delays: &[f64], h: f64) -> Result<usize, CliError> {
    let probe = Grid::new(0.0, h, 1)?;
    let mut most = 0;
    for &r in delays {
        let k = probe.cells_in(r)?;
        if k <= 0 {
            return Err(CliError::Config(format!("delays must be positive, got {r}")));
        }
        most = most.max(k as usize);
    }
    Ok(most)
}

/// fBm on `n` cells of `[0, T]`, extended back to `-max(delays)`.
fn sample_driver(cfg: &DriverConfig, n: usize, seed: u64) -> Result<Path1, CliError> {
    check_hurst(cfg.hurst)?;
    if !n.is_power_of_two() {
        return Err(CliError::Config(format!("n must be a power of two, got {n}")));
    }
    if cfg.d == 0 {
        return Err(CliError::Config("d must be at least 1".into()));
    }
    let h = step(cfg, n)?;
    let before = history_cells(&cfg.delays, h)?;
    let grid = Grid::new(-(before as f64) * h, h, before + n)?;
    Ok(FbmSampler::new(cfg.hurst, grid)?.sample_path(cfg.d, seed)?)
}

fn driver(cfg: &DriverConfig) -> Result<Path1, CliError> {
    match &cfg.input {
        Some(file) => {
            let f = File::open(file).map_err(|e| CliError::Config(format!("cannot read {file}: {e}")))?;
            Ok(io::read_path(f)?)
        }
        None => sample_driver(cfg, cfg.n, cfg.seed),
    }
}

/// The part of `x` on `t ≥ 0` when the grid starts before the origin.
fn forward_part(x: &Path1) -> Result<Path1, CliError> {
    match x.grid().index_of(0.0) {
        Some(o) if o > 0 => Ok(x.restrict(o, x.grid().n() - o)?),
        _ => Ok(x.clone()),
    }
}

pub fn sample(ctx: &Context) -> Result<Summary, CliError> {
    let cfg = &ctx.config.driver;
    let x = sample_driver(cfg, cfg.n, cfg.seed)?;
    let (path, w) = create(ctx, ctx.config.sample.output.as_deref().unwrap_or("sample.csv"))?;
    io::write_path(&x, "x", w)?;
    Ok(vec![kv("rows", x.grid().len()), kv("dim", x.dim()), kv("output", path.display())])
}

pub fn lift(ctx: &Context) -> Result<Summary, CliError> {
    let x = driver(&ctx.config.driver)?;
    let name = ctx.config.lift.output.clone().unwrap_or_else(|| "lift".into());
    let prefix = name.trim_end_matches(".csv");
    let mut summary = Vec::new();
    let mut files = Vec::new();
    if ctx.config.driver.delays.is_empty() {
        let lift = lift_linear(&x);
        let d = lift.dim();
        let (p, w) = create(ctx, &format!("{prefix}_area.csv"))?;
        io::write_area_cells(lift.area_cells(), 0, d, w)?;
        files.push(p);
        let (p, w) = create(ctx, &format!("{prefix}_volume.csv"))?;
        io::write_volume_cells(lift.volume_cells(), 0, d, w)?;
        files.push(p);
        summary.push(kv("cells", lift.n()));
    } else {
        let dl = DelayedLift::new(x, &ctx.config.driver.delays)?;
        let d = dl.dim();
        for k in dl.area_shifts().collect::<Vec<_>>() {
            let fam = dl.area_family(k)?;
            let (p, w) = create(ctx, &format!("{prefix}_area_k{k}.csv"))?;
            io::write_area_cells(fam.cells(), fam.range().0, d, w)?;
            files.push(p);
        }
        for (k1, k2) in dl.volume_pairs().collect::<Vec<_>>() {
            let fam = dl.volume_family(k1, k2)?;
            let (p, w) = create(ctx, &format!("{prefix}_volume_k{k1}_{k2}.csv"))?;
            io::write_volume_cells(fam.cells(), fam.range().0, d, w)?;
            files.push(p);
        }
        summary.push(kv("cells", dl.grid().n()));
        summary.push(kv("origin", dl.origin()));
    }
    summary.push(kv("files", files.len()));
    summary.extend(files.iter().map(|p| kv("output", p.display())));
    Ok(summary)
}

pub fn validate(ctx: &Context) -> Result<Summary, CliError> {
    let x = driver(&ctx.config.driver)?;
    let inject = ctx.inject_fault || ctx.config.validate.inject_fault;
    let report = if ctx.config.driver.delays.is_empty() {
        let mut lift = lift_linear(&x);
        if inject {
            let d = lift.dim();
            let delta = 1e-3 * max_abs(lift.area_cells()).max(1.0);
            lift.inject_area_fault(lift.n() / 2, 0, (d - 1).min(1), delta);
        }
        verify_lift(&lift)
    } else {
        if inject {
            return Err(CliError::Config("fault injection applies to undelayed lifts only".into()));
        }
        verify_delayed(&DelayedLift::new(x, &ctx.config.driver.delays)?)
    };
    let (path, w) = create(ctx, ctx.config.validate.output.as_deref().unwrap_or("validate.csv"))?;
    io::write_audit(&report, w)?;
    let worst = report.max_relative();
    Ok(vec![
        kv("rows", report.rows.len()),
        kv("max_relative", format!("{worst:.3e}")),
        kv("pass", worst <= AUDIT_TOL),
        kv("output", path.display()),
    ])
}

fn with_output(mut summary: Summary, path: &Path) -> Summary {
    summary.push(kv("output", path.display()));
    summary
}

fn parse_report(text: &str) -> Summary {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| kv(k, v))
        .collect()
}

pub fn solve_sde(ctx: &Context) -> Result<Summary, CliError> {
    let cfg = &ctx.config.solve_sde;
    let x = forward_part(&driver(&ctx.config.driver)?)?;
    let sigma = vector_field(&ctx.config.field.name, cfg.y0.len(), x.dim(), &ctx.config.field.params)?;
    let lift = lift_linear(&x);
    let report = match cfg.method {
        SdeMethod::Step3 => solve_sde_with(&cfg.y0, &sigma, &lift, cfg.gamma.unwrap_or(DEFAULT_GAMMA))?,
        SdeMethod::Picard => picard_solve(&cfg.y0, &sigma, &lift, cfg.tol, cfg.max_iter)?,
    };
    let (path, w) = create(ctx, cfg.output.as_deref().unwrap_or("solve_sde.csv"))?;
    io::write_path(&report.y, "y", w)?;
    Ok(with_output(parse_report(&report.to_key_value()), &path))
}

fn delayed_problem(
    x: Path1,
    delays: &[f64],
    start: &[f64],
) -> Result<(DelayedLift, InitialSegment), CliError> {
    if delays.is_empty() {
        return Err(CliError::Config("the delay solver needs at least one delay".into()));
    }
    let dl = DelayedLift::new(x, delays)?;
    let h = dl.grid().h();
    let xi = InitialSegment::constant(start, h, dl.origin())?;
    Ok((dl, xi))
}

pub fn solve_dde(ctx: &Context) -> Result<Summary, CliError> {
    let cfg = &ctx.config.solve_dde;
    let delays = &ctx.config.driver.delays;
    let (dl, xi) = delayed_problem(driver(&ctx.config.driver)?, delays, &cfg.xi)?;
    let sigma = delay_vector_field(&ctx.config.field.name, cfg.xi.len(), dl.dim(), delays.len(), &ctx.config.field.params)?;
    let sol = solve_dde_with(&xi, &sigma, &dl, cfg.gamma.unwrap_or(DEFAULT_GAMMA))?;
    let (path, w) = create(ctx, cfg.output.as_deref().unwrap_or("solve_dde.csv"))?;
    io::write_path(&sol.report.y, "y", w)?;
    let mut summary = parse_report(&sol.report.to_key_value());
    summary.push(kv("history_rows", dl.origin()));
    Ok(with_output(summary, &path))
}

/// The driving signal of a convergence ladder at `n` cells of `[0, T]` (plus history).
fn ladder_signal(ctx: &Context, signal: Signal, n: usize, seed: u64, reference: Option<&Path1>) -> Result<Path1, CliError> {
    let cfg = &ctx.config.driver;
    let h = step(cfg, n)?;
    let before = history_cells(&cfg.delays, h)?;
    let grid = Grid::new(-(before as f64) * h, h, before + n)?;
    match signal {
        Signal::Identity => Ok(Path1::from_fn(grid, cfg.d, |t, o| o.iter_mut().for_each(|v| *v = t))?),
        Signal::Sine => Ok(Path1::from_fn(grid, cfg.d, |t, o| {
            o.iter_mut().enumerate().for_each(|(i, v)| *v = ((i + 1) as f64 * t).sin())
        })?),
        Signal::Fbm => match reference {
            Some(fine) => Ok(fine.coarsen(fine.grid().n() / grid.n())?),
            None => sample_driver(cfg, n, seed),
        },
    }
}

/// Solution at the grid points of `[0, T]` only.
fn ladder_solve(ctx: &Context, x: Path1) -> Result<Path1, CliError> {
    let cfg = &ctx.config.convergence;
    let field = &ctx.config.field;
    match cfg.solver {
        Solver::Sde => {
            let sigma = vector_field(&field.name, cfg.y0.len(), x.dim(), &field.params)?;
            Ok(march(&cfg.y0, &sigma, &lift_linear(&forward_part(&x)?))?)
        }
        Solver::Dde => {
            let delays = &ctx.config.driver.delays;
            let (dl, xi) = delayed_problem(x, delays, &cfg.y0)?;
            let sigma = delay_vector_field(&field.name, cfg.y0.len(), dl.dim(), delays.len(), &field.params)?;
            let y = dde::solve_dde(&xi, &sigma, &dl)?.y;
            Ok(forward_part(&y)?)
        }
    }
}

/// Sup-norm error of every rung against the reference, for one draw of the signal.
fn ladder_errors(ctx: &Context, seed: u64, fine_n: usize) -> Result<(Vec<f64>, f64), CliError> {
    let cfg = &ctx.config.convergence;
    let fine_x = ladder_signal(ctx, cfg.signal, fine_n, seed, None)?;
    let reference = ladder_solve(ctx, fine_x.clone())?;
    let mut errs = Vec::with_capacity(cfg.rungs.len());
    for &n in &cfg.rungs {
        let y = ladder_solve(ctx, ladder_signal(ctx, cfg.signal, n, seed, Some(&fine_x))?)?;
        let r = reference.coarsen(fine_n / n)?;
        errs.push(max_diff(y.values(), r.values()));
    }
    Ok((errs, reference.sup_norm()))
}

/// Errors of a ladder of grids against a reference solved on `16 ×` the finest rung.
/// Smooth signals use one run; fBm errors are averaged over `samples` seeded draws.
pub fn convergence(ctx: &Context) -> Result<Summary, CliError> {
    let cfg = &ctx.config.convergence;
    let rungs = &cfg.rungs;
    if rungs.len() < 2 || rungs.windows(2).any(|w| w[0] >= w[1]) || rungs[0] == 0 {
        return Err(CliError::Config("rungs must hold at least two increasing cell counts".into()));
    }
    let fine_n = REFERENCE_FACTOR * rungs[rungs.len() - 1];
    if rungs.iter().any(|r| !fine_n.is_multiple_of(*r)) {
        return Err(CliError::Config(format!("every rung must divide the reference resolution {fine_n}")));
    }
    let draws = if cfg.signal == Signal::Fbm { cfg.samples } else { 1 };
    if draws == 0 {
        return Err(CliError::Config("samples must be at least 1".into()));
    }
    let seed = ctx.config.driver.seed;
    let runs = (0..draws as u64)
        .into_par_iter()
        .map(|i| ladder_errors(ctx, seed.wrapping_add(i), fine_n))
        .collect::<Result<Vec<_>, _>>()?;
    let mut errs = vec![0.0; rungs.len()];
    let mut scale = 1.0_f64;
    for (e, s) in &runs {
        errs.iter_mut().zip(e).for_each(|(acc, v)| *acc += v / draws as f64);
        scale = scale.max(*s);
    }
    let hs: Vec<f64> = rungs.iter().map(|&n| ctx.config.driver.t_end / n as f64).collect();

    let (path, w) = create(ctx, cfg.output.as_deref().unwrap_or("convergence.csv"))?;
    let rows: Vec<Vec<String>> = rungs
        .iter()
        .zip(&hs)
        .zip(&errs)
        .map(|((n, h), e)| vec![n.to_string(), io::fmt(*h), io::fmt(*e)])
        .collect();
    io::write_table(&["n", "h", "error"], &rows, w)?;

    let exact = errs.iter().all(|&e| e <= EXACT_TOL * scale);
    let order = if exact {
        "exact".to_string()
    } else {
        let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.max(f64::MIN_POSITIVE).ln()).collect();
        format!("{:.4}", ls_slope(&xs, &ys))
    };
    let monotone = errs.windows(2).all(|w| w[1] < w[0]);
    Ok(vec![
        kv("order", order),
        kv("monotone", monotone),
        kv("reference_cells", fine_n),
        kv("samples", draws),
        kv("max_error", io::fmt(errs.iter().cloned().fold(0.0, f64::max))),
        kv("output", path.display()),
    ])
}

pub fn mc_area(ctx: &Context) -> Result<Summary, CliError> {
    let cfg = &ctx.config.mc_area;
    if cfg.samples < 2 {
        return Err(CliError::Config(format!("N must be at least 2, got {}", cfg.samples)));
    }
    let (path, w) = create(ctx, cfg.output.as_deref().unwrap_or("mc_area.csv"))?;
    match cfg.mode {
        McMode::Area => {
            let r = mc_validate_area(cfg.hurst, cfg.v1, cfg.samples, cfg.n, cfg.tau, cfg.seed)?;
            io::write_area_validations(std::slice::from_ref(&r), w)?;
            Ok(vec![
                kv("mean", io::fmt(r.mean)),
                kv("stderr", io::fmt(r.stderr)),
                kv("closed_form", io::fmt(r.closed_form)),
                kv("z", format!("{:.4}", r.z)),
                kv("output", path.display()),
            ])
        }
        McMode::Scaling => {
            let level = match cfg.level {
                2 => ScalingLevel::Area,
                3 => ScalingLevel::Volume,
                other => return Err(CliError::Config(format!("level must be 2 or 3, got {other}"))),
            };
            let r = mc_scaling_exponent(
                level,
                cfg.hurst,
                (cfg.v1, cfg.v2),
                &cfg.taus,
                cfg.samples,
                cfg.cells_per_min_tau,
                cfg.seed,
            )?;
            io::write_scaling(&r, w)?;
            Ok(vec![kv("slope", format!("{:.4}", r.slope)), kv("output", path.display())])
        }
    }
}
