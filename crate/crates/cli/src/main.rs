//! Command-line harness: configuration-driven runs of the stochastic
//! Galerkin traffic solvers with CSV/JSON outputs and a reproducibility
//! manifest per run.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use sgtraffic::analysis::{fd_scan, FdScan, FD_BIN_WIDTH};
use sgtraffic::chaos::{check_hyperbolicity, Basis, TripleProductTensor, HYPERBOLICITY_TOL};
use sgtraffic::config::{
    parse_config, ExperimentConfig, ExperimentKind, InitialConfig, ModelKind,
};
use sgtraffic::experiments::{
    run_meso2macro, run_micro2macro, Meso2MacroConfig, Micro2MacroConfig, RiemannSetup,
};
use sgtraffic::kinetic::{KineticGrid, KineticSolver};
use sgtraffic::macroscale::{Hesitation, MacroGrid, MacroSolver};
use sgtraffic::mc::{compare, mc_lwr_riemann};
use sgtraffic::micro::{platoon_initial, MicroParams, MicroSolver, SpeedLaw};

/// Exit code for configuration problems.
const EXIT_CONFIG: u8 = 2;
/// Exit code for numerical failures during a run.
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "sgtraffic", version, about = "Stochastic Galerkin traffic-flow simulator")]
struct Cli {
    /// Path to the experiment configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.directory` from the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results are byte-identical regardless of this value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Random seed; overrides `experiment.seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the hyperbolicity conditions of the configured basis.
    BasisCheck {
        /// Also dump the triple-product tensor as CSV (l,i,j,value).
        #[arg(long)]
        tensor_csv: bool,
    },
    /// Run the follow-the-leader platoon model.
    Micro,
    /// Run the BGK kinetic model.
    Kinetic,
    /// Run the LWR or ARZ macroscopic model.
    Macro,
    /// Sweep the right Riemann state and collect the fundamental diagram.
    FdScan,
    /// Compare the SG solution against a seeded Monte Carlo run.
    McCompare,
    /// Micro-to-macro convergence experiment.
    Micro2macro,
    /// Meso-to-macro relaxation sweep.
    Meso2macro,
}

enum CliError {
    Config(String),
    Numerical(String),
}

impl From<sgtraffic::SgError> for CliError {
    fn from(e: sgtraffic::SgError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("i/o error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

struct Ctx {
    cfg: ExperimentConfig,
    config_sha256: String,
    out_dir: PathBuf,
    seed: Option<u64>,
    outputs: Vec<String>,
}

impl Ctx {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::create_dir_all(&self.out_dir)?;
        std::fs::write(self.out_dir.join(name), contents)?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
        text.push('\n');
        self.write(name, &text)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool_version: &'a str,
    subcommand: &'a str,
    config_sha256: &'a str,
    seed: Option<u64>,
    outputs: &'a [String],
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Config("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    }

    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    let text = std::fs::read_to_string(config_path).map_err(|e| {
        CliError::Config(format!("cannot read {}: {e}", config_path.display()))
    })?;
    let cfg = parse_config(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let config_sha256 = hex_digest(text.as_bytes());

    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.directory.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut ctx = Ctx {
        cfg,
        config_sha256,
        out_dir,
        seed: cli.seed,
        outputs: Vec::new(),
    };

    let name = match &cli.command {
        Command::BasisCheck { tensor_csv } => {
            cmd_basis_check(&mut ctx, *tensor_csv)?;
            "basis-check"
        }
        Command::Micro => {
            cmd_micro(&mut ctx)?;
            "micro"
        }
        Command::Kinetic => {
            cmd_kinetic(&mut ctx)?;
            "kinetic"
        }
        Command::Macro => {
            cmd_macro(&mut ctx)?;
            "macro"
        }
        Command::FdScan => {
            cmd_fd_scan(&mut ctx)?;
            "fd-scan"
        }
        Command::McCompare => {
            cmd_mc_compare(&mut ctx)?;
            "mc-compare"
        }
        Command::Micro2macro => {
            cmd_micro2macro(&mut ctx)?;
            "micro2macro"
        }
        Command::Meso2macro => {
            cmd_meso2macro(&mut ctx)?;
            "meso2macro"
        }
    };

    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        subcommand: name,
        config_sha256: &ctx.config_sha256,
        seed: ctx.seed,
        outputs: &ctx.outputs,
    };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    text.push('\n');
    std::fs::write(ctx.out_dir.join("manifest.json"), text)?;
    Ok(())
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

fn build_basis(ctx: &Ctx) -> Result<(Basis, TripleProductTensor), CliError> {
    let basis = Basis::build(ctx.cfg.basis).map_err(|e| CliError::Config(e.to_string()))?;
    let tensor = TripleProductTensor::compute(&basis);
    Ok((basis, tensor))
}

fn macro_grid(ctx: &Ctx) -> MacroGrid {
    let g = ctx.cfg.grid;
    MacroGrid {
        a: g.a,
        b: g.b,
        n_x: g.n_x,
        cfl: g.cfl,
        t_f: g.t_f,
        boundary: g.boundary,
    }
}

fn riemann(ctx: &Ctx) -> Result<(f64, f64, f64, f64), CliError> {
    match &ctx.cfg.initial {
        InitialConfig::Riemann {
            u1,
            u2,
            rho_r,
            x_jump,
        } => Ok((*u1, *u2, *rho_r, *x_jump)),
        InitialConfig::Platoon { .. } => Err(CliError::Config(
            "this subcommand requires `initial.kind = riemann`".into(),
        )),
    }
}

fn cmd_basis_check(ctx: &mut Ctx, tensor_csv: bool) -> Result<(), CliError> {
    let (_, tensor) = build_basis(ctx)?;
    let report = check_hyperbolicity(&tensor, 100, HYPERBOLICITY_TOL);
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Numerical(format!("serialization failed: {e}")))?;
    println!("{json}");
    ctx.write_json("hyperbolicity.json", &report)?;
    if tensor_csv {
        let m = tensor.modes();
        let mut csv = String::from("l,i,j,value\n");
        for l in 0..m {
            let mat = tensor.matrix_l(l);
            for i in 0..m {
                for j in 0..m {
                    let _ = writeln!(csv, "{l},{i},{j},{}", mat[(i, j)]);
                }
            }
        }
        ctx.write("tensor.csv", &csv)?;
    }
    Ok(())
}

fn cmd_micro(ctx: &mut Ctx) -> Result<(), CliError> {
    let (basis, tensor) = build_basis(ctx)?;
    let ModelKind::Micro {
        second_order,
        leader_speed,
        leader_accel,
        dt,
    } = ctx.cfg.model
    else {
        return Err(CliError::Config("micro subcommand requires `model.kind = micro`".into()));
    };
    let InitialConfig::Platoon {
        n,
        car_length,
        x0,
        spacing,
        amp,
    } = ctx.cfg.initial
    else {
        return Err(CliError::Config("micro subcommand requires `initial.kind = platoon`".into()));
    };
    let params = MicroParams {
        n,
        car_length,
        speed_law: SpeedLaw::OptimalVelocity,
        leader_speed,
        leader_accel,
        ..MicroParams::defaults(n)
    };
    let solver = MicroSolver::new(params, &basis, &tensor)?;
    let state = platoon_initial(&params, &basis, x0, spacing, amp, second_order)?;
    let t_f = ctx.cfg.grid.t_f;
    let record_every = if ctx.cfg.output.snapshots.is_empty() {
        0
    } else {
        // uniform recording close to the requested cadence
        let min_gap = ctx
            .cfg
            .output
            .snapshots
            .iter()
            .fold(t_f, |acc, &t| acc.min(t.max(dt)));
        ((min_gap / dt).round() as usize).max(1)
    };
    let snapshots = solver.integrate(state, dt, t_f, record_every)?;

    let modes = basis.modes();
    let mut csv = String::from("t,vehicle,mode,x,v\n");
    for snap in &snapshots {
        for (i, x) in snap.x.iter().enumerate() {
            for k in 0..modes {
                let v = snap
                    .v
                    .as_ref()
                    .map(|vs| vs[i][k].to_string())
                    .unwrap_or_default();
                let _ = writeln!(csv, "{},{i},{k},{},{v}", snap.t, x[k]);
            }
        }
    }
    ctx.write("trajectory.csv", &csv)
}

fn cmd_kinetic(ctx: &mut Ctx) -> Result<(), CliError> {
    let (basis, tensor) = build_basis(ctx)?;
    let ModelKind::Kinetic {
        epsilon,
        hesitation,
    } = ctx.cfg.model
    else {
        return Err(CliError::Config("kinetic subcommand requires `model.kind = kinetic`".into()));
    };
    let (u1, u2, rho_r, x_jump) = riemann(ctx)?;
    let g = ctx.cfg.grid;
    let n_w = g
        .n_w
        .ok_or_else(|| CliError::Config("kinetic model requires `grid.n_w`".into()))?;
    let mut kgrid = KineticGrid::new(g.n_x, n_w, epsilon, Hesitation(hesitation), g.t_f);
    kgrid.a = g.a;
    kgrid.b = g.b;
    kgrid.boundary = g.boundary;
    if let Some(w_max) = g.w_max {
        kgrid.w_max = w_max;
        kgrid.eq_width = 0.2 * w_max;
    }
    let solver = KineticSolver::new(kgrid, &basis, &tensor)?;

    // start at local equilibrium for the Riemann density
    let mgrid = MacroGrid {
        a: g.a,
        b: g.b,
        n_x: g.n_x,
        cfl: g.cfl,
        t_f: g.t_f,
        boundary: g.boundary,
    };
    let lwr = MacroSolver::new_lwr(mgrid, &basis, &tensor)?;
    let rho0 = lwr.init_riemann(u1, u2, rho_r, x_jump, false)?.rho;
    let field = solver.equilibrium_field(&rho0)?;
    let run = solver.run(field, &ctx.cfg.output.snapshots)?;

    let modes = basis.modes();
    let mut csv = String::from("t,x,mode,rho,q\n");
    for snap in &run.snapshots {
        for j in 0..g.n_x {
            let x = kgrid.cell_center(j);
            for k in 0..modes {
                let _ = writeln!(csv, "{},{x},{k},{},{}", snap.t, snap.rho[j][k], snap.q[j][k]);
            }
        }
    }
    ctx.write("moments.csv", &csv)
}

#[derive(Serialize)]
struct MacroMeta {
    dt_history: Vec<f64>,
    lambda_history: Vec<f64>,
    conservation_drift: f64,
}

fn cmd_macro(ctx: &mut Ctx) -> Result<(), CliError> {
    let (basis, tensor) = build_basis(ctx)?;
    let grid = macro_grid(ctx);
    let (u1, u2, rho_r, x_jump) = riemann(ctx)?;
    let (solver, arz) = match ctx.cfg.model {
        ModelKind::Lwr => (MacroSolver::new_lwr(grid, &basis, &tensor)?, false),
        ModelKind::Arz {
            epsilon,
            hesitation,
        } => (
            MacroSolver::new_arz(grid, &basis, &tensor, Hesitation(hesitation), epsilon)?,
            true,
        ),
        _ => {
            return Err(CliError::Config(
                "macro subcommand requires `model.kind = lwr` or `arz`".into(),
            ))
        }
    };
    let field = solver.init_riemann(u1, u2, rho_r, x_jump, arz)?;
    let run = solver.run(field, &ctx.cfg.output.snapshots)?;

    let modes = basis.modes();
    let mut csv = String::from(if arz {
        "t,x_center,mode,rho,z\n"
    } else {
        "t,x_center,mode,rho\n"
    });
    for snap in &run.snapshots {
        for j in 0..grid.n_x {
            let x = grid.cell_center(j);
            for k in 0..modes {
                if arz {
                    let z = &snap.z.as_ref().expect("arz momentum")[j];
                    let _ = writeln!(csv, "{},{x},{k},{},{}", snap.t, snap.rho[j][k], z[k]);
                } else {
                    let _ = writeln!(csv, "{},{x},{k},{}", snap.t, snap.rho[j][k]);
                }
            }
        }
    }
    ctx.write("snapshots.csv", &csv)?;
    ctx.write_json(
        "run_meta.json",
        &MacroMeta {
            dt_history: run.dt_history,
            lambda_history: run.lambda_history,
            conservation_drift: run.conservation_drift,
        },
    )
}

fn cmd_fd_scan(ctx: &mut Ctx) -> Result<(), CliError> {
    let (basis, tensor) = build_basis(ctx)?;
    let grid = macro_grid(ctx);
    let (u1, u2, _, x_jump) = riemann(ctx)?;
    let ExperimentKind::FdScan { rho_r_list } = ctx.cfg.experiment.clone() else {
        return Err(CliError::Config(
            "fd-scan subcommand requires `experiment.kind = fdscan`".into(),
        ));
    };
    let scan = fd_scan(
        &basis,
        &tensor,
        grid,
        u1,
        u2,
        x_jump,
        &rho_r_list,
        FD_BIN_WIDTH,
    )?;

    let mut csv = String::from("run_id,rho_r,x,mean_rho,var_rho,mean_flux,var_flux\n");
    for p in &scan.points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            p.run_id, p.rho_r, p.x, p.mean_rho, p.var_rho, p.mean_flux, p.var_flux
        );
    }
    ctx.write("fd_points.csv", &csv)?;

    let mut bins = String::from(
        "rho_lo,rho_hi,count,flux_min,flux_max,flux_spread,mean_var_rho,mean_var_flux\n",
    );
    for b in &scan.bins {
        let _ = writeln!(
            bins,
            "{},{},{},{},{},{},{},{}",
            b.rho_lo,
            b.rho_hi,
            b.count,
            b.flux_min,
            b.flux_max,
            b.flux_spread(),
            b.mean_var_rho,
            b.mean_var_flux
        );
    }
    ctx.write("fd_bins.csv", &bins)?;

    if ctx.cfg.output.svg {
        ctx.write("fd_scatter.svg", &scatter_svg(&scan))?;
    }
    Ok(())
}

/// Minimal scatter plot of (mean density, mean flux).
fn scatter_svg(scan: &FdScan) -> String {
    let w = 640.0;
    let h = 480.0;
    let margin = 40.0;
    let fmax = scan
        .points
        .iter()
        .map(|p| p.mean_flux)
        .fold(0.25_f64, f64::max);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n"
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{margin}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        h - margin,
        w - margin,
        h - margin
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{margin}\" y1=\"{margin}\" x2=\"{margin}\" y2=\"{}\" stroke=\"black\"/>",
        h - margin
    );
    for p in &scan.points {
        let x = margin + p.mean_rho.clamp(0.0, 1.0) * (w - 2.0 * margin);
        let y = h - margin - (p.mean_flux / fmax).clamp(0.0, 1.0) * (h - 2.0 * margin);
        let _ = writeln!(svg, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.5\" fill=\"steelblue\" fill-opacity=\"0.5\"/>");
    }
    svg.push_str("</svg>\n");
    svg
}

#[derive(Serialize)]
struct McReport {
    samples: usize,
    seed: u64,
    atol: f64,
    mean_discrepancy: f64,
    linf_mean: f64,
    variance_discrepancy: f64,
    avg_std_error: f64,
    passed: bool,
}

fn cmd_mc_compare(ctx: &mut Ctx) -> Result<(), CliError> {
    let (basis, tensor) = build_basis(ctx)?;
    let grid = macro_grid(ctx);
    let (u1, u2, rho_r, x_jump) = riemann(ctx)?;
    if ctx.cfg.model != ModelKind::Lwr {
        return Err(CliError::Config(
            "mc-compare subcommand requires `model.kind = lwr`".into(),
        ));
    }
    let (samples, cfg_seed, atol) = match ctx.cfg.experiment {
        ExperimentKind::McCompare {
            samples,
            seed,
            atol,
        } => (samples, seed, atol),
        _ => (1000, 0, sgtraffic::mc::COMPARE_ATOL),
    };
    let seed = ctx.seed.unwrap_or(cfg_seed);
    ctx.seed = Some(seed);

    let solver = MacroSolver::new_lwr(grid, &basis, &tensor)?;
    let field = solver.init_riemann(u1, u2, rho_r, x_jump, false)?;
    let run = solver.run(field, &[])?;
    let last = run.snapshots.last().expect("final snapshot");
    let sg_mean: Vec<f64> = last.rho.iter().map(|c| c.mean()).collect();
    let sg_var: Vec<f64> = last.rho.iter().map(|c| c.variance()).collect();

    let mc = mc_lwr_riemann(grid, u1, u2, rho_r, x_jump, samples, seed)?;
    let report = compare(&sg_mean, &sg_var, &mc, atol)?;
    ctx.write_json(
        "mc_report.json",
        &McReport {
            samples,
            seed,
            atol,
            mean_discrepancy: report.mean_discrepancy,
            linf_mean: report.linf_mean,
            variance_discrepancy: report.variance_discrepancy,
            avg_std_error: report.avg_std_error,
            passed: report.passed,
        },
    )?;
    println!(
        "mc-compare: mean discrepancy {:.3e} (3·SE {:.3e}, atol {:.1e}) -> {}",
        report.mean_discrepancy,
        3.0 * report.avg_std_error,
        atol,
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(())
}

fn riemann_setup(ctx: &Ctx) -> Result<RiemannSetup, CliError> {
    let (u1, u2, rho_r, x_jump) = riemann(ctx)?;
    Ok(RiemannSetup {
        a: ctx.cfg.grid.a,
        b: ctx.cfg.grid.b,
        u1,
        u2,
        rho_r,
        x_jump,
    })
}

fn cmd_micro2macro(ctx: &mut Ctx) -> Result<(), CliError> {
    let (basis, tensor) = build_basis(ctx)?;
    let ExperimentKind::Micro2Macro { n_list } = ctx.cfg.experiment.clone() else {
        return Err(CliError::Config(
            "micro2macro subcommand requires `experiment.kind = micro2macro`".into(),
        ));
    };
    let ModelKind::Micro { dt, .. } = ctx.cfg.model else {
        return Err(CliError::Config("micro2macro requires `model.kind = micro`".into()));
    };
    let cfg = Micro2MacroConfig {
        setup: riemann_setup(ctx)?,
        t_f: ctx.cfg.grid.t_f,
        dt,
        n_cars: n_list,
        macro_nx: ctx.cfg.grid.n_x,
        cfl: ctx.cfg.grid.cfl,
        ..Micro2MacroConfig::baseline()
    };
    let res = run_micro2macro(&basis, &tensor, &cfg)?;

    let mut csv = String::from("n_cars,l1_mean,l1_var\n");
    for e in &res.entries {
        let _ = writeln!(csv, "{},{},{}", e.level, e.l1_mean, e.l1_var);
    }
    ctx.write("micro2macro.csv", &csv)?;

    let mut pts = String::from("n_cars,x,fine_mean,fine_var,coarse_mean,coarse_var\n");
    for e in &res.entries {
        for p in &e.points {
            let _ = writeln!(
                pts,
                "{},{},{},{},{},{}",
                e.level, p.x, p.fine_mean, p.fine_var, p.coarse_mean, p.coarse_var
            );
        }
    }
    ctx.write("micro2macro_points.csv", &pts)
}

fn cmd_meso2macro(ctx: &mut Ctx) -> Result<(), CliError> {
    let (basis, tensor) = build_basis(ctx)?;
    let ExperimentKind::Meso2Macro { epsilon_list } = ctx.cfg.experiment.clone() else {
        return Err(CliError::Config(
            "meso2macro subcommand requires `experiment.kind = meso2macro`".into(),
        ));
    };
    let ModelKind::Kinetic { hesitation, .. } = ctx.cfg.model else {
        return Err(CliError::Config("meso2macro requires `model.kind = kinetic`".into()));
    };
    let n_w = ctx
        .cfg
        .grid
        .n_w
        .ok_or_else(|| CliError::Config("meso2macro requires `grid.n_w`".into()))?;
    let cfg = Meso2MacroConfig {
        setup: riemann_setup(ctx)?,
        t_f: ctx.cfg.grid.t_f,
        n_x: ctx.cfg.grid.n_x,
        n_w,
        hesitation,
        epsilons: epsilon_list,
        cfl: ctx.cfg.grid.cfl,
        ..Meso2MacroConfig::baseline()
    };
    let res = run_meso2macro(&basis, &tensor, &cfg)?;

    let mut csv = String::from("epsilon,l1_mean,l1_var,initial_moment_mismatch\n");
    for e in &res.entries {
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            e.epsilon, e.l1_mean, e.l1_var, e.initial_moment_mismatch
        );
    }
    ctx.write("meso2macro.csv", &csv)?;

    let mut pts = String::from("epsilon,x,fine_mean,fine_var,coarse_mean,coarse_var\n");
    for e in &res.entries {
        for p in &e.points {
            let _ = writeln!(
                pts,
                "{},{},{},{},{},{}",
                e.epsilon, p.x, p.fine_mean, p.fine_var, p.coarse_mean, p.coarse_var
            );
        }
    }
    ctx.write("meso2macro_points.csv", &pts)
}
