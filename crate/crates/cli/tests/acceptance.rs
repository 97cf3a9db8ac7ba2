//! Acceptance gate: one test per release criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing criteria as well.

use std::process::Command;

use sgtraffic::analysis::{fd_scan, FD_BIN_WIDTH};
use sgtraffic::chaos::{
    check_hyperbolicity, Basis, BasisFamily, BasisSpec, GalerkinVector, TripleProductTensor,
    HYPERBOLICITY_TOL,
};
use sgtraffic::experiments::{
    run_meso2macro, run_micro2macro, Meso2MacroConfig, Micro2MacroConfig, RiemannSetup,
};
use sgtraffic::kinetic::{build_equilibrium, um1_residual, um2_residual, KineticGrid};
use sgtraffic::macroscale::{scalar, BoundaryMode, Hesitation, MacroGrid, MacroSolver};
use sgtraffic::mc::{compare, mc_lwr_riemann, COMPARE_ATOL};

fn report(criterion: usize, name: &str, ok: bool) {
    println!(
        "ACCEPTANCE criterion {criterion} ({name}): {}",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} ({name}) failed");
}

fn haar(order: usize) -> (Basis, TripleProductTensor) {
    let b = Basis::build(BasisSpec::new(BasisFamily::Haar, order)).unwrap();
    let t = TripleProductTensor::compute(&b);
    (b, t)
}

fn baseline_grid(t_f: f64) -> MacroGrid {
    MacroGrid {
        a: 0.0,
        b: 2.0,
        n_x: 200,
        cfl: 0.45,
        t_f,
        boundary: BoundaryMode::Outflow,
    }
}

/// Criterion 1: fundamental-diagram baseline. A 21-value sweep of the right
/// Riemann state at K = 15 produces a scatter cloud in the congested range
/// with per-bin flux spread well above the free-flow spread, and flux
/// variance below density variance at high density.
#[test]
fn criterion_1_fundamental_diagram_baseline() {
    let (basis, tensor) = haar(15);
    let grid = baseline_grid(1.0);
    let rho_r_list: Vec<f64> = (0..21).map(|i| i as f64 / 20.0).collect();
    let scan = fd_scan(
        &basis, &tensor, grid, 0.75, 0.95, 1.0, &rho_r_list, FD_BIN_WIDTH,
    )
    .unwrap();

    // The raw per-bin flux spread is dominated by the slope of the
    // deterministic flux curve across the 0.02-wide bin, so the scatter is
    // measured as the spread of deviations from that curve: a deterministic
    // state sits exactly on it, an uncertain state falls below by its
    // variance. Per-bin spread of these residuals captures the cloud.
    let residual = |mean_rho: f64, mean_flux: f64| mean_flux - mean_rho * (1.0 - mean_rho);
    let bin_spread = |lo: f64, hi: f64| -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for p in scan
            .points
            .iter()
            .filter(|p| p.mean_rho >= lo && p.mean_rho < hi)
        {
            let r = residual(p.mean_rho, p.mean_flux);
            min = min.min(r);
            max = max.max(r);
        }
        if min.is_finite() {
            max - min
        } else {
            0.0
        }
    };

    // (b) free-flow reference: bins entirely below ρ = 0.3
    let mut free_flow_spread = 0.0_f64;
    let mut congested_spread = 0.0_f64;
    let mut lo = 0.0;
    while lo < 1.0 {
        let s = bin_spread(lo, lo + FD_BIN_WIDTH);
        if lo + FD_BIN_WIDTH <= 0.3 {
            free_flow_spread = free_flow_spread.max(s);
        }
        // (a) congested cloud: bins intersecting (0.35, 0.83)
        if lo + FD_BIN_WIDTH > 0.35 && lo < 0.83 {
            congested_spread = congested_spread.max(s);
        }
        lo += FD_BIN_WIDTH;
    }
    let cloud_ok = congested_spread >= 5.0 * free_flow_spread && congested_spread >= 1e-3;

    // (c) high density: flux variance below density variance for every bin
    // that carries uncertainty (the fully jammed region is deterministic
    // with both variances identically zero)
    let high_bins: Vec<_> = scan
        .bins
        .iter()
        .filter(|b| b.rho_lo >= 0.85 && b.mean_var_rho > 1e-8)
        .collect();
    let high_ok =
        !high_bins.is_empty() && high_bins.iter().all(|b| b.mean_var_flux < b.mean_var_rho);

    println!(
        "  criterion 1 detail: free-flow spread {free_flow_spread:.3e}, congested spread {congested_spread:.3e}"
    );
    report(
        1,
        "fundamental-diagram baseline",
        cloud_ok && high_ok && free_flow_spread < 5e-3,
    );
}

/// Criterion 2: hyperbolicity certification. Haar K = 15 passes all three
/// conditions at 1e-10; Legendre K = 3 violates the commuting-matrices
/// condition by more than 0.05.
#[test]
fn criterion_2_hyperbolicity_certificates() {
    let (_, haar_tensor) = haar(15);
    let haar_report = check_hyperbolicity(&haar_tensor, 100, HYPERBOLICITY_TOL);

    let lb = Basis::build(BasisSpec::new(BasisFamily::Legendre, 3)).unwrap();
    let lt = TripleProductTensor::compute(&lb);
    let leg_report = check_hyperbolicity(&lt, 100, HYPERBOLICITY_TOL);

    report(
        2,
        "hyperbolicity certification",
        haar_report.passed && !leg_report.passed && leg_report.a1_max_commutator > 0.05,
    );
}

/// Criterion 3: Monte Carlo cross-validation. SG at K = 15 stays within
/// max(3·SE, 5e-3) of the seeded M = 1000 reference at every snapshot, and
/// the discrepancy against one fixed reference is nonincreasing in K.
#[test]
fn criterion_3_monte_carlo_cross_validation() {
    let grid = baseline_grid(1.0);
    let (u1, u2, rho_r, x_jump) = (0.75, 0.95, 0.2, 1.0);
    let snapshot_times = [0.25, 0.5, 0.75];

    // per-snapshot check at K = 15
    let (basis, tensor) = haar(15);
    let solver = MacroSolver::new_lwr(grid, &basis, &tensor).unwrap();
    let field = solver
        .init_riemann(u1, u2, rho_r, x_jump, false)
        .unwrap();
    let run = solver.run(field, &snapshot_times).unwrap();
    let mut all_snapshots_ok = true;
    for snap in &run.snapshots {
        let mut snap_grid = grid;
        snap_grid.t_f = snap.t;
        let mc = mc_lwr_riemann(snap_grid, u1, u2, rho_r, x_jump, 1000, 7).unwrap();
        let mean: Vec<f64> = snap.rho.iter().map(|c| c.mean()).collect();
        let var: Vec<f64> = snap.rho.iter().map(|c| c.variance()).collect();
        let rep = compare(&mean, &var, &mc, COMPARE_ATOL).unwrap();
        all_snapshots_ok &= rep.passed;
    }

    // convergence in K. The M = 1000 sampling noise (≈4e-4 average absolute
    // deviation) would swamp the K-to-K differences (≈5e-5), so the trend is
    // measured against the K → ∞ limit of the scheme itself: a high-order
    // run whose remaining truncation error is far below the sweep's.
    let (b_ref, t_ref) = haar(63);
    let s_ref = MacroSolver::new_lwr(grid, &b_ref, &t_ref).unwrap();
    let f_ref = s_ref.init_riemann(u1, u2, rho_r, x_jump, false).unwrap();
    let r_ref = s_ref.run(f_ref, &[]).unwrap();
    let mean_ref: Vec<f64> = r_ref
        .snapshots
        .last()
        .unwrap()
        .rho
        .iter()
        .map(|c| c.mean())
        .collect();

    let mut discrepancies = Vec::new();
    for order in [3usize, 7, 15] {
        let (b, t) = haar(order);
        let s = MacroSolver::new_lwr(grid, &b, &t).unwrap();
        let f = s.init_riemann(u1, u2, rho_r, x_jump, false).unwrap();
        let r = s.run(f, &[]).unwrap();
        let last = r.snapshots.last().unwrap();
        let d: f64 = last
            .rho
            .iter()
            .zip(&mean_ref)
            .map(|(c, m)| (c.mean() - m).abs())
            .sum::<f64>()
            / grid.n_x as f64;
        discrepancies.push(d);
    }
    let nonincreasing = discrepancies.windows(2).all(|w| w[1] <= w[0] + 1e-12);

    println!(
        "  criterion 3 detail: snapshots ok = {all_snapshots_ok}, K-sweep discrepancies = {discrepancies:?}"
    );
    report(
        3,
        "Monte Carlo cross-validation",
        all_snapshots_ok && nonincreasing,
    );
}

/// Criterion 4: micro → macro convergence. With L = 1/N the L¹ error of the
/// reconstructed stochastic local density against the SG-LWR field is
/// nonincreasing over N ∈ {100, 200, 400}.
#[test]
fn criterion_4_micro_to_macro_convergence() {
    let (basis, tensor) = haar(7);
    let cfg = Micro2MacroConfig {
        setup: RiemannSetup::baseline(),
        t_f: 0.5,
        dt: 1e-3,
        n_cars: vec![100, 200, 400],
        // the reference grid is finer than the baseline so its own
        // discretization floor sits below the micro convergence trend
        macro_nx: 800,
        cfl: 0.45,
        window: (0.2, 1.8),
    };
    let res = run_micro2macro(&basis, &tensor, &cfg).unwrap();
    let mean_errs: Vec<f64> = res.entries.iter().map(|e| e.l1_mean).collect();
    let ok = mean_errs.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    println!("  criterion 4 detail: L1 mean errors over N = {mean_errs:?}");
    report(4, "micro-to-macro convergence", ok);
}

/// Criterion 5: meso → macro relaxation sweep. The L¹ distance between the
/// kinetic moments and the SG-ARZ solution decreases in ε down to the
/// discretization floor; every equilibrium build satisfies the zeroth-moment
/// identity to 1e-10 and the first-moment identity to O(Δw).
#[test]
fn criterion_5_meso_to_macro_sweep() {
    let (basis, tensor) = haar(7);
    let cfg = Meso2MacroConfig {
        setup: RiemannSetup::baseline(),
        t_f: 0.5,
        n_x: 100,
        n_w: 20,
        hesitation: 0.5,
        epsilons: vec![1e-1, 1e-2, 1e-3],
        cfl: 0.45,
        window: (0.2, 1.8),
    };
    let res = run_meso2macro(&basis, &tensor, &cfg).unwrap();
    let errs: Vec<f64> = res.entries.iter().map(|e| e.l1_mean).collect();
    // decreasing down to a floor: each step either improves or stays within
    // the discretization floor O(Δx + Δw)
    let floor = 0.02 + res.dw;
    let sweep_ok = errs.windows(2).all(|w| w[1] <= w[0] + 1e-12 || w[1] <= floor)
        && *errs.last().unwrap() <= floor;

    // moment identities of the equilibrium projection over a density sweep
    let grid = KineticGrid::new(4, 20, 1e-2, Hesitation(0.5), 1.0);
    let fine = KineticGrid::new(4, 40, 1e-2, Hesitation(0.5), 1.0);
    let mut um_ok = true;
    for base in [0.2, 0.5, 0.8] {
        let rho = basis.project(|xi| base + 0.1 * xi).unwrap();
        let m = build_equilibrium(&rho, &grid, &basis).unwrap();
        um_ok &= um1_residual(&m, &rho, grid.dw()) <= 1e-10;
        um_ok &= um2_residual(&m, &rho, &grid, &tensor).unwrap() <= 2.0 * grid.dw();
        let mf = build_equilibrium(&rho, &fine, &basis).unwrap();
        um_ok &= um1_residual(&mf, &rho, fine.dw()) <= 1e-10;
        um_ok &= um2_residual(&mf, &rho, &fine, &tensor).unwrap() <= 2.0 * fine.dw();
    }
    report(5, "meso-to-macro relaxation sweep", sweep_ok && um_ok);
}

/// Criterion 6: structural invariants — per-mode conservation on periodic
/// runs, K = 0 equivalence with the deterministic solver, deterministic-input
/// degeneracy, Galerkin product symmetry, and the pointwise-projection
/// identity of the Haar SG flux.
#[test]
fn criterion_6_structural_invariants() {
    use rand::Rng;
    use rand::SeedableRng;

    // (i) periodic conservation per mode over 1000 steps
    let (b3, t3) = haar(3);
    let mut grid = MacroGrid {
        a: 0.0,
        b: 2.0,
        n_x: 50,
        cfl: 0.45,
        t_f: f64::INFINITY,
        boundary: BoundaryMode::Periodic,
    };
    grid.t_f = 1e9;
    let solver = MacroSolver::new_lwr(grid, &b3, &t3).unwrap();
    let mut field = solver.init_riemann(0.55, 0.75, 0.2, 1.0, false).unwrap();
    let m0 = field.mode_masses(grid.dx());
    for _ in 0..1000 {
        solver.step(&mut field, f64::INFINITY).unwrap();
    }
    let drift = (field.mode_masses(grid.dx()) - m0).amax();
    let conservation_ok = drift <= 1e-12;

    // (ii) K = 0 matches the deterministic scalar solver
    let (b0, t0) = haar(0);
    let dgrid = baseline_grid(0.5);
    let s0 = MacroSolver::new_lwr(dgrid, &b0, &t0).unwrap();
    let f0 = s0.init_riemann(0.8, 0.8, 0.2, 1.0, false).unwrap();
    let rho0: Vec<f64> = f0.rho.iter().map(|c| c[0]).collect();
    let run0 = s0.run(f0, &[]).unwrap();
    let sg: Vec<f64> = run0.snapshots.last().unwrap().rho.iter().map(|c| c[0]).collect();
    let det = scalar::lwr_solve(&rho0, dgrid.dx(), dgrid.cfl, dgrid.t_f, dgrid.boundary);
    let k0_ok = sg
        .iter()
        .zip(&det)
        .all(|(a, b)| (a - b).abs() <= 1e-10);

    // (iii) deterministic-input degeneracy at K = 15
    let (b15, t15) = haar(15);
    let s15 = MacroSolver::new_lwr(dgrid, &b15, &t15).unwrap();
    let f15 = s15.init_riemann(0.8, 0.8, 0.2, 1.0, false).unwrap();
    let run15 = s15.run(f15, &[]).unwrap();
    let degeneracy_ok = run15
        .snapshots
        .last()
        .unwrap()
        .rho
        .iter()
        .all(|c| (1..c.len()).all(|k| c[k].abs() <= 1e-13));

    // (iv) Galerkin product symmetry over 1000 random pairs
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let m = t15.modes();
    let mut symmetry_ok = true;
    for _ in 0..1000 {
        let u = GalerkinVector(nalgebra::DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)));
        let z = GalerkinVector(nalgebra::DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)));
        let uz = t15.galerkin_product(&u, &z).unwrap();
        let zu = t15.galerkin_product(&z, &u).unwrap();
        symmetry_ok &= (uz.0 - zu.0).amax() <= 1e-14;
    }

    // (v) Haar SG flux equals the pointwise-projected flux
    let rho = b15.project(|xi| 0.75 + 0.2 * xi).unwrap();
    let sg_flux = sgtraffic::macroscale::lwr_flux(&rho, &t15).unwrap();
    let pw_flux = b15
        .project(|xi| {
            let r = b15.reconstruct(&rho, xi).unwrap();
            r * (1.0 - r)
        })
        .unwrap();
    let flux_ok = (sg_flux.0 - pw_flux.0).amax() <= 1e-12;

    report(
        6,
        "structural invariants",
        conservation_ok && k0_ok && degeneracy_ok && symmetry_ok && flux_ok,
    );
}

/// Criterion 7: reproducibility. Identical config and seed produce
/// byte-identical CSV/JSON outputs regardless of the worker count.
#[test]
fn criterion_7_reproducibility() {
    let bin = env!("CARGO_BIN_EXE_sgtraffic");
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("fd.cfg");
    std::fs::write(
        &cfg_path,
        "basis.family = haar\n\
         basis.k = 7\n\
         model.kind = lwr\n\
         grid.n_x = 100\n\
         grid.t_f = 0.5\n\
         initial.kind = riemann\n\
         initial.x_jump = 1.0\n\
         experiment.kind = fdscan\n\
         experiment.rho_r_list = 0.1, 0.3, 0.5, 0.7, 0.9\n",
    )
    .unwrap();
    let mc_path = dir.path().join("mc.cfg");
    std::fs::write(
        &mc_path,
        "basis.family = haar\n\
         basis.k = 7\n\
         model.kind = lwr\n\
         grid.n_x = 100\n\
         grid.t_f = 0.5\n\
         initial.kind = riemann\n\
         experiment.kind = mccompare\n\
         experiment.samples = 200\n\
         experiment.seed = 11\n",
    )
    .unwrap();

    let run = |sub: &str, cfg: &std::path::Path, out: &str, workers: &str| {
        let out_dir = dir.path().join(out);
        let status = Command::new(bin)
            .args([
                sub,
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
                "--workers",
                workers,
            ])
            .status()
            .unwrap();
        assert!(status.success(), "{sub} with {workers} workers failed");
        out_dir
    };

    let a = run("fd-scan", &cfg_path, "fd1", "1");
    let b = run("fd-scan", &cfg_path, "fd4", "4");
    let c = run("mc-compare", &mc_path, "mc1", "1");
    let d = run("mc-compare", &mc_path, "mc4", "4");

    let identical = |x: &std::path::Path, y: &std::path::Path, name: &str| -> bool {
        std::fs::read(x.join(name)).unwrap() == std::fs::read(y.join(name)).unwrap()
    };
    let ok = identical(&a, &b, "fd_points.csv")
        && identical(&a, &b, "fd_bins.csv")
        && identical(&a, &b, "manifest.json")
        && identical(&c, &d, "mc_report.json")
        && identical(&c, &d, "manifest.json");
    report(7, "reproducibility across worker counts", ok);
}
