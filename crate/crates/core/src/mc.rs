//! Non-intrusive Monte Carlo reference solver.
//!
//! Samples the random input ξ, runs the deterministic counterpart of the
//! model per sample, and estimates moments with unbiased estimators. The
//! reduction is a pairwise tree sum over the sample index, so results are
//! identical regardless of how many workers computed the samples.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Result, SgError};
use crate::macroscale::{scalar, MacroGrid};

/// Moment estimates from a seeded Monte Carlo run.
#[derive(Debug, Clone)]
pub struct McRun {
    pub samples: usize,
    pub seed: u64,
    pub model: String,
    pub grid: MacroGrid,
    /// Per-cell sample mean.
    pub mean: Vec<f64>,
    /// Per-cell unbiased sample variance.
    pub variance: Vec<f64>,
    /// Per-cell standard error of the mean.
    pub std_error: Vec<f64>,
}

/// Pairwise tree sum; deterministic for a fixed element order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}

/// Monte Carlo solve of the LWR Riemann problem with uncertain left state
/// ρ_l(ξ) = u1 + (u2 − u1)ξ, ξ ~ U(0,1).
pub fn mc_lwr_riemann(
    grid: MacroGrid,
    u1: f64,
    u2: f64,
    rho_r: f64,
    x_jump: f64,
    samples: usize,
    seed: u64,
) -> Result<McRun> {
    if samples < 2 {
        return Err(SgError::InvalidParameter(format!(
            "Monte Carlo needs at least 2 samples, got {samples}"
        )));
    }
    grid.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xis: Vec<f64> = (0..samples).map(|_| rng.gen_range(0.0..1.0)).collect();

    let dx = grid.dx();
    let fields: Vec<Vec<f64>> = xis
        .par_iter()
        .map(|&xi| {
            let rho_l = u1 + (u2 - u1) * xi;
            let rho0: Vec<f64> = (0..grid.n_x)
                .map(|j| {
                    if grid.cell_center(j) < x_jump {
                        rho_l
                    } else {
                        rho_r
                    }
                })
                .collect();
            scalar::lwr_solve(&rho0, dx, grid.cfl, grid.t_f, grid.boundary)
        })
        .collect();

    let m = samples as f64;
    let mut mean = Vec::with_capacity(grid.n_x);
    let mut variance = Vec::with_capacity(grid.n_x);
    let mut std_error = Vec::with_capacity(grid.n_x);
    let mut col = vec![0.0; samples];
    for j in 0..grid.n_x {
        for (s, f) in fields.iter().enumerate() {
            col[s] = f[j];
        }
        let mu = pairwise_sum(&col) / m;
        let sq: Vec<f64> = col.iter().map(|&x| (x - mu) * (x - mu)).collect();
        let var = pairwise_sum(&sq) / (m - 1.0);
        mean.push(mu);
        variance.push(var);
        std_error.push((var / m).sqrt());
    }

    Ok(McRun {
        samples,
        seed,
        model: "lwr".into(),
        grid,
        mean,
        variance,
        std_error,
    })
}

/// Discrepancy report between an SG snapshot and a Monte Carlo run.
#[derive(Debug, Clone)]
pub struct CompareReport {
    /// Mean absolute per-cell discrepancy of the mean field.
    pub mean_discrepancy: f64,
    pub linf_mean: f64,
    /// Mean absolute per-cell discrepancy of the variance field.
    pub variance_discrepancy: f64,
    /// Average Monte Carlo standard error over the cells.
    pub avg_std_error: f64,
    pub atol: f64,
    pub passed: bool,
}

/// Default absolute floor for the mean-field comparison.
pub const COMPARE_ATOL: f64 = 5e-3;

/// Compares SG per-cell (mean, variance) against the MC estimates.
///
/// Passes iff the mean discrepancy is within max(3·SE, atol).
pub fn compare(
    sg_mean: &[f64],
    sg_variance: &[f64],
    mc: &McRun,
    atol: f64,
) -> Result<CompareReport> {
    if sg_mean.len() != mc.mean.len() {
        return Err(SgError::GridMismatch(format!(
            "SG field has {} cells, MC run has {}",
            sg_mean.len(),
            mc.mean.len()
        )));
    }
    let n = sg_mean.len() as f64;
    let mut l1 = 0.0;
    let mut linf: f64 = 0.0;
    let mut l1_var = 0.0;
    for j in 0..sg_mean.len() {
        let d = (sg_mean[j] - mc.mean[j]).abs();
        l1 += d;
        linf = linf.max(d);
        l1_var += (sg_variance[j] - mc.variance[j]).abs();
    }
    let mean_discrepancy = l1 / n;
    let variance_discrepancy = l1_var / n;
    let avg_std_error = pairwise_sum(&mc.std_error) / n;
    let passed = mean_discrepancy <= (3.0 * avg_std_error).max(atol);
    Ok(CompareReport {
        mean_discrepancy,
        linf_mean: linf,
        variance_discrepancy,
        avg_std_error,
        atol,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chaos::{Basis, BasisFamily, BasisSpec, TripleProductTensor};
    use crate::macroscale::{BoundaryMode, MacroSolver};

    fn grid() -> MacroGrid {
        MacroGrid {
            a: 0.0,
            b: 2.0,
            n_x: 100,
            cfl: 0.45,
            t_f: 0.5,
            boundary: BoundaryMode::Outflow,
        }
    }

    #[test]
    fn deterministic_input_has_zero_variance() {
        let mc = mc_lwr_riemann(grid(), 0.8, 0.8, 0.2, 1.0, 16, 1).unwrap();
        for v in &mc.variance {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let a = mc_lwr_riemann(grid(), 0.75, 0.95, 0.2, 1.0, 64, 99).unwrap();
        let b = mc_lwr_riemann(grid(), 0.75, 0.95, 0.2, 1.0, 64, 99).unwrap();
        for j in 0..a.mean.len() {
            assert_eq!(a.mean[j].to_bits(), b.mean[j].to_bits());
            assert_eq!(a.variance[j].to_bits(), b.variance[j].to_bits());
        }
    }

    #[test]
    fn standard_error_scales_like_clt() {
        // averaged over repetitions, SE(4M)/SE(M) ≈ 1/2
        let mut ratios = Vec::new();
        for seed in 0..6u64 {
            let small = mc_lwr_riemann(grid(), 0.75, 0.95, 0.2, 1.0, 250, seed).unwrap();
            let large = mc_lwr_riemann(grid(), 0.75, 0.95, 0.2, 1.0, 1000, seed + 100).unwrap();
            let se_small = pairwise_sum(&small.std_error) / 100.0;
            let se_large = pairwise_sum(&large.std_error) / 100.0;
            ratios.push(se_large / se_small);
        }
        let avg = pairwise_sum(&ratios) / ratios.len() as f64;
        assert!((avg - 0.5).abs() < 0.1, "ratio {avg}");
    }

    #[test]
    fn uniform_field_variance_estimator_is_consistent() {
        // t_f = 0 keeps the field at the initial data, whose variance on the
        // left half is exactly (u2-u1)²/12
        let mut g = grid();
        g.t_f = 1e-9;
        let mc = mc_lwr_riemann(g, 0.75, 0.95, 0.2, 1.0, 20_000, 5).unwrap();
        let exact = crate::reference::uniform_variance(0.75, 0.95);
        assert!((mc.variance[10] - exact).abs() < 1e-4);
        assert!((mc.mean[10] - 0.85).abs() < 1e-3);
    }

    #[test]
    fn sg_matches_mc_on_deterministic_problem() {
        let b = Basis::build(BasisSpec::new(BasisFamily::Haar, 3)).unwrap();
        let t = TripleProductTensor::compute(&b);
        let solver = MacroSolver::new_lwr(grid(), &b, &t).unwrap();
        let field = solver.init_riemann(0.8, 0.8, 0.2, 1.0, false).unwrap();
        let run = solver.run(field, &[]).unwrap();
        let last = run.snapshots.last().unwrap();
        let sg_mean: Vec<f64> = last.rho.iter().map(|c| c[0]).collect();
        let sg_var: Vec<f64> = last.rho.iter().map(|c| c.variance()).collect();
        let mc = mc_lwr_riemann(grid(), 0.8, 0.8, 0.2, 1.0, 8, 1).unwrap();
        let report = compare(&sg_mean, &sg_var, &mc, 1e-10).unwrap();
        assert!(report.mean_discrepancy <= 1e-10, "{report:?}");
        assert!(report.passed);
    }

    #[test]
    fn mutated_sg_flux_fails_comparison() {
        // harness sanity: a deliberately wrong SG mean must not pass
        let mc = mc_lwr_riemann(grid(), 0.75, 0.95, 0.2, 1.0, 500, 7).unwrap();
        let wrong: Vec<f64> = mc.mean.iter().map(|m| m + 0.05).collect();
        let vars = vec![0.0; mc.mean.len()];
        let report = compare(&wrong, &vars, &mc, COMPARE_ATOL).unwrap();
        assert!(!report.passed);
    }

    #[test]
    fn grid_mismatch_is_an_error() {
        let mc = mc_lwr_riemann(grid(), 0.75, 0.95, 0.2, 1.0, 8, 1).unwrap();
        assert!(compare(&[0.0; 5], &[0.0; 5], &mc, 1e-3).is_err());
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(mc_lwr_riemann(grid(), 0.75, 0.95, 0.2, 1.0, 1, 1).is_err());
    }
}
