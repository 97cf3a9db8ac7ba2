//! Finite-volume stochastic Galerkin solvers for the LWR and ARZ models.
//!
//! Both systems are discretized with a conservative local Lax-Friedrichs
//! scheme on a uniform grid. Wave speeds are obtained by sampling the
//! reconstructed field at the quadrature nodes of the basis; for bases
//! satisfying the commutation conditions (A1)-(A3) the spectrum of the
//! coupled coefficient system is exactly the sampled deterministic spectrum.

use nalgebra::DVector;

use crate::chaos::{check_hyperbolicity, Basis, GalerkinVector, TripleProductTensor, HYPERBOLICITY_TOL};
use crate::error::{Result, SgError};

/// Safety factor applied on top of the sampled wave speed.
pub const WAVE_SPEED_SAFETY: f64 = 1.1;
/// Floor for the wave-speed estimate (sonic states).
pub const WAVE_SPEED_FLOOR: f64 = 1e-6;
/// Allowed reconstruction overshoot outside [0, 1].
pub const DENSITY_MONITOR_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    /// Zero-order extrapolation ghost cells.
    Outflow,
    Periodic,
}

/// Uniform 1-D spatial grid and time-stepping controls.
#[derive(Debug, Clone, Copy)]
pub struct MacroGrid {
    pub a: f64,
    pub b: f64,
    pub n_x: usize,
    pub cfl: f64,
    pub t_f: f64,
    pub boundary: BoundaryMode,
}

impl MacroGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > self.a) || self.n_x == 0 {
            return Err(SgError::InvalidParameter(format!(
                "invalid interval [{}, {}] with {} cells",
                self.a, self.b, self.n_x
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(SgError::InvalidParameter(format!(
                "CFL number {} outside (0, 1]",
                self.cfl
            )));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.n_x as f64
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        self.a + (j as f64 + 0.5) * self.dx()
    }
}

/// Hesitation function h(ρ) = c·ρ (c = 0 disables it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hesitation(pub f64);

impl Hesitation {
    pub fn eval(&self, rho: f64) -> f64 {
        self.0 * rho
    }

    pub fn deriv(&self) -> f64 {
        self.0
    }

    /// Galerkin coefficients of h(ρ); exact for the linear law.
    pub fn coeffs(&self, rho: &GalerkinVector) -> GalerkinVector {
        GalerkinVector(&rho.0 * self.0)
    }
}

/// Equilibrium speed V_eq(ρ) = 1 − ρ (Greenshields).
pub fn veq(rho: f64) -> f64 {
    1.0 - rho
}

/// Galerkin coefficients of V_eq(ρ̂) = e_1 − ρ̂.
pub fn veq_coeffs(rho: &GalerkinVector) -> GalerkinVector {
    let mut v = -&rho.0;
    v[0] += 1.0;
    GalerkinVector(v)
}

/// Per-cell Galerkin coefficients of the conserved variables.
#[derive(Debug, Clone)]
pub struct MacroField {
    pub rho: Vec<GalerkinVector>,
    /// Momentum-like variable ẑ for ARZ; `None` for LWR.
    pub z: Option<Vec<GalerkinVector>>,
    pub t: f64,
}

impl MacroField {
    pub fn n_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn is_arz(&self) -> bool {
        self.z.is_some()
    }

    /// Total mass of each coefficient mode.
    pub fn mode_masses(&self, dx: f64) -> DVector<f64> {
        let modes = self.rho[0].len();
        let mut acc = DVector::zeros(modes);
        for c in &self.rho {
            acc += &c.0;
        }
        acc * dx
    }
}

/// SG-LWR flux 𝒫(ρ̂) V̂_eq(ρ̂) with V̂_eq = e_1 − ρ̂.
pub fn lwr_flux(rho: &GalerkinVector, tensor: &TripleProductTensor) -> Result<GalerkinVector> {
    tensor.galerkin_product(rho, &veq_coeffs(rho))
}

/// SG-ARZ fluxes (ẑ − 𝒫(ρ̂)ĥ(ρ̂), 𝒫(ẑ)𝒫⁻¹(ρ̂)ẑ − 𝒫(ẑ)ĥ(ρ̂)).
pub fn arz_flux(
    rho: &GalerkinVector,
    z: &GalerkinVector,
    h: Hesitation,
    tensor: &TripleProductTensor,
) -> Result<(GalerkinVector, GalerkinVector)> {
    let h_hat = h.coeffs(rho);
    let rho_h = tensor.galerkin_product(rho, &h_hat)?;
    let f_rho = GalerkinVector(&z.0 - &rho_h.0);
    let w = tensor.galerkin_solve(rho, z)?;
    let zw = tensor.galerkin_product(z, &w)?;
    let z_h = tensor.galerkin_product(z, &h_hat)?;
    let f_z = GalerkinVector(&zw.0 - &z_h.0);
    Ok((f_rho, f_z))
}

/// Local Lax-Friedrichs numerical flux on coefficient vectors.
pub fn llf_numerical_flux(
    u_l: &GalerkinVector,
    u_r: &GalerkinVector,
    f_l: &GalerkinVector,
    f_r: &GalerkinVector,
    lambda: f64,
) -> GalerkinVector {
    GalerkinVector(0.5 * (&f_l.0 + &f_r.0) - (0.5 * lambda) * (&u_r.0 - &u_l.0))
}

/// Finite-volume solver for one basis/tensor pair.
pub struct MacroSolver<'a> {
    pub grid: MacroGrid,
    basis: &'a Basis,
    tensor: &'a TripleProductTensor,
    pub h: Hesitation,
    /// ARZ relaxation time; `None` runs the homogeneous system.
    pub epsilon: Option<f64>,
    /// Allowed reconstruction overshoot before a run aborts.
    pub monitor_slack: f64,
}

impl<'a> MacroSolver<'a> {
    pub fn new_lwr(grid: MacroGrid, basis: &'a Basis, tensor: &'a TripleProductTensor) -> Result<Self> {
        grid.validate()?;
        Ok(MacroSolver {
            grid,
            basis,
            tensor,
            h: Hesitation(0.0),
            epsilon: None,
            monitor_slack: DENSITY_MONITOR_SLACK,
        })
    }

    /// ARZ solver; refuses bases that fail the hyperbolicity certificate.
    pub fn new_arz(
        grid: MacroGrid,
        basis: &'a Basis,
        tensor: &'a TripleProductTensor,
        h: Hesitation,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        grid.validate()?;
        let report = check_hyperbolicity(tensor, 50, HYPERBOLICITY_TOL);
        if !report.passed {
            return Err(SgError::NotHyperbolic);
        }
        Ok(MacroSolver {
            grid,
            basis,
            tensor,
            h,
            epsilon,
            monitor_slack: DENSITY_MONITOR_SLACK,
        })
    }

    pub fn basis(&self) -> &Basis {
        self.basis
    }

    pub fn tensor(&self) -> &TripleProductTensor {
        self.tensor
    }

    /// Largest characteristic speed over cells and quadrature nodes.
    pub fn max_wave_speed(&self, field: &MacroField) -> Result<f64> {
        let mut lam: f64 = 0.0;
        for j in 0..field.n_cells() {
            lam = lam.max(self.cell_wave_speed(field, j)?);
        }
        Ok((lam * WAVE_SPEED_SAFETY).max(WAVE_SPEED_FLOOR))
    }

    fn cell_wave_speed(&self, field: &MacroField, j: usize) -> Result<f64> {
        let nq = self.basis.quad_nodes().len();
        let mut lam: f64 = 0.0;
        match &field.z {
            None => {
                for q in 0..nq {
                    let rho = self.basis.reconstruct_at_node(&field.rho[j], q);
                    if !rho.is_finite() {
                        return Err(SgError::NonFinite(format!(
                            "density reconstruction at cell {j}, node {q}"
                        )));
                    }
                    lam = lam.max((1.0 - 2.0 * rho).abs());
                }
            }
            Some(z) => {
                for q in 0..nq {
                    let rho = self.basis.reconstruct_at_node(&field.rho[j], q);
                    let zq = self.basis.reconstruct_at_node(&z[j], q);
                    if !rho.is_finite() || !zq.is_finite() {
                        return Err(SgError::NonFinite(format!(
                            "reconstruction at cell {j}, node {q}"
                        )));
                    }
                    let v = zq / rho - self.h.eval(rho);
                    lam = lam.max(v.abs().max((v - rho * self.h.deriv()).abs()));
                }
            }
        }
        Ok(lam)
    }

    fn monitor_density(&self, field: &MacroField) -> Result<()> {
        let nq = self.basis.quad_nodes().len();
        for j in 0..field.n_cells() {
            for q in 0..nq {
                let rho = self.basis.reconstruct_at_node(&field.rho[j], q);
                if rho < -self.monitor_slack || rho > 1.0 + self.monitor_slack {
                    return Err(SgError::DensityOutOfRange {
                        cell: j,
                        node: q,
                        value: rho,
                    });
                }
            }
        }
        Ok(())
    }

    fn neighbor(&self, j: isize, n: usize) -> usize {
        match self.grid.boundary {
            BoundaryMode::Outflow => j.clamp(0, n as isize - 1) as usize,
            BoundaryMode::Periodic => j.rem_euclid(n as isize) as usize,
        }
    }

    /// One conservative update; returns the time step actually taken.
    ///
    /// The time step is recomputed from the CFL condition each call and is
    /// clipped so the run lands exactly on `t_stop`.
    pub fn step(&self, field: &mut MacroField, t_stop: f64) -> Result<f64> {
        let n = field.n_cells();
        let dx = self.grid.dx();
        let mut cell_lam = vec![0.0; n];
        let mut lam_max: f64 = 0.0;
        for j in 0..n {
            cell_lam[j] = self.cell_wave_speed(field, j)?;
            lam_max = lam_max.max(cell_lam[j]);
        }
        lam_max = (lam_max * WAVE_SPEED_SAFETY).max(WAVE_SPEED_FLOOR);
        let mut dt = self.grid.cfl * dx / lam_max;
        if field.t + dt > t_stop {
            dt = t_stop - field.t;
        }
        if dt <= 0.0 {
            return Ok(0.0);
        }

        // physical fluxes per cell
        let is_arz = field.is_arz();
        let mut f_rho = Vec::with_capacity(n);
        let mut f_z: Vec<GalerkinVector> = Vec::with_capacity(if is_arz { n } else { 0 });
        for j in 0..n {
            match &field.z {
                None => f_rho.push(lwr_flux(&field.rho[j], self.tensor)?),
                Some(z) => {
                    let (fr, fz) = arz_flux(&field.rho[j], &z[j], self.h, self.tensor)?;
                    f_rho.push(fr);
                    f_z.push(fz);
                }
            }
        }

        // interface fluxes, n+1 of them
        let modes = field.rho[0].len();
        let mut new_rho = field.rho.clone();
        let mut new_z = field.z.clone();
        let scale = dt / dx;
        let mut flux_rho_left = GalerkinVector::zeros(modes);
        let mut flux_z_left = GalerkinVector::zeros(modes);
        for jf in 0..=n {
            let jl = self.neighbor(jf as isize - 1, n);
            let jr = self.neighbor(jf as isize, n);
            let lam = (cell_lam[jl].max(cell_lam[jr]) * WAVE_SPEED_SAFETY).max(WAVE_SPEED_FLOOR);
            let fr = llf_numerical_flux(&field.rho[jl], &field.rho[jr], &f_rho[jl], &f_rho[jr], lam);
            let fz = if is_arz {
                let z = field.z.as_ref().unwrap();
                llf_numerical_flux(&z[jl], &z[jr], &f_z[jl], &f_z[jr], lam)
            } else {
                GalerkinVector::zeros(modes)
            };
            if jf > 0 {
                let j = jf - 1;
                new_rho[j].0 -= scale * (&fr.0 - &flux_rho_left.0);
                if let Some(nz) = new_z.as_mut() {
                    nz[j].0 -= scale * (&fz.0 - &flux_z_left.0);
                }
            }
            flux_rho_left = fr;
            flux_z_left = fz;
        }

        // ARZ relaxation source, applied exactly on the split step
        if let (Some(nz), Some(eps)) = (new_z.as_mut(), self.epsilon) {
            let decay = (-dt / eps).exp();
            for j in 0..n {
                let target = self.relaxation_target(&new_rho[j])?;
                nz[j].0 = &target.0 + decay * (&nz[j].0 - &target.0);
            }
        }

        field.rho = new_rho;
        field.z = new_z;
        field.t += dt;
        self.monitor_density(field)?;
        Ok(dt)
    }

    /// Equilibrium momentum 𝒫(V_eq(ρ̂))ρ̂ + 𝒫(h(ρ̂))ρ̂.
    pub fn relaxation_target(&self, rho: &GalerkinVector) -> Result<GalerkinVector> {
        let a = self.tensor.galerkin_product(&veq_coeffs(rho), rho)?;
        let b = self.tensor.galerkin_product(&self.h.coeffs(rho), rho)?;
        Ok(GalerkinVector(&a.0 + &b.0))
    }

    /// Riemann initial data: ρ_l(ξ) = u1 + (u2 − u1)ξ left of the jump,
    /// deterministic ρ_r to the right. The ARZ variant sets the momentum
    /// from v_0 = V_eq(ρ_0).
    pub fn init_riemann(
        &self,
        u1: f64,
        u2: f64,
        rho_r: f64,
        x_jump: f64,
        arz: bool,
    ) -> Result<MacroField> {
        for v in [u1, u2, rho_r] {
            if !(0.0..=1.0).contains(&v) {
                return Err(SgError::InvalidParameter(format!(
                    "Riemann datum {v} outside [0, 1]"
                )));
            }
        }
        let left = self.basis.project(|xi| u1 + (u2 - u1) * xi)?;
        let right = GalerkinVector::deterministic(rho_r, self.basis.modes());
        let mut rho = Vec::with_capacity(self.grid.n_x);
        for j in 0..self.grid.n_x {
            if self.grid.cell_center(j) < x_jump {
                rho.push(left.clone());
            } else {
                rho.push(right.clone());
            }
        }
        let z = if arz {
            let mut zs = Vec::with_capacity(self.grid.n_x);
            for r in &rho {
                zs.push(self.relaxation_target(r)?);
            }
            Some(zs)
        } else {
            None
        };
        Ok(MacroField { rho, z, t: 0.0 })
    }

    /// Runs to `t_f`, recording snapshots at the requested times (the final
    /// time is always included) plus the Δt and λ histories.
    pub fn run(&self, mut field: MacroField, snapshot_times: &[f64]) -> Result<MacroRun> {
        let mut times: Vec<f64> = snapshot_times
            .iter()
            .copied()
            .filter(|&t| t > field.t && t < self.grid.t_f)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.push(self.grid.t_f);
        times.dedup();

        let dx = self.grid.dx();
        let initial_mass = field.mode_masses(dx);
        let mut run = MacroRun {
            snapshots: Vec::new(),
            dt_history: Vec::new(),
            lambda_history: Vec::new(),
            conservation_drift: 0.0,
        };
        for &t_stop in &times {
            while field.t < t_stop - 1e-14 {
                let lam = self.max_wave_speed(&field)?;
                let dt = self.step(&mut field, t_stop)?;
                if dt == 0.0 {
                    break;
                }
                run.dt_history.push(dt);
                run.lambda_history.push(lam);
            }
            run.snapshots.push(field.clone());
        }
        if self.grid.boundary == BoundaryMode::Periodic {
            let drift = (field.mode_masses(dx) - initial_mass).amax();
            run.conservation_drift = drift;
        }
        Ok(run)
    }
}

/// Output of a macroscopic run.
#[derive(Debug, Clone)]
pub struct MacroRun {
    pub snapshots: Vec<MacroField>,
    pub dt_history: Vec<f64>,
    pub lambda_history: Vec<f64>,
    /// Max per-mode mass drift; only tracked for periodic boundaries.
    pub conservation_drift: f64,
}

/// Deterministic scalar counterparts of the SG solvers; these double as the
/// K = 0 reference and the per-sample Monte Carlo path.
pub mod scalar {
    use super::BoundaryMode;

    /// Scalar LWR with Greenshields flux, local Lax-Friedrichs.
    pub fn lwr_solve(
        rho0: &[f64],
        dx: f64,
        cfl: f64,
        t_f: f64,
        boundary: BoundaryMode,
    ) -> Vec<f64> {
        let n = rho0.len();
        let mut rho = rho0.to_vec();
        let mut t = 0.0;
        let flux = |r: f64| r * (1.0 - r);
        let speed = |r: f64| (1.0 - 2.0 * r).abs();
        while t < t_f - 1e-14 {
            let lam_max = rho
                .iter()
                .map(|&r| speed(r))
                .fold(super::WAVE_SPEED_FLOOR, f64::max)
                * super::WAVE_SPEED_SAFETY;
            let mut dt = cfl * dx / lam_max;
            if t + dt > t_f {
                dt = t_f - t;
            }
            let idx = |j: isize| -> usize {
                match boundary {
                    BoundaryMode::Outflow => j.clamp(0, n as isize - 1) as usize,
                    BoundaryMode::Periodic => j.rem_euclid(n as isize) as usize,
                }
            };
            let mut new = rho.clone();
            let mut left_flux = 0.0;
            for jf in 0..=n {
                let jl = idx(jf as isize - 1);
                let jr = idx(jf as isize);
                let lam = (speed(rho[jl]).max(speed(rho[jr])) * super::WAVE_SPEED_SAFETY)
                    .max(super::WAVE_SPEED_FLOOR);
                let f = 0.5 * (flux(rho[jl]) + flux(rho[jr])) - 0.5 * lam * (rho[jr] - rho[jl]);
                if jf > 0 {
                    new[jf - 1] -= dt / dx * (f - left_flux);
                }
                left_flux = f;
            }
            rho = new;
            t += dt;
        }
        rho
    }
}
