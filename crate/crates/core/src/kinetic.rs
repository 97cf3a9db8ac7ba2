//! Stochastic Galerkin BGK solver.
//!
//! The mass distribution over position and desired speed is advected with
//! the mode-coupled speed (w·Id − 𝒫(h(ρ̂))) and relaxed toward a projected
//! equilibrium profile. The splitting is transport → relaxation; the
//! relaxation substep is the exact solution of the linear ODE, which stays
//! robust for stiff relaxation times.

use nalgebra::DMatrix;

use crate::chaos::{Basis, GalerkinVector, TripleProductTensor};
use crate::error::{Result, SgError};
use crate::macroscale::{veq_coeffs, BoundaryMode, Hesitation};

/// CFL bound for the transport substep.
pub const KINETIC_CFL_LIMIT: f64 = 0.9;

/// Space-velocity grid and model parameters for the BGK solver.
#[derive(Debug, Clone, Copy)]
pub struct KineticGrid {
    pub a: f64,
    pub b: f64,
    pub n_x: usize,
    /// Desired-speed interval [0, w_max].
    pub w_max: f64,
    pub n_w: usize,
    /// Relaxation time ε > 0.
    pub epsilon: f64,
    pub h: Hesitation,
    /// Width δ_w of the equilibrium box profile.
    pub eq_width: f64,
    pub boundary: BoundaryMode,
    pub t_f: f64,
}

impl KineticGrid {
    /// Defaults: W = [0, 1 + max h] so the equilibrium support is never
    /// truncated at moderate densities, box width 0.2·w_max.
    pub fn new(n_x: usize, n_w: usize, epsilon: f64, h: Hesitation, t_f: f64) -> Self {
        let w_max = 1.0 + h.eval(1.0).max(0.0);
        KineticGrid {
            a: 0.0,
            b: 2.0,
            n_x,
            w_max,
            n_w,
            epsilon,
            h,
            eq_width: 0.2 * w_max,
            boundary: BoundaryMode::Outflow,
            t_f,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b > self.a) || self.n_x == 0 || self.n_w == 0 {
            return Err(SgError::InvalidParameter("degenerate kinetic grid".into()));
        }
        if !(self.epsilon > 0.0) || !(self.w_max > 0.0) || !(self.eq_width > 0.0) {
            return Err(SgError::InvalidParameter(
                "epsilon, w_max and the equilibrium width must be positive".into(),
            ));
        }
        // hesitation must be nonnegative and nondecreasing on a sample grid
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=10 {
            let v = self.h.eval(i as f64 / 10.0);
            if v < 0.0 || v < prev {
                return Err(SgError::InvalidParameter(
                    "hesitation function must be nonnegative and nondecreasing".into(),
                ));
            }
            prev = v;
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.n_x as f64
    }

    pub fn dw(&self) -> f64 {
        self.w_max / self.n_w as f64
    }

    pub fn w_center(&self, iw: usize) -> f64 {
        (iw as f64 + 0.5) * self.dw()
    }

    pub fn cell_center(&self, j: usize) -> f64 {
        self.a + (j as f64 + 0.5) * self.dx()
    }
}

/// Coefficients ĝ(x-cell, w-cell) of the mass distribution.
#[derive(Debug, Clone)]
pub struct KineticField {
    g: Vec<GalerkinVector>,
    pub n_x: usize,
    pub n_w: usize,
    pub t: f64,
}

impl KineticField {
    pub fn zeros(n_x: usize, n_w: usize, modes: usize) -> Self {
        KineticField {
            g: vec![GalerkinVector::zeros(modes); n_x * n_w],
            n_x,
            n_w,
            t: 0.0,
        }
    }

    pub fn at(&self, ix: usize, iw: usize) -> &GalerkinVector {
        &self.g[ix * self.n_w + iw]
    }

    pub fn at_mut(&mut self, ix: usize, iw: usize) -> &mut GalerkinVector {
        &mut self.g[ix * self.n_w + iw]
    }

    pub fn modes(&self) -> usize {
        self.g[0].len()
    }
}

/// Per-cell density and flux moments (ρ̂, q̂) by the midpoint rule in w.
pub fn kinetic_moments(
    field: &KineticField,
    grid: &KineticGrid,
) -> (Vec<GalerkinVector>, Vec<GalerkinVector>) {
    let dw = grid.dw();
    let modes = field.modes();
    let mut rho = Vec::with_capacity(field.n_x);
    let mut q = Vec::with_capacity(field.n_x);
    for ix in 0..field.n_x {
        let mut r = GalerkinVector::zeros(modes);
        let mut qq = GalerkinVector::zeros(modes);
        for iw in 0..field.n_w {
            let g = field.at(ix, iw);
            let w = grid.w_center(iw);
            r.0 += dw * &g.0;
            qq.0 += (w * dw) * &g.0;
        }
        rho.push(r);
        q.push(qq);
    }
    (rho, q)
}

/// Projected equilibrium M̂(w; ρ̂) for one cell: per quadrature node a box
/// profile of mass ρ(ξ) centered at V_eq(ρ) + h(ρ), clipped to W and
/// renormalized, then projected over ξ.
pub fn build_equilibrium(
    rho: &GalerkinVector,
    grid: &KineticGrid,
    basis: &Basis,
) -> Result<Vec<GalerkinVector>> {
    let modes = basis.modes();
    let n_w = grid.n_w;
    let dw = grid.dw();
    let mut m_hat = vec![GalerkinVector::zeros(modes); n_w];
    for q in 0..basis.quad_nodes().len() {
        let r = basis.reconstruct_at_node(rho, q);
        if !(-1e-12..=1.0 + 1e-12).contains(&r) {
            return Err(SgError::DensityOutOfRange {
                cell: usize::MAX,
                node: q,
                value: r,
            });
        }
        if r <= 1e-12 {
            // vacuum: the equilibrium profile carries no mass
            continue;
        }
        let mu = (1.0 - r) + grid.h.eval(r);
        let lo = (mu - 0.5 * grid.eq_width).max(0.0);
        let hi = (mu + 0.5 * grid.eq_width).min(grid.w_max);
        if hi <= lo {
            return Err(SgError::InvalidParameter(format!(
                "equilibrium support empty at mean speed {mu}"
            )));
        }
        // discrete box: overlap of each w-cell with [lo, hi], renormalized
        // so the discrete mass is exactly ρ(ξ)
        let mut masses = vec![0.0; n_w];
        let mut total = 0.0;
        for (iw, m) in masses.iter_mut().enumerate() {
            let c_lo = iw as f64 * dw;
            let c_hi = c_lo + dw;
            let ov = (c_hi.min(hi) - c_lo.max(lo)).max(0.0);
            *m = ov;
            total += ov;
        }
        let w_q = basis.quad_weights()[q];
        for iw in 0..n_w {
            let val = r * masses[iw] / (total * dw);
            for k in 0..modes {
                m_hat[iw][k] += w_q * val * basis.value_at_node(k, q);
            }
        }
    }
    Ok(m_hat)
}

/// Max |∫ M̂_i dw − ρ̂_i| over the modes (mass consistency).
pub fn um1_residual(m_hat: &[GalerkinVector], rho: &GalerkinVector, dw: f64) -> f64 {
    let modes = rho.len();
    let mut worst: f64 = 0.0;
    for k in 0..modes {
        let mass: f64 = m_hat.iter().map(|m| m[k] * dw).sum();
        worst = worst.max((mass - rho[k]).abs());
    }
    worst
}

/// Max-norm defect of ∫ w M̂ dw against (𝒫(V_eq(ρ̂)) + 𝒫(h(ρ̂)))ρ̂.
pub fn um2_residual(
    m_hat: &[GalerkinVector],
    rho: &GalerkinVector,
    grid: &KineticGrid,
    tensor: &TripleProductTensor,
) -> Result<f64> {
    let modes = rho.len();
    let dw = grid.dw();
    let mut first = GalerkinVector::zeros(modes);
    for (iw, m) in m_hat.iter().enumerate() {
        first.0 += (grid.w_center(iw) * dw) * &m.0;
    }
    let a = tensor.galerkin_product(&veq_coeffs(rho), rho)?;
    let b = tensor.galerkin_product(&grid.h.coeffs(rho), rho)?;
    Ok((first.0 - a.0 - b.0).amax())
}

/// BGK time stepper over a fixed basis/tensor pair.
pub struct KineticSolver<'a> {
    pub grid: KineticGrid,
    basis: &'a Basis,
    tensor: &'a TripleProductTensor,
}

impl<'a> KineticSolver<'a> {
    pub fn new(grid: KineticGrid, basis: &'a Basis, tensor: &'a TripleProductTensor) -> Result<Self> {
        grid.validate()?;
        Ok(KineticSolver {
            grid,
            basis,
            tensor,
        })
    }

    pub fn basis(&self) -> &Basis {
        self.basis
    }

    /// Field at local equilibrium for a given per-cell density.
    pub fn equilibrium_field(&self, rho: &[GalerkinVector]) -> Result<KineticField> {
        let mut field = KineticField::zeros(self.grid.n_x, self.grid.n_w, self.basis.modes());
        for (ix, r) in rho.iter().enumerate() {
            let m = build_equilibrium(r, &self.grid, self.basis).map_err(|e| match e {
                SgError::DensityOutOfRange { node, value, .. } => SgError::DensityOutOfRange {
                    cell: ix,
                    node,
                    value,
                },
                other => other,
            })?;
            for iw in 0..self.grid.n_w {
                *field.at_mut(ix, iw) = m[iw].clone();
            }
        }
        Ok(field)
    }

    /// Spectral-radius bound of 𝒫(h(ρ̂)) by sampling h(ρ(ξ)) at the nodes.
    fn h_bound(&self, rho: &GalerkinVector) -> f64 {
        let mut worst: f64 = 0.0;
        for q in 0..self.basis.quad_nodes().len() {
            let r = self.basis.reconstruct_at_node(rho, q);
            worst = worst.max(self.grid.h.eval(r.clamp(0.0, 1.0)).abs());
        }
        worst
    }

    /// Largest admissible Δt under the transport CFL bound.
    pub fn suggest_dt(&self, field: &KineticField) -> f64 {
        let (rho, _) = kinetic_moments(field, &self.grid);
        let h_max = rho.iter().map(|r| self.h_bound(r)).fold(0.0, f64::max);
        KINETIC_CFL_LIMIT * self.grid.dx() / (self.grid.w_max + h_max)
    }

    /// One splitting step: LLF transport of each w-slice, then exact
    /// relaxation toward the rebuilt equilibrium.
    pub fn step(&self, field: &mut KineticField, dt: f64) -> Result<()> {
        let n_x = self.grid.n_x;
        let n_w = self.grid.n_w;
        let dx = self.grid.dx();
        let modes = field.modes();

        let (rho, _) = kinetic_moments(field, &self.grid);
        let h_max = rho.iter().map(|r| self.h_bound(r)).fold(0.0, f64::max);
        let ratio = dt * (self.grid.w_max + h_max) / dx;
        if ratio > KINETIC_CFL_LIMIT + 1e-12 {
            return Err(SgError::CflViolation {
                ratio,
                limit: KINETIC_CFL_LIMIT,
            });
        }

        // per-cell advection operator pieces, frozen for this substep
        let mut p_h: Vec<DMatrix<f64>> = Vec::with_capacity(n_x);
        let mut h_cell = Vec::with_capacity(n_x);
        for r in &rho {
            p_h.push(self.tensor.galerkin_matrix(&self.grid.h.coeffs(r))?);
            h_cell.push(self.h_bound(r));
        }

        let neighbor = |j: isize| -> usize {
            match self.grid.boundary {
                BoundaryMode::Outflow => j.clamp(0, n_x as isize - 1) as usize,
                BoundaryMode::Periodic => j.rem_euclid(n_x as isize) as usize,
            }
        };

        let mut new_g = field.g.clone();
        for iw in 0..n_w {
            let w = self.grid.w_center(iw);
            // physical flux (w·Id − 𝒫(h)) ĝ per cell
            let mut flux = Vec::with_capacity(n_x);
            for ix in 0..n_x {
                let g = field.at(ix, iw);
                flux.push(GalerkinVector(w * &g.0 - &p_h[ix] * &g.0));
            }
            let mut left = GalerkinVector::zeros(modes);
            for jf in 0..=n_x {
                let jl = neighbor(jf as isize - 1);
                let jr = neighbor(jf as isize);
                let lam = (w.abs() + h_cell[jl].max(h_cell[jr])).max(1e-12);
                let gl = field.at(jl, iw);
                let gr = field.at(jr, iw);
                let f = GalerkinVector(
                    0.5 * (&flux[jl].0 + &flux[jr].0) - (0.5 * lam) * (&gr.0 - &gl.0),
                );
                if jf > 0 {
                    new_g[(jf - 1) * n_w + iw].0 -= dt / dx * (&f.0 - &left.0);
                }
                left = f;
            }
        }
        field.g = new_g;

        // relaxation substep, exact in time; mass moments are untouched
        let (rho_post, _) = kinetic_moments(field, &self.grid);
        let decay = (-dt / self.grid.epsilon).exp();
        for ix in 0..n_x {
            let m = build_equilibrium(&rho_post[ix], &self.grid, self.basis).map_err(
                |e| match e {
                    SgError::DensityOutOfRange { node, value, .. } => SgError::DensityOutOfRange {
                        cell: ix,
                        node,
                        value,
                    },
                    other => other,
                },
            )?;
            for iw in 0..n_w {
                let g = field.at_mut(ix, iw);
                g.0 = &m[iw].0 + decay * (&g.0 - &m[iw].0);
            }
        }
        field.t += dt;
        Ok(())
    }

    /// Runs to `t_f`, recording moment snapshots at the requested times.
    pub fn run(&self, mut field: KineticField, snapshot_times: &[f64]) -> Result<KineticRun> {
        let mut times: Vec<f64> = snapshot_times
            .iter()
            .copied()
            .filter(|&t| t > field.t && t < self.grid.t_f)
            .collect();
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        times.push(self.grid.t_f);
        times.dedup();

        let (rho0, _) = kinetic_moments(&field, &self.grid);
        let initial_mass: Vec<f64> = mode_masses(&rho0, self.grid.dx());
        let mut run = KineticRun {
            snapshots: Vec::new(),
            conservation_drift: 0.0,
        };
        for &t_stop in &times {
            while field.t < t_stop - 1e-14 {
                let dt = self.suggest_dt(&field).min(t_stop - field.t);
                self.step(&mut field, dt)?;
            }
            let (rho, q) = kinetic_moments(&field, &self.grid);
            run.snapshots.push(KineticSnapshot {
                t: field.t,
                rho,
                q,
                field: field.clone(),
            });
        }
        if self.grid.boundary == BoundaryMode::Periodic {
            let (rho, _) = kinetic_moments(&field, &self.grid);
            let final_mass = mode_masses(&rho, self.grid.dx());
            run.conservation_drift = initial_mass
                .iter()
                .zip(&final_mass)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        }
        Ok(run)
    }
}

fn mode_masses(rho: &[GalerkinVector], dx: f64) -> Vec<f64> {
    let modes = rho[0].len();
    (0..modes)
        .map(|k| rho.iter().map(|r| r[k] * dx).sum())
        .collect()
}

#[derive(Debug, Clone)]
pub struct KineticSnapshot {
    pub t: f64,
    pub rho: Vec<GalerkinVector>,
    pub q: Vec<GalerkinVector>,
    pub field: KineticField,
}

#[derive(Debug, Clone)]
pub struct KineticRun {
    pub snapshots: Vec<KineticSnapshot>,
    /// Max per-mode mass drift; only tracked for periodic boundaries.
    pub conservation_drift: f64,
}
