//! Stochastic Galerkin follow-the-leader dynamics.
//!
//! First-order: positions evolve with a headway-dependent speed law,
//! projected onto the gPC basis by quadrature over the reconstructed
//! stochastic headway. Second-order: an acceleration law combining the
//! velocity difference weighted by the squared inverse headway and
//! relaxation toward the optimal speed. The uncertainty enters through the
//! initial positions only; no noise is re-injected during the evolution.

use crate::chaos::{Basis, GalerkinVector, TripleProductTensor};
use crate::error::{Result, SgError};

/// Headway-ratio → speed map; the argument is y = L/Δx.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedLaw {
    /// s(y) = 1 − y clamped to [0, 1].
    OptimalVelocity,
    /// s(y) = intercept + slope·y with slope ≤ 0; unclamped, used to check
    /// that projection commutes with affine maps.
    Affine { intercept: f64, slope: f64 },
}

impl SpeedLaw {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            SpeedLaw::OptimalVelocity => (1.0 - y).clamp(0.0, 1.0),
            SpeedLaw::Affine { intercept, slope } => intercept + slope * y,
        }
    }

    fn validate(&self) -> Result<()> {
        if let SpeedLaw::Affine { slope, .. } = self {
            if *slope > 0.0 {
                return Err(SgError::InvalidParameter(
                    "speed law must be nonincreasing in the headway ratio".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Parameters of the follow-the-leader platoon.
#[derive(Debug, Clone, Copy)]
pub struct MicroParams {
    /// Vehicle count, ≥ 2; vehicle N−1 (0-based) is the leader.
    pub n: usize,
    /// Car length L.
    pub car_length: f64,
    pub speed_law: SpeedLaw,
    /// Leader speed s̄ (first order).
    pub leader_speed: f64,
    /// Leader acceleration ā (second order).
    pub leader_accel: f64,
    /// Velocity-difference weight C.
    pub c: f64,
    /// Optimal-velocity relaxation weight A.
    pub a: f64,
    /// Reaction time t_r.
    pub t_r: f64,
}

impl MicroParams {
    pub fn defaults(n: usize) -> Self {
        MicroParams {
            n,
            car_length: 1.0 / n as f64,
            speed_law: SpeedLaw::OptimalVelocity,
            leader_speed: 1.0,
            leader_accel: 0.0,
            c: 1.0,
            a: 1.0,
            t_r: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SgError::InvalidParameter(format!(
                "need at least 2 vehicles, got {}",
                self.n
            )));
        }
        if !(self.car_length > 0.0) || !(self.t_r > 0.0) {
            return Err(SgError::InvalidParameter(
                "car length and reaction time must be positive".into(),
            ));
        }
        self.speed_law.validate()
    }
}

/// Per-vehicle position (and, second order, velocity) coefficients.
#[derive(Debug, Clone)]
pub struct MicroState {
    pub x: Vec<GalerkinVector>,
    /// Velocity coefficients; `None` selects the first-order model.
    pub v: Option<Vec<GalerkinVector>>,
    pub t: f64,
}

impl MicroState {
    pub fn n_vehicles(&self) -> usize {
        self.x.len()
    }

    fn check_ordering(&self) -> Result<()> {
        for i in 0..self.x.len() - 1 {
            if self.x[i + 1][0] <= self.x[i][0] {
                return Err(SgError::OrderingViolation {
                    t: self.t,
                    vehicle: i,
                    x_lower: self.x[i][0],
                    x_upper: self.x[i + 1][0],
                });
            }
        }
        Ok(())
    }
}

/// Uniform platoon with uncertain headway: Δx_i(ξ) = spacing + amp·ξ for
/// every gap, i.e. x_i(ξ) = x0 + i·(spacing + amp·ξ).
pub fn platoon_initial(
    params: &MicroParams,
    basis: &Basis,
    x0: f64,
    spacing: f64,
    amp: f64,
    second_order: bool,
) -> Result<MicroState> {
    params.validate()?;
    let mut x = Vec::with_capacity(params.n);
    for i in 0..params.n {
        let fi = i as f64;
        x.push(basis.project(|xi| x0 + fi * (spacing + amp * xi))?);
    }
    let v = if second_order {
        // start followers at the projected optimal speed
        let mut vs = Vec::with_capacity(params.n);
        for i in 0..params.n - 1 {
            vs.push(project_headway_speed_positions(
                &x[i], &x[i + 1], params, basis,
            )?);
        }
        vs.push(GalerkinVector::deterministic(
            params.leader_speed,
            basis.modes(),
        ));
        Some(vs)
    } else {
        None
    };
    let state = MicroState { x, v, t: 0.0 };
    state.check_ordering()?;
    Ok(state)
}

fn project_headway_speed_positions(
    x_i: &GalerkinVector,
    x_next: &GalerkinVector,
    params: &MicroParams,
    basis: &Basis,
) -> Result<GalerkinVector> {
    let nq = basis.quad_nodes().len();
    let modes = basis.modes();
    let mut coeffs = GalerkinVector::zeros(modes);
    for q in 0..nq {
        let hw = basis.reconstruct_at_node(x_next, q) - basis.reconstruct_at_node(x_i, q);
        if hw <= 0.0 {
            return Err(SgError::NonPositiveHeadway {
                vehicle: 0,
                node: q,
                value: hw,
            });
        }
        let s = params.speed_law.eval(params.car_length / hw);
        let w = basis.quad_weights()[q];
        for k in 0..modes {
            coeffs[k] += w * s * basis.value_at_node(k, q);
        }
    }
    Ok(coeffs)
}

/// Integrator and right-hand sides for one platoon.
pub struct MicroSolver<'a> {
    pub params: MicroParams,
    basis: &'a Basis,
    tensor: &'a TripleProductTensor,
}

impl<'a> MicroSolver<'a> {
    pub fn new(
        params: MicroParams,
        basis: &'a Basis,
        tensor: &'a TripleProductTensor,
    ) -> Result<Self> {
        params.validate()?;
        Ok(MicroSolver {
            params,
            basis,
            tensor,
        })
    }

    /// ŝ_i: quadrature projection of the speed law applied to the
    /// reconstructed headway of vehicle i.
    pub fn project_headway_speed(&self, i: usize, state: &MicroState) -> Result<GalerkinVector> {
        project_headway_speed_positions(&state.x[i], &state.x[i + 1], &self.params, self.basis)
            .map_err(|e| match e {
                SgError::NonPositiveHeadway { node, value, .. } => SgError::NonPositiveHeadway {
                    vehicle: i,
                    node,
                    value,
                },
                other => other,
            })
    }

    /// dX̂/dt of the first-order system.
    pub fn rhs_first_order(&self, state: &MicroState) -> Result<Vec<GalerkinVector>> {
        let n = state.n_vehicles();
        let mut out = Vec::with_capacity(n);
        for i in 0..n - 1 {
            out.push(self.project_headway_speed(i, state)?);
        }
        out.push(GalerkinVector::deterministic(
            self.params.leader_speed,
            self.basis.modes(),
        ));
        Ok(out)
    }

    /// (dX̂/dt, dV̂/dt) of the second-order system.
    pub fn rhs_second_order(
        &self,
        state: &MicroState,
    ) -> Result<(Vec<GalerkinVector>, Vec<GalerkinVector>)> {
        let v = state
            .v
            .as_ref()
            .expect("second-order rhs needs velocity coefficients");
        let n = state.n_vehicles();
        let mut dv = Vec::with_capacity(n);
        for i in 0..n - 1 {
            let dx = GalerkinVector(&state.x[i + 1].0 - &state.x[i].0);
            let dvel = GalerkinVector(&v[i + 1].0 - &v[i].0);
            // 𝒫⁻²(Δx̂) Δv̂ as two sequential solves
            let y = self.tensor.galerkin_solve(&dx, &dvel)?;
            let y = self.tensor.galerkin_solve(&dx, &y)?;
            let s_hat = self.project_headway_speed(i, state)?;
            let relax = (&s_hat.0 - &v[i].0) * (self.params.a / self.params.t_r);
            dv.push(GalerkinVector(self.params.c * y.0 + relax));
        }
        dv.push(GalerkinVector::deterministic(
            self.params.leader_accel,
            self.basis.modes(),
        ));
        Ok((v.clone(), dv))
    }

    fn rhs(&self, state: &MicroState) -> Result<(Vec<GalerkinVector>, Option<Vec<GalerkinVector>>)> {
        if state.v.is_some() {
            let (dx, dv) = self.rhs_second_order(state)?;
            Ok((dx, Some(dv)))
        } else {
            Ok((self.rhs_first_order(state)?, None))
        }
    }

    fn advanced(
        state: &MicroState,
        dx: &[GalerkinVector],
        dv: &Option<Vec<GalerkinVector>>,
        dt: f64,
    ) -> MicroState {
        let x = state
            .x
            .iter()
            .zip(dx)
            .map(|(xi, di)| GalerkinVector(&xi.0 + dt * &di.0))
            .collect();
        let v = state.v.as_ref().map(|vs| {
            vs.iter()
                .zip(dv.as_ref().unwrap())
                .map(|(vi, di)| GalerkinVector(&vi.0 + dt * &di.0))
                .collect()
        });
        MicroState {
            x,
            v,
            t: state.t + dt,
        }
    }

    /// One classical RK4 step.
    pub fn rk4_step(&self, state: &MicroState, dt: f64) -> Result<MicroState> {
        let (k1x, k1v) = self.rhs(state)?;
        let s2 = Self::advanced(state, &k1x, &k1v, 0.5 * dt);
        let (k2x, k2v) = self.rhs(&s2)?;
        let s3 = Self::advanced(state, &k2x, &k2v, 0.5 * dt);
        let (k3x, k3v) = self.rhs(&s3)?;
        let s4 = Self::advanced(state, &k3x, &k3v, dt);
        let (k4x, k4v) = self.rhs(&s4)?;

        let combine = |a: &[GalerkinVector],
                       b: &[GalerkinVector],
                       c: &[GalerkinVector],
                       d: &[GalerkinVector]|
         -> Vec<GalerkinVector> {
            a.iter()
                .zip(b)
                .zip(c)
                .zip(d)
                .map(|(((a, b), c), d)| {
                    GalerkinVector((&a.0 + 2.0 * &b.0 + 2.0 * &c.0 + &d.0) * (dt / 6.0))
                })
                .collect()
        };
        let incr_x = combine(&k1x, &k2x, &k3x, &k4x);
        let x = state
            .x
            .iter()
            .zip(&incr_x)
            .map(|(xi, di)| GalerkinVector(&xi.0 + &di.0))
            .collect();
        let v = match (&state.v, &k1v, &k2v, &k3v, &k4v) {
            (Some(vs), Some(a), Some(b), Some(c), Some(d)) => {
                let incr = combine(a, b, c, d);
                Some(
                    vs.iter()
                        .zip(&incr)
                        .map(|(vi, di)| GalerkinVector(&vi.0 + &di.0))
                        .collect(),
                )
            }
            _ => None,
        };
        let next = MicroState {
            x,
            v,
            t: state.t + dt,
        };
        next.check_ordering()?;
        Ok(next)
    }

    /// RK4 integration to `t_f`; a snapshot is kept every `record_every`
    /// steps plus the final state.
    pub fn integrate(
        &self,
        mut state: MicroState,
        dt: f64,
        t_f: f64,
        record_every: usize,
    ) -> Result<Vec<MicroState>> {
        if !(dt > 0.0) {
            return Err(SgError::InvalidParameter("dt must be positive".into()));
        }
        let mut snapshots = vec![state.clone()];
        let mut step = 0usize;
        while state.t < t_f - 1e-12 {
            let h = dt.min(t_f - state.t);
            state = self.rk4_step(&state, h)?;
            step += 1;
            if record_every > 0 && step.is_multiple_of(record_every) && state.t < t_f - 1e-12 {
                snapshots.push(state.clone());
            }
        }
        snapshots.push(state);
        Ok(snapshots)
    }

    /// Stochastic local density ρ̂_i = projection of L / (x_{i+1}(ξ) − x_i(ξ))
    /// for each follower.
    pub fn reconstruct_local_density(&self, state: &MicroState) -> Result<Vec<GalerkinVector>> {
        let nq = self.basis.quad_nodes().len();
        let modes = self.basis.modes();
        let n = state.n_vehicles();
        let mut out = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let mut coeffs = GalerkinVector::zeros(modes);
            for q in 0..nq {
                let hw = self.basis.reconstruct_at_node(&state.x[i + 1], q)
                    - self.basis.reconstruct_at_node(&state.x[i], q);
                if hw <= 0.0 {
                    return Err(SgError::NonPositiveHeadway {
                        vehicle: i,
                        node: q,
                        value: hw,
                    });
                }
                let rho = self.params.car_length / hw;
                let w = self.basis.quad_weights()[q];
                for k in 0..modes {
                    coeffs[k] += w * rho * self.basis.value_at_node(k, q);
                }
            }
            out.push(coeffs);
        }
        Ok(out)
    }
}
