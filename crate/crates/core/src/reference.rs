//! Closed-form reference solutions used as independent validation oracles.
//!
//! Nothing here touches the Galerkin solvers; the formulas come straight
//! from the deterministic theory so that tests can compare two genuinely
//! different routes to the same value.

/// Exact entropy solution of the deterministic LWR Riemann problem with
/// Greenshields flux f(ρ) = ρ(1 − ρ), evaluated at offset `x` from the
/// initial jump at time `t`.
pub fn lwr_riemann_exact(rho_l: f64, rho_r: f64, x: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return if x < 0.0 { rho_l } else { rho_r };
    }
    let s = x / t;
    if rho_l < rho_r {
        // shock with Rankine-Hugoniot speed
        let sigma = 1.0 - rho_l - rho_r;
        if s < sigma {
            rho_l
        } else {
            rho_r
        }
    } else {
        // rarefaction fan between the characteristic speeds
        let c_l = 1.0 - 2.0 * rho_l;
        let c_r = 1.0 - 2.0 * rho_r;
        if s <= c_l {
            rho_l
        } else if s >= c_r {
            rho_r
        } else {
            0.5 * (1.0 - s)
        }
    }
}

/// Variance of a uniform random variable on (u1, u2): (u2 − u1)² / 12.
pub fn uniform_variance(u1: f64, u2: f64) -> f64 {
    let d = u2 - u1;
    d * d / 12.0
}

/// ∫₀¹ (1 − l/(d + ξ)) dξ — mean of the speed law s(y) = 1 − y applied to
/// a headway d + ξ with car length l.
pub fn mean_speed_uniform_headway(l: f64, d: f64) -> f64 {
    1.0 - l * ((d + 1.0) / d).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riemann_limits() {
        // far field recovers the initial states
        assert_eq!(lwr_riemann_exact(0.85, 0.2, -10.0, 0.5), 0.85);
        assert_eq!(lwr_riemann_exact(0.85, 0.2, 10.0, 0.5), 0.2);
        // shock case jumps at the RH speed
        let sigma = 1.0 - 0.2 - 0.8;
        assert_eq!(lwr_riemann_exact(0.2, 0.8, sigma * 0.5 - 1e-9, 0.5), 0.2);
        assert_eq!(lwr_riemann_exact(0.2, 0.8, sigma * 0.5 + 1e-9, 0.5), 0.8);
    }

    #[test]
    fn rarefaction_is_self_similar() {
        let v = lwr_riemann_exact(0.9, 0.1, 0.1, 1.0);
        assert!((v - 0.45).abs() < 1e-12);
    }
}
