//! Euler equations on the dual of sl2(R), the reduced pendulum-type system
//! on the unit cylinder, regime classification by Casimir value, and the
//! reduced period T_geod(C).
//!
//! On the unit co-sphere xi = cos(theta), eta = sin(theta) the Casimir
//! restricts to zeta^2/2 + sin(2 theta); levels C in (-1, 1) are librations
//! around theta = -pi/4, levels C > 1 are rotations, and C = 1 is the
//! separatrix through the saddles.

use crate::error::{Error, Result};
use crate::ode::{Dopri5, EventFn, OdeSystem};
use crate::quad;
use crate::sl2::Covector;
use std::f64::consts::{FRAC_PI_4, PI};

/// Tolerance for testing C against the cut points {-1, 0, 1}.
pub const REGIME_CUT_TOL: f64 = 1e-12;
/// Default integration tolerance for the momentum flows.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Cylinder coordinates (theta, zeta) with xi = cos theta, eta = sin theta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub theta: f64,
    pub zeta: f64,
}

impl ReducedState {
    pub fn new(theta: f64, zeta: f64) -> Self {
        Self { theta, zeta }
    }

    /// Casimir of the lifted covector: zeta^2/2 + sin(2 theta).
    pub fn casimir(&self) -> f64 {
        0.5 * self.zeta * self.zeta + (2.0 * self.theta).sin()
    }

    pub fn lift(&self) -> Covector {
        Covector::new(self.theta.cos(), self.theta.sin(), self.zeta)
    }
}

/// The six level-set cases plus the empty region below the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegimeTag {
    BelowMinimum,
    EllipticEquilibrium,
    DiscreteSeries,
    Parabolic,
    ComplementarySeries,
    Separatrix,
    PrincipalSeries,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::BelowMinimum => "BelowMinimum",
            RegimeTag::EllipticEquilibrium => "EllipticEquilibrium",
            RegimeTag::DiscreteSeries => "DiscreteSeries",
            RegimeTag::Parabolic => "Parabolic",
            RegimeTag::ComplementarySeries => "ComplementarySeries",
            RegimeTag::Separatrix => "Separatrix",
            RegimeTag::PrincipalSeries => "PrincipalSeries",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime {
    pub tag: RegimeTag,
    pub c_value: f64,
}

impl Regime {
    /// Whether the Casimir flow has a periodic orbit at this level.
    pub fn has_casimir_periodic_orbit(&self) -> bool {
        !matches!(self.tag, RegimeTag::Parabolic | RegimeTag::BelowMinimum)
    }

    /// Torus regimes: the ones carrying a two-parameter family of invariant
    /// tori (excludes the critical levels and the parabolic level).
    pub fn is_torus_regime(&self) -> bool {
        matches!(
            self.tag,
            RegimeTag::DiscreteSeries | RegimeTag::ComplementarySeries | RegimeTag::PrincipalSeries
        )
    }
}

/// Classifies a Casimir value against the cut points {-1, 0, 1}.
pub fn classify_regime(c: f64) -> Regime {
    let tag = if (c + 1.0).abs() <= REGIME_CUT_TOL {
        RegimeTag::EllipticEquilibrium
    } else if c.abs() <= REGIME_CUT_TOL {
        RegimeTag::Parabolic
    } else if (c - 1.0).abs() <= REGIME_CUT_TOL {
        RegimeTag::Separatrix
    } else if c < -1.0 {
        RegimeTag::BelowMinimum
    } else if c < 0.0 {
        RegimeTag::DiscreteSeries
    } else if c < 1.0 {
        RegimeTag::ComplementarySeries
    } else {
        RegimeTag::PrincipalSeries
    };
    Regime { tag, c_value: c }
}

/// Euler vector field on the dual: (xi', eta', zeta') =
/// (eta zeta, -xi zeta, 2(xi^2 - eta^2)), the Hamiltonian flow of g*/2.
pub fn euler_field(p: &Covector) -> Covector {
    Covector::new(
        p.eta * p.zeta,
        -p.xi * p.zeta,
        2.0 * (p.xi * p.xi - p.eta * p.eta),
    )
}

/// Push-forward of the Euler field to the unit cylinder:
/// (theta', zeta') = (-zeta, 2 cos 2 theta).
pub fn reduced_field(s: &ReducedState) -> (f64, f64) {
    (-s.zeta, 2.0 * (2.0 * s.theta).cos())
}

/// Canonical start point on the leaf {Cas = C} intersected with the unit
/// co-sphere: theta0 = -pi/4 (the zeta-maximal point), zeta0 = +sqrt(2(C+1)).
pub fn initial_momentum(c: f64) -> Result<Covector> {
    if c < -1.0 {
        return Err(Error::OutOfRange {
            what: "C",
            value: c,
            need: "C >= -1 for a point on the unit co-sphere leaf",
        });
    }
    let zeta0 = (2.0 * (c + 1.0)).max(0.0).sqrt();
    Ok(Covector::new(
        FRAC_PI_4.cos(),
        -FRAC_PI_4.sin(),
        zeta0,
    ))
}

/// Minimal period of the reduced orbit at level C, by adaptive quadrature.
///
/// Rotations (C > 1) integrate d phi / sqrt(2(C - sin phi)) over a full
/// circle; librations use the square-root substitution u^2 = C - sin 2 theta
/// at the turning point, which removes the endpoint singularity.
pub fn t_geod(c: f64, tol: f64) -> Result<f64> {
    if c <= -1.0 {
        return Err(Error::OutOfRange {
            what: "C",
            value: c,
            need: "C > -1 (reduced orbits exist above the minimum)",
        });
    }
    if (c - 1.0).abs() <= REGIME_CUT_TOL {
        return Err(Error::SeparatrixDivergence);
    }
    let rtol = (tol * 0.25).max(1e-15);
    // Cancellation-free distances to the critical levels: c - sin(phi) =
    // (c-1) + 2 sin^2(phi/2 - pi/4) and c - sin(2 theta) = (c+1) -
    // 2 sin^2(theta + pi/4); plain differences lose ~8 digits near the
    // turning levels and stall the quadrature at its noise floor.
    let d = c - 1.0;
    let e = c + 1.0;
    if c > 1.0 {
        // panels split at the near-critical point phi = pi/2
        let f = |phi: f64| {
            let s = (0.5 * phi - 0.25 * PI).sin();
            1.0 / (2.0 * (d + 2.0 * s * s)).sqrt()
        };
        let left = quad::integrate(&f, 0.5 * PI, 1.5 * PI, rtol, 0.0)?;
        let right = quad::integrate(&f, 1.5 * PI, 2.5 * PI, rtol, 0.0)?;
        Ok(left + right)
    } else {
        // libration well centered at theta = -pi/4; integrand symmetric
        // about the center, so integrate half and double twice.
        let theta_b = 0.5 * (0.5 * (c - 1.0)).asin();
        let u_b = (0.5 * e).sqrt();
        let plain = |theta: f64| {
            let s = (theta + FRAC_PI_4).sin();
            1.0 / (2.0 * (e - 2.0 * s * s)).sqrt()
        };
        let sub = |u: f64| {
            // 1 - s^2 = (1 - c + u^2)(1 + c - u^2) with s = c - u^2
            let one_minus = 1.0 - c + u * u;
            let one_plus = e - u * u;
            1.0 / (2.0_f64.sqrt() * (one_minus * one_plus).sqrt())
        };
        let inner = quad::integrate(&plain, -FRAC_PI_4, theta_b, rtol, 0.0)?;
        let outer = quad::integrate(&sub, 0.0, u_b, rtol, 0.0)?;
        Ok(4.0 * (inner + outer))
    }
}

/// Momentum flow with projection back onto the joint level set
/// {gstar = gstar(p0), Cas = Cas(p0)} after every accepted step.
pub(crate) struct MomentumSystem {
    pub gstar0: f64,
    pub cas0: f64,
}

impl OdeSystem<3> for MomentumSystem {
    fn rhs(&self, _t: f64, y: &[f64; 3], dy: &mut [f64; 3]) {
        let p = Covector::new(y[0], y[1], y[2]);
        let f = euler_field(&p);
        dy[0] = f.xi;
        dy[1] = f.eta;
        dy[2] = f.zeta;
    }

    fn project(&self, y: &mut [f64; 3]) {
        project_momentum(y, self.gstar0, self.cas0);
    }
}

/// One or two Newton corrections toward {gstar = g0, Cas = c0}.
pub(crate) fn project_momentum(y: &mut [f64; 3], g0: f64, c0: f64) {
    for _ in 0..2 {
        let (xi, eta, zeta) = (y[0], y[1], y[2]);
        let r1 = xi * xi + eta * eta - g0;
        let r2 = 0.5 * zeta * zeta + 2.0 * xi * eta - c0;
        if r1.abs() + r2.abs() < 1e-15 {
            return;
        }
        // J = [[2xi, 2eta, 0], [2eta, 2xi, zeta]]; solve (J J^T) lam = r
        let a11 = 4.0 * (xi * xi + eta * eta);
        let a12 = 8.0 * xi * eta;
        let a22 = 4.0 * (xi * xi + eta * eta) + zeta * zeta;
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-14 {
            return;
        }
        let l1 = (r1 * a22 - r2 * a12) / det;
        let l2 = (a11 * r2 - a12 * r1) / det;
        y[0] -= 2.0 * xi * l1 + 2.0 * eta * l2;
        y[1] -= 2.0 * eta * l1 + 2.0 * xi * l2;
        y[2] -= zeta * l2;
    }
}

/// Adaptive integration of the Euler field with invariant projection.
pub fn integrate_momentum(p0: &Covector, t: f64, tol: f64) -> Result<Covector> {
    let sys = MomentumSystem {
        gstar0: p0.gstar(),
        cas0: p0.casimir(),
    };
    let solver = Dopri5::new(tol, tol * 1e-2);
    let y = solver.integrate(&sys, 0.0, &[p0.xi, p0.eta, p0.zeta], t)?;
    Ok(Covector::new(y[0], y[1], y[2]))
}

struct AngleReturn {
    theta0: f64,
    target: f64,
}

impl EventFn<2> for AngleReturn {
    fn eval(&self, _t: f64, y: &[f64; 2]) -> f64 {
        y[0] - (self.theta0 + self.target)
    }
}

struct ReducedSystem {
    c: f64,
}

impl OdeSystem<2> for ReducedSystem {
    fn rhs(&self, _t: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
        dy[0] = -y[1];
        dy[1] = 2.0 * (2.0 * y[0]).cos();
    }

    fn project(&self, y: &mut [f64; 2]) {
        // Newton toward zeta^2/2 + sin 2 theta = C along the gradient.
        for _ in 0..2 {
            let r = 0.5 * y[1] * y[1] + (2.0 * y[0]).sin() - self.c;
            let gt = 2.0 * (2.0 * y[0]).cos();
            let gz = y[1];
            let n2 = gt * gt + gz * gz;
            if n2 < 1e-12 || r.abs() < 1e-15 {
                return;
            }
            y[0] -= r * gt / n2;
            y[1] -= r * gz / n2;
        }
    }
}

/// Reduced period detected directly on the flow: integrates the (theta,
/// zeta) system from the canonical start and locates the return with the
/// dense interpolant. Independent cross-check of the quadrature route.
pub fn t_geod_ode(c: f64, tol: f64) -> Result<f64> {
    if c <= -1.0 {
        return Err(Error::OutOfRange {
            what: "C",
            value: c,
            need: "C > -1",
        });
    }
    if (c - 1.0).abs() <= REGIME_CUT_TOL {
        return Err(Error::SeparatrixDivergence);
    }
    let zeta0 = (2.0 * (c + 1.0)).sqrt();
    let sys = ReducedSystem { c };
    let solver = Dopri5::new(tol, tol * 1e-2).with_max_step(0.5 / zeta0.max(1e-6));
    let y0 = [-FRAC_PI_4, zeta0];
    // Rotation orbits cross theta0 - 2pi once; librations return to theta0
    // at the second sign change (the first is the bottom of the loop).
    let (event, which) = if c > 1.0 {
        (AngleReturn { theta0: -FRAC_PI_4, target: -2.0 * PI }, 1)
    } else {
        (AngleReturn { theta0: -FRAC_PI_4, target: 0.0 }, 2)
    };
    // crude upper bound on the period for the integration horizon
    let t_max = if c > 1.0 {
        40.0 + 8.0 * PI / zeta0
    } else {
        40.0 + 12.0 * (1.0 / (1.0 - c).min(1.0)).ln().max(0.0)
    };
    let (te, _) = solver.integrate_to_event(&sys, &event, 0.0, &y0, t_max, 0.0, which)?;
    Ok(te)
}

/// Quadrature period cross-validated against ODE event detection; errors
/// with `PeriodMismatch` when the two routes disagree beyond 10 * tol
/// relative.
pub fn t_geod_checked(c: f64, tol: f64) -> Result<f64> {
    let tq = t_geod(c, tol)?;
    let to = t_geod_ode(c, tol)?;
    let allowed = 10.0 * tol * tq.abs();
    if (tq - to).abs() > allowed {
        return Err(Error::PeriodMismatch {
            quadrature: tq,
            ode: to,
            allowed,
        });
    }
    Ok(tq)
}

/// The two periods attached to a level C (t_cas also depends on the
/// hyperbolic class when C > 0). Absent entries mark levels where the
/// corresponding orbit does not exist or diverges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodPair {
    pub t_cas: Option<f64>,
    pub t_geod: Option<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::lie_poisson_bracket;
    use approx::assert_relative_eq;

    /// Complete elliptic integral K(m) with parameter m = k^2, via the
    /// arithmetic-geometric mean. Independent oracle for the period
    /// quadrature.
    fn elliptic_k(m: f64) -> f64 {
        let mut a = 1.0_f64;
        let mut b = (1.0 - m).sqrt();
        for _ in 0..64 {
            if (a - b).abs() < 1e-17 * a {
                break;
            }
            let an = 0.5 * (a + b);
            b = (a * b).sqrt();
            a = an;
        }
        0.5 * PI / a
    }

    fn t_geod_oracle(c: f64) -> f64 {
        if c < 1.0 {
            2.0 * elliptic_k(0.5 * (1.0 + c))
        } else {
            2.0 * 2.0_f64.sqrt() * elliptic_k(2.0 / (c + 1.0)) / (c + 1.0).sqrt()
        }
    }

    #[test]
    fn euler_field_examples() {
        let f = euler_field(&Covector::new(1.0, 0.0, 0.0));
        assert_eq!((f.xi, f.eta, f.zeta), (0.0, 0.0, 2.0));
        let f = euler_field(&Covector::new(0.0, 0.0, 5.0));
        assert_eq!((f.xi, f.eta, f.zeta), (0.0, 0.0, 0.0));
        let r = 1.0 / 2.0_f64.sqrt();
        let f = euler_field(&Covector::new(r, r, 0.0));
        assert!(f.xi.abs() < 1e-16 && f.eta.abs() < 1e-16 && f.zeta.abs() < 1e-16);
    }

    #[test]
    fn euler_field_matches_bracket_table() {
        // coordinate-wise: p_i' = {p_i, g*/2}
        let p = Covector::new(0.7, -0.3, 1.4);
        let grad_h = Covector::new(p.xi, p.eta, 0.0);
        let f = euler_field(&p);
        let coords = [
            Covector::new(1.0, 0.0, 0.0),
            Covector::new(0.0, 1.0, 0.0),
            Covector::new(0.0, 0.0, 1.0),
        ];
        let want = [
            lie_poisson_bracket(&coords[0], &grad_h, &p),
            lie_poisson_bracket(&coords[1], &grad_h, &p),
            lie_poisson_bracket(&coords[2], &grad_h, &p),
        ];
        assert_relative_eq!(f.xi, want[0], epsilon = 1e-14);
        assert_relative_eq!(f.eta, want[1], epsilon = 1e-14);
        assert_relative_eq!(f.zeta, want[2], epsilon = 1e-14);
    }

    #[test]
    fn reduced_field_examples() {
        let (td, zd) = reduced_field(&ReducedState::new(-FRAC_PI_4, 0.0));
        assert!(td.abs() < 1e-16 && zd.abs() < 1e-15);
        let (td, zd) = reduced_field(&ReducedState::new(0.0, 1.0));
        assert_eq!((td, zd), (-1.0, 2.0));
        let (td, zd) = reduced_field(&ReducedState::new(FRAC_PI_4, 0.0));
        assert!(td.abs() < 1e-16 && zd.abs() < 1e-15);
    }

    #[test]
    fn reduced_field_is_pushforward() {
        // finite-difference chart check on a grid of the cylinder
        for i in 0..12 {
            let theta = i as f64 * PI / 6.0;
            for zeta in [-1.5, 0.2, 2.0] {
                let s = ReducedState::new(theta, zeta);
                let f3 = euler_field(&s.lift());
                let (td, zd) = reduced_field(&s);
                // d/dt theta from xi', eta': theta' = (xi eta' - eta xi')/g*
                let lifted = s.lift();
                let td_chart = (lifted.xi * f3.eta - lifted.eta * f3.xi) / lifted.gstar();
                assert_relative_eq!(td, td_chart, epsilon = 1e-13);
                assert_relative_eq!(zd, f3.zeta, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn regime_classification() {
        assert_eq!(classify_regime(3.0).tag, RegimeTag::PrincipalSeries);
        assert_eq!(classify_regime(-0.5).tag, RegimeTag::DiscreteSeries);
        assert_eq!(classify_regime(0.0).tag, RegimeTag::Parabolic);
        assert!(!classify_regime(0.0).has_casimir_periodic_orbit());
        assert_eq!(classify_regime(-1.0).tag, RegimeTag::EllipticEquilibrium);
        assert_eq!(classify_regime(1.0).tag, RegimeTag::Separatrix);
        assert_eq!(classify_regime(0.5).tag, RegimeTag::ComplementarySeries);
        assert_eq!(classify_regime(-2.0).tag, RegimeTag::BelowMinimum);
        assert_eq!(classify_regime(1.0 + 1e-13).tag, RegimeTag::Separatrix);
    }

    #[test]
    fn initial_momentum_examples() {
        let r = 1.0 / 2.0_f64.sqrt();
        let p = initial_momentum(-1.0).unwrap();
        assert_relative_eq!(p.xi, r, epsilon = 1e-15);
        assert_relative_eq!(p.eta, -r, epsilon = 1e-15);
        assert_relative_eq!(p.zeta, 0.0, epsilon = 1e-15);
        let p = initial_momentum(1.0).unwrap();
        assert_relative_eq!(p.zeta, 2.0, epsilon = 1e-15);
        let p = initial_momentum(0.0).unwrap();
        assert_relative_eq!(p.zeta, 2.0_f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(p.gstar(), 1.0, epsilon = 1e-15);
        assert!(p.casimir().abs() < 1e-15);
        assert!(initial_momentum(-1.1).is_err());
    }

    #[test]
    fn t_geod_against_agm_oracle() {
        for c in [-0.99, -0.5, 0.3, 0.7, 0.999, 1.001, 2.0, 50.0, 1e4] {
            let got = t_geod(c, 1e-12).unwrap();
            let want = t_geod_oracle(c);
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
    }

    #[test]
    fn t_geod_limits() {
        // harmonic limit at the well bottom: linearized frequency 2
        let t = t_geod(-1.0 + 1e-8, 1e-12).unwrap();
        assert_relative_eq!(t, PI, max_relative = 1e-6);
        // separatrix divergence flag
        assert!(matches!(t_geod(1.0, 1e-10), Err(Error::SeparatrixDivergence)));
        assert!(t_geod(-1.0, 1e-10).is_err());
        // large-C asymptotics: T ~ sqrt(2) pi / sqrt(C)
        let t = t_geod(1e6, 1e-12).unwrap();
        assert_relative_eq!(t, 2.0_f64.sqrt() * PI / 1e3, max_relative = 1e-2);
    }

    #[test]
    fn t_geod_quadrature_vs_ode() {
        for c in [-0.9, -0.2, 0.5, 0.95, 1.05, 3.0, 100.0] {
            let tq = t_geod(c, 1e-12).unwrap();
            let to = t_geod_ode(c, 1e-12).unwrap();
            assert_relative_eq!(tq, to, max_relative = 1e-9);
        }
        assert!(t_geod_checked(0.5, 1e-10).is_ok());
    }

    #[test]
    fn momentum_integration_checks() {
        // equilibrium stays put
        let r = 1.0 / 2.0_f64.sqrt();
        let eq = Covector::new(r, r, 0.0);
        let p = integrate_momentum(&eq, 5.0, 1e-10).unwrap();
        assert!(p.max_abs_diff(&eq) < 1e-12);

        // periodicity on a near-minimum level
        let c = -1.0 + 1e-4;
        let p0 = initial_momentum(c).unwrap();
        let t = t_geod(c, 1e-13).unwrap();
        let p1 = integrate_momentum(&p0, t, 1e-12).unwrap();
        assert!(p1.max_abs_diff(&p0) < 1e-8, "return error {}", p1.max_abs_diff(&p0));

        // tiny-step fixed-step oracle (Richardson-extrapolated RK4)
        let p0 = Covector::new(1.0, 0.0, 0.0);
        let got = integrate_momentum(&p0, 0.1, 1e-12).unwrap();
        let want = rk4_oracle(&p0, 0.1);
        assert!(got.max_abs_diff(&want) < 1e-10);
    }

    fn rk4_oracle(p0: &Covector, t: f64) -> Covector {
        let run = |n: usize| {
            let h = t / n as f64;
            let mut y = [p0.xi, p0.eta, p0.zeta];
            let f = |y: &[f64; 3]| {
                let p = Covector::new(y[0], y[1], y[2]);
                let d = euler_field(&p);
                [d.xi, d.eta, d.zeta]
            };
            for _ in 0..n {
                let k1 = f(&y);
                let y2 = [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1], y[2] + 0.5 * h * k1[2]];
                let k2 = f(&y2);
                let y3 = [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1], y[2] + 0.5 * h * k2[2]];
                let k3 = f(&y3);
                let y4 = [y[0] + h * k3[0], y[1] + h * k3[1], y[2] + h * k3[2]];
                let k4 = f(&y4);
                for i in 0..3 {
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            y
        };
        let c1 = run(2000);
        let c2 = run(4000);
        // one Richardson step for the O(h^4) error
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = c2[i] + (c2[i] - c1[i]) / 15.0;
        }
        Covector::new(out[0], out[1], out[2])
    }

    #[test]
    fn conservation_along_flow() {
        let p0 = initial_momentum(0.5).unwrap();
        let sys = MomentumSystem { gstar0: 1.0, cas0: 0.5 };
        let solver = Dopri5::new(1e-10, 1e-12);
        let mut worst: f64 = 0.0;
        solver
            .integrate_with(&sys, 0.0, &[p0.xi, p0.eta, p0.zeta], 100.0, |_, y| {
                let p = Covector::new(y[0], y[1], y[2]);
                worst = worst.max((p.casimir() - 0.5).abs()).max((p.gstar() - 1.0).abs());
                true
            })
            .unwrap();
        assert!(worst <= 1e-9, "drift {worst}");
    }

    #[test]
    fn t_geod_scaling_tail() {
        // T * sqrt(C) stabilizes within 1% for C >= 1e6
        let a = t_geod(1e6, 1e-12).unwrap() * 1e3;
        let b = t_geod(4e6, 1e-12).unwrap() * 2e3;
        assert!((a - b).abs() / a < 0.01);
    }
}
