//! Coupled flows on PSL2(R) x sl2*: the exact Casimir flow, the numerical
//! geodesic flow, Casimir periods, rotation numbers of the invariant tori,
//! and the flow-angle diagnostic.
//!
//! The geodesic flow integrates g' = (xi X + eta Y) g together with the
//! Euler equations for the momentum. After one reduced period the momentum
//! returns to its start, so the group displacement commutes with A(p0) and
//! lies on the one-parameter subgroup exp(s A(p0)); the rotation number is
//! s / T_cas read off by `log_in_subgroup` instead of long-orbit averaging.

use crate::error::{Error, Result};
use crate::euler::{
    classify_regime, initial_momentum, project_momentum, t_geod, RegimeTag, REGIME_CUT_TOL,
};
use crate::ode::{Dopri5, OdeSystem};
use crate::sl2::{exp_traceless, log_in_subgroup, Covector, Psl2Element};
use std::f64::consts::PI;

/// Which closure convention a Casimir period refers to.
///
/// For C > 0 the subgroup is hyperbolic and only closes in the quotient by a
/// lattice class of eigenvalue lambda. For C < 0 the subgroup is elliptic:
/// it reaches -Id (hence Id in PSL2) at half the SL2 rotation period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CasNormalization {
    /// Period log(lambda)/sqrt(2C) of the quotient translation (C > 0).
    QuotientClass,
    /// Full SL2 rotation period 2 pi / sqrt(-2C) (C < 0).
    Sl2Full,
    /// PSL2 half rotation period pi / sqrt(-2C) (C < 0).
    Psl2Half,
}

impl CasNormalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            CasNormalization::QuotientClass => "QuotientClass",
            CasNormalization::Sl2Full => "Sl2Full",
            CasNormalization::Psl2Half => "Psl2Half",
        }
    }
}

/// Point of the coupled phase space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub g: Psl2Element,
    pub p: Covector,
}

impl PhaseState {
    pub fn new(g: Psl2Element, p: Covector) -> Self {
        Self { g, p }
    }

    /// Sup-norm distance across group and momentum parts.
    pub fn dist(&self, other: &PhaseState) -> f64 {
        self.g.dist(&other.g).max(self.p.max_abs_diff(&other.p))
    }
}

/// One scan point of the frequency map.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyPoint {
    pub c: f64,
    pub omega_mod1: f64,
    pub omega_lift: f64,
    pub t_cas: f64,
    pub t_geod: f64,
    pub holonomy_residual: f64,
    /// Which Casimir-period normalization produced omega.
    pub cas_norm: CasNormalization,
}

/// Exact Casimir flow: (g, p) -> (exp(t A(p)) g, p).
///
/// The exponential acts on the same side as the geodesic holonomy (g' =
/// U(p) g), which is what makes the two flows commute: the Euler equations
/// transport P(p) by conjugation with the holonomy, so exp(t A(p)) is
/// carried to exp(t A(p(s))) across the geodesic flow.
pub fn casimir_flow(s: &PhaseState, t: f64) -> PhaseState {
    PhaseState {
        g: exp_traceless(&s.p.a_matrix(), t).mul(&s.g),
        p: s.p,
    }
}

/// Casimir period in the stated convention: log(lambda)/sqrt(2C) for C > 0
/// and the full rotation period 2 pi / sqrt(-2C) for C < 0. The PSL2
/// minimal return is half the latter; see `t_cas_psl2_min` and
/// `measured_casimir_return`.
pub fn t_cas(c: f64, lambda: f64) -> Result<f64> {
    if c.abs() <= REGIME_CUT_TOL {
        return Err(Error::NoPeriodicOrbit);
    }
    if c > 0.0 {
        if lambda <= 1.0 {
            return Err(Error::OutOfRange {
                what: "lambda",
                value: lambda,
                need: "lambda > 1 for a hyperbolic class",
            });
        }
        Ok(lambda.ln() / (2.0 * c).sqrt())
    } else {
        Ok(2.0 * PI / (-2.0 * c).sqrt())
    }
}

/// Minimal PSL2 return period of the Casimir flow for C < 0 (half the SL2
/// rotation period); equal to `t_cas` for C > 0 where no -Id return occurs.
pub fn t_cas_psl2_min(c: f64, lambda: f64) -> Result<f64> {
    if c > 0.0 {
        t_cas(c, lambda)
    } else if c.abs() <= REGIME_CUT_TOL {
        Err(Error::NoPeriodicOrbit)
    } else {
        Ok(PI / (-2.0 * c).sqrt())
    }
}

/// A measured Casimir return time together with the convention it realized.
#[derive(Debug, Clone, Copy)]
pub struct CasReturn {
    pub time: f64,
    pub normalization: CasNormalization,
}

/// Detects the minimal return time of the Casimir flow numerically by
/// sampling the exact flow map. For C > 0 the return is to the class
/// representative (trace lambda + 1/lambda); for C < 0 to +/-Id, and the
/// sign reached first is flagged.
pub fn measured_casimir_return(p: &Covector, lambda: f64, tol: f64) -> Result<CasReturn> {
    let c = p.casimir();
    if c.abs() <= REGIME_CUT_TOL {
        return Err(Error::NoPeriodicOrbit);
    }
    let a = p.a_matrix();
    if c > 0.0 {
        if lambda <= 1.0 {
            return Err(Error::OutOfRange {
                what: "lambda",
                value: lambda,
                need: "lambda > 1 for a hyperbolic class",
            });
        }
        // |tr exp(tA)| grows monotonically from 2; bisect the crossing of
        // the class trace.
        let target = lambda + 1.0 / lambda;
        let f = |t: f64| exp_traceless(&a, t).trace().abs() - target;
        let mut hi = 1.0 / a.norm().max(1e-12);
        let mut guard = 0;
        while f(hi) < 0.0 {
            hi *= 2.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::NewtonDivergence {
                    context: "casimir return bracket",
                    residual: f(hi),
                    iters: guard,
                });
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 * hi.max(1.0) {
                break;
            }
        }
        let time = 0.5 * (lo + hi);
        if f(time).abs() > tol.max(1e-9) * target {
            return Err(Error::NewtonDivergence {
                context: "casimir return residual",
                residual: f(time),
                iters: 200,
            });
        }
        Ok(CasReturn {
            time,
            normalization: CasNormalization::QuotientClass,
        })
    } else {
        // Elliptic generator: scan the PSL2 distance to the identity, refine
        // the first minimum by golden section, and flag which SL2 sign was
        // reached.
        let dist = |t: f64| {
            let raw = casimir_exp_raw(&a, t);
            let plus = (raw - nalgebra::Matrix2::identity()).amax();
            let minus = (raw + nalgebra::Matrix2::identity()).amax();
            plus.min(minus)
        };
        let h = 0.05 / a.norm().max(1e-12);
        let mut t_prev = h;
        let mut d_prev = dist(h);
        let mut t = 2.0 * h;
        // require an actual falling phase first, so the t = 0 identity
        // does not register as the minimum
        let mut falling = false;
        let mut bracket = None;
        for _ in 0..2_000_000 {
            let d = dist(t);
            if falling && d > d_prev && d_prev < 0.5 {
                bracket = Some(((t_prev - h).max(0.5 * h), t));
                break;
            }
            falling = d < d_prev;
            t_prev = t;
            d_prev = d;
            t += h;
        }
        let (mut lo, mut hi) = bracket.ok_or(Error::NewtonDivergence {
            context: "casimir return scan",
            residual: d_prev,
            iters: 2_000_000,
        })?;
        let phi = 0.5 * (5.0_f64.sqrt() - 1.0);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = dist(x1);
        let mut f2 = dist(x2);
        for _ in 0..200 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = dist(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = dist(x2);
            }
            if hi - lo < 1e-15 * hi.max(1.0) {
                break;
            }
        }
        let time = 0.5 * (lo + hi);
        if dist(time) > tol.max(1e-9) {
            return Err(Error::NewtonDivergence {
                context: "casimir return residual",
                residual: dist(time),
                iters: 200,
            });
        }
        let normalization = if casimir_exp_raw(&a, time).trace() > 0.0 {
            CasNormalization::Sl2Full
        } else {
            CasNormalization::Psl2Half
        };
        Ok(CasReturn { time, normalization })
    }
}

/// SL2 exponential without PSL2 sign canonicalization (the sign carries the
/// full-turn/half-turn distinction the measurement needs).
fn casimir_exp_raw(a: &crate::sl2::AlgebraElement, t: f64) -> nalgebra::Matrix2<f64> {
    let d = a.det();
    let (f1, f2);
    if d.abs() < 1e-14 {
        let w = -d * t * t;
        f1 = 1.0 + w / 2.0 + w * w / 24.0;
        f2 = 1.0 + w / 6.0 + w * w / 120.0;
    } else if d < 0.0 {
        let x = t * (-d).sqrt();
        f1 = x.cosh();
        f2 = if x == 0.0 { 1.0 } else { x.sinh() / x };
    } else {
        let x = t * d.sqrt();
        f1 = x.cos();
        f2 = if x == 0.0 { 1.0 } else { x.sin() / x };
    }
    nalgebra::Matrix2::identity() * f1 + a.matrix() * (t * f2)
}

/// Coupled system: group entries (a, b, c, d) driven by the right-invariant
/// field U(p) g with U = xi X + eta Y, momentum by the Euler equations.
pub(crate) struct CoupledSystem {
    pub gstar0: f64,
    pub cas0: f64,
}

impl OdeSystem<7> for CoupledSystem {
    fn rhs(&self, _t: f64, y: &[f64; 7], dy: &mut [f64; 7]) {
        let (a, b, c, d) = (y[0], y[1], y[2], y[3]);
        let (xi, eta, zeta) = (y[4], y[5], y[6]);
        // U g with U = [[0, xi], [eta, 0]]
        dy[0] = xi * c;
        dy[1] = xi * d;
        dy[2] = eta * a;
        dy[3] = eta * b;
        dy[4] = eta * zeta;
        dy[5] = -xi * zeta;
        dy[6] = 2.0 * (xi * xi - eta * eta);
    }

    fn project(&self, y: &mut [f64; 7]) {
        // renormalize det(g) = 1 without touching the SL2 sign; skip when
        // the computed det is rounding-dominated (large entries)
        let det = y[0] * y[3] - y[1] * y[2];
        let noise = 4.0 * f64::EPSILON * ((y[0] * y[3]).abs().max(1.0) + (y[1] * y[2]).abs());
        if det > 0.0 && (det - 1.0).abs() > noise {
            let s = 1.0 / det.sqrt();
            for v in y.iter_mut().take(4) {
                *v *= s;
            }
        }
        let mut p = [y[4], y[5], y[6]];
        project_momentum(&mut p, self.gstar0, self.cas0);
        y[4] = p[0];
        y[5] = p[1];
        y[6] = p[2];
    }
}

fn pack(s: &PhaseState) -> [f64; 7] {
    [s.g.a, s.g.b, s.g.c, s.g.d, s.p.xi, s.p.eta, s.p.zeta]
}

fn unpack(y: &[f64; 7]) -> PhaseState {
    PhaseState {
        g: Psl2Element::new(y[0], y[1], y[2], y[3]),
        p: Covector::new(y[4], y[5], y[6]),
    }
}

/// Numerical geodesic flow on the energy shell g* = 1.
pub fn geodesic_flow(s: &PhaseState, t: f64, tol: f64) -> Result<PhaseState> {
    let g0 = s.p.gstar();
    if (g0 - 1.0).abs() > 1e-9 {
        return Err(Error::OutOfRange {
            what: "gstar(p)",
            value: g0,
            need: "momentum on the unit co-sphere (|g* - 1| <= 1e-9)",
        });
    }
    let sys = CoupledSystem {
        gstar0: g0,
        cas0: s.p.casimir(),
    };
    let solver = Dopri5::new(tol, tol * 1e-2);
    let y = solver.integrate(&sys, 0.0, &pack(s), t)?;
    let out = unpack(&y);
    let drift = (out.p.casimir() - sys.cas0)
        .abs()
        .max((out.p.gstar() - sys.gstar0).abs());
    if drift > 10.0 * tol.max(1e-14) {
        return Err(Error::InvariantDrift {
            drift,
            allowed: 10.0 * tol,
        });
    }
    Ok(out)
}

/// Flow-angle diagnostic |cos alpha| = |xi eta| / sqrt(1 + zeta^2/4) between
/// the projected Casimir and geodesic fields.
pub fn cos_alpha(p: &Covector) -> f64 {
    (p.xi * p.eta).abs() / (1.0 + 0.25 * p.zeta * p.zeta).sqrt()
}

/// Distance between the two orders of composing the Casimir flow (time u)
/// and the geodesic flow (time t). Zero in exact arithmetic. The group part
/// is measured relative to the matrix magnitude: hyperbolic Casimir legs
/// reach entries of order exp(|u| sqrt(2C)), where only the relative
/// deviation is representable.
pub fn commutator_defect(s: &PhaseState, t: f64, u: f64, tol: f64) -> Result<f64> {
    let path_a = geodesic_flow(&casimir_flow(s, u), t, tol)?;
    let path_b = casimir_flow(&geodesic_flow(s, t, tol)?, u);
    let scale = path_a.g.norm_sup().max(1.0);
    let g_dist = path_a.g.dist(&path_b.g) / scale;
    Ok(g_dist.max(path_a.p.max_abs_diff(&path_b.p)))
}

/// Result of driving the coupled flow through whole reduced periods.
pub(crate) struct PeriodRun {
    pub t_return: f64,
    pub holonomy: Psl2Element,
    pub end_momentum: Covector,
    /// Momentum samples along the run, dense enough for winding counts.
    pub momenta: Vec<Covector>,
}

/// Integrates the coupled flow from (Id, p_start) through `q` reduced
/// periods. The return is the 2q-th crossing of the section line through
/// the start angle (each period contributes one crossing in each
/// direction).
pub(crate) fn run_periods(p_start: &Covector, q: u32, tol: f64) -> Result<PeriodRun> {
    let c = p_start.casimir();
    let t_est = t_geod(c, tol.clamp(1e-13, 1e-6))?;
    let zeta_max = (2.0 * (c + 1.0)).sqrt().max(1e-9);
    let sys = CoupledSystem {
        gstar0: p_start.gstar(),
        cas0: c,
    };
    // step cap keeps section crossings separated and momentum samples
    // angularly dense (|dtheta| <= |zeta| h <= 0.5 < pi/2)
    let solver = Dopri5::new(tol, tol * 1e-2).with_max_step((t_est / 8.0).min(0.5 / zeta_max));
    let start = PhaseState::new(Psl2Element::identity(), *p_start);
    let y0 = pack(&start);
    let r = p_start.gstar().sqrt();
    let (sin0, cos0) = (p_start.eta / r, p_start.xi / r);
    let section = move |y: &[f64; 7]| y[4] * sin0 - y[5] * cos0;

    let target = 2 * q as usize;
    let mut count = 0usize;
    let mut g_prev: f64 = 0.0; // exact zero at the start by construction
    let mut hit: Option<(f64, [f64; 7])> = None;
    let mut momenta = vec![*p_start];
    let t_max = (q as f64 + 1.0) * t_est * 1.25 + 1.0;
    solver.integrate_with(&sys, 0.0, &y0, t_max, |step, y_end| {
        let g_new = section(y_end);
        if g_prev != 0.0 && g_new.signum() != g_prev.signum() {
            count += 1;
            if count >= target {
                let (mut lo, mut hi) = (step.t0, step.t_end());
                let mut g_lo = g_prev;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let gm = section(&step.eval(mid));
                    if gm == 0.0 || (hi - lo) < 1e-15 * hi.max(1.0) {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if gm.signum() == g_lo.signum() {
                        lo = mid;
                        g_lo = gm;
                    } else {
                        hi = mid;
                    }
                }
                let te = 0.5 * (lo + hi);
                hit = Some((te, step.eval(te)));
                return false;
            }
        }
        g_prev = g_new;
        momenta.push(Covector::new(y_end[4], y_end[5], y_end[6]));
        true
    })?;
    let (t_return, mut ye) = hit.ok_or(Error::NewtonDivergence {
        context: "reduced-period return not found",
        residual: g_prev,
        iters: count,
    })?;
    // project the interpolated end state back onto the invariants
    sys.project(&mut ye);
    let end = unpack(&ye);
    momenta.push(end.p);
    Ok(PeriodRun {
        t_return,
        holonomy: end.g,
        end_momentum: end.p,
        momenta,
    })
}

/// Rotation number of the geodesic Poincare map on the invariant torus at
/// level C, extracted from the group holonomy over one reduced period.
pub fn rotation_number(c: f64, lambda: f64, tol: f64) -> Result<FrequencyPoint> {
    let regime = classify_regime(c);
    if !regime.is_torus_regime() {
        return Err(Error::OutOfRange {
            what: "C",
            value: c,
            need: "torus regime: C in (-1, infinity) minus {0, 1}",
        });
    }
    let p0 = initial_momentum(c)?;
    let run = run_periods(&p0, 1, tol)?;
    let mom_return = run.end_momentum.max_abs_diff(&p0);
    let mom_gate = (1e3 * tol).max(1e-8);
    if mom_return > mom_gate {
        return Err(Error::InvariantDrift {
            drift: mom_return,
            allowed: mom_gate,
        });
    }
    let a0 = p0.a_matrix();
    let h = run.holonomy;
    let h_scale = h.matrix().amax().max(1.0);
    let s = log_in_subgroup(&h, &a0, (1e3 * tol).max(1e-7) * h_scale)?;
    let holonomy_residual = exp_traceless(&a0, s).dist(&h) / h_scale;
    let (t_cas_used, cas_norm) = if c > 0.0 {
        (t_cas(c, lambda)?, CasNormalization::QuotientClass)
    } else {
        (t_cas_psl2_min(c, lambda)?, CasNormalization::Psl2Half)
    };
    let omega_lift = s / t_cas_used;
    Ok(FrequencyPoint {
        c,
        omega_mod1: omega_lift.rem_euclid(1.0),
        omega_lift,
        t_cas: t_cas_used,
        t_geod: run.t_return,
        holonomy_residual,
        cas_norm,
    })
}

/// Which end of a scan interval the lift is anchored at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorEnd {
    First,
    Last,
}

/// Continuous unwrapping of fractional parts along a grid, rebased so the
/// anchored end lands on the branch nearest zero.
pub fn unwrap_lift(omega_mod1: &[f64], anchor: AnchorEnd) -> Vec<f64> {
    let mut lift = Vec::with_capacity(omega_mod1.len());
    let mut acc = omega_mod1[0];
    lift.push(acc);
    for i in 1..omega_mod1.len() {
        let mut d = omega_mod1[i] - omega_mod1[i - 1];
        d -= d.round();
        acc += d;
        lift.push(acc);
    }
    let idx = match anchor {
        AnchorEnd::First => 0,
        AnchorEnd::Last => lift.len() - 1,
    };
    let shift = lift[idx].round();
    for v in &mut lift {
        *v -= shift;
    }
    lift
}

/// Frequency-map scan: rotation numbers over a sorted C grid, adaptively
/// refined until adjacent fractional parts differ by < 1/2, then unwrapped
/// and anchored per regime interval (toward 0 at C -> infinity for the
/// principal series and at the C -> 0 ends otherwise).
pub fn omega_lift_scan(c_grid: &[f64], lambda: f64, tol: f64) -> Result<Vec<FrequencyPoint>> {
    if c_grid.is_empty() {
        return Err(Error::InvalidConfig("empty C grid".into()));
    }
    for w in c_grid.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidConfig(
                "C grid must be strictly increasing".into(),
            ));
        }
    }
    for &c in c_grid {
        for cut in [-1.0, 0.0, 1.0] {
            if (c - cut).abs() < 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "grid point {c} too close to the critical value {cut}"
                )));
            }
        }
    }
    let mut out: Vec<FrequencyPoint> = Vec::new();
    let mut i = 0;
    while i < c_grid.len() {
        let tag = classify_regime(c_grid[i]).tag;
        let mut j = i + 1;
        while j < c_grid.len() && classify_regime(c_grid[j]).tag == tag {
            j += 1;
        }
        // ComplementarySeries anchors at its C -> 0 end (the first point);
        // PrincipalSeries at C -> infinity and DiscreteSeries at C -> 0^-
        // (the last point).
        let anchor = match tag {
            RegimeTag::ComplementarySeries => AnchorEnd::First,
            _ => AnchorEnd::Last,
        };
        out.extend(scan_interval(&c_grid[i..j], lambda, tol, anchor)?);
        i = j;
    }
    Ok(out)
}

fn scan_interval(
    c_values: &[f64],
    lambda: f64,
    tol: f64,
    anchor: AnchorEnd,
) -> Result<Vec<FrequencyPoint>> {
    let mut points: Vec<FrequencyPoint> = c_values
        .iter()
        .map(|&c| rotation_number(c, lambda, tol))
        .collect::<Result<_>>()?;
    // refine until adjacent fractional parts are unambiguous
    let mut budget = 6 * points.len() + 64;
    let mut i = 0;
    while i + 1 < points.len() {
        let d = wrapped_gap(points[i].omega_mod1, points[i + 1].omega_mod1);
        if d < 0.45 {
            i += 1;
            continue;
        }
        let (c_lo, c_hi) = (points[i].c, points[i + 1].c);
        if budget == 0 || (c_hi - c_lo) < 1e-9 {
            return Err(Error::UnwrapAmbiguity { c_lo, c_hi, gap: d });
        }
        budget -= 1;
        let mid = 0.5 * (c_lo + c_hi);
        points.insert(i + 1, rotation_number(mid, lambda, tol)?);
    }
    let mods: Vec<f64> = points.iter().map(|p| p.omega_mod1).collect();
    let lift = unwrap_lift(&mods, anchor);
    for (p, l) in points.iter_mut().zip(lift) {
        p.omega_lift = l;
    }
    Ok(points)
}

fn wrapped_gap(a: f64, b: f64) -> f64 {
    let mut d = (b - a).abs();
    if d > 0.5 {
        d = 1.0 - d;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sl2::BASIS_Z;
    use approx::assert_relative_eq;

    #[test]
    fn casimir_flow_examples() {
        let p = Covector::new(0.0, 0.0, 1.0);
        let s = PhaseState::new(Psl2Element::identity(), p);
        let s0 = casimir_flow(&s, 0.0);
        assert!(s0.dist(&s) < 1e-15);
        let s1 = casimir_flow(&s, 1.0);
        // A(p) = Z here
        assert!(s1.g.dist(&exp_traceless(&BASIS_Z, 1.0)) < 1e-14);
        // exact group property
        let p = initial_momentum(0.7).unwrap();
        let s = PhaseState::new(Psl2Element::new(1.2, 0.3, 0.1, 0.9), p);
        let a = casimir_flow(&s, 0.8 + 0.5);
        let b = casimir_flow(&casimir_flow(&s, 0.8), 0.5);
        assert!(a.dist(&b) < 1e-12);
    }

    #[test]
    fn casimir_flow_psl2_period() {
        // C = -1/2: PSL2 return of the group factor at pi/sqrt(-2C) = pi
        let p = Covector::new(0.5, -0.5, 0.0);
        let g0 = Psl2Element::new(2.0, 1.0, 1.0, 1.0);
        let s = PhaseState::new(g0, p);
        let back = casimir_flow(&s, PI);
        assert!(back.g.dist(&g0) < 1e-12);
        // and at the stated period 2 pi as well
        let full = casimir_flow(&s, 2.0 * PI);
        assert!(full.g.dist(&g0) < 1e-12);
    }

    #[test]
    fn t_cas_values() {
        assert_relative_eq!(t_cas(0.5, std::f64::consts::E).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(t_cas(-0.5, 2.0).unwrap(), 2.0 * PI, epsilon = 1e-12);
        assert!(matches!(t_cas(0.0, 2.0), Err(Error::NoPeriodicOrbit)));
        // lambda scaling: t_cas(C, lambda^2) = 2 t_cas(C, lambda)
        let l = 1.7;
        assert_relative_eq!(
            t_cas(2.0, l * l).unwrap(),
            2.0 * t_cas(2.0, l).unwrap(),
            epsilon = 1e-14
        );
        assert_relative_eq!(t_cas_psl2_min(-0.5, 2.0).unwrap(), PI, epsilon = 1e-12);
    }

    #[test]
    fn measured_return_times() {
        // C = 1/2 with lambda = e: log(lambda)/sqrt(2C) = 1
        let p = initial_momentum(0.5).unwrap();
        let r = measured_casimir_return(&p, std::f64::consts::E, 1e-10).unwrap();
        assert_relative_eq!(r.time, 1.0, epsilon = 1e-9);
        assert_eq!(r.normalization, CasNormalization::QuotientClass);
        // C = -1/2: PSL2 return at pi (half the stated 2 pi)
        let p = Covector::new(0.5, -0.5, 0.0);
        assert_relative_eq!(p.casimir(), -0.5, epsilon = 1e-15);
        let r = measured_casimir_return(&p, 2.0, 1e-10).unwrap();
        assert_relative_eq!(r.time, PI, epsilon = 1e-8);
        assert_eq!(r.normalization, CasNormalization::Psl2Half);
    }

    #[test]
    fn cos_alpha_examples() {
        let r = 1.0 / 2.0_f64.sqrt();
        assert_relative_eq!(cos_alpha(&Covector::new(r, r, 0.0)), 0.5, epsilon = 1e-15);
        assert_relative_eq!(cos_alpha(&Covector::new(1.0, 0.0, 3.0)), 0.0);
        assert_relative_eq!(
            cos_alpha(&Covector::new(r, -r, 2.0)),
            0.5 / 2.0_f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn geodesic_flow_frozen_saddle() {
        // At the C = 1 critical point the momentum freezes and the group
        // motion is the one-parameter subgroup of (X + Y)/sqrt(2).
        let r = 1.0 / 2.0_f64.sqrt();
        let p = Covector::new(r, r, 0.0);
        let s = PhaseState::new(Psl2Element::identity(), p);
        let lambda = std::f64::consts::E;
        let t = 2.0_f64.sqrt() * lambda.ln();
        let out = geodesic_flow(&s, t, 1e-12).unwrap();
        assert!(out.p.max_abs_diff(&p) < 1e-10);
        // displacement conjugate to diag(lambda, 1/lambda)
        assert_relative_eq!(out.g.trace().abs(), lambda + 1.0 / lambda, epsilon = 1e-8);
        let u = crate::sl2::AlgebraElement::new(r, r, 0.0);
        assert!(out.g.dist(&exp_traceless(&u, t)) < 1e-9);
    }

    #[test]
    fn geodesic_flow_fiber_orbit() {
        // C = -1 equilibrium: elliptic subgroup, PSL2 period pi sqrt(2)
        let r = 1.0 / 2.0_f64.sqrt();
        let p = Covector::new(r, -r, 0.0);
        let s = PhaseState::new(Psl2Element::identity(), p);
        let t = PI * 2.0_f64.sqrt();
        let out = geodesic_flow(&s, t, 1e-12).unwrap();
        assert!(out.g.dist(&Psl2Element::identity()) < 1e-9);
        assert!(out.p.max_abs_diff(&p) < 1e-10);
    }

    #[test]
    fn flow_reversibility() {
        let p = initial_momentum(0.5).unwrap();
        let s = PhaseState::new(Psl2Element::identity(), p);
        let fwd = geodesic_flow(&s, 3.0, 1e-11).unwrap();
        let back = geodesic_flow(&fwd, -3.0, 1e-11).unwrap();
        assert!(back.dist(&s) < 1e-8, "round trip {}", back.dist(&s));
    }

    #[test]
    fn commutator_examples() {
        let p = initial_momentum(0.5).unwrap();
        let s = PhaseState::new(Psl2Element::identity(), p);
        assert!(commutator_defect(&s, 0.0, 5.0, 1e-10).unwrap() < 1e-12);
        assert!(commutator_defect(&s, 5.0, 0.0, 1e-10).unwrap() < 1e-9);
        // equilibrium momentum: both flows are subgroup translations
        let r = 1.0 / 2.0_f64.sqrt();
        let eq = PhaseState::new(Psl2Element::identity(), Covector::new(r, r, 0.0));
        assert!(commutator_defect(&eq, 2.0, 3.0, 1e-12).unwrap() < 1e-10);
        // generic point
        assert!(commutator_defect(&s, 5.0, 5.0, 1e-10).unwrap() < 1e-7);
    }

    #[test]
    fn rotation_number_consistency() {
        let lambda = (2.0_f64).exp();
        let fp = rotation_number(5.0, lambda, 1e-10).unwrap();
        assert!(fp.holonomy_residual <= 1e-7);
        assert_relative_eq!(fp.omega_mod1, fp.omega_lift.rem_euclid(1.0), epsilon = 1e-12);
        // the displacement s = omega * t_cas must be independent of lambda
        let fp2 = rotation_number(5.0, std::f64::consts::E, 1e-10).unwrap();
        assert_relative_eq!(
            fp.omega_lift * fp.t_cas,
            fp2.omega_lift * fp2.t_cas,
            max_relative = 1e-9
        );
    }

    #[test]
    fn rotation_number_start_point_invariance() {
        // advancing the start point along the same reduced orbit leaves
        // omega unchanged
        let lambda = std::f64::consts::E;
        let c = 2.0;
        let base = rotation_number(c, lambda, 1e-11).unwrap();
        let p0 = initial_momentum(c).unwrap();
        let p1 = crate::euler::integrate_momentum(&p0, 0.37, 1e-12).unwrap();
        let run = run_periods(&p1, 1, 1e-11).unwrap();
        let s = log_in_subgroup(&run.holonomy, &p1.a_matrix(), 1e-7).unwrap();
        let omega = s / t_cas(c, lambda).unwrap();
        assert!(
            (omega - base.omega_lift).abs() < 1e-7,
            "omega moved by {}",
            (omega - base.omega_lift).abs()
        );
    }

    #[test]
    fn unwrap_lift_synthetic() {
        // constant input stays constant
        let v = vec![0.3; 8];
        let l = unwrap_lift(&v, AnchorEnd::Last);
        assert!(l.iter().all(|&x| (x - 0.3).abs() < 1e-15));
        // winding sequence crossing integers, anchored branch recovers truth
        let truth: Vec<f64> = (0..30).map(|i| 2.7 - 0.11 * i as f64).collect();
        let mods: Vec<f64> = truth.iter().map(|x| x.rem_euclid(1.0)).collect();
        let l = unwrap_lift(&mods, AnchorEnd::Last);
        let off = l[29] - truth[29];
        assert_relative_eq!(off, off.round(), epsilon = 1e-12);
        for i in 0..30 {
            assert_relative_eq!(l[i] - off, truth[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn omega_scan_monotone_tail() {
        let lambda = std::f64::consts::E;
        let grid: Vec<f64> = (0..7).map(|i| 10.0 * 10f64.powf(i as f64 / 2.0)).collect();
        let pts = omega_lift_scan(&grid, lambda, 1e-10).unwrap();
        for w in pts.windows(2) {
            assert!(w[1].omega_lift.abs() < w[0].omega_lift.abs());
        }
        assert!(pts.last().unwrap().omega_lift.abs() < 1e-2 * pts[0].omega_lift.abs());
    }
}
