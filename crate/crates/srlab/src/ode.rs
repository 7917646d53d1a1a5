//! Adaptive Dormand-Prince 5(4) integration with dense output, event
//! location, and an after-step projection hook for invariant-preserving
//! flows.

use crate::error::{Error, Result};

/// Autonomous ODE with compile-time dimension.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, t: f64, y: &[f64; N], dydt: &mut [f64; N]);

    /// Optional projection applied after every accepted step (e.g. back onto
    /// a joint level set of first integrals).
    fn project(&self, _y: &mut [f64; N]) {}
}

/// Scalar event function; a root of `eval` along the trajectory is located
/// with the dense interpolant.
pub trait EventFn<const N: usize> {
    fn eval(&self, t: f64, y: &[f64; N]) -> f64;
}

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];
// Dense-output weights (Hairer-Norsett-Wanner dopri5).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with everything needed for 5th-order interpolation.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    /// State at t0 + theta*h for theta in [0, 1].
    pub fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        let mut y = [0.0; N];
        for i in 0..N {
            y[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
        y
    }

    pub fn t_end(&self) -> f64 {
        self.t0 + self.h
    }
}

#[derive(Debug, Clone)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Optional cap on the step size (event scanning needs bounded steps).
    pub max_step: f64,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            max_steps: 2_000_000,
            max_step: f64::INFINITY,
        }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        self.max_step = h;
        self
    }

    /// Integrates from (t0, y0) to t_end, calling `on_step` after every
    /// accepted (and projected) step. The callback may stop the run early by
    /// returning false; the final state is then the last accepted one.
    pub fn integrate_with<const N: usize, S, F>(
        &self,
        sys: &S,
        t0: f64,
        y0: &[f64; N],
        t_end: f64,
        mut on_step: F,
    ) -> Result<[f64; N]>
    where
        S: OdeSystem<N>,
        F: FnMut(&DenseStep<N>, &[f64; N]) -> bool,
    {
        let span = (t_end - t0).abs();
        if span == 0.0 {
            return Ok(*y0);
        }
        let dir = (t_end - t0).signum();
        let mut t = t0;
        let mut y = *y0;
        let mut k1 = [0.0; N];
        sys.rhs(t, &y, &mut k1);
        let mut h = (self.initial_step(sys, t, &y, &k1, dir)).min(self.max_step.abs()) * dir;

        let h_min = span * 1e-15;
        let mut steps = 0;
        while (t_end - t) * dir > 0.0 {
            if steps > self.max_steps {
                return Err(Error::NewtonDivergence {
                    context: "ode step budget exhausted",
                    residual: (t_end - t).abs(),
                    iters: steps,
                });
            }
            steps += 1;
            if (t + h - t_end) * dir > 0.0 {
                h = t_end - t;
            }
            if h.abs() < h_min {
                return Err(Error::StepSizeUnderflow { t, h });
            }

            let mut k = [[0.0; N]; 7];
            k[0] = k1;
            for s in 1..7 {
                let mut ys = y;
                for i in 0..N {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s) {
                        acc += A[s][j] * kj[i];
                    }
                    ys[i] += h * acc;
                }
                sys.rhs(t + C[s] * h, &ys, &mut k[s]);
            }
            // 5th-order solution is the stage-7 state (FSAL).
            let mut y1 = y;
            for i in 0..N {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(6) {
                    acc += A[6][j] * kj[i];
                }
                y1[i] += h * acc;
            }
            // error estimate
            let mut err = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                e *= h;
                let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = (err / N as f64).sqrt();

            if err <= 1.0 {
                // dense output coefficients before projection
                let mut rcont = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y1[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * k[6][i] - bspl;
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        acc += D[j] * kj[i];
                    }
                    rcont[4][i] = h * acc;
                }
                let step = DenseStep { t0: t, h, rcont };
                t += h;
                y = y1;
                sys.project(&mut y);
                sys.rhs(t, &y, &mut k1);
                if !on_step(&step, &y) {
                    return Ok(y);
                }
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = (h * fac).clamp(-self.max_step, self.max_step);
            if h == 0.0 {
                h = h_min * dir;
            }
        }
        Ok(y)
    }

    pub fn integrate<const N: usize, S: OdeSystem<N>>(
        &self,
        sys: &S,
        t0: f64,
        y0: &[f64; N],
        t_end: f64,
    ) -> Result<[f64; N]> {
        self.integrate_with(sys, t0, y0, t_end, |_, _| true)
    }

    /// Integrates until the `which`-th sign change of the event function
    /// (skipping roots at t <= t_min), refining the crossing on the dense
    /// interpolant by bisection. Returns (t_event, y_event).
    pub fn integrate_to_event<const N: usize, S, Ev>(
        &self,
        sys: &S,
        ev: &Ev,
        t0: f64,
        y0: &[f64; N],
        t_max: f64,
        t_min: f64,
        which: usize,
    ) -> Result<(f64, [f64; N])>
    where
        S: OdeSystem<N>,
        Ev: EventFn<N>,
    {
        let mut found: Option<(f64, [f64; N])> = None;
        let mut count = 0usize;
        let mut g_prev = ev.eval(t0, y0);
        let mut t_prev = t0;
        self.integrate_with(sys, t0, y0, t_max, |step, y_end| {
            let t_new = step.t_end();
            let g_new = ev.eval(t_new, y_end);
            if t_new > t_min && g_prev != 0.0 && g_new.signum() != g_prev.signum() {
                count += 1;
                if count >= which {
                    // bisection on the dense interpolant
                    let (mut lo, mut hi) = (t_prev.max(step.t0), t_new);
                    let mut g_lo = ev.eval(lo, &step.eval(lo));
                    if g_lo == 0.0 || g_lo.signum() == g_new.signum() {
                        g_lo = g_prev;
                    }
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        let gm = ev.eval(mid, &step.eval(mid));
                        if gm == 0.0 || (hi - lo).abs() < 1e-15 * t_new.abs().max(1.0) {
                            lo = mid;
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
                    found = Some((te, step.eval(te)));
                    return false;
                }
            }
            g_prev = g_new;
            t_prev = t_new;
            true
        })?;
        found.ok_or(Error::NewtonDivergence {
            context: "event not found before t_max",
            residual: g_prev,
            iters: count,
        })
    }

    fn initial_step<const N: usize, S: OdeSystem<N>>(
        &self,
        sys: &S,
        t0: f64,
        y0: &[f64; N],
        f0: &[f64; N],
        dir: f64,
    ) -> f64 {
        // standard starting-step heuristic
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y0[i].abs();
            d0 += (y0[i] / sc) * (y0[i] / sc);
            d1 += (f0[i] / sc) * (f0[i] / sc);
        }
        d0 = (d0 / N as f64).sqrt();
        d1 = (d1 / N as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let mut y1 = *y0;
        for i in 0..N {
            y1[i] += dir * h0 * f0[i];
        }
        let mut f1 = [0.0; N];
        sys.rhs(t0 + dir * h0, &y1, &mut f1);
        let mut d2: f64 = 0.0;
        for i in 0..N {
            let sc = self.atol + self.rtol * y0[i].abs();
            let df = (f1[i] - f0[i]) / sc;
            d2 += df * df;
        }
        d2 = (d2 / N as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    struct Sho;
    impl OdeSystem<2> for Sho {
        fn rhs(&self, _t: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }

    #[test]
    fn harmonic_oscillator_accuracy() {
        let solver = Dopri5::new(1e-12, 1e-12);
        let y = solver.integrate(&Sho, 0.0, &[1.0, 0.0], 10.0).unwrap();
        assert_relative_eq!(y[0], 10.0_f64.cos(), epsilon = 1e-9);
        assert_relative_eq!(y[1], -(10.0_f64.sin()), epsilon = 1e-9);
    }

    #[test]
    fn dense_output_matches_solution() {
        let solver = Dopri5::new(1e-12, 1e-12);
        let mut worst: f64 = 0.0;
        solver
            .integrate_with(&Sho, 0.0, &[1.0, 0.0], 6.0, |step, _| {
                for j in 0..5 {
                    let t = step.t0 + step.h * j as f64 / 4.0;
                    let y = step.eval(t);
                    worst = worst.max((y[0] - t.cos()).abs());
                }
                true
            })
            .unwrap();
        assert!(worst < 1e-9, "dense output error {worst}");
    }

    struct ZeroCross;
    impl EventFn<2> for ZeroCross {
        fn eval(&self, _t: f64, y: &[f64; 2]) -> f64 {
            y[0]
        }
    }

    #[test]
    fn event_location() {
        let solver = Dopri5::new(1e-12, 1e-12);
        let (te, ye) = solver
            .integrate_to_event(&ZeroCross, &ZeroCross, 0.0, &[1.0, 0.0], 10.0, 1e-6, 1)
            .unwrap();
        assert_relative_eq!(te, std::f64::consts::FRAC_PI_2, epsilon = 1e-10);
        assert!(ye[0].abs() < 1e-10);
        // second crossing
        let (te2, _) = solver
            .integrate_to_event(&ZeroCross, &ZeroCross, 0.0, &[1.0, 0.0], 10.0, 1e-6, 2)
            .unwrap();
        assert_relative_eq!(te2, 1.5 * std::f64::consts::PI, epsilon = 1e-9);
    }

    impl OdeSystem<2> for ZeroCross {
        fn rhs(&self, _t: f64, y: &[f64; 2], dy: &mut [f64; 2]) {
            dy[0] = y[1];
            dy[1] = -y[0];
        }
    }
}
