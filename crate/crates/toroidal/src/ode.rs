//! Dormand–Prince 5(4) integrator for small autonomous-in-form systems.
//!
//! Three drivers are provided: adaptive integration that lands exactly on a
//! prescribed list of output nodes, fixed-step integration (used for order
//! studies), and event location by bisection on re-integrated substeps.

use crate::{Error, Real, Result};

/// Right-hand side `y' = f(t, y)` on a fixed-size state.
pub trait System<T, const D: usize> {
    fn rhs(&self, t: T, y: &[T; D]) -> [T; D];
}

impl<T, const D: usize, F> System<T, D> for F
where
    F: Fn(T, &[T; D]) -> [T; D],
{
    fn rhs(&self, t: T, y: &[T; D]) -> [T; D] {
        self(t, y)
    }
}

/// Step-size controller settings.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    pub rtol: T,
    pub atol: T,
    pub h_init: T,
    pub h_min: T,
    pub max_steps: usize,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            rtol: T::lit(1e-12),
            atol: T::lit(1e-14),
            h_init: T::lit(1e-3),
            h_min: T::lit(1e-14),
            max_steps: 2_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One Dormand–Prince step; returns the 5th-order solution and the
/// embedded error estimate.
pub fn dp5_step<T: Real, const D: usize, S: System<T, D>>(
    sys: &S,
    t: T,
    y: &[T; D],
    h: T,
) -> ([T; D], [T; D]) {
    let mut k = [[T::zero(); D]; 7];
    k[0] = sys.rhs(t, y);
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let aij = T::lit(A[s][j]);
            if aij != T::zero() {
                for d in 0..D {
                    ys[d] = ys[d] + h * aij * kj[d];
                }
            }
        }
        k[s] = sys.rhs(t + h * T::lit(C[s]), &ys);
    }
    let mut ynew = *y;
    let mut err = [T::zero(); D];
    for d in 0..D {
        let mut acc = T::zero();
        let mut e = T::zero();
        for s in 0..7 {
            if s < 6 {
                acc = acc + T::lit(A[6][s]) * k[s][d];
            }
            e = e + T::lit(E[s]) * k[s][d];
        }
        ynew[d] = y[d] + h * acc;
        err[d] = h * e;
    }
    (ynew, err)
}

fn err_norm<T: Real, const D: usize>(y: &[T; D], yn: &[T; D], e: &[T; D], tol: &Tolerances<T>) -> T {
    let mut s = T::zero();
    for d in 0..D {
        let sc = tol.atol + tol.rtol * y[d].abs().max(yn[d].abs());
        let r = e[d] / sc;
        s = s + r * r;
    }
    (s / T::of(D)).sqrt()
}

/// Adaptive integration from `(t0, y0)` through the increasing `nodes`,
/// returning the state at every node. Steps are clamped so each node is hit
/// exactly.
pub fn integrate_to_nodes<T: Real, const D: usize, S: System<T, D>>(
    sys: &S,
    t0: T,
    y0: [T; D],
    nodes: &[T],
    tol: &Tolerances<T>,
) -> Result<Vec<[T; D]>> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut t = t0;
    let mut y = y0;
    let mut h = tol.h_init;
    let mut steps = 0usize;
    for &tn in nodes {
        if tn < t {
            return Err(Error::Domain("output nodes must be increasing".into()));
        }
        while t < tn {
            if steps >= tol.max_steps {
                return Err(Error::IterationCap {
                    what: "ODE integration",
                    cap: tol.max_steps,
                });
            }
            let remaining = tn - t;
            let last = h >= remaining;
            let hs = if last { remaining } else { h };
            let (yn, e) = dp5_step(sys, t, &y, hs);
            let en = err_norm(&y, &yn, &e, tol);
            steps += 1;
            if en <= T::one() || hs <= tol.h_min {
                t = if last { tn } else { t + hs };
                y = yn;
            }
            let fac = if en == T::zero() {
                T::lit(5.0)
            } else {
                (T::lit(0.9) * en.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
            };
            let hn = hs * fac;
            if en > T::one() && hs <= tol.h_min {
                return Err(Error::StepUnderflow {
                    t: t.to_f64_lossy(),
                    h: hs.to_f64_lossy(),
                });
            }
            // a clamped final step should not shrink the controller's step
            h = if last && en <= T::one() { h.max(hn) } else { hn };
            if h < tol.h_min {
                h = tol.h_min;
            }
        }
        out.push(y);
    }
    Ok(out)
}

/// Fixed-step integration; returns `steps + 1` states including `y0`.
pub fn integrate_fixed<T: Real, const D: usize, S: System<T, D>>(
    sys: &S,
    t0: T,
    y0: [T; D],
    h: T,
    steps: usize,
) -> Vec<[T; D]> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y0);
    let mut y = y0;
    for i in 0..steps {
        let t = t0 + h * T::of(i);
        y = dp5_step(sys, t, &y, h).0;
        out.push(y);
    }
    out
}

/// First time in `(t0, t_max]` where `g(y)` changes sign, located by
/// bisection; inside a bracketing step the state is re-integrated with a
/// single step from the step start, which keeps the 5th-order accuracy.
pub fn find_event<T: Real, const D: usize, S: System<T, D>, G: Fn(T, &[T; D]) -> T>(
    sys: &S,
    t0: T,
    y0: [T; D],
    t_max: T,
    g: G,
    tol: &Tolerances<T>,
) -> Result<(T, [T; D])> {
    let mut t = t0;
    let mut y = y0;
    let mut h = tol.h_init;
    let mut g0 = g(t, &y);
    let mut steps = 0usize;
    while t < t_max {
        if steps >= tol.max_steps {
            return Err(Error::IterationCap {
                what: "event search",
                cap: tol.max_steps,
            });
        }
        steps += 1;
        let hs = h.min(t_max - t);
        let (yn, e) = dp5_step(sys, t, &y, hs);
        let en = err_norm(&y, &yn, &e, tol);
        let fac = if en == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * en.powf(T::lit(-0.2))).min(T::lit(5.0)).max(T::lit(0.2))
        };
        if en > T::one() && hs > tol.h_min {
            h = hs * fac;
            continue;
        }
        let g1 = g(t + hs, &yn);
        if g0 != T::zero() && g1.signum() != g0.signum() {
            let (mut lo, mut hi) = (T::zero(), hs);
            for _ in 0..200 {
                let mid = T::lit(0.5) * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let ym = dp5_step(sys, t, &y, mid).0;
                if g(t + mid, &ym).signum() == g0.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tt = t + T::lit(0.5) * (lo + hi);
            let yt = dp5_step(sys, t, &y, T::lit(0.5) * (lo + hi)).0;
            return Ok((tt, yt));
        }
        t = t + hs;
        y = yn;
        if g1 != T::zero() {
            g0 = g1;
        }
        h = hs * fac;
    }
    Err(Error::NoEvent {
        t0: t0.to_f64_lossy(),
        t1: t_max.to_f64_lossy(),
    })
}
