//! Dormand–Prince 5(4) integration of a 3D trajectory with first-crossing
//! detection for a scalar event function.

use serde::{Deserialize, Serialize};

// Butcher tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
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
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Crossing times are refined to this width.
pub const CROSSING_TIME_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub initial_step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            initial_step: 1e-2,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
        }
    }
}

/// Outcome of integrating one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossing<E> {
    /// The event function changed sign at this time.
    At { t: f64, x: [f64; 3] },
    /// No sign change before the horizon.
    None { x: [f64; 3] },
    /// The vector field refused to evaluate.
    Failed(E),
}

type Field<'a, E> = dyn Fn(f64, &[f64; 3]) -> Result<[f64; 3], E> + 'a;

/// Fifth-order solution, embedded error estimate, and derivative at the new point.
type StepResult = ([f64; 3], [f64; 3], [f64; 3]);

fn rk_step<E>(
    f: &Field<'_, E>,
    t: f64,
    y: &[f64; 3],
    k0: &[f64; 3],
    h: f64,
) -> Result<StepResult, E> {
    let mut k = [[0.0; 3]; 7];
    k[0] = *k0;
    for s in 1..7 {
        let mut ys = *y;
        for (j, kj) in k.iter().enumerate().take(s) {
            let a = A[s][j];
            if a != 0.0 {
                for d in 0..3 {
                    ys[d] += h * a * kj[d];
                }
            }
        }
        k[s] = f(t + C[s] * h, &ys)?;
    }
    let mut y5 = *y;
    let mut err = [0.0; 3];
    for s in 0..7 {
        for d in 0..3 {
            y5[d] += h * B5[s] * k[s][d];
            err[d] += h * (B5[s] - B4[s]) * k[s][d];
        }
    }
    // FSAL: stage 7 is f at the new point
    Ok((y5, err, k[6]))
}

/// Integrates `dx/dt = f(t, x)` from `(t0, x0)` up to `horizon` and reports
/// the first time `event` changes sign. Steps never exceed `max_step`, so a
/// double crossing inside one step needs an excursion shorter than that.
pub fn first_crossing<E>(
    f: &Field<'_, E>,
    event: &dyn Fn(&[f64; 3]) -> f64,
    t0: f64,
    x0: [f64; 3],
    horizon: f64,
    max_step: f64,
    ctl: &StepControl,
) -> Crossing<E> {
    let mut t = t0;
    let mut x = x0;
    let side = event(&x0) >= 0.0;
    let mut k0 = match f(t, &x) {
        Ok(v) => v,
        Err(e) => return Crossing::Failed(e),
    };
    let mut h = ctl.initial_step.min(max_step);

    while t < horizon {
        h = h.min(horizon - t).min(max_step);
        let (y, err, k_new) = match rk_step(f, t, &x, &k0, h) {
            Ok(s) => s,
            Err(e) => return Crossing::Failed(e),
        };
        let mut norm = 0.0f64;
        for d in 0..3 {
            let scale = ctl.abs_tol + ctl.rel_tol * x[d].abs().max(y[d].abs());
            norm = norm.max((err[d] / scale).abs());
        }
        if norm <= 1.0 {
            let g1 = event(&y);
            if (g1 >= 0.0) != side {
                return match refine(f, event, t, &x, &k0, h) {
                    Ok((tc, xc)) => Crossing::At { t: tc, x: xc },
                    Err(e) => Crossing::Failed(e),
                };
            }
            t += h;
            x = y;
            k0 = k_new;
        }
        let factor = if norm == 0.0 {
            5.0
        } else {
            (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        h = h.max(1e-14 * t.abs().max(1.0));
    }
    Crossing::None { x }
}

/// Illinois-modified secant iteration on the step `[t, t + h]`, evaluating
/// intermediate points with one Runge–Kutta step from the bracket start.
fn refine<E>(
    f: &Field<'_, E>,
    event: &dyn Fn(&[f64; 3]) -> f64,
    t: f64,
    x: &[f64; 3],
    k0: &[f64; 3],
    h: f64,
) -> Result<(f64, [f64; 3]), E> {
    let at = |tau: f64| -> Result<[f64; 3], E> {
        if tau == 0.0 {
            Ok(*x)
        } else {
            rk_step(f, t, x, k0, tau).map(|r| r.0)
        }
    };
    let (mut a, mut b) = (0.0, h);
    let mut ga = event(x);
    let mut xb = at(b)?;
    let mut gb = event(&xb);
    if ga == 0.0 {
        return Ok((t, *x));
    }
    let mut last_side = 0i8;
    for _ in 0..200 {
        if b - a <= CROSSING_TIME_TOL {
            break;
        }
        let mut c = b - gb * (b - a) / (gb - ga);
        if !(c > a && c < b) {
            c = 0.5 * (a + b);
        }
        let xc = at(c)?;
        let gc = event(&xc);
        if gc == 0.0 {
            return Ok((t + c, xc));
        }
        if (gc > 0.0) == (gb > 0.0) {
            b = c;
            gb = gc;
            xb = xc;
            if last_side == 1 {
                ga *= 0.5;
            }
            last_side = 1;
        } else {
            a = c;
            ga = gc;
            if last_side == -1 {
                gb *= 0.5;
            }
            last_side = -1;
        }
    }
    // the crossing lies in [a, b]; report the far end (first point past it)
    Ok((t + b, xb))
}
