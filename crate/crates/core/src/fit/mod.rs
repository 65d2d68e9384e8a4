//! Best worst-case spin-POVM approximation of a direction family.
//!
//! For a family `n ↦ 𝒫_n`, [`fit`] finds the binned spin POVM minimizing
//! `sup_n ‖𝒫_n − P_n‖` (TV) over the listed directions. The problem is
//! convex: a maximum of sums of absolute values of affine functions of the
//! Bloch coefficients, over the cones `α ≥ ‖β‖` and the completeness plane.
//! No fit can beat `delta / 4` of the family, so [`certify`] checks that
//! bound on every result.
//!
//! [`brute_force_fit`] is an independent oracle for tiny instances: a
//! polygonal inner approximation of the cones, solved as a linear program.

mod brute;
mod conic;
pub mod simplex;

use clarabel::solver::SolverStatus;
use serde::{Deserialize, Serialize};

use crate::checks;
use crate::distributions::DirectionFamily;
use crate::error::{Error, Result};
use crate::povm::{BinnedSpinPovm, POVM_TOL};
use crate::spin::{Direction, Effect};

pub use brute::brute_force_fit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: u32,
    /// Duality-gap tolerance on the minimax error.
    pub tol: f64,
    /// Recorded with the result; the interior-point solve does not draw
    /// random numbers, so every seed yields the same fit.
    pub seed: u64,
    /// Restrict every `β_k` to the family's symmetry axis.
    pub enforce_axial: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 50_000,
            tol: 1e-6,
            seed: 0,
            enforce_axial: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionError {
    pub direction: Direction,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub povm: BinnedSpinPovm,
    pub per_direction_error: Vec<DirectionError>,
    pub minimax_error: f64,
    /// `delta / 4` of the fitted family (0 with a single antipodal pair).
    pub lower_bound: f64,
    pub iterations: u32,
    pub converged: bool,
    pub solver_status: String,
    pub seed: u64,
    pub enforce_axial: bool,
}

impl FitResult {
    /// `minimax_error − lower_bound`.
    pub fn gap(&self) -> f64 {
        self.minimax_error - self.lower_bound
    }
}

/// `‖𝒫_n − P_n‖` for every listed `n`.
pub fn per_direction_errors(
    povm: &BinnedSpinPovm,
    f: &DirectionFamily,
) -> Result<Vec<DirectionError>> {
    if povm.grid != *f.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(f.entries()
        .iter()
        .map(|(n, d)| {
            let error = d
                .masses()
                .enumerate()
                .map(|(j, p)| (p - povm.outcome(j).expectation(n)).abs())
                .sum();
            DirectionError {
                direction: *n,
                error,
            }
        })
        .collect())
}

fn max_error(errors: &[DirectionError]) -> f64 {
    errors.iter().map(|e| e.error).fold(0.0, f64::max)
}

/// Slack allowed when preferring the spin-free POVM over an equally good fit.
const TIE_TOL: f64 = 1e-12;

/// The same POVM with every `β` dropped. Valid whenever the input is.
fn spin_free_part(p: &BinnedSpinPovm) -> Option<BinnedSpinPovm> {
    if p.effects
        .iter()
        .chain([&p.residual])
        .all(|e| e.beta == [0.0; 3])
    {
        return None;
    }
    let effects = p.effects.iter().map(|e| Effect::scalar(e.alpha)).collect();
    BinnedSpinPovm::new(p.grid, effects, Effect::scalar(p.residual.alpha)).ok()
}

/// `delta / 4`, or 0 when the family lists a single antipodal pair.
pub fn lower_bound(f: &DirectionFamily) -> Result<f64> {
    match checks::delta(f) {
        Ok(t) => Ok(t.delta / 4.0),
        Err(Error::TooFewDirections(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// The spin-independent POVM of the direction-averaged family.
pub fn initial_povm(f: &DirectionFamily) -> Result<BinnedSpinPovm> {
    let avg = f.direction_average();
    let effects = avg.weights().iter().map(|w| Effect::scalar(*w)).collect();
    let bins: f64 = avg.weights().iter().sum();
    BinnedSpinPovm::new(*f.grid(), effects, Effect::scalar(1.0 - bins))
}

/// Minimax spin-POVM fit. A solver that stops early still yields a result,
/// flagged `converged = false`.
pub fn fit(f: &DirectionFamily, opts: &FitOptions) -> Result<FitResult> {
    if f.grid().bin_count == 0 {
        return Err(Error::InfeasibleGrid);
    }
    if !f.is_normalized() {
        return Err(Error::InvalidFamily(
            "fitting requires a normalized family".into(),
        ));
    }
    let axis = if opts.enforce_axial {
        Some(f.axis().ok_or_else(|| {
            Error::MissingAxis("enforce_axial needs a family with a declared axis".into())
        })?)
    } else {
        None
    };

    let init = initial_povm(f)?;
    let init_errors = per_direction_errors(&init, f)?;
    let mut best = (init, init_errors);

    let gap_tol = (opts.tol * 1e-3).clamp(1e-12, 1e-8);
    let sol = conic::solve(f, axis, opts.max_iterations, gap_tol);
    let converged = matches!(sol.status, SolverStatus::Solved);
    if !sol.effects.is_empty() {
        if let Some(povm) = polish(f, sol.effects, axis) {
            let errors = per_direction_errors(&povm, f)?;
            if max_error(&errors) < max_error(&best.1) {
                best = (povm, errors);
            }
        }
    }

    // tie-break toward no spin dependence
    if let Some(flat) = spin_free_part(&best.0) {
        let errors = per_direction_errors(&flat, f)?;
        if max_error(&errors) <= max_error(&best.1) + TIE_TOL {
            best = (flat, errors);
        }
    }

    let (povm, per_direction_error) = best;
    Ok(FitResult {
        minimax_error: max_error(&per_direction_error),
        lower_bound: lower_bound(f)?,
        povm,
        per_direction_error,
        iterations: sol.iterations,
        converged,
        solver_status: format!("{:?}", sol.status),
        seed: opts.seed,
        enforce_axial: opts.enforce_axial,
    })
}

/// Turns a nearly feasible solver point into an exactly valid POVM: pin to
/// the axis, project each effect onto its cone, rebuild the residual from
/// completeness, and shrink the bins toward "no detection" if the residual
/// lost positivity.
fn polish(
    f: &DirectionFamily,
    raw: Vec<Effect>,
    axis: Option<Direction>,
) -> Option<BinnedSpinPovm> {
    if raw
        .iter()
        .any(|e| !e.alpha.is_finite() || e.beta.iter().any(|b| !b.is_finite()))
    {
        return None;
    }
    let pin = |e: Effect| match axis {
        Some(a) => {
            let c = crate::spin::dot3(&e.beta, &a.as_array());
            let v = a.as_array();
            Effect::new(e.alpha, [c * v[0], c * v[1], c * v[2]])
        }
        None => e,
    };
    let bins = f.grid().bin_count;
    let mut effects: Vec<Effect> = raw[..bins].iter().map(|e| pin(*e).project_psd()).collect();
    let complement = |effects: &[Effect]| Effect::IDENTITY - effects.iter().copied().sum();
    let mut residual = complement(&effects);
    for _ in 0..8 {
        let d = residual.psd_slack();
        if d <= 0.0 {
            break;
        }
        let s = (d / (1.0 + d)) * (1.0 + 1e-9) + 1e-16;
        effects.iter_mut().for_each(|e| *e = *e * (1.0 - s));
        residual = complement(&effects);
    }
    BinnedSpinPovm::new(*f.grid(), effects, residual).ok()
}

/// Recomputes the fit's errors and the family's `delta` from scratch and
/// checks validity and `minimax_error ≥ delta / 4 − 1e-9`.
pub fn certify(result: &FitResult, f: &DirectionFamily) -> bool {
    if !result.povm.validate_with_tol(POVM_TOL).is_empty() {
        return false;
    }
    let Ok(errors) = per_direction_errors(&result.povm, f) else {
        return false;
    };
    let recomputed = max_error(&errors);
    if (recomputed - result.minimax_error).abs() > 1e-9 {
        return false;
    }
    let Ok(bound) = lower_bound(f) else {
        return false;
    };
    recomputed >= bound - 1e-9
}
