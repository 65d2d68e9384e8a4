//! Time-binned spin POVMs: one effect per time bin plus a residual
//! "no detection" effect, summing to the identity.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{BinnedDistribution, DirectionFamily, TimeGrid};
use crate::error::{Error, Result};
use crate::spin::{Direction, Effect};

/// PSD and completeness tolerance.
pub const POVM_TOL: f64 = 1e-10;

/// Which outcome of the POVM an effect belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Bin(usize),
    Residual,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Bin(k) => write!(f, "bin {k}"),
            Outcome::Residual => write!(f, "residual"),
        }
    }
}

/// A broken POVM invariant together with how badly it is broken.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `‖β‖ − α = slack > tol`.
    NotPsd { outcome: Outcome, slack: f64 },
    /// `|Σ α − 1| = slack > tol`.
    AlphaCompleteness { slack: f64 },
    /// `|Σ β_component| = slack > tol`.
    BetaCompleteness { component: usize, slack: f64 },
    /// Effect count differs from the grid's bin count.
    BinCount { effects: usize, bins: usize },
}

impl Violation {
    pub fn slack(&self) -> f64 {
        match self {
            Violation::NotPsd { slack, .. }
            | Violation::AlphaCompleteness { slack }
            | Violation::BetaCompleteness { slack, .. } => *slack,
            Violation::BinCount { .. } => f64::INFINITY,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotPsd { outcome, slack } => {
                write!(f, "{outcome}: alpha < |beta| by {slack:e}")
            }
            Violation::AlphaCompleteness { slack } => {
                write!(f, "completeness: sum of alpha differs from 1 by {slack:e}")
            }
            Violation::BetaCompleteness { component, slack } => write!(
                f,
                "completeness: sum of beta[{component}] differs from 0 by {slack:e}"
            ),
            Violation::BinCount { effects, bins } => {
                write!(f, "{effects} effects for a grid of {bins} bins")
            }
        }
    }
}

/// A spin POVM resolved into time bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedSpinPovm {
    pub grid: TimeGrid,
    pub effects: Vec<Effect>,
    pub residual: Effect,
}

impl BinnedSpinPovm {
    /// Builds and validates at [`POVM_TOL`].
    pub fn new(grid: TimeGrid, effects: Vec<Effect>, residual: Effect) -> Result<Self> {
        grid.validate()?;
        let povm = BinnedSpinPovm {
            grid,
            effects,
            residual,
        };
        povm.check(POVM_TOL)?;
        Ok(povm)
    }

    /// Builds without validating; [`BinnedSpinPovm::validate`] reports what is
    /// wrong with it.
    pub fn new_unchecked(grid: TimeGrid, effects: Vec<Effect>, residual: Effect) -> Self {
        BinnedSpinPovm {
            grid,
            effects,
            residual,
        }
    }

    /// Spin-independent POVM `effects_k = p_k·I` with the remaining mass in
    /// the residual.
    pub fn spin_independent(grid: TimeGrid, probabilities: &[f64]) -> Result<Self> {
        let effects: Vec<Effect> = probabilities.iter().map(|p| Effect::scalar(*p)).collect();
        let rest = 1.0 - probabilities.iter().sum::<f64>();
        BinnedSpinPovm::new(grid, effects, Effect::scalar(rest))
    }

    /// Effect of outcome `j`; `j == bin_count` is the residual.
    pub fn outcome(&self, j: usize) -> &Effect {
        if j == self.effects.len() {
            &self.residual
        } else {
            &self.effects[j]
        }
    }

    pub fn outcomes(&self) -> impl Iterator<Item = (Outcome, &Effect)> {
        self.effects
            .iter()
            .enumerate()
            .map(|(k, e)| (Outcome::Bin(k), e))
            .chain(std::iter::once((Outcome::Residual, &self.residual)))
    }

    /// Every violated invariant at [`POVM_TOL`].
    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with_tol(POVM_TOL)
    }

    pub fn validate_with_tol(&self, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.effects.len() != self.grid.bin_count {
            out.push(Violation::BinCount {
                effects: self.effects.len(),
                bins: self.grid.bin_count,
            });
        }
        for (outcome, e) in self.outcomes() {
            let slack = e.psd_slack();
            if slack > tol || !slack.is_finite() {
                out.push(Violation::NotPsd { outcome, slack });
            }
        }
        let total: Effect = self.outcomes().map(|(_, e)| *e).sum();
        let slack = (total.alpha - 1.0).abs();
        if slack > tol || !slack.is_finite() {
            out.push(Violation::AlphaCompleteness { slack });
        }
        for (component, b) in total.beta.iter().enumerate() {
            let slack = b.abs();
            if slack > tol || !slack.is_finite() {
                out.push(Violation::BetaCompleteness { component, slack });
            }
        }
        out
    }

    pub fn check(&self, tol: f64) -> Result<()> {
        let v = self.validate_with_tol(tol);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidPovm(
                v.iter().map(|x| x.to_string()).collect(),
            ))
        }
    }

    /// `P_n(bin k) = ⟨n|O_k|n⟩`, censored mass from the residual.
    pub fn predict(&self, n: &Direction) -> Result<BinnedDistribution> {
        let clamp = |x: f64| -> Result<f64> {
            if x < -1e-9 {
                Err(Error::InvalidPovm(vec![format!(
                    "negative predicted probability {x:e} for direction {n}"
                )]))
            } else {
                Ok(x.max(0.0))
            }
        };
        let weights = self
            .effects
            .iter()
            .map(|e| clamp(e.expectation(n)))
            .collect::<Result<Vec<_>>>()?;
        let censored = clamp(self.residual.expectation(n))?;
        BinnedDistribution::normalized(self.grid, weights, censored)
    }

    /// `λ·self + (1 − λ)·other`, bin by bin.
    pub fn mix(&self, other: &BinnedSpinPovm, lambda: f64) -> Result<BinnedSpinPovm> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let effects = self
            .effects
            .iter()
            .zip(&other.effects)
            .map(|(a, b)| *a * lambda + *b * (1.0 - lambda))
            .collect();
        let residual = self.residual * lambda + other.residual * (1.0 - lambda);
        BinnedSpinPovm::new(self.grid, effects, residual)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let povm: BinnedSpinPovm = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.display().to_string(),
            source,
        })?;
        povm.grid.validate()?;
        povm.check(POVM_TOL)?;
        Ok(povm)
    }
}

/// Predicted family `n ↦ P_n` over an antipodally closed direction set.
pub fn predict_family(povm: &BinnedSpinPovm, directions: &[Direction]) -> Result<DirectionFamily> {
    povm.check(POVM_TOL)?;
    let entries = directions
        .iter()
        .map(|n| povm.predict(n).map(|d| (*n, d)))
        .collect::<Result<Vec<_>>>()?;
    DirectionFamily::new(povm.grid, entries, None)
}

/// Seeded random POVM for property tests. `spin_strength = 0` gives a
/// spin-independent POVM; `1` lets each bin's effect reach the cone boundary.
pub fn random_povm(grid: TimeGrid, seed: u64, spin_strength: f64) -> Result<BinnedSpinPovm> {
    grid.validate()?;
    if !(0.0..=1.0).contains(&spin_strength) {
        return Err(Error::InvalidPovm(vec![format!(
            "spin_strength {spin_strength} outside [0, 1]"
        )]));
    }
    const MAX_RETRIES: usize = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let raw: Vec<f64> = (0..grid.bin_count)
        .map(|_| rng.random::<f64>().powi(2) + 1e-3)
        .collect();
    let residual_share = rng.random_range(0.05..0.5);
    let total: f64 = raw.iter().sum();
    let alphas: Vec<f64> = raw
        .iter()
        .map(|w| (1.0 - residual_share) * w / total)
        .collect();
    let residual_alpha = 1.0 - alphas.iter().sum::<f64>();

    let mut betas = vec![[0.0; 3]; grid.bin_count];
    let mut accepted = false;
    for _ in 0..MAX_RETRIES {
        for (b, a) in betas.iter_mut().zip(&alphas) {
            *b = scale3(unit_ball(&mut rng), spin_strength * a);
        }
        if norm3(&sum3(&betas)) <= residual_alpha {
            accepted = true;
            break;
        }
    }
    if !accepted {
        // Shrink the last draw until the residual is positive.
        let s = residual_alpha / norm3(&sum3(&betas));
        for b in &mut betas {
            *b = scale3(*b, s);
        }
    }

    let effects: Vec<Effect> = alphas
        .iter()
        .zip(&betas)
        .map(|(a, b)| Effect::new(*a, *b))
        .collect();
    let sb = sum3(&betas);
    let residual = Effect::new(residual_alpha, [-sb[0], -sb[1], -sb[2]]);
    BinnedSpinPovm::new(grid, effects, residual)
}

fn unit_ball(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        if norm3(&v) <= 1.0 {
            return v;
        }
    }
}

fn sum3(v: &[[f64; 3]]) -> [f64; 3] {
    v.iter().fold([0.0; 3], |acc, b| {
        [acc[0] + b[0], acc[1] + b[1], acc[2] + b[2]]
    })
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn scale3(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}
