//! Exhaustive-accuracy oracle for tiny fitting problems.
//!
//! Only the projections `β_j·n` onto listed directions reach the objective,
//! and any component of `β_j` outside their span only tightens `α_j ≥ ‖β_j‖`,
//! so `β_j` can be restricted to that span (dimension 1 or 2). In two
//! dimensions the disk `‖β_j‖ ≤ α_j` is replaced by the inscribed regular
//! `resolution`-gon, turning the problem into a linear program solved by the
//! dense simplex in [`super::simplex`].
//!
//! The polygon is inside the disk, so the LP optimum is achieved by a valid
//! POVM and is never below the true optimum. Scaling the `β`s of an optimal
//! POVM by `cos(π/resolution)` lands inside the polygon, so the LP optimum
//! exceeds the true one by at most `1 − cos(π/resolution)`.

use super::simplex::{LinearProgram, Relation};
use crate::distributions::DirectionFamily;
use crate::error::{Error, Result};
use crate::spin::{dot3, Direction};

pub const MAX_BINS: usize = 3;
pub const MAX_PAIRS: usize = 2;

/// Best worst-direction TV error over spin POVMs with polygonal cones.
pub fn brute_force_fit(f: &DirectionFamily, resolution: usize) -> Result<f64> {
    let bins = f.grid().bin_count;
    if bins > MAX_BINS || f.pair_count() > MAX_PAIRS {
        return Err(Error::ProblemTooLarge(format!(
            "{bins} bins and {} pairs; the oracle takes at most {MAX_BINS} bins and {MAX_PAIRS} pairs",
            f.pair_count()
        )));
    }
    if resolution < 4 {
        return Err(Error::Input(format!(
            "resolution must be at least 4, got {resolution}"
        )));
    }

    let basis = span_basis(f);
    let dim = basis.len();
    let coords: Vec<Vec<f64>> = f
        .directions()
        .map(|n| basis.iter().map(|e| dot3(e, &n.as_array())).collect())
        .collect();

    let outcomes = bins + 1;
    let dirs = f.len();
    // t | α_j | b⁺_{j,d} | b⁻_{j,d} | u_{n,j}
    let alpha = |j: usize| 1 + j;
    let bp = |j: usize, d: usize| 1 + outcomes + j * dim + d;
    let bm = |j: usize, d: usize| 1 + outcomes + outcomes * dim + j * dim + d;
    let u = |n: usize, j: usize| 1 + outcomes * (1 + 2 * dim) + n * outcomes + j;
    let nvar = 1 + outcomes * (1 + 2 * dim) + dirs * outcomes;

    let mut lp = LinearProgram::new(nvar);
    lp.cost[0] = 1.0;

    lp.add_row(
        &(0..outcomes).map(|j| (alpha(j), 1.0)).collect::<Vec<_>>(),
        Relation::Eq,
        1.0,
    );
    for d in 0..dim {
        let terms: Vec<_> = (0..outcomes)
            .flat_map(|j| [(bp(j, d), 1.0), (bm(j, d), -1.0)])
            .collect();
        lp.add_row(&terms, Relation::Eq, 0.0);
    }

    for (n, (_, dist)) in f.entries().iter().enumerate() {
        for j in 0..outcomes {
            let p = dist.mass(j);
            // u ≥ p − α − b·c  and  u ≥ α + b·c − p
            let mut lo = vec![(u(n, j), -1.0), (alpha(j), -1.0)];
            let mut hi = vec![(u(n, j), -1.0), (alpha(j), 1.0)];
            for d in 0..dim {
                let c = coords[n][d];
                lo.extend([(bp(j, d), -c), (bm(j, d), c)]);
                hi.extend([(bp(j, d), c), (bm(j, d), -c)]);
            }
            lp.add_row(&lo, Relation::Le, -p);
            lp.add_row(&hi, Relation::Le, p);
        }
        let mut epi = vec![(0, -1.0)];
        epi.extend((0..outcomes).map(|j| (u(n, j), 1.0)));
        lp.add_row(&epi, Relation::Le, 0.0);
    }

    for j in 0..outcomes {
        match dim {
            0 => {}
            1 => {
                lp.add_row(
                    &[(bp(j, 0), 1.0), (bm(j, 0), -1.0), (alpha(j), -1.0)],
                    Relation::Le,
                    0.0,
                );
                lp.add_row(
                    &[(bp(j, 0), -1.0), (bm(j, 0), 1.0), (alpha(j), -1.0)],
                    Relation::Le,
                    0.0,
                );
            }
            _ => {
                let inradius = (std::f64::consts::PI / resolution as f64).cos();
                for m in 0..resolution {
                    let th = std::f64::consts::TAU * m as f64 / resolution as f64;
                    let (s, c) = th.sin_cos();
                    lp.add_row(
                        &[
                            (bp(j, 0), c),
                            (bm(j, 0), -c),
                            (bp(j, 1), s),
                            (bm(j, 1), -s),
                            (alpha(j), -inradius),
                        ],
                        Relation::Le,
                        0.0,
                    );
                }
            }
        }
    }

    Ok(lp.solve()?.objective)
}

/// Orthonormal basis of the span of the listed directions.
fn span_basis(f: &DirectionFamily) -> Vec<[f64; 3]> {
    let mut basis: Vec<[f64; 3]> = Vec::new();
    let reps: Vec<Direction> = f.pairs().map(|((n, _), _)| *n).collect();
    for n in reps {
        let mut v = n.as_array();
        for e in &basis {
            let c = dot3(&v, e);
            for k in 0..3 {
                v[k] -= c * e[k];
            }
        }
        let norm = dot3(&v, &v).sqrt();
        if norm > 1e-9 {
            basis.push([v[0] / norm, v[1] / norm, v[2] / norm]);
        }
    }
    basis
}
