//! Necessary conditions for a direction family to come from a spin POVM.
//!
//! For any spin POVM `O` the antipodal sum `P_n + P_{−n}` equals `Tr O` and
//! so cannot depend on `n`. The checks here measure how badly a family
//! breaks that, in total variation:
//!
//! * `delta`: the largest discrepancy between antipodal-pair sums. Any
//!   approximating spin POVM has worst-direction error at least `delta / 4`.
//! * `axial_defect`: `‖𝒫↑ + 𝒫↓ − 2𝒫→‖`, the same comparison restricted to
//!   the axis and a perpendicular direction.
//! * `chiral_defect`: under axial symmetry with `𝒫↑ = 𝒫↓`, a spin POVM
//!   produces no spin dependence at all, so every `𝒫_n` must equal `𝒫↑`.
//! * `inversion_defect`: `sup_n ‖𝒫_n − 𝒫_{−n}‖`. An inversion-symmetric
//!   family can only be POVM-compatible if it is direction-independent.
//!
//! All suprema run over the listed directions only, so they are lower
//! estimates of the suprema over the whole sphere.

use serde::{Deserialize, Serialize};

use crate::distributions::{combine, tv_distance, BinnedDistribution, DirectionFamily};
use crate::error::{Error, Result};
use crate::spin::Direction;

/// `|n·axis|` at or below this makes `n` perpendicular to the axis.
pub const PERPENDICULAR_TOL: f64 = 1e-6;
/// Default verdict tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;

/// Verdict tolerance for a family estimated from `trajectories` samples:
/// three binomial standard errors on the TV scale.
pub fn suggested_tol(trajectories: u64) -> f64 {
    3.0 * (2.0 / (trajectories as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDefect {
    pub n: Direction,
    pub m: Direction,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub delta: f64,
    pub pairs: Vec<PairDefect>,
}

/// `sup_{n,m} ‖(𝒫_n + 𝒫_{−n}) − (𝒫_m + 𝒫_{−m})‖` over listed directions,
/// with the defect of every unordered pair of antipodal pairs.
pub fn delta(f: &DirectionFamily) -> Result<DeltaTable> {
    if f.pair_count() < 2 {
        return Err(Error::TooFewDirections(f.pair_count()));
    }
    let sums = antipodal_sums(f)?;
    let mut pairs = Vec::new();
    for i in 0..sums.len() {
        for j in i + 1..sums.len() {
            pairs.push(PairDefect {
                n: sums[i].0,
                m: sums[j].0,
                defect: tv_distance(&sums[i].1, &sums[j].1)?,
            });
        }
    }
    let delta = pairs.iter().map(|p| p.defect).fold(0.0, f64::max);
    Ok(DeltaTable { delta, pairs })
}

/// `𝒫_n + 𝒫_{−n}` for one representative `n` of each antipodal pair.
pub fn antipodal_sums(f: &DirectionFamily) -> Result<Vec<(Direction, BinnedDistribution)>> {
    f.pairs()
        .map(|((n, p), (_, q))| Ok((*n, combine(p, q, 1.0, 1.0)?)))
        .collect()
}

fn axis_pair(f: &DirectionFamily) -> Result<(Direction, &BinnedDistribution, &BinnedDistribution)> {
    let axis = f
        .axis()
        .ok_or_else(|| Error::MissingAxis("family declares no symmetry axis".into()))?;
    let (up, down) = f.antipode_lookup(&axis).map_err(|_| {
        Error::MissingAxis(format!("axis direction {axis} is not listed in the family"))
    })?;
    Ok((axis, up, down))
}

/// Directions listed in `f` that are perpendicular to its axis.
pub fn perpendicular_directions(f: &DirectionFamily) -> Result<Vec<Direction>> {
    let (axis, _, _) = axis_pair(f)?;
    Ok(f.directions()
        .filter(|n| n.dot(&axis).abs() <= PERPENDICULAR_TOL)
        .collect())
}

/// `max_b ‖𝒫↑ + 𝒫↓ − 2𝒫_b‖` over listed directions `b ⟂ axis`.
pub fn axial_defect(f: &DirectionFamily) -> Result<f64> {
    let (_, up, down) = axis_pair(f)?;
    let perp = perpendicular_directions(f)?;
    if perp.is_empty() {
        return Err(Error::MissingPerpendicularDirection);
    }
    let axial_sum = combine(up, down, 1.0, 1.0)?;
    let mut worst = 0.0f64;
    for b in perp {
        let pb = f.get(&b)?;
        let twice = combine(pb, pb, 1.0, 1.0)?;
        worst = worst.max(tv_distance(&axial_sum, &twice)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Applicability {
    Applicable,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiralDefect {
    /// `sup_n ‖𝒫_n − 𝒫↑‖`.
    pub defect: f64,
    /// `‖𝒫↑ − 𝒫↓‖`; the condition only applies when this is within tolerance.
    pub hypothesis_gap: f64,
    pub status: Applicability,
}

/// Spin dependence of a family that is symmetric between the two senses of
/// rotation about its axis. Reported even when `𝒫↑ ≠ 𝒫↓`, flagged
/// [`Applicability::NotApplicable`].
pub fn chiral_defect(f: &DirectionFamily, tol: f64) -> Result<ChiralDefect> {
    let (_, up, down) = axis_pair(f)?;
    let hypothesis_gap = tv_distance(up, down)?;
    let mut defect = 0.0f64;
    for (_, p) in f.entries() {
        defect = defect.max(tv_distance(p, up)?);
    }
    Ok(ChiralDefect {
        defect,
        hypothesis_gap,
        status: if hypothesis_gap <= tol {
            Applicability::Applicable
        } else {
            Applicability::NotApplicable
        },
    })
}

/// `sup_n ‖𝒫_n − 𝒫_{−n}‖`.
pub fn inversion_defect(f: &DirectionFamily) -> f64 {
    f.pairs()
        .map(|((_, p), (_, q))| tv_distance(p, q).expect("family shares one grid"))
        .fold(0.0, f64::max)
}

/// `sup_{n,m} ‖𝒫_n − 𝒫_m‖`: zero iff the family shows no spin dependence.
pub fn spin_dependence(f: &DirectionFamily) -> f64 {
    let e = f.entries();
    let mut worst = 0.0f64;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            worst = worst.max(tv_distance(&e[i].1, &e[j].1).expect("family shares one grid"));
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    PovmCompatibleAtTol,
    Incompatible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub delta: f64,
    /// `delta / 4`: no spin POVM reproduces the family with a smaller
    /// worst-direction TV error.
    pub lower_bound: f64,
    pub axial_defect: Option<f64>,
    pub chiral_defect: Option<ChiralDefect>,
    pub inversion_defect: f64,
    pub spin_dependence: f64,
    pub per_pair_table: Vec<PairDefect>,
    pub verdict: Verdict,
    pub tol: f64,
    /// Number of listed directions the suprema ran over.
    pub direction_count: usize,
    pub notes: Vec<String>,
}

/// Runs every check. Axis-dependent checks are `None` when the family has no
/// usable axis; the reason goes into `notes`.
pub fn full_report(f: &DirectionFamily, tol: f64) -> Result<CheckReport> {
    let table = delta(f)?;
    let mut notes = Vec::new();

    let axial = match axial_defect(f) {
        Ok(v) => Some(v),
        Err(e @ (Error::MissingAxis(_) | Error::MissingPerpendicularDirection)) => {
            notes.push(format!("axial_defect skipped: {e}"));
            None
        }
        Err(e) => return Err(e),
    };
    let chiral = match chiral_defect(f, tol) {
        Ok(c) => {
            if c.status == Applicability::NotApplicable {
                notes.push(format!(
                    "chiral_defect not applicable: tv(up, down) = {:.6} exceeds tol",
                    c.hypothesis_gap
                ));
            }
            Some(c)
        }
        Err(Error::MissingAxis(_)) => None,
        Err(e) => return Err(e),
    };
    let inversion = inversion_defect(f);
    let spin_dep = spin_dependence(f);
    if inversion <= tol {
        notes.push(format!(
            "family is inversion-symmetric at tol; POVM compatibility would require \
             spin_dependence = {spin_dep:.6} (see chiral_defect) to vanish"
        ));
    }

    let verdict = if table.delta > tol {
        Verdict::Incompatible
    } else {
        Verdict::PovmCompatibleAtTol
    };
    Ok(CheckReport {
        delta: table.delta,
        lower_bound: table.delta / 4.0,
        axial_defect: axial,
        chiral_defect: chiral,
        inversion_defect: inversion,
        spin_dependence: spin_dep,
        per_pair_table: table.pairs,
        verdict,
        tol,
        direction_count: f.len(),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::TimeGrid;
    use crate::povm::{predict_family, random_povm, BinnedSpinPovm};
    use crate::spin::Effect;

    fn grid(k: usize) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, k).unwrap()
    }

    /// `𝒫_{±z} = δ_a`, `𝒫_{±x} = δ_b`.
    fn two_point(a: usize, b: usize) -> DirectionFamily {
        let g = grid(4);
        let da = BinnedDistribution::point_mass(g, a).unwrap();
        let db = BinnedDistribution::point_mass(g, b).unwrap();
        DirectionFamily::new(
            g,
            vec![
                (Direction::Z, da.clone()),
                (-Direction::Z, da),
                (Direction::X, db.clone()),
                (-Direction::X, db),
            ],
            Some(Direction::Z),
        )
        .unwrap()
    }

    fn zxy() -> Vec<Direction> {
        vec![
            Direction::Z,
            -Direction::Z,
            Direction::X,
            -Direction::X,
            Direction::Y,
            -Direction::Y,
        ]
    }

    #[test]
    fn delta_of_povm_family_vanishes() {
        let povm = random_povm(grid(20), 5, 1.0).unwrap();
        let f = predict_family(&povm, &zxy()).unwrap();
        let t = delta(&f).unwrap();
        assert!(t.delta <= 1e-10);
        assert_eq!(t.pairs.len(), 3);
    }

    #[test]
    fn two_point_family() {
        let f = two_point(1, 3);
        assert_eq!(delta(&f).unwrap().delta, 4.0);
        assert_eq!(axial_defect(&f).unwrap(), 4.0);
        let c = chiral_defect(&f, 1e-9).unwrap();
        assert_eq!(c.defect, 2.0);
        assert_eq!(c.hypothesis_gap, 0.0);
        assert_eq!(c.status, Applicability::Applicable);
        assert_eq!(inversion_defect(&f), 0.0);

        let r = full_report(&f, 1e-8).unwrap();
        assert_eq!(r.verdict, Verdict::Incompatible);
        assert_eq!(r.lower_bound, 1.0);
        assert_eq!(
            r.delta,
            r.per_pair_table
                .iter()
                .map(|p| p.defect)
                .fold(0.0, f64::max)
        );
    }

    #[test]
    fn delta_matches_hand_enumeration_after_perturbation() {
        let g = grid(5);
        let povm = random_povm(g, 21, 0.9).unwrap();
        let dirs = zxy();
        let f = predict_family(&povm, &dirs).unwrap();

        // perturb P_x: add eps to bin 2, renormalize
        let eps = 0.03;
        let mut entries: Vec<_> = f.entries().to_vec();
        let ix = entries
            .iter()
            .position(|(n, _)| n.approx_eq(&Direction::X, 1e-12))
            .unwrap();
        let d = &entries[ix].1;
        let mut w = d.weights().to_vec();
        w[2] += eps;
        let s = 1.0 + eps;
        let w: Vec<f64> = w.iter().map(|x| x / s).collect();
        let c = d.censored() / s;
        entries[ix].1 = BinnedDistribution::normalized(g, w, c).unwrap();
        let f2 = DirectionFamily::new(g, entries.clone(), None).unwrap();

        // brute force: all ordered (n, m) over all six directions
        let mass = |n: &Direction| -> Vec<f64> {
            let p = entries.iter().find(|(m, _)| m.approx_eq(n, 1e-12)).unwrap();
            let q = entries
                .iter()
                .find(|(m, _)| m.approx_eq(&-*n, 1e-12))
                .unwrap();
            p.1.masses().zip(q.1.masses()).map(|(a, b)| a + b).collect()
        };
        let mut want = 0.0f64;
        for n in &dirs {
            for m in &dirs {
                let (a, b) = (mass(n), mass(m));
                want = want.max(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum());
            }
        }
        let got = delta(&f2).unwrap().delta;
        assert!((got - want).abs() <= 1e-14, "{got} vs {want}");
        assert!(got > 0.0);
    }

    #[test]
    fn too_few_directions() {
        let g = grid(2);
        let d = BinnedDistribution::point_mass(g, 0).unwrap();
        let f = DirectionFamily::new(g, vec![(Direction::Z, d.clone()), (-Direction::Z, d)], None)
            .unwrap();
        assert!(matches!(delta(&f), Err(Error::TooFewDirections(1))));
    }

    #[test]
    fn axial_defect_from_definition() {
        // 𝒫↑ = 𝒫↓ = u, 𝒫_b = v gives 2·tv(u, v)
        let g = grid(3);
        let u = BinnedDistribution::normalized(g, vec![0.5, 0.3, 0.1], 0.1).unwrap();
        let v = BinnedDistribution::normalized(g, vec![0.2, 0.2, 0.2], 0.4).unwrap();
        let f = DirectionFamily::new(
            g,
            vec![
                (Direction::Z, u.clone()),
                (-Direction::Z, u.clone()),
                (Direction::Y, v.clone()),
                (-Direction::Y, v.clone()),
            ],
            Some(Direction::Z),
        )
        .unwrap();
        let want = 2.0 * tv_distance(&u, &v).unwrap();
        assert!((axial_defect(&f).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn axial_defect_vanishes_for_axial_povm() {
        // β_k parallel to the axis
        let mut povm = random_povm(grid(10), 2, 1.0).unwrap();
        let mut acc = 0.0;
        for e in &mut povm.effects {
            e.beta = [
                0.0,
                0.0,
                0.5 * e.alpha * (1.0 - 2.0 * (acc > 0.0) as i32 as f64),
            ];
            acc += e.beta[2];
        }
        povm.residual.beta = [0.0, 0.0, -acc];
        assert!(povm.validate().is_empty());
        let mut f = predict_family(&povm, &zxy()).unwrap();
        f.set_axis(Some(Direction::Z));
        assert!(axial_defect(&f).unwrap() <= 1e-10);
    }

    #[test]
    fn axial_errors() {
        let povm = random_povm(grid(3), 2, 1.0).unwrap();
        let f = predict_family(&povm, &zxy()).unwrap();
        assert!(matches!(axial_defect(&f), Err(Error::MissingAxis(_))));
        assert!(matches!(
            chiral_defect(&f, 1e-9),
            Err(Error::MissingAxis(_))
        ));

        let tilted = Direction::new(1.0, 0.0, 1.0).unwrap();
        let mut f = predict_family(&povm, &[Direction::Z, -Direction::Z, tilted, -tilted]).unwrap();
        f.set_axis(Some(Direction::Z));
        assert!(matches!(
            axial_defect(&f),
            Err(Error::MissingPerpendicularDirection)
        ));
        f.set_axis(Some(Direction::X));
        assert!(matches!(axial_defect(&f), Err(Error::MissingAxis(_))));
    }

    #[test]
    fn chiral_on_spin_independent_povm() {
        let povm = random_povm(grid(8), 4, 0.0).unwrap();
        let mut f = predict_family(&povm, &zxy()).unwrap();
        f.set_axis(Some(Direction::Z));
        assert!(chiral_defect(&f, 1e-9).unwrap().defect <= 1e-10);
    }

    #[test]
    fn chiral_not_applicable_for_axial_beta() {
        // β along z in every bin: axially symmetric but not chiral
        let g = grid(2);
        let povm = BinnedSpinPovm::new(
            g,
            vec![
                Effect::new(0.3, [0.0, 0.0, 0.2]),
                Effect::new(0.3, [0.0, 0.0, -0.1]),
            ],
            Effect::new(0.4, [0.0, 0.0, -0.1]),
        )
        .unwrap();
        let mut f = predict_family(&povm, &zxy()).unwrap();
        f.set_axis(Some(Direction::Z));
        let c = chiral_defect(&f, 1e-9).unwrap();
        // tv(P↑, P↓) = Σ 2|β_z| = 0.8
        assert!((c.hypothesis_gap - 0.8).abs() < 1e-12);
        assert_eq!(c.status, Applicability::NotApplicable);
        assert!(c.defect > 0.0);
        let r = full_report(&f, 1e-9).unwrap();
        assert_eq!(r.verdict, Verdict::PovmCompatibleAtTol);
        assert!(r.notes.iter().any(|n| n.contains("not applicable")));
    }

    #[test]
    fn inversion_examples() {
        let povm = random_povm(grid(8), 4, 0.0).unwrap();
        let f = predict_family(&povm, &zxy()).unwrap();
        assert_eq!(inversion_defect(&f), 0.0);

        let proj = BinnedSpinPovm::new(
            grid(1),
            vec![Effect::projector(Direction::Z)],
            Effect::projector(-Direction::Z),
        )
        .unwrap();
        let f = predict_family(&proj, &zxy()).unwrap();
        assert_eq!(inversion_defect(&f), 2.0);
    }

    #[test]
    fn report_on_povm_family() {
        let povm = random_povm(grid(30), 9, 1.0).unwrap();
        let f = predict_family(&povm, &zxy()).unwrap();
        let r = full_report(&f, 1e-8).unwrap();
        assert_eq!(r.verdict, Verdict::PovmCompatibleAtTol);
        assert!(r.lower_bound <= 2.5e-11);
        assert_eq!(r.lower_bound, r.delta / 4.0);
        assert!(r.axial_defect.is_none());
        assert_eq!(r.direction_count, 6);
    }

    #[test]
    fn report_serializes_verdict_names() {
        let r = full_report(&two_point(0, 2), 1e-6).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["verdict"], "INCOMPATIBLE");
        assert_eq!(v["chiral_defect"]["status"], "APPLICABLE");
        assert_eq!(
            v["per_pair_table"][0]["n"],
            serde_json::json!([0.0, 0.0, 1.0])
        );
    }
}
