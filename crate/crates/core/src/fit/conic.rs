//! Second-order-cone form of the minimax fit, solved with Clarabel.
//!
//! Variables, in order: the epigraph bound `t`; `(α_j, β_j)` for every
//! outcome `j` (bins then residual); and `u_{n,j} ≥ |𝒫_{n,j} − α_j − β_j·n|`.
//!
//! ```text
//! min t
//!   Σ_j α_j = 1,  Σ_j β_j = 0
//!   u_{n,j} ± (𝒫_{n,j} − α_j − β_j·n) ≥ 0
//!   t − Σ_j u_{n,j} ≥ 0
//!   (α_j, β_j) ∈ SOC₄
//! ```
//!
//! With `axis` set, `β_j` is also pinned to the axis by two equalities per
//! outcome.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::distributions::DirectionFamily;
use crate::spin::{Direction, Effect};

pub(crate) struct ConicSolution {
    pub effects: Vec<Effect>,
    pub status: SolverStatus,
    pub iterations: u32,
}

struct Rows {
    i: Vec<usize>,
    j: Vec<usize>,
    v: Vec<f64>,
    b: Vec<f64>,
}

impl Rows {
    fn push(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let r = self.b.len();
        for &(j, v) in terms {
            if v != 0.0 {
                self.i.push(r);
                self.j.push(j);
                self.v.push(v);
            }
        }
        self.b.push(rhs);
    }
}

pub(crate) fn solve(
    f: &DirectionFamily,
    axis: Option<Direction>,
    max_iter: u32,
    gap_tol: f64,
) -> ConicSolution {
    let outcomes = f.grid().bin_count + 1;
    let dirs = f.len();
    let alpha = |j: usize| 1 + 4 * j;
    let beta = |j: usize, c: usize| 2 + 4 * j + c;
    let u = |n: usize, j: usize| 1 + 4 * outcomes + n * outcomes + j;
    let nvar = 1 + 4 * outcomes + dirs * outcomes;

    let mut rows = Rows {
        i: Vec::new(),
        j: Vec::new(),
        v: Vec::new(),
        b: Vec::new(),
    };
    let mut cones = Vec::new();

    // completeness (+ axial pinning)
    let mut zero_rows = 0;
    rows.push(
        &(0..outcomes).map(|j| (alpha(j), 1.0)).collect::<Vec<_>>(),
        1.0,
    );
    zero_rows += 1;
    for c in 0..3 {
        rows.push(
            &(0..outcomes).map(|j| (beta(j, c), 1.0)).collect::<Vec<_>>(),
            0.0,
        );
        zero_rows += 1;
    }
    if let Some(a) = axis {
        let e1 = a.any_perpendicular();
        let e2 = crate::spin::cross3(&a.as_array(), &e1.as_array());
        for j in 0..outcomes {
            for e in [e1.as_array(), e2] {
                rows.push(&(0..3).map(|c| (beta(j, c), e[c])).collect::<Vec<_>>(), 0.0);
                zero_rows += 1;
            }
        }
    }
    cones.push(SupportedConeT::ZeroConeT(zero_rows));

    // |residual| bounds and epigraph
    let mut nonneg = 0;
    for (n, (dir, d)) in f.entries().iter().enumerate() {
        let nv = dir.as_array();
        for j in 0..outcomes {
            let p = d.mass(j);
            let mut lo = vec![(u(n, j), -1.0), (alpha(j), -1.0)];
            let mut hi = vec![(u(n, j), -1.0), (alpha(j), 1.0)];
            for c in 0..3 {
                lo.push((beta(j, c), -nv[c]));
                hi.push((beta(j, c), nv[c]));
            }
            rows.push(&lo, -p);
            rows.push(&hi, p);
            nonneg += 2;
        }
        let mut epi = vec![(0, -1.0)];
        epi.extend((0..outcomes).map(|j| (u(n, j), 1.0)));
        rows.push(&epi, 0.0);
        nonneg += 1;
    }
    cones.push(SupportedConeT::NonnegativeConeT(nonneg));

    for j in 0..outcomes {
        rows.push(&[(alpha(j), -1.0)], 0.0);
        for c in 0..3 {
            rows.push(&[(beta(j, c), -1.0)], 0.0);
        }
        cones.push(SupportedConeT::SecondOrderConeT(4));
    }

    let m = rows.b.len();
    let a = CscMatrix::new_from_triplets(m, nvar, rows.i, rows.j, rows.v);
    let p = CscMatrix::zeros((nvar, nvar));
    let mut q = vec![0.0; nvar];
    q[0] = 1.0;

    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(max_iter)
        .tol_gap_abs(gap_tol)
        .tol_gap_rel(gap_tol)
        .tol_feas(1e-10)
        .build()
        .expect("static solver settings are valid");
    let mut solver = match DefaultSolver::new(&p, &q, &a, &rows.b, &cones, settings) {
        Ok(s) => s,
        Err(_) => {
            return ConicSolution {
                effects: Vec::new(),
                status: SolverStatus::NumericalError,
                iterations: 0,
            }
        }
    };
    solver.solve();
    let x = &solver.solution.x;
    let effects = (0..outcomes)
        .map(|j| Effect::new(x[alpha(j)], [x[beta(j, 0)], x[beta(j, 1)], x[beta(j, 2)]]))
        .collect();
    ConicSolution {
        effects,
        status: solver.solution.status,
        iterations: solver.solution.iterations,
    }
}
