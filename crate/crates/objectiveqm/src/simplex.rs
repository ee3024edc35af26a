//! Dense phase-1 simplex (with an optional phase-2 objective) for small
//! equality-constrained feasibility problems: find x >= 0 with Ax = b.
//!
//! Bland's rule everywhere, so no cycling; reduced costs are recomputed from
//! the cost vector every iteration rather than carried in the tableau, which
//! keeps drift out of the pivoting decisions at these problem sizes.
//! Infeasibility verdicts return a Farkas certificate y with y.A <= 0 and
//! y.b > 0, verified before being reported.

use crate::error::{Error, Result};

/// Entries smaller than this never serve as pivots.
pub const PIVOT_TOL: f64 = 1e-10;
/// Phase-1 objective at or below this certifies feasibility.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Phase-1 objective above this certifies infeasibility; the band between
/// the two thresholds is reported as numerically ambiguous.
pub const INFEASIBILITY_GAP: f64 = 1e-7;

const MAX_PIVOTS: usize = 200_000;

/// Equality-constrained feasibility problem over nonnegative variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProblem {
    num_vars: usize,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

impl FeasibilityProblem {
    pub fn new(num_vars: usize, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        if rows.len() != rhs.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} right-hand sides",
                rows.len(),
                rhs.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != num_vars {
                return Err(Error::invalid(format!(
                    "row {i} has {} coefficients, expected {num_vars}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} has non-finite coefficients")));
            }
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite right-hand side"));
        }
        Ok(FeasibilityProblem { num_vars, rows, rhs })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rhs(&self, i: usize) -> f64 {
        self.rhs[i]
    }

    /// Max-norm residual of a candidate solution against the original system.
    pub fn residual(&self, x: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| {
                let ax: f64 = row.iter().zip(x).map(|(a, xi)| a * xi).sum();
                (ax - b).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Outcome of a feasibility solve.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Feasible(Vec<f64>),
    Infeasible {
        /// Phase-1 objective: the least achievable total constraint violation.
        objective: f64,
        /// Farkas multipliers in original row order.
        certificate: Vec<f64>,
    },
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Feasible(_))
    }
}

/// Finds x >= 0 with Ax = b, or certifies that none exists.
pub fn lp_feasibility(problem: &FeasibilityProblem) -> Result<LpOutcome> {
    let mut t = Tableau::new(problem);
    t.run_phase1()?;
    t.phase1_verdict(problem)
}

/// Maximizes `objective . x` over {x >= 0, Ax = b}. Returns the optimal
/// vertex, or the infeasibility certificate when the set is empty.
pub fn lp_maximize(problem: &FeasibilityProblem, objective: &[f64]) -> Result<LpOutcome> {
    if objective.len() != problem.num_vars {
        return Err(Error::invalid(format!(
            "objective has {} coefficients, expected {}",
            objective.len(),
            problem.num_vars
        )));
    }
    let mut t = Tableau::new(problem);
    t.run_phase1()?;
    match t.phase1_verdict(problem)? {
        LpOutcome::Feasible(_) => {}
        infeasible => return Ok(infeasible),
    }
    t.drive_out_artificials();
    t.run_phase2(objective)?;
    let x = t.extract(problem)?;
    Ok(LpOutcome::Feasible(x))
}

struct Tableau {
    /// Structural variable count.
    n: usize,
    /// Rows over n structural + m artificial columns.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    /// Sign applied to each original row to make the rhs nonnegative.
    signs: Vec<f64>,
    /// Maps tableau rows back to original row indices (rows can be dropped
    /// as redundant when artificials are driven out).
    row_origin: Vec<usize>,
}

impl Tableau {
    fn new(problem: &FeasibilityProblem) -> Self {
        let m = problem.rows.len();
        let n = problem.num_vars;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut signs = Vec::with_capacity(m);
        for (i, row) in problem.rows.iter().enumerate() {
            let sign = if problem.rhs[i] < 0.0 { -1.0 } else { 1.0 };
            let mut r: Vec<f64> = row.iter().map(|v| sign * v).collect();
            r.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
            rows.push(r);
            rhs.push(sign * problem.rhs[i]);
            signs.push(sign);
        }
        Tableau {
            n,
            rows,
            rhs,
            basis: (0..m).map(|i| n + i).collect(),
            signs,
            row_origin: (0..m).collect(),
        }
    }

    fn width(&self) -> usize {
        self.n + self.signs.len()
    }

    fn is_artificial(&self, var: usize) -> bool {
        var >= self.n
    }

    /// Reduced costs for a cost vector over all columns.
    fn reduced_costs(&self, cost: &dyn Fn(usize) -> f64) -> Vec<f64> {
        let width = self.width();
        let mut reduced: Vec<f64> = (0..width).map(cost).collect();
        for (row, &basic) in self.rows.iter().zip(&self.basis) {
            let cb = cost(basic);
            if cb != 0.0 {
                for j in 0..width {
                    reduced[j] -= cb * row[j];
                }
            }
        }
        reduced
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let pivot = self.rows[prow][pcol];
        let width = self.width();
        for j in 0..width {
            self.rows[prow][j] /= pivot;
        }
        self.rhs[prow] /= pivot;
        for i in 0..self.rows.len() {
            if i == prow {
                continue;
            }
            let factor = self.rows[i][pcol];
            if factor == 0.0 {
                continue;
            }
            for j in 0..width {
                self.rows[i][j] -= factor * self.rows[prow][j];
            }
            self.rhs[i] -= factor * self.rhs[prow];
            if self.rhs[i] < 0.0 && self.rhs[i] > -1e-13 {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[prow] = pcol;
    }

    /// Bland ratio test: least ratio, ties broken by smallest basic index.
    fn leaving_row(&self, pcol: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.rows.len() {
            let coeff = self.rows[i][pcol];
            if coeff > PIVOT_TOL {
                let ratio = self.rhs[i] / coeff;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }

    /// Minimizes the cost via Bland's rule; `allow` filters entering columns.
    fn minimize(&mut self, cost: &dyn Fn(usize) -> f64, allow: &dyn Fn(usize) -> bool) -> Result<()> {
        for _ in 0..MAX_PIVOTS {
            let reduced = self.reduced_costs(cost);
            let entering = (0..self.width())
                .find(|&j| allow(j) && !self.basis.contains(&j) && reduced[j] < -PIVOT_TOL);
            let Some(pcol) = entering else {
                return Ok(());
            };
            let Some(prow) = self.leaving_row(pcol) else {
                return Err(Error::internal(
                    "simplex objective unbounded on a bounded problem",
                ));
            };
            self.pivot(prow, pcol);
        }
        Err(Error::internal("simplex pivot cap exceeded"))
    }

    fn run_phase1(&mut self) -> Result<()> {
        let n = self.n;
        self.minimize(&|j| if j >= n { 1.0 } else { 0.0 }, &|_| true)
    }

    fn phase1_objective(&self) -> f64 {
        self.rows
            .iter()
            .zip(&self.basis)
            .zip(&self.rhs)
            .filter(|((_, &b), _)| self.is_artificial(b))
            .map(|((_, _), &v)| v.max(0.0))
            .sum()
    }

    fn phase1_verdict(&self, problem: &FeasibilityProblem) -> Result<LpOutcome> {
        let objective = self.phase1_objective();
        if objective <= FEASIBILITY_TOL {
            let x = self.extract(problem)?;
            return Ok(LpOutcome::Feasible(x));
        }
        if objective > INFEASIBILITY_GAP {
            let certificate = self.farkas_certificate(problem);
            if let Some(certificate) = certificate {
                return Ok(LpOutcome::Infeasible { objective, certificate });
            }
            return Err(Error::NumericallyAmbiguous { objective });
        }
        Err(Error::NumericallyAmbiguous { objective })
    }

    /// Simplex multipliers of the phase-1 optimum, mapped back to original
    /// row signs and verified as a Farkas certificate.
    fn farkas_certificate(&self, problem: &FeasibilityProblem) -> Option<Vec<f64>> {
        let m_orig = problem.rows.len();
        // pi_i = sum_k c_B[k] * (B^-1)[k][i] with c_B = 1 on artificial
        // basics and 0 otherwise; the final artificial columns are B^-1.
        let mut y = vec![0.0; m_orig];
        for i in 0..self.signs.len() {
            let mut pi = 0.0;
            for (k, row) in self.rows.iter().enumerate() {
                if self.is_artificial(self.basis[k]) {
                    pi += row[self.n + i];
                }
            }
            y[self.row_origin[i]] = self.signs[i] * pi;
        }
        // Verify y.A <= tol componentwise and y.b > 0.
        let mut max_col = f64::NEG_INFINITY;
        for j in 0..problem.num_vars {
            let v: f64 = (0..m_orig).map(|i| y[i] * problem.rows[i][j]).sum();
            max_col = max_col.max(v);
        }
        let yb: f64 = (0..m_orig).map(|i| y[i] * problem.rhs[i]).sum();
        if max_col <= INFEASIBILITY_GAP && yb > FEASIBILITY_TOL {
            Some(y)
        } else {
            None
        }
    }

    /// Pivots basic artificials onto structural columns where possible and
    /// drops redundant rows, so phase 2 cannot regrow artificial values.
    fn drive_out_artificials(&mut self) {
        let mut row = 0;
        while row < self.rows.len() {
            if self.is_artificial(self.basis[row]) {
                let pcol = (0..self.n).find(|&j| self.rows[row][j].abs() > PIVOT_TOL);
                match pcol {
                    Some(j) => {
                        self.pivot(row, j);
                        if self.rhs[row] < 0.0 {
                            // Degenerate drive-out can leave a tiny negative.
                            self.rhs[row] = 0.0;
                        }
                        row += 1;
                    }
                    None => {
                        // No structural support: the row is redundant.
                        self.rows.remove(row);
                        self.rhs.remove(row);
                        self.basis.remove(row);
                        self.row_origin.remove(row);
                    }
                }
            } else {
                row += 1;
            }
        }
    }

    fn run_phase2(&mut self, objective: &[f64]) -> Result<()> {
        let n = self.n;
        let cost: Vec<f64> = objective.iter().map(|c| -c).collect();
        self.minimize(
            &move |j| if j < n { cost[j] } else { 0.0 },
            &move |j| j < n,
        )
    }

    /// Reads the structural solution off the basis, then re-solves the basis
    /// system from the original data to shed accumulated pivot drift.
    fn extract(&self, problem: &FeasibilityProblem) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.n];
        for (row, &basic) in self.basis.iter().enumerate() {
            if basic < self.n {
                x[basic] = self.rhs[row].max(0.0);
            }
        }
        if let Some(refined) = self.refine(problem) {
            let residual_refined = problem.residual(&refined);
            if residual_refined <= problem.residual(&x) {
                x = refined;
            }
        }
        let residual = problem.residual(&x);
        if residual > FEASIBILITY_TOL {
            return Err(Error::internal(format!(
                "feasible extraction residual {residual:.3e} exceeds {FEASIBILITY_TOL:.0e}"
            )));
        }
        Ok(x)
    }

    /// Solves B x_B = b for the current basis with fresh Gaussian elimination
    /// over the original columns.
    fn refine(&self, problem: &FeasibilityProblem) -> Option<Vec<f64>> {
        let m = self.rows.len();
        // Square system over the surviving rows only.
        let mut a: Vec<Vec<f64>> = vec![vec![0.0; m]; m];
        let mut b: Vec<f64> = Vec::with_capacity(m);
        for (ri, &orig) in self.row_origin.iter().enumerate() {
            for (k, &basic) in self.basis.iter().enumerate() {
                a[ri][k] = if basic < self.n {
                    problem.rows[orig][basic]
                } else {
                    // Artificial column: identity in normalized rows.
                    let art_row = basic - self.n;
                    if art_row == orig {
                        self.signs[art_row]
                    } else {
                        0.0
                    }
                };
            }
            b.push(problem.rhs[orig]);
        }
        let values = gaussian_solve(&mut a, &mut b)?;
        if values.iter().any(|&v| v < -1e-7) {
            return None;
        }
        let mut x = vec![0.0; self.n];
        for (k, &basic) in self.basis.iter().enumerate() {
            if basic < self.n {
                x[basic] = values[k].max(0.0);
            }
        }
        Some(x)
    }
}

/// Gaussian elimination with partial pivoting; None when singular.
#[allow(clippy::needless_range_loop)] // in-place elimination aliases rows
fn gaussian_solve(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let mut best = col;
        for row in col + 1..n {
            if a[row][col].abs() > a[best][col].abs() {
                best = row;
            }
        }
        if a[best][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, best);
        b.swap(col, best);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeqRng;

    #[test]
    fn trivial_feasible_system() {
        let p = FeasibilityProblem::new(2, vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        match lp_feasibility(&p).unwrap() {
            LpOutcome::Feasible(x) => {
                assert!(p.residual(&x) <= FEASIBILITY_TOL);
                assert!(x.iter().all(|&v| v >= 0.0));
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn trivial_infeasible_system() {
        let p = FeasibilityProblem::new(1, vec![vec![1.0]], vec![-1.0]).unwrap();
        match lp_feasibility(&p).unwrap() {
            LpOutcome::Infeasible { objective, certificate } => {
                assert!(objective > INFEASIBILITY_GAP);
                // Certificate: y.A <= 0, y.b > 0.
                assert!(certificate[0] * 1.0 <= 1e-12);
                assert!(-certificate[0] > 0.0);
            }
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_invalid_input() {
        assert!(FeasibilityProblem::new(2, vec![vec![1.0]], vec![1.0]).is_err());
        assert!(FeasibilityProblem::new(1, vec![vec![1.0]], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn constructed_feasible_systems_round_trip() {
        let mut rng = SeqRng::new(8);
        for _ in 0..1000 {
            let n = 2 + rng.next_index(10);
            let m = 1 + rng.next_index(6.min(n));
            let x_star: Vec<f64> = (0..n)
                .map(|_| if rng.next_bool(0.5) { rng.next_range(0.0, 3.0) } else { 0.0 })
                .collect();
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.next_range(-2.0, 2.0)).collect())
                .collect();
            let rhs: Vec<f64> = rows
                .iter()
                .map(|row| row.iter().zip(&x_star).map(|(a, x)| a * x).sum())
                .collect();
            let p = FeasibilityProblem::new(n, rows, rhs).unwrap();
            match lp_feasibility(&p).unwrap() {
                LpOutcome::Feasible(x) => {
                    assert!(p.residual(&x) <= FEASIBILITY_TOL, "residual {}", p.residual(&x));
                    assert!(x.iter().all(|&v| v >= 0.0));
                }
                LpOutcome::Infeasible { .. } => panic!("constructed-feasible system reported infeasible"),
            }
        }
    }

    #[test]
    fn infeasible_certificates_verify() {
        let mut rng = SeqRng::new(9);
        let mut infeasible_seen = 0;
        for _ in 0..200 {
            let n = 2 + rng.next_index(6);
            let m = 2 + rng.next_index(4);
            let rows: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..n).map(|_| rng.next_range(-1.0, 1.0)).collect())
                .collect();
            let rhs: Vec<f64> = (0..m).map(|_| rng.next_range(-2.0, 2.0)).collect();
            let p = FeasibilityProblem::new(n, rows.clone(), rhs.clone()).unwrap();
            match lp_feasibility(&p) {
                Ok(LpOutcome::Feasible(x)) => {
                    assert!(p.residual(&x) <= FEASIBILITY_TOL);
                }
                Ok(LpOutcome::Infeasible { certificate, objective }) => {
                    infeasible_seen += 1;
                    assert!(objective > INFEASIBILITY_GAP);
                    for j in 0..n {
                        let col: f64 =
                            rows.iter().zip(&certificate).map(|(row, y)| y * row[j]).sum();
                        assert!(col <= 1e-7, "certificate violates column {j}: {col}");
                    }
                    let yb: f64 = (0..m).map(|i| certificate[i] * rhs[i]).sum();
                    assert!(yb > 0.0);
                }
                Err(Error::NumericallyAmbiguous { .. }) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(infeasible_seen > 20, "only {infeasible_seen} infeasible cases");
    }

    #[test]
    fn maximize_picks_the_right_vertex() {
        // max x0 subject to x0 + x1 = 1.
        let p = FeasibilityProblem::new(2, vec![vec![1.0, 1.0]], vec![1.0]).unwrap();
        match lp_maximize(&p, &[1.0, 0.0]).unwrap() {
            LpOutcome::Feasible(x) => {
                assert!((x[0] - 1.0).abs() < 1e-9);
                assert!(x[1].abs() < 1e-9);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn maximize_handles_redundant_rows() {
        // Duplicate constraint rows force a redundant artificial.
        let p = FeasibilityProblem::new(
            2,
            vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]],
            vec![1.0, 1.0, 0.0],
        )
        .unwrap();
        match lp_maximize(&p, &[0.0, 1.0]).unwrap() {
            LpOutcome::Feasible(x) => {
                assert!(p.residual(&x) <= FEASIBILITY_TOL);
                assert!((x[1] - 0.5).abs() < 1e-9);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }

    #[test]
    fn maximize_on_infeasible_reports_infeasible() {
        let p = FeasibilityProblem::new(1, vec![vec![1.0]], vec![-2.0]).unwrap();
        assert!(!lp_maximize(&p, &[1.0]).unwrap().is_feasible());
    }

    #[test]
    fn beale_cycling_instance_terminates_at_the_optimum() {
        // Beale's example cycles under the largest-coefficient rule; Bland's
        // rule must terminate. Slack columns 4..6 turn the three <=
        // constraints into equalities. Known optimum: x = (0.04, 0, 1, 0)
        // with objective 0.05 for max 0.75 x0 - 150 x1 + 0.02 x2 - 6 x3.
        let p = FeasibilityProblem::new(
            7,
            vec![
                vec![0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0],
                vec![0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            ],
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        let objective = [0.75, -150.0, 0.02, -6.0, 0.0, 0.0, 0.0];
        match lp_maximize(&p, &objective).unwrap() {
            LpOutcome::Feasible(x) => {
                let value: f64 = objective.iter().zip(&x).map(|(c, xi)| c * xi).sum();
                assert!((value - 0.05).abs() < 1e-9, "objective {value}");
                assert!(p.residual(&x) <= FEASIBILITY_TOL);
            }
            other => panic!("expected feasible, got {other:?}"),
        }
    }
}
