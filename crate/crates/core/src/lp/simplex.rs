use super::{LinearProgram, LpError, LpSolution, LpStatus, Relation, Sense};
use crate::scalar::Scalar;

/// Consecutive degenerate pivots tolerated before falling back to Bland's rule.
const DEGENERATE_STREAK: usize = 25;

/// Dense tableau in canonical form for the current basis.
///
/// Row `i` holds `B^-1 A` followed by `B^-1 b` in the last slot. `cost` holds
/// reduced costs `c_j - c_B B^-1 A_j` with `-z` in the last slot.
struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    cost: Vec<T>,
    ncol: usize,
}

enum Step {
    Optimal,
    Unbounded,
}

impl<T: Scalar> Tableau<T> {
    fn rhs(&self, i: usize) -> T {
        self.rows[i][self.ncol]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = T::one() / self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rows[r][c] = T::one();
        let (head, rest) = self.rows.split_at_mut(r);
        let (pivot_row, tail) = rest.split_first_mut().expect("pivot row exists");
        for row in head.iter_mut().chain(tail.iter_mut()) {
            let f = row[c];
            if f != T::zero() {
                for (v, &p) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * p;
                }
                row[c] = T::zero();
            }
        }
        let f = self.cost[c];
        if f != T::zero() {
            for (v, &p) in self.cost.iter_mut().zip(pivot_row.iter()) {
                *v -= f * p;
            }
            self.cost[c] = T::zero();
        }
        self.basis[r] = c;
    }

    /// Recomputes reduced costs for column costs `c` (maximization) over the current basis.
    fn price(&mut self, c: &[T]) {
        let mut cost: Vec<T> = c.to_vec();
        cost.push(T::zero());
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = c[b];
            if cb != T::zero() {
                for (v, &a) in cost.iter_mut().zip(row.iter()) {
                    *v -= cb * a;
                }
            }
        }
        self.cost = cost;
    }

    fn entering(&self, allowed: usize, bland: bool) -> Option<usize> {
        let tol = T::opt_tol();
        let mut best: Option<(usize, T)> = None;
        for j in 0..allowed {
            let d = self.cost[j];
            if d > tol {
                if bland {
                    return Some(j);
                }
                match best {
                    Some((_, bd)) if d <= bd => {}
                    _ => best = Some((j, d)),
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Minimum-ratio row; ties go to the lowest basic variable index.
    fn leaving(&self, c: usize) -> Option<usize> {
        let ptol = T::pivot_tol();
        let mut best: Option<(usize, T)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = row[c];
            if a > ptol {
                let ratio = row[self.ncol].max(T::zero()) / a;
                match best {
                    None => best = Some((i, ratio)),
                    Some((bi, br)) => {
                        let slack = T::epsilon() * (T::one() + br.abs()) * T::lit(16.0);
                        if ratio < br - slack || (ratio <= br + slack && self.basis[i] < self.basis[bi]) {
                            best = Some((i, ratio));
                        }
                    }
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Runs primal simplex over columns `0..allowed` until optimal or unbounded.
    fn optimize(&mut self, allowed: usize, iterations: &mut usize, cap: usize) -> Result<Step, LpError> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some(c) = self.entering(allowed, bland) else {
                return Ok(Step::Optimal);
            };
            let Some(r) = self.leaving(c) else {
                return Ok(Step::Unbounded);
            };
            if *iterations >= cap {
                return Err(LpError::NumericalFailure { iterations: *iterations });
            }
            *iterations += 1;
            if self.rhs(r) <= T::feas_tol() {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Solves `lp` with a two-phase dense primal simplex.
///
/// Entering columns follow the largest reduced cost; after a streak of
/// degenerate pivots the rule switches to Bland's lowest-index choice until
/// progress resumes. All ties break toward the lowest index, so identical
/// inputs give identical pivots and identical output.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>, LpError> {
    lp.check()?;
    let nv = lp.num_vars();
    let cap = 50 * (nv + lp.num_constraints()).max(1);

    // Shift x = lower + y so every structural column is y >= 0; finite upper
    // bounds become ordinary rows.
    let mut rows: Vec<(Vec<T>, Relation, T)> = Vec::new();
    for con in lp.constraints() {
        let mut dense = vec![T::zero(); nv];
        let mut rhs = con.rhs;
        for &(j, a) in &con.terms {
            dense[j] += a;
            rhs -= a * lp.bounds(j).0;
        }
        rows.push((dense, con.relation, rhs));
    }
    for j in 0..nv {
        let (lo, hi) = lp.bounds(j);
        if hi.is_finite() {
            let mut dense = vec![T::zero(); nv];
            dense[j] = T::one();
            rows.push((dense, Relation::Le, hi - lo));
        }
    }
    for (dense, rel, rhs) in rows.iter_mut() {
        if *rhs < T::zero() {
            for v in dense.iter_mut() {
                *v = -*v;
            }
            *rhs = -*rhs;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let art_start = nv + n_slack;
    let ncol = art_start + n_art;

    let mut tab = Tableau { rows: Vec::with_capacity(m), basis: Vec::with_capacity(m), cost: Vec::new(), ncol };
    let (mut next_slack, mut next_art) = (nv, art_start);
    let mut rhs_scale = T::one();
    for (dense, rel, rhs) in rows {
        let mut row = dense;
        row.resize(ncol + 1, T::zero());
        row[ncol] = rhs;
        rhs_scale = rhs_scale.max(rhs);
        match rel {
            Relation::Le => {
                row[next_slack] = T::one();
                tab.basis.push(next_slack);
                next_slack += 1;
            }
            Relation::Ge => {
                row[next_slack] = -T::one();
                row[next_art] = T::one();
                tab.basis.push(next_art);
                next_slack += 1;
                next_art += 1;
            }
            Relation::Eq => {
                row[next_art] = T::one();
                tab.basis.push(next_art);
                next_art += 1;
            }
        }
        tab.rows.push(row);
    }

    let original = tab.rows.clone();
    let mut row_ids: Vec<usize> = (0..m).collect();
    let mut iterations = 0usize;
    if n_art > 0 {
        let mut phase1 = vec![T::zero(); ncol];
        for v in phase1.iter_mut().skip(art_start) {
            *v = -T::one();
        }
        tab.price(&phase1);
        tab.optimize(ncol, &mut iterations, cap)?;
        let infeasibility = tab.cost[ncol];
        if infeasibility > T::feas_tol() * rhs_scale {
            return Ok(LpSolution { status: LpStatus::Infeasible, x: Vec::new(), objective_value: T::nan(), iterations });
        }
        // Pivot leftover artificials out of the basis, dropping rows that are redundant.
        let mut i = 0;
        while i < tab.rows.len() {
            if tab.basis[i] >= art_start {
                let best = (0..art_start)
                    .map(|j| (j, tab.rows[i][j].abs()))
                    .filter(|&(_, a)| a > T::pivot_tol())
                    .fold(None, |acc: Option<(usize, T)>, (j, a)| match acc {
                        Some((_, ba)) if a <= ba => acc,
                        _ => Some((j, a)),
                    });
                match best {
                    Some((j, _)) => tab.pivot(i, j),
                    None => {
                        tab.rows.remove(i);
                        tab.basis.remove(i);
                        row_ids.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let sign = match lp.sense() {
        Sense::Maximize => T::one(),
        Sense::Minimize => -T::one(),
    };
    let mut phase2 = vec![T::zero(); ncol];
    for (v, &c) in phase2.iter_mut().zip(lp.objective()) {
        *v = sign * c;
    }
    tab.price(&phase2);
    if let Step::Unbounded = tab.optimize(art_start, &mut iterations, cap)? {
        let inf = sign * T::infinity();
        return Ok(LpSolution { status: LpStatus::Unbounded, x: Vec::new(), objective_value: inf, iterations });
    }

    let point = |basic: &dyn Fn(usize) -> T| {
        let mut x: Vec<T> = (0..nv).map(|j| lp.bounds(j).0).collect();
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < nv {
                x[b] += basic(i);
            }
        }
        // Snap round-off back inside the box.
        for (j, v) in x.iter_mut().enumerate() {
            let (lo, hi) = lp.bounds(j);
            *v = v.max(lo).min(hi);
        }
        let worst = lp
            .constraints()
            .iter()
            .map(|c| c.violation(&x) / T::one().max(c.rhs.abs()))
            .fold(T::zero(), T::max);
        (x, worst)
    };
    let (mut x, mut worst) = point(&|i| tab.rhs(i));
    if worst > T::zero() {
        // Long pivot sequences accumulate error in the tableau, noticeably so in
        // f32; re-solving for the final basis from the original rows removes it.
        if let Some(basic) = resolve_basis(&original, &row_ids, &tab.basis, ncol) {
            let (rx, rworst) = point(&|i| basic[i]);
            if rworst < worst {
                (x, worst) = (rx, rworst);
            }
        }
    }
    if worst > T::feas_tol() {
        return Err(LpError::NumericalFailure { iterations });
    }
    let objective_value = lp.evaluate(&x);
    Ok(LpSolution { status: LpStatus::Optimal, x, objective_value, iterations })
}

/// Solves `B x_B = b` by Gaussian elimination with partial pivoting, where `B`
/// collects the `basis` columns of the kept `original` rows.
fn resolve_basis<T: Scalar>(original: &[Vec<T>], row_ids: &[usize], basis: &[usize], ncol: usize) -> Option<Vec<T>> {
    let k = basis.len();
    let mut a: Vec<Vec<T>> = row_ids
        .iter()
        .map(|&r| basis.iter().map(|&b| original[r][b]).chain([original[r][ncol]]).collect())
        .collect();
    for col in 0..k {
        let p = (col..k).max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        if a[p][col].abs() <= T::pivot_tol() {
            return None;
        }
        a.swap(col, p);
        let (head, tail) = a.split_at_mut(col + 1);
        let pivot_row = &head[col];
        for row in tail.iter_mut() {
            let f = row[col] / pivot_row[col];
            if f != T::zero() {
                for c in col..=k {
                    row[c] -= f * pivot_row[c];
                }
            }
        }
    }
    let mut x = vec![T::zero(); k];
    for r in (0..k).rev() {
        let s: T = ((r + 1)..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][k] - s) / a[r][r];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp2(sense: Sense, c: [f64; 2]) -> LinearProgram<f64> {
        let mut lp = LinearProgram::new(sense);
        lp.add_var("a", c[0]);
        lp.add_var("b", c[1]);
        lp
    }

    #[test]
    fn single_upper_bound() {
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        let x = lp.add_var("x", 1.0);
        lp.add_constraint("c", vec![(x, 1.0)], Relation::Le, 5.0).unwrap();
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![5.0]);
        assert_eq!(s.objective_value, 5.0);
    }

    #[test]
    fn negative_rhs_is_infeasible() {
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        let x = lp.add_var("x", 1.0);
        lp.add_constraint("c", vec![(x, 1.0)], Relation::Le, -1.0).unwrap();
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn two_vertex_example() {
        // vertices (4,0) -> 12 and (3,1) -> 11
        let mut lp = lp2(Sense::Maximize, [3.0, 2.0]);
        lp.add_constraint("r1", vec![(0, 1.0), (1, 1.0)], Relation::Le, 4.0).unwrap();
        lp.add_constraint("r2", vec![(0, 1.0), (1, 3.0)], Relation::Le, 6.0).unwrap();
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 4.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
        assert!((s.objective_value - 12.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = lp2(Sense::Maximize, [1.0, 0.0]);
        lp.add_constraint("r", vec![(0, 1.0), (1, -1.0)], Relation::Ge, 0.0).unwrap();
        assert_eq!(solve(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn minimize_with_equality_and_ge() {
        // min a + 2b s.t. a + b = 3, b >= 1 -> (2, 1), obj 4
        let mut lp = lp2(Sense::Minimize, [1.0, 2.0]);
        lp.add_constraint("sum", vec![(0, 1.0), (1, 1.0)], Relation::Eq, 3.0).unwrap();
        lp.add_constraint("b", vec![(1, 1.0)], Relation::Ge, 1.0).unwrap();
        let s = solve(&lp).unwrap();
        assert!((s.objective_value - 4.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shifted_and_capped_bounds() {
        // max a - b with a in [1, 2], b in [0.5, 4]
        let mut lp = lp2(Sense::Maximize, [1.0, -1.0]);
        lp.set_bounds(0, 1.0, 2.0).unwrap();
        lp.set_bounds(1, 0.5, 4.0).unwrap();
        let s = solve(&lp).unwrap();
        assert_eq!(s.x, vec![2.0, 0.5]);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = lp2(Sense::Maximize, [1.0, 1.0]);
        lp.add_constraint("e1", vec![(0, 1.0), (1, 1.0)], Relation::Eq, 2.0).unwrap();
        lp.add_constraint("e2", vec![(0, 2.0), (1, 2.0)], Relation::Eq, 4.0).unwrap();
        lp.add_constraint("cap", vec![(0, 1.0)], Relation::Le, 0.5).unwrap();
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example: cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        for (name, c) in [("x4", 0.75), ("x5", -150.0), ("x6", 0.02), ("x7", -6.0)] {
            lp.add_var(name, c);
        }
        lp.add_constraint("r1", vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0).unwrap();
        lp.add_constraint("r2", vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0).unwrap();
        lp.add_constraint("r3", vec![(2, 1.0)], Relation::Le, 1.0).unwrap();
        let s = solve(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 0.05).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let mut lp = LinearProgram::<f32>::new(Sense::Maximize);
        lp.add_var("a", 3.0);
        lp.add_var("b", 2.0);
        lp.add_constraint("r1", vec![(0, 1.0), (1, 1.0)], Relation::Le, 4.0).unwrap();
        lp.add_constraint("r2", vec![(0, 1.0), (1, 3.0)], Relation::Le, 6.0).unwrap();
        let s = solve(&lp).unwrap();
        assert!((s.objective_value - 12.0).abs() < 1e-4);
    }
}
