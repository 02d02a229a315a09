//! Linear programs and a dense two-phase simplex solver.
//!
//! The container is deliberately small: columns with box bounds, sparse rows
//! with a relation and a right-hand side, and a linear objective. Equality
//! rows are kept as equalities all the way into the tableau.

mod format;
mod simplex;

use thiserror::Error;

use crate::scalar::Scalar;

pub use format::write_lp;
pub use simplex::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<T> {
    pub name: String,
    pub terms: Vec<(usize, T)>,
    pub relation: Relation,
    pub rhs: T,
}

impl<T: Scalar> Constraint<T> {
    pub fn activity(&self, x: &[T]) -> T {
        self.terms.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// How far `x` is outside this row (0 when satisfied).
    pub fn violation(&self, x: &[T]) -> T {
        let lhs = self.activity(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(T::zero()),
            Relation::Ge => (self.rhs - lhs).max(T::zero()),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("constraint {constraint} references unknown variable {var}")]
    InvalidVariable { constraint: String, var: usize },
    #[error("variable {var} has bounds [{lower}, {upper}]")]
    InvalidBounds { var: String, lower: f64, upper: f64 },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("simplex did not converge within {iterations} pivots")]
    NumericalFailure { iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Variable values; empty unless `status` is `Optimal`.
    pub x: Vec<T>,
    pub objective_value: T,
    pub iterations: usize,
}

/// A linear program over nonnegative-by-default variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<T> {
    sense: Sense,
    objective: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    names: Vec<String>,
    constraints: Vec<Constraint<T>>,
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(sense: Sense) -> Self {
        Self {
            sense,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            names: Vec::new(),
            constraints: Vec::new(),
        }
    }

    /// Adds a column with bounds `[0, +inf)` and returns its index.
    pub fn add_var(&mut self, name: impl Into<String>, cost: T) -> usize {
        self.objective.push(cost);
        self.lower.push(T::zero());
        self.upper.push(T::infinity());
        self.names.push(name.into());
        self.objective.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: T, upper: T) -> Result<(), LpError> {
        if var >= self.num_vars() {
            return Err(LpError::InvalidVariable { constraint: "bounds".into(), var });
        }
        if !lower.is_finite() || upper.is_nan() || lower > upper {
            return Err(LpError::InvalidBounds {
                var: self.names[var].clone(),
                lower: lower.as_f64(),
                upper: upper.as_f64(),
            });
        }
        self.lower[var] = lower;
        self.upper[var] = upper;
        Ok(())
    }

    pub fn set_cost(&mut self, var: usize, cost: T) {
        self.objective[var] = cost;
    }

    /// Adds a row. Repeated variable indices are summed.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(usize, T)>,
        relation: Relation,
        rhs: T,
    ) -> Result<usize, LpError> {
        let name = name.into();
        let mut merged: Vec<(usize, T)> = Vec::with_capacity(terms.len());
        for (j, a) in terms {
            if j >= self.num_vars() {
                return Err(LpError::InvalidVariable { constraint: name, var: j });
            }
            if !a.is_finite() {
                return Err(LpError::NonFinite(name));
            }
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some(entry) => entry.1 += a,
                None => merged.push((j, a)),
            }
        }
        if !rhs.is_finite() {
            return Err(LpError::NonFinite(name));
        }
        self.constraints.push(Constraint { name, terms: merged, relation, rhs });
        Ok(self.constraints.len() - 1)
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint<T>] {
        &self.constraints
    }

    pub fn bounds(&self, var: usize) -> (T, T) {
        (self.lower[var], self.upper[var])
    }

    pub fn var_name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn evaluate(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Largest row or bound violation of `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let rows = self.constraints.iter().map(|c| c.violation(x));
        let bounds = x.iter().enumerate().map(|(j, &v)| (self.lower[j] - v).max(v - self.upper[j]).max(T::zero()));
        rows.chain(bounds).fold(T::zero(), T::max)
    }

    pub fn check(&self) -> Result<(), LpError> {
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::NonFinite(format!("objective coefficient of {}", self.names[j])));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_variable() {
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        lp.add_var("x", 1.0);
        let err = lp.add_constraint("c", vec![(3, 1.0)], Relation::Le, 1.0).unwrap_err();
        assert_eq!(err, LpError::InvalidVariable { constraint: "c".into(), var: 3 });
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        let x = lp.add_var("x", 1.0);
        assert!(lp.set_bounds(x, 2.0, 1.0).is_err());
        assert!(lp.set_bounds(x, f64::NEG_INFINITY, 1.0).is_err());
    }

    #[test]
    fn duplicate_terms_merge() {
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        let x = lp.add_var("x", 1.0);
        lp.add_constraint("c", vec![(x, 1.0), (x, 2.0)], Relation::Le, 6.0).unwrap();
        assert_eq!(lp.constraints()[0].terms, vec![(x, 3.0)]);
    }
}
