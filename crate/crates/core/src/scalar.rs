use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the whole toolkit is generic over.
///
/// Tolerances are per type: the f64 values are the contract values used by
/// the solver and the plan checks; f32 gets looser ones that its mantissa can
/// actually honor.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Smallest magnitude accepted as a pivot element.
    const PIVOT_TOL: f64;
    /// Primal feasibility tolerance.
    const FEAS_TOL: f64;
    /// Reduced-cost optimality tolerance.
    const OPT_TOL: f64;

    /// Converts an f64 literal. Panics only for values the type cannot hold at all (NaN never is).
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("scalar literal out of range")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn pivot_tol() -> Self {
        Self::lit(Self::PIVOT_TOL)
    }

    fn feas_tol() -> Self {
        Self::lit(Self::FEAS_TOL)
    }

    fn opt_tol() -> Self {
        Self::lit(Self::OPT_TOL)
    }
}

impl Scalar for f64 {
    const PIVOT_TOL: f64 = 1e-11;
    const FEAS_TOL: f64 = 1e-9;
    const OPT_TOL: f64 = 1e-9;
}

impl Scalar for f32 {
    const PIVOT_TOL: f64 = 1e-6;
    const FEAS_TOL: f64 = 1e-4;
    const OPT_TOL: f64 = 1e-5;
}
