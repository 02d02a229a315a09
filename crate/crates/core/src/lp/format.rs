//! CPLEX-style LP text listing, for cross-checking a model with an external
//! solver (`glpsol --lp`, `cbc`, HiGHS all read it).

use std::fmt::Write;

use super::{LinearProgram, Sense};
use crate::scalar::Scalar;

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' }).collect()
}

fn push_terms<T: Scalar>(out: &mut String, lp: &LinearProgram<T>, terms: impl Iterator<Item = (usize, T)>) {
    let mut any = false;
    for (j, a) in terms {
        if a == T::zero() {
            continue;
        }
        let sign = if a < T::zero() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", a.abs(), sanitize(lp.var_name(j)));
        any = true;
    }
    if !any {
        out.push_str(" 0");
    }
}

/// Renders `lp` as LP-format text.
pub fn write_lp<T: Scalar>(lp: &LinearProgram<T>) -> String {
    let mut out = String::new();
    out.push_str(match lp.sense() {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    push_terms(&mut out, lp, lp.objective().iter().copied().enumerate());
    out.push_str("\nSubject To\n");
    for c in lp.constraints() {
        let _ = write!(out, " {}:", sanitize(&c.name));
        push_terms(&mut out, lp, c.terms.iter().copied());
        let _ = writeln!(out, " {} {}", c.relation.symbol(), c.rhs);
    }
    out.push_str("Bounds\n");
    for j in 0..lp.num_vars() {
        let (lo, hi) = lp.bounds(j);
        let name = sanitize(lp.var_name(j));
        if hi.is_finite() {
            let _ = writeln!(out, " {lo} <= {name} <= {hi}");
        } else {
            let _ = writeln!(out, " {name} >= {lo}");
        }
    }
    out.push_str("End\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::Relation;

    #[test]
    fn listing_layout() {
        let mut lp = LinearProgram::<f64>::new(Sense::Maximize);
        let a = lp.add_var("a", 3.0);
        let b = lp.add_var("R(1,2)", -2.0);
        lp.set_bounds(b, 0.0, 5.0).unwrap();
        lp.add_constraint("cap", vec![(a, 1.0), (b, 1.0)], Relation::Le, 4.0).unwrap();
        let text = write_lp(&lp);
        assert_eq!(
            text,
            "Maximize\n obj: + 3 a - 2 R_1_2_\nSubject To\n cap: + 1 a + 1 R_1_2_ <= 4\nBounds\n a >= 0\n 0 <= R_1_2_ <= 5\nEnd\n"
        );
    }
}
