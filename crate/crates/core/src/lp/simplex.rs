//! Dense two-phase primal simplex over exact rationals.
//!
//! Standard form `min c.x  s.t.  A x = b, x >= 0`. Pivoting follows
//! Bland's rule throughout, so the method terminates on every input
//! including degenerate ones. After an objective has been minimized, the
//! solver can optimize further objectives restricted to the optimal face
//! of the first one; this is how tie-breaking and support probing avoid
//! strict inequalities and epsilon constraints.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::Rational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplexError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("objective has {got} coefficients, expected {want}")]
    ObjectiveMismatch { got: usize, want: usize },
    #[error("constraint rows have inconsistent widths")]
    RaggedRows,
}

/// Reduced cost row stored as coefficients plus the negated objective
/// value, updated alongside the constraint rows on every pivot.
#[derive(Debug, Clone)]
struct CostRow {
    coeffs: Vec<Rational>,
    neg_value: Rational,
}

/// A feasible simplex dictionary over the constraint set, reusable for
/// several objectives.
#[derive(Debug, Clone)]
pub struct Simplex {
    columns: usize,
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    /// Reduced costs of the primary objective, kept valid while refining.
    frozen: Option<CostRow>,
}

impl Simplex {
    /// Runs phase one on `A x = b, x >= 0`; fails if the system is
    /// infeasible. Redundant rows are dropped.
    pub fn new(constraints: Vec<(Vec<Rational>, Rational)>) -> Result<Self, SimplexError> {
        let columns = constraints.first().map_or(0, |(row, _)| row.len());
        if constraints.iter().any(|(row, _)| row.len() != columns) {
            return Err(SimplexError::RaggedRows);
        }
        let m = constraints.len();
        let total = columns + m;

        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, (mut row, mut b)) in constraints.into_iter().enumerate() {
            if b.is_negative() {
                for v in &mut row {
                    *v = -std::mem::take(v);
                }
                b = -b;
            }
            row.resize(total, Rational::zero());
            row[columns + i] = Rational::from_integer(1.into());
            rows.push(row);
            rhs.push(b);
        }

        let mut solver = Simplex {
            columns: total,
            rows,
            rhs,
            basis: (columns..total).collect(),
            frozen: None,
        };

        // Phase 1: minimize the artificial mass.
        let mut phase_one = vec![Rational::zero(); total];
        for c in phase_one.iter_mut().skip(columns) {
            *c = Rational::from_integer(1.into());
        }
        let mut cost = solver.price_out(&phase_one);
        solver.pivot_to_optimality(&mut cost, None)?;
        if (-&cost.neg_value) != Rational::zero() {
            return Err(SimplexError::Infeasible);
        }

        // Remove artificial variables from the basis; rows where no
        // structural column remains are redundant and get dropped.
        let mut r = 0;
        while r < solver.rows.len() {
            if solver.basis[r] >= columns {
                let entering = (0..columns).find(|&j| !solver.rows[r][j].is_zero());
                match entering {
                    Some(j) => solver.pivot(r, j, &mut cost, None),
                    None => {
                        solver.rows.swap_remove(r);
                        solver.rhs.swap_remove(r);
                        solver.basis.swap_remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }

        // Artificial columns are dead from here on.
        for row in &mut solver.rows {
            row.truncate(columns);
        }
        solver.columns = columns;
        Ok(solver)
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    /// Minimizes `objective` from the current feasible basis. The reduced
    /// costs are retained so later [`refine`](Self::refine) calls stay on
    /// this objective's optimal face.
    pub fn minimize(&mut self, objective: &[Rational]) -> Result<Rational, SimplexError> {
        if objective.len() != self.columns {
            return Err(SimplexError::ObjectiveMismatch {
                got: objective.len(),
                want: self.columns,
            });
        }
        self.frozen = None;
        let mut cost = self.price_out(objective);
        self.pivot_to_optimality(&mut cost, None)?;
        let value = -&cost.neg_value;
        self.frozen = Some(cost);
        Ok(value)
    }

    /// Minimizes a secondary objective over the optimal face of the last
    /// [`minimize`](Self::minimize) call.
    pub fn refine(&mut self, objective: &[Rational]) -> Result<Rational, SimplexError> {
        if objective.len() != self.columns {
            return Err(SimplexError::ObjectiveMismatch {
                got: objective.len(),
                want: self.columns,
            });
        }
        let frozen = self.frozen.take();
        let mut cost = self.price_out(objective);
        self.pivot_to_optimality(&mut cost, frozen.as_ref())?;
        self.frozen = frozen;
        Ok(-&cost.neg_value)
    }

    /// The current basic solution.
    pub fn solution(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.columns];
        for (r, &var) in self.basis.iter().enumerate() {
            if var < self.columns {
                x[var] = self.rhs[r].clone();
            }
        }
        x
    }

    fn price_out(&self, objective: &[Rational]) -> CostRow {
        let mut cost = CostRow {
            coeffs: objective.to_vec(),
            neg_value: Rational::zero(),
        };
        // Widen for phase 1, where objective covers artificials too.
        cost.coeffs
            .resize(self.rows.first().map_or(self.columns, Vec::len), Rational::zero());
        for (r, &var) in self.basis.iter().enumerate() {
            let c = objective.get(var).cloned().unwrap_or_else(Rational::zero);
            if c.is_zero() {
                continue;
            }
            for (dst, src) in cost.coeffs.iter_mut().zip(&self.rows[r]) {
                *dst -= &c * src;
            }
            cost.neg_value -= &c * &self.rhs[r];
        }
        cost
    }

    /// Bland's rule: least eligible entering column, least basic variable
    /// among the tied ratio-test rows.
    fn pivot_to_optimality(
        &mut self,
        cost: &mut CostRow,
        face: Option<&CostRow>,
    ) -> Result<(), SimplexError> {
        loop {
            let entering = cost.coeffs.iter().enumerate().position(|(j, d)| {
                d.is_negative() && face.is_none_or(|f| f.coeffs[j].is_zero())
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                if !self.rows[r][j].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[r] / &self.rows[r][j];
                leaving = match leaving {
                    Some((best, best_ratio)) => {
                        if ratio < best_ratio
                            || (ratio == best_ratio && self.basis[r] < self.basis[best])
                        {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                    None => Some((r, ratio)),
                };
            }
            let Some((r, _)) = leaving else {
                return Err(SimplexError::Unbounded);
            };
            self.pivot(r, j, cost, face);
        }
    }

    fn pivot(&mut self, r: usize, j: usize, cost: &mut CostRow, face: Option<&CostRow>) {
        debug_assert!(face.is_none_or(|f| f.coeffs[j].is_zero()));
        let pivot = self.rows[r][j].clone();
        for v in &mut self.rows[r] {
            *v /= &pivot;
        }
        self.rhs[r] /= &pivot;

        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][j].is_zero() {
                continue;
            }
            let factor = self.rows[i][j].clone();
            for (dst, src) in self.rows[i].iter_mut().zip(&pivot_row) {
                *dst -= &factor * src;
            }
            self.rhs[i] -= &factor * &pivot_rhs;
        }
        if !cost.coeffs[j].is_zero() {
            let factor = cost.coeffs[j].clone();
            for (dst, src) in cost.coeffs.iter_mut().zip(&pivot_row) {
                *dst -= &factor * src;
            }
            cost.neg_value -= &factor * &pivot_rhs;
        }
        self.basis[r] = j;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, ratio};

    fn r(values: &[i64]) -> Vec<Rational> {
        values.iter().map(|&v| rat(v)).collect()
    }

    #[test]
    fn solves_a_textbook_program() {
        // min -x - 2y  s.t.  x + y + s1 = 4,  x + 3y + s2 = 6
        let mut simplex = Simplex::new(vec![
            (r(&[1, 1, 1, 0]), rat(4)),
            (r(&[1, 3, 0, 1]), rat(6)),
        ])
        .unwrap();
        let value = simplex.minimize(&r(&[-1, -2, 0, 0])).unwrap();
        assert_eq!(value, rat(-5));
        let x = simplex.solution();
        assert_eq!(x[0], rat(3));
        assert_eq!(x[1], rat(1));
    }

    #[test]
    fn detects_infeasibility() {
        // x + y = 1 and x + y = 2 cannot both hold.
        let result = Simplex::new(vec![(r(&[1, 1]), rat(1)), (r(&[1, 1]), rat(2))]);
        assert_eq!(result.unwrap_err(), SimplexError::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // x - y = 0 with objective -x runs away along the diagonal.
        let mut simplex = Simplex::new(vec![(r(&[1, -1]), rat(0))]).unwrap();
        assert_eq!(
            simplex.minimize(&r(&[-1, 0])).unwrap_err(),
            SimplexError::Unbounded
        );
    }

    #[test]
    fn drops_redundant_rows() {
        // Second row is twice the first.
        let mut simplex = Simplex::new(vec![
            (r(&[1, 1]), rat(1)),
            (r(&[2, 2]), rat(2)),
        ])
        .unwrap();
        let value = simplex.minimize(&r(&[1, 2])).unwrap();
        assert_eq!(value, rat(1));
    }

    #[test]
    fn exact_fractions_survive() {
        let mut simplex = Simplex::new(vec![(
            vec![ratio(1, 3), ratio(1, 7)],
            rat(1),
        )])
        .unwrap();
        let value = simplex.minimize(&[ratio(1, 2), rat(9)]).unwrap();
        assert_eq!(value, ratio(3, 2));
    }

    #[test]
    fn refine_stays_on_the_optimal_face() {
        // Simplex x + y + z = 1: minimizing x leaves the (y, z) edge, on
        // which the secondary objective separates the two vertices.
        let mut simplex = Simplex::new(vec![(r(&[1, 1, 1]), rat(1))]).unwrap();
        let primary = simplex.minimize(&r(&[1, 0, 0])).unwrap();
        assert_eq!(primary, rat(0));
        let secondary = simplex.refine(&r(&[0, 2, 5])).unwrap();
        assert_eq!(secondary, rat(2));
        let x = simplex.solution();
        assert_eq!(x, r(&[0, 1, 0]));
        // The primary value is untouched by refinement.
        assert_eq!(x[0], rat(0));
    }

    #[test]
    fn refine_respects_a_tight_face() {
        // Unique primary optimum: the face is a point and refinement
        // cannot move off it.
        let mut simplex = Simplex::new(vec![(r(&[1, 1]), rat(1))]).unwrap();
        assert_eq!(simplex.minimize(&r(&[1, 3])).unwrap(), rat(1));
        assert_eq!(simplex.refine(&r(&[0, -10])).unwrap(), rat(0));
        assert_eq!(simplex.solution(), r(&[1, 0]));
    }

    #[test]
    fn repeated_refines_share_the_face() {
        let mut simplex = Simplex::new(vec![(r(&[1, 1, 1, 0]), rat(1)), (r(&[0, 0, 1, 1]), rat(1))])
            .unwrap();
        let primary = simplex.minimize(&r(&[1, 0, 0, 0])).unwrap();
        assert_eq!(primary, rat(0));
        // Probe each coordinate's maximum over the face x = 0.
        assert_eq!(simplex.refine(&r(&[0, -1, 0, 0])).unwrap(), rat(-1));
        assert_eq!(simplex.refine(&r(&[0, 0, -1, 0])).unwrap(), rat(-1));
        assert_eq!(simplex.refine(&r(&[-1, 0, 0, 0])).unwrap(), rat(0));
    }
}
