//! Core data model: pairwise energies, labelings and their lattice,
//! label orderings, autarkies and domain constraints.
//!
//! All values are exact rationals and all types are immutable after
//! construction, so everything here may be shared freely across threads.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::Rational;

/// Errors produced by the energy model.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnergyError {
    #[error("node count must be positive")]
    EmptyNodeSet,
    #[error("label count must be positive")]
    EmptyLabelSet,
    #[error("edge ({0}, {1}) is a self-loop")]
    SelfLoop(usize, usize),
    #[error("edge ({0}, {1}) references a node out of range")]
    EdgeOutOfRange(usize, usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("permutation for node {0} is not a bijection on the labels")]
    NotAPermutation(usize),
    #[error("autarky bounds violate x_min <= x_max at node {0}")]
    BoundsOutOfOrder(usize),
    #[error("join of autarkies requires both inputs strong")]
    JoinNeedsStrong,
    #[error("label {label} out of range at node {node}")]
    LabelOutOfRange { node: usize, label: usize },
}

/// Node set, uniform label set `{0, .., L}` and the ordered edge list.
///
/// Edges are ordered pairs exactly as written in the instance; `(s, t)` and
/// `(t, s)` are distinct edges and no symmetrization is performed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpace {
    node_count: usize,
    label_count: usize,
    edges: Vec<(usize, usize)>,
}

impl LabelSpace {
    pub fn new(
        node_count: usize,
        label_count: usize,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self, EnergyError> {
        if node_count == 0 {
            return Err(EnergyError::EmptyNodeSet);
        }
        if label_count == 0 {
            return Err(EnergyError::EmptyLabelSet);
        }
        let mut seen = BTreeSet::new();
        for &(s, t) in &edges {
            if s == t {
                return Err(EnergyError::SelfLoop(s, t));
            }
            if s >= node_count || t >= node_count {
                return Err(EnergyError::EdgeOutOfRange(s, t));
            }
            if !seen.insert((s, t)) {
                return Err(EnergyError::DuplicateEdge(s, t));
            }
        }
        Ok(LabelSpace {
            node_count,
            label_count,
            edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    /// The maximal label `L`; labels run `0..=L`.
    pub fn top_label(&self) -> usize {
        self.label_count - 1
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn nodes(&self) -> std::ops::Range<usize> {
        0..self.node_count
    }

    pub fn labels(&self) -> std::ops::Range<usize> {
        0..self.label_count
    }
}

/// One label index per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Labeling(pub Vec<usize>);

impl Labeling {
    pub fn constant(node_count: usize, label: usize) -> Self {
        Labeling(vec![label; node_count])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, node: usize) -> usize {
        self.0[node]
    }

    fn check_len(&self, other: &Labeling) -> Result<(), EnergyError> {
        if self.len() != other.len() {
            return Err(EnergyError::DimensionMismatch(format!(
                "labelings of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(())
    }

    /// Component-wise minimum.
    pub fn meet(&self, other: &Labeling) -> Result<Labeling, EnergyError> {
        self.check_len(other)?;
        Ok(Labeling(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.min(b))
                .collect(),
        ))
    }

    /// Component-wise maximum.
    pub fn join(&self, other: &Labeling) -> Result<Labeling, EnergyError> {
        self.check_len(other)?;
        Ok(Labeling(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a.max(b))
                .collect(),
        ))
    }

    /// Component-wise `<=`.
    pub fn le(&self, other: &Labeling) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(&a, &b)| a <= b)
    }

    pub fn valid_for(&self, space: &LabelSpace) -> Result<(), EnergyError> {
        if self.len() != space.node_count() {
            return Err(EnergyError::DimensionMismatch(format!(
                "labeling of length {} against {} nodes",
                self.len(),
                space.node_count()
            )));
        }
        for (node, &label) in self.0.iter().enumerate() {
            if label >= space.label_count() {
                return Err(EnergyError::LabelOutOfRange { node, label });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Pairwise energy: constant term, per-node unary tables and per-edge
/// pairwise tables, all exact rationals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyFunction {
    space: LabelSpace,
    constant: Rational,
    unary: Vec<Vec<Rational>>,
    pairwise: Vec<Vec<Vec<Rational>>>,
}

impl EnergyFunction {
    pub fn new(
        space: LabelSpace,
        constant: Rational,
        unary: Vec<Vec<Rational>>,
        pairwise: Vec<Vec<Vec<Rational>>>,
    ) -> Result<Self, EnergyError> {
        if unary.len() != space.node_count() {
            return Err(EnergyError::DimensionMismatch(format!(
                "{} unary tables for {} nodes",
                unary.len(),
                space.node_count()
            )));
        }
        for (s, table) in unary.iter().enumerate() {
            if table.len() != space.label_count() {
                return Err(EnergyError::DimensionMismatch(format!(
                    "unary table of node {s} has {} entries, expected {}",
                    table.len(),
                    space.label_count()
                )));
            }
        }
        if pairwise.len() != space.edges().len() {
            return Err(EnergyError::DimensionMismatch(format!(
                "{} pairwise tables for {} edges",
                pairwise.len(),
                space.edges().len()
            )));
        }
        for (e, table) in pairwise.iter().enumerate() {
            if table.len() != space.label_count()
                || table.iter().any(|row| row.len() != space.label_count())
            {
                return Err(EnergyError::DimensionMismatch(format!(
                    "pairwise table of edge {e} is not {0}x{0}",
                    space.label_count()
                )));
            }
        }
        Ok(EnergyFunction {
            space,
            constant,
            unary,
            pairwise,
        })
    }

    /// The all-zero energy over `space`.
    pub fn zero(space: LabelSpace) -> Self {
        let unary = vec![vec![Rational::zero(); space.label_count()]; space.node_count()];
        let pairwise = space
            .edges()
            .iter()
            .map(|_| vec![vec![Rational::zero(); space.label_count()]; space.label_count()])
            .collect();
        EnergyFunction {
            space,
            constant: Rational::zero(),
            unary,
            pairwise,
        }
    }

    pub fn space(&self) -> &LabelSpace {
        &self.space
    }

    pub fn constant(&self) -> &Rational {
        &self.constant
    }

    pub fn unary(&self, node: usize) -> &[Rational] {
        &self.unary[node]
    }

    pub fn pairwise(&self, edge: usize) -> &Vec<Vec<Rational>> {
        &self.pairwise[edge]
    }

    pub fn unary_tables(&self) -> &[Vec<Rational>] {
        &self.unary
    }

    pub fn pairwise_tables(&self) -> &[Vec<Vec<Rational>>] {
        &self.pairwise
    }

    /// `f_0 + sum_s f_s(x_s) + sum_st f_st(x_s, x_t)`.
    pub fn evaluate(&self, x: &Labeling) -> Result<Rational, EnergyError> {
        x.valid_for(&self.space)?;
        let mut total = self.constant.clone();
        for s in self.space.nodes() {
            total += &self.unary[s][x.get(s)];
        }
        for (e, &(s, t)) in self.space.edges().iter().enumerate() {
            total += &self.pairwise[e][x.get(s)][x.get(t)];
        }
        Ok(total)
    }

    /// Entry-wise sum; spaces must match exactly.
    pub fn add(&self, other: &EnergyFunction) -> Result<EnergyFunction, EnergyError> {
        self.combine(other, |a, b| a + b)
    }

    /// Entry-wise difference; spaces must match exactly.
    pub fn sub(&self, other: &EnergyFunction) -> Result<EnergyFunction, EnergyError> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(
        &self,
        other: &EnergyFunction,
        op: impl Fn(&Rational, &Rational) -> Rational,
    ) -> Result<EnergyFunction, EnergyError> {
        if self.space != other.space {
            return Err(EnergyError::DimensionMismatch(
                "energies defined over different spaces".into(),
            ));
        }
        let unary = self
            .unary
            .iter()
            .zip(&other.unary)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| op(x, y)).collect())
            .collect();
        let pairwise = self
            .pairwise
            .iter()
            .zip(&other.pairwise)
            .map(|(ta, tb)| {
                ta.iter()
                    .zip(tb)
                    .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| op(x, y)).collect())
                    .collect()
            })
            .collect();
        EnergyFunction::new(
            self.space.clone(),
            op(&self.constant, &other.constant),
            unary,
            pairwise,
        )
    }

    /// Reorders labels: `f'_s(pi_s(i)) = f_s(i)` and
    /// `f'_st(pi_s(i), pi_t(j)) = f_st(i, j)`.
    pub fn apply_ordering(&self, pi: &LabelOrdering) -> Result<EnergyFunction, EnergyError> {
        pi.valid_for(&self.space)?;
        let l = self.space.label_count();
        let mut unary = vec![vec![Rational::zero(); l]; self.space.node_count()];
        for s in self.space.nodes() {
            for i in 0..l {
                unary[s][pi.map(s, i)] = self.unary[s][i].clone();
            }
        }
        let mut pairwise = Vec::with_capacity(self.pairwise.len());
        for (e, &(s, t)) in self.space.edges().iter().enumerate() {
            let mut table = vec![vec![Rational::zero(); l]; l];
            for i in 0..l {
                for j in 0..l {
                    table[pi.map(s, i)][pi.map(t, j)] = self.pairwise[e][i][j].clone();
                }
            }
            pairwise.push(table);
        }
        EnergyFunction::new(self.space.clone(), self.constant.clone(), unary, pairwise)
    }

    /// True iff every edge table satisfies
    /// `f(x) + f(y) >= f(x ^ y) + f(x v y)` for all label pairs.
    pub fn is_submodular(&self) -> bool {
        self.submodularity_witness().is_none()
    }

    /// Exhaustive submodularity check returning a violating pair if any.
    pub fn submodularity_witness(&self) -> Option<SubmodularityViolation> {
        let l = self.space.label_count();
        for (e, table) in self.pairwise.iter().enumerate() {
            for xi in 0..l {
                for xj in 0..l {
                    for yi in 0..l {
                        for yj in 0..l {
                            let lhs = &table[xi][xj] + &table[yi][yj];
                            let rhs =
                                &table[xi.min(yi)][xj.min(yj)] + &table[xi.max(yi)][xj.max(yj)];
                            if lhs < rhs {
                                return Some(SubmodularityViolation {
                                    edge: e,
                                    x: (xi, xj),
                                    y: (yi, yj),
                                });
                            }
                        }
                    }
                }
            }
        }
        None
    }

    /// True iff every edge table is a metric: nonnegative, zero exactly on
    /// the diagonal, symmetric, and satisfying the triangle inequality.
    pub fn is_metric(&self) -> bool {
        let l = self.space.label_count();
        for table in &self.pairwise {
            for i in 0..l {
                for j in 0..l {
                    let v = &table[i][j];
                    if v < &Rational::zero() {
                        return false;
                    }
                    if (i == j) != v.is_zero() {
                        return false;
                    }
                    if table[i][j] != table[j][i] {
                        return false;
                    }
                }
            }
            for i in 0..l {
                for j in 0..l {
                    for k in 0..l {
                        if table[i][k] > &table[i][j] + &table[j][k] {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

/// A violated instance of the per-edge submodularity inequality.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubmodularityViolation {
    pub edge: usize,
    pub x: (usize, usize),
    pub y: (usize, usize),
}

/// Per-node permutations of the label set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelOrdering {
    perms: Vec<Vec<usize>>,
}

impl LabelOrdering {
    /// `perms[s][i]` is the new position of original label `i` at node `s`.
    pub fn new(perms: Vec<Vec<usize>>) -> Result<Self, EnergyError> {
        for (s, perm) in perms.iter().enumerate() {
            let mut seen = vec![false; perm.len()];
            for &p in perm {
                if p >= perm.len() || seen[p] {
                    return Err(EnergyError::NotAPermutation(s));
                }
                seen[p] = true;
            }
        }
        Ok(LabelOrdering { perms })
    }

    pub fn identity(node_count: usize, label_count: usize) -> Self {
        LabelOrdering {
            perms: vec![(0..label_count).collect(); node_count],
        }
    }

    /// Same permutation applied at every node.
    pub fn global(node_count: usize, perm: Vec<usize>) -> Result<Self, EnergyError> {
        LabelOrdering::new(vec![perm; node_count])
    }

    pub fn map(&self, node: usize, label: usize) -> usize {
        self.perms[node][label]
    }

    pub fn inverse(&self) -> LabelOrdering {
        let perms = self
            .perms
            .iter()
            .map(|perm| {
                let mut inv = vec![0; perm.len()];
                for (i, &p) in perm.iter().enumerate() {
                    inv[p] = i;
                }
                inv
            })
            .collect();
        LabelOrdering { perms }
    }

    pub fn valid_for(&self, space: &LabelSpace) -> Result<(), EnergyError> {
        if self.perms.len() != space.node_count()
            || self.perms.iter().any(|p| p.len() != space.label_count())
        {
            return Err(EnergyError::DimensionMismatch(
                "ordering does not match the label space".into(),
            ));
        }
        Ok(())
    }

    /// `x'_s = pi_s(x_s)`.
    pub fn apply_to_labeling(&self, x: &Labeling) -> Result<Labeling, EnergyError> {
        if x.len() != self.perms.len() {
            return Err(EnergyError::DimensionMismatch(format!(
                "labeling of length {} against ordering over {} nodes",
                x.len(),
                self.perms.len()
            )));
        }
        Ok(Labeling(
            x.0.iter()
                .enumerate()
                .map(|(s, &i)| self.perms[s][i])
                .collect(),
        ))
    }
}

/// Weak autarkies only guarantee the projection never increases energy;
/// strong ones decrease it strictly whenever the projection moves a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strength {
    Weak,
    Strong,
}

impl fmt::Display for Strength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strength::Weak => write!(f, "weak"),
            Strength::Strong => write!(f, "strong"),
        }
    }
}

/// A pair `(x_min, x_max)` with `x_min <= x_max`, tagged with its claimed
/// strength and the algorithm that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Autarky {
    pub x_min: Labeling,
    pub x_max: Labeling,
    pub strength: Strength,
    pub provenance: String,
}

impl Autarky {
    pub fn new(
        x_min: Labeling,
        x_max: Labeling,
        strength: Strength,
        provenance: impl Into<String>,
    ) -> Result<Self, EnergyError> {
        x_min.check_len(&x_max)?;
        for s in 0..x_min.len() {
            if x_min.get(s) > x_max.get(s) {
                return Err(EnergyError::BoundsOutOfOrder(s));
            }
        }
        Ok(Autarky {
            x_min,
            x_max,
            strength,
            provenance: provenance.into(),
        })
    }

    /// The identity autarky `(all-0, all-L)`.
    pub fn identity(space: &LabelSpace) -> Self {
        Autarky {
            x_min: Labeling::constant(space.node_count(), 0),
            x_max: Labeling::constant(space.node_count(), space.top_label()),
            strength: Strength::Weak,
            provenance: "identity".into(),
        }
    }

    /// `(x v x_min) ^ x_max`.
    pub fn project_through(&self, x: &Labeling) -> Result<Labeling, EnergyError> {
        x.join(&self.x_min)?.meet(&self.x_max)
    }

    /// Join `(x_min v y_min, x_max ^ y_max)` of two strong autarkies.
    ///
    /// Genuine strong autarkies can never produce contradictory bounds, so
    /// a `BoundsOutOfOrder` error here indicates an invalid input.
    pub fn join_autarkies(&self, other: &Autarky) -> Result<Autarky, EnergyError> {
        if self.strength != Strength::Strong || other.strength != Strength::Strong {
            return Err(EnergyError::JoinNeedsStrong);
        }
        Autarky::new(
            self.x_min.join(&other.x_min)?,
            self.x_max.meet(&other.x_max)?,
            Strength::Strong,
            format!("join({}, {})", self.provenance, other.provenance),
        )
    }

    /// Interval domain constraint `K_s = [x_min_s, .., x_max_s]`.
    pub fn to_constraint(&self) -> DomainConstraint {
        let allowed = (0..self.x_min.len())
            .map(|s| (self.x_min.get(s)..=self.x_max.get(s)).collect())
            .collect();
        DomainConstraint {
            allowed,
            strength: self.strength,
        }
    }
}

/// Per-node allowed label sets `K_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainConstraint {
    pub allowed: Vec<BTreeSet<usize>>,
    pub strength: Strength,
}

impl DomainConstraint {
    /// The unconstrained domain (every label allowed everywhere).
    pub fn full(space: &LabelSpace) -> Self {
        DomainConstraint {
            allowed: vec![space.labels().collect(); space.node_count()],
            strength: Strength::Strong,
        }
    }

    pub fn permits(&self, x: &Labeling) -> bool {
        x.len() == self.allowed.len()
            && x.0
                .iter()
                .zip(&self.allowed)
                .all(|(label, set)| set.contains(label))
    }

    /// True iff some `K_s` excludes at least one label.
    pub fn prunes_anything(&self, space: &LabelSpace) -> bool {
        self.allowed
            .iter()
            .any(|set| set.len() < space.label_count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, ratio};

    fn labeling(values: &[usize]) -> Labeling {
        Labeling(values.to_vec())
    }

    fn two_node_space() -> LabelSpace {
        LabelSpace::new(2, 2, vec![(0, 1)]).unwrap()
    }

    fn table_from_ints(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter()
            .map(|row| row.iter().map(|&v| rat(v)).collect())
            .collect()
    }

    fn potts(space: LabelSpace, weight: i64) -> EnergyFunction {
        let l = space.label_count();
        let table: Vec<Vec<Rational>> = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| if i == j { rat(0) } else { rat(weight) })
                    .collect()
            })
            .collect();
        let pairwise = space.edges().iter().map(|_| table.clone()).collect();
        let unary = vec![vec![rat(0); l]; space.node_count()];
        EnergyFunction::new(space, rat(0), unary, pairwise).unwrap()
    }

    #[test]
    fn evaluate_diagonal_zero() {
        let f = potts(two_node_space(), 1);
        assert_eq!(f.evaluate(&labeling(&[0, 0])).unwrap(), rat(0));
    }

    #[test]
    fn evaluate_off_diagonal() {
        let f = potts(two_node_space(), 1);
        assert_eq!(f.evaluate(&labeling(&[0, 1])).unwrap(), rat(1));
    }

    #[test]
    fn evaluate_with_constant_and_unary() {
        let space = LabelSpace::new(1, 3, vec![]).unwrap();
        let f = EnergyFunction::new(
            space,
            rat(2),
            vec![vec![rat(0), rat(5), rat(1)]],
            vec![],
        )
        .unwrap();
        assert_eq!(f.evaluate(&labeling(&[2])).unwrap(), rat(3));
    }

    #[test]
    fn evaluate_rejects_dimension_mismatch() {
        let f = potts(two_node_space(), 1);
        assert!(f.evaluate(&labeling(&[0])).is_err());
        assert!(f.evaluate(&labeling(&[0, 2])).is_err());
    }

    #[test]
    fn meet_join_componentwise() {
        let x = labeling(&[0, 2, 1]);
        let y = labeling(&[1, 0, 2]);
        assert_eq!(x.meet(&y).unwrap(), labeling(&[0, 0, 1]));
        assert_eq!(x.join(&y).unwrap(), labeling(&[1, 2, 2]));
    }

    #[test]
    fn meet_join_idempotent_and_comparable() {
        let x = labeling(&[1, 1]);
        assert_eq!(x.meet(&x).unwrap(), x);
        assert_eq!(x.join(&x).unwrap(), x);
        let lo = labeling(&[0, 0]);
        let hi = labeling(&[2, 2]);
        assert_eq!(lo.meet(&hi).unwrap(), lo);
        assert_eq!(lo.join(&hi).unwrap(), hi);
    }

    #[test]
    fn projection_examples() {
        let full = Autarky::new(
            labeling(&[0, 0]),
            labeling(&[2, 2]),
            Strength::Weak,
            "test",
        )
        .unwrap();
        assert_eq!(
            full.project_through(&labeling(&[1, 2])).unwrap(),
            labeling(&[1, 2])
        );
        let from_below = Autarky::new(
            labeling(&[1, 1]),
            labeling(&[2, 2]),
            Strength::Weak,
            "test",
        )
        .unwrap();
        assert_eq!(
            from_below.project_through(&labeling(&[0, 2])).unwrap(),
            labeling(&[1, 2])
        );
        let from_above = Autarky::new(
            labeling(&[0, 0]),
            labeling(&[1, 1]),
            Strength::Weak,
            "test",
        )
        .unwrap();
        assert_eq!(
            from_above.project_through(&labeling(&[2, 0])).unwrap(),
            labeling(&[1, 0])
        );
    }

    #[test]
    fn projection_is_idempotent() {
        let a = Autarky::new(
            labeling(&[1, 0]),
            labeling(&[2, 1]),
            Strength::Weak,
            "test",
        )
        .unwrap();
        for xs in 0..3 {
            for ys in 0..3 {
                let x = labeling(&[xs, ys]);
                let once = a.project_through(&x).unwrap();
                let twice = a.project_through(&once).unwrap();
                assert_eq!(once, twice);
                assert!(a.x_min.le(&once) && once.le(&a.x_max));
            }
        }
    }

    #[test]
    fn join_autarkies_componentwise() {
        let a = Autarky::new(
            labeling(&[0, 1]),
            labeling(&[2, 2]),
            Strength::Strong,
            "a",
        )
        .unwrap();
        let b = Autarky::new(
            labeling(&[1, 0]),
            labeling(&[2, 1]),
            Strength::Strong,
            "b",
        )
        .unwrap();
        let joined = a.join_autarkies(&b).unwrap();
        assert_eq!(joined.x_min, labeling(&[1, 1]));
        assert_eq!(joined.x_max, labeling(&[2, 1]));
        assert_eq!(joined.strength, Strength::Strong);
    }

    #[test]
    fn join_autarkies_idempotent_with_neutral_element() {
        let a = Autarky::new(
            labeling(&[1, 2]),
            labeling(&[1, 2]),
            Strength::Strong,
            "a",
        )
        .unwrap();
        let same = a.join_autarkies(&a).unwrap();
        assert_eq!((same.x_min, same.x_max), (a.x_min.clone(), a.x_max.clone()));

        let full = Autarky::new(
            labeling(&[0, 0]),
            labeling(&[2, 2]),
            Strength::Strong,
            "full",
        )
        .unwrap();
        let joined = full.join_autarkies(&a).unwrap();
        assert_eq!((joined.x_min, joined.x_max), (a.x_min, a.x_max));
    }

    #[test]
    fn join_autarkies_rejects_weak_and_contradiction() {
        let weak = Autarky::new(
            labeling(&[0]),
            labeling(&[1]),
            Strength::Weak,
            "w",
        )
        .unwrap();
        let strong = Autarky::new(
            labeling(&[0]),
            labeling(&[1]),
            Strength::Strong,
            "s",
        )
        .unwrap();
        assert_eq!(
            weak.join_autarkies(&strong).unwrap_err(),
            EnergyError::JoinNeedsStrong
        );

        let low = Autarky::new(labeling(&[0]), labeling(&[0]), Strength::Strong, "lo").unwrap();
        let high = Autarky::new(labeling(&[1]), labeling(&[1]), Strength::Strong, "hi").unwrap();
        assert!(matches!(
            low.join_autarkies(&high),
            Err(EnergyError::BoundsOutOfOrder(0))
        ));
    }

    #[test]
    fn two_label_potts_is_submodular() {
        let f = potts(two_node_space(), 1);
        assert!(f.is_submodular());
    }

    #[test]
    fn three_label_potts_is_not_submodular() {
        let space = LabelSpace::new(2, 3, vec![(0, 1)]).unwrap();
        let f = potts(space, 1);
        let witness = f.submodularity_witness().expect("must find a violation");
        // Returned witness must itself violate the inequality.
        let t = f.pairwise(witness.edge);
        let (xi, xj) = witness.x;
        let (yi, yj) = witness.y;
        assert!(&t[xi][xj] + &t[yi][yj] < &t[xi.min(yi)][xj.min(yj)] + &t[xi.max(yi)][xj.max(yj)]);
        // The pair named in the problem statement is a violation too.
        assert!(&t[0][2] + &t[1][1] < &t[0][1] + &t[1][2]);
    }

    #[test]
    fn constant_tables_are_submodular() {
        let space = LabelSpace::new(2, 3, vec![(0, 1)]).unwrap();
        let table = vec![vec![ratio(7, 3); 3]; 3];
        let f = EnergyFunction::new(
            space.clone(),
            rat(0),
            vec![vec![rat(0); 3]; 2],
            vec![table],
        )
        .unwrap();
        assert!(f.is_submodular());
    }

    #[test]
    fn potts_is_metric_nonzero_diagonal_is_not() {
        let space = LabelSpace::new(2, 3, vec![(0, 1)]).unwrap();
        assert!(potts(space.clone(), 1).is_metric());

        let mut table = vec![vec![rat(1); 3]; 3];
        table[1][1] = rat(0);
        table[2][2] = rat(0);
        // f(0,0) = 1 breaks the zero-diagonal requirement.
        let f = EnergyFunction::new(space, rat(0), vec![vec![rat(0); 3]; 2], vec![table]).unwrap();
        assert!(!f.is_metric());
    }

    #[test]
    fn truncated_linear_is_metric() {
        let space = LabelSpace::new(2, 4, vec![(0, 1)]).unwrap();
        let table: Vec<Vec<Rational>> = (0..4i64)
            .map(|i| (0..4i64).map(|j| rat((i - j).abs().min(2))).collect())
            .collect();
        let f = EnergyFunction::new(space, rat(0), vec![vec![rat(0); 4]; 2], vec![table]).unwrap();
        assert!(f.is_metric());
    }

    #[test]
    fn ordering_identity_and_transposition() {
        let space = LabelSpace::new(1, 3, vec![]).unwrap();
        let f = EnergyFunction::new(
            space.clone(),
            rat(0),
            vec![vec![rat(3), rat(1), rat(2)]],
            vec![],
        )
        .unwrap();
        let id = LabelOrdering::identity(1, 3);
        assert_eq!(f.apply_ordering(&id).unwrap(), f);

        let swap = LabelOrdering::new(vec![vec![1, 0, 2]]).unwrap();
        let g = f.apply_ordering(&swap).unwrap();
        assert_eq!(g.unary(0), &[rat(1), rat(3), rat(2)]);

        let back = g.apply_ordering(&swap.inverse()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn ordering_preserves_evaluation() {
        let space = LabelSpace::new(2, 3, vec![(0, 1)]).unwrap();
        let f = EnergyFunction::new(
            space.clone(),
            rat(1),
            vec![vec![rat(0), rat(2), rat(4)], vec![rat(1), rat(3), rat(5)]],
            vec![table_from_ints(&[&[0, 1, 2], &[3, 4, 5], &[6, 7, 8]])],
        )
        .unwrap();
        let pi = LabelOrdering::new(vec![vec![2, 0, 1], vec![1, 2, 0]]).unwrap();
        let g = f.apply_ordering(&pi).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let x = labeling(&[a, b]);
                let y = pi.apply_to_labeling(&x).unwrap();
                assert_eq!(f.evaluate(&x).unwrap(), g.evaluate(&y).unwrap());
            }
        }
    }

    #[test]
    fn ordering_rejects_non_bijection() {
        assert!(LabelOrdering::new(vec![vec![0, 0, 1]]).is_err());
        assert!(LabelOrdering::new(vec![vec![0, 3, 1]]).is_err());
    }

    #[test]
    fn autarky_to_constraint_intervals() {
        let fixed = Autarky::new(labeling(&[1]), labeling(&[1]), Strength::Strong, "t").unwrap();
        let c = fixed.to_constraint();
        assert_eq!(c.allowed[0], BTreeSet::from([1]));

        let free = Autarky::new(labeling(&[0]), labeling(&[2]), Strength::Weak, "t").unwrap();
        assert_eq!(free.to_constraint().allowed[0], BTreeSet::from([0, 1, 2]));

        let mixed = Autarky::new(
            labeling(&[1, 2]),
            labeling(&[2, 2]),
            Strength::Strong,
            "t",
        )
        .unwrap();
        let c = mixed.to_constraint();
        assert_eq!(c.allowed[0], BTreeSet::from([1, 2]));
        assert_eq!(c.allowed[1], BTreeSet::from([2]));
        assert_eq!(c.strength, Strength::Strong);
    }

    #[test]
    fn space_rejects_bad_edges() {
        assert_eq!(
            LabelSpace::new(2, 2, vec![(0, 0)]).unwrap_err(),
            EnergyError::SelfLoop(0, 0)
        );
        assert_eq!(
            LabelSpace::new(2, 2, vec![(0, 1), (0, 1)]).unwrap_err(),
            EnergyError::DuplicateEdge(0, 1)
        );
        assert_eq!(
            LabelSpace::new(2, 2, vec![(0, 2)]).unwrap_err(),
            EnergyError::EdgeOutOfRange(0, 2)
        );
        // (s, t) and (t, s) are distinct ordered pairs and may coexist.
        assert!(LabelSpace::new(2, 2, vec![(0, 1), (1, 0)]).is_ok());
    }
}
