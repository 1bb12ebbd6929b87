//! Exact LP relaxation over the local polytope.
//!
//! A relaxed labeling assigns nonnegative weights to labels and label
//! pairs subject to normalization and marginalization; the polytope of
//! such weights contains every indicator vector of an ordinary labeling.
//! This module solves the relaxation exactly, implements the truncation
//! operators on relaxed labelings, verifies LP-autarkies (a polynomially
//! checkable subclass of autarkies), probes the support of the optimal
//! face and derives the two-label roof-dual autarky from it.

pub mod simplex;

use num_traits::Zero;
use thiserror::Error;

use crate::energy::{Autarky, EnergyError, EnergyFunction, Labeling, LabelSpace, Strength};
use crate::Rational;
use simplex::{Simplex, SimplexError};

#[derive(Debug, Error)]
pub enum LpError {
    #[error("roof dual requires exactly two labels, got {0}")]
    NotTwoLabel(usize),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Nonnegative weights on labels and label pairs. Membership in the local
/// polytope is a separate check, not an invariant of the container.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxedLabeling {
    /// `node[s][i]` is the weight of label `i` at node `s`.
    pub node: Vec<Vec<Rational>>,
    /// `edge[e][i][j]` is the weight of the pair `(i, j)` on edge `e`.
    pub edge: Vec<Vec<Vec<Rational>>>,
}

impl RelaxedLabeling {
    pub fn zeros(space: &LabelSpace) -> Self {
        let l = space.label_count();
        RelaxedLabeling {
            node: vec![vec![Rational::zero(); l]; space.node_count()],
            edge: vec![vec![vec![Rational::zero(); l]; l]; space.edges().len()],
        }
    }

    /// Indicator vector of a labeling: unit mass on `x_s` and on
    /// `(x_s, x_t)` per edge.
    pub fn phi(space: &LabelSpace, x: &Labeling) -> Result<Self, EnergyError> {
        x.valid_for(space)?;
        let mut mu = RelaxedLabeling::zeros(space);
        let one = Rational::from_integer(1.into());
        for s in space.nodes() {
            mu.node[s][x.get(s)] = one.clone();
        }
        for (e, &(s, t)) in space.edges().iter().enumerate() {
            mu.edge[e][x.get(s)][x.get(t)] = one.clone();
        }
        Ok(mu)
    }

    /// The barycenter of the polytope: uniform mass everywhere.
    pub fn uniform(space: &LabelSpace) -> Self {
        let l = space.label_count() as i64;
        let mut mu = RelaxedLabeling::zeros(space);
        for row in &mut mu.node {
            for v in row.iter_mut() {
                *v = Rational::new(1.into(), l.into());
            }
        }
        for table in &mut mu.edge {
            for row in table.iter_mut() {
                for v in row.iter_mut() {
                    *v = Rational::new(1.into(), (l * l).into());
                }
            }
        }
        mu
    }

    /// `<f, mu>` including the constant term (weight one on it).
    pub fn inner(&self, f: &EnergyFunction) -> Rational {
        let mut total = f.constant().clone();
        for (s, weights) in self.node.iter().enumerate() {
            for (i, w) in weights.iter().enumerate() {
                if !w.is_zero() {
                    total += w * &f.unary(s)[i];
                }
            }
        }
        for (e, table) in self.edge.iter().enumerate() {
            for (i, row) in table.iter().enumerate() {
                for (j, w) in row.iter().enumerate() {
                    if !w.is_zero() {
                        total += w * &f.pairwise(e)[i][j];
                    }
                }
            }
        }
        total
    }

    /// `self + factor * other`, used to build convex combinations.
    pub fn add_scaled(&self, other: &RelaxedLabeling, factor: &Rational) -> RelaxedLabeling {
        let mut out = self.clone();
        for (dst, src) in out.node.iter_mut().zip(&other.node) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += factor * s;
            }
        }
        for (dst, src) in out.edge.iter_mut().zip(&other.edge) {
            for (drow, srow) in dst.iter_mut().zip(src) {
                for (d, s) in drow.iter_mut().zip(srow) {
                    *d += factor * s;
                }
            }
        }
        out
    }

    pub fn scale(&self, factor: &Rational) -> RelaxedLabeling {
        RelaxedLabeling::zeros_like(self).add_scaled(self, factor)
    }

    fn zeros_like(other: &RelaxedLabeling) -> RelaxedLabeling {
        RelaxedLabeling {
            node: other
                .node
                .iter()
                .map(|row| vec![Rational::zero(); row.len()])
                .collect(),
            edge: other
                .edge
                .iter()
                .map(|t| vec![vec![Rational::zero(); t.len()]; t.len()])
                .collect(),
        }
    }

    /// Exact check of the local-polytope constraints: nonnegativity,
    /// per-node and per-edge normalization, and both marginalizations.
    pub fn check_polytope(&self, space: &LabelSpace) -> Result<(), PolytopeViolation> {
        let one = Rational::from_integer(1.into());
        for (s, weights) in self.node.iter().enumerate() {
            if weights.iter().any(|w| w < &Rational::zero()) {
                return Err(PolytopeViolation::NegativeNodeWeight(s));
            }
            if weights.iter().sum::<Rational>() != one {
                return Err(PolytopeViolation::NodeNormalization(s));
            }
        }
        for (e, &(s, t)) in space.edges().iter().enumerate() {
            let table = &self.edge[e];
            let mut total = Rational::zero();
            for row in table {
                if row.iter().any(|w| w < &Rational::zero()) {
                    return Err(PolytopeViolation::NegativeEdgeWeight(e));
                }
                total += row.iter().sum::<Rational>();
            }
            if total != one {
                return Err(PolytopeViolation::EdgeNormalization(e));
            }
            for i in 0..space.label_count() {
                let row_sum: Rational = table[i].iter().sum();
                if row_sum != self.node[s][i] {
                    return Err(PolytopeViolation::RowMarginal { edge: e, label: i });
                }
            }
            for j in 0..space.label_count() {
                let col_sum: Rational = table.iter().map(|row| &row[j]).sum();
                if col_sum != self.node[t][j] {
                    return Err(PolytopeViolation::ColumnMarginal { edge: e, label: j });
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolytopeViolation {
    #[error("negative weight at node {0}")]
    NegativeNodeWeight(usize),
    #[error("node {0} weights do not sum to one")]
    NodeNormalization(usize),
    #[error("negative weight on edge {0}")]
    NegativeEdgeWeight(usize),
    #[error("edge {0} weights do not sum to one")]
    EdgeNormalization(usize),
    #[error("edge {edge} row marginal mismatch at label {label}")]
    RowMarginal { edge: usize, label: usize },
    #[error("edge {edge} column marginal mismatch at label {label}")]
    ColumnMarginal { edge: usize, label: usize },
}

/// Truncation from above: mass at labels above `y` collapses onto `y`,
/// independently per coordinate (the region sums of the definition are
/// exactly the preimages of this clamp).
pub fn barwedge(space: &LabelSpace, mu: &RelaxedLabeling, y: &Labeling) -> RelaxedLabeling {
    transfer(space, mu, |s, i| i.min(y.get(s)))
}

/// Truncation from below: mass at labels below `y` collapses onto `y`.
pub fn veebar(space: &LabelSpace, mu: &RelaxedLabeling, y: &Labeling) -> RelaxedLabeling {
    transfer(space, mu, |s, i| i.max(y.get(s)))
}

fn transfer(
    space: &LabelSpace,
    mu: &RelaxedLabeling,
    target: impl Fn(usize, usize) -> usize,
) -> RelaxedLabeling {
    let mut out = RelaxedLabeling::zeros(space);
    for (s, weights) in mu.node.iter().enumerate() {
        for (i, w) in weights.iter().enumerate() {
            if !w.is_zero() {
                out.node[s][target(s, i)] += w;
            }
        }
    }
    for (e, &(s, t)) in space.edges().iter().enumerate() {
        for (i, row) in mu.edge[e].iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                if !w.is_zero() {
                    out.edge[e][target(s, i)][target(t, j)] += w;
                }
            }
        }
    }
    out
}

/// Which operator is paired with which bound in the projection map.
///
/// `Canonical` composes so that indicators collapse to the labeling
/// projection `(x v x_min) ^ x_max`; `SourceLiteral` follows the source
/// formula's literal operator order, which collapses everything onto
/// `x_max` and is kept only to document the discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OperatorPairing {
    #[default]
    Canonical,
    SourceLiteral,
}

/// The linear map `mu -> (mu raised to x_min) truncated at x_max`,
/// represented by its defining bounds.
#[derive(Debug, Clone)]
pub struct AutarkyMap {
    pub x_min: Labeling,
    pub x_max: Labeling,
    pub pairing: OperatorPairing,
}

impl AutarkyMap {
    pub fn new(x_min: Labeling, x_max: Labeling) -> Self {
        AutarkyMap {
            x_min,
            x_max,
            pairing: OperatorPairing::Canonical,
        }
    }

    pub fn from_autarky(a: &Autarky) -> Self {
        AutarkyMap::new(a.x_min.clone(), a.x_max.clone())
    }

    pub fn with_pairing(mut self, pairing: OperatorPairing) -> Self {
        self.pairing = pairing;
        self
    }

    /// Applies the map as a composition of the two truncation operators.
    pub fn apply(&self, space: &LabelSpace, mu: &RelaxedLabeling) -> RelaxedLabeling {
        match self.pairing {
            OperatorPairing::Canonical => {
                barwedge(space, &veebar(space, mu, &self.x_min), &self.x_max)
            }
            OperatorPairing::SourceLiteral => {
                veebar(space, &barwedge(space, mu, &self.x_min), &self.x_max)
            }
        }
    }

    /// Where the map sends unit mass at `(node, label)`; the map is the
    /// per-component push of every weight to this target.
    pub fn push_target(&self, node: usize, label: usize) -> usize {
        match self.pairing {
            OperatorPairing::Canonical => label.max(self.x_min.get(node)).min(self.x_max.get(node)),
            OperatorPairing::SourceLiteral => {
                label.min(self.x_min.get(node)).max(self.x_max.get(node))
            }
        }
    }
}

/// Variable layout of the polytope LP: node weights first, edge weights
/// after, row-major per edge table.
#[derive(Debug, Clone)]
struct VarLayout {
    labels: usize,
    node_offset: Vec<usize>,
    edge_offset: Vec<usize>,
    total: usize,
}

impl VarLayout {
    fn new(space: &LabelSpace) -> Self {
        let labels = space.label_count();
        let node_offset: Vec<usize> = (0..space.node_count()).map(|s| s * labels).collect();
        let base = space.node_count() * labels;
        let edge_offset: Vec<usize> = (0..space.edges().len())
            .map(|e| base + e * labels * labels)
            .collect();
        VarLayout {
            labels,
            node_offset,
            edge_offset,
            total: base + space.edges().len() * labels * labels,
        }
    }

    fn node(&self, s: usize, i: usize) -> usize {
        self.node_offset[s] + i
    }

    fn edge(&self, e: usize, i: usize, j: usize) -> usize {
        self.edge_offset[e] + i * self.labels + j
    }

    fn pack_objective(&self, f: &EnergyFunction) -> Vec<Rational> {
        let mut c = vec![Rational::zero(); self.total];
        for s in 0..f.space().node_count() {
            for i in 0..self.labels {
                c[self.node(s, i)] = f.unary(s)[i].clone();
            }
        }
        for e in 0..f.space().edges().len() {
            for i in 0..self.labels {
                for j in 0..self.labels {
                    c[self.edge(e, i, j)] = f.pairwise(e)[i][j].clone();
                }
            }
        }
        c
    }

    fn unpack(&self, space: &LabelSpace, x: &[Rational]) -> RelaxedLabeling {
        let mut mu = RelaxedLabeling::zeros(space);
        for s in space.nodes() {
            for i in 0..self.labels {
                mu.node[s][i] = x[self.node(s, i)].clone();
            }
        }
        for e in 0..space.edges().len() {
            for i in 0..self.labels {
                for j in 0..self.labels {
                    mu.edge[e][i][j] = x[self.edge(e, i, j)].clone();
                }
            }
        }
        mu
    }
}

/// A feasible simplex over the local polytope of a space, reusable for
/// several objectives and for probing the optimal face.
pub struct PolytopeSolver {
    space: LabelSpace,
    layout: VarLayout,
    simplex: Simplex,
}

impl PolytopeSolver {
    /// Assembles the polytope constraints and finds a feasible basis.
    /// Optionally pins the listed `(node, label)` weights to zero.
    pub fn new(space: &LabelSpace, pinned_zero: &[(usize, usize)]) -> Result<Self, LpError> {
        let layout = VarLayout::new(space);
        let one = Rational::from_integer(1.into());
        let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();

        for s in space.nodes() {
            let mut row = vec![Rational::zero(); layout.total];
            for i in 0..layout.labels {
                row[layout.node(s, i)] = one.clone();
            }
            rows.push((row, one.clone()));
        }
        for (e, &(s, t)) in space.edges().iter().enumerate() {
            let mut row = vec![Rational::zero(); layout.total];
            for i in 0..layout.labels {
                for j in 0..layout.labels {
                    row[layout.edge(e, i, j)] = one.clone();
                }
            }
            rows.push((row, one.clone()));
            for i in 0..layout.labels {
                let mut row = vec![Rational::zero(); layout.total];
                for j in 0..layout.labels {
                    row[layout.edge(e, i, j)] = one.clone();
                }
                row[layout.node(s, i)] = -one.clone();
                rows.push((row, Rational::zero()));
            }
            for j in 0..layout.labels {
                let mut row = vec![Rational::zero(); layout.total];
                for i in 0..layout.labels {
                    row[layout.edge(e, i, j)] = one.clone();
                }
                row[layout.node(t, j)] = -one.clone();
                rows.push((row, Rational::zero()));
            }
        }
        for &(s, i) in pinned_zero {
            let mut row = vec![Rational::zero(); layout.total];
            row[layout.node(s, i)] = one.clone();
            rows.push((row, Rational::zero()));
        }

        let simplex = Simplex::new(rows)?;
        Ok(PolytopeSolver {
            space: space.clone(),
            layout,
            simplex,
        })
    }

    /// Minimizes `<f, mu>` over the polytope.
    pub fn minimize_energy(&mut self, f: &EnergyFunction) -> Result<LpSolution, LpError> {
        let objective = self.layout.pack_objective(f);
        let value = self.simplex.minimize(&objective)?;
        Ok(LpSolution {
            value: value + f.constant(),
            optimizer: self.layout.unpack(&self.space, &self.simplex.solution()),
            basis: self.simplex.basis().to_vec(),
        })
    }

    /// Minimizes an arbitrary linear functional given by per-component
    /// coefficients (constant term zero).
    pub fn minimize_components(
        &mut self,
        node_cost: &[Vec<Rational>],
        edge_cost: &[Vec<Vec<Rational>>],
    ) -> Result<(Rational, RelaxedLabeling), LpError> {
        let mut objective = vec![Rational::zero(); self.layout.total];
        for (s, row) in node_cost.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                objective[self.layout.node(s, i)] = v.clone();
            }
        }
        for (e, table) in edge_cost.iter().enumerate() {
            for (i, row) in table.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    objective[self.layout.edge(e, i, j)] = v.clone();
                }
            }
        }
        let value = self.simplex.minimize(&objective)?;
        Ok((
            value,
            self.layout.unpack(&self.space, &self.simplex.solution()),
        ))
    }

    /// Maximum of `mu_{s,i}` over the optimal face of the last minimized
    /// objective.
    pub fn face_max_component(&mut self, s: usize, i: usize) -> Result<Rational, LpError> {
        let mut objective = vec![Rational::zero(); self.layout.total];
        objective[self.layout.node(s, i)] = -Rational::from_integer(1.into());
        Ok(-self.simplex.refine(&objective)?)
    }

    /// Maximum over the optimal face of the total node mass outside the
    /// per-node interval `[x_min_s, x_max_s]`.
    pub fn face_max_outside_interval(
        &mut self,
        x_min: &Labeling,
        x_max: &Labeling,
    ) -> Result<Rational, LpError> {
        let mut objective = vec![Rational::zero(); self.layout.total];
        for s in self.space.nodes() {
            for i in 0..self.layout.labels {
                if i < x_min.get(s) || i > x_max.get(s) {
                    objective[self.layout.node(s, i)] = -Rational::from_integer(1.into());
                }
            }
        }
        Ok(-self.simplex.refine(&objective)?)
    }

    /// The optimizer at the current basis.
    pub fn current_point(&self) -> RelaxedLabeling {
        self.layout.unpack(&self.space, &self.simplex.solution())
    }
}

/// Optimal value, an optimal relaxed labeling, and the basis certificate.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: Rational,
    pub optimizer: RelaxedLabeling,
    pub basis: Vec<usize>,
}

/// Solves `min <f, mu>` over the local polytope.
pub fn solve_lp(f: &EnergyFunction) -> Result<LpSolution, LpError> {
    PolytopeSolver::new(f.space(), &[])?.minimize_energy(f)
}

/// Solves the relaxation with the weights of all labels outside
/// `allowed[s]` pinned to zero.
pub fn solve_lp_restricted(
    f: &EnergyFunction,
    allowed: &[std::collections::BTreeSet<usize>],
) -> Result<LpSolution, LpError> {
    let mut pinned = Vec::new();
    for (s, set) in allowed.iter().enumerate() {
        for i in f.space().labels() {
            if !set.contains(&i) {
                pinned.push((s, i));
            }
        }
    }
    PolytopeSolver::new(f.space(), &pinned)?.minimize_energy(f)
}

/// Outcome of the weak LP-autarky check.
#[derive(Debug, Clone)]
pub struct WeakLpVerdict {
    pub holds: bool,
    /// `min <f, mu - A mu>` over the polytope; nonnegative iff the pair is
    /// a weak LP-autarky.
    pub optimum: Rational,
    /// Minimizing relaxed labeling; a certificate of refutation when the
    /// verdict is negative.
    pub certificate: RelaxedLabeling,
}

fn difference_costs(
    f: &EnergyFunction,
    map: &AutarkyMap,
) -> (Vec<Vec<Rational>>, Vec<Vec<Vec<Rational>>>) {
    let space = f.space();
    let l = space.label_count();
    let mut node_cost: Vec<Vec<Rational>> = (0..space.node_count())
        .map(|s| f.unary(s).to_vec())
        .collect();
    for s in space.nodes() {
        for i in 0..l {
            let target = map.push_target(s, i);
            let moved = f.unary(s)[target].clone();
            node_cost[s][i] -= moved;
        }
    }
    let mut edge_cost: Vec<Vec<Vec<Rational>>> = (0..space.edges().len())
        .map(|e| f.pairwise(e).clone())
        .collect();
    for (e, &(s, t)) in space.edges().iter().enumerate() {
        for i in 0..l {
            for j in 0..l {
                let moved = f.pairwise(e)[map.push_target(s, i)][map.push_target(t, j)].clone();
                edge_cost[e][i][j] -= moved;
            }
        }
    }
    (node_cost, edge_cost)
}

/// Solves `min <f, mu - A mu>` exactly; the pair is a weak LP-autarky iff
/// the optimum is nonnegative.
pub fn verify_weak_lp_autarky(f: &EnergyFunction, a: &Autarky) -> Result<WeakLpVerdict, LpError> {
    let map = AutarkyMap::from_autarky(a);
    let (node_cost, edge_cost) = difference_costs(f, &map);
    let mut solver = PolytopeSolver::new(f.space(), &[])?;
    let (optimum, certificate) = solver.minimize_components(&node_cost, &edge_cost)?;
    Ok(WeakLpVerdict {
        holds: !num_traits::Signed::is_negative(&optimum),
        optimum,
        certificate,
    })
}

/// Checks the strong LP-autarky condition without epsilon constraints:
/// the pair is strong iff every optimizer of the weak-verification LP is
/// fixed by the map, i.e. the optimal face carries no node mass outside
/// the `[x_min, x_max]` box (edge mass outside is then zero by
/// marginalization).
pub fn verify_strong_lp_autarky(f: &EnergyFunction, a: &Autarky) -> Result<bool, LpError> {
    let map = AutarkyMap::from_autarky(a);
    let (node_cost, edge_cost) = difference_costs(f, &map);
    let mut solver = PolytopeSolver::new(f.space(), &[])?;
    let (optimum, _) = solver.minimize_components(&node_cost, &edge_cost)?;
    if num_traits::Signed::is_negative(&optimum) {
        return Ok(false);
    }
    let moved_mass = solver.face_max_outside_interval(&a.x_min, &a.x_max)?;
    Ok(moved_mass.is_zero())
}

/// Test harness for the relaxed submodularity inequality
/// `<mu,f> + <phi(y),f> >= <mu barwedge y, f> + <mu veebar y, f>`.
pub fn check_relax_submodular(
    f: &EnergyFunction,
    mu: &RelaxedLabeling,
    y: &Labeling,
) -> Result<bool, LpError> {
    let space = f.space();
    let phi_y = RelaxedLabeling::phi(space, y)?;
    let lhs = mu.inner(f) + phi_y.inner(f);
    let rhs = barwedge(space, mu, y).inner(f) + veebar(space, mu, y).inner(f);
    Ok(lhs >= rhs)
}

/// `support[s][i]` is true iff some optimizer of the relaxation puts
/// positive weight on label `i` at node `s`. Probes the optimal face with
/// one refinement per undecided component.
pub fn optimal_support(f: &EnergyFunction) -> Result<Vec<Vec<bool>>, LpError> {
    let space = f.space();
    let mut solver = PolytopeSolver::new(space, &[])?;
    let solution = solver.minimize_energy(f)?;
    let mut support = vec![vec![false; space.label_count()]; space.node_count()];
    for s in space.nodes() {
        for i in space.labels() {
            if !solution.optimizer.node[s][i].is_zero() {
                support[s][i] = true;
            }
        }
    }
    for s in space.nodes() {
        for i in space.labels() {
            if !support[s][i] {
                support[s][i] = !solver.face_max_component(s, i)?.is_zero();
            }
        }
    }
    Ok(support)
}

/// Roof-dual autarky of a two-label problem: per node, the minimum and
/// maximum label carrying optimal support.
pub fn roof_dual_autarky(f: &EnergyFunction) -> Result<Autarky, LpError> {
    if f.space().label_count() != 2 {
        return Err(LpError::NotTwoLabel(f.space().label_count()));
    }
    let support = optimal_support(f)?;
    let x_min = Labeling(
        support
            .iter()
            .map(|row| row.iter().position(|&b| b).expect("nonempty support"))
            .collect(),
    );
    let x_max = Labeling(
        support
            .iter()
            .map(|row| row.iter().rposition(|&b| b).expect("nonempty support"))
            .collect(),
    );
    Ok(Autarky::new(x_min, x_max, Strength::Strong, "roof-dual")?)
}
