//! Auxiliary submodular problems and the strong autarkies they certify.
//!
//! The scheme splits an energy `f` into `g + h` where `g` is submodular
//! and `h` satisfies per-node and per-edge monotonicity inequalities over
//! allowed label sets `K_s`. The lowest minimizer of `g` then pairs with
//! the top labeling into a strong autarky for `f` itself. Two
//! constructions are provided: the direct one-vs-all method (one run per
//! target label), its sequential generalization with LP-built edge
//! tables, and the conclusion-style variant that drops the submodularity
//! cap and probes the two-label problem through the roof dual.
//!
//! Everything works in a reordered label space where the target label
//! sits on top; returned autarkies live in that space and carry their
//! ordering alongside.

use std::collections::BTreeSet;

use num_traits::Zero;
use thiserror::Error;

use crate::energy::{
    Autarky, DomainConstraint, EnergyError, EnergyFunction, LabelOrdering, LabelSpace, Labeling,
    Strength, SubmodularityViolation,
};
use crate::flow::{minimize_submodular, FlowError};
use crate::lp::simplex::{Simplex, SimplexError};
use crate::lp::{roof_dual_autarky, LpError};
use crate::Rational;

#[derive(Debug, Error)]
pub enum KovtunError {
    #[error("the construction needs at least two labels")]
    TooFewLabels,
    #[error("node {node} fixed to both {first} and {second}: strong constraints cannot conflict")]
    ContradictoryFixes {
        node: usize,
        first: usize,
        second: usize,
    },
    #[error("auxiliary two-label structure is not submodular: {0:?}")]
    AuxiliaryNotSubmodular(SubmodularityViolation),
    #[error("sequential loop failed to terminate within its bound")]
    IterationOverflow,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// Split `f' = g + h` over a reordered space together with the allowed
/// label sets the sufficient conditions refer to.
#[derive(Debug, Clone)]
pub struct AuxiliaryDecomposition {
    /// Submodular auxiliary (for the improved variant, possibly only
    /// two-label-submodular after truncation removal).
    pub g: EnergyFunction,
    /// Remainder `f' - g`, entry-exact.
    pub h: EnergyFunction,
    /// Allowed sets `K_s`.
    pub allowed: Vec<BTreeSet<usize>>,
}

/// Per-edge coefficients of the one-vs-all table: `a` on (top, top), `b`
/// on (top, j), `c` on (i, top) and `d` on the interior.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneVsAllTable {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

/// Coefficients for one edge table of a reordered energy. With `capped`
/// the interior value is clamped at `b + c - a`, which makes the
/// two-label structure submodular; without the cap it is the raw optimum
/// of the monotonicity inequalities.
pub fn one_vs_all_table(table: &[Vec<Rational>], capped: bool) -> OneVsAllTable {
    let top = table.len() - 1;
    let a = table[top][top].clone();
    let b = (0..top).map(|j| table[top][j].clone()).min().expect("top >= 1");
    let c = (0..top).map(|i| table[i][top].clone()).min().expect("top >= 1");
    let mut inner: Option<Rational> = None;
    for i in 0..top {
        for j in 0..top {
            let slack_b = &b - &table[top][j];
            let slack_c = &c - &table[i][top];
            let candidate = &table[i][j] + slack_b.min(slack_c);
            if inner.as_ref().is_none_or(|best| &candidate < best) {
                inner = Some(candidate);
            }
        }
    }
    let inner = inner.expect("interior is nonempty");
    let d = if capped {
        inner.min(&b + &c - &a)
    } else {
        inner
    };
    OneVsAllTable { a, b, c, d }
}

/// The ordering used by both constructions: the target label moves to the
/// top position and a label attaining the cheapest non-target unary moves
/// to position zero (smallest original index on ties). The remaining
/// labels keep their relative order.
pub fn one_vs_all_ordering(f: &EnergyFunction, target: usize) -> LabelOrdering {
    let l = f.space().label_count();
    let top = l - 1;
    let perms = f
        .space()
        .nodes()
        .map(|s| {
            let mut cheapest = usize::MAX;
            for i in 0..l {
                if i == target {
                    continue;
                }
                if cheapest == usize::MAX || f.unary(s)[i] < f.unary(s)[cheapest] {
                    cheapest = i;
                }
            }
            let mut perm = vec![usize::MAX; l];
            perm[target] = top;
            perm[cheapest] = 0;
            let mut next = 1;
            for (i, slot) in perm.iter_mut().enumerate() {
                if i != target && i != cheapest {
                    *slot = next;
                    next += 1;
                }
            }
            perm
        })
        .collect();
    LabelOrdering::new(perms).expect("constructed permutations are bijections")
}

fn abcd_pairwise(
    f_reordered: &EnergyFunction,
    capped: bool,
) -> (Vec<OneVsAllTable>, Vec<Vec<Vec<Rational>>>) {
    let l = f_reordered.space().label_count();
    let top = l - 1;
    let mut tables = Vec::new();
    let mut pairwise = Vec::new();
    for e in 0..f_reordered.space().edges().len() {
        let coeffs = one_vs_all_table(f_reordered.pairwise(e), capped);
        let mut table = vec![vec![Rational::zero(); l]; l];
        for (i, row) in table.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = match (i == top, j == top) {
                    (true, true) => coeffs.a.clone(),
                    (true, false) => coeffs.b.clone(),
                    (false, true) => coeffs.c.clone(),
                    (false, false) => coeffs.d.clone(),
                };
            }
        }
        tables.push(coeffs);
        pairwise.push(table);
    }
    (tables, pairwise)
}

/// Builds the one-vs-all auxiliary for a target label: reorders the
/// space, copies the unaries into `g`, fills every edge with its
/// `(a, b, c, d)` table and sets `K_s = {0, top}`.
pub fn one_vs_all_auxiliary(
    f: &EnergyFunction,
    target: usize,
) -> Result<(LabelOrdering, AuxiliaryDecomposition), KovtunError> {
    let l = f.space().label_count();
    if l < 2 {
        return Err(KovtunError::TooFewLabels);
    }
    let ordering = one_vs_all_ordering(f, target);
    let reordered = f.apply_ordering(&ordering)?;
    let (_, pairwise) = abcd_pairwise(&reordered, true);
    let g = EnergyFunction::new(
        reordered.space().clone(),
        reordered.constant().clone(),
        reordered.unary_tables().to_vec(),
        pairwise,
    )?;
    let h = reordered.sub(&g)?;
    let allowed = vec![BTreeSet::from([0, l - 1]); f.space().node_count()];
    Ok((ordering, AuxiliaryDecomposition { g, h, allowed }))
}

/// Restricts `g` to the labels `{0, top}` and returns the equivalent
/// two-label energy.
fn two_label_restriction(g: &EnergyFunction) -> Result<EnergyFunction, KovtunError> {
    let space = g.space();
    let top = space.top_label();
    let binary_space = LabelSpace::new(space.node_count(), 2, space.edges().to_vec())?;
    let unary = space
        .nodes()
        .map(|s| vec![g.unary(s)[0].clone(), g.unary(s)[top].clone()])
        .collect();
    let pairwise = (0..space.edges().len())
        .map(|e| {
            let t = g.pairwise(e);
            vec![
                vec![t[0][0].clone(), t[0][top].clone()],
                vec![t[top][0].clone(), t[top][top].clone()],
            ]
        })
        .collect();
    Ok(EnergyFunction::new(
        binary_space,
        g.constant().clone(),
        unary,
        pairwise,
    )?)
}

/// Lowest minimizer of the auxiliary, computed on its two-label
/// restriction; components are guaranteed to land in `{0, top}`.
pub fn solve_one_vs_all(aux: &AuxiliaryDecomposition) -> Result<Labeling, KovtunError> {
    let binary = two_label_restriction(&aux.g)?;
    if let Some(witness) = binary.submodularity_witness() {
        return Err(KovtunError::AuxiliaryNotSubmodular(witness));
    }
    let minimum = minimize_submodular(&binary)?;
    let top = aux.g.space().top_label();
    Ok(Labeling(
        minimum
            .lowest
            .0
            .iter()
            .map(|&z| if z == 1 { top } else { 0 })
            .collect(),
    ))
}

/// A single one-vs-all run: the ordering it used, the decomposition, the
/// derived autarky `(x_min, top)` in the reordered space, and the nodes
/// it fixes to the target label in the original space.
#[derive(Debug, Clone)]
pub struct OneVsAllRun {
    pub target: usize,
    pub ordering: LabelOrdering,
    pub aux: AuxiliaryDecomposition,
    pub autarky: Autarky,
    pub fixed_nodes: Vec<usize>,
}

/// Runs the one-vs-all construction for one target label.
pub fn one_vs_all(f: &EnergyFunction, target: usize) -> Result<OneVsAllRun, KovtunError> {
    let (ordering, aux) = one_vs_all_auxiliary(f, target)?;
    let x_min = solve_one_vs_all(&aux)?;
    let top = f.space().top_label();
    let fixed_nodes = (0..x_min.len()).filter(|&s| x_min.get(s) == top).collect();
    let autarky = Autarky::new(
        x_min,
        Labeling::constant(f.space().node_count(), top),
        Strength::Strong,
        format!("one-vs-all[{target}]"),
    )?;
    Ok(OneVsAllRun {
        target,
        ordering,
        aux,
        autarky,
        fixed_nodes,
    })
}

/// Combined outcome over all target labels.
#[derive(Debug, Clone)]
pub struct OneVsAllOutcome {
    pub constraint: DomainConstraint,
    pub runs: Vec<OneVsAllRun>,
}

impl OneVsAllOutcome {
    /// The fixed partial assignment in the original space.
    pub fn fixed_assignments(&self) -> Vec<(usize, usize)> {
        let mut fixed = Vec::new();
        for run in &self.runs {
            for &s in &run.fixed_nodes {
                fixed.push((s, run.target));
            }
        }
        fixed.sort_unstable();
        fixed
    }

    /// Original-space autarky that pins every fixed node to its label and
    /// leaves the rest untouched. Degenerate intervals project the same
    /// way under any label order, so the reordered per-target autarkies
    /// compose into this single pair.
    pub fn combined_autarky(&self, space: &LabelSpace) -> Autarky {
        let mut x_min = Labeling::constant(space.node_count(), 0);
        let mut x_max = Labeling::constant(space.node_count(), space.top_label());
        let fixed = self.fixed_assignments();
        for &(s, k) in &fixed {
            x_min.0[s] = k;
            x_max.0[s] = k;
        }
        let strength = if fixed.is_empty() {
            Strength::Weak
        } else {
            Strength::Strong
        };
        Autarky::new(x_min, x_max, strength, "one-vs-all-combined")
            .expect("degenerate intervals are ordered")
    }
}

fn combine_fixes(
    space: &LabelSpace,
    fixes: impl Iterator<Item = (usize, usize)>,
) -> Result<DomainConstraint, KovtunError> {
    let mut fixed: Vec<Option<usize>> = vec![None; space.node_count()];
    for (s, k) in fixes {
        match fixed[s] {
            Some(existing) if existing != k => {
                return Err(KovtunError::ContradictoryFixes {
                    node: s,
                    first: existing,
                    second: k,
                });
            }
            _ => fixed[s] = Some(k),
        }
    }
    let allowed = fixed
        .iter()
        .map(|slot| match slot {
            Some(k) => BTreeSet::from([*k]),
            None => space.labels().collect(),
        })
        .collect();
    Ok(DomainConstraint {
        allowed,
        strength: Strength::Strong,
    })
}

/// Runs one-vs-all for every target label and intersects the derived
/// constraints. Conflicting fixes signal a bug, not an input property.
pub fn one_vs_all_all_labels(f: &EnergyFunction) -> Result<OneVsAllOutcome, KovtunError> {
    let runs = f
        .space()
        .labels()
        .map(|target| one_vs_all(f, target))
        .collect::<Result<_, _>>()?;
    combine_one_vs_all_runs(f.space(), runs)
}

/// Intersects the fixes of independently computed per-target runs; the
/// runs may come from parallel workers as long as they arrive in target
/// order.
pub fn combine_one_vs_all_runs(
    space: &LabelSpace,
    runs: Vec<OneVsAllRun>,
) -> Result<OneVsAllOutcome, KovtunError> {
    let constraint = combine_fixes(
        space,
        runs.iter()
            .flat_map(|run| run.fixed_nodes.iter().map(|&s| (s, run.target))),
    )?;
    Ok(OneVsAllOutcome { constraint, runs })
}

/// A violated sufficient-condition instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SufficiencyViolation {
    Unary {
        node: usize,
        x: usize,
        x_hat: usize,
    },
    Pairwise {
        edge: usize,
        x: (usize, usize),
        x_hat: (usize, usize),
    },
}

/// Outcome of the sufficient-condition check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SufficiencyVerdict {
    Fails(SufficiencyViolation),
    Weak,
    Strong,
}

/// Checks the monotonicity conditions on `h` over the allowed sets:
///
/// * per node, `h_s(x v k) <= h_s(x)` for every label `x` and `k` in
///   `K_s`;
/// * per edge, `h_st(x v k) <= h_st(x)` for every pair `x` and `k` in
///   `K_s x K_t`;
/// * strong additionally needs the node inequality strict whenever
///   `x < k` (and at least one such instance to exist).
///
/// The right-hand sides sit at the free variable `x`: that is the form
/// the summation argument needs, and the strict case is then meaningful.
pub fn check_sufficient_conditions(
    h: &EnergyFunction,
    allowed: &[BTreeSet<usize>],
) -> SufficiencyVerdict {
    let space = h.space();
    let l = space.label_count();
    let mut strict_instances = 0usize;
    let mut all_strict = true;
    for s in space.nodes() {
        for x in 0..l {
            for &k in &allowed[s] {
                let joined = x.max(k);
                let lhs = &h.unary(s)[joined];
                let rhs = &h.unary(s)[x];
                if lhs > rhs {
                    return SufficiencyVerdict::Fails(SufficiencyViolation::Unary {
                        node: s,
                        x,
                        x_hat: k,
                    });
                }
                if x < k {
                    strict_instances += 1;
                    if lhs == rhs {
                        all_strict = false;
                    }
                }
            }
        }
    }
    for (e, &(s, t)) in space.edges().iter().enumerate() {
        let table = h.pairwise(e);
        for i in 0..l {
            for j in 0..l {
                for &ks in &allowed[s] {
                    for &kt in &allowed[t] {
                        if table[i.max(ks)][j.max(kt)] > table[i][j] {
                            return SufficiencyVerdict::Fails(SufficiencyViolation::Pairwise {
                                edge: e,
                                x: (i, j),
                                x_hat: (ks, kt),
                            });
                        }
                    }
                }
            }
        }
    }
    if strict_instances > 0 && all_strict {
        SufficiencyVerdict::Strong
    } else {
        SufficiencyVerdict::Weak
    }
}

/// One edge table of the sequential construction, found by a two-stage
/// LP: feasibility is submodularity of `g`, the monotonicity
/// inequalities of `h = f - g` over the current `K`, and `g <= f`
/// entry-wise; the primary objective pushes `g` up toward `f` and the
/// tie-break maximizes the total slack of the monotonicity inequalities.
fn sequential_edge_table(
    f_table: &[Vec<Rational>],
    k_s: &BTreeSet<usize>,
    k_t: &BTreeSet<usize>,
) -> Result<Vec<Vec<Rational>>, SimplexError> {
    let l = f_table.len();
    let vars = l * l;
    let idx = |i: usize, j: usize| i * l + j;

    // Inequality rows over the free table entries.
    let mut ineqs: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for i in 1..l {
        for j in 1..l {
            let mut row = vec![Rational::zero(); vars];
            row[idx(i, j)] += Rational::from_integer(1.into());
            row[idx(i - 1, j - 1)] += Rational::from_integer(1.into());
            row[idx(i - 1, j)] -= Rational::from_integer(1.into());
            row[idx(i, j - 1)] -= Rational::from_integer(1.into());
            ineqs.push((row, Rational::zero()));
        }
    }
    for i in 0..l {
        for j in 0..l {
            let mut row = vec![Rational::zero(); vars];
            row[idx(i, j)] = Rational::from_integer(1.into());
            ineqs.push((row, f_table[i][j].clone()));
        }
    }
    let mut slack_counts = vec![0i64; vars];
    for i in 0..l {
        for j in 0..l {
            for &ks in k_s {
                for &kt in k_t {
                    let (ui, uj) = (i.max(ks), j.max(kt));
                    if (ui, uj) == (i, j) {
                        continue;
                    }
                    let mut row = vec![Rational::zero(); vars];
                    row[idx(i, j)] = Rational::from_integer(1.into());
                    row[idx(ui, uj)] = Rational::from_integer((-1).into());
                    ineqs.push((row, &f_table[i][j] - &f_table[ui][uj]));
                    slack_counts[idx(i, j)] += 1;
                    slack_counts[idx(ui, uj)] -= 1;
                }
            }
        }
    }

    // Standard form: free entries split into positive parts, one slack
    // per inequality.
    let columns = 2 * vars + ineqs.len();
    let rows = ineqs
        .iter()
        .enumerate()
        .map(|(r, (coeffs, bound))| {
            let mut row = vec![Rational::zero(); columns];
            for (v, c) in coeffs.iter().enumerate() {
                row[v] = c.clone();
                row[vars + v] = -c.clone();
            }
            row[2 * vars + r] = Rational::from_integer(1.into());
            (row, bound.clone())
        })
        .collect();

    let mut simplex = Simplex::new(rows)?;
    let mut primary = vec![Rational::zero(); columns];
    for v in 0..vars {
        primary[v] = Rational::from_integer((-1).into());
        primary[vars + v] = Rational::from_integer(1.into());
    }
    simplex.minimize(&primary)?;
    let mut tie_break = vec![Rational::zero(); columns];
    for v in 0..vars {
        tie_break[v] = Rational::from_integer(slack_counts[v].into());
        tie_break[vars + v] = Rational::from_integer((-slack_counts[v]).into());
    }
    simplex.refine(&tie_break)?;

    let x = simplex.solution();
    Ok((0..l)
        .map(|i| (0..l).map(|j| &x[idx(i, j)] - &x[vars + idx(i, j)]).collect())
        .collect())
}

fn sequential_auxiliary(
    f_reordered: &EnergyFunction,
    allowed: &[BTreeSet<usize>],
) -> Result<AuxiliaryDecomposition, KovtunError> {
    let space = f_reordered.space();
    let mut pairwise = Vec::with_capacity(space.edges().len());
    for (e, &(s, t)) in space.edges().iter().enumerate() {
        pairwise.push(sequential_edge_table(
            f_reordered.pairwise(e),
            &allowed[s],
            &allowed[t],
        )?);
    }
    let g = EnergyFunction::new(
        space.clone(),
        f_reordered.constant().clone(),
        f_reordered.unary_tables().to_vec(),
        pairwise,
    )?;
    let h = f_reordered.sub(&g)?;
    Ok(AuxiliaryDecomposition {
        g,
        h,
        allowed: allowed.to_vec(),
    })
}

/// Result of the sequential construction.
#[derive(Debug, Clone)]
pub struct SequentialOutcome {
    /// `(x_min, top)` in the reordered space; vacuous when aborted.
    pub autarky: Autarky,
    /// Final decomposition, absent when construction aborted.
    pub decomposition: Option<AuxiliaryDecomposition>,
    pub iterations: usize,
    pub aborted: bool,
}

/// Sequential construction: grow the allowed sets by the current lowest
/// minimizer of `g` and rebuild `g` until the minimizer stabilizes
/// inside them.
pub fn sequential_kovtun(
    f: &EnergyFunction,
    ordering: &LabelOrdering,
) -> Result<SequentialOutcome, KovtunError> {
    let reordered = f.apply_ordering(ordering)?;
    let space = reordered.space();
    let top = space.top_label();
    let vacuous = || {
        Autarky::new(
            Labeling::constant(space.node_count(), 0),
            Labeling::constant(space.node_count(), top),
            Strength::Weak,
            "sequential-aborted",
        )
        .expect("vacuous bounds are ordered")
    };
    let mut allowed: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); space.node_count()];
    let bound = space.node_count() * space.label_count() + 1;
    for iteration in 1..=bound {
        let aux = match sequential_auxiliary(&reordered, &allowed) {
            Ok(aux) => aux,
            Err(KovtunError::Simplex(SimplexError::Infeasible)) => {
                return Ok(SequentialOutcome {
                    autarky: vacuous(),
                    decomposition: None,
                    iterations: iteration,
                    aborted: true,
                });
            }
            Err(other) => return Err(other),
        };
        let x_min = minimize_submodular(&aux.g)?.lowest;
        if (0..space.node_count()).all(|s| allowed[s].contains(&x_min.get(s))) {
            let autarky = Autarky::new(
                x_min,
                Labeling::constant(space.node_count(), top),
                Strength::Strong,
                "sequential",
            )?;
            return Ok(SequentialOutcome {
                autarky,
                decomposition: Some(aux),
                iterations: iteration,
                aborted: false,
            });
        }
        for s in space.nodes() {
            allowed[s].insert(x_min.get(s));
        }
    }
    Err(KovtunError::IterationOverflow)
}

/// Sequential run per target label using the one-vs-all orderings, with
/// the per-target fixes intersected like the direct method.
pub struct SequentialAllLabels {
    pub constraint: DomainConstraint,
    pub runs: Vec<(usize, LabelOrdering, SequentialOutcome)>,
}

pub fn sequential_all_labels(f: &EnergyFunction) -> Result<SequentialAllLabels, KovtunError> {
    if f.space().label_count() < 2 {
        return Err(KovtunError::TooFewLabels);
    }
    let top = f.space().top_label();
    let mut runs = Vec::new();
    for target in f.space().labels() {
        let ordering = one_vs_all_ordering(f, target);
        let outcome = sequential_kovtun(f, &ordering)?;
        runs.push((target, ordering, outcome));
    }
    let constraint = combine_fixes(
        f.space(),
        runs.iter().flat_map(|(target, _, outcome)| {
            let target = *target;
            (0..f.space().node_count())
                .filter(move |&s| !outcome.aborted && outcome.autarky.x_min.get(s) == top)
                .map(move |s| (s, target))
        }),
    )?;
    Ok(SequentialAllLabels { constraint, runs })
}

/// The conclusion-style variant: the interior coefficient keeps its raw
/// value (no submodularity cap), and the possibly non-submodular
/// two-label problem is probed by the roof dual instead of a cut.
#[derive(Debug, Clone)]
pub struct ImprovedRun {
    pub target: usize,
    pub ordering: LabelOrdering,
    pub aux: AuxiliaryDecomposition,
    /// The two-label problem handed to the roof dual.
    pub binary: EnergyFunction,
    /// Roof-dual autarky of the two-label problem.
    pub roof_dual: Autarky,
    /// Lift `(x_min, top)` in the reordered space: nodes the roof dual
    /// fixes at the top label.
    pub autarky: Autarky,
    pub fixed_nodes: Vec<usize>,
}

pub fn improved_one_vs_all(
    f: &EnergyFunction,
    target: usize,
) -> Result<ImprovedRun, KovtunError> {
    let l = f.space().label_count();
    if l < 2 {
        return Err(KovtunError::TooFewLabels);
    }
    let ordering = one_vs_all_ordering(f, target);
    let reordered = f.apply_ordering(&ordering)?;
    let (_, pairwise) = abcd_pairwise(&reordered, false);
    let g = EnergyFunction::new(
        reordered.space().clone(),
        reordered.constant().clone(),
        reordered.unary_tables().to_vec(),
        pairwise,
    )?;
    let h = reordered.sub(&g)?;
    let allowed = vec![BTreeSet::from([0, l - 1]); f.space().node_count()];
    let aux = AuxiliaryDecomposition { g, h, allowed };

    let binary = two_label_restriction(&aux.g)?;
    let roof_dual = roof_dual_autarky(&binary)?;
    let top = f.space().top_label();
    let fixed_nodes: Vec<usize> = (0..f.space().node_count())
        .filter(|&s| roof_dual.x_min.get(s) == 1)
        .collect();
    let mut x_min = Labeling::constant(f.space().node_count(), 0);
    for &s in &fixed_nodes {
        x_min.0[s] = top;
    }
    let autarky = Autarky::new(
        x_min,
        Labeling::constant(f.space().node_count(), top),
        Strength::Strong,
        format!("improved-one-vs-all[{target}]"),
    )?;
    Ok(ImprovedRun {
        target,
        ordering,
        aux,
        binary,
        roof_dual,
        autarky,
        fixed_nodes,
    })
}

/// Improved variant over all target labels.
pub struct ImprovedOutcome {
    pub constraint: DomainConstraint,
    pub runs: Vec<ImprovedRun>,
}

pub fn improved_all_labels(f: &EnergyFunction) -> Result<ImprovedOutcome, KovtunError> {
    let runs: Vec<ImprovedRun> = f
        .space()
        .labels()
        .map(|target| improved_one_vs_all(f, target))
        .collect::<Result<_, _>>()?;
    let constraint = combine_fixes(
        f.space(),
        runs.iter()
            .flat_map(|run| run.fixed_nodes.iter().map(|&s| (s, run.target))),
    )?;
    Ok(ImprovedOutcome { constraint, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{generate, GeneratorSpec, Structure};
    use crate::oracle::{
        check_autarky_definition, check_persistency, enumerate_minimizers, AutarkyVerdict,
        PersistencyVerdict,
    };
    use crate::rat;

    fn table_of(rows: &[&[i64]]) -> Vec<Vec<Rational>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| rat(v)).collect())
            .collect()
    }

    #[test]
    fn abcd_on_the_band_table() {
        let table = table_of(&[&[0, 1, 2], &[1, 0, 1], &[2, 1, 0]]);
        let coeffs = one_vs_all_table(&table, true);
        assert_eq!(coeffs.a, rat(0));
        assert_eq!(coeffs.b, rat(1));
        assert_eq!(coeffs.c, rat(1));
        assert_eq!(coeffs.d, rat(-1));
        // Uncapped coincides here: the inner minimum is below b + c - a.
        let raw = one_vs_all_table(&table, false);
        assert_eq!(raw.d, rat(-1));
    }

    #[test]
    fn abcd_on_the_zero_table() {
        let table = table_of(&[&[0, 0], &[0, 0]]);
        let coeffs = one_vs_all_table(&table, true);
        assert_eq!(
            (coeffs.a, coeffs.b, coeffs.c, coeffs.d),
            (rat(0), rat(0), rat(0), rat(0))
        );
    }

    #[test]
    fn capped_interior_respects_the_submodularity_bound() {
        for seed in 0..120 {
            let spec = GeneratorSpec::new(2, 4, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            for e in 0..f.space().edges().len() {
                let coeffs = one_vs_all_table(f.pairwise(e), true);
                assert!(&coeffs.d <= &(&coeffs.b + &coeffs.c - &coeffs.a), "seed {seed}");
            }
        }
    }

    #[test]
    fn auxiliary_is_submodular_and_exact() {
        for seed in 0..60 {
            let spec = GeneratorSpec::new(4, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            for target in 0..3 {
                let (ordering, aux) = one_vs_all_auxiliary(&f, target).unwrap();
                assert!(aux.g.is_submodular(), "seed {seed} target {target}");
                let reordered = f.apply_ordering(&ordering).unwrap();
                assert_eq!(aux.g.add(&aux.h).unwrap(), reordered);
                assert!(matches!(
                    check_sufficient_conditions(&aux.h, &aux.allowed),
                    SufficiencyVerdict::Weak | SufficiencyVerdict::Strong
                ));
            }
        }
    }

    #[test]
    fn sufficiency_hand_example_is_strong() {
        let space = LabelSpace::new(1, 2, vec![]).unwrap();
        let h = EnergyFunction::new(space, rat(0), vec![vec![rat(0), rat(-1)]], vec![]).unwrap();
        let verdict = check_sufficient_conditions(&h, &[BTreeSet::from([1])]);
        assert_eq!(verdict, SufficiencyVerdict::Strong);
    }

    #[test]
    fn zero_remainder_is_weak() {
        let space = LabelSpace::new(2, 3, vec![(0, 1)]).unwrap();
        let h = EnergyFunction::zero(space);
        let allowed = vec![BTreeSet::from([0, 2]); 2];
        assert_eq!(
            check_sufficient_conditions(&h, &allowed),
            SufficiencyVerdict::Weak
        );
    }

    #[test]
    fn sufficiency_failure_returns_a_witness() {
        let space = LabelSpace::new(1, 2, vec![]).unwrap();
        // Climbing unary: joining up to label 1 increases h.
        let h = EnergyFunction::new(space, rat(0), vec![vec![rat(0), rat(1)]], vec![]).unwrap();
        match check_sufficient_conditions(&h, &[BTreeSet::from([1])]) {
            SufficiencyVerdict::Fails(SufficiencyViolation::Unary { node, x, x_hat }) => {
                assert_eq!((node, x, x_hat), (0, 0, 1));
            }
            other => panic!("expected unary violation, got {other:?}"),
        }
    }

    #[test]
    fn dominant_target_fixes_everything() {
        let space = LabelSpace::new(3, 3, vec![(0, 1), (1, 2)]).unwrap();
        let f = EnergyFunction::new(
            space.clone(),
            rat(0),
            vec![vec![rat(5), rat(6), rat(0)]; 3],
            vec![vec![vec![rat(0); 3]; 3]; 2],
        )
        .unwrap();
        let run = one_vs_all(&f, 2).unwrap();
        assert_eq!(run.autarky.x_min, Labeling(vec![2, 2, 2]));
        assert_eq!(run.fixed_nodes, vec![0, 1, 2]);
    }

    #[test]
    fn all_zero_energy_fixes_nothing() {
        let space = LabelSpace::new(3, 3, vec![(0, 1), (1, 2)]).unwrap();
        let f = EnergyFunction::zero(space);
        let outcome = one_vs_all_all_labels(&f).unwrap();
        assert!(outcome.fixed_assignments().is_empty());
        assert!(!outcome.constraint.prunes_anything(f.space()));
    }

    #[test]
    fn solved_minimizer_matches_the_full_lattice_meet() {
        for seed in 0..40 {
            let spec = GeneratorSpec::new(4, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            for target in 0..3 {
                let (_, aux) = one_vs_all_auxiliary(&f, target).unwrap();
                let solved = solve_one_vs_all(&aux).unwrap();
                let full = minimize_submodular(&aux.g).unwrap();
                assert_eq!(solved, full.lowest, "seed {seed} target {target}");
                let brute = enumerate_minimizers(&aux.g, 100_000).unwrap();
                assert_eq!(solved, brute.meet, "seed {seed} target {target}");
            }
        }
    }

    #[test]
    fn fixes_are_strongly_persistent() {
        for seed in 0..60 {
            let spec = GeneratorSpec::new(4, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            let outcome = one_vs_all_all_labels(&f).unwrap();
            let verdict = check_persistency(&f, &outcome.constraint, 100_000).unwrap();
            assert_eq!(verdict, PersistencyVerdict::Strong, "seed {seed}");
        }
    }

    #[test]
    fn per_target_autarkies_are_strong_for_the_reordered_energy() {
        for seed in 0..25 {
            let spec = GeneratorSpec::new(4, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            let outcome = one_vs_all_all_labels(&f).unwrap();
            for run in &outcome.runs {
                let reordered = f.apply_ordering(&run.ordering).unwrap();
                let check =
                    check_autarky_definition(&reordered, &run.autarky, 100_000).unwrap();
                let expected_at_least = if run.fixed_nodes.is_empty() {
                    AutarkyVerdict::Weak
                } else {
                    AutarkyVerdict::Strong
                };
                assert!(
                    check.verdict >= expected_at_least,
                    "seed {seed} target {} verdict {:?}",
                    run.target,
                    check.verdict
                );
            }
        }
    }

    #[test]
    fn combined_autarky_is_oracle_confirmed() {
        for seed in 0..30 {
            let spec = GeneratorSpec::new(4, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            let outcome = one_vs_all_all_labels(&f).unwrap();
            let combined = outcome.combined_autarky(f.space());
            let check = check_autarky_definition(&f, &combined, 100_000).unwrap();
            match combined.strength {
                Strength::Strong => assert_eq!(check.verdict, AutarkyVerdict::Strong),
                Strength::Weak => assert!(check.verdict >= AutarkyVerdict::Weak),
            }
        }
    }

    #[test]
    fn global_relabeling_relabels_the_constraint() {
        for seed in 0..20 {
            let spec = GeneratorSpec::new(4, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            let sigma = vec![2, 0, 1];
            let relabel = LabelOrdering::global(4, sigma.clone()).unwrap();
            let g = f.apply_ordering(&relabel).unwrap();
            let base = one_vs_all_all_labels(&f).unwrap();
            let moved = one_vs_all_all_labels(&g).unwrap();
            for s in 0..4 {
                let mapped: BTreeSet<usize> =
                    base.constraint.allowed[s].iter().map(|&i| sigma[i]).collect();
                assert_eq!(mapped, moved.constraint.allowed[s], "seed {seed} node {s}");
            }
        }
    }

    #[test]
    fn sequential_on_submodular_input_returns_its_lowest_minimizer() {
        for seed in 0..20 {
            let spec = GeneratorSpec::new(4, 3, Structure::Submodular, seed);
            let f = generate(&spec).unwrap();
            let identity = LabelOrdering::identity(4, 3);
            let outcome = sequential_kovtun(&f, &identity).unwrap();
            assert!(!outcome.aborted);
            let direct = minimize_submodular(&f).unwrap();
            assert_eq!(outcome.autarky.x_min, direct.lowest, "seed {seed}");
            // g = f is the optimum of the first-stage LP here.
            let aux = outcome.decomposition.unwrap();
            assert_eq!(aux.g, f, "seed {seed}");
        }
    }

    #[test]
    fn sequential_on_zero_energy_is_vacuous() {
        let space = LabelSpace::new(3, 3, vec![(0, 1), (1, 2)]).unwrap();
        let f = EnergyFunction::zero(space);
        let outcome = sequential_kovtun(&f, &LabelOrdering::identity(3, 3)).unwrap();
        assert!(!outcome.aborted);
        assert_eq!(outcome.autarky.x_min, Labeling(vec![0, 0, 0]));
    }

    #[test]
    fn sequential_autarkies_pass_the_oracle() {
        for seed in 0..25 {
            let spec = GeneratorSpec::new(3, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            for target in 0..3 {
                let ordering = one_vs_all_ordering(&f, target);
                let outcome = sequential_kovtun(&f, &ordering).unwrap();
                assert!(!outcome.aborted, "seed {seed} target {target}");
                let reordered = f.apply_ordering(&ordering).unwrap();
                let check =
                    check_autarky_definition(&reordered, &outcome.autarky, 100_000).unwrap();
                assert!(
                    check.verdict >= AutarkyVerdict::Weak,
                    "seed {seed} target {target}"
                );
                if outcome.autarky.x_min.0.iter().any(|&v| v > 0) {
                    assert_eq!(
                        check.verdict,
                        AutarkyVerdict::Strong,
                        "seed {seed} target {target}"
                    );
                }
                let aux = outcome.decomposition.unwrap();
                assert!(aux.g.is_submodular());
                assert_eq!(aux.g.add(&aux.h).unwrap(), reordered);
            }
        }
    }

    #[test]
    fn improved_matches_plain_when_the_cap_is_inactive() {
        for seed in 0..40 {
            let spec = GeneratorSpec::new(4, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            for target in 0..3 {
                let (_, aux) = one_vs_all_auxiliary(&f, target).unwrap();
                let improved = improved_one_vs_all(&f, target).unwrap();
                if aux.g == improved.aux.g {
                    let plain = solve_one_vs_all(&aux).unwrap();
                    let top = f.space().top_label();
                    let plain_fixed: Vec<usize> =
                        (0..4).filter(|&s| plain.get(s) == top).collect();
                    assert_eq!(plain_fixed, improved.fixed_nodes, "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn improved_dominates_plain_on_two_label_instances() {
        for seed in 0..60 {
            let spec = GeneratorSpec::new(5, 2, Structure::TwoLabel, seed);
            let f = generate(&spec).unwrap();
            let plain = one_vs_all_all_labels(&f).unwrap();
            let improved = improved_all_labels(&f).unwrap();
            let plain_fixed: BTreeSet<(usize, usize)> =
                plain.fixed_assignments().into_iter().collect();
            let improved_fixed: BTreeSet<(usize, usize)> = improved
                .runs
                .iter()
                .flat_map(|r| r.fixed_nodes.iter().map(|&s| (s, r.target)))
                .collect();
            assert!(
                plain_fixed.is_subset(&improved_fixed),
                "seed {seed}: plain {plain_fixed:?} improved {improved_fixed:?}"
            );
            let verdict = check_persistency(&f, &improved.constraint, 100_000).unwrap();
            assert_eq!(verdict, PersistencyVerdict::Strong, "seed {seed}");
        }
    }

    #[test]
    fn improved_aux_keeps_the_monotonicity_conditions() {
        for seed in 0..30 {
            let spec = GeneratorSpec::new(4, 3, Structure::Random, seed);
            let f = generate(&spec).unwrap();
            let improved = improved_one_vs_all(&f, 1).unwrap();
            assert!(matches!(
                check_sufficient_conditions(&improved.aux.h, &improved.aux.allowed),
                SufficiencyVerdict::Weak | SufficiencyVerdict::Strong
            ));
        }
    }

    #[test]
    fn contradictory_fixes_are_reported() {
        let space = LabelSpace::new(1, 2, vec![]).unwrap();
        let err = combine_fixes(&space, [(0, 0), (0, 1)].into_iter()).unwrap_err();
        assert!(matches!(err, KovtunError::ContradictoryFixes { node: 0, .. }));
    }
}
