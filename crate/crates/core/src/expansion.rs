//! Expansion-move local search with parameterized truncation.
//!
//! A move lets every node keep its label or switch to a common candidate
//! `k`; the move energy is a two-label problem over the same graph.
//! Non-submodular move edges are truncated by the `(alpha, beta)` family,
//! which over-estimates every energy increase, so a move accepted through
//! the truncated energy always strictly improves the true one. Fixed
//! points of the sweep dominate the one-vs-all autarkies componentwise in
//! the per-target reordered space.

use num_traits::Signed;
use thiserror::Error;

use crate::energy::{EnergyError, EnergyFunction, LabelSpace, Labeling};
use crate::flow::{minimize_submodular, FlowError};
use crate::kovtun::OneVsAllRun;
use crate::oracle::Labelings;
use crate::{rat, Rational};

#[derive(Debug, Error)]
pub enum ExpansionError {
    #[error("truncation parameters must satisfy alpha >= 0, beta >= 0, alpha + beta <= 1")]
    RuleOutOfBounds,
    #[error("rule carries {got} edge parameter pairs, instance has {want} edges")]
    RuleLengthMismatch { got: usize, want: usize },
    #[error("sweep budget must be at least one")]
    NoSweepBudget,
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

/// The binary move energy `g(z)` together with the `(x, k)` context that
/// produced it. `z_s = 0` keeps `x_s`, `z_s = 1` switches to `k`.
#[derive(Debug, Clone)]
pub struct MoveEnergy {
    energy: EnergyFunction,
    pub base: Labeling,
    pub target: usize,
}

impl MoveEnergy {
    pub fn energy(&self) -> &EnergyFunction {
        &self.energy
    }

    pub fn evaluate(&self, z: &Labeling) -> Result<Rational, EnergyError> {
        self.energy.evaluate(z)
    }

    /// `g(0)`, the energy of refusing the move.
    pub fn rest_energy(&self) -> Rational {
        let zeros = Labeling::constant(self.base.len(), 0);
        self.energy.evaluate(&zeros).expect("zero move is valid")
    }

    /// `g(1,1) + g(0,0) - g(0,1) - g(1,0)` of one edge table; the edge is
    /// submodular iff this is nonpositive.
    pub fn delta(&self, edge: usize) -> Rational {
        let t = self.energy.pairwise(edge);
        &(&t[1][1] + &t[0][0]) - &(&t[0][1] + &t[1][0])
    }
}

/// Applies a move: `z_s = 1` switches node `s` to the target label.
pub fn apply_move(x: &Labeling, target: usize, z: &Labeling) -> Labeling {
    Labeling(
        x.0.iter()
            .zip(&z.0)
            .map(|(&xs, &zs)| if zs == 1 { target } else { xs })
            .collect(),
    )
}

/// Builds the move energy of `(x, k)`: unaries compare staying with
/// switching, edge tables are the four combinations read off `f`.
pub fn move_energy(
    f: &EnergyFunction,
    x: &Labeling,
    target: usize,
) -> Result<MoveEnergy, ExpansionError> {
    x.valid_for(f.space())?;
    if target >= f.space().label_count() {
        return Err(ExpansionError::Energy(EnergyError::LabelOutOfRange {
            node: 0,
            label: target,
        }));
    }
    let space = f.space();
    let binary_space = LabelSpace::new(space.node_count(), 2, space.edges().to_vec())?;
    let unary = space
        .nodes()
        .map(|s| vec![f.unary(s)[x.get(s)].clone(), f.unary(s)[target].clone()])
        .collect();
    let pairwise = space
        .edges()
        .iter()
        .enumerate()
        .map(|(e, &(s, t))| {
            let table = f.pairwise(e);
            vec![
                vec![
                    table[x.get(s)][x.get(t)].clone(),
                    table[x.get(s)][target].clone(),
                ],
                vec![
                    table[target][x.get(t)].clone(),
                    table[target][target].clone(),
                ],
            ]
        })
        .collect();
    let energy = EnergyFunction::new(binary_space, f.constant().clone(), unary, pairwise)?;
    Ok(MoveEnergy {
        energy,
        base: x.clone(),
        target,
    })
}

/// Per-edge truncation parameters `alpha, beta >= 0`, `alpha + beta <= 1`;
/// uniform rules apply one pair everywhere.
#[derive(Debug, Clone)]
pub struct TruncationRule {
    uniform: Option<(Rational, Rational)>,
    per_edge: Vec<(Rational, Rational)>,
}

impl TruncationRule {
    pub fn uniform(alpha: Rational, beta: Rational) -> Result<Self, ExpansionError> {
        Self::check_pair(&alpha, &beta)?;
        Ok(TruncationRule {
            uniform: Some((alpha, beta)),
            per_edge: Vec::new(),
        })
    }

    pub fn per_edge(pairs: Vec<(Rational, Rational)>) -> Result<Self, ExpansionError> {
        for (alpha, beta) in &pairs {
            Self::check_pair(alpha, beta)?;
        }
        Ok(TruncationRule {
            uniform: None,
            per_edge: pairs,
        })
    }

    /// The default rule `(alpha, beta) = (0, 1)`, the least favorable
    /// truncation and hence the strongest test of dominance claims.
    pub fn default_rule() -> Self {
        TruncationRule::uniform(rat(0), rat(1)).expect("bounds hold")
    }

    fn check_pair(alpha: &Rational, beta: &Rational) -> Result<(), ExpansionError> {
        if alpha.is_negative() || beta.is_negative() || alpha + beta > rat(1) {
            return Err(ExpansionError::RuleOutOfBounds);
        }
        Ok(())
    }

    pub fn params(&self, edge: usize) -> &(Rational, Rational) {
        match &self.uniform {
            Some(pair) => pair,
            None => &self.per_edge[edge],
        }
    }

    fn check_len(&self, edges: usize) -> Result<(), ExpansionError> {
        if self.uniform.is_none() && self.per_edge.len() != edges {
            return Err(ExpansionError::RuleLengthMismatch {
                got: self.per_edge.len(),
                want: edges,
            });
        }
        Ok(())
    }
}

/// Truncates every non-submodular edge of the move energy. Touched edges
/// end with a zero discrepancy and the output is submodular; increases
/// relative to the zero move are only ever over-estimated.
pub fn truncate(g: &MoveEnergy, rule: &TruncationRule) -> Result<MoveEnergy, ExpansionError> {
    let edges = g.energy.space().edges().len();
    rule.check_len(edges)?;
    let mut pairwise: Vec<Vec<Vec<Rational>>> = (0..edges)
        .map(|e| g.energy.pairwise(e).clone())
        .collect();
    for (e, table) in pairwise.iter_mut().enumerate() {
        let delta = g.delta(e);
        if !delta.is_positive() {
            continue;
        }
        let (alpha, beta) = rule.params(e);
        table[0][0] -= beta * &delta;
        table[0][1] += alpha * &delta;
        table[1][0] += &(&(rat(1) - alpha) - beta) * &delta;
        // table[1][1] unchanged.
    }
    let energy = EnergyFunction::new(
        g.energy.space().clone(),
        g.energy.constant().clone(),
        g.energy.unary_tables().to_vec(),
        pairwise,
    )?;
    Ok(MoveEnergy {
        energy,
        base: g.base.clone(),
        target: g.target,
    })
}

/// True iff `low(z) - low(0) <= high(z) - high(0)` for every binary `z`,
/// checked exhaustively.
pub fn increments_dominated(low: &MoveEnergy, high: &MoveEnergy) -> Result<bool, ExpansionError> {
    let nodes = low.base.len();
    let low_rest = low.rest_energy();
    let high_rest = high.rest_energy();
    for z in Labelings::new(nodes, 2) {
        let lhs = low.evaluate(&z)? - &low_rest;
        let rhs = high.evaluate(&z)? - &high_rest;
        if lhs > rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Compares two truncations of the same move energy: does the first one's
/// increase never exceed the second one's, over all moves?
pub fn check_truncation_ordering(
    g: &MoveEnergy,
    rule_low: &TruncationRule,
    rule_high: &TruncationRule,
) -> Result<bool, ExpansionError> {
    increments_dominated(&truncate(g, rule_low)?, &truncate(g, rule_high)?)
}

/// One expansion step: minimize the (truncated) move energy, take the
/// lowest minimizer, and accept only if the true move energy strictly
/// improves. Ties are rejected.
pub fn expansion_step(
    f: &EnergyFunction,
    x: &Labeling,
    target: usize,
    rule: &TruncationRule,
) -> Result<(Labeling, bool), ExpansionError> {
    let g = move_energy(f, x, target)?;
    let needs_truncation = (0..f.space().edges().len()).any(|e| g.delta(e).is_positive());
    let solvable = if needs_truncation {
        truncate(&g, rule)?
    } else {
        g.clone()
    };
    let minimum = minimize_submodular(solvable.energy())?;
    let z_star = minimum.lowest;
    let improved = g.evaluate(&z_star)? < g.rest_energy();
    if improved {
        Ok((apply_move(x, target, &z_star), true))
    } else {
        Ok((x.clone(), false))
    }
}

/// Full run of the sweep `k = 0, .., L` until a complete sweep makes no
/// improvement or the budget runs out.
#[derive(Debug, Clone)]
pub struct ExpansionOutcome {
    pub labeling: Labeling,
    pub fixed_point: bool,
    /// Energies: initial value, then one entry per completed sweep.
    pub trace: Vec<Rational>,
}

pub fn run_expansion(
    f: &EnergyFunction,
    x0: &Labeling,
    rule: &TruncationRule,
    max_sweeps: usize,
) -> Result<ExpansionOutcome, ExpansionError> {
    if max_sweeps == 0 {
        return Err(ExpansionError::NoSweepBudget);
    }
    let mut x = x0.clone();
    let mut trace = vec![f.evaluate(&x)?];
    let mut fixed_point = false;
    for _ in 0..max_sweeps {
        let mut improved_in_sweep = false;
        for k in f.space().labels() {
            let (next, improved) = expansion_step(f, &x, k, rule)?;
            if improved {
                improved_in_sweep = true;
                x = next;
            }
        }
        trace.push(f.evaluate(&x)?);
        if !improved_in_sweep {
            fixed_point = true;
            break;
        }
    }
    Ok(ExpansionOutcome {
        labeling: x,
        fixed_point,
        trace,
    })
}

/// True iff one full sweep from `x` finds no improving move.
pub fn is_fixed_point(
    f: &EnergyFunction,
    x: &Labeling,
    rule: &TruncationRule,
) -> Result<bool, ExpansionError> {
    for k in f.space().labels() {
        let (_, improved) = expansion_step(f, x, k, rule)?;
        if improved {
            return Ok(false);
        }
    }
    Ok(true)
}

/// A fixed point falling below a one-vs-all bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DominanceViolation {
    pub node: usize,
    /// Position of the fixed point's label in the reordered space.
    pub position: usize,
    /// The autarky's lower bound at that node.
    pub required: usize,
}

/// Checks `pi(x) >= x_min` componentwise in the run's reordered space.
pub fn verify_fixed_point_dominance(
    x_fixed: &Labeling,
    run: &OneVsAllRun,
) -> Result<Option<DominanceViolation>, ExpansionError> {
    let moved = run.ordering.apply_to_labeling(x_fixed)?;
    for s in 0..moved.len() {
        if moved.get(s) < run.autarky.x_min.get(s) {
            return Ok(Some(DominanceViolation {
                node: s,
                position: moved.get(s),
                required: run.autarky.x_min.get(s),
            }));
        }
    }
    Ok(None)
}
