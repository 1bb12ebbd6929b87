//! Exact max-flow/min-cut and the layered reduction that minimizes
//! multi-label submodular pairwise energies.
//!
//! The solver is shortest-augmenting-path (Edmonds–Karp) over exact
//! rational capacities: augmentation counts are bounded by the graph
//! structure alone, so exactness costs nothing in termination. Both the
//! minimal and the maximal minimum cut are extracted from the final
//! residual graph; through the reduction these become the lowest and
//! highest minimizers of the energy.

use std::collections::{BTreeSet, VecDeque};

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::energy::{
    Autarky, EnergyError, EnergyFunction, Labeling, Strength, SubmodularityViolation,
};
use crate::Rational;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("negative capacity on arc {from} -> {to}")]
    NegativeCapacity { from: usize, to: usize },
    #[error("source and sink must differ")]
    SourceIsSink,
    #[error("arc endpoint {0} out of range")]
    NodeOutOfRange(usize),
    #[error("energy is not submodular: edge {edge} at {x:?} vs {y:?}", edge = .0.edge, x = .0.x, y = .0.y)]
    NotSubmodular(SubmodularityViolation),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    residual: Rational,
    original: Rational,
}

/// Directed network with a distinguished source and sink.
///
/// Arcs are stored with their reverse twins at paired indices, the usual
/// residual-graph layout.
#[derive(Debug, Clone)]
pub struct FlowNetwork {
    node_count: usize,
    source: usize,
    sink: usize,
    adjacency: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Result<Self, FlowError> {
        if source == sink {
            return Err(FlowError::SourceIsSink);
        }
        if source >= node_count || sink >= node_count {
            return Err(FlowError::NodeOutOfRange(source.max(sink)));
        }
        Ok(FlowNetwork {
            node_count,
            source,
            sink,
            adjacency: vec![Vec::new(); node_count],
            arcs: Vec::new(),
        })
    }

    pub fn add_arc(&mut self, from: usize, to: usize, capacity: Rational) -> Result<(), FlowError> {
        if from >= self.node_count || to >= self.node_count {
            return Err(FlowError::NodeOutOfRange(from.max(to)));
        }
        if capacity.is_negative() {
            return Err(FlowError::NegativeCapacity { from, to });
        }
        let forward = self.arcs.len();
        self.arcs.push(Arc {
            to,
            residual: capacity.clone(),
            original: capacity,
        });
        self.arcs.push(Arc {
            to: from,
            residual: Rational::zero(),
            original: Rational::zero(),
        });
        self.adjacency[from].push(forward);
        self.adjacency[to].push(forward + 1);
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    /// Capacity of the cut `(side, complement)` under original capacities.
    pub fn cut_capacity(&self, side: &BTreeSet<usize>) -> Rational {
        let mut total = Rational::zero();
        for &u in side {
            for &e in &self.adjacency[u] {
                // Skip reverse twins: they carry zero original capacity.
                let arc = &self.arcs[e];
                if !side.contains(&arc.to) {
                    total += &arc.original;
                }
            }
        }
        total
    }
}

/// Max-flow value together with the extreme minimum cuts.
#[derive(Debug, Clone)]
pub struct CutSolution {
    pub value: Rational,
    /// Minimal source side: nodes residual-reachable from the source.
    pub min_cut: BTreeSet<usize>,
    /// Maximal source side: complement of the nodes that residual-reach
    /// the sink.
    pub max_cut: BTreeSet<usize>,
}

/// Runs Edmonds–Karp to completion and extracts both extreme cuts.
pub fn max_flow(network: &FlowNetwork) -> CutSolution {
    let mut net = network.clone();
    let mut value = Rational::zero();
    loop {
        // BFS for a shortest augmenting path.
        let mut parent_arc = vec![usize::MAX; net.node_count];
        let mut queue = VecDeque::from([net.source]);
        let mut seen = vec![false; net.node_count];
        seen[net.source] = true;
        while let Some(u) = queue.pop_front() {
            if u == net.sink {
                break;
            }
            for &e in &net.adjacency[u] {
                let arc = &net.arcs[e];
                if !seen[arc.to] && arc.residual.is_positive() {
                    seen[arc.to] = true;
                    parent_arc[arc.to] = e;
                    queue.push_back(arc.to);
                }
            }
        }
        if !seen[net.sink] {
            break;
        }
        let mut bottleneck: Option<Rational> = None;
        let mut v = net.sink;
        while v != net.source {
            let e = parent_arc[v];
            let r = &net.arcs[e].residual;
            bottleneck = Some(match bottleneck {
                Some(b) if &b <= r => b,
                _ => r.clone(),
            });
            v = net.arcs[e ^ 1].to;
        }
        let delta = bottleneck.expect("path has at least one arc");
        let mut v = net.sink;
        while v != net.source {
            let e = parent_arc[v];
            net.arcs[e].residual -= &delta;
            net.arcs[e ^ 1].residual += &delta;
            v = net.arcs[e ^ 1].to;
        }
        value += delta;
    }

    // Minimal cut: forward residual reachability from the source.
    let mut min_side = BTreeSet::new();
    let mut queue = VecDeque::from([net.source]);
    min_side.insert(net.source);
    while let Some(u) = queue.pop_front() {
        for &e in &net.adjacency[u] {
            let arc = &net.arcs[e];
            if arc.residual.is_positive() && min_side.insert(arc.to) {
                queue.push_back(arc.to);
            }
        }
    }

    // Maximal cut: complement of backward residual reachability from the
    // sink. An arc w -> v with positive residual lets w reach the sink
    // through v; scanning v's adjacency exposes those arcs as twins.
    let mut reaches_sink = vec![false; net.node_count];
    reaches_sink[net.sink] = true;
    let mut queue = VecDeque::from([net.sink]);
    while let Some(v) = queue.pop_front() {
        for &e in &net.adjacency[v] {
            let w = net.arcs[e].to;
            if !reaches_sink[w] && net.arcs[e ^ 1].residual.is_positive() {
                reaches_sink[w] = true;
                queue.push_back(w);
            }
        }
    }
    let max_side: BTreeSet<usize> = (0..net.node_count).filter(|&v| !reaches_sink[v]).collect();

    CutSolution {
        value,
        min_cut: min_side,
        max_cut: max_side,
    }
}

/// Result of the exact submodular minimization: the optimal value and the
/// lattice-extreme minimizers.
#[derive(Debug, Clone)]
pub struct SubmodularMinimum {
    pub value: Rational,
    pub lowest: Labeling,
    pub highest: Labeling,
}

struct Reduction {
    network: FlowNetwork,
    constant: Rational,
    levels: usize,
}

impl Reduction {
    fn node(&self, s: usize, level: usize) -> usize {
        2 + s * self.levels + (level - 1)
    }
}

/// Builds the layered boolean encoding: indicator `y_{s,i} = [x_s >= i]`
/// per node and level, monotone chains enforced by uncuttable arcs, unary
/// increments on source/sink arcs and pairwise mixed second differences
/// (nonpositive by submodularity) on inter-node arcs.
fn build_reduction(f: &EnergyFunction) -> Result<Reduction, FlowError> {
    let space = f.space();
    let levels = space.top_label();
    let node_total = 2 + space.node_count() * levels;
    let network = FlowNetwork::new(node_total, 0, 1)?;
    let mut reduction = Reduction {
        network,
        constant: f.constant().clone(),
        levels,
    };

    // Base energy of the all-zero labeling.
    for s in space.nodes() {
        reduction.constant += &f.unary(s)[0];
    }
    for (e, _) in space.edges().iter().enumerate() {
        reduction.constant += &f.pairwise(e)[0][0];
    }

    // Linear coefficient of each indicator.
    let mut linear = vec![vec![Rational::zero(); levels + 1]; space.node_count()];
    for s in space.nodes() {
        for i in 1..=levels {
            linear[s][i] = &f.unary(s)[i] - &f.unary(s)[i - 1];
        }
    }
    for (e, &(s, t)) in space.edges().iter().enumerate() {
        let table = f.pairwise(e);
        for i in 1..=levels {
            linear[s][i] += &table[i][levels] - &table[i - 1][levels];
            linear[t][i] += &table[0][i] - &table[0][i - 1];
        }
    }

    // Pairwise arcs carry the negated mixed second differences.
    let mut pair_arcs: Vec<(usize, usize, Rational)> = Vec::new();
    let mut finite_total = Rational::zero();
    for (e, &(s, t)) in space.edges().iter().enumerate() {
        let table = f.pairwise(e);
        for i in 1..=levels {
            for j in 1..=levels {
                let mixed =
                    &(&table[i][j] + &table[i - 1][j - 1]) - &(&table[i - 1][j] + &table[i][j - 1]);
                if mixed.is_positive() {
                    return Err(FlowError::NotSubmodular(SubmodularityViolation {
                        edge: e,
                        x: (i - 1, j),
                        y: (i, j - 1),
                    }));
                }
                if !mixed.is_zero() {
                    let capacity = -mixed;
                    finite_total += &capacity;
                    pair_arcs.push((
                        reduction.node(s, i),
                        reduction.node(t, j),
                        capacity,
                    ));
                }
            }
        }
    }
    for row in &linear {
        for w in row.iter().skip(1) {
            finite_total += w.abs();
        }
    }

    // Any cut through a chain arc would exceed every finite cut.
    let uncuttable = finite_total + Rational::from_integer(1.into());
    for s in space.nodes() {
        for i in 1..levels {
            let (hi, lo) = (reduction.node(s, i + 1), reduction.node(s, i));
            reduction.network.add_arc(hi, lo, uncuttable.clone())?;
        }
    }
    for s in space.nodes() {
        for i in 1..=levels {
            let w = linear[s][i].clone();
            if w.is_positive() {
                reduction.network.add_arc(reduction.node(s, i), 1, w)?;
            } else if w.is_negative() {
                reduction.network.add_arc(0, reduction.node(s, i), -w.clone())?;
                reduction.constant += w;
            }
        }
    }
    for (from, to, capacity) in pair_arcs {
        reduction.network.add_arc(from, to, capacity)?;
    }
    Ok(reduction)
}

fn labeling_from_side(
    reduction: &Reduction,
    node_count: usize,
    side: &BTreeSet<usize>,
) -> Labeling {
    let values = (0..node_count)
        .map(|s| {
            (1..=reduction.levels)
                .filter(|&i| side.contains(&reduction.node(s, i)))
                .count()
        })
        .collect();
    Labeling(values)
}

/// Exact minimization of a submodular energy via min-cut, returning the
/// optimal value with the lowest and highest minimizers.
pub fn minimize_submodular(f: &EnergyFunction) -> Result<SubmodularMinimum, FlowError> {
    if let Some(witness) = f.submodularity_witness() {
        return Err(FlowError::NotSubmodular(witness));
    }
    let reduction = build_reduction(f)?;
    let cut = max_flow(&reduction.network);
    let lowest = labeling_from_side(&reduction, f.space().node_count(), &cut.min_cut);
    let highest = labeling_from_side(&reduction, f.space().node_count(), &cut.max_cut);
    Ok(SubmodularMinimum {
        value: reduction.constant + cut.value,
        lowest,
        highest,
    })
}

/// `(lowest minimizer, highest minimizer)` of a submodular energy is a
/// strong autarky; it is the join of all strong autarkies of `f`.
pub fn strong_autarky_from_minimizers(f: &EnergyFunction) -> Result<Autarky, FlowError> {
    let minimum = minimize_submodular(f)?;
    Ok(Autarky::new(
        minimum.lowest,
        minimum.highest,
        Strength::Strong,
        "submodular-minimizers",
    )?)
}
