//! Brute-force ground truth: exhaustive minimizer enumeration and
//! definition-level checks of autarkies, persistency and domain
//! constraints. No pruning anywhere; correctness over speed.

use thiserror::Error;

use crate::energy::{Autarky, DomainConstraint, EnergyFunction, Labeling};
use crate::Rational;

/// Default enumeration budget: instances with more labelings are rejected.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration budget exceeded: {needed} labelings > budget {budget}")]
    BudgetExceeded { needed: u64, budget: u64 },
    #[error("instance too large to even count its labelings")]
    Overflow,
    #[error(transparent)]
    Energy(#[from] crate::energy::EnergyError),
}

/// Iterates all labelings of a space in mixed-radix (lexicographic) order.
pub struct Labelings {
    current: Option<Vec<usize>>,
    label_count: usize,
}

impl Labelings {
    pub fn new(node_count: usize, label_count: usize) -> Self {
        Labelings {
            current: Some(vec![0; node_count]),
            label_count,
        }
    }
}

impl Iterator for Labelings {
    type Item = Labeling;

    fn next(&mut self) -> Option<Labeling> {
        let current = self.current.as_mut()?;
        let item = Labeling(current.clone());
        let mut pos = current.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            if current[pos] + 1 < self.label_count {
                current[pos] += 1;
                for v in &mut current[pos + 1..] {
                    *v = 0;
                }
                break;
            }
        }
        Some(item)
    }
}

fn check_budget(f: &EnergyFunction, budget: u64) -> Result<(), OracleError> {
    let nodes = u32::try_from(f.space().node_count()).map_err(|_| OracleError::Overflow)?;
    let needed = (f.space().label_count() as u64)
        .checked_pow(nodes)
        .ok_or(OracleError::Overflow)?;
    if needed > budget {
        return Err(OracleError::BudgetExceeded { needed, budget });
    }
    Ok(())
}

/// The complete set of global minimizers with their meet and join.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimizerSet {
    pub value: Rational,
    pub minimizers: Vec<Labeling>,
    pub meet: Labeling,
    pub join: Labeling,
}

/// Exhaustively enumerates all minimizers of `f`.
pub fn enumerate_minimizers(f: &EnergyFunction, budget: u64) -> Result<MinimizerSet, OracleError> {
    check_budget(f, budget)?;
    let mut best: Option<Rational> = None;
    let mut minimizers: Vec<Labeling> = Vec::new();
    for x in Labelings::new(f.space().node_count(), f.space().label_count()) {
        let value = f.evaluate(&x)?;
        match &best {
            Some(current) if value > *current => {}
            Some(current) if value == *current => minimizers.push(x),
            _ => {
                best = Some(value);
                minimizers.truncate(0);
                minimizers.push(x);
            }
        }
    }
    let mut meet = minimizers[0].clone();
    let mut join = minimizers[0].clone();
    for x in &minimizers[1..] {
        meet = meet.meet(x)?;
        join = join.join(x)?;
    }
    Ok(MinimizerSet {
        value: best.expect("label spaces are nonempty"),
        minimizers,
        meet,
        join,
    })
}

/// Verdict lattice for the definition-level autarky check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum AutarkyVerdict {
    NotAutarky,
    Weak,
    Strong,
}

impl std::fmt::Display for AutarkyVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AutarkyVerdict::NotAutarky => write!(f, "not"),
            AutarkyVerdict::Weak => write!(f, "weak"),
            AutarkyVerdict::Strong => write!(f, "strong"),
        }
    }
}

/// Outcome of [`check_autarky_definition`]; `violation` names a labeling
/// whose projection strictly increases the energy when the verdict is
/// `NotAutarky`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AutarkyCheck {
    pub verdict: AutarkyVerdict,
    pub violation: Option<Labeling>,
}

/// Checks the defining inequality of an autarky over every labeling.
///
/// Strong means the projection strictly decreases the energy whenever it
/// moves the labeling; weak tolerates ties; any increase refutes.
pub fn check_autarky_definition(
    f: &EnergyFunction,
    a: &Autarky,
    budget: u64,
) -> Result<AutarkyCheck, OracleError> {
    check_budget(f, budget)?;
    let mut strong = true;
    let mut moved_any = false;
    for x in Labelings::new(f.space().node_count(), f.space().label_count()) {
        let projected = a.project_through(&x)?;
        if projected == x {
            continue;
        }
        moved_any = true;
        let fx = f.evaluate(&x)?;
        let fp = f.evaluate(&projected)?;
        if fp > fx {
            return Ok(AutarkyCheck {
                verdict: AutarkyVerdict::NotAutarky,
                violation: Some(x),
            });
        }
        if fp == fx {
            strong = false;
        }
    }
    // A projection that never moves anything never demonstrates strictness
    // and is reported weak.
    Ok(AutarkyCheck {
        verdict: if strong && moved_any {
            AutarkyVerdict::Strong
        } else {
            AutarkyVerdict::Weak
        },
        violation: None,
    })
}

/// Verdict lattice for optimal partial assignments / domain constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PersistencyVerdict {
    None,
    Weak,
    Strong,
}

impl std::fmt::Display for PersistencyVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PersistencyVerdict::None => write!(f, "none"),
            PersistencyVerdict::Weak => write!(f, "weak"),
            PersistencyVerdict::Strong => write!(f, "strong"),
        }
    }
}

/// Strong iff every global minimizer satisfies the constraint, weak iff at
/// least one does.
pub fn check_persistency(
    f: &EnergyFunction,
    constraint: &DomainConstraint,
    budget: u64,
) -> Result<PersistencyVerdict, OracleError> {
    let set = enumerate_minimizers(f, budget)?;
    let inside = set.minimizers.iter().filter(|x| constraint.permits(x)).count();
    Ok(if inside == set.minimizers.len() {
        PersistencyVerdict::Strong
    } else if inside > 0 {
        PersistencyVerdict::Weak
    } else {
        PersistencyVerdict::None
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{LabelSpace, Strength};
    use crate::rat;

    fn ising_instance() -> EnergyFunction {
        // Unaries (0,5) and (3,0), edge cost 0 on agreement and 2 otherwise.
        let space = LabelSpace::new(2, 2, vec![(0, 1)]).unwrap();
        EnergyFunction::new(
            space,
            rat(0),
            vec![vec![rat(0), rat(5)], vec![rat(3), rat(0)]],
            vec![vec![vec![rat(0), rat(2)], vec![rat(2), rat(0)]]],
        )
        .unwrap()
    }

    #[test]
    fn all_zero_instance_has_every_labeling_optimal() {
        let space = LabelSpace::new(2, 2, vec![(0, 1)]).unwrap();
        let f = EnergyFunction::zero(space);
        let set = enumerate_minimizers(&f, DEFAULT_BUDGET).unwrap();
        assert_eq!(set.value, rat(0));
        assert_eq!(set.minimizers.len(), 4);
        assert_eq!(set.meet, Labeling(vec![0, 0]));
        assert_eq!(set.join, Labeling(vec![1, 1]));
    }

    #[test]
    fn ising_instance_has_unique_minimizer() {
        let set = enumerate_minimizers(&ising_instance(), DEFAULT_BUDGET).unwrap();
        assert_eq!(set.value, rat(2));
        assert_eq!(set.minimizers, vec![Labeling(vec![0, 1])]);
    }

    #[test]
    fn every_listed_minimizer_attains_the_value() {
        let f = ising_instance();
        let set = enumerate_minimizers(&f, DEFAULT_BUDGET).unwrap();
        for x in &set.minimizers {
            assert_eq!(f.evaluate(x).unwrap(), set.value);
        }
    }

    #[test]
    fn meet_and_join_of_submodular_minimizers_are_minimizers() {
        use crate::io::{generate, GeneratorSpec, Structure};
        for seed in 0..40 {
            let spec = GeneratorSpec::new(4, 3, Structure::Submodular, seed);
            let f = generate(&spec).unwrap();
            let set = enumerate_minimizers(&f, DEFAULT_BUDGET).unwrap();
            assert_eq!(f.evaluate(&set.meet).unwrap(), set.value, "seed {seed}");
            assert_eq!(f.evaluate(&set.join).unwrap(), set.value, "seed {seed}");
        }
    }

    #[test]
    fn identity_autarky_is_weak() {
        let f = ising_instance();
        let a = Autarky::identity(f.space());
        let check = check_autarky_definition(&f, &a, DEFAULT_BUDGET).unwrap();
        assert_eq!(check.verdict, AutarkyVerdict::Weak);
    }

    #[test]
    fn ising_minimizer_pair_is_strong() {
        let f = ising_instance();
        let a = Autarky::new(
            Labeling(vec![0, 1]),
            Labeling(vec![0, 1]),
            Strength::Strong,
            "hand",
        )
        .unwrap();
        let check = check_autarky_definition(&f, &a, DEFAULT_BUDGET).unwrap();
        assert_eq!(check.verdict, AutarkyVerdict::Strong);
    }

    #[test]
    fn wrong_autarky_is_refuted_with_witness() {
        let f = ising_instance();
        let a = Autarky::new(
            Labeling(vec![1, 0]),
            Labeling(vec![1, 0]),
            Strength::Strong,
            "wrong",
        )
        .unwrap();
        let check = check_autarky_definition(&f, &a, DEFAULT_BUDGET).unwrap();
        assert_eq!(check.verdict, AutarkyVerdict::NotAutarky);
        let witness = check.violation.unwrap();
        let projected = a.project_through(&witness).unwrap();
        assert!(f.evaluate(&projected).unwrap() > f.evaluate(&witness).unwrap());
    }

    #[test]
    fn full_constraint_is_vacuously_strong() {
        let f = ising_instance();
        let c = DomainConstraint::full(f.space());
        assert_eq!(
            check_persistency(&f, &c, DEFAULT_BUDGET).unwrap(),
            PersistencyVerdict::Strong
        );
    }

    #[test]
    fn constraint_excluding_the_minimizer_is_refuted() {
        use std::collections::BTreeSet;
        let f = ising_instance();
        let c = DomainConstraint {
            allowed: vec![BTreeSet::from([1]), BTreeSet::from([0, 1])],
            strength: Strength::Strong,
        };
        assert_eq!(
            check_persistency(&f, &c, DEFAULT_BUDGET).unwrap(),
            PersistencyVerdict::None
        );
    }

    #[test]
    fn budget_is_enforced() {
        let space = LabelSpace::new(10, 4, vec![]).unwrap();
        let f = EnergyFunction::zero(space);
        assert!(matches!(
            enumerate_minimizers(&f, 1000),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn labelings_iterator_covers_the_space_in_order() {
        let all: Vec<Labeling> = Labelings::new(2, 3).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0], Labeling(vec![0, 0]));
        assert_eq!(all[1], Labeling(vec![0, 1]));
        assert_eq!(all[8], Labeling(vec![2, 2]));
    }
}
