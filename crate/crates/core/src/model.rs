//! Domain types shared by every solver: instances, patterns, plans and the
//! feasibility checks that tie them together.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Timing configuration of one hopping cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    /// Duration of one super-frame in milliseconds.
    pub sf_duration_ms: f64,
    /// Number of fixed-length super-frames in one cycle.
    pub slots_per_cycle: u32,
    /// Minimum illumination granularity of the payload, in milliseconds.
    pub min_granularity_ms: f64,
    /// Dead time spent on each pattern transition, in milliseconds.
    pub switching_time_ms: f64,
}

impl CycleConfig {
    pub const DEFAULT_SF_MS: f64 = 1.5;
    pub const DEFAULT_SLOTS: u32 = 256;

    /// Cycle duration `d * W` in milliseconds.
    pub fn cycle_duration_ms(&self) -> f64 {
        self.sf_duration_ms * f64::from(self.slots_per_cycle)
    }
}

impl Default for CycleConfig {
    fn default() -> Self {
        Self {
            sf_duration_ms: Self::DEFAULT_SF_MS,
            slots_per_cycle: Self::DEFAULT_SLOTS,
            min_granularity_ms: Self::DEFAULT_SF_MS,
            switching_time_ms: 0.0,
        }
    }
}

/// A beam-hopping problem: integer per-cycle demands on a set of beams and
/// the adjacency (interference) relation between them.
///
/// Beams are 0-indexed. Fields are public so that malformed instances can
/// be built and reported on by [`validate_instance`].
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub n_beams: usize,
    pub demands: Vec<u64>,
    pub adjacency: Vec<BTreeSet<usize>>,
    pub cycle: CycleConfig,
    /// Free-form generator metadata (seed, testbed settings, ...).
    pub metadata: Option<serde_json::Value>,
}

impl Instance {
    /// Builds an instance from demands and an undirected edge list.
    ///
    /// Edges are symmetrized; the result is validated.
    pub fn from_edges(
        demands: Vec<u64>,
        edges: &[(usize, usize)],
        cycle: CycleConfig,
    ) -> Result<Self, ModelError> {
        let n = demands.len();
        let mut adjacency = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(ModelError::BeamOutOfRange {
                    beam: a.max(b),
                    n_beams: n,
                });
            }
            adjacency[a].insert(b);
            adjacency[b].insert(a);
        }
        let inst = Self {
            n_beams: n,
            demands,
            adjacency,
            cycle,
            metadata: None,
        };
        let report = validate_instance(&inst);
        if report.is_ok() {
            Ok(inst)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    /// Instance without any adjacency.
    pub fn isolated(demands: Vec<u64>) -> Result<Self, ModelError> {
        Self::from_edges(demands, &[], CycleConfig::default())
    }

    pub fn max_demand(&self) -> u64 {
        self.demands.iter().copied().max().unwrap_or(0)
    }

    pub fn total_demand(&self) -> u64 {
        self.demands.iter().sum()
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency.get(a).is_some_and(|nb| nb.contains(&b))
    }

    /// Undirected edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(a, nb)| nb.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
            .collect()
    }
}

/// One beam illumination pattern: a set of beams lit together for `weight`
/// units of time.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pattern {
    beams: Vec<usize>,
    weight: u64,
}

impl Pattern {
    pub fn new(beams: impl IntoIterator<Item = usize>, weight: u64) -> Result<Self, ModelError> {
        let mut beams: Vec<usize> = beams.into_iter().collect();
        beams.sort_unstable();
        if let Some(w) = beams.windows(2).find(|w| w[0] == w[1]) {
            return Err(ModelError::DuplicateBeam(w[0]));
        }
        if beams.is_empty() {
            return Err(ModelError::EmptyPattern);
        }
        if weight == 0 {
            return Err(ModelError::ZeroWeight);
        }
        Ok(Self { beams, weight })
    }

    /// Beam indices in ascending order.
    pub fn beams(&self) -> &[usize] {
        &self.beams
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }

    pub fn contains(&self, beam: usize) -> bool {
        self.beams.binary_search(&beam).is_ok()
    }

    pub fn with_weight(&self, weight: u64) -> Result<Self, ModelError> {
        Self::new(self.beams.iter().copied(), weight)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({{")?;
        for (i, b) in self.beams.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "}},{})", self.weight)
    }
}

/// A beam-hopping time plan: an ordered list of patterns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plan {
    pub patterns: Vec<Pattern>,
    pub cycle: CycleConfig,
}

impl Plan {
    pub fn new(patterns: Vec<Pattern>, cycle: CycleConfig) -> Self {
        Self { patterns, cycle }
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Sum of pattern weights (`H*`).
    pub fn total_weight(&self) -> u64 {
        self.patterns.iter().map(Pattern::weight).sum()
    }

    /// One pattern per positive-demand beam, weighted by its demand.
    pub fn singletons(inst: &Instance) -> Self {
        let patterns = inst
            .demands
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .map(|(b, &d)| Pattern {
                beams: vec![b],
                weight: d,
            })
            .collect();
        Self::new(patterns, inst.cycle)
    }
}

/// Equipment constraints a plan must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstraintSet {
    /// Maximum number of simultaneously lit beams; `None` is unconstrained.
    pub n_max: Option<usize>,
    /// Forbid adjacent beams in the same pattern.
    pub interference: bool,
}

impl ConstraintSet {
    pub const UNCONSTRAINED: Self = Self {
        n_max: None,
        interference: false,
    };

    pub fn interference() -> Self {
        Self {
            n_max: None,
            interference: true,
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = Some(n_max);
        self
    }

    pub fn is_unconstrained(&self) -> bool {
        !self.interference && self.n_max.is_none()
    }
}

/// A single broken invariant or constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LengthMismatch {
        n_beams: usize,
        demands: usize,
        adjacency: usize,
    },
    NoPositiveDemand,
    AdjacencyOutOfRange {
        beam: usize,
        neighbour: usize,
    },
    SelfAdjacent(usize),
    AsymmetricAdjacency(usize, usize),
    NMaxZero,
    BeamOutOfRange {
        pattern: usize,
        beam: usize,
    },
    DemandMismatch {
        beam: usize,
        supplied: u64,
        demand: u64,
    },
    TooManyBeams {
        pattern: usize,
        size: usize,
        n_max: usize,
    },
    AdjacentPair {
        pattern: usize,
        a: usize,
        b: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LengthMismatch {
                n_beams,
                demands,
                adjacency,
            } => write!(
                f,
                "length mismatch: n_beams {n_beams}, {demands} demands, {adjacency} adjacency lists"
            ),
            Violation::NoPositiveDemand => write!(f, "no positive demand"),
            Violation::AdjacencyOutOfRange { beam, neighbour } => {
                write!(f, "beam {beam} lists out-of-range neighbour {neighbour}")
            }
            Violation::SelfAdjacent(b) => write!(f, "beam {b} is adjacent to itself"),
            Violation::AsymmetricAdjacency(a, b) => write!(f, "asymmetric adjacency ({a},{b})"),
            Violation::NMaxZero => write!(f, "n_max must be at least 1"),
            Violation::BeamOutOfRange { pattern, beam } => {
                write!(f, "pattern {pattern} references beam {beam} out of range")
            }
            Violation::DemandMismatch {
                beam,
                supplied,
                demand,
            } => {
                write!(
                    f,
                    "demand mismatch beam {beam}: {supplied} \u{2260} {demand}"
                )
            }
            Violation::TooManyBeams {
                pattern,
                size,
                n_max,
            } => {
                write!(f, "pattern {pattern} lights {size} beams > n_max {n_max}")
            }
            Violation::AdjacentPair { pattern, a, b } => {
                write!(
                    f,
                    "adjacent pair ({a},{b}) co-illuminated in pattern {pattern}"
                )
            }
        }
    }
}

/// Outcome of [`validate_instance`] or [`check_feasible`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate_instance(inst: &Instance) -> Report {
    let mut violations = Vec::new();
    let n = inst.n_beams;
    if inst.demands.len() != n || inst.adjacency.len() != n {
        violations.push(Violation::LengthMismatch {
            n_beams: n,
            demands: inst.demands.len(),
            adjacency: inst.adjacency.len(),
        });
    }
    if !inst.demands.iter().any(|&d| d > 0) {
        violations.push(Violation::NoPositiveDemand);
    }
    for (b, nb) in inst.adjacency.iter().enumerate() {
        for &other in nb {
            if other >= n || other >= inst.adjacency.len() {
                violations.push(Violation::AdjacencyOutOfRange {
                    beam: b,
                    neighbour: other,
                });
            } else if other == b {
                violations.push(Violation::SelfAdjacent(b));
            } else if !inst.adjacency[other].contains(&b) {
                violations.push(Violation::AsymmetricAdjacency(b, other));
            }
        }
    }
    Report { violations }
}

/// Per-beam sum of the weights of the patterns containing that beam.
pub fn accumulated_weights(plan: &Plan, n_beams: usize) -> Result<Vec<u64>, ModelError> {
    let mut acc = vec![0u64; n_beams];
    for p in &plan.patterns {
        for &b in p.beams() {
            let slot = acc
                .get_mut(b)
                .ok_or(ModelError::BeamOutOfRange { beam: b, n_beams })?;
            *slot += p.weight();
        }
    }
    Ok(acc)
}

pub fn check_feasible(plan: &Plan, inst: &Instance, cons: &ConstraintSet) -> Report {
    let mut violations = Vec::new();
    if cons.n_max == Some(0) {
        violations.push(Violation::NMaxZero);
    }
    let n = inst.n_beams;
    let mut acc = vec![0u64; n];
    for (pi, p) in plan.patterns.iter().enumerate() {
        for &b in p.beams() {
            match acc.get_mut(b) {
                Some(slot) => *slot += p.weight(),
                None => violations.push(Violation::BeamOutOfRange {
                    pattern: pi,
                    beam: b,
                }),
            }
        }
        if let Some(n_max) = cons.n_max {
            if p.len() > n_max {
                violations.push(Violation::TooManyBeams {
                    pattern: pi,
                    size: p.len(),
                    n_max,
                });
            }
        }
        if cons.interference {
            let beams = p.beams();
            for (i, &a) in beams.iter().enumerate() {
                for &b in &beams[i + 1..] {
                    if inst.are_adjacent(a, b) {
                        violations.push(Violation::AdjacentPair { pattern: pi, a, b });
                    }
                }
            }
        }
    }
    for (b, (&supplied, &demand)) in acc.iter().zip(&inst.demands).enumerate() {
        if supplied != demand {
            violations.push(Violation::DemandMismatch {
                beam: b,
                supplied,
                demand,
            });
        }
    }
    Report { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(beams: &[usize], w: u64) -> Pattern {
        Pattern::new(beams.iter().copied(), w).unwrap()
    }

    #[test]
    fn asymmetric_adjacency_is_reported() {
        let mut adjacency = vec![BTreeSet::new(); 3];
        adjacency[1].insert(2);
        let inst = Instance {
            n_beams: 3,
            demands: vec![1, 1, 1],
            adjacency,
            cycle: CycleConfig::default(),
            metadata: None,
        };
        let report = validate_instance(&inst);
        assert_eq!(
            report.violations,
            vec![Violation::AsymmetricAdjacency(1, 2)]
        );
        assert_eq!(report.to_string(), "asymmetric adjacency (1,2)");
    }

    #[test]
    fn zero_demands_are_reported() {
        let inst = Instance {
            n_beams: 2,
            demands: vec![0, 0],
            adjacency: vec![BTreeSet::new(); 2],
            cycle: CycleConfig::default(),
            metadata: None,
        };
        assert_eq!(
            validate_instance(&inst).violations,
            vec![Violation::NoPositiveDemand]
        );
    }

    #[test]
    fn self_loops_and_out_of_range() {
        let mut adjacency = vec![BTreeSet::new(); 2];
        adjacency[0].insert(0);
        adjacency[1].insert(7);
        let inst = Instance {
            n_beams: 2,
            demands: vec![1, 0],
            adjacency,
            cycle: CycleConfig::default(),
            metadata: None,
        };
        let v = validate_instance(&inst).violations;
        assert!(v.contains(&Violation::SelfAdjacent(0)));
        assert!(v.contains(&Violation::AdjacencyOutOfRange {
            beam: 1,
            neighbour: 7
        }));
    }

    #[test]
    fn pattern_rejects_duplicates_and_degenerate_input() {
        assert_eq!(
            Pattern::new([1, 2, 1], 3),
            Err(ModelError::DuplicateBeam(1))
        );
        assert_eq!(Pattern::new([], 3), Err(ModelError::EmptyPattern));
        assert_eq!(Pattern::new([0], 0), Err(ModelError::ZeroWeight));
        assert_eq!(pat(&[3, 1], 2).beams(), &[1, 3]);
    }

    #[test]
    fn accumulated_two_patterns() {
        let plan = Plan::new(vec![pat(&[0, 1], 3), pat(&[0], 2)], CycleConfig::default());
        assert_eq!(accumulated_weights(&plan, 2).unwrap(), vec![5, 3]);
        assert_eq!(
            accumulated_weights(&Plan::default(), 3).unwrap(),
            vec![0, 0, 0]
        );
        assert!(matches!(
            accumulated_weights(&plan, 1),
            Err(ModelError::BeamOutOfRange {
                beam: 1,
                n_beams: 1
            })
        ));
    }

    #[test]
    fn feasibility_flags_adjacent_pair() {
        let inst = Instance::from_edges(vec![1, 1, 1], &[(1, 2)], CycleConfig::default()).unwrap();
        let plan = Plan::new(vec![pat(&[0], 1), pat(&[1, 2], 1)], inst.cycle);
        let report = check_feasible(&plan, &inst, &ConstraintSet::interference());
        assert_eq!(
            report.violations,
            vec![Violation::AdjacentPair {
                pattern: 1,
                a: 1,
                b: 2
            }]
        );
        assert!(check_feasible(&plan, &inst, &ConstraintSet::UNCONSTRAINED).is_ok());
    }

    #[test]
    fn feasibility_flags_demand_mismatch_and_cardinality() {
        let inst = Instance::isolated(vec![5, 1, 1]).unwrap();
        let plan = Plan::new(vec![pat(&[0, 1, 2], 1), pat(&[0], 3)], inst.cycle);
        let report = check_feasible(&plan, &inst, &ConstraintSet::UNCONSTRAINED.with_n_max(2));
        assert_eq!(
            report.violations,
            vec![
                Violation::TooManyBeams {
                    pattern: 0,
                    size: 3,
                    n_max: 2
                },
                Violation::DemandMismatch {
                    beam: 0,
                    supplied: 4,
                    demand: 5
                },
            ]
        );
        assert!(report
            .to_string()
            .contains("demand mismatch beam 0: 4 \u{2260} 5"));
    }

    #[test]
    fn singleton_plan_is_always_feasible() {
        let inst = Instance::from_edges(
            vec![3, 0, 4],
            &[(0, 1), (1, 2), (0, 2)],
            CycleConfig::default(),
        )
        .unwrap();
        let plan = Plan::singletons(&inst);
        assert_eq!(plan.len(), 2);
        let cons = ConstraintSet::interference().with_n_max(1);
        assert!(check_feasible(&plan, &inst, &cons).is_ok());
    }
}
