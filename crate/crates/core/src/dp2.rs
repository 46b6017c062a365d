//! Decomposition of integer demands by powers of two.
//!
//! Every beam joins the pattern for bit `k` exactly when bit `k` of its
//! demand is set, and that pattern dwells for `2^k` units. The result meets
//! every demand exactly with at most `floor(log2(max demand)) + 1` patterns.
//! Interference and cardinality limits are then enforced by splitting each
//! pattern, and patterns that end up with the same beam set are merged.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{validate_instance, ConstraintSet, Instance, Pattern, Plan};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dp2Report {
    /// Patterns produced by the bit decomposition alone.
    pub base_pattern_count: usize,
    /// Patterns after interference and cardinality splitting, before merging.
    pub split_pattern_count: usize,
    /// Patterns in the returned plan.
    pub final_pattern_count: usize,
    /// Highest bit level, `floor(log2(max demand))`.
    pub k_max: u32,
    pub runtime_ms: f64,
}

/// Highest set bit of the largest demand.
pub fn k_max(demands: &[u64]) -> Option<u32> {
    let max = demands.iter().copied().max()?;
    (max > 0).then(|| u64::BITS - 1 - max.leading_zeros())
}

/// Bit-level decomposition, highest level first. Empty levels are skipped.
pub fn dp2_decompose(demands: &[u64]) -> Result<Vec<Pattern>, ModelError> {
    let top = k_max(demands).ok_or(ModelError::NoPositiveDemand)?;
    let mut patterns = Vec::with_capacity(top as usize + 1);
    for k in (0..=top).rev() {
        let beams: Vec<usize> = demands
            .iter()
            .enumerate()
            .filter(|(_, &d)| d >> k & 1 == 1)
            .map(|(b, _)| b)
            .collect();
        if !beams.is_empty() {
            patterns.push(Pattern::new(beams, 1u64 << k)?);
        }
    }
    Ok(patterns)
}

/// Splits a pattern into independent sets of the conflict graph.
///
/// Greedy colouring in ascending beam order; each beam takes the lowest
/// colour not used by an already coloured neighbour inside the pattern.
/// Colour classes are returned in colour order and all keep the original
/// weight.
pub fn split_interference(p: &Pattern, adjacency: &[BTreeSet<usize>]) -> Vec<Pattern> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &b in p.beams() {
        let neighbours = adjacency.get(b);
        let free = classes.iter().position(|class| {
            !class
                .iter()
                .any(|o| neighbours.is_some_and(|nb| nb.contains(o)))
        });
        match free {
            Some(c) => classes[c].push(b),
            None => classes.push(vec![b]),
        }
    }
    if classes.len() == 1 {
        return vec![p.clone()];
    }
    classes
        .into_iter()
        .map(|beams| Pattern::new(beams, p.weight()).expect("colour classes are non-empty"))
        .collect()
}

/// Splits a pattern into `ceil(len / n_max)` chunks in ascending beam order.
///
/// # Panics
///
/// If `n_max` is zero.
pub fn split_cardinality(p: &Pattern, n_max: usize) -> Vec<Pattern> {
    assert!(n_max >= 1, "n_max must be at least 1");
    if p.len() <= n_max {
        return vec![p.clone()];
    }
    p.beams()
        .chunks(n_max)
        .map(|chunk| Pattern::new(chunk.iter().copied(), p.weight()).expect("chunks are non-empty"))
        .collect()
}

/// Replaces patterns that light the same beam set by a single pattern
/// carrying the summed weight. Keeps first-appearance order.
pub fn merge_duplicates(plan: &Plan) -> Plan {
    let mut index: HashMap<&[usize], usize> = HashMap::with_capacity(plan.len());
    let mut merged: Vec<(Vec<usize>, u64)> = Vec::with_capacity(plan.len());
    for p in &plan.patterns {
        match index.get(p.beams()) {
            Some(&i) => merged[i].1 += p.weight(),
            None => {
                index.insert(p.beams(), merged.len());
                merged.push((p.beams().to_vec(), p.weight()));
            }
        }
    }
    let patterns = merged
        .into_iter()
        .map(|(beams, w)| Pattern::new(beams, w).expect("merged pattern stays valid"))
        .collect();
    Plan::new(patterns, plan.cycle)
}

/// Full pipeline: decompose, split for interference then cardinality, merge.
pub fn dp2_full(inst: &Instance, cons: &ConstraintSet) -> Result<(Plan, Dp2Report), ModelError> {
    let report = validate_instance(inst);
    if !report.is_ok() {
        return Err(ModelError::Invalid(report));
    }
    if cons.n_max == Some(0) {
        return Err(ModelError::Field {
            field: "n_max",
            message: "must be at least 1".into(),
        });
    }
    let start = Instant::now();
    let base = dp2_decompose(&inst.demands)?;
    let base_pattern_count = base.len();

    let mut split = Vec::with_capacity(base.len());
    for p in &base {
        let parts = if cons.interference {
            split_interference(p, &inst.adjacency)
        } else {
            vec![p.clone()]
        };
        for part in parts {
            match cons.n_max {
                Some(n_max) => split.extend(split_cardinality(&part, n_max)),
                None => split.push(part),
            }
        }
    }
    let split_pattern_count = split.len();
    let plan = merge_duplicates(&Plan::new(split, inst.cycle));
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    let report = Dp2Report {
        base_pattern_count,
        split_pattern_count,
        final_pattern_count: plan.len(),
        k_max: k_max(&inst.demands).expect("validated instance has a positive demand"),
        runtime_ms,
    };
    Ok((plan, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{accumulated_weights, check_feasible, CycleConfig};

    fn pat(beams: &[usize], w: u64) -> Pattern {
        Pattern::new(beams.iter().copied(), w).unwrap()
    }

    fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<BTreeSet<usize>> {
        let mut adj = vec![BTreeSet::new(); n];
        for &(a, b) in edges {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        adj
    }

    /// Reference decomposition by repeated halving, written independently
    /// of the bit-scan above.
    fn binary_expansion(mut d: u64) -> Vec<u64> {
        let mut parts = Vec::new();
        let mut unit = 1;
        while d > 0 {
            if d % 2 == 1 {
                parts.push(unit);
            }
            d /= 2;
            unit *= 2;
        }
        parts
    }

    #[test]
    fn five_beam_example() {
        let patterns = dp2_decompose(&[109, 120, 91, 87, 135]).unwrap();
        // written 1-based, shifted to 0-based
        let expected = [
            (vec![5], 128),
            (vec![1, 2, 3, 4], 64),
            (vec![1, 2], 32),
            (vec![2, 3, 4], 16),
            (vec![1, 2, 3], 8),
            (vec![1, 4, 5], 4),
            (vec![3, 4, 5], 2),
            (vec![1, 3, 4, 5], 1),
        ];
        let expected: Vec<Pattern> = expected
            .iter()
            .map(|(b, w)| Pattern::new(b.iter().map(|x| x - 1), *w).unwrap())
            .collect();
        assert_eq!(patterns, expected);
    }

    #[test]
    fn membership_matches_binary_expansion() {
        let demands = [109u64, 120, 91, 87, 135, 0, 1, 4095];
        let patterns = dp2_decompose(&demands).unwrap();
        for (b, &d) in demands.iter().enumerate() {
            let mut mine: Vec<u64> = patterns
                .iter()
                .filter(|p| p.contains(b))
                .map(Pattern::weight)
                .collect();
            mine.sort_unstable();
            assert_eq!(mine, binary_expansion(d), "beam {b}");
        }
    }

    #[test]
    fn single_beam() {
        assert_eq!(
            dp2_decompose(&[5]).unwrap(),
            vec![pat(&[0], 4), pat(&[0], 1)]
        );
    }

    #[test]
    fn all_zero_is_an_error() {
        assert_eq!(dp2_decompose(&[0, 0]), Err(ModelError::NoPositiveDemand));
        assert_eq!(dp2_decompose(&[]), Err(ModelError::NoPositiveDemand));
    }

    #[test]
    fn fifteen_beamase_counts() {
        let a = dp2_decompose(&fixtures::ten_beam().demands).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(a[0].weight(), 32);
        let b = dp2_decompose(&fixtures::fifteen_beam().demands).unwrap();
        assert_eq!(b.len(), 8);
        assert_eq!(b[0].weight(), 128);
    }

    #[test]
    fn interference_split_on_path() {
        let adj = adjacency(3, &[(0, 1), (1, 2)]);
        let parts = split_interference(&pat(&[0, 1, 2], 4), &adj);
        assert_eq!(parts, vec![pat(&[0, 2], 4), pat(&[1], 4)]);
    }

    #[test]
    fn interference_split_identity_and_triangle() {
        let adj = adjacency(4, &[(0, 3)]);
        let p = pat(&[0, 1, 2], 2);
        assert_eq!(split_interference(&p, &adj), vec![p]);

        let tri = adjacency(3, &[(0, 1), (1, 2), (0, 2)]);
        let parts = split_interference(&pat(&[0, 1, 2], 1), &tri);
        assert_eq!(parts, vec![pat(&[0], 1), pat(&[1], 1), pat(&[2], 1)]);
    }

    #[test]
    fn interference_split_allows_more_than_three_classes() {
        let k4 = adjacency(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        assert_eq!(split_interference(&pat(&[0, 1, 2, 3], 1), &k4).len(), 4);
    }

    #[test]
    fn cardinality_split() {
        let parts = split_cardinality(&pat(&[0, 1, 2, 3, 4, 5, 6], 3), 3);
        let sizes: Vec<usize> = parts.iter().map(Pattern::len).collect();
        assert_eq!(sizes, vec![3, 3, 1]);
        assert_eq!(parts[2], pat(&[6], 3));

        let p = pat(&[0, 1, 2], 5);
        assert_eq!(split_cardinality(&p, 3), vec![p]);

        let ten = pat(&(0..10).collect::<Vec<_>>(), 2);
        let singles = split_cardinality(&ten, 1);
        assert_eq!(singles.len(), 10);
        assert!(singles.iter().all(|s| s.len() == 1 && s.weight() == 2));
    }

    #[test]
    fn merging() {
        let cycle = CycleConfig::default();
        let plan = Plan::new(vec![pat(&[0, 1], 4), pat(&[0, 1], 2)], cycle);
        assert_eq!(merge_duplicates(&plan).patterns, vec![pat(&[0, 1], 6)]);

        let distinct = Plan::new(vec![pat(&[0], 4), pat(&[0, 1], 2)], cycle);
        assert_eq!(merge_duplicates(&distinct), distinct);

        let plan = Plan::new(vec![pat(&[0], 1), pat(&[1], 1), pat(&[0], 2)], cycle);
        assert_eq!(
            merge_duplicates(&plan).patterns,
            vec![pat(&[0], 3), pat(&[1], 1)]
        );
    }

    #[test]
    fn full_pipeline_on_reference_instances() {
        let a = fixtures::ten_beam();
        let (plan, report) = dp2_full(&a, &ConstraintSet::UNCONSTRAINED).unwrap();
        assert_eq!(plan.len(), 6);
        assert_eq!(report.base_pattern_count, 6);
        assert_eq!(report.k_max, 5);

        let b = fixtures::fifteen_beam();
        let (plan, report) = dp2_full(&b, &ConstraintSet::UNCONSTRAINED).unwrap();
        assert_eq!(plan.len(), 8);
        assert_eq!(report.final_pattern_count, 8);

        for inst in [&a, &b] {
            let cons = ConstraintSet::interference().with_n_max(3);
            let (plan, report) = dp2_full(inst, &cons).unwrap();
            assert!(check_feasible(&plan, inst, &cons).is_ok());
            assert_eq!(
                accumulated_weights(&plan, inst.n_beams).unwrap(),
                inst.demands
            );
            assert!(report.split_pattern_count >= report.final_pattern_count);
        }
    }

    #[test]
    fn full_pipeline_rejects_bad_input() {
        let a = fixtures::ten_beam();
        let cons = ConstraintSet {
            n_max: Some(0),
            interference: false,
        };
        assert!(dp2_full(&a, &cons).is_err());
    }
}
