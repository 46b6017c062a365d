//! Exact minimum-pattern-count solver.
//!
//! A plan with `k` patterns is a multiset of `k` positive weights plus, for
//! every beam, a subset of those weights summing to its demand. The solver
//! deepens `k` from a lower bound. For each `k` it enumerates weight
//! multisets in nondecreasing order (which removes permutation symmetry
//! between patterns) and, when interference or cardinality limits apply,
//! solves the beam-to-pattern assignment as a small constraint problem.
//!
//! Without limits the assignment is free: any weight multiset whose subset
//! sums cover every distinct demand value yields a plan. With interference
//! on, the demand sum of every clique of the conflict graph must also be a
//! subset sum (clique members use disjoint patterns), so those sums join
//! the covering targets.
//!
//! Pruning used while enumerating weights, all of which hold for every
//! solution with sorted weights `w_1 <= ... <= w_k`:
//!
//! * a target smaller than `w_{j+1}` can only be built from `w_1..w_j`, so
//!   `w_{j+1}` never exceeds the smallest target not yet reachable;
//! * `r` further weights add at most `2^r - 1` nonzero offsets to each
//!   reachable sum, which bounds how many targets can still be reached;
//! * every weight is used by some beam (otherwise a smaller plan exists and
//!   an earlier depth would have found it), so the last weight is the
//!   difference between a target and an already reachable sum, and it
//!   must make every remaining target reachable;
//! * beams with demand below `w_{j+1}` are built from `w_1..w_j` alone, so
//!   under limits they must already admit a valid assignment.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dp2::merge_duplicates;
use crate::error::ModelError;
use crate::io::PlanFile;
use crate::model::{check_feasible, validate_instance, ConstraintSet, Instance, Pattern, Plan};

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Known-feasible plan (typically from the power-of-two heuristic). Its
    /// pattern count is the initial upper bound.
    pub warm_start: Option<Plan>,
    pub time_limit: Option<Duration>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    TimeoutNoSolution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub plan: Option<Plan>,
    pub status: SolveStatus,
    /// Proven lower bound on the pattern count.
    pub lower_bound: usize,
    pub nodes_explored: u64,
    pub runtime_ms: f64,
}

impl OptResult {
    pub fn upper_bound(&self) -> Option<usize> {
        self.plan.as_ref().map(Plan::len)
    }

    /// `100 * (UB - LB) / UB`; zero when optimal, `None` without a plan.
    pub fn gap_percent(&self) -> Option<f64> {
        let ub = self.upper_bound()?;
        Some(100.0 * ub.saturating_sub(self.lower_bound) as f64 / ub as f64)
    }

    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out {
            status: SolveStatus,
            lower_bound: usize,
            upper_bound: Option<usize>,
            gap_percent: Option<f64>,
            nodes_explored: u64,
            runtime_ms: f64,
            plan: Option<PlanFile>,
        }
        serde_json::to_value(Out {
            status: self.status,
            lower_bound: self.lower_bound,
            upper_bound: self.upper_bound(),
            gap_percent: self.gap_percent(),
            nodes_explored: self.nodes_explored,
            runtime_ms: self.runtime_ms,
            plan: self.plan.as_ref().map(PlanFile::from_plan),
        })
        .expect("result serialization is infallible")
    }
}

/// Distinct positive demand values (`Omega` of them) and the fixed-slot
/// weight set `{1, ..., min(W, Omega)}` used by slot-indexed formulations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightDomain {
    pub distinct_demands: Vec<u64>,
    pub weights: Vec<u64>,
}

impl WeightDomain {
    pub fn new(demands: &[u64], slots_per_cycle: u32) -> Self {
        let distinct: BTreeSet<u64> = demands.iter().copied().filter(|&d| d > 0).collect();
        let distinct_demands: Vec<u64> = distinct.into_iter().collect();
        let top = (distinct_demands.len() as u64).min(u64::from(slots_per_cycle));
        Self {
            distinct_demands,
            weights: (1..=top).collect(),
        }
    }

    pub fn omega(&self) -> usize {
        self.distinct_demands.len()
    }
}

/// Smallest `k` with `2^k - 1 >= count`.
fn subset_sum_bound(count: usize) -> usize {
    let mut k = 0;
    while (1u128 << k) - 1 < count as u128 {
        k += 1;
    }
    k
}

fn positive_beams(inst: &Instance) -> Vec<usize> {
    (0..inst.n_beams).filter(|&b| inst.demands[b] > 0).collect()
}

/// Largest clique over positive-demand beams found by growing one greedy
/// clique from every seed.
fn greedy_clique(inst: &Instance) -> Vec<usize> {
    let mut best = Vec::new();
    for seed in positive_beams(inst) {
        let mut clique = vec![seed];
        for &cand in &inst.adjacency[seed] {
            if inst.demands[cand] > 0 && clique.iter().all(|&c| inst.are_adjacent(c, cand)) {
                clique.push(cand);
            }
        }
        if clique.len() > best.len() {
            best = clique;
        }
    }
    best
}

/// Valid lower bound on the optimal pattern count.
///
/// Maximum of 1, the subset-sum counting bound over distinct demands, the
/// size of a greedy clique (interference) and `ceil(positive beams / n_max)`.
pub fn lower_bound(inst: &Instance, cons: &ConstraintSet) -> usize {
    let omega = WeightDomain::new(&inst.demands, u32::MAX).omega();
    let mut lb = subset_sum_bound(omega).max(1);
    if cons.interference {
        lb = lb.max(greedy_clique(inst).len());
    }
    if let Some(n_max) = cons.n_max.filter(|&n| n > 0) {
        lb = lb.max(positive_beams(inst).len().div_ceil(n_max));
    }
    lb
}

pub fn solve_exact(
    inst: &Instance,
    cons: &ConstraintSet,
    opts: &SolveOptions,
) -> Result<OptResult, ModelError> {
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
    let deadline = opts.time_limit.map(|t| start + t);

    let mut incumbent = match &opts.warm_start {
        Some(plan) => {
            let report = check_feasible(plan, inst, cons);
            if !report.is_ok() {
                return Err(ModelError::Invalid(report));
            }
            Some(merge_duplicates(plan))
        }
        None => None,
    };

    let mut search = Search::new(inst, cons, deadline);
    let mut proven = lower_bound(inst, cons).max(search.target_bound());
    // singletons always fit, so the deepening never passes this depth
    let ceiling = positive_beams(inst).len();
    let limit = incumbent
        .as_ref()
        .map_or(ceiling, |p| p.len().saturating_sub(1).min(ceiling));

    let mut outcome = Outcome::Infeasible;
    let mut k = proven;
    while k <= limit {
        outcome = search.run(k);
        match outcome {
            Outcome::Found => break,
            Outcome::Infeasible => {
                proven = k + 1;
                k += 1;
            }
            Outcome::Timeout => break,
        }
    }

    let status = match outcome {
        Outcome::Found => {
            incumbent = Some(search.take_plan(inst));
            proven = incumbent.as_ref().map_or(proven, Plan::len);
            SolveStatus::Optimal
        }
        Outcome::Infeasible => {
            // depths below the warm start are exhausted
            let plan = incumbent
                .as_ref()
                .expect("singleton depth is always feasible");
            proven = plan.len();
            SolveStatus::Optimal
        }
        Outcome::Timeout if incumbent.is_some() => SolveStatus::Feasible,
        Outcome::Timeout => SolveStatus::TimeoutNoSolution,
    };

    Ok(OptResult {
        plan: incumbent,
        status,
        lower_bound: proven,
        nodes_explored: search.nodes,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Found,
    Infeasible,
    Timeout,
}

/// Growable bitset of reachable subset sums.
#[derive(Debug, Clone, PartialEq, Eq)]
struct SumSet {
    words: Vec<u64>,
}

impl SumSet {
    fn zero(max_value: u64) -> Self {
        let mut words = vec![0u64; (max_value as usize) / 64 + 1];
        words[0] = 1;
        Self { words }
    }

    fn contains(&self, v: u64) -> bool {
        let v = v as usize;
        self.words
            .get(v / 64)
            .is_some_and(|w| w >> (v % 64) & 1 == 1)
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `self | (self << shift)`, truncated to the original capacity.
    fn with_added(&self, shift: u64, out: &mut SumSet) {
        let n = self.words.len();
        out.words.clear();
        out.words.extend_from_slice(&self.words);
        let word_shift = (shift / 64) as usize;
        let bit_shift = (shift % 64) as u32;
        if word_shift >= n {
            return;
        }
        for i in (word_shift..n).rev() {
            let src = i - word_shift;
            let mut v = self.words[src] << bit_shift;
            if bit_shift > 0 && src > 0 {
                v |= self.words[src - 1] >> (64 - bit_shift);
            }
            out.words[i] |= v;
        }
    }

    fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                (rest != 0).then(|| {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    (i * 64 + b) as u64
                })
            })
        })
    }
}

/// Deepest pattern count the search attempts; masks are 64-bit.
const MAX_DEPTH: usize = 63;

/// `(sum, mask)` for every subset of the current weights with sum at most
/// the largest demand, sorted by sum then mask.
type MaskLayer = Vec<(u64, u64)>;

fn extend_layer(prev: &MaskLayer, w: u64, bit: usize, cap: u64, out: &mut MaskLayer) {
    out.clear();
    let shifted = prev
        .iter()
        .filter(|(s, _)| s + w <= cap)
        .map(|&(s, m)| (s + w, m | 1 << bit));
    // masks carrying the new bit sort after every older mask with equal sum
    let mut left = prev.iter().copied().peekable();
    for item in shifted {
        while let Some(&l) = left.peek() {
            if l <= item {
                out.push(l);
                left.next();
            } else {
                break;
            }
        }
        out.push(item);
    }
    out.extend(left);
}

fn domain(layer: &MaskLayer, sum: u64) -> &[(u64, u64)] {
    let from = layer.partition_point(|&(s, _)| s < sum);
    let to = layer.partition_point(|&(s, _)| s <= sum);
    &layer[from..to]
}

struct Search {
    deadline: Option<Instant>,
    /// Positive beams sorted by demand. Everything below indexes positions
    /// in this list.
    beams: Vec<usize>,
    demands: Vec<u64>,
    neighbours: Vec<Vec<usize>>,
    n_max: Option<usize>,
    interference: bool,
    /// Sorted distinct values that must be subset sums.
    targets: Vec<u64>,
    needs_assignment: bool,
    nodes: u64,
    weights: Vec<u64>,
    sums: Vec<SumSet>,
    masks: Vec<MaskLayer>,
    solution: Option<(Vec<u64>, Vec<u64>)>,
}

impl Search {
    fn new(inst: &Instance, cons: &ConstraintSet, deadline: Option<Instant>) -> Self {
        let mut beams = positive_beams(inst);
        beams.sort_by_key(|&b| (inst.demands[b], b));
        let mut position = vec![usize::MAX; inst.n_beams];
        for (i, &b) in beams.iter().enumerate() {
            position[b] = i;
        }
        let neighbours = beams
            .iter()
            .map(|&b| {
                inst.adjacency[b]
                    .iter()
                    .map(|&o| position[o])
                    .filter(|&o| o != usize::MAX)
                    .collect()
            })
            .collect();
        let demands: Vec<u64> = beams.iter().map(|&b| inst.demands[b]).collect();

        let mut targets: BTreeSet<u64> = demands.iter().copied().collect();
        if cons.interference {
            targets.extend(clique_sums(inst, &beams));
        }
        Self {
            deadline,
            beams,
            demands,
            neighbours,
            n_max: cons.n_max,
            interference: cons.interference,
            targets: targets.into_iter().collect(),
            needs_assignment: !cons.is_unconstrained(),
            nodes: 0,
            weights: Vec::new(),
            sums: Vec::new(),
            masks: Vec::new(),
            solution: None,
        }
    }

    /// Every target is a distinct nonzero subset sum.
    fn target_bound(&self) -> usize {
        subset_sum_bound(self.targets.len())
    }

    fn max_demand(&self) -> u64 {
        *self
            .demands
            .last()
            .expect("validated instance has a positive demand")
    }

    fn run(&mut self, k: usize) -> Outcome {
        if k > MAX_DEPTH {
            return Outcome::Timeout;
        }
        let max_target = *self
            .targets
            .last()
            .expect("validated instance has a positive demand");
        self.weights.clear();
        self.sums = vec![SumSet::zero(max_target); k + 1];
        self.masks = vec![vec![(0, 0)]; k + 1];
        self.solution = None;
        self.dfs(k)
    }

    fn timed_out(&self) -> bool {
        self.nodes.is_multiple_of(1024) && self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    fn dfs(&mut self, k: usize) -> Outcome {
        self.nodes += 1;
        if self.timed_out() {
            return Outcome::Timeout;
        }
        let depth = self.weights.len();
        let remaining = k - depth;
        let sums = &self.sums[depth];
        let first_uncovered = self.targets.iter().copied().find(|&t| !sums.contains(t));

        // shallower covers were settled at smaller depths of the deepening
        if first_uncovered.is_none() && (remaining == 0 || !self.needs_assignment) {
            if let Some(masks) = self.assign(self.beams.len()) {
                self.solution = Some((self.weights.clone(), masks));
                return Outcome::Found;
            }
        }
        if remaining == 0 {
            return Outcome::Infeasible;
        }
        if remaining < 20 {
            let uncovered = self.targets.iter().filter(|&&t| !sums.contains(t)).count();
            if uncovered > sums.count() * ((1usize << remaining) - 1) {
                return Outcome::Infeasible;
            }
        }

        let lo = self.weights.last().copied().unwrap_or(1);
        let mut hi = first_uncovered.unwrap_or_else(|| self.max_demand());
        if self.needs_assignment {
            hi = hi.min(self.closure_cutoff(lo, hi));
        }
        if lo > hi {
            return Outcome::Infeasible;
        }

        let mut candidates: Vec<u64> = if remaining == 1 {
            self.last_weight_candidates(depth, first_uncovered, lo, hi)
        } else {
            (lo..=hi).collect()
        };
        // larger weights first: solutions are found sooner, and exhausting
        // a depth costs the same in any order
        candidates.reverse();

        let cap = self.max_demand();
        for w in candidates {
            let (head, tail) = self.sums.split_at_mut(depth + 1);
            head[depth].with_added(w, &mut tail[0]);
            if self.needs_assignment {
                let (head, tail) = self.masks.split_at_mut(depth + 1);
                extend_layer(&head[depth], w, depth, cap, &mut tail[0]);
            }
            self.weights.push(w);
            let out = self.dfs(k);
            self.weights.pop();
            match out {
                Outcome::Infeasible => {}
                other => return other,
            }
        }
        Outcome::Infeasible
    }

    /// Largest next weight in `lo..=hi` for which the beams it closes (demand
    /// below it, hence built from the current weights only) can still be
    /// assigned. Closed sets only grow with the next weight, so the first
    /// failing threshold bounds every larger weight.
    fn closure_cutoff(&self, lo: u64, hi: u64) -> u64 {
        let mut checked = self.closed_count(lo);
        while checked < self.demands.len() {
            let d = self.demands[checked];
            if d >= hi {
                break;
            }
            let closed = self.closed_count(d + 1);
            if self.assign(closed).is_none() {
                return d;
            }
            checked = closed;
        }
        hi
    }

    /// Number of beams with demand below `w`.
    fn closed_count(&self, w: u64) -> usize {
        self.demands.partition_point(|&d| d < w)
    }

    /// The last weight must complete the smallest uncovered target (or some
    /// beam's demand when everything is covered) and must cover every
    /// remaining target together with the current sums.
    fn last_weight_candidates(
        &self,
        depth: usize,
        first_uncovered: Option<u64>,
        lo: u64,
        hi: u64,
    ) -> Vec<u64> {
        let sums = &self.sums[depth];
        let covers = |w: u64| {
            self.targets
                .iter()
                .all(|&t| sums.contains(t) || (t >= w && sums.contains(t - w)))
        };
        let mut out = Vec::new();
        let mut push = |a: u64| {
            for s in sums.iter().take_while(|&s| s < a) {
                let w = a - s;
                if (lo..=hi).contains(&w) && covers(w) {
                    out.push(w);
                }
            }
        };
        match first_uncovered {
            Some(t) => push(t),
            None => {
                let mut prev = 0;
                for &d in &self.demands {
                    if d != prev {
                        push(d);
                        prev = d;
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Assigns the first `n` beams (demand order) a subset of the current
    /// weights summing to their demand, as bitmasks over weight indices.
    fn assign(&self, n: usize) -> Option<Vec<u64>> {
        if !self.needs_assignment {
            return self.demands[..n]
                .iter()
                .map(|&d| subset_masks(&self.weights, d).first().copied())
                .collect();
        }
        let layer = &self.masks[self.weights.len()];
        let mut domains = Vec::with_capacity(n);
        for &d in &self.demands[..n] {
            let dom = domain(layer, d);
            if dom.is_empty() {
                return None;
            }
            domains.push(dom);
        }
        let mut csp = Assignment {
            domains,
            neighbours: &self.neighbours,
            interference: self.interference,
            n_max: self.n_max,
            chosen: vec![0; n],
            usage: vec![0; self.weights.len()],
            full: 0,
        };
        csp.search().then_some(csp.chosen)
    }

    fn take_plan(&mut self, inst: &Instance) -> Plan {
        let (weights, masks) = self.solution.take().expect("search reported a solution");
        let mut patterns = Vec::with_capacity(weights.len());
        for (i, &w) in weights.iter().enumerate() {
            let members: Vec<usize> = self
                .beams
                .iter()
                .zip(&masks)
                .filter(|(_, &m)| m >> i & 1 == 1)
                .map(|(&b, _)| b)
                .collect();
            if !members.is_empty() {
                patterns.push(Pattern::new(members, w).expect("non-empty pattern"));
            }
        }
        let plan = Plan::new(patterns, inst.cycle);
        let merged = merge_duplicates(&plan);
        debug_assert_eq!(merged.len(), plan.len());
        merged
    }
}

/// Demand sums of all edges and triangles among the given beams.
fn clique_sums(inst: &Instance, beams: &[usize]) -> BTreeSet<u64> {
    let mut sums = BTreeSet::new();
    let positive = |b: usize| inst.demands[b] > 0;
    for &a in beams {
        for &b in inst.adjacency[a].range(a + 1..) {
            if !positive(b) {
                continue;
            }
            sums.insert(inst.demands[a] + inst.demands[b]);
            for &c in inst.adjacency[b].range(b + 1..) {
                if positive(c) && inst.are_adjacent(a, c) {
                    sums.insert(inst.demands[a] + inst.demands[b] + inst.demands[c]);
                }
            }
        }
    }
    sums
}

/// All subsets of `weights` (sorted ascending) summing to `target`, as
/// bitmasks, in ascending mask order.
fn subset_masks(weights: &[u64], target: u64) -> Vec<u64> {
    fn rec(weights: &[u64], i: usize, left: u64, mask: u64, out: &mut Vec<u64>) {
        if left == 0 {
            out.push(mask);
            return;
        }
        if i == weights.len() || weights[i] > left {
            return;
        }
        rec(weights, i + 1, left - weights[i], mask | 1 << i, out);
        rec(weights, i + 1, left, mask, out);
    }
    let mut out = Vec::new();
    rec(weights, 0, target, 0, &mut out);
    out.sort_unstable();
    out
}

/// Backtracking assignment of weight subsets to beams under interference
/// and cardinality limits. Beams are positions `0..chosen.len()`; a chosen
/// mask of 0 means unassigned (every positive demand needs some weight).
struct Assignment<'a> {
    domains: Vec<&'a [(u64, u64)]>,
    neighbours: &'a [Vec<usize>],
    interference: bool,
    n_max: Option<usize>,
    chosen: Vec<u64>,
    usage: Vec<usize>,
    /// Patterns already lighting `n_max` beams.
    full: u64,
}

impl Assignment<'_> {
    fn blocked(&self, v: usize) -> u64 {
        let mut blocked = self.full;
        if self.interference {
            for &o in &self.neighbours[v] {
                if o < self.chosen.len() {
                    blocked |= self.chosen[o];
                }
            }
        }
        blocked
    }

    fn live_count(&self, v: usize, extra: u64) -> usize {
        let blocked = self.blocked(v) | extra;
        self.domains[v]
            .iter()
            .filter(|&&(_, m)| m & blocked == 0)
            .count()
    }

    fn set(&mut self, v: usize, m: u64) {
        self.chosen[v] = m;
        for (i, u) in self.usage.iter_mut().enumerate() {
            if m >> i & 1 == 1 {
                *u += 1;
                if self.n_max.is_some_and(|n| *u >= n) {
                    self.full |= 1 << i;
                }
            }
        }
    }

    fn unset(&mut self, v: usize) {
        let m = std::mem::take(&mut self.chosen[v]);
        for (i, u) in self.usage.iter_mut().enumerate() {
            if m >> i & 1 == 1 {
                *u -= 1;
                if self.n_max.is_some_and(|n| *u < n) {
                    self.full &= !(1 << i);
                }
            }
        }
    }

    fn search(&mut self) -> bool {
        // most constrained unassigned beam first, ties to higher degree
        let mut pick: Option<(usize, usize)> = None;
        for v in 0..self.chosen.len() {
            if self.chosen[v] != 0 {
                continue;
            }
            let live = self.live_count(v, 0);
            if live == 0 {
                return false;
            }
            let better = match pick {
                None => true,
                Some((pv, pl)) => {
                    live < pl
                        || (live == pl && self.neighbours[v].len() > self.neighbours[pv].len())
                }
            };
            if better {
                pick = Some((v, live));
            }
        }
        let Some((v, _)) = pick else {
            return true;
        };
        let blocked = self.blocked(v);
        let domain = self.domains[v];
        'next: for &(_, m) in domain {
            if m & blocked != 0 {
                continue;
            }
            if self.interference {
                for &o in &self.neighbours[v] {
                    if o < self.chosen.len() && self.chosen[o] == 0 && self.live_count(o, m) == 0 {
                        continue 'next;
                    }
                }
            }
            self.set(v, m);
            if self.search() {
                return true;
            }
            self.unset(v);
        }
        false
    }
}

/// Smallest number of patterns found by exhaustive enumeration of pattern
/// multisets, or `None` when more than `cap` patterns would be needed.
///
/// Every admissible pattern (a beam subset allowed by `cons` paired with a
/// weight up to the largest demand) is an item; multisets of items are
/// enumerated by nondecreasing item index, pruning any item that would
/// overshoot a residual demand. Independent of [`solve_exact`]; intended
/// for at most six beams with small demands.
pub fn brute_force_min_patterns(
    inst: &Instance,
    cons: &ConstraintSet,
    cap: usize,
) -> Option<usize> {
    let n = inst.n_beams;
    assert!(n <= 16, "brute force is limited to tiny instances");
    let max_w = inst.max_demand();
    let mut items: Vec<(u32, u64)> = Vec::new();
    for mask in 1u32..(1 << n) {
        let members: Vec<usize> = (0..n).filter(|&b| mask >> b & 1 == 1).collect();
        if cons.n_max.is_some_and(|m| members.len() > m) {
            continue;
        }
        if cons.interference
            && members
                .iter()
                .any(|&a| members.iter().any(|&b| inst.are_adjacent(a, b)))
        {
            continue;
        }
        for w in 1..=max_w {
            items.push((mask, w));
        }
    }

    fn rec(items: &[(u32, u64)], from: usize, left: usize, residual: &mut [u64]) -> bool {
        if residual.iter().all(|&r| r == 0) {
            return true;
        }
        if left == 0 {
            return false;
        }
        for i in from..items.len() {
            let (mask, w) = items[i];
            let fits = (0..residual.len()).all(|b| mask >> b & 1 == 0 || residual[b] >= w);
            if !fits {
                continue;
            }
            for (b, r) in residual.iter_mut().enumerate() {
                if mask >> b & 1 == 1 {
                    *r -= w;
                }
            }
            let ok = rec(items, i, left - 1, residual);
            for (b, r) in residual.iter_mut().enumerate() {
                if mask >> b & 1 == 1 {
                    *r += w;
                }
            }
            if ok {
                return true;
            }
        }
        false
    }

    (1..=cap).find(|&k| {
        let mut residual = inst.demands.clone();
        rec(&items, 0, k, &mut residual)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::CycleConfig;

    fn solve(inst: &Instance, cons: &ConstraintSet) -> OptResult {
        solve_exact(inst, cons, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn sumset_shift() {
        let base = SumSet::zero(200);
        let mut a = SumSet::zero(200);
        base.with_added(3, &mut a);
        let mut b = SumSet::zero(200);
        a.with_added(70, &mut b);
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![0, 3, 70, 73]);
        let mut c = SumSet::zero(200);
        b.with_added(130, &mut c);
        assert_eq!(
            c.iter().collect::<Vec<_>>(),
            vec![0, 3, 70, 73, 130, 133, 200, 203]
        );
        assert_eq!(c.count(), 8);
    }

    #[test]
    fn subset_masks_enumerates_all() {
        assert_eq!(subset_masks(&[1, 2, 3], 3), vec![0b011, 0b100]);
        assert_eq!(subset_masks(&[2, 2], 2), vec![0b01, 0b10]);
        assert!(subset_masks(&[2, 4], 3).is_empty());
    }

    #[test]
    fn one_beam() {
        let inst = Instance::isolated(vec![42]).unwrap();
        let r = solve(&inst, &ConstraintSet::UNCONSTRAINED);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(
            r.plan.unwrap().patterns,
            vec![Pattern::new([0], 42).unwrap()]
        );
    }

    #[test]
    fn adjacent_pair_needs_two() {
        let inst = Instance::from_edges(vec![3, 3], &[(0, 1)], CycleConfig::default()).unwrap();
        let r = solve(&inst, &ConstraintSet::interference());
        assert_eq!(r.upper_bound(), Some(2));
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(
            solve(&inst, &ConstraintSet::UNCONSTRAINED).upper_bound(),
            Some(1)
        );
    }

    #[test]
    fn brute_force_small_cases() {
        let one = Instance::isolated(vec![1]).unwrap();
        assert_eq!(
            brute_force_min_patterns(&one, &ConstraintSet::UNCONSTRAINED, 3),
            Some(1)
        );
        let pair = Instance::from_edges(vec![3, 3], &[(0, 1)], CycleConfig::default()).unwrap();
        assert_eq!(
            brute_force_min_patterns(&pair, &ConstraintSet::interference(), 3),
            Some(2)
        );
        let two = Instance::isolated(vec![2, 3]).unwrap();
        assert_eq!(
            brute_force_min_patterns(&two, &ConstraintSet::UNCONSTRAINED, 3),
            Some(2)
        );
        assert_eq!(
            brute_force_min_patterns(&two, &ConstraintSet::UNCONSTRAINED, 1),
            None
        );
    }

    #[test]
    fn lower_bounds() {
        let a = fixtures::ten_beam();
        assert!(lower_bound(&a, &ConstraintSet::UNCONSTRAINED) >= 4);
        let flat = Instance::isolated(vec![7; 6]).unwrap();
        assert_eq!(lower_bound(&flat, &ConstraintSet::UNCONSTRAINED), 1);
        let tri = Instance::from_edges(
            vec![1, 1, 1],
            &[(0, 1), (1, 2), (0, 2)],
            CycleConfig::default(),
        )
        .unwrap();
        assert!(lower_bound(&tri, &ConstraintSet::interference()) >= 3);
        assert_eq!(
            lower_bound(&flat, &ConstraintSet::UNCONSTRAINED.with_n_max(4)),
            2
        );
    }

    #[test]
    fn weight_domain() {
        let wd = WeightDomain::new(&[5, 0, 5, 3, 9], 2);
        assert_eq!(wd.omega(), 3);
        assert_eq!(wd.distinct_demands, vec![3, 5, 9]);
        assert_eq!(wd.weights, vec![1, 2]);
    }

    #[test]
    fn warm_start_that_is_optimal() {
        let inst = Instance::isolated(vec![4, 4]).unwrap();
        let plan = Plan::new(vec![Pattern::new([0, 1], 4).unwrap()], inst.cycle);
        let opts = SolveOptions {
            warm_start: Some(plan.clone()),
            ..Default::default()
        };
        let r = solve_exact(&inst, &ConstraintSet::UNCONSTRAINED, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.plan, Some(plan));
        assert_eq!(r.gap_percent(), Some(0.0));
    }

    #[test]
    fn infeasible_warm_start_is_rejected() {
        let inst = Instance::isolated(vec![4, 4]).unwrap();
        let plan = Plan::new(vec![Pattern::new([0], 4).unwrap()], inst.cycle);
        let opts = SolveOptions {
            warm_start: Some(plan),
            ..Default::default()
        };
        assert!(solve_exact(&inst, &ConstraintSet::UNCONSTRAINED, &opts).is_err());
    }
}
