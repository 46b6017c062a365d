//! Realizing a plan on a cycle of fixed-length superframes.

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::io::PatternFile;
use crate::model::{CycleConfig, Pattern, Plan};

/// A plan whose weights are slot counts within one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledPlan {
    /// Retained patterns carrying their slot weights.
    pub patterns: Vec<Pattern>,
    pub total_slots: u64,
    pub effective_illumination_fraction: f64,
    /// Patterns whose slot weight rounded to zero.
    pub dropped_patterns: usize,
    /// Whether weights were rescaled to the cycle length.
    pub rescaled: bool,
    pub cycle: CycleConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerProfile {
    /// Beams lit per pattern; each lit beam gets this many times the
    /// single-beam power.
    pub multipliers: Vec<usize>,
    /// Sum of multiplier times weight.
    pub total_power_weight: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub cycle_ms: f64,
    pub dwell_ms: Vec<f64>,
    pub switching_overhead_ms: f64,
    pub effective_fraction: f64,
    /// Switching alone fills the cycle.
    pub degenerate: bool,
}

/// `round(h * slots / total)` with halves rounded away from zero.
fn rescale(h: u64, slots: u64, total: u64) -> u64 {
    let num = 2 * u128::from(h) * u128::from(slots) + u128::from(total);
    (num / (2 * u128::from(total))) as u64
}

fn effective_fraction(pattern_count: usize, cfg: &CycleConfig) -> f64 {
    let cycle = cfg.cycle_duration_ms();
    (1.0 - pattern_count as f64 * cfg.switching_time_ms / cycle).max(0.0)
}

/// Keeps the weights when the cycle leaves at least the minimum granularity
/// per unit of weight, otherwise rescales them to the cycle's slot count.
pub fn scale_to_cycle(plan: &Plan, cfg: &CycleConfig) -> Result<ScheduledPlan, ModelError> {
    let total = plan.total_weight();
    if plan.is_empty() || total == 0 {
        return Err(ModelError::EmptyPlan);
    }
    if cfg.cycle_duration_ms() / total as f64 >= cfg.min_granularity_ms {
        return Ok(ScheduledPlan {
            patterns: plan.patterns.clone(),
            total_slots: total,
            effective_illumination_fraction: effective_fraction(plan.len(), cfg),
            dropped_patterns: 0,
            rescaled: false,
            cycle: *cfg,
        });
    }
    rescale_to_slots(plan, cfg)
}

/// Rescales weights to the cycle's slot count unconditionally.
pub fn rescale_to_slots(plan: &Plan, cfg: &CycleConfig) -> Result<ScheduledPlan, ModelError> {
    let total = plan.total_weight();
    if plan.is_empty() || total == 0 {
        return Err(ModelError::EmptyPlan);
    }
    let slots = u64::from(cfg.slots_per_cycle);
    let mut patterns = Vec::with_capacity(plan.len());
    let mut dropped = 0;
    for p in &plan.patterns {
        match rescale(p.weight(), slots, total) {
            0 => dropped += 1,
            h => patterns.push(p.with_weight(h)?),
        }
    }
    let total_slots = patterns.iter().map(Pattern::weight).sum();
    Ok(ScheduledPlan {
        effective_illumination_fraction: effective_fraction(patterns.len(), cfg),
        patterns,
        total_slots,
        dropped_patterns: dropped,
        rescaled: true,
        cycle: *cfg,
    })
}

pub fn power_multipliers(plan: &Plan) -> PowerProfile {
    let multipliers: Vec<usize> = plan.patterns.iter().map(Pattern::len).collect();
    let total_power_weight = plan
        .patterns
        .iter()
        .map(|p| p.len() as u64 * p.weight())
        .sum();
    PowerProfile {
        multipliers,
        total_power_weight,
    }
}

pub fn plan_timing(s: &ScheduledPlan, cfg: &CycleConfig) -> TimingReport {
    let cycle_ms = cfg.cycle_duration_ms();
    let overhead = s.patterns.len() as f64 * cfg.switching_time_ms;
    TimingReport {
        cycle_ms,
        dwell_ms: s
            .patterns
            .iter()
            .map(|p| p.weight() as f64 * cfg.sf_duration_ms)
            .collect(),
        switching_overhead_ms: overhead,
        effective_fraction: effective_fraction(s.patterns.len(), cfg),
        degenerate: overhead >= cycle_ms,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduledPlanFile {
    pub patterns: Vec<PatternFile>,
    pub total_slots: u64,
    pub dropped_patterns: usize,
    pub rescaled: bool,
    pub effective_illumination_fraction: f64,
    pub power: PowerProfile,
    pub timing: TimingReport,
}

impl ScheduledPlan {
    pub fn as_plan(&self) -> Plan {
        Plan::new(self.patterns.clone(), self.cycle)
    }

    pub fn to_file(&self) -> ScheduledPlanFile {
        ScheduledPlanFile {
            patterns: self
                .patterns
                .iter()
                .map(|p| PatternFile {
                    beams: p.beams().iter().map(|b| b + 1).collect(),
                    weight: p.weight(),
                })
                .collect(),
            total_slots: self.total_slots,
            dropped_patterns: self.dropped_patterns,
            rescaled: self.rescaled,
            effective_illumination_fraction: self.effective_illumination_fraction,
            power: power_multipliers(&self.as_plan()),
            timing: plan_timing(self, &self.cycle),
        }
    }
}
