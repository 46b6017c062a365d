//! Synthetic benchmark scenes: a hexagonal beam lattice over a 100 x 100
//! grid centred at the origin, random users, and per-beam demand.
//!
//! Randomness comes from xoshiro256++ seeded through SplitMix64
//! (`Xoshiro256PlusPlus::seed_from_u64`). Draw order is part of the format:
//! continuous mode draws `x, y, demand` per user; discrete mode first draws
//! every cluster centre `(x, y)`, then per user a cluster index, `dx, dy`
//! and the demand.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution as _, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{CycleConfig, Instance};

pub const GRID_WIDTH: f64 = 100.0;
pub const GENERATOR: &str = "xoshiro256++ seeded by splitmix64";

/// Neighbours are centres within this many lattice pitches.
const NEIGHBOUR_REACH: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainModel {
    /// Beam demand is the plain sum of its users' demand.
    #[default]
    Flat,
    /// User demand divided by a Gaussian-shaped gain that halves at the
    /// footprint edge.
    Taper,
}

impl GainModel {
    pub fn gain(self, distance: f64, radius: f64) -> f64 {
        match self {
            GainModel::Flat => 1.0,
            GainModel::Taper => (-(distance / radius).powi(2)).exp2(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestbedSpec {
    pub target_beams: usize,
    pub n_users: usize,
    pub demand_range_mbps: (f64, f64),
    pub distribution: Distribution,
    pub seed: u64,
    #[serde(default = "default_clusters")]
    pub cluster_count: usize,
    #[serde(default = "default_sigma")]
    pub cluster_sigma: f64,
    #[serde(default)]
    pub gain_model: GainModel,
}

fn default_clusters() -> usize {
    5
}

fn default_sigma() -> f64 {
    5.0
}

impl TestbedSpec {
    pub fn new(
        target_beams: usize,
        n_users: usize,
        demand_range_mbps: (f64, f64),
        distribution: Distribution,
        seed: u64,
    ) -> Self {
        Self {
            target_beams,
            n_users,
            demand_range_mbps,
            distribution,
            seed,
            cluster_count: default_clusters(),
            cluster_sigma: default_sigma(),
            gain_model: GainModel::Flat,
        }
    }

    /// Row `trial` (1-based) of [`trial_table`] at the given size and seed.
    pub fn for_trial(trial: usize, target_beams: usize, seed: u64) -> Option<Self> {
        let row = trial_table().into_iter().nth(trial.checked_sub(1)?)?;
        Some(Self {
            target_beams,
            seed,
            ..row
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let (lo, hi) = self.demand_range_mbps;
        let fail = |field, message: &str| {
            Err(ModelError::Field {
                field,
                message: message.into(),
            })
        };
        if self.target_beams == 0 {
            return fail("target_beams", "must be at least 1");
        }
        if self.n_users == 0 {
            return fail("n_users", "must be at least 1");
        }
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
            return fail("demand_range_mbps", "expected 0 <= lo <= hi");
        }
        if self.distribution == Distribution::Discrete {
            if self.cluster_count == 0 {
                return fail("cluster_count", "must be at least 1");
            }
            if !(self.cluster_sigma.is_finite() && self.cluster_sigma >= 0.0) {
                return fail("cluster_sigma", "must be non-negative");
            }
        }
        Ok(())
    }
}

/// The eight benchmark trial templates (16 beams, seed 0).
pub fn trial_table() -> Vec<TestbedSpec> {
    use Distribution::{Continuous, Discrete};
    [
        (800, (10.0, 15.0), Continuous),
        (200, (1.0, 35.0), Continuous),
        (800, (10.0, 15.0), Discrete),
        (200, (1.0, 35.0), Discrete),
        (200, (10.0, 15.0), Discrete),
        (800, (1.0, 35.0), Discrete),
        (200, (10.0, 15.0), Continuous),
        (800, (1.0, 35.0), Continuous),
    ]
    .into_iter()
    .map(|(users, range, dist)| TestbedSpec::new(16, users, range, dist, 0))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub rows: usize,
    pub columns: usize,
    pub pitch: f64,
    pub radius: f64,
    pub centers: Vec<(f64, f64)>,
    pub adjacency: Vec<BTreeSet<usize>>,
}

fn lattice_shape(target: usize) -> (usize, usize) {
    match target {
        16 => (4, 4),
        49 => (7, 7),
        132 => (12, 11),
        n => {
            let columns = (n as f64).sqrt().ceil() as usize;
            (n.div_ceil(columns), columns)
        }
    }
}

/// Hexagonal lattice with odd rows shifted half a pitch, centred on the
/// origin. Sizes without an exact lattice are cut from the next larger one
/// by dropping the centres farthest from the origin.
pub fn hex_layout(target_beams: usize) -> Layout {
    assert!(target_beams >= 1, "a layout needs at least one beam");
    let (rows, columns) = lattice_shape(target_beams);
    let pitch = GRID_WIDTH / columns as f64;
    let row_step = pitch * 3f64.sqrt() / 2.0;
    let shift = if rows > 1 { 0.25 } else { 0.0 };

    let mut centers = Vec::with_capacity(rows * columns);
    for r in 0..rows {
        let odd = if r % 2 == 1 { 0.5 } else { 0.0 };
        let y = (r as f64 - (rows - 1) as f64 / 2.0) * row_step;
        for c in 0..columns {
            let x = (c as f64 + odd - shift - (columns - 1) as f64 / 2.0) * pitch;
            centers.push((x, y));
        }
    }
    if centers.len() > target_beams {
        let mut order: Vec<usize> = (0..centers.len()).collect();
        let norm = |i: usize| centers[i].0.hypot(centers[i].1);
        order.sort_by(|&a, &b| norm(b).total_cmp(&norm(a)).then(b.cmp(&a)));
        let drop: BTreeSet<usize> = order[..centers.len() - target_beams]
            .iter()
            .copied()
            .collect();
        centers = centers
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, p)| p)
            .collect();
    }

    let reach = NEIGHBOUR_REACH * pitch;
    let mut adjacency = vec![BTreeSet::new(); centers.len()];
    for a in 0..centers.len() {
        for b in a + 1..centers.len() {
            let (ax, ay) = centers[a];
            let (bx, by) = centers[b];
            if (ax - bx).hypot(ay - by) <= reach {
                adjacency[a].insert(b);
                adjacency[b].insert(a);
            }
        }
    }
    Layout {
        rows,
        columns,
        pitch,
        radius: pitch / 3f64.sqrt(),
        centers,
        adjacency,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub x: f64,
    pub y: f64,
    pub demand_mbps: f64,
}

pub fn gen_users(spec: &TestbedSpec) -> Vec<User> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let half = GRID_WIDTH / 2.0;
    let (lo, hi) = spec.demand_range_mbps;
    let demand = |rng: &mut Xoshiro256PlusPlus| rng.gen_range(lo..=hi);
    match spec.distribution {
        Distribution::Continuous => (0..spec.n_users)
            .map(|_| {
                let x = rng.gen_range(-half..=half);
                let y = rng.gen_range(-half..=half);
                User {
                    x,
                    y,
                    demand_mbps: demand(&mut rng),
                }
            })
            .collect(),
        Distribution::Discrete => {
            let clusters: Vec<(f64, f64)> = (0..spec.cluster_count)
                .map(|_| (rng.gen_range(-half..=half), rng.gen_range(-half..=half)))
                .collect();
            let spread = Normal::new(0.0, spec.cluster_sigma).expect("sigma validated");
            (0..spec.n_users)
                .map(|_| {
                    let (cx, cy) = clusters[rng.gen_range(0..clusters.len())];
                    let x = (cx + spread.sample(&mut rng)).clamp(-half, half);
                    let y = (cy + spread.sample(&mut rng)).clamp(-half, half);
                    User {
                        x,
                        y,
                        demand_mbps: demand(&mut rng),
                    }
                })
                .collect()
        }
    }
}

/// Index of the nearest centre, lowest index on ties.
fn nearest(centers: &[(f64, f64)], x: f64, y: f64) -> (usize, f64) {
    centers
        .iter()
        .enumerate()
        .map(|(i, &(cx, cy))| (i, (x - cx).hypot(y - cy)))
        .fold(
            (0, f64::INFINITY),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        )
}

/// Assigns every user to its nearest beam and returns `(assignment,
/// per-beam demand)`.
pub fn aggregate(
    users: &[User],
    centers: &[(f64, f64)],
    radius: f64,
    gain_model: GainModel,
) -> (Vec<usize>, Vec<f64>) {
    let mut per_beam = vec![0.0; centers.len()];
    let assignment = users
        .iter()
        .map(|u| {
            let (b, dist) = nearest(centers, u.x, u.y);
            per_beam[b] += u.demand_mbps / gain_model.gain(dist, radius);
            b
        })
        .collect();
    (assignment, per_beam)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub spec: TestbedSpec,
    pub layout: Layout,
    pub users: Vec<User>,
    pub assignment: Vec<usize>,
    pub per_beam_demand: Vec<f64>,
}

pub fn build_scene(spec: &TestbedSpec) -> Result<Scene, ModelError> {
    spec.validate()?;
    let layout = hex_layout(spec.target_beams);
    let users = gen_users(spec);
    let (assignment, per_beam_demand) =
        aggregate(&users, &layout.centers, layout.radius, spec.gain_model);
    Ok(Scene {
        spec: spec.clone(),
        layout,
        users,
        assignment,
        per_beam_demand,
    })
}

/// Demand units per Mbps when converting to integer demands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantizer {
    pub scale: f64,
}

impl Default for Quantizer {
    fn default() -> Self {
        Self { scale: 1.0 }
    }
}

impl Quantizer {
    pub fn quantize(&self, mbps: f64) -> u64 {
        (mbps * self.scale).round() as u64
    }
}

impl Scene {
    pub fn to_instance(&self, cycle: CycleConfig, q: Quantizer) -> Result<Instance, ModelError> {
        let demands: Vec<u64> = self
            .per_beam_demand
            .iter()
            .map(|&d| q.quantize(d))
            .collect();
        if demands.iter().all(|&d| d == 0) {
            return Err(ModelError::NoPositiveDemand);
        }
        let metadata = serde_json::json!({
            "testbed": self.spec,
            "generator": GENERATOR,
            "quantizer_scale": q.scale,
            "lattice": { "rows": self.layout.rows, "columns": self.layout.columns },
            "raw_demand_mbps": self.per_beam_demand.iter().sum::<f64>(),
        });
        Ok(Instance {
            n_beams: demands.len(),
            demands,
            adjacency: self.layout.adjacency.clone(),
            cycle,
            metadata: Some(metadata),
        })
    }
}

pub fn build_instance(
    spec: &TestbedSpec,
    cycle: CycleConfig,
    q: Quantizer,
) -> Result<Instance, ModelError> {
    build_scene(spec)?.to_instance(cycle, q)
}
