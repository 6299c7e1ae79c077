//! Interaction maps: threshold averaging, closest-neighbor,
//! potential-weighted, diffusive coupling on a fixed graph and the
//! graph-restricted threshold rule, plus the chain-cluster decomposition.
//!
//! All updates are synchronous: neighbor sets and averages are computed
//! from the frozen input configuration, so per-particle updates are
//! independent and deterministic. The center of gravity of a neighbor set
//! is computed once per distinct set and shared between its members; with
//! a rigid rule this makes the collapse of a cluster bitwise exact.

use crate::space::{
    center_of_gravity, circle_signed_disp, dist, wrap_unit, Configuration, Space, SpaceError,
    Topology,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum InteractionError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("gamma {0} outside [0,1]")]
    BadGamma(f64),
    #[error("epsilon {0} must be nonnegative")]
    BadEpsilon(f64),
    #[error("mode requires an adjacency list")]
    MissingAdjacency,
    #[error("adjacency is not symmetric at ({0}, {1})")]
    AsymmetricAdjacency(usize, usize),
    #[error("adjacency references particle {0} but configuration has {1}")]
    AdjacencyOutOfRange(usize, usize),
    #[error("mode requires a sampled potential")]
    MissingPotential,
    #[error("potential must be nonnegative")]
    NegativePotential,
    #[error("potential sampled too coarsely: {0} samples (need at least {1})")]
    PotentialTooCoarse(usize, usize),
    #[error("potential interaction is defined for 1-d spaces only")]
    PotentialNeedsDim1,
    #[error("potential image {value} for particle {particle} leaves the interval")]
    PotentialEscapesDomain { particle: usize, value: f64 },
}

/// Interaction potential `U` sampled uniformly on `[-1, 1]` and evaluated
/// by linear interpolation; the scaled version is `U_eps(x) = U(x/eps)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPotential {
    values: Vec<f64>,
}

/// Minimum number of samples on `[-1,1]` (grid step 1/100).
pub const MIN_POTENTIAL_SAMPLES: usize = 201;

impl SampledPotential {
    pub fn new(values: Vec<f64>) -> Result<Self, InteractionError> {
        if values.len() < MIN_POTENTIAL_SAMPLES {
            return Err(InteractionError::PotentialTooCoarse(
                values.len(),
                MIN_POTENTIAL_SAMPLES,
            ));
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(InteractionError::NegativePotential);
        }
        Ok(SampledPotential { values })
    }

    /// The indicator of `[-1,1]`, which reproduces plain averaging.
    pub fn indicator() -> Self {
        SampledPotential {
            values: vec![1.0; MIN_POTENTIAL_SAMPLES],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation of `U` at `u`; zero outside `[-1,1]`.
    pub fn value(&self, u: f64) -> f64 {
        if !(-1.0..=1.0).contains(&u) {
            return 0.0;
        }
        let k = self.values.len() - 1;
        let t = (u + 1.0) / 2.0 * k as f64;
        let i = (t.floor() as usize).min(k - 1);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InteractionMode {
    /// All particles within `eps` interact.
    Threshold,
    /// Only the closest particles within `eps` interact (all ties kept).
    Closest,
    /// Threshold averaging weighted by a sampled potential.
    Potential,
    /// Convex combination over fixed graph neighbors; `gamma` plays the
    /// coupling-weight role.
    Diffusive,
    /// Threshold intersected with a fixed graph.
    GraphThreshold,
}

/// Parameters of an interaction map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionRule {
    pub mode: InteractionMode,
    pub epsilon: f64,
    /// Self-weight in `[0,1]`: 0 is rigid, 1 disables the interaction.
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<SampledPotential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<usize>>>,
}

impl InteractionRule {
    pub fn threshold(epsilon: f64, gamma: f64) -> Self {
        InteractionRule {
            mode: InteractionMode::Threshold,
            epsilon,
            gamma,
            potential: None,
            adjacency: None,
        }
    }

    pub fn closest(epsilon: f64, gamma: f64) -> Self {
        InteractionRule {
            mode: InteractionMode::Closest,
            ..Self::threshold(epsilon, gamma)
        }
    }

    pub fn validate(&self, n_particles: usize) -> Result<(), InteractionError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(InteractionError::BadGamma(self.gamma));
        }
        if self.epsilon < 0.0 {
            return Err(InteractionError::BadEpsilon(self.epsilon));
        }
        if matches!(
            self.mode,
            InteractionMode::Diffusive | InteractionMode::GraphThreshold
        ) {
            let adj = self
                .adjacency
                .as_ref()
                .ok_or(InteractionError::MissingAdjacency)?;
            if adj.len() != n_particles {
                return Err(InteractionError::AdjacencyOutOfRange(
                    adj.len(),
                    n_particles,
                ));
            }
            for (i, nbrs) in adj.iter().enumerate() {
                for &j in nbrs {
                    if j >= n_particles {
                        return Err(InteractionError::AdjacencyOutOfRange(j, n_particles));
                    }
                    if j != i && !adj[j].contains(&i) {
                        return Err(InteractionError::AsymmetricAdjacency(i, j));
                    }
                }
            }
        }
        if matches!(self.mode, InteractionMode::Potential) && self.potential.is_none() {
            return Err(InteractionError::MissingPotential);
        }
        if let Some(p) = &self.potential {
            // deserialized rules bypass the constructor
            if p.values.len() < MIN_POTENTIAL_SAMPLES {
                return Err(InteractionError::PotentialTooCoarse(
                    p.values.len(),
                    MIN_POTENTIAL_SAMPLES,
                ));
            }
            if p.values.iter().any(|&v| v < 0.0) {
                return Err(InteractionError::NegativePotential);
            }
        }
        Ok(())
    }
}

/// Per-particle index sets of interacting partners; `i` always belongs to
/// its own set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborSets {
    pub sets: Vec<Vec<usize>>,
}

/// Computes the neighbor sets of the configuration under the rule.
pub fn neighbor_sets(
    config: &Configuration,
    space: &Space,
    rule: &InteractionRule,
) -> Result<NeighborSets, InteractionError> {
    let n = config.len();
    rule.validate(n)?;
    let pts = config.positions();
    let mut sets = Vec::with_capacity(n);
    for i in 0..n {
        let mut set = vec![i];
        match rule.mode {
            InteractionMode::Threshold | InteractionMode::Potential => {
                for j in 0..n {
                    if j != i && dist(space, &pts[i], &pts[j])? <= rule.epsilon {
                        set.push(j);
                    }
                }
            }
            InteractionMode::Closest => {
                let mut best = f64::INFINITY;
                for j in 0..n {
                    if j != i {
                        best = best.min(dist(space, &pts[i], &pts[j])?);
                    }
                }
                if best <= rule.epsilon {
                    for j in 0..n {
                        if j != i && dist(space, &pts[i], &pts[j])? == best {
                            set.push(j);
                        }
                    }
                }
            }
            InteractionMode::GraphThreshold => {
                let adj = rule.adjacency.as_ref().unwrap();
                for &j in &adj[i] {
                    if j != i && dist(space, &pts[i], &pts[j])? <= rule.epsilon {
                        set.push(j);
                    }
                }
            }
            InteractionMode::Diffusive => {
                let adj = rule.adjacency.as_ref().unwrap();
                for &j in &adj[i] {
                    if j != i {
                        set.push(j);
                    }
                }
            }
        }
        set.sort_unstable();
        sets.push(set);
    }
    Ok(NeighborSets { sets })
}

/// Applies the averaging interaction: each particle moves toward the
/// center of gravity of its neighbor set with self-weight `gamma`.
///
/// Covers the threshold, closest and graph-threshold modes. `gamma = 1`
/// or `eps = 0` is the identity; a particle whose set is only itself is
/// returned unchanged.
pub fn apply_interaction(
    config: &Configuration,
    space: &Space,
    rule: &InteractionRule,
) -> Result<Configuration, InteractionError> {
    rule.validate(config.len())?;
    if rule.gamma == 1.0 || (rule.epsilon == 0.0 && rule.mode != InteractionMode::Diffusive) {
        return Ok(config.clone());
    }
    let sets = neighbor_sets(config, space, rule)?;
    average_toward_sets(config, space, &sets, rule.gamma)
}

/// Diffusive coupling on the fixed graph: the convex combination
/// `w x_i + (1-w) mean(neighbors and self)` with `w` taken from the
/// rule's `gamma` field.
pub fn apply_diffusive(
    config: &Configuration,
    space: &Space,
    rule: &InteractionRule,
) -> Result<Configuration, InteractionError> {
    if rule.mode != InteractionMode::Diffusive {
        return Err(InteractionError::MissingAdjacency);
    }
    rule.validate(config.len())?;
    if rule.gamma == 1.0 {
        return Ok(config.clone());
    }
    let sets = neighbor_sets(config, space, rule)?;
    average_toward_sets(config, space, &sets, rule.gamma)
}

fn average_toward_sets(
    config: &Configuration,
    space: &Space,
    sets: &NeighborSets,
    gamma: f64,
) -> Result<Configuration, InteractionError> {
    let pts = config.positions();
    // one center of gravity per distinct neighbor set, shared so that a
    // rigid cluster collapses to one bitwise-identical point
    let mut centers: BTreeMap<&[usize], Vec<f64>> = BTreeMap::new();
    for set in &sets.sets {
        if set.len() > 1 && !centers.contains_key(set.as_slice()) {
            let members: Vec<Vec<f64>> = set.iter().map(|&j| pts[j].clone()).collect();
            centers.insert(set.as_slice(), center_of_gravity(&members, space)?);
        }
    }
    let mut out = Vec::with_capacity(pts.len());
    for (i, set) in sets.sets.iter().enumerate() {
        if set.len() == 1 {
            out.push(pts[i].clone());
            continue;
        }
        let center = &centers[set.as_slice()];
        if gamma == 0.0 {
            out.push(center.clone());
            continue;
        }
        let mut p = Vec::with_capacity(space.dim);
        for c in 0..space.dim {
            let x = pts[i][c];
            match space.topology {
                Topology::Interval => p.push(gamma * x + (1.0 - gamma) * center[c]),
                Topology::Circle => {
                    let d = circle_signed_disp(x, center[c]);
                    p.push(wrap_unit(x + (1.0 - gamma) * d));
                }
            }
        }
        out.push(p);
    }
    Ok(Configuration::new(out, space)?)
}

/// Potential-weighted interaction on a one-dimensional space:
/// `gamma x_i + (1-gamma)/|J_i| sum_j x_j U_eps(x_j - x_i)`.
///
/// The formula is applied as written, without renormalizing by the total
/// potential weight; on the interval an image outside `[0,1)` is an
/// error rather than being clamped.
pub fn apply_potential_interaction(
    config: &Configuration,
    space: &Space,
    rule: &InteractionRule,
) -> Result<Configuration, InteractionError> {
    rule.validate(config.len())?;
    if space.dim != 1 {
        return Err(InteractionError::PotentialNeedsDim1);
    }
    let potential = rule
        .potential
        .as_ref()
        .ok_or(InteractionError::MissingPotential)?;
    let sets = neighbor_sets(config, space, rule)?;
    let pts = config.positions();
    let mut out = Vec::with_capacity(pts.len());
    for (i, set) in sets.sets.iter().enumerate() {
        let x = pts[i][0];
        let mut sum = 0.0;
        for &j in set {
            let (lifted, disp) = match space.topology {
                Topology::Interval => (pts[j][0], pts[j][0] - x),
                Topology::Circle => {
                    let d = circle_signed_disp(x, pts[j][0]);
                    (x + d, d)
                }
            };
            let w = if rule.epsilon > 0.0 {
                potential.value(disp / rule.epsilon)
            } else {
                1.0
            };
            sum += lifted * w;
        }
        let value = rule.gamma * x + (1.0 - rule.gamma) * sum / set.len() as f64;
        let value = match space.topology {
            Topology::Interval => {
                if !(0.0..1.0).contains(&value) {
                    return Err(InteractionError::PotentialEscapesDomain { particle: i, value });
                }
                value
            }
            Topology::Circle => wrap_unit(value),
        };
        out.push(vec![value]);
    }
    Ok(Configuration::new(out, space)?)
}

// ---------------------------------------------------------------------
// Chain clusters
// ---------------------------------------------------------------------

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Partition of the particle indices into maximal sets connected by
/// chains of links of length at most `eps`. Clusters and their members
/// are sorted ascending.
pub fn epsilon_chain_clusters(
    config: &Configuration,
    space: &Space,
    eps: f64,
) -> Result<Vec<Vec<usize>>, SpaceError> {
    let n = config.len();
    let pts = config.positions();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if dist(space, &pts[i], &pts[j])? <= eps {
                uf.union(i, j);
            }
        }
    }
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = uf.find(i);
        buckets.entry(root).or_default().push(i);
    }
    let mut clusters: Vec<Vec<usize>> = buckets.into_values().collect();
    clusters.sort_by_key(|c| c[0]);
    Ok(clusters)
}

/// The interaction block matrix `G = gamma I + ((1-gamma)/n) E` acting on
/// one cluster of `n` mutually interacting particles, where `E` is the
/// all-ones matrix. Its eigenvalues are `gamma` with multiplicity `n-1`
/// and 1 on the all-ones vector.
pub fn interaction_block_matrix(n: usize, gamma: f64) -> nalgebra::DMatrix<f64> {
    assert!(n >= 1, "cluster size must be positive");
    let off = (1.0 - gamma) / n as f64;
    nalgebra::DMatrix::from_fn(n, n, |i, j| if i == j { gamma + off } else { off })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn interval() -> Space {
        Space::interval()
    }

    // reference three-particle cluster; epsilon is bumped by an ulp-scale
    // amount because 0.111 - 0.105 rounds slightly above 0.006 in binary
    const EPS3: f64 = 0.0060000000001;

    fn config3() -> Configuration {
        Configuration::from_scalars(&[0.10, 0.105, 0.111], &interval()).unwrap()
    }

    #[test]
    fn threshold_neighbor_sets() {
        let rule = InteractionRule::threshold(EPS3, 0.0);
        let ns = neighbor_sets(&config3(), &interval(), &rule).unwrap();
        assert_eq!(ns.sets, vec![vec![0, 1], vec![0, 1, 2], vec![1, 2]]);
    }

    #[test]
    fn closest_neighbor_sets() {
        let rule = InteractionRule::closest(EPS3, 0.0);
        let ns = neighbor_sets(&config3(), &interval(), &rule).unwrap();
        assert_eq!(ns.sets, vec![vec![0, 1], vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn isolated_particles_self_sets() {
        let c = Configuration::from_scalars(&[0.1, 0.5, 0.9], &interval()).unwrap();
        let rule = InteractionRule::threshold(0.01, 0.0);
        let ns = neighbor_sets(&c, &interval(), &rule).unwrap();
        assert_eq!(ns.sets, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn rigid_pair_collapses_to_center() {
        let c = Configuration::from_scalars(&[0.10, 0.105], &interval()).unwrap();
        let rule = InteractionRule::threshold(0.01, 0.0);
        let out = apply_interaction(&c, &interval(), &rule).unwrap();
        assert_abs_diff_eq!(out.position(0)[0], 0.1025, epsilon = 1e-15);
        // bitwise equality of the collapsed pair
        assert_eq!(out.position(0)[0], out.position(1)[0]);
    }

    #[test]
    fn rigid_three_particle_averages() {
        let rule = InteractionRule::threshold(EPS3, 0.0);
        let out = apply_interaction(&config3(), &interval(), &rule).unwrap();
        assert_abs_diff_eq!(out.position(0)[0], 0.1025, epsilon = 1e-15);
        assert_abs_diff_eq!(
            out.position(1)[0],
            (0.10 + 0.105 + 0.111) / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(out.position(2)[0], 0.108, epsilon = 1e-15);
    }

    #[test]
    fn gamma_one_is_identity() {
        let rule = InteractionRule::threshold(0.5, 1.0);
        let out = apply_interaction(&config3(), &interval(), &rule).unwrap();
        assert_eq!(out, config3());
    }

    #[test]
    fn indicator_potential_matches_plain_interaction() {
        let mut rule = InteractionRule::threshold(EPS3, 0.3);
        let plain = apply_interaction(&config3(), &interval(), &rule).unwrap();
        rule.mode = InteractionMode::Potential;
        rule.potential = Some(SampledPotential::indicator());
        let pot = apply_potential_interaction(&config3(), &interval(), &rule).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(plain.position(i)[0], pot.position(i)[0], epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_potential_leaves_gamma_part() {
        let c = Configuration::from_scalars(&[0.2, 0.201], &interval()).unwrap();
        let mut rule = InteractionRule::threshold(0.01, 0.5);
        rule.mode = InteractionMode::Potential;
        rule.potential = Some(SampledPotential::new(vec![0.0; 201]).unwrap());
        let out = apply_potential_interaction(&c, &interval(), &rule).unwrap();
        assert_abs_diff_eq!(out.position(0)[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(out.position(1)[0], 0.1005, epsilon = 1e-15);
    }

    #[test]
    fn single_particle_potential_self_term() {
        let c = Configuration::from_scalars(&[0.4], &interval()).unwrap();
        let mut rule = InteractionRule::threshold(0.01, 0.25);
        rule.mode = InteractionMode::Potential;
        let mut values = vec![0.0; 201];
        values[100] = 0.8; // U(0) = 0.8
        rule.potential = Some(SampledPotential::new(values).unwrap());
        let out = apply_potential_interaction(&c, &interval(), &rule).unwrap();
        let expected = (0.25 + 0.75 * 0.8) * 0.4;
        assert_abs_diff_eq!(out.position(0)[0], expected, epsilon = 1e-15);
    }

    #[test]
    fn oversized_potential_image_errors() {
        let c = Configuration::from_scalars(&[0.7, 0.701], &interval()).unwrap();
        let mut rule = InteractionRule::threshold(0.01, 0.0);
        rule.mode = InteractionMode::Potential;
        rule.potential = Some(SampledPotential::new(vec![1.5; 201]).unwrap());
        assert!(matches!(
            apply_potential_interaction(&c, &interval(), &rule),
            Err(InteractionError::PotentialEscapesDomain { .. })
        ));
    }

    #[test]
    fn diffusive_pair_midpoint() {
        let c = Configuration::from_scalars(&[0.2, 0.4], &interval()).unwrap();
        let rule = InteractionRule {
            mode: InteractionMode::Diffusive,
            epsilon: 0.0,
            gamma: 0.0,
            potential: None,
            adjacency: Some(vec![vec![1], vec![0]]),
        };
        let out = apply_diffusive(&c, &interval(), &rule).unwrap();
        assert_abs_diff_eq!(out.position(0)[0], 0.3, epsilon = 1e-15);
        assert_eq!(out.position(0)[0], out.position(1)[0]);
    }

    #[test]
    fn diffusive_weight_one_identity() {
        let c = Configuration::from_scalars(&[0.2, 0.4], &interval()).unwrap();
        let rule = InteractionRule {
            mode: InteractionMode::Diffusive,
            epsilon: 0.0,
            gamma: 1.0,
            potential: None,
            adjacency: Some(vec![vec![1], vec![0]]),
        };
        assert_eq!(apply_diffusive(&c, &interval(), &rule).unwrap(), c);
    }

    #[test]
    fn diffusive_path_graph() {
        let c = Configuration::from_scalars(&[0.0, 0.3, 0.6], &interval()).unwrap();
        let rule = InteractionRule {
            mode: InteractionMode::Diffusive,
            epsilon: 0.0,
            gamma: 0.0,
            potential: None,
            adjacency: Some(vec![vec![1], vec![0, 2], vec![1]]),
        };
        let out = apply_diffusive(&c, &interval(), &rule).unwrap();
        assert_abs_diff_eq!(out.position(0)[0], 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(out.position(1)[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(out.position(2)[0], 0.45, epsilon = 1e-15);
    }

    #[test]
    fn diffusive_missing_adjacency_errors() {
        let c = Configuration::from_scalars(&[0.2, 0.4], &interval()).unwrap();
        let rule = InteractionRule {
            mode: InteractionMode::Diffusive,
            epsilon: 0.0,
            gamma: 0.0,
            potential: None,
            adjacency: None,
        };
        assert!(matches!(
            apply_diffusive(&c, &interval(), &rule),
            Err(InteractionError::MissingAdjacency)
        ));
    }

    #[test]
    fn graph_threshold_intersection() {
        // particles 0,1 close and adjacent; 0,2 close but not adjacent
        let c = Configuration::from_scalars(&[0.10, 0.105, 0.109], &interval()).unwrap();
        let rule = InteractionRule {
            mode: InteractionMode::GraphThreshold,
            epsilon: 0.01,
            gamma: 0.0,
            potential: None,
            adjacency: Some(vec![vec![1], vec![0], vec![]]),
        };
        let ns = neighbor_sets(&c, &interval(), &rule).unwrap();
        assert_eq!(ns.sets, vec![vec![0, 1], vec![0, 1], vec![2]]);
    }

    #[test]
    fn clusters_example() {
        let c = Configuration::from_scalars(&[0.10, 0.105, 0.111, 0.5], &interval()).unwrap();
        let cl = epsilon_chain_clusters(&c, &interval(), EPS3).unwrap();
        assert_eq!(cl, vec![vec![0, 1, 2], vec![3]]);
    }

    #[test]
    fn clusters_all_isolated() {
        let c = Configuration::from_scalars(&[0.1, 0.4, 0.7], &interval()).unwrap();
        let cl = epsilon_chain_clusters(&c, &interval(), 0.05).unwrap();
        assert_eq!(cl.len(), 3);
    }

    #[test]
    fn clusters_coincident() {
        let c = Configuration::from_scalars(&[0.3, 0.3, 0.3], &interval()).unwrap();
        let cl = epsilon_chain_clusters(&c, &interval(), 0.0).unwrap();
        assert_eq!(cl, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn block_matrix_small_cases() {
        let g = interaction_block_matrix(2, 0.5);
        assert_abs_diff_eq!(g[(0, 0)], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(g[(0, 1)], 0.25, epsilon = 1e-15);
        let id = interaction_block_matrix(3, 1.0);
        assert_eq!(id, nalgebra::DMatrix::identity(3, 3));
        let one = interaction_block_matrix(1, 0.3);
        assert_abs_diff_eq!(one[(0, 0)], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn circle_cluster_wraps() {
        let s = Space::circle();
        let c = Configuration::from_scalars(&[0.99, 0.01], &s).unwrap();
        let rule = InteractionRule::threshold(0.05, 0.0);
        let out = apply_interaction(&c, &s, &rule).unwrap();
        assert_abs_diff_eq!(out.position(0)[0], 0.0, epsilon = 1e-15);
        assert_eq!(out.position(0)[0], out.position(1)[0]);
    }
}
