//! Coresets for random partitions under a DP mixture, plus partition
//! utilities.
//!
//! Observations are paired with latent cluster parameters `theta_i` drawn from
//! the prior clustering; the urn then runs over pairs with base
//! `k(dy | theta) x rho(dtheta)`. Weights rescale `y` only.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::coreset::{
    inverse_permutation, run_iterations, select_support, stream_rng, CoresetRunConfig, CoresetWeights,
    IterationInput, RunReport,
};
use crate::error::{argument, shape, Result};
use crate::measure::{center_dataset, empirical_from, Dataset, GroundMetric, Point};
use crate::transport::solve_assignment;
use crate::urn::{materialize, sample_trajectory, BaseMeasureSpec, DPConfig};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Relabels to `0..K` in order of first appearance.
    pub fn from_labels(raw: &[usize]) -> Self {
        let mut map = HashMap::new();
        let labels = raw
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels, k: map.len() }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for l in &self.labels {
            c[*l] += 1;
        }
        c
    }

    pub fn restrict(&self, indices: &[usize]) -> Partition {
        let raw: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        Partition::from_labels(&raw)
    }
}

/// Gaussian kernel `k(y | theta) = N(theta, kernel_sd^2 I)`, atoms
/// `rho = N(atom_mean, atom_sd^2 I)`, mixing `DP(rho, alpha)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub alpha: f64,
    pub atom_mean: Vec<f64>,
    pub atom_sd: f64,
    pub kernel_sd: f64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) {
            return argument("mixing concentration must be positive");
        }
        self.joint_base().validate()
    }

    pub fn dim(&self) -> usize {
        self.atom_mean.len()
    }

    /// The urn base over pairs implied by this mixture.
    pub fn joint_base(&self) -> BaseMeasureSpec {
        BaseMeasureSpec::JointMixture {
            atom_mean: self.atom_mean.clone(),
            atom_sd: self.atom_sd,
            kernel_sd: self.kernel_sd,
        }
    }

    pub fn draw_atom<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = Normal::new(0.0, self.atom_sd).expect("validated sd");
        self.atom_mean.iter().map(|m| m + n.sample(rng)).collect()
    }
}

/// Chinese-restaurant allocation of `size` items with cluster atoms from
/// `rho`.
pub fn sample_prior_clustering<R: Rng + ?Sized>(
    size: usize,
    spec: &MixtureSpec,
    rng: &mut R,
) -> Result<(Vec<Vec<f64>>, Partition)> {
    if size == 0 {
        return argument("clustering needs at least one item");
    }
    spec.validate()?;
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::with_capacity(size);
    for i in 0..size {
        let p_new = spec.alpha / (spec.alpha + i as f64);
        if i == 0 || rng.random::<f64>() < p_new {
            labels.push(atoms.len());
            atoms.push(spec.draw_atom(rng));
        } else {
            let j = rng.random_range(0..i);
            labels.push(labels[j]);
        }
    }
    let theta = labels.iter().map(|&l| atoms[l].clone()).collect();
    Ok((theta, Partition::from_labels(&labels)))
}

pub fn extract_subset(
    theta: &[Vec<f64>],
    s: &Partition,
    support: &[usize],
) -> Result<(Vec<Vec<f64>>, Partition)> {
    if theta.len() != s.len() {
        return shape("one latent per item");
    }
    if let Some(bad) = support.iter().find(|&&i| i >= s.len()) {
        return argument(format!("support index {bad} out of range"));
    }
    let sub = support.iter().map(|&i| theta[i].clone()).collect();
    Ok((sub, s.restrict(support)))
}

/// Coreset weights for `data` with the urn running over `(y_i, theta_i)`
/// pairs. `dp.base` must be the joint base over pairs (see
/// [`MixtureSpec::joint_base`]). The report's `theta` for each iteration
/// holds the number of prior clusters drawn.
pub fn run_partition_coreset(
    data: &Dataset,
    spec: &MixtureSpec,
    dp: &DPConfig,
    metric: &GroundMetric,
    cfg: &CoresetRunConfig,
) -> Result<(CoresetWeights, RunReport)> {
    cfg.validate(data.len())?;
    spec.validate()?;
    metric.validate()?;
    if spec.dim() != data.dim() {
        return shape("mixture and data dimensions differ");
    }
    let (centered, mean) = center_dataset(data);
    let neg_mean: Vec<f64> = mean.iter().map(|m| -m).collect();
    let support = select_support(data.len(), cfg.n, &mut stream_rng(cfg.seed, 0))?;
    let inverse = cfg.share_trajectory.then(|| inverse_permutation(&support));

    run_iterations(cfg, metric, support.clone(), |_, rng| {
        let (theta, s) = sample_prior_clustering(data.len(), spec, rng)?;
        let pairs: Vec<Point> = centered
            .points
            .iter()
            .zip(&theta)
            .map(|(y, t)| Point::with_latent(y.coords.clone(), t.clone()))
            .collect();
        let full_traj = sample_trajectory(data.len(), dp, cfg.m, rng)?.map_fresh(|p| p.shifted(&neg_mean));
        let mut atoms = materialize(&full_traj, &pairs, None)?;
        if cfg.augment_observed {
            atoms.extend(pairs.iter().cloned());
        }
        let support_pairs: Vec<Point> = support.iter().map(|&i| pairs[i].clone()).collect();
        let trajectory = match &inverse {
            Some(inv) => full_traj.remap_conditioning(inv)?,
            None => sample_trajectory(cfg.n, dp, cfg.m, rng)?.map_fresh(|p| p.shifted(&neg_mean)),
        };
        Ok(IterationInput {
            theta: vec![s.num_clusters() as f64],
            full: empirical_from(atoms)?,
            trajectory,
            support: support_pairs,
        })
    })
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `H(a) + H(b) - 2 I(a, b)` in nats.
pub fn variation_of_information(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return argument(format!("partitions of {} and {} items", a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let n = a.len() as f64;
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (x, y) in a.labels.iter().zip(&b.labels) {
        *joint.entry((*x, *y)).or_default() += 1;
    }
    let ca = a.cardinalities();
    let cb = b.cardinalities();
    let mut mutual = 0.0;
    for (&(x, y), &c) in &joint {
        let pxy = c as f64 / n;
        mutual += pxy * (c as f64 * n / (ca[x] as f64 * cb[y] as f64)).ln();
    }
    let vi = entropy(ca.into_iter(), n) + entropy(cb.into_iter(), n) - 2.0 * mutual;
    Ok(vi.max(0.0))
}

/// Label map taking `draw`'s clusters onto `reference`'s by maximum total
/// overlap. Unmatched clusters get fresh labels after the reference's.
fn align_to(reference: &Partition, draw: &Partition) -> Result<Vec<usize>> {
    let size = reference.num_clusters().max(draw.num_clusters());
    let mut overlap = vec![0.0; size * size];
    for (r, d) in reference.labels.iter().zip(&draw.labels) {
        overlap[d * size + r] -= 1.0;
    }
    let assign = solve_assignment(&overlap, size)?;
    Ok(assign[..draw.num_clusters()].to_vec())
}

/// Per-item modal label after aligning every draw to the first one; ties
/// go to the lowest label. The result is canonically relabelled.
pub fn cluster_point_estimate(draws: &[Partition]) -> Result<Partition> {
    let Some(first) = draws.first() else {
        return argument("need at least one partition draw");
    };
    if draws.iter().any(|d| d.len() != first.len()) {
        return argument("partition draws differ in length");
    }
    let width = draws.iter().map(Partition::num_clusters).max().unwrap_or(1);
    let mut votes = vec![vec![0usize; width]; first.len()];
    for d in draws {
        let map = align_to(first, d)?;
        for (item, l) in d.labels.iter().enumerate() {
            votes[item][map[*l]] += 1;
        }
    }
    let modal: Vec<usize> = votes
        .iter()
        .map(|v| {
            let mut best = 0;
            for (l, c) in v.iter().enumerate() {
                if *c > v[best] {
                    best = l;
                }
            }
            best
        })
        .collect();
    Ok(Partition::from_labels(&modal))
}
