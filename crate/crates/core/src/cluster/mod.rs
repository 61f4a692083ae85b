//! Correlation-distance clustering of items: PAM k-medoids over 1 − phi
//! distances, silhouette-based selection of the cluster count, and
//! co-membership comparison across populations.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{PopulationSlice, ResponseMatrix};
use crate::ctt;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::scalar::Scalar;
use crate::stats::{self, CorrelationResult, Method, PValueSpec};

/// Restart count for the medoid search: one greedy initialization plus
/// seeded random initializations.
pub const DEFAULT_RESTARTS: usize = 10;

/// Default upper bound of the cluster-count search.
pub const DEFAULT_K_MAX: usize = 8;

/// Symmetric item-distance matrix, d = 1 − phi, entries in [0, 2].
///
/// Items whose responses had zero variance (phi undefined against anything)
/// are excluded up front and listed in `excluded_items`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix<S> {
    item_ids: Vec<String>,
    /// Row-major n×n distances.
    d: Vec<S>,
    excluded_items: Vec<String>,
}

impl<S: Scalar> DistanceMatrix<S> {
    /// Build from an explicit flat row-major matrix, validating shape,
    /// symmetry, zero diagonal, and the [0, 2] range.
    pub fn new(item_ids: Vec<String>, d: Vec<S>) -> Result<Self> {
        let n = item_ids.len();
        if d.len() != n * n {
            return Err(Error::LengthMismatch(d.len(), n * n));
        }
        let two = S::from_f64_lossy(2.0);
        for i in 0..n {
            if d[i * n + i] != S::zero() {
                return Err(Error::InvalidParameter(format!(
                    "distance matrix diagonal must be zero (item {i})"
                )));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if !v.is_finite() || v < S::zero() || v > two {
                    return Err(Error::InvalidParameter(format!(
                        "distance ({i},{j}) outside [0, 2]"
                    )));
                }
                if v != d[j * n + i] {
                    return Err(Error::InvalidParameter(format!(
                        "distance matrix not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(DistanceMatrix {
            item_ids,
            d,
            excluded_items: Vec::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.item_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.d[i * self.item_ids.len() + j]
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn excluded_items(&self) -> &[String] {
        &self.excluded_items
    }
}

/// Build the 1 − phi distance matrix for a category's items over a slice.
///
/// Zero-variance items are removed and reported; at least three usable items
/// must remain.
pub fn distance_matrix<S: Scalar>(
    matrix: &ResponseMatrix,
    slice: &PopulationSlice,
    category: &str,
) -> Result<DistanceMatrix<S>> {
    let block = matrix.category_block(slice, category)?;

    let mut usable: Vec<usize> = Vec::new();
    let mut excluded_items: Vec<String> = Vec::new();
    for i in 0..block.n_items() {
        let row = block.item_row(i);
        let constant = row.iter().all(|&v| v) || row.iter().all(|&v| !v);
        if constant {
            excluded_items.push(block.item_ids()[i].clone());
        } else {
            usable.push(i);
        }
    }
    if usable.len() < 3 {
        return Err(Error::TooFew {
            what: "items with nonzero variance for clustering",
            required: 3,
            actual: usable.len(),
        });
    }

    let n = usable.len();
    let mut d = vec![S::zero(); n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let phi = ctt::phi::<S>(block.item_row(usable[a]), block.item_row(usable[b]))?
                .expect("phi defined for non-constant vectors");
            let dist = S::one() - phi;
            // Clamp rounding spills at the boundary of [0, 2].
            let dist = dist.max(S::zero()).min(S::from_f64_lossy(2.0));
            d[a * n + b] = dist;
            d[b * n + a] = dist;
        }
    }

    Ok(DistanceMatrix {
        item_ids: usable
            .iter()
            .map(|&i| block.item_ids()[i].clone())
            .collect(),
        d,
        excluded_items,
    })
}

/// One medoid-search outcome: medoid indices, per-item cluster labels, and
/// the total distance-to-medoid cost.
#[derive(Debug, Clone, PartialEq)]
pub struct KMedoidsRun<S> {
    /// Indices into the distance matrix, ordered by item id.
    pub medoids: Vec<usize>,
    /// Cluster label per item (position of its medoid in `medoids`).
    pub labels: Vec<usize>,
    pub cost: S,
}

/// PAM k-medoids: greedy BUILD plus best-improvement SWAP, restarted
/// `DEFAULT_RESTARTS` times (first restart greedy, the rest from seeded
/// random initializations); best total cost kept, ties broken by the
/// lexicographically smallest medoid id set.
pub fn kmedoids<S: Scalar>(dist: &DistanceMatrix<S>, k: usize, seed: u64) -> Result<KMedoidsRun<S>> {
    kmedoids_with(dist, k, seed, DEFAULT_RESTARTS)
}

/// [`kmedoids`] with an explicit restart count (≥ 1 effective).
pub fn kmedoids_with<S: Scalar>(
    dist: &DistanceMatrix<S>,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMedoidsRun<S>> {
    let n = dist.n();
    if k < 2 || k > n.saturating_sub(1) {
        return Err(Error::ClusterCountOutOfRange {
            k,
            min: 2,
            max: n.saturating_sub(1),
        });
    }
    Ok(kmedoids_impl(dist, k, seed, restarts))
}

/// Unchecked search core; also used by tests to exercise the k = n boundary.
fn kmedoids_impl<S: Scalar>(
    dist: &DistanceMatrix<S>,
    k: usize,
    seed: u64,
    restarts: usize,
) -> KMedoidsRun<S> {
    let mut best: Option<KMedoidsRun<S>> = None;
    for restart in 0..restarts.max(1) {
        let initial = if restart == 0 {
            build_init(dist, k)
        } else {
            random_init(dist, k, derive_seed(seed, &[restart as u64]))
        };
        let run = swap_to_convergence(dist, initial, k);
        let better = match &best {
            None => true,
            Some(current) => {
                match run.cost.partial_cmp(&current.cost).expect("finite costs") {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => {
                        medoid_ids(dist, &run.medoids) < medoid_ids(dist, &current.medoids)
                    }
                }
            }
        };
        if better {
            best = Some(run);
        }
    }
    best.expect("at least one restart")
}

fn medoid_ids<'a, S>(dist: &'a DistanceMatrix<S>, medoids: &[usize]) -> Vec<&'a str> {
    medoids
        .iter()
        .map(|&m| dist.item_ids[m].as_str())
        .collect()
}

/// Total distance from every item to its nearest medoid.
fn cost_of<S: Scalar>(dist: &DistanceMatrix<S>, medoids: &[usize]) -> S {
    (0..dist.n())
        .map(|i| {
            medoids
                .iter()
                .map(|&m| dist.get(i, m))
                .fold(S::infinity(), S::min)
        })
        .sum()
}

/// Greedy BUILD: start from the most central item, then repeatedly add the
/// item that shrinks the total cost the most (ties to the lowest index).
fn build_init<S: Scalar>(dist: &DistanceMatrix<S>, k: usize) -> Vec<usize> {
    let n = dist.n();
    let first = (0..n)
        .min_by(|&a, &b| {
            let ta: S = (0..n).map(|i| dist.get(i, a)).sum();
            let tb: S = (0..n).map(|i| dist.get(i, b)).sum();
            ta.partial_cmp(&tb).unwrap().then(a.cmp(&b))
        })
        .expect("nonempty matrix");

    let mut medoids = vec![first];
    let mut nearest: Vec<S> = (0..n).map(|i| dist.get(i, first)).collect();
    while medoids.len() < k {
        let candidate = (0..n)
            .filter(|h| !medoids.contains(h))
            .min_by(|&a, &b| {
                let ca: S = (0..n).map(|i| nearest[i].min(dist.get(i, a))).sum();
                let cb: S = (0..n).map(|i| nearest[i].min(dist.get(i, b))).sum();
                ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
            })
            .expect("k < n leaves candidates");
        for (i, near) in nearest.iter_mut().enumerate() {
            *near = near.min(dist.get(i, candidate));
        }
        medoids.push(candidate);
    }
    medoids
}

fn random_init<S: Scalar>(dist: &DistanceMatrix<S>, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, dist.n(), k).into_vec()
}

/// Steepest-descent SWAP phase: apply the best strictly improving
/// medoid/non-medoid exchange until none exists, then canonicalize.
fn swap_to_convergence<S: Scalar>(
    dist: &DistanceMatrix<S>,
    mut medoids: Vec<usize>,
    k: usize,
) -> KMedoidsRun<S> {
    let n = dist.n();
    let mut cost = cost_of(dist, &medoids);
    loop {
        let mut best_delta = S::zero();
        let mut best_swap: Option<(usize, usize)> = None;
        for mi in 0..k {
            for h in 0..n {
                if medoids.contains(&h) {
                    continue;
                }
                let original = medoids[mi];
                medoids[mi] = h;
                let delta = cost_of(dist, &medoids) - cost;
                medoids[mi] = original;
                if delta < best_delta {
                    best_delta = delta;
                    best_swap = Some((mi, h));
                }
            }
        }
        match best_swap {
            Some((mi, h)) => {
                medoids[mi] = h;
                cost = cost + best_delta;
            }
            None => break,
        }
    }

    // Canonical form: medoids ordered by item id, labels = nearest medoid
    // (ties to the lower label), cost recomputed exactly.
    medoids.sort_by(|&a, &b| dist.item_ids[a].cmp(&dist.item_ids[b]));
    let labels: Vec<usize> = (0..n)
        .map(|i| {
            let mut best_label = 0;
            let mut best_d = S::infinity();
            for (label, &m) in medoids.iter().enumerate() {
                let v = dist.get(i, m);
                if v < best_d {
                    best_d = v;
                    best_label = label;
                }
            }
            best_label
        })
        .collect();
    let cost = cost_of(dist, &medoids);
    KMedoidsRun {
        medoids,
        labels,
        cost,
    }
}

/// Mean silhouette of an assignment over a distance matrix.
///
/// Each item scores (b − a) / max(a, b) where a is its mean within-cluster
/// distance and b the smallest mean distance to another cluster; singleton
/// clusters and a = b = 0 both contribute 0.
pub fn silhouette<S: Scalar>(dist: &DistanceMatrix<S>, labels: &[usize]) -> Result<S> {
    let n = dist.n();
    if labels.len() != n {
        return Err(Error::LengthMismatch(labels.len(), n));
    }
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &label) in labels.iter().enumerate() {
        clusters.entry(label).or_default().push(i);
    }
    if clusters.len() < 2 {
        return Err(Error::SingleCluster);
    }

    let mut total = S::zero();
    for (i, &label) in labels.iter().enumerate() {
        let own = &clusters[&label];
        if own.len() == 1 {
            continue; // singleton contributes 0
        }
        let a = own
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| dist.get(i, j))
            .sum::<S>()
            / S::from_usize_lossy(own.len() - 1);
        let b = clusters
            .iter()
            .filter(|(&other, _)| other != label)
            .map(|(_, members)| {
                members.iter().map(|&j| dist.get(i, j)).sum::<S>()
                    / S::from_usize_lossy(members.len())
            })
            .fold(S::infinity(), S::min);
        let denom = a.max(b);
        if denom > S::zero() {
            total = total + (b - a) / denom;
        }
    }
    Ok(total / S::from_usize_lossy(n))
}

/// A complete clustering: chosen k, assignment, medoids, and the silhouette
/// profile over the searched k range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult<S> {
    pub item_ids: Vec<String>,
    pub k: usize,
    /// Cluster label per item, aligned with `item_ids`.
    pub labels: Vec<usize>,
    /// item id → cluster label, for serialization and lookups.
    pub assignment: BTreeMap<String, usize>,
    pub medoids: Vec<String>,
    pub silhouette_by_k: BTreeMap<usize, S>,
    pub excluded_items: Vec<String>,
}

impl<S: Scalar> ClusterResult<S> {
    /// Whether two items landed in the same cluster.
    pub fn co_member(&self, i: usize, j: usize) -> bool {
        self.labels[i] == self.labels[j]
    }

    /// Upper-triangle (i < j) co-membership indicators in item order.
    pub fn pair_vector(&self) -> Vec<bool> {
        let n = self.item_ids.len();
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                pairs.push(self.labels[i] == self.labels[j]);
            }
        }
        pairs
    }
}

/// Cluster a distance matrix, selecting k by mean silhouette over
/// `k_min..=k_max` (capped at n − 1); silhouette ties pick the smaller k.
pub fn cluster_items<S: Scalar>(
    dist: &DistanceMatrix<S>,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<ClusterResult<S>> {
    cluster_items_with(dist, k_min, k_max, seed, DEFAULT_RESTARTS)
}

/// [`cluster_items`] with an explicit restart count per candidate k.
pub fn cluster_items_with<S: Scalar>(
    dist: &DistanceMatrix<S>,
    k_min: usize,
    k_max: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterResult<S>> {
    let n = dist.n();
    if n < 3 {
        return Err(Error::TooFew {
            what: "items for clustering",
            required: 3,
            actual: n,
        });
    }
    let k_lo = k_min.max(2);
    let k_hi = k_max.min(n - 1);
    if k_lo > k_hi {
        return Err(Error::ClusterCountOutOfRange {
            k: k_lo,
            min: 2,
            max: k_hi,
        });
    }

    let mut silhouette_by_k = BTreeMap::new();
    let mut best: Option<(S, usize, KMedoidsRun<S>)> = None;
    for k in k_lo..=k_hi {
        let run = kmedoids_with(dist, k, derive_seed(seed, &[k as u64]), restarts)?;
        let score = silhouette(dist, &run.labels)?;
        silhouette_by_k.insert(k, score);
        let improves = match &best {
            None => true,
            Some((best_score, _, _)) => score > *best_score,
        };
        if improves {
            best = Some((score, k, run));
        }
    }
    let (_, k, run) = best.expect("nonempty k range");

    let assignment: BTreeMap<String, usize> = dist
        .item_ids
        .iter()
        .cloned()
        .zip(run.labels.iter().copied())
        .collect();
    Ok(ClusterResult {
        item_ids: dist.item_ids.clone(),
        k,
        labels: run.labels,
        assignment,
        medoids: run
            .medoids
            .iter()
            .map(|&m| dist.item_ids[m].clone())
            .collect(),
        silhouette_by_k,
        excluded_items: dist.excluded_items.clone(),
    })
}

/// Agreement between two clusterings of (mostly) the same items.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterComparison<S> {
    /// Pearson over the common items' upper-triangle co-membership vectors.
    pub correlation: CorrelationResult<S>,
    pub n_common_items: usize,
    /// Items present only in the reference clustering.
    pub dropped_ref: Vec<String>,
    /// Items present only in the other clustering.
    pub dropped_other: Vec<String>,
}

/// Pearson correlation of co-membership over the items shared by both
/// clusterings, with the default t-approximation p-value.
pub fn compare_clusterings<S: Scalar>(
    reference: &ClusterResult<S>,
    other: &ClusterResult<S>,
) -> Result<ClusterComparison<S>> {
    compare_clusterings_with(reference, other, PValueSpec::TApprox)
}

/// Co-membership comparison with an explicit p-value method.
pub fn compare_clusterings_with<S: Scalar>(
    reference: &ClusterResult<S>,
    other: &ClusterResult<S>,
    p_spec: PValueSpec,
) -> Result<ClusterComparison<S>> {
    let common: Vec<&String> = reference
        .item_ids
        .iter()
        .filter(|id| other.assignment.contains_key(*id))
        .collect();
    if common.len() < 3 {
        return Err(Error::TooFew {
            what: "items shared by both clusterings",
            required: 3,
            actual: common.len(),
        });
    }
    let dropped_ref: Vec<String> = reference
        .item_ids
        .iter()
        .filter(|id| !other.assignment.contains_key(*id))
        .cloned()
        .collect();
    let dropped_other: Vec<String> = other
        .item_ids
        .iter()
        .filter(|id| !reference.assignment.contains_key(*id))
        .cloned()
        .collect();

    let to_pairs = |result: &ClusterResult<S>| -> Vec<S> {
        let labels: Vec<usize> = common.iter().map(|id| result.assignment[*id]).collect();
        let mut pairs = Vec::with_capacity(common.len() * (common.len() - 1) / 2);
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                pairs.push(if labels[i] == labels[j] {
                    S::one()
                } else {
                    S::zero()
                });
            }
        }
        pairs
    };

    let correlation = stats::correlate(
        &to_pairs(reference),
        &to_pairs(other),
        Method::Pearson,
        p_spec,
    )?;
    Ok(ClusterComparison {
        correlation,
        n_common_items: common.len(),
        dropped_ref,
        dropped_other,
    })
}
