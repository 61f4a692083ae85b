//! Cross-population comparison reports: per-category difficulty
//! correlations, clustering co-membership correlations, latent-trait
//! difficulty correlations, and per-architecture correlation deltas.
//!
//! Every report is a pure function of the matrix, configuration, and seed;
//! rows come out sorted by (category, measure, population) so serialized
//! output is reproducible byte for byte.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{self, DEFAULT_K_MAX};
use crate::corpus::{PopulationSlice, ResponseMatrix, Selector};
use crate::ctt;
use crate::error::{Error, Result};
use crate::irt::{self, RaschConfig};
use crate::rng::derive_seed_str;
use crate::scalar::Scalar;
use crate::stats::{CorrelationResult, PValueSpec};

/// Spearman correlation of classical difficulty vectors.
pub const MEASURE_DIFFICULTY: &str = "difficulty_spearman";
/// Pearson correlation of clustering co-membership vectors.
pub const MEASURE_CLUSTER: &str = "cluster_pearson";
/// Pearson correlation of fitted Rasch difficulty vectors.
pub const MEASURE_RASCH: &str = "rasch_pearson";

/// Flag a comparison as small-sample below this many respondents.
pub const SMALL_N_THRESHOLD: usize = 10;

/// One (category, measure, population) comparison against the reference
/// population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow<S> {
    pub category: String,
    pub measure: String,
    /// The non-reference population of the pair.
    pub population: String,
    pub r: Option<S>,
    pub p: Option<S>,
    /// Items entering the comparison, after exclusions.
    pub n_items: usize,
    pub warnings: Vec<String>,
    /// Whether this row attains the largest |r| within its
    /// (category, measure) group — presentation data, recomputed whenever
    /// the population set changes.
    pub is_max_abs: bool,
}

/// A finished report: sorted rows plus the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport<S> {
    pub reference_population: String,
    pub rows: Vec<ReportRow<S>>,
    /// Echo of the inputs that shaped the computation (seeds, fit settings).
    pub metadata: BTreeMap<String, String>,
}

/// Per-architecture correlation shift for one category: the architecture
/// slice's correlation minus the whole group's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureDelta<S> {
    pub architecture: String,
    pub category: String,
    pub delta_r: Option<S>,
    pub warnings: Vec<String>,
}

fn warn_correlation<S: Scalar>(result: &CorrelationResult<S>, warnings: &mut Vec<String>) {
    if result.r.is_none() {
        warnings.push("undefined_correlation".to_string());
    }
    if result.saturated {
        warnings.push("p_saturated".to_string());
    }
}

/// Flag the largest |r| per (category, measure) group; ties all flagged.
fn mark_max_abs<S: Scalar>(rows: &mut [ReportRow<S>]) {
    let mut best: BTreeMap<(String, String), S> = BTreeMap::new();
    for row in rows.iter() {
        if let Some(r) = row.r {
            let key = (row.category.clone(), row.measure.clone());
            let entry = best.entry(key).or_insert_with(|| r.abs());
            *entry = entry.max(r.abs());
        }
    }
    for row in rows.iter_mut() {
        row.is_max_abs = match row.r {
            Some(r) => {
                best.get(&(row.category.clone(), row.measure.clone()))
                    .is_some_and(|&max| r.abs() == max)
            }
            None => false,
        };
    }
}

fn sort_rows<S>(rows: &mut [ReportRow<S>]) {
    rows.sort_by(|a, b| {
        (&a.category, &a.measure, &a.population).cmp(&(&b.category, &b.measure, &b.population))
    });
}

fn sorted_categories(matrix: &ResponseMatrix) -> Vec<String> {
    let mut categories = matrix.categories();
    categories.sort();
    categories
}

fn population_slice(matrix: &ResponseMatrix, population: &str) -> Result<PopulationSlice> {
    matrix.slice(&Selector::population(population))
}

/// Classical difficulty comparison (Spearman) per category, each other
/// population against the reference, default p-value method.
pub fn table1_report<S: Scalar>(
    matrix: &ResponseMatrix,
    reference_population: &str,
    other_populations: &[String],
) -> Result<ComparisonReport<S>> {
    table1_report_with(matrix, reference_population, other_populations, PValueSpec::TApprox)
}

/// Difficulty comparison with an explicit p-value method.
pub fn table1_report_with<S: Scalar>(
    matrix: &ResponseMatrix,
    reference_population: &str,
    other_populations: &[String],
    p_spec: PValueSpec,
) -> Result<ComparisonReport<S>> {
    let ref_slice = population_slice(matrix, reference_population)?;
    let mut rows = Vec::new();
    for category in sorted_categories(matrix) {
        let d_ref = ctt::difficulty::<S>(matrix, &ref_slice, &category)?;
        for other in other_populations {
            let other_slice = population_slice(matrix, other)?;
            let d_other = ctt::difficulty::<S>(matrix, &other_slice, &category)?;
            let result = ctt::compare_difficulty_with(&d_ref, &d_other, p_spec)?;
            let mut warnings = Vec::new();
            warn_correlation(&result, &mut warnings);
            rows.push(ReportRow {
                category: category.clone(),
                measure: MEASURE_DIFFICULTY.to_string(),
                population: other.clone(),
                r: result.r,
                p: result.p_value,
                n_items: d_ref.item_ids.len(),
                warnings,
                is_max_abs: false,
            });
        }
    }
    sort_rows(&mut rows);
    mark_max_abs(&mut rows);
    Ok(ComparisonReport {
        reference_population: reference_population.to_string(),
        rows,
        metadata: BTreeMap::new(),
    })
}

/// Derive the clustering seed for one (category, population) cell so cells
/// are independent and reproducible in isolation.
fn cell_seed(seed: u64, category: &str, population: &str) -> u64 {
    derive_seed_str(derive_seed_str(seed, category), population)
}

fn cluster_cell<S: Scalar>(
    matrix: &ResponseMatrix,
    population: &str,
    category: &str,
    seed: u64,
) -> Result<cluster::ClusterResult<S>> {
    let slice = population_slice(matrix, population)?;
    let dist = cluster::distance_matrix::<S>(matrix, &slice, category)?;
    cluster::cluster_items(&dist, 2, DEFAULT_K_MAX, cell_seed(seed, category, population))
}

/// Clustering co-membership comparison (Pearson) per category, each other
/// population against the reference. Cells whose clustering or comparison
/// fails produce a row with an empty correlation and a warning rather than
/// aborting the report.
pub fn table2_report<S: Scalar>(
    matrix: &ResponseMatrix,
    reference_population: &str,
    other_populations: &[String],
    seed: u64,
) -> Result<ComparisonReport<S>> {
    table2_report_with(
        matrix,
        reference_population,
        other_populations,
        seed,
        PValueSpec::TApprox,
    )
}

/// Clustering comparison with an explicit p-value method.
pub fn table2_report_with<S: Scalar>(
    matrix: &ResponseMatrix,
    reference_population: &str,
    other_populations: &[String],
    seed: u64,
    p_spec: PValueSpec,
) -> Result<ComparisonReport<S>> {
    // Ensure the reference population exists before emitting failure rows.
    population_slice(matrix, reference_population)?;
    let categories = sorted_categories(matrix);

    // All cells (reference included) cluster in parallel; rows assemble
    // sequentially in sorted order.
    let mut cells: Vec<(String, String)> = Vec::new();
    for category in &categories {
        cells.push((category.clone(), reference_population.to_string()));
        for other in other_populations {
            cells.push((category.clone(), other.clone()));
        }
    }
    let clustered: BTreeMap<(String, String), Result<cluster::ClusterResult<S>>> = cells
        .par_iter()
        .map(|(category, population)| {
            let result = cluster_cell(matrix, population, category, seed);
            ((category.clone(), population.clone()), result)
        })
        .collect();

    let mut rows = Vec::new();
    for category in &categories {
        let reference = &clustered[&(category.clone(), reference_population.to_string())];
        for other in other_populations {
            let mut warnings = Vec::new();
            let mut r = None;
            let mut p = None;
            let mut n_items = 0;
            match (reference, &clustered[&(category.clone(), other.clone())]) {
                (Ok(ref_result), Ok(other_result)) => {
                    match cluster::compare_clusterings_with(ref_result, other_result, p_spec) {
                        Ok(comparison) => {
                            warn_correlation(&comparison.correlation, &mut warnings);
                            let dropped =
                                comparison.dropped_ref.len() + comparison.dropped_other.len();
                            if dropped > 0 {
                                warnings.push(format!("dropped_items:{dropped}"));
                            }
                            let excluded = ref_result.excluded_items.len()
                                + other_result.excluded_items.len();
                            if excluded > 0 {
                                warnings.push(format!("excluded_items:{excluded}"));
                            }
                            r = comparison.correlation.r;
                            p = comparison.correlation.p_value;
                            n_items = comparison.n_common_items;
                        }
                        Err(_) => warnings.push("comparison_failed".to_string()),
                    }
                }
                _ => warnings.push("clustering_failed".to_string()),
            }
            rows.push(ReportRow {
                category: category.clone(),
                measure: MEASURE_CLUSTER.to_string(),
                population: other.clone(),
                r,
                p,
                n_items,
                warnings,
                is_max_abs: false,
            });
        }
    }
    sort_rows(&mut rows);
    mark_max_abs(&mut rows);
    let mut metadata = BTreeMap::new();
    metadata.insert("seed".to_string(), seed.to_string());
    Ok(ComparisonReport {
        reference_population: reference_population.to_string(),
        rows,
        metadata,
    })
}

/// Rasch difficulty comparison (Pearson) per category, each other
/// population against the reference. Fit errors propagate: a population
/// that cannot be fitted is a request problem, not a data artifact.
pub fn table3_report<S: Scalar>(
    matrix: &ResponseMatrix,
    reference_population: &str,
    other_populations: &[String],
    config: &RaschConfig<S>,
) -> Result<ComparisonReport<S>> {
    table3_report_with(
        matrix,
        reference_population,
        other_populations,
        config,
        PValueSpec::TApprox,
    )
}

/// Rasch comparison with an explicit p-value method.
pub fn table3_report_with<S: Scalar>(
    matrix: &ResponseMatrix,
    reference_population: &str,
    other_populations: &[String],
    config: &RaschConfig<S>,
    p_spec: PValueSpec,
) -> Result<ComparisonReport<S>> {
    let categories = sorted_categories(matrix);
    let mut populations: Vec<String> = vec![reference_population.to_string()];
    for other in other_populations {
        if !populations.contains(other) {
            populations.push(other.clone());
        }
    }
    let mut cells: Vec<(String, String)> = Vec::new();
    for category in &categories {
        for population in &populations {
            cells.push((category.clone(), population.clone()));
        }
    }
    let fits: BTreeMap<(String, String), irt::RaschFit<S>> = cells
        .par_iter()
        .map(|(category, population)| {
            let slice = population_slice(matrix, population)?;
            let fit = irt::fit_rasch(matrix, &slice, category, config)?;
            Ok(((category.clone(), population.clone()), fit))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for category in &categories {
        let ref_fit = &fits[&(category.clone(), reference_population.to_string())];
        for other in other_populations {
            let other_fit = &fits[&(category.clone(), other.clone())];
            let comparison = irt::compare_rasch_difficulty_with(ref_fit, other_fit, p_spec)?;
            let mut warnings = Vec::new();
            warn_correlation(&comparison.correlation, &mut warnings);
            if !comparison.clamped.is_empty() {
                warnings.push(format!("clamped_items:{}", comparison.clamped.len()));
            }
            if !ref_fit.converged || !other_fit.converged {
                warnings.push("not_converged".to_string());
            }
            rows.push(ReportRow {
                category: category.clone(),
                measure: MEASURE_RASCH.to_string(),
                population: other.clone(),
                r: comparison.correlation.r,
                p: comparison.correlation.p_value,
                n_items: ref_fit.item_ids.len(),
                warnings,
                is_max_abs: false,
            });
        }
    }
    sort_rows(&mut rows);
    mark_max_abs(&mut rows);
    let mut metadata = BTreeMap::new();
    metadata.insert("n_quad".to_string(), config.n_quad.to_string());
    metadata.insert("tol".to_string(), format!("{}", config.tol));
    metadata.insert("max_iter".to_string(), config.max_iter.to_string());
    metadata.insert(
        "estimate_shared_a".to_string(),
        config.estimate_shared_a.to_string(),
    );
    Ok(ComparisonReport {
        reference_population: reference_population.to_string(),
        rows,
        metadata,
    })
}

/// Per-architecture difficulty-correlation deltas against the whole group:
/// for each architecture and category, Spearman(reference, architecture
/// slice) minus Spearman(reference, full group). Rows are sorted by
/// (architecture, category); an architecture with no respondents yields
/// rows flagged `empty_slice` instead of failing the report.
pub fn architecture_delta<S: Scalar>(
    matrix: &ResponseMatrix,
    reference_population: &str,
    group_tag: &str,
    architectures: &[String],
) -> Result<Vec<ArchitectureDelta<S>>> {
    let ref_slice = population_slice(matrix, reference_population)?;
    let group_slice = population_slice(matrix, group_tag)?;
    let categories = sorted_categories(matrix);

    let mut group_r: BTreeMap<String, Option<S>> = BTreeMap::new();
    let mut ref_difficulty = BTreeMap::new();
    for category in &categories {
        let d_ref = ctt::difficulty::<S>(matrix, &ref_slice, category)?;
        let d_group = ctt::difficulty::<S>(matrix, &group_slice, category)?;
        let result = ctt::compare_difficulty(&d_ref, &d_group)?;
        group_r.insert(category.clone(), result.r);
        ref_difficulty.insert(category.clone(), d_ref);
    }

    let mut rows = Vec::new();
    let mut sorted_architectures = architectures.to_vec();
    sorted_architectures.sort();
    sorted_architectures.dedup();
    for architecture in &sorted_architectures {
        let selector = Selector::population(group_tag).with_architecture(architecture);
        let slice = match matrix.slice(&selector) {
            Ok(slice) => slice,
            Err(Error::EmptySlice(_)) => {
                for category in &categories {
                    rows.push(ArchitectureDelta {
                        architecture: architecture.clone(),
                        category: category.clone(),
                        delta_r: None,
                        warnings: vec!["empty_slice".to_string()],
                    });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        let small = slice.len() < SMALL_N_THRESHOLD;
        for category in &categories {
            let mut warnings = Vec::new();
            if small {
                warnings.push("small_n".to_string());
            }
            let d_arch = ctt::difficulty::<S>(matrix, &slice, category)?;
            let result = ctt::compare_difficulty(&ref_difficulty[category], &d_arch)?;
            let delta_r = match (result.r, group_r[category]) {
                (Some(arch_r), Some(full_r)) => Some(arch_r - full_r),
                _ => {
                    warnings.push("undefined_correlation".to_string());
                    None
                }
            };
            rows.push(ArchitectureDelta {
                architecture: architecture.clone(),
                category: category.clone(),
                delta_r,
                warnings,
            });
        }
    }
    Ok(rows)
}
