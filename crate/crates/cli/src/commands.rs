//! Implementations of the seven subcommands. Each one reads its inputs,
//! computes with the library, creates the output directory, echoes the
//! effective configuration there, and writes result files. Diagnostics go to
//! stderr so stdout stays reserved for machine-readable summaries.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use itemetrics::cluster;
use itemetrics::corpus::{
    self, FileFormat, ItemRecord, PopulationSlice, RespondentRecord, ResponseMatrix, Selector,
};
use itemetrics::ctt;
use itemetrics::irt::{self, ItemParams, RaschConfig};
use itemetrics::report::{self, ComparisonReport};
use itemetrics::rng::{derive_seed, derive_seed_str};
use itemetrics::screen::{self, Verdict};
use itemetrics::simul::{self, PopulationKind, PopulationSpec, WorkerPoolSpec};
use serde::{Deserialize, Serialize};

use crate::config::{OutputFormat, RunConfig};
use crate::output::{file_error, formatted_path, safe_component, write_csv, write_json};
use crate::CliError;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Create the output directory and echo the effective configuration into it,
/// so every run records exactly what produced its files.
fn prepare_out(cfg: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&cfg.out).map_err(|e| file_error(&cfg.out, e))?;
    write_json(&cfg.out.join("run_config.json"), cfg)
}

fn load_corpus(cfg: &RunConfig) -> Result<(Vec<ItemRecord>, Vec<RespondentRecord>), CliError> {
    let items_path = cfg
        .items
        .as_deref()
        .ok_or_else(|| CliError::Invalid("an item table is required (--items or config)".into()))?;
    let responses_path = cfg.responses.as_deref().ok_or_else(|| {
        CliError::Invalid("a response table is required (--responses or config)".into())
    })?;
    let items = corpus::load_items(items_path, FileFormat::from_path(items_path))?;
    let respondents =
        corpus::load_responses(responses_path, FileFormat::from_path(responses_path), &items)?;
    Ok((items, respondents))
}

fn load_matrix(cfg: &RunConfig) -> Result<ResponseMatrix, CliError> {
    let (items, respondents) = load_corpus(cfg)?;
    Ok(corpus::score(&items, &respondents)?)
}

/// Populations to analyze: the configured list (validated against the data,
/// first mention wins) or every population present.
fn selected_populations(cfg: &RunConfig, matrix: &ResponseMatrix) -> Result<Vec<String>, CliError> {
    let available = matrix.populations();
    if cfg.populations.is_empty() {
        return Ok(available);
    }
    let mut seen = Vec::new();
    for p in &cfg.populations {
        if !available.contains(p) {
            return Err(CliError::Invalid(format!(
                "population {p:?} is not present in the responses (have: {})",
                available.join(", ")
            )));
        }
        if !seen.contains(p) {
            seen.push(p.clone());
        }
    }
    Ok(seen)
}

fn slice_for(
    cfg: &RunConfig,
    matrix: &ResponseMatrix,
    population: &str,
) -> Result<PopulationSlice, CliError> {
    let mut selector = Selector::population(population);
    if let Some(arch) = &cfg.architecture {
        selector = selector.with_architecture(arch.clone());
    }
    Ok(matrix.slice(&selector)?)
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct IngestSummary {
    n_items: usize,
    n_respondents: usize,
    categories: Vec<String>,
    populations: Vec<String>,
}

/// Validate a corpus end to end and write a normalized copy of it in the
/// requested format, plus a one-line JSON summary on stdout.
pub fn ingest(cfg: &RunConfig) -> Result<(), CliError> {
    let (items, respondents) = load_corpus(cfg)?;
    let matrix = corpus::score(&items, &respondents)?;
    prepare_out(cfg)?;
    match cfg.format {
        OutputFormat::Csv => {
            corpus::write_items_csv(&cfg.out.join("items.csv"), &items)?;
            corpus::write_responses_csv(&cfg.out.join("responses.csv"), &respondents)?;
        }
        OutputFormat::Json => {
            corpus::write_items_json(&cfg.out.join("items.json"), &items)?;
            corpus::write_responses_json(&cfg.out.join("responses.json"), &respondents)?;
        }
    }
    let summary = IngestSummary {
        n_items: matrix.n_items(),
        n_respondents: matrix.n_respondents(),
        categories: matrix.categories(),
        populations: matrix.populations(),
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

// ---------------------------------------------------------------------------
// difficulty
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct DifficultyRow {
    category: String,
    item_id: String,
    population: String,
    difficulty: f64,
}

pub fn difficulty(cfg: &RunConfig) -> Result<(), CliError> {
    let matrix = load_matrix(cfg)?;
    let populations = selected_populations(cfg, &matrix)?;
    let mut rows = Vec::new();
    for population in &populations {
        let slice = slice_for(cfg, &matrix, population)?;
        for category in matrix.categories() {
            let d = ctt::difficulty::<f64>(&matrix, &slice, &category)?;
            rows.extend(d.item_ids.iter().zip(&d.values).map(|(id, v)| DifficultyRow {
                category: category.clone(),
                item_id: id.clone(),
                population: population.clone(),
                difficulty: *v,
            }));
        }
    }
    prepare_out(cfg)?;
    let path = formatted_path(&cfg.out, "difficulty", cfg.format.extension());
    match cfg.format {
        OutputFormat::Csv => write_csv(&path, &rows)?,
        OutputFormat::Json => write_json(&path, &rows)?,
    }
    eprintln!(
        "difficulty: {} rows ({} populations x {} categories) -> {}",
        rows.len(),
        populations.len(),
        matrix.categories().len(),
        path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ClusterCell {
    category: String,
    population: String,
    k: usize,
    silhouette_by_k: BTreeMap<usize, f64>,
    assignment: BTreeMap<String, usize>,
    medoids: Vec<String>,
    excluded_items: Vec<String>,
}

#[derive(Serialize)]
struct PairRow {
    item_a: String,
    item_b: String,
    co_member: bool,
}

pub fn cluster_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let matrix = load_matrix(cfg)?;
    let populations = selected_populations(cfg, &matrix)?;
    prepare_out(cfg)?;
    let mut cells = Vec::new();
    for population in &populations {
        let slice = slice_for(cfg, &matrix, population)?;
        for category in matrix.categories() {
            let dist = cluster::distance_matrix::<f64>(&matrix, &slice, &category)?;
            let seed = derive_seed_str(derive_seed_str(cfg.seed, &category), population);
            let result =
                cluster::cluster_items_with(&dist, cfg.k_min, cfg.k_max, seed, cfg.restarts)?;
            let mut pairs = Vec::new();
            for (i, a) in result.item_ids.iter().enumerate() {
                for (j, b) in result.item_ids.iter().enumerate().skip(i + 1) {
                    pairs.push(PairRow {
                        item_a: a.clone(),
                        item_b: b.clone(),
                        co_member: result.labels[i] == result.labels[j],
                    });
                }
            }
            let pairs_path = cfg.out.join(format!(
                "pairs_{}_{}.csv",
                safe_component(&category),
                safe_component(population)
            ));
            write_csv(&pairs_path, &pairs)?;
            cells.push(ClusterCell {
                category: category.clone(),
                population: population.clone(),
                k: result.k,
                silhouette_by_k: result.silhouette_by_k,
                assignment: result.assignment,
                medoids: result.medoids,
                excluded_items: result.excluded_items,
            });
        }
    }
    write_json(&cfg.out.join("clusters.json"), &cells)?;
    eprintln!(
        "cluster: {} category/population cells -> {}",
        cells.len(),
        cfg.out.join("clusters.json").display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// irt
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct IrtRow {
    category: String,
    population: String,
    item_id: String,
    b: f64,
    clamped: bool,
}

#[derive(Serialize)]
struct FitSummary {
    category: String,
    population: String,
    a_shared: f64,
    log_likelihood: f64,
    n_iterations: usize,
    converged: bool,
    config: RaschConfig<f64>,
}

pub fn irt_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let matrix = load_matrix(cfg)?;
    let populations = selected_populations(cfg, &matrix)?;
    let rasch = cfg.rasch_config();
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for population in &populations {
        let slice = slice_for(cfg, &matrix, population)?;
        for category in matrix.categories() {
            let fit = irt::fit_rasch::<f64>(&matrix, &slice, &category, &rasch)?;
            if !fit.converged {
                eprintln!(
                    "warning: fit for {category}/{population} stopped at the iteration cap \
                     without meeting the tolerance"
                );
            }
            rows.extend(fit.item_ids.iter().zip(&fit.b).map(|(id, b)| IrtRow {
                category: category.clone(),
                population: population.clone(),
                item_id: id.clone(),
                b: *b,
                clamped: fit.clamped_items.contains(id),
            }));
            summaries.push(FitSummary {
                category: category.clone(),
                population: population.clone(),
                a_shared: fit.a_shared,
                log_likelihood: fit.log_likelihood,
                n_iterations: fit.n_iterations,
                converged: fit.converged,
                config: rasch,
            });
        }
    }
    prepare_out(cfg)?;
    let path = formatted_path(&cfg.out, "irt", cfg.format.extension());
    match cfg.format {
        OutputFormat::Csv => write_csv(&path, &rows)?,
        OutputFormat::Json => write_json(&path, &rows)?,
    }
    write_json(&cfg.out.join("irt_summary.json"), &summaries)?;
    eprintln!(
        "irt: {} item rows across {} fits -> {}",
        rows.len(),
        summaries.len(),
        path.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ReportCsvRow {
    category: String,
    measure: String,
    population: String,
    r: Option<f64>,
    p: Option<f64>,
    n_items: usize,
    warnings: String,
    is_max_abs: bool,
}

#[derive(Serialize)]
struct HeatmapRow {
    architecture: String,
    category: String,
    delta_r: Option<f64>,
}

fn report_rows(report: &ComparisonReport<f64>) -> Vec<ReportCsvRow> {
    report
        .rows
        .iter()
        .map(|row| ReportCsvRow {
            category: row.category.clone(),
            measure: row.measure.clone(),
            population: row.population.clone(),
            r: row.r,
            p: row.p,
            n_items: row.n_items,
            warnings: row.warnings.join(";"),
            is_max_abs: row.is_max_abs,
        })
        .collect()
}

fn write_report(cfg: &RunConfig, name: &str, report: &ComparisonReport<f64>) -> Result<(), CliError> {
    let path = formatted_path(&cfg.out, name, cfg.format.extension());
    match cfg.format {
        OutputFormat::Csv => write_csv(&path, &report_rows(report))?,
        OutputFormat::Json => write_json(&path, report)?,
    }
    Ok(())
}

pub fn compare(cfg: &RunConfig, heatmap_group: Option<&str>) -> Result<(), CliError> {
    let matrix = load_matrix(cfg)?;
    let reference = cfg.reference.as_deref().ok_or_else(|| {
        CliError::Invalid("a reference population is required (--reference or config)".into())
    })?;
    let populations = selected_populations(cfg, &matrix)?;
    if !matrix.populations().iter().any(|p| p == reference) {
        return Err(CliError::Invalid(format!(
            "reference population {reference:?} is not present in the responses"
        )));
    }
    let others: Vec<String> = populations.into_iter().filter(|p| p != reference).collect();
    if others.is_empty() {
        return Err(CliError::Invalid(
            "no populations to compare against the reference".into(),
        ));
    }
    let p_spec = cfg.p_spec();
    let table1 = report::table1_report_with::<f64>(&matrix, reference, &others, p_spec)?;
    let table2 =
        report::table2_report_with::<f64>(&matrix, reference, &others, cfg.seed, p_spec)?;
    let table3 = report::table3_report_with::<f64>(
        &matrix,
        reference,
        &others,
        &cfg.rasch_config(),
        p_spec,
    )?;
    prepare_out(cfg)?;
    for (name, report) in [
        ("table1", &table1),
        ("table2", &table2),
        ("table3", &table3),
    ] {
        write_report(cfg, name, report)?;
        for row in &report.rows {
            for warning in &row.warnings {
                eprintln!(
                    "warning: {name} {}/{}/{}: {warning}",
                    row.category, row.measure, row.population
                );
            }
        }
    }
    if let Some(group) = heatmap_group {
        let architectures = matrix.architectures(group);
        if architectures.is_empty() {
            return Err(CliError::Invalid(format!(
                "population {group:?} has no architecture tags to break out"
            )));
        }
        let deltas =
            report::architecture_delta::<f64>(&matrix, reference, group, &architectures)?;
        let rows: Vec<HeatmapRow> = deltas
            .iter()
            .map(|d| HeatmapRow {
                architecture: d.architecture.clone(),
                category: d.category.clone(),
                delta_r: d.delta_r,
            })
            .collect();
        for d in &deltas {
            for warning in &d.warnings {
                eprintln!("warning: heatmap {}/{}: {warning}", d.architecture, d.category);
            }
        }
        write_csv(&cfg.out.join("heatmap.csv"), &rows)?;
    }
    eprintln!(
        "compare: reference {reference:?} vs {} population(s) -> {}",
        others.len(),
        cfg.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// A self-contained description of a synthetic study: the item bank plus any
/// number of response-generating populations and an optional staffed pool.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    items: Vec<ItemRecord>,
    #[serde(default)]
    populations: Vec<PopulationSpec<f64>>,
    #[serde(default)]
    pool: Option<WorkerPoolSpec<f64>>,
}

#[derive(Serialize)]
struct RoleRow {
    respondent_id: String,
    role: String,
}

fn kind_tag(kind: &PopulationKind<f64>) -> &'static str {
    match kind {
        PopulationKind::Irt { .. } => "irt",
        PopulationKind::RandomGuess => "random_guess",
        PopulationKind::ConstantLabel { .. } => "constant_label",
        PopulationKind::BadFaithMix { .. } => "bad_faith_mix",
    }
}

fn check_params(params: &[ItemParams<f64>], context: &str) -> Result<(), CliError> {
    for (i, p) in params.iter().enumerate() {
        let ok = p.a().is_finite()
            && p.a() > 0.0
            && p.b().is_finite()
            && p.c().is_finite()
            && (0.0..1.0).contains(&p.c());
        if !ok {
            return Err(CliError::Invalid(format!(
                "{context}: item parameter {i} is out of range \
                 (need a > 0, finite b, 0 <= c < 1)"
            )));
        }
    }
    Ok(())
}

fn check_kind(kind: &PopulationKind<f64>, context: &str) -> Result<(), CliError> {
    match kind {
        PopulationKind::Irt { item_params, .. } => check_params(item_params, context),
        PopulationKind::BadFaithMix { components } => {
            for c in components {
                check_kind(&c.kind, context)?;
            }
            Ok(())
        }
        PopulationKind::RandomGuess | PopulationKind::ConstantLabel { .. } => Ok(()),
    }
}

pub fn simulate(cfg: &RunConfig, spec_path: &Path, seed_flag: Option<u64>) -> Result<(), CliError> {
    let text = fs::read_to_string(spec_path).map_err(|e| file_error(spec_path, e))?;
    let mut scenario: Scenario = serde_json::from_str(&text).map_err(|e| {
        CliError::Invalid(format!("{}: invalid scenario: {e}", spec_path.display()))
    })?;
    if scenario.items.is_empty() {
        return Err(CliError::Invalid("scenario defines no items".into()));
    }
    if scenario.populations.is_empty() && scenario.pool.is_none() {
        return Err(CliError::Invalid(
            "scenario defines neither populations nor a worker pool".into(),
        ));
    }
    for spec in &scenario.populations {
        check_kind(&spec.kind, &format!("population {:?}", spec.population))?;
    }
    if let Some(pool) = &scenario.pool {
        check_params(&pool.item_params, "worker pool")?;
    }
    // An explicit --seed overrides every embedded stream seed so one flag
    // reproduces (or varies) the whole scenario.
    if let Some(seed) = seed_flag {
        for (i, spec) in scenario.populations.iter_mut().enumerate() {
            spec.seed = derive_seed(seed, &[1, i as u64]);
        }
        if let Some(pool) = &mut scenario.pool {
            pool.seed = derive_seed(seed, &[2]);
        }
    }
    let mut respondents = Vec::new();
    let mut roles = Vec::new();
    for spec in &scenario.populations {
        let generated = simul::generate(spec, &scenario.items)?;
        let tag = kind_tag(&spec.kind);
        roles.extend(generated.iter().map(|r| RoleRow {
            respondent_id: r.respondent_id.clone(),
            role: tag.to_string(),
        }));
        respondents.extend(generated);
    }
    if let Some(pool) = &scenario.pool {
        let (records, pool_roles) = simul::generate_worker_pool(pool, &scenario.items)?;
        roles.extend(pool_roles.iter().map(|r| RoleRow {
            respondent_id: r.respondent_id.clone(),
            role: r.role.as_str().to_string(),
        }));
        respondents.extend(records);
    }
    // Scoring proves the generated corpus is internally consistent (unique
    // ids, known items) before anything lands on disk.
    let matrix = corpus::score(&scenario.items, &respondents)?;
    prepare_out(cfg)?;
    corpus::write_items_csv(&cfg.out.join("items.csv"), &scenario.items)?;
    corpus::write_responses_csv(&cfg.out.join("responses.csv"), &respondents)?;
    write_csv(&cfg.out.join("roles.csv"), &roles)?;
    eprintln!(
        "simulate: {} items, {} respondents ({} populations{}) -> {}",
        scenario.items.len(),
        matrix.n_respondents(),
        scenario.populations.len(),
        if scenario.pool.is_some() { " + worker pool" } else { "" },
        cfg.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// screen
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct ScreenRow {
    respondent_id: String,
    verdict: String,
    stage: u8,
    reasons: String,
}

#[derive(Serialize)]
struct ReviewRow {
    respondent_id: String,
    item_id: String,
    justification: String,
}

pub fn screen_cmd(cfg: &RunConfig) -> Result<(), CliError> {
    let (items, respondents) = load_corpus(cfg)?;
    let matrix = corpus::score(&items, &respondents)?;
    let decisions = screen::screen_all(&matrix);
    let rows: Vec<ScreenRow> = decisions
        .iter()
        .map(|d| ScreenRow {
            respondent_id: d.respondent_id.clone(),
            verdict: d.verdict.as_str().to_string(),
            stage: d.stage_reached,
            reasons: d.reasons.join(";"),
        })
        .collect();
    let by_id: BTreeMap<&str, &RespondentRecord> = respondents
        .iter()
        .map(|r| (r.respondent_id.as_str(), r))
        .collect();
    let mut review = Vec::new();
    for d in decisions.iter().filter(|d| d.verdict == Verdict::NeedsReview) {
        if let Some(record) = by_id.get(d.respondent_id.as_str()) {
            review.extend(record.responses.keys().map(|item_id| ReviewRow {
                respondent_id: d.respondent_id.clone(),
                item_id: item_id.clone(),
                justification: record
                    .justifications
                    .get(item_id)
                    .cloned()
                    .unwrap_or_default(),
            }));
        }
    }
    prepare_out(cfg)?;
    let path = formatted_path(&cfg.out, "screen", cfg.format.extension());
    match cfg.format {
        OutputFormat::Csv => write_csv(&path, &rows)?,
        OutputFormat::Json => write_json(&path, &decisions)?,
    }
    write_csv(&cfg.out.join("review_queue.csv"), &review)?;
    let count = |v: Verdict| decisions.iter().filter(|d| d.verdict == v).count();
    eprintln!(
        "screen: {} respondents ({} accept, {} reject, {} needs_review) -> {}",
        decisions.len(),
        count(Verdict::Accept),
        count(Verdict::Reject),
        count(Verdict::NeedsReview),
        path.display()
    );
    Ok(())
}
