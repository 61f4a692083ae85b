//! Latent-trait (item response theory) modeling: the three-parameter
//! logistic forward model, Rasch (shared-discrimination, zero-guessing)
//! fitting by marginal maximum likelihood EM over Gauss–Hermite quadrature,
//! ability estimation, and cross-population difficulty comparison.

pub mod quadrature;

pub use quadrature::{gauss_hermite_normal, Quadrature};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Block, PopulationSlice, ResponseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::{self, CorrelationResult, Method, PValueSpec};

/// Difficulty bound: items with perfect or zero scores are clamped to ±6 and
/// flagged rather than dropped, keeping item sets aligned across populations.
pub const B_MAX: f64 = 6.0;

/// Bounds for the shared discrimination when it is estimated.
const A_MIN: f64 = 0.05;
const A_MAX: f64 = 20.0;

/// Inner Newton iterations per M-step coordinate.
const NEWTON_MAX_STEPS: usize = 50;
const NEWTON_STEP_TOL: f64 = 1e-10;

/// Parameters of one item under the three-parameter logistic model:
/// discrimination `a`, difficulty `b`, and guessing floor `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemParams<S> {
    a: S,
    b: S,
    c: S,
}

impl<S: Scalar> ItemParams<S> {
    /// Validated constructor: a > 0, b finite, 0 ≤ c < 1.
    pub fn new(a: S, b: S, c: S) -> Result<Self> {
        if !a.is_finite() || a <= S::zero() {
            return Err(Error::InvalidParameter(format!(
                "discrimination must be positive and finite, got {a}"
            )));
        }
        if !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "difficulty must be finite, got {b}"
            )));
        }
        if !c.is_finite() || c < S::zero() || c >= S::one() {
            return Err(Error::InvalidParameter(format!(
                "guessing probability must lie in [0, 1), got {c}"
            )));
        }
        Ok(ItemParams { a, b, c })
    }

    /// Rasch item: unit discrimination, no guessing floor.
    pub fn rasch(b: S) -> Self {
        ItemParams {
            a: S::one(),
            b,
            c: S::zero(),
        }
    }

    pub fn a(&self) -> S {
        self.a
    }

    pub fn b(&self) -> S {
        self.b
    }

    pub fn c(&self) -> S {
        self.c
    }
}

/// Numerically stable logistic 1/(1+e^{−z}).
fn logistic<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus<S: Scalar>(z: S) -> S {
    z.max(S::zero()) + (-z.abs()).exp().ln_1p()
}

/// Probability of a correct response: c + (1 − c)/(1 + e^{−a(θ − b)}).
pub fn prob_correct<S: Scalar>(params: &ItemParams<S>, theta: S) -> S {
    params.c + (S::one() - params.c) * logistic(params.a * (theta - params.b))
}

/// EM fitting configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaschConfig<S> {
    /// Gauss–Hermite node count for the ability integral.
    pub n_quad: usize,
    /// Convergence threshold on the max absolute parameter change.
    pub tol: S,
    pub max_iter: usize,
    /// Estimate one discrimination shared by all items (default), or hold it
    /// fixed at 1 for the strict one-parameter reading.
    pub estimate_shared_a: bool,
}

impl<S: Scalar> Default for RaschConfig<S> {
    fn default() -> Self {
        RaschConfig {
            n_quad: 21,
            tol: S::from_f64_lossy(1e-4),
            max_iter: 500,
            estimate_shared_a: true,
        }
    }
}

/// Result of a marginal-maximum-likelihood Rasch fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaschFit<S> {
    pub item_ids: Vec<String>,
    /// Fitted difficulty per item, clamped to ±`B_MAX`.
    pub b: Vec<S>,
    pub a_shared: S,
    pub log_likelihood: S,
    pub n_iterations: usize,
    pub converged: bool,
    /// Items whose difficulty hit the ±`B_MAX` bound.
    pub clamped_items: Vec<String>,
    pub quadrature_nodes: usize,
    /// Marginal log-likelihood before each parameter update plus the final
    /// value; non-decreasing by the EM construction.
    pub ll_trace: Vec<S>,
}

/// Posterior ability summary for one respondent under a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbilityEstimate<S> {
    pub respondent_id: String,
    pub theta_eap: S,
    pub posterior_sd: S,
}

/// Distinct response patterns with multiplicities; identical respondents
/// share all E-step work, and the lexicographic order makes accumulation
/// independent of respondent order.
struct Patterns {
    rows: Vec<Vec<bool>>,
    counts: Vec<usize>,
}

impl Patterns {
    fn collapse(block: &Block) -> Patterns {
        let mut seen: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        for j in 0..block.n_respondents() {
            let pattern: Vec<bool> = (0..block.n_items()).map(|i| block.is_correct(i, j)).collect();
            *seen.entry(pattern).or_insert(0) += 1;
        }
        let (rows, counts) = seen.into_iter().unzip();
        Patterns { rows, counts }
    }

    fn n_items(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }
}

/// Log-probability tables under current parameters: `ln_p[i*Q + q]` is
/// ln P(correct | θ_q) for item i, `ln_not[iQ + q]` its complement.
struct LogTables<S> {
    ln_p: Vec<S>,
    ln_not: Vec<S>,
    n_nodes: usize,
}

impl<S: Scalar> LogTables<S> {
    fn compute(b: &[S], a: S, quad: &Quadrature<S>) -> LogTables<S> {
        let n_nodes = quad.len();
        let mut ln_p = Vec::with_capacity(b.len() * n_nodes);
        let mut ln_not = Vec::with_capacity(b.len() * n_nodes);
        for &bi in b {
            for &theta in &quad.nodes {
                let z = a * (theta - bi);
                ln_p.push(-softplus(-z));
                ln_not.push(-softplus(z));
            }
        }
        LogTables {
            ln_p,
            ln_not,
            n_nodes,
        }
    }
}

/// One pattern's posterior over nodes and its log-marginal.
struct PatternPosterior<S> {
    log_marginal: S,
    weights: Vec<S>,
}

fn pattern_posterior<S: Scalar>(
    row: &[bool],
    tables: &LogTables<S>,
    ln_prior: &[S],
) -> PatternPosterior<S> {
    let nq = tables.n_nodes;
    let mut t: Vec<S> = ln_prior.to_vec();
    for (i, &correct) in row.iter().enumerate() {
        let table = if correct { &tables.ln_p } else { &tables.ln_not };
        for (tq, &v) in t.iter_mut().zip(&table[i * nq..(i + 1) * nq]) {
            *tq = *tq + v;
        }
    }
    let max = t.iter().copied().fold(S::neg_infinity(), S::max);
    let sum_exp = t.iter().map(|&v| (v - max).exp()).sum::<S>();
    let log_marginal = max + sum_exp.ln();
    let weights = t.iter().map(|&v| (v - log_marginal).exp()).collect();
    PatternPosterior {
        log_marginal,
        weights,
    }
}

/// E-step output: marginal log-likelihood plus expected node counts (`n_q`)
/// and per-item expected correct counts (`r_iq`, flattened items × nodes).
struct ExpectedCounts<S> {
    loglik: S,
    n_q: Vec<S>,
    r_iq: Vec<S>,
}

/// Full E-step. Patterns are processed in parallel; the reduction into the
/// expected counts runs sequentially in pattern order, so results are
/// bit-identical for every thread count.
fn e_step<S: Scalar>(
    patterns: &Patterns,
    tables: &LogTables<S>,
    ln_prior: &[S],
) -> ExpectedCounts<S> {
    let posteriors: Vec<PatternPosterior<S>> = patterns
        .rows
        .par_iter()
        .map(|row| pattern_posterior(row, tables, ln_prior))
        .collect();

    let nq = tables.n_nodes;
    let n_items = patterns.n_items();
    let mut loglik = S::zero();
    let mut n_q = vec![S::zero(); nq];
    let mut r_iq = vec![S::zero(); n_items * nq];
    for ((row, &count), posterior) in patterns
        .rows
        .iter()
        .zip(&patterns.counts)
        .zip(&posteriors)
    {
        let count = S::from_usize_lossy(count);
        loglik = loglik + count * posterior.log_marginal;
        for (n, &w) in n_q.iter_mut().zip(&posterior.weights) {
            *n = *n + count * w;
        }
        for (i, &correct) in row.iter().enumerate() {
            if correct {
                for q in 0..nq {
                    r_iq[i * nq + q] = r_iq[i * nq + q] + count * posterior.weights[q];
                }
            }
        }
    }
    ExpectedCounts {
        loglik,
        n_q,
        r_iq,
    }
}

/// Marginal log-likelihood only (no expected counts).
fn marginal_loglik_of<S: Scalar>(patterns: &Patterns, tables: &LogTables<S>, ln_prior: &[S]) -> S {
    let logs: Vec<S> = patterns
        .rows
        .par_iter()
        .map(|row| pattern_posterior(row, tables, ln_prior).log_marginal)
        .collect();
    logs.iter()
        .zip(&patterns.counts)
        .map(|(&lm, &c)| S::from_usize_lossy(c) * lm)
        .sum()
}

/// Expected complete-data log-likelihood of one item as a function of its
/// difficulty, given fixed posterior counts.
fn item_objective<S: Scalar>(b: S, a: S, quad: &Quadrature<S>, n_q: &[S], r_q: &[S]) -> S {
    let mut total = S::zero();
    for (q, &theta) in quad.nodes.iter().enumerate() {
        let z = a * (theta - b);
        total = total + r_q[q] * (-softplus(-z)) + (n_q[q] - r_q[q]) * (-softplus(z));
    }
    total
}

/// Maximize the single-item objective in `b` by safeguarded Newton steps.
///
/// The objective is concave in `b`; backtracking halves any overshooting
/// step so the objective never decreases, which keeps the EM monotone.
fn update_b<S: Scalar>(b0: S, a: S, quad: &Quadrature<S>, n_q: &[S], r_q: &[S]) -> S {
    let b_max = S::from_f64_lossy(B_MAX);
    let step_tol = S::from_f64_lossy(NEWTON_STEP_TOL);
    let mut b = b0;
    let mut value = item_objective(b, a, quad, n_q, r_q);
    for _ in 0..NEWTON_MAX_STEPS {
        let mut gradient = S::zero();
        let mut hessian = S::zero();
        for (q, &theta) in quad.nodes.iter().enumerate() {
            let p = logistic(a * (theta - b));
            gradient = gradient - a * (r_q[q] - n_q[q] * p);
            hessian = hessian - a * a * n_q[q] * p * (S::one() - p);
        }
        if hessian >= S::zero() {
            break; // only at degenerate zero counts
        }
        let target = (b - gradient / hessian).max(-b_max).min(b_max);
        let mut delta = target - b;
        if delta.abs() < step_tol {
            break;
        }
        // Backtrack until the objective stops decreasing (FP-noise slack).
        let mut trial_value;
        loop {
            trial_value = item_objective(b + delta, a, quad, n_q, r_q);
            let slack = (value.abs() + S::one()) * S::epsilon() * S::from_f64_lossy(8.0);
            if trial_value >= value - slack || delta.abs() < step_tol {
                break;
            }
            delta = delta / S::from_f64_lossy(2.0);
        }
        b = b + delta;
        value = trial_value;
        if delta.abs() < step_tol {
            break;
        }
    }
    b
}

/// Expected complete-data log-likelihood as a function of the shared
/// discrimination.
fn shared_a_objective<S: Scalar>(
    a: S,
    b: &[S],
    quad: &Quadrature<S>,
    n_q: &[S],
    r_iq: &[S],
) -> S {
    let nq = quad.len();
    let mut total = S::zero();
    for (i, &bi) in b.iter().enumerate() {
        for (q, &theta) in quad.nodes.iter().enumerate() {
            let z = a * (theta - bi);
            let r = r_iq[i * nq + q];
            total = total + r * (-softplus(-z)) + (n_q[q] - r) * (-softplus(z));
        }
    }
    total
}

/// Maximize the shared discrimination by safeguarded Newton steps within
/// [`A_MIN`, `A_MAX`].
fn update_shared_a<S: Scalar>(
    a0: S,
    b: &[S],
    quad: &Quadrature<S>,
    n_q: &[S],
    r_iq: &[S],
) -> S {
    let a_min = S::from_f64_lossy(A_MIN);
    let a_max = S::from_f64_lossy(A_MAX);
    let step_tol = S::from_f64_lossy(NEWTON_STEP_TOL);
    let nq = quad.len();
    let mut a = a0;
    let mut value = shared_a_objective(a, b, quad, n_q, r_iq);
    for _ in 0..NEWTON_MAX_STEPS {
        let mut gradient = S::zero();
        let mut hessian = S::zero();
        for (i, &bi) in b.iter().enumerate() {
            for (q, &theta) in quad.nodes.iter().enumerate() {
                let spread = theta - bi;
                let p = logistic(a * spread);
                let r = r_iq[i * nq + q];
                gradient = gradient + spread * (r - n_q[q] * p);
                hessian = hessian - spread * spread * n_q[q] * p * (S::one() - p);
            }
        }
        if hessian >= S::zero() {
            break;
        }
        let target = (a - gradient / hessian).max(a_min).min(a_max);
        let mut delta = target - a;
        if delta.abs() < step_tol {
            break;
        }
        let mut trial_value;
        loop {
            trial_value = shared_a_objective(a + delta, b, quad, n_q, r_iq);
            let slack = (value.abs() + S::one()) * S::epsilon() * S::from_f64_lossy(8.0);
            if trial_value >= value - slack || delta.abs() < step_tol {
                break;
            }
            delta = delta / S::from_f64_lossy(2.0);
        }
        a = a + delta;
        value = trial_value;
        if delta.abs() < step_tol {
            break;
        }
    }
    a
}

/// Fit a Rasch model to one category's complete scored block by marginal
/// maximum likelihood EM under a standard-normal ability prior.
///
/// The E-step computes each respondent's posterior over the quadrature
/// nodes; the M-step maximizes the expected complete-data log-likelihood in
/// each difficulty (and optionally the shared discrimination) by safeguarded
/// Newton steps. Iteration stops when the largest absolute parameter change
/// drops below `config.tol`.
pub fn fit_rasch<S: Scalar>(
    matrix: &ResponseMatrix,
    slice: &PopulationSlice,
    category: &str,
    config: &RaschConfig<S>,
) -> Result<RaschFit<S>> {
    let block = matrix.category_block(slice, category)?;
    fit_rasch_block(&block, config)
}

/// Fit directly on an extracted block (same algorithm as [`fit_rasch`]).
pub fn fit_rasch_block<S: Scalar>(block: &Block, config: &RaschConfig<S>) -> Result<RaschFit<S>> {
    if block.n_items() < 3 {
        return Err(Error::TooFew {
            what: "items for a latent-trait fit",
            required: 3,
            actual: block.n_items(),
        });
    }
    if block.n_respondents() < 10 {
        return Err(Error::TooFew {
            what: "respondents for a latent-trait fit",
            required: 10,
            actual: block.n_respondents(),
        });
    }
    if config.tol <= S::zero() || config.max_iter == 0 {
        return Err(Error::InvalidParameter(
            "fit requires a positive tolerance and at least one iteration".to_string(),
        ));
    }
    let all_constant = (0..block.n_items()).all(|i| {
        let row = block.item_row(i);
        row.iter().all(|&v| v) || row.iter().all(|&v| !v)
    });
    if all_constant {
        return Err(Error::DegenerateMatrix(
            "every item has zero variance; difficulties are unidentifiable".to_string(),
        ));
    }

    let quad = gauss_hermite_normal::<S>(config.n_quad)?;
    let ln_prior: Vec<S> = quad.weights.iter().map(|&w| w.ln()).collect();
    let patterns = Patterns::collapse(block);
    let n = block.n_respondents();

    // Start difficulties at the logit of the observed error rate (exact under
    // θ = 0) and the discrimination at 1.
    let mut b: Vec<S> = (0..block.n_items())
        .map(|i| {
            let correct = block.item_row(i).iter().filter(|&&v| v).count();
            let floor = 0.5 / n as f64;
            let p = (correct as f64 / n as f64).clamp(floor, 1.0 - floor);
            S::from_f64_lossy(((1.0 - p) / p).ln().clamp(-3.0, 3.0))
        })
        .collect();
    let mut a = S::one();

    let mut ll_trace: Vec<S> = Vec::new();
    let mut converged = false;
    let mut n_iterations = 0;
    for _ in 0..config.max_iter {
        let tables = LogTables::compute(&b, a, &quad);
        let counts = e_step(&patterns, &tables, &ln_prior);
        ll_trace.push(counts.loglik);

        let nq = quad.len();
        let mut delta = S::zero();
        for (i, bi) in b.iter_mut().enumerate() {
            let r_q = &counts.r_iq[i * nq..(i + 1) * nq];
            let updated = update_b(*bi, a, &quad, &counts.n_q, r_q);
            delta = delta.max((updated - *bi).abs());
            *bi = updated;
        }
        if config.estimate_shared_a {
            let updated = update_shared_a(a, &b, &quad, &counts.n_q, &counts.r_iq);
            delta = delta.max((updated - a).abs());
            a = updated;
        }

        n_iterations += 1;
        if delta < config.tol {
            converged = true;
            break;
        }
    }

    let tables = LogTables::compute(&b, a, &quad);
    let log_likelihood = marginal_loglik_of(&patterns, &tables, &ln_prior);
    ll_trace.push(log_likelihood);

    let bound = S::from_f64_lossy(B_MAX) - S::from_f64_lossy(1e-9);
    let clamped_items: Vec<String> = block
        .item_ids()
        .iter()
        .zip(&b)
        .filter(|(_, &bi)| bi.abs() >= bound)
        .map(|(id, _)| id.clone())
        .collect();

    Ok(RaschFit {
        item_ids: block.item_ids().to_vec(),
        b,
        a_shared: a,
        log_likelihood,
        n_iterations,
        converged,
        clamped_items,
        quadrature_nodes: config.n_quad,
        ll_trace,
    })
}

/// Marginal log-likelihood of explicit parameters on a category block:
/// Σ_j ln ∫ ∏_i P^y (1−P)^{1−y} dΦ(θ), quadrature-approximated.
pub fn marginal_loglik<S: Scalar>(
    matrix: &ResponseMatrix,
    slice: &PopulationSlice,
    category: &str,
    b: &[S],
    a: S,
    n_quad: usize,
) -> Result<S> {
    let block = matrix.category_block(slice, category)?;
    if b.len() != block.n_items() {
        return Err(Error::LengthMismatch(b.len(), block.n_items()));
    }
    if !a.is_finite() || a <= S::zero() {
        return Err(Error::InvalidParameter(format!(
            "discrimination must be positive and finite, got {a}"
        )));
    }
    let quad = gauss_hermite_normal::<S>(n_quad)?;
    let ln_prior: Vec<S> = quad.weights.iter().map(|&w| w.ln()).collect();
    let patterns = Patterns::collapse(&block);
    let tables = LogTables::compute(b, a, &quad);
    Ok(marginal_loglik_of(&patterns, &tables, &ln_prior))
}

/// Posterior mean and standard deviation of ability for each respondent in
/// the slice, under a fitted model.
///
/// Respondents may have answered any subset of the fitted items, but at
/// least one.
pub fn ability_eap<S: Scalar>(
    fit: &RaschFit<S>,
    matrix: &ResponseMatrix,
    slice: &PopulationSlice,
) -> Result<Vec<AbilityEstimate<S>>> {
    let quad = gauss_hermite_normal::<S>(fit.quadrature_nodes)?;
    let ln_prior: Vec<S> = quad.weights.iter().map(|&w| w.ln()).collect();
    let positions: Vec<usize> = fit
        .item_ids
        .iter()
        .map(|id| {
            matrix
                .item_position(id)
                .ok_or_else(|| Error::ItemNotFound(id.clone()))
        })
        .collect::<Result<_>>()?;
    let tables = LogTables::compute(&fit.b, fit.a_shared, &quad);
    let nq = quad.len();

    slice
        .indices()
        .iter()
        .map(|&j| {
            let respondent_id = matrix.respondents()[j].respondent_id.clone();
            let mut t: Vec<S> = ln_prior.clone();
            let mut answered = 0usize;
            for (i, &pos) in positions.iter().enumerate() {
                let Some(correct) = matrix.scored(pos, j) else {
                    continue;
                };
                answered += 1;
                let table = if correct { &tables.ln_p } else { &tables.ln_not };
                for (tq, &v) in t.iter_mut().zip(&table[i * nq..(i + 1) * nq]) {
                    *tq = *tq + v;
                }
            }
            if answered == 0 {
                return Err(Error::NoResponses(respondent_id));
            }
            let max = t.iter().copied().fold(S::neg_infinity(), S::max);
            let norm = max + t.iter().map(|&v| (v - max).exp()).sum::<S>().ln();
            let weights: Vec<S> = t.iter().map(|&v| (v - norm).exp()).collect();
            let mean = weights
                .iter()
                .zip(&quad.nodes)
                .map(|(&w, &x)| w * x)
                .sum::<S>();
            let var = weights
                .iter()
                .zip(&quad.nodes)
                .map(|(&w, &x)| w * (x - mean) * (x - mean))
                .sum::<S>();
            Ok(AbilityEstimate {
                respondent_id,
                theta_eap: mean,
                posterior_sd: var.max(S::zero()).sqrt(),
            })
        })
        .collect()
}

/// Comparison of fitted difficulty vectors across two populations.
#[derive(Debug, Clone, PartialEq)]
pub struct RaschComparison<S> {
    /// Pearson over the two b vectors.
    pub correlation: CorrelationResult<S>,
    /// Union of items clamped in either fit; included in the correlation but
    /// worth a warning downstream.
    pub clamped: Vec<String>,
}

/// Pearson comparison of two fits' difficulties with the default
/// t-approximation p-value.
pub fn compare_rasch_difficulty<S: Scalar>(
    fit_ref: &RaschFit<S>,
    fit_other: &RaschFit<S>,
) -> Result<RaschComparison<S>> {
    compare_rasch_difficulty_with(fit_ref, fit_other, PValueSpec::TApprox)
}

/// Difficulty comparison with an explicit p-value method.
pub fn compare_rasch_difficulty_with<S: Scalar>(
    fit_ref: &RaschFit<S>,
    fit_other: &RaschFit<S>,
    p_spec: PValueSpec,
) -> Result<RaschComparison<S>> {
    if fit_ref.item_ids != fit_other.item_ids {
        return Err(Error::ItemSetMismatch(
            "fits cover different item sets or orderings".to_string(),
        ));
    }
    let correlation = stats::correlate(&fit_ref.b, &fit_other.b, Method::Pearson, p_spec)?;
    let mut clamped: Vec<String> = fit_ref
        .clamped_items
        .iter()
        .chain(&fit_other.clamped_items)
        .cloned()
        .collect();
    clamped.sort();
    clamped.dedup();
    Ok(RaschComparison {
        correlation,
        clamped,
    })
}
