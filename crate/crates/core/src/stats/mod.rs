//! Correlation and significance kernel shared by every analysis: Pearson,
//! Spearman, Matthews correlation, and two-sided p-values (t approximation,
//! exact permutation, seeded Monte Carlo permutation).

pub mod special;

pub use special::{inc_beta, ln_gamma, student_t_cdf, student_t_two_tails};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest vector length accepted by the exact permutation test (8! = 40320
/// permutations); longer inputs must use the Monte Carlo variant.
pub const EXACT_PERM_MAX_N: usize = 8;

/// Floating-point slack when counting permutations at least as extreme as
/// the observed correlation, so bit-level rounding in recomputed statistics
/// cannot flip a tie. Part of the permutation-test contract.
const PERM_TIE_SLACK: f64 = 1e-12;

/// Which correlation statistic a result carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pearson,
    Spearman,
}

/// How a p-value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    TApprox,
    ExactPerm,
    MonteCarloPerm,
}

/// P-value computation request, with parameters where needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValueSpec {
    /// t = r·sqrt((n−2)/(1−r²)) against Student's t with n−2 degrees of freedom.
    TApprox,
    /// Proportion of all n! permutations of `y` at least as extreme; n ≤ 8.
    ExactPerm,
    /// Seeded permutation sample; p = (1 + #extreme) / (samples + 1).
    MonteCarloPerm { samples: usize, seed: u64 },
}

impl PValueSpec {
    /// Monte Carlo with the conventional 10000 shuffles.
    pub fn monte_carlo(seed: u64) -> Self {
        PValueSpec::MonteCarloPerm {
            samples: 10_000,
            seed,
        }
    }

    fn method(&self) -> PMethod {
        match self {
            PValueSpec::TApprox => PMethod::TApprox,
            PValueSpec::ExactPerm => PMethod::ExactPerm,
            PValueSpec::MonteCarloPerm { .. } => PMethod::MonteCarloPerm,
        }
    }
}

/// A correlation with its significance.
///
/// `r` and `p_value` are `None` when the statistic is undefined: fewer than
/// three observations, or an input with zero variance (zero rank variance
/// for Spearman).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult<S> {
    pub r: Option<S>,
    pub p_value: Option<S>,
    pub n: usize,
    pub method: Method,
    pub p_method: PMethod,
    /// Set when |r| = 1 met the t approximation; the reported p of 0 is a
    /// saturation convention rather than a computed tail.
    pub saturated: bool,
}

impl<S: Scalar> CorrelationResult<S> {
    pub fn is_defined(&self) -> bool {
        self.r.is_some()
    }
}

/// Pearson correlation with the default t-approximation p-value.
pub fn pearson<S: Scalar>(x: &[S], y: &[S]) -> Result<CorrelationResult<S>> {
    correlate(x, y, Method::Pearson, PValueSpec::TApprox)
}

/// Spearman rank correlation (average ranks for ties) with the default
/// t-approximation p-value.
pub fn spearman<S: Scalar>(x: &[S], y: &[S]) -> Result<CorrelationResult<S>> {
    correlate(x, y, Method::Spearman, PValueSpec::TApprox)
}

/// Full-control entry point: choose the statistic and the p-value method.
pub fn correlate<S: Scalar>(
    x: &[S],
    y: &[S],
    method: Method,
    p_spec: PValueSpec,
) -> Result<CorrelationResult<S>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter(
            "correlation inputs must be finite".to_string(),
        ));
    }
    let n = x.len();

    let (wx, wy) = match method {
        Method::Pearson => (x.to_vec(), y.to_vec()),
        Method::Spearman => (average_ranks(x), average_ranks(y)),
    };

    let r = if n < 3 { None } else { pearson_r(&wx, &wy) };

    let (p_value, saturated) = match r {
        None => (None, false),
        Some(r) => match p_spec {
            PValueSpec::TApprox => {
                let (p, saturated) = p_value_t_approx(r, n)?;
                (Some(p), saturated)
            }
            PValueSpec::ExactPerm => (Some(exact_perm_p(&wx, &wy, r)?), false),
            PValueSpec::MonteCarloPerm { samples, seed } => {
                (Some(monte_carlo_perm_p(&wx, &wy, r, samples, seed)?), false)
            }
        },
    };

    Ok(CorrelationResult {
        r,
        p_value,
        n,
        method,
        p_method: p_spec.method(),
        saturated,
    })
}

/// Two-sided p-value for a correlation under the t approximation.
///
/// Returns the p-value and a saturation flag; |r| = 1 yields p = 0 with the
/// flag set, since the t statistic diverges there.
pub fn p_value_t_approx<S: Scalar>(r: S, n: usize) -> Result<(S, bool)> {
    if n < 3 {
        return Err(Error::TooFew {
            what: "observations for a t-approximation p-value",
            required: 3,
            actual: n,
        });
    }
    let one = S::one();
    if r.abs() >= one {
        return Ok((S::zero(), true));
    }
    let df = n - 2;
    let t = r * (S::from_usize_lossy(df) / (one - r * r)).sqrt();
    let p = special::student_t_two_tails(t, df)?;
    Ok((p, false))
}

/// Matthews correlation coefficient over a 2×2 confusion table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatthewsResult<S> {
    pub value: S,
    /// Set when a marginal of the confusion table is zero; the value is then
    /// 0 by convention rather than a measured association.
    pub degenerate: bool,
}

/// Matthews correlation of a binary prediction against binary truth.
pub fn matthews<S: Scalar>(pred: &[bool], truth: &[bool]) -> Result<MatthewsResult<S>> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch(pred.len(), truth.len()));
    }
    let (mut tp, mut tn, mut fp, mut fal_n) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fal_n += 1,
        }
    }
    let marginals = [tp + fp, tp + fal_n, tn + fp, tn + fal_n];
    if marginals.contains(&0) {
        return Ok(MatthewsResult {
            value: S::zero(),
            degenerate: true,
        });
    }
    let [a, b, c, d] = [tp, tn, fp, fal_n].map(S::from_usize_lossy);
    let numerator = a * b - c * d;
    let denominator = marginals
        .into_iter()
        .map(S::from_usize_lossy)
        .fold(S::one(), |acc, m| acc * m)
        .sqrt();
    Ok(MatthewsResult {
        value: numerator / denominator,
        degenerate: false,
    })
}

/// Average ranks (1-based); tied values share the mean of their rank span.
fn average_ranks<S: Scalar>(values: &[S]) -> Vec<S> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    // Finiteness is validated by the callers, so total ordering holds.
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());

    let mut ranks = vec![S::zero(); n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end, averaged over the tie group.
        let mean_rank =
            S::from_usize_lossy(start + 1 + end) / S::from_f64_lossy(2.0);
        for &idx in &order[start..end] {
            ranks[idx] = mean_rank;
        }
        start = end;
    }
    ranks
}

/// Product-moment correlation; `None` on zero variance.
fn pearson_r<S: Scalar>(x: &[S], y: &[S]) -> Option<S> {
    let n = S::from_usize_lossy(x.len());
    let mean_x = x.iter().copied().sum::<S>() / n;
    let mean_y = y.iter().copied().sum::<S>() / n;
    let mut sxy = S::zero();
    let mut sxx = S::zero();
    let mut syy = S::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        let dx = xi - mean_x;
        let dy = yi - mean_y;
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == S::zero() || syy == S::zero() {
        return None;
    }
    let r = sxy / (sxx * syy).sqrt();
    // Rounding can push the ratio a hair past ±1.
    Some(r.min(S::one()).max(-S::one()))
}

/// Deviations and their squared sums, precomputed so each permutation only
/// costs one dot product.
struct PermScratch<S> {
    dx: Vec<S>,
    dy: Vec<S>,
    denom: S,
}

impl<S: Scalar> PermScratch<S> {
    fn new(x: &[S], y: &[S]) -> Self {
        let n = S::from_usize_lossy(x.len());
        let mean_x = x.iter().copied().sum::<S>() / n;
        let mean_y = y.iter().copied().sum::<S>() / n;
        let dx: Vec<S> = x.iter().map(|&v| v - mean_x).collect();
        let dy: Vec<S> = y.iter().map(|&v| v - mean_y).collect();
        let sxx = dx.iter().map(|&d| d * d).sum::<S>();
        let syy = dy.iter().map(|&d| d * d).sum::<S>();
        PermScratch {
            dx,
            dy,
            denom: (sxx * syy).sqrt(),
        }
    }

    /// Correlation of x with the current arrangement of the y deviations.
    ///
    /// Permuting y never changes its mean or variance, so the precomputed
    /// denominator stays valid.
    fn r(&self) -> S {
        let dot = self
            .dx
            .iter()
            .zip(&self.dy)
            .map(|(&a, &b)| a * b)
            .sum::<S>();
        dot / self.denom
    }
}

/// Exact permutation p-value: proportion of all n! rearrangements of y whose
/// |r| reaches the observed |r|.
fn exact_perm_p<S: Scalar>(x: &[S], y: &[S], observed: S) -> Result<S> {
    let n = x.len();
    if n > EXACT_PERM_MAX_N {
        return Err(Error::PermutationTooLarge {
            n,
            max: EXACT_PERM_MAX_N,
        });
    }
    let threshold = observed.abs() - S::from_f64_lossy(PERM_TIE_SLACK);
    let mut scratch = PermScratch::new(x, y);

    let mut count: u64 = 0;
    let mut total: u64 = 0;
    let mut visit = |scratch: &PermScratch<S>| {
        total += 1;
        if scratch.r().abs() >= threshold {
            count += 1;
        }
    };

    // Heap's algorithm over the y deviations, visiting every permutation once.
    visit(&scratch);
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                scratch.dy.swap(0, i);
            } else {
                scratch.dy.swap(c[i], i);
            }
            visit(&scratch);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }

    Ok(S::from_f64_lossy(count as f64 / total as f64))
}

/// Monte Carlo permutation p-value with the add-one estimator
/// p = (1 + #extreme) / (samples + 1).
fn monte_carlo_perm_p<S: Scalar>(
    x: &[S],
    y: &[S],
    observed: S,
    samples: usize,
    seed: u64,
) -> Result<S> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "monte carlo permutation test requires at least one sample".to_string(),
        ));
    }
    let threshold = observed.abs() - S::from_f64_lossy(PERM_TIE_SLACK);
    let mut scratch = PermScratch::new(x, y);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut count: usize = 0;
    for _ in 0..samples {
        scratch.dy.shuffle(&mut rng);
        if scratch.r().abs() >= threshold {
            count += 1;
        }
    }
    Ok(S::from_f64_lossy((1 + count) as f64 / (samples + 1) as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pearson_exact_linear_relations() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(r.r, Some(1.0));
        let r = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.r, Some(-1.0));
    }

    #[test]
    fn pearson_orthogonal_deviations() {
        let r = pearson(&[1.0, 0.0, 1.0, 0.0], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(r.r, Some(0.0));
        assert_abs_diff_eq!(r.p_value.unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn pearson_zero_variance_is_undefined() {
        let r = pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.r, None);
        assert_eq!(r.p_value, None);
    }

    #[test]
    fn too_few_observations_is_undefined() {
        let r = pearson(&[1.0, 2.0], &[2.0, 1.0]).unwrap();
        assert_eq!(r.r, None);
        assert_eq!(r.n, 2);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).unwrap_err(),
            Error::LengthMismatch(3, 2)
        ));
    }

    #[test]
    fn non_finite_input_is_an_error() {
        assert!(pearson(&[1.0, f64::NAN, 3.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn spearman_monotone_without_ties() {
        let x = [1.0, 2.0, 5.0, 9.0];
        let y = [10.0, 100.0, 101.0, 5000.0];
        assert_eq!(spearman(&x, &y).unwrap().r, Some(1.0));
    }

    #[test]
    fn spearman_partial_swap() {
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert_abs_diff_eq!(r.r.unwrap(), 0.8, epsilon = 1e-15);
    }

    #[test]
    fn spearman_constant_input_is_undefined() {
        let r = spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.r, None);
    }

    #[test]
    fn average_ranks_handle_ties() {
        let ranks = average_ranks(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn t_approx_r_zero_gives_p_one() {
        let (p, saturated) = p_value_t_approx(0.0f64, 10).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
        assert!(!saturated);
    }

    #[test]
    fn t_approx_saturates_at_unit_correlation() {
        let (p, saturated) = p_value_t_approx(1.0f64, 10).unwrap();
        assert_eq!(p, 0.0);
        assert!(saturated);
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!(r.saturated);
        assert_eq!(r.p_value, Some(0.0));
    }

    #[test]
    fn strong_correlation_on_fifteen_points_is_significant() {
        // Construct r ≈ 0.93 on n=15 and confirm p < 0.001 under the
        // t approximation.
        let x: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| v + if i % 2 == 0 { 1.6 } else { -1.6 })
            .collect();
        let r = pearson(&x, &y).unwrap();
        assert!(r.r.unwrap() > 0.9, "r = {:?}", r.r);
        assert!(r.p_value.unwrap() < 0.001);
    }

    #[test]
    fn exact_perm_identity_three_points() {
        // Of the 6 permutations, identity and full reversal reach |r| = 1.
        let r = correlate(
            &[1.0, 2.0, 3.0],
            &[1.0, 2.0, 3.0],
            Method::Pearson,
            PValueSpec::ExactPerm,
        )
        .unwrap();
        assert_abs_diff_eq!(r.p_value.unwrap(), 2.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_perm_rejects_large_n() {
        let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
        let err = correlate(&x, &x, Method::Pearson, PValueSpec::ExactPerm).unwrap_err();
        assert!(matches!(err, Error::PermutationTooLarge { n: 9, max: 8 }));
    }

    #[test]
    fn monte_carlo_is_seed_deterministic() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let y = [1.0, 3.0, 3.0, 7.0, 6.0, 6.5];
        let spec = PValueSpec::MonteCarloPerm {
            samples: 2000,
            seed: 42,
        };
        let a = correlate(&x, &y, Method::Pearson, spec).unwrap();
        let b = correlate(&x, &y, Method::Pearson, spec).unwrap();
        assert_eq!(a.p_value, b.p_value);
    }

    #[test]
    fn monte_carlo_tracks_exact_on_small_input() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let y = [2.0, 5.0, 1.0, 9.0, 6.0];
        let exact = correlate(&x, &y, Method::Pearson, PValueSpec::ExactPerm)
            .unwrap()
            .p_value
            .unwrap();
        let samples = 10_000;
        let mc = correlate(
            &x,
            &y,
            Method::Pearson,
            PValueSpec::MonteCarloPerm { samples, seed: 7 },
        )
        .unwrap()
        .p_value
        .unwrap();
        let se = (exact * (1.0 - exact) / samples as f64).sqrt();
        assert!(
            (mc - exact).abs() <= 3.0 * se + 2.0 / samples as f64,
            "mc = {mc}, exact = {exact}, se = {se}"
        );
    }

    #[test]
    fn matthews_perfect_and_inverted() {
        let truth = [true, false, true, false, true];
        let m = matthews::<f64>(&truth, &truth).unwrap();
        assert_eq!(m.value, 1.0);
        assert!(!m.degenerate);
        let inverted: Vec<bool> = truth.iter().map(|&b| !b).collect();
        let m = matthews::<f64>(&inverted, &truth).unwrap();
        assert_eq!(m.value, -1.0);
    }

    #[test]
    fn matthews_degenerate_marginal() {
        let m = matthews::<f64>(&[true, true, true], &[true, false, true]).unwrap();
        assert_eq!(m.value, 0.0);
        assert!(m.degenerate);
    }

    #[test]
    fn matthews_equals_pearson_on_binary_vectors() {
        let pred = [true, false, true, true, false, false, true, false];
        let truth = [true, false, false, true, false, true, true, false];
        let m = matthews::<f64>(&pred, &truth).unwrap();
        let to_f = |v: &[bool]| -> Vec<f64> { v.iter().map(|&b| b as u8 as f64).collect() };
        let r = pearson(&to_f(&pred), &to_f(&truth)).unwrap().r.unwrap();
        assert_abs_diff_eq!(m.value, r, epsilon = 1e-12);
    }

    #[test]
    fn spearman_works_in_single_precision() {
        let r = spearman(&[1.0f32, 2.0, 3.0, 4.0], &[1.0f32, 3.0, 2.0, 4.0]).unwrap();
        assert!((r.r.unwrap() - 0.8).abs() < 1e-6);
    }
}
