//! Classical test statistics: per-item difficulty, inter-item correlation
//! (phi), item-total correlation, and difficulty comparison across
//! populations.

use serde::{Deserialize, Serialize};

use crate::corpus::{PopulationSlice, ResponseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::{self, CorrelationResult, Method, PValueSpec};

/// Per-item fraction-correct values for one category and population slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyVector<S> {
    pub category: String,
    pub population: String,
    pub item_ids: Vec<String>,
    /// Fraction of the slice answering each item correctly, in item order.
    pub values: Vec<S>,
}

/// Mean inter-item correlation over a set of items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanIic<S> {
    pub value: S,
    /// Pairs that entered the mean.
    pub n_pairs: usize,
    /// Pairs skipped because their correlation was undefined.
    pub n_skipped: usize,
}

/// Fraction of a population slice answering each category item correctly.
pub fn difficulty<S: Scalar>(
    matrix: &ResponseMatrix,
    slice: &PopulationSlice,
    category: &str,
) -> Result<DifficultyVector<S>> {
    let block = matrix.category_block(slice, category)?;
    let n = S::from_usize_lossy(block.n_respondents());
    let values = (0..block.n_items())
        .map(|i| {
            let correct = block.item_row(i).iter().filter(|&&v| v).count();
            S::from_usize_lossy(correct) / n
        })
        .collect();
    Ok(DifficultyVector {
        category: category.to_string(),
        population: slice.label().to_string(),
        item_ids: block.item_ids().to_vec(),
        values,
    })
}

/// Spearman comparison of two difficulty vectors with the default
/// t-approximation p-value.
pub fn compare_difficulty<S: Scalar>(
    d_ref: &DifficultyVector<S>,
    d_other: &DifficultyVector<S>,
) -> Result<CorrelationResult<S>> {
    compare_difficulty_with(d_ref, d_other, PValueSpec::TApprox)
}

/// Spearman comparison of two difficulty vectors with an explicit p-value
/// method.
pub fn compare_difficulty_with<S: Scalar>(
    d_ref: &DifficultyVector<S>,
    d_other: &DifficultyVector<S>,
    p_spec: PValueSpec,
) -> Result<CorrelationResult<S>> {
    if d_ref.category != d_other.category {
        return Err(Error::ItemSetMismatch(format!(
            "difficulty vectors cover different categories: `{}` vs `{}`",
            d_ref.category, d_other.category
        )));
    }
    if d_ref.item_ids != d_other.item_ids {
        return Err(Error::ItemSetMismatch(format!(
            "difficulty vectors for `{}` have different item orderings",
            d_ref.category
        )));
    }
    stats::correlate(&d_ref.values, &d_other.values, Method::Spearman, p_spec)
}

/// Phi coefficient between two 0/1 vectors; `None` when either vector has
/// zero variance.
///
/// Identical to the Pearson correlation of the vectors (and to the Matthews
/// coefficient when defined), computed from the 2×2 contingency counts.
pub fn phi<S: Scalar>(a: &[bool], b: &[bool]) -> Result<Option<S>> {
    if a.len() < 3 {
        return Ok(None);
    }
    let m = stats::matthews::<S>(a, b)?;
    Ok(if m.degenerate { None } else { Some(m.value) })
}

/// Inter-item correlation: phi between the two items' scored vectors over
/// the slice. `None` when an item has zero variance (or fewer than three
/// respondents).
pub fn inter_item_correlation<S: Scalar>(
    matrix: &ResponseMatrix,
    slice: &PopulationSlice,
    item_a: &str,
    item_b: &str,
) -> Result<Option<S>> {
    let ia = matrix
        .item_position(item_a)
        .ok_or_else(|| Error::ItemNotFound(item_a.to_string()))?;
    let ib = matrix
        .item_position(item_b)
        .ok_or_else(|| Error::ItemNotFound(item_b.to_string()))?;
    let block = matrix.block_for_items(slice, &[ia, ib])?;
    phi(block.item_row(0), block.item_row(1))
}

/// Correlation between one item's scored vector and the respondents' scores
/// on the remaining non-attention items.
///
/// `corrected` (the default elsewhere in the crate) excludes the item from
/// its own total (rest-score); the uncorrected variant correlates against
/// the full total, which is inflated by the item's self-correlation.
pub fn item_total_correlation<S: Scalar>(
    matrix: &ResponseMatrix,
    slice: &PopulationSlice,
    item_id: &str,
    corrected: bool,
) -> Result<Option<S>> {
    let target = matrix
        .item_position(item_id)
        .ok_or_else(|| Error::ItemNotFound(item_id.to_string()))?;
    let item_indices: Vec<usize> = matrix
        .items()
        .iter()
        .enumerate()
        .filter(|(i, it)| !it.is_attention_check || *i == target)
        .map(|(i, _)| i)
        .collect();
    if item_indices.len() < 2 {
        return Err(Error::TooFew {
            what: "items for an item-total correlation",
            required: 2,
            actual: item_indices.len(),
        });
    }
    let block = matrix.block_for_items(slice, &item_indices)?;
    let target_row = item_indices.iter().position(|&i| i == target).unwrap();

    let n = block.n_respondents();
    let item_vec: Vec<S> = block
        .item_row(target_row)
        .iter()
        .map(|&v| if v { S::one() } else { S::zero() })
        .collect();
    let totals: Vec<S> = (0..n)
        .map(|j| {
            let mut total = 0usize;
            for i in 0..block.n_items() {
                if (i != target_row || !corrected) && block.is_correct(i, j) {
                    total += 1;
                }
            }
            S::from_usize_lossy(total)
        })
        .collect();

    Ok(stats::pearson(&item_vec, &totals)?.r)
}

/// Mean inter-item correlation over all unordered pairs of `item_ids`,
/// skipping pairs whose correlation is undefined.
pub fn mean_iic<S: Scalar>(
    matrix: &ResponseMatrix,
    slice: &PopulationSlice,
    item_ids: &[String],
) -> Result<MeanIic<S>> {
    if item_ids.len() < 2 {
        return Err(Error::TooFew {
            what: "items for a mean inter-item correlation",
            required: 2,
            actual: item_ids.len(),
        });
    }
    let item_indices: Vec<usize> = item_ids
        .iter()
        .map(|id| {
            matrix
                .item_position(id)
                .ok_or_else(|| Error::ItemNotFound(id.clone()))
        })
        .collect::<Result<_>>()?;
    let block = matrix.block_for_items(slice, &item_indices)?;

    let mut sum = S::zero();
    let mut n_pairs = 0usize;
    let mut n_skipped = 0usize;
    for i in 0..block.n_items() {
        for j in (i + 1)..block.n_items() {
            match phi::<S>(block.item_row(i), block.item_row(j))? {
                Some(value) => {
                    sum = sum + value;
                    n_pairs += 1;
                }
                None => n_skipped += 1,
            }
        }
    }
    if n_pairs == 0 {
        return Err(Error::AllPairsUndefined);
    }
    Ok(MeanIic {
        value: sum / S::from_usize_lossy(n_pairs),
        n_pairs,
        n_skipped,
    })
}
