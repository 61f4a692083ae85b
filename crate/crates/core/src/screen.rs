//! Staged respondent screening: duplicate-identity rejection, score and
//! attention-check thresholds, and automatable justification heuristics
//! with a manual-review queue for everything that needs human judgment.
//!
//! The three stages run in order and the first decisive verdict wins, so a
//! stage-1 rejection never carries later-stage reasons.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{ItemRecord, RespondentRecord, ResponseMatrix};

/// Reject when the overall fraction correct is strictly below this.
pub const OVERALL_REJECT_BELOW: f64 = 0.40;
/// Accept when the overall fraction correct is strictly above this.
pub const OVERALL_ACCEPT_ABOVE: f64 = 0.60;
/// In the middle band, reject when the attention-check fraction is strictly
/// below this.
pub const ATTENTION_REJECT_BELOW: f64 = 0.75;
/// Flag a justification as copied when, after normalization, it is at least
/// this long and appears inside the item's premise or hypothesis.
pub const QUESTION_COPY_MIN_LEN: usize = 15;
/// Flag when one normalized justification covers at least this share of a
/// respondent's answers.
pub const CONSTANT_JUSTIFICATION_SHARE: f64 = 0.80;
/// Flag justifications whose normalized length is at most this many
/// characters ("good", "nice", …).
pub const LOW_CONTENT_MAX_LEN: usize = 4;

/// Final screening verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    NeedsReview,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Accept => "accept",
            Verdict::Reject => "reject",
            Verdict::NeedsReview => "needs_review",
        }
    }
}

/// Outcome of the score-threshold stage in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage2Outcome {
    Accept,
    Reject,
    /// Middle-band score with acceptable attention checks: defer to stage 3.
    Continue,
    NeedsReview,
}

/// One respondent's screening record: where the protocol stopped, the
/// verdict, every rule that fired, and the score fractions the thresholds
/// were applied to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningDecision {
    pub respondent_id: String,
    /// 1 = duplicate stage, 2 = score stage, 3 = justification stage.
    pub stage_reached: u8,
    pub verdict: Verdict,
    /// Identifiers of the rules that fired; nonempty for every rejection.
    pub reasons: Vec<String>,
    /// Fraction correct over answered non-attention items, if any.
    pub overall_fraction: Option<f64>,
    /// Fraction correct over answered attention-check items, if any.
    pub attention_fraction: Option<f64>,
}

/// Lowercase, trim, and collapse runs of whitespace to single spaces.
pub fn normalize(text: &str) -> String {
    text.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

/// Identity-key duplicate pass: within each key group, every submission
/// after the first (in input order) is rejected. Records without a key are
/// exempt.
pub fn stage1_duplicates(respondents: &[RespondentRecord]) -> BTreeSet<String> {
    let mut seen: HashSet<&str> = HashSet::new();
    let mut rejected = BTreeSet::new();
    for r in respondents {
        let Some(key) = r.identity_key.as_deref() else {
            continue;
        };
        if !seen.insert(key) {
            rejected.insert(r.respondent_id.clone());
        }
    }
    rejected
}

/// Fractions correct over answered non-attention and attention items for
/// one respondent (matrix column), `None` when no such item was answered.
pub fn respondent_scores(matrix: &ResponseMatrix, respondent: usize) -> (Option<f64>, Option<f64>) {
    let mut overall = (0usize, 0usize);
    let mut attention = (0usize, 0usize);
    for (i, item) in matrix.items().iter().enumerate() {
        let Some(correct) = matrix.scored(i, respondent) else {
            continue;
        };
        let bucket = if item.is_attention_check {
            &mut attention
        } else {
            &mut overall
        };
        bucket.0 += correct as usize;
        bucket.1 += 1;
    }
    let fraction = |(hits, total): (usize, usize)| {
        (total > 0).then(|| hits as f64 / total as f64)
    };
    (fraction(overall), fraction(attention))
}

/// Score-threshold rule: strictly below 0.40 rejects, strictly above 0.60
/// accepts, and the middle band falls to the attention checks — strictly
/// below 0.75 rejects, otherwise stage 3 decides. A middle-band record with
/// no attention checks (or none answered at all) cannot be ruled on and
/// goes to review.
pub fn stage2_outcome(
    overall: Option<f64>,
    attention: Option<f64>,
) -> (Stage2Outcome, Vec<String>) {
    let Some(overall) = overall else {
        return (
            Stage2Outcome::NeedsReview,
            vec!["no_scored_answers".to_string()],
        );
    };
    if overall < OVERALL_REJECT_BELOW {
        return (Stage2Outcome::Reject, vec!["overall_below_40".to_string()]);
    }
    if overall > OVERALL_ACCEPT_ABOVE {
        return (Stage2Outcome::Accept, vec!["overall_above_60".to_string()]);
    }
    match attention {
        None => (
            Stage2Outcome::NeedsReview,
            vec!["no_attention_checks".to_string()],
        ),
        Some(a) if a < ATTENTION_REJECT_BELOW => (
            Stage2Outcome::Reject,
            vec!["attention_below_75".to_string()],
        ),
        Some(_) => (Stage2Outcome::Continue, Vec::new()),
    }
}

/// Score-threshold stage for one matrix column.
pub fn stage2_scores(
    matrix: &ResponseMatrix,
    respondent: usize,
) -> (Stage2Outcome, Vec<String>) {
    let (overall, attention) = respondent_scores(matrix, respondent);
    stage2_outcome(overall, attention)
}

/// Justification heuristics: the three automatable checks plus a
/// missing-field check. Any flag sends the record to manual review;
/// relevance itself is deliberately not automated.
///
/// Flags:
/// - `question_copy`: a normalized justification of ≥ 15 characters appears
///   verbatim inside its item's premise or hypothesis;
/// - `constant_justification`: one normalized string covers ≥ 80% of the
///   respondent's answers;
/// - `low_content`: any normalized justification is ≤ 4 characters;
/// - `missing_justifications`: some answer has no justification at all.
pub fn stage3_justifications(
    respondent: &RespondentRecord,
    items: &[ItemRecord],
) -> (Vec<String>, Verdict) {
    let by_id: HashMap<&str, &ItemRecord> =
        items.iter().map(|it| (it.item_id.as_str(), it)).collect();
    let mut flags = Vec::new();

    let missing = respondent
        .responses
        .keys()
        .any(|item_id| !respondent.justifications.contains_key(item_id));
    if missing {
        flags.push("missing_justifications".to_string());
    }

    let mut copied = false;
    let mut short = false;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for (item_id, text) in &respondent.justifications {
        let norm = normalize(text);
        if norm.chars().count() <= LOW_CONTENT_MAX_LEN {
            short = true;
        }
        if norm.chars().count() >= QUESTION_COPY_MIN_LEN {
            if let Some(item) = by_id.get(item_id.as_str()) {
                if normalize(&item.premise).contains(&norm)
                    || normalize(&item.hypothesis).contains(&norm)
                {
                    copied = true;
                }
            }
        }
        *counts.entry(norm).or_insert(0) += 1;
    }
    if copied {
        flags.push("question_copy".to_string());
    }
    let n_answers = respondent.responses.len();
    if n_answers > 0 {
        let top = counts.values().copied().max().unwrap_or(0);
        if top as f64 >= CONSTANT_JUSTIFICATION_SHARE * n_answers as f64 && top > 1 {
            flags.push("constant_justification".to_string());
        }
    }
    if short {
        flags.push("low_content".to_string());
    }

    let verdict = if flags.is_empty() {
        Verdict::Accept
    } else {
        Verdict::NeedsReview
    };
    (flags, verdict)
}

/// Run the full protocol over every respondent in the matrix, in input
/// order (which is the submission order stage 1 keys on).
pub fn screen_all(matrix: &ResponseMatrix) -> Vec<ScreeningDecision> {
    let duplicates = stage1_duplicates(matrix.respondents());
    matrix
        .respondents()
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let (overall, attention) = respondent_scores(matrix, j);
            let decision = |stage, verdict, reasons| ScreeningDecision {
                respondent_id: r.respondent_id.clone(),
                stage_reached: stage,
                verdict,
                reasons,
                overall_fraction: overall,
                attention_fraction: attention,
            };
            if duplicates.contains(&r.respondent_id) {
                return decision(1, Verdict::Reject, vec!["duplicate_identity".to_string()]);
            }
            let (outcome, reasons) = stage2_outcome(overall, attention);
            match outcome {
                Stage2Outcome::Accept => decision(2, Verdict::Accept, reasons),
                Stage2Outcome::Reject => decision(2, Verdict::Reject, reasons),
                Stage2Outcome::NeedsReview => decision(2, Verdict::NeedsReview, reasons),
                Stage2Outcome::Continue => {
                    let (flags, verdict) = stage3_justifications(r, matrix.items());
                    decision(3, verdict, flags)
                }
            }
        })
        .collect()
}
