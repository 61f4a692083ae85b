//! Data model for items, respondents, and scored response matrices.
//!
//! Everything downstream (classical statistics, clustering, latent-trait
//! fits, screening) consumes the scored 0/1/missing matrix built here; raw
//! labels are kept alongside so the matrix is always recomputable.

mod io;

pub use io::{
    load_items, load_responses, write_items_csv, write_items_json, write_responses_csv,
    write_responses_json, FileFormat, ResponseRow,
};

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The three inference labels an item can carry and a respondent can answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Entailment,
    Contradiction,
    Neutral,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Contradiction, Label::Neutral];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Contradiction => "contradiction",
            Label::Neutral => "neutral",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "entailment" => Ok(Label::Entailment),
            "contradiction" => Ok(Label::Contradiction),
            "neutral" => Ok(Label::Neutral),
            other => Err(Error::UnknownLabel {
                value: other.to_string(),
            }),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One test item: a premise/hypothesis pair with a gold label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub item_id: String,
    pub category: String,
    pub premise: String,
    pub hypothesis: String,
    pub gold_label: Label,
    pub is_attention_check: bool,
}

/// One respondent: population tag, optional identity/architecture metadata,
/// and the labels (plus optional justifications) they gave per item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RespondentRecord {
    pub respondent_id: String,
    pub population: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_key: Option<String>,
    pub responses: BTreeMap<String, Label>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub justifications: BTreeMap<String, String>,
}

impl RespondentRecord {
    pub fn new(respondent_id: impl Into<String>, population: impl Into<String>) -> Self {
        RespondentRecord {
            respondent_id: respondent_id.into(),
            population: population.into(),
            architecture: None,
            identity_key: None,
            responses: BTreeMap::new(),
            justifications: BTreeMap::new(),
        }
    }
}

/// Items x respondents matrix of scored responses.
///
/// `scored(i, j)` is `Some(true)` when respondent `j` answered item `i` with
/// its gold label, `Some(false)` on a wrong answer, and `None` when the item
/// was left unanswered.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMatrix {
    items: Vec<ItemRecord>,
    respondents: Vec<RespondentRecord>,
    scored: Vec<Option<bool>>,
    item_index: HashMap<String, usize>,
}

/// Predicate over respondent population and architecture tags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<String>,
}

impl Selector {
    pub fn population(tag: impl Into<String>) -> Self {
        Selector {
            population: Some(tag.into()),
            architecture: None,
        }
    }

    pub fn with_architecture(mut self, arch: impl Into<String>) -> Self {
        self.architecture = Some(arch.into());
        self
    }

    pub fn matches(&self, respondent: &RespondentRecord) -> bool {
        if let Some(pop) = &self.population {
            if &respondent.population != pop {
                return false;
            }
        }
        if let Some(arch) = &self.architecture {
            if respondent.architecture.as_deref() != Some(arch.as_str()) {
                return false;
            }
        }
        true
    }

    pub fn describe(&self) -> String {
        match (&self.population, &self.architecture) {
            (Some(p), Some(a)) => format!("{p}/{a}"),
            (Some(p), None) => p.clone(),
            (None, Some(a)) => format!("*/{a}"),
            (None, None) => "*".to_string(),
        }
    }
}

/// Resolved respondent indices for one population selection.
///
/// Indices are strictly increasing and nonempty by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PopulationSlice {
    label: String,
    respondent_indices: Vec<usize>,
}

impl PopulationSlice {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn indices(&self) -> &[usize] {
        &self.respondent_indices
    }

    pub fn len(&self) -> usize {
        self.respondent_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.respondent_indices.is_empty()
    }
}

/// Complete (no missing entries) scored block for one category and slice.
///
/// Attention-check items never enter analysis blocks; they are consumed by
/// the screening protocol only.
#[derive(Debug, Clone)]
pub struct Block {
    item_ids: Vec<String>,
    item_indices: Vec<usize>,
    respondent_indices: Vec<usize>,
    correct: Vec<bool>, // row-major: items x respondents
}

impl Block {
    pub fn n_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn n_respondents(&self) -> usize {
        self.respondent_indices.len()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn item_indices(&self) -> &[usize] {
        &self.item_indices
    }

    pub fn respondent_indices(&self) -> &[usize] {
        &self.respondent_indices
    }

    pub fn is_correct(&self, item: usize, respondent: usize) -> bool {
        self.correct[item * self.respondent_indices.len() + respondent]
    }

    /// 0/1 response vector of one item across the block's respondents.
    pub fn item_row(&self, item: usize) -> &[bool] {
        let n = self.respondent_indices.len();
        &self.correct[item * n..(item + 1) * n]
    }
}

/// Score respondents against item gold labels.
///
/// Validates the same invariants the loaders enforce, so programmatically
/// built corpora get the same guarantees as file-loaded ones.
pub fn score(items: &[ItemRecord], respondents: &[RespondentRecord]) -> Result<ResponseMatrix> {
    let mut item_index = HashMap::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        if item_index.insert(item.item_id.clone(), i).is_some() {
            return Err(Error::DuplicateItem(item.item_id.clone()));
        }
    }

    let mut seen = HashSet::with_capacity(respondents.len());
    for r in respondents {
        if !seen.insert(r.respondent_id.as_str()) {
            return Err(Error::ConflictingField {
                respondent_id: r.respondent_id.clone(),
                field: "respondent_id",
                first: "first occurrence".to_string(),
                second: "second occurrence".to_string(),
            });
        }
        for item_id in r.responses.keys() {
            if !item_index.contains_key(item_id) {
                return Err(Error::UnknownItem {
                    respondent_id: r.respondent_id.clone(),
                    item_id: item_id.clone(),
                });
            }
        }
    }

    let mut scored = vec![None; items.len() * respondents.len()];
    for (j, r) in respondents.iter().enumerate() {
        for (item_id, label) in &r.responses {
            let i = item_index[item_id];
            scored[i * respondents.len() + j] = Some(*label == items[i].gold_label);
        }
    }

    Ok(ResponseMatrix {
        items: items.to_vec(),
        respondents: respondents.to_vec(),
        scored,
        item_index,
    })
}

impl ResponseMatrix {
    pub fn items(&self) -> &[ItemRecord] {
        &self.items
    }

    pub fn respondents(&self) -> &[RespondentRecord] {
        &self.respondents
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_respondents(&self) -> usize {
        self.respondents.len()
    }

    pub fn scored(&self, item: usize, respondent: usize) -> Option<bool> {
        self.scored[item * self.respondents.len() + respondent]
    }

    pub fn item_position(&self, item_id: &str) -> Option<usize> {
        self.item_index.get(item_id).copied()
    }

    /// Distinct category names of non-attention items, in first-appearance order.
    pub fn categories(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for item in &self.items {
            if !item.is_attention_check && seen.insert(item.category.as_str()) {
                out.push(item.category.clone());
            }
        }
        out
    }

    /// Distinct population tags, sorted.
    pub fn populations(&self) -> Vec<String> {
        let mut tags: Vec<String> = self
            .respondents
            .iter()
            .map(|r| r.population.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        tags.sort();
        tags
    }

    /// Distinct architecture tags within one population, sorted.
    pub fn architectures(&self, population: &str) -> Vec<String> {
        let mut tags: Vec<String> = self
            .respondents
            .iter()
            .filter(|r| r.population == population)
            .filter_map(|r| r.architecture.clone())
            .collect::<HashSet<_>>()
            .into_iter()
            .collect();
        tags.sort();
        tags
    }

    /// Resolve a selector into respondent indices, preserving input order.
    pub fn slice(&self, selector: &Selector) -> Result<PopulationSlice> {
        let indices: Vec<usize> = self
            .respondents
            .iter()
            .enumerate()
            .filter(|(_, r)| selector.matches(r))
            .map(|(j, _)| j)
            .collect();
        if indices.is_empty() {
            return Err(Error::EmptySlice(selector.describe()));
        }
        Ok(PopulationSlice {
            label: selector.describe(),
            respondent_indices: indices,
        })
    }

    /// Complete scored block of a category's non-attention items for a slice.
    ///
    /// Errors on an empty category or on any missing entry in the selected
    /// block; analyses reject incomplete data rather than imputing.
    pub fn category_block(&self, slice: &PopulationSlice, category: &str) -> Result<Block> {
        let item_indices: Vec<usize> = self
            .items
            .iter()
            .enumerate()
            .filter(|(_, it)| it.category == category && !it.is_attention_check)
            .map(|(i, _)| i)
            .collect();
        if item_indices.is_empty() {
            return Err(Error::EmptyCategory(category.to_string()));
        }
        self.block_for_items(slice, &item_indices)
    }

    /// Complete scored block over explicit item positions.
    pub fn block_for_items(
        &self,
        slice: &PopulationSlice,
        item_indices: &[usize],
    ) -> Result<Block> {
        let n = slice.respondent_indices.len();
        let mut correct = Vec::with_capacity(item_indices.len() * n);
        for &i in item_indices {
            for &j in &slice.respondent_indices {
                match self.scored(i, j) {
                    Some(v) => correct.push(v),
                    None => {
                        return Err(Error::MissingData {
                            respondent_id: self.respondents[j].respondent_id.clone(),
                            item_id: self.items[i].item_id.clone(),
                        })
                    }
                }
            }
        }
        Ok(Block {
            item_ids: item_indices
                .iter()
                .map(|&i| self.items[i].item_id.clone())
                .collect(),
            item_indices: item_indices.to_vec(),
            respondent_indices: slice.respondent_indices.clone(),
            correct,
        })
    }
}

/// Group long-format response rows into respondent records.
///
/// Rows for the same respondent must agree on population, architecture, and
/// identity key; duplicate (respondent, item) pairs and references to unknown
/// items are rejected.
pub fn group_rows(rows: Vec<ResponseRow>, items: &[ItemRecord]) -> Result<Vec<RespondentRecord>> {
    let known: HashSet<&str> = items.iter().map(|it| it.item_id.as_str()).collect();
    let mut order: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, RespondentRecord> = HashMap::new();

    for row in rows {
        if !known.contains(row.item_id.as_str()) {
            return Err(Error::UnknownItem {
                respondent_id: row.respondent_id,
                item_id: row.item_id,
            });
        }
        let record = by_id.entry(row.respondent_id.clone()).or_insert_with(|| {
            order.push(row.respondent_id.clone());
            let mut r = RespondentRecord::new(row.respondent_id.clone(), row.population.clone());
            r.architecture = row.architecture.clone();
            r.identity_key = row.identity_key.clone();
            r
        });

        if record.population != row.population {
            return Err(Error::ConflictingField {
                respondent_id: row.respondent_id,
                field: "population",
                first: record.population.clone(),
                second: row.population,
            });
        }
        if record.architecture != row.architecture {
            return Err(Error::ConflictingField {
                respondent_id: row.respondent_id,
                field: "architecture",
                first: format!("{:?}", record.architecture),
                second: format!("{:?}", row.architecture),
            });
        }
        if record.identity_key != row.identity_key {
            return Err(Error::ConflictingField {
                respondent_id: row.respondent_id,
                field: "identity_key",
                first: format!("{:?}", record.identity_key),
                second: format!("{:?}", row.identity_key),
            });
        }
        match record.responses.entry(row.item_id.clone()) {
            Entry::Occupied(_) => {
                return Err(Error::DuplicateResponse {
                    respondent_id: row.respondent_id,
                    item_id: row.item_id,
                })
            }
            Entry::Vacant(slot) => {
                slot.insert(row.label);
            }
        }
        if let Some(j) = row.justification {
            record.justifications.insert(row.item_id, j);
        }
    }

    Ok(order.into_iter().map(|id| by_id.remove(&id).unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, category: &str, gold: Label) -> ItemRecord {
        ItemRecord {
            item_id: id.to_string(),
            category: category.to_string(),
            premise: format!("premise {id}"),
            hypothesis: format!("hypothesis {id}"),
            gold_label: gold,
            is_attention_check: false,
        }
    }

    fn respondent(id: &str, population: &str, answers: &[(&str, Label)]) -> RespondentRecord {
        let mut r = RespondentRecord::new(id, population);
        for (item_id, label) in answers {
            r.responses.insert(item_id.to_string(), *label);
        }
        r
    }

    fn three_items() -> Vec<ItemRecord> {
        vec![
            item("q1", "PS", Label::Entailment),
            item("q2", "PS", Label::Contradiction),
            item("q3", "PS", Label::Neutral),
        ]
    }

    #[test]
    fn score_all_correct_column() {
        let items = three_items();
        let r = respondent(
            "w1",
            "human",
            &[
                ("q1", Label::Entailment),
                ("q2", Label::Contradiction),
                ("q3", Label::Neutral),
            ],
        );
        let m = score(&items, &[r]).unwrap();
        assert_eq!(m.scored(0, 0), Some(true));
        assert_eq!(m.scored(1, 0), Some(true));
        assert_eq!(m.scored(2, 0), Some(true));
    }

    #[test]
    fn score_unanswered_column_is_missing() {
        let items = three_items();
        let r = respondent("w1", "human", &[]);
        let m = score(&items, &[r]).unwrap();
        for i in 0..3 {
            assert_eq!(m.scored(i, 0), None);
        }
    }

    #[test]
    fn score_mixed_answers() {
        // gold {e, c, n}, answers {e, n, n} -> [1, 0, 1]
        let items = three_items();
        let r = respondent(
            "w1",
            "human",
            &[
                ("q1", Label::Entailment),
                ("q2", Label::Neutral),
                ("q3", Label::Neutral),
            ],
        );
        let m = score(&items, &[r]).unwrap();
        assert_eq!(m.scored(0, 0), Some(true));
        assert_eq!(m.scored(1, 0), Some(false));
        assert_eq!(m.scored(2, 0), Some(true));
    }

    #[test]
    fn score_rejects_unknown_item_reference() {
        let items = three_items();
        let r = respondent("w1", "human", &[("q99", Label::Neutral)]);
        let err = score(&items, &[r]).unwrap_err();
        assert!(matches!(err, Error::UnknownItem { .. }));
    }

    #[test]
    fn slice_filters_by_population() {
        let items = three_items();
        let mut respondents = Vec::new();
        for k in 0..5 {
            respondents.push(respondent(&format!("h{k}"), "human", &[]));
        }
        for k in 0..5 {
            respondents.push(respondent(&format!("m{k}"), "transformer", &[]));
        }
        let m = score(&items, &respondents).unwrap();
        let s = m.slice(&Selector::population("human")).unwrap();
        assert_eq!(s.indices(), &[0, 1, 2, 3, 4]);
    }

    #[test]
    fn slice_empty_is_an_error() {
        let items = three_items();
        let m = score(&items, &[respondent("w1", "human", &[])]).unwrap();
        let err = m.slice(&Selector::population("martian")).unwrap_err();
        assert!(matches!(err, Error::EmptySlice(_)));
    }

    #[test]
    fn slice_conjunction_with_architecture() {
        let items = three_items();
        let mut a = respondent("t1", "transformer", &[]);
        a.architecture = Some("roberta".to_string());
        let mut b = respondent("t2", "transformer", &[]);
        b.architecture = Some("bert".to_string());
        let m = score(&items, &[a, b]).unwrap();
        let s = m
            .slice(&Selector::population("transformer").with_architecture("roberta"))
            .unwrap();
        assert_eq!(s.indices(), &[0]);
    }

    #[test]
    fn block_requires_complete_data() {
        let items = three_items();
        let full = respondent(
            "w1",
            "human",
            &[
                ("q1", Label::Entailment),
                ("q2", Label::Contradiction),
                ("q3", Label::Neutral),
            ],
        );
        let partial = respondent("w2", "human", &[("q1", Label::Entailment)]);
        let m = score(&items, &[full, partial]).unwrap();
        let s = m.slice(&Selector::population("human")).unwrap();
        let err = m.category_block(&s, "PS").unwrap_err();
        assert!(matches!(err, Error::MissingData { .. }));
    }

    #[test]
    fn block_excludes_attention_checks() {
        let mut items = three_items();
        items[2].is_attention_check = true;
        let r = respondent(
            "w1",
            "human",
            &[
                ("q1", Label::Entailment),
                ("q2", Label::Contradiction),
                ("q3", Label::Neutral),
            ],
        );
        let m = score(&items, &[r]).unwrap();
        let s = m.slice(&Selector::population("human")).unwrap();
        let block = m.category_block(&s, "PS").unwrap();
        assert_eq!(block.item_ids(), &["q1".to_string(), "q2".to_string()]);
    }

    #[test]
    fn group_rows_merges_one_respondent() {
        let items = three_items();
        let rows = vec![
            ResponseRow::new("w1", "human", "q1", Label::Entailment),
            ResponseRow::new("w1", "human", "q2", Label::Neutral),
        ];
        let rs = group_rows(rows, &items).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].responses.len(), 2);
    }

    #[test]
    fn group_rows_rejects_unknown_item() {
        let items = three_items();
        let rows = vec![ResponseRow::new("w1", "human", "q99", Label::Neutral)];
        assert!(matches!(
            group_rows(rows, &items).unwrap_err(),
            Error::UnknownItem { .. }
        ));
    }

    #[test]
    fn group_rows_rejects_conflicting_population() {
        let items = three_items();
        let rows = vec![
            ResponseRow::new("w1", "human", "q1", Label::Entailment),
            ResponseRow::new("w1", "transformer", "q2", Label::Neutral),
        ];
        assert!(matches!(
            group_rows(rows, &items).unwrap_err(),
            Error::ConflictingField { field: "population", .. }
        ));
    }

    #[test]
    fn group_rows_rejects_duplicate_response() {
        let items = three_items();
        let rows = vec![
            ResponseRow::new("w1", "human", "q1", Label::Entailment),
            ResponseRow::new("w1", "human", "q1", Label::Neutral),
        ];
        assert!(matches!(
            group_rows(rows, &items).unwrap_err(),
            Error::DuplicateResponse { .. }
        ));
    }
}
