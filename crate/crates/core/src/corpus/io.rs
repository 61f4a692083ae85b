//! CSV and JSON readers/writers for items and long-format responses.
//!
//! CSV columns are located by header name, so column order is free. Export
//! always emits the canonical column order, and a written file reloads to an
//! identical in-memory corpus.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{group_rows, ItemRecord, Label, RespondentRecord};
use crate::error::{Error, Result};

/// On-disk representation selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Csv,
    Json,
}

impl FileFormat {
    /// Infer from a file extension; anything but `.json` is treated as CSV.
    pub fn from_path(path: &Path) -> FileFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => FileFormat::Json,
            _ => FileFormat::Csv,
        }
    }
}

/// One long-format response row, as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub respondent_id: String,
    pub population: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity_key: Option<String>,
    pub item_id: String,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub justification: Option<String>,
}

impl ResponseRow {
    pub fn new(
        respondent_id: impl Into<String>,
        population: impl Into<String>,
        item_id: impl Into<String>,
        label: Label,
    ) -> Self {
        ResponseRow {
            respondent_id: respondent_id.into(),
            population: population.into(),
            architecture: None,
            identity_key: None,
            item_id: item_id.into(),
            label,
            justification: None,
        }
    }
}

fn parse_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

struct HeaderMap {
    positions: Vec<Option<usize>>,
}

impl HeaderMap {
    fn new(
        path: &Path,
        headers: &csv::StringRecord,
        required: &[&str],
        optional: &[&str],
    ) -> Result<HeaderMap> {
        let find = |name: &str| headers.iter().position(|h| h == name);
        let mut positions = Vec::with_capacity(required.len() + optional.len());
        for name in required {
            match find(name) {
                Some(p) => positions.push(Some(p)),
                None => {
                    return Err(parse_error(path, 1, format!("missing column `{name}`")));
                }
            }
        }
        for name in optional {
            positions.push(find(name));
        }
        Ok(HeaderMap { positions })
    }

    fn get<'r>(&self, record: &'r csv::StringRecord, slot: usize) -> &'r str {
        self.positions[slot]
            .and_then(|p| record.get(p))
            .unwrap_or("")
    }

    /// Empty cells become `None`.
    fn get_opt(&self, record: &csv::StringRecord, slot: usize) -> Option<String> {
        let v = self.get(record, slot);
        if v.is_empty() {
            None
        } else {
            Some(v.to_string())
        }
    }
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Load item definitions from CSV or JSON.
///
/// Columns: `item_id,category,premise,hypothesis,gold_label,is_attention_check`.
pub fn load_items(path: &Path, format: FileFormat) -> Result<Vec<ItemRecord>> {
    let items = match format {
        FileFormat::Json => {
            let file = BufReader::new(File::open(path)?);
            serde_json::from_reader::<_, Vec<ItemRecord>>(file)?
        }
        FileFormat::Csv => {
            let mut reader = csv::Reader::from_path(path)?;
            let header = HeaderMap::new(
                path,
                reader.headers()?,
                &[
                    "item_id",
                    "category",
                    "premise",
                    "hypothesis",
                    "gold_label",
                    "is_attention_check",
                ],
                &[],
            )?;
            let mut items = Vec::new();
            for record in reader.records() {
                let record = record?;
                let line = record_line(&record);
                let gold_label = Label::parse(header.get(&record, 4))
                    .map_err(|e| parse_error(path, line, e.to_string()))?;
                let is_attention_check = match header.get(&record, 5) {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(parse_error(
                            path,
                            line,
                            format!("expected true/false for is_attention_check, got `{other}`"),
                        ))
                    }
                };
                items.push(ItemRecord {
                    item_id: header.get(&record, 0).to_string(),
                    category: header.get(&record, 1).to_string(),
                    premise: header.get(&record, 2).to_string(),
                    hypothesis: header.get(&record, 3).to_string(),
                    gold_label,
                    is_attention_check,
                });
            }
            items
        }
    };

    let mut seen = std::collections::HashSet::new();
    for it in &items {
        if !seen.insert(it.item_id.as_str()) {
            return Err(Error::DuplicateItem(it.item_id.clone()));
        }
    }
    Ok(items)
}

/// Load long-format responses and group them by respondent.
///
/// Columns: `respondent_id,population,architecture,identity_key,item_id,label,justification`;
/// the architecture, identity key, and justification cells may be empty.
pub fn load_responses(
    path: &Path,
    format: FileFormat,
    items: &[ItemRecord],
) -> Result<Vec<RespondentRecord>> {
    let rows = match format {
        FileFormat::Json => {
            let file = BufReader::new(File::open(path)?);
            serde_json::from_reader::<_, Vec<ResponseRow>>(file)?
        }
        FileFormat::Csv => {
            let mut reader = csv::Reader::from_path(path)?;
            let header = HeaderMap::new(
                path,
                reader.headers()?,
                &["respondent_id", "population", "item_id", "label"],
                &["architecture", "identity_key", "justification"],
            )?;
            let mut rows = Vec::new();
            for record in reader.records() {
                let record = record?;
                let line = record_line(&record);
                let label = Label::parse(header.get(&record, 3))
                    .map_err(|e| parse_error(path, line, e.to_string()))?;
                rows.push(ResponseRow {
                    respondent_id: header.get(&record, 0).to_string(),
                    population: header.get(&record, 1).to_string(),
                    item_id: header.get(&record, 2).to_string(),
                    label,
                    architecture: header.get_opt(&record, 4),
                    identity_key: header.get_opt(&record, 5),
                    justification: header.get_opt(&record, 6),
                });
            }
            rows
        }
    };
    group_rows(rows, items)
}

/// Flatten respondent records back into long-format rows.
///
/// Rows are ordered by respondent (input order), then by item id.
pub fn response_rows(respondents: &[RespondentRecord]) -> Vec<ResponseRow> {
    let mut rows = Vec::new();
    for r in respondents {
        for (item_id, label) in &r.responses {
            rows.push(ResponseRow {
                respondent_id: r.respondent_id.clone(),
                population: r.population.clone(),
                architecture: r.architecture.clone(),
                identity_key: r.identity_key.clone(),
                item_id: item_id.clone(),
                label: *label,
                justification: r.justifications.get(item_id).cloned(),
            });
        }
    }
    rows
}

pub fn write_items_csv(path: &Path, items: &[ItemRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "item_id",
        "category",
        "premise",
        "hypothesis",
        "gold_label",
        "is_attention_check",
    ])?;
    for it in items {
        writer.write_record([
            it.item_id.as_str(),
            it.category.as_str(),
            it.premise.as_str(),
            it.hypothesis.as_str(),
            it.gold_label.as_str(),
            if it.is_attention_check { "true" } else { "false" },
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_items_json(path: &Path, items: &[ItemRecord]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, items)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

pub fn write_responses_csv(path: &Path, respondents: &[RespondentRecord]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "respondent_id",
        "population",
        "architecture",
        "identity_key",
        "item_id",
        "label",
        "justification",
    ])?;
    for row in response_rows(respondents) {
        writer.write_record([
            row.respondent_id.as_str(),
            row.population.as_str(),
            row.architecture.as_deref().unwrap_or(""),
            row.identity_key.as_deref().unwrap_or(""),
            row.item_id.as_str(),
            row.label.as_str(),
            row.justification.as_deref().unwrap_or(""),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_responses_json(path: &Path, respondents: &[RespondentRecord]) -> Result<()> {
    let rows = response_rows(respondents);
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, &rows)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}
