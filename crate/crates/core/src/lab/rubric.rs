//! Explanation-quality judgments.
//!
//! A sheet holds nine binary cells indexed `[element][criterion]`. For the
//! Complexity criterion a 1 means the explanation *has* unnecessary
//! complexity, so lower counts are better.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::LabError;
use crate::prompt::PromptConfig;

pub const CONSENSUS_RATER: &str = "consensus";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Element {
    Position,
    Cause,
    Change,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    Correctness,
    Completeness,
    Complexity,
}

impl Element {
    pub const ALL: [Element; 3] = [Element::Position, Element::Cause, Element::Change];
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Correctness, Criterion::Completeness, Criterion::Complexity];
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricSheet {
    pub bundle_id: String,
    pub config: PromptConfig,
    pub rater: String,
    /// Written as a 3×3 array of 0/1, rows Position/Cause/Change and columns
    /// Correctness/Completeness/Complexity.
    #[serde(serialize_with = "ser_cells", deserialize_with = "de_cells")]
    pub judgments: [[bool; 3]; 3],
}

fn ser_cells<S: Serializer>(cells: &[[bool; 3]; 3], s: S) -> Result<S::Ok, S::Error> {
    let rows: [[u8; 3]; 3] = cells.map(|row| row.map(u8::from));
    rows.serialize(s)
}

fn de_cells<'de, D: Deserializer<'de>>(d: D) -> Result<[[bool; 3]; 3], D::Error> {
    let rows = <[[u8; 3]; 3]>::deserialize(d)?;
    let mut out = [[false; 3]; 3];
    for (r, row) in rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            out[r][c] = match v {
                0 => false,
                1 => true,
                _ => return Err(serde::de::Error::custom(format!("judgment {v} is not 0 or 1"))),
            };
        }
    }
    Ok(out)
}

impl RubricSheet {
    pub fn get(&self, element: Element, criterion: Criterion) -> bool {
        self.judgments[element as usize][criterion as usize]
    }

    pub fn set(&mut self, element: Element, criterion: Criterion, value: bool) {
        self.judgments[element as usize][criterion as usize] = value;
    }

    /// Cells in element-major order.
    pub fn cells(&self) -> impl Iterator<Item = (Element, Criterion, bool)> + '_ {
        Element::ALL
            .into_iter()
            .flat_map(move |e| Criterion::ALL.into_iter().map(move |c| (e, c, self.get(e, c))))
    }

    /// Nine characters of 0/1 in element-major order, e.g. `"110101011"`.
    pub fn parse_cells(text: &str) -> Result<[[bool; 3]; 3], String> {
        let bits: Vec<char> = text.chars().filter(|c| !matches!(c, ',' | ' ' | '/')).collect();
        if bits.len() != 9 {
            return Err(format!("expected 9 judgments, got {}", bits.len()));
        }
        let mut out = [[false; 3]; 3];
        for (i, b) in bits.into_iter().enumerate() {
            out[i / 3][i % 3] = match b {
                '0' => false,
                '1' => true,
                other => return Err(format!("judgment `{other}` is not 0 or 1")),
            };
        }
        Ok(out)
    }
}

pub fn sheets_from_jsonl(text: &str) -> Result<Vec<RubricSheet>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

pub fn sheets_to_jsonl(sheets: &[RubricSheet]) -> String {
    sheets
        .iter()
        .map(|s| serde_json::to_string(s).expect("sheet serialises") + "\n")
        .collect()
}

/// Counts of 1-judgments per (criterion, element, config).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RubricCounts {
    pub counts: BTreeMap<(Criterion, Element, PromptConfig), usize>,
    pub configs: BTreeSet<PromptConfig>,
}

impl RubricCounts {
    pub fn get(&self, criterion: Criterion, element: Element, config: PromptConfig) -> usize {
        self.counts.get(&(criterion, element, config)).copied().unwrap_or(0)
    }
}

/// Aggregates one sheet per (bundle, config); usually the consensus sheets.
pub fn aggregate_rubrics(sheets: &[RubricSheet]) -> Result<RubricCounts, LabError> {
    let mut seen = BTreeSet::new();
    let mut out = RubricCounts::default();
    for sheet in sheets {
        if !seen.insert((sheet.bundle_id.as_str(), sheet.config)) {
            return Err(LabError::DuplicateSheet {
                bundle_id: sheet.bundle_id.clone(),
                config: sheet.config,
            });
        }
        out.configs.insert(sheet.config);
        for (e, c, v) in sheet.cells() {
            *out.counts.entry((c, e, sheet.config)).or_default() += usize::from(v);
        }
    }
    Ok(out)
}

pub fn consensus_sheets(sheets: &[RubricSheet]) -> Vec<RubricSheet> {
    sheets.iter().filter(|s| s.rater == CONSENSUS_RATER).cloned().collect()
}

/// Pairs the two raters' sheets by (bundle, config) and flattens the cells,
/// giving aligned judgment vectors for agreement statistics.
pub fn paired_judgments(
    sheets: &[RubricSheet],
    rater_a: &str,
    rater_b: &str,
) -> Result<(Vec<bool>, Vec<bool>), LabError> {
    let by_rater = |rater: &str| -> Result<BTreeMap<(String, PromptConfig), &RubricSheet>, LabError> {
        let mut map = BTreeMap::new();
        for s in sheets.iter().filter(|s| s.rater == rater) {
            if map.insert((s.bundle_id.clone(), s.config), s).is_some() {
                return Err(LabError::DuplicateSheet {
                    bundle_id: s.bundle_id.clone(),
                    config: s.config,
                });
            }
        }
        Ok(map)
    };
    let a = by_rater(rater_a)?;
    let b = by_rater(rater_b)?;
    if !a.keys().eq(b.keys()) {
        return Err(LabError::SheetMismatch(format!(
            "raters `{rater_a}` and `{rater_b}` judged different (bundle, config) pairs"
        )));
    }
    let mut va = Vec::new();
    let mut vb = Vec::new();
    for (key, sa) in &a {
        va.extend(sa.cells().map(|(_, _, v)| v));
        vb.extend(b[key].cells().map(|(_, _, v)| v));
    }
    Ok((va, vb))
}

/// Cells where the two sheets disagree.
pub fn disputed_cells(a: &RubricSheet, b: &RubricSheet) -> Vec<(Element, Criterion)> {
    a.cells()
        .zip(b.cells())
        .filter(|((_, _, x), (_, _, y))| x != y)
        .map(|((e, c, _), _)| (e, c))
        .collect()
}

/// Builds the consensus sheet: agreed cells are copied, each disputed cell
/// is settled by `resolve(element, criterion, a_value, b_value)`.
pub fn reconcile(
    a: &RubricSheet,
    b: &RubricSheet,
    mut resolve: impl FnMut(Element, Criterion, bool, bool) -> bool,
) -> Result<RubricSheet, LabError> {
    if a.bundle_id != b.bundle_id || a.config != b.config {
        return Err(LabError::SheetMismatch(format!(
            "cannot reconcile {}/{} with {}/{}",
            a.bundle_id, a.config, b.bundle_id, b.config
        )));
    }
    let mut out = RubricSheet {
        bundle_id: a.bundle_id.clone(),
        config: a.config,
        rater: CONSENSUS_RATER.to_string(),
        judgments: a.judgments,
    };
    for (e, c) in disputed_cells(a, b) {
        let v = resolve(e, c, a.get(e, c), b.get(e, c));
        out.set(e, c, v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sheet(bundle: &str, rater: &str, cells: &str) -> RubricSheet {
        RubricSheet {
            bundle_id: bundle.into(),
            config: PromptConfig::S,
            rater: rater.into(),
            judgments: RubricSheet::parse_cells(cells).unwrap(),
        }
    }

    #[test]
    fn indexing_and_serialisation() {
        let s = sheet("b", "r", "100 010 001");
        assert!(s.get(Element::Position, Criterion::Correctness));
        assert!(s.get(Element::Cause, Criterion::Completeness));
        assert!(s.get(Element::Change, Criterion::Complexity));
        assert!(!s.get(Element::Change, Criterion::Correctness));
        let line = serde_json::to_string(&s).unwrap();
        assert!(line.contains("[[1,0,0],[0,1,0],[0,0,1]]"));
        assert_eq!(
            sheets_from_jsonl(&sheets_to_jsonl(std::slice::from_ref(&s))).unwrap(),
            vec![s]
        );
        assert!(serde_json::from_str::<RubricSheet>(&line.replace("[1,0,0]", "[2,0,0]")).is_err());
        assert!(RubricSheet::parse_cells("1101").is_err());
    }

    #[test]
    fn aggregation() {
        assert!(aggregate_rubrics(&[]).unwrap().counts.is_empty());
        let counts = aggregate_rubrics(&[sheet("a", "x", "111111111"), sheet("b", "x", "100000000")]).unwrap();
        assert_eq!(
            counts.get(Criterion::Correctness, Element::Position, PromptConfig::S),
            2
        );
        assert_eq!(counts.get(Criterion::Complexity, Element::Change, PromptConfig::S), 1);
        assert!(matches!(
            aggregate_rubrics(&[sheet("a", "x", "111111111"), sheet("a", "y", "111111111")]),
            Err(LabError::DuplicateSheet { .. })
        ));
    }

    #[test]
    fn reconciliation_and_pairing() {
        let a = sheet("b", "alice", "110110110");
        let b = sheet("b", "bob", "111110010");
        assert_eq!(
            disputed_cells(&a, &b),
            vec![
                (Element::Position, Criterion::Complexity),
                (Element::Change, Criterion::Correctness)
            ]
        );
        let c = reconcile(&a, &b, |_, _, _, y| y).unwrap();
        assert_eq!(c.rater, CONSENSUS_RATER);
        assert_eq!(c.judgments, b.judgments);
        let (va, vb) = paired_judgments(&[a.clone(), b.clone(), c], "alice", "bob").unwrap();
        assert_eq!(va.len(), 9);
        assert_eq!(va.iter().zip(&vb).filter(|(x, y)| x == y).count(), 7);
        assert!(paired_judgments(&[a], "alice", "bob").is_err());
    }
}
