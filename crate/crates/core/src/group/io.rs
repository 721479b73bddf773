//! JSON group tables: `{"name", "order", "table", "identity"}` with the
//! table either as rows or flattened row-major.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::FiniteGroup;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TableLayout {
    Rows(Vec<Vec<usize>>),
    Flat(Vec<usize>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupTable {
    pub name: String,
    pub order: usize,
    pub table: TableLayout,
    pub identity: usize,
}

impl From<&FiniteGroup> for GroupTable {
    fn from(g: &FiniteGroup) -> Self {
        let n = g.order();
        Self {
            name: g.name().to_string(),
            order: n,
            table: TableLayout::Rows(g.table().chunks(n).map(|r| r.to_vec()).collect()),
            identity: g.identity(),
        }
    }
}

impl GroupTable {
    /// Validates every group axiom before admitting the table.
    pub fn into_group(self) -> Result<FiniteGroup> {
        let flat = match self.table {
            TableLayout::Flat(v) => v,
            TableLayout::Rows(rows) => {
                if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != self.order) {
                    return Err(Error::Parse(format!(
                        "table row {i} has {} entries, expected {}",
                        row.len(),
                        self.order
                    )));
                }
                rows.into_iter().flatten().collect()
            }
        };
        FiniteGroup::from_table(self.name, self.order, flat, self.identity)
    }
}

pub fn parse_group(text: &str) -> Result<FiniteGroup> {
    let table: GroupTable = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("group table line {} column {}: {e}", e.line(), e.column())))?;
    table.into_group()
}

pub fn load_group(path: &Path) -> Result<FiniteGroup> {
    parse_group(&std::fs::read_to_string(path)?)
}

/// Every `*.json` table in `dir`, in file-name order.
pub fn load_dir(dir: &Path) -> Result<Vec<FiniteGroup>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            load_group(p).map_err(|e| Error::Validation(format!("{}: {e}", p.display())))
        })
        .collect()
}

pub fn to_json(g: &FiniteGroup) -> String {
    serde_json::to_string_pretty(&GroupTable::from(g)).expect("group table serializes")
}
