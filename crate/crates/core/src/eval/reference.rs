use std::collections::BTreeMap;

use serde::Deserialize;

use crate::fact::VhType;

const REFERENCE_TABLES: &str = include_str!("../../data/reference_tables.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceColumn {
    pub method: String,
    pub stated_average: f64,
    values: BTreeMap<String, f64>,
}

impl ReferenceColumn {
    /// Per-type values keyed by type; unknown keys are rejected at load time.
    pub fn values(&self) -> BTreeMap<VhType, f64> {
        self.values
            .iter()
            .map(|(k, v)| (VhType::from_config_key(k).expect("validated key"), *v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceTable {
    pub name: String,
    pub metric: String,
    pub column: Vec<ReferenceColumn>,
}

impl ReferenceTable {
    pub fn columns(&self) -> Vec<(String, BTreeMap<VhType, f64>)> {
        self.column.iter().map(|c| (c.method.clone(), c.values())).collect()
    }
}

/// Published per-type accuracy columns shipped as aggregation fixtures.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceTables {
    pub table: Vec<ReferenceTable>,
}

impl ReferenceTables {
    pub fn shipped() -> Self {
        let tables: ReferenceTables = toml::from_str(REFERENCE_TABLES).expect("shipped reference tables parse");
        for t in &tables.table {
            for c in &t.column {
                assert_eq!(c.values.len(), 8, "{} / {} must list all eight types", t.name, c.method);
                for k in c.values.keys() {
                    assert!(VhType::from_config_key(k).is_some(), "unknown type key {k:?}");
                }
            }
        }
        tables
    }

    pub fn get(&self, name: &str) -> Option<&ReferenceTable> {
        self.table.iter().find(|t| t.name == name)
    }
}
