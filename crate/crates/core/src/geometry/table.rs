use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// One named design parameter: default value and admissible range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterEntry {
    pub name: String,
    pub default: f64,
    pub min: f64,
    pub max: f64,
}

/// Ordered set of named parameters driving a seed design.
///
/// Tables are exchanged as a JSON sidecar holding a single table called
/// `"Spreadsheet"`, one row per parameter:
///
/// ```json
/// { "Spreadsheet": [ { "name": "chord", "default": 125.0, "min": 50.0, "max": 200.0 } ] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ParameterEntry>", into = "Vec<ParameterEntry>")]
pub struct ParameterTable {
    entries: Vec<ParameterEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    #[serde(rename = "Spreadsheet")]
    spreadsheet: ParameterTable,
}

impl TryFrom<Vec<ParameterEntry>> for ParameterTable {
    type Error = GeometryError;

    fn try_from(entries: Vec<ParameterEntry>) -> Result<Self, Self::Error> {
        ParameterTable::new(entries)
    }
}

impl From<ParameterTable> for Vec<ParameterEntry> {
    fn from(t: ParameterTable) -> Self {
        t.entries
    }
}

impl ParameterTable {
    pub fn new(entries: Vec<ParameterEntry>) -> Result<Self, GeometryError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.name.as_str()) {
                return Err(GeometryError::DuplicateParameter(e.name.clone()));
            }
            let ordered = e.min <= e.default && e.default <= e.max;
            if !ordered || !e.min.is_finite() || !e.max.is_finite() {
                return Err(GeometryError::InvalidEntry(e.name.clone()));
            }
        }
        Ok(ParameterTable { entries })
    }

    pub fn from_sidecar_json(text: &str) -> Result<Self, GeometryError> {
        let sidecar: Sidecar =
            serde_json::from_str(text).map_err(|e| GeometryError::Sidecar(e.to_string()))?;
        Ok(sidecar.spreadsheet)
    }

    pub fn to_sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&Sidecar { spreadsheet: self.clone() })
            .expect("parameter table serializes")
    }

    /// Built-in table of the revolved hull: `cp1..cp6` radial offsets (mm),
    /// `nose_length` and the fixed `total_length`.
    pub fn revolved_hull() -> Self {
        Self::from_sidecar_json(include_str!("../../seeds/revolved_hull.json"))
            .expect("bundled hull table is valid")
    }

    /// Built-in table of the winged body.
    pub fn winged_body() -> Self {
        Self::from_sidecar_json(include_str!("../../seeds/winged_body.json"))
            .expect("bundled winged-body table is valid")
    }

    pub fn entries(&self) -> &[ParameterEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&ParameterEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Current value (the default column) of a parameter.
    pub fn value(&self, name: &str) -> Result<f64, GeometryError> {
        self.get(name)
            .map(|e| e.default)
            .ok_or_else(|| GeometryError::UnknownParameter(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }
}

/// Returns a copy of `table` whose defaults are replaced by `assignment`.
pub fn apply_parameters(
    table: &ParameterTable,
    assignment: &BTreeMap<String, f64>,
) -> Result<ParameterTable, GeometryError> {
    let mut out = table.clone();
    for (name, &value) in assignment {
        let entry = out
            .entries
            .iter_mut()
            .find(|e| &e.name == name)
            .ok_or_else(|| GeometryError::UnknownParameter(name.clone()))?;
        if !(value >= entry.min && value <= entry.max) {
            return Err(GeometryError::OutOfBounds {
                name: name.clone(),
                value,
                min: entry.min,
                max: entry.max,
            });
        }
        entry.default = value;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assign(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn assign_within_bounds() {
        let t = ParameterTable::winged_body();
        let out = apply_parameters(&t, &assign(&[("chord", 150.0)])).unwrap();
        assert_eq!(out.value("chord").unwrap(), 150.0);
        assert_eq!(out.value("half_span").unwrap(), t.value("half_span").unwrap());
    }

    #[test]
    fn assign_out_of_bounds() {
        let t = ParameterTable::winged_body();
        let err = apply_parameters(&t, &assign(&[("chord", 250.0)])).unwrap_err();
        assert!(matches!(err, GeometryError::OutOfBounds { max, .. } if max == 200.0));
    }

    #[test]
    fn assign_unknown() {
        let t = ParameterTable::winged_body();
        let err = apply_parameters(&t, &assign(&[("chordd", 100.0)])).unwrap_err();
        assert!(matches!(err, GeometryError::UnknownParameter(n) if n == "chordd"));
    }

    #[test]
    fn empty_assignment_is_identity() {
        let t = ParameterTable::revolved_hull();
        assert_eq!(apply_parameters(&t, &BTreeMap::new()).unwrap(), t);
    }

    #[test]
    fn sidecar_round_trip_and_validation() {
        let t = ParameterTable::winged_body();
        let back = ParameterTable::from_sidecar_json(&t.to_sidecar_json()).unwrap();
        assert_eq!(back, t);
        let dup = r#"{"Spreadsheet":[{"name":"a","default":1,"min":0,"max":2},{"name":"a","default":1,"min":0,"max":2}]}"#;
        assert!(matches!(ParameterTable::from_sidecar_json(dup), Err(GeometryError::Sidecar(_))));
        let bad = r#"{"Spreadsheet":[{"name":"a","default":3,"min":0,"max":2}]}"#;
        assert!(ParameterTable::from_sidecar_json(bad).is_err());
    }
}
