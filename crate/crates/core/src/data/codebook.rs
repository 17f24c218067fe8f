use serde::{Deserialize, Serialize};

use super::Cell;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Continuous,
    Ordinal,
    Nominal,
    Binary,
}

impl Kind {
    pub fn is_categorical(self) -> bool {
        self != Kind::Continuous
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Outcome,
    Predictor,
    RawInstrument,
    Identifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Level {
    pub code: i64,
    pub label: String,
}

/// Column metadata as read from the JSON codebook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    pub kind: Kind,
    #[serde(default)]
    pub levels: Vec<Level>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_level: Option<String>,
    pub role: Role,
    /// Raw tokens that denote a missing answer ("Don't know", "99", ...).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing_codes: Vec<String>,
    /// Declared scale of a continuous variable, e.g. `[1, 10]` for a ladder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

impl VariableSpec {
    pub fn continuous(name: &str, role: Role) -> Self {
        VariableSpec {
            name: name.to_string(),
            kind: Kind::Continuous,
            levels: Vec::new(),
            reference_level: None,
            role,
            missing_codes: Vec::new(),
            range: None,
        }
    }

    pub fn categorical(name: &str, kind: Kind, levels: &[(i64, &str)], reference: &str, role: Role) -> Self {
        VariableSpec {
            name: name.to_string(),
            kind,
            levels: levels.iter().map(|&(code, label)| Level { code, label: label.to_string() }).collect(),
            reference_level: Some(reference.to_string()),
            role,
            missing_codes: Vec::new(),
            range: None,
        }
    }

    /// Categorical spec with codes 0..n in label order.
    pub fn indexed(name: &str, kind: Kind, labels: &[&str], reference: &str, role: Role) -> Self {
        let levels: Vec<(i64, &str)> = labels.iter().enumerate().map(|(i, l)| (i as i64, *l)).collect();
        Self::categorical(name, kind, &levels, reference, role)
    }

    pub fn with_range(mut self, lo: f64, hi: f64) -> Self {
        self.range = Some([lo, hi]);
        self
    }

    pub fn with_missing_codes(mut self, codes: &[&str]) -> Self {
        self.missing_codes = codes.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Error::Config(format!("variable `{}`: {why}", self.name));
        match self.kind {
            Kind::Continuous => {
                if !self.levels.is_empty() {
                    return Err(bad("continuous variables carry no levels"));
                }
            }
            _ => {
                if self.levels.is_empty() {
                    return Err(bad("categorical variable without levels"));
                }
                if self.kind == Kind::Binary && self.levels.len() != 2 {
                    return Err(bad("binary variable needs exactly two levels"));
                }
                for (i, l) in self.levels.iter().enumerate() {
                    if self.levels[..i].iter().any(|o| o.code == l.code || o.label == l.label) {
                        return Err(bad("duplicate level"));
                    }
                }
                if let Some(r) = &self.reference_level {
                    if !self.levels.iter().any(|l| &l.label == r) {
                        return Err(bad("reference level is not a level"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn level_index(&self, code: i64) -> Option<usize> {
        self.levels.iter().position(|l| l.code == code)
    }

    pub fn code_of(&self, label: &str) -> Option<i64> {
        self.levels.iter().find(|l| l.label == label).map(|l| l.code)
    }

    pub fn label_of(&self, code: i64) -> Option<&str> {
        self.levels.iter().find(|l| l.code == code).map(|l| l.label.as_str())
    }

    pub fn reference_index(&self) -> Option<usize> {
        let r = self.reference_level.as_ref()?;
        self.levels.iter().position(|l| &l.label == r)
    }

    pub(crate) fn check_cell(&self, cell: &Cell) -> Result<()> {
        let violation = |v: String| Error::CodebookViolation { column: self.name.clone(), value: v };
        match (self.kind, cell) {
            (_, Cell::Missing) => Ok(()),
            (Kind::Continuous, Cell::Numeric(v)) if v.is_finite() => Ok(()),
            (Kind::Continuous, c) => Err(violation(format!("{c:?}"))),
            (_, Cell::Category(code)) if self.level_index(*code).is_some() => Ok(()),
            (_, c) => Err(violation(format!("{c:?}"))),
        }
    }

    /// Parse one raw CSV token under this spec.
    pub fn parse_token(&self, token: &str) -> Result<Cell> {
        let t = token.trim();
        if t.is_empty() || self.missing_codes.iter().any(|m| m == t) {
            return Ok(Cell::Missing);
        }
        let violation = || Error::CodebookViolation { column: self.name.clone(), value: t.to_string() };
        match self.kind {
            Kind::Continuous => match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Cell::Numeric(v)),
                _ => Err(violation()),
            },
            _ => {
                if let Ok(code) = t.parse::<i64>() {
                    if self.level_index(code).is_some() {
                        return Ok(Cell::Category(code));
                    }
                }
                self.code_of(t).map(Cell::Category).ok_or_else(violation)
            }
        }
    }

    pub fn format_cell(cell: &Cell) -> String {
        match cell {
            Cell::Numeric(v) => format!("{v}"),
            Cell::Category(c) => c.to_string(),
            Cell::Missing => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Codebook {
    pub variables: Vec<VariableSpec>,
}

impl Codebook {
    pub fn get(&self, name: &str) -> Option<&VariableSpec> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cb: Codebook = serde_json::from_str(text).map_err(|e| Error::Config(format!("codebook: {e}")))?;
        for v in &cb.variables {
            v.validate()?;
        }
        Ok(cb)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("codebook serializes")
    }
}
