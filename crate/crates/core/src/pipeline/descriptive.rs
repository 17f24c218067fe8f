//! Per-class summary table: median (IQR) with Mann-Whitney p for continuous
//! columns, n (%) with chi-square p for categorical ones.

use serde::{Deserialize, Serialize};

use crate::data::{Cell, Cohort};
use crate::error::{Error, Result};
use crate::logit::format_p;
use crate::stats::{chi_square_test, mann_whitney, quartiles};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveRow {
    pub variable: String,
    /// `None` on a categorical header row and on continuous rows.
    pub level: Option<String>,
    /// One formatted cell per outcome class; empty on header rows.
    pub groups: [String; 2],
    /// Set on the first row of each variable.
    pub p_value: Option<f64>,
    pub test: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveTable {
    pub classes: [String; 2],
    pub class_sizes: [usize; 2],
    pub rows: Vec<DescriptiveRow>,
}

fn pct(count: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * count as f64 / total as f64
    }
}

/// Summaries over rows where both the variable and the outcome are observed.
/// Percentages use each class's observed count for that variable.
pub fn descriptive_report(cohort: &Cohort, outcome: &str, variables: &[String]) -> Result<DescriptiveTable> {
    let ycol = cohort.column(outcome)?;
    if ycol.spec.levels.len() != 2 {
        return Err(Error::InvalidOutcome(outcome.to_string()));
    }
    let y = ycol.level_indices();
    let classes = [ycol.spec.levels[0].label.clone(), ycol.spec.levels[1].label.clone()];
    let mut class_sizes = [0usize; 2];
    for c in y.iter().flatten() {
        class_sizes[*c] += 1;
    }
    let mut rows = Vec::new();
    for name in variables {
        let col = cohort.column(name)?;
        if col.spec.kind.is_categorical() {
            let mut table = vec![[0u64; 2]; col.spec.levels.len()];
            for (l, c) in col.level_indices().iter().zip(&y) {
                if let (Some(l), Some(c)) = (l, c) {
                    table[*l][*c] += 1;
                }
            }
            let totals = [0, 1].map(|c| table.iter().map(|t| t[c] as usize).sum::<usize>());
            let as_rows: Vec<Vec<u64>> = table.iter().map(|t| t.to_vec()).collect();
            let p = match chi_square_test(&as_rows) {
                Ok(t) => t.p_value,
                Err(Error::DegenerateTable) => 1.0,
                Err(e) => return Err(e),
            };
            rows.push(DescriptiveRow {
                variable: name.clone(),
                level: None,
                groups: [String::new(), String::new()],
                p_value: Some(p),
                test: Some("chi_square".into()),
            });
            for (level, t) in col.spec.levels.iter().zip(&table) {
                rows.push(DescriptiveRow {
                    variable: name.clone(),
                    level: Some(level.label.clone()),
                    groups: [0, 1].map(|c| format!("{} ({:.1})", t[c], pct(t[c] as usize, totals[c]))),
                    p_value: None,
                    test: None,
                });
            }
        } else {
            let mut groups: [Vec<f64>; 2] = [vec![], vec![]];
            for (cell, c) in col.cells.iter().zip(&y) {
                if let (Cell::Numeric(v), Some(c)) = (cell, c) {
                    groups[*c].push(*v);
                }
            }
            let summary = |g: &[f64]| match quartiles(g) {
                Some((q1, med, q3)) => format!("{med:.1} ({q1:.1}-{q3:.1})"),
                None => "-".to_string(),
            };
            let p = if groups.iter().all(|g| !g.is_empty()) { mann_whitney(&groups[0], &groups[1])?.p_value } else { 1.0 };
            rows.push(DescriptiveRow {
                variable: name.clone(),
                level: None,
                groups: [summary(&groups[0]), summary(&groups[1])],
                p_value: Some(p),
                test: Some("mann_whitney".into()),
            });
        }
    }
    Ok(DescriptiveTable { classes, class_sizes, rows })
}

impl DescriptiveTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
        let head = [
            "variable".to_string(),
            "level".to_string(),
            format!("{} (N={})", self.classes[0], self.class_sizes[0]),
            format!("{} (N={})", self.classes[1], self.class_sizes[1]),
            "p".to_string(),
            "test".to_string(),
        ];
        w.write_record(&head)?;
        for r in &self.rows {
            w.write_record([
                r.variable.as_str(),
                r.level.as_deref().unwrap_or(""),
                r.groups[0].as_str(),
                r.groups[1].as_str(),
                &r.p_value.map(format_p).unwrap_or_default(),
                r.test.as_deref().unwrap_or(""),
            ])?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Kind, Role, VariableSpec};
    use crate::schema;

    fn cohort(x: &[f64], cat: &[i64], y: &[i64]) -> Cohort {
        let mut c = Cohort::new(y.len());
        c.push_column(VariableSpec::continuous("x", Role::Predictor), x.iter().map(|&v| Cell::Numeric(v)).collect()).unwrap();
        c.push_column(
            VariableSpec::indexed("g", Kind::Nominal, &["a", "b"], "a", Role::Predictor),
            cat.iter().map(|&v| Cell::Category(v)).collect(),
        )
        .unwrap();
        c.push_column(schema::outcome_spec(), y.iter().map(|&v| Cell::Category(v)).collect()).unwrap();
        c
    }

    #[test]
    fn seven_value_median_and_iqr() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 7.0, 7.0];
        let y = [0, 0, 0, 0, 0, 0, 0, 1, 1];
        let t = descriptive_report(&cohort(&x, &[0; 9], &y), schema::OUTCOME, &["x".into()]).unwrap();
        // Sorted 1 1 2 3 4 5 9; halves 1 1 2 3 and 3 4 5 9 both keep the median.
        assert_eq!(t.rows[0].groups[0], "3.0 (1.5-4.5)");
        assert_eq!(t.rows[0].groups[1], "7.0 (7.0-7.0)");
        assert_eq!(t.class_sizes, [7, 2]);
    }

    #[test]
    fn constant_columns_give_zero_width_and_p_one() {
        let x = [5.0; 30];
        let y: Vec<i64> = (0..30).map(|i| i64::from(i % 3 == 0)).collect();
        let t = descriptive_report(&cohort(&x, &[1; 30], &y), schema::OUTCOME, &["x".into(), "g".into()]).unwrap();
        assert_eq!(t.rows[0].groups, ["5.0 (5.0-5.0)".to_string(), "5.0 (5.0-5.0)".to_string()]);
        assert!((t.rows[0].p_value.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(t.rows[1].p_value, Some(1.0));
        assert_eq!(t.rows[3].groups, ["20 (100.0)".to_string(), "10 (100.0)".to_string()]);
        let csv = t.to_csv().unwrap();
        assert!(csv.starts_with("variable,level,Normal cognition (N=20),Dementia (N=10),p,test\n"));
        assert!(csv.contains("g,,,,1.0000,chi_square\n"));
    }
}
