//! Unpenalized binary logistic regression fitted by iteratively reweighted
//! least squares, with dummy-coded designs and Wald odds-ratio tables.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{Cell, Cohort, VariableSpec};
use crate::error::{Error, Result};
use crate::linalg::{full_column_rank, spd_inverse};
use crate::matrix::Matrix;
use crate::stats::dist::normal_two_sided;

pub const Z_975: f64 = 1.959964;
/// Coefficients beyond this magnitude, still moving, indicate separation.
const SEPARATION_BOUND: f64 = 15.0;

/// One design column after the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub predictor: String,
    /// Level label for indicator columns, `None` for continuous predictors.
    pub level: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub spec: VariableSpec,
    /// Design column of each codebook level; the reference level has none.
    pub columns: Vec<Option<usize>>,
    /// Multiplier applied to continuous values (1 = raw scale).
    pub scale: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignMatrix {
    /// Column 0 is the intercept.
    pub x: Matrix,
    pub terms: Vec<Term>,
    pub blocks: Vec<Block>,
}

impl DesignMatrix {
    pub fn column_names(&self) -> Vec<String> {
        std::iter::once("(Intercept)".to_string())
            .chain(self.terms.iter().map(|t| match &t.level {
                Some(l) => format!("{}[{}]", t.predictor, l),
                None => t.predictor.clone(),
            }))
            .collect()
    }
}

/// Affine rescaling `(x - offset) / width` for continuous predictors, keyed by name.
pub type ContinuousScaling<'a> = &'a [(&'a str, f64, f64)];

/// Dummy-codes the named predictors for the selected rows: one indicator per
/// non-reference level (codebook order), one column per continuous predictor.
pub fn build_design(cohort: &Cohort, rows: &[usize], predictors: &[String], scaling: ContinuousScaling) -> Result<DesignMatrix> {
    let mut terms = Vec::new();
    let mut blocks = Vec::new();
    let mut col = 1usize;
    for name in predictors {
        let spec = cohort.column(name)?.spec.clone();
        if spec.kind.is_categorical() {
            let reference = spec.reference_index().unwrap_or(0);
            let mut columns = Vec::with_capacity(spec.levels.len());
            for (i, level) in spec.levels.iter().enumerate() {
                if i == reference {
                    columns.push(None);
                } else {
                    columns.push(Some(col));
                    terms.push(Term { predictor: name.clone(), level: Some(level.label.clone()) });
                    col += 1;
                }
            }
            blocks.push(Block { spec, columns, scale: None });
        } else {
            let scale = scaling.iter().find(|(n, _, _)| n == name).map(|&(_, o, w)| (o, w));
            terms.push(Term { predictor: name.clone(), level: None });
            blocks.push(Block { spec, columns: vec![Some(col)], scale });
            col += 1;
        }
    }
    let mut x = Matrix::zeros(rows.len(), col);
    for (i, &r) in rows.iter().enumerate() {
        x.set(i, 0, 1.0);
        for block in &blocks {
            let cell = cohort.column(&block.spec.name)?.cells[r];
            let missing = || Error::InvalidMeasure(format!("{} is missing in row {r}; impute first", block.spec.name));
            match cell {
                Cell::Missing => return Err(missing()),
                Cell::Category(code) => {
                    let li = block.spec.level_index(code).ok_or_else(|| Error::CodebookViolation {
                        column: block.spec.name.clone(),
                        value: code.to_string(),
                    })?;
                    if let Some(c) = block.columns[li] {
                        x.set(i, c, 1.0);
                    }
                }
                Cell::Numeric(v) => {
                    let c = block.columns[0].expect("continuous column");
                    let v = match block.scale {
                        Some((offset, width)) => (v - offset) / width,
                        None => v,
                    };
                    x.set(i, c, v);
                }
            }
        }
    }
    Ok(DesignMatrix { x, terms, blocks })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogitOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogitOptions {
    fn default() -> Self {
        LogitOptions { tol: 1e-8, max_iter: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub std_errors: Vec<f64>,
    pub loglik: f64,
    /// Log-likelihood after each accepted step, starting at the initial point.
    pub loglik_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn loglik(x: &DMatrix<f64>, y: &[f64], w: &[f64], beta: &DVector<f64>) -> f64 {
    let eta = x * beta;
    eta.iter().zip(y).zip(w).map(|((&e, &yi), &wi)| wi * (yi * e - softplus(e))).sum()
}

/// Maximum-likelihood fit. `weights`, when given, multiplies each row's
/// log-likelihood contribution.
pub fn fit_logit(design: &DesignMatrix, y: &[u8], weights: Option<&[f64]>, opts: &LogitOptions) -> Result<LogitModel> {
    let n = design.x.n_rows();
    let p = design.x.n_cols();
    if y.len() != n {
        return Err(Error::LengthMismatch { column: "outcome".into(), got: y.len(), expected: n });
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::DegenerateLabels);
    }
    let w: Vec<f64> = match weights {
        Some(w) if w.len() != n => {
            return Err(Error::LengthMismatch { column: "weights".into(), got: w.len(), expected: n });
        }
        Some(w) if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) => {
            return Err(Error::InvalidMeasure("weights must be finite and non-negative".into()));
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let x = DMatrix::from_row_slice(n, p, design.x.as_slice());
    if !full_column_rank(&x) {
        return Err(Error::SingularDesign);
    }
    let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
    let names = design.column_names();

    let mut beta = DVector::zeros(p);
    let mut ll = loglik(&x, &yf, &w, &beta);
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..opts.max_iter {
        let eta = &x * &beta;
        let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let resid = DVector::from_iterator(n, (0..n).map(|i| w[i] * (yf[i] - mu[i])));
        let score = x.transpose() * resid;
        let mut xw = x.clone();
        for i in 0..n {
            let s = (w[i] * mu[i] * (1.0 - mu[i])).sqrt();
            xw.row_mut(i).scale_mut(s);
        }
        let info = xw.transpose() * &xw;
        if score.amax() < opts.tol {
            converged = true;
            iterations = it;
            break;
        }
        let step = match info.cholesky() {
            Some(ch) => ch.solve(&score),
            None => return Err(separation(&beta, &names).unwrap_or(Error::SingularDesign)),
        };
        let mut t = 1.0;
        let mut candidate = &beta + &step;
        let mut ll_new = loglik(&x, &yf, &w, &candidate);
        let mut halvings = 0;
        while !(ll_new >= ll) && halvings < 40 {
            t *= 0.5;
            candidate = &beta + &step * t;
            ll_new = loglik(&x, &yf, &w, &candidate);
            halvings += 1;
        }
        if !(ll_new >= ll) {
            // no ascent along the Newton direction: at the optimum to machine precision
            converged = true;
            iterations = it + 1;
            break;
        }
        let moved = (&step * t).amax();
        beta = candidate;
        let rel = (ll_new - ll).abs() / (ll.abs() + 1e-300);
        ll = ll_new;
        trace.push(ll);
        iterations = it + 1;
        if moved > 1e-6 {
            if let Some(e) = separation(&beta, &names) {
                return Err(e);
            }
        }
        if rel < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged);
    }
    // information at the final estimate
    let mu: Vec<f64> = (&x * &beta).iter().map(|&e| sigmoid(e)).collect();
    let mut xw = x.clone();
    for i in 0..n {
        xw.row_mut(i).scale_mut((w[i] * mu[i] * (1.0 - mu[i])).sqrt());
    }
    let cov = spd_inverse(&(xw.transpose() * &xw))?;
    let std_errors = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    Ok(LogitModel {
        names,
        beta: beta.iter().copied().collect(),
        cov: (0..p).map(|i| (0..p).map(|j| cov[(i, j)]).collect()).collect(),
        std_errors,
        loglik: ll,
        loglik_trace: trace,
        converged,
        iterations,
    })
}

fn separation(beta: &DVector<f64>, names: &[String]) -> Option<Error> {
    let cols: Vec<String> =
        beta.iter().enumerate().filter(|(_, b)| b.abs() > SEPARATION_BOUND).map(|(j, _)| names[j].clone()).collect();
    (!cols.is_empty()).then_some(Error::SeparationDetected(cols))
}

impl LogitModel {
    pub fn predict_proba(&self, x: &Matrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.beta.len() {
            return Err(Error::FeatureMismatch { expected: self.beta.len(), got: x.n_cols() });
        }
        Ok((0..x.n_rows())
            .map(|i| sigmoid(x.row(i).iter().zip(&self.beta).map(|(a, b)| a * b).sum()))
            .collect())
    }

    pub fn wald_p(&self, j: usize) -> f64 {
        normal_two_sided(self.beta[j] / self.std_errors[j])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrRow {
    pub predictor: String,
    /// `None` for continuous predictors.
    pub level: Option<String>,
    pub reference: bool,
    pub n_cases: usize,
    pub n_noncases: usize,
    /// Absent on reference rows.
    pub estimate: Option<OddsRatio>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OddsRatio {
    pub beta: f64,
    pub se: f64,
    pub or: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p: f64,
}

pub fn odds_ratio(beta: f64, se: f64) -> OddsRatio {
    OddsRatio {
        beta,
        se,
        or: beta.exp(),
        ci_low: (beta - Z_975 * se).exp(),
        ci_high: (beta + Z_975 * se).exp(),
        p: normal_two_sided(beta / se),
    }
}

/// One row per predictor level in codebook order (reference rows carry no
/// estimate), one row per continuous predictor.
pub fn or_table(model: &LogitModel, design: &DesignMatrix, y: &[u8]) -> Result<Vec<OrRow>> {
    if !model.converged {
        return Err(Error::NotConverged);
    }
    if y.len() != design.x.n_rows() {
        return Err(Error::LengthMismatch { column: "outcome".into(), got: y.len(), expected: design.x.n_rows() });
    }
    let n_cases = y.iter().filter(|&&v| v == 1).count();
    let mut rows = Vec::new();
    for block in &design.blocks {
        let name = block.spec.name.clone();
        if !block.spec.kind.is_categorical() {
            let c = block.columns[0].expect("continuous column");
            rows.push(OrRow {
                predictor: name,
                level: None,
                reference: false,
                n_cases,
                n_noncases: y.len() - n_cases,
                estimate: Some(odds_ratio(model.beta[c], model.std_errors[c])),
            });
            continue;
        }
        let indicator_cols: Vec<usize> = block.columns.iter().flatten().copied().collect();
        for (li, level) in block.spec.levels.iter().enumerate() {
            let in_level = |i: usize| match block.columns[li] {
                Some(c) => design.x.get(i, c) == 1.0,
                None => indicator_cols.iter().all(|&c| design.x.get(i, c) == 0.0),
            };
            let (mut pos, mut neg) = (0, 0);
            for (i, &yi) in y.iter().enumerate() {
                if in_level(i) {
                    if yi == 1 {
                        pos += 1;
                    } else {
                        neg += 1;
                    }
                }
            }
            rows.push(OrRow {
                predictor: name.clone(),
                level: Some(level.label.clone()),
                reference: block.columns[li].is_none(),
                n_cases: pos,
                n_noncases: neg,
                estimate: block.columns[li].map(|c| odds_ratio(model.beta[c], model.std_errors[c])),
            });
        }
    }
    Ok(rows)
}

pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.4}")
    }
}

fn or_cell(e: &Option<OddsRatio>) -> (String, String) {
    match e {
        Some(e) => (format!("{:.2} ({:.2}-{:.2})", e.or, e.ci_low, e.ci_high), format_p(e.p)),
        None => ("-".into(), "-".into()),
    }
}

pub fn or_table_csv(rows: &[OrRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(["predictor", "level", "n_cases", "n_noncases", "beta", "se", "or", "ci_low", "ci_high", "p"])?;
    for r in rows {
        let mut rec = vec![
            r.predictor.clone(),
            r.level.clone().unwrap_or_default(),
            r.n_cases.to_string(),
            r.n_noncases.to_string(),
        ];
        match &r.estimate {
            Some(e) => rec.extend([e.beta, e.se, e.or, e.ci_low, e.ci_high, e.p].iter().map(|v| v.to_string())),
            None => rec.extend(std::iter::repeat_n("-".to_string(), 6)),
        }
        w.write_record(&rec)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
}

/// Aligned plain-text rendering: level, cases, non-cases, OR (95% CI), p.
pub fn or_table_text(rows: &[OrRow]) -> String {
    let mut lines: Vec<[String; 5]> =
        vec![["Variable".into(), "Cases".into(), "Non-cases".into(), "OR (95% CI)".into(), "p".into()]];
    let mut current = None;
    for r in rows {
        if r.level.is_some() && current != Some(&r.predictor) {
            lines.push([r.predictor.clone(), String::new(), String::new(), String::new(), String::new()]);
        }
        current = Some(&r.predictor);
        let label = match &r.level {
            Some(l) => format!("  {l}"),
            None => r.predictor.clone(),
        };
        let (or, p) = or_cell(&r.estimate);
        lines.push([label, r.n_cases.to_string(), r.n_noncases.to_string(), or, p]);
    }
    let widths: Vec<usize> = (0..5).map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for l in &lines {
        let cells: Vec<String> = l
            .iter()
            .enumerate()
            .map(|(c, s)| if c == 0 { format!("{s:<w$}", w = widths[c]) } else { format!("{s:>w$}", w = widths[c]) })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
