//! Linearized MILP over class counts, written as fixed-format MPS.
//!
//! Columns `Y{c*m+j}` count members of class `c` sent to factory `j`
//! (integer, upper bound the class size, zero where ineligible) and
//! `D{i*m+j}` bound the absolute cell deviation from above. Rows:
//! `OBJ` minimizes `sum D / denom`, `K{c}` assigns every member, `CAP{j}`
//! fills bounded factory `j`, and `DP{k}`/`DN{k}` linearize `|cur - prev|`.
//! The exact denominator is recorded in an `* OBJSCALE` comment since
//! 12-character fields cannot hold `1/denom` exactly.

use super::classes::{class_partition, OrderClass};
use crate::error::{Error, Result};
use crate::model::{DaySnapshot, RecipeSiteMatrix};
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    /// Objective row.
    N,
    E,
    L,
    G,
}

impl RowKind {
    fn code(self) -> &'static str {
        match self {
            RowKind::N => "N",
            RowKind::E => "E",
            RowKind::L => "L",
            RowKind::G => "G",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsColumn {
    pub name: String,
    pub integer: bool,
    /// `(row, coefficient)` in file order.
    pub entries: Vec<(String, f64)>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpsModel {
    pub name: String,
    /// Rows in file order; the first `N` row is the objective.
    pub rows: Vec<(String, RowKind)>,
    pub columns: Vec<MpsColumn>,
    pub rhs: BTreeMap<String, f64>,
    /// Exact objective denominator when known.
    pub objective_scale: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MilpCounts {
    pub integer_columns: usize,
    pub continuous_columns: usize,
    /// Constraint rows, objective excluded.
    pub constraints: usize,
}

impl MpsModel {
    pub fn counts(&self) -> MilpCounts {
        let integer_columns = self.columns.iter().filter(|c| c.integer).count();
        MilpCounts {
            integer_columns,
            continuous_columns: self.columns.len() - integer_columns,
            constraints: self.rows.iter().filter(|(_, k)| *k != RowKind::N).count(),
        }
    }

    fn objective_row(&self) -> Option<&str> {
        self.rows
            .iter()
            .find(|(_, k)| *k == RowKind::N)
            .map(|(n, _)| n.as_str())
    }

    /// Objective value at `values` (missing columns read as zero), or an error
    /// naming the first violated row or bound beyond `tol`.
    pub fn evaluate(&self, values: &HashMap<String, f64>, tol: f64) -> Result<f64> {
        let obj = self.objective_row();
        let mut activity: HashMap<&str, f64> = HashMap::new();
        for col in &self.columns {
            let v = values.get(&col.name).copied().unwrap_or(0.0);
            if v < col.lower - tol || v > col.upper + tol {
                return Err(Error::InfeasibleMove(format!(
                    "column {} = {v} outside [{}, {}]",
                    col.name, col.lower, col.upper
                )));
            }
            if col.integer && (v - v.round()).abs() > tol {
                return Err(Error::InfeasibleMove(format!(
                    "column {} = {v} is fractional",
                    col.name
                )));
            }
            for (row, a) in &col.entries {
                *activity.entry(row.as_str()).or_insert(0.0) += a * v;
            }
        }
        for (row, kind) in &self.rows {
            let lhs = activity.get(row.as_str()).copied().unwrap_or(0.0);
            let rhs = self.rhs.get(row).copied().unwrap_or(0.0);
            let ok = match kind {
                RowKind::N => true,
                RowKind::E => (lhs - rhs).abs() <= tol,
                RowKind::L => lhs <= rhs + tol,
                RowKind::G => lhs >= rhs - tol,
            };
            if !ok {
                return Err(Error::InfeasibleMove(format!(
                    "row {row}: activity {lhs} vs rhs {rhs}"
                )));
            }
        }
        Ok(obj.and_then(|o| activity.get(o)).copied().unwrap_or(0.0))
    }
}

/// Columns and rows of the model for `day` against `prev`.
pub fn build_milp(day: &DaySnapshot, prev: &RecipeSiteMatrix) -> Result<MpsModel> {
    let dims = (day.n_recipes, day.n_factories);
    if prev.dims() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            actual: prev.dims(),
        });
    }
    let denom = day.total_units();
    if denom == 0 {
        return Err(Error::ZeroDenominator);
    }
    let (n, m) = dims;
    let (classes, _) = class_partition(day);
    let required = day.required_counts();
    let coef = 1.0 / denom as f64;

    let mut rows = vec![("OBJ".to_string(), RowKind::N)];
    rows.extend((0..classes.len()).map(|c| (format!("K{c}"), RowKind::E)));
    rows.extend((0..m - 1).map(|j| (format!("CAP{j}"), RowKind::E)));
    for k in 0..n * m {
        rows.push((format!("DP{k}"), RowKind::G));
        rows.push((format!("DN{k}"), RowKind::G));
    }

    let mut columns = Vec::with_capacity(classes.len() * m + n * m);
    for (c, class) in classes.iter().enumerate() {
        for j in 0..m {
            let mut entries = vec![(format!("K{c}"), 1.0)];
            if j + 1 < m {
                entries.push((format!("CAP{j}"), 1.0));
            }
            for &(r, mult) in &class.recipes {
                let k = r.index() * m + j;
                entries.push((format!("DP{k}"), -f64::from(mult)));
                entries.push((format!("DN{k}"), f64::from(mult)));
            }
            columns.push(MpsColumn {
                name: format!("Y{}", c * m + j),
                integer: true,
                entries,
                lower: 0.0,
                upper: if class.eligible.contains(j) {
                    class.count() as f64
                } else {
                    0.0
                },
            });
        }
    }
    for k in 0..n * m {
        columns.push(MpsColumn {
            name: format!("D{k}"),
            integer: false,
            entries: vec![
                ("OBJ".to_string(), coef),
                (format!("DP{k}"), 1.0),
                (format!("DN{k}"), 1.0),
            ],
            lower: 0.0,
            upper: f64::INFINITY,
        });
    }

    let mut rhs = BTreeMap::new();
    for (c, class) in classes.iter().enumerate() {
        rhs.insert(format!("K{c}"), class.count() as f64);
    }
    for (j, &req) in required.iter().take(m - 1).enumerate() {
        rhs.insert(format!("CAP{j}"), req as f64);
    }
    for (k, &p) in prev.as_slice().iter().enumerate() {
        if p != 0 {
            rhs.insert(format!("DP{k}"), -(p as f64));
            rhs.insert(format!("DN{k}"), p as f64);
        }
    }
    if let Some(name) = names_too_long(&rows, &columns).next() {
        return Err(Error::TooLarge(format!("name {name} exceeds 8 characters")));
    }
    Ok(MpsModel {
        name: format!("BAPLD{}", day.lead_day.unsigned_abs()),
        rows,
        columns,
        rhs,
        objective_scale: Some(denom),
    })
}

fn names_too_long<'a>(
    rows: &'a [(String, RowKind)],
    columns: &'a [MpsColumn],
) -> impl Iterator<Item = &'a String> {
    rows.iter()
        .map(|(n, _)| n)
        .chain(columns.iter().map(|c| &c.name))
        .filter(|n| n.len() > 8)
}

/// Column values encoding class counts and the matching deviations.
pub fn solution_values(
    day: &DaySnapshot,
    prev: &RecipeSiteMatrix,
    assign: &[usize],
) -> HashMap<String, f64> {
    let m = day.n_factories;
    let (classes, of_order): (Vec<OrderClass>, Vec<usize>) = class_partition(day);
    let mut values = HashMap::new();
    let mut y = vec![0u64; classes.len() * m];
    for (o, &j) in assign.iter().enumerate() {
        y[of_order[o] * m + j] += 1;
    }
    for (k, v) in y.into_iter().enumerate() {
        values.insert(format!("Y{k}"), v as f64);
    }
    let cur = RecipeSiteMatrix::from_dense(day, assign);
    for (k, (&c, &p)) in cur.as_slice().iter().zip(prev.as_slice()).enumerate() {
        values.insert(format!("D{k}"), c.abs_diff(p) as f64);
    }
    values
}

fn number(v: f64) -> String {
    // canonical: the reparsed value formats to the same string
    let s = raw_number(v);
    raw_number(s.parse().unwrap_or(v))
}

fn raw_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e11 {
        return format!("{}", v as i64);
    }
    let plain = format!("{v}");
    let sci = format!("{v:e}");
    let short = if sci.len() < plain.len() { sci } else { plain };
    if short.len() <= 12 {
        return short;
    }
    for prec in (0..12).rev() {
        let s = format!("{v:.prec$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    short
}

fn field_line(out: &mut String, code: &str, name: &str, row: &str, value: &str) {
    // columns 2-3, 5-12, 15-22, 25-36
    let _ = writeln!(out, " {code:<2} {name:<8}  {row:<8}  {value:>12}");
}

pub fn write_mps<W: Write>(model: &MpsModel, mut w: W) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", model.name);
    if let Some(d) = model.objective_scale {
        let _ = writeln!(out, "* OBJSCALE 1/{d}");
    }
    out.push_str("ROWS\n");
    for (name, kind) in &model.rows {
        let _ = writeln!(out, " {:<2} {name}", kind.code());
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut markers = 0;
    for col in &model.columns {
        if col.integer != in_int {
            let tag = if col.integer { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    M{markers:<7}  'MARKER'                 {tag}");
            markers += 1;
            in_int = col.integer;
        }
        for (row, v) in &col.entries {
            field_line(&mut out, "", &col.name, row, &number(*v));
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{markers:<7}  'MARKER'                 'INTEND'");
    }
    out.push_str("RHS\n");
    for (row, v) in &model.rhs {
        field_line(&mut out, "", "RHS", row, &number(*v));
    }
    out.push_str("BOUNDS\n");
    for col in &model.columns {
        if col.lower != 0.0 {
            if col.lower == f64::NEG_INFINITY {
                field_line(&mut out, "MI", "BND", &col.name, "");
            } else {
                field_line(&mut out, "LO", "BND", &col.name, &number(col.lower));
            }
        }
        if col.upper.is_finite() {
            field_line(&mut out, "UP", "BND", &col.name, &number(col.upper));
        } else if col.integer {
            field_line(&mut out, "PL", "BND", &col.name, "");
        }
    }
    out.push_str("ENDATA\n");
    w.write_all(out.as_bytes())?;
    Ok(())
}

pub fn export_milp(day: &DaySnapshot, prev: &RecipeSiteMatrix, path: &Path) -> Result<MilpCounts> {
    let model = build_milp(day, prev)?;
    let file = std::fs::File::create(path)?;
    write_mps(&model, std::io::BufWriter::new(file))?;
    Ok(model.counts())
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    End,
}

/// Parses the subset of fixed MPS produced by [`write_mps`] plus common bound types.
pub fn read_mps<R: BufRead>(r: R) -> Result<MpsModel> {
    let mut model = MpsModel {
        name: String::new(),
        rows: Vec::new(),
        columns: Vec::new(),
        rhs: BTreeMap::new(),
        objective_scale: None,
    };
    let mut section = Section::None;
    let mut in_int = false;
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut row_names: HashMap<String, RowKind> = HashMap::new();
    let err = |line: usize, message: String| Error::Mps { line, message };

    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('*') {
            if let Some(d) = comment.trim().strip_prefix("OBJSCALE 1/") {
                let d = d
                    .trim()
                    .parse()
                    .map_err(|_| err(lineno, format!("bad OBJSCALE {d}")))?;
                model.objective_scale = Some(d);
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') {
            section = match fields[0] {
                "NAME" => {
                    model.name = fields.get(1).unwrap_or(&"").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(lineno, format!("unsupported section {other}"))),
            };
            continue;
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| err(lineno, format!("bad number {s}")))
        };
        match section {
            Section::Rows => {
                let [code, name] = fields[..] else {
                    return Err(err(lineno, "row needs a type and a name".into()));
                };
                let kind = match code {
                    "N" => RowKind::N,
                    "E" => RowKind::E,
                    "L" => RowKind::L,
                    "G" => RowKind::G,
                    _ => return Err(err(lineno, format!("unknown row type {code}"))),
                };
                row_names.insert(name.to_string(), kind);
                model.rows.push((name.to_string(), kind));
            }
            Section::Columns => {
                if fields.get(1) == Some(&"'MARKER'") {
                    in_int = match fields.get(2) {
                        Some(&"'INTORG'") => true,
                        Some(&"'INTEND'") => false,
                        _ => return Err(err(lineno, "unknown marker".into())),
                    };
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(err(lineno, "column entry needs 3 or 5 fields".into()));
                }
                let name = fields[0];
                let idx = *col_index.entry(name.to_string()).or_insert_with(|| {
                    model.columns.push(MpsColumn {
                        name: name.to_string(),
                        integer: in_int,
                        entries: Vec::new(),
                        lower: 0.0,
                        upper: f64::INFINITY,
                    });
                    model.columns.len() - 1
                });
                for pair in fields[1..].chunks(2) {
                    if !row_names.contains_key(pair[0]) {
                        return Err(err(lineno, format!("unknown row {}", pair[0])));
                    }
                    model.columns[idx]
                        .entries
                        .push((pair[0].to_string(), num(pair[1])?));
                }
            }
            Section::Rhs => {
                let pairs = match fields.len() {
                    2 | 4 => &fields[..],
                    3 | 5 => &fields[1..],
                    _ => return Err(err(lineno, "rhs entry needs row/value pairs".into())),
                };
                for pair in pairs.chunks(2) {
                    if !row_names.contains_key(pair[0]) {
                        return Err(err(lineno, format!("unknown row {}", pair[0])));
                    }
                    model.rhs.insert(pair[0].to_string(), num(pair[1])?);
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(err(lineno, "bound needs type, set and column".into()));
                }
                let (code, name) = (fields[0], fields[2]);
                let idx = *col_index
                    .get(name)
                    .ok_or_else(|| err(lineno, format!("unknown column {name}")))?;
                let value = || -> Result<f64> {
                    fields
                        .get(3)
                        .ok_or_else(|| err(lineno, format!("{code} bound needs a value")))
                        .and_then(|s| num(s))
                };
                let col = &mut model.columns[idx];
                match code {
                    "UP" | "UI" => col.upper = value()?,
                    "LO" | "LI" => col.lower = value()?,
                    "FX" => {
                        let v = value()?;
                        col.lower = v;
                        col.upper = v;
                    }
                    "BV" => {
                        col.integer = true;
                        col.lower = 0.0;
                        col.upper = 1.0;
                    }
                    "PL" => col.upper = f64::INFINITY,
                    "MI" => col.lower = f64::NEG_INFINITY,
                    "FR" => {
                        col.lower = f64::NEG_INFINITY;
                        col.upper = f64::INFINITY;
                    }
                    _ => return Err(err(lineno, format!("unknown bound type {code}"))),
                }
            }
            Section::None => return Err(err(lineno, "data before ROWS".into())),
            Section::End => return Err(err(lineno, "data after ENDATA".into())),
        }
    }
    if section != Section::End {
        return Err(err(0, "missing ENDATA".into()));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::recipe_site_matrix;
    use crate::testkit::{ld11, ld12, ld12_solution};

    #[test]
    fn number_fits_field() {
        assert_eq!(number(3.0), "3");
        assert_eq!(number(-12.0), "-12");
        let s = number(1.0 / 14.0);
        assert!(s.len() <= 12, "{s}");
        assert!((s.parse::<f64>().unwrap() - 1.0 / 14.0).abs() < 1e-6);
    }

    #[test]
    fn round_trip_is_identical() {
        let prev = recipe_site_matrix(&ld12(), &ld12_solution()).unwrap();
        let model = build_milp(&ld11(), &prev).unwrap();
        let mut bytes = Vec::new();
        write_mps(&model, &mut bytes).unwrap();
        let back = read_mps(&bytes[..]).unwrap();
        assert_eq!(back.rows, model.rows);
        assert_eq!(back.rhs, model.rhs);
        assert_eq!(back.objective_scale, model.objective_scale);
        assert_eq!(back.columns.len(), model.columns.len());
        let mut again = Vec::new();
        write_mps(&back, &mut again).unwrap();
        assert_eq!(bytes, again);
    }

    #[test]
    fn evaluate_matches_site_numerator() {
        let day = ld12();
        let alloc = ld12_solution();
        let prev = recipe_site_matrix(&day, &alloc).unwrap();
        let model = build_milp(&day, &prev).unwrap();
        let assign = alloc.to_dense(&day).unwrap();
        let values = solution_values(&day, &prev, &assign);
        let obj = model.evaluate(&values, 1e-9).unwrap();
        assert!(obj.abs() < 1e-12);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_mps(&b"ROWS\n N OBJ\nCOLUMNS\n    X  NOPE  1\nENDATA\n"[..]).is_err());
        assert!(read_mps(&b"ROWS\n N OBJ\n"[..]).is_err());
    }
}
