//! CSV ingestion and serialization of designs.
//!
//! * `outcomes.csv`: `unit,Y[,X]`, one row per unit. No `X` column means reduced form.
//! * `exposures.csv`: wide `unit,s1,...,sJ` or long `unit,sector,weight`.
//! * `shocks.csv`: `sector,g[,cluster]`.
//!
//! Wide exposure columns are matched to shock rows by position. Locations in
//! error messages are 1-based data rows (the header is not counted) and
//! 1-based columns.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::design::{Exposures, ReducedFormMode, ShiftShareDesign};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IngestOptions {
    pub reduced_form: ReducedFormMode,
    /// Attach the `cluster` column of the shocks file when present.
    pub use_clusters: bool,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            reduced_form: ReducedFormMode::Auto,
            use_clusters: true,
        }
    }
}

struct Table {
    file: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let file = path.display().to_string();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_table(file, &text)
}

fn parse_table(file: String, text: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Parse {
            file: file.clone(),
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim_start_matches('\u{feff}').to_string())
        .collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::EmptyFile { file });
    }
    let mut rows = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            file: file.clone(),
            row: k + 1,
            message: e.to_string(),
        })?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile { file });
    }
    Ok(Table { file, header, rows })
}

impl Table {
    fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::Parse {
            file: self.file.clone(),
            row: 0,
            message: format!("missing `{name}` column in header"),
        })
    }

    fn number(&self, row: usize, col: usize) -> Result<f64> {
        let cell = self.rows[row][col].as_str();
        if cell.is_empty() || cell.eq_ignore_ascii_case("na") || cell.eq_ignore_ascii_case("nan") {
            return Err(Error::Parse {
                file: self.file.clone(),
                row: row + 1,
                message: format!("missing value in column {} (`{}`)", col + 1, self.header[col]),
            });
        }
        let v: f64 = cell.parse().map_err(|_| Error::Parse {
            file: self.file.clone(),
            row: row + 1,
            message: format!("column {} (`{}`): cannot parse `{cell}` as a number", col + 1, self.header[col]),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                file: self.file.clone(),
                row: row + 1,
                message: format!("non-finite value in column {} (`{}`)", col + 1, self.header[col]),
            });
        }
        Ok(v)
    }

    fn labels(&self, col: usize) -> Result<Vec<String>> {
        let mut seen = HashMap::new();
        let mut out = Vec::with_capacity(self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            let label = row[col].clone();
            if let Some(prev) = seen.insert(label.clone(), r) {
                return Err(Error::Parse {
                    file: self.file.clone(),
                    row: r + 1,
                    message: format!("duplicate label `{label}` (first seen on row {})", prev + 1),
                });
            }
            out.push(label);
        }
        Ok(out)
    }
}

/// Reads and validates a design from the three CSV files.
pub fn load_design<T: Scalar>(
    outcomes_path: &Path,
    exposures_path: &Path,
    shocks_path: &Path,
    options: IngestOptions,
) -> Result<ShiftShareDesign<T>> {
    let outcomes = read_table(outcomes_path)?;
    let exposures = read_table(exposures_path)?;
    let shocks = read_table(shocks_path)?;
    design_from_tables(&outcomes, &exposures, &shocks, options)
}

/// Same as [`load_design`] but from in-memory CSV text.
pub fn parse_design<T: Scalar>(
    outcomes_csv: &str,
    exposures_csv: &str,
    shocks_csv: &str,
    options: IngestOptions,
) -> Result<ShiftShareDesign<T>> {
    let outcomes = parse_table("outcomes.csv".into(), outcomes_csv)?;
    let exposures = parse_table("exposures.csv".into(), exposures_csv)?;
    let shocks = parse_table("shocks.csv".into(), shocks_csv)?;
    design_from_tables(&outcomes, &exposures, &shocks, options)
}

fn design_from_tables<T: Scalar>(
    outcomes: &Table,
    exposures: &Table,
    shocks: &Table,
    options: IngestOptions,
) -> Result<ShiftShareDesign<T>> {
    let unit_col = outcomes.require("unit")?;
    let y_col = outcomes.require("Y")?;
    let x_col = outcomes.column("X");
    let units = outcomes.labels(unit_col)?;
    let n = units.len();
    let mut y = Vec::with_capacity(n);
    let mut x = x_col.map(|_| Vec::with_capacity(n));
    for r in 0..n {
        y.push(T::of(outcomes.number(r, y_col)?));
        if let (Some(c), Some(x)) = (x_col, x.as_mut()) {
            x.push(T::of(outcomes.number(r, c)?));
        }
    }

    let sector_col = shocks.require("sector")?;
    let g_col = shocks.require("g")?;
    let cluster_col = shocks.column("cluster");
    let sectors = shocks.labels(sector_col)?;
    let j = sectors.len();
    let g: Vec<T> = (0..j)
        .map(|r| shocks.number(r, g_col).map(T::of))
        .collect::<Result<_>>()?;
    let clusters = match cluster_col {
        Some(c) if options.use_clusters => Some(
            (0..j)
                .map(|r| {
                    let cell = &shocks.rows[r][c];
                    cell.parse::<i64>().map_err(|_| Error::Parse {
                        file: shocks.file.clone(),
                        row: r + 1,
                        message: format!("cluster label `{cell}` is not an integer"),
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        ),
        _ => None,
    };

    let unit_index: HashMap<&str, usize> = units.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    let s = if is_long_format(exposures) {
        long_exposures(exposures, &unit_index, &sectors)?
    } else {
        wide_exposures(exposures, &unit_index, j)?
    };

    let design = ShiftShareDesign::new(y, x, s, g, options.reduced_form)?;
    match clusters {
        Some(c) => design.with_clusters(&c),
        None => Ok(design),
    }
}

fn is_long_format(t: &Table) -> bool {
    t.header.len() == 3 && t.column("sector").is_some() && t.column("weight").is_some()
}

fn unit_row(t: &Table, r: usize, unit_index: &HashMap<&str, usize>) -> Result<usize> {
    let label = &t.rows[r][0];
    unit_index.get(label.as_str()).copied().ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "{}: row {}: unit `{label}` does not appear in the outcomes file",
            t.file,
            r + 1
        ))
    })
}

fn wide_exposures<T: Scalar>(
    t: &Table,
    unit_index: &HashMap<&str, usize>,
    n_sectors: usize,
) -> Result<Exposures<T>> {
    if !t.header[0].eq_ignore_ascii_case("unit") {
        return Err(Error::Parse {
            file: t.file.clone(),
            row: 0,
            message: "first column must be `unit`".into(),
        });
    }
    let width = t.header.len() - 1;
    if width != n_sectors {
        return Err(Error::DimensionMismatch(format!(
            "shocks file has {n_sectors} entries but exposures have {width} columns"
        )));
    }
    let n = unit_index.len();
    if t.rows.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "exposures have {} rows but outcomes have {n} units",
            t.rows.len()
        )));
    }
    let mut seen = vec![false; n];
    let mut triplets = Vec::with_capacity(n * width);
    for r in 0..t.rows.len() {
        let i = unit_row(t, r, unit_index)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::Parse {
                file: t.file.clone(),
                row: r + 1,
                message: format!("unit `{}` listed twice", t.rows[r][0]),
            });
        }
        for c in 1..=width {
            let v = t.number(r, c)?;
            if v < 0.0 {
                return Err(Error::NegativeExposure { row: r + 1, col: c, value: v });
            }
            triplets.push((i, c - 1, T::of(v)));
        }
    }
    Exposures::from_triplets(n, n_sectors, triplets).map_err(|e| relabel_zero_row(e, t))
}

fn long_exposures<T: Scalar>(
    t: &Table,
    unit_index: &HashMap<&str, usize>,
    sectors: &[String],
) -> Result<Exposures<T>> {
    let unit_col = t.require("unit")?;
    let sector_col = t.require("sector")?;
    let weight_col = t.require("weight")?;
    let sector_index: HashMap<&str, usize> = sectors.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();
    let mut triplets = Vec::with_capacity(t.rows.len());
    for r in 0..t.rows.len() {
        let i = if unit_col == 0 {
            unit_row(t, r, unit_index)?
        } else {
            let label = &t.rows[r][unit_col];
            *unit_index.get(label.as_str()).ok_or_else(|| {
                Error::DimensionMismatch(format!("{}: row {}: unknown unit `{label}`", t.file, r + 1))
            })?
        };
        let label = &t.rows[r][sector_col];
        let j = *sector_index.get(label.as_str()).ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "{}: row {}: sector `{label}` does not appear in the shocks file",
                t.file,
                r + 1
            ))
        })?;
        let v = t.number(r, weight_col)?;
        if v < 0.0 {
            return Err(Error::NegativeExposure {
                row: r + 1,
                col: weight_col + 1,
                value: v,
            });
        }
        triplets.push((i, j, T::of(v)));
    }
    Exposures::from_triplets(unit_index.len(), sectors.len(), triplets).map_err(|e| relabel_zero_row(e, t))
}

fn relabel_zero_row(e: Error, t: &Table) -> Error {
    match e {
        Error::ZeroExposureRow { row } => Error::InvalidDesign(format!(
            "{}: unit number {} has no strictly positive exposure",
            t.file,
            row + 1
        )),
        other => other,
    }
}

/// Writes a design as `outcomes.csv`, `exposures.csv` (wide) and `shocks.csv`
/// in `dir`, using labels `u1..uN` and `s1..sJ`. Values are written in
/// shortest round-trip form, so reloading reproduces the design exactly.
pub fn write_design<T: Scalar>(design: &ShiftShareDesign<T>, dir: &Path) -> Result<()> {
    let io = |path: &Path, source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let write = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        File::create(&path)
            .and_then(|mut f| f.write_all(body.as_bytes()))
            .map_err(|e| io(&path, e))
    };

    let mut out = String::from(if design.has_treatment_column() { "unit,Y,X\n" } else { "unit,Y\n" });
    for i in 0..design.n_units() {
        out.push_str(&format!("u{},{}", i + 1, design.y()[i]));
        if design.has_treatment_column() {
            out.push_str(&format!(",{}", design.x()[i]));
        }
        out.push('\n');
    }
    write("outcomes.csv", out)?;

    let j = design.n_sectors();
    let mut out = String::from("unit");
    for c in 1..=j {
        out.push_str(&format!(",s{c}"));
    }
    out.push('\n');
    for (i, row) in design.exposures().to_dense().iter().enumerate() {
        out.push_str(&format!("u{}", i + 1));
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    write("exposures.csv", out)?;

    let clusters = design.cluster_ids();
    let mut out = String::from(if clusters.is_some() { "sector,g,cluster\n" } else { "sector,g\n" });
    for (k, g) in design.shocks().iter().enumerate() {
        out.push_str(&format!("s{},{g}", k + 1));
        if let Some(c) = clusters {
            out.push_str(&format!(",{}", c[k]));
        }
        out.push('\n');
    }
    write("shocks.csv", out)
}
