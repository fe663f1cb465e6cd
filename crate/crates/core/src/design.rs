//! Shift-share data model: exposure matrix, shocks, instrument, null residuals.

use crate::error::{Error, Result};
use crate::scalar::{self, Accumulator, Scalar};

/// Nonnegative N x J exposure matrix, stored row-compressed with zero
/// entries dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposures<T> {
    n_units: usize,
    n_sectors: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> Exposures<T> {
    /// Builds from dense rows, validating finiteness, sign and row support.
    pub fn from_dense(rows: &[Vec<T>]) -> Result<Self> {
        let n_sectors = rows.first().map_or(0, Vec::len);
        let mut triplets = Vec::new();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_sectors {
                return Err(Error::DimensionMismatch(format!(
                    "exposure row {i} has {} columns, expected {n_sectors}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                triplets.push((i, j, v));
            }
        }
        Self::from_triplets(rows.len(), n_sectors, triplets)
    }

    /// Builds from `(unit, sector, weight)` triplets. Missing pairs are zero;
    /// a repeated pair is an error.
    pub fn from_triplets(
        n_units: usize,
        n_sectors: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize, T)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= n_units || j >= n_sectors {
                return Err(Error::DimensionMismatch(format!(
                    "exposure entry ({i}, {j}) outside {n_units} x {n_sectors}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    what: "exposures",
                    row: i,
                    col: j,
                });
            }
            if v < T::zero() {
                return Err(Error::NegativeExposure {
                    row: i,
                    col: j,
                    value: v.as_f64(),
                });
            }
            entries.push((i, j, v));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(w) = entries.windows(2).find(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1)) {
            return Err(Error::InvalidDesign(format!(
                "duplicate exposure entry for ({}, {})",
                w[0].0, w[0].1
            )));
        }
        let mut row_ptr = vec![0usize; n_units + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        for &(i, j, v) in &entries {
            if v > T::zero() {
                row_ptr[i + 1] += 1;
                cols.push(j);
                vals.push(v);
            }
        }
        for i in 0..n_units {
            row_ptr[i + 1] += row_ptr[i];
        }
        let s = Self {
            n_units,
            n_sectors,
            row_ptr,
            cols,
            vals,
        };
        if let Some(row) = (0..n_units).find(|&i| s.row_ptr[i] == s.row_ptr[i + 1]) {
            return Err(Error::ZeroExposureRow { row });
        }
        Ok(s)
    }

    /// N x N identity: each unit fully exposed to its own sector.
    pub fn identity(n: usize) -> Self {
        Self {
            n_units: n,
            n_sectors: n,
            row_ptr: (0..=n).collect(),
            cols: (0..n).collect(),
            vals: vec![T::one(); n],
        }
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn n_sectors(&self) -> usize {
        self.n_sectors
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Nonzero entries `(sector, weight)` of unit `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// All nonzero entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n_units).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.row(i).find(|&(c, _)| c == j).map_or(T::zero(), |(_, v)| v)
    }

    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::zero(); self.n_sectors]; self.n_units];
        for (i, j, v) in self.entries() {
            out[i][j] = v;
        }
        out
    }

    /// `S g`, one entry per unit.
    pub fn mul_vec(&self, g: &[T]) -> Vec<T> {
        assert_eq!(g.len(), self.n_sectors, "mul_vec: length mismatch");
        (0..self.n_units)
            .map(|i| scalar::sum(self.row(i).map(|(j, v)| v * g[j])))
            .collect()
    }

    /// `S' e`, one entry per sector.
    pub fn tmul_vec(&self, e: &[T]) -> Vec<T> {
        assert_eq!(e.len(), self.n_units, "tmul_vec: length mismatch");
        let mut acc = vec![Accumulator::new(); self.n_sectors];
        for (i, j, v) in self.entries() {
            acc[j].add(v * e[i]);
        }
        acc.iter().map(Accumulator::value).collect()
    }

    /// Column sums `sum_i s_ij`.
    pub fn column_sums(&self) -> Vec<T> {
        self.tmul_vec(&vec![T::one(); self.n_units])
    }
}

/// `Z_i = s_i' g` with a dimension check.
pub fn build_instrument<T: Scalar>(exposures: &Exposures<T>, g: &[T]) -> Result<Vec<T>> {
    if g.len() != exposures.n_sectors() {
        return Err(Error::DimensionMismatch(format!(
            "{} shocks for {} exposure columns",
            g.len(),
            exposures.n_sectors()
        )));
    }
    Ok(exposures.mul_vec(g))
}

/// Subtracts the sample mean from the shocks.
pub fn demean_shocks<T: Scalar>(g: &[T]) -> Vec<T> {
    let m = scalar::mean(g);
    g.iter().map(|&x| x - m).collect()
}

/// How `reduced_form` is decided when building a design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReducedFormMode {
    /// Reduced form when X is absent or equals Z within tolerance.
    #[default]
    Auto,
    Force(bool),
}

/// Relative tolerance for `X == Z` and for the cached instrument check.
pub const REDUCED_FORM_TOL: f64 = 1e-12;

/// An observed shift-share sample. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftShareDesign<T> {
    y: Vec<T>,
    x: Vec<T>,
    exposures: Exposures<T>,
    shocks: Vec<T>,
    instrument: Vec<T>,
    reduced_form: bool,
    cluster_ids: Option<Vec<usize>>,
    x_given: bool,
}

impl<T: Scalar> ShiftShareDesign<T> {
    /// Builds and validates a design. `x = None` means the reduced form
    /// (X is set to the instrument).
    pub fn new(
        y: Vec<T>,
        x: Option<Vec<T>>,
        exposures: Exposures<T>,
        shocks: Vec<T>,
        mode: ReducedFormMode,
    ) -> Result<Self> {
        let n = exposures.n_units();
        let j = exposures.n_sectors();
        if n < 2 || j < 2 {
            return Err(Error::InvalidDesign(format!(
                "need N >= 2 and J >= 2, got N = {n}, J = {j}"
            )));
        }
        if y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} outcomes for {n} exposure rows",
                y.len()
            )));
        }
        check_finite("outcomes", &y)?;
        check_finite("shocks", &shocks)?;
        let instrument = build_instrument(&exposures, &shocks)?;
        let x_given = x.is_some();
        let x = match x {
            Some(x) => {
                if x.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "{} treatments for {n} units",
                        x.len()
                    )));
                }
                check_finite("treatments", &x)?;
                x
            }
            None => instrument.clone(),
        };
        let reduced_form = match mode {
            ReducedFormMode::Force(v) => v,
            ReducedFormMode::Auto => !x_given || matches_instrument(&x, &instrument),
        };
        Ok(Self {
            y,
            x,
            exposures,
            shocks,
            instrument,
            reduced_form,
            cluster_ids: None,
            x_given,
        })
    }

    /// Attaches shock-cluster labels (any integers); they are relabelled to
    /// `0..n_clusters` in order of first appearance.
    pub fn with_clusters(mut self, labels: &[i64]) -> Result<Self> {
        if labels.len() != self.n_sectors() {
            return Err(Error::DimensionMismatch(format!(
                "{} cluster labels for {} sectors",
                labels.len(),
                self.n_sectors()
            )));
        }
        let mut seen: Vec<i64> = Vec::new();
        let ids = labels
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(p) => p,
                None => {
                    seen.push(*l);
                    seen.len() - 1
                }
            })
            .collect();
        self.cluster_ids = Some(ids);
        Ok(self)
    }

    /// Same units and exposures with different shocks. The instrument is
    /// rebuilt; X is kept unless the design was built without an X column.
    pub fn with_shocks(&self, shocks: Vec<T>) -> Result<Self> {
        let x = self.x_given.then(|| self.x.clone());
        let mode = ReducedFormMode::Force(self.reduced_form);
        let mut out = Self::new(self.y.clone(), x, self.exposures.clone(), shocks, mode)?;
        out.cluster_ids = self.cluster_ids.clone();
        Ok(out)
    }

    /// Replaces the shocks while holding the null residuals at `b` fixed:
    /// the outcome is rebuilt as `Y = b X + e_b`, which only changes when X
    /// follows the instrument.
    pub fn with_shocks_under_null(&self, shocks: Vec<T>, b: T) -> Result<Self> {
        let e_b = null_residuals(self, b).e_b;
        let mut out = self.with_shocks(shocks)?;
        if !self.x_given {
            out.y = out.x.iter().zip(&e_b).map(|(&x, &e)| b * x + e).collect();
        }
        Ok(out)
    }

    pub fn n_units(&self) -> usize {
        self.exposures.n_units()
    }
    pub fn n_sectors(&self) -> usize {
        self.exposures.n_sectors()
    }
    pub fn y(&self) -> &[T] {
        &self.y
    }
    pub fn x(&self) -> &[T] {
        &self.x
    }
    pub fn exposures(&self) -> &Exposures<T> {
        &self.exposures
    }
    pub fn shocks(&self) -> &[T] {
        &self.shocks
    }
    pub fn instrument(&self) -> &[T] {
        &self.instrument
    }
    pub fn reduced_form(&self) -> bool {
        self.reduced_form
    }
    /// Whether X came from data (as opposed to being set to Z).
    pub fn has_treatment_column(&self) -> bool {
        self.x_given
    }
    pub fn cluster_ids(&self) -> Option<&[usize]> {
        self.cluster_ids.as_deref()
    }
    pub fn n_clusters(&self) -> Option<usize> {
        self.cluster_ids
            .as_ref()
            .map(|ids| ids.iter().max().map_or(0, |m| m + 1))
    }

    /// Recomputes `S g` and compares it with the cached instrument.
    pub fn instrument_is_consistent(&self) -> bool {
        let z = self.exposures.mul_vec(&self.shocks);
        let scale = T::one().max(scalar::max_abs(&z));
        z.iter()
            .zip(&self.instrument)
            .all(|(&a, &b)| (a - b).abs() <= T::of(REDUCED_FORM_TOL) * scale)
    }
}

fn matches_instrument<T: Scalar>(x: &[T], z: &[T]) -> bool {
    let scale = T::one().max(scalar::max_abs(z));
    x.iter()
        .zip(z)
        .all(|(&a, &b)| (a - b).abs() <= T::of(REDUCED_FORM_TOL) * scale)
}

fn check_finite<T: Scalar>(what: &'static str, v: &[T]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(row) => Err(Error::NonFinite { what, row, col: 0 }),
        None => Ok(()),
    }
}

/// Residuals under the null `beta = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullResiduals<T> {
    pub b: T,
    pub e_b: Vec<T>,
}

pub fn null_residuals<T: Scalar>(design: &ShiftShareDesign<T>, b: T) -> NullResiduals<T> {
    let e_b = design
        .y()
        .iter()
        .zip(design.x())
        .map(|(&y, &x)| y - b * x)
        .collect();
    NullResiduals { b, e_b }
}
