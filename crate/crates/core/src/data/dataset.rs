use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::schema::LABEL_COLUMNS;
use crate::{Error, Matrix, Result, Samples};

/// Column-labelled table of 10-minute records from one turbine.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    turbine_id: String,
    timestamps: Vec<i64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    /// All values must be finite; use [`Dataset::from_raw`] to drop gap rows instead.
    pub fn new(turbine_id: &str, timestamps: Vec<i64>, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let ds = Self::unchecked(turbine_id, timestamps, names, columns)?;
        if let Some((c, _)) = ds
            .columns
            .iter()
            .enumerate()
            .find(|(_, col)| col.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite(format!("column {}", ds.names[c])));
        }
        Ok(ds)
    }

    fn unchecked(turbine_id: &str, timestamps: Vec<i64>, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::dims("column names", columns.len(), names.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::invalid(format!("duplicate column {n}")));
            }
        }
        for (n, c) in names.iter().zip(&columns) {
            if c.len() != timestamps.len() {
                return Err(Error::invalid(format!(
                    "column {n} has {} rows, expected {}",
                    c.len(),
                    timestamps.len()
                )));
            }
        }
        Ok(Self {
            turbine_id: turbine_id.to_string(),
            timestamps,
            names,
            columns,
        })
    }

    /// Builds a dataset, dropping every row with a non-finite entry.
    /// Returns the dataset and the number of dropped rows.
    pub fn from_raw(
        turbine_id: &str,
        timestamps: Vec<i64>,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<(Self, usize)> {
        let raw = Self::unchecked(turbine_id, timestamps, names, columns)?;
        let keep: Vec<usize> = (0..raw.len())
            .filter(|&r| raw.columns.iter().all(|c| c[r].is_finite()))
            .collect();
        let dropped = raw.len() - keep.len();
        Ok((raw.select_rows(&keep), dropped))
    }

    pub fn empty(turbine_id: &str, names: Vec<String>) -> Result<Self> {
        let columns = names.iter().map(|_| Vec::new()).collect();
        Self::new(turbine_id, Vec::new(), names, columns)
    }

    pub fn turbine_id(&self) -> &str {
        &self.turbine_id
    }

    pub fn with_turbine_id(mut self, id: &str) -> Self {
        self.turbine_id = id.to_string();
        self
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    /// True if both DEM label columns are present.
    pub fn has_labels(&self) -> bool {
        LABEL_COLUMNS.iter().all(|l| self.has_column(l))
    }

    /// Every column that is not a DEM label.
    pub fn input_names(&self) -> Vec<String> {
        self.names
            .iter()
            .filter(|n| !LABEL_COLUMNS.contains(&n.as_str()))
            .cloned()
            .collect()
    }

    /// Row-major matrix of the named columns, in the given order.
    pub fn matrix<S: AsRef<str>>(&self, names: &[S]) -> Result<Matrix> {
        let cols = names
            .iter()
            .map(|n| self.column(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Matrix::from_columns(self.len(), &cols)
    }

    pub fn samples<S: AsRef<str>, T: AsRef<str>>(&self, inputs: &[S], labels: &[T]) -> Result<Samples> {
        Samples::new(self.matrix(inputs)?, self.matrix(labels)?)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            turbine_id: self.turbine_id.clone(),
            timestamps: rows.iter().map(|&r| self.timestamps[r]).collect(),
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&r| c[r]).collect())
                .collect(),
        }
    }

    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<Self> {
        let columns = names
            .iter()
            .map(|n| self.column(n.as_ref()).map(<[f64]>::to_vec))
            .collect::<Result<Vec<_>>>()?;
        Self::unchecked(
            &self.turbine_id,
            self.timestamps.clone(),
            names.iter().map(|n| n.as_ref().to_string()).collect(),
            columns,
        )
    }

    /// Rows whose timestamp satisfies `keep`.
    pub fn filter_time<F: Fn(i64) -> bool>(&self, keep: F) -> Self {
        let rows: Vec<usize> = (0..self.len()).filter(|&r| keep(self.timestamps[r])).collect();
        self.select_rows(&rows)
    }

    /// Replaces (or appends) a column.
    pub fn set_column(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::dims("column length", self.len(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("column {name}")));
        }
        match self.names.iter().position(|n| n == name) {
            Some(i) => self.columns[i] = values,
            None => {
                self.names.push(name.to_string());
                self.columns.push(values);
            }
        }
        Ok(())
    }
}
