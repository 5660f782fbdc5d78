use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::Dataset;
use crate::math::sqrt;
use crate::{Error, Matrix, Result};

/// Per-column z-score statistics fitted on a training set.
///
/// Constant columns are flagged and passed through unchanged.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scaler {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Scaler {
    pub fn fit<S: AsRef<str>>(train: &Dataset, names: &[S]) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::Empty("scaler training set"));
        }
        let n = train.len() as f64;
        let mut s = Scaler {
            names: Vec::with_capacity(names.len()),
            mean: Vec::with_capacity(names.len()),
            std: Vec::with_capacity(names.len()),
            constant: Vec::with_capacity(names.len()),
        };
        for name in names {
            let col = train.column(name.as_ref())?;
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            let sd = sqrt(var);
            let constant = !(sd > 1e-12 * m.abs().max(1.0));
            s.names.push(name.as_ref().to_string());
            s.mean.push(if constant { 0.0 } else { m });
            s.std.push(if constant { 1.0 } else { sd });
            s.constant.push(constant);
        }
        Ok(s)
    }

    /// Names of columns flagged as constant.
    pub fn constant_columns(&self) -> Vec<&str> {
        self.names
            .iter()
            .zip(&self.constant)
            .filter(|(_, c)| **c)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Scales every fitted column of `ds`; other columns are copied as-is.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        let mut out = ds.clone();
        for (i, name) in self.names.iter().enumerate() {
            let col: Vec<f64> = ds.column(name)?.iter().map(|v| (v - self.mean[i]) / self.std[i]).collect();
            out.set_column(name, col)?;
        }
        Ok(out)
    }

    /// Scales a matrix whose columns are `names` in that order.
    pub fn transform<S: AsRef<str>>(&self, x: &Matrix, names: &[S]) -> Result<Matrix> {
        if x.cols() != names.len() {
            return Err(Error::dims("scaled columns", names.len(), x.cols()));
        }
        let idx = names.iter().map(|n| self.index(n.as_ref())).collect::<Result<Vec<_>>>()?;
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = (*v - self.mean[idx[c]]) / self.std[idx[c]];
            }
        }
        Ok(out)
    }

    /// Undoes [`Scaler::transform`].
    pub fn inverse<S: AsRef<str>>(&self, x: &Matrix, names: &[S]) -> Result<Matrix> {
        let (offset, scale) = self.offset_scale(names)?;
        if x.cols() != names.len() {
            return Err(Error::dims("scaled columns", names.len(), x.cols()));
        }
        let mut out = x.clone();
        for r in 0..out.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                *v = offset[c] + scale[c] * *v;
            }
        }
        Ok(out)
    }

    /// `(mean, std)` of the named columns, for mapping scaled values back.
    pub fn offset_scale<S: AsRef<str>>(&self, names: &[S]) -> Result<(Vec<f64>, Vec<f64>)> {
        let idx = names.iter().map(|n| self.index(n.as_ref())).collect::<Result<Vec<_>>>()?;
        Ok((idx.iter().map(|&i| self.mean[i]).collect(), idx.iter().map(|&i| self.std[i]).collect()))
    }
}
