use crate::{Error, Matrix, Result};

/// Numeric input/target pairs, one row per 10-minute record.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl Samples {
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::dims("samples rows", inputs.rows(), targets.rows()));
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Samples {
        Samples {
            inputs: self.inputs.select_rows(rows),
            targets: self.targets.select_rows(rows),
        }
    }
}
