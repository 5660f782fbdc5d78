use alloc::vec::Vec;

use super::Dataset;
use crate::rng::{shuffle, stream};
use crate::{Error, Result};

const SPLIT_TAG: u64 = 0x5350_4c54;

/// Partitions `0..rows` into parts with the given fractions.
///
/// Part sizes are differences of rounded cumulative fractions, so they always
/// add up to `rows`. Indices inside each part are ascending.
pub fn split_indices(rows: usize, fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() || fractions.iter().any(|f| !(*f >= 0.0)) {
        return Err(Error::invalid("split fractions must be nonnegative"));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(alloc::format!("split fractions sum to {total}, expected 1")));
    }
    let mut order: Vec<usize> = (0..rows).collect();
    let mut rng = stream(seed, &[SPLIT_TAG]);
    shuffle(&mut rng, &mut order);
    let mut parts = Vec::with_capacity(fractions.len());
    let (mut cum, mut start) = (0.0, 0usize);
    for (i, f) in fractions.iter().enumerate() {
        cum += f;
        let end = if i + 1 == fractions.len() {
            rows
        } else {
            ((cum * rows as f64 + 0.5) as usize).min(rows)
        };
        let mut part = order[start..end.max(start)].to_vec();
        part.sort_unstable();
        parts.push(part);
        start = end.max(start);
    }
    Ok(parts)
}

/// Same as [`split_indices`] with the rows of `ds`.
pub fn split_dataset(ds: &Dataset, fractions: &[f64], seed: u64) -> Result<Vec<Dataset>> {
    Ok(split_indices(ds.len(), fractions, seed)?
        .iter()
        .map(|idx| ds.select_rows(idx))
        .collect())
}

/// Shorthand for [`split_dataset`].
pub fn split(ds: &Dataset, fractions: &[f64], seed: u64) -> Result<Vec<Dataset>> {
    split_dataset(ds, fractions, seed)
}
