use std::collections::BTreeMap;

use crate::error::{invalid, Result};
use crate::image::LabelImage;

/// Sparse joint label histogram: `H[i][j]` counts voxels with reference label
/// `i` and segmentation label `j`. Row and column 0 are background.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntersectionHistogram {
    cells: BTreeMap<(u32, u32), u64>,
    rows: BTreeMap<u32, u64>,
    cols: BTreeMap<u32, u64>,
    total: u64,
}

impl IntersectionHistogram {
    pub fn from_images(reference: &LabelImage, seg: &LabelImage) -> Result<Self> {
        if !reference.grid().same_shape(seg.grid()) {
            return invalid(format!("label volumes differ in shape: {:?} vs {:?}", reference.dims(), seg.dims()));
        }
        let mut h = Self::default();
        for (&i, &j) in reference.data().iter().zip(seg.data()) {
            h.add(i, j, 1);
        }
        Ok(h)
    }

    /// Builds from a dense matrix, rows indexed by reference label.
    pub fn from_dense(rows: &[Vec<u64>]) -> Self {
        let mut h = Self::default();
        for (i, row) in rows.iter().enumerate() {
            for (j, &n) in row.iter().enumerate() {
                h.add(i as u32, j as u32, n);
            }
        }
        h
    }

    pub fn add(&mut self, i: u32, j: u32, n: u64) {
        if n == 0 {
            return;
        }
        *self.cells.entry((i, j)).or_default() += n;
        *self.rows.entry(i).or_default() += n;
        *self.cols.entry(j).or_default() += n;
        self.total += n;
    }

    pub fn get(&self, i: u32, j: u32) -> u64 {
        self.cells.get(&(i, j)).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Non-zero cells in `(row, col)` order.
    pub fn cells(&self) -> impl Iterator<Item = ((u32, u32), u64)> + '_ {
        self.cells.iter().map(|(&k, &v)| (k, v))
    }

    pub fn row_sums(&self) -> &BTreeMap<u32, u64> {
        &self.rows
    }

    pub fn col_sums(&self) -> &BTreeMap<u32, u64> {
        &self.cols
    }

    /// Non-zero entries of row `i`.
    pub fn row(&self, i: u32) -> Vec<(u32, u64)> {
        self.cells.range((i, 0)..=(i, u32::MAX)).map(|(&(_, j), &n)| (j, n)).collect()
    }

    /// Non-zero entries of column `j`, ordered by row.
    pub fn col(&self, j: u32) -> Vec<(u32, u64)> {
        self.cells.iter().filter(|((_, c), _)| *c == j).map(|(&(i, _), &n)| (i, n)).collect()
    }

    /// Column index lists per column, built once for column-heavy queries.
    pub fn columns(&self) -> BTreeMap<u32, Vec<(u32, u64)>> {
        let mut out: BTreeMap<u32, Vec<(u32, u64)>> = BTreeMap::new();
        for (&(i, j), &n) in &self.cells {
            out.entry(j).or_default().push((i, n));
        }
        out
    }
}
