use std::collections::VecDeque;

use crate::image::{for_each_neighbor, Connectivity, Grid, LabelImage};

/// Labels connected foreground regions of `is_fg` in raster order of first encounter.
pub fn label_components(grid: &Grid, conn: Connectivity, is_fg: impl Fn(usize) -> bool) -> LabelImage {
    let mut labels = vec![0u32; grid.len()];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        if labels[start] != 0 || !is_fg(start) {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for_each_neighbor(grid, i, conn, |j| {
                if labels[j] == 0 && is_fg(j) {
                    labels[j] = next;
                    queue.push_back(j);
                }
            });
        }
    }
    LabelImage::from_grid(*grid, labels).expect("grid already validated")
}

/// Connected components of the non-zero voxels of `binary`.
pub fn connected_components(binary: &LabelImage, conn: Connectivity) -> LabelImage {
    let d = binary.data();
    label_components(binary.grid(), conn, |i| d[i] != 0)
}

/// Component of `is_fg` containing voxel `seed`, as voxel indices.
pub fn component_containing(grid: &Grid, conn: Connectivity, seed: usize, is_fg: impl Fn(usize) -> bool) -> Vec<usize> {
    if !is_fg(seed) {
        return Vec::new();
    }
    let mut seen = vec![false; grid.len()];
    let mut out = vec![seed];
    seen[seed] = true;
    let mut k = 0;
    while k < out.len() {
        let i = out[k];
        k += 1;
        for_each_neighbor(grid, i, conn, |j| {
            if !seen[j] && is_fg(j) {
                seen[j] = true;
                out.push(j);
            }
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_touch_depends_on_connectivity() {
        let l = LabelImage::from_fn([2, 2, 1], [1.0; 3], |x, y, _| u32::from(x == y)).unwrap();
        assert_eq!(connected_components(&l, Connectivity::Six).max_label(), 2);
        assert_eq!(connected_components(&l, Connectivity::TwentySix).max_label(), 1);
    }

    #[test]
    fn raster_order_labels() {
        let l = LabelImage::new([5, 1, 1], [1.0; 3], vec![0, 7, 0, 3, 3]).unwrap();
        assert_eq!(connected_components(&l, Connectivity::Six).data(), &[0, 1, 0, 2, 2]);
    }
}
