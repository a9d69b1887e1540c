//! Volume containers. Voxels are stored x-fastest: `i = x + nx * (y + ny * z)`.

use crate::error::{invalid, Result};
use crate::scalar::Real;

pub type Dims = [usize; 3];
pub type Spacing = [f64; 3];

/// Sampling lattice shared by intensity and label volumes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dims: Dims,
    pub spacing: Spacing,
}

impl Grid {
    pub fn new(dims: Dims, spacing: Spacing) -> Result<Self> {
        if dims.contains(&0) {
            return invalid(format!("dimensions must be >= 1, got {dims:?}"));
        }
        if spacing.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
            return invalid(format!("spacing must be finite and > 0, got {spacing:?}"));
        }
        Ok(Self { dims, spacing })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn coords(&self, i: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    /// Index of a signed coordinate, or `None` when it falls outside the volume.
    #[inline]
    pub fn checked_index(&self, x: isize, y: isize, z: isize) -> Option<usize> {
        if x < 0 || y < 0 || z < 0 {
            return None;
        }
        let (x, y, z) = (x as usize, y as usize, z as usize);
        if x >= self.dims[0] || y >= self.dims[1] || z >= self.dims[2] {
            return None;
        }
        Some(self.index(x, y, z))
    }

    /// Nearest voxel to a continuous voxel coordinate, clamped into the volume.
    pub fn nearest_voxel(&self, p: [f64; 3]) -> [usize; 3] {
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = p[a].round();
            out[a] = if v.is_nan() || v < 0.0 { 0 } else { (v as usize).min(self.dims[a] - 1) };
        }
        out
    }

    pub fn to_physical(&self, p: [f64; 3]) -> [f64; 3] {
        [p[0] * self.spacing[0], p[1] * self.spacing[1], p[2] * self.spacing[2]]
    }

    pub fn to_voxel(&self, p: [f64; 3]) -> [f64; 3] {
        [p[0] / self.spacing[0], p[1] / self.spacing[1], p[2] / self.spacing[2]]
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self.dims == other.dims
    }
}

/// Voxel neighbourhood used by labelling and flooding operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Six,
    TwentySix,
}

impl Connectivity {
    pub fn from_count(n: u32) -> Result<Self> {
        match n {
            6 => Ok(Self::Six),
            26 => Ok(Self::TwentySix),
            _ => invalid(format!("connectivity must be 6 or 26, got {n}")),
        }
    }

    pub fn offsets(self) -> &'static [[isize; 3]] {
        match self {
            Self::Six => &SIX,
            Self::TwentySix => &TWENTY_SIX,
        }
    }
}

const SIX: [[isize; 3]; 6] = [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]];

const TWENTY_SIX: [[isize; 3]; 26] = {
    let mut out = [[0isize; 3]; 26];
    let mut n = 0;
    let mut dz = -1;
    while dz <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dx = -1;
            while dx <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = [dx, dy, dz];
                    n += 1;
                }
                dx += 1;
            }
            dy += 1;
        }
        dz += 1;
    }
    out
};

/// Calls `f` with the index of every in-bounds neighbour of voxel `i`.
#[inline]
pub fn for_each_neighbor(grid: &Grid, i: usize, conn: Connectivity, mut f: impl FnMut(usize)) {
    let [x, y, z] = grid.coords(i);
    for o in conn.offsets() {
        if let Some(j) = grid.checked_index(x as isize + o[0], y as isize + o[1], z as isize + o[2]) {
            f(j);
        }
    }
}

/// Scalar volume. Raw microscopy data is normalized to `[0, 1]`; derived
/// volumes such as filter responses or distance maps are unrestricted.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumetricImage<T> {
    grid: Grid,
    data: Vec<T>,
}

impl<T: Real> VolumetricImage<T> {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<T>) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        if data.len() != grid.len() {
            return invalid(format!("expected {} voxels, got {}", grid.len(), data.len()));
        }
        Ok(Self { grid, data })
    }

    pub fn filled(dims: Dims, spacing: Spacing, value: T) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        Ok(Self { data: vec![value; grid.len()], grid })
    }

    pub fn zeros(dims: Dims, spacing: Spacing) -> Result<Self> {
        Self::filled(dims, spacing, T::zero())
    }

    pub fn from_grid(grid: Grid, data: Vec<T>) -> Result<Self> {
        Self::new(grid.dims, grid.spacing, data)
    }

    pub fn from_fn(dims: Dims, spacing: Spacing, mut f: impl FnMut(usize, usize, usize) -> T) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        let mut data = Vec::with_capacity(grid.len());
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Ok(Self { grid, data })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    pub fn dims(&self) -> Dims {
        self.grid.dims
    }
    #[inline]
    pub fn spacing(&self) -> Spacing {
        self.grid.spacing
    }
    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<T> {
        self.data
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> T {
        self.data[self.grid.index(x, y, z)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: T) {
        let i = self.grid.index(x, y, z);
        self.data[i] = v;
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Result<Self> {
        self.grid = Grid::new(self.grid.dims, spacing)?;
        Ok(self)
    }

    pub fn map<U: Real>(&self, f: impl Fn(T) -> U) -> VolumetricImage<U> {
        VolumetricImage { grid: self.grid, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn cast<U: Real>(&self) -> VolumetricImage<U> {
        self.map(|v| U::of(v.as_f64()))
    }

    /// Fails unless every voxel is finite and inside `[0, 1]`.
    pub fn check_normalized(&self) -> Result<()> {
        match self.data.iter().position(|v| !(v.is_finite() && *v >= T::zero() && *v <= T::one())) {
            Some(i) => invalid(format!("voxel {:?} = {} outside [0, 1]", self.grid.coords(i), self.data[i])),
            None => Ok(()),
        }
    }

    pub fn min_max(&self) -> (T, T) {
        self.data
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Copies the axis-aligned box `[lo, hi)` into a new volume.
    pub fn crop(&self, lo: [usize; 3], hi: [usize; 3]) -> Result<Self> {
        check_box(&self.grid, lo, hi)?;
        let dims = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                let s = self.grid.index(lo[0], y, z);
                data.extend_from_slice(&self.data[s..s + dims[0]]);
            }
        }
        Self::new(dims, self.grid.spacing, data)
    }
}

/// Integer label volume; 0 is background.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelImage {
    grid: Grid,
    data: Vec<u32>,
}

impl LabelImage {
    pub fn new(dims: Dims, spacing: Spacing, data: Vec<u32>) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        if data.len() != grid.len() {
            return invalid(format!("expected {} voxels, got {}", grid.len(), data.len()));
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(dims: Dims, spacing: Spacing) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        Ok(Self { data: vec![0; grid.len()], grid })
    }

    pub fn from_grid(grid: Grid, data: Vec<u32>) -> Result<Self> {
        Self::new(grid.dims, grid.spacing, data)
    }

    pub fn from_fn(dims: Dims, spacing: Spacing, mut f: impl FnMut(usize, usize, usize) -> u32) -> Result<Self> {
        let grid = Grid::new(dims, spacing)?;
        let mut data = Vec::with_capacity(grid.len());
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    data.push(f(x, y, z));
                }
            }
        }
        Ok(Self { grid, data })
    }

    /// Binary mask of all voxels where `pred` holds, stored as labels 0/1.
    pub fn from_predicate<T: Real>(img: &VolumetricImage<T>, pred: impl Fn(T) -> bool) -> Self {
        Self { grid: *img.grid(), data: img.data().iter().map(|&v| u32::from(pred(v))).collect() }
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    #[inline]
    pub fn dims(&self) -> Dims {
        self.grid.dims
    }
    #[inline]
    pub fn spacing(&self) -> Spacing {
        self.grid.spacing
    }
    #[inline]
    pub fn data(&self) -> &[u32] {
        &self.data
    }
    #[inline]
    pub fn data_mut(&mut self) -> &mut [u32] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<u32> {
        self.data
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u32 {
        self.data[self.grid.index(x, y, z)]
    }
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, z: usize, v: u32) {
        let i = self.grid.index(x, y, z);
        self.data[i] = v;
    }

    pub fn with_spacing(mut self, spacing: Spacing) -> Result<Self> {
        self.grid = Grid::new(self.grid.dims, spacing)?;
        Ok(self)
    }

    pub fn max_label(&self) -> u32 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    /// Distinct non-zero labels in ascending order.
    pub fn labels(&self) -> Vec<u32> {
        let mut seen: Vec<u32> = self.data.iter().copied().filter(|&l| l != 0).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&l| l != 0).count()
    }

    pub fn crop(&self, lo: [usize; 3], hi: [usize; 3]) -> Result<Self> {
        check_box(&self.grid, lo, hi)?;
        let dims = [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]];
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for z in lo[2]..hi[2] {
            for y in lo[1]..hi[1] {
                let s = self.grid.index(lo[0], y, z);
                data.extend_from_slice(&self.data[s..s + dims[0]]);
            }
        }
        Self::new(dims, self.grid.spacing, data)
    }

    /// Per-label voxel statistics, keyed by label in ascending order.
    pub fn regions(&self) -> Vec<Region> {
        let mut map: std::collections::BTreeMap<u32, Region> = std::collections::BTreeMap::new();
        for (i, &l) in self.data.iter().enumerate() {
            if l == 0 {
                continue;
            }
            let c = self.grid.coords(i);
            map.entry(l).or_insert_with(|| Region::empty(l)).push(c);
        }
        map.into_values().collect()
    }
}

fn check_box(grid: &Grid, lo: [usize; 3], hi: [usize; 3]) -> Result<()> {
    for a in 0..3 {
        if lo[a] >= hi[a] || hi[a] > grid.dims[a] {
            return invalid(format!("crop box {lo:?}..{hi:?} outside volume {:?}", grid.dims));
        }
    }
    Ok(())
}

/// Geometry of one labelled region in voxel units.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub label: u32,
    pub volume: usize,
    pub sum: [f64; 3],
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Region {
    fn empty(label: u32) -> Self {
        Self { label, volume: 0, sum: [0.0; 3], lo: [usize::MAX; 3], hi: [0; 3] }
    }

    fn push(&mut self, c: [usize; 3]) {
        self.volume += 1;
        for a in 0..3 {
            self.sum[a] += c[a] as f64;
            self.lo[a] = self.lo[a].min(c[a]);
            self.hi[a] = self.hi[a].max(c[a]);
        }
    }

    /// Centroid in voxel coordinates.
    pub fn centroid(&self) -> [f64; 3] {
        let n = self.volume as f64;
        [self.sum[0] / n, self.sum[1] / n, self.sum[2] / n]
    }

    /// Bounding box edge lengths in voxels (inclusive extents).
    pub fn extent(&self) -> [usize; 3] {
        [self.hi[0] - self.lo[0] + 1, self.hi[1] - self.lo[1] + 1, self.hi[2] - self.lo[2] + 1]
    }
}

/// A voxel position with an associated value, e.g. a filter response maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<T> {
    pub pos: [usize; 3],
    pub value: T,
}

pub type PointSet<T> = Vec<Point<T>>;
