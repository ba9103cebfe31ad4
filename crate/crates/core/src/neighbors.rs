//! Reference-configuration neighbour search and the splitting cell-linked list.
//!
//! The cell grid has spacing equal to the kernel cut-off, so every neighbour of
//! a particle lies in the 3^D stencil around its cell. Cells are coloured into
//! 3^D blocks by per-axis index residue mod 3. Two cells of the same block are
//! at least three cells apart along some axis, so their stencils never
//! overlap and the cells of one block can be swept concurrently.

use rayon::prelude::*;

use crate::kernel::SmoothingKernel;
use crate::{Error, Result, Vec3};

/// Uniform cell grid over the bounding box of a particle set.
#[derive(Debug, Clone)]
pub struct CellGrid {
    dim: usize,
    origin: Vec3,
    cell_size: f64,
    dims: [usize; 3],
    cell_of: Vec<usize>,
    coords_of: Vec<[u32; 3]>,
    cell_start: Vec<usize>,
    cell_particles: Vec<usize>,
}

impl CellGrid {
    pub fn build(positions: &[Vec3], dim: usize, cutoff: f64) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("cannot build a cell grid without particles"));
        }
        if !(cutoff > 0.0) || !cutoff.is_finite() {
            return Err(Error::invalid(format!("cut-off must be positive, got {cutoff}")));
        }
        if dim != 2 && dim != 3 {
            return Err(Error::invalid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if positions.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(Error::invalid("non-finite particle position"));
        }
        let mut lo = positions[0];
        let mut hi = positions[0];
        for p in positions {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let mut dims = [1usize; 3];
        for a in 0..dim {
            dims[a] = ((hi[a] - lo[a]) / cutoff).floor() as usize + 1;
        }
        let mut origin = lo;
        if dim == 2 {
            origin.z = 0.0;
        }

        let num_cells = dims.iter().product::<usize>();
        let mut coords_of = Vec::with_capacity(positions.len());
        let mut cell_of = Vec::with_capacity(positions.len());
        let mut counts = vec![0usize; num_cells + 1];
        for p in positions {
            let mut c = [0u32; 3];
            for a in 0..dim {
                let idx = ((p[a] - origin[a]) / cutoff).floor() as usize;
                c[a] = idx.min(dims[a] - 1) as u32;
            }
            let cell = c[0] as usize + dims[0] * (c[1] as usize + dims[1] * c[2] as usize);
            coords_of.push(c);
            cell_of.push(cell);
            counts[cell + 1] += 1;
        }
        for k in 0..num_cells {
            counts[k + 1] += counts[k];
        }
        let cell_start = counts.clone();
        let mut fill = counts;
        let mut cell_particles = vec![0usize; positions.len()];
        // Ascending particle order within every cell.
        for (i, &cell) in cell_of.iter().enumerate() {
            cell_particles[fill[cell]] = i;
            fill[cell] += 1;
        }

        Ok(Self {
            dim,
            origin,
            cell_size: cutoff,
            dims,
            cell_of,
            coords_of,
            cell_start,
            cell_particles,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn num_cells(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn num_particles(&self) -> usize {
        self.cell_of.len()
    }

    pub fn cell_of(&self, particle: usize) -> usize {
        self.cell_of[particle]
    }

    /// Particles binned into `cell`, in ascending index order.
    pub fn particles_in(&self, cell: usize) -> &[usize] {
        &self.cell_particles[self.cell_start[cell]..self.cell_start[cell + 1]]
    }

    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        cell_coords(self.dims, cell)
    }

    /// Cells within Chebyshev distance one of `cell`, including itself.
    pub fn stencil(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.cell_coords(cell);
        let range = |a: usize| {
            let lo = c[a].saturating_sub(1);
            let hi = (c[a] + 1).min(self.dims[a] - 1);
            lo..=hi
        };
        let (rx, ry, rz) = (range(0), range(1), range(2));
        let dims = self.dims;
        rz.flat_map(move |z| {
            let rx = rx.clone();
            ry.clone()
                .flat_map(move |y| rx.clone().map(move |x| x + dims[0] * (y + dims[1] * z)))
        })
    }

    /// Every particle in the stencil of particle `i`'s cell (including `i`).
    pub fn candidates(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.stencil(self.cell_of[i])
            .flat_map(move |cell| self.particles_in(cell).iter().copied())
    }

    #[inline]
    fn particle_in_stencil(&self, cell: usize, particle: usize) -> bool {
        let c = self.cell_coords(cell);
        let p = self.coords_of[particle];
        (0..3).all(|a| (c[a] as i64 - p[a] as i64).abs() <= 1)
    }
}

fn cell_coords(dims: [usize; 3], cell: usize) -> [usize; 3] {
    let x = cell % dims[0];
    let rest = cell / dims[0];
    [x, rest % dims[1], rest / dims[1]]
}

/// Colouring of the cell grid into 3^D conflict-free blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    blocks: Vec<Vec<usize>>,
}

impl BlockDecomposition {
    pub fn new(grid: &CellGrid) -> Self {
        Self::from_dims(grid.dim, grid.dims)
    }

    /// Block of cell `(ix, iy, iz)` is `(ix mod 3) + 3 (iy mod 3) + 9 (iz mod 3)`.
    /// Cell linear index is `ix + nx (iy + ny iz)`.
    pub fn from_dims(dim: usize, dims: [usize; 3]) -> Self {
        let num_blocks = 3usize.pow(dim as u32);
        let mut blocks = vec![Vec::new(); num_blocks];
        let num_cells: usize = dims.iter().product();
        for cell in 0..num_cells {
            blocks[block_of(cell_coords(dims, cell))].push(cell);
        }
        Self { blocks }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, b: usize) -> &[usize] {
        &self.blocks[b]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

pub fn block_of(coords: [usize; 3]) -> usize {
    coords[0] % 3 + 3 * (coords[1] % 3) + 9 * (coords[2] % 3)
}

/// One reference-configuration neighbour `j` of some particle `i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborPair {
    pub j: usize,
    /// `|r0_i - r0_j|`
    pub dist0: f64,
    /// `(r0_i - r0_j) / |r0_i - r0_j|`
    pub e0: Vec3,
    /// `(dW/dr)` at `dist0`
    pub dw0: f64,
    /// `∇0_i W_ij = dw0 · e0`
    pub grad0: Vec3,
    /// `2 V0_i V0_j (dW/dr) / r0_ij`, non-positive. Multiplied by `η dt` it
    /// becomes the implicit damping coefficient of the pair.
    pub pair_factor: f64,
}

/// Fixed neighbour lists over the reference configuration, in CSR layout.
#[derive(Debug, Clone)]
pub struct ReferenceNeighborhood {
    offsets: Vec<usize>,
    pairs: Vec<NeighborPair>,
}

impl ReferenceNeighborhood {
    pub fn build(r0: &[Vec3], vol0: &[f64], kernel: &SmoothingKernel, grid: &CellGrid) -> Result<Self> {
        if grid.num_particles() != r0.len() || vol0.len() != r0.len() {
            return Err(Error::invalid("grid, positions and volumes disagree on particle count"));
        }
        if grid.cell_size() < kernel.support_radius() {
            return Err(Error::invalid("cell size is smaller than the kernel support"));
        }
        let cutoff = kernel.support_radius();
        let lists: Vec<Result<Vec<NeighborPair>>> = (0..r0.len())
            .into_par_iter()
            .map(|i| {
                let mut list = Vec::new();
                for j in grid.candidates(i) {
                    if j == i {
                        continue;
                    }
                    let d = r0[i] - r0[j];
                    let dist = d.norm();
                    if dist == 0.0 {
                        return Err(Error::DegenerateGeometry {
                            i: i.min(j),
                            j: i.max(j),
                        });
                    }
                    if dist < cutoff {
                        let e0 = d / dist;
                        let dw0 = kernel.grad_mag_unchecked(dist);
                        list.push(NeighborPair {
                            j,
                            dist0: dist,
                            e0,
                            dw0,
                            grad0: e0 * dw0,
                            pair_factor: 2.0 * vol0[i] * vol0[j] * dw0 / dist,
                        });
                    }
                }
                list.sort_unstable_by_key(|p| p.j);
                Ok(list)
            })
            .collect();

        let mut offsets = Vec::with_capacity(r0.len() + 1);
        offsets.push(0);
        let mut pairs = Vec::new();
        for list in lists {
            pairs.extend(list?);
            offsets.push(pairs.len());
        }
        Ok(Self { offsets, pairs })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn of(&self, i: usize) -> &[NeighborPair] {
        &self.pairs[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn total_pairs(&self) -> usize {
        self.pairs.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepDirection {
    Forward,
    Reverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Forward,
    ForwardThenReverse,
}

/// Raw handle to the swept data, shared by the cell tasks of one block.
#[derive(Clone, Copy)]
struct SharedSlice<T> {
    ptr: *mut T,
    len: usize,
}

// SAFETY: cells of one block have disjoint stencils; `StencilView` only
// allows access inside its own stencil (checked in debug builds), so tasks
// running concurrently never touch the same element.
unsafe impl<T: Send> Send for SharedSlice<T> {}
unsafe impl<T: Send> Sync for SharedSlice<T> {}

/// Per-cell access to the swept data, restricted to the cell's 3^D stencil.
pub struct StencilView<'a, T> {
    data: SharedSlice<T>,
    grid: &'a CellGrid,
    cell: usize,
    direction: SweepDirection,
}

impl<'a, T: Copy> StencilView<'a, T> {
    /// Particles of this cell in ascending index order.
    pub fn cell_particles(&self) -> &'a [usize] {
        self.grid.particles_in(self.cell)
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    pub fn direction(&self) -> SweepDirection {
        self.direction
    }

    /// Particles of this cell in sweep order.
    pub fn own_particles(&self) -> impl Iterator<Item = usize> + '_ {
        let ps = self.grid.particles_in(self.cell);
        let forward = self.direction == SweepDirection::Forward;
        (0..ps.len()).map(move |k| if forward { ps[k] } else { ps[ps.len() - 1 - k] })
    }

    #[inline]
    pub fn get(&self, i: usize) -> T {
        assert!(i < self.data.len);
        debug_assert!(
            self.grid.particle_in_stencil(self.cell, i),
            "particle {i} lies outside the stencil of cell {}",
            self.cell
        );
        // SAFETY: bounds checked above; no concurrent writer can hold `i` (see SharedSlice).
        unsafe { *self.data.ptr.add(i) }
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: T) {
        assert!(i < self.data.len);
        debug_assert!(
            self.grid.particle_in_stencil(self.cell, i),
            "particle {i} lies outside the stencil of cell {}",
            self.cell
        );
        // SAFETY: as in `get`.
        unsafe { *self.data.ptr.add(i) = value }
    }
}

/// Runs `task` once per cell, block after block. With `parallel`, the cells
/// of a block run concurrently; results equal serial execution bit for bit
/// because same-block stencils are disjoint. The reverse pass reverses both
/// the block order and the cell order within each block.
pub fn block_sweep<T, F>(
    grid: &CellGrid,
    blocks: &BlockDecomposition,
    data: &mut [T],
    schedule: Schedule,
    parallel: bool,
    task: F,
) where
    T: Copy + Send,
    F: Fn(&mut StencilView<'_, T>) + Sync,
{
    assert_eq!(
        data.len(),
        grid.num_particles(),
        "swept data must hold one entry per particle"
    );
    let shared = SharedSlice {
        ptr: data.as_mut_ptr(),
        len: data.len(),
    };
    let run_cell = |cell: usize, direction: SweepDirection| {
        if grid.particles_in(cell).is_empty() {
            return;
        }
        let mut view = StencilView {
            data: shared,
            grid,
            cell,
            direction,
        };
        task(&mut view);
    };
    let pass = |direction: SweepDirection| {
        let order: Box<dyn Iterator<Item = &Vec<usize>>> = match direction {
            SweepDirection::Forward => Box::new(blocks.blocks().iter()),
            SweepDirection::Reverse => Box::new(blocks.blocks().iter().rev()),
        };
        for block in order {
            if parallel {
                block.par_iter().for_each(|&cell| run_cell(cell, direction));
            } else {
                match direction {
                    SweepDirection::Forward => block.iter().for_each(|&cell| run_cell(cell, direction)),
                    SweepDirection::Reverse => block.iter().rev().for_each(|&cell| run_cell(cell, direction)),
                }
            }
        }
    };
    pass(SweepDirection::Forward);
    if schedule == Schedule::ForwardThenReverse {
        pass(SweepDirection::Reverse);
    }
}
