//! Cell-centred structured grid on the rectangle `(0, lx) × (0, ly)`.
//!
//! Fields carry a boundary tag that fixes how ghost values are produced:
//! scalar and tensor Neumann fields are mirrored evenly across the wall,
//! no-slip velocities are reflected oddly. The same tag doubles as the
//! parity of a field, so discrete gradient and divergence are exact adjoints
//! when one argument is even and the other odd.

mod mollify;
mod ops;
pub mod snapshot;

pub use mollify::{mollifier_weights, mollify, mollify_initial};
pub use ops::{
    advect, advect_scalar, advect_tensor, divergence, face_gradient_sq, gradient, integrate_cells,
    laplacian, tensor_divergence, velocity_gradient,
};

use crate::error::{Error, Result};
use crate::symcalc::SymMat2;

/// Boundary tag of a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bc {
    /// Homogeneous Dirichlet, odd ghost reflection.
    VelocityDirichlet,
    /// Homogeneous Neumann, even ghost mirror.
    ScalarNeumann,
    /// Homogeneous Neumann for every tensor component.
    TensorNeumann,
}

impl Bc {
    /// `+1` for even (Neumann) ghosts, `−1` for odd (Dirichlet) ones.
    pub fn parity(self) -> f64 {
        match self {
            Bc::VelocityDirichlet => -1.0,
            Bc::ScalarNeumann | Bc::TensorNeumann => 1.0,
        }
    }

    /// Tag of the derivative of a field with this tag.
    pub fn dual(self) -> Bc {
        match self {
            Bc::VelocityDirichlet => Bc::ScalarNeumann,
            Bc::ScalarNeumann | Bc::TensorNeumann => Bc::VelocityDirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

impl Grid2D {
    pub const MIN_CELLS: usize = 4;

    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Grid2D> {
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "domain lengths must be positive, got lx = {lx}, ly = {ly}"
            )));
        }
        Grid2D::from_spacing(nx, ny, lx / nx as f64, ly / ny as f64)
    }

    pub fn from_spacing(nx: usize, ny: usize, hx: f64, hy: f64) -> Result<Grid2D> {
        if nx < Self::MIN_CELLS || ny < Self::MIN_CELLS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {} cells per axis, got {nx}×{ny}",
                Self::MIN_CELLS
            )));
        }
        if !(hx > 0.0 && hy > 0.0 && hx.is_finite() && hy.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got hx = {hx}, hy = {hy}"
            )));
        }
        Ok(Grid2D { nx, ny, hx, hy })
    }

    pub fn lx(&self) -> f64 {
        self.hx * self.nx as f64
    }

    pub fn ly(&self) -> f64 {
        self.hy * self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    pub fn area(&self) -> f64 {
        self.lx() * self.ly()
    }

    pub fn h_min(&self) -> f64 {
        self.hx.min(self.hy)
    }

    /// Row-major storage index, `x` fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.hx
    }

    pub fn y(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.hy
    }

    /// Midpoint-rule quadrature of a per-cell closure.
    pub fn integrate(&self, mut f: impl FnMut(usize, usize) -> f64) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                sum += f(i, j);
            }
        }
        sum * self.cell_area()
    }

    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }
}

/// Cell-centred samples with `N` components per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<const N: usize> {
    grid: Grid2D,
    data: Vec<[f64; N]>,
    bc: Bc,
}

pub type ScalarField2D = Field<1>;
pub type VectorField2D = Field<2>;
pub type SymTensorField2D = Field<3>;

impl<const N: usize> Field<N> {
    pub fn zeros(grid: Grid2D, bc: Bc) -> Self {
        Field {
            grid,
            data: vec![[0.0; N]; grid.len()],
            bc,
        }
    }

    pub fn constant(grid: Grid2D, bc: Bc, value: [f64; N]) -> Self {
        Field {
            grid,
            data: vec![value; grid.len()],
            bc,
        }
    }

    /// Samples `f(x, y)` at cell centres.
    pub fn from_fn(grid: Grid2D, bc: Bc, mut f: impl FnMut(f64, f64) -> [f64; N]) -> Self {
        let mut data = Vec::with_capacity(grid.len());
        for (i, j) in grid.cells() {
            data.push(f(grid.x(i), grid.y(j)));
        }
        Field { grid, data, bc }
    }

    pub fn from_data(grid: Grid2D, bc: Bc, data: Vec<[f64; N]>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field has {} cells, grid expects {}",
                data.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, data, bc })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    pub fn with_bc(mut self, bc: Bc) -> Self {
        self.bc = bc;
        self
    }

    pub fn data(&self) -> &[[f64; N]] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [[f64; N]] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; N] {
        self.data[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: [f64; N]) {
        let k = self.grid.idx(i, j);
        self.data[k] = v;
    }

    /// Value at a possibly out-of-range index one cell beyond a wall.
    #[inline]
    pub fn ghost(&self, i: isize, j: isize) -> [f64; N] {
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        let mut sign = 1.0;
        let ii = if i < 0 {
            sign *= self.bc.parity();
            -1 - i
        } else if i >= nx {
            sign *= self.bc.parity();
            2 * nx - 1 - i
        } else {
            i
        };
        let jj = if j < 0 {
            sign *= self.bc.parity();
            -1 - j
        } else if j >= ny {
            sign *= self.bc.parity();
            2 * ny - 1 - j
        } else {
            j
        };
        let v = self.get(ii as usize, jj as usize);
        if sign == 1.0 {
            v
        } else {
            v.map(|c| -c)
        }
    }

    pub fn map<const M: usize>(&self, bc: Bc, f: impl Fn([f64; N]) -> [f64; M]) -> Field<M> {
        Field {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
            bc,
        }
    }

    /// `self += s · other`, componentwise.
    pub fn axpy(&mut self, s: f64, other: &Field<N>) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            for c in 0..N {
                a[c] += s * b[c];
            }
        }
    }

    /// `a · self + b · other`, keeping this field's tag.
    pub fn lincomb(&self, a: f64, b: f64, other: &Field<N>) -> Field<N> {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| std::array::from_fn(|c| a * x[c] + b * y[c]))
            .collect();
        Field {
            grid: self.grid,
            data,
            bc: self.bc,
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            for c in v.iter_mut() {
                *c *= s;
            }
        }
    }

    pub fn component(&self, c: usize) -> ScalarField2D {
        let bc = match self.bc {
            Bc::TensorNeumann => Bc::ScalarNeumann,
            other => other,
        };
        self.map(bc, |v| [v[c]])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `∫ Σ_c f_c² dx`.
    pub fn l2_sq(&self) -> f64 {
        let s: f64 = self
            .data
            .iter()
            .map(|v| v.iter().map(|c| c * c).sum::<f64>())
            .sum();
        s * self.grid.cell_area()
    }

    pub fn max_abs_diff(&self, other: &Field<N>) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

impl ScalarField2D {
    pub fn scalar(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        Field::from_fn(grid, Bc::ScalarNeumann, |x, y| [f(x, y)])
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)[0]
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().map(|v| v[0])
    }

    pub fn min(&self) -> f64 {
        self.values().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn integral(&self) -> f64 {
        integrate_cells(self)
    }
}

impl VectorField2D {
    pub fn velocity(grid: Grid2D, f: impl FnMut(f64, f64) -> [f64; 2]) -> Self {
        Field::from_fn(grid, Bc::VelocityDirichlet, f)
    }
}

impl SymTensorField2D {
    pub fn tensor(grid: Grid2D, mut f: impl FnMut(f64, f64) -> SymMat2) -> Self {
        Field::from_fn(grid, Bc::TensorNeumann, |x, y| {
            let p = f(x, y);
            [p.xx, p.xy, p.yy]
        })
    }

    pub fn uniform(grid: Grid2D, p: SymMat2) -> Self {
        Field::constant(grid, Bc::TensorNeumann, [p.xx, p.xy, p.yy])
    }

    #[inline]
    pub fn sym(&self, i: usize, j: usize) -> SymMat2 {
        let [xx, xy, yy] = self.get(i, j);
        SymMat2 { xx, xy, yy }
    }

    #[inline]
    pub fn sym_at(&self, k: usize) -> SymMat2 {
        let [xx, xy, yy] = self.data[k];
        SymMat2 { xx, xy, yy }
    }

    pub fn set_sym(&mut self, i: usize, j: usize, p: SymMat2) {
        self.set(i, j, [p.xx, p.xy, p.yy]);
    }

    pub fn map_sym(&self, f: impl Fn(SymMat2) -> SymMat2) -> Self {
        self.map(self.bc, |[xx, xy, yy]| {
            let p = f(SymMat2 { xx, xy, yy });
            [p.xx, p.xy, p.yy]
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid2D::new(3, 8, 1.0, 1.0).is_err());
        assert!(Grid2D::new(8, 8, 0.0, 1.0).is_err());
        let g = Grid2D::new(8, 4, 2.0, 1.0).unwrap();
        assert_eq!((g.hx, g.hy), (0.25, 0.25));
        assert_eq!(g.area(), 2.0);
        assert_eq!(g.idx(1, 2), 17);
    }

    #[test]
    fn ghost_parity() {
        let g = Grid2D::new(4, 4, 1.0, 1.0).unwrap();
        let f = ScalarField2D::scalar(g, |x, y| 1.0 + x + 10.0 * y);
        assert_eq!(f.ghost(-1, 2), f.get(0, 2));
        assert_eq!(f.ghost(4, 1), f.get(3, 1));
        let u = VectorField2D::velocity(g, |x, y| [x, y]);
        assert_eq!(u.ghost(1, -1), u.get(1, 0).map(|c| -c));
        assert_eq!(u.ghost(1, 4), u.get(1, 3).map(|c| -c));
    }
}
