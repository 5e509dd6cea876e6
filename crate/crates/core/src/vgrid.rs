//! Vertical grids on `(-m, 0) ∪ (0, ℓ)`, Gauss–Legendre quadrature and P0/P1c fields.

use std::num::NonZeroUsize;
use std::ops::{Add, Mul, Sub};

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::steady_state::Side;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    #[default]
    Uniform,
    /// Cell widths grow by this ratio moving away from the interface.
    Geometric(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerticalGrid {
    nodes: Vec<f64>,
    interface_index: usize,
    quad_order: usize,
    ref_nodes: Vec<f64>,
    ref_weights: Vec<f64>,
}

fn graded_widths(len: f64, n: usize, grading: Grading) -> Result<Vec<f64>> {
    match grading {
        Grading::Uniform => Ok(vec![len / n as f64; n]),
        Grading::Geometric(r) => {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Config(format!("geometric grading ratio must be positive, got {r}")));
            }
            let total: f64 = (0..n).map(|k| r.powi(k as i32)).sum();
            let h0 = len / total;
            Ok((0..n).map(|k| h0 * r.powi(k as i32)).collect())
        }
    }
}

/// Ratio `r ≥ 1` such that `n` cells graded away from the interface cover `len` with the
/// first cell no wider than `h_min`.
pub fn ratio_for_min_width(len: f64, n: usize, h_min: f64) -> f64 {
    if h_min * n as f64 >= len {
        return 1.0;
    }
    let first = |r: f64| {
        let total: f64 = if (r - 1.0).abs() < 1e-14 { n as f64 } else { (r.powi(n as i32) - 1.0) / (r - 1.0) };
        len / total
    };
    let (mut lo, mut hi) = (1.0, 2.0);
    while first(hi) > h_min {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if first(mid) > h_min {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

pub fn build_grid(m: f64, ell: f64, n_lower: usize, n_upper: usize, grading: Grading) -> Result<VerticalGrid> {
    VerticalGrid::new(m, ell, n_lower, n_upper, grading, 4)
}

/// Cell counts, quadrature order and grading, independent of the slab lengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub n_lower: usize,
    pub n_upper: usize,
    pub quad_order: usize,
    pub grading: Grading,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_lower: 256, n_upper: 256, quad_order: 4, grading: Grading::Uniform }
    }
}

impl GridSpec {
    pub fn build(&self, m: f64, ell: f64) -> Result<VerticalGrid> {
        VerticalGrid::new(m, ell, self.n_lower, self.n_upper, self.grading, self.quad_order)
    }
}

impl VerticalGrid {
    pub fn new(m: f64, ell: f64, n_lower: usize, n_upper: usize, grading: Grading, quad_order: usize) -> Result<Self> {
        if n_lower < 2 || n_upper < 2 {
            return Err(Error::Config(format!(
                "cell counts below minimum: n_lower = {n_lower}, n_upper = {n_upper} (need >= 2 each)"
            )));
        }
        if !(m > 0.0 && ell > 0.0) {
            return Err(Error::Config(format!("slab depths must be positive, got m = {m}, ell = {ell}")));
        }
        let lower = graded_widths(m, n_lower, grading)?;
        let upper = graded_widths(ell, n_upper, grading)?;
        let mut nodes = Vec::with_capacity(n_lower + n_upper + 1);
        // lower widths are listed from the interface outward
        let mut x = -m;
        nodes.push(x);
        for h in lower.iter().rev() {
            x += h;
            nodes.push(x);
        }
        *nodes.last_mut().unwrap() = 0.0;
        let mut x = 0.0;
        for h in &upper {
            x += h;
            nodes.push(x);
        }
        *nodes.last_mut().unwrap() = ell;
        Self::from_nodes(nodes, quad_order)
    }

    /// Grid whose cells touching the interface are at most `h_min` wide.
    pub fn interface_refined(m: f64, ell: f64, n_lower: usize, n_upper: usize, h_min: f64, quad_order: usize) -> Result<Self> {
        let rl = ratio_for_min_width(m, n_lower, h_min);
        let ru = ratio_for_min_width(ell, n_upper, h_min);
        let mut lower = Self::new(m, ell, n_lower, n_upper, Grading::Geometric(rl), quad_order)?.nodes;
        let upper = Self::new(m, ell, n_lower, n_upper, Grading::Geometric(ru), quad_order)?.nodes;
        lower.truncate(n_lower + 1);
        lower.extend_from_slice(&upper[n_lower + 1..]);
        Self::from_nodes(lower, quad_order)
    }

    pub fn from_nodes(nodes: Vec<f64>, quad_order: usize) -> Result<Self> {
        let q = NonZeroUsize::new(quad_order).ok_or_else(|| Error::Config("quad_order must be >= 1".into()))?;
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("grid nodes must be strictly increasing".into()));
        }
        let interface_index = nodes
            .iter()
            .position(|&x| x == 0.0)
            .ok_or_else(|| Error::Config("grid must contain the interface node 0".into()))?;
        if interface_index < 2 || nodes.len() - 1 - interface_index < 2 {
            return Err(Error::Config("each slab needs at least two cells".into()));
        }
        let rule = GaussLegendre::new(q);
        let (ref_nodes, ref_weights) = rule.as_node_weight_pairs().iter().copied().unzip();
        Ok(Self { nodes, interface_index, quad_order, ref_nodes, ref_weights })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn interface_index(&self) -> usize {
        self.interface_index
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    pub fn cell_side(&self, cell: usize) -> Side {
        if cell < self.interface_index {
            Side::Lower
        } else {
            Side::Upper
        }
    }

    pub fn cell_bounds(&self, cell: usize) -> (f64, f64) {
        (self.nodes[cell], self.nodes[cell + 1])
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    pub fn min_width(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.width(c)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_width(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.width(c)).fold(0.0, f64::max)
    }

    pub fn m(&self) -> f64 {
        -self.nodes[0]
    }

    pub fn ell(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Cell containing `x`; points on the interface go to the cell on `side`.
    pub fn locate(&self, x: f64, side: Side) -> Option<usize> {
        if x < self.nodes[0] || x > self.ell() {
            return None;
        }
        let (lo, hi) = match side {
            Side::Lower => (0, self.interface_index),
            Side::Upper => (self.interface_index, self.n_cells()),
        };
        let idx = self.nodes.partition_point(|&n| n <= x).saturating_sub(1);
        let idx = idx.clamp(lo, hi - 1);
        let (a, b) = self.cell_bounds(idx);
        (x >= a && x <= b).then_some(idx)
    }

    /// Quadrature points `(x, w)` of a cell.
    pub fn quad_points(&self, cell: usize) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (a, b) = self.cell_bounds(cell);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        self.ref_nodes.iter().zip(&self.ref_weights).map(move |(&s, &w)| (mid + half * s, half * w))
    }

    pub fn integrate(&self, mut f: impl FnMut(f64, Side) -> f64) -> f64 {
        let mut total = 0.0;
        for c in 0..self.n_cells() {
            let side = self.cell_side(c);
            total += self.quad_points(c).map(|(x, w)| w * f(x, side)).sum::<f64>();
        }
        total
    }

    /// Integral over one slab only.
    pub fn integrate_side(&self, side: Side, mut f: impl FnMut(f64) -> f64) -> f64 {
        let cells = match side {
            Side::Lower => 0..self.interface_index,
            Side::Upper => self.interface_index..self.n_cells(),
        };
        cells.map(|c| self.quad_points(c).map(|(x, w)| w * f(x)).sum::<f64>()).sum()
    }
}

/// Field values: `f64` or `Complex64`.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Default {
    fn abs_sq(self) -> f64;
}

impl Scalar for f64 {
    fn abs_sq(self) -> f64 {
        self * self
    }
}

impl Scalar for Complex64 {
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    /// Continuous piecewise linear, one value per node.
    P1c { dirichlet: bool },
    /// One constant per cell.
    P0,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteField<T = f64> {
    pub repr: Representation,
    pub values: Vec<T>,
}

impl<T: Scalar> DiscreteField<T> {
    pub fn p0(grid: &VerticalGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(Error::Config(format!("P0 field needs {} values, got {}", grid.n_cells(), values.len())));
        }
        Ok(Self { repr: Representation::P0, values })
    }

    /// Nodal field; with `dirichlet` the end values must vanish.
    pub fn p1c(grid: &VerticalGrid, values: Vec<T>, dirichlet: bool) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::Config(format!("P1c field needs {} values, got {}", grid.n_nodes(), values.len())));
        }
        if dirichlet && (values[0].abs_sq() != 0.0 || values[values.len() - 1].abs_sq() != 0.0) {
            return Err(Error::Config("H0^1 field must vanish at both ends".into()));
        }
        Ok(Self { repr: Representation::P1c { dirichlet }, values })
    }

    pub fn from_fn(grid: &VerticalGrid, repr: Representation, f: impl Fn(f64, Side) -> T) -> Self {
        let values = match repr {
            Representation::P0 => (0..grid.n_cells())
                .map(|c| {
                    let (a, b) = grid.cell_bounds(c);
                    f(0.5 * (a + b), grid.cell_side(c))
                })
                .collect(),
            Representation::P1c { dirichlet } => {
                let n = grid.n_nodes();
                (0..n)
                    .map(|i| {
                        if dirichlet && (i == 0 || i == n - 1) {
                            T::default()
                        } else {
                            let side = if i < grid.interface_index() { Side::Lower } else { Side::Upper };
                            f(grid.nodes()[i], side)
                        }
                    })
                    .collect()
            }
        };
        Self { repr, values }
    }

    /// Value inside `cell` at `x`.
    pub fn eval(&self, grid: &VerticalGrid, cell: usize, x: f64) -> T {
        match self.repr {
            Representation::P0 => self.values[cell],
            Representation::P1c { .. } => {
                let (a, b) = grid.cell_bounds(cell);
                let t = (x - a) / (b - a);
                self.values[cell] * (1.0 - t) + self.values[cell + 1] * t
            }
        }
    }
}

/// Per-cell slope of a P1c field.
pub fn derivative<T: Scalar>(grid: &VerticalGrid, field: &DiscreteField<T>) -> Result<DiscreteField<T>> {
    if field.repr == Representation::P0 {
        return Err(Error::Domain("derivative requires a P1c field".into()));
    }
    let values = (0..grid.n_cells())
        .map(|c| (field.values[c + 1] - field.values[c]) * (1.0 / grid.width(c)))
        .collect();
    Ok(DiscreteField { repr: Representation::P0, values })
}

/// A vertical profile whose derivatives up to `max_order` can be evaluated cell by cell.
pub trait VerticalDerivatives {
    fn max_order(&self) -> usize;
    /// `|∂₃ʲ f|²` at `x` inside `cell`.
    fn derivative_sq(&self, grid: &VerticalGrid, cell: usize, x: f64, j: usize) -> f64;
}

impl<T: Scalar> VerticalDerivatives for DiscreteField<T> {
    fn max_order(&self) -> usize {
        match self.repr {
            Representation::P0 => 0,
            Representation::P1c { .. } => 1,
        }
    }

    fn derivative_sq(&self, grid: &VerticalGrid, cell: usize, x: f64, j: usize) -> f64 {
        match j {
            0 => self.eval(grid, cell, x).abs_sq(),
            1 => ((self.values[cell + 1] - self.values[cell]) * (1.0 / grid.width(cell))).abs_sq(),
            _ => 0.0,
        }
    }
}

/// `[‖∂₃ʲ f‖²_{L²(lower)}, ‖∂₃ʲ f‖²_{L²(upper)}]` for `j = 0..=j_max`.
pub fn piecewise_hk_seminorms(
    grid: &VerticalGrid,
    field: &impl VerticalDerivatives,
    j_max: usize,
) -> Result<Vec<[f64; 2]>> {
    if j_max > field.max_order() {
        return Err(Error::Domain(format!(
            "requested derivative order {j_max} exceeds the available {}",
            field.max_order()
        )));
    }
    let mut out = vec![[0.0; 2]; j_max + 1];
    for c in 0..grid.n_cells() {
        let s = match grid.cell_side(c) {
            Side::Lower => 0,
            Side::Upper => 1,
        };
        for (x, w) in grid.quad_points(c) {
            for (j, o) in out.iter_mut().enumerate() {
                o[s] += w * field.derivative_sq(grid, c, x, j);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady_state::{build_profile, TwoFluidConfig};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_examples() {
        let g = build_grid(1.0, 1.0, 2, 2, Grading::Uniform).unwrap();
        assert_eq!(g.nodes(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.interface_index(), 2);
        assert!(build_grid(1.0, 1.0, 1, 1, Grading::Uniform).is_err());
        let g = build_grid(2.0, 1.0, 4, 2, Grading::Uniform).unwrap();
        assert_eq!(g.width(0), 0.5);
        assert_eq!(g.width(4), 0.5);
    }

    #[test]
    fn geometric_grid_refines_toward_interface() {
        let g = build_grid(1.0, 2.0, 10, 12, Grading::Geometric(1.2)).unwrap();
        assert_eq!(g.nodes()[10], 0.0);
        assert!(g.width(9) < g.width(0));
        assert!(g.width(10) < g.width(21));
        assert_relative_eq!(g.width(8) / g.width(9), 1.2, max_relative = 1e-12);
        assert_eq!(g.nodes()[0], -1.0);
        assert_eq!(g.ell(), 2.0);
        let r = VerticalGrid::interface_refined(1.0, 1.0, 64, 64, 1e-3, 4).unwrap();
        assert!(r.width(63) <= 1e-3 * (1.0 + 1e-9) && r.width(64) <= 1e-3 * (1.0 + 1e-9));
    }

    #[test]
    fn no_cell_straddles_interface() {
        let g = build_grid(0.7, 1.3, 5, 9, Grading::Geometric(1.1)).unwrap();
        for c in 0..g.n_cells() {
            let (a, b) = g.cell_bounds(c);
            assert!(!(a < 0.0 && b > 0.0));
            assert_eq!(g.cell_side(c) == Side::Lower, b <= 0.0);
        }
    }

    #[test]
    fn integrate_examples() {
        let g = build_grid(1.0, 1.0, 3, 5, Grading::Uniform).unwrap();
        assert_relative_eq!(g.integrate(|_, _| 1.0), 2.0, max_relative = 1e-15);
        assert!(g.integrate(|x, _| x).abs() < 1e-15);
        let p = build_profile(&TwoFluidConfig::reference_isothermal()).unwrap();
        let g = build_grid(1.0, 1.0, 16, 16, Grading::Uniform).unwrap();
        let v = g.integrate(|x, s| p.rho0_side(x, s).unwrap());
        let exact = 2.0 * 0.5f64.exp() - 2.0 * (-1f64).exp();
        assert_relative_eq!(v, exact, max_relative = 1e-13);
        assert_relative_eq!(g.integrate_side(Side::Lower, |x| p.rho0_side(x, Side::Lower).unwrap()), 2.0 * (0.5f64.exp() - 1.0), max_relative = 1e-13);
    }

    #[test]
    fn quadrature_exactness() {
        for q in 1..=8 {
            let g = VerticalGrid::new(0.8, 1.3, 3, 4, Grading::Geometric(1.3), q).unwrap();
            for d in 0..2 * q {
                let exact = (1.3f64.powi(d as i32 + 1) - (-0.8f64).powi(d as i32 + 1)) / (d + 1) as f64;
                let v = g.integrate(|x, _| x.powi(d as i32));
                assert!((v - exact).abs() <= 1e-13 * exact.abs().max(1.0), "q={q} d={d}");
            }
        }
    }

    #[test]
    fn refinement_consistency() {
        let f = |x: f64, _| (3.0 * x).sin() * x.exp();
        let exact = {
            // ∫ e^x sin 3x = e^x (sin 3x − 3 cos 3x)/10
            let a = |x: f64| x.exp() * ((3.0 * x).sin() - 3.0 * (3.0 * x).cos()) / 10.0;
            a(1.0) - a(-1.0)
        };
        let e1 = (build_grid(1.0, 1.0, 4, 4, Grading::Uniform).unwrap().integrate(f) - exact).abs();
        let e2 = (build_grid(1.0, 1.0, 8, 8, Grading::Uniform).unwrap().integrate(f) - exact).abs();
        // O(h^8) for q = 4
        assert!(e2 < e1 / 100.0, "{e1} {e2}");
    }

    #[test]
    fn derivative_examples() {
        let g = build_grid(1.0, 1.0, 2, 2, Grading::Uniform).unwrap();
        let c = DiscreteField::p1c(&g, vec![3.0; 5], false).unwrap();
        assert!(derivative(&g, &c).unwrap().values.iter().all(|&v| v == 0.0));
        let hat = DiscreteField::p1c(&g, vec![0.0, 0.0, 1.0, 0.0, 0.0], true).unwrap();
        assert_eq!(derivative(&g, &hat).unwrap().values, vec![0.0, 2.0, -2.0, 0.0]);
        let ramp = DiscreteField::from_fn(&g, Representation::P1c { dirichlet: false }, |x, _| x);
        assert!(derivative(&g, &ramp).unwrap().values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert!(derivative(&g, &DiscreteField::p0(&g, vec![1.0; 4]).unwrap()).is_err());
    }

    #[test]
    fn seminorm_examples() {
        let g = build_grid(1.0, 1.0, 4, 4, Grading::Uniform).unwrap();
        let c = DiscreteField::p0(&g, vec![2.0; 8]).unwrap();
        let s = piecewise_hk_seminorms(&g, &c, 0).unwrap();
        assert_relative_eq!(s[0][0], 4.0);
        assert_relative_eq!(s[0][1], 4.0);
        let ramp = DiscreteField::from_fn(&g, Representation::P1c { dirichlet: false }, |x, _| x);
        let s = piecewise_hk_seminorms(&g, &ramp, 1).unwrap();
        assert_relative_eq!(s[1][0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(s[1][1], 1.0, max_relative = 1e-14);
        let hat = DiscreteField::from_fn(&g, Representation::P1c { dirichlet: true }, |x, _| 1.0 - x.abs());
        let s = piecewise_hk_seminorms(&g, &hat, 1).unwrap();
        assert_relative_eq!(s[0][0], 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(s[0][1], 1.0 / 3.0, max_relative = 1e-14);
        assert!(piecewise_hk_seminorms(&g, &hat, 2).is_err());
    }

    #[test]
    fn complex_fields() {
        let g = build_grid(1.0, 1.0, 2, 2, Grading::Uniform).unwrap();
        let f = DiscreteField::p0(&g, vec![Complex64::new(3.0, 4.0); 4]).unwrap();
        let s = piecewise_hk_seminorms(&g, &f, 0).unwrap();
        assert_relative_eq!(s[0][0] + s[0][1], 50.0, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn locate_finds_containing_cell(x in -1.0f64..1.0, nl in 2usize..20, nu in 2usize..20, r in 1.0f64..1.5) {
            let g = build_grid(1.0, 1.0, nl, nu, Grading::Geometric(r)).unwrap();
            let side = if x < 0.0 { Side::Lower } else { Side::Upper };
            let c = g.locate(x, side).unwrap();
            let (a, b) = g.cell_bounds(c);
            prop_assert!(a <= x && x <= b);
            prop_assert_eq!(g.cell_side(c), side);
        }
    }
}
