//! Uniform lattices, grid functions and the discrete calculus used by every
//! other module.
//!
//! Values are stored row-major: the last axis varies fastest. All derivative
//! operators are interior-only; boundary nodes carry values but no
//! derivatives.

pub mod gfn;
mod linalg;

pub use linalg::{eigenvalues_sym, operator_norm, Mat};

use crate::error::{Error, Result};

/// Relative slack applied to ball membership so that nodes lying exactly on
/// a sphere (up to rounding of the coordinates) are counted inside.
const BALL_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    shape: Vec<usize>,
    origin: Vec<f64>,
    spacing: f64,
    strides: Vec<usize>,
}

impl Lattice {
    pub fn new(shape: Vec<usize>, origin: Vec<f64>, spacing: f64) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::InvalidLattice("dimension must be positive".into()));
        }
        if shape.len() != origin.len() {
            return Err(Error::InvalidLattice(format!(
                "shape has {} axes but origin has {}",
                shape.len(),
                origin.len()
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidLattice(format!("spacing must be positive, got {spacing}")));
        }
        if let Some(n) = shape.iter().find(|&&n| n < 3) {
            return Err(Error::InvalidLattice(format!("every extent must be >= 3, got {n}")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidLattice("origin must be finite".into()));
        }
        let mut strides = vec![1; shape.len()];
        for k in (0..shape.len() - 1).rev() {
            strides[k] = strides[k + 1] * shape[k + 1];
        }
        Ok(Self { shape, origin, spacing, strides })
    }

    /// `n` nodes per axis (n odd) with the middle node at the origin.
    pub fn centered(dim: usize, n: usize, spacing: f64) -> Result<Self> {
        if n % 2 == 0 {
            return Err(Error::InvalidLattice(format!("centered lattice needs odd n, got {n}")));
        }
        let half = (n - 1) / 2;
        Self::new(vec![n; dim], vec![-(half as f64) * spacing; dim], spacing)
    }

    /// Centered lattice with `n` nodes per axis whose spacing leaves a four
    /// node margin around the ball of the given radius.
    pub fn covering_ball(dim: usize, n: usize, radius: f64) -> Result<Self> {
        if n % 2 == 0 || n < 13 {
            return Err(Error::InvalidLattice(format!("need odd n >= 13, got {n}")));
        }
        let cells = ((n - 1) / 2 - 4) as f64;
        Self::centered(dim, n, radius / cells)
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume element `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim() as i32)
    }

    pub fn linear(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi(&self, mut lin: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in 0..self.dim() {
            idx[k] = lin / self.strides[k];
            lin %= self.strides[k];
        }
        idx
    }

    pub fn contains_index(&self, idx: &[usize]) -> bool {
        idx.len() == self.dim() && idx.iter().zip(&self.shape).all(|(i, n)| i < n)
    }

    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter()
            .zip(&self.origin)
            .map(|(&i, o)| o + self.spacing * i as f64)
            .collect()
    }

    pub fn point_linear(&self, lin: usize) -> Vec<f64> {
        self.point(&self.multi(lin))
    }

    /// Coordinates of every node, flattened node-major (`d` reals per node).
    pub fn coordinates(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(self.len() * d);
        for lin in 0..self.len() {
            out.extend(self.point_linear(lin));
        }
        out
    }

    /// True when the node is at least one node away from every face.
    pub fn is_interior(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.shape).all(|(&i, &n)| i >= 1 && i + 1 < n)
    }

    pub fn is_interior_linear(&self, lin: usize) -> bool {
        let mut rem = lin;
        for k in 0..self.dim() {
            let i = rem / self.strides[k];
            rem %= self.strides[k];
            if i == 0 || i + 1 >= self.shape[k] {
                return false;
            }
        }
        true
    }

    /// Index of the node nearest to `p`, if `p` lies within half a cell of
    /// the lattice box.
    pub fn nearest(&self, p: &[f64]) -> Option<Vec<usize>> {
        let mut idx = Vec::with_capacity(self.dim());
        for k in 0..self.dim() {
            let t = ((p[k] - self.origin[k]) / self.spacing).round();
            if t < 0.0 || t >= self.shape[k] as f64 {
                return None;
            }
            idx.push(t as usize);
        }
        Some(idx)
    }

    /// Index of the node located exactly at `p` (up to 1e-9 cells).
    pub fn node_at(&self, p: &[f64]) -> Option<Vec<usize>> {
        let idx = self.nearest(p)?;
        let q = self.point(&idx);
        let exact = p
            .iter()
            .zip(&q)
            .all(|(a, b)| (a - b).abs() <= 1e-9 * self.spacing);
        exact.then_some(idx)
    }

    /// Linear indices of nodes whose point lies in `region`, ascending.
    pub fn nodes_in(&self, region: &Region) -> Vec<usize> {
        let (blo, bhi) = region.bounding_box();
        let d = self.dim();
        let h = self.spacing;
        let mut lo = vec![0usize; d];
        let mut hi = vec![0usize; d];
        for a in 0..d {
            let l = ((blo[a] - self.origin[a]) / h - 1e-6).ceil().max(0.0);
            let u = ((bhi[a] - self.origin[a]) / h + 1e-6).floor();
            if u < 0.0 || l > (self.shape[a] - 1) as f64 {
                return Vec::new();
            }
            lo[a] = l as usize;
            hi[a] = (u as usize).min(self.shape[a] - 1);
            if lo[a] > hi[a] {
                return Vec::new();
            }
        }
        let mut out = Vec::new();
        let mut idx = lo.clone();
        let mut p = vec![0.0; d];
        loop {
            for a in 0..d {
                p[a] = self.origin[a] + h * idx[a] as f64;
            }
            if region.contains(&p) {
                out.push(self.linear(&idx));
            }
            // odometer, last axis fastest so indices come out ascending
            let mut a = d;
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if idx[a] < hi[a] {
                    idx[a] += 1;
                    break;
                }
                idx[a] = lo[a];
            }
        }
    }

    /// Lower and upper corners of the lattice box.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let hi = self
            .origin
            .iter()
            .zip(&self.shape)
            .map(|(o, &n)| o + self.spacing * (n - 1) as f64)
            .collect();
        (self.origin.clone(), hi)
    }

    /// Neighbor of a linear index along `axis` by `delta` nodes; `None` when
    /// it falls off the lattice.
    pub fn offset(&self, lin: usize, axis: usize, delta: isize) -> Option<usize> {
        let i = (lin / self.strides[axis]) % self.shape[axis];
        let j = i as isize + delta;
        if j < 0 || j >= self.shape[axis] as isize {
            return None;
        }
        Some((lin as isize + delta * self.strides[axis] as isize) as usize)
    }

    /// Checks that the bounding box of `region` stays at least one node away
    /// from the lattice faces.
    pub fn check_region_interior(&self, region: &Region) -> Result<()> {
        let (lo, hi) = region.bounding_box();
        let (blo, bhi) = self.bounds();
        let h = self.spacing;
        let slack = 1e-9 * h;
        for k in 0..self.dim() {
            if lo[k] < blo[k] + h - slack || hi[k] > bhi[k] - h + slack {
                return Err(Error::RegionOutsideLattice(format!(
                    "axis {k}: region spans [{}, {}] but the interior is [{}, {}]",
                    lo[k],
                    hi[k],
                    blo[k] + h,
                    bhi[k] - h
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Region {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `inner < |x - center| <= outer`.
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
}

impl Region {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        Region::Ball { center, radius }
    }

    /// Ball of the given radius around the origin of `R^dim`.
    pub fn centered_ball(dim: usize, radius: f64) -> Self {
        Region::Ball { center: vec![0.0; dim], radius }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            Region::Ball { center, radius } => {
                let r2: f64 = p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                r2 <= radius * radius * (1.0 + BALL_REL_TOL)
            }
            Region::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, u))| *x >= *l - 1e-12 && *x <= *u + 1e-12),
            Region::Annulus { center, inner, outer } => {
                let r2: f64 = p.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                r2 > inner * inner && r2 <= outer * outer * (1.0 + BALL_REL_TOL)
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Ball { center, radius } | Region::Annulus { center, outer: radius, .. } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// Lebesgue measure of the continuous region.
    pub fn volume(&self) -> f64 {
        match self {
            Region::Ball { center, radius } => unit_ball_volume(center.len()) * radius.powi(center.len() as i32),
            Region::Box { lo, hi } => lo.iter().zip(hi).map(|(l, u)| (u - l).max(0.0)).product(),
            Region::Annulus { center, inner, outer } => {
                let d = center.len() as i32;
                unit_ball_volume(center.len()) * (outer.powi(d) - inner.min(*outer).max(0.0).powi(d))
            }
        }
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    lattice: Lattice,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(lattice: Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!(
                "{} values for a lattice of {} nodes",
                values.len(),
                lattice.len()
            )));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { lattice, values })
    }

    /// Samples `f` at every node. Non-finite samples are rejected.
    pub fn from_fn(lattice: &Lattice, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let values = (0..lattice.len()).map(|lin| f(&lattice.point_linear(lin))).collect();
        Self::new(lattice.clone(), values)
    }

    pub fn constant(lattice: &Lattice, c: f64) -> Result<Self> {
        Self::new(lattice.clone(), vec![c; lattice.len()])
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, lin: usize) -> f64 {
        self.values[lin]
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.lattice.linear(idx)]
    }

    /// Pointwise map; the result must stay finite.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.lattice.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination with a function on the same lattice.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch("grid functions live on different lattices".into()));
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self::new(self.lattice.clone(), values)
    }

    pub fn min_over(&self, region: &Region) -> Option<f64> {
        self.fold_region(region, f64::min)
    }

    pub fn max_over(&self, region: &Region) -> Option<f64> {
        self.fold_region(region, f64::max)
    }

    fn fold_region(&self, region: &Region, op: fn(f64, f64) -> f64) -> Option<f64> {
        let mut acc: Option<f64> = None;
        for lin in 0..self.values.len() {
            if region.contains(&self.lattice.point_linear(lin)) {
                let v = self.values[lin];
                acc = Some(acc.map_or(v, |a| op(a, v)));
            }
        }
        acc
    }

    /// Central-difference gradient at an interior node given by linear index.
    /// The caller guarantees interiority.
    pub(crate) fn gradient_unchecked(&self, lin: usize) -> Vec<f64> {
        let h2 = 2.0 * self.lattice.spacing;
        self.lattice
            .strides
            .iter()
            .map(|&s| (self.values[lin + s] - self.values[lin - s]) / h2)
            .collect()
    }

    pub(crate) fn hessian_unchecked(&self, lin: usize) -> Mat {
        let d = self.lattice.dim();
        let h = self.lattice.spacing;
        let hh = h * h;
        let v = &self.values;
        let st = &self.lattice.strides;
        let mut m = Mat::zeros(d, d);
        for a in 0..d {
            let sa = st[a];
            m[(a, a)] = (v[lin + sa] - 2.0 * v[lin] + v[lin - sa]) / hh;
            for b in a + 1..d {
                let sb = st[b];
                let mixed = (v[lin + sa + sb] - v[lin + sa - sb] - v[lin - sa + sb] + v[lin - sa - sb]) / (4.0 * hh);
                m[(a, b)] = mixed;
                m[(b, a)] = mixed;
            }
        }
        m
    }
}

/// Central differences `(f(i+e_k) - f(i-e_k)) / 2h` on every axis.
pub fn gradient(f: &GridFunction, idx: &[usize]) -> Result<Vec<f64>> {
    let lat = f.lattice();
    if !lat.contains_index(idx) || !lat.is_interior(idx) {
        return Err(Error::InteriorRequired(idx.to_vec()));
    }
    Ok(f.gradient_unchecked(lat.linear(idx)))
}

/// Second central differences on the diagonal, four-point cross stencil for
/// mixed terms.
pub fn hessian(f: &GridFunction, idx: &[usize]) -> Result<Mat> {
    let lat = f.lattice();
    if !lat.contains_index(idx) || !lat.is_interior(idx) {
        return Err(Error::InteriorRequired(idx.to_vec()));
    }
    Ok(f.hessian_unchecked(lat.linear(idx)))
}

/// `h^d` times the number of nodes of `region` whose value satisfies `pred`.
pub fn restrict_measure(f: &GridFunction, pred: impl Fn(f64) -> bool, region: &Region) -> f64 {
    let lat = f.lattice();
    let count = (0..lat.len())
        .filter(|&lin| pred(f.get(lin)) && region.contains(&lat.point_linear(lin)))
        .count();
    count as f64 * lat.cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2(n: usize, h: f64) -> Lattice {
        Lattice::centered(2, n, h).unwrap()
    }

    #[test]
    fn rejects_degenerate_lattices() {
        assert!(Lattice::new(vec![2, 5], vec![0.0, 0.0], 0.1).is_err());
        assert!(Lattice::new(vec![5, 5], vec![0.0, 0.0], 0.0).is_err());
        assert!(Lattice::new(vec![5], vec![0.0, 0.0], 0.1).is_err());
    }

    #[test]
    fn annulus_excludes_the_hole() {
        let a = Region::Annulus { center: vec![0.0, 0.0], inner: 0.5, outer: 1.0 };
        assert!(!a.contains(&[0.5, 0.0]));
        assert!(a.contains(&[0.6, 0.0]) && a.contains(&[0.0, 1.0]));
        assert!(!a.contains(&[1.1, 0.0]));
        assert!((a.volume() - 0.75 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn index_round_trip() {
        let lat = Lattice::new(vec![3, 4, 5], vec![0.0; 3], 1.0).unwrap();
        for lin in 0..lat.len() {
            assert_eq!(lat.linear(&lat.multi(lin)), lin);
        }
        assert_eq!(lat.multi(1), vec![0, 0, 1]);
    }

    #[test]
    fn gradient_of_constant_and_affine() {
        let lat = grid2(11, 0.1);
        let c = GridFunction::constant(&lat, 3.5).unwrap();
        assert_eq!(gradient(&c, &[5, 5]).unwrap(), vec![0.0, 0.0]);
        let a = GridFunction::from_fn(&lat, |p| 2.0 * p[0] - 0.5 * p[1]).unwrap();
        let g = gradient(&a, &[3, 7]).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn gradient_of_half_square_norm() {
        let lat = grid2(201, 0.01);
        let f = GridFunction::from_fn(&lat, |p| 0.5 * (p[0] * p[0] + p[1] * p[1])).unwrap();
        let idx = lat.nearest(&[0.3, 0.4]).unwrap();
        let g = gradient(&f, &idx).unwrap();
        let p = lat.point(&idx);
        assert!((g[0] - p[0]).abs() < 1e-10 && (g[1] - p[1]).abs() < 1e-10);
        assert!((p[0] - 0.3).abs() < 1e-12 && (p[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn boundary_nodes_have_no_derivatives() {
        let lat = grid2(5, 0.1);
        let f = GridFunction::constant(&lat, 0.0).unwrap();
        assert!(matches!(gradient(&f, &[0, 2]), Err(Error::InteriorRequired(_))));
        assert!(hessian(&f, &[2, 4]).is_err());
    }

    #[test]
    fn hessian_exact_on_quadratics() {
        let lat = grid2(9, 0.25);
        let f = GridFunction::from_fn(&lat, |p| p[0] * p[1]).unwrap();
        let m = hessian(&f, &[4, 3]).unwrap();
        assert!(m[(0, 0)].abs() < 1e-12 && m[(1, 1)].abs() < 1e-12);
        assert!((m[(0, 1)] - 1.0).abs() < 1e-12 && (m[(1, 0)] - 1.0).abs() < 1e-12);
        let a = GridFunction::from_fn(&lat, |p| 1.0 + p[0] - 3.0 * p[1]).unwrap();
        assert!(hessian(&a, &[2, 2]).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    /// Analytic Hessian of `|x|^{-4}` in the plane.
    fn inv_quartic_hessian(p: &[f64]) -> [[f64; 2]; 2] {
        let r2 = p[0] * p[0] + p[1] * p[1];
        // b = r2^{-2}; db/dx_i = -4 x_i r2^{-3}; d2b = -4 r2^{-3} I + 24 x x^T r2^{-4}
        let a = -4.0 / r2.powi(3);
        let c = 24.0 / r2.powi(4);
        [[a + c * p[0] * p[0], c * p[0] * p[1]], [c * p[0] * p[1], a + c * p[1] * p[1]]]
    }

    #[test]
    fn hessian_second_order_on_radial_power() {
        let target = [0.6, 0.8];
        let mut errs = Vec::new();
        for h in [0.01, 0.005, 0.0025] {
            let n = 2 * (1.2 / h) as usize + 1;
            let lat = grid2(n, h);
            let f = GridFunction::from_fn(&lat, |p| {
                let r2 = p[0] * p[0] + p[1] * p[1];
                if r2 > 0.0 { r2.powi(-2) } else { 0.0 }
            })
            .unwrap();
            let idx = lat.node_at(&target).unwrap();
            let m = hessian(&f, &idx).unwrap();
            let exact = inv_quartic_hessian(&lat.point(&idx));
            let err = (0..2)
                .flat_map(|i| (0..2).map(move |j| (i, j)))
                .map(|(i, j)| (m[(i, j)] - exact[i][j]).abs())
                .fold(0.0, f64::max);
            errs.push(err);
        }
        for w in errs.windows(2) {
            assert!(w[0] / w[1] >= 3.5, "errors {errs:?}");
        }
    }

    #[test]
    fn measure_of_unit_disk_and_half_disk() {
        let h = 1.0 / 200.0;
        let lat = grid2(2 * 210 + 1, h);
        let five = GridFunction::constant(&lat, 5.0).unwrap();
        let b1 = Region::centered_ball(2, 1.0);
        let area = restrict_measure(&five, |v| v > 1.0, &b1);
        assert!((area - std::f64::consts::PI).abs() < 3.0 * h * std::f64::consts::PI);
        assert_eq!(restrict_measure(&five, |_| false, &b1), 0.0);
        let x1 = GridFunction::from_fn(&lat, |p| p[0]).unwrap();
        let half = restrict_measure(&x1, |v| v > 0.0, &b1);
        assert!((half - std::f64::consts::FRAC_PI_2).abs() < 3.0 * h * std::f64::consts::PI);
    }

    #[test]
    fn ball_measure_converges() {
        for (h, rho) in [(0.02_f64, 0.5), (0.01, 0.5), (0.005, 0.25)] {
            let n = 2 * (0.6 / h).round() as usize + 1;
            let lat = grid2(n, h);
            let one = GridFunction::constant(&lat, 1.0).unwrap();
            let ball = Region::centered_ball(2, rho);
            let m = restrict_measure(&one, |_| true, &ball);
            let rel = (m - ball.volume()).abs() / ball.volume();
            assert!(rel <= 3.0 * h / rho, "h={h} rho={rho} rel={rel}");
        }
    }

    #[test]
    fn region_interior_check() {
        let lat = Lattice::covering_ball(2, 41, 1.0).unwrap();
        assert!(lat.check_region_interior(&Region::centered_ball(2, 1.0)).is_ok());
        assert!(lat.check_region_interior(&Region::centered_ball(2, 1.2)).is_err());
    }

    #[test]
    fn non_finite_values_rejected() {
        let lat = grid2(3, 1.0);
        let mut v = vec![0.0; 9];
        v[4] = f64::NAN;
        assert!(matches!(GridFunction::new(lat, v), Err(Error::NonFinite { index: 4, .. })));
    }
}
