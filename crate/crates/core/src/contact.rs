//! Sliding the cusp `phi(z) = -A |z|^a` (or a paraboloid) from below a grid
//! function, the resulting contact set and the contact map `y -> x`.

use std::collections::HashMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{eigenvalues_sym, operator_norm, GridFunction, Lattice, Mat, Region};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CuspParams {
    pub amplitude: f64,
    pub exponent: f64,
    /// Level `M` above which vertices are slid.
    pub m: f64,
}

impl Default for CuspParams {
    fn default() -> Self {
        Self { amplitude: 10.0, exponent: 0.5, m: 2.0 + 5.0 * 2f64.sqrt() }
    }
}

impl CuspParams {
    pub fn new(amplitude: f64, exponent: f64, m: f64) -> Result<Self> {
        if !(amplitude > 0.0 && exponent > 0.0 && exponent < 1.0 && m.is_finite()) {
            return Err(Error::InvalidParams(format!("cusp ({amplitude}, {exponent}, {m})")));
        }
        Ok(Self { amplitude, exponent, m })
    }

    /// `phi(s) = -A |s|^a`.
    pub fn phi(&self, s: &[f64]) -> f64 {
        -self.amplitude * norm(s).powf(self.exponent)
    }

    /// `phi'(r)` and `phi''(r)` of the radial profile.
    fn radial(&self, r: f64) -> (f64, f64) {
        let (a, e) = (self.amplitude, self.exponent);
        (-a * e * r.powf(e - 1.0), -a * e * (e - 1.0) * r.powf(e - 2.0))
    }

    pub fn gradient(&self, s: &[f64]) -> Vec<f64> {
        let r = norm(s);
        let (d1, _) = self.radial(r);
        s.iter().map(|v| d1 * v / r).collect()
    }

    /// `phi''(r) s^ s^T + phi'(r)/r (I - s^ s^T)`.
    pub fn hessian(&self, s: &[f64]) -> Mat {
        let r = norm(s);
        let (d1, d2) = self.radial(r);
        radial_matrix(s, r, d2, d1 / r)
    }

    pub fn hessian_inverse(&self, s: &[f64]) -> Mat {
        let r = norm(s);
        let (d1, d2) = self.radial(r);
        radial_matrix(s, r, 1.0 / d2, r / d1)
    }

    /// Inverts `g = grad phi(y - x)` for the vertex `x`.
    pub fn vertex_from_gradient(&self, y: &[f64], g: &[f64]) -> Vec<f64> {
        let gn = norm(g);
        let (a, e) = (self.amplitude, self.exponent);
        // |phi'(r)| = A a r^(a-1) = |g|
        let r = (gn / (a * e)).powf(1.0 / (e - 1.0));
        // grad phi(s) is antiparallel to s, so y - x = -r g / |g|
        y.iter().zip(g).map(|(yi, gi)| yi + r * gi / gn).collect()
    }
}

fn radial_matrix(s: &[f64], r: f64, along: f64, across: f64) -> Mat {
    let d = s.len();
    Mat::from_fn(d, d, |i, j| {
        let p = s[i] * s[j] / (r * r);
        along * p + across * (if i == j { 1.0 } else { 0.0 } - p)
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Shape slid from below.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Profile {
    Cusp(CuspParams),
    /// `phi(z) = -a |z|^2 / 2`.
    Paraboloid(f64),
}

impl Profile {
    /// `-phi` as a function of `|z|^2`.
    #[inline]
    fn penalty(&self, r2: f64) -> f64 {
        match self {
            Profile::Cusp(c) if c.exponent == 0.5 => c.amplitude * r2.sqrt().sqrt(),
            Profile::Cusp(c) => c.amplitude * r2.powf(0.5 * c.exponent),
            Profile::Paraboloid(a) => 0.5 * a * r2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactRecord {
    pub vertex: Vec<usize>,
    pub contact: Vec<usize>,
    pub vertex_lin: usize,
    pub contact_lin: usize,
    /// `u(y) - phi(y - x)`.
    pub q_value: f64,
    pub grad_at_y: Vec<f64>,
    pub separation: f64,
    pub jacobian_norm: Option<f64>,
    /// The minimum sits on the edge of the search region.
    pub boundary: bool,
}

impl ContactRecord {
    pub fn is_valid(&self) -> bool {
        !self.boundary && self.separation > 0.0
    }
}

/// Nodes of a search region with their coordinates, values and edge flags,
/// gathered once and reused for every vertex.
struct SearchGrid {
    nodes: Vec<usize>,
    coords: Vec<f64>,
    values: Vec<f64>,
    edge: Vec<bool>,
}

impl SearchGrid {
    fn new(u: &GridFunction, search: &Region) -> Result<Self> {
        let lat = u.lattice();
        lat.check_region_interior(search)?;
        let nodes = lat.nodes_in(search);
        let d = lat.dim();
        let mut coords = Vec::with_capacity(nodes.len() * d);
        let mut edge = Vec::with_capacity(nodes.len());
        for &n in &nodes {
            coords.extend(lat.point_linear(n));
            let on_edge = (0..d).any(|a| {
                [-1isize, 1].iter().any(|&dl| match lat.offset(n, a, dl) {
                    Some(m) => !search.contains(&lat.point_linear(m)),
                    None => true,
                })
            });
            edge.push(on_edge);
        }
        let values = nodes.iter().map(|&n| u.get(n)).collect();
        Ok(Self { nodes, coords, values, edge })
    }

    fn slide(&self, u: &GridFunction, x_lin: usize, profile: &Profile) -> ContactRecord {
        let lat = u.lattice();
        let d = lat.dim();
        let x = lat.point_linear(x_lin);
        let mut best = f64::INFINITY;
        let mut best_k = 0;
        for (k, c) in self.coords.chunks_exact(d).enumerate() {
            let r2: f64 = c.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            let cost = self.values[k] + profile.penalty(r2);
            if cost < best {
                best = cost;
                best_k = k;
            }
        }
        let y_lin = self.nodes[best_k];
        let y = lat.point_linear(y_lin);
        let separation = norm(&y.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
        ContactRecord {
            vertex: lat.multi(x_lin),
            contact: lat.multi(y_lin),
            vertex_lin: x_lin,
            contact_lin: y_lin,
            q_value: best,
            grad_at_y: u.gradient_unchecked(y_lin),
            separation,
            jacobian_norm: None,
            boundary: self.edge[best_k],
        }
    }
}

fn slide(u: &GridFunction, vertex: &[usize], profile: Profile, search: &Region) -> Result<ContactRecord> {
    let lat = u.lattice();
    if !lat.contains_index(vertex) || !lat.is_interior(vertex) {
        return Err(Error::InteriorRequired(vertex.to_vec()));
    }
    let grid = SearchGrid::new(u, search)?;
    Ok(grid.slide(u, lat.linear(vertex), &profile))
}

/// Exhaustive minimum of `u(z) - phi(z - x)` over the nodes of `search`.
pub fn slide_cusp(u: &GridFunction, vertex: &[usize], cusp: &CuspParams, search: &Region) -> Result<ContactRecord> {
    slide(u, vertex, Profile::Cusp(*cusp), search)
}

/// Same as [`slide_cusp`] with `phi(z) = -a |z|^2 / 2`.
pub fn slide_paraboloid(u: &GridFunction, vertex: &[usize], opening: f64, search: &Region) -> Result<ContactRecord> {
    if !(opening > 0.0) {
        return Err(Error::InvalidParams(format!("opening must be positive, got {opening}")));
    }
    slide(u, vertex, Profile::Paraboloid(opening), search)
}

fn offset(lat: &Lattice, rec: &ContactRecord) -> Vec<f64> {
    let x = lat.point_linear(rec.vertex_lin);
    lat.point_linear(rec.contact_lin).iter().zip(&x).map(|(a, b)| a - b).collect()
}

/// `|Dm(y)|` for `Dm = I - (D^2 phi(y - x))^{-1} D^2 u(y)`, stored on the
/// record as well.
pub fn contact_map_jacobian(u: &GridFunction, rec: &mut ContactRecord, cusp: &CuspParams) -> Result<f64> {
    let lat = u.lattice();
    let floor = 3.0 * lat.spacing();
    if rec.separation < floor {
        return Err(Error::SingularSeparation { separation: rec.separation, floor });
    }
    let dm = contact_map_derivative(u, rec, cusp);
    let n = operator_norm(&dm);
    rec.jacobian_norm = Some(n);
    Ok(n)
}

pub fn contact_map_derivative(u: &GridFunction, rec: &ContactRecord, cusp: &CuspParams) -> Mat {
    let s = offset(u.lattice(), rec);
    let d = s.len();
    Mat::identity(d, d) - cusp.hessian_inverse(&s) * u.hessian_unchecked(rec.contact_lin)
}

#[derive(Clone, Debug)]
pub struct ContactSet {
    pub records: Vec<ContactRecord>,
    /// Distinct contact nodes of valid records times `h^d`.
    pub t_measure: f64,
    /// Vertex nodes times `h^d`.
    pub u_measure: f64,
    pub jacobian_bound_observed: f64,
    pub threshold: f64,
    /// Distinct contact nodes with `u(y) > M - 1`.
    pub level_violations: usize,
    pub max_contact_value: f64,
    /// Pairs of records sharing `y` but disagreeing on the gradient there.
    pub conflicts: usize,
    pub boundary_contacts: usize,
    pub degenerate_contacts: usize,
}

impl ContactSet {
    pub fn valid(&self) -> impl Iterator<Item = &ContactRecord> {
        self.records.iter().filter(|r| r.is_valid())
    }

    pub const CSV_HEADER: &'static str = "vertex,contact,q,grad_norm,separation,jacobian_norm,flags";

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            let fmt = |v: &[usize]| v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ");
            let flags = match (r.boundary, r.separation == 0.0) {
                (true, _) => "boundary",
                (false, true) => "degenerate",
                _ => "",
            };
            writeln!(
                w,
                "{},{},{:e},{:e},{:e},{},{}",
                fmt(&r.vertex),
                fmt(&r.contact),
                r.q_value,
                norm(&r.grad_at_y),
                r.separation,
                r.jacobian_norm.map(|j| format!("{j:e}")).unwrap_or_default(),
                flags
            )?;
        }
        Ok(())
    }
}

/// Slides a cusp from every node of `{u > threshold} ∩ vertex_region`.
pub fn build_contact_set(
    u: &GridFunction,
    cusp: &CuspParams,
    vertex_region: &Region,
    search_region: &Region,
    threshold: f64,
) -> Result<ContactSet> {
    let lat = u.lattice();
    let grid = SearchGrid::new(u, search_region)?;
    if let Some(neg) = grid.values.iter().copied().find(|v| *v < 0.0) {
        return Err(Error::InvalidParams(format!("u must be non-negative on the search region, found {neg}")));
    }
    lat.check_region_interior(vertex_region)?;
    let vertices: Vec<usize> = lat.nodes_in(vertex_region).into_iter().filter(|&n| u.get(n) > threshold).collect();
    let profile = Profile::Cusp(*cusp);
    let floor = 3.0 * lat.spacing();
    let records: Vec<ContactRecord> = vertices
        .par_iter()
        .map(|&x| {
            let mut rec = grid.slide(u, x, &profile);
            if rec.is_valid() && rec.separation >= floor {
                let _ = contact_map_jacobian(u, &mut rec, cusp);
            }
            rec
        })
        .collect();

    let cell = lat.cell_volume();
    let mut seen: HashMap<usize, &ContactRecord> = HashMap::new();
    let mut conflicts = 0;
    for r in records.iter().filter(|r| r.is_valid()) {
        match seen.get(&r.contact_lin) {
            Some(prev) if prev.grad_at_y != r.grad_at_y => conflicts += 1,
            Some(_) => {}
            None => {
                seen.insert(r.contact_lin, r);
            }
        }
    }
    let level = cusp.m - 1.0;
    let contact_values: Vec<f64> = seen.keys().map(|&y| u.get(y)).collect();
    let set = ContactSet {
        t_measure: seen.len() as f64 * cell,
        u_measure: vertices.len() as f64 * cell,
        jacobian_bound_observed: records.iter().filter_map(|r| r.jacobian_norm).fold(0.0, f64::max),
        threshold,
        level_violations: contact_values.iter().filter(|&&v| v > level).count(),
        max_contact_value: contact_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        conflicts,
        boundary_contacts: records.iter().filter(|r| r.boundary).count(),
        degenerate_contacts: records.iter().filter(|r| r.separation == 0.0).count(),
        records,
    };
    Ok(set)
}

/// Tolerances for the pointwise contact invariants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactTolerances {
    /// `C` in `|grad u(y) - grad phi(y - x)| <= C h^(1/2)`. Observed ratios on
    /// smooth super-solutions fall from about 3.3 to 1.9 between 129 and 513
    /// points per side.
    pub gradient: f64,
    /// Allowed negative part of `D^2 u(y) - D^2 phi(y - x)`, relative to
    /// `|D^2 phi(y - x)|`.
    pub hessian: f64,
    /// Vertex reconstruction error in cells.
    pub injectivity_cells: f64,
    /// `c` in the `c h^(d-1)` slack of the measure comparison.
    pub measure_slack: f64,
}

impl Default for ContactTolerances {
    fn default() -> Self {
        Self { gradient: 4.0, hessian: 0.25, injectivity_cells: 2.0, measure_slack: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContactInvariants {
    pub records: usize,
    /// Records past the separation floor, used for second-order checks.
    pub separated: usize,
    pub gradient_ratio: f64,
    pub hessian_margin: f64,
    pub injectivity_cells: f64,
    pub measure_lhs: f64,
    pub measure_rhs: f64,
    pub gradient_ok: bool,
    pub hessian_ok: bool,
    pub injectivity_ok: bool,
    pub measure_ok: bool,
}

impl ContactInvariants {
    pub fn all_ok(&self) -> bool {
        self.gradient_ok && self.hessian_ok && self.injectivity_ok && self.measure_ok
    }
}

/// Gradient matching, Hessian domination, vertex reconstruction and the
/// measure comparison `|U| <= C^d |T| + slack` over the valid records.
pub fn check_invariants(u: &GridFunction, set: &ContactSet, cusp: &CuspParams, tol: &ContactTolerances) -> Result<ContactInvariants> {
    let lat = u.lattice();
    let h = lat.spacing();
    let d = lat.dim();
    let floor = 3.0 * h;
    let mut out = ContactInvariants {
        records: 0,
        separated: 0,
        gradient_ratio: 0.0,
        hessian_margin: f64::INFINITY,
        injectivity_cells: 0.0,
        measure_lhs: set.u_measure,
        measure_rhs: 0.0,
        gradient_ok: true,
        hessian_ok: true,
        injectivity_ok: true,
        measure_ok: true,
    };
    for r in set.valid() {
        out.records += 1;
        let s = offset(lat, r);
        let y = lat.point_linear(r.contact_lin);
        let x = lat.point_linear(r.vertex_lin);
        let xh = cusp.vertex_from_gradient(&y, &r.grad_at_y);
        let miss = norm(&xh.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>()) / h;
        out.injectivity_cells = out.injectivity_cells.max(miss);
        if r.separation < floor {
            continue;
        }
        out.separated += 1;
        let gphi = cusp.gradient(&s);
        let gerr = norm(&r.grad_at_y.iter().zip(&gphi).map(|(a, b)| a - b).collect::<Vec<_>>());
        out.gradient_ratio = out.gradient_ratio.max(gerr / h.sqrt());
        let hphi = cusp.hessian(&s);
        let diff = u.hessian_unchecked(r.contact_lin) - &hphi;
        let diff = (&diff + diff.transpose()) * 0.5;
        let low = eigenvalues_sym(&diff)?[0];
        out.hessian_margin = out.hessian_margin.min(low / operator_norm(&hphi));
    }
    out.gradient_ok = out.gradient_ratio <= tol.gradient;
    out.hessian_ok = out.hessian_margin >= -tol.hessian;
    out.injectivity_ok = out.injectivity_cells <= tol.injectivity_cells;
    let c = set.jacobian_bound_observed.max(1.0);
    out.measure_rhs = c.powi(d as i32) * set.t_measure + tol.measure_slack * h.powi(d as i32 - 1);
    out.measure_ok = out.measure_lhs <= out.measure_rhs;
    Ok(out)
}
