//! Certified test functions: the `|x|^-p` barrier and its scaled form,
//! analytic families, a monotone wide-stencil solver for the Pucci
//! Dirichlet problem, and low-gradient perturbations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::{GridFunction, Lattice, Mat, Region};
use crate::pucci::{self, EllipticityParams, OperatorValue};

/// Radial barrier `|x|^-p` with closed-form derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierOracle {
    pub p: f64,
}

impl BarrierOracle {
    pub fn value(&self, x: &[f64]) -> f64 {
        norm(x).powf(-self.p)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let r = norm(x);
        let c = -self.p * r.powf(-self.p - 2.0);
        x.iter().map(|v| c * v).collect()
    }

    /// `p |x|^(-p-2) ((p + 2) x^ x^T - I)`.
    pub fn hessian(&self, x: &[f64]) -> Mat {
        let d = x.len();
        let r = norm(x);
        let c = self.p * r.powf(-self.p - 2.0);
        Mat::from_fn(d, d, |i, j| {
            c * ((self.p + 2.0) * x[i] * x[j] / (r * r) - if i == j { 1.0 } else { 0.0 })
        })
    }

    /// `p |x|^(-p-2) (lambda (p+1) - Lambda (d-1) - Lambda |x|)`.
    pub fn m_minus(&self, r: f64, d: usize, params: &EllipticityParams) -> f64 {
        let p = self.p;
        p * r.powf(-p - 2.0) * (params.lambda * (p + 1.0) - params.big_lambda * (d as f64 - 1.0) - params.big_lambda * r)
    }

    /// The lower bound `p |x|^(-p-2)` the barrier is meant to clear.
    pub fn bound(&self, r: f64) -> f64 {
        self.p * r.powf(-self.p - 2.0)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierParams {
    pub p: f64,
    /// Amplitude `M` of the scaled barrier.
    pub m: f64,
    pub params: EllipticityParams,
}

impl BarrierParams {
    /// `lambda (p + 1) - Lambda (d + 1) >= 1`.
    pub fn condition_margin(&self, d: usize) -> f64 {
        self.params.lambda * (self.p + 1.0) - self.params.big_lambda * (d as f64 + 1.0) - 1.0
    }

    pub fn check(&self, d: usize) -> Result<()> {
        if !(self.p > 0.0) {
            return Err(Error::InvalidParams(format!("barrier exponent must be positive, got {}", self.p)));
        }
        if self.condition_margin(d) < 0.0 {
            return Err(Error::InvalidParams(format!(
                "lambda (p+1) - Lambda (d+1) = {} < 1",
                self.condition_margin(d) + 1.0
            )));
        }
        Ok(())
    }
}

/// A sampled barrier. Nodes closer than `core_radius` to the origin hold the
/// capped value `core_radius^-p` and are never used as evaluation points.
#[derive(Clone, Debug)]
pub struct Barrier {
    pub function: GridFunction,
    pub core_radius: f64,
    pub oracle: BarrierOracle,
}

impl Barrier {
    pub fn is_evaluated(&self, lin: usize) -> bool {
        norm(&self.function.lattice().point_linear(lin)) >= self.core_radius
    }
}

pub fn barrier(bp: &BarrierParams, lattice: &Lattice) -> Result<Barrier> {
    bp.check(lattice.dim())?;
    let core = 4.0 * lattice.spacing();
    let oracle = BarrierOracle { p: bp.p };
    let function = GridFunction::from_fn(lattice, |x| norm(x).max(core).powf(-bp.p))?;
    Ok(Barrier { function, core_radius: core, oracle })
}

/// `B(x) = M (|x|^-p - 2^-p) / (2 4^p)` with the certified conditions.
#[derive(Clone, Debug)]
pub struct ScaledBarrier {
    pub function: GridFunction,
    pub m: f64,
    pub p: f64,
    /// Smallest `M` meeting the conditions at the nodes, before the 1.1
    /// safety factor.
    pub m_required: f64,
    pub min_on_b1: f64,
    pub min_gradient_on_ring: f64,
    pub min_operator_on_ring: f64,
    pub max_on_inner_sphere: f64,
}

fn scaled_profile(p: f64, r: f64) -> f64 {
    (r.powf(-p) - 2f64.powf(-p)) / (2.0 * 4f64.powf(p))
}

fn ring() -> (f64, f64) {
    (0.25, 2.0)
}

/// Picks the smallest `M` for which `B >= 1` on `B_1`, `|grad B| >= gamma`
/// and `M^-(D^2 B, grad B) >= 2` on the ring `1/4 <= |x| <= 2`, multiplies
/// it by 1.1 and re-verifies everything with lattice derivatives.
pub fn scaled_barrier(p: f64, params: &EllipticityParams, lattice: &Lattice) -> Result<ScaledBarrier> {
    let d = lattice.dim();
    let bp = BarrierParams { p, m: 1.0, params: *params };
    bp.check(d)?;
    let oracle = BarrierOracle { p };
    let scale = 1.0 / (2.0 * 4f64.powf(p));
    let (r_in, r_out) = ring();
    let mut need_value: f64 = 0.0;
    let mut need_grad: f64 = 0.0;
    let mut need_op: f64 = 0.0;
    for lin in 0..lattice.len() {
        let x = lattice.point_linear(lin);
        let r = norm(&x);
        if r >= r_in && r <= 1.0 {
            need_value = need_value.max(1.0 / scaled_profile(p, r));
        }
        if r >= r_in && r <= r_out {
            let g = norm(&oracle.gradient(&x)) * scale;
            need_grad = need_grad.max(params.gamma / g);
            need_op = need_op.max(2.0 / (scale * oracle.m_minus(r, d, &params.with_gamma(0.0))));
        }
    }
    let m_required = need_value.max(need_grad).max(need_op).max(1.0);
    scaled_barrier_with(p, 1.1 * m_required, m_required, params, lattice)
}

/// Certifies a given amplitude `m`.
pub fn scaled_barrier_with(p: f64, m: f64, m_required: f64, params: &EllipticityParams, lattice: &Lattice) -> Result<ScaledBarrier> {
    let (r_in, r_out) = ring();
    lattice.check_region_interior(&Region::centered_ball(lattice.dim(), r_out))?;
    let core = 4.0 * lattice.spacing();
    let function = GridFunction::from_fn(lattice, |x| m * scaled_profile(p, norm(x).max(core)))?;
    let mut min_b1 = f64::INFINITY;
    let mut min_grad = f64::INFINITY;
    let mut min_op = f64::INFINITY;
    let mut max_inner = f64::NEG_INFINITY;
    let h = lattice.spacing();
    for lin in 0..lattice.len() {
        let x = lattice.point_linear(lin);
        let r = norm(&x);
        if r <= 1.0 && r >= core {
            min_b1 = min_b1.min(function.get(lin));
        }
        if (r - r_in).abs() <= 0.5 * h {
            max_inner = max_inner.max(function.get(lin));
        }
        if r >= r_in && r <= r_out {
            let (lo, _) = pucci::lattice_operators(&function, lin, params)?;
            let g = norm(&function.gradient_unchecked(lin));
            min_grad = min_grad.min(g);
            min_op = min_op.min(match lo {
                OperatorValue::Finite(v) => v,
                _ => f64::NEG_INFINITY,
            });
        }
    }
    let out = ScaledBarrier {
        function,
        m,
        p,
        m_required,
        min_on_b1: min_b1,
        min_gradient_on_ring: min_grad,
        min_operator_on_ring: min_op,
        max_on_inner_sphere: max_inner,
    };
    if out.min_on_b1 < 1.0 {
        return Err(Error::BarrierCondition(format!("min over B_1 is {} < 1", out.min_on_b1)));
    }
    if out.min_gradient_on_ring < params.gamma {
        return Err(Error::BarrierCondition(format!("|grad B| reaches {} < gamma", out.min_gradient_on_ring)));
    }
    if out.min_operator_on_ring < 2.0 {
        return Err(Error::BarrierCondition(format!("M^- reaches {} < 2 on the ring", out.min_operator_on_ring)));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveConfig {
    /// Relaxation step; the largest admissible one when `None`.
    pub dt: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
    /// Include `-Lambda |grad u|` in the discrete operator.
    pub gradient_term: bool,
    pub relaxation: Relaxation,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { dt: None, max_iters: 400_000, tol: 1e-6, gradient_term: true, relaxation: Relaxation::Jacobi }
    }
}

impl SolveConfig {
    /// Policy iteration with Krylov inner solves.
    pub fn fast() -> Self {
        Self { relaxation: Relaxation::Howard, max_iters: 50_000, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Relaxation {
    /// Explicit step `u <- u + dt (M^-_h u - f)`.
    Jacobi,
    /// Policy iteration: freeze the minimizing frame, curvature signs and
    /// upwind directions, solve the linear system, repeat.
    Howard,
}

/// `h^2 / (2 Lambda d |directions|)` with `d^2` directions (axes and
/// face diagonals).
pub fn cfl_bound(lattice: &Lattice, params: &EllipticityParams) -> f64 {
    let d = lattice.dim() as f64;
    let h = lattice.spacing();
    h * h / (2.0 * params.big_lambda * d * d * d)
}

/// Wide-stencil monotone discretization of `M^-` with `gamma = 0`: the
/// minimum over orthogonal frames built from axes and face diagonals, minus
/// an upwind `Lambda |grad u|`.
pub struct Scheme {
    frames: Vec<Vec<(usize, f64)>>,
    strides: Vec<usize>,
    lambda: f64,
    big_lambda: f64,
    inv_h: f64,
    gradient_term: bool,
}

impl Scheme {
    pub fn new(lattice: &Lattice, params: &EllipticityParams, gradient_term: bool) -> Self {
        let d = lattice.dim();
        let st = lattice.strides().to_vec();
        let h2 = lattice.spacing() * lattice.spacing();
        let axis: Vec<(usize, f64)> = st.iter().map(|&s| (s, 1.0 / h2)).collect();
        let mut frames = vec![axis];
        for i in 0..d {
            for j in i + 1..d {
                let mut f = vec![(st[i] + st[j], 0.5 / h2), (st[i].abs_diff(st[j]), 0.5 / h2)];
                // the difference direction e_i - e_j maps to a signed offset;
                // symmetric differences only need its magnitude
                f.extend((0..d).filter(|&k| k != i && k != j).map(|k| (st[k], 1.0 / h2)));
                frames.push(f);
            }
        }
        Self {
            frames,
            strides: st,
            lambda: params.lambda,
            big_lambda: params.big_lambda,
            inv_h: 1.0 / lattice.spacing(),
            gradient_term,
        }
    }

    /// Discrete operator at an interior node.
    #[inline]
    pub fn apply(&self, u: &[f64], lin: usize) -> f64 {
        let c = u[lin];
        let mut best = f64::INFINITY;
        for frame in &self.frames {
            let mut s = 0.0;
            for &(off, w) in frame {
                let dd = (u[lin + off] + u[lin - off] - 2.0 * c) * w;
                s += if dd > 0.0 { self.lambda * dd } else { self.big_lambda * dd };
            }
            best = best.min(s);
        }
        if self.gradient_term {
            let mut g2 = 0.0;
            for &st in &self.strides {
                let m = (c - u[lin - st]).max(c - u[lin + st]).max(0.0) * self.inv_h;
                g2 += m * m;
            }
            best -= self.big_lambda * g2.sqrt();
        }
        best
    }

    /// Linear operator active at `u`: the minimizing frame with the
    /// matching curvature coefficients and the upwind gradient direction,
    /// as `(neighbour, weight)` pairs of `sum c_j (u_j - u_lin)`.
    fn policy(&self, u: &[f64], lin: usize, out: &mut Vec<(usize, f64)>) {
        let c = u[lin];
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for (k, frame) in self.frames.iter().enumerate() {
            let mut s = 0.0;
            for &(off, w) in frame {
                let dd = (u[lin + off] + u[lin - off] - 2.0 * c) * w;
                s += if dd > 0.0 { self.lambda * dd } else { self.big_lambda * dd };
            }
            if s < best {
                best = s;
                arg = k;
            }
        }
        for &(off, w) in &self.frames[arg] {
            let dd = u[lin + off] + u[lin - off] - 2.0 * c;
            let g = if dd > 0.0 { self.lambda } else { self.big_lambda };
            out.push((lin + off, g * w));
            out.push((lin - off, g * w));
        }
        if self.gradient_term {
            let mut m = [0.0; 8];
            let mut nb = [0usize; 8];
            let mut g2 = 0.0;
            for (a, &st) in self.strides.iter().enumerate() {
                let (dm, dp) = (c - u[lin - st], c - u[lin + st]);
                nb[a] = if dm >= dp { lin - st } else { lin + st };
                m[a] = dm.max(dp).max(0.0) * self.inv_h;
                g2 += m[a] * m[a];
            }
            let g = g2.sqrt();
            if g > 0.0 {
                for a in 0..self.strides.len() {
                    if m[a] > 0.0 {
                        out.push((nb[a], self.big_lambda * m[a] / g * self.inv_h));
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: GridFunction,
    /// Final max residual of the discrete equation on free nodes.
    pub residual: f64,
    /// Iterations spent on the finest level.
    pub iterations: usize,
    pub total_iterations: usize,
    pub history: Vec<f64>,
}

/// Jacobi relaxation `u <- u + dt (M^-_h u - f)` on free nodes (interior
/// and not fixed), with `u = g` elsewhere, run coarse-to-fine over the
/// lattice hierarchy obtained by halving while extents stay odd.
pub fn solve_pucci(
    f: &GridFunction,
    g: &GridFunction,
    params: &EllipticityParams,
    cfg: &SolveConfig,
    fixed: Option<&[bool]>,
) -> Result<Solution> {
    let lat = f.lattice();
    if g.lattice() != lat {
        return Err(Error::LatticeMismatch("rhs and boundary data differ".into()));
    }
    if let Some(m) = fixed {
        if m.len() != lat.len() {
            return Err(Error::LatticeMismatch("fixed mask has the wrong length".into()));
        }
    }
    let bound = cfl_bound(lat, params);
    if let Some(dt) = cfg.dt {
        if !(dt > 0.0 && dt <= bound * (1.0 + 1e-12)) {
            return Err(Error::InvalidParams(format!("dt = {dt} violates the bound {bound}")));
        }
    }
    // Build the hierarchy, finest first.
    let mut lats = vec![lat.clone()];
    let mut fixes = vec![fixed.map(|m| m.to_vec()).unwrap_or_else(|| vec![false; lat.len()])];
    let mut fs = vec![f.values().to_vec()];
    let mut gs = vec![g.values().to_vec()];
    loop {
        let last = lats.last().unwrap();
        if last.shape().iter().any(|&n| n % 2 == 0 || (n + 1) / 2 < 5) {
            break;
        }
        let shape: Vec<usize> = last.shape().iter().map(|&n| (n + 1) / 2).collect();
        let coarse = Lattice::new(shape, last.origin().to_vec(), 2.0 * last.spacing())?;
        let inject = |v: &[f64]| -> Vec<f64> { (0..coarse.len()).map(|c| v[last.linear(&coarse.multi(c).iter().map(|i| 2 * i).collect::<Vec<_>>())]).collect() };
        let fc = inject(fs.last().unwrap());
        let gc = inject(gs.last().unwrap());
        let fine_fix = fixes.last().unwrap();
        let xc: Vec<bool> = (0..coarse.len()).map(|c| fine_fix[last.linear(&coarse.multi(c).iter().map(|i| 2 * i).collect::<Vec<_>>())]).collect();
        fs.push(fc);
        gs.push(gc);
        fixes.push(xc);
        lats.push(coarse);
    }
    let mut u: Vec<f64> = gs.last().unwrap().clone();
    let mut total = 0;
    let mut history = Vec::new();
    let mut result = None;
    for level in (0..lats.len()).rev() {
        let l = &lats[level];
        if level + 1 < lats.len() {
            u = prolong(&lats[level + 1], l, &u);
        }
        for n in 0..l.len() {
            if fixes[level][n] || !l.is_interior_linear(n) {
                u[n] = gs[level][n];
            }
        }
        let free: Vec<usize> = (0..l.len()).filter(|&n| l.is_interior_linear(n) && !fixes[level][n]).collect();
        let dt = cfg.dt.map(|dt| dt * 4f64.powi(level as i32)).unwrap_or_else(|| cfl_bound(l, params));
        let scheme = Scheme::new(l, params, cfg.gradient_term);
        let (iters, res, hist) = match cfg.relaxation {
            Relaxation::Jacobi => relax(&scheme, &mut u, &fs[level], &free, dt, cfg)?,
            Relaxation::Howard => howard(&scheme, &mut u, &fs[level], &free, cfg)?,
        };
        total += iters;
        if level == 0 {
            history = hist;
            result = Some((iters, res));
        }
    }
    let (iterations, residual) = result.unwrap();
    Ok(Solution { u: GridFunction::new(lat.clone(), u)?, residual, iterations, total_iterations: total, history })
}

/// Single-level solve started from `start`; for re-solves after a small
/// change of data, where the coarse hierarchy would only repeat work.
pub fn solve_pucci_warm(
    f: &GridFunction,
    g: &GridFunction,
    params: &EllipticityParams,
    cfg: &SolveConfig,
    fixed: Option<&[bool]>,
    start: &GridFunction,
) -> Result<Solution> {
    let lat = f.lattice();
    if g.lattice() != lat || start.lattice() != lat {
        return Err(Error::LatticeMismatch("rhs, boundary data and start differ".into()));
    }
    let fix = fixed.unwrap_or(&[]);
    if fixed.is_some() && fix.len() != lat.len() {
        return Err(Error::LatticeMismatch("fixed mask has the wrong length".into()));
    }
    let mut u = start.values().to_vec();
    let mut free = Vec::new();
    for n in 0..lat.len() {
        if lat.is_interior_linear(n) && !fix.get(n).copied().unwrap_or(false) {
            free.push(n);
        } else {
            u[n] = g.values()[n];
        }
    }
    let scheme = Scheme::new(lat, params, cfg.gradient_term);
    let (iterations, residual, history) = match cfg.relaxation {
        Relaxation::Jacobi => relax(&scheme, &mut u, f.values(), &free, cfg.dt.unwrap_or_else(|| cfl_bound(lat, params)), cfg)?,
        Relaxation::Howard => howard(&scheme, &mut u, f.values(), &free, cfg)?,
    };
    Ok(Solution { u: GridFunction::new(lat.clone(), u)?, residual, iterations, total_iterations: iterations, history })
}

fn relax(scheme: &Scheme, u: &mut [f64], f: &[f64], free: &[usize], dt: f64, cfg: &SolveConfig) -> Result<(usize, f64, Vec<f64>)> {
    let mut res = vec![0.0; free.len()];
    let mut history = Vec::new();
    for it in 0..=cfg.max_iters {
        let mut rmax: f64 = 0.0;
        for (k, &n) in free.iter().enumerate() {
            let r = scheme.apply(u, n) - f[n];
            res[k] = r;
            rmax = rmax.max(r.abs());
        }
        if it % 1000 == 0 {
            history.push(rmax);
        }
        if rmax <= cfg.tol || free.is_empty() {
            history.push(rmax);
            return Ok((it, rmax, history));
        }
        if it == cfg.max_iters {
            history.push(rmax);
            return Err(Error::NonConvergence { iterations: it, last: rmax, history });
        }
        for (k, &n) in free.iter().enumerate() {
            u[n] += dt * res[k];
        }
    }
    unreachable!()
}

/// Policy iteration: freeze the active linear operator at every free node,
/// solve the linear system down to a tenth of the current nonlinear
/// residual, and repeat. `max_iters` caps the total number of inner
/// matrix-vector products.
fn howard(scheme: &Scheme, u: &mut [f64], f: &[f64], free: &[usize], cfg: &SolveConfig) -> Result<(usize, f64, Vec<f64>)> {
    let residual = |u: &[f64]| free.iter().map(|&n| (scheme.apply(u, n) - f[n]).abs()).fold(0.0, f64::max);
    let mut slot = vec![usize::MAX; u.len()];
    for (k, &n) in free.iter().enumerate() {
        slot[n] = k;
    }
    let mut history = Vec::new();
    let mut work = 0;
    let mut entries: Vec<(usize, f64)> = Vec::new();
    loop {
        let rmax = residual(u);
        history.push(rmax);
        if rmax <= cfg.tol || free.is_empty() {
            return Ok((work, rmax, history));
        }
        if work >= cfg.max_iters {
            return Err(Error::NonConvergence { iterations: work, last: rmax, history });
        }
        // Rows scaled by the diagonal: x_k - sum a_kj x_j = b_k.
        let mut sys = Sparse { start: Vec::with_capacity(free.len() + 1), cols: Vec::new(), vals: Vec::new(), b: Vec::with_capacity(free.len()), diag: Vec::with_capacity(free.len()) };
        for &n in free {
            entries.clear();
            scheme.policy(u, n, &mut entries);
            let diag: f64 = entries.iter().map(|e| e.1).sum();
            let mut rhs = -f[n];
            sys.start.push(sys.cols.len());
            for &(j, c) in &entries {
                if slot[j] == usize::MAX {
                    rhs += c * u[j];
                } else {
                    sys.cols.push(slot[j]);
                    sys.vals.push(c / diag);
                }
            }
            sys.b.push(rhs / diag);
            sys.diag.push(diag);
        }
        sys.start.push(sys.cols.len());
        let mut x: Vec<f64> = free.iter().map(|&n| u[n]).collect();
        let target = (0.1 * rmax).max(0.5 * cfg.tol);
        let budget = cfg.max_iters.saturating_sub(work).max(1);
        work += sys.solve(&mut x, target, budget);
        for (k, &n) in free.iter().enumerate() {
            u[n] = x[k];
        }
    }
}

struct Sparse {
    start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    b: Vec<f64>,
    diag: Vec<f64>,
}

impl Sparse {
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            let mut s = x[k];
            for e in self.start[k]..self.start[k + 1] {
                s -= self.vals[e] * x[self.cols[e]];
            }
            *o = s;
        }
    }

    /// Largest unscaled residual of the frozen equation.
    fn residual_norm(&self, r: &[f64]) -> f64 {
        r.iter().zip(&self.diag).map(|(a, d)| (a * d).abs()).fold(0.0, f64::max)
    }

    /// BiCGSTAB, restarted from the current iterate on breakdown and
    /// finished with Gauss-Seidel sweeps if it stalls. Returns the number
    /// of matrix-vector products spent.
    fn solve(&self, x: &mut [f64], target: f64, budget: usize) -> usize {
        let n = x.len();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let mut work = 0;
        let mut r = vec![0.0; n];
        let (mut p, mut v, mut s, mut t) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut restarts = 0;
        'restart: while work < budget && restarts < 20 {
            self.apply(x, &mut r);
            work += 1;
            for k in 0..n {
                r[k] = self.b[k] - r[k];
            }
            if self.residual_norm(&r) <= target {
                return work;
            }
            let rhat = r.clone();
            let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
            p.iter_mut().for_each(|z| *z = 0.0);
            v.iter_mut().for_each(|z| *z = 0.0);
            while work < budget {
                let rho_new = dot(&rhat, &r);
                if rho_new.abs() < 1e-300 || omega == 0.0 {
                    restarts += 1;
                    continue 'restart;
                }
                let beta = rho_new / rho * alpha / omega;
                rho = rho_new;
                for k in 0..n {
                    p[k] = r[k] + beta * (p[k] - omega * v[k]);
                }
                self.apply(&p, &mut v);
                alpha = rho / dot(&rhat, &v);
                for k in 0..n {
                    s[k] = r[k] - alpha * v[k];
                }
                if self.residual_norm(&s) <= target {
                    for k in 0..n {
                        x[k] += alpha * p[k];
                    }
                    return work + 1;
                }
                self.apply(&s, &mut t);
                work += 2;
                let tt = dot(&t, &t);
                omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
                for k in 0..n {
                    x[k] += alpha * p[k] + omega * s[k];
                    r[k] = s[k] - omega * t[k];
                }
                if !alpha.is_finite() || !omega.is_finite() {
                    break 'restart;
                }
                if self.residual_norm(&r) <= target {
                    return work;
                }
            }
        }
        // Gauss-Seidel always converges on these diagonally dominant rows.
        if x.iter().any(|v| !v.is_finite()) {
            x.iter_mut().for_each(|v| *v = 0.0);
        }
        while work < budget {
            let mut worst: f64 = 0.0;
            for k in 0..n {
                let mut s = self.b[k];
                for e in self.start[k]..self.start[k + 1] {
                    s += self.vals[e] * x[self.cols[e]];
                }
                worst = worst.max(((s - x[k]) * self.diag[k]).abs());
                x[k] = s;
            }
            work += 1;
            if worst <= target {
                break;
            }
        }
        work
    }
}

/// Multilinear interpolation from the coarse lattice onto the fine one.
fn prolong(coarse: &Lattice, fine: &Lattice, uc: &[f64]) -> Vec<f64> {
    let d = fine.dim();
    let mut out = vec![0.0; fine.len()];
    for (n, o) in out.iter_mut().enumerate() {
        let idx = fine.multi(n);
        let odd: Vec<usize> = (0..d).filter(|&a| idx[a] % 2 == 1).collect();
        let mut acc = 0.0;
        for mask in 0..(1usize << odd.len()) {
            let mut c: Vec<usize> = idx.iter().map(|i| i / 2).collect();
            for (b, &a) in odd.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    c[a] += 1;
                }
            }
            acc += uc[coarse.linear(&c)];
        }
        *o = acc / (1usize << odd.len()) as f64;
    }
    out
}

/// Analytic members of the corpus.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// `A exp(k (x.nu - s))`.
    Ridge { amplitude: f64, k: f64, normal: Vec<f64>, shift: f64 },
    /// Pointwise minimum of two ridges.
    MinRidges(Box<Family>, Box<Family>),
    /// `A exp(-k |x - c|)`.
    RadialExp { amplitude: f64, k: f64, center: Vec<f64> },
    /// `c0 + b.x + a (x1^2 - x2^2) + b2 x1 x2 + c (x1^3 - 3 x1 x2^2)`.
    Harmonic { c0: f64, linear: Vec<f64>, quad: f64, cross: f64, cubic: f64 },
    Affine { c0: f64, slope: Vec<f64> },
    Constant(f64),
    /// `base + A exp(-|x - c|^2 / (2 s^2))`; a narrow positive spike breaks
    /// the sub-solution inequality, a negative one the super-solution one.
    Spike { base: Box<Family>, amplitude: f64, width: f64, center: Vec<f64> },
    /// `M (|x|^-p - 2^-p) / (2 4^p)` with the core capped at `4h`.
    ScaledBarrier { m: f64, p: f64 },
}

impl Family {
    pub fn eval(&self, x: &[f64], h: f64) -> f64 {
        match self {
            Family::Ridge { amplitude, k, normal, shift } => {
                let t: f64 = x.iter().zip(normal).map(|(a, b)| a * b).sum();
                amplitude * (k * (t - shift)).exp()
            }
            Family::MinRidges(a, b) => a.eval(x, h).min(b.eval(x, h)),
            Family::RadialExp { amplitude, k, center } => {
                let r = norm(&x.iter().zip(center).map(|(a, b)| a - b).collect::<Vec<_>>());
                amplitude * (-k * r).exp()
            }
            Family::Harmonic { c0, linear, quad, cross, cubic } => {
                let (x1, x2) = (x[0], x.get(1).copied().unwrap_or(0.0));
                c0 + x.iter().zip(linear).map(|(a, b)| a * b).sum::<f64>()
                    + quad * (x1 * x1 - x2 * x2)
                    + cross * x1 * x2
                    + cubic * (x1 * x1 * x1 - 3.0 * x1 * x2 * x2)
            }
            Family::Affine { c0, slope } => c0 + x.iter().zip(slope).map(|(a, b)| a * b).sum::<f64>(),
            Family::Constant(c) => *c,
            Family::Spike { base, amplitude, width, center } => {
                let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                base.eval(x, h) + amplitude * (-r2 / (2.0 * width * width)).exp()
            }
            Family::ScaledBarrier { m, p } => m * scaled_profile(*p, norm(x).max(4.0 * h)),
        }
    }

    pub fn sample(&self, lattice: &Lattice) -> Result<GridFunction> {
        let h = lattice.spacing();
        GridFunction::from_fn(lattice, |x| self.eval(x, h))
    }
}

/// Hex SHA-256 of the exact value bits and lattice geometry.
pub fn value_hash(u: &GridFunction) -> String {
    let mut hasher = Sha256::new();
    let lat = u.lattice();
    for &n in lat.shape() {
        hasher.update((n as u64).to_le_bytes());
    }
    for &o in lat.origin() {
        hasher.update(o.to_bits().to_le_bytes());
    }
    hasher.update(lat.spacing().to_bits().to_le_bytes());
    for v in u.values() {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug)]
pub struct Perturbed {
    pub function: GridFunction,
    pub eta: f64,
    pub centers: Vec<Vec<f64>>,
    pub radius: f64,
}

/// Adds seeded bumps where `|grad u| < gamma / 2` inside `region`, scaled
/// by the largest `eta <= budget` (found by bisection) for which the
/// hypothesis checks at level `c0` still pass. Falls back to `eta = 0`.
pub fn perturb_low_gradient(
    u: &GridFunction,
    params: &EllipticityParams,
    c0: f64,
    region: &Region,
    two_sided: bool,
    budget: f64,
    seed: u64,
) -> Result<Perturbed> {
    let lat = u.lattice();
    lat.check_region_interior(region)?;
    let tol = 1e-9;
    let check = |v: &GridFunction| -> Result<bool> {
        Ok(if two_sided {
            pucci::check_two_sided(v, c0, params, region, tol)?.pass
        } else {
            pucci::check_supersolution(v, c0, params, region, tol)?.pass
        })
    };
    let unchanged = Perturbed { function: u.clone(), eta: 0.0, centers: Vec::new(), radius: 0.0 };
    if params.gamma <= 0.0 {
        return Ok(unchanged);
    }
    let low: Vec<usize> = lat
        .nodes_in(region)
        .into_iter()
        .filter(|&n| norm(&u.gradient_unchecked(n)) < 0.5 * params.gamma)
        .collect();
    if low.is_empty() {
        return Ok(unchanged);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = low.len().min(3);
    let centers: Vec<Vec<f64>> = (0..count).map(|_| lat.point_linear(low[rng.gen_range(0..low.len())])).collect();
    let radius = 8.0 * lat.spacing();
    let bump = GridFunction::from_fn(lat, |x| {
        centers
            .iter()
            .map(|c| {
                let s2: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (radius * radius);
                if s2 < 1.0 { (1.0 - s2).powi(4) } else { 0.0 }
            })
            .sum()
    })?;
    let with = |eta: f64| u.zip_with(&bump, |a, b| a + eta * b);
    let mut best = 0.0;
    let full = with(budget)?;
    if check(&full)? {
        best = budget;
    } else {
        let (mut lo, mut hi) = (0.0, budget);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if check(&with(mid)?)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = lo.max(best);
    }
    if best == 0.0 {
        return Ok(unchanged);
    }
    Ok(Perturbed { function: with(best)?, eta: best, centers, radius })
}
