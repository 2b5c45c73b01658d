//! Inf-convolution `v_eps(x) = min_y v(y) + |y - x|^2 / (2 eps)` over all
//! lattice nodes, computed exactly with per-axis lower envelopes of
//! parabolas, and the semi-concavity checks that go with it.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::{gfn, GridFunction, Lattice};

/// `w * delta^2`, shared by the envelope and its brute-force reference so
/// both round identically.
#[inline]
pub(crate) fn quad(w: f64, delta: i64) -> f64 {
    w * (delta * delta) as f64
}

/// Breakpoint slack, in nodes, below which a parabola is not popped.
const TIE_SLACK: f64 = 1e-6;

/// Lower envelope of `f[k] + w (k - x)^2` for `x = 0..n`. Non-finite
/// samples are skipped; if every sample is non-finite the output is `+inf`
/// with argmin `usize::MAX`. Ties go to the smaller `k`.
pub(crate) fn envelope_1d(f: &[f64], w: f64, out: &mut [f64], arg: &mut [usize], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    let key = |q: usize| f[q] + quad(w, q as i64);
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        if v.is_empty() {
            v.push(q);
            z.push(f64::NEG_INFINITY);
            continue;
        }
        loop {
            let p = *v.last().unwrap();
            let s = (key(q) - key(p)) / (2.0 * w * (q - p) as f64);
            // A parabola that only touches the envelope, or misses it by a
            // rounding error, can still tie at a node; keep it unless it is
            // clearly dominated.
            if s < *z.last().unwrap() - TIE_SLACK {
                v.pop();
                z.pop();
                if v.is_empty() {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        out.fill(f64::INFINITY);
        arg.fill(usize::MAX);
        return;
    }
    let mut k = 0;
    for x in 0..n {
        let xf = x as f64;
        while k + 1 < v.len() && z[k + 1] < xf {
            k += 1;
        }
        // The breakpoints are rounded, so settle exactly among every piece
        // whose interval comes within one node of x.
        let mut lo = k.saturating_sub(1);
        while lo > 0 && z[lo] >= xf - 1.0 {
            lo -= 1;
        }
        let mut hi = (k + 1).min(v.len() - 1);
        while hi + 1 < v.len() && z[hi + 1] <= xf + 1.0 {
            hi += 1;
        }
        let mut best = f64::INFINITY;
        let mut best_q = usize::MAX;
        for &q in &v[lo..=hi] {
            let val = f[q] + quad(w, q as i64 - x as i64);
            if val < best {
                best = val;
                best_q = q;
            }
        }
        out[x] = best;
        arg[x] = best_q;
    }
}

/// Separable minimum of `values(y) + w |y - x|^2_index` over the lattice,
/// processed from the last axis to the first so that ties resolve to the
/// lexicographically smallest multi-index. Returns values and the linear
/// index of the minimizer.
pub(crate) fn separable_min(lattice: &Lattice, values: &[f64], w: f64) -> (Vec<f64>, Vec<usize>) {
    let shape = lattice.shape();
    let strides = lattice.strides();
    let mut cur = values.to_vec();
    let mut src: Vec<usize> = (0..values.len()).collect();
    let (mut v, mut z) = (Vec::new(), Vec::new());
    for axis in (0..lattice.dim()).rev() {
        let n = shape[axis];
        let stride = strides[axis];
        let mut line = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut arg = vec![0usize; n];
        let mut line_src = vec![0usize; n];
        for start in 0..cur.len() {
            // a line starts wherever the axis coordinate is zero
            if (start / stride) % n != 0 {
                continue;
            }
            for k in 0..n {
                line[k] = cur[start + k * stride];
                line_src[k] = src[start + k * stride];
            }
            envelope_1d(&line, w, &mut out, &mut arg, &mut v, &mut z);
            for k in 0..n {
                cur[start + k * stride] = out[k];
                src[start + k * stride] = if arg[k] == usize::MAX { usize::MAX } else { line_src[arg[k]] };
            }
        }
    }
    (cur, src)
}

/// Squared Euclidean distance from every node to the nearest marked node,
/// in physical units. `+inf` when nothing is marked.
pub fn squared_distance_transform(lattice: &Lattice, marked: &[bool]) -> Vec<f64> {
    let seed: Vec<f64> = marked.iter().map(|&m| if m { 0.0 } else { f64::INFINITY }).collect();
    let (d, _) = separable_min(lattice, &seed, 1.0);
    let h2 = lattice.spacing() * lattice.spacing();
    d.into_iter().map(|v| v * h2).collect()
}

#[derive(Clone, Debug)]
pub struct InfConvResult {
    pub smoothed: GridFunction,
    /// Linear index of the minimizing node for every node.
    pub argmin: Vec<usize>,
    pub epsilon: f64,
    pub max_displacement: f64,
    /// `2 sqrt(2 M' eps)` with `M'` the clamp level, when one was applied.
    pub displacement_bound: Option<f64>,
}

impl InfConvResult {
    pub fn argmin_multi(&self, lin: usize) -> Vec<usize> {
        self.smoothed.lattice().multi(self.argmin[lin])
    }

    pub fn displacement(&self, lin: usize) -> f64 {
        let lat = self.smoothed.lattice();
        let a = lat.multi(lin);
        let b = lat.multi(self.argmin[lin]);
        let s: f64 = a.iter().zip(&b).map(|(&p, &q)| ((p as f64) - (q as f64)).powi(2)).sum();
        s.sqrt() * lat.spacing()
    }

    pub fn displacement_field(&self) -> Result<GridFunction> {
        let lat = self.smoothed.lattice().clone();
        let vals = (0..lat.len()).map(|i| self.displacement(i)).collect();
        GridFunction::new(lat, vals)
    }

    /// Writes `<stem>.gfn` (smoothed values) and `<stem>.disp.gfn`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        gfn::save_gfn(&self.smoothed, dir.join(format!("{stem}.gfn")))?;
        gfn::save_gfn(&self.displacement_field()?, dir.join(format!("{stem}.disp.gfn")))
    }
}

/// Exact discrete inf-convolution of `v` with parameter `epsilon`.
pub fn inf_convolve(v: &GridFunction, epsilon: f64) -> Result<InfConvResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParams(format!("epsilon must be positive, got {epsilon}")));
    }
    let lat = v.lattice();
    let h = lat.spacing();
    let w = h * h / (2.0 * epsilon);
    let (vals, argmin) = separable_min(lat, v.values(), w);
    let smoothed = GridFunction::new(lat.clone(), vals)?;
    let mut res = InfConvResult { smoothed, argmin, epsilon, max_displacement: 0.0, displacement_bound: None };
    res.max_displacement = (0..lat.len()).map(|i| res.displacement(i)).fold(0.0, f64::max);
    Ok(res)
}

/// `min(u, 2M)` followed by [`inf_convolve`], recording the displacement
/// bound `2 sqrt(4 M eps)`.
pub fn clamp_above_and_convolve(u: &GridFunction, m: f64, epsilon: f64) -> Result<InfConvResult> {
    if !(m > 0.0) {
        return Err(Error::InvalidParams(format!("M must be positive, got {m}")));
    }
    let clipped = u.map(|x| x.min(2.0 * m))?;
    let mut res = inf_convolve(&clipped, epsilon)?;
    res.displacement_bound = Some(2.0 * (2.0 * 2.0 * m * epsilon).sqrt());
    Ok(res)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SemiConcavity {
    pub pass: bool,
    /// Largest directional second difference found.
    pub worst: f64,
}

/// Checks every interior axis and diagonal second difference against
/// `bound + tol`.
pub fn semi_concavity_certificate(f: &GridFunction, bound: f64, tol: f64) -> SemiConcavity {
    let lat = f.lattice();
    let d = lat.dim();
    let h2 = lat.spacing() * lat.spacing();
    let st = lat.strides();
    let vals = f.values();
    let mut worst = f64::NEG_INFINITY;
    for lin in 0..lat.len() {
        if !lat.is_interior_linear(lin) {
            continue;
        }
        let c = vals[lin];
        for i in 0..d {
            let dd = (vals[lin + st[i]] - 2.0 * c + vals[lin - st[i]]) / h2;
            worst = worst.max(dd);
            for j in i + 1..d {
                for s in [st[i] + st[j], st[i].abs_diff(st[j])] {
                    let dd = (vals[lin + s] - 2.0 * c + vals[lin - s]) / (2.0 * h2);
                    worst = worst.max(dd);
                }
            }
        }
    }
    SemiConcavity { pass: worst <= bound + tol, worst }
}

#[derive(Clone, Debug)]
pub struct NestedReport {
    pub epsilons: Vec<f64>,
    /// `|{v_eps > M}|` for every epsilon, in the given order.
    pub measures: Vec<f64>,
    /// `|{min(u, 2M) > M}|`, the limit of the measures.
    pub target: f64,
    /// Every superlevel set contains the previous one node-wise.
    pub nested: bool,
    /// Every superlevel set sits inside `{u > M}`.
    pub contained: bool,
}

pub fn nested_level_sets(u: &GridFunction, epsilons: &[f64], m: f64) -> Result<NestedReport> {
    if epsilons.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::NotDescending);
    }
    let cell = u.lattice().cell_volume();
    let above_u: Vec<bool> = u.values().iter().map(|&x| x.min(2.0 * m) > m).collect();
    let target = above_u.iter().filter(|&&b| b).count() as f64 * cell;
    let mut measures = Vec::with_capacity(epsilons.len());
    let mut nested = true;
    let mut contained = true;
    let mut prev: Option<Vec<bool>> = None;
    for &eps in epsilons {
        let r = clamp_above_and_convolve(u, m, eps)?;
        let set: Vec<bool> = r.smoothed.values().iter().map(|&x| x > m).collect();
        if let Some(p) = &prev {
            nested &= p.iter().zip(&set).all(|(&a, &b)| !a || b);
        }
        contained &= set.iter().zip(&above_u).all(|(&a, &b)| !a || b);
        measures.push(set.iter().filter(|&&b| b).count() as f64 * cell);
        prev = Some(set);
    }
    Ok(NestedReport { epsilons: epsilons.to_vec(), measures, target, nested, contained })
}
