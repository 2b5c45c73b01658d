//! Cutoff extremal operators, super/sub-solution certification on grid
//! functions, and the affine rescaling `v(x) = K u(x0 + r x)`.

use crate::error::{Error, Result};
use crate::lattice::{eigenvalues_sym, GridFunction, Lattice, Mat, Region};

/// Ellipticity constants `0 < lambda <= big_lambda` and the gradient
/// threshold `gamma >= 0` below which the operators carry no information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityParams {
    pub lambda: f64,
    pub big_lambda: f64,
    pub gamma: f64,
}

impl EllipticityParams {
    pub fn new(lambda: f64, big_lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "need 0 < lambda <= Lambda, got lambda={lambda}, Lambda={big_lambda}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!("gamma must be >= 0, got {gamma}")));
        }
        Ok(Self { lambda, big_lambda, gamma })
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    /// Parameters seen by `v(x) = K u(x0 + r x)`: same ellipticity, threshold
    /// `r K gamma`.
    pub fn scaled(self, r: f64, k: f64) -> Self {
        Self { gamma: r * k * self.gamma, ..self }
    }
}

/// Operator value with the two sentinels produced below the threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorValue {
    Finite(f64),
    PlusInfinity,
    MinusInfinity,
}

impl OperatorValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            OperatorValue::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// `self <= bound` with the sentinels ordered as extended reals.
    pub fn le(self, bound: f64) -> bool {
        match self {
            OperatorValue::Finite(v) => v <= bound,
            OperatorValue::MinusInfinity => true,
            OperatorValue::PlusInfinity => false,
        }
    }

    pub fn ge(self, bound: f64) -> bool {
        match self {
            OperatorValue::Finite(v) => v >= bound,
            OperatorValue::MinusInfinity => false,
            OperatorValue::PlusInfinity => true,
        }
    }
}

/// Sums of positive parts and of negative parts (as a non-negative number)
/// of the eigenvalues, accumulated in ascending magnitude so that `X` and
/// `-X` produce bit-identical swapped sums.
fn split_trace(eigs: &[f64]) -> (f64, f64) {
    let mut sorted = eigs.to_vec();
    sorted.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut pos = 0.0;
    let mut neg = 0.0;
    for e in sorted {
        if e > 0.0 {
            pos += e;
        } else {
            neg -= e;
        }
    }
    (pos, neg)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn m_plus_from_parts(pos: f64, neg: f64, grad_norm: f64, p: &EllipticityParams) -> OperatorValue {
    if grad_norm >= p.gamma {
        OperatorValue::Finite((p.big_lambda * pos - p.lambda * neg) + p.big_lambda * grad_norm)
    } else {
        OperatorValue::PlusInfinity
    }
}

pub(crate) fn m_minus_from_parts(pos: f64, neg: f64, grad_norm: f64, p: &EllipticityParams) -> OperatorValue {
    if grad_norm >= p.gamma {
        OperatorValue::Finite((p.lambda * pos - p.big_lambda * neg) - p.big_lambda * grad_norm)
    } else {
        OperatorValue::MinusInfinity
    }
}

/// `Lambda tr X^+ - lambda tr X^- + Lambda |p|` when `|p| >= gamma`, `+inf`
/// otherwise.
pub fn m_plus(hess: &Mat, grad: &[f64], p: &EllipticityParams) -> Result<OperatorValue> {
    let (pos, neg) = split_trace(&eigenvalues_sym(hess)?);
    Ok(m_plus_from_parts(pos, neg, norm(grad), p))
}

/// `lambda tr X^+ - Lambda tr X^- - Lambda |p|` when `|p| >= gamma`, `-inf`
/// otherwise.
pub fn m_minus(hess: &Mat, grad: &[f64], p: &EllipticityParams) -> Result<OperatorValue> {
    let (pos, neg) = split_trace(&eigenvalues_sym(hess)?);
    Ok(m_minus_from_parts(pos, neg, norm(grad), p))
}

/// `(M^-, M^+)` on lattice derivatives at an interior node.
pub fn lattice_operators(u: &GridFunction, lin: usize, p: &EllipticityParams) -> Result<(OperatorValue, OperatorValue)> {
    if !u.lattice().is_interior_linear(lin) {
        return Err(Error::InteriorRequired(u.lattice().multi(lin)));
    }
    let g = u.gradient_unchecked(lin);
    let hs = u.hessian_unchecked(lin);
    let (pos, neg) = split_trace(&eigenvalues_sym(&hs)?);
    let gn = norm(&g);
    Ok((m_minus_from_parts(pos, neg, gn, p), m_plus_from_parts(pos, neg, gn, p)))
}

/// Guard band around the threshold inside which discrete gradients are
/// too ambiguous to decide whether the equation applies.
pub fn guard_band(lattice: &Lattice, p: &EllipticityParams) -> f64 {
    if p.gamma > 0.0 {
        (10.0 * lattice.spacing()).max(1e-8)
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport {
    pub checked_nodes: usize,
    /// Nodes where the equation is enforced (`|grad u| >= gamma + band`).
    pub active_nodes: usize,
    /// Nodes with `gamma <= |grad u| < gamma + band`, left unconstrained.
    pub band_nodes: usize,
    pub max_super_residual: f64,
    pub max_sub_residual: f64,
    pub level: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl HypothesisReport {
    pub const CSV_HEADER: &'static str = "nodes,active,max_super_residual,max_sub_residual,pass,tol";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e},{},{:e}",
            self.checked_nodes, self.active_nodes, self.max_super_residual, self.max_sub_residual, self.pass, self.tolerance
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Side {
    Super,
    Sub,
    Both,
}

fn certify(u: &GridFunction, level: f64, p: &EllipticityParams, region: &Region, tol: f64, side: Side) -> Result<HypothesisReport> {
    let lat = u.lattice();
    lat.check_region_interior(region)?;
    let band = guard_band(lat, p);
    let mut report = HypothesisReport {
        checked_nodes: 0,
        active_nodes: 0,
        band_nodes: 0,
        max_super_residual: 0.0,
        max_sub_residual: 0.0,
        level,
        tolerance: tol,
        pass: true,
    };
    for lin in lat.nodes_in(region) {
        report.checked_nodes += 1;
        let g = u.gradient_unchecked(lin);
        let gn = norm(&g);
        if gn < p.gamma + band {
            if gn >= p.gamma {
                report.band_nodes += 1;
            }
            continue;
        }
        report.active_nodes += 1;
        let (pos, neg) = split_trace(&eigenvalues_sym(&u.hessian_unchecked(lin))?);
        if side != Side::Sub {
            if let OperatorValue::Finite(m) = m_minus_from_parts(pos, neg, gn, p) {
                report.max_super_residual = report.max_super_residual.max((m - level).max(0.0));
            }
        }
        if side != Side::Super {
            if let OperatorValue::Finite(m) = m_plus_from_parts(pos, neg, gn, p) {
                report.max_sub_residual = report.max_sub_residual.max((-level - m).max(0.0));
            }
        }
    }
    report.pass = report.max_super_residual <= tol && report.max_sub_residual <= tol;
    Ok(report)
}

/// Certifies `M^-(D^2 u, grad u) <= level` on the nodes of `region`.
pub fn check_supersolution(u: &GridFunction, level: f64, p: &EllipticityParams, region: &Region, tol: f64) -> Result<HypothesisReport> {
    certify(u, level, p, region, tol, Side::Super)
}

/// Certifies `M^+(D^2 u, grad u) >= -level` on the nodes of `region`.
pub fn check_subsolution(u: &GridFunction, level: f64, p: &EllipticityParams, region: &Region, tol: f64) -> Result<HypothesisReport> {
    certify(u, level, p, region, tol, Side::Sub)
}

/// Both certifications in one pass.
pub fn check_two_sided(u: &GridFunction, level: f64, p: &EllipticityParams, region: &Region, tol: f64) -> Result<HypothesisReport> {
    certify(u, level, p, region, tol, Side::Both)
}

/// Result of [`scale_transform`]: the rescaled function together with the
/// factors by which the threshold and the right-hand side change.
#[derive(Clone, Debug)]
pub struct ScaledFunction {
    pub function: GridFunction,
    pub r: f64,
    pub k: f64,
    /// Multiplier of the gradient threshold, `r K`.
    pub threshold_factor: f64,
    /// Multiplier of the right-hand side bound, `r^2 K`.
    pub rhs_factor: f64,
}

fn check_scale(r: f64, k: f64) -> Result<()> {
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidParams(format!("scale r must be in (0, 1], got {r}")));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidParams(format!("factor K must be positive, got {k}")));
    }
    Ok(())
}

/// `v(x) = K u(x0 + r x)` sampled on the pulled-back lattice: node `j` of
/// `v` sits at `(p_j - x0) / r` where `p_j` is node `j` of `u`, so no
/// interpolation is ever needed.
pub fn scale_transform(u: &GridFunction, x0: &[f64], r: f64, k: f64) -> Result<ScaledFunction> {
    check_scale(r, k)?;
    let lat = u.lattice();
    if x0.len() != lat.dim() {
        return Err(Error::InvalidParams("x0 has the wrong dimension".into()));
    }
    let origin = lat.origin().iter().zip(x0).map(|(o, c)| (o - c) / r).collect();
    let target = Lattice::new(lat.shape().to_vec(), origin, lat.spacing() / r)?;
    let values = u.values().iter().map(|&v| k * v).collect();
    Ok(ScaledFunction {
        function: GridFunction::new(target, values)?,
        r,
        k,
        threshold_factor: r * k,
        rhs_factor: r * r * k,
    })
}

/// Same transform onto a caller-chosen lattice. Every target node must map
/// exactly onto a source node.
pub fn scale_transform_onto(u: &GridFunction, x0: &[f64], r: f64, k: f64, target: &Lattice) -> Result<ScaledFunction> {
    check_scale(r, k)?;
    let lat = u.lattice();
    if target.dim() != lat.dim() || x0.len() != lat.dim() {
        return Err(Error::InvalidParams("dimension mismatch".into()));
    }
    let ratio = r * target.spacing() / lat.spacing();
    if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
        return Err(Error::AlignmentRequired(format!(
            "r * h_target / h_source = {ratio} is not a positive integer"
        )));
    }
    let mut values = Vec::with_capacity(target.len());
    for lin in 0..target.len() {
        let x = target.point_linear(lin);
        let src: Vec<f64> = x.iter().zip(x0).map(|(xi, ci)| ci + r * xi).collect();
        let idx = lat
            .node_at(&src)
            .ok_or_else(|| Error::AlignmentRequired(format!("target node {x:?} maps to {src:?}, not a source node")))?;
        values.push(k * u.at(&idx));
    }
    Ok(ScaledFunction {
        function: GridFunction::new(target.clone(), values)?,
        r,
        k,
        threshold_factor: r * k,
        rhs_factor: r * r * k,
    })
}

/// Checks `M^-(X, p) <= tr(A X) + b.p <= M^+(X, p)` for one linear operator
/// with `lambda I <= A <= Lambda I` and `|b| <= Lambda`.
pub fn linear_operator_sandwich(hess: &Mat, grad: &[f64], p: &EllipticityParams, a: &Mat, b: &[f64]) -> Result<bool> {
    let scale = a.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let ea = eigenvalues_sym(a)?;
    let slack = 1e-12 * scale;
    if ea[0] < p.lambda - slack || ea[ea.len() - 1] > p.big_lambda + slack {
        return Err(Error::InvalidParams(format!(
            "coefficients {ea:?} outside [{}, {}]",
            p.lambda, p.big_lambda
        )));
    }
    if norm(b) > p.big_lambda * (1.0 + 1e-12) {
        return Err(Error::InvalidParams(format!("|b| = {} exceeds Lambda", norm(b))));
    }
    if norm(grad) < p.gamma {
        return Err(Error::InvalidParams("gradient below threshold".into()));
    }
    let lin = (a * hess).trace() + b.iter().zip(grad).map(|(x, y)| x * y).sum::<f64>();
    let lo = m_minus(hess, grad, p)?.finite().unwrap_or(f64::NEG_INFINITY);
    let hi = m_plus(hess, grad, p)?.finite().unwrap_or(f64::INFINITY);
    let tol = 1e-12 * (1.0 + lin.abs() + lo.abs() + hi.abs());
    Ok(lo <= lin + tol && lin <= hi + tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(l: f64, big: f64, g: f64) -> EllipticityParams {
        EllipticityParams::new(l, big, g).unwrap()
    }

    fn diag(a: f64, b: f64) -> Mat {
        Mat::from_row_slice(2, 2, &[a, 0.0, 0.0, b])
    }

    #[test]
    fn rejects_bad_params() {
        assert!(EllipticityParams::new(2.0, 1.0, 0.0).is_err());
        assert!(EllipticityParams::new(0.0, 1.0, 0.0).is_err());
        assert!(EllipticityParams::new(1.0, 1.0, -0.1).is_err());
    }

    #[test]
    fn m_plus_examples() {
        let p = params(1.0, 2.0, 1.0);
        assert_eq!(m_plus(&Mat::zeros(2, 2), &[3.0, 4.0], &p).unwrap(), OperatorValue::Finite(10.0));
        let v = m_plus(&diag(1.0, -1.0), &[1.0, -1.0], &p).unwrap().finite().unwrap();
        assert!((v - (1.0 + 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(m_plus(&diag(5.0, 1.0), &[0.5, 0.0], &p).unwrap(), OperatorValue::PlusInfinity);
    }

    #[test]
    fn m_minus_examples() {
        let v = m_minus(&Mat::identity(2, 2), &[1.0, 0.0], &params(1.0, 1.0, 0.5)).unwrap();
        assert_eq!(v, OperatorValue::Finite(1.0));
        let p = params(1.0, 2.0, 1.0);
        let v = m_minus(&diag(1.0, -1.0), &[1.0, -1.0], &p).unwrap().finite().unwrap();
        assert!((v - (-1.0 - 2.0 * 2f64.sqrt())).abs() < 1e-12);
        assert_eq!(m_minus(&diag(1.0, 1.0), &[0.1, 0.1], &p).unwrap(), OperatorValue::MinusInfinity);
    }

    fn lattice() -> Lattice {
        Lattice::covering_ball(2, 81, 1.0).unwrap()
    }

    #[test]
    fn affine_steep_function_is_supersolution() {
        let lat = lattice();
        let u = GridFunction::from_fn(&lat, |x| 3.0 * x[0] - x[1]).unwrap();
        let p = params(1.0, 2.0, 1.0);
        let rep = check_supersolution(&u, 0.0, &p, &Region::centered_ball(2, 1.0), 1e-9).unwrap();
        assert!(rep.pass && rep.active_nodes == rep.checked_nodes);
    }

    #[test]
    fn concave_paraboloid_passes_convex_fails() {
        let lat = lattice();
        let b1 = Region::centered_ball(2, 1.0);
        let p = params(1.0, 1.0, 0.0);
        let cap = GridFunction::from_fn(&lat, |x| -0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        assert!(check_supersolution(&cap, 0.0, &p, &b1, 1e-9).unwrap().pass);
        let cup = cap.map(|v| -v).unwrap();
        let rep = check_supersolution(&cup, 0.0, &p, &b1, 1e-9).unwrap();
        assert!(!rep.pass);
        assert!((rep.max_super_residual - 2.0).abs() < 1e-9, "{rep:?}");
        // mirror under u -> -u
        let sub = check_subsolution(&cap, 0.0, &p, &b1, 1e-9).unwrap();
        assert!((sub.max_sub_residual - 2.0).abs() < 1e-9);
        assert!(check_subsolution(&cup, 0.0, &p, &b1, 1e-9).unwrap().pass);
    }

    #[test]
    fn region_must_be_interior() {
        let lat = lattice();
        let u = GridFunction::constant(&lat, 1.0).unwrap();
        let p = params(1.0, 1.0, 0.0);
        assert!(matches!(
            check_supersolution(&u, 0.0, &p, &Region::centered_ball(2, 1.5), 0.0),
            Err(Error::RegionOutsideLattice(_))
        ));
    }

    #[test]
    fn guard_band_counts() {
        let lat = lattice();
        let h = lat.spacing();
        let p = params(1.0, 1.0, 0.5);
        // slope inside the band: gamma <= |grad| < gamma + 10h
        let u = GridFunction::from_fn(&lat, |x| (0.5 + 5.0 * h) * x[0]).unwrap();
        let rep = check_supersolution(&u, -100.0, &p, &Region::centered_ball(2, 0.5), 0.0).unwrap();
        assert_eq!(rep.active_nodes, 0);
        assert_eq!(rep.band_nodes, rep.checked_nodes);
        assert!(rep.pass);
    }

    #[test]
    fn scale_identity() {
        let lat = lattice();
        let u = GridFunction::from_fn(&lat, |x| x[0].sin() + x[1]).unwrap();
        let s = scale_transform(&u, &[0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(s.function, u);
    }

    #[test]
    fn scale_quadratic() {
        let lat = lattice();
        let u = GridFunction::from_fn(&lat, |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let s = scale_transform(&u, &[0.0, 0.0], 0.5, 2.0).unwrap();
        let v = &s.function;
        let vl = v.lattice();
        for lin in (0..vl.len()).step_by(37) {
            let x = vl.point_linear(lin);
            let expect = 0.25 * (x[0] * x[0] + x[1] * x[1]);
            assert!((v.get(lin) - expect).abs() < 1e-12 * (1.0 + expect));
        }
        let c = vl.len() / 2;
        let hu = u.hessian_unchecked(c);
        let hv = v.hessian_unchecked(c);
        assert!((hv[(0, 0)] - 0.5 * hu[(0, 0)]).abs() < 1e-9);
        assert_eq!(s.threshold_factor, 1.0);
        assert_eq!(s.rhs_factor, 0.5);
    }

    #[test]
    fn scale_onto_requires_alignment() {
        let lat = lattice();
        let u = GridFunction::constant(&lat, 1.0).unwrap();
        let h = lat.spacing();
        let good = Lattice::centered(2, 11, 2.0 * h / 0.5).unwrap();
        assert!(scale_transform_onto(&u, &[0.0, 0.0], 0.5, 1.0, &good).is_ok());
        let bad = Lattice::centered(2, 11, 1.5 * h).unwrap();
        assert!(matches!(
            scale_transform_onto(&u, &[0.0, 0.0], 0.5, 1.0, &bad),
            Err(Error::AlignmentRequired(_))
        ));
    }

    #[test]
    fn sandwich_examples() {
        let p = params(1.0, 2.0, 0.0);
        let psd = Mat::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 1.0]);
        assert!(linear_operator_sandwich(&psd, &[1.0, 0.0], &p, &Mat::identity(2, 2), &[0.0, 0.0]).unwrap());
        assert!(linear_operator_sandwich(&Mat::zeros(2, 2), &[0.3, -0.4], &p, &(Mat::identity(2, 2) * 1.5), &[2.0, 0.0]).unwrap());
        assert!(linear_operator_sandwich(&psd, &[1.0, 0.0], &p, &(Mat::identity(2, 2) * 3.0), &[0.0, 0.0]).is_err());
    }

    fn random_sym(rng: &mut impl Rng, scale: f64) -> Mat {
        let a = rng.gen_range(-scale..scale);
        let b = rng.gen_range(-scale..scale);
        let c = rng.gen_range(-scale..scale);
        Mat::from_row_slice(2, 2, &[a, b, b, c])
    }

    #[test]
    fn sandwich_random_trials() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = params(0.7, 3.0, 0.2);
        for _ in 0..10_000 {
            let hess = random_sym(&mut rng, 10.0);
            let mut grad = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            if norm(&grad) < p.gamma {
                grad[0] += 1.0;
            }
            // A = R diag(a1, a2) R^T with a_i in [lambda, Lambda]
            let t: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let (s, c) = t.sin_cos();
            let rot = Mat::from_row_slice(2, 2, &[c, -s, s, c]);
            let d = Mat::from_row_slice(2, 2, &[rng.gen_range(p.lambda..p.big_lambda), 0.0, 0.0, rng.gen_range(p.lambda..p.big_lambda)]);
            let a = &rot * d * rot.transpose();
            let a = (&a + a.transpose()) * 0.5;
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let mag = rng.gen_range(0.0..p.big_lambda);
            let b = [mag * ang.cos(), mag * ang.sin()];
            assert!(linear_operator_sandwich(&hess, &grad, &p, &a, &b).unwrap());
        }
    }

    proptest! {
        #[test]
        fn minus_below_plus(a in -50.0..50.0f64, b in -50.0..50.0f64, c in -50.0..50.0f64,
                            g0 in -5.0..5.0f64, g1 in -5.0..5.0f64) {
            let p = params(0.5, 2.0, 0.0);
            let x = Mat::from_row_slice(2, 2, &[a, b, b, c]);
            let lo = m_minus(&x, &[g0, g1], &p).unwrap().finite().unwrap();
            let hi = m_plus(&x, &[g0, g1], &p).unwrap().finite().unwrap();
            prop_assert!(lo <= hi);
            if g0 != 0.0 || g1 != 0.0 { prop_assert!(lo < hi); }
        }

        #[test]
        fn positive_homogeneity(a in -20.0..20.0f64, b in -20.0..20.0f64, c in -20.0..20.0f64,
                                g0 in 0.5..5.0f64, g1 in -5.0..5.0f64, t in 0.25..4.0f64) {
            let p = params(1.0, 3.0, 0.1);
            let x = Mat::from_row_slice(2, 2, &[a, b, b, c]);
            let g = [g0, g1];
            let tg = [t * g0, t * g1];
            for (f, scale) in [(m_minus as fn(&Mat, &[f64], &EllipticityParams) -> Result<OperatorValue>, 1.0), (m_plus, 1.0)] {
                let base = f(&x, &g, &p).unwrap().finite().unwrap();
                let scaled = f(&(&x * t), &tg, &p).unwrap().finite().unwrap();
                prop_assert!((scaled - t * base * scale).abs() <= 1e-9 * (1.0 + scaled.abs()));
            }
        }

        #[test]
        fn monotone_in_hessian(a in -20.0..20.0f64, b in -20.0..20.0f64, c in -20.0..20.0f64,
                               d0 in 0.0..10.0f64, d1 in 0.0..10.0f64, t in 0.0..3.2f64,
                               g0 in -3.0..3.0f64) {
            let p = params(1.0, 2.5, 0.0);
            let x = Mat::from_row_slice(2, 2, &[a, b, b, c]);
            let (s, co) = t.sin_cos();
            let rot = Mat::from_row_slice(2, 2, &[co, -s, s, co]);
            let psd = &rot * Mat::from_row_slice(2, 2, &[d0, 0.0, 0.0, d1]) * rot.transpose();
            let y = &x + (&psd + psd.transpose()) * 0.5;
            let g = [g0, 1.0];
            let tol = 1e-9;
            prop_assert!(m_minus(&x, &g, &p).unwrap().finite().unwrap() <= m_minus(&y, &g, &p).unwrap().finite().unwrap() + tol);
            prop_assert!(m_plus(&x, &g, &p).unwrap().finite().unwrap() <= m_plus(&y, &g, &p).unwrap().finite().unwrap() + tol);
        }
    }

    #[test]
    fn sign_symmetry_of_reports() {
        let lat = lattice();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let coeffs: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let u = GridFunction::from_fn(&lat, |x| {
            coeffs[0] * x[0] * x[0] + coeffs[1] * x[0] * x[1] + coeffs[2] * (3.0 * x[1]).sin() + coeffs[3] * x[0] + coeffs[4] * (x[0] * x[1]).exp()
        })
        .unwrap();
        let neg = u.map(|v| -v).unwrap();
        let p = params(0.8, 2.2, 0.3);
        let b = Region::centered_ball(2, 0.9);
        let sup = check_supersolution(&u, 0.7, &p, &b, 0.01).unwrap();
        let sub = check_subsolution(&neg, 0.7, &p, &b, 0.01).unwrap();
        assert_eq!(sup.max_super_residual.to_bits(), sub.max_sub_residual.to_bits());
        assert_eq!((sup.checked_nodes, sup.active_nodes, sup.band_nodes, sup.pass), (sub.checked_nodes, sub.active_nodes, sub.band_nodes, sub.pass));
    }
}
