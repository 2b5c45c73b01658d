//! Hölder decay: dyadic oscillation of the normalized function
//! `v(x) = u(rho x) / (C0' (1 + 1/epsilon1))` down to the `8h` floor.

use rayon::prelude::*;

use super::corpus::{Corpus, Kind};
use super::lepsilon::fit_slope;
use super::report::{ExperimentReport, Table};
use super::{max_on, num, require_certified};
use crate::config::{Config, Section};
use crate::error::{Error, Result};
use crate::lattice::{GridFunction, Region};
use crate::pucci;

#[derive(Clone, Debug, PartialEq)]
pub struct HolderIteration {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub m: f64,
    /// Which alternative holds on `B_{2^{-k-1}}`: `true` when
    /// `|{v > m_k}| >= |B|/2` (ties go here).
    pub first_case: Option<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dyadic {
    pub rho: f64,
    pub scale: f64,
    pub steps: Vec<HolderIteration>,
}

impl Dyadic {
    pub fn oscillations(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.b - s.a).collect()
    }

    /// `-slope` of `log2(b_k - a_k)` against `k`; `None` for a flat function.
    pub fn alpha(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.steps.iter().filter(|s| s.b > s.a).map(|s| (s.k as f64, (s.b - s.a).log2())).collect();
        if pts.len() < self.steps.len() {
            return None;
        }
        fit_slope(&pts).map(|s| -s)
    }

    pub fn factor(&self) -> Option<f64> {
        self.alpha().map(|a| 2f64.powf(-a))
    }

    pub fn monotone(&self) -> bool {
        self.steps.windows(2).all(|w| w[1].a >= w[0].a && w[1].b <= w[0].b)
    }
}

/// `rho = min(1, eps0 eps1 C0' (1 + 1/eps1) / gamma)`.
pub fn rho(gamma: f64, c0: f64, eps0: f64, eps1: f64) -> f64 {
    if gamma == 0.0 {
        return 1.0;
    }
    (eps0 * eps1 * c0 * (1.0 + 1.0 / eps1) / gamma).min(1.0)
}

/// `log2(1 + eps1/2)`, the exponent with `2^(alpha+1) = 2 + eps1`.
pub fn alpha_ref(eps1: f64) -> f64 {
    (1.0 + eps1 / 2.0).log2()
}

/// Normalizes `u` with `C0' = max(c0, sup_{B_1} |u|)` and runs the dyadic
/// iteration while `2^-k >= 8 h`.
pub fn dyadic(u: &GridFunction, c0: f64, gamma: f64, section: &Section) -> Result<Dyadic> {
    let lat = u.lattice();
    let d = lat.dim();
    let n1 = lat.nodes_in(&Region::centered_ball(d, 1.0));
    let sup = n1.iter().map(|&n| u.get(n).abs()).fold(0.0, f64::max);
    let c0p = c0.max(sup);
    let scale = c0p * (1.0 + 1.0 / section.epsilon1);
    let rho = rho(gamma, c0p, section.epsilon0, section.epsilon1);
    let v = pucci::scale_transform(u, &vec![0.0; d], rho, 1.0 / scale)?.function;
    let h = v.lattice().spacing();
    let mut steps = Vec::new();
    let mut k = 0;
    while 0.5f64.powi(k as i32) >= 8.0 * h {
        let nodes = v.lattice().nodes_in(&Region::centered_ball(d, 0.5f64.powi(k as i32)));
        let a = nodes.iter().map(|&n| v.get(n)).fold(f64::INFINITY, f64::min);
        let b = max_on(&v, &nodes);
        steps.push(HolderIteration { k, a, b, m: 0.5 * (a + b), first_case: None });
        k += 1;
    }
    if steps.len() < 4 {
        return Err(Error::GridTooCoarse(format!("the 8h floor is reached at k = {}", steps.len().saturating_sub(1))));
    }
    for s in steps.iter_mut() {
        let nodes = v.lattice().nodes_in(&Region::centered_ball(d, 0.5f64.powi(s.k as i32 + 1)));
        let above = nodes.iter().filter(|&&n| v.get(n) > s.m).count();
        s.first_case = Some(2 * above >= nodes.len());
    }
    Ok(Dyadic { rho, scale, steps })
}

pub fn run(corpus: &Corpus, section: &Section, cfg: &Config) -> Result<ExperimentReport> {
    require_certified(corpus, |m| m.cert.two_sided_ok())?;
    let gamma = corpus.params.gamma;
    let results: Vec<Result<Dyadic>> = corpus.members.par_iter().map(|m| dyadic(&m.function, cfg.c0, gamma, section)).collect();
    let results: Vec<Dyadic> = results.into_iter().collect::<Result<_>>()?;

    let mut report = ExperimentReport::new("holder");
    report.set("alpha_ref", alpha_ref(section.epsilon1));
    let mut members = Table::new(
        "members",
        &["name", "kind", "violation", "rho", "scale", "levels", "osc_0", "osc_last", "alpha_emp", "factor", "monotone", "base_ok", "baseline_factor", "role", "ok"],
    );
    let mut steps = Table::new("steps", &["name", "k", "a_k", "b_k", "m_k", "osc", "reference_bound", "alternative", "improved"]);
    let aref = alpha_ref(section.epsilon1);
    let mut alpha_min = f64::INFINITY;
    let mut factor_max: f64 = 0.0;
    let mut affine_alpha = f64::NAN;
    for (m, dy) in corpus.members.iter().zip(&results) {
        let osc = dy.oscillations();
        let factor = dy.factor();
        let alpha = dy.alpha();
        let monotone = dy.monotone();
        let base_ok = osc[0] <= 2.0;
        let baseline = m.baseline.and_then(|b| results[b].factor());
        let affine = m.kind == Kind::Analytic && m.recipe.starts_with("Affine");
        let (role, ok) = if m.kind == Kind::Negative {
            ("negative control", m.cert.violation().is_some())
        } else {
            let decay = factor.map_or(true, |f| f <= section.decay_max);
            let stable = match (factor, baseline) {
                (Some(f), Some(b)) => f <= 1.5 * b,
                _ => true,
            };
            let aff = !affine || alpha.is_some_and(|a| (a - 1.0).abs() <= section.affine_alpha_tol);
            if let Some(f) = factor {
                factor_max = factor_max.max(f);
            }
            if let Some(a) = alpha {
                alpha_min = alpha_min.min(a);
            }
            if affine {
                affine_alpha = alpha.unwrap_or(f64::NAN);
            }
            (if affine { "affine control" } else { "certified" }, decay && stable && aff && monotone && base_ok)
        };
        members.push(vec![
            m.name.clone(),
            m.kind.label().into(),
            m.cert.violation().unwrap_or("none").into(),
            num(dy.rho),
            num(dy.scale),
            dy.steps.len().to_string(),
            num(osc[0]),
            num(*osc.last().unwrap()),
            alpha.map(num).unwrap_or_else(|| "nan".into()),
            factor.map(num).unwrap_or_else(|| "nan".into()),
            monotone.to_string(),
            base_ok.to_string(),
            baseline.map(num).unwrap_or_default(),
            role.into(),
            ok.to_string(),
        ]);
        for (i, s) in dy.steps.iter().enumerate() {
            let next = dy.steps.get(i + 1);
            let improved = match (s.first_case, next) {
                (Some(true), Some(n)) => (n.a > s.a).to_string(),
                (Some(false), Some(n)) => (n.b < s.b).to_string(),
                _ => String::new(),
            };
            steps.push(vec![
                m.name.clone(),
                s.k.to_string(),
                num(s.a),
                num(s.b),
                num(s.m),
                num(s.b - s.a),
                num(2.0 * 2f64.powf(-aref * s.k as f64)),
                match s.first_case {
                    Some(true) => "above".into(),
                    Some(false) => "below".into(),
                    None => String::new(),
                },
                improved,
            ]);
        }
        if m.kind != Kind::Negative {
            report.plot.push(dy.steps.iter().map(|s| (s.k as f64, s.b - s.a)).collect());
        }
    }
    report.set("alpha_emp_min", alpha_min);
    report.set("factor_max", factor_max);
    report.set("alpha_affine", affine_alpha);
    report.tables = vec![members, steps];
    report.status = report.derive_status(false);
    Ok(report)
}
