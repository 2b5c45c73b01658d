//! Measure estimate: the implication "u > M on most of B_1 forces u > 1 on
//! B_{1/4}", its scaled form through `u_r(x) = u(r x / 2) / kappa`, and the
//! cusp contact sets behind it.

use rayon::prelude::*;

use super::corpus::{Corpus, Kind, Member};
use super::report::{ExperimentReport, Table};
use super::{max_on, min_on, num, require_certified, M_MEASURE};
use crate::config::{Config, Section};
use crate::contact::{self, ContactTolerances, CuspParams};
use crate::error::Result;
use crate::lattice::{GridFunction, Region};
use crate::pucci;

pub const SCALES: [f64; 3] = [1.0, 0.5, 0.25];

/// `kappa` values `1, M, M^2`.
pub fn kappas() -> [f64; 3] {
    [1.0, M_MEASURE, M_MEASURE * M_MEASURE]
}

/// Level-set statistics of `k u` on the nodes of a ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelStats {
    pub nodes: usize,
    /// Nodes with `k u > m`.
    pub above: usize,
    pub min: f64,
}

impl LevelStats {
    pub fn of(u: &GridFunction, region: &Region, k: f64, m: f64) -> Self {
        let nodes = u.lattice().nodes_in(region);
        let above = nodes.iter().filter(|&&n| k * u.get(n) > m).count();
        let min = nodes.iter().map(|&n| k * u.get(n)).fold(f64::INFINITY, f64::min);
        Self { nodes: nodes.len(), above, min }
    }

    pub fn fraction(&self) -> f64 {
        self.above as f64 / self.nodes as f64
    }

    /// `|{k u > m}| > (1 - delta) |ball|` in node counts.
    pub fn dense(&self, delta: f64) -> bool {
        self.above as f64 > (1.0 - delta) * self.nodes as f64
    }
}

/// `0.5 min (1 - |{u > M} ∩ B_1| / |B_1|)` over members with
/// `min_{B_{1/4}} u <= 1`; `None` when no member qualifies.
pub fn calibrate_delta(stats: &[(f64, f64)]) -> Option<f64> {
    stats.iter().filter(|(min14, _)| *min14 <= 1.0).map(|(_, frac)| 0.5 * (1.0 - frac)).reduce(f64::min)
}

struct MemberOutcome {
    main: Vec<String>,
    scaled: Vec<Vec<String>>,
    contact: Option<Vec<String>>,
}

pub fn run(corpus: &Corpus, section: &Section, cfg: &Config) -> Result<ExperimentReport> {
    require_certified(corpus, |m| m.cert.super_ok())?;
    let mut report = ExperimentReport::new("measure_estimate");
    let lat = &corpus.lattice;
    let b1 = Region::centered_ball(2, 1.0);
    let b14 = Region::centered_ball(2, 0.25);
    let n1 = lat.nodes_in(&b1);
    let n14 = lat.nodes_in(&b14);

    let certified: Vec<&Member> = corpus.members.iter().filter(|m| m.kind != Kind::Negative).collect();
    let basic: Vec<(f64, f64)> = certified
        .iter()
        .map(|m| (min_on(&m.function, &n14), LevelStats::of(&m.function, &b1, 1.0, M_MEASURE).fraction()))
        .collect();
    let delta = match calibrate_delta(&basic) {
        Some(d) => d,
        None => {
            report.notes.push("no certified member has min over B_1/4 <= 1; delta defaults to 0.5".into());
            0.5
        }
    };
    report.set("M", M_MEASURE);
    report.set("delta_cal", delta);
    if delta <= 0.0 {
        report.notes.push("a member with min over B_1/4 <= 1 has u > M on all of B_1; no positive delta exists".into());
    }

    let cusp = CuspParams::default();
    let tol = ContactTolerances {
        gradient: section.gradient_tol,
        hessian: section.hessian_tol,
        injectivity_cells: section.injectivity_cells,
        measure_slack: section.measure_slack,
    };
    let params = corpus.params;
    let outcomes: Vec<Result<MemberOutcome>> = corpus
        .members
        .par_iter()
        .map(|m| {
            let u = &m.function;
            let min14 = min_on(u, &n14);
            let st = LevelStats::of(u, &b1, 1.0, M_MEASURE);
            let certified = m.kind != Kind::Negative;
            let hyp = st.dense(delta);
            let concl = min14 > 1.0;
            let ok = !certified || (delta > 0.0 && (!hyp || concl));
            let main = vec![
                m.name.clone(),
                m.kind.label().into(),
                m.cert.violation().unwrap_or("none").into(),
                num(min14),
                num(max_on(u, &n14)),
                num(min_on(u, &n1)),
                num(st.fraction()),
                hyp.to_string(),
                concl.to_string(),
                ok.to_string(),
            ];
            if !certified {
                return Ok(MemberOutcome { main, scaled: Vec::new(), contact: None });
            }

            let mut scaled = Vec::new();
            for &r in &SCALES {
                for &kappa in &kappas() {
                    let k = 1.0 / kappa;
                    let direct = LevelStats::of(u, &Region::centered_ball(2, r / 2.0), k, M_MEASURE);
                    let sf = pucci::scale_transform(u, &[0.0, 0.0], r / 2.0, k)?;
                    let via = LevelStats::of(&sf.function, &b1, 1.0, M_MEASURE);
                    let identical = direct.nodes == via.nodes && direct.above == via.above && direct.min.to_bits() == via.min.to_bits();
                    let level = sf.rhs_factor * cfg.c0;
                    let p = params.scaled(r / 2.0, k);
                    let cert = pucci::check_supersolution(&sf.function, level, &p, &Region::centered_ball(2, 2.0), cfg.certify_tol * sf.rhs_factor)?;
                    let hyp = via.dense(delta);
                    let concl = via.min > 1.0;
                    let ok = identical && cert.pass && (!hyp || concl);
                    scaled.push(vec![
                        m.name.clone(),
                        num(r),
                        num(kappa),
                        num(level),
                        num(p.gamma),
                        cert.pass.to_string(),
                        via.nodes.to_string(),
                        via.above.to_string(),
                        num(via.min),
                        hyp.to_string(),
                        concl.to_string(),
                        identical.to_string(),
                        ok.to_string(),
                    ]);
                }
            }

            let contact = if u.lattice().nodes_in(&b14).iter().any(|&n| u.get(n) > M_MEASURE) {
                let set = contact::build_contact_set(u, &cusp, &b14, &b1, M_MEASURE)?;
                let inv = contact::check_invariants(u, &set, &cusp, &tol)?;
                // The contact values stay below M - 1 whenever u <= 1 somewhere in B_{1/4}.
                let level_ok = min14 > 1.0 || set.level_violations == 0;
                let ok = inv.all_ok() && level_ok && set.conflicts == 0;
                Some(vec![
                    m.name.clone(),
                    set.records.len().to_string(),
                    inv.records.to_string(),
                    inv.separated.to_string(),
                    set.boundary_contacts.to_string(),
                    num(set.u_measure),
                    num(set.t_measure),
                    num(set.jacobian_bound_observed),
                    num(inv.gradient_ratio),
                    num(inv.hessian_margin),
                    num(inv.injectivity_cells),
                    num(inv.measure_rhs),
                    num(set.max_contact_value),
                    set.level_violations.to_string(),
                    inv.gradient_ok.to_string(),
                    inv.hessian_ok.to_string(),
                    inv.injectivity_ok.to_string(),
                    inv.measure_ok.to_string(),
                    level_ok.to_string(),
                    ok.to_string(),
                ])
            } else {
                None
            };
            Ok(MemberOutcome { main, scaled, contact })
        })
        .collect();

    let mut main = Table::new(
        "members",
        &["name", "kind", "violation", "min_b14", "max_b14", "min_b1", "frac_above_m", "dense", "min_b14_gt_1", "ok"],
    );
    let mut scaled = Table::new(
        "scaled",
        &["name", "r", "kappa", "level", "gamma", "certified", "nodes", "above", "min", "dense", "min_gt_1", "bit_identical", "ok"],
    );
    let mut contact = Table::new(
        "contact",
        &[
            "name", "vertices", "valid", "separated", "boundary", "u_measure", "t_measure", "jacobian_bound", "gradient_ratio",
            "hessian_margin", "injectivity_cells", "measure_rhs", "max_contact_value", "level_violations", "gradient_ok",
            "hessian_ok", "injectivity_ok", "measure_ok", "level_ok", "ok",
        ],
    );
    for o in outcomes {
        let o = o?;
        main.push(o.main);
        o.scaled.into_iter().for_each(|r| scaled.push(r));
        if let Some(c) = o.contact {
            contact.push(c);
        }
    }
    let hyp_members = main.rows.iter().filter(|r| r[1] != "negative" && r[7] == "true").count();
    let small = basic.iter().filter(|(m, _)| *m <= 1.0).count();
    report.set("certified_members", certified.len() as f64);
    report.set("dense_members", hyp_members as f64);
    report.set("small_at_center", small as f64);
    report.set("contact_members", contact.rows.len() as f64);
    let ratio = contact.rows.iter().filter_map(|r| r[8].parse::<f64>().ok()).fold(0.0, f64::max);
    report.set("gradient_constant_observed", ratio);
    report.set("gradient_constant", section.gradient_tol);
    report.set(
        "max_frac_small_at_center",
        basic.iter().filter(|(m, _)| *m <= 1.0).map(|(_, f)| *f).fold(0.0, f64::max),
    );
    if contact.rows.is_empty() {
        report.notes.push("no member exceeds M on B_1/4; contact invariants untested".into());
    }
    report.tables = vec![main, scaled, contact];
    report.status = report.derive_status(false);
    if delta <= 0.0 {
        report.status = super::Status::Fail;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;

    #[test]
    fn calibration_uses_small_members_only() {
        assert_eq!(calibrate_delta(&[(0.5, 0.2), (2.0, 0.99), (0.9, 0.6)]), Some(0.2));
        assert_eq!(calibrate_delta(&[(2.0, 0.5)]), None);
    }

    #[test]
    fn constant_above_m_meets_everything() {
        let lat = Lattice::covering_ball(2, 65, 2.0).unwrap();
        let u = GridFunction::constant(&lat, M_MEASURE + 1.0).unwrap();
        let st = LevelStats::of(&u, &Region::centered_ball(2, 1.0), 1.0, M_MEASURE);
        assert_eq!(st.above, st.nodes);
        assert!(st.dense(0.01) && st.min > 1.0);
    }

    #[test]
    fn scaled_statistics_are_bit_identical() {
        let lat = Lattice::covering_ball(2, 65, 2.0).unwrap();
        let u = GridFunction::from_fn(&lat, |x| 3.0 + x[0] * 7.3 + x[1] * x[1] * 40.0).unwrap();
        for &r in &SCALES {
            for &kappa in &kappas() {
                let direct = LevelStats::of(&u, &Region::centered_ball(2, r / 2.0), 1.0 / kappa, M_MEASURE);
                let sf = pucci::scale_transform(&u, &[0.0, 0.0], r / 2.0, 1.0 / kappa).unwrap();
                let via = LevelStats::of(&sf.function, &Region::centered_ball(2, 1.0), 1.0, M_MEASURE);
                assert_eq!((direct.nodes, direct.above, direct.min.to_bits()), (via.nodes, via.above, via.min.to_bits()));
            }
        }
    }
}
