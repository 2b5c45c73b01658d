//! Doubling: a super-solution above `M` on `B_{1/4}` stays above 1 on `B_1`,
//! with `M` the certified amplitude of the scaled barrier.

use super::corpus::{barrier_exponent, Corpus, Kind};
use super::report::{ExperimentReport, Status, Table};
use super::{min_on, num, require_certified};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::generate;
use crate::lattice::Region;

pub fn run(corpus: &Corpus, cfg: &Config) -> Result<ExperimentReport> {
    require_certified(corpus, |m| m.cert.super_ok())?;
    let lat = &corpus.lattice;
    let p = barrier_exponent(&corpus.params, lat.dim());
    let barrier = generate::scaled_barrier(p, &corpus.params, lat)?;
    let m_b = corpus.barrier_m.unwrap_or(barrier.m);
    if m_b != barrier.m {
        return Err(Error::InvalidCorpus(format!("corpus barrier amplitude {m_b} differs from the certified rule {}", barrier.m)));
    }
    let n14 = lat.nodes_in(&Region::centered_ball(2, 0.25));
    let n1 = lat.nodes_in(&Region::centered_ball(2, 1.0));
    let ring = lat.nodes_in(&Region::Annulus { center: vec![0.0, 0.0], inner: 0.25, outer: 2.0 });
    let cmp_tol = cfg.certify_tol * m_b;

    let mut report = ExperimentReport::new("doubling");
    report.set("M", m_b);
    report.set("p", p);
    report.set("M_required", barrier.m_required);
    let mut t = Table::new(
        "members",
        &["name", "kind", "violation", "min_b14", "min_b1", "filtered", "min_b1_gt_1", "barrier_gap", "comparison_ok", "outcome", "ok"],
    );
    let mut filtered = 0;
    let mut margin = f64::INFINITY;
    let mut eps = f64::INFINITY;
    for m in &corpus.members {
        let u = &m.function;
        let min14 = min_on(u, &n14);
        let min1 = min_on(u, &n1);
        let concl = min1 > 1.0;
        // max (B - u) over the ring; the comparison the proof rests on
        let gap = ring.iter().map(|&n| barrier.function.get(n) - u.get(n)).fold(f64::NEG_INFINITY, f64::max);
        let (is_filtered, cmp_ok, outcome, ok) = if m.cert.barrier_certified {
            // B >= 1 on B_1 is one of its certified conditions
            let ok = barrier.min_on_b1 >= 1.0 && min1 >= 1.0;
            (false, true, "barrier: min over B_1 >= 1 by construction", ok)
        } else if m.kind == Kind::Negative {
            let filt = min14 > m_b;
            let outcome = match (filt, concl) {
                (true, false) => "hypothesis violated; conclusion fails",
                (true, true) => "hypothesis violated; conclusion holds anyway",
                _ => "hypothesis violated; not filtered",
            };
            (filt, true, outcome, m.cert.violation().is_some())
        } else if min14 > m_b {
            filtered += 1;
            margin = margin.min(min1 - 1.0);
            eps = eps.min(min14 / m_b - 1.0);
            let cmp = gap <= cmp_tol;
            (true, cmp, if concl { "conclusion holds" } else { "conclusion fails" }, concl && cmp)
        } else {
            (false, true, "not filtered", true)
        };
        t.push(vec![
            m.name.clone(),
            m.kind.label().into(),
            m.cert.violation().unwrap_or("none").into(),
            num(min14),
            num(min1),
            is_filtered.to_string(),
            concl.to_string(),
            num(gap),
            cmp_ok.to_string(),
            outcome.into(),
            ok.to_string(),
        ]);
    }
    report.set("filtered", filtered as f64);
    report.set("min_margin", if filtered > 0 { margin } else { f64::NAN });
    report.set("min_eps", if filtered > 0 { eps } else { f64::NAN });
    report.tables.push(t);
    report.status = report.derive_status(filtered == 0);
    if report.status == Status::Vacuous {
        report.notes.push("no certified member exceeds M on B_1/4".into());
    }
    Ok(report)
}
