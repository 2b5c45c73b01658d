//! Verification experiments over certified corpora, with CSV reports.

pub mod corpus;
pub mod doubling;
pub mod harnack;
pub mod holder;
pub mod lepsilon;
pub mod measure;
pub mod report;

use std::sync::Arc;

use crate::config::{Config, Section};
use crate::error::{Error, Result};
use corpus::{Corpus, Flavor, Kind};
pub use report::{ExperimentReport, Status, Table};

/// `M = 2 + 5 sqrt 2`, the level of the measure estimate.
pub const M_MEASURE: f64 = 2.0 + 5.0 * std::f64::consts::SQRT_2;

pub const EXPERIMENTS: [&str; 5] = ["measure_estimate", "doubling", "lepsilon", "holder", "harnack"];

pub fn flavor_of(name: &str) -> Result<Flavor> {
    match name {
        "measure_estimate" | "lepsilon" => Ok(Flavor::Super),
        "doubling" => Ok(Flavor::Annulus),
        "holder" | "harnack" => Ok(Flavor::TwoSided),
        _ => Err(Error::Config(format!("unknown experiment {name:?}"))),
    }
}

pub fn section_of<'a>(cfg: &'a Config, name: &str) -> Result<&'a Section> {
    cfg.sections()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::Config(format!("unknown experiment {name:?}")))
}

/// Builds each distinct corpus once; experiments whose flavor, parameters
/// and member counts agree share it.
#[derive(Default)]
pub struct CorpusCache {
    entries: Vec<(Flavor, Section, Arc<Corpus>)>,
}

impl CorpusCache {
    pub fn get(&mut self, cfg: &Config, name: &str) -> Result<Arc<Corpus>> {
        let flavor = flavor_of(name)?;
        let section = section_of(cfg, name)?;
        let same = |s: &Section| {
            s.lambda == section.lambda && s.big_lambda == section.big_lambda && s.gamma == section.gamma && s.corpus == section.corpus
        };
        if let Some((_, _, c)) = self.entries.iter().find(|(f, s, _)| *f == flavor && same(s)) {
            return Ok(c.clone());
        }
        let c = Arc::new(corpus::build_corpus(flavor, section, cfg.c0, cfg.grid, cfg.seed, cfg.certify_tol)?);
        self.entries.push((flavor, section.clone(), c.clone()));
        Ok(c)
    }
}

pub fn run(name: &str, cfg: &Config, cache: &mut CorpusCache) -> Result<ExperimentReport> {
    let corpus = cache.get(cfg, name)?;
    let section = section_of(cfg, name)?;
    match name {
        "measure_estimate" => measure::run(&corpus, section, cfg),
        "doubling" => doubling::run(&corpus, cfg),
        "lepsilon" => lepsilon::run(&corpus, section, cfg),
        "holder" => holder::run(&corpus, section, cfg),
        "harnack" => harnack::run(&corpus, section, cfg),
        _ => Err(Error::Config(format!("unknown experiment {name:?}"))),
    }
}

pub fn run_all(cfg: &Config) -> Result<Vec<ExperimentReport>> {
    let mut cache = CorpusCache::default();
    EXPERIMENTS.iter().map(|name| run(name, cfg, &mut cache)).collect()
}

/// Stale hashes are errors; so is any member outside the negative controls
/// that fails `ok`.
pub(crate) fn require_certified(corpus: &Corpus, ok: impl Fn(&corpus::Member) -> bool) -> Result<()> {
    corpus.ensure_fresh()?;
    for m in &corpus.members {
        if m.kind != Kind::Negative && !m.cert.barrier_certified && !ok(m) {
            return Err(Error::Uncertified(format!("{} ({})", m.name, m.cert.violation().unwrap_or("hypothesis"))));
        }
    }
    Ok(())
}

/// Shortest round-trip decimal form, so reports are bit-reproducible.
pub(crate) fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub(crate) fn min_on(u: &crate::lattice::GridFunction, nodes: &[usize]) -> f64 {
    nodes.iter().map(|&n| u.get(n)).fold(f64::INFINITY, f64::min)
}

pub(crate) fn max_on(u: &crate::lattice::GridFunction, nodes: &[usize]) -> f64 {
    nodes.iter().map(|&n| u.get(n)).fold(f64::NEG_INFINITY, f64::max)
}
