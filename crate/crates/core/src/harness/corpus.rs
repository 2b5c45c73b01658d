//! Seeded, certified corpora of test functions.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Section;
use crate::error::{Error, Result};
use crate::generate::{self, Family, SolveConfig};
use crate::lattice::{self, GridFunction, Lattice, Region};
use crate::pucci::{self, EllipticityParams, HypothesisReport};

/// Which hypotheses a corpus is built around.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    /// Non-negative super-solutions on `B_2`.
    Super,
    /// Annulus problems around `B_{1/4}` for the doubling lemma, on `B_2`.
    Annulus,
    /// Non-negative two-sided solutions on `B_1`.
    TwoSided,
}

impl Flavor {
    pub fn radius(self) -> f64 {
        match self {
            Flavor::Super | Flavor::Annulus => 2.0,
            Flavor::TwoSided => 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Barrier,
    Solver,
    Perturbed,
    Analytic,
    Negative,
}

impl Kind {
    pub fn label(self) -> &'static str {
        match self {
            Kind::Barrier => "barrier",
            Kind::Solver => "solver",
            Kind::Perturbed => "perturbed",
            Kind::Analytic => "analytic",
            Kind::Negative => "negative",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Certification {
    pub level: f64,
    pub gamma: f64,
    pub radius: f64,
    /// Operator checks skip `|x| <= hole`; zero means the whole ball.
    pub hole: f64,
    pub nonnegative: bool,
    pub super_report: HypothesisReport,
    pub sub_report: HypothesisReport,
    /// Set for scaled barriers, which are certified through their own
    /// sub-solution conditions on the ring instead.
    pub barrier_certified: bool,
    pub hash: String,
}

impl Certification {
    pub fn super_ok(&self) -> bool {
        self.nonnegative && self.super_report.pass
    }

    pub fn two_sided_ok(&self) -> bool {
        self.super_ok() && self.sub_report.pass
    }

    /// Names the first failing hypothesis, if any.
    pub fn violation(&self) -> Option<&'static str> {
        if !self.nonnegative {
            Some("negative values")
        } else if !self.super_report.pass {
            Some("super-solution bound")
        } else if !self.sub_report.pass {
            Some("sub-solution bound")
        } else {
            None
        }
    }
}

#[derive(Clone, Debug)]
pub struct Member {
    pub name: String,
    pub kind: Kind,
    /// Index of the solver member a perturbation was built from.
    pub baseline: Option<usize>,
    pub recipe: String,
    pub function: GridFunction,
    pub cert: Certification,
}

impl Member {
    /// Errors when the values no longer match the certified hash.
    pub fn ensure_fresh(&self) -> Result<()> {
        if generate::value_hash(&self.function) != self.cert.hash {
            return Err(Error::StaleCertification(self.name.clone()));
        }
        Ok(())
    }

    pub fn provenance(&self) -> String {
        let c = &self.cert;
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "kind = {}", self.kind.label());
        let _ = writeln!(s, "recipe = {}", self.recipe);
        if let Some(b) = self.baseline {
            let _ = writeln!(s, "baseline = {b}");
        }
        let _ = writeln!(s, "level = {}", c.level);
        let _ = writeln!(s, "gamma = {}", c.gamma);
        let _ = writeln!(s, "radius = {}", c.radius);
        let _ = writeln!(s, "hole = {}", c.hole);
        let _ = writeln!(s, "nonnegative = {}", c.nonnegative);
        let _ = writeln!(s, "super = {}", c.super_report.pass);
        let _ = writeln!(s, "sub = {}", c.sub_report.pass);
        let _ = writeln!(s, "barrier = {}", c.barrier_certified);
        let _ = writeln!(s, "sha256 = {}", c.hash);
        s
    }
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub flavor: Flavor,
    pub lattice: Lattice,
    pub params: EllipticityParams,
    pub c0: f64,
    pub members: Vec<Member>,
    /// Amplitude of the first scaled barrier (annulus corpora only).
    pub barrier_m: Option<f64>,
}

impl Corpus {
    pub fn ensure_fresh(&self) -> Result<()> {
        self.members.iter().try_for_each(Member::ensure_fresh)
    }

    /// Writes `<name>.gfn` and `<name>.prov` for every member.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for m in &self.members {
            lattice::gfn::save_gfn(&m.function, dir.join(format!("{}.gfn", m.name)))?;
            std::fs::write(dir.join(format!("{}.prov", m.name)), m.provenance())?;
        }
        Ok(())
    }
}

pub fn certify(u: &GridFunction, params: &EllipticityParams, c0: f64, radius: f64, hole: f64, tol: f64) -> Result<Certification> {
    let dim = u.lattice().dim();
    let ball = Region::centered_ball(dim, radius);
    let checked = if hole > 0.0 { Region::Annulus { center: vec![0.0; dim], inner: hole, outer: radius } } else { ball.clone() };
    Ok(Certification {
        level: c0,
        gamma: params.gamma,
        radius,
        hole,
        nonnegative: u.lattice().nodes_in(&ball).iter().all(|&n| u.get(n) >= 0.0),
        super_report: pucci::check_supersolution(u, c0, params, &checked, tol)?,
        sub_report: pucci::check_subsolution(u, c0, params, &checked, tol)?,
        barrier_certified: false,
        hash: generate::value_hash(u),
    })
}

/// The smallest integer `p >= 4` with `lambda (p + 1) - Lambda (d + 1) >= 1`.
pub fn barrier_exponent(params: &EllipticityParams, d: usize) -> f64 {
    let need = ((1.0 + params.big_lambda * (d as f64 + 1.0)) / params.lambda - 1.0).ceil();
    need.max(4.0)
}

fn member_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    vec![t.cos(), t.sin()]
}

fn ridge_sum(rng: &mut ChaCha8Rng, k_max: f64) -> (Vec<(f64, f64, Vec<f64>)>, String) {
    let terms: Vec<(f64, f64, Vec<f64>)> = (0..2)
        .map(|_| (rng.gen_range(0.2..2.0), rng.gen_range(0.5..k_max.max(0.6)), unit_vector(rng)))
        .collect();
    let text = terms
        .iter()
        .map(|(a, k, n)| format!("{a:.6}*exp({k:.6}*({:.6},{:.6}).x)", n[0], n[1]))
        .collect::<Vec<_>>()
        .join("+");
    (terms, text)
}

fn eval_ridges(terms: &[(f64, f64, Vec<f64>)], x: &[f64]) -> f64 {
    terms.iter().map(|(a, k, n)| a * (k * (x[0] * n[0] + x[1] * n[1])).exp()).sum()
}

fn min_over(u: &GridFunction, radius: f64) -> f64 {
    u.lattice()
        .nodes_in(&Region::centered_ball(u.lattice().dim(), radius))
        .into_iter()
        .map(|n| u.get(n))
        .fold(f64::INFINITY, f64::min)
}

fn solve(f: f64, g: &GridFunction, params: &EllipticityParams, fixed: Option<&[bool]>) -> Result<GridFunction> {
    solve_rhs(&GridFunction::constant(g.lattice(), f)?, g, params, fixed)
}

fn solve_rhs(rhs: &GridFunction, g: &GridFunction, params: &EllipticityParams, fixed: Option<&[bool]>) -> Result<GridFunction> {
    let scale = 1.0 + g.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cfg = SolveConfig { tol: 1e-9 * scale, max_iters: 200_000, ..SolveConfig::fast() };
    Ok(generate::solve_pucci(rhs, g, &params.with_gamma(0.0), &cfg, fixed)?.u)
}

/// Bowl-shaped solution of `M^-_h u = c > 0` with ridge boundary data,
/// shifted so that `min_{B_1} u = tau <= 1/2`; redrawn until it is
/// non-negative on the corpus domain.
fn solver_bowl(lat: &Lattice, params: &EllipticityParams, c0: f64, radius: f64, rng: &mut ChaCha8Rng) -> Result<(GridFunction, String)> {
    let k_max = (params.big_lambda / params.lambda).min(6.0);
    for _ in 0..64 {
        let c = rng.gen_range(0.1..0.8) * c0;
        let tau = rng.gen_range(0.0..0.5);
        let (terms, text) = ridge_sum(rng, k_max);
        let g = GridFunction::from_fn(lat, |x| eval_ridges(&terms, x))?;
        let u = solve(c, &g, params, None)?;
        let shift = min_over(&u, 1.0) - tau;
        let u = u.map(|v| v - shift)?;
        if min_over(&u, radius) >= 0.0 {
            return Ok((u, format!("solve M^- u = {c:.6}; g = {text}; shift to min_B1 = {tau:.6}")));
        }
    }
    Err(Error::InvalidCorpus("no non-negative solver draw in 64 attempts".into()))
}

/// Annulus problem: `u = v` on `B_{1/4}`, ridge data outside `B_2`.
/// Solve of `M^-_h u = f` on `B_2` minus a fixed core `u = inner` on
/// `B_{1/4}`. With `correct`, the right-hand side is lowered wherever the
/// lattice operator exceeds `c0 - 0.1` on `hole < |x| <= 2` and the solve
/// repeated: the steep profile next to the core is otherwise read as a
/// violation by central differences.
#[allow(clippy::too_many_arguments)]
fn solver_annulus(
    lat: &Lattice,
    params: &EllipticityParams,
    inner: f64,
    f: f64,
    c0: f64,
    hole: f64,
    correct: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(GridFunction, String)> {
    let (terms, text) = ridge_sum(rng, 1.0);
    let floor = rng.gen_range(0.1..0.5);
    let g = GridFunction::from_fn(lat, |x| {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if r <= 0.25 { inner } else { floor + 0.1 * eval_ridges(&terms, x) }
    })?;
    let fixed: Vec<bool> = (0..lat.len())
        .map(|n| {
            let x = lat.point_linear(n);
            (x[0] * x[0] + x[1] * x[1]).sqrt() <= 0.25
        })
        .collect();
    let ring = lat.nodes_in(&Region::Annulus { center: vec![0.0; 2], inner: hole, outer: 2.0 });
    let mut rhs = vec![f; lat.len()];
    let mut rounds = 0;
    let mut u = solve_rhs(&GridFunction::new(lat.clone(), rhs.clone())?, &g, params, Some(&fixed))?;
    loop {
        if rounds > 0 {
            let cfg = SolveConfig { tol: 1e-9 * (1.0 + inner), max_iters: 200_000, ..SolveConfig::fast() };
            let f = GridFunction::new(lat.clone(), rhs.clone())?;
            u = generate::solve_pucci_warm(&f, &g, &params.with_gamma(0.0), &cfg, Some(&fixed), &u)?.u;
        }
        let mut excess = Vec::new();
        if correct {
            for &n in &ring {
                if let Some(v) = pucci::lattice_operators(&u, n, params)?.0.finite() {
                    if v > c0 - 0.1 {
                        excess.push((n, v - (c0 - 0.1)));
                    }
                }
            }
        }
        if excess.is_empty() {
            let low = rhs.iter().cloned().fold(f, f64::min);
            let text = format!(
                "annulus: u = {inner:.6} on B_1/4, M^- u = {f:.6} lowered to >= {low:.6e} in {rounds} correction rounds, outer g = {floor:.6}+0.1*({text})"
            );
            return Ok((u, text));
        }
        rounds += 1;
        if rounds > 12 {
            return Err(Error::InvalidCorpus(format!("annulus correction stalled with {} nodes above the level", excess.len())));
        }
        for (n, e) in excess {
            rhs[n] -= 1.5 * e + 0.1;
        }
    }
}

fn analytic_super(i: usize, params: &EllipticityParams, rng: &mut ChaCha8Rng) -> Family {
    let ratio = params.big_lambda / params.lambda;
    let ridge = |rng: &mut ChaCha8Rng| {
        let k = rng.gen_range(0.93..1.0) * ratio;
        let low: f64 = rng.gen_range(0.3..0.7);
        let normal = unit_vector(rng);
        // value `low` at x.nu = -1/4 with amplitude 1
        let shift = -0.25 - low.ln() / k;
        Family::Ridge { amplitude: 1.0, k, normal, shift }
    };
    match i % 4 {
        0 | 1 => ridge(rng),
        2 => Family::MinRidges(Box::new(ridge(rng)), Box::new(ridge(rng))),
        _ => {
            let dir = unit_vector(rng);
            let k = rng.gen_range(0.5..1.0) * ratio;
            let center = vec![3.0 * dir[0], 3.0 * dir[1]];
            Family::RadialExp { amplitude: rng.gen_range(1.0..2.0) * (3.0 * k).exp() * 0.05, k, center }
        }
    }
}

fn analytic_two_sided(i: usize, rng: &mut ChaCha8Rng) -> Family {
    match i % 2 {
        0 => Family::Affine { c0: 1.0, slope: vec![0.8, 0.0] },
        _ => {
            let q = rng.gen_range(0.1..0.3);
            Family::Harmonic { c0: 1.0, linear: vec![0.2, -0.1], quad: q, cross: 0.1, cubic: 0.0 }
        }
    }
}

fn negative_control(i: usize, params: &EllipticityParams) -> Family {
    let ratio = params.big_lambda / params.lambda;
    let base = Box::new(Family::Constant(1.0));
    match i % 4 {
        0 => Family::Spike { base, amplitude: 3.0, width: 0.05, center: vec![0.1, -0.05] },
        1 => Family::Spike { base, amplitude: -0.9, width: 0.05, center: vec![-0.1, 0.05] },
        2 => Family::Ridge { amplitude: 0.5, k: 2.0 * ratio + 1.0, normal: vec![1.0, 0.0], shift: 0.0 },
        _ => Family::Affine { c0: -0.5, slope: vec![1.0, 1.0] },
    }
}

/// Builds and certifies a corpus on the lattice of `grid` nodes per side
/// covering the flavor's domain.
pub fn build_corpus(flavor: Flavor, section: &Section, c0: f64, grid: usize, seed: u64, tol: f64) -> Result<Corpus> {
    let params = section.params()?;
    let radius = flavor.radius();
    let lat = Lattice::covering_ball(2, grid, radius)?;
    let counts = section.corpus;
    let mut members: Vec<Member> = Vec::new();
    let mut stream = 0u64;
    let mut next_rng = || {
        stream += 1;
        member_rng(seed, stream)
    };
    // Annulus members carry a fixed core joined to the free solve by a
    // concave kink; central differences misread the collar, so skip it.
    let hole = if flavor == Flavor::Annulus { 0.25 + 2.0 * lat.spacing() } else { 0.0 };
    let plain = |name: String, kind: Kind, recipe: String, u: GridFunction| -> Result<Member> {
        let cert = certify(&u, &params, c0, radius, hole, tol)?;
        Ok(Member { name, kind, baseline: None, recipe, function: u, cert })
    };

    let mut barrier_m = None;
    let p0 = barrier_exponent(&params, 2);
    for i in 0..counts.barriers {
        let p = p0 + i as f64;
        match flavor {
            Flavor::Annulus => {
                let sb = generate::scaled_barrier(p, &params, &lat)?;
                barrier_m.get_or_insert(sb.m);
                let mut cert = certify(&sb.function, &params, c0, radius, hole, tol)?;
                cert.barrier_certified = true;
                members.push(Member {
                    name: format!("barrier-{i:02}"),
                    kind: Kind::Barrier,
                    baseline: None,
                    recipe: format!("scaled barrier p = {p}, M = {:.6}, required {:.6}", sb.m, sb.m_required),
                    function: sb.function,
                    cert,
                });
            }
            _ => {
                let s = 3.0 + 0.5 * i as f64;
                let u = GridFunction::from_fn(&lat, |x| ((x[0] - s).powi(2) + x[1] * x[1]).sqrt().powf(-4.0))?;
                members.push(plain(format!("barrier-{i:02}"), Kind::Barrier, format!("|x - ({s}, 0)|^-4"), u)?);
            }
        }
    }
    if flavor == Flavor::Annulus && barrier_m.is_none() {
        let sb = generate::scaled_barrier(p0, &params, &lat)?;
        barrier_m = Some(sb.m);
    }

    let mut solver_idx = Vec::new();
    for i in 0..counts.solver {
        let mut rng = next_rng();
        let (u, recipe) = match flavor {
            Flavor::Annulus => {
                let inner = barrier_m.unwrap() * rng.gen_range(1.05..1.5);
                let f = rng.gen_range(-0.5..0.9) * c0;
                solver_annulus(&lat, &params, inner, f, c0, hole, true, &mut rng)?
            }
            _ => solver_bowl(&lat, &params, c0, radius, &mut rng)?,
        };
        solver_idx.push(members.len());
        members.push(plain(format!("solver-{i:02}"), Kind::Solver, recipe, u)?);
    }

    for i in 0..counts.perturbed {
        if solver_idx.is_empty() {
            break;
        }
        let base_idx = solver_idx[i % solver_idx.len()];
        let base = &members[base_idx];
        let region = Region::centered_ball(2, radius);
        let budget = 8.0 * params.gamma * lat.spacing();
        let p = generate::perturb_low_gradient(
            &base.function,
            &params,
            c0,
            &region,
            flavor == Flavor::TwoSided,
            budget,
            seed ^ (0x5eed_0000 + i as u64),
        )?;
        let recipe = format!("{} + {:.6e} * bumps(radius {:.6}) at {} centres", base.name, p.eta, p.radius, p.centers.len());
        let mut m = plain(format!("perturbed-{i:02}"), Kind::Perturbed, recipe, p.function)?;
        m.baseline = Some(base_idx);
        members.push(m);
    }

    for i in 0..counts.analytic {
        let mut rng = next_rng();
        let fam = match flavor {
            Flavor::TwoSided => analytic_two_sided(i, &mut rng),
            _ => analytic_super(i, &params, &mut rng),
        };
        let u = fam.sample(&lat)?;
        members.push(plain(format!("analytic-{i:02}"), Kind::Analytic, format!("{fam:?}"), u)?);
    }

    for i in 0..counts.negative {
        let (u, recipe) = match flavor {
            Flavor::Annulus => {
                let mut rng = next_rng();
                let inner = barrier_m.unwrap() * rng.gen_range(1.05..1.5);
                let f = c0 * rng.gen_range(4.0..8.0);
                solver_annulus(&lat, &params, inner, f, c0, hole, false, &mut rng)?
            }
            _ => {
                let fam = negative_control(i, &params);
                (fam.sample(&lat)?, format!("{fam:?}"))
            }
        };
        members.push(plain(format!("negative-{i:02}"), Kind::Negative, recipe, u)?);
    }

    Ok(Corpus { flavor, lattice: lat, params, c0, members, barrier_m })
}
