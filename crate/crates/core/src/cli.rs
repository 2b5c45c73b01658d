//! Command-line front end. [`main`] returns the process exit code: 0 when
//! every requested check passes, 1 when one fails, 2 for usage and file
//! errors.

use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::contact::{self, ContactTolerances, CuspParams};
use crate::covering::{self, MaskSet};
use crate::error::{Error, Result};
use crate::harness::{self, report, CorpusCache, ExperimentReport, EXPERIMENTS};
use crate::lattice::{gfn, Region};
use crate::{pucci, regularize};

#[derive(Parser, Debug)]
#[command(name = "cusp-lab", version, about = "Grid experiments for degenerate elliptic estimates")]
pub struct Cli {
    /// `default` or a TOML file overriding the built-in configuration.
    #[arg(long, global = true, default_value = "default")]
    pub config: String,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Nodes per side of the corpus lattices.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Also draw survival and oscillation plots as PNG.
    #[arg(long, global = true)]
    pub plots: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build and save the corpora of every experiment.
    Gen,
    /// Certify a grid function against the hypotheses of an experiment.
    Check {
        file: PathBuf,
        /// Experiment whose ellipticity parameters apply.
        #[arg(long, default_value = "measure_estimate")]
        experiment: String,
        /// Right-hand side level; defaults to `c0`.
        #[arg(long)]
        level: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        /// Check `M^+ >= -level` as well.
        #[arg(long)]
        two_sided: bool,
    },
    /// Inf-convolution of a grid function, optionally clamped at `2M`.
    Infconv {
        file: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        clamp: Option<f64>,
    },
    /// Cusp contact set of a grid function.
    Slide {
        file: PathBuf,
        /// Vertices are the nodes of `B_{1/4}` where `u` exceeds this value.
        #[arg(long, default_value_t = harness::M_MEASURE)]
        threshold: f64,
    },
    /// Ink-spots check of `E` inside `F`, both stored as masks.
    Cover {
        e: PathBuf,
        f: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
    /// Run one experiment.
    Experiment { name: String },
    /// Run every experiment.
    All,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Format { .. } | Error::Config(_) => Failure::Usage(e.to_string()),
            e => Failure::Check(e.to_string()),
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = Config::load(&cli.config)?;
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(grid) = cli.grid {
        cfg.grid = grid;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn say(cli: &Cli, line: &str) {
    if !cli.quiet {
        println!("{line}");
    }
}

fn stem(path: &Path) -> String {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    name.strip_suffix(".gfn").unwrap_or(&name).to_string()
}

fn read<T>(path: &Path, f: impl FnOnce(&Path) -> Result<T>) -> std::result::Result<T, Failure> {
    f(path).map_err(|e| match Failure::from(e) {
        Failure::Usage(m) => Failure::Usage(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn run(cli: &Cli) -> std::result::Result<bool, Failure> {
    let cfg = load_config(cli)?;
    let out = cfg.out.clone();
    match &cli.command {
        Command::Gen => {
            let mut cache = CorpusCache::default();
            for name in EXPERIMENTS {
                let corpus = cache.get(&cfg, name)?;
                corpus.save(&out.join("corpus").join(name))?;
                say(cli, &format!("{name}: {} members", corpus.members.len()));
            }
            Ok(true)
        }
        Command::Check { file, experiment, level, radius, two_sided } => {
            let u = read(file, |p| gfn::load_gfn(p))?;
            let params = harness::section_of(&cfg, experiment)?.params()?;
            let level = level.unwrap_or(cfg.c0);
            let region = Region::centered_ball(u.lattice().dim(), *radius);
            let rep = if *two_sided {
                pucci::check_two_sided(&u, level, &params, &region, cfg.certify_tol)?
            } else {
                pucci::check_supersolution(&u, level, &params, &region, cfg.certify_tol)?
            };
            std::fs::create_dir_all(&out).map_err(Error::from)?;
            let csv = format!("{}\n{}\n", pucci::HypothesisReport::CSV_HEADER, rep.csv_row());
            std::fs::write(out.join(format!("{}.check.csv", stem(file))), csv).map_err(Error::from)?;
            say(cli, &format!("{} {}", stem(file), if rep.pass { "certified" } else { "violates the hypothesis" }));
            Ok(rep.pass)
        }
        Command::Infconv { file, epsilon, clamp } => {
            let u = read(file, |p| gfn::load_gfn(p))?;
            let res = match clamp {
                Some(m) => regularize::clamp_above_and_convolve(&u, *m, *epsilon)?,
                None => regularize::inf_convolve(&u, *epsilon)?,
            };
            let h = u.lattice().spacing();
            let bound = 1.0 / epsilon + 4.0 * h / epsilon;
            let sc = regularize::semi_concavity_certificate(&res.smoothed, bound, 1e-9 * bound);
            let disp_ok = res.displacement_bound.is_none_or(|b| res.max_displacement <= b + h);
            std::fs::create_dir_all(&out).map_err(Error::from)?;
            res.save(&out, &format!("{}.infconv", stem(file)))?;
            say(
                cli,
                &format!(
                    "max displacement {:e}, worst second difference {:e} against {:e}",
                    res.max_displacement, sc.worst, bound
                ),
            );
            Ok(sc.pass && disp_ok)
        }
        Command::Slide { file, threshold } => {
            let u = read(file, |p| gfn::load_gfn(p))?;
            let d = u.lattice().dim();
            let cusp = CuspParams::default();
            let set = contact::build_contact_set(&u, &cusp, &Region::centered_ball(d, 0.25), &Region::centered_ball(d, 1.0), *threshold)?;
            let tol = ContactTolerances { gradient: cfg.measure_estimate.gradient_tol, ..ContactTolerances::default() };
            let inv = contact::check_invariants(&u, &set, &cusp, &tol)?;
            std::fs::create_dir_all(&out).map_err(Error::from)?;
            let f = std::fs::File::create(out.join(format!("{}.contact.csv", stem(file)))).map_err(Error::from)?;
            set.write_csv(std::io::BufWriter::new(f))?;
            say(
                cli,
                &format!(
                    "{} records, gradient ratio {:e}, hessian margin {:e}, invariants {}",
                    set.records.len(),
                    inv.gradient_ratio,
                    inv.hessian_margin,
                    if inv.all_ok() { "hold" } else { "fail" }
                ),
            );
            Ok(inv.all_ok())
        }
        Command::Cover { e, f, delta, samples } => {
            let open = |p: &Path| -> Result<MaskSet> { MaskSet::read(BufReader::new(std::fs::File::open(p)?)) };
            let e = read(e, open)?;
            let f = read(f, open)?;
            let candidates = covering::candidate_balls(e.lattice(), 4);
            let rep = covering::ink_spots_check(&e, &f, *delta, &candidates, *samples, cfg.seed)?;
            say(
                cli,
                &format!(
                    "|E| = {:e}, |F| = {:e}, hypotheses {}, conclusion {}",
                    rep.e_measure, rep.f_measure, rep.hypotheses_hold, rep.conclusion_holds
                ),
            );
            Ok(!rep.hypotheses_hold || rep.conclusion_holds)
        }
        Command::Experiment { name } => {
            if !EXPERIMENTS.contains(&name.as_str()) {
                return Err(Failure::Usage(format!("unknown experiment {name:?}; expected one of {}", EXPERIMENTS.join(", "))));
            }
            let rep = harness::run(name, &cfg, &mut CorpusCache::default())?;
            finish(cli, &out, &[rep])
        }
        Command::All => {
            let reports = harness::run_all(&cfg)?;
            finish(cli, &out, &reports)
        }
    }
}

fn finish(cli: &Cli, out: &Path, reports: &[ExperimentReport]) -> std::result::Result<bool, Failure> {
    for r in reports {
        r.write(out, cli.plots)?;
        say(cli, &r.summary_line());
    }
    report::write_summary(out, reports)?;
    Ok(reports.iter().all(ExperimentReport::pass))
}
