//! Node masks, greedy Vitali selection and the growing ink-spots lemma as
//! checks on discretized sets.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{gfn, Lattice, Region};
use crate::regularize::squared_distance_transform;

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn dilate(&self, k: f64) -> Ball {
        Ball { center: self.center.clone(), radius: k * self.radius }
    }

    pub fn region(&self) -> Region {
        Region::ball(self.center.clone(), self.radius)
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.region().contains(p)
    }

    pub fn disjoint_from(&self, other: &Ball) -> bool {
        dist(&self.center, &other.center) > self.radius + other.radius
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One bit per lattice node.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskSet {
    lattice: Lattice,
    bits: Vec<bool>,
    /// Built as the node discretization of a declared union of balls/boxes.
    pub open: bool,
}

impl MaskSet {
    pub fn new(lattice: Lattice, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!("{} bits for {} nodes", bits.len(), lattice.len())));
        }
        Ok(Self { lattice, bits, open: false })
    }

    pub fn empty(lattice: &Lattice) -> Self {
        Self { lattice: lattice.clone(), bits: vec![false; lattice.len()], open: true }
    }

    pub fn from_region(lattice: &Lattice, region: &Region) -> Self {
        let mut m = Self::empty(lattice);
        for n in lattice.nodes_in(region) {
            m.bits[n] = true;
        }
        m
    }

    pub fn from_balls(lattice: &Lattice, balls: &[Ball]) -> Self {
        let mut m = Self::empty(lattice);
        for b in balls {
            for n in lattice.nodes_in(&b.region()) {
                m.bits[n] = true;
            }
        }
        m
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, lin: usize) -> bool {
        self.bits[lin]
    }

    pub fn set(&mut self, lin: usize, v: bool) {
        self.bits[lin] = v;
        self.open = false;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.lattice.cell_volume()
    }

    fn same_lattice(&self, other: &MaskSet) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch("masks live on different lattices".into()));
        }
        Ok(())
    }

    pub fn is_subset(&self, other: &MaskSet) -> Result<bool> {
        self.same_lattice(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b))
    }

    pub fn union(&self, other: &MaskSet) -> Result<MaskSet> {
        self.same_lattice(other)?;
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect();
        Ok(MaskSet { lattice: self.lattice.clone(), bits, open: self.open && other.open })
    }

    pub fn intersection_count(&self, other: &MaskSet) -> Result<usize> {
        self.same_lattice(other)?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(&a, &b)| a && b).count())
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        gfn::write_mask(&self.lattice, &self.bits, w)
    }

    pub fn read(r: impl BufRead) -> Result<Self> {
        let (lattice, bits) = gfn::read_mask(r)?;
        Self::new(lattice, bits)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallCover {
    pub balls: Vec<Ball>,
    pub disjoint: bool,
    pub dilation_factor: f64,
}

/// Greedy selection by descending radius (ties by lexicographic center),
/// keeping a ball when it misses every ball already kept.
pub fn vitali_select(balls: &[Ball]) -> Result<BallCover> {
    if balls.is_empty() {
        return Err(Error::InvalidParams("empty ball family".into()));
    }
    if let Some(b) = balls.iter().find(|b| !(b.radius > 0.0)) {
        return Err(Error::InvalidParams(format!("non-positive radius {}", b.radius)));
    }
    let mut order: Vec<&Ball> = balls.iter().collect();
    order.sort_by(|a, b| {
        b.radius.total_cmp(&a.radius).then_with(|| {
            a.center
                .iter()
                .zip(&b.center)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let mut kept: Vec<Ball> = Vec::new();
    for b in order {
        if kept.iter().all(|k| k.disjoint_from(b)) {
            kept.push(b.clone());
        }
    }
    let disjoint = kept.iter().enumerate().all(|(i, a)| kept[i + 1..].iter().all(|b| a.disjoint_from(b)));
    Ok(BallCover { balls: kept, disjoint, dilation_factor: 5.0 })
}

/// Mask-level check: kept balls share no node and every input ball's nodes
/// lie in the union of the dilated kept balls.
pub fn verify_cover(lattice: &Lattice, inputs: &[Ball], cover: &BallCover) -> bool {
    let mut owner = vec![false; lattice.len()];
    for b in &cover.balls {
        for n in lattice.nodes_in(&b.region()) {
            if owner[n] {
                return false;
            }
            owner[n] = true;
        }
    }
    let dilated: Vec<Ball> = cover.balls.iter().map(|b| b.dilate(cover.dilation_factor)).collect();
    let big = MaskSet::from_balls(lattice, &dilated);
    inputs.iter().all(|b| lattice.nodes_in(&b.region()).iter().all(|&n| big.get(n)))
}

/// Row spans of a disk on a 2-d lattice, matching [`Region::contains`].
pub(crate) fn disk_rows(lat: &Lattice, center: &[f64], r: f64) -> Vec<(usize, usize, usize)> {
    let h = lat.spacing();
    let (o, shape) = (lat.origin(), lat.shape());
    let region = Region::ball(center.to_vec(), r);
    let mut rows = Vec::new();
    let i_lo = (((center[0] - r - o[0]) / h).floor().max(0.0)) as usize;
    let i_hi = ((((center[0] + r - o[0]) / h).ceil()) as usize).min(shape[0] - 1);
    for i in i_lo..=i_hi {
        let x = o[0] + i as f64 * h;
        let dy2 = r * r - (x - center[0]).powi(2);
        if dy2 < -1e-9 * r * r {
            continue;
        }
        let half = dy2.max(0.0).sqrt();
        let mut lo = (((center[1] - half - o[1]) / h).floor().max(0.0)) as usize;
        let mut hi = ((((center[1] + half - o[1]) / h).ceil()).max(0.0) as usize).min(shape[1] - 1);
        let inside = |j: usize| region.contains(&[x, o[1] + j as f64 * h]);
        while lo <= hi && !inside(lo) {
            lo += 1;
        }
        while hi >= lo && !inside(hi) {
            if hi == 0 {
                break;
            }
            hi -= 1;
        }
        if lo <= hi && inside(lo) {
            rows.push((i, lo, hi));
        }
    }
    rows
}

/// Row prefix sums of a 2-d mask for O(rows) disk counts.
pub(crate) struct RowPrefix {
    width: usize,
    sums: Vec<u32>,
}

impl RowPrefix {
    pub(crate) fn new(mask: &MaskSet) -> Self {
        let shape = mask.lattice.shape();
        let width = shape[1] + 1;
        let mut sums = vec![0u32; shape[0] * width];
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                sums[i * width + j + 1] = sums[i * width + j] + mask.bits[i * shape[1] + j] as u32;
            }
        }
        Self { width, sums }
    }

    pub(crate) fn count(&self, rows: &[(usize, usize, usize)]) -> u32 {
        rows.iter().map(|&(i, lo, hi)| self.sums[i * self.width + hi + 1] - self.sums[i * self.width + lo]).sum()
    }
}

fn span_len(rows: &[(usize, usize, usize)]) -> u32 {
    rows.iter().map(|&(_, lo, hi)| (hi - lo + 1) as u32).sum()
}

/// Candidate balls for the density hypothesis: centers on every
/// `stride`-th node inside `B_1`, radii `4h * sqrt(2)^k`, whole ball inside
/// `B_1`.
pub fn candidate_balls(lat: &Lattice, stride: usize) -> Vec<Ball> {
    let h = lat.spacing();
    let mut radii = Vec::new();
    let mut r = 4.0 * h;
    while r < 1.0 {
        radii.push(r);
        r *= std::f64::consts::SQRT_2;
    }
    let shape = lat.shape();
    let mut out = Vec::new();
    for i in (0..shape[0]).step_by(stride) {
        for j in (0..shape[1]).step_by(stride) {
            let c = lat.point(&[i, j]);
            let cn = (c[0] * c[0] + c[1] * c[1]).sqrt();
            for &r in &radii {
                if cn + r <= 1.0 {
                    out.push(Ball::new(c.clone(), r));
                }
            }
        }
    }
    out
}

/// `F = E ∪` every candidate ball whose `E`-density exceeds `1 - delta`.
/// Two-dimensional lattices only.
pub fn grow_ink_spots(e: &MaskSet, delta: f64, candidates: &[Ball]) -> Result<MaskSet> {
    let lat = e.lattice();
    if lat.dim() != 2 {
        return Err(Error::InvalidParams("ink-spot growth is implemented for d = 2".into()));
    }
    let shape = lat.shape();
    let prefix = RowPrefix::new(e);
    let mut diff = vec![0i32; shape[0] * (shape[1] + 1)];
    for b in candidates {
        let rows = disk_rows(lat, &b.center, b.radius);
        let total = span_len(&rows);
        if total == 0 {
            continue;
        }
        let inside = prefix.count(&rows);
        if inside as f64 > (1.0 - delta) * total as f64 {
            for &(i, lo, hi) in &rows {
                diff[i * (shape[1] + 1) + lo] += 1;
                diff[i * (shape[1] + 1) + hi + 1] -= 1;
            }
        }
    }
    let mut f = e.clone();
    for i in 0..shape[0] {
        let mut acc = 0;
        for j in 0..shape[1] {
            acc += diff[i * (shape[1] + 1) + j];
            if acc > 0 {
                f.bits[i * shape[1] + j] = true;
            }
        }
    }
    f.open = e.open;
    Ok(f)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InkSpotsReport {
    pub delta: f64,
    /// `1 / 5^d`.
    pub c: f64,
    pub e_measure: f64,
    pub f_measure: f64,
    pub b1_measure: f64,
    pub sampled_balls: usize,
    pub dense_balls: usize,
    /// Dense sampled balls not contained in `F`.
    pub density_violations: usize,
    /// `|E| <= (1 - delta) |B_1|`.
    pub small_enough: bool,
    pub hypotheses_hold: bool,
    /// `(1 - c delta) |F| - |E|`.
    pub margin: f64,
    /// `margin / |E|`, infinite for empty `E`.
    pub relative_margin: f64,
    pub conclusion_holds: bool,
}

/// Audits the two hypotheses on `samples` balls drawn (stratified by radius,
/// seeded) from `candidates`, and checks `|E| <= (1 - delta/5^d) |F|`.
pub fn ink_spots_check(e: &MaskSet, f: &MaskSet, delta: f64, candidates: &[Ball], samples: usize, seed: u64) -> Result<InkSpotsReport> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParams(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !e.is_subset(f)? {
        return Err(Error::SubsetViolation("E is not contained in F".into()));
    }
    let lat = e.lattice();
    let d = lat.dim();
    let b1 = MaskSet::from_region(lat, &Region::centered_ball(d, 1.0));
    if !f.is_subset(&b1)? {
        return Err(Error::SubsetViolation("F is not contained in B_1".into()));
    }
    let c = 1.0 / 5f64.powi(d as i32);
    let (em, fm, bm) = (e.measure(), f.measure(), b1.measure());

    let mut sampled = 0;
    let mut dense = 0;
    let mut violations = 0;
    if d == 2 && !candidates.is_empty() && samples > 0 {
        let pe = RowPrefix::new(e);
        let pf = RowPrefix::new(f);
        let mut radii: Vec<f64> = candidates.iter().map(|b| b.radius).collect();
        radii.sort_by(f64::total_cmp);
        radii.dedup();
        let strata: Vec<Vec<&Ball>> = radii.iter().map(|&r| candidates.iter().filter(|b| b.radius == r).collect()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..samples {
            let stratum = &strata[k % strata.len()];
            let b = stratum[rng.gen_range(0..stratum.len())];
            let rows = disk_rows(lat, &b.center, b.radius);
            let total = span_len(&rows);
            sampled += 1;
            if (pe.count(&rows) as f64) > (1.0 - delta) * total as f64 {
                dense += 1;
                if pf.count(&rows) != total {
                    violations += 1;
                }
            }
        }
    }
    let small_enough = em <= (1.0 - delta) * bm;
    let margin = (1.0 - c * delta) * fm - em;
    Ok(InkSpotsReport {
        delta,
        c,
        e_measure: em,
        f_measure: fm,
        b1_measure: bm,
        sampled_balls: sampled,
        dense_balls: dense,
        density_violations: violations,
        small_enough,
        hypotheses_hold: small_enough && violations == 0,
        margin,
        relative_margin: if em > 0.0 { margin / em } else { f64::INFINITY },
        conclusion_holds: margin >= 0.0,
    })
}

/// Random union of balls inside `B_1` with `|E| <= (1 - delta) |B_1|`.
pub fn random_ink_set(lat: &Lattice, delta: f64, rng: &mut impl Rng) -> MaskSet {
    let b1 = MaskSet::from_region(lat, &Region::centered_ball(lat.dim(), 1.0)).measure();
    loop {
        let k = rng.gen_range(3..40);
        let balls: Vec<Ball> = (0..k)
            .map(|_| {
                let r: f64 = rng.gen_range(0.03..0.3);
                let reach = 1.0 - r;
                let (t, s): (f64, f64) = (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.0f64..1.0).sqrt() * reach);
                Ball::new(vec![s * t.cos(), s * t.sin()], r)
            })
            .collect();
        let e = MaskSet::from_balls(lat, &balls);
        if e.measure() <= (1.0 - delta) * b1 {
            return e;
        }
    }
}

/// Maximal balls inside a mask, answered from an exact distance transform
/// of the complement.
pub struct MaximalBalls<'a> {
    mask: &'a MaskSet,
    /// Distance from each node to the nearest node outside the mask (or
    /// outside the lattice).
    clearance: Vec<f64>,
}

impl<'a> MaximalBalls<'a> {
    pub fn new(mask: &'a MaskSet) -> Self {
        let lat = mask.lattice();
        let outside: Vec<bool> = mask.bits.iter().map(|&b| !b).collect();
        let edt = squared_distance_transform(lat, &outside);
        let h = lat.spacing();
        let clearance = edt
            .iter()
            .enumerate()
            .map(|(n, &d2)| {
                let idx = lat.multi(n);
                let edge = idx.iter().zip(lat.shape()).map(|(&i, &s)| (i.min(s - 1 - i) + 1) as f64 * h).fold(f64::INFINITY, f64::min);
                d2.sqrt().min(edge)
            })
            .collect();
        Self { mask, clearance }
    }

    /// Largest ball with radius in `h/2 + k h` containing node `x` and no
    /// node outside the mask. Ties go to the lexicographically first center.
    pub fn at(&self, x: &[usize]) -> Result<Ball> {
        let lat = self.mask.lattice();
        if !lat.contains_index(x) || !self.mask.get(lat.linear(x)) {
            return Err(Error::NotInSet(x.to_vec()));
        }
        let h = lat.spacing();
        let px = lat.point(x);
        let mut best: Option<(f64, usize)> = None;
        for (n, &cl) in self.clearance.iter().enumerate() {
            if !self.mask.bits[n] {
                continue;
            }
            let dx = dist(&lat.point_linear(n), &px);
            if dx >= cl {
                continue;
            }
            // largest h/2 + k h strictly below the clearance and >= dx
            let k = ((cl - 0.5 * h) / h).ceil() - 1.0;
            if k < 0.0 {
                continue;
            }
            let r = 0.5 * h + k * h;
            if r + 1e-12 * h < dx {
                continue;
            }
            if best.is_none_or(|(br, _)| r > br) {
                best = Some((r, n));
            }
        }
        let (r, n) = best.unwrap_or((0.5 * h, lat.linear(x)));
        Ok(Ball::new(lat.point_linear(n), r))
    }
}

/// Convenience wrapper around [`MaximalBalls`] for a single query.
pub fn maximal_ball_at(x: &[usize], f: &MaskSet) -> Result<Ball> {
    MaximalBalls::new(f).at(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Lattice {
        let h = 2.0 / (n - 1) as f64;
        Lattice::new(vec![n, n], vec![-1.0, -1.0], h).unwrap()
    }

    #[test]
    fn vitali_examples() {
        let one = vec![Ball::new(vec![0.2, 0.1], 0.3)];
        assert_eq!(vitali_select(&one).unwrap().balls, one);
        let pair = vec![Ball::new(vec![1.5], 1.0), Ball::new(vec![0.0], 1.0)];
        let cover = vitali_select(&pair).unwrap();
        assert_eq!(cover.balls, vec![Ball::new(vec![0.0], 1.0)]);
        // 5 B(0,1) = B(0,5) covers [0.5, 2.5]
        let big = cover.balls[0].dilate(5.0);
        assert!(big.center[0] - big.radius <= 0.5 && 2.5 <= big.center[0] + big.radius);
        assert!(vitali_select(&[]).is_err());
        assert!(vitali_select(&[Ball::new(vec![0.0], 0.0)]).is_err());
    }

    #[test]
    fn vitali_random_families() {
        let lat = grid(201);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let balls: Vec<Ball> = (0..200)
                .map(|_| Ball::new(vec![rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)], rng.gen_range(0.01..0.2)))
                .collect();
            let cover = vitali_select(&balls).unwrap();
            assert!(cover.disjoint);
            assert!(verify_cover(&lat, &balls, &cover));
            // super-additivity on an arbitrary mask
            let x = MaskSet::from_region(&lat, &Region::Box { lo: vec![-0.5, -0.9], hi: vec![0.7, 0.3] });
            let sum: usize = cover.balls.iter().map(|b| MaskSet::from_balls(&lat, &[b.clone()]).intersection_count(&x).unwrap()).sum();
            assert!(sum <= x.count());
        }
    }

    #[test]
    fn disk_rows_match_region() {
        let lat = grid(101);
        for (c, r) in [([0.0, 0.0], 0.5), ([0.13, -0.41], 0.2), ([0.9, 0.9], 0.3), ([0.0, 0.02], 0.04)] {
            let rows = disk_rows(&lat, &c, r);
            let direct = lat.nodes_in(&Region::ball(c.to_vec(), r)).len() as u32;
            assert_eq!(span_len(&rows), direct, "{c:?} {r}");
        }
    }

    #[test]
    fn empty_e_has_infinite_margin() {
        let lat = grid(65);
        let e = MaskSet::empty(&lat);
        let f = MaskSet::from_region(&lat, &Region::centered_ball(2, 0.5));
        let rep = ink_spots_check(&e, &f, 0.2, &candidate_balls(&lat, 4), 100, 1).unwrap();
        assert!(rep.conclusion_holds && rep.relative_margin.is_infinite());
        assert!(rep.hypotheses_hold);
    }

    #[test]
    fn shrunken_ball_volume_algebra() {
        let lat = grid(129);
        let f = MaskSet::from_region(&lat, &Region::centered_ball(2, 1.0));
        for (s, delta) in [(0.2, 0.3), (0.1, 0.15), (0.3, 0.5)] {
            let e = MaskSet::from_region(&lat, &Region::centered_ball(2, 1.0 - s));
            let rep = ink_spots_check(&e, &f, delta, &candidate_balls(&lat, 4), 200, 2).unwrap();
            let c: f64 = 1.0 / 25.0;
            assert!((1.0 - s) * (1.0 - s) <= 1.0 - delta);
            assert_eq!(rep.density_violations, 0);
            assert_eq!(rep.conclusion_holds, (1.0f64 - s).powi(2) <= 1.0 - c * delta);
            assert!(rep.conclusion_holds);
        }
    }

    #[test]
    fn subset_violation() {
        let lat = grid(33);
        let e = MaskSet::from_region(&lat, &Region::centered_ball(2, 0.5));
        let f = MaskSet::from_region(&lat, &Region::centered_ball(2, 0.3));
        assert!(matches!(ink_spots_check(&e, &f, 0.1, &[], 0, 0), Err(Error::SubsetViolation(_))));
    }

    #[test]
    fn grown_sets_satisfy_lemma() {
        let lat = grid(96);
        let cands = candidate_balls(&lat, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for delta in [0.1, 0.2, 0.4] {
            for _ in 0..5 {
                let e = random_ink_set(&lat, delta, &mut rng);
                let f = grow_ink_spots(&e, delta, &cands).unwrap();
                let rep = ink_spots_check(&e, &f, delta, &cands, 400, 3).unwrap();
                assert!(rep.hypotheses_hold, "{rep:?}");
                assert!(rep.conclusion_holds, "{rep:?}");
            }
        }
    }

    #[test]
    fn maximal_ball_examples() {
        let lat = grid(101);
        let h = lat.spacing();
        let disk = MaskSet::from_region(&lat, &Region::centered_ball(2, 0.5));
        let o = lat.nearest(&[0.0, 0.0]).unwrap();
        let b = maximal_ball_at(&o, &disk).unwrap();
        assert!(b.radius >= 0.5 - h && b.radius <= 0.5 + h, "{b:?}");
        let mut single = MaskSet::empty(&lat);
        let n = lat.linear(&o);
        single.set(n, true);
        let b = maximal_ball_at(&o, &single).unwrap();
        assert_eq!(b.radius, 0.5 * h);
        assert_eq!(b.center, lat.point(&o));
        let outside = lat.nearest(&[0.9, 0.0]).unwrap();
        assert!(matches!(maximal_ball_at(&outside, &disk), Err(Error::NotInSet(_))));
    }

    #[test]
    fn maximal_ball_is_inside_and_large() {
        let lat = grid(81);
        let h = lat.spacing();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_ink_set(&lat, 0.1, &mut rng);
        let mb = MaximalBalls::new(&f);
        let outside: Vec<bool> = f.bits().iter().map(|&b| !b).collect();
        let edt = squared_distance_transform(&lat, &outside);
        for n in (0..lat.len()).filter(|&n| f.get(n)).step_by(53) {
            let x = lat.multi(n);
            let b = mb.at(&x).unwrap();
            assert!(b.contains(&lat.point(&x)));
            assert!(lat.nodes_in(&b.region()).iter().all(|&m| f.get(m)));
            assert!(b.radius >= edt[n].sqrt().min(1.0) - h - 1e-12);
        }
    }

    #[test]
    fn mask_round_trip() {
        let lat = grid(33);
        let m = MaskSet::from_region(&lat, &Region::centered_ball(2, 0.6));
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = MaskSet::read(&buf[..]).unwrap();
        assert_eq!(back.bits(), m.bits());
        assert_eq!(back.lattice(), m.lattice());
    }
}
