//! Volume-based Fano bound for `V` uniform on a bounded region of `R^d`.
//!
//! The tail event here is `rho(V̂, V) >= t` (note `>=`), the continuum
//! counterpart of the discrete `>` event. `rho` need not be symmetric.

use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discrete::BoundResult;
use crate::error::{domain, Error, Result};
use crate::rng::{domain as streams, substream};

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Default cap on grid cells examined by [`grid_partition_counts`].
pub const DEFAULT_MAX_CELLS: u64 = 1 << 26;

type Membership = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;
type RhoFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type BallBox = Arc<dyn Fn(&[f64], f64) -> AxisBox + Send + Sync>;

/// Axis-aligned box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(domain("box needs finite lo < hi in every coordinate"));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(d: usize, lo: f64, hi: f64) -> Self {
        Self {
            lo: vec![lo; d],
            hi: vec![hi; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).all(|(a, b)| a < b) {
            Some(AxisBox { lo, hi })
        } else {
            None
        }
    }

    fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        for ((x, lo), hi) in out.iter_mut().zip(&self.lo).zip(&self.hi) {
            *x = lo + (hi - lo) * rng.random::<f64>();
        }
    }
}

/// Which `rho` built-in constructors use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L2,
    LInf,
}

impl Norm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Norm::L2 => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Norm::LInf => a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        }
    }
}

/// A bounded region with a membership test and a distance-like `rho`.
#[derive(Clone)]
pub struct ContinuumSpace {
    dim: usize,
    bounding_box: AxisBox,
    exact_volume: Option<f64>,
    surface_area: Option<f64>,
    membership: Membership,
    rho: RhoFn,
    ball_box: Option<BallBox>,
}

impl fmt::Debug for ContinuumSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuumSpace")
            .field("dim", &self.dim)
            .field("bounding_box", &self.bounding_box)
            .field("exact_volume", &self.exact_volume)
            .field("surface_area", &self.surface_area)
            .finish_non_exhaustive()
    }
}

impl ContinuumSpace {
    /// A general region. Callers vouch that the set and its `rho`-balls have
    /// finite surface area; there is no constructive test for it.
    pub fn new(
        bounding_box: AxisBox,
        membership: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
        rho: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim: bounding_box.dim(),
            bounding_box,
            exact_volume: None,
            surface_area: None,
            membership: Arc::new(membership),
            rho: Arc::new(rho),
            ball_box: None,
        }
    }

    pub fn with_exact_volume(mut self, volume: f64) -> Result<Self> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(domain(format!("volume must be positive and finite, got {volume}")));
        }
        self.exact_volume = Some(volume);
        Ok(self)
    }

    pub fn with_surface_area(mut self, area: f64) -> Self {
        self.surface_area = Some(area);
        self
    }

    /// Declares a box containing every `rho`-ball of radius `t`, which lets
    /// sampling concentrate on the ball instead of the whole region.
    pub fn with_ball_box(mut self, f: impl Fn(&[f64], f64) -> AxisBox + Send + Sync + 'static) -> Self {
        self.ball_box = Some(Arc::new(f));
        self
    }

    /// Centered Euclidean ball of radius `r` with `rho` induced by `norm`.
    pub fn l2_ball(d: usize, r: f64, norm: Norm) -> Result<Self> {
        if d == 0 || !(r > 0.0) {
            return Err(domain("ball needs d >= 1 and r > 0"));
        }
        let r2 = r * r;
        let space = Self::new(
            AxisBox::cube(d, -r, r),
            move |x| x.iter().map(|v| v * v).sum::<f64>() <= r2,
            move |a, b| norm.distance(a, b),
        )
        .with_exact_volume(l2_ball_volume(d, r))?
        .with_surface_area(l2_sphere_area(d, r))
        .with_ball_box(|c, t| AxisBox {
            lo: c.iter().map(|x| x - t).collect(),
            hi: c.iter().map(|x| x + t).collect(),
        });
        Ok(space)
    }

    /// The box itself as the region, `rho` induced by `norm`.
    pub fn axis_box(bx: AxisBox, norm: Norm) -> Result<Self> {
        let vol = bx.volume();
        let d = bx.dim();
        let faces: f64 = (0..d)
            .map(|i| {
                2.0 * (0..d)
                    .filter(|&j| j != i)
                    .map(|j| bx.hi[j] - bx.lo[j])
                    .product::<f64>()
            })
            .sum();
        let (lo, hi) = (bx.lo.clone(), bx.hi.clone());
        Self::new(
            bx,
            move |x| x.iter().zip(&lo).zip(&hi).all(|((v, a), b)| a <= v && v <= b),
            move |a, b| norm.distance(a, b),
        )
        .with_exact_volume(vol)
        .map(|s| {
            s.with_surface_area(faces).with_ball_box(|c, t| AxisBox {
                lo: c.iter().map(|x| x - t).collect(),
                hi: c.iter().map(|x| x + t).collect(),
            })
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounding_box(&self) -> &AxisBox {
        &self.bounding_box
    }

    pub fn exact_volume(&self) -> Option<f64> {
        self.exact_volume
    }

    pub fn surface_area(&self) -> Option<f64> {
        self.surface_area
    }

    #[inline]
    pub fn contains(&self, x: &[f64]) -> bool {
        (self.membership)(x)
    }

    #[inline]
    pub fn rho(&self, a: &[f64], b: &[f64]) -> f64 {
        (self.rho)(a, b)
    }

    /// Sampling box for the `rho`-ball of radius `t` around `center`,
    /// clipped to the bounding box.
    fn ball_sampling_box(&self, center: &[f64], t: f64) -> Option<AxisBox> {
        match &self.ball_box {
            Some(f) => f(center, t).intersect(&self.bounding_box),
            None => Some(self.bounding_box.clone()),
        }
    }
}

/// `Vol` of the Euclidean ball of radius `r` in `R^d`.
pub fn l2_ball_volume(d: usize, r: f64) -> f64 {
    let half = d as f64 / 2.0;
    (half * std::f64::consts::PI.ln() - statrs::function::gamma::ln_gamma(half + 1.0) + d as f64 * r.ln()).exp()
}

/// Surface area of the Euclidean sphere of radius `r` in `R^d`.
pub fn l2_sphere_area(d: usize, r: f64) -> f64 {
    d as f64 * l2_ball_volume(d, r) / r
}

/// `(r / t)^d`, the volume ratio of concentric Euclidean balls.
pub fn ball_volume_ratio_analytic(r: f64, t: f64, d: u32) -> Result<f64> {
    if !(t > 0.0) || t > r {
        return Err(domain(format!("ball ratio needs 0 < t <= r, got t = {t}, r = {r}")));
    }
    Ok((r / t).powi(d as i32))
}

/// Volume-ratio Fano bound for `V` uniform on a region:
/// `P(rho(V̂, V) >= t) >= 1 - (I(V; X) + ln 2) / log_ratio`.
pub fn continuum_fano_bound(log_ratio: f64, mi: f64) -> Result<BoundResult> {
    if !log_ratio.is_finite() {
        return Err(domain(format!("log ratio must be finite, got {log_ratio}")));
    }
    if !(mi >= 0.0) {
        return Err(domain(format!("mutual information must be nonnegative, got {mi}")));
    }
    let valid = log_ratio > 0.0;
    let mut out = BoundResult::new(1.0 - (mi + LN_2) / log_ratio, valid);
    out.mi_bound = Some(mi);
    out.log_ratio = Some(log_ratio);
    Ok(out)
}

/// `(Vol(A) - (2 eps)^d S, Vol(A) + (2 eps)^d S)` for a set of volume
/// `Vol(A)` and surface area `S`, the boundary-layer correction in its
/// published form.
///
/// The correction does not bound the layer for `d >= 2`: the unit square
/// grown by `[-0.1, 0.1]^2` has area 1.44, above the upper value 1.16. The
/// layer volume is of order `eps S`; see [`boundary_layer_bound`].
pub fn surface_volume_bounds(volume: f64, surface: f64, eps: f64, d: u32) -> Result<(f64, f64)> {
    if !(volume >= 0.0 && surface >= 0.0 && eps >= 0.0) {
        return Err(domain("volume, surface and eps must be nonnegative"));
    }
    let corr = (2.0 * eps).powi(d as i32) * surface;
    Ok((volume - corr, volume + corr))
}

/// `2 sqrt(d) eps S`: first-order volume of the layer within `eps` (sup norm)
/// of a boundary of area `S`, the envelope grid counts are checked against.
pub fn boundary_layer_bound(surface: f64, eps: f64, d: u32) -> f64 {
    2.0 * (d as f64).sqrt() * eps * surface
}

/// Sampling budget for [`mc_volume_ratio`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRatioOptions {
    /// Centers drawn uniformly from the region.
    pub centers: usize,
    /// Samples per volume estimate.
    pub points: usize,
    pub seed: u64,
    /// Known or suspected maximizers of the ball volume.
    pub declared_centers: Vec<Vec<f64>>,
    /// Samples per reproducible work unit.
    pub chunk_size: usize,
    /// Proposals allowed while drawing centers before giving up.
    pub max_center_proposals: usize,
}

impl Default for VolumeRatioOptions {
    fn default() -> Self {
        Self {
            centers: 16,
            points: 1_000_000,
            seed: 0,
            declared_centers: Vec::new(),
            chunk_size: 1 << 16,
            max_center_proposals: 1_000_000,
        }
    }
}

/// Where the supremum over centers came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupSource {
    Sampled,
    Declared,
}

/// Monte Carlo estimate of `Vol(V) / sup_v Vol(B_rho(t, v) ∩ V)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeRatioEstimate {
    pub ratio: f64,
    /// One-sided 99% limits from the delta method on `ln ratio`.
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    pub log_ratio: f64,
    pub log_ratio_se: f64,
    pub volume: f64,
    pub sup_ball_volume: f64,
    pub best_center: Vec<f64>,
    pub sup_source: SupSource,
    pub centers_evaluated: usize,
}

impl VolumeRatioEstimate {
    pub fn ci_contains(&self, value: f64) -> bool {
        self.ratio_lower <= value && value <= self.ratio_upper
    }
}

/// Hit count of `accept` over `points` uniform draws in `bx`, evaluated in
/// fixed-size chunks on independent substreams.
fn hit_count<F>(bx: &AxisBox, points: usize, chunk: usize, seed: u64, stream: u64, accept: F) -> u64
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = points.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed ^ stream.rotate_left(32), streams::VOLUME_POINTS, c as u64);
            let count = chunk.min(points - c * chunk);
            let mut x = vec![0.0; bx.dim()];
            let mut hits = 0u64;
            for _ in 0..count {
                bx.sample_into(&mut rng, &mut x);
                if accept(&x) {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// Estimates the volume ratio by rejection sampling.
///
/// `Vol(V)` is estimated inside the bounding box; each candidate center's
/// `Vol(B ∩ V)` is estimated inside its ball box. The supremum is the
/// largest estimate over sampled and declared centers, which can only
/// overstate the supremum on average and so errs toward a smaller ratio.
pub fn mc_volume_ratio(space: &ContinuumSpace, t: f64, opts: &VolumeRatioOptions) -> Result<VolumeRatioEstimate> {
    if opts.points == 0 || (opts.centers == 0 && opts.declared_centers.is_empty()) {
        return Err(domain("need at least one point and one center"));
    }
    let bbox = space.bounding_box();
    let n = opts.points as f64;

    let vol_hits = hit_count(bbox, opts.points, opts.chunk_size, opts.seed, 0, |x| space.contains(x));
    if vol_hits == 0 {
        return Err(Error::EstimationFailure(format!(
            "no sample of {} landed in the region",
            opts.points
        )));
    }
    let p_vol = vol_hits as f64 / n;
    let volume = p_vol * bbox.volume();

    let mut centers: Vec<(Vec<f64>, SupSource)> = opts
        .declared_centers
        .iter()
        .map(|c| (c.clone(), SupSource::Declared))
        .collect();
    if opts.centers > 0 {
        let mut rng = substream(opts.seed, streams::VOLUME_CENTERS, 0);
        let mut x = vec![0.0; space.dim()];
        let mut proposals = 0usize;
        let mut drawn = 0usize;
        while drawn < opts.centers {
            if proposals >= opts.max_center_proposals {
                return Err(Error::EstimationFailure(format!(
                    "drew only {drawn} of {} centers in {proposals} proposals",
                    opts.centers
                )));
            }
            proposals += 1;
            bbox.sample_into(&mut rng, &mut x);
            if space.contains(&x) {
                centers.push((x.clone(), SupSource::Sampled));
                drawn += 1;
            }
        }
    }
    for (c, _) in &centers {
        if c.len() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: c.len(),
            });
        }
    }

    let mut best: Option<(f64, f64, usize)> = None;
    for (i, (center, _)) in centers.iter().enumerate() {
        let Some(bx) = space.ball_sampling_box(center, t) else {
            continue;
        };
        let hits = hit_count(&bx, opts.points, opts.chunk_size, opts.seed, i as u64 + 1, |x| {
            space.contains(x) && space.rho(center, x) <= t
        });
        if hits == 0 {
            continue;
        }
        let p = hits as f64 / n;
        let vol = p * bx.volume();
        if best.is_none_or(|(v, _, _)| vol > v) {
            best = Some((vol, p, i));
        }
    }
    let Some((sup_ball_volume, p_ball, idx)) = best else {
        return Err(Error::EstimationFailure(
            "no sample landed in any ball around the candidate centers".into(),
        ));
    };

    let log_ratio = volume.ln() - sup_ball_volume.ln();
    let var = (1.0 - p_vol) / (n * p_vol) + (1.0 - p_ball) / (n * p_ball);
    let se = var.sqrt();
    Ok(VolumeRatioEstimate {
        ratio: log_ratio.exp(),
        ratio_lower: (log_ratio - Z_99 * se).exp(),
        ratio_upper: (log_ratio + Z_99 * se).exp(),
        log_ratio,
        log_ratio_se: se,
        volume,
        sup_ball_volume,
        best_center: centers[idx].0.clone(),
        sup_source: centers[idx].1,
        centers_evaluated: centers.len(),
    })
}

/// Cell counts of the dyadic grid of width `2^-level`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPartition {
    pub level: u32,
    pub cell_width: f64,
    /// Cells meeting the region in positive volume.
    pub cell_count: u64,
    /// Most cells touched by a `rho`-ball of radius `t` around a center.
    pub touched_count: u64,
    pub best_center: Vec<f64>,
}

impl GridPartition {
    /// `ln(|W| / N_t(W))`, the discrete analogue of the log volume ratio.
    pub fn log_ratio(&self) -> f64 {
        (self.cell_count as f64).ln() - (self.touched_count as f64).ln()
    }

    /// `eps^d |W|`.
    pub fn covered_volume(&self, d: usize) -> f64 {
        self.cell_width.powi(d as i32) * self.cell_count as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    pub max_cells: u64,
    /// Centers drawn uniformly from the region.
    pub centers: usize,
    pub declared_centers: Vec<Vec<f64>>,
    pub seed: u64,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            max_cells: DEFAULT_MAX_CELLS,
            centers: 8,
            declared_centers: Vec::new(),
            seed: 0,
        }
    }
}

/// Probe offsets inside a unit cell: a 4-per-axis interior lattice plus the
/// cell center. A cell counts as meeting a set when some probe lands in it.
fn probe_offsets(d: usize) -> Vec<Vec<f64>> {
    const AXIS: [f64; 4] = [0.125, 0.375, 0.625, 0.875];
    let mut out = Vec::with_capacity(4usize.pow(d as u32) + 1);
    for code in 0..4usize.pow(d as u32) {
        let mut c = code;
        let mut p = Vec::with_capacity(d);
        for _ in 0..d {
            p.push(AXIS[c % 4]);
            c /= 4;
        }
        out.push(p);
    }
    out.push(vec![0.5; d]);
    out
}

/// Integer cell ranges covering `bx` at width `w`.
fn cell_range(bx: &AxisBox, w: f64) -> Vec<(i64, i64)> {
    bx.lo
        .iter()
        .zip(&bx.hi)
        .map(|(lo, hi)| ((lo / w).floor() as i64, (hi / w).ceil() as i64))
        .collect()
}

/// Counts cells of `[w k, w (k+1))^d` for which `accept` holds at some probe.
fn count_cells<F>(ranges: &[(i64, i64)], w: f64, probes: &[Vec<f64>], accept: F) -> u64
where
    F: Fn(&[f64]) -> bool + Sync,
{
    let d = ranges.len();
    let (first_lo, first_hi) = ranges[0];
    (first_lo..first_hi)
        .into_par_iter()
        .map(|k0| {
            let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            idx[0] = k0;
            let mut x = vec![0.0; d];
            let mut count = 0u64;
            loop {
                let hit = probes.iter().any(|p| {
                    for j in 0..d {
                        x[j] = (idx[j] as f64 + p[j]) * w;
                    }
                    accept(&x)
                });
                if hit {
                    count += 1;
                }
                // Odometer over coordinates 1..d.
                let mut j = 1;
                loop {
                    if j >= d {
                        return count;
                    }
                    idx[j] += 1;
                    if idx[j] < ranges[j].1 {
                        break;
                    }
                    idx[j] = ranges[j].0;
                    j += 1;
                }
            }
        })
        .sum()
}

fn cells_in(ranges: &[(i64, i64)]) -> f64 {
    ranges.iter().map(|(a, b)| (b - a) as f64).product()
}

/// Grid partition counts at `level`: `|W^(n)|` and `N_t(W^(n))`.
///
/// Cells are `[eps k, eps (k+1))` products with `eps = 2^-level`. Whether a
/// cell meets a set in positive volume is decided by the probe lattice of
/// `4^d + 1` points; `N_t` is maximized over sampled and declared centers.
pub fn grid_partition_counts(space: &ContinuumSpace, t: f64, level: u32, opts: &GridOptions) -> Result<GridPartition> {
    let w = 2f64.powi(-(level as i32));
    let d = space.dim();
    let ranges = cell_range(space.bounding_box(), w);
    let needed = cells_in(&ranges);
    if needed > opts.max_cells as f64 {
        return Err(Error::TooLarge {
            what: "grid partition",
            needed,
            limit: opts.max_cells as f64,
            hint: "lower the level or raise max_cells",
        });
    }
    let probes = probe_offsets(d);
    let cell_count = count_cells(&ranges, w, &probes, |x| space.contains(x));
    if cell_count == 0 {
        return Err(Error::EstimationFailure("no grid cell meets the region".into()));
    }

    let mut centers = opts.declared_centers.clone();
    if opts.centers > 0 {
        let mut rng = substream(opts.seed, streams::GRID_CENTERS, level as u64);
        let mut x = vec![0.0; d];
        let mut tries = 0usize;
        while centers.len() < opts.declared_centers.len() + opts.centers {
            tries += 1;
            if tries > 1_000_000 {
                return Err(Error::EstimationFailure("could not draw grid centers".into()));
            }
            space.bounding_box().sample_into(&mut rng, &mut x);
            if space.contains(&x) {
                centers.push(x.clone());
            }
        }
    }
    if centers.is_empty() {
        return Err(domain("need at least one center"));
    }

    let mut best = (0u64, 0usize);
    for (i, c) in centers.iter().enumerate() {
        let bx = space.ball_sampling_box(c, t).unwrap_or_else(|| space.bounding_box().clone());
        // Widen by one cell so boundary cells are not missed.
        let widened = AxisBox {
            lo: bx.lo.iter().map(|v| v - w).collect(),
            hi: bx.hi.iter().map(|v| v + w).collect(),
        };
        let r = cell_range(&widened, w);
        if cells_in(&r) > opts.max_cells as f64 {
            return Err(Error::TooLarge {
                what: "grid neighborhood",
                needed: cells_in(&r),
                limit: opts.max_cells as f64,
                hint: "lower the level or raise max_cells",
            });
        }
        let touched = count_cells(&r, w, &probes, |x| space.contains(x) && space.rho(c, x) <= t);
        if touched > best.0 {
            best = (touched, i);
        }
    }
    if best.0 == 0 {
        return Err(Error::EstimationFailure("no center touches any cell".into()));
    }
    Ok(GridPartition {
        level,
        cell_width: w,
        cell_count,
        touched_count: best.0,
        best_center: centers[best.1].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_ratio() {
        assert_eq!(ball_volume_ratio_analytic(2.0, 1.0, 2).unwrap(), 4.0);
        assert_eq!(ball_volume_ratio_analytic(1.5, 1.5, 7).unwrap(), 1.0);
        for d in 1..12u32 {
            let r = ball_volume_ratio_analytic(0.6, 0.3, d).unwrap();
            assert!((r.ln() - d as f64 * LN_2).abs() < 1e-12);
        }
        assert!(ball_volume_ratio_analytic(1.0, 2.0, 2).is_err());
        assert!(ball_volume_ratio_analytic(1.0, 0.0, 2).is_err());
    }

    #[test]
    fn continuum_bound_values() {
        let b = continuum_fano_bound(2.0 * LN_2, 0.0).unwrap();
        assert!((b.value - 0.5).abs() < 1e-15 && b.valid);
        for d in 2..20 {
            let b = continuum_fano_bound(d as f64 * LN_2, 0.0).unwrap();
            assert!((b.value - (d - 1) as f64 / d as f64).abs() < 1e-15);
        }
        let b = continuum_fano_bound(3.0, 1e6).unwrap();
        assert_eq!(b.value, 0.0);
        assert!(b.valid);
        assert!(!continuum_fano_bound(0.0, 0.0).unwrap().valid);
        assert!(!continuum_fano_bound(-1.0, 0.0).unwrap().valid);
        assert!(continuum_fano_bound(f64::INFINITY, 0.0).is_err());
        assert!(continuum_fano_bound(1.0, -0.1).is_err());
    }

    #[test]
    fn surface_bounds() {
        assert_eq!(surface_volume_bounds(1.0, 4.0, 0.0, 2).unwrap(), (1.0, 1.0));
        let (lo, hi) = surface_volume_bounds(1.0, 4.0, 0.1, 2).unwrap();
        assert!((lo - 0.84).abs() < 1e-15 && (hi - 1.16).abs() < 1e-15);
        // The grown square is larger than the published upper value.
        assert!(1.2f64 * 1.2 > hi);
        assert!(1.2f64 * 1.2 <= 1.0 + boundary_layer_bound(4.0, 0.1, 2));
        let (_, a) = surface_volume_bounds(0.0, 1.0, 0.2, 3).unwrap();
        let (_, b) = surface_volume_bounds(0.0, 1.0, 0.1, 3).unwrap();
        assert!((a / b - 8.0).abs() < 1e-12);
        assert!(surface_volume_bounds(-1.0, 0.0, 0.0, 2).is_err());
    }

    #[test]
    fn ball_volumes() {
        assert!((l2_ball_volume(2, 1.0) - std::f64::consts::PI).abs() < 1e-14);
        assert!((l2_ball_volume(3, 2.0) - 4.0 / 3.0 * std::f64::consts::PI * 8.0).abs() < 1e-12);
        assert!((l2_sphere_area(2, 1.0) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn mc_ratio_square_linf_center() {
        let sq = ContinuumSpace::axis_box(AxisBox::cube(2, 0.0, 1.0), Norm::LInf).unwrap();
        let opts = VolumeRatioOptions {
            centers: 0,
            points: 200_000,
            seed: 3,
            declared_centers: vec![vec![0.5, 0.5]],
            ..Default::default()
        };
        let est = mc_volume_ratio(&sq, 0.5, &opts).unwrap();
        assert!(est.ci_contains(1.0), "{est:?}");
        assert_eq!(est.sup_source, SupSource::Declared);
    }

    #[test]
    fn mc_ratio_radius_beyond_diameter() {
        let ball = ContinuumSpace::l2_ball(3, 1.0, Norm::L2).unwrap();
        let opts = VolumeRatioOptions {
            centers: 4,
            points: 200_000,
            seed: 9,
            ..Default::default()
        };
        let est = mc_volume_ratio(&ball, 2.5, &opts).unwrap();
        assert!(est.ci_contains(1.0), "{est:?}");
    }

    #[test]
    fn mc_ratio_failure_and_determinism() {
        let empty = ContinuumSpace::new(AxisBox::cube(2, 0.0, 1.0), |_| false, |a, b| Norm::L2.distance(a, b));
        let opts = VolumeRatioOptions {
            centers: 0,
            points: 1000,
            declared_centers: vec![vec![0.5, 0.5]],
            ..Default::default()
        };
        assert!(matches!(mc_volume_ratio(&empty, 0.1, &opts), Err(Error::EstimationFailure(_))));

        let ball = ContinuumSpace::l2_ball(2, 1.0, Norm::L2).unwrap();
        let opts = VolumeRatioOptions {
            centers: 3,
            points: 50_000,
            seed: 42,
            chunk_size: 1000,
            ..Default::default()
        };
        let a = mc_volume_ratio(&ball, 0.5, &opts).unwrap();
        let b = mc_volume_ratio(&ball, 0.5, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_counts_unit_square() {
        let sq = ContinuumSpace::axis_box(AxisBox::cube(2, 0.0, 1.0), Norm::L2).unwrap();
        for level in 1..=6u32 {
            let opts = GridOptions {
                centers: 0,
                declared_centers: vec![vec![0.5, 0.5]],
                ..Default::default()
            };
            let g = grid_partition_counts(&sq, 0.25, level, &opts).unwrap();
            assert_eq!(g.cell_count, 4u64.pow(level));
            assert_eq!(g.cell_width, 2f64.powi(-(level as i32)));
        }
    }

    #[test]
    fn grid_memory_guard() {
        let sq = ContinuumSpace::axis_box(AxisBox::cube(2, 0.0, 1.0), Norm::L2).unwrap();
        let opts = GridOptions {
            max_cells: 100,
            centers: 1,
            ..Default::default()
        };
        assert!(matches!(
            grid_partition_counts(&sq, 0.1, 6, &opts),
            Err(Error::TooLarge { .. })
        ));
    }
}
