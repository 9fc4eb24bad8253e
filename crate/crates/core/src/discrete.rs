//! Distance-based Fano inequalities on finite index sets.
//!
//! Tail events use the strict comparison `rho(V̂, V) > t`, neighborhoods use
//! `rho(v, v') <= t`. Ties at exactly `t` therefore count as successes.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::info::{binary_entropy, conditional_entropy_from_joint, MarkovChainSpec};

/// Pairwise evaluations allowed for exhaustive neighborhood counts and
/// symmetry validation.
pub const PAIR_ENUMERATION_LIMIT: f64 = 1e8;

/// Largest sparse sign set that is materialized point by point.
pub const SPARSE_SIGN_MATERIALIZE_LIMIT: f64 = 1e6;

type CustomRho = Arc<dyn Fn(&[i32], &[i32]) -> f64 + Send + Sync>;

/// The distance-like function of a [`DiscreteSpace`].
#[derive(Clone)]
pub enum Rho {
    /// 0 on the diagonal, 1 elsewhere.
    ZeroOne,
    /// Number of differing coordinates.
    Hamming,
    /// Explicit `n x n` row-major table indexed by point position.
    Table(Vec<f64>),
    Custom(CustomRho),
}

impl fmt::Debug for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rho::ZeroOne => f.write_str("ZeroOne"),
            Rho::Hamming => f.write_str("Hamming"),
            Rho::Table(v) => write!(f, "Table({} entries)", v.len()),
            Rho::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A finite point set with a symmetric real-valued `rho`.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    points: Vec<Vec<i32>>,
    rho: Rho,
}

impl DiscreteSpace {
    /// Builds a space, rejecting asymmetric `rho`. Table and custom functions
    /// are checked on every pair when that is within
    /// [`PAIR_ENUMERATION_LIMIT`], otherwise on a deterministic sample.
    pub fn new(points: Vec<Vec<i32>>, rho: Rho) -> Result<Self> {
        if points.len() < 2 {
            return Err(domain(format!("space needs at least 2 points, got {}", points.len())));
        }
        if let Rho::Table(values) = &rho {
            let n = points.len();
            if values.len() != n * n {
                return Err(Error::DimensionMismatch {
                    expected: n * n,
                    got: values.len(),
                });
            }
        }
        let space = Self { points, rho };
        if matches!(space.rho, Rho::Table(_) | Rho::Custom(_)) {
            space.validate_symmetry()?;
        }
        Ok(space)
    }

    pub fn zero_one(k: usize) -> Result<Self> {
        Self::new((0..k as i32).map(|i| vec![i]).collect(), Rho::ZeroOne)
    }

    /// Points `0..n` with `rho(i, j) = table[i * n + j]`.
    pub fn from_table(n: usize, table: Vec<f64>) -> Result<Self> {
        Self::new((0..n as i32).map(|i| vec![i]).collect(), Rho::Table(table))
    }

    /// The binary hypercube `{0,1}^d` under Hamming distance.
    pub fn hypercube(d: usize) -> Result<Self> {
        let points = (0..1u32 << d)
            .map(|mask| (0..d).map(|b| ((mask >> b) & 1) as i32).collect())
            .collect();
        Self::new(points, Rho::Hamming)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<i32>] {
        &self.points
    }

    pub fn rho_kind(&self) -> &Rho {
        &self.rho
    }

    /// `rho` between the points at positions `i` and `j`.
    #[inline]
    pub fn rho(&self, i: usize, j: usize) -> f64 {
        match &self.rho {
            Rho::ZeroOne => {
                if self.points[i] == self.points[j] {
                    0.0
                } else {
                    1.0
                }
            }
            Rho::Hamming => self.points[i]
                .iter()
                .zip(&self.points[j])
                .filter(|(a, b)| a != b)
                .count() as f64,
            Rho::Table(values) => values[i * self.points.len() + j],
            Rho::Custom(f) => f(&self.points[i], &self.points[j]),
        }
    }

    fn validate_symmetry(&self) -> Result<()> {
        let n = self.points.len();
        let check = |i: usize, j: usize| -> Result<()> {
            let (ab, ba) = (self.rho(i, j), self.rho(j, i));
            if ab == ba || (ab.is_nan() && ba.is_nan()) {
                Ok(())
            } else {
                Err(Error::AsymmetricDistance { a: i, b: j, ab, ba })
            }
        };
        if (n as f64) * (n as f64) <= PAIR_ENUMERATION_LIMIT {
            for i in 0..n {
                for j in (i + 1)..n {
                    check(i, j)?;
                }
            }
        } else {
            // Weyl-sequence sample of pairs.
            let samples = 1_000_000u64;
            let golden = 0x9e37_79b9_7f4a_7c15u64;
            for k in 0..samples {
                let i = (k.wrapping_mul(golden) % n as u64) as usize;
                let j = ((k + 1).wrapping_mul(golden.rotate_left(21)) % n as u64) as usize;
                check(i, j)?;
            }
        }
        Ok(())
    }

    /// Largest value of `rho` over all pairs.
    pub fn diameter(&self) -> Result<f64> {
        let n = self.len();
        check_pairs("diameter", n)?;
        Ok((0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| self.rho(i, j)).fold(f64::NEG_INFINITY, f64::max))
            .reduce(|| f64::NEG_INFINITY, f64::max))
    }

    /// Position of `point`, if present.
    pub fn index_of(&self, point: &[i32]) -> Option<usize> {
        self.points.iter().position(|p| p == point)
    }
}

fn check_pairs(what: &'static str, n: usize) -> Result<()> {
    let needed = n as f64 * n as f64;
    if needed > PAIR_ENUMERATION_LIMIT {
        return Err(Error::TooLarge {
            what,
            needed,
            limit: PAIR_ENUMERATION_LIMIT,
            hint: "use a structured formula such as sparse_sign_neighborhood_upper",
        });
    }
    Ok(())
}

/// Largest and smallest neighborhood sizes at radius `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodProfile {
    pub t: f64,
    pub n_max: u64,
    pub n_min: u64,
}

/// Exact `N_t^max` and `N_t^min` by enumerating all pairs.
pub fn neighborhood_sizes(space: &DiscreteSpace, t: f64) -> Result<NeighborhoodProfile> {
    neighborhood_sizes_with_limit(space, t, PAIR_ENUMERATION_LIMIT)
}

/// [`neighborhood_sizes`] with a caller-chosen pair budget.
pub fn neighborhood_sizes_with_limit(
    space: &DiscreteSpace,
    t: f64,
    max_pairs: f64,
) -> Result<NeighborhoodProfile> {
    let n = space.len();
    let needed = n as f64 * n as f64;
    if needed > max_pairs {
        return Err(Error::TooLarge {
            what: "neighborhood enumeration",
            needed,
            limit: max_pairs,
            hint: "use a structured formula such as sparse_sign_neighborhood_upper",
        });
    }
    let (n_min, n_max) = (0..n)
        .into_par_iter()
        .map(|i| {
            let c = (0..n).filter(|&j| space.rho(i, j) <= t).count() as u64;
            (c, c)
        })
        .reduce(|| (u64::MAX, 0), |a, b| (a.0.min(b.0), a.1.max(b.1)));
    Ok(NeighborhoodProfile { t, n_max, n_min })
}

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    match binomial(n, k) {
        Some(c) if c < (1u128 << 100) => (c as f64).ln(),
        _ => statrs::function::factorial::ln_binomial(n, k),
    }
}

/// `{v in {-1,0,1}^d : |v|_0 = s}` under Hamming distance, kept symbolic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseSignSet {
    pub d: u64,
    pub s: u64,
}

impl SparseSignSet {
    pub fn new(d: u64, s: u64) -> Result<Self> {
        if s == 0 || s > d {
            return Err(domain(format!("sparse sign set needs 1 <= s <= d, got d = {d}, s = {s}")));
        }
        Ok(Self { d, s })
    }

    /// `2^s C(d, s)` when it fits in `u128`.
    pub fn cardinality(&self) -> Option<u128> {
        binomial(self.d, self.s)?.checked_mul(1u128.checked_shl(self.s as u32)?)
    }

    pub fn ln_cardinality(&self) -> f64 {
        self.s as f64 * LN_2 + ln_binomial(self.d, self.s)
    }

    /// Number of points within Hamming distance `t` of any fixed point.
    ///
    /// A neighbor keeps `s - k` support coordinates, flips the sign of `m` of
    /// them and moves `k` coordinates off the support, giving Hamming distance
    /// `2k + m`. The set is transitive under signed permutations, so this is
    /// both `N_t^max` and `N_t^min`.
    pub fn neighborhood_count(&self, t: u64) -> f64 {
        let (d, s) = (self.d, self.s);
        let mut total = 0.0f64;
        for k in 0..=s.min(d - s) {
            if 2 * k > t {
                break;
            }
            let moves = binomial(s, k).unwrap_or(u128::MAX) as f64
                * binomial(d - s, k).map(|c| c as f64).unwrap_or_else(|| ln_binomial(d - s, k).exp())
                * 2f64.powi(k as i32);
            let flips: f64 = (0..=(t - 2 * k).min(s - k))
                .map(|m| binomial(s - k, m).unwrap_or(u128::MAX) as f64)
                .sum();
            total += moves * flips;
        }
        total
    }

    /// Smallest squared Euclidean distance `|v - w|^2` over pairs at Hamming
    /// distance greater than `t`, or `None` if no such pair exists.
    ///
    /// With `k` support moves and `m` sign flips the Hamming distance is
    /// `2k + m` and the squared distance is `2k + 4m`.
    pub fn min_sq_distance_beyond(&self, t: u64) -> Option<u64> {
        let (d, s) = (self.d, self.s);
        let mut best: Option<u64> = None;
        for k in 0..=s.min(d - s) {
            for m in 0..=(s - k) {
                if 2 * k + m > t && 2 * k + m > 0 {
                    let sq = 2 * k + 4 * m;
                    best = Some(best.map_or(sq, |b| b.min(sq)));
                }
            }
        }
        best
    }

    /// Every point, in lexicographic order of (support, signs).
    pub fn materialize(&self) -> Result<Vec<Vec<i32>>> {
        let card = self.cardinality().map(|c| c as f64).unwrap_or(f64::INFINITY);
        if card > SPARSE_SIGN_MATERIALIZE_LIMIT {
            return Err(Error::TooLarge {
                what: "sparse sign set materialization",
                needed: card,
                limit: SPARSE_SIGN_MATERIALIZE_LIMIT,
                hint: "use SparseSignSet's closed-form counts",
            });
        }
        let (d, s) = (self.d as usize, self.s as usize);
        let mut points = Vec::with_capacity(card as usize);
        let mut support: Vec<usize> = (0..s).collect();
        loop {
            for signs in 0..(1u32 << s) {
                let mut v = vec![0i32; d];
                for (b, &pos) in support.iter().enumerate() {
                    v[pos] = if (signs >> b) & 1 == 1 { -1 } else { 1 };
                }
                points.push(v);
            }
            // Next combination in lexicographic order.
            let mut i = s;
            while i > 0 && support[i - 1] == d - s + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            support[i - 1] += 1;
            for j in i..s {
                support[j] = support[j - 1] + 1;
            }
        }
        Ok(points)
    }
}

/// The sparse sign set as a materialized Hamming space.
pub fn sparse_sign_space(d: u64, s: u64) -> Result<DiscreteSpace> {
    let set = SparseSignSet::new(d, s)?;
    let points = set.materialize()?;
    if points.len() < 2 {
        return Err(domain("sparse sign set has fewer than two points"));
    }
    DiscreteSpace::new(points, Rho::Hamming)
}

/// Radius `floor(s/4)` and the count bound
/// `ceil(s/4) 2^floor(s/4) C(d, floor(s/4))` on the neighborhood size there,
/// together with the exact count it is meant to dominate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparseNeighborhoodBound {
    pub t: u64,
    pub n_max_upper: f64,
    pub n_max_exact: f64,
    /// `false` flags a counterexample to the count bound.
    pub holds: bool,
}

pub fn sparse_sign_neighborhood_upper(d: u64, s: u64) -> Result<SparseNeighborhoodBound> {
    let set = SparseSignSet::new(d, s)?;
    let t = s / 4;
    let n_max_upper = s.div_ceil(4) as f64
        * 2f64.powi(t as i32)
        * binomial(d, t).map(|c| c as f64).unwrap_or_else(|| ln_binomial(d, t).exp());
    // With s < 4 the radius is 0 and the count is exactly 1.
    let n_max_upper = n_max_upper.max(1.0);
    let n_max_exact = set.neighborhood_count(t);
    Ok(SparseNeighborhoodBound {
        t,
        n_max_upper,
        n_max_exact,
        holds: n_max_exact <= n_max_upper,
    })
}

/// A lower bound together with the ingredients that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    /// Clamped at 0; 0 as well when `valid` is false.
    pub value: f64,
    /// False when the formula is inapplicable (a denominator condition fails).
    pub valid: bool,
    pub mi_bound: Option<f64>,
    pub log_ratio: Option<f64>,
    pub t: Option<f64>,
    #[serde(default)]
    pub aux: BTreeMap<String, f64>,
}

impl BoundResult {
    pub(crate) fn new(value: f64, valid: bool) -> Self {
        Self {
            value: if valid { value.max(0.0) } else { 0.0 },
            valid,
            mi_bound: None,
            log_ratio: None,
            t: None,
            aux: BTreeMap::new(),
        }
    }
}

fn check_nonneg(name: &str, x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(domain(format!("{name} must be nonnegative, got {x}")))
    }
}

/// Tail bound for `V` uniform on a set of size `card`:
/// `P(rho(V̂, V) > t) >= 1 - (I(V; X) + ln 2) / ln(card / N_t^max)`.
///
/// Inapplicable unless `card - N_t^min > N_t^max`.
pub fn fano_tail_lower_bound(card: u64, profile: &NeighborhoodProfile, mi: f64) -> Result<BoundResult> {
    if card < 2 {
        return Err(domain(format!("cardinality must be at least 2, got {card}")));
    }
    check_nonneg("mutual information", mi)?;
    let (n_max, n_min) = (profile.n_max as f64, profile.n_min as f64);
    let log_ratio = (card as f64 / n_max).ln();
    let valid = profile.n_max >= 1 && (card as f64 - n_min) > n_max && log_ratio > 0.0;
    let value = 1.0 - (mi + LN_2) / log_ratio;
    let mut out = BoundResult::new(value, valid);
    out.mi_bound = Some(mi);
    out.log_ratio = Some(log_ratio);
    out.t = Some(profile.t);
    out.aux.insert("card".into(), card as f64);
    out.aux.insert("n_max".into(), n_max);
    out.aux.insert("n_min".into(), n_min);
    Ok(out)
}

/// Distribution-free form:
/// `P(rho(V̂, V) > t) >= (H(V|X) - ln N_t^max - ln 2) / ln((card - N_t^min) / N_t^max)`.
pub fn fano_conditional_form(hvx: f64, card: u64, profile: &NeighborhoodProfile) -> Result<BoundResult> {
    check_nonneg("conditional entropy", hvx)?;
    let (n_max, n_min) = (profile.n_max as f64, profile.n_min as f64);
    let denom = ((card as f64 - n_min) / n_max).ln();
    let valid = profile.n_max >= 1 && denom > 0.0 && denom.is_finite();
    let value = (hvx - n_max.ln() - LN_2) / denom;
    let mut out = BoundResult::new(value, valid);
    out.log_ratio = Some(denom);
    out.t = Some(profile.t);
    out.aux.insert("h_v_given_x".into(), hvx);
    out.aux.insert("card".into(), card as f64);
    out.aux.insert("n_max".into(), n_max);
    out.aux.insert("n_min".into(), n_min);
    Ok(out)
}

/// Both sides of the distance-based Fano inequality for an exact chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanoSides {
    /// `h2(P_t) + P_t ln((|V| - N_min) / N_max) + ln N_max`.
    pub lhs: f64,
    /// `H(V | V̂)`.
    pub rhs: f64,
    /// `P(rho(V̂, V) > t)`.
    pub p_t: f64,
    pub profile: NeighborhoodProfile,
}

impl FanoSides {
    pub fn slack(&self) -> f64 {
        self.lhs - self.rhs
    }
}

fn check_alphabets(chain: &MarkovChainSpec, space: &DiscreteSpace) -> Result<()> {
    if chain.v_size() != space.len() || chain.vhat_size() != space.len() {
        return Err(Error::AlphabetMismatch(format!(
            "space has {} points but chain has |V| = {}, |V̂| = {}",
            space.len(),
            chain.v_size(),
            chain.vhat_size()
        )));
    }
    Ok(())
}

/// `P(rho(V̂, V) > t)` from a `|V| x |V̂|` joint table.
pub fn tail_probability_from_joint(joint: &[f64], space: &DiscreteSpace, t: f64) -> f64 {
    let n = space.len();
    let mut p = 0.0;
    for v in 0..n {
        for h in 0..n {
            if space.rho(h, v) > t {
                p += joint[v * n + h];
            }
        }
    }
    p.clamp(0.0, 1.0)
}

/// Evaluates the inequality; the proof's indicator `Z = 1{rho(V̂, V) <= t}`
/// has `P(Z = 0) = P_t`, which is what the left side is built from.
pub fn fano_inequality_sides(chain: &MarkovChainSpec, space: &DiscreteSpace, t: f64) -> Result<FanoSides> {
    check_alphabets(chain, space)?;
    let joint = chain.joint_v_vhat()?;
    let n = space.len();
    let profile = neighborhood_sizes(space, t)?;
    let p_t = tail_probability_from_joint(&joint, space, t);
    let rhs = conditional_entropy_from_joint(&joint, n, n);
    let (n_max, n_min) = (profile.n_max as f64, profile.n_min as f64);
    let lhs = if profile.n_max == 0 {
        // Empty neighborhoods: every pair is a tail event, so P_t = 1 and the
        // proof's bound reduces to ln |V|.
        binary_entropy(p_t)? + (n as f64).ln()
    } else {
        let mut lhs = binary_entropy(p_t)? + n_max.ln();
        if p_t > 0.0 {
            lhs += p_t * ((n as f64 - n_min) / n_max).ln();
        }
        lhs
    };
    Ok(FanoSides {
        lhs,
        rhs,
        p_t,
        profile,
    })
}

/// Left side of the classical inequality, `h2(P_e) + P_e ln(|V| - 1)`.
pub fn classical_fano_lhs(chain: &MarkovChainSpec) -> Result<f64> {
    if chain.v_size() != chain.vhat_size() {
        return Err(Error::AlphabetMismatch("V and V̂ alphabets differ".into()));
    }
    let joint = chain.joint_v_vhat()?;
    let n = chain.v_size();
    let p_err: f64 = (0..n)
        .flat_map(|v| (0..n).filter(move |&h| h != v).map(move |h| (v, h)))
        .map(|(v, h)| joint[v * n + h])
        .sum::<f64>()
        .clamp(0.0, 1.0);
    let mut lhs = binary_entropy(p_err)?;
    if p_err > 0.0 {
        lhs += p_err * ((n - 1) as f64).ln();
    }
    Ok(lhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{ProbVector, StochasticMatrix};

    #[test]
    fn neighborhood_examples() {
        let p = neighborhood_sizes(&DiscreteSpace::zero_one(5).unwrap(), 0.0).unwrap();
        assert_eq!((p.n_max, p.n_min), (1, 1));

        let cube = DiscreteSpace::hypercube(2).unwrap();
        let p = neighborhood_sizes(&cube, 1.0).unwrap();
        assert_eq!((p.n_max, p.n_min), (3, 3));

        let sparse = sparse_sign_space(3, 1).unwrap();
        assert_eq!(sparse.len(), 6);
        let p = neighborhood_sizes(&sparse, 1.0).unwrap();
        assert_eq!((p.n_max, p.n_min), (2, 2));
    }

    #[test]
    fn neighborhood_enumeration_guard() {
        let space = DiscreteSpace::zero_one(20).unwrap();
        let err = neighborhood_sizes_with_limit(&space, 0.0, 100.0).unwrap_err();
        assert!(matches!(err, Error::TooLarge { .. }));
        assert!(err.to_string().contains("structured formula"));
    }

    #[test]
    fn asymmetric_table_rejected() {
        let err = DiscreteSpace::from_table(2, vec![0.0, 1.0, 2.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::AsymmetricDistance { .. }));
        assert!(DiscreteSpace::zero_one(1).is_err());
        assert!(DiscreteSpace::from_table(2, vec![0.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn sparse_sign_cardinalities() {
        assert_eq!(sparse_sign_space(4, 2).unwrap().len(), 24);
        assert_eq!(sparse_sign_space(3, 3).unwrap().len(), 8);
        let pts = sparse_sign_space(1, 1).unwrap();
        assert_eq!(pts.points(), &[vec![1], vec![-1]]);
        assert_eq!(SparseSignSet::new(32, 4).unwrap().cardinality(), Some(575_360));
        assert!(SparseSignSet::new(3, 0).is_err());
        assert!(SparseSignSet::new(3, 4).is_err());
        assert!(sparse_sign_space(64, 8).is_err());
    }

    #[test]
    fn sparse_neighborhood_upper_examples() {
        let b = sparse_sign_neighborhood_upper(8, 4).unwrap();
        assert_eq!((b.t, b.n_max_upper), (1, 16.0));
        assert!(b.holds);
        let b = sparse_sign_neighborhood_upper(5, 1).unwrap();
        assert_eq!((b.t, b.n_max_upper, b.n_max_exact), (0, 1.0, 1.0));
        let b = sparse_sign_neighborhood_upper(16, 8).unwrap();
        assert_eq!((b.t, b.n_max_upper), (2, 960.0));
        assert!(b.holds);
    }

    #[test]
    fn closed_form_counts_match_enumeration() {
        for d in 1..=6u64 {
            for s in 1..=d {
                let set = SparseSignSet::new(d, s).unwrap();
                let space = sparse_sign_space(d, s).unwrap();
                for t in 0..=(2 * s).min(d + s) {
                    let p = neighborhood_sizes(&space, t as f64).unwrap();
                    assert_eq!(p.n_max, p.n_min);
                    assert_eq!(p.n_max as f64, set.neighborhood_count(t), "d={d} s={s} t={t}");
                    // Smallest squared gap beyond radius t, by brute force.
                    let mut best: Option<u64> = None;
                    for (i, a) in space.points().iter().enumerate() {
                        for (j, b) in space.points().iter().enumerate() {
                            if space.rho(i, j) > t as f64 {
                                let sq: i32 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                                best = Some(best.map_or(sq as u64, |c| c.min(sq as u64)));
                            }
                        }
                    }
                    assert_eq!(best, set.min_sq_distance_beyond(t), "d={d} s={s} t={t}");
                }
            }
        }
    }

    #[test]
    fn tail_bound_examples() {
        let prof = NeighborhoodProfile { t: 1.0, n_max: 2, n_min: 2 };
        let r = fano_tail_lower_bound(6, &prof, 0.0).unwrap();
        // 1 - ln2/ln3, 40-digit reference.
        assert!((r.value - 0.369_070_246_428_542_56).abs() < 1e-15);
        assert!(r.valid);

        let r = fano_tail_lower_bound(6, &prof, 10.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.valid);

        let prof0 = NeighborhoodProfile { t: 0.0, n_max: 1, n_min: 1 };
        let r = fano_tail_lower_bound(2, &prof0, 0.0).unwrap();
        assert_eq!(r.value, 0.0);

        // card - n_min <= n_max makes the formula inapplicable.
        let wide = NeighborhoodProfile { t: 1.0, n_max: 3, n_min: 3 };
        assert!(!fano_tail_lower_bound(6, &wide, 0.0).unwrap().valid);
        assert!(fano_tail_lower_bound(1, &prof0, 0.0).is_err());
        assert!(fano_tail_lower_bound(4, &prof0, -1.0).is_err());
    }

    #[test]
    fn conditional_form_examples() {
        let prof = NeighborhoodProfile { t: 1.0, n_max: 2, n_min: 2 };
        let r = fano_conditional_form(2f64.ln() + LN_2, 6, &prof).unwrap();
        assert!(r.value.abs() < 1e-15 && r.valid);

        let r = fano_conditional_form(6f64.ln(), 6, &prof).unwrap();
        // ln(3/2) / ln 2, 40-digit reference.
        assert!((r.value - 0.584_962_500_721_156_2).abs() < 1e-15);
        let tail = fano_tail_lower_bound(6, &prof, 0.0).unwrap();
        assert!(r.value >= tail.value);

        let flat = NeighborhoodProfile { t: 1.0, n_max: 3, n_min: 3 };
        assert!(!fano_conditional_form(1.0, 6, &flat).unwrap().valid);
    }

    #[test]
    fn sides_identity_chain() {
        let k = 4;
        let chain = MarkovChainSpec::new(
            ProbVector::uniform(k).unwrap(),
            StochasticMatrix::identity(k),
            StochasticMatrix::identity(k),
        )
        .unwrap();
        let sides = fano_inequality_sides(&chain, &DiscreteSpace::zero_one(k).unwrap(), 0.0).unwrap();
        assert_eq!(sides.lhs, 0.0);
        assert_eq!(sides.rhs, 0.0);
        assert!(fano_inequality_sides(&chain, &DiscreteSpace::zero_one(3).unwrap(), 0.0).is_err());
    }
}
