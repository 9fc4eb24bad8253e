//! Entropy, KL divergence and mutual information for finite alphabets and
//! isotropic Gaussian families. All quantities are in nats.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Probability vectors must sum to one within this tolerance.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// Largest `|V| * |X| * |V̂|` for which joint tables are enumerated.
pub const JOINT_ENUMERATION_LIMIT: usize = 10_000_000;

/// `p ln p` with the convention `0 ln 0 = 0`.
#[inline]
pub(crate) fn xlogx(p: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * p.ln()
    }
}

/// A probability distribution on `{0, .., k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Validates without renormalizing: a sum off by more than
    /// [`SUM_TOLERANCE`] is rejected.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty index set".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidDistribution(format!(
                    "weight {i} = {w} outside [0, 1]"
                )));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "weights sum to {sum:.17}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidDistribution("empty index set".into()));
        }
        Ok(Self(vec![1.0 / k as f64; k]))
    }

    pub fn point_mass(k: usize, at: usize) -> Result<Self> {
        if at >= k {
            return Err(domain(format!("point mass at {at} outside alphabet of size {k}")));
        }
        let mut w = vec![0.0; k];
        w[at] = 1.0;
        Ok(Self(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&w| w > 0.0).count()
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(p: ProbVector) -> Self {
        p.0
    }
}

/// Row-stochastic matrix, stored row-major. Row `i` is the conditional
/// distribution of the output given input `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl StochasticMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::InvalidDistribution("matrix has no rows".into()));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(n_rows * cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            let row = ProbVector::new(row)
                .map_err(|e| Error::InvalidDistribution(format!("row {i}: {e}")))?;
            data.extend_from_slice(row.as_slice());
        }
        Ok(Self {
            rows: n_rows,
            cols,
            data,
        })
    }

    /// Every row equal to `row`.
    pub fn constant(rows: usize, row: &ProbVector) -> Self {
        let mut data = Vec::with_capacity(rows * row.len());
        for _ in 0..rows {
            data.extend_from_slice(row.as_slice());
        }
        Self {
            rows,
            cols: row.len(),
            data,
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        Self {
            rows: k,
            cols: k,
            data,
        }
    }

    /// Deterministic map `i -> map[i]` as a 0/1 matrix with `cols` columns.
    pub fn deterministic(map: &[usize], cols: usize) -> Result<Self> {
        let mut data = vec![0.0; map.len() * cols];
        for (i, &j) in map.iter().enumerate() {
            if j >= cols {
                return Err(domain(format!("map sends {i} to {j}, outside 0..{cols}")));
            }
            data[i * cols + j] = 1.0;
        }
        Ok(Self {
            rows: map.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Exact description of `V -> X -> V̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovChainSpec {
    pub prior: ProbVector,
    pub channel: StochasticMatrix,
    pub decoder: StochasticMatrix,
}

impl MarkovChainSpec {
    pub fn new(prior: ProbVector, channel: StochasticMatrix, decoder: StochasticMatrix) -> Result<Self> {
        if prior.len() < 2 {
            return Err(domain("V alphabet needs at least two symbols"));
        }
        if channel.rows() != prior.len() {
            return Err(Error::DimensionMismatch {
                expected: prior.len(),
                got: channel.rows(),
            });
        }
        if decoder.rows() != channel.cols() {
            return Err(Error::DimensionMismatch {
                expected: channel.cols(),
                got: decoder.rows(),
            });
        }
        Ok(Self {
            prior,
            channel,
            decoder,
        })
    }

    pub fn v_size(&self) -> usize {
        self.prior.len()
    }

    pub fn x_size(&self) -> usize {
        self.channel.cols()
    }

    pub fn vhat_size(&self) -> usize {
        self.decoder.cols()
    }

    fn check_enumerable(&self) -> Result<()> {
        let cells = self.v_size() as f64 * self.x_size() as f64 * self.vhat_size() as f64;
        if cells > JOINT_ENUMERATION_LIMIT as f64 {
            return Err(Error::TooLarge {
                what: "joint table of (V, X, V̂)",
                needed: cells,
                limit: JOINT_ENUMERATION_LIMIT as f64,
                hint: "exact computation is reserved for oracle-sized chains",
            });
        }
        Ok(())
    }

    /// Joint law of `(V, V̂)` with `X` summed out, row-major `|V| x |V̂|`.
    pub fn joint_v_vhat(&self) -> Result<Vec<f64>> {
        self.check_enumerable()?;
        let (nv, nx, nh) = (self.v_size(), self.x_size(), self.vhat_size());
        let mut joint = vec![0.0; nv * nh];
        for v in 0..nv {
            let pv = self.prior.as_slice()[v];
            if pv == 0.0 {
                continue;
            }
            for x in 0..nx {
                let pvx = pv * self.channel.get(v, x);
                if pvx == 0.0 {
                    continue;
                }
                for (h, &q) in self.decoder.row(x).iter().enumerate() {
                    joint[v * nh + h] += pvx * q;
                }
            }
        }
        Ok(joint)
    }

    /// `I(V; V̂)`, for data-processing checks against `I(V; X)`.
    pub fn mutual_information_v_vhat(&self) -> Result<f64> {
        let joint = self.joint_v_vhat()?;
        Ok(mutual_information_from_joint(&joint, self.v_size(), self.vhat_size()))
    }
}

/// Member `N(mean, sigma2 * I)` of an isotropic Gaussian family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFamilyMember {
    pub mean: Vec<f64>,
    pub covariance_scale: f64,
}

impl GaussianFamilyMember {
    pub fn new(mean: Vec<f64>, covariance_scale: f64) -> Result<Self> {
        check_sigma2(covariance_scale)?;
        Ok(Self {
            mean,
            covariance_scale,
        })
    }

    pub fn kl_to(&self, other: &Self) -> Result<f64> {
        if self.covariance_scale != other.covariance_scale {
            return Err(domain("members of one family share their covariance scale"));
        }
        kl_gaussian_shared_cov(&self.mean, &other.mean, self.covariance_scale)
    }
}

fn check_sigma2(sigma2: f64) -> Result<()> {
    if sigma2 > 0.0 && sigma2.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("sigma2 must be positive and finite, got {sigma2}")))
    }
}

/// `h2(p) = -p ln p - (1-p) ln(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(domain(format!("binary entropy needs p in [0, 1], got {p}")));
    }
    Ok(-xlogx(p) - xlogx(1.0 - p))
}

pub fn entropy(p: &ProbVector) -> f64 {
    -compensated_sum(p.as_slice().iter().map(|&w| xlogx(w)))
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `H(V | V̂)` computed from the exact joint of `(V, V̂)`.
pub fn conditional_entropy(chain: &MarkovChainSpec) -> Result<f64> {
    let joint = chain.joint_v_vhat()?;
    let (nv, nh) = (chain.v_size(), chain.vhat_size());
    Ok(conditional_entropy_from_joint(&joint, nv, nh))
}

/// `H(A | B)` for a row-major joint table over `A x B`.
pub(crate) fn conditional_entropy_from_joint(joint: &[f64], na: usize, nb: usize) -> f64 {
    let mut marginal_b = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            marginal_b[b] += joint[a * nb + b];
        }
    }
    let mut h = 0.0;
    for a in 0..na {
        for b in 0..nb {
            let p = joint[a * nb + b];
            if p > 0.0 {
                h -= p * (p / marginal_b[b]).ln();
            }
        }
    }
    h.max(0.0)
}

pub(crate) fn mutual_information_from_joint(joint: &[f64], na: usize, nb: usize) -> f64 {
    let mut pa = vec![0.0; na];
    let mut pb = vec![0.0; nb];
    for a in 0..na {
        for b in 0..nb {
            let p = joint[a * nb + b];
            pa[a] += p;
            pb[b] += p;
        }
    }
    let mut mi = 0.0;
    for a in 0..na {
        for b in 0..nb {
            let p = joint[a * nb + b];
            if p > 0.0 {
                mi += p * (p / (pa[a] * pb[b])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// `I(V; X)` for `V ~ prior` observed through `channel`.
pub fn mutual_information_exact(prior: &ProbVector, channel: &StochasticMatrix) -> Result<f64> {
    if channel.rows() != prior.len() {
        return Err(Error::DimensionMismatch {
            expected: prior.len(),
            got: channel.rows(),
        });
    }
    let cells = prior.len() as f64 * channel.cols() as f64;
    if cells > JOINT_ENUMERATION_LIMIT as f64 {
        return Err(Error::TooLarge {
            what: "joint table of (V, X)",
            needed: cells,
            limit: JOINT_ENUMERATION_LIMIT as f64,
            hint: "exact computation is reserved for oracle-sized channels",
        });
    }
    let (nv, nx) = (prior.len(), channel.cols());
    let mut joint = vec![0.0; nv * nx];
    for v in 0..nv {
        let pv = prior.as_slice()[v];
        for x in 0..nx {
            joint[v * nx + x] = pv * channel.get(v, x);
        }
    }
    Ok(mutual_information_from_joint(&joint, nv, nx))
}

/// `H(V | X)` for `V ~ prior` observed through `channel`.
pub fn conditional_entropy_given_observation(
    prior: &ProbVector,
    channel: &StochasticMatrix,
) -> Result<f64> {
    Ok((entropy(prior) - mutual_information_exact(prior, channel)?).max(0.0))
}

/// Discrete `KL(p || q)`; infinite when `p` charges a point `q` does not.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let mut kl = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b == 0.0 {
                return Ok(f64::INFINITY);
            }
            kl += a * (a / b).ln();
        }
    }
    Ok(kl.max(0.0))
}

/// `KL(N(mu1, sigma2 I) || N(mu2, sigma2 I)) = |mu1 - mu2|^2 / (2 sigma2)`.
pub fn kl_gaussian_shared_cov(mu1: &[f64], mu2: &[f64], sigma2: f64) -> Result<f64> {
    if mu1.len() != mu2.len() {
        return Err(Error::DimensionMismatch {
            expected: mu1.len(),
            got: mu2.len(),
        });
    }
    check_sigma2(sigma2)?;
    let sq: f64 = mu1.iter().zip(mu2).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(sq / (2.0 * sigma2))
}

/// Upper bound on `I(V; X_1..X_n)` for `V` uniform on `means` and
/// `X_i ~ N(mean_V, sigma2 I)` i.i.d.:
/// `n / M^2 * sum_{v,w} KL(P_v || P_w)`.
///
/// The double sum is evaluated through
/// `1/M^2 sum |m_v - m_w|^2 = 2 (mean |m|^2 - |mean m|^2)`, which is linear in `M`.
pub fn mi_pairwise_kl_bound(means: &[Vec<f64>], sigma2: f64, n_samples: u64) -> Result<f64> {
    check_sigma2(sigma2)?;
    let Some(first) = means.first() else {
        return Err(domain("mean list is empty"));
    };
    if n_samples == 0 {
        return Err(domain("need at least one sample"));
    }
    let dim = first.len();
    let m = means.len() as f64;
    let mut centroid = vec![0.0; dim];
    let mut mean_sq = 0.0;
    for mu in means {
        if mu.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: mu.len(),
            });
        }
        for (c, &x) in centroid.iter_mut().zip(mu) {
            *c += x;
        }
        mean_sq += mu.iter().map(|x| x * x).sum::<f64>();
    }
    mean_sq /= m;
    let centroid_sq: f64 = centroid.iter().map(|c| (c / m) * (c / m)).sum();
    let avg_pair_sq = (2.0 * (mean_sq - centroid_sq)).max(0.0);
    Ok(n_samples as f64 * avg_pair_sq / (2.0 * sigma2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    // Reference values from 40-digit mpmath evaluations.
    const H2_QUARTER: f64 = 0.562_335_144_618_808_3;
    const H_HALF_QUARTER_QUARTER: f64 = 1.039_720_770_839_917_9;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn binary_entropy_values() {
        assert!(close(binary_entropy(0.5).unwrap(), LN_2, 1e-15));
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(close(binary_entropy(0.25).unwrap(), H2_QUARTER, 1e-15));
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.0 + 1e-9).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn entropy_values() {
        for k in [1usize, 2, 7, 1000, 1_000_000] {
            let h = entropy(&ProbVector::uniform(k).unwrap());
            assert!(close(h, (k as f64).ln(), 1e-12 * (k as f64).ln().max(1.0)), "k = {k}");
        }
        assert_eq!(entropy(&ProbVector::point_mass(5, 2).unwrap()), 0.0);
        let p = ProbVector::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!(close(entropy(&p), H_HALF_QUARTER_QUARTER, 1e-15));
    }

    #[test]
    fn prob_vector_rejects_instead_of_renormalizing() {
        assert!(ProbVector::new(vec![]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.5 + 1e-10]).is_err());
        assert!(ProbVector::new(vec![1.5, -0.5]).is_err());
        assert!(ProbVector::new(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn conditional_entropy_edge_cases() {
        let k = 4;
        let identity = MarkovChainSpec::new(
            ProbVector::uniform(k).unwrap(),
            StochasticMatrix::identity(k),
            StochasticMatrix::identity(k),
        )
        .unwrap();
        assert_eq!(conditional_entropy(&identity).unwrap(), 0.0);

        // V̂ ignores X.
        let row = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let blind = MarkovChainSpec::new(
            ProbVector::uniform(k).unwrap(),
            StochasticMatrix::identity(k),
            StochasticMatrix::constant(k, &row),
        )
        .unwrap();
        assert!(close(conditional_entropy(&blind).unwrap(), (k as f64).ln(), 1e-14));
    }

    #[test]
    fn conditional_entropy_matches_triple_sum() {
        let chain = MarkovChainSpec::new(
            ProbVector::new(vec![0.2, 0.5, 0.3]).unwrap(),
            StochasticMatrix::from_rows(vec![
                vec![0.6, 0.3, 0.1],
                vec![0.1, 0.8, 0.1],
                vec![0.25, 0.25, 0.5],
            ])
            .unwrap(),
            StochasticMatrix::from_rows(vec![
                vec![0.7, 0.2, 0.1],
                vec![0.05, 0.9, 0.05],
                vec![0.3, 0.3, 0.4],
            ])
            .unwrap(),
        )
        .unwrap();
        // Brute force over all (v, x, vhat) triples.
        let mut joint = [[0.0f64; 3]; 3];
        for v in 0..3 {
            for x in 0..3 {
                for h in 0..3 {
                    joint[v][h] +=
                        chain.prior.as_slice()[v] * chain.channel.get(v, x) * chain.decoder.get(x, h);
                }
            }
        }
        let mut oracle = 0.0;
        for h in 0..3 {
            let ph: f64 = (0..3).map(|v| joint[v][h]).sum();
            for v in 0..3 {
                oracle -= joint[v][h] * (joint[v][h] / ph).ln();
            }
        }
        assert!(close(conditional_entropy(&chain).unwrap(), oracle, 1e-14));
    }

    #[test]
    fn mutual_information_cases() {
        let row = ProbVector::new(vec![0.3, 0.7]).unwrap();
        let prior = ProbVector::new(vec![0.4, 0.6]).unwrap();
        let flat = StochasticMatrix::constant(2, &row);
        assert!(mutual_information_exact(&prior, &flat).unwrap().abs() < 1e-15);

        let k = 6;
        let mi = mutual_information_exact(&ProbVector::uniform(k).unwrap(), &StochasticMatrix::identity(k))
            .unwrap();
        assert!(close(mi, (k as f64).ln(), 1e-14));

        // 4 x 5 instance against a direct double sum.
        let prior = ProbVector::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let channel = StochasticMatrix::from_rows(vec![
            vec![0.1, 0.2, 0.3, 0.2, 0.2],
            vec![0.5, 0.1, 0.1, 0.2, 0.1],
            vec![0.05, 0.05, 0.3, 0.3, 0.3],
            vec![0.2, 0.2, 0.2, 0.2, 0.2],
        ])
        .unwrap();
        let mut px = [0.0; 5];
        for v in 0..4 {
            for x in 0..5 {
                px[x] += prior.as_slice()[v] * channel.get(v, x);
            }
        }
        let mut oracle = 0.0;
        for v in 0..4 {
            for x in 0..5 {
                let j = prior.as_slice()[v] * channel.get(v, x);
                oracle += j * (j / (prior.as_slice()[v] * px[x])).ln();
            }
        }
        assert!(close(mutual_information_exact(&prior, &channel).unwrap(), oracle, 1e-14));
        assert!(mutual_information_exact(&ProbVector::uniform(3).unwrap(), &channel).is_err());
    }

    #[test]
    fn gaussian_kl() {
        assert_eq!(kl_gaussian_shared_cov(&[1.0, 2.0], &[1.0, 2.0], 3.0).unwrap(), 0.0);
        assert!(close(kl_gaussian_shared_cov(&[1.0, 0.0], &[0.0, 1.0], 2.0).unwrap(), 0.5, 1e-15));
        let eps = 0.3;
        let v = [1.0, -1.0, 0.0];
        let w = [0.0, 1.0, 1.0];
        let mv: Vec<f64> = v.iter().map(|x| eps * x).collect();
        let mw: Vec<f64> = w.iter().map(|x| eps * x).collect();
        let expected = eps * eps * (1.0 + 4.0 + 1.0) / 2.0;
        assert!(close(kl_gaussian_shared_cov(&mv, &mw, 1.0).unwrap(), expected, 1e-15));
        assert!(kl_gaussian_shared_cov(&[1.0], &[1.0, 2.0], 1.0).is_err());
        assert!(kl_gaussian_shared_cov(&[1.0], &[2.0], 0.0).is_err());
        let a = GaussianFamilyMember::new(vec![0.0, 1.0], 2.0).unwrap();
        let b = GaussianFamilyMember::new(vec![1.0, 0.0], 2.0).unwrap();
        assert!(close(a.kl_to(&b).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn pairwise_kl_bound_cases() {
        assert_eq!(mi_pairwise_kl_bound(&[vec![3.0, 4.0]], 1.0, 10).unwrap(), 0.0);
        let eps = 0.7;
        let two = mi_pairwise_kl_bound(&[vec![eps], vec![-eps]], 1.0, 1).unwrap();
        assert!(close(two, eps * eps, 1e-15));
        assert!(mi_pairwise_kl_bound(&[], 1.0, 1).is_err());
        assert!(mi_pairwise_kl_bound(&[vec![1.0]], 1.0, 0).is_err());
    }

    #[test]
    fn pairwise_kl_bound_matches_double_sum() {
        let means = vec![
            vec![0.3, -1.0, 2.0],
            vec![1.0, 1.0, 0.0],
            vec![-0.5, 0.25, 0.0],
            vec![0.0, 0.0, 1.5],
        ];
        let sigma2 = 1.7;
        let n = 13;
        let mut total = 0.0;
        for a in &means {
            for b in &means {
                total += kl_gaussian_shared_cov(a, b, sigma2).unwrap();
            }
        }
        let oracle = n as f64 * total / (means.len() * means.len()) as f64;
        assert!(close(mi_pairwise_kl_bound(&means, sigma2, n).unwrap(), oracle, 1e-12));
    }
}
