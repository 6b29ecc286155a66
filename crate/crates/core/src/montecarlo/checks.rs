//! Inequality checkers. Each returns both sides so that a failing check
//! can be reported with its numbers.

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::symmetric::elementary_symmetric;
use super::{kth_largest, kth_smallest, simulate};
use crate::distributions::DistributionModel;
use crate::error::{Error, Result};

/// Monte Carlo checks allow this many binomial standard errors.
pub const MC_SIGMA_MARGIN: f64 = 4.0;
/// Largest vector length accepted by the enumeration checkers.
pub const MAX_ENUMERATION_LEN: usize = 22;
const REL_SLACK: f64 = 1e-12;

fn exact(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::Domain(format!("{v} is not a finite number")))
}

fn nonneg(a: &[f64]) -> Result<()> {
    if let Some(i) = a.iter().position(|v| !(*v >= 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!(
            "entry {} must be nonnegative, got {}",
            i + 1,
            a[i]
        )));
    }
    Ok(())
}

fn positive_weights(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Domain("weights must be nonempty".into()));
    }
    if let Some(i) = x.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Order {
            index: i + 1,
            message: format!("weight {} is not a positive finite number", x[i]),
        });
    }
    Ok(())
}

fn binomial_se(p: f64, reps: usize) -> f64 {
    (p * (1.0 - p) / reps as f64).sqrt()
}

/// `P{|ξ| ≤ t}` without cancellation for small `t`.
fn small_ball(model: &DistributionModel, t: f64) -> f64 {
    -(-model.neg_log_survival(t)).exp_m1()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgMeanCheck {
    /// `(e/k) Σ a_i`.
    pub a: f64,
    /// `Σ_{l≥k} e_l(a)`, computed exactly and rounded once.
    pub lhs: f64,
    /// `a^k / ((1 − a) √(2πk))`.
    pub rhs: f64,
    pub holds: bool,
}

pub fn check_agmean(a: &[f64], k: usize) -> Result<AgMeanCheck> {
    nonneg(a)?;
    let n = a.len();
    if n > MAX_ENUMERATION_LEN {
        return Err(Error::Range(format!(
            "need n <= {MAX_ENUMERATION_LEN}, got n = {n}"
        )));
    }
    if k < 1 || k > n {
        return Err(Error::Range(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let sum: f64 = a.iter().sum();
    let am = std::f64::consts::E / k as f64 * sum;
    if !(am > 0.0 && am < 1.0) {
        return Err(Error::Domain(format!(
            "0 < a = (e/k)·Σa_i < 1 fails: a = {am}"
        )));
    }
    let rat: Vec<BigRational> = a.iter().map(|&v| exact(v)).collect::<Result<_>>()?;
    let e = elementary_symmetric(&rat);
    let tail = e[k..]
        .iter()
        .fold(BigRational::from_integer(0.into()), |acc, v| acc + v);
    let lhs = tail.to_f64().unwrap_or(f64::NAN);
    let rhs = am.powi(k as i32) / ((1.0 - am) * (2.0 * std::f64::consts::PI * k as f64).sqrt());
    Ok(AgMeanCheck {
        a: am,
        lhs,
        rhs,
        holds: lhs < rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HlpCheck {
    /// `e_j(a)`.
    pub lhs: f64,
    /// `C(m, j) (Σ a_i / m)^j`.
    pub middle: f64,
    /// `(Σ a_i)^j / j!`.
    pub rhs: f64,
    pub holds: bool,
}

pub fn check_hlp(a: &[f64], j: usize) -> Result<HlpCheck> {
    nonneg(a)?;
    let m = a.len();
    if m == 0 || m > MAX_ENUMERATION_LEN {
        return Err(Error::Range(format!(
            "need 1 <= m <= {MAX_ENUMERATION_LEN}, got m = {m}"
        )));
    }
    if j > m {
        return Err(Error::Range(format!("need j <= m, got j = {j}, m = {m}")));
    }
    let rat: Vec<BigRational> = a.iter().map(|&v| exact(v)).collect::<Result<_>>()?;
    let lhs = elementary_symmetric(&rat)[j].to_f64().unwrap_or(f64::NAN);
    let sum: f64 = a.iter().sum();
    let mut binom = 1.0;
    let mut fact = 1.0;
    for i in 0..j {
        binom = binom * (m - i) as f64 / (i + 1) as f64;
        fact *= (i + 1) as f64;
    }
    let middle = binom * (sum / m as f64).powi(j as i32);
    let rhs = sum.powi(j as i32) / fact;
    Ok(HlpCheck {
        lhs,
        middle,
        rhs,
        holds: lhs <= middle * (1.0 + REL_SLACK) && middle <= rhs * (1.0 + REL_SLACK),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimclCheck {
    /// `k-max |v_i|` over all entries.
    pub lhs: f64,
    /// `j-min |v_i|` over the first `k+j−1` plus `max |v_i|` over the rest.
    pub rhs: f64,
    pub holds: bool,
}

pub fn check_simcl(values: &[f64], k: usize, j: usize) -> Result<SimclCheck> {
    let n = values.len();
    if k < 1 || j < 1 || k + j > n {
        return Err(Error::Range(format!(
            "need k, j >= 1 and j <= n − k, got k = {k}, j = {j}, n = {n}"
        )));
    }
    let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let split = k + j - 1;
    let rest_max = abs[split..].iter().copied().fold(0.0, f64::max);
    let jmin = kth_smallest(&mut abs[..split], j);
    let mut all: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let lhs = kth_largest(&mut all, k);
    let rhs = jmin + rest_max;
    Ok(SimclCheck {
        lhs,
        rhs,
        holds: lhs <= rhs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinProductCheck {
    /// Empirical `P{min |x_i ξ_i| > t}`.
    pub frequency: f64,
    /// `Π F(t/x_i)`.
    pub product: f64,
    /// Binomial standard error at `product`.
    pub std_error: f64,
    /// Empirical `P{min |x_i ξ_i| ≤ t}`.
    pub union_frequency: f64,
    /// `Σ G(t/x_i)`.
    pub union_bound: f64,
    pub product_holds: bool,
    pub union_holds: bool,
    pub holds: bool,
}

pub fn check_min_product(
    x: &[f64],
    model: &DistributionModel,
    t: f64,
    replications: usize,
    seed: u64,
) -> Result<MinProductCheck> {
    positive_weights(x)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be positive, got {t}")));
    }
    let moments = simulate(x, model, replications, seed, 1, |v, out| {
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        out[0] = if min > t { 1.0 } else { 0.0 };
    });
    let frequency = moments[0].mean;
    let product = (-x
        .iter()
        .map(|xi| model.neg_log_survival(t / xi))
        .sum::<f64>())
    .exp();
    let union_bound: f64 = x.iter().map(|xi| small_ball(model, t / xi)).sum();
    let std_error = binomial_se(product, replications);
    // Half a replication of slack covers the degenerate zero-variance cases.
    let slack = MC_SIGMA_MARGIN * std_error + 0.5 / replications as f64;
    let union_frequency = 1.0 - frequency;
    let union_se = binomial_se(union_bound.min(1.0), replications);
    let product_holds = (frequency - product).abs() <= slack;
    let union_holds =
        union_frequency <= union_bound + MC_SIGMA_MARGIN * union_se + 0.5 / replications as f64;
    Ok(MinProductCheck {
        frequency,
        product,
        std_error,
        union_frequency,
        union_bound,
        product_holds,
        union_holds,
        holds: product_holds && union_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KminTailCheck {
    /// `(e/k) Σ G(t/x_i)`.
    pub a: f64,
    /// Empirical `P{k-min |x_i ξ_i| ≤ t}`.
    pub frequency: f64,
    /// `a^k / ((1 − a) √(2πk))`.
    pub rhs: f64,
    /// Binomial standard error at `rhs`.
    pub std_error: f64,
    pub holds: bool,
}

/// `a(t) = (e/k) Σ G(t/x_i)`.
pub fn kmin_tail_parameter(x: &[f64], model: &DistributionModel, k: usize, t: f64) -> f64 {
    let s: f64 = x.iter().map(|xi| small_ball(model, t / xi)).sum();
    std::f64::consts::E / k as f64 * s
}

pub fn check_kmin_tail(
    x: &[f64],
    model: &DistributionModel,
    k: usize,
    t: f64,
    replications: usize,
    seed: u64,
) -> Result<KminTailCheck> {
    positive_weights(x)?;
    let n = x.len();
    if k < 1 || k > n {
        return Err(Error::Range(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("t must be nonnegative, got {t}")));
    }
    let a = kmin_tail_parameter(x, model, k, t);
    // a = 0 only at t = 0, where both sides vanish.
    if !(0.0..1.0).contains(&a) {
        return Err(Error::Domain(format!("0 < a(t) < 1 fails: a = {a}")));
    }
    let moments = simulate(x, model, replications, seed, 1, |v, out| {
        out[0] = if kth_smallest(v, k) <= t { 1.0 } else { 0.0 };
    });
    let frequency = moments[0].mean;
    let rhs = a.powi(k as i32) / ((1.0 - a) * (2.0 * std::f64::consts::PI * k as f64).sqrt());
    let std_error = binomial_se(rhs.min(1.0), replications);
    Ok(KminTailCheck {
        a,
        frequency,
        rhs,
        std_error,
        holds: frequency <= rhs + MC_SIGMA_MARGIN * std_error + 0.5 / replications as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn agmean_small_example() {
        let c = check_agmean(&[0.1, 0.1, 0.1], 2).unwrap();
        assert!((c.lhs - 0.031).abs() < 1e-15);
        let a = std::f64::consts::E / 2.0 * 0.3;
        let rhs = a * a / ((1.0 - a) * (4.0 * std::f64::consts::PI).sqrt());
        assert!((c.rhs - rhs).abs() < 1e-15);
        assert!((c.rhs - 0.07918735).abs() < 1e-7);
        assert!(c.holds);
    }

    #[test]
    fn agmean_preconditions() {
        assert!(matches!(
            check_agmean(&[0.0, 0.0], 1),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            check_agmean(&[1.0, 1.0], 1),
            Err(Error::Domain(_))
        ));
        assert!(check_agmean(&[0.01; 23], 1).is_err());
        assert!(check_agmean(&[-0.1, 0.2], 1).is_err());
    }

    #[test]
    fn agmean_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.random_range(1..=22);
            let k = rng.random_range(1..=n);
            let target = rng.random_range(0.01..0.99);
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let s: f64 = raw.iter().sum();
            let scale = target * k as f64 / (std::f64::consts::E * s);
            let a: Vec<f64> = raw.iter().map(|v| v * scale).collect();
            let c = check_agmean(&a, k).unwrap();
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn hlp_edge_cases() {
        let a = [0.5, 1.5, 2.0];
        let c = check_hlp(&a, 0).unwrap();
        assert_eq!((c.lhs, c.middle, c.rhs), (1.0, 1.0, 1.0));
        let c = check_hlp(&a, 1).unwrap();
        assert!(
            (c.lhs - 4.0).abs() < 1e-15
                && (c.middle - 4.0).abs() < 1e-14
                && (c.rhs - 4.0).abs() < 1e-15
        );
        assert!(c.holds);
        assert!(check_hlp(&a, 4).is_err());
    }

    #[test]
    fn hlp_random_m12_j5() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..50 {
            let a: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..3.0)).collect();
            let c = check_hlp(&a, 5).unwrap();
            assert!(c.holds, "{c:?}");
        }
    }

    #[test]
    fn simcl_cases() {
        let c = check_simcl(&[5.0, 4.0, 3.0, 1.0], 1, 1).unwrap();
        assert_eq!((c.lhs, c.rhs), (5.0, 9.0));
        // The k largest sit in the prefix and the suffix is tiny.
        let c = check_simcl(&[9.0, 8.0, 7.0, 0.0, 0.0], 2, 2).unwrap();
        assert_eq!(c.lhs, 8.0);
        assert_eq!(c.rhs, 8.0);
        assert!(check_simcl(&[1.0, 2.0], 2, 1).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let n = rng.random_range(2..30);
            let k = rng.random_range(1..n);
            let j = rng.random_range(1..=n - k);
            let v: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            assert!(check_simcl(&v, k, j).unwrap().holds);
        }
    }

    #[test]
    fn min_product_gaussian_pair() {
        let model = DistributionModel::gaussian();
        let c = check_min_product(&[1.0, 2.0], &model, 1.0, 100_000, 1).unwrap();
        let expected = model.survival(1.0).unwrap() * model.survival(0.5).unwrap();
        assert!((c.product - expected).abs() < 1e-15);
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn min_product_single() {
        let model = DistributionModel::sym_exponential(2.0).unwrap();
        let c = check_min_product(&[1.0], &model, 0.3, 50_000, 9).unwrap();
        assert!((c.product - (-0.6f64).exp()).abs() < 1e-15);
        assert!(c.holds, "{c:?}");
        assert!(check_min_product(&[1.0], &model, 0.0, 1000, 9).is_err());
    }

    #[test]
    fn kmin_tail_half() {
        let model = DistributionModel::gaussian();
        let x = vec![1.0; 30];
        let k = 3;
        // Solve a(t) = 1/2 by bisection.
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if kmin_tail_parameter(&x, &model, k, mid) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let c = check_kmin_tail(&x, &model, k, lo, 100_000, 4).unwrap();
        assert!((c.a - 0.5).abs() < 1e-9);
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn kmin_tail_degenerate_t() {
        let model = DistributionModel::gaussian();
        let c = check_kmin_tail(&[1.0, 2.0, 3.0], &model, 2, 0.0, 1000, 4).unwrap();
        assert_eq!(c.frequency, 0.0);
        assert_eq!(c.rhs, 0.0);
        assert!(c.holds);
        assert!(check_kmin_tail(&[1.0, 2.0, 3.0], &model, 1, 10.0, 1000, 4).is_err());
    }
}
