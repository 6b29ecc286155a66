//! Monte Carlo estimation of expected order statistics of `(x_i ξ_i)`.
//!
//! Replications are split into fixed-size blocks. Block `b` draws from a
//! ChaCha8 generator seeded with the user seed on stream `b`, and block
//! moments are merged in block order, so estimates depend only on the seed
//! and never on how many worker threads ran the blocks.

mod checks;
mod symmetric;

pub use checks::{
    check_agmean, check_hlp, check_kmin_tail, check_min_product, check_simcl, kmin_tail_parameter,
    AgMeanCheck, HlpCheck, KminTailCheck, MinProductCheck, SimclCheck, MC_SIGMA_MARGIN,
};
pub use symmetric::{
    elementary_symmetric, elementary_symmetric_by_enumeration, elementary_symmetric_f64,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionModel;
use crate::error::{Error, Result};

/// Replications per random stream.
pub const BLOCK_SIZE: usize = 1024;
/// Smallest accepted replication count.
pub const MIN_REPLICATIONS: usize = 100;
/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "p")]
pub enum Statistic {
    /// `E k-min (x_i ξ_i)`.
    Kmin,
    /// `E k-max (x_i ξ_i)`.
    Kmax,
    /// `E (k-min (x_i ξ_i))^p`.
    KminPower(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub statistic: Statistic,
    pub k: usize,
    pub mean: f64,
    pub std_error: f64,
    /// Half-width of the 99% normal confidence interval.
    pub ci_halfwidth: f64,
    pub replications: usize,
    pub seed: u64,
}

/// Running count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: f64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1.0;
        let d = v - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (v - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.count == 0.0 {
            return other;
        }
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count > 1.0 {
            self.m2 / (self.count - 1.0)
        } else {
            0.0
        }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count).sqrt()
    }
}

fn merge_pairwise(mut parts: Vec<Vec<Moments>>) -> Vec<Moments> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect()),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Runs `replications` draws of `v_i = x_i |ξ_i|`. For each draw `observe`
/// fills `outputs` slots (it may reorder `v`), and the slot moments are
/// accumulated.
pub fn simulate<F>(
    x: &[f64],
    model: &DistributionModel,
    replications: usize,
    seed: u64,
    outputs: usize,
    observe: F,
) -> Vec<Moments>
where
    F: Fn(&mut [f64], &mut [f64]) + Sync,
{
    let blocks = replications.div_ceil(BLOCK_SIZE);
    let parts: Vec<Vec<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let count = BLOCK_SIZE.min(replications - b * BLOCK_SIZE);
            let mut acc = vec![Moments::default(); outputs];
            let mut v = vec![0.0; x.len()];
            let mut out = vec![0.0; outputs];
            for _ in 0..count {
                for (vi, xi) in v.iter_mut().zip(x) {
                    *vi = xi * model.sample_abs(&mut rng);
                }
                observe(&mut v, &mut out);
                for (a, o) in acc.iter_mut().zip(&out) {
                    a.push(*o);
                }
            }
            acc
        })
        .collect();
    merge_pairwise(parts)
}

/// The `k`-th smallest entry (1-based); reorders `v`.
pub fn kth_smallest(v: &mut [f64], k: usize) -> f64 {
    *v.select_nth_unstable_by(k - 1, f64::total_cmp).1
}

/// The `k`-th largest entry (1-based); reorders `v`.
pub fn kth_largest(v: &mut [f64], k: usize) -> f64 {
    let n = v.len();
    kth_smallest(v, n + 1 - k)
}

fn check_query(n: usize, k: usize, statistic: Statistic) -> Result<()> {
    if k < 1 || k > n {
        return Err(Error::Range(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if let Statistic::KminPower(p) = statistic {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::Domain(format!(
                "moment order p must be positive, got {p}"
            )));
        }
    }
    Ok(())
}

/// Estimates several `(k, statistic)` pairs from one shared set of draws.
pub fn estimate_order_stats(
    x: &[f64],
    model: &DistributionModel,
    queries: &[(usize, Statistic)],
    replications: usize,
    seed: u64,
) -> Result<Vec<MonteCarloEstimate>> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::Range(format!(
            "need at least {MIN_REPLICATIONS} replications, got {replications}"
        )));
    }
    if let Some(i) = x.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::Order {
            index: i + 1,
            message: format!("weight {} is not a positive finite number", x[i]),
        });
    }
    for &(k, s) in queries {
        check_query(x.len(), k, s)?;
    }
    let moments = simulate(x, model, replications, seed, queries.len(), |v, out| {
        for (slot, &(k, s)) in out.iter_mut().zip(queries) {
            *slot = match s {
                Statistic::Kmin => kth_smallest(v, k),
                Statistic::Kmax => kth_largest(v, k),
                Statistic::KminPower(p) => kth_smallest(v, k).powf(p),
            };
        }
    });
    Ok(queries
        .iter()
        .zip(moments)
        .map(|(&(k, statistic), m)| {
            let std_error = m.std_error();
            MonteCarloEstimate {
                statistic,
                k,
                mean: m.mean,
                std_error,
                ci_halfwidth: Z_99 * std_error,
                replications,
                seed,
            }
        })
        .collect())
}

pub fn estimate_order_stat(
    x: &[f64],
    model: &DistributionModel,
    k: usize,
    statistic: Statistic,
    replications: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    let mut v = estimate_order_stats(x, model, &[(k, statistic)], replications, seed)?;
    Ok(v.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn selection_matches_sort() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(1..40);
            let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            let k = rng.random_range(1..=n);
            let mut w = v.clone();
            assert_eq!(kth_smallest(&mut w, k), sorted[k - 1]);
            let mut w = v.clone();
            // k-max is the (n−k+1)-min.
            assert_eq!(kth_largest(&mut w, k), sorted[n - k]);
        }
    }

    #[test]
    fn moments_merge_matches_direct() {
        let data: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let mut all = Moments::default();
        data.iter().for_each(|&v| all.push(v));
        let mut a = Moments::default();
        let mut b = Moments::default();
        data[..313].iter().for_each(|&v| a.push(v));
        data[313..].iter().for_each(|&v| b.push(v));
        let m = a.merge(b);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.variance() - all.variance()).abs() < 1e-9);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let x: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let model = DistributionModel::gaussian();
        let run = |threads| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| estimate_order_stat(&x, &model, 3, Statistic::Kmin, 5000, 99).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.ci_halfwidth.to_bits(), b.ci_halfwidth.to_bits());
    }

    #[test]
    fn single_weight_expectation() {
        // n = 1: E|ξ| = sqrt(2/π) for the standard Gaussian.
        let model = DistributionModel::gaussian();
        let e = estimate_order_stat(&[2.0], &model, 1, Statistic::Kmin, 200_000, 5).unwrap();
        let exact = 2.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((e.mean - exact).abs() < 4.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn exponential_min_closed_form() {
        // min of independent Exp(rate / x_i) is Exp(rate·Σ 1/x_i).
        let model = DistributionModel::sym_exponential(1.0).unwrap();
        let x = [1.0, 2.0, 4.0];
        let e = estimate_order_stat(&x, &model, 1, Statistic::Kmin, 200_000, 11).unwrap();
        let exact = 1.0 / (1.0 + 0.5 + 0.25);
        assert!((e.mean - exact).abs() < 4.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn shared_draws_agree_with_single_queries() {
        let model = DistributionModel::gaussian();
        let x = [1.0, 1.5, 2.0, 3.0];
        let multi = estimate_order_stats(
            &x,
            &model,
            &[(1, Statistic::Kmin), (2, Statistic::Kmax)],
            3000,
            4,
        )
        .unwrap();
        let one = estimate_order_stat(&x, &model, 2, Statistic::Kmax, 3000, 4).unwrap();
        assert_eq!(multi[1].mean.to_bits(), one.mean.to_bits());
    }

    #[test]
    fn input_validation() {
        let model = DistributionModel::gaussian();
        assert!(estimate_order_stat(&[1.0], &model, 1, Statistic::Kmin, 99, 0).is_err());
        assert!(estimate_order_stat(&[1.0], &model, 2, Statistic::Kmin, 100, 0).is_err());
        assert!(estimate_order_stat(&[1.0, -1.0], &model, 1, Statistic::Kmin, 100, 0).is_err());
        assert!(estimate_order_stat(&[1.0], &model, 1, Statistic::KminPower(0.0), 100, 0).is_err());
    }
}
