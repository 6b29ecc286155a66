//! Two-sided estimates for `E k-min |x_i ξ_i|` and `E k-max |x_i ξ_i|`.
//!
//! Every bound is returned as a [`BoundReport`] carrying the constants that
//! were used, the inner Orlicz-norm terms, and the index attaining the inner
//! maximum, so each number can be traced back to its ingredients.

use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::distributions::DistributionModel;
use crate::error::{Error, Result};
use crate::orlicz::{BoundConstants, OrliczFunction};
use crate::weights::{Order, Weights};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Kmin,
    KminGaussianClosed,
    Kmax,
    Max1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound: BoundKind,
    pub model: String,
    pub n: usize,
    pub k: usize,
    pub lower: f64,
    /// Absent when the upper estimate's hypotheses fail (non-convex `N`).
    pub upper: Option<f64>,
    /// The bracket multiplied by the leading upper constant.
    pub upper_unit: f64,
    /// Largest inner term.
    pub inner_max: f64,
    /// Index attaining `inner_max`: `j ∈ 1..=k` for k-min, `ℓ ∈ 0..k0` for k-max.
    pub argmax_j: usize,
    pub terms: Vec<f64>,
    pub k0: Option<usize>,
    /// `‖(x_{k+k0}, …, x_n)‖_M` for k-max, `‖x‖_M` for the maximum.
    pub m_norm: Option<f64>,
    pub constants_used: BoundConstants,
    /// Set when an empirical or user-supplied constant enters the report.
    pub empirical_constant: bool,
    pub notes: Vec<String>,
}

fn require_order(x: &Weights, order: Order) -> Result<()> {
    if x.order() != order {
        return Err(Error::Order {
            index: 1,
            message: format!("weights must be declared {order:?}"),
        });
    }
    Ok(())
}

/// Max by value, ties resolved to the smallest index.
fn argmax(terms: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &v) in terms.iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

/// `‖(1/x_i)_{i=j}^n‖_{N_j}^{-1}` for `j = 1..=k`, with `N_j = 2e/(k−j+1)·N`.
fn kmin_terms(recip: &[f64], n_fn: &OrliczFunction, k: usize) -> Result<Vec<f64>> {
    (1..=k)
        .into_par_iter()
        .map(|j| {
            let nj = n_fn.scale(2.0 * E / (k - j + 1) as f64)?;
            Ok(1.0 / nj.norm(&recip[j - 1..])?)
        })
        .collect()
}

/// Bounds on `E k-min_{1≤i≤n} |x_i ξ_i|` for ascending `x` and `1 ≤ k ≤ n/2`.
///
/// The lower estimate holds without convexity of `N = −ln F`; when the
/// model fails the convexity check only the lower bound is reported.
pub fn kmin_bounds(x: &Weights, model: &DistributionModel, k: usize) -> Result<BoundReport> {
    require_order(x, Order::Ascending)?;
    let n = x.len();
    if k < 1 || 2 * k > n {
        return Err(Error::Range(format!(
            "k-min bounds need 1 <= k <= n/2, got k = {k}, n = {n}"
        )));
    }
    let constants = BoundConstants::for_model(model);
    let n_fn = OrliczFunction::make_n_unchecked(model);
    let terms = kmin_terms(&x.reciprocals(), &n_fn, k)?;
    let (idx, inner_max) = argmax(&terms);
    let upper_unit = constants.c_n * ((k + 1) as f64).ln() * inner_max;
    let mut notes = Vec::new();
    let upper = if model.is_log_concave() {
        Some(constants.upper_kmin * upper_unit)
    } else {
        notes.push("N = -ln F failed the convexity check; upper bound omitted".to_string());
        None
    };
    Ok(BoundReport {
        bound: BoundKind::Kmin,
        model: model.to_string(),
        n,
        k,
        lower: constants.c1 * inner_max,
        upper,
        upper_unit,
        inner_max,
        argmax_j: idx + 1,
        terms,
        k0: None,
        m_norm: None,
        constants_used: constants,
        empirical_constant: false,
        notes,
    })
}

/// Gaussian closed form: `c0·max_j (k+1−j)/Σ_{i≥j} 1/x_i` below and
/// `2√(2π)·ln(k+1)` times the same maximum above.
pub fn kmin_bounds_gaussian_closed(x: &Weights, k: usize) -> Result<BoundReport> {
    require_order(x, Order::Ascending)?;
    let n = x.len();
    if k < 1 || 2 * k > n {
        return Err(Error::Range(format!(
            "k-min bounds need 1 <= k <= n/2, got k = {k}, n = {n}"
        )));
    }
    let recip = x.reciprocals();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + recip[i];
    }
    let terms: Vec<f64> = (1..=k)
        .map(|j| (k + 1 - j) as f64 / suffix[j - 1])
        .collect();
    let (idx, inner_max) = argmax(&terms);
    let model = DistributionModel::gaussian();
    let constants = BoundConstants::for_model(&model);
    let upper_unit = ((k + 1) as f64).ln() * inner_max;
    Ok(BoundReport {
        bound: BoundKind::KminGaussianClosed,
        model: model.to_string(),
        n,
        k,
        lower: constants.c0 * inner_max,
        upper: Some(2.0 * (2.0 * PI).sqrt() * upper_unit),
        upper_unit,
        inner_max,
        argmax_j: idx + 1,
        terms,
        k0: None,
        m_norm: None,
        constants_used: constants,
        empirical_constant: false,
        notes: Vec::new(),
    })
}

/// `k0 = ⌊4(k−1)/F(1)⌋`.
pub fn kmax_k0(model: &DistributionModel, k: usize) -> usize {
    (4.0 * (k as f64 - 1.0) / model.survival_ext(1.0)).floor() as usize
}

/// Bounds on `E k-max_{1≤i≤n} |x_i ξ_i|` for descending `x`, `k > 1` and
/// `k + k0 ≤ n`. The upper constant is `constants.kmax_upper_c`.
pub fn kmax_bounds(
    x: &Weights,
    model: &DistributionModel,
    k: usize,
    constants: &BoundConstants,
) -> Result<BoundReport> {
    require_order(x, Order::Descending)?;
    let n = x.len();
    if k == 0 {
        return Err(Error::Range("k must be at least 1".into()));
    }
    if k == 1 {
        return Err(Error::Range(
            "k-max bounds need k > 1; use max1 bounds for k = 1".into(),
        ));
    }
    if !model.is_log_concave() {
        return Err(Error::NonConvex(format!(
            "k-max bounds need convex N for model {model}"
        )));
    }
    let k0 = kmax_k0(model, k);
    if k + k0 > n {
        return Err(Error::Infeasible {
            what: format!("k+k0 <= n (k = {k}, k0 = {k0})"),
            required_n: k + k0,
            n,
        });
    }
    let n_fn = OrliczFunction::make_n(model)?;
    let recip = x.reciprocals();
    let terms: Vec<f64> = (0..k0)
        .into_par_iter()
        .map(|l| {
            let nl = n_fn.scale(2.0 * E / (l + 1) as f64)?;
            Ok(1.0 / nl.norm(&recip[..k + l])?)
        })
        .collect::<Result<_>>()?;
    let (idx, inner_max) = argmax(&terms);
    let m_fn = OrliczFunction::make_m(model);
    let tail = m_fn.norm(&x.values()[k + k0 - 1..])?;
    let n1 = model.neg_log_survival(1.0);
    let a = 1.0 + (8.0 * (k as f64 - 1.0)).ln() / n1;
    let lower = 0.25 * (inner_max + tail / a);
    let upper_unit = constants.c_n * ((k + 1) as f64).ln() * inner_max + tail;
    Ok(BoundReport {
        bound: BoundKind::Kmax,
        model: model.to_string(),
        n,
        k,
        lower,
        upper: Some(constants.kmax_upper_c * upper_unit),
        upper_unit,
        inner_max,
        argmax_j: idx,
        terms,
        k0: Some(k0),
        m_norm: Some(tail),
        constants_used: *constants,
        empirical_constant: true,
        notes: vec![format!(
            "upper constant c = {} is empirical; the estimate only asserts an absolute constant exists",
            constants.kmax_upper_c
        )],
    })
}

/// Bounds `c_low·‖x‖_M ≤ E max |x_i ξ_i| ≤ c_high·‖x‖_M`, where `M` is built
/// from the law rescaled to `E|ξ| = 1` and the result is scaled back.
pub fn max1_bounds(
    x: &[f64],
    model: &DistributionModel,
    constants: &BoundConstants,
) -> Result<BoundReport> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::Domain("max bounds need a non-zero vector".into()));
    }
    let mean = model.mean_abs();
    let unit = model.normalized()?;
    let norm = mean * OrliczFunction::make_m(&unit).norm(x)?;
    Ok(BoundReport {
        bound: BoundKind::Max1,
        model: model.to_string(),
        n: x.len(),
        k: 1,
        lower: constants.max1_c_low * norm,
        upper: Some(constants.max1_c_high * norm),
        upper_unit: norm,
        inner_max: norm,
        argmax_j: 0,
        terms: Vec::new(),
        k0: None,
        m_norm: Some(norm),
        constants_used: *constants,
        empirical_constant: true,
        notes: vec![format!(
            "constants ({}, {}) are empirical defaults or overrides",
            constants.max1_c_low, constants.max1_c_high
        )],
    })
}

/// Lower bound `c1·max_j ‖(1/x_i)_{i=j}^n‖_{N_j}^{−p}` for `E (k-min)^p`, `1 ≤ k ≤ n`.
pub fn kmin_moment_lower(x: &Weights, model: &DistributionModel, k: usize, p: f64) -> Result<f64> {
    require_order(x, Order::Ascending)?;
    let n = x.len();
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!(
            "moment order must be positive, got {p}"
        )));
    }
    if k < 1 || k > n {
        return Err(Error::Range(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let n_fn = OrliczFunction::make_n_unchecked(model);
    let terms = kmin_terms(&x.reciprocals(), &n_fn, k)?;
    let (_, inner_max) = argmax(&terms);
    Ok(BoundConstants::c1() * inner_max.powf(p))
}

/// Upper bound `(1 + Γ(1+p))·‖(1/x_i)‖_N^{−p}` for `E min^p`; needs convex `N`.
pub fn min_moment_upper(x: &Weights, model: &DistributionModel, p: f64) -> Result<f64> {
    require_order(x, Order::Ascending)?;
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Domain(format!(
            "moment order must be positive, got {p}"
        )));
    }
    let n_fn = OrliczFunction::make_n(model)?;
    let norm = n_fn.norm(&x.reciprocals())?;
    Ok(moment_upper_factor(p) * norm.powf(-p))
}

/// `1 + Γ(1 + p)`.
pub fn moment_upper_factor(p: f64) -> f64 {
    1.0 + gamma(1.0 + p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SurvivalTable;

    fn ones(n: usize, order: Order) -> Weights {
        Weights::new(vec![1.0; n], order).unwrap()
    }

    #[test]
    fn kmin_range_errors() {
        let g = DistributionModel::gaussian();
        assert!(matches!(
            kmin_bounds(&ones(1, Order::Ascending), &g, 1),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            kmin_bounds(&ones(10, Order::Ascending), &g, 6),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            kmin_bounds(&ones(10, Order::Ascending), &g, 10),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            kmin_bounds(&ones(10, Order::Ascending), &g, 0),
            Err(Error::Range(_))
        ));
        assert!(kmin_bounds(&ones(10, Order::Descending), &g, 2).is_err());
    }

    #[test]
    fn kmin_equal_weights_k1() {
        let g = DistributionModel::gaussian();
        let r = kmin_bounds(&ones(100, Order::Ascending), &g, 1).unwrap();
        // ‖(1,…,1)‖_{2eN}^{-1} = N^{-1}(1/(200e)), computed independently by bisection.
        let target = 1.0 / (200.0 * E);
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if -g.survival(mid).unwrap().ln() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((r.inner_max / lo - 1.0).abs() < 1e-10);
        assert!((r.lower - 0.001_384_371_549_514_624).abs() < 1e-12);
        assert_eq!(r.argmax_j, 1);
        assert!(r.lower <= r.upper.unwrap());
    }

    #[test]
    fn gaussian_closed_equal_weights() {
        let r = kmin_bounds_gaussian_closed(&ones(10, Order::Ascending), 1).unwrap();
        assert!((r.inner_max - 0.1).abs() < 1e-15);
        assert!((r.lower - 0.013_856_439_193_108_67).abs() < 1e-15);
    }

    #[test]
    fn gaussian_closed_homogeneous() {
        let x: Vec<f64> = (0..20).map(|i| 2f64.powi(i)).collect();
        let w = Weights::new(x, Order::Ascending).unwrap();
        let a = kmin_bounds_gaussian_closed(&w, 5).unwrap();
        let b = kmin_bounds_gaussian_closed(&w.scaled(10.0).unwrap(), 5).unwrap();
        assert!((b.lower / a.lower - 10.0).abs() < 1e-12);
        assert!((b.upper.unwrap() / a.upper.unwrap() - 10.0).abs() < 1e-12);
        assert_eq!(a.argmax_j, b.argmax_j);
        assert!((1..=5).contains(&a.argmax_j));
    }

    #[test]
    fn k0_values() {
        assert_eq!(kmax_k0(&DistributionModel::gaussian(), 2), 12);
        assert_eq!(
            kmax_k0(&DistributionModel::sym_exponential(1.0).unwrap(), 3),
            21
        );
    }

    #[test]
    fn kmax_errors() {
        let g = DistributionModel::gaussian();
        let c = BoundConstants::for_model(&g);
        let x = ones(10, Order::Descending);
        assert!(matches!(kmax_bounds(&x, &g, 1, &c), Err(Error::Range(_))));
        match kmax_bounds(&x, &g, 2, &c) {
            Err(Error::Infeasible { required_n, n, .. }) => {
                assert_eq!(required_n, 14);
                assert_eq!(n, 10);
            }
            other => panic!("{other:?}"),
        }
        let r = kmax_bounds(&ones(100, Order::Descending), &g, 2, &c).unwrap();
        assert_eq!(r.k0, Some(12));
        assert_eq!(r.terms.len(), 12);
        assert!(r.lower <= r.upper.unwrap());
        assert!(r.empirical_constant);
    }

    #[test]
    fn max1_normalization_is_transparent() {
        let g = DistributionModel::gaussian();
        let c = BoundConstants::for_model(&g);
        let x = [1.0, 0.5, 3.0, 0.0];
        let r = max1_bounds(&x, &g, &c).unwrap();
        let direct = OrliczFunction::make_m(&g).norm(&x).unwrap();
        assert!((r.inner_max / direct - 1.0).abs() < 1e-9);
        let r2 = max1_bounds(&[2.0, 1.0, 6.0, 0.0], &g, &c).unwrap();
        assert!((r2.lower / r.lower - 2.0).abs() < 1e-9);
        assert!(max1_bounds(&[0.0, 0.0], &g, &c).is_err());
    }

    #[test]
    fn moment_consistency() {
        let g = DistributionModel::gaussian();
        let x = Weights::new((1..=12).map(|i| i as f64 * 0.5).collect(), Order::Ascending).unwrap();
        let r = kmin_bounds(&x, &g, 4).unwrap();
        let m = kmin_moment_lower(&x, &g, 4, 1.0).unwrap();
        assert!((m - r.lower).abs() < 1e-15);
        assert!(kmin_moment_lower(&x, &g, 13, 1.0).is_err());
        assert!(kmin_moment_lower(&x, &g, 12, 1.0).is_ok());
        assert!(kmin_moment_lower(&x, &g, 2, 0.0).is_err());
    }

    #[test]
    fn moment_factors() {
        assert!((moment_upper_factor(1.0) - 2.0).abs() < 1e-12);
        assert!((moment_upper_factor(3.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn non_convex_model_keeps_lower_only() {
        let rows = [
            (0.0, 1.0),
            (1.0, (-3.0f64).exp()),
            (2.0, (-4.0f64).exp()),
            (30.0, 1e-13),
        ];
        let model = DistributionModel::tabulated(SurvivalTable::new(&rows).unwrap());
        let r = kmin_bounds(&ones(10, Order::Ascending), &model, 2).unwrap();
        assert!(r.upper.is_none());
        assert!(r.lower > 0.0);
        assert!(!r.notes.is_empty());
        assert!(matches!(
            min_moment_upper(&ones(10, Order::Ascending), &model, 1.0),
            Err(Error::NonConvex(_))
        ));
    }
}
