//! Orlicz functions, their Young conjugates, and the Orlicz norm functional
//! `‖x‖_M = inf{ρ > 0 : Σ M(|x_i|/ρ) ≤ 1}`.
//!
//! Values are extended reals: `+∞` is a legitimate value past a function's
//! domain bound, and a modular sum containing an infinite term is infinite.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionModel;
use crate::error::{Error, Result};

/// Maximum number of doublings/halvings while bracketing.
const MAX_EXPANSIONS: usize = 200;
/// Tolerance of the golden-section search for the conjugate's maximizer.
const DUAL_SEARCH_TOL: f64 = 1e-10;

type Callable = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum OrliczKind {
    /// `M(t) = t`.
    Linear,
    /// `M(t) = t^q`, `q ≥ 1`.
    Power(f64),
    /// `t` on `[0, 1)`, `t²` from 1 on.
    GaussianH,
    /// `M(s) = E(s|ξ| − 1)₊`.
    FromDistributionM(DistributionModel),
    /// `N(t) = −ln F(t)`.
    FromDistributionN(DistributionModel),
    /// `N_{F,k}(t) = F(1/t) / (4(k−1))`.
    SurvivalRatio {
        model: DistributionModel,
        k: usize,
    },
    Scaled(Box<OrliczFunction>, f64),
    Explicit(Callable),
}

impl fmt::Debug for OrliczKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Linear => write!(f, "Linear"),
            Self::Power(q) => write!(f, "Power({q})"),
            Self::GaussianH => write!(f, "GaussianH"),
            Self::FromDistributionM(m) => write!(f, "M[{m}]"),
            Self::FromDistributionN(m) => write!(f, "N[{m}]"),
            Self::SurvivalRatio { model, k } => write!(f, "N_F,{k}[{model}]"),
            Self::Scaled(base, s) => write!(f, "{s}*{:?}", base.kind),
            Self::Explicit(_) => write!(f, "Explicit"),
        }
    }
}

/// A nondecreasing function `[0, ∞) → [0, ∞]` with `M(0) = 0`.
///
/// `convex` records whether the function is a genuine Orlicz function; the
/// norm functional is still computed when it is not, but callers needing the
/// triangle inequality or duality should check the flag.
#[derive(Debug, Clone)]
pub struct OrliczFunction {
    kind: OrliczKind,
    domain_bound: f64,
    convex: bool,
}

/// Details of a norm solve.
#[derive(Debug, Clone, Copy)]
pub struct NormSolution {
    pub value: f64,
    /// Modular sum at `value` minus one.
    pub residual: f64,
    /// Width of the final bisection bracket.
    pub bracket: f64,
    pub iterations: usize,
}

impl OrliczFunction {
    pub fn linear() -> Self {
        Self::from_kind(OrliczKind::Linear, f64::INFINITY, true)
    }

    pub fn power(q: f64) -> Result<Self> {
        if !(q >= 1.0 && q.is_finite()) {
            return Err(Error::Domain(format!(
                "power exponent must be >= 1, got {q}"
            )));
        }
        Ok(Self::from_kind(OrliczKind::Power(q), f64::INFINITY, true))
    }

    pub fn gaussian_h() -> Self {
        Self::from_kind(OrliczKind::GaussianH, f64::INFINITY, true)
    }

    /// `M(s) = ∫_{1/s ≤ |ξ|} (s|ξ| − 1) dP`.
    pub fn make_m(model: &DistributionModel) -> Self {
        Self::from_kind(
            OrliczKind::FromDistributionM(model.clone()),
            f64::INFINITY,
            true,
        )
    }

    /// `N = −ln F`; rejects models whose `N` fails the convexity check.
    pub fn make_n(model: &DistributionModel) -> Result<Self> {
        if !model.is_log_concave() {
            return Err(Error::NonConvex(format!("model {model}")));
        }
        Ok(Self::make_n_unchecked(model))
    }

    /// `N = −ln F` without requiring convexity; the handle's flag records it.
    pub fn make_n_unchecked(model: &DistributionModel) -> Self {
        Self::from_kind(
            OrliczKind::FromDistributionN(model.clone()),
            model.support_bound(),
            model.is_log_concave(),
        )
    }

    /// `N_{F,k}(t) = F(1/t)/(4(k−1))`, increasing but not convex in general.
    pub fn make_nfk(model: &DistributionModel, k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("N_F,k needs k >= 2, got {k}")));
        }
        Ok(Self::from_kind(
            OrliczKind::SurvivalRatio {
                model: model.clone(),
                k,
            },
            f64::INFINITY,
            false,
        ))
    }

    /// Wraps a user callable. `f` must be nondecreasing with `f(0) = 0`.
    pub fn explicit<F>(f: F, domain_bound: f64, convex: bool) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::from_kind(OrliczKind::Explicit(Arc::new(f)), domain_bound, convex)
    }

    fn from_kind(kind: OrliczKind, domain_bound: f64, convex: bool) -> Self {
        Self {
            kind,
            domain_bound,
            convex,
        }
    }

    pub fn kind(&self) -> &OrliczKind {
        &self.kind
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn domain_bound(&self) -> f64 {
        self.domain_bound
    }

    /// Pointwise `factor · M`. Nested scalings collapse into one factor.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Domain(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let (base, total) = match &self.kind {
            OrliczKind::Scaled(base, s) => ((**base).clone(), s * factor),
            _ => (self.clone(), factor),
        };
        Ok(Self {
            domain_bound: base.domain_bound,
            convex: base.convex,
            kind: OrliczKind::Scaled(Box::new(base), total),
        })
    }

    /// `M / M(1)`, computed from the unscaled base so that normalizing `M`
    /// and normalizing `c·M` give bit-identical functions.
    pub fn normalized(&self) -> Result<Self> {
        let base = match &self.kind {
            OrliczKind::Scaled(base, _) => base.as_ref(),
            _ => self,
        };
        let at_one = base.value(1.0);
        if !(at_one > 0.0 && at_one.is_finite()) {
            return Err(Error::Domain(format!(
                "M(1) must lie in (0, ∞), got {at_one}"
            )));
        }
        base.scale(1.0 / at_one)
    }

    /// `M(t)`; `+∞` past the domain bound. At the bound itself the left limit is used.
    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t > self.domain_bound {
            return f64::INFINITY;
        }
        match &self.kind {
            OrliczKind::Linear => t,
            OrliczKind::Power(q) => t.powf(*q),
            OrliczKind::GaussianH => gaussian_h(t),
            OrliczKind::FromDistributionM(model) => {
                // s·∫_{1/s}^∞ F(u) du
                model
                    .integrated_survival(1.0 / t)
                    .map(|v| t * v)
                    .unwrap_or(f64::NAN)
            }
            OrliczKind::FromDistributionN(model) => model.neg_log_survival(t),
            OrliczKind::SurvivalRatio { model, k } => {
                model.survival_ext(1.0 / t) / (4.0 * (*k as f64 - 1.0))
            }
            OrliczKind::Scaled(base, s) => s * base.value(t),
            OrliczKind::Explicit(f) => f(t),
        }
    }

    /// `Σ M(|x_i|/ρ)`.
    pub fn modular(&self, x: &[f64], rho: f64) -> f64 {
        let mut sum = 0.0;
        for &v in x {
            let term = self.value(v.abs() / rho);
            if term.is_infinite() {
                return f64::INFINITY;
            }
            sum += term;
        }
        sum
    }

    /// `‖x‖_M`.
    pub fn norm(&self, x: &[f64]) -> Result<f64> {
        self.solve_norm(x).map(|s| s.value)
    }

    /// Solves `inf{ρ > 0 : Σ M(|x_i|/ρ) ≤ 1}` by bisection on `ρ`.
    ///
    /// Returns `0` when the modular sum never exceeds one (possible only for
    /// functions bounded above, such as `N_{F,k}`).
    pub fn solve_norm(&self, x: &[f64]) -> Result<NormSolution> {
        let a: Vec<f64> = x.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
        if a.is_empty() {
            return Err(Error::Domain("norm of the zero vector".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("vector has non-finite entries".into()));
        }
        let n = a.len() as f64;
        let amax = a.iter().copied().fold(0.0, f64::max);
        let modular = |rho: f64| -> Result<f64> {
            let s = self.modular(&a, rho);
            if s.is_nan() {
                Err(Error::Numeric(format!("modular sum is NaN at rho = {rho}")))
            } else {
                Ok(s)
            }
        };

        // Points where M reaches 1 and where it drops below 1/n.
        let t_hi = {
            let mut t = 1.0;
            let mut found = None;
            for _ in 0..MAX_EXPANSIONS {
                if self.value(t) >= 1.0 {
                    found = Some(t);
                    break;
                }
                t *= 2.0;
            }
            found
        };
        let t_lo = {
            let mut t = 1.0;
            let mut found = None;
            for _ in 0..MAX_EXPANSIONS {
                if self.value(t) <= 1.0 / n {
                    found = Some(t);
                    break;
                }
                t *= 0.5;
            }
            found.ok_or_else(|| Error::Unbounded(format!("M stays above 1/n down to t = {t:e}")))?
        };

        let mut lo = match t_hi {
            Some(t) => amax / t,
            None => amax,
        };
        let mut expansions = 0;
        while modular(lo)? <= 1.0 {
            lo *= 0.5;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                // Every ρ > 0 is feasible.
                return Ok(NormSolution {
                    value: 0.0,
                    residual: modular(lo)? - 1.0,
                    bracket: lo,
                    iterations: expansions,
                });
            }
        }
        let mut hi = amax / t_lo;
        expansions = 0;
        while modular(hi)? > 1.0 {
            hi *= 2.0;
            expansions += 1;
            if expansions > MAX_EXPANSIONS {
                return Err(Error::Unbounded(format!(
                    "modular sum exceeds 1 for every rho up to {hi:e}"
                )));
            }
        }
        if lo > hi {
            return Err(Error::Numeric(format!(
                "norm bracket inverted ({lo:e} > {hi:e}); M is not monotone"
            )));
        }

        let mut iterations = 0;
        let mut hi_mod = modular(hi)?;
        while hi - lo > 1e-15 * hi && iterations < 400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let m = modular(mid)?;
            if m <= 1.0 {
                hi = mid;
                hi_mod = m;
            } else {
                lo = mid;
            }
            iterations += 1;
        }
        Ok(NormSolution {
            value: hi,
            residual: hi_mod - 1.0,
            bracket: hi - lo,
            iterations,
        })
    }

    /// Young conjugate `M*(s) = sup_{t ≥ 0} (t·s − M(t))`.
    ///
    /// Distribution-derived `M` uses the identity
    /// `M*(∫_{|ξ|≥t}|ξ| dP) = P(|ξ| ≥ t)`; other kinds go through
    /// [`dual_numeric`](Self::dual_numeric).
    pub fn dual(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("dual needs s >= 0, got {s}")));
        }
        match &self.kind {
            OrliczKind::FromDistributionM(model) => dual_from_tail_identity(model, s),
            _ => self.dual_numeric(s),
        }
    }

    /// Golden-section maximization of `t·s − M(t)`; `+∞` if the objective
    /// keeps growing through every doubling of `t`.
    pub fn dual_numeric(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("dual needs s >= 0, got {s}")));
        }
        let phi = |t: f64| {
            let m = self.value(t);
            if m.is_infinite() {
                f64::NEG_INFINITY
            } else {
                t * s - m
            }
        };
        // Bracket the maximizer: walk t = 1, 2, 4, … while φ increases.
        let mut prev = 0.0;
        let mut cur = 1.0;
        let mut f_cur = phi(cur);
        let f_zero = phi(0.0);
        if f_cur <= f_zero {
            // Maximizer in [0, 1]; the objective may still be flat.
            return Ok(golden_max(&phi, 0.0, 1.0).max(f_zero));
        }
        for _ in 0..MAX_EXPANSIONS {
            let next = cur * 2.0;
            let f_next = phi(next);
            if !(f_next > f_cur) {
                return Ok(golden_max(&phi, prev, next).max(f_cur));
            }
            prev = cur;
            cur = next;
            f_cur = f_next;
            if f_cur > 1e300 {
                break;
            }
        }
        Ok(f64::INFINITY)
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = fc.max(fd);
    for _ in 0..300 {
        if (b - a).abs() <= DUAL_SEARCH_TOL * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        best = best.max(fc).max(fd);
    }
    best
}

fn dual_from_tail_identity(model: &DistributionModel, s: f64) -> Result<f64> {
    let mean = model.mean_abs();
    if s > mean {
        return Ok(f64::INFINITY);
    }
    if s == mean {
        return Ok(1.0);
    }
    if s == 0.0 {
        return Ok(0.0);
    }
    // Solve tail_integral(t) = s; the tail integral decreases from E|ξ| to 0.
    let mut hi = model.scale();
    let mut expansions = 0;
    while model.tail_integral(hi)? > s {
        hi *= 2.0;
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Numeric(format!("cannot bracket tail level {s:e}")));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if model.tail_integral(mid)? > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(model.survival_ext(t))
}

/// `t` for `t < 1`, `t²` for `t ≥ 1`.
pub fn gaussian_h(t: f64) -> f64 {
    if t < 1.0 {
        t.max(0.0)
    } else {
        t * t
    }
}

/// Constants appearing in the bound formulas, with the empirical knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// `1 − 1/√(2π)`.
    pub c1: f64,
    /// `max{N(1), 1/N(1)}` for the model in use.
    pub c_n: f64,
    /// `16e²`.
    pub upper_kmin: f64,
    /// `(1 − 1/√(2π))·(1/(2e))·√(π/2)`.
    pub c0: f64,
    /// Absolute constant of the k-max upper bound; empirical.
    pub kmax_upper_c: f64,
    /// Lower/upper constants of the k = 1 maximum bounds; empirical.
    pub max1_c_low: f64,
    pub max1_c_high: f64,
}

pub const DEFAULT_KMAX_UPPER_C: f64 = 32.0;
pub const DEFAULT_MAX1_C_LOW: f64 = 0.25;
pub const DEFAULT_MAX1_C_HIGH: f64 = 8.0;

impl BoundConstants {
    pub fn c1() -> f64 {
        1.0 - 1.0 / (2.0 * PI).sqrt()
    }

    pub fn c0() -> f64 {
        Self::c1() / (2.0 * E) * (PI / 2.0).sqrt()
    }

    pub fn c_n(model: &DistributionModel) -> f64 {
        let n1 = model.neg_log_survival(1.0);
        n1.max(1.0 / n1)
    }

    /// Closed-form constants for `model` with the default empirical knobs.
    pub fn for_model(model: &DistributionModel) -> Self {
        Self {
            c1: Self::c1(),
            c_n: Self::c_n(model),
            upper_kmin: 16.0 * E * E,
            c0: Self::c0(),
            kmax_upper_c: DEFAULT_KMAX_UPPER_C,
            max1_c_low: DEFAULT_MAX1_C_LOW,
            max1_c_high: DEFAULT_MAX1_C_HIGH,
        }
    }

    pub fn with_overrides(mut self, overrides: &ConstantOverrides) -> Self {
        if let Some(c) = overrides.kmax_upper_c {
            self.kmax_upper_c = c;
        }
        if let Some(c) = overrides.max1_c_low {
            self.max1_c_low = c;
        }
        if let Some(c) = overrides.max1_c_high {
            self.max1_c_high = c;
        }
        self
    }
}

/// User replacements for the constants that carry no proven value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstantOverrides {
    pub kmax_upper_c: Option<f64>,
    pub max1_c_low: Option<f64>,
    pub max1_c_high: Option<f64>,
}

impl ConstantOverrides {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kmax_upper_c", self.kmax_upper_c),
            ("max1_c_low", self.max1_c_low),
            ("max1_c_high", self.max1_c_high),
        ] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Domain(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.max1_c_low, self.max1_c_high) {
            if lo > hi {
                return Err(Error::Domain(format!(
                    "max1_c_low {lo} exceeds max1_c_high {hi}"
                )));
            }
        }
        Ok(())
    }
}
