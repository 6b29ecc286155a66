//! Symmetric random-variable models described through the survival function
//! `F(t) = P(|ξ| > t)` of their absolute value.
//!
//! Three families are supported: the standard Gaussian, the symmetric
//! exponential (Laplace) law with a given rate, and a user-supplied table of
//! `(t, F(t))` pairs interpolated monotonically in `ln F`. Every model may be
//! rescaled, `ξ ↦ c·ξ`, which is how bounds requiring `E|ξ| = 1` normalize.

use std::f64::consts::{FRAC_2_PI, SQRT_2};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use libm::erfc;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::quadrature;

/// Survival values below this are treated as zero mass when a tabulated
/// model is integrated past its last row. Tables must reach it.
pub const TABLE_TAIL_NEGLIGIBLE: f64 = 1e-12;

/// Minimum number of grid points used by the shape checks.
pub const GRID_POINTS: usize = 200;

/// Tolerance on second differences of `N = -ln F` in the convexity check.
pub const CONVEXITY_TOL: f64 = 1e-9;

#[inline]
fn sqrt_2_over_pi() -> f64 {
    FRAC_2_PI.sqrt()
}

/// `1/(t + 2/(t + 3/(t + …)))`, which satisfies
/// `F_gauss(t) = √(2/π)·e^{-t²/2} / (t + cf)` for `t > 0`.
fn gaussian_mills_tail(t: f64) -> f64 {
    let mut k = 0.0;
    for m in (1..=200).rev() {
        k = m as f64 / (t + k);
    }
    k
}

fn gaussian_survival(t: f64) -> f64 {
    erfc(t / SQRT_2)
}

fn gaussian_neg_log_survival(t: f64) -> f64 {
    if t < 30.0 {
        -erfc(t / SQRT_2).ln()
    } else {
        0.5 * t * t - sqrt_2_over_pi().ln() + (t + gaussian_mills_tail(t)).ln()
    }
}

/// `∫_t^∞ F(u) du` for the standard Gaussian.
fn gaussian_integrated_survival(t: f64) -> f64 {
    let phi2 = sqrt_2_over_pi() * (-0.5 * t * t).exp();
    if t < 4.0 {
        phi2 - t * gaussian_survival(t)
    } else {
        // φ₂ − t·φ₂/(t+c) = φ₂·c/(t+c), free of cancellation.
        let c = gaussian_mills_tail(t);
        phi2 * c / (t + c)
    }
}

fn gaussian_quantile(p: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    let mut t = SQRT_2 * erfc_inv(p);
    // Newton on ln F(t) − ln p.
    let target = p.ln();
    for _ in 0..3 {
        if t <= 0.0 {
            break;
        }
        let g = -gaussian_neg_log_survival(t) - target;
        let f = gaussian_survival(t);
        let slope = if f > 1e-300 {
            -sqrt_2_over_pi() * (-0.5 * t * t).exp() / f
        } else {
            -(t + gaussian_mills_tail(t))
        };
        let step = g / slope;
        t -= step;
        if step.abs() <= 1e-15 * t.abs() {
            break;
        }
    }
    t.max(0.0)
}

/// A strictly decreasing survival table interpolated by a monotone cubic
/// (Fritsch–Carlson) in `ln F`.
#[derive(Debug, Clone)]
pub struct SurvivalTable {
    t: Vec<f64>,
    log_f: Vec<f64>,
    slopes: Vec<f64>,
}

impl SurvivalTable {
    /// Builds a table from `(t, F(t))` rows. Rows are numbered from 1 in errors.
    pub fn new(rows: &[(f64, f64)]) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Tabulation("table needs at least two rows".into()));
        }
        let (t0, f0) = rows[0];
        if t0 != 0.0 || f0 != 1.0 {
            return Err(Error::Tabulation(format!(
                "first row must be t=0, F=1 (row 1 is t={t0}, F={f0})"
            )));
        }
        for (i, w) in rows.windows(2).enumerate() {
            let ((ta, fa), (tb, fb)) = (w[0], w[1]);
            if !(tb > ta) || !tb.is_finite() {
                return Err(Error::Tabulation(format!(
                    "row {}: t must be strictly increasing ({ta} then {tb})",
                    i + 2
                )));
            }
            if !(fb < fa) || !(fb > 0.0) {
                return Err(Error::Tabulation(format!(
                    "row {}: F must be strictly decreasing and positive ({fa} then {fb})",
                    i + 2
                )));
            }
        }
        let last = rows[rows.len() - 1].1;
        if last > TABLE_TAIL_NEGLIGIBLE {
            return Err(Error::Tabulation(format!(
                "table stops at F={last:e}; it must resolve the tail down to F <= {TABLE_TAIL_NEGLIGIBLE:e}"
            )));
        }
        let t: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let log_f: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
        let slopes = pchip_slopes(&t, &log_f);
        Ok(Self { t, log_f, slopes })
    }

    /// Parses a two-column `t,F` CSV. A header line is allowed; blank lines
    /// and lines starting with `#` are skipped.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected two columns `t,F`, got `{line}`"),
                    })
                }
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(t), Ok(f)) => rows.push((t, f)),
                _ if rows.is_empty() && a.eq_ignore_ascii_case("t") => continue,
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("non-numeric value in `{line}`"),
                    })
                }
            }
        }
        Self::new(&rows)
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("non-empty")
    }

    pub fn rows(&self) -> usize {
        self.t.len()
    }

    /// Interpolated `ln F(t)` for `t` inside the table.
    fn log_survival(&self, t: f64) -> f64 {
        let n = self.t.len();
        let k = self.t.partition_point(|&x| x <= t).clamp(1, n - 1) - 1;
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * self.log_f[k]
            + (s3 - 2.0 * s2 + s) * h * self.slopes[k]
            + (-2.0 * s3 + 3.0 * s2) * self.log_f[k + 1]
            + (s3 - s2) * h * self.slopes[k + 1]
    }

    fn quantile(&self, p: f64) -> Option<f64> {
        let target = p.ln();
        if target < *self.log_f.last().expect("non-empty") {
            return None;
        }
        if p >= 1.0 {
            return Some(0.0);
        }
        let k = self.log_f.partition_point(|&v| v > target);
        let (mut lo, mut hi) = (self.t[k.saturating_sub(1)], self.t[k.min(self.t.len() - 1)]);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.log_survival(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    if n == 2 {
        return vec![delta[0], delta[0]];
    }
    let mut d = vec![0.0; n];
    for k in 1..n - 1 {
        if delta[k - 1] * delta[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    let edge = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if d.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            d
        }
    };
    d[0] = edge(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    d
}

/// Distribution family of `|ξ|` before scaling.
#[derive(Debug, Clone)]
pub enum Family {
    Gaussian,
    SymExponential { rate: f64 },
    Tabulated(Arc<SurvivalTable>),
}

/// A symmetric random variable `ξ = scale · ξ₀` where `ξ₀` belongs to
/// [`Family`]. Immutable; cheap to clone.
#[derive(Debug, Clone)]
pub struct DistributionModel {
    family: Family,
    scale: f64,
    log_concave: bool,
}

/// Outcome of the grid checks on `F` and `N = -ln F`.
#[derive(Debug, Clone, Copy)]
pub struct GridDiagnostics {
    pub points: usize,
    pub strictly_decreasing: bool,
    pub survival_at_zero: f64,
    pub min_second_difference: f64,
    pub max_quantile_rel_error: f64,
}

impl GridDiagnostics {
    pub fn log_concave(&self) -> bool {
        self.min_second_difference >= -CONVEXITY_TOL
    }
}

/// Both sides of the tail-integral estimate `∫_{|ξ|≥t}|ξ| ≤ (1 + 1/N(t))·t·F(t)`.
#[derive(Debug, Clone, Copy)]
pub struct SubMultCheck {
    pub t: f64,
    pub tail_integral: f64,
    pub bound: f64,
    pub holds: bool,
}

impl DistributionModel {
    /// Standard normal `N(0, 1)`.
    pub fn gaussian() -> Self {
        Self::from_family(Family::Gaussian)
    }

    /// Symmetric exponential with `P(|ξ| > t) = e^{-rate·t}`.
    pub fn sym_exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::Domain(format!("rate must be positive, got {rate}")));
        }
        Ok(Self::from_family(Family::SymExponential { rate }))
    }

    pub fn tabulated(table: SurvivalTable) -> Self {
        Self::from_family(Family::Tabulated(Arc::new(table)))
    }

    /// Loads a `t,F` CSV table from disk.
    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::tabulated(SurvivalTable::parse_csv(&text)?))
    }

    /// Parses `gaussian`, `symexp:<rate>` or `table:<path>`.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "gaussian" {
            return Ok(Self::gaussian());
        }
        if let Some(rate) = spec.strip_prefix("symexp:") {
            let rate: f64 = rate
                .parse()
                .map_err(|_| Error::Domain(format!("invalid rate in `{spec}`")))?;
            return Self::sym_exponential(rate);
        }
        if spec == "symexp" {
            return Self::sym_exponential(1.0);
        }
        if let Some(path) = spec.strip_prefix("table:") {
            return Self::from_csv_path(Path::new(path));
        }
        Err(Error::Domain(format!(
            "unknown distribution `{spec}` (expected gaussian, symexp:<rate> or table:<path>)"
        )))
    }

    fn from_family(family: Family) -> Self {
        let mut model = Self {
            family,
            scale: 1.0,
            log_concave: true,
        };
        model.log_concave = model.grid_diagnostics(GRID_POINTS).log_concave();
        model
    }

    /// The law of `factor · ξ`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Domain(format!(
                "scale must be positive, got {factor}"
            )));
        }
        Ok(Self {
            family: self.family.clone(),
            scale: self.scale * factor,
            log_concave: self.log_concave,
        })
    }

    /// The same family rescaled so that `E|ξ| = 1`.
    pub fn normalized(&self) -> Result<Self> {
        self.scaled(1.0 / self.mean_abs())
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Whether `N = -ln F` passed the grid convexity check.
    pub fn is_log_concave(&self) -> bool {
        self.log_concave
    }

    /// Largest `t` at which `F` is defined, `∞` for the parametric families.
    pub fn support_bound(&self) -> f64 {
        match &self.family {
            Family::Tabulated(table) => self.scale * table.t_max(),
            _ => f64::INFINITY,
        }
    }

    /// `P(|ξ| > t)`.
    pub fn survival(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("survival needs t >= 0, got {t}")));
        }
        if t > self.support_bound() {
            return Err(Error::Tabulation(format!(
                "t = {t} exceeds the table range [0, {}]; extrapolation is refused",
                self.support_bound()
            )));
        }
        Ok(self.survival_ext(t))
    }

    /// `P(|ξ| > t)` for any `t ≥ 0`; past a table's last row the negligible
    /// remaining mass is taken as zero.
    pub fn survival_ext(&self, t: f64) -> f64 {
        let u = t / self.scale;
        match &self.family {
            Family::Gaussian => gaussian_survival(u),
            Family::SymExponential { rate } => (-rate * u).exp(),
            Family::Tabulated(table) => {
                if u > table.t_max() {
                    0.0
                } else {
                    table.log_survival(u).exp()
                }
            }
        }
    }

    /// `N(t) = -ln F(t)`, `+∞` past a table's last row.
    pub fn neg_log_survival(&self, t: f64) -> f64 {
        let u = t / self.scale;
        match &self.family {
            Family::Gaussian => gaussian_neg_log_survival(u),
            Family::SymExponential { rate } => rate * u,
            Family::Tabulated(table) => {
                if u > table.t_max() {
                    f64::INFINITY
                } else {
                    -table.log_survival(u)
                }
            }
        }
    }

    /// Smallest `t` with `F(t) = p`, for `p ∈ (0, 1]`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!(
                "quantile needs p in (0, 1], got {p}"
            )));
        }
        let u = match &self.family {
            Family::Gaussian => gaussian_quantile(p),
            Family::SymExponential { rate } => -p.ln() / rate,
            Family::Tabulated(table) => table.quantile(p).ok_or_else(|| {
                Error::Tabulation(format!("p = {p:e} lies below the table's smallest F"))
            })?,
        };
        Ok(self.scale * u)
    }

    /// `∫_t^∞ F(u) du`.
    pub fn integrated_survival(&self, t: f64) -> Result<f64> {
        let u = t / self.scale;
        let base = match &self.family {
            Family::Gaussian => gaussian_integrated_survival(u),
            Family::SymExponential { rate } => (-rate * u).exp() / rate,
            Family::Tabulated(table) => {
                if u >= table.t_max() {
                    0.0
                } else {
                    quadrature::integrate(|s| table.log_survival(s).exp(), u, table.t_max())?.value
                }
            }
        };
        Ok(self.scale * base)
    }

    /// `∫_{|ξ|≥t} |ξ| dP = t·F(t) + ∫_t^∞ F`.
    pub fn tail_integral(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!(
                "tail integral needs t >= 0, got {t}"
            )));
        }
        let u = t / self.scale;
        let base = match &self.family {
            Family::Gaussian => sqrt_2_over_pi() * (-0.5 * u * u).exp(),
            Family::SymExponential { rate } => (u + 1.0 / rate) * (-rate * u).exp(),
            Family::Tabulated(_) => {
                return Ok(t * self.survival_ext(t) + self.integrated_survival(t)?);
            }
        };
        Ok(self.scale * base)
    }

    /// `E|ξ|`.
    pub fn mean_abs(&self) -> f64 {
        match &self.family {
            Family::Gaussian => self.scale * sqrt_2_over_pi(),
            Family::SymExponential { rate } => self.scale / rate,
            Family::Tabulated(_) => self
                .integrated_survival(0.0)
                .expect("table integral over a bounded range converges"),
        }
    }

    /// One draw of `|ξ|`.
    pub fn sample_abs<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let base = match &self.family {
            Family::Gaussian => {
                let g: f64 = rng.sample(StandardNormal);
                g.abs()
            }
            Family::SymExponential { rate } => {
                let e: f64 = rng.sample(Exp1);
                e / rate
            }
            Family::Tabulated(table) => {
                // 1 - U lies in (0, 1].
                let p = 1.0 - rng.random::<f64>();
                table.quantile(p).unwrap_or(table.t_max())
            }
        };
        self.scale * base
    }

    /// `count` i.i.d. signed draws of `ξ`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        (0..count)
            .map(|_| {
                let v = self.sample_abs(rng);
                if rng.random::<bool>() {
                    v
                } else {
                    -v
                }
            })
            .collect()
    }

    /// Runs the monotonicity, normalization, convexity and quantile checks on
    /// a uniform grid of at least [`GRID_POINTS`] points.
    pub fn grid_diagnostics(&self, points: usize) -> GridDiagnostics {
        let points = points.max(GRID_POINTS);
        let hi = match &self.family {
            Family::Tabulated(table) => self.scale * table.t_max(),
            Family::Gaussian => self.scale * 8.0,
            Family::SymExponential { rate } => self.scale * 30.0 / rate,
        };
        let step = hi / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|i| i as f64 * step).collect();
        let surv: Vec<f64> = grid.iter().map(|&t| self.survival_ext(t)).collect();
        let n: Vec<f64> = grid.iter().map(|&t| self.neg_log_survival(t)).collect();
        let strictly_decreasing = surv.windows(2).all(|w| w[1] < w[0]);
        let min_second_difference = n
            .windows(3)
            .map(|w| w[0] - 2.0 * w[1] + w[2])
            .fold(f64::INFINITY, f64::min);
        let max_quantile_rel_error = grid[1..points - 1]
            .iter()
            .zip(&surv[1..points - 1])
            .filter_map(|(&t, &f)| self.quantile(f).ok().map(|q| ((q - t) / t).abs()))
            .fold(0.0, f64::max);
        GridDiagnostics {
            points,
            strictly_decreasing,
            survival_at_zero: surv[0],
            min_second_difference,
            max_quantile_rel_error,
        }
    }

    /// Checks `∫_{|ξ|≥t}|ξ| dP ≤ (1 + 1/N(t))·t·F(t)` with slack `1e-9`.
    pub fn verify_sub_mult(&self, t: f64) -> Result<SubMultCheck> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!(
                "sub-multiplicative check needs t > 0, got {t}"
            )));
        }
        let n = self.neg_log_survival(t);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain(format!(
                "N(t) must be positive and finite at t = {t}"
            )));
        }
        let tail_integral = self.tail_integral(t)?;
        let bound = (1.0 + 1.0 / n) * t * self.survival_ext(t);
        Ok(SubMultCheck {
            t,
            tail_integral,
            bound,
            holds: tail_integral <= bound + 1e-9,
        })
    }
}

impl fmt::Display for DistributionModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Gaussian => write!(f, "gaussian")?,
            Family::SymExponential { rate } => write!(f, "symexp:{rate}")?,
            Family::Tabulated(table) => write!(f, "table({} rows)", table.rows())?,
        }
        if self.scale != 1.0 {
            write!(f, "*{}", self.scale)?;
        }
        Ok(())
    }
}

/// Pointwise Gaussian survival bounds
/// `√(2/π)·e^{-(t²+1/t²)/2}/(e·t) ≤ F(t) ≤ √(2/π)·e^{-t²/2}/t`, for `t > 0`.
/// Returns `(lower, F(t), upper)`.
pub fn gaussian_survival_sandwich(t: f64) -> (f64, f64, f64) {
    let c = sqrt_2_over_pi();
    let upper = c / t * (-0.5 * t * t).exp();
    let lower = c / (std::f64::consts::E * t) * (-0.5 * (t * t + 1.0 / (t * t))).exp();
    (lower, gaussian_survival(t), upper)
}
