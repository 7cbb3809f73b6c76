//! Classical and extended Zipf fits, head/tail split points and the auxiliary
//! quartile and progressive-exclusion analyses.
//!
//! All regressions are unweighted ordinary least squares in base-10 log–log
//! space. The classical law is `f(r) = C / r^α`; the extended law is
//! `f(r) = C / (r + β)^α` with β found by integer grid search.

use std::fmt;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};

/// Inclusive rank range a fit was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRange {
    pub first: usize,
    pub last: usize,
}

impl RankRange {
    pub fn len(&self) -> usize {
        self.last + 1 - self.first
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalFit {
    pub alpha: f64,
    pub c: f64,
    pub r_squared: f64,
    pub fit_domain: RankRange,
}

impl ClassicalFit {
    /// Parameters supplied from elsewhere (a report, a published table).
    /// The domain is recorded as `1..=r_t` and `r_squared` as 1.
    pub fn from_params(alpha: f64, c: f64, r_t: usize) -> Result<Self> {
        if !(alpha > 0.0 && c > 0.0) {
            return Err(Error::Domain(format!(
                "classical fit needs alpha > 0 and c > 0, got alpha = {alpha}, c = {c}"
            )));
        }
        Ok(ClassicalFit {
            alpha,
            c,
            r_squared: 1.0,
            fit_domain: RankRange {
                first: 1,
                last: r_t.max(1),
            },
        })
    }

    pub fn predict(&self, rank: f64) -> f64 {
        self.c * rank.powf(-self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedFit {
    pub alpha: f64,
    pub c: f64,
    pub beta: f64,
    pub r_squared: f64,
    pub fit_domain: RankRange,
}

impl ExtendedFit {
    pub fn predict(&self, rank: f64) -> f64 {
        self.c * (rank + self.beta).powf(-self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMethod {
    ClassicalCurvature,
    ExtendedBeta,
    Manual,
}

impl fmt::Display for SplitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitMethod::ClassicalCurvature => "classical-curvature",
            SplitMethod::ExtendedBeta => "extended-beta",
            SplitMethod::Manual => "manual",
        })
    }
}

/// Rank separating the head (common items, ranks `1..=r0`) from the tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPoint {
    pub r0: usize,
    pub method: SplitMethod,
}

impl SplitPoint {
    pub fn manual(r0: usize) -> Self {
        SplitPoint {
            r0,
            method: SplitMethod::Manual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub group: String,
    pub fit: ClassicalFit,
    pub observations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionPoint {
    /// Number of smallest distinct frequency values removed.
    pub n: usize,
    pub r_squared: f64,
    pub alpha: f64,
    pub survivors: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionCurve {
    pub points: Vec<ExclusionPoint>,
}

impl ExclusionCurve {
    pub fn best(&self) -> Option<&ExclusionPoint> {
        self.points
            .iter()
            .max_by(|a, b| a.r_squared.total_cmp(&b.r_squared))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,r_squared,alpha,survivors\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{:.6},{:.6},{}\n",
                p.n, p.r_squared, p.alpha, p.survivors
            ));
        }
        out
    }
}

/// Serializable fit summary, one per law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub method: String,
    pub alpha: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<usize>,
    pub r_squared: f64,
    pub domain: RankRange,
    pub r_t: usize,
}

impl FitRecord {
    pub fn classical(fit: &ClassicalFit, split: Option<SplitPoint>, r_t: usize) -> Self {
        FitRecord {
            method: "classical".into(),
            alpha: fit.alpha,
            c: fit.c,
            beta: None,
            r0: split.map(|s| s.r0),
            r_squared: fit.r_squared,
            domain: fit.fit_domain,
            r_t,
        }
    }

    pub fn extended(fit: &ExtendedFit, split: Option<SplitPoint>, r_t: usize) -> Self {
        FitRecord {
            method: "extended".into(),
            alpha: fit.alpha,
            c: fit.c,
            beta: Some(fit.beta),
            r0: split.map(|s| s.r0),
            r_squared: fit.r_squared,
            domain: fit.fit_domain,
            r_t,
        }
    }

    pub fn split_point(&self) -> Option<SplitPoint> {
        let method = match self.method.as_str() {
            "classical" => SplitMethod::ClassicalCurvature,
            "extended" => SplitMethod::ExtendedBeta,
            _ => SplitMethod::Manual,
        };
        self.r0.map(|r0| SplitPoint { r0, method })
    }
}

#[derive(Debug, Clone, Copy)]
struct LineFit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
}

fn ols(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

pub fn fit_classical(table: &FrequencyTable) -> Result<ClassicalFit> {
    fit_classical_points(&table.points())
}

/// Classical fit on arbitrary positive `(rank, frequency)` observations.
pub fn fit_classical_points(points: &[(f64, f64)]) -> Result<ClassicalFit> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "classical fit needs at least 2 ranks, got {}",
            points.len()
        )));
    }
    if let Some(&(r, f)) = points.iter().find(|(r, f)| !(*r > 0.0 && *f > 0.0)) {
        return Err(Error::Domain(format!(
            "rank and frequency must be positive, got ({r}, {f})"
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log10()).collect();
    let line = ols(&xs, &ys).ok_or_else(|| {
        Error::Degenerate("frequencies (or ranks) are constant over the fit domain".into())
    })?;
    if line.slope >= 0.0 {
        return Err(Error::Degenerate(format!(
            "frequency does not decrease with rank (slope {})",
            line.slope
        )));
    }
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    Ok(ClassicalFit {
        alpha: -line.slope,
        c: 10f64.powf(line.intercept),
        r_squared: line.r_squared,
        fit_domain: RankRange {
            first: lo.round() as usize,
            last: hi.round() as usize,
        },
    })
}

/// Curvature of the fitted classical curve `y = C r^-α` at rank `r`.
pub fn curvature(fit: &ClassicalFit, r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::Domain(format!("curvature needs r > 0, got {r}")));
    }
    Ok(curvature_unchecked(fit.alpha, fit.c, r))
}

fn curvature_unchecked(alpha: f64, c: f64, r: f64) -> f64 {
    let second = c * alpha * (alpha + 1.0) * r.powf(-alpha - 2.0);
    let slope = c * alpha * r.powf(-alpha - 1.0);
    second / (1.0 + slope * slope).powf(1.5)
}

/// Continuous maximizer of the classical curvature,
/// `[C²α²(2α+1)/(α+2)]^(1/(2α+2))`.
pub fn curvature_peak(fit: &ClassicalFit) -> f64 {
    let (a, c) = (fit.alpha, fit.c);
    // computed in log space so large C does not overflow
    let ln = 2.0 * c.ln() + 2.0 * a.ln() + (2.0 * a + 1.0).ln() - (a + 2.0).ln();
    (ln / (2.0 * a + 2.0)).exp()
}

/// Integer rank in `1..=r_t` with the largest curvature.
pub fn find_r0_classical(fit: &ClassicalFit, r_t: usize) -> Result<SplitPoint> {
    if r_t < 2 {
        return Err(Error::InsufficientData(format!(
            "split point needs r_t >= 2, got {r_t}"
        )));
    }
    let mut best = (1usize, f64::NEG_INFINITY);
    for r in 1..=r_t {
        let k = curvature_unchecked(fit.alpha, fit.c, r as f64);
        if k > best.1 {
            best = (r, k);
        }
    }
    Ok(SplitPoint {
        r0: best.0,
        method: SplitMethod::ClassicalCurvature,
    })
}

/// Default β grid `[-(r_t - 3) ..= 0]`.
pub fn default_beta_grid(r_t: usize) -> RangeInclusive<i64> {
    -(r_t.saturating_sub(3) as i64)..=0
}

pub fn fit_extended(table: &FrequencyTable, beta_grid: RangeInclusive<i64>) -> Result<ExtendedFit> {
    fit_extended_points(&table.points(), beta_grid)
}

/// Grid search over integer β. For each β with `-β < r_t` the regression of
/// `log f` on `log(r + β)` runs over ranks `r > max(1, -β)`; candidates with
/// fewer than three observations are skipped. Highest R² wins, ties go to the
/// smallest `|β|` (negative before positive).
pub fn fit_extended_points(
    points: &[(f64, f64)],
    beta_grid: RangeInclusive<i64>,
) -> Result<ExtendedFit> {
    let r_t = points.iter().map(|p| p.0).fold(0.0f64, f64::max).round() as usize;
    if points.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "extended fit needs at least 3 ranks, got {}",
            points.len()
        )));
    }
    let (lo, hi) = (*beta_grid.start(), *beta_grid.end());
    if lo > hi {
        return Err(Error::Invalid(format!("empty beta grid {lo}..={hi}")));
    }
    let mut order: Vec<i64> = beta_grid.filter(|b| -b < r_t as i64).collect();
    order.sort_by_key(|b| (b.unsigned_abs(), *b > 0));

    let candidates: Vec<Option<ExtendedFit>> = order
        .par_iter()
        .map(|&beta| fit_at_beta(points, beta))
        .collect();

    let mut best: Option<ExtendedFit> = None;
    for cand in candidates.into_iter().flatten() {
        if best.is_none_or(|b| cand.r_squared > b.r_squared) {
            best = Some(cand);
        }
    }
    best.ok_or(Error::Infeasible { lo, hi, r_t })
}

fn fit_at_beta(points: &[(f64, f64)], beta: i64) -> Option<ExtendedFit> {
    let floor = 1i64.max(-beta) as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(r, f)| *r > floor && *f > 0.0)
        .map(|(r, f)| ((r + beta as f64).log10(), f.log10()))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    let line = ols(&xs, &ys)?;
    if line.slope >= 0.0 {
        return None;
    }
    let first = points
        .iter()
        .map(|p| p.0)
        .filter(|r| *r > floor)
        .fold(f64::INFINITY, f64::min);
    let last = points.iter().map(|p| p.0).fold(0.0f64, f64::max);
    Some(ExtendedFit {
        alpha: -line.slope,
        c: 10f64.powf(line.intercept),
        beta: beta as f64,
        r_squared: line.r_squared,
        fit_domain: RankRange {
            first: first.round() as usize,
            last: last.round() as usize,
        },
    })
}

/// Turning point `r0 = round(-β)`, clamped to `[1, r_t]` where `r_t` is the
/// last rank of the fit domain.
pub fn find_r0_extended(fit: &ExtendedFit) -> Result<SplitPoint> {
    if fit.beta >= 0.0 || fit.beta.is_nan() {
        return Err(Error::NoTurningPoint(fit.beta));
    }
    let r_t = fit.fit_domain.last.max(1);
    let r0 = ((-fit.beta).round() as usize).clamp(1, r_t);
    Ok(SplitPoint {
        r0,
        method: SplitMethod::ExtendedBeta,
    })
}

const QUARTILE_NAMES: [&str; 4] = ["top", "upper-middle", "lower-middle", "bottom"];

/// Four equal-count rank groups, highest frequencies first, each fitted with
/// its global ranks.
pub fn quartile_analysis(table: &FrequencyTable) -> Result<Vec<FitReport>> {
    let n = table.r_t();
    if n < 8 {
        return Err(Error::InsufficientData(format!(
            "quartile analysis needs r_t >= 8, got {n}"
        )));
    }
    let points = table.points();
    (0..4)
        .map(|k| {
            let group = &points[k * n / 4..(k + 1) * n / 4];
            let name = QUARTILE_NAMES[k];
            if group.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "{name} quartile has {} entries",
                    group.len()
                )));
            }
            let fit = fit_classical_points(group).map_err(|e| match e {
                Error::Degenerate(msg) => Error::Degenerate(format!("{name} quartile: {msg}")),
                other => other,
            })?;
            Ok(FitReport {
                group: name.to_string(),
                fit,
                observations: group.len(),
            })
        })
        .collect()
}

/// Re-fits after dropping every entry whose frequency is among the `n`
/// smallest distinct frequency values, for `n = 0..=n_max`. Survivors are
/// re-ranked from 1. Stops once fewer than three entries (or a single
/// frequency value) survive.
pub fn progressive_exclusion(table: &FrequencyTable, n_max: usize) -> ExclusionCurve {
    let mut distinct: Vec<u64> = table.entries().iter().map(|e| e.frequency).collect();
    distinct.sort_unstable();
    distinct.dedup();

    let mut curve = ExclusionCurve::default();
    for n in 0..=n_max {
        let threshold = if n == 0 {
            0
        } else {
            distinct.get(n - 1).copied().unwrap_or(u64::MAX)
        };
        let points: Vec<(f64, f64)> = table
            .entries()
            .iter()
            .filter(|e| e.frequency > threshold)
            .enumerate()
            .map(|(i, e)| ((i + 1) as f64, e.frequency as f64))
            .collect();
        if points.len() < 3 {
            break;
        }
        match fit_classical_points(&points) {
            Ok(fit) => curve.points.push(ExclusionPoint {
                n,
                r_squared: fit.r_squared,
                alpha: fit.alpha,
                survivors: points.len(),
            }),
            Err(_) => break,
        }
    }
    curve
}
