//! Rate and divergence calculators: per-arm worst-case rate constants, the
//! grid-minimized rate over a parameter range, pairwise large-deviation
//! exponents, KL divergences, Fisher information, the small-gap KL ratio,
//! and residual checks for the optimality conditions of the target weights.

use crate::allocation::{gna_target_weights, Weights};
use crate::{Error, Result};

/// Default discretization step for [`v_star`] parameter scans.
pub const DEFAULT_THETA_STEP: f64 = 1e-3;

fn validate_positive(sigmas: &[f64]) -> Result<()> {
    if sigmas.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 arms (got {})",
            sigmas.len()
        )));
    }
    for (b, &s) in sigmas.iter().enumerate() {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::Validation(format!(
                "sigma {b} must be finite and positive (got {s})"
            )));
        }
    }
    Ok(())
}

/// Worst-case rate constant for misidentifying arm `a` as best:
/// 1/(2(σ_a + √(Σ_{b≠a} σ_b²))²). Strictly positive, strictly decreasing in
/// every σ_b, and homogeneous of degree −2 in the σ vector.
pub fn rate_v(a: usize, sigmas: &[f64]) -> Result<f64> {
    validate_positive(sigmas)?;
    if a >= sigmas.len() {
        return Err(Error::Validation(format!(
            "arm index {a} out of range for K={}",
            sigmas.len()
        )));
    }
    let tail: f64 = sigmas
        .iter()
        .enumerate()
        .filter(|&(b, _)| b != a)
        .map(|(_, &s)| s * s)
        .sum();
    let root = sigmas[a] + tail.sqrt();
    Ok(1.0 / (2.0 * root * root))
}

/// Closed parameter range with a uniform scan step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaGrid {
    lower: f64,
    upper: f64,
    step: f64,
}

impl ThetaGrid {
    /// Requires lower < upper and a step no coarser than a tenth of the
    /// range, so every scan sees at least eleven points.
    pub fn new(lower: f64, upper: f64, step: f64) -> Result<Self> {
        if !lower.is_finite() || !upper.is_finite() || lower >= upper {
            return Err(Error::Validation(format!(
                "need finite lower < upper (got [{lower}, {upper}])"
            )));
        }
        if !step.is_finite() || step <= 0.0 || step > (upper - lower) / 10.0 {
            return Err(Error::Validation(format!(
                "step must lie in (0, (upper-lower)/10] (got {step})"
            )));
        }
        Ok(ThetaGrid { lower, upper, step })
    }

    /// The range with the default step of [`DEFAULT_THETA_STEP`].
    pub fn with_default_step(lower: f64, upper: f64) -> Result<Self> {
        Self::new(lower, upper, DEFAULT_THETA_STEP)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn step(&self) -> f64 {
        self.step
    }
}

/// Points `lower, lower+step, ...` with the endpoint appended when the step
/// does not land on it.
fn scan_points(lower: f64, upper: f64, step: f64) -> Vec<f64> {
    let mut pts = Vec::new();
    let mut i = 0u64;
    loop {
        let p = lower + i as f64 * step;
        if p > upper + step * 1e-9 {
            break;
        }
        pts.push(p.min(upper));
        i += 1;
    }
    if pts.last().map_or(true, |&p| p < upper) {
        pts.push(upper);
    }
    pts
}

/// Result of the worst-case rate minimization over a parameter range.
#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Per-arm rate constants at the worst-case parameter.
    pub per_arm_v: Vec<f64>,
    /// The minimized rate constant, min over `per_arm_v`.
    pub v_star: f64,
    /// Arm achieving the minimum.
    pub argmin_arm: usize,
    /// Worst-case parameter value.
    pub mu_dagger: f64,
    /// Target weights at the worst case, which attain the max-min.
    pub weights: Weights,
}

/// Minimizes the rate constant over arms and over a scalar parameter that
/// drives the per-arm standard deviations through `variance_fn`.
///
/// A uniform scan at the grid step finds the coarse argmin; a second scan at
/// a hundredth of the step over the two adjacent cells refines it. The map
/// must return `k` finite positive standard deviations everywhere on the
/// range.
pub fn v_star<F>(variance_fn: F, theta: &ThetaGrid, k: usize) -> Result<RateReport>
where
    F: Fn(f64) -> Vec<f64>,
{
    if k < 2 {
        return Err(Error::Validation(format!("K must be at least 2 (got {k})")));
    }
    let eval = |mu: f64| -> Result<(usize, f64, Vec<f64>)> {
        let sigmas = variance_fn(mu);
        if sigmas.len() != k {
            return Err(Error::Validation(format!(
                "variance map returned {} entries, expected {k}",
                sigmas.len()
            )));
        }
        validate_positive(&sigmas).map_err(|e| {
            Error::Validation(format!("variance map invalid at theta={mu}: {e}"))
        })?;
        let mut best_arm = 0;
        let mut best_val = f64::INFINITY;
        for a in 0..k {
            let v = rate_v(a, &sigmas)?;
            if v < best_val {
                best_val = v;
                best_arm = a;
            }
        }
        Ok((best_arm, best_val, sigmas))
    };

    let mut arg = (0usize, f64::INFINITY, theta.lower);
    for &mu in &scan_points(theta.lower, theta.upper, theta.step) {
        let (a, v, _) = eval(mu)?;
        if v < arg.1 {
            arg = (a, v, mu);
        }
    }
    let lo = (arg.2 - theta.step).max(theta.lower);
    let hi = (arg.2 + theta.step).min(theta.upper);
    for &mu in &scan_points(lo, hi, theta.step / 100.0) {
        let (a, v, _) = eval(mu)?;
        if v < arg.1 {
            arg = (a, v, mu);
        }
    }

    let (argmin_arm, _, sigmas) = eval(arg.2)?;
    let per_arm_v = (0..k)
        .map(|a| rate_v(a, &sigmas))
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport {
        v_star: per_arm_v[argmin_arm],
        per_arm_v,
        argmin_arm,
        mu_dagger: arg.2,
        weights: gna_target_weights(argmin_arm, &sigmas)?,
    })
}

/// The two published closed forms for the symmetric worst-case Bernoulli
/// problem, plus the value the general rate formula actually yields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernoulliClosedForms {
    /// Best-arm share 1/(1+√(K−1)).
    pub w_best: f64,
    /// Per-suboptimal-arm share 1/(K−1+√(K−1)).
    pub w_other: f64,
    /// The printed rate expression 1/(2(0.5+√((K−1)·0.5))²), verbatim.
    pub v_star_printed: f64,
    /// The rate obtained from the general formula with σ(μ)=√(μ(1−μ)),
    /// minimized over μ ∈ [0.1, 0.9].
    pub v_star_derived: f64,
}

/// Evaluates [`BernoulliClosedForms`] for K arms.
///
/// The printed expression puts (K−1)·0.5 under the root where the worst-case
/// standard deviation argument gives 0.5·√(K−1); the two disagree for K ≠ 3,
/// so both values are reported side by side rather than reconciled.
pub fn bernoulli_closed_forms(k: usize) -> Result<BernoulliClosedForms> {
    if k < 2 {
        return Err(Error::Validation(format!("K must be at least 2 (got {k})")));
    }
    let km1 = (k - 1) as f64;
    let root = km1.sqrt();
    let printed = 0.5 + (km1 * 0.5).sqrt();
    let report = v_star(
        |mu| vec![(mu * (1.0 - mu)).sqrt(); k],
        &ThetaGrid::with_default_step(0.1, 0.9)?,
        k,
    )?;
    Ok(BernoulliClosedForms {
        w_best: 1.0 / (1.0 + root),
        w_other: 1.0 / (km1 + root),
        v_star_printed: 1.0 / (2.0 * printed * printed),
        v_star_derived: report.v_star,
    })
}

/// Pairwise large-deviation exponent for confusing arm `a` with the best arm
/// `a_star` at gap `delta` under sampling weights `w`:
/// Δ²/(2(σ²_{a*}/w_{a*} + σ²_a/w_a)).
pub fn pairwise_rate(
    w: &Weights,
    sigmas: &[f64],
    a_star: usize,
    a: usize,
    delta: f64,
) -> Result<f64> {
    validate_positive(sigmas)?;
    let k = sigmas.len();
    if w.k() != k {
        return Err(Error::Validation(format!(
            "weights have {} entries, sigmas {k}",
            w.k()
        )));
    }
    if a_star >= k || a >= k || a == a_star {
        return Err(Error::Validation(format!(
            "need distinct arm indices below K={k} (got a_star={a_star}, a={a})"
        )));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::Validation(format!(
            "gap must be finite and positive (got {delta})"
        )));
    }
    let denom = sigmas[a_star] * sigmas[a_star] / w[a_star] + sigmas[a] * sigmas[a] / w[a];
    Ok(delta * delta / (2.0 * denom))
}

/// KL divergence between two Gaussians with common variance:
/// (μ−ν)²/(2σ²).
pub fn kl_gaussian(mu: f64, nu: f64, sigma2: f64) -> Result<f64> {
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::Validation(format!(
            "sigma2 must be finite and positive (got {sigma2})"
        )));
    }
    if !mu.is_finite() || !nu.is_finite() {
        return Err(Error::Validation(format!(
            "means must be finite (got {mu}, {nu})"
        )));
    }
    let diff = mu - nu;
    Ok(diff * diff / (2.0 * sigma2))
}

/// KL divergence between Bernoulli(p) and Bernoulli(q), both interior.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    for (name, x) in [("p", p), ("q", q)] {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Validation(format!(
                "{name} must lie strictly inside (0,1) (got {x})"
            )));
        }
    }
    Ok(p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln())
}

/// Binary relative entropy d(x, y) with the boundary conventions
/// d(0,0) = d(1,1) = 0. Infinite combinations (y on the boundary away from
/// x) are rejected.
pub fn binary_relative_entropy(x: f64, y: f64) -> Result<f64> {
    for (name, v) in [("x", x), ("y", y)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Validation(format!(
                "{name} must lie in [0,1] (got {v})"
            )));
        }
    }
    if y == 0.0 || y == 1.0 {
        return if x == y {
            Ok(0.0)
        } else {
            Err(Error::Validation(format!(
                "d({x}, {y}) is infinite: y is on the boundary"
            )))
        };
    }
    let term = |p: f64, q: f64| if p == 0.0 { 0.0 } else { p * (p / q).ln() };
    Ok(term(x, y) + term(1.0 - x, 1.0 - y))
}

/// Scalar outcome family for the information quantities: Gaussian with a
/// fixed variance (mean-independent), or Bernoulli (variance μ(1−μ)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeanModel {
    Gaussian { sigma2: f64 },
    Bernoulli,
}

impl MeanModel {
    fn validate_mean(&self, mu: f64) -> Result<()> {
        match self {
            MeanModel::Gaussian { sigma2 } => {
                if !sigma2.is_finite() || *sigma2 <= 0.0 {
                    return Err(Error::Validation(format!(
                        "sigma2 must be finite and positive (got {sigma2})"
                    )));
                }
                if !mu.is_finite() {
                    return Err(Error::Validation(format!(
                        "mean must be finite (got {mu})"
                    )));
                }
            }
            MeanModel::Bernoulli => {
                if !(mu > 0.0 && mu < 1.0) {
                    return Err(Error::Validation(format!(
                        "Bernoulli mean must lie strictly inside (0,1) (got {mu})"
                    )));
                }
            }
        }
        Ok(())
    }

    fn kl(&self, mu: f64, nu: f64) -> Result<f64> {
        match self {
            MeanModel::Gaussian { sigma2 } => kl_gaussian(mu, nu, *sigma2),
            MeanModel::Bernoulli => kl_bernoulli(mu, nu),
        }
    }
}

/// Fisher information of the mean parameter: the inverse variance at `mu`.
pub fn fisher_information(model: MeanModel, mu: f64) -> Result<f64> {
    model.validate_mean(mu)?;
    Ok(match model {
        MeanModel::Gaussian { sigma2 } => 1.0 / sigma2,
        MeanModel::Bernoulli => 1.0 / (mu * (1.0 - mu)),
    })
}

/// Small-gap KL ratio kl(μ, μ+δ)/δ², which tends to half the Fisher
/// information as δ → 0.
///
/// The divisor is the squared realized displacement (μ+δ)−μ rather than δ²,
/// so the Gaussian ratio equals I(μ)/2 exactly instead of drifting by the
/// rounding of μ+δ.
pub fn small_gap_ratio(model: MeanModel, mu: f64, delta: f64) -> Result<f64> {
    if !delta.is_finite() || delta == 0.0 {
        return Err(Error::Validation(format!(
            "delta must be finite and nonzero (got {delta})"
        )));
    }
    let nu = mu + delta;
    model.validate_mean(mu)?;
    model.validate_mean(nu)?;
    let d = nu - mu;
    if d == 0.0 {
        return Err(Error::Validation(format!(
            "delta {delta} is below the floating-point resolution at mu={mu}"
        )));
    }
    Ok(model.kl(mu, nu)? / (d * d))
}

/// Residuals of the optimality conditions satisfied by the target weights.
/// Every entry is normalized, so a correct implementation keeps them near
/// machine precision regardless of the σ scale.
#[derive(Clone, Debug, PartialEq)]
pub struct KktReport {
    /// Per suboptimal arm: |2·rate_V·(σ²_best/w_best + σ²_a/w_a) − 1|.
    /// Zero when the pairwise variance sum equalizes at the inverse rate.
    pub value_residuals: Vec<f64>,
    /// Per suboptimal arm: |σ⁴_a/w²_a − D²|/D² with D = σ_best·√S + S,
    /// S = Σ_{a≠best} σ²_a. Zero at the stationary point of the Lagrangian.
    pub stationarity_residuals: Vec<f64>,
    /// Deviation of the weights from their multiplier form w_a = σ²_a/D,
    /// w_best = 1 − S/D (max over arms, relative).
    pub weight_formula_residual: f64,
    /// |w²_best/σ²_best − Σ_{a≠best} w²_a/σ²_a|, relative to the first term.
    pub balance_residual: f64,
    /// Spread of σ²_a/w_a across suboptimal arms, relative to D.
    pub ratio_residual: f64,
}

impl KktReport {
    /// Largest residual across all identity groups.
    pub fn max_residual(&self) -> f64 {
        self.value_residuals
            .iter()
            .chain(self.stationarity_residuals.iter())
            .chain([
                self.weight_formula_residual,
                self.balance_residual,
                self.ratio_residual,
            ]
            .iter())
            .fold(0.0, |m, &r| m.max(r))
    }
}

/// Evaluates the target weights at (`best`, `sigmas`) and reports how well
/// they satisfy the optimality conditions of the max-min program they solve.
pub fn kkt_verify(sigmas: &[f64], best: usize) -> Result<KktReport> {
    let w = gna_target_weights(best, sigmas)?;
    let k = sigmas.len();
    let others: Vec<usize> = (0..k).filter(|&a| a != best).collect();
    let var = |a: usize| sigmas[a] * sigmas[a];

    let s: f64 = others.iter().map(|&a| var(a)).sum();
    let d = sigmas[best] * s.sqrt() + s;
    let r2 = 2.0 * rate_v(best, sigmas)?;

    let value_residuals = others
        .iter()
        .map(|&a| (r2 * (var(best) / w[best] + var(a) / w[a]) - 1.0).abs())
        .collect();
    let stationarity_residuals = others
        .iter()
        .map(|&a| {
            let q = var(a) / w[a];
            (q * q - d * d).abs() / (d * d)
        })
        .collect();
    let weight_formula_residual = others
        .iter()
        .map(|&a| (w[a] - var(a) / d).abs() / w[a])
        .fold(
            (w[best] - (1.0 - s / d)).abs() / w[best],
            f64::max,
        );
    let tail: f64 = others.iter().map(|&a| w[a] * w[a] / var(a)).sum();
    let lead = w[best] * w[best] / var(best);
    let balance_residual = (lead - tail).abs() / lead;
    let ratios: Vec<f64> = others.iter().map(|&a| var(a) / w[a]).collect();
    let ratio_residual = ratios
        .iter()
        .flat_map(|x| ratios.iter().map(move |y| (x - y).abs() / d))
        .fold(0.0, f64::max);

    Ok(KktReport {
        value_residuals,
        stationarity_residuals,
        weight_formula_residual,
        balance_residual,
        ratio_residual,
    })
}
