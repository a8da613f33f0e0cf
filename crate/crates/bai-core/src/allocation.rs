//! Allocation rules: the variance-adaptive target weights, their plug-in
//! estimated counterpart, the uniform baseline, and two independent solvers
//! (nested bisection and exhaustive grid) for the max-min optimal allocation.

use crate::{argmax_tie_low, Error, Result};

/// A point in the interior of the K-simplex: per-arm sampling probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Accepted deviation of the entry sum from one.
    pub const SUM_TOL: f64 = 1e-12;

    /// Validates K >= 2, every entry strictly inside (0,1), and a sum within
    /// [`Self::SUM_TOL`] of one.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.len() < 2 {
            return Err(Error::Validation(format!(
                "weights need at least 2 entries (got {})",
                w.len()
            )));
        }
        for (a, &x) in w.iter().enumerate() {
            if !x.is_finite() || x <= 0.0 || x >= 1.0 {
                return Err(Error::Validation(format!(
                    "weight {a} must lie strictly inside (0,1) (got {x})"
                )));
            }
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::Validation(format!(
                "weights must sum to 1 within {} (got {sum})",
                Self::SUM_TOL
            )));
        }
        Ok(Weights(w))
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }
}

impl std::ops::Index<usize> for Weights {
    type Output = f64;

    fn index(&self, a: usize) -> &f64 {
        &self.0[a]
    }
}

/// Root-sum-of-squares by iterated `hypot`: exact for a single element, so
/// the two-arm target reduces to the exact standard-deviation ratio.
fn tail_rss(sigmas: &[f64], excluded: usize) -> f64 {
    sigmas
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != excluded)
        .fold(0.0, |acc, (_, &s)| acc.hypot(s))
}

fn validate_sigmas(sigmas: &[f64]) -> Result<()> {
    if sigmas.len() < 2 {
        return Err(Error::Validation(format!(
            "need at least 2 arms (got {})",
            sigmas.len()
        )));
    }
    for (a, &s) in sigmas.iter().enumerate() {
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::Validation(format!(
                "sigma {a} must be finite and positive (got {s})"
            )));
        }
    }
    Ok(())
}

/// Target allocation for a known best arm and known standard deviations.
///
/// The best arm receives σ_best/(σ_best + s) with s = √(Σ_{c≠best} σ_c²);
/// the remaining mass is split over the other arms proportionally to their
/// variances. With two arms this is exactly the ratio (σ₁/(σ₁+σ₂),
/// σ₂/(σ₁+σ₂)). These weights maximize the smallest pairwise inverse
/// variance min_{a≠best} 1/(σ²_best/w_best + σ²_a/w_a) over the simplex.
pub fn gna_target_weights(best: usize, sigmas: &[f64]) -> Result<Weights> {
    validate_sigmas(sigmas)?;
    let k = sigmas.len();
    if best >= k {
        return Err(Error::Validation(format!(
            "best arm index {best} out of range for K={k}"
        )));
    }
    let s = tail_rss(sigmas, best);
    let w_best = sigmas[best] / (sigmas[best] + s);
    let tail_var: f64 = sigmas
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != best)
        .map(|(_, &x)| x * x)
        .sum();
    let w = (0..k)
        .map(|a| {
            if a == best {
                w_best
            } else {
                (1.0 - w_best) * sigmas[a] * sigmas[a] / tail_var
            }
        })
        .collect();
    Weights::new(w)
}

/// Per-arm mean/variance state estimated from past rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceEstimates {
    sigma2_hat: Vec<f64>,
    mu_tilde: Vec<f64>,
    counts: Vec<u64>,
}

impl VarianceEstimates {
    /// Builds the floored state: each raw variance is passed through
    /// [`floor_variance`], so every stored entry is at least `eta`.
    pub fn new(
        sigma2_tilde: &[f64],
        mu_tilde: Vec<f64>,
        counts: Vec<u64>,
        eta: f64,
    ) -> Result<Self> {
        let k = sigma2_tilde.len();
        if k < 2 || mu_tilde.len() != k || counts.len() != k {
            return Err(Error::Validation(format!(
                "estimate vectors must share a length of at least 2 \
                 (got {k}, {}, {})",
                mu_tilde.len(),
                counts.len()
            )));
        }
        let sigma2_hat = sigma2_tilde
            .iter()
            .map(|&v| floor_variance(v, eta))
            .collect::<Result<Vec<_>>>()?;
        Ok(VarianceEstimates {
            sigma2_hat,
            mu_tilde,
            counts,
        })
    }

    pub fn k(&self) -> usize {
        self.sigma2_hat.len()
    }

    /// Floored variance estimates, all at least the floor value.
    pub fn sigma2_hat(&self) -> &[f64] {
        &self.sigma2_hat
    }

    /// Running means (zero for arms never observed).
    pub fn mu_tilde(&self) -> &[f64] {
        &self.mu_tilde
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }
}

/// Raw-variance floor: an exactly zero raw variance (an unseen arm, or all
/// observations identical) maps to `eta`; any positive value passes through
/// untouched, however small.
pub fn floor_variance(sigma2_tilde: f64, eta: f64) -> Result<f64> {
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::Validation(format!(
            "eta must be finite and positive (got {eta})"
        )));
    }
    if !sigma2_tilde.is_finite() || sigma2_tilde < 0.0 {
        return Err(Error::Validation(format!(
            "raw variance must be finite and nonnegative (got {sigma2_tilde})"
        )));
    }
    Ok(if sigma2_tilde == 0.0 { eta } else { sigma2_tilde })
}

/// Plug-in allocation: the target-weight formula evaluated at the current
/// best-mean guess (argmax of running means, ties to the lowest index) and
/// the square roots of the floored variance estimates.
///
/// Requires at least one observation per arm; call only after the
/// initialization rounds.
pub fn gna_estimated_weights(est: &VarianceEstimates) -> Result<Weights> {
    if let Some(a) = est.counts().iter().position(|&n| n == 0) {
        return Err(Error::Validation(format!(
            "arm {a} has no observations; every arm must be pulled before \
             adaptive weighting"
        )));
    }
    let best = argmax_tie_low(est.mu_tilde());
    let sigmas: Vec<f64> = est.sigma2_hat().iter().map(|&v| v.sqrt()).collect();
    gna_target_weights(best, &sigmas)
}

/// Equal split across K arms.
pub fn uniform_weights(k: usize) -> Result<Weights> {
    if k < 2 {
        return Err(Error::Validation(format!("K must be at least 2 (got {k})")));
    }
    Weights::new(vec![1.0 / k as f64; k])
}

/// Total evaluation budget shared by the nested bisections in
/// [`gj_oracle_weights`].
const GJ_MAX_EVALS: usize = 10_000;

/// Full-information max-min allocation (the infeasible oracle baseline):
/// maximizes the smallest pairwise misidentification exponent
/// Δ_a²/(2(σ²_best/w_best + σ²_a/w_a)) over the simplex, for gaps measured
/// from the unique best mean.
///
/// At the optimum every suboptimal exponent is equal and the weights balance
/// w_best²/σ²_best = Σ_{a≠best} w_a²/σ²_a. The solver nests two bisections:
/// the inner one finds, for a trial best-arm weight x, the common exponent R
/// at which the induced suboptimal weights w_a = σ²_a/(Δ_a²/(2R) − σ²_best/x)
/// fill the remaining mass 1−x; the outer one drives the balance residual
/// over x to zero. Fails with the final residuals if the evaluation budget is
/// exhausted before both characterizations hold within `tol`.
pub fn gj_oracle_weights(means: &[f64], variances: &[f64], tol: f64) -> Result<Weights> {
    let k = means.len();
    if k < 2 || variances.len() != k {
        return Err(Error::Validation(format!(
            "means and variances must share a length of at least 2 \
             (got {k} and {})",
            variances.len()
        )));
    }
    for (a, &v) in variances.iter().enumerate() {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::Validation(format!(
                "variance {a} must be finite and positive (got {v})"
            )));
        }
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::Validation(format!(
            "tol must lie in (0, 1e-3] (got {tol})"
        )));
    }
    let best = argmax_tie_low(means);
    if means.iter().filter(|&&m| m == means[best]).count() > 1 {
        return Err(Error::Validation(
            "non-unique best arm: the max-min exponent is degenerate".into(),
        ));
    }
    let gaps: Vec<f64> = means.iter().map(|&m| means[best] - m).collect();

    let mut evals = 0usize;

    // Inner solve: the common exponent R for a given best-arm weight x.
    // g(R) = sum_a w_a(R) - (1 - x) rises from -(1-x) to +infinity on
    // (0, R_max), so plain bisection is safe.
    let suboptimal: Vec<usize> = (0..k).filter(|&a| a != best).collect();
    let inner = |x: f64, evals: &mut usize| -> (f64, Vec<f64>) {
        let r_max = suboptimal
            .iter()
            .map(|&a| gaps[a] * gaps[a] * x / (2.0 * variances[best]))
            .fold(f64::INFINITY, f64::min);
        let w_at = |r: f64| -> Vec<f64> {
            suboptimal
                .iter()
                .map(|&a| {
                    let d = gaps[a] * gaps[a] / (2.0 * r) - variances[best] / x;
                    if d <= 0.0 {
                        f64::INFINITY
                    } else {
                        variances[a] / d
                    }
                })
                .collect()
        };
        let (mut lo, mut hi) = (0.0, r_max);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            *evals += 1;
            let total: f64 = w_at(mid).iter().sum();
            if total < 1.0 - x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = 0.5 * (lo + hi);
        (r, w_at(r))
    };

    // Outer residual: balance of squared weights over variances.
    let balance = |x: f64, evals: &mut usize| -> f64 {
        let (_, w) = inner(x, evals);
        let tail: f64 = suboptimal
            .iter()
            .zip(&w)
            .map(|(&a, &wa)| wa * wa / variances[a])
            .sum();
        x * x / variances[best] - tail
    };

    // The residual is negative for x near 0 and positive near 1; scan for a
    // bracketing interval, then bisect to floating-point exhaustion.
    let mut lo = 1e-6;
    let mut hi = 1.0 - 1e-6;
    let b_lo = balance(lo, &mut evals);
    if b_lo > 0.0 {
        let mut bracket = None;
        for i in 1..100 {
            let x = i as f64 / 100.0;
            if balance(x, &mut evals) < 0.0 {
                bracket = Some(x);
                break;
            }
        }
        match bracket {
            Some(x) => lo = x,
            None => {
                return Err(Error::Computation(format!(
                    "max-min solver found no sign change; balance residual at \
                     x={lo} is {b_lo}"
                )));
            }
        }
    }
    while evals < GJ_MAX_EVALS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if balance(mid, &mut evals) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let x = 0.5 * (lo + hi);
    let (r, w_sub) = inner(x, &mut evals);
    let mut w = vec![0.0; k];
    w[best] = x;
    for (&a, &wa) in suboptimal.iter().zip(&w_sub) {
        w[a] = wa;
    }

    // Verify both optimality characterizations before returning.
    let rate = |a: usize| -> f64 {
        gaps[a] * gaps[a] / (2.0 * (variances[best] / w[best] + variances[a] / w[a]))
    };
    let rate_spread = suboptimal
        .iter()
        .map(|&a| (rate(a) - r).abs() / r.max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let tail: f64 = suboptimal.iter().map(|&a| w[a] * w[a] / variances[a]).sum();
    let balance_residual = (w[best] * w[best] / variances[best] - tail).abs();
    if rate_spread > tol || balance_residual > tol {
        return Err(Error::Computation(format!(
            "max-min solver did not converge within {GJ_MAX_EVALS} evaluations: \
             rate spread {rate_spread:.3e}, balance residual {balance_residual:.3e}"
        )));
    }
    Weights::new(w)
}

/// Exhaustive simplex-grid maximizer of a min-rate objective; the test oracle
/// the closed forms and the nested solver are compared against.
///
/// Walks every interior grid point with coordinates that are positive
/// multiples of `grid_step` summing to one, and returns the best point (ties
/// keep the first in lexicographic order). The grid has roughly
/// (1/grid_step)^(K-1) points, which is why K is capped at 4.
pub fn bruteforce_maxmin_weights<F>(objective: F, k: usize, grid_step: f64) -> Result<Weights>
where
    F: Fn(&[f64]) -> f64,
{
    if !(2..=4).contains(&k) {
        return Err(Error::Validation(format!(
            "exhaustive grid supports 2 <= K <= 4 (got {k})"
        )));
    }
    if !(1e-3..=1e-1).contains(&grid_step) {
        return Err(Error::Validation(format!(
            "grid_step must lie in [1e-3, 1e-1] (got {grid_step})"
        )));
    }
    let n = (1.0 / grid_step).round() as u64;
    if ((n as f64) * grid_step - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!(
            "1/grid_step must be an integer (got {grid_step})"
        )));
    }

    let mut best_w: Option<Vec<f64>> = None;
    let mut best_val = f64::NEG_INFINITY;
    let mut counts = vec![0u64; k];
    // Recursive walk over compositions of n into k positive parts.
    fn walk<F: Fn(&[f64]) -> f64>(
        counts: &mut Vec<u64>,
        pos: usize,
        remaining: u64,
        n: u64,
        objective: &F,
        best_val: &mut f64,
        best_w: &mut Option<Vec<f64>>,
    ) {
        let k = counts.len();
        if pos == k - 1 {
            counts[pos] = remaining;
            let w: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
            let val = objective(&w);
            if val > *best_val {
                *best_val = val;
                *best_w = Some(w);
            }
            return;
        }
        let tail_arms = (k - 1 - pos) as u64;
        for c in 1..=remaining - tail_arms {
            counts[pos] = c;
            walk(counts, pos + 1, remaining - c, n, objective, best_val, best_w);
        }
    }
    walk(
        &mut counts,
        0,
        n,
        n,
        &objective,
        &mut best_val,
        &mut best_w,
    );
    let w = best_w.ok_or_else(|| {
        Error::Computation("grid too coarse: no interior point exists".into())
    })?;
    Weights::new(w)
}
