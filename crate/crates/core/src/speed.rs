//! Minimum spreading speed and related quantities: minimizes the speed
//! functional `Phi`, solves `Phi(Lambda_c) = c` for the left root governing
//! the wave's leading-edge decay, selects the auxiliary exponent ratio
//! `gamma`, and samples the sublinearity hypothesis (H3).

use crate::error::{Error, Result};
use crate::models::{ModelSpec, Reaction};
use crate::spectral;
use crate::wave;

/// Relative width tolerance of the golden-section search (in `log lambda`).
pub const MINIMIZE_TOL: f64 = 1e-10;
/// Relative residual tolerance of the left-root bisection.
pub const ROOT_TOL: f64 = 1e-10;

/// Speed data for one requested wave speed `c > c*`.
#[derive(Debug, Clone)]
pub struct PerSpeedBlock {
    pub c: f64,
    pub lambda_c: f64,
    pub beta: f64,
    pub gamma: f64,
    pub nu_lambda_c: Vec<f64>,
    pub nu_gamma_lambda_c: Vec<f64>,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
}

/// Minimum speed, its minimizer, and per-speed blocks.
#[derive(Debug, Clone)]
pub struct SpeedReport {
    pub c_star: f64,
    pub lambda_star: f64,
    pub blocks: Vec<PerSpeedBlock>,
}

fn phi_at_log(model: &ModelSpec, t: f64) -> Result<f64> {
    Ok(spectral::phi(model, t.exp())?.phi)
}

/// Golden-section minimization of `Phi` in `log lambda`. The initial range
/// `[1e-4, 1e4]` is expanded whenever the minimizer lands on a boundary;
/// `Phi` diverges at both ends of `(0, inf)` so an interior minimum exists
/// for any admissible model.
pub fn minimize_phi(model: &ModelSpec) -> Result<(f64, f64)> {
    let mut a = (1e-4_f64).ln();
    let mut b = (1e4_f64).ln();
    let span = b - a;
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    for _attempt in 0..3 {
        let (mut lo, mut hi) = (a, b);
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = phi_at_log(model, x1)?;
        let mut f2 = phi_at_log(model, x2)?;
        while hi - lo > MINIMIZE_TOL {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = phi_at_log(model, x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = phi_at_log(model, x2)?;
            }
        }
        let t = 0.5 * (lo + hi);
        if t - a < 10.0 * MINIMIZE_TOL {
            a -= span;
        } else if b - t < 10.0 * MINIMIZE_TOL {
            b += span;
        } else {
            let lambda_star = t.exp();
            let c_star = phi_at_log(model, t)?;
            return Ok((c_star, lambda_star));
        }
    }
    Err(Error::Hypothesis(
        "Phi has no interior minimum in [1e-12, 1e12]; the model violates the \
         divergence of Phi at the ends of (0, inf)"
            .into(),
    ))
}

/// Left (smaller) solution of `Phi(lambda) = c` for `c > c*`, by bisection on
/// `(lambda_lo, lambda_star)` after shrinking `lambda_lo` until `Phi` exceeds
/// `c` there. `Phi` is strictly decreasing on that side, so the root is the
/// leading-edge decay exponent of the wave.
pub fn left_root(model: &ModelSpec, c: f64) -> Result<f64> {
    let (c_star, lambda_star) = minimize_phi(model)?;
    if !(c > c_star * (1.0 + 1e-12)) {
        return Err(Error::SpeedNotAboveCStar { c, c_star });
    }
    let mut lo = lambda_star;
    loop {
        lo *= 0.5;
        if spectral::phi(model, lo)?.phi > c {
            break;
        }
        if lo < 1e-300 {
            return Err(Error::Internal(format!(
                "Phi never exceeds c = {c} for small lambda"
            )));
        }
    }
    let mut hi = lambda_star;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        let p = spectral::phi(model, mid)?.phi;
        if (p - c).abs() < ROOT_TOL * c {
            return Ok(mid);
        }
        if p > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence(format!(
        "left-root bisection did not reach |Phi - c| < {ROOT_TOL:.0e} * c for c = {c}"
    )))
}

/// Scans `gamma` downward from 1.99 in steps of 0.01 and returns the first
/// (largest) value with `Phi(gamma Lambda_c) < c` and all `M_i(gamma
/// Lambda_c) > 0`. Continuity of `M_i` then gives an open feasible
/// neighborhood around the returned value.
pub fn choose_gamma(model: &ModelSpec, c: f64, beta: f64) -> Result<f64> {
    let lambda_c = left_root(model, c)?;
    for k in 0..99 {
        let gamma = (199 - k) as f64 / 100.0;
        let glam = gamma * lambda_c;
        let sp = spectral::phi(model, glam)?;
        if sp.phi >= c {
            continue;
        }
        let m = wave::m_vector_from_point(&sp, &model.d, beta);
        if m.iter().all(|&mi| mi > 0.0) {
            return Ok(gamma);
        }
    }
    Err(Error::Hypothesis(format!(
        "no feasible gamma in (1, 2) for c = {c}, beta = {beta}; \
         increase beta (each M_i grows with beta)"
    )))
}

/// One sampled violation of (H3), identifying where it happened.
#[derive(Debug, Clone, Copy)]
pub struct H3Witness {
    pub alpha: f64,
    pub lambda: f64,
    pub component: usize,
    /// Which bounding reaction produced the violation.
    pub upper_bound: bool,
}

#[derive(Debug, Clone)]
pub struct H3Report {
    /// Largest componentwise value of `f±(v) - alpha J0 nu` over the samples.
    pub max_violation: f64,
    pub witness: Option<H3Witness>,
    pub pass: bool,
}

/// Samples the sublinearity hypothesis along eigenvector rays: for each
/// `(alpha, lambda)`, checks `f±(v) <= alpha J0 nu_lambda` componentwise with
/// the clipped argument `v_i = min(k_i^±, alpha nu_lambda^i)`.
pub fn check_h3(model: &ModelSpec, alpha_samples: &[f64], lambda_samples: &[f64]) -> Result<H3Report> {
    if alpha_samples.is_empty() || lambda_samples.is_empty() {
        return Err(Error::InvalidInput("H3 sample sets must be nonempty".into()));
    }
    let n = model.n();
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    let mut v = vec![0.0; n];
    let mut fv = vec![0.0; n];
    let mut linear = vec![0.0; n];
    for &lambda in lambda_samples {
        let sp = spectral::phi(model, lambda)?;
        model.j0.mul_vec(&sp.nu, &mut linear);
        for &alpha in alpha_samples {
            if !(alpha > 0.0) {
                return Err(Error::InvalidInput(format!("alpha samples must be positive, got {alpha}")));
            }
            for (reaction, upper) in [(Reaction::FMinus, false), (Reaction::FPlus, true)] {
                let k_bound = model.k_of(reaction);
                for i in 0..n {
                    v[i] = k_bound[i].min(alpha * sp.nu[i]);
                }
                model.eval_into(reaction, &v, &mut fv);
                for i in 0..n {
                    let violation = fv[i] - alpha * linear[i];
                    if violation > worst {
                        worst = violation;
                        witness = Some(H3Witness { alpha, lambda, component: i, upper_bound: upper });
                    }
                }
            }
        }
    }
    Ok(H3Report { max_violation: worst, witness, pass: worst <= 1e-12 })
}

/// Default sample sets used by the verification ledger.
pub fn h3_default_alphas() -> Vec<f64> {
    vec![1e-3, 1e-2, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1000.0]
}

pub fn h3_default_lambdas() -> Vec<f64> {
    log_grid(0.05, 20.0, 16)
}

/// Logarithmically spaced grid including both endpoints.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}
