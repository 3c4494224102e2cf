//! Concrete reaction-diffusion models: the scalar logistic (Fisher) equation
//! used for calibration, and the two-component ungulate-grass system together
//! with its cooperative bounding reactions.
//!
//! A [`ModelSpec`] packages everything the rest of the crate needs: diffusion
//! coefficients, the reaction `f` with its Jacobian `J0 = f'(0)` at the
//! extinction state, the cooperative bounds `f- <= f <= f+` sharing that
//! Jacobian, and the equilibria `0 << k- <= k <= k+`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectral::QuasiPositiveMatrix;

/// Vector field evaluated in place: `out = f(u)`.
pub type ReactionFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Which reaction a solver should use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reaction {
    /// The model's own reaction `f`.
    F,
    /// The cooperative lower bound `f-`.
    FMinus,
    /// The cooperative upper bound `f+`.
    FPlus,
    /// The `f-` variant with the benefit function replaced by zero,
    /// used for the invariance argument (ungulate only).
    HZero,
    /// The zero map; `H(u) = beta u`. Used by kernel-normalization checks.
    Zero,
}

/// Tolerance for exact equilibrium residuals `|f(equilibrium)|`.
pub const EQUILIBRIUM_TOL: f64 = 1e-12;
/// Tolerance for sampled cooperativity of off-diagonal Jacobian entries.
pub const COOPERATIVE_TOL: f64 = -1e-10;

#[derive(Clone)]
pub struct ModelSpec {
    pub name: String,
    /// Diffusion coefficients, one per component.
    pub d: Vec<f64>,
    /// Jacobian of `f` (and of `f-`, `f+`) at the origin.
    pub j0: QuasiPositiveMatrix,
    pub k: Vec<f64>,
    pub k_minus: Vec<f64>,
    pub k_plus: Vec<f64>,
    f: ReactionFn,
    f_minus: ReactionFn,
    f_plus: ReactionFn,
    f_h_zero: Option<ReactionFn>,
    cooperative: bool,
}

impl std::fmt::Debug for ModelSpec {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("d", &self.d)
            .field("k", &self.k)
            .field("k_minus", &self.k_minus)
            .field("k_plus", &self.k_plus)
            .field("cooperative", &self.cooperative)
            .finish()
    }
}

impl ModelSpec {
    /// Validates and assembles a model. Checks dimensions, positivity of
    /// diffusion, the equilibrium residuals of `f` and `f±`, and the ordering
    /// `0 << k- <= k <= k+`. Whether `f` itself is cooperative on `[0, k]` is
    /// determined by sampling and cached.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        d: Vec<f64>,
        j0: QuasiPositiveMatrix,
        k: Vec<f64>,
        k_minus: Vec<f64>,
        k_plus: Vec<f64>,
        f: ReactionFn,
        f_minus: ReactionFn,
        f_plus: ReactionFn,
        f_h_zero: Option<ReactionFn>,
    ) -> Result<Self> {
        let n = d.len();
        if n == 0 {
            return Err(Error::InvalidInput("model dimension must be >= 1".into()));
        }
        if j0.n() != n || k.len() != n || k_minus.len() != n || k_plus.len() != n {
            return Err(Error::InvalidInput("inconsistent model dimensions".into()));
        }
        if d.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::InvalidInput("diffusion coefficients must be positive".into()));
        }
        for i in 0..n {
            if !(k_minus[i] > 0.0 && k_minus[i] <= k[i] && k[i] <= k_plus[i]) {
                return Err(Error::InvalidInput(format!(
                    "equilibria must satisfy 0 << k- <= k <= k+ componentwise; component {i}: \
                     k- = {}, k = {}, k+ = {}",
                    k_minus[i], k[i], k_plus[i]
                )));
            }
        }
        let mut buf = vec![0.0; n];
        let zero = vec![0.0; n];
        let norm_inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        for (label, func, point) in [
            ("f(0)", &f, &zero),
            ("f(k)", &f, &k),
            ("f-(0)", &f_minus, &zero),
            ("f-(k-)", &f_minus, &k_minus),
            ("f+(0)", &f_plus, &zero),
            ("f+(k+)", &f_plus, &k_plus),
        ] {
            func(point, &mut buf);
            let r = norm_inf(&buf);
            if r > EQUILIBRIUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "equilibrium residual |{label}| = {r:.3e} exceeds {EQUILIBRIUM_TOL:.0e}"
                )));
            }
        }
        let mut model = Self {
            name: name.to_string(),
            d,
            j0,
            k,
            k_minus,
            k_plus,
            f,
            f_minus,
            f_plus,
            f_h_zero,
            cooperative: false,
        };
        model.cooperative = sampled_offdiag_min(&model, Reaction::F, &model.k, 17) >= COOPERATIVE_TOL;
        Ok(model)
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    /// Whether the given reaction is cooperative on its invariant box.
    pub fn is_cooperative(&self, r: Reaction) -> bool {
        match r {
            Reaction::F => self.cooperative,
            Reaction::FMinus | Reaction::FPlus | Reaction::HZero | Reaction::Zero => true,
        }
    }

    pub fn has_reaction(&self, r: Reaction) -> bool {
        !matches!(r, Reaction::HZero) || self.f_h_zero.is_some()
    }

    /// Equilibrium associated with a reaction: `k` for `f`, `k±` for `f±`.
    pub fn k_of(&self, r: Reaction) -> &[f64] {
        match r {
            Reaction::F | Reaction::Zero | Reaction::HZero => &self.k,
            Reaction::FMinus => &self.k_minus,
            Reaction::FPlus => &self.k_plus,
        }
    }

    /// Evaluates the selected reaction at `u`.
    pub fn eval_into(&self, r: Reaction, u: &[f64], out: &mut [f64]) {
        match r {
            Reaction::F => (self.f)(u, out),
            Reaction::FMinus => (self.f_minus)(u, out),
            Reaction::FPlus => (self.f_plus)(u, out),
            Reaction::HZero => {
                let f = self
                    .f_h_zero
                    .as_ref()
                    .expect("model does not define the zero-benefit reaction variant");
                f(u, out)
            }
            Reaction::Zero => out.fill(0.0),
        }
    }
}

/// Numerical Jacobian of a reaction at `u` by central differences
/// (step `1e-6 * (1 + |u_j|)`).
pub fn numeric_jacobian(model: &ModelSpec, r: Reaction, u: &[f64]) -> Vec<f64> {
    let n = model.n();
    let mut jac = vec![0.0; n * n];
    let mut up = u.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let eps = 1e-6 * (1.0 + u[j].abs());
        up[j] = u[j] + eps;
        model.eval_into(r, &up, &mut fp);
        up[j] = u[j] - eps;
        model.eval_into(r, &up, &mut fm);
        up[j] = u[j];
        for i in 0..n {
            jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * eps);
        }
    }
    jac
}

/// Second-order one-sided Jacobian at the origin. One-sided because the
/// reactions are only defined (extended by constants) left of zero, which
/// would bias a central difference.
pub fn numeric_jacobian_at_zero(model: &ModelSpec, r: Reaction) -> Vec<f64> {
    let n = model.n();
    let mut jac = vec![0.0; n * n];
    let mut u = vec![0.0; n];
    let mut f0 = vec![0.0; n];
    let mut f1 = vec![0.0; n];
    let mut f2 = vec![0.0; n];
    model.eval_into(r, &u, &mut f0);
    for j in 0..n {
        let eps = 1e-6;
        u[j] = eps;
        model.eval_into(r, &u, &mut f1);
        u[j] = 2.0 * eps;
        model.eval_into(r, &u, &mut f2);
        u[j] = 0.0;
        for i in 0..n {
            jac[i * n + j] = (-3.0 * f0[i] + 4.0 * f1[i] - f2[i]) / (2.0 * eps);
        }
    }
    jac
}

/// Minimum sampled off-diagonal Jacobian entry of a reaction over `[0, box_top]`.
fn sampled_offdiag_min(model: &ModelSpec, r: Reaction, box_top: &[f64], per_axis: usize) -> f64 {
    let n = model.n();
    if n == 1 {
        return 0.0;
    }
    let mut min = f64::INFINITY;
    let mut u = vec![0.0; n];
    let total = per_axis.pow(n as u32);
    for flat in 0..total {
        let mut rem = flat;
        for (j, uj) in u.iter_mut().enumerate() {
            let idx = rem % per_axis;
            rem /= per_axis;
            *uj = box_top[j] * idx as f64 / (per_axis - 1) as f64;
        }
        let jac = numeric_jacobian(model, r, &u);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    min = min.min(jac[i * n + j]);
                }
            }
        }
    }
    min
}

/// The scalar logistic model: `d = 1`, `f(u) = u (1 - u)`, `k = k± = 1`.
pub fn fisher() -> ModelSpec {
    let f: ReactionFn = Arc::new(|u: &[f64], out: &mut [f64]| {
        out[0] = u[0] * (1.0 - u[0]);
    });
    ModelSpec::new(
        "fisher",
        vec![1.0],
        QuasiPositiveMatrix::new(1, vec![1.0]).expect("1x1 matrix"),
        vec![1.0],
        vec![1.0],
        vec![1.0],
        f.clone(),
        f.clone(),
        f,
        None,
    )
    .expect("the Fisher model is valid by construction")
}

/// Unimodal growth-benefit function for the grass equation.
#[derive(Clone)]
pub struct BenefitFn {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Location of the maximum.
    pub h_m: f64,
    /// Analytic derivative at zero, when known.
    analytic_slope0: Option<f64>,
}

impl BenefitFn {
    /// `h(w) = w e^{-w}`, maximal at `h_m = 1` with `h'(0) = 1`.
    pub fn ricker() -> Self {
        Self {
            f: Arc::new(|w: f64| w * (-w).exp()),
            h_m: 1.0,
            analytic_slope0: Some(1.0),
        }
    }

    /// User-supplied benefit function; `h'(0)` is estimated by a central
    /// difference of step `1e-6` just inside the domain.
    pub fn custom(f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, h_m: f64) -> Self {
        Self { f, h_m, analytic_slope0: None }
    }

    /// Evaluates `h`, extended by zero for negative arguments.
    pub fn eval(&self, w: f64) -> f64 {
        if w < 0.0 {
            0.0
        } else {
            (self.f)(w)
        }
    }

    /// `h'(0)`.
    pub fn slope0(&self) -> f64 {
        match self.analytic_slope0 {
            Some(s) => s,
            None => {
                let eps = 1e-6;
                (self.eval(2.0 * eps) - self.eval(0.0)) / (2.0 * eps)
            }
        }
    }
}

impl std::fmt::Debug for BenefitFn {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("BenefitFn").field("h_m", &self.h_m).finish()
    }
}

/// Parameters of the ungulate-grass system after the shift of the grass
/// variable to its carrying state.
#[derive(Debug, Clone)]
pub struct UngulateParams {
    pub d1: f64,
    pub d2: f64,
    pub alpha: f64,
    pub delta: f64,
    pub r1: f64,
    pub r2: f64,
    pub h: BenefitFn,
}

impl UngulateParams {
    /// The worked parameter set: `d = (1, 0.5)`, `alpha = 1`, `delta = 1`,
    /// `r1 = 2`, `r2 = 1`, Ricker benefit. Minimum speed 2.
    pub fn example() -> Self {
        Self { d1: 1.0, d2: 0.5, alpha: 1.0, delta: 1.0, r1: 2.0, r2: 1.0, h: BenefitFn::ricker() }
    }

    /// Names every violated parameter invariant. An empty list means the
    /// full hypothesis set of the minimum-speed theorem holds.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, val) in [
            ("d1", self.d1),
            ("d2", self.d2),
            ("alpha", self.alpha),
            ("delta", self.delta),
            ("r1", self.r1),
            ("r2", self.r2),
        ] {
            if !(val > 0.0) {
                v.push(format!("{name} must be positive, got {val}"));
            }
        }
        if self.d1 < self.d2 {
            v.push(format!("d1 >= d2 required, got d1 = {}, d2 = {}", self.d1, self.d2));
        }
        if self.alpha >= self.r1 {
            v.push(format!("alpha < r1 required, got alpha = {}, r1 = {}", self.alpha, self.r1));
        }
        let threshold = self.r1 * self.r2 * self.h.slope0() / (self.r1 + self.r2 - self.alpha);
        if self.delta < threshold {
            v.push(format!(
                "delta >= r1 r2 h'(0) / (r1 + r2 - alpha) required, got delta = {} < {threshold}",
                self.delta
            ));
        }
        if let Ok((k1, _)) = solve_equilibrium(self, HVariant::H) {
            if k1 <= self.h.h_m {
                v.push(format!(
                    "k1 > h_m required, got k1 = {k1}, h_m = {} (cooperative regime)",
                    self.h.h_m
                ));
            }
        }
        v
    }
}

/// Which benefit variant an equilibrium solve refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HVariant {
    H,
    HPlus,
    HMinus,
    HZero,
}

/// Plateau constructions bounding `h`: `h+` freezes `h` at its maximum,
/// `h-` freezes it at `h(k1+)` from the matching point `h0` on the rising
/// branch. All three coincide on `[0, h0]`.
pub struct HBounds {
    pub h_plus: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub h_minus: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub h0: f64,
    pub k1_plus: f64,
    /// Plateau level of `h+`, i.e. `h(h_m)`.
    pub h_max: f64,
    /// Plateau level of `h-`, i.e. `h(k1_plus)`.
    pub h_at_k1_plus: f64,
}

fn bisect(mut lo: f64, mut hi: f64, mut f: impl FnMut(f64) -> f64, xtol: f64) -> f64 {
    let flo = f(lo);
    debug_assert!(flo <= 0.0);
    let _ = flo;
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the scalar equilibrium condition `delta k1 = (r1 - alpha) + r1 h_v(k1)`
/// by bisection (bracket `[1e-12, K]` with `K` doubling from 4, absolute
/// tolerance 1e-13), and returns `(k1, h_v(k1))`.
pub fn solve_equilibrium(params: &UngulateParams, which: HVariant) -> Result<(f64, f64)> {
    if params.alpha >= params.r1 {
        return Err(Error::InvalidInput(format!(
            "alpha < r1 required for a positive equilibrium, got alpha = {}, r1 = {}",
            params.alpha, params.r1
        )));
    }
    let hv: Arc<dyn Fn(f64) -> f64 + Send + Sync> = match which {
        HVariant::H => {
            let h = params.h.clone();
            Arc::new(move |w| h.eval(w))
        }
        HVariant::HZero => Arc::new(|_| 0.0),
        HVariant::HPlus => build_h_pm(params)?.h_plus,
        HVariant::HMinus => build_h_pm(params)?.h_minus,
    };
    let (delta, r1, alpha) = (params.delta, params.r1, params.alpha);
    let g = move |w: f64| delta * w - (r1 - alpha) - r1 * hv(w);
    let mut hi = 4.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e18 {
            return Err(Error::InvalidInput(
                "no positive equilibrium: the balance function never changes sign".into(),
            ));
        }
    }
    let k1 = bisect(1e-12, hi, g, 1e-13);
    let residual = delta * k1 - (r1 - alpha) - r1 * hv_eval(params, which, k1)?;
    if residual.abs() > 1e-12 {
        return Err(Error::Internal(format!(
            "equilibrium residual {residual:.3e} exceeds 1e-12"
        )));
    }
    Ok((k1, hv_eval(params, which, k1)?))
}

fn hv_eval(params: &UngulateParams, which: HVariant, w: f64) -> Result<f64> {
    Ok(match which {
        HVariant::H => params.h.eval(w),
        HVariant::HZero => 0.0,
        HVariant::HPlus => (build_h_pm(params)?.h_plus)(w),
        HVariant::HMinus => (build_h_pm(params)?.h_minus)(w),
    })
}

/// Builds the plateau bounds `h+`, `h-` and the matching point `h0`.
///
/// `h+` equals `h` up to `h_m` and its maximum value beyond; its equilibrium
/// gives `k1+`. `h0` is the point on the rising branch where `h` equals
/// `h(k1+)`, and `h-` equals `h` up to `h0`, then stays at `h(k1+)`.
pub fn build_h_pm(params: &UngulateParams) -> Result<HBounds> {
    let h = params.h.clone();
    let h_m = h.h_m;
    let h_max = h.eval(h_m);
    if !(h_max > 0.0) {
        return Err(Error::InvalidInput(format!(
            "benefit function must be positive at its maximum, got h(h_m) = {h_max}"
        )));
    }
    let h_plus: Arc<dyn Fn(f64) -> f64 + Send + Sync> = {
        let h = h.clone();
        Arc::new(move |w| if w <= h_m { h.eval(w) } else { h_max })
    };
    // Equilibrium of the h+ system.
    let (delta, r1, alpha) = (params.delta, params.r1, params.alpha);
    let hp = h_plus.clone();
    let g = move |w: f64| delta * w - (r1 - alpha) - r1 * hp(w);
    let mut hi = 4.0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        if hi > 1e18 {
            return Err(Error::InvalidInput(
                "no positive equilibrium for the upper bounding system".into(),
            ));
        }
    }
    let k1_plus = bisect(1e-12, hi, g, 1e-13);
    let h_at_k1_plus = h.eval(k1_plus);
    if h_at_k1_plus > h_max {
        return Err(Error::Internal(format!(
            "h(k1+) = {h_at_k1_plus} exceeds the maximum {h_max}; unimodality violated"
        )));
    }
    // h0 on the rising branch with h(h0) = h(k1+).
    let hh = h.clone();
    let h0 = bisect(1e-12, h_m, move |w| hh.eval(w) - h_at_k1_plus, 1e-13);
    let h_minus: Arc<dyn Fn(f64) -> f64 + Send + Sync> = {
        let h = h.clone();
        Arc::new(move |w| if w <= h0 { h.eval(w) } else { h_at_k1_plus })
    };
    Ok(HBounds { h_plus, h_minus, h0, k1_plus, h_max, h_at_k1_plus })
}

/// Assembles the ungulate-grass model:
/// `f1 = w1 (r1 - alpha - delta w1 + r1 w2)`,
/// `f2 = r2 (1 + w2)(-w2 + h(w1))`,
/// with `f±` obtained by substituting `h±` and an additional zero-benefit
/// variant used by the invariance argument.
///
/// Construction fails for structurally infeasible parameters (non-positive
/// values, `alpha >= r1`, or `k1 <= h_m`, where the system is cooperative and
/// the bounding construction does not apply). The remaining hypotheses
/// (`d1 >= d2` and the `delta` threshold) are left to the numeric checkers so
/// that their failure modes stay observable.
pub fn ungulate(params: &UngulateParams) -> Result<ModelSpec> {
    for (name, val) in [
        ("d1", params.d1),
        ("d2", params.d2),
        ("alpha", params.alpha),
        ("delta", params.delta),
        ("r1", params.r1),
        ("r2", params.r2),
    ] {
        if !(val > 0.0) || !val.is_finite() {
            return Err(Error::InvalidInput(format!("{name} must be positive, got {val}")));
        }
    }
    if params.alpha >= params.r1 {
        return Err(Error::InvalidInput(format!(
            "alpha < r1 required (the extinction state must be linearly unstable), got \
             alpha = {}, r1 = {}",
            params.alpha, params.r1
        )));
    }
    let (k1, k2) = solve_equilibrium(params, HVariant::H)?;
    if k1 <= params.h.h_m {
        return Err(Error::InvalidInput(format!(
            "k1 = {k1} does not exceed h_m = {}; this regime is cooperative and not supported",
            params.h.h_m
        )));
    }
    let bounds = build_h_pm(params)?;
    let (k1p, k2p) = (bounds.k1_plus, bounds.h_max);
    let (k1m, k2m) = solve_equilibrium(params, HVariant::HMinus)?;

    let slope0 = params.h.slope0();
    let j0 = QuasiPositiveMatrix::new(
        2,
        vec![params.r1 - params.alpha, 0.0, params.r2 * slope0, -params.r2],
    )?;

    let mk_reaction = |h: Arc<dyn Fn(f64) -> f64 + Send + Sync>| -> ReactionFn {
        let (r1, alpha, delta, r2) = (params.r1, params.alpha, params.delta, params.r2);
        Arc::new(move |u: &[f64], out: &mut [f64]| {
            out[0] = u[0] * (r1 - alpha - delta * u[0] + r1 * u[1]);
            out[1] = r2 * (1.0 + u[1]) * (-u[1] + h(u[0]));
        })
    };
    let h_own = params.h.clone();
    let f = mk_reaction(Arc::new(move |w| h_own.eval(w)));
    let f_minus = mk_reaction(bounds.h_minus.clone());
    let f_plus = mk_reaction(bounds.h_plus.clone());
    let f_h_zero = mk_reaction(Arc::new(|_| 0.0));

    ModelSpec::new(
        "ungulate",
        vec![params.d1, params.d2],
        j0,
        vec![k1, k2],
        vec![k1m, k2m],
        vec![k1p, k2p],
        f,
        f_minus,
        f_plus,
        Some(f_h_zero),
    )
}

/// One named verification with a numeric margin; `margin >= 0` is a pass.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    pub fn from_margin(name: &str, margin: f64) -> Self {
        Self { name: name.to_string(), margin, pass: margin >= 0.0 }
    }
}

/// Sampled verification of the structural hypotheses on `f`, `f±`:
/// equilibrium residuals, the ordering `f- <= f <= f+` on `[0, k+]`,
/// cooperativity of `f±`, and agreement of all three Jacobians at zero.
pub fn check_h1(model: &ModelSpec, per_axis: usize) -> Vec<Check> {
    let n = model.n();
    let mut checks = Vec::new();
    let mut buf = vec![0.0; n];
    let zero = vec![0.0; n];
    let norm_inf = |v: &[f64]| v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));

    let mut eq_worst = 0.0_f64;
    for (rf, point) in [
        (Reaction::F, &zero),
        (Reaction::F, &model.k),
        (Reaction::FMinus, &zero),
        (Reaction::FMinus, &model.k_minus),
        (Reaction::FPlus, &zero),
        (Reaction::FPlus, &model.k_plus),
    ] {
        model.eval_into(rf, point, &mut buf);
        eq_worst = eq_worst.max(norm_inf(&buf));
    }
    checks.push(Check::from_margin("h1.equilibrium_residual", EQUILIBRIUM_TOL - eq_worst));

    let mut order_worst = f64::NEG_INFINITY;
    let mut u = vec![0.0; n];
    let mut fm = vec![0.0; n];
    let mut ff = vec![0.0; n];
    let mut fp = vec![0.0; n];
    let total = per_axis.pow(n as u32);
    for flat in 0..total {
        let mut rem = flat;
        for (j, uj) in u.iter_mut().enumerate() {
            let idx = rem % per_axis;
            rem /= per_axis;
            *uj = model.k_plus[j] * idx as f64 / (per_axis - 1) as f64;
        }
        model.eval_into(Reaction::FMinus, &u, &mut fm);
        model.eval_into(Reaction::F, &u, &mut ff);
        model.eval_into(Reaction::FPlus, &u, &mut fp);
        for i in 0..n {
            order_worst = order_worst.max(fm[i] - ff[i]).max(ff[i] - fp[i]);
        }
    }
    checks.push(Check::from_margin("h1.reaction_ordering", 1e-12 - order_worst));

    let coop_minus = sampled_offdiag_min(model, Reaction::FMinus, &model.k_minus, per_axis);
    let coop_plus = sampled_offdiag_min(model, Reaction::FPlus, &model.k_plus, per_axis);
    checks.push(Check::from_margin(
        "h1.bounds_cooperative",
        coop_minus.min(coop_plus) - COOPERATIVE_TOL,
    ));

    let mut jac_worst = 0.0_f64;
    for rf in [Reaction::F, Reaction::FMinus, Reaction::FPlus] {
        let jac = numeric_jacobian_at_zero(model, rf);
        for i in 0..n {
            for j in 0..n {
                jac_worst = jac_worst.max((jac[i * n + j] - model.j0.get(i, j)).abs());
            }
        }
    }
    checks.push(Check::from_margin("h1.shared_jacobian_at_zero", 1e-10 - jac_worst));
    checks
}

/// Report of the sampled benefit-function hypotheses.
#[derive(Debug, Clone)]
pub struct H4Report {
    pub checks: Vec<Check>,
}

impl H4Report {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Verifies on a grid: `h(0) = 0`, `h'(0) > 0`, unimodality about `h_m`,
/// decay at infinity, strict decrease of `h(w)/w`, and the quadratic
/// inequality `h^2 + 4h - 4 h'(0) w <= 0`.
pub fn check_h4(h: &BenefitFn, grid: &[f64]) -> Result<H4Report> {
    if grid.len() < 3 {
        return Err(Error::InvalidInput("H4 grid must have at least 3 points".into()));
    }
    let slope0 = h.slope0();
    let mut checks = Vec::new();
    checks.push(Check::from_margin("h4.h_vanishes_at_zero", 1e-12 - h.eval(0.0).abs()));
    checks.push(Check::from_margin("h4.positive_slope_at_zero", slope0));

    let mut unimodal_worst = f64::NEG_INFINITY;
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (ha, hb) = (h.eval(a), h.eval(b));
        if b <= h.h_m {
            unimodal_worst = unimodal_worst.max(ha - hb); // must be nondecreasing
        } else if a >= h.h_m {
            unimodal_worst = unimodal_worst.max(hb - ha); // must be nonincreasing
        }
    }
    checks.push(Check::from_margin("h4.unimodal_about_h_m", 1e-12 - unimodal_worst));

    let w_end = *grid.last().unwrap();
    checks.push(Check::from_margin("h4.decays_at_infinity", 1e-6 - h.eval(w_end).abs()));

    // h(w)/w strictly decreasing on the positive part of the grid.
    let mut ratio_worst = f64::NEG_INFINITY;
    let mut prev: Option<f64> = None;
    for &w in grid.iter().filter(|&&w| w > 0.0) {
        let ratio = h.eval(w) / w;
        if let Some(p) = prev {
            ratio_worst = ratio_worst.max(ratio - p);
        }
        prev = Some(ratio);
    }
    // Strictness: any nonnegative increment is a violation.
    let strict_margin = if ratio_worst >= 0.0 { -ratio_worst - f64::MIN_POSITIVE } else { -ratio_worst };
    checks.push(Check { name: "h4.ratio_strictly_decreasing".into(), margin: strict_margin, pass: ratio_worst < 0.0 });

    let mut quad_worst = f64::NEG_INFINITY;
    for &w in grid {
        let hw = h.eval(w);
        quad_worst = quad_worst.max(hw * hw + 4.0 * hw - 4.0 * slope0 * w);
    }
    checks.push(Check::from_margin("h4.quadratic_inequality", 1e-12 - quad_worst));

    Ok(H4Report { checks })
}

/// Default H4 grid: `10^4` points on `(0, max(50, 5 k1_plus)]` plus the origin.
pub fn h4_default_grid(k1_plus: f64) -> Vec<f64> {
    let top = 50.0_f64.max(5.0 * k1_plus);
    let n = 10_000;
    (0..=n).map(|i| top * i as f64 / n as f64).collect()
}

/// Outcome of the delta-threshold verification together with the two
/// sampled sufficient inequalities it feeds.
#[derive(Debug, Clone)]
pub struct DeltaThresholdReport {
    pub threshold: f64,
    pub delta: f64,
    pub checks: Vec<Check>,
}

impl DeltaThresholdReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Evaluates the harvesting threshold `delta >= r1 r2 h'(0) / (r1 + r2 - alpha)`
/// and spot-verifies the derived componentwise inequalities along the
/// eigenvector ray `w2 = (h'(0)/sigma) w1` for sampled decay exponents, where
/// `sigma = 1 + (r1 - alpha + (d1 - d2) lambda^2)/r2`.
pub fn check_5_36(params: &UngulateParams) -> Result<DeltaThresholdReport> {
    if params.alpha >= params.r1 + params.r2 {
        return Err(Error::InvalidInput(format!(
            "alpha < r1 + r2 required, got alpha = {}",
            params.alpha
        )));
    }
    let slope0 = params.h.slope0();
    let threshold = params.r1 * params.r2 * slope0 / (params.r1 + params.r2 - params.alpha);
    let mut checks = vec![Check::from_margin("5_36.delta_threshold", params.delta - threshold)];

    let bounds = build_h_pm(params)?;
    let lambdas = [1e-6, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    // Ungulate growth inequality: delta w1 >= r1 w2 along the ray.
    let mut m1 = f64::INFINITY;
    for &lam in &lambdas {
        let sigma = 1.0 + (params.r1 - params.alpha + (params.d1 - params.d2) * lam * lam) / params.r2;
        m1 = m1.min(params.delta - params.r1 * slope0 / sigma);
    }
    checks.push(Check { name: "5_36.component1_ray_inequality".into(), margin: m1, pass: m1 >= -1e-12 });

    // Grass inequality: h'(0) w1 + w2^2 >= h+(w1)(1 + w2) along the ray.
    let mut m2 = f64::INFINITY;
    let nw = 400;
    for &lam in &lambdas {
        let sigma = 1.0 + (params.r1 - params.alpha + (params.d1 - params.d2) * lam * lam) / params.r2;
        for i in 1..=nw {
            let w1 = bounds.k1_plus * i as f64 / nw as f64;
            let w2 = slope0 / sigma * w1;
            let lhs = slope0 * w1 + w2 * w2;
            let rhs = (bounds.h_plus)(w1) * (1.0 + w2);
            m2 = m2.min(lhs - rhs);
        }
    }
    checks.push(Check { name: "5_36.component2_ray_inequality".into(), margin: m2, pass: m2 >= -1e-12 });

    Ok(DeltaThresholdReport { threshold, delta: params.delta, checks })
}
