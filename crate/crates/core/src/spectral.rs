//! Linear-algebra core for the linearization about the extinction state.
//!
//! Builds the family `A_lambda = diag(d_i lambda^2) + J0` where `J0 = f'(0)`,
//! computes its principal (Perron-Frobenius) eigenvalue `Psi` and positive
//! eigenvector `nu_lambda`, and evaluates the speed functional
//! `Phi(lambda) = Psi(A_lambda) / lambda`. The principal eigenvalue of a
//! quasi-positive matrix `A` is `rho(A + alpha I) - alpha` for any shift
//! `alpha` making `A + alpha I` entrywise nonnegative.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::ModelSpec;

/// Relative eigenvalue-change tolerance of the power iteration.
pub const POWER_ITER_TOL: f64 = 1e-14;
/// Iteration cap of the power iteration.
pub const POWER_ITER_MAX: usize = 10_000;
/// Strict-positivity threshold for eigenvector components after
/// max-normalization.
pub const TOL_POSITIVE: f64 = 1e-10;
/// Residual tolerance for an accepted eigenpair: `|A nu - psi nu| <=
/// EIG_RESIDUAL_TOL * (1 + |psi|)`. Tighter than the 1e-12 contract so that
/// identities evaluated through the eigenpair stay below 1e-12.
pub const EIG_RESIDUAL_TOL: f64 = 1e-13;
/// Minimum gap to the second-largest real part for `Psi` to count as
/// strictly dominant.
pub const DOMINANCE_GAP_TOL: f64 = 1e-10;

/// Square real matrix whose off-diagonal entries are all nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPositiveMatrix {
    n: usize,
    entries: Vec<f64>, // row-major
}

impl QuasiPositiveMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("matrix dimension must be >= 1".into()));
        }
        if entries.len() != n * n {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                entries.len()
            )));
        }
        for (idx, &e) in entries.iter().enumerate() {
            if !e.is_finite() {
                return Err(Error::InvalidInput(format!("entry {idx} is not finite")));
            }
            let (i, j) = (idx / n, idx % n);
            if i != j && e < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "off-diagonal entry ({i},{j}) = {e} is negative"
                )));
            }
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let row = &self.entries[i * self.n..(i + 1) * self.n];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// One evaluation of the dispersion data at a decay exponent `lambda`:
/// the principal eigenvalue `psi` of `A_lambda`, the positive eigenvector
/// `nu` (max component 1), and `phi = psi / lambda`.
#[derive(Debug, Clone)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub psi: f64,
    pub nu: Vec<f64>,
    pub phi: f64,
}

/// `diag(d_i lambda^2) + j0`; off-diagonal entries are those of `j0`.
pub fn build_a_lambda(d: &[f64], j0: &QuasiPositiveMatrix, lambda: f64) -> Result<QuasiPositiveMatrix> {
    if d.len() != j0.n() {
        return Err(Error::InvalidInput(format!(
            "diffusion vector length {} does not match matrix dimension {}",
            d.len(),
            j0.n()
        )));
    }
    if let Some(bad) = d.iter().find(|&&di| !(di > 0.0) || !di.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "diffusion coefficients must be positive, got {bad}"
        )));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    let n = j0.n();
    let mut entries = j0.entries().to_vec();
    for i in 0..n {
        entries[i * n + i] += d[i] * lambda * lambda;
    }
    QuasiPositiveMatrix::new(n, entries)
}

/// Shifted power iteration on `A + alpha I`. Returns `(psi, nu)` where `nu`
/// has max component 1. Errors if the iteration does not converge or the
/// limit eigenvector is not strictly positive.
pub fn principal_eig(a: &QuasiPositiveMatrix) -> Result<(f64, Vec<f64>)> {
    let alpha = 1.0 + (0..a.n()).map(|i| a.get(i, i).abs()).fold(0.0, f64::max);
    power_iteration(a, alpha)
}

/// Power iteration with an explicit shift; `a + alpha I` must be entrywise
/// nonnegative. The eigenvalue estimate is the max-norm growth factor of the
/// iterate, which converges to `rho(A + alpha I)` from an all-ones start.
fn power_iteration(a: &QuasiPositiveMatrix, alpha: f64) -> Result<(f64, Vec<f64>)> {
    let n = a.n();
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut rho_prev = f64::NAN;
    let mut psi = f64::NAN;
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..POWER_ITER_MAX {
        iterations = it + 1;
        a.mul_vec(&x, &mut y);
        for i in 0..n {
            y[i] += alpha * x[i];
        }
        let rho = y.iter().cloned().fold(0.0, f64::max);
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::SpectralGap {
                message: format!("degenerate iterate at step {it} (growth factor {rho})"),
                iterate: x,
            });
        }
        for v in &mut y {
            *v /= rho;
        }
        std::mem::swap(&mut x, &mut y);
        psi = rho - alpha;
        if (rho - rho_prev).abs() <= POWER_ITER_TOL * (1.0 + rho.abs())
            && eig_residual(a, psi, &x) <= EIG_RESIDUAL_TOL * (1.0 + psi.abs())
        {
            converged = true;
            break;
        }
        rho_prev = rho;
    }

    if !converged {
        return Err(Error::SpectralGap {
            message: format!(
                "power iteration did not converge in {iterations} iterations \
                 (psi estimate {psi:.6e}, residual {:.3e})",
                eig_residual(a, psi, &x)
            ),
            iterate: x,
        });
    }
    if let Some((i, &v)) = x
        .iter()
        .enumerate()
        .min_by(|p, q| p.1.partial_cmp(q.1).unwrap())
    {
        if v <= TOL_POSITIVE {
            return Err(Error::SpectralGap {
                message: format!(
                    "eigenvector is not strictly positive: component {i} = {v:.3e} \
                     after max-normalization"
                ),
                iterate: x,
            });
        }
    }
    Ok((psi, x))
}

fn eig_residual(a: &QuasiPositiveMatrix, psi: f64, x: &[f64]) -> f64 {
    let n = a.n();
    let mut r: f64 = 0.0;
    for i in 0..n {
        let mut ax = 0.0;
        for j in 0..n {
            ax += a.get(i, j) * x[j];
        }
        r = r.max((ax - psi * x[i]).abs());
    }
    r
}

/// Evaluates the speed functional at `lambda`: builds `A_lambda`, computes the
/// principal eigenpair and returns `phi = psi / lambda`. The principal
/// eigenvalue must be positive.
pub fn phi(model: &ModelSpec, lambda: f64) -> Result<SpectralPoint> {
    let a = build_a_lambda(&model.d, &model.j0, lambda)?;
    let (psi, nu) = principal_eig(&a)?;
    if psi <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "Psi(A_lambda) = {psi:.6e} is not positive at lambda = {lambda}"
        )));
    }
    Ok(SpectralPoint { lambda, psi, nu, phi: psi / lambda })
}

/// Coefficients of the characteristic polynomial
/// `det(sI - A) = s^n + c[0] s^(n-1) + ... + c[n-1]`
/// via the Faddeev-LeVerrier recursion.
fn char_poly(a: &QuasiPositiveMatrix) -> Vec<f64> {
    let n = a.n();
    let mut m = vec![0.0; n * n]; // M_0 = 0, then M_k
    let mut c = Vec::with_capacity(n);
    let mut prev = {
        // M_1 = A
        let mut p = a.entries().to_vec();
        let tr: f64 = (0..n).map(|i| a.get(i, i)).sum();
        c.push(-tr);
        std::mem::swap(&mut m, &mut p);
        m
    };
    for k in 2..=n {
        // M_k = A (M_{k-1} + c_{k-1} I)
        let mut shifted = prev.clone();
        for i in 0..n {
            shifted[i * n + i] += c[k - 2];
        }
        let mut next = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += a.get(i, l) * shifted[l * n + j];
                }
                next[i * n + j] = s;
            }
        }
        let tr: f64 = (0..n).map(|i| next[i * n + i]).sum();
        c.push(-tr / k as f64);
        prev = next;
    }
    c
}

/// Durand-Kerner root finder for a monic real polynomial
/// `s^n + c[0] s^(n-1) + ... + c[n-1]`.
fn poly_roots(c: &[f64]) -> Vec<Complex64> {
    let n = c.len();
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![Complex64::new(-c[0], 0.0)];
    }
    let bound = 1.0 + c.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
    let seed = Complex64::new(0.4, 0.9);
    let mut z: Vec<Complex64> = (0..n).map(|j| seed.powu(j as u32 + 1) * bound).collect();
    let eval = |s: Complex64| -> Complex64 {
        let mut p = Complex64::new(1.0, 0.0);
        for &ck in c {
            p = p * s + ck;
        }
        p
    };
    for _ in 0..1000 {
        let mut max_step = 0.0_f64;
        for j in 0..n {
            let mut denom = Complex64::new(1.0, 0.0);
            for l in 0..n {
                if l != j {
                    denom *= z[j] - z[l];
                }
            }
            if denom.norm() == 0.0 {
                z[j] += Complex64::new(1e-8 * bound, 1e-8 * bound);
                max_step = f64::INFINITY;
                continue;
            }
            let step = eval(z[j]) / denom;
            z[j] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[j].norm()));
        }
        if max_step < 1e-14 {
            break;
        }
    }
    z
}

/// All eigenvalues of an `n <= 4` matrix as roots of its characteristic
/// polynomial. This is the dense full-spectrum route used to verify
/// dominance; the principal pair itself always comes from the power
/// iteration.
pub fn dense_eigenvalues(a: &QuasiPositiveMatrix) -> Result<Vec<Complex64>> {
    if a.n() > 4 {
        return Err(Error::InvalidInput(format!(
            "dense eigenvalue route supports n <= 4, got {}",
            a.n()
        )));
    }
    Ok(poly_roots(&char_poly(a)))
}

/// Gap between `psi` and the largest real part among the remaining
/// eigenvalues, obtained by deflating the characteristic polynomial at `psi`
/// (synthetic division) and solving the quotient. Returns `+inf` for 1x1.
pub fn dominance_gap(a: &QuasiPositiveMatrix, psi: f64) -> Result<f64> {
    let n = a.n();
    if n > 4 {
        return Err(Error::InvalidInput(format!(
            "dense eigenvalue route supports n <= 4, got {n}"
        )));
    }
    if n == 1 {
        return Ok(f64::INFINITY);
    }
    let c = char_poly(a);
    // p(s) / (s - psi): quotient coefficients b_k = c_k + psi * b_{k-1}
    let mut quotient = Vec::with_capacity(n - 1);
    let mut b = 1.0;
    for ck in c.iter().take(n - 1) {
        b = ck + psi * b;
        quotient.push(b);
    }
    let rest = poly_roots(&quotient);
    let second = rest.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    Ok(psi - second)
}

/// Per-lambda outcome of the numeric (H2) check.
#[derive(Debug, Clone)]
pub struct H2Entry {
    pub lambda: f64,
    pub psi: Option<f64>,
    /// Smallest eigenvector component after max-normalization.
    pub min_component: Option<f64>,
    /// Gap to the second-largest real-part eigenvalue (n <= 4 only).
    pub gap: Option<f64>,
    /// Angle (radians) to the eigenvector at the previous grid lambda.
    pub angle_to_prev: Option<f64>,
    pub positive: bool,
    pub dominant: bool,
    pub continuous: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct H2Report {
    pub entries: Vec<H2Entry>,
}

impl H2Report {
    pub fn pass(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.positive && e.dominant && e.continuous && e.psi.map_or(false, |p| p > 0.0))
    }

    /// Worst margins over the grid: (min eigenvector component, min gap,
    /// max adjacent angle).
    pub fn margins(&self) -> (f64, f64, f64) {
        let min_comp = self
            .entries
            .iter()
            .filter_map(|e| e.min_component)
            .fold(f64::INFINITY, f64::min);
        let min_gap = self
            .entries
            .iter()
            .filter_map(|e| e.gap)
            .fold(f64::INFINITY, f64::min);
        let max_angle = self
            .entries
            .iter()
            .filter_map(|e| e.angle_to_prev)
            .fold(0.0, f64::max);
        (min_comp, min_gap, max_angle)
    }
}

fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    let nu: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot / (nu * nv)).clamp(-1.0, 1.0).acos()
}

/// Samples the (H2) requirements on a lambda grid: strictly positive
/// eigenvector, strictly dominant principal eigenvalue (dense route, n <= 4),
/// and continuity of the eigenvector along the grid. Failures are recorded in
/// the report, never raised.
pub fn check_h2(model: &ModelSpec, lambda_grid: &[f64]) -> Result<H2Report> {
    if lambda_grid.is_empty() {
        return Err(Error::InvalidInput("lambda grid must be nonempty".into()));
    }
    if let Some(&bad) = lambda_grid.iter().find(|&&l| !(l > 0.0)) {
        return Err(Error::InvalidInput(format!("lambda grid must be positive, got {bad}")));
    }
    let mut entries: Vec<H2Entry> = Vec::with_capacity(lambda_grid.len());
    let mut prev_nu: Option<Vec<f64>> = None;
    for &lam in lambda_grid {
        let a = build_a_lambda(&model.d, &model.j0, lam)?;
        match principal_eig(&a) {
            Ok((psi, nu)) => {
                let min_component = nu.iter().cloned().fold(f64::INFINITY, f64::min);
                let gap = if a.n() <= 4 { Some(dominance_gap(&a, psi)?) } else { None };
                let dominant = gap.map_or(true, |g| g > DOMINANCE_GAP_TOL);
                let angle = prev_nu.as_ref().map(|p| angle_between(p, &nu));
                let continuous = angle.map_or(true, |a| a < 1e-2);
                entries.push(H2Entry {
                    lambda: lam,
                    psi: Some(psi),
                    min_component: Some(min_component),
                    gap,
                    angle_to_prev: angle,
                    positive: min_component > TOL_POSITIVE,
                    dominant,
                    continuous,
                    note: None,
                });
                prev_nu = Some(nu);
            }
            Err(e) => {
                entries.push(H2Entry {
                    lambda: lam,
                    psi: None,
                    min_component: None,
                    gap: None,
                    angle_to_prev: None,
                    positive: false,
                    dominant: false,
                    continuous: true,
                    note: Some(e.to_string()),
                });
                prev_nu = None;
            }
        }
    }
    Ok(H2Report { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn qp(n: usize, e: &[f64]) -> QuasiPositiveMatrix {
        QuasiPositiveMatrix::new(n, e.to_vec()).unwrap()
    }

    #[test]
    fn rejects_negative_off_diagonal() {
        assert!(QuasiPositiveMatrix::new(2, vec![1.0, -0.1, 0.0, 1.0]).is_err());
        assert!(QuasiPositiveMatrix::new(2, vec![-5.0, 0.1, 0.0, -1.0]).is_ok());
    }

    #[test]
    fn build_a_lambda_ungulate_at_unit_lambda() {
        let j0 = qp(2, &[1.0, 0.0, 1.0, -1.0]);
        let a = build_a_lambda(&[1.0, 0.5], &j0, 1.0).unwrap();
        assert_eq!(a.entries(), &[2.0, 0.0, 1.0, -0.5]);
    }

    #[test]
    fn build_a_lambda_small_lambda_is_j0() {
        let j0 = qp(2, &[1.0, 0.3, 0.2, -1.0]);
        let a = build_a_lambda(&[1.0, 0.5], &j0, 1e-9).unwrap();
        for (x, y) in a.entries().iter().zip(j0.entries()) {
            assert!((x - y).abs() <= 1e-15);
        }
    }

    #[test]
    fn build_a_lambda_is_componentwise_addition() {
        let j0 = qp(2, &[0.4, 1.2, 0.7, -0.3]);
        let lam = 1.7_f64;
        let a = build_a_lambda(&[2.0, 3.0], &j0, lam).unwrap();
        assert_eq!(a.get(0, 0), 0.4 + 2.0 * lam * lam);
        assert_eq!(a.get(1, 1), -0.3 + 3.0 * lam * lam);
        assert_eq!(a.get(0, 1), 1.2);
        assert_eq!(a.get(1, 0), 0.7);
    }

    #[test]
    fn build_a_lambda_rejects_bad_inputs() {
        let j0 = qp(1, &[1.0]);
        assert!(build_a_lambda(&[0.0], &j0, 1.0).is_err());
        assert!(build_a_lambda(&[1.0], &j0, 0.0).is_err());
        assert!(build_a_lambda(&[1.0], &j0, -2.0).is_err());
    }

    #[test]
    fn principal_eig_lower_triangular_example() {
        let a = qp(2, &[2.0, 0.0, 1.0, -0.5]);
        let (psi, nu) = principal_eig(&a).unwrap();
        assert!((psi - 2.0).abs() <= 1e-12);
        assert!((nu[0] - 1.0).abs() <= 1e-12);
        assert!((nu[1] - 0.4).abs() <= 1e-10);
    }

    #[test]
    fn principal_eig_reducible_diagonal_fails_positivity() {
        let a = qp(2, &[3.0, 0.0, 0.0, 1.0]);
        match principal_eig(&a) {
            Err(Error::SpectralGap { iterate, .. }) => {
                assert_eq!(iterate.len(), 2);
            }
            other => panic!("expected spectral-gap error, got {other:?}"),
        }
    }

    /// Independent eigenvector route for a 3x3 matrix: the eigenvector for a
    /// simple eigenvalue is the cross product of two rows of `A - psi I`.
    fn eigvec_3x3_cross(a: &QuasiPositiveMatrix, psi: f64) -> Vec<f64> {
        let m = |i: usize, j: usize| a.get(i, j) - if i == j { psi } else { 0.0 };
        let rows = [[m(0, 0), m(0, 1), m(0, 2)], [m(1, 0), m(1, 1), m(1, 2)], [m(2, 0), m(2, 1), m(2, 2)]];
        let cross = |u: &[f64; 3], v: &[f64; 3]| {
            [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ]
        };
        let candidates = [
            cross(&rows[0], &rows[1]),
            cross(&rows[0], &rows[2]),
            cross(&rows[1], &rows[2]),
        ];
        let best = candidates
            .iter()
            .max_by(|a, b| {
                let na: f64 = a.iter().map(|x| x.abs()).fold(0.0, f64::max);
                let nb: f64 = b.iter().map(|x| x.abs()).fold(0.0, f64::max);
                na.partial_cmp(&nb).unwrap()
            })
            .unwrap();
        let mx = best.iter().cloned().fold(f64::NEG_INFINITY, |m, x| m.max(x.abs()));
        let sign = if best.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        best.iter().map(|x| sign * x / mx).collect()
    }

    #[test]
    fn principal_eig_matches_dense_route_on_3x3() {
        let a = qp(3, &[0.7, 0.3, 0.1, 0.5, -0.2, 0.8, 0.9, 0.4, 0.1]);
        let (psi, nu) = principal_eig(&a).unwrap();
        let eigs = dense_eigenvalues(&a).unwrap();
        let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        assert!((psi - max_re).abs() <= 1e-10, "psi {psi} vs dense {max_re}");
        let nu_oracle = eigvec_3x3_cross(&a, psi);
        for (x, y) in nu.iter().zip(&nu_oracle) {
            assert!((x - y).abs() <= 1e-8, "{nu:?} vs {nu_oracle:?}");
        }
    }

    #[test]
    fn psi_equals_max_real_root_for_small_n() {
        let mats = [
            qp(2, &[2.0, 0.0, 1.0, -0.5]),
            qp(3, &[0.1, 1.0, 0.2, 0.3, -1.0, 0.4, 0.5, 0.6, 0.7]),
            qp(4, &[
                1.0, 0.2, 0.0, 0.1, //
                0.3, -0.5, 0.4, 0.0, //
                0.0, 0.1, 0.2, 0.6, //
                0.2, 0.0, 0.5, -0.1,
            ]),
        ];
        for a in &mats {
            let (psi, _) = principal_eig(a).unwrap();
            let max_re = dense_eigenvalues(a)
                .unwrap()
                .iter()
                .map(|z| z.re)
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((psi - max_re).abs() <= 1e-10);
        }
    }

    #[test]
    fn shift_invariance_of_power_iteration() {
        let a = qp(2, &[2.0, 0.0, 1.0, -0.5]);
        let alpha = 1.0 + 2.0;
        let (p1, n1) = power_iteration(&a, alpha).unwrap();
        let (p2, n2) = power_iteration(&a, alpha + 1.0).unwrap();
        assert!((p1 - p2).abs() <= 1e-12);
        for (x, y) in n1.iter().zip(&n2) {
            assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn phi_fisher_at_unit_lambda_is_two() {
        let model = models::fisher();
        let sp = phi(&model, 1.0).unwrap();
        assert!((sp.phi - 2.0).abs() <= 1e-12);
        assert!((sp.psi - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn phi_ungulate_closed_form() {
        let model = models::ungulate(&models::UngulateParams::example()).unwrap();
        // Phi(lambda) = (d1 lambda^2 + r1 - alpha) / lambda with d1=1, r1=2, alpha=1
        let sp = phi(&model, 2.0).unwrap();
        assert!((sp.phi - 2.5).abs() <= 1e-10);
    }

    #[test]
    fn phi_times_lambda_is_psi() {
        let model = models::ungulate(&models::UngulateParams::example()).unwrap();
        for k in 1..=30 {
            let lam = 0.05 * k as f64;
            let sp = phi(&model, lam).unwrap();
            assert_eq!(sp.phi, sp.psi / sp.lambda);
        }
    }

    #[test]
    fn phi_rejects_nonpositive_psi() {
        // Scalar model with J0 = -1: A_lambda = lambda^2 - 1 < 0 for lambda < 1.
        let f: models::ReactionFn = std::sync::Arc::new(|u: &[f64], out: &mut [f64]| {
            out[0] = -u[0] * (1.0 - u[0]);
        });
        let model = models::ModelSpec::new(
            "decay",
            vec![1.0],
            qp(1, &[-1.0]),
            vec![1.0],
            vec![1.0],
            vec![1.0],
            f.clone(),
            f.clone(),
            f,
            None,
        )
        .unwrap();
        match phi(&model, 0.5) {
            Err(Error::Hypothesis(_)) => {}
            other => panic!("expected hypothesis violation, got {other:?}"),
        }
    }

    #[test]
    fn psi_monotone_and_midpoint_convex_in_lambda() {
        let model = models::ungulate(&models::UngulateParams::example()).unwrap();
        let grid: Vec<f64> = (1..=60).map(|k| 0.2 * k as f64).collect();
        let psis: Vec<f64> = grid.iter().map(|&l| phi(&model, l).unwrap().psi).collect();
        for w in psis.windows(2) {
            assert!(w[1] >= w[0] - 1e-11, "Psi not nondecreasing: {w:?}");
        }
        for i in 0..psis.len() - 2 {
            // grid is uniform, so grid[i+1] is the midpoint of grid[i], grid[i+2]
            assert!(psis[i + 1] <= 0.5 * (psis[i] + psis[i + 2]) + 1e-9);
        }
    }

    #[test]
    fn check_h2_passes_for_ungulate_example() {
        let model = models::ungulate(&models::UngulateParams::example()).unwrap();
        let grid: Vec<f64> = (1..=100).map(|k| 0.1 * k as f64).collect();
        let report = check_h2(&model, &grid).unwrap();
        assert!(report.pass(), "margins: {:?}", report.margins());
    }

    #[test]
    fn check_h2_flags_diagonal_ties() {
        // J0 = 0 and equal diffusion: Psi(A_lambda) has a tied top eigenvalue.
        let f: models::ReactionFn = std::sync::Arc::new(|_u: &[f64], out: &mut [f64]| {
            out.fill(0.0);
        });
        let tied = models::ModelSpec::new(
            "tied",
            vec![1.0, 1.0],
            qp(2, &[0.0, 0.0, 0.0, 0.0]),
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            f.clone(),
            f.clone(),
            f.clone(),
            None,
        )
        .unwrap();
        let report = check_h2(&tied, &[0.5, 1.0]).unwrap();
        assert!(!report.pass());
        assert!(report.entries.iter().all(|e| !e.dominant));

        // Distinct diffusion coefficients make Psi strictly dominant again,
        // but the eigenvector of a diagonal matrix is not strictly positive.
        let distinct = models::ModelSpec::new(
            "distinct",
            vec![1.0, 2.0],
            qp(2, &[0.0, 0.0, 0.0, 0.0]),
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            f.clone(),
            f.clone(),
            f,
            None,
        )
        .unwrap();
        let report = check_h2(&distinct, &[1.0]).unwrap();
        assert!(!report.entries[0].positive);
    }

    #[test]
    fn check_h2_flags_duplicated_block() {
        // 4x4 block lower triangular with two equal diagonal blocks.
        let b = [0.5, 0.3, 0.2, 0.1];
        let a = qp(4, &[
            b[0], b[1], 0.0, 0.0, //
            b[2], b[3], 0.0, 0.0, //
            0.4, 0.1, b[0], b[1], //
            0.2, 0.3, b[2], b[3],
        ]);
        // The duplicated Perron root makes the gap collapse; either the power
        // iteration stalls or the deflated gap is ~0. Both must flag.
        match principal_eig(&a) {
            Ok((psi, _)) => {
                let gap = dominance_gap(&a, psi).unwrap();
                assert!(gap <= DOMINANCE_GAP_TOL, "gap {gap} not flagged");
            }
            Err(Error::SpectralGap { .. }) => {}
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn check_h2_rejects_empty_or_nonpositive_grid() {
        let model = models::fisher();
        assert!(check_h2(&model, &[]).is_err());
        assert!(check_h2(&model, &[1.0, 0.0]).is_err());
    }
}
