//! Right-hand side of the truncated exchange-driven growth system.
//!
//! With export rates `A[j] = sum_{k=0}^{N-1} K(j,k) f[k]` (for `1 <= j <= N`)
//! and import rates `B[j] = sum_{k=1}^{N} K(k,j) f[k]` (for `0 <= j <= N-1`):
//!
//! ```text
//! df[0] = f[1] A[1] - f[0] B[0]
//! df[j] = f[j+1] A[j+1] - f[j] A[j] - f[j] B[j] + f[j-1] B[j-1]
//! df[N] = -f[N] A[N] + f[N-1] B[N-1]
//! ```
//!
//! All sums run in ascending `k` and ascending separable term index so that
//! results are bit-reproducible.

use crate::error::{EdgError, Result};
use crate::kernel::Kernel;
use crate::state::DensityState;

/// Export and import rates, both stored with length `N + 1`.
/// `export[0]` and `import[N]` are unused and held at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVectors {
    pub export: Vec<f64>,
    pub import: Vec<f64>,
}

impl RateVectors {
    pub fn zeros(n: usize) -> Self {
        RateVectors {
            export: vec![0.0; n + 1],
            import: vec![0.0; n + 1],
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Repr {
    /// Factor tables `a[m][j]`, `b[m][j]` for `j = 0..=N`.
    Separable { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    /// Row-major `(N+1) x (N+1)` matrix of rates.
    Dense { k: Vec<f64> },
}

/// Kernel data tabulated for one truncation size, reused across
/// right-hand-side evaluations.
#[derive(Debug, Clone)]
pub struct RhsEvaluator {
    n: usize,
    repr: Repr,
}

impl RhsEvaluator {
    /// Uses the separable fast path when the kernel has one.
    pub fn new(kernel: &Kernel, n: usize) -> Result<Self> {
        kernel.covers(n)?;
        let repr = match kernel.separable_terms() {
            Some(sep) => {
                let (a, b) = sep.factor_tables(n);
                Repr::Separable { a, b }
            }
            None => Self::dense_repr(kernel, n),
        };
        Ok(RhsEvaluator { n, repr })
    }

    /// Materialises the full rate matrix regardless of kernel structure.
    pub fn new_dense(kernel: &Kernel, n: usize) -> Result<Self> {
        kernel.covers(n)?;
        Ok(RhsEvaluator {
            n,
            repr: Self::dense_repr(kernel, n),
        })
    }

    fn dense_repr(kernel: &Kernel, n: usize) -> Repr {
        let mut k = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                k.push(kernel.rate(j, i));
            }
        }
        Repr::Dense { k }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_separable(&self) -> bool {
        matches!(self.repr, Repr::Separable { .. })
    }

    pub(crate) fn repr(&self) -> &Repr {
        &self.repr
    }

    pub fn rates_into(&self, f: &[f64], out: &mut RateVectors) {
        let n = self.n;
        debug_assert_eq!(f.len(), n + 1);
        match &self.repr {
            Repr::Separable { a, b } => {
                out.export.fill(0.0);
                out.import.fill(0.0);
                for (am, bm) in a.iter().zip(b) {
                    let s: f64 = (0..n).map(|k| bm[k] * f[k]).sum();
                    let t: f64 = (1..=n).map(|k| am[k] * f[k]).sum();
                    for j in 1..=n {
                        out.export[j] += am[j] * s;
                    }
                    for j in 0..n {
                        out.import[j] += bm[j] * t;
                    }
                }
            }
            Repr::Dense { k } => {
                let w = n + 1;
                out.export[0] = 0.0;
                for j in 1..=n {
                    let row = &k[j * w..j * w + n];
                    out.export[j] = row.iter().zip(&f[..n]).map(|(kk, fk)| kk * fk).sum();
                }
                for j in 0..n {
                    out.import[j] = (1..=n).map(|i| k[i * w + j] * f[i]).sum();
                }
                out.import[n] = 0.0;
            }
        }
    }

    pub fn rates(&self, f: &[f64]) -> RateVectors {
        let mut r = RateVectors::zeros(self.n);
        self.rates_into(f, &mut r);
        r
    }

    /// Evaluates the right-hand side into `out`, using `rates` as scratch.
    pub fn rhs_into(&self, f: &[f64], rates: &mut RateVectors, out: &mut [f64]) {
        self.rates_into(f, rates);
        assemble_rhs(f, rates, out);
    }

    pub fn rhs(&self, f: &[f64]) -> Vec<f64> {
        let mut rates = RateVectors::zeros(self.n);
        let mut out = vec![0.0; self.n + 1];
        self.rhs_into(f, &mut rates, &mut out);
        out
    }
}

/// Combines fluxes `E[j] = f[j] A[j]` and `I[j] = f[j] B[j]` into `df`.
pub(crate) fn assemble_rhs(f: &[f64], rates: &RateVectors, out: &mut [f64]) {
    let n = f.len() - 1;
    let exp = |j: usize| f[j] * rates.export[j];
    let imp = |j: usize| f[j] * rates.import[j];
    out[0] = exp(1) - imp(0);
    for j in 1..n {
        out[j] = exp(j + 1) - exp(j) - imp(j) + imp(j - 1);
    }
    out[n] = -exp(n) + imp(n - 1);
}

/// Sum of the absolute fluxes entering each component of the right-hand
/// side, the natural roundoff scale for conservation checks.
pub fn flux_magnitudes(f: &[f64], rates: &RateVectors) -> Vec<f64> {
    let n = f.len() - 1;
    let exp = |j: usize| (f[j] * rates.export[j]).abs();
    let imp = |j: usize| (f[j] * rates.import[j]).abs();
    (0..=n)
        .map(|j| {
            let mut m = 0.0;
            if j < n {
                m += exp(j + 1) + imp(j);
            }
            if j > 0 {
                m += exp(j) + imp(j - 1);
            }
            m
        })
        .collect()
}

/// `A[j] = sum_{k=0}^{N-1} K(j,k) f[k]` for `1 <= j <= N`; index 0 is zero.
pub fn export_rates(state: &DensityState, kernel: &Kernel) -> Result<Vec<f64>> {
    Ok(RhsEvaluator::new(kernel, state.n())?
        .rates(state.densities())
        .export)
}

/// `B[j] = sum_{k=1}^{N} K(k,j) f[k]` for `0 <= j <= N-1`; index `N` is zero.
pub fn import_rates(state: &DensityState, kernel: &Kernel) -> Result<Vec<f64>> {
    Ok(RhsEvaluator::new(kernel, state.n())?
        .rates(state.densities())
        .import)
}

pub fn rates(state: &DensityState, kernel: &Kernel) -> Result<RateVectors> {
    Ok(RhsEvaluator::new(kernel, state.n())?.rates(state.densities()))
}

/// Rate sums by direct `O(N^2)` kernel evaluation, bypassing any
/// separable structure.
pub fn rates_dense(state: &DensityState, kernel: &Kernel) -> Result<RateVectors> {
    let n = state.n();
    kernel.covers(n)?;
    let f = state.densities();
    let mut r = RateVectors::zeros(n);
    for j in 1..=n {
        r.export[j] = (0..n).map(|k| kernel.rate(j, k) * f[k]).sum();
    }
    for j in 0..n {
        r.import[j] = (1..=n).map(|k| kernel.rate(k, j) * f[k]).sum();
    }
    Ok(r)
}

pub fn rhs(state: &DensityState, kernel: &Kernel) -> Result<Vec<f64>> {
    Ok(RhsEvaluator::new(kernel, state.n())?.rhs(state.densities()))
}

pub fn rhs_dense(state: &DensityState, kernel: &Kernel) -> Result<Vec<f64>> {
    let r = rates_dense(state, kernel)?;
    let mut out = vec![0.0; state.n() + 1];
    assemble_rhs(state.densities(), &r, &mut out);
    Ok(out)
}

/// Value of the four-term divergence expression together with the sum of
/// absolute values of its terms.
fn divergence_terms(state: &DensityState, kernel: &Kernel, h: &[f64]) -> Result<(f64, f64)> {
    let n = state.n();
    if h.len() != n + 1 {
        return Err(EdgError::LengthMismatch {
            expected: n + 1,
            got: h.len(),
        });
    }
    kernel.require_symmetric(n)?;
    kernel.covers(n)?;
    let f = state.densities();
    let k = |j, i| kernel.rate(j, i);
    let low = h[1] - h[0];
    let high = h[n - 1] - h[n];

    let mut value = 0.0;
    let mut magnitude = 0.0;
    let mut add = |x: f64| {
        value += x;
        magnitude += x.abs();
    };
    for j in 1..n {
        let inner: f64 = (1..n).map(|i| k(j, i) * f[i]).sum();
        add((h[j + 1] - 2.0 * h[j] + h[j - 1]) * f[j] * inner);
    }
    for j in 1..n {
        add(((h[j - 1] - h[j]) + low) * k(j, 0) * f[j] * f[0]);
    }
    for j in 1..n {
        add(((h[j + 1] - h[j]) + high) * f[j] * k(n, j) * f[n]);
    }
    add((high + low) * f[n] * k(n, 0) * f[0]);
    Ok((value, magnitude))
}

/// Evaluates `sum_j h[j] df[j]` through the symmetric-kernel divergence
/// identity, using direct kernel evaluations only.
///
/// ```text
///   sum_{j=1}^{N-1} (h[j+1] - 2h[j] + h[j-1]) f[j] sum_{k=1}^{N-1} K(j,k) f[k]
/// + sum_{j=1}^{N-1} ((h[j-1] - h[j]) + (h[1] - h[0])) K(j,0) f[j] f[0]
/// + sum_{j=1}^{N-1} ((h[j+1] - h[j]) + (h[N-1] - h[N])) f[j] K(N,j) f[N]
/// + ((h[N-1] - h[N]) + (h[1] - h[0])) f[N] K(N,0) f[0]
/// ```
pub fn divergence_form(state: &DensityState, kernel: &Kernel, h: &[f64]) -> Result<f64> {
    divergence_terms(state, kernel, h).map(|(v, _)| v)
}

/// Outcome of comparing the divergence identity against `sum_j h[j] df[j]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub direct: f64,
    pub divergence: f64,
    /// Larger of the two sides' summed term magnitudes.
    pub scale: f64,
    pub abs_diff: f64,
}

impl IdentityCheck {
    pub fn passes(&self, rel_tol: f64) -> bool {
        self.abs_diff <= rel_tol * self.scale
    }
}

pub fn check_divergence_identity(
    state: &DensityState,
    kernel: &Kernel,
    h: &[f64],
) -> Result<IdentityCheck> {
    let (divergence, div_mag) = divergence_terms(state, kernel, h)?;
    let r = rates(state, kernel)?;
    let f = state.densities();
    let mut df = vec![0.0; f.len()];
    assemble_rhs(f, &r, &mut df);
    let mags = flux_magnitudes(f, &r);
    let direct: f64 = h.iter().zip(&df).map(|(h, d)| h * d).sum();
    let direct_mag: f64 = h.iter().zip(&mags).map(|(h, m)| h.abs() * m).sum();
    Ok(IdentityCheck {
        direct,
        divergence,
        scale: direct_mag.max(div_mag),
        abs_diff: (direct - divergence).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelSpec, KernelTable};

    fn st(f: &[f64]) -> DensityState {
        DensityState::new(0.0, f.to_vec()).unwrap()
    }

    fn k(spec: KernelSpec) -> Kernel {
        Kernel::new(spec).unwrap()
    }

    #[test]
    fn zero_state_gives_zero_rates() {
        let s = DensityState::zeros(5).unwrap();
        let kern = k(KernelSpec::homogeneous(1.0, 2.0));
        assert!(export_rates(&s, &kern).unwrap().iter().all(|&x| x == 0.0));
        assert!(import_rates(&s, &kern).unwrap().iter().all(|&x| x == 0.0));
        assert!(rhs(&s, &kern).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn export_rates_by_hand() {
        let mono = st(&[0.0, 1.0, 0.0, 0.0, 0.0]);
        let a = export_rates(&mono, &k(KernelSpec::product_power(1.0, 1.0, 1.0))).unwrap();
        for j in 1..=4 {
            assert_eq!(a[j], 2.0 * j as f64);
        }
        // k runs over 0..N-1 only: f[2] is excluded.
        let a = export_rates(&st(&[1.0, 1.0, 1.0]), &k(KernelSpec::homogeneous(1.0, 1.0))).unwrap();
        assert_eq!(a[1], 1.0);
        assert_eq!(a[2], 2.0);
    }

    #[test]
    fn import_rates_by_hand() {
        let mono = st(&[0.0, 1.0, 0.0, 0.0, 0.0]);
        let kern = k(KernelSpec::product_power(1.5, 2.0, 1.0));
        let b = import_rates(&mono, &kern).unwrap();
        for j in 0..4 {
            assert!((b[j] - kern.eval(1, j).unwrap()).abs() < 1e-15);
        }
        let zr = k(KernelSpec::sum_power(1.0, 3.0).with_zero_receiver_row(true));
        let b = import_rates(&st(&[0.3, 0.2, 0.4, 0.1]), &zr).unwrap();
        assert_eq!(b[0], 0.0);
        assert!(b[1] > 0.0);
    }

    #[test]
    fn monodisperse_rhs_by_hand() {
        // Only K(1,1) = kappa contributes at this state.
        let kappa = 2.5;
        let mut rows = vec![vec![0.0; 5]; 5];
        rows[1][1] = kappa;
        rows[2][3] = 7.0;
        rows[3][2] = 7.0;
        let kern = k(KernelSpec::tabulated(KernelTable::from_rows(rows).unwrap()));
        let df = rhs(&st(&[0.0, 1.0, 0.0, 0.0, 0.0]), &kern).unwrap();
        assert_eq!(df, vec![kappa, -2.0 * kappa, kappa, 0.0, 0.0]);
    }

    #[test]
    fn divergence_form_constant_and_linear_weights() {
        let s = st(&[0.3, 0.2, 0.4, 0.1, 0.05]);
        let kern = k(KernelSpec::product_power(1.0, 2.0, 1.0));
        assert_eq!(divergence_form(&s, &kern, &[3.0; 5]).unwrap(), 0.0);
        let lin: Vec<f64> = (0..5).map(|j| j as f64).collect();
        assert_eq!(divergence_form(&s, &kern, &lin).unwrap(), 0.0);
    }

    #[test]
    fn divergence_form_matches_direct_quadratic_weight() {
        let s = st(&[0.3, 0.2, 0.4, 0.1, 0.05, 0.7]);
        let kern = k(KernelSpec::sum_power(0.7, 1.5));
        let h: Vec<f64> = (0..6).map(|j| (j * j) as f64).collect();
        let direct: f64 = rhs(&s, &kern)
            .unwrap()
            .iter()
            .zip(&h)
            .map(|(d, h)| d * h)
            .sum();
        let div = divergence_form(&s, &kern, &h).unwrap();
        assert!((direct - div).abs() <= 1e-12 * direct.abs());
    }

    #[test]
    fn divergence_form_rejects_asymmetric_kernel() {
        let t = KernelTable::from_rows(vec![vec![0.0, 0.0, 0.0], vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let kern = k(KernelSpec::tabulated(t));
        assert!(divergence_form(&st(&[1.0, 1.0, 1.0]), &kern, &[0.0, 1.0, 4.0]).is_err());
    }

    #[test]
    fn dense_and_separable_agree() {
        let s = st(&[0.3, 0.2, 0.4, 0.1, 0.05, 0.7, 0.0, 0.2]);
        for spec in [
            KernelSpec::product_power(1.3, 2.0, 0.5),
            KernelSpec::sum_power(0.5, 3.0).with_zero_receiver_row(true),
            KernelSpec::homogeneous(1.0, 0.0),
            KernelSpec::homogeneous(2.0, 1.7),
        ] {
            let kern = k(spec);
            let fast = rhs(&s, &kern).unwrap();
            let slow = rhs_dense(&s, &kern).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300));
            }
        }
    }
}
