//! Two-stage L-stable Rosenbrock scheme (ROS2, `gamma = 1 + 1/sqrt(2)`)
//! for the stiff regime of large truncations and fast-growing kernels.
//!
//! ```text
//! (I - gamma h J) k1 = F(y)
//! (I - gamma h J) k2 = F(y + h k1) - 2 k1
//! y+ = y + h (3/2 k1 + 1/2 k2),     error = h/2 (k1 + k2)
//! ```
//!
//! The Jacobian of the truncated system splits into a tridiagonal part
//! (rates held fixed) plus a correction of rank `2M` for an `M`-term
//! separable kernel, so `I - gamma h J` is solved with a Thomas sweep and
//! the Woodbury identity in `O(N M^2)`. Non-separable kernels fall back to a
//! dense LU factorisation.
//!
//! Both stages satisfy `sum_j w_j k_j = 0` for the conserved weights
//! `w = 1` and `w = j`, so number and mass are preserved up to roundoff.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{assemble_rhs, RateVectors, Repr, RhsEvaluator};

pub(crate) const GAMMA: f64 = 1.0 + std::f64::consts::FRAC_1_SQRT_2;

/// Tridiagonal matrix factored for repeated solves (no pivoting; the
/// matrices used here are column diagonally dominant).
struct Tridiagonal {
    sub: Vec<f64>,
    /// Modified super-diagonal `c'_i`.
    sup: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl Tridiagonal {
    fn factor(sub: Vec<f64>, diag: &[f64], sup: &[f64]) -> Self {
        let n = diag.len();
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let m = diag[i] - if i > 0 { sub[i] * prev } else { 0.0 };
            inv[i] = 1.0 / m;
            cp[i] = if i + 1 < n { sup[i] * inv[i] } else { 0.0 };
            prev = cp[i];
        }
        Tridiagonal {
            sub,
            sup: cp,
            inv_pivot: inv,
        }
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = x.len();
        x[0] *= self.inv_pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.sub[i] * x[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.sup[i] * x[i + 1];
        }
    }
}

enum Factored {
    LowRank {
        tri: Tridiagonal,
        /// `Mt^-1 (c U)`, one column per low-rank term.
        z: Vec<Vec<f64>>,
        v: Vec<Vec<f64>>,
        capacitance: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    },
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

/// `I - c J(f)` in factored form.
pub(crate) struct ShiftedJacobian {
    factored: Factored,
}

impl ShiftedJacobian {
    /// `rates` must hold the rate vectors at `f`.
    pub(crate) fn factor(eval: &RhsEvaluator, f: &[f64], rates: &RateVectors, c: f64) -> Self {
        let n = f.len() - 1;
        let factored = match eval.repr() {
            Repr::Separable { a, b } => {
                let (u, v) = low_rank_terms(f, a, b);
                let diag: Vec<f64> = (0..=n)
                    .map(|j| 1.0 + c * (rates.export[j] + rates.import[j]))
                    .collect();
                let sup: Vec<f64> = (0..=n)
                    .map(|j| if j < n { -c * rates.export[j + 1] } else { 0.0 })
                    .collect();
                let sub: Vec<f64> = (0..=n)
                    .map(|j| if j > 0 { -c * rates.import[j - 1] } else { 0.0 })
                    .collect();
                let tri = Tridiagonal::factor(sub, &diag, &sup);
                let z: Vec<Vec<f64>> = u
                    .into_iter()
                    .map(|mut col| {
                        col.iter_mut().for_each(|x| *x *= c);
                        tri.solve_in_place(&mut col);
                        col
                    })
                    .collect();
                let r = z.len();
                let cap = DMatrix::from_fn(r, r, |p, q| {
                    let dot: f64 = v[p].iter().zip(&z[q]).map(|(a, b)| a * b).sum();
                    if p == q {
                        1.0 - dot
                    } else {
                        -dot
                    }
                });
                Factored::LowRank {
                    tri,
                    z,
                    v,
                    capacitance: cap.lu(),
                }
            }
            Repr::Dense { k } => {
                let jac = dense_jacobian(f, rates, k);
                let m = DMatrix::from_fn(n + 1, n + 1, |i, j| {
                    let id = if i == j { 1.0 } else { 0.0 };
                    id - c * jac[i * (n + 1) + j]
                });
                Factored::Dense(m.lu())
            }
        };
        ShiftedJacobian { factored }
    }

    pub(crate) fn solve_in_place(&self, x: &mut [f64]) {
        match &self.factored {
            Factored::LowRank {
                tri,
                z,
                v,
                capacitance,
            } => {
                tri.solve_in_place(x);
                if z.is_empty() {
                    return;
                }
                let proj = DVector::from_iterator(
                    v.len(),
                    v.iter().map(|col| col.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>()),
                );
                let w = capacitance
                    .solve(&proj)
                    .unwrap_or_else(|| DVector::zeros(v.len()));
                for (zq, wq) in z.iter().zip(w.iter()) {
                    for (xi, zi) in x.iter_mut().zip(zq) {
                        *xi += zi * wq;
                    }
                }
            }
            Factored::Dense(lu) => {
                let b = DVector::from_column_slice(x);
                if let Some(sol) = lu.solve(&b) {
                    x.copy_from_slice(sol.as_slice());
                }
            }
        }
    }
}

/// Columns `U` and `V` of the low-rank part `U V^T` of the Jacobian.
fn low_rank_terms(f: &[f64], a: &[Vec<f64>], b: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = f.len() - 1;
    let mut us = Vec::with_capacity(2 * a.len());
    let mut vs = Vec::with_capacity(2 * a.len());
    for (am, bm) in a.iter().zip(b) {
        // export: d(f_j A_j)/df_i = f_j a_m(j) b_m(i) for j >= 1, i <= N-1
        let x: Vec<f64> = (0..=n).map(|j| if j >= 1 { f[j] * am[j] } else { 0.0 }).collect();
        let u: Vec<f64> = (0..=n)
            .map(|j| if j < n { x[j + 1] - x[j] } else { -x[j] })
            .collect();
        let v: Vec<f64> = (0..=n).map(|i| if i < n { bm[i] } else { 0.0 }).collect();
        us.push(u);
        vs.push(v);

        // import: d(f_j B_j)/df_i = f_j b_m(j) a_m(i) for j <= N-1, i >= 1
        let y: Vec<f64> = (0..=n).map(|j| if j < n { f[j] * bm[j] } else { 0.0 }).collect();
        let u: Vec<f64> = (0..=n)
            .map(|j| if j > 0 { y[j - 1] - y[j] } else { -y[j] })
            .collect();
        let v: Vec<f64> = (0..=n).map(|i| if i >= 1 { am[i] } else { 0.0 }).collect();
        us.push(u);
        vs.push(v);
    }
    (us, vs)
}

/// Full row-major Jacobian for a dense rate matrix `k`.
fn dense_jacobian(f: &[f64], rates: &RateVectors, k: &[f64]) -> Vec<f64> {
    let n = f.len() - 1;
    let w = n + 1;
    let kk = |j: usize, i: usize| k[j * w + i];
    // P[j][i] = d(f_j A_j)/df_i, Q[j][i] = d(f_j B_j)/df_i
    let p = |j: usize, i: usize| {
        let mut v = 0.0;
        if j >= 1 {
            if i == j {
                v += rates.export[j];
            }
            if i < n {
                v += f[j] * kk(j, i);
            }
        }
        v
    };
    let q = |j: usize, i: usize| {
        let mut v = 0.0;
        if j < n {
            if i == j {
                v += rates.import[j];
            }
            if i >= 1 {
                v += f[j] * kk(i, j);
            }
        }
        v
    };
    let mut jac = vec![0.0; w * w];
    for j in 0..=n {
        for i in 0..=n {
            let mut v = -p(j, i) - q(j, i);
            if j < n {
                v += p(j + 1, i);
            }
            if j > 0 {
                v += q(j - 1, i);
            }
            jac[j * w + i] = v;
        }
    }
    jac
}

/// Jacobian-vector product through the same structured representation
/// used by the solver.
#[cfg(test)]
pub(crate) fn jacobian_times(eval: &RhsEvaluator, f: &[f64], rates: &RateVectors, x: &[f64]) -> Vec<f64> {
    let n = f.len() - 1;
    match eval.repr() {
        Repr::Separable { a, b } => {
            let mut out = vec![0.0; n + 1];
            for j in 0..=n {
                let mut v = -(rates.export[j] + rates.import[j]) * x[j];
                if j < n {
                    v += rates.export[j + 1] * x[j + 1];
                }
                if j > 0 {
                    v += rates.import[j - 1] * x[j - 1];
                }
                out[j] = v;
            }
            let (u, vv) = low_rank_terms(f, a, b);
            for (uc, vc) in u.iter().zip(&vv) {
                let d: f64 = vc.iter().zip(x).map(|(a, b)| a * b).sum();
                for (o, ui) in out.iter_mut().zip(uc) {
                    *o += ui * d;
                }
            }
            out
        }
        Repr::Dense { k } => {
            let jac = dense_jacobian(f, rates, k);
            (0..=n)
                .map(|j| (0..=n).map(|i| jac[j * (n + 1) + i] * x[i]).sum())
                .collect()
        }
    }
}

pub(crate) struct Ros2 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    ytmp: Vec<f64>,
    f0: Vec<f64>,
    rates: RateVectors,
}

impl Ros2 {
    pub(crate) fn new(n: usize) -> Self {
        Ros2 {
            k1: vec![0.0; n + 1],
            k2: vec![0.0; n + 1],
            ytmp: vec![0.0; n + 1],
            f0: vec![0.0; n + 1],
            rates: RateVectors::zeros(n),
        }
    }

    pub(crate) fn attempt(
        &mut self,
        eval: &RhsEvaluator,
        y: &[f64],
        h: f64,
        y_new: &mut [f64],
        err: &mut [f64],
    ) {
        let n = y.len();
        eval.rates_into(y, &mut self.rates);
        assemble_rhs(y, &self.rates, &mut self.f0);
        let system = ShiftedJacobian::factor(eval, y, &self.rates, GAMMA * h);

        self.k1.copy_from_slice(&self.f0);
        system.solve_in_place(&mut self.k1);

        for i in 0..n {
            self.ytmp[i] = y[i] + h * self.k1[i];
        }
        eval.rhs_into(&self.ytmp, &mut self.rates, &mut self.k2);
        for i in 0..n {
            self.k2[i] -= 2.0 * self.k1[i];
        }
        system.solve_in_place(&mut self.k2);

        for i in 0..n {
            y_new[i] = y[i] + h * (1.5 * self.k1[i] + 0.5 * self.k2[i]);
            err[i] = 0.5 * h * (self.k1[i] + self.k2[i]);
        }
    }
}
