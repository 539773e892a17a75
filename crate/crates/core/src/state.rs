//! Truncated cluster-density vectors and their moments.

use crate::error::{EdgError, Result};

/// Densities `f[0..=N]` of clusters of each size at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    t: f64,
    f: Vec<f64>,
}

/// Initial data families.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    /// All clusters have size one, with density `density`.
    Monodisperse { density: f64 },
    /// All clusters have size `size`.
    DeltaAt { size: usize, density: f64 },
    /// `f[j]` proportional to `ratio^j`, normalised over `0..=N` so that
    /// the truncated zeroth moment equals `total_number`.
    Geometric { ratio: f64, total_number: f64 },
    /// Explicit leading densities, zero beyond the list.
    Custom { values: Vec<f64> },
}

fn check_density(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(EdgError::InvalidInit(format!("{name} must be finite and non-negative, got {v}")));
    }
    Ok(())
}

impl DensityState {
    /// Wraps densities with a time stamp. Requires `N >= 2` and
    /// non-negative finite entries.
    pub fn new(t: f64, f: Vec<f64>) -> Result<Self> {
        if f.len() < 3 {
            return Err(EdgError::InvalidInit(format!(
                "truncation size must be at least 2, got {} entries",
                f.len()
            )));
        }
        for (j, &v) in f.iter().enumerate() {
            check_density(&format!("f[{j}]"), v)?;
        }
        Ok(DensityState { t, f })
    }

    pub(crate) fn from_parts_unchecked(t: f64, f: Vec<f64>) -> Self {
        DensityState { t, f }
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(0.0, vec![0.0; n + 1])
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Truncation size `N`; the state holds `N + 1` densities.
    pub fn n(&self) -> usize {
        self.f.len() - 1
    }

    pub fn densities(&self) -> &[f64] {
        &self.f
    }

    pub fn into_densities(self) -> Vec<f64> {
        self.f
    }

    pub fn moment(&self, p: f64) -> f64 {
        moment_of(&self.f, p)
    }

    /// `sum_j h[j] f[j]`.
    pub fn weighted_sum(&self, h: &[f64]) -> Result<f64> {
        if h.len() != self.f.len() {
            return Err(EdgError::LengthMismatch {
                expected: self.f.len(),
                got: h.len(),
            });
        }
        Ok(h.iter().zip(&self.f).map(|(h, f)| h * f).sum())
    }

    /// `sum_{j=m}^{N} j^p f[j]`.
    pub fn tail_moment(&self, m: usize, p: f64) -> Result<f64> {
        if m > self.n() {
            return Err(EdgError::InvalidParameter(format!(
                "tail start {m} exceeds truncation size {}",
                self.n()
            )));
        }
        Ok(self.f[m..]
            .iter()
            .enumerate()
            .map(|(i, &f)| size_power(m + i, p) * f)
            .sum())
    }
}

/// `j^p` with `0^0 = 1` and `0^p = 0` for `p > 0`.
#[inline]
pub fn size_power(j: usize, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if j == 0 {
        0.0
    } else if p == 1.0 {
        j as f64
    } else if p == 2.0 {
        let x = j as f64;
        x * x
    } else {
        (j as f64).powf(p)
    }
}

/// `sum_j j^p f[j]` over a raw density slice.
pub fn moment_of(f: &[f64], p: f64) -> f64 {
    f.iter()
        .enumerate()
        .map(|(j, &v)| size_power(j, p) * v)
        .sum()
}

pub fn make_state(init: &InitSpec, n: usize) -> Result<DensityState> {
    if n < 2 {
        return Err(EdgError::InvalidInit(format!(
            "truncation size must be at least 2, got {n}"
        )));
    }
    let mut f = vec![0.0; n + 1];
    match init {
        InitSpec::Monodisperse { density } => {
            check_density("density", *density)?;
            f[1] = *density;
        }
        InitSpec::DeltaAt { size, density } => {
            check_density("density", *density)?;
            if *size > n {
                return Err(EdgError::InvalidInit(format!(
                    "delta size {size} exceeds truncation size {n}"
                )));
            }
            f[*size] = *density;
        }
        InitSpec::Geometric {
            ratio,
            total_number,
        } => {
            if !(0.0..1.0).contains(ratio) {
                return Err(EdgError::InvalidInit(format!(
                    "geometric ratio must lie in [0, 1), got {ratio}"
                )));
            }
            check_density("total_number", *total_number)?;
            let mut w = 1.0;
            for v in f.iter_mut() {
                *v = w;
                w *= ratio;
            }
            let norm: f64 = f.iter().sum();
            for v in f.iter_mut() {
                *v *= total_number / norm;
            }
        }
        InitSpec::Custom { values } => {
            if values.len() > n + 1 {
                return Err(EdgError::InvalidInit(format!(
                    "{} custom values do not fit a truncation of size {n}",
                    values.len()
                )));
            }
            for (j, &v) in values.iter().enumerate() {
                check_density(&format!("values[{j}]"), v)?;
                f[j] = v;
            }
        }
    }
    Ok(DensityState { t: 0.0, f })
}

/// Moments of several orders along a sequence of times.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub orders: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[time][order]`
    pub values: Vec<Vec<f64>>,
}

impl MomentSeries {
    pub fn new(orders: Vec<f64>) -> Self {
        MomentSeries {
            orders,
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_states<'a>(orders: &[f64], states: impl IntoIterator<Item = &'a DensityState>) -> Self {
        let mut series = MomentSeries::new(orders.to_vec());
        for s in states {
            series.push(s);
        }
        series
    }

    pub fn push(&mut self, state: &DensityState) {
        self.times.push(state.t());
        self.values
            .push(self.orders.iter().map(|&p| state.moment(p)).collect());
    }

    pub fn order_index(&self, p: f64) -> Option<usize> {
        self.orders.iter().position(|&q| q == p)
    }

    /// Column of values for moment order `p`, if tracked.
    pub fn column(&self, p: f64) -> Option<Vec<f64>> {
        let i = self.order_index(p)?;
        Some(self.values.iter().map(|row| row[i]).collect())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}
