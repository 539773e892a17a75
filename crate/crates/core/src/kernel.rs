//! Interaction kernels `K(j, k)`: the rate at which a cluster of size `j`
//! exports one monomer to a cluster of size `k`.
//!
//! Parametric families carry exact separable decompositions so that the
//! rate sums of the truncated system can be evaluated in `O(N)` instead of
//! `O(N^2)`. Evaluation at a donor size of zero is defined by the family
//! formula but never used by the dynamics (size-0 clusters cannot export).
//!
//! Symmetry is judged on positive sizes `j, k >= 1`. Pairs involving size 0
//! only enter the dynamics through the receiver column `K(j, 0)`, so the
//! unused row `K(0, k)` may differ from it (e.g. the `eta = 0` homogeneous
//! kernel `1 - delta_{j,0}`, or any kernel with a forced zero receiver row).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{EdgError, Result};

/// A function of cluster size used as one factor of a separable kernel.
pub type SizeFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;

/// Sample range used to check symmetry of kernels given by closures.
const CUSTOM_SYMMETRY_RANGE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// `C (j^mu k^nu + j^nu k^mu)`
    ProductPower,
    /// `C (j^beta + k^beta)`
    SumPower,
    /// `C (j k)^eta` for `eta > 0`, `C (1 - delta_{j,0})` for `eta = 0`
    HomogeneousEta,
    Tabulated,
    SeparableCustom,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KernelFamily::ProductPower => "product_power",
            KernelFamily::SumPower => "sum_power",
            KernelFamily::HomogeneousEta => "homogeneous_eta",
            KernelFamily::Tabulated => "tabulated",
            KernelFamily::SeparableCustom => "separable_custom",
        };
        f.write_str(s)
    }
}

/// Dense square matrix of rates, row index = donor size.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    size: usize,
    data: Vec<f64>,
}

impl KernelTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for (j, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(EdgError::NonSquareTable {
                    rows: size,
                    cols: row.len(),
                });
            }
            for (k, value) in row.into_iter().enumerate() {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(EdgError::NegativeTableEntry { j, k, value });
                }
                data.push(value);
            }
        }
        Ok(KernelTable { size, data })
    }

    /// Number of sizes covered, i.e. valid indices are `0..size`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, j: usize, k: usize) -> Option<f64> {
        (j < self.size && k < self.size).then(|| self.data[j * self.size + k])
    }
}

#[derive(Clone)]
pub struct FactorPair {
    pub a: SizeFn,
    pub b: SizeFn,
}

impl FactorPair {
    pub fn new(
        a: impl Fn(usize) -> f64 + Send + Sync + 'static,
        b: impl Fn(usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        FactorPair {
            a: Arc::new(a),
            b: Arc::new(b),
        }
    }
}

/// `K(j, k) = sum_m a_m(j) b_m(k)`.
#[derive(Clone)]
pub struct SeparableDecomposition {
    terms: Vec<FactorPair>,
}

impl SeparableDecomposition {
    pub fn new(terms: Vec<FactorPair>) -> Self {
        SeparableDecomposition { terms }
    }

    pub fn terms(&self) -> &[FactorPair] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sums the factor products in ascending term order.
    pub fn reconstruct(&self, j: usize, k: usize) -> f64 {
        self.terms.iter().map(|t| (t.a)(j) * (t.b)(k)).sum()
    }

    /// Tabulates every factor on sizes `0..=n`, returned as `(a, b)` with
    /// one vector per term.
    pub fn factor_tables(&self, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let a = self
            .terms
            .iter()
            .map(|t| (0..=n).map(|j| (t.a)(j)).collect())
            .collect();
        let b = self
            .terms
            .iter()
            .map(|t| (0..=n).map(|j| (t.b)(j)).collect())
            .collect();
        (a, b)
    }
}

impl fmt::Debug for SeparableDecomposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableDecomposition")
            .field("terms", &self.terms.len())
            .finish()
    }
}

/// Parameters of a kernel. Only the fields relevant to `family` are read.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub coefficient: f64,
    pub mu: f64,
    pub nu: f64,
    pub eta: f64,
    pub beta: f64,
    /// Lower-bound constant `C1` of the finite-gelation hypothesis.
    pub c1: Option<f64>,
    /// Forces `K(j, 0) = 0` for every donor size `j`.
    pub zero_receiver_row: bool,
    pub table: Option<KernelTable>,
    pub custom_terms: Option<SeparableDecomposition>,
}

impl KernelSpec {
    fn base(family: KernelFamily, coefficient: f64) -> Self {
        KernelSpec {
            family,
            coefficient,
            mu: 0.0,
            nu: 0.0,
            eta: 0.0,
            beta: 0.0,
            c1: None,
            zero_receiver_row: false,
            table: None,
            custom_terms: None,
        }
    }

    pub fn product_power(coefficient: f64, mu: f64, nu: f64) -> Self {
        KernelSpec {
            mu,
            nu,
            ..Self::base(KernelFamily::ProductPower, coefficient)
        }
    }

    pub fn sum_power(coefficient: f64, beta: f64) -> Self {
        KernelSpec {
            beta,
            ..Self::base(KernelFamily::SumPower, coefficient)
        }
    }

    pub fn homogeneous(coefficient: f64, eta: f64) -> Self {
        KernelSpec {
            eta,
            ..Self::base(KernelFamily::HomogeneousEta, coefficient)
        }
    }

    pub fn tabulated(table: KernelTable) -> Self {
        KernelSpec {
            table: Some(table),
            ..Self::base(KernelFamily::Tabulated, 1.0)
        }
    }

    pub fn separable_custom(terms: SeparableDecomposition) -> Self {
        KernelSpec {
            custom_terms: Some(terms),
            ..Self::base(KernelFamily::SeparableCustom, 1.0)
        }
    }

    pub fn with_zero_receiver_row(mut self, on: bool) -> Self {
        self.zero_receiver_row = on;
        self
    }

    pub fn with_c1(mut self, c1: f64) -> Self {
        self.c1 = Some(c1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    GlobalExistence,
    LocalExistence,
    FiniteGelation,
    InstantaneousGelation,
    Unknown,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::GlobalExistence => "global_existence",
            Regime::LocalExistence => "local_existence",
            Regime::FiniteGelation => "finite_gelation",
            Regime::InstantaneousGelation => "instantaneous_gelation",
            Regime::Unknown => "unknown",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeClass {
    pub regime: Regime,
    pub citation: String,
}

impl RegimeClass {
    fn new(regime: Regime, citation: impl Into<String>) -> Self {
        RegimeClass {
            regime,
            citation: citation.into(),
        }
    }
}

/// Upper growth bound `K(j,k) <= c_q (j^mu k^nu + j^nu k^mu)` on `j, k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthBound {
    pub c_q: f64,
    pub mu: f64,
    pub nu: f64,
}

/// Lower bound `K(j,k) >= c1 (j^2 k^alpha + j^alpha k^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GelationLowerBound {
    pub alpha: f64,
    pub c1: f64,
}

/// Lower bound `K(j,k) >= c (j^beta + k^beta)` together with `K(j,0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperquadraticLowerBound {
    pub beta: f64,
    pub c: f64,
}

#[derive(Clone)]
pub struct Kernel {
    spec: KernelSpec,
    symmetric: bool,
    separable: Option<SeparableDecomposition>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("family", &self.spec.family)
            .field("symmetric", &self.symmetric)
            .field("separable_terms", &self.separable.as_ref().map(|s| s.len()))
            .finish()
    }
}

fn pow(x: usize, p: f64) -> f64 {
    (x as f64).powf(p)
}

fn require_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(EdgError::InvalidParameter(format!("{name} must be finite")))
    }
}

fn require_nonneg(name: &str, value: f64) -> Result<()> {
    require_finite(name, value)?;
    if value < 0.0 {
        return Err(EdgError::InvalidParameter(format!(
            "{name} must be non-negative, got {value}"
        )));
    }
    Ok(())
}

impl Kernel {
    /// Validates `spec`, sets the symmetry flag and attaches a separable
    /// decomposition when the family admits one.
    pub fn new(spec: KernelSpec) -> Result<Self> {
        require_nonneg("coefficient C", spec.coefficient)?;
        if let Some(c1) = spec.c1 {
            require_nonneg("C1", c1)?;
        }
        let zero_row = spec.zero_receiver_row;
        let c = spec.coefficient;

        // Receiver factors vanish at size 0 when the zero row is forced.
        let mask = move |k: usize, v: f64| if zero_row && k == 0 { 0.0 } else { v };

        let (symmetric, separable) = match spec.family {
            KernelFamily::ProductPower => {
                require_nonneg("mu", spec.mu)?;
                require_nonneg("nu", spec.nu)?;
                let (mu, nu) = (spec.mu, spec.nu);
                let terms = vec![
                    FactorPair::new(move |j| c * pow(j, mu), move |k| mask(k, pow(k, nu))),
                    FactorPair::new(move |j| c * pow(j, nu), move |k| mask(k, pow(k, mu))),
                ];
                (true, Some(SeparableDecomposition::new(terms)))
            }
            KernelFamily::SumPower => {
                require_nonneg("beta", spec.beta)?;
                let beta = spec.beta;
                let terms = vec![
                    FactorPair::new(move |j| c * pow(j, beta), move |k| mask(k, 1.0)),
                    FactorPair::new(move |_| c, move |k| mask(k, pow(k, beta))),
                ];
                (true, Some(SeparableDecomposition::new(terms)))
            }
            KernelFamily::HomogeneousEta => {
                require_nonneg("eta", spec.eta)?;
                let eta = spec.eta;
                let term = if eta == 0.0 {
                    FactorPair::new(
                        move |j| if j == 0 { 0.0 } else { c },
                        move |k| mask(k, 1.0),
                    )
                } else {
                    FactorPair::new(move |j| c * pow(j, eta), move |k| mask(k, pow(k, eta)))
                };
                (true, Some(SeparableDecomposition::new(vec![term])))
            }
            KernelFamily::Tabulated => {
                let table = spec
                    .table
                    .as_ref()
                    .ok_or_else(|| EdgError::MissingKey("kernel.table_path".into()))?;
                let n = table.size();
                let symmetric = (1..n).all(|j| {
                    (j + 1..n).all(|k| table.get(j, k) == table.get(k, j))
                });
                (symmetric, None)
            }
            KernelFamily::SeparableCustom => {
                let terms = spec.custom_terms.clone().ok_or_else(|| {
                    EdgError::InvalidParameter("separable_custom requires factor terms".into())
                })?;
                let terms = if zero_row {
                    SeparableDecomposition::new(
                        terms
                            .terms()
                            .iter()
                            .map(|t| {
                                let b = t.b.clone();
                                FactorPair {
                                    a: t.a.clone(),
                                    b: Arc::new(move |k| if k == 0 { 0.0 } else { b(k) }),
                                }
                            })
                            .collect(),
                    )
                } else {
                    terms
                };
                for j in 0..=CUSTOM_SYMMETRY_RANGE {
                    for k in 0..=CUSTOM_SYMMETRY_RANGE {
                        let v = terms.reconstruct(j, k);
                        if !(v >= 0.0) || !v.is_finite() {
                            return Err(EdgError::InvalidParameter(format!(
                                "separable_custom kernel gives K({j},{k}) = {v}"
                            )));
                        }
                    }
                }
                let symmetric = (1..=CUSTOM_SYMMETRY_RANGE).all(|j| {
                    (j + 1..=CUSTOM_SYMMETRY_RANGE)
                        .all(|k| terms.reconstruct(j, k) == terms.reconstruct(k, j))
                });
                (symmetric, Some(terms))
            }
        };

        Ok(Kernel {
            spec,
            symmetric,
            separable,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn family(&self) -> KernelFamily {
        self.spec.family
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// First pair `1 <= j < k <= n` with `K(j,k) != K(k,j)`, if any.
    pub fn asymmetry(&self, n: usize) -> Option<(usize, usize, f64, f64)> {
        if self.symmetric {
            return None;
        }
        let n = self.max_truncation().map_or(n, |m| m.min(n));
        (1..=n).find_map(|j| {
            (j + 1..=n).find_map(|k| {
                let (jk, kj) = (self.rate(j, k), self.rate(k, j));
                (jk != kj).then_some((j, k, jk, kj))
            })
        })
    }

    /// Errors with the first asymmetric pair found up to size `n`.
    pub fn require_symmetric(&self, n: usize) -> Result<()> {
        if self.symmetric {
            return Ok(());
        }
        let n = n.max(CUSTOM_SYMMETRY_RANGE);
        match self.asymmetry(n) {
            Some((j, k, jk, kj)) => Err(EdgError::NotSymmetric { j, k, jk, kj }),
            None => Err(EdgError::InvalidParameter("kernel is not symmetric".into())),
        }
    }

    /// Largest admissible truncation size, if the kernel is only defined on
    /// a finite range.
    pub fn max_truncation(&self) -> Option<usize> {
        self.spec
            .table
            .as_ref()
            .filter(|_| self.spec.family == KernelFamily::Tabulated)
            .map(|t| t.size().saturating_sub(1))
    }

    /// Checks that every rate needed by a truncation of size `n` is defined.
    pub fn covers(&self, n: usize) -> Result<()> {
        match self.max_truncation() {
            Some(max) if n > max => Err(EdgError::OutOfTable {
                j: n,
                k: n,
                size: max + 1,
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, j: usize, k: usize) -> Result<f64> {
        if self.spec.zero_receiver_row && k == 0 {
            if let Some(max) = self.max_truncation() {
                if j > max {
                    return Err(EdgError::OutOfTable { j, k, size: max + 1 });
                }
            }
            return Ok(0.0);
        }
        let s = &self.spec;
        let c = s.coefficient;
        let v = match s.family {
            KernelFamily::ProductPower => c * (pow(j, s.mu) * pow(k, s.nu) + pow(j, s.nu) * pow(k, s.mu)),
            KernelFamily::SumPower => c * (pow(j, s.beta) + pow(k, s.beta)),
            KernelFamily::HomogeneousEta => {
                if s.eta == 0.0 {
                    if j == 0 {
                        0.0
                    } else {
                        c
                    }
                } else {
                    c * ((j as f64) * (k as f64)).powf(s.eta)
                }
            }
            KernelFamily::Tabulated => {
                let table = s.table.as_ref().expect("validated at construction");
                table.get(j, k).ok_or(EdgError::OutOfTable {
                    j,
                    k,
                    size: table.size(),
                })?
            }
            KernelFamily::SeparableCustom => self
                .separable
                .as_ref()
                .expect("validated at construction")
                .reconstruct(j, k),
        };
        Ok(v)
    }

    /// Infallible evaluation for callers that already checked [`Kernel::covers`].
    pub(crate) fn rate(&self, j: usize, k: usize) -> f64 {
        self.eval(j, k).expect("kernel coverage checked by caller")
    }

    pub fn separable_terms(&self) -> Option<&SeparableDecomposition> {
        self.separable.as_ref()
    }

    /// Smallest product-power envelope dominating the kernel on positive sizes.
    pub fn growth_bound(&self) -> Option<GrowthBound> {
        let s = &self.spec;
        match s.family {
            KernelFamily::ProductPower => Some(GrowthBound {
                c_q: s.coefficient,
                mu: s.mu,
                nu: s.nu,
            }),
            // (jk)^eta = (j^eta k^eta + j^eta k^eta) / 2
            KernelFamily::HomogeneousEta => Some(GrowthBound {
                c_q: s.coefficient / 2.0,
                mu: s.eta,
                nu: s.eta,
            }),
            // j^beta + k^beta = j^beta k^0 + j^0 k^beta
            KernelFamily::SumPower => Some(GrowthBound {
                c_q: s.coefficient,
                mu: s.beta,
                nu: 0.0,
            }),
            _ => None,
        }
    }

    /// The largest `C1` for which `C1 (j^2 k^alpha + j^alpha k^2) <= K`
    /// holds, if the family has such a lower bound with `alpha` in `(1, 2]`.
    fn natural_gelation_bound(&self) -> Option<GelationLowerBound> {
        let s = &self.spec;
        match s.family {
            KernelFamily::ProductPower => {
                let (lo, hi) = (s.mu.min(s.nu), s.mu.max(s.nu));
                (hi == 2.0 && lo > 1.0 && s.coefficient > 0.0).then_some(GelationLowerBound {
                    alpha: lo,
                    c1: s.coefficient,
                })
            }
            KernelFamily::HomogeneousEta => {
                (s.eta == 2.0 && s.coefficient > 0.0).then_some(GelationLowerBound {
                    alpha: 2.0,
                    c1: s.coefficient / 2.0,
                })
            }
            _ => None,
        }
    }

    /// Lower bound used for finite-gelation checks. A user-supplied `C1`
    /// is honoured only when it does not exceed the largest admissible one.
    pub fn gelation_lower_bound(&self) -> Option<GelationLowerBound> {
        let natural = self.natural_gelation_bound()?;
        match self.spec.c1 {
            None => Some(natural),
            Some(c1) if c1 > 0.0 && c1 <= natural.c1 * (1.0 + 1e-12) => Some(GelationLowerBound {
                alpha: natural.alpha,
                c1,
            }),
            Some(_) => None,
        }
    }

    pub fn superquadratic_lower_bound(&self) -> Option<SuperquadraticLowerBound> {
        let s = &self.spec;
        if s.coefficient <= 0.0 {
            return None;
        }
        match s.family {
            KernelFamily::SumPower if s.beta > 2.0 && s.zero_receiver_row => {
                Some(SuperquadraticLowerBound {
                    beta: s.beta,
                    c: s.coefficient,
                })
            }
            // (jk)^eta >= max(j,k)^eta >= (j^eta + k^eta) / 2 on j, k >= 1
            KernelFamily::HomogeneousEta if s.eta > 2.0 => Some(SuperquadraticLowerBound {
                beta: s.eta,
                c: s.coefficient / 2.0,
            }),
            KernelFamily::ProductPower => {
                let (lo, hi) = (s.mu.min(s.nu), s.mu.max(s.nu));
                (hi > 2.0 && (lo > 0.0 || s.zero_receiver_row)).then_some(
                    SuperquadraticLowerBound {
                        beta: hi,
                        c: s.coefficient,
                    },
                )
            }
            _ => None,
        }
    }

    /// `C` in `K = C j^2 k^2`, when the kernel has exactly that form.
    pub fn quadratic_coefficient(&self) -> Option<f64> {
        let s = &self.spec;
        match s.family {
            KernelFamily::HomogeneousEta if s.eta == 2.0 => Some(s.coefficient),
            KernelFamily::ProductPower if s.mu == 2.0 && s.nu == 2.0 => Some(2.0 * s.coefficient),
            _ => None,
        }
    }
}

/// Places the kernel in an existence or gelation regime from its parameters alone.
pub fn classify_regime(kernel: &Kernel) -> RegimeClass {
    use Regime::*;
    let s = kernel.spec();
    match s.family {
        KernelFamily::Tabulated => {
            return RegimeClass::new(Unknown, "tabulated kernel: no growth structure assumed")
        }
        KernelFamily::SeparableCustom => {
            return RegimeClass::new(Unknown, "custom separable kernel: no growth structure assumed")
        }
        _ => {}
    }
    if s.coefficient == 0.0 {
        return RegimeClass::new(GlobalExistence, "identically zero kernel: static dynamics");
    }
    if let Some(lb) = kernel.superquadratic_lower_bound() {
        return RegimeClass::new(
            InstantaneousGelation,
            format!(
                "K(j,k) >= {} (j^{} + k^{}) with beta > 2 and K(j,0) = 0: gelation time is zero",
                lb.c, lb.beta, lb.beta
            ),
        );
    }
    let Some(g) = kernel.growth_bound() else {
        return RegimeClass::new(Unknown, "no growth bound available");
    };
    let (lo, hi) = (g.mu.min(g.nu), g.mu.max(g.nu));
    if hi > 2.0 {
        return RegimeClass::new(Unknown, "growth exceeds C j^2 k^2 without a superquadratic lower bound");
    }
    if lo + hi <= 3.0 {
        return RegimeClass::new(
            GlobalExistence,
            "K(j,k) <= C(j^mu k^nu + j^nu k^mu) with mu, nu <= 2 and mu + nu <= 3: global mass-conserving solution",
        );
    }
    if let Some(lb) = kernel.gelation_lower_bound() {
        return RegimeClass::new(
            FiniteGelation,
            format!(
                "{} (j^2 k^{a} + j^{a} k^2) <= K(j,k) <= C j^2 k^2 with 1 < alpha <= 2: finite-time gelation",
                lb.c1,
                a = lb.alpha
            ),
        );
    }
    let detail = if kernel.natural_gelation_bound().is_some() {
        "supplied C1 exceeds the kernel's lower-bound constant"
    } else {
        "no gelation lower bound"
    };
    RegimeClass::new(
        LocalExistence,
        format!("K(j,k) <= C j^2 k^2, {detail}: local solution up to (2 M2(0) C)^-1"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_power_examples() {
        let k = Kernel::new(KernelSpec::product_power(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(k.eval(2, 3).unwrap(), 12.0);
        assert_eq!(k.separable_terms().unwrap().len(), 2);
        let k = Kernel::new(KernelSpec::product_power(1.0, 2.0, 1.0)).unwrap();
        assert_eq!(k.eval(2, 3).unwrap(), 30.0);
        assert!(k.is_symmetric());
    }

    #[test]
    fn homogeneous_eta_zero_branch() {
        let k = Kernel::new(KernelSpec::homogeneous(1.0, 0.0)).unwrap();
        assert_eq!(k.eval(0, 3).unwrap(), 0.0);
        assert_eq!(k.eval(3, 0).unwrap(), 1.0);
        assert_eq!(k.eval(4, 7).unwrap(), 1.0);
        let k = Kernel::new(KernelSpec::homogeneous(1.0, 1.0)).unwrap();
        assert_eq!(k.eval(2, 3).unwrap(), 6.0);
    }

    #[test]
    fn sum_power_zero_row() {
        let k = Kernel::new(KernelSpec::sum_power(1.0, 3.0).with_zero_receiver_row(true)).unwrap();
        assert_eq!(k.eval(2, 3).unwrap(), 35.0);
        assert_eq!(k.eval(5, 0).unwrap(), 0.0);
        assert_eq!(k.separable_terms().unwrap().reconstruct(5, 0), 0.0);
        assert_eq!(classify_regime(&k).regime, Regime::InstantaneousGelation);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(Kernel::new(KernelSpec::product_power(-1.0, 1.0, 1.0)).is_err());
        assert!(matches!(
            KernelTable::from_rows(vec![vec![1.0, 2.0], vec![1.0]]),
            Err(EdgError::NonSquareTable { .. })
        ));
        assert!(matches!(
            KernelTable::from_rows(vec![vec![1.0, -2.0], vec![1.0, 0.0]]),
            Err(EdgError::NegativeTableEntry { j: 0, k: 1, .. })
        ));
    }

    #[test]
    fn tabulated_bounds_and_symmetry() {
        let t = KernelTable::from_rows(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 1.0, 2.0],
            vec![0.0, 3.0, 0.0],
        ])
        .unwrap();
        let k = Kernel::new(KernelSpec::tabulated(t)).unwrap();
        assert!(!k.is_symmetric());
        assert!(matches!(k.eval(3, 0), Err(EdgError::OutOfTable { .. })));
        assert!(k.separable_terms().is_none());
        assert_eq!(classify_regime(&k).regime, Regime::Unknown);
        assert!(k.covers(2).is_ok());
        assert!(k.covers(3).is_err());
    }

    #[test]
    fn regime_examples() {
        let classify = |spec| classify_regime(&Kernel::new(spec).unwrap()).regime;
        assert_eq!(classify(KernelSpec::product_power(1.0, 1.0, 1.0)), Regime::GlobalExistence);
        assert_eq!(
            classify(KernelSpec::product_power(1.0, 2.0, 2.0).with_c1(0.5)),
            Regime::FiniteGelation
        );
        assert_eq!(classify(KernelSpec::product_power(1.0, 2.0, 1.5)), Regime::FiniteGelation);
        assert_eq!(classify(KernelSpec::product_power(1.0, 1.8, 1.8)), Regime::LocalExistence);
        assert_eq!(
            classify(KernelSpec::product_power(1.0, 2.0, 2.0).with_c1(5.0)),
            Regime::LocalExistence
        );
        assert_eq!(classify(KernelSpec::homogeneous(1.0, 1.5)), Regime::GlobalExistence);
        assert_eq!(classify(KernelSpec::homogeneous(1.0, 1.7)), Regime::LocalExistence);
        assert_eq!(classify(KernelSpec::homogeneous(1.0, 2.0)), Regime::FiniteGelation);
        assert_eq!(classify(KernelSpec::homogeneous(1.0, 2.5)), Regime::InstantaneousGelation);
        assert_eq!(classify(KernelSpec::sum_power(1.0, 3.0)), Regime::Unknown);
        assert_eq!(classify(KernelSpec::sum_power(1.0, 2.0)), Regime::GlobalExistence);
    }

    #[test]
    fn custom_separable_zero_row_applies_to_factors() {
        let terms = SeparableDecomposition::new(vec![FactorPair::new(|j| j as f64, |k| (k + 1) as f64)]);
        let k = Kernel::new(KernelSpec::separable_custom(terms).with_zero_receiver_row(true)).unwrap();
        assert_eq!(k.eval(4, 0).unwrap(), 0.0);
        assert_eq!(k.separable_terms().unwrap().reconstruct(4, 0), 0.0);
        assert_eq!(k.eval(2, 3).unwrap(), 8.0);
        assert!(!k.is_symmetric());
    }
}
