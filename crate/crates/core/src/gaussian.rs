//! Exact entropy algebra for zero-mean jointly Gaussian vectors.
//!
//! A [`GaussianVector`] keeps, next to its covariance, a loading matrix `L`
//! with `L L^T = Sigma`. Conditioning on a block `G` projects the target rows
//! of `L` onto the orthogonal complement of the row space of `L_G` (Householder
//! QR), so conditional covariances are never formed by subtracting
//! `Sigma_TG Sigma_GG^{-1} Sigma_GT` from `Sigma_TT`. That keeps conditional
//! entropies accurate when coordinates carry state terms many orders of
//! magnitude above the noise floor, as strong fading chains do.
//!
//! All entropies are differential entropies in bits.

use std::collections::HashSet;
use std::f64::consts::{E, LN_2, PI};

use nalgebra::DMatrix;

use crate::error::{ensure_positive, Error, Result};

/// Determinants below this are treated as singular.
pub const DET_FLOOR: f64 = 1e-300;

/// A pivot whose size relative to its own row norm falls below this is
/// treated as exact linear dependence.
pub const PIVOT_RTOL: f64 = 1e-13;

/// Relative slack allowed when checking symmetry of a supplied covariance.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Most negative eigenvalue (relative to the largest diagonal entry) accepted
/// as numerical noise around a PSD matrix.
pub const PSD_SLACK: f64 = 1e-10;

/// `log2(2 pi e)`, the entropy of a unit-variance Gaussian scaled by two.
pub fn log2_two_pi_e() -> f64 {
    (2.0 * PI * E).log2()
}

/// Zero-mean jointly Gaussian vector with named coordinates.
#[derive(Debug, Clone)]
pub struct GaussianVector {
    names: Vec<String>,
    covariance: DMatrix<f64>,
    loadings: DMatrix<f64>,
}

/// Differential entropy (bits) of a coordinate block, with its conditioning.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyValue {
    pub value: f64,
    pub coords: Vec<String>,
    pub conditioning: Vec<String>,
}

impl GaussianVector {
    /// Build from an explicit covariance. The matrix must be symmetric and
    /// positive semi-definite up to [`SYMMETRY_TOL`] and [`PSD_SLACK`].
    pub fn from_covariance<S: Into<String>>(names: Vec<S>, covariance: DMatrix<f64>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let n = names.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(Error::InvalidParameter(format!(
                "covariance is {}x{} but {} names were given",
                covariance.nrows(),
                covariance.ncols(),
                n
            )));
        }
        check_unique(&names)?;
        if covariance.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("covariance has non-finite entries".into()));
        }
        let scale = covariance.amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (covariance[(i, j)] - covariance[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidParameter(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let loadings = pivoted_cholesky(&covariance)?;
        Ok(Self {
            names,
            covariance,
            loadings,
        })
    }

    /// Build from a loading matrix (`n` coordinates by `r` independent unit
    /// sources); the covariance is `L L^T`.
    pub fn from_loadings<S: Into<String>>(names: Vec<S>, loadings: DMatrix<f64>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if loadings.nrows() != names.len() {
            return Err(Error::InvalidParameter(format!(
                "{} loading rows for {} names",
                loadings.nrows(),
                names.len()
            )));
        }
        check_unique(&names)?;
        if loadings.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("loadings have non-finite entries".into()));
        }
        let covariance = &loadings * loadings.transpose();
        Ok(Self {
            names,
            covariance,
            loadings,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    fn index_of(&self, label: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    fn rows(&self, labels: &[&str]) -> Result<DMatrix<f64>> {
        let idx = labels
            .iter()
            .map(|l| self.index_of(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.loadings.select_rows(idx.iter()))
    }
}

fn check_unique(names: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(Error::InvalidParameter(format!("duplicate coordinate name `{n}`")));
        }
    }
    Ok(())
}

/// Outer-product Cholesky with largest-diagonal pivoting. Returns `L` (`n` by
/// rank) with `L L^T = a`, rows in the original order.
fn pivoted_cholesky(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)]).fold(0.0_f64, f64::max).max(f64::MIN_POSITIVE);
    let mut residual = a.clone();
    let mut used = vec![false; n];
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    for _ in 0..n {
        let (piv, d) = (0..n)
            .filter(|&i| !used[i])
            .map(|i| (i, residual[(i, i)]))
            .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        if piv == usize::MAX || d <= PSD_SLACK * scale * f64::EPSILON.sqrt() {
            break;
        }
        used[piv] = true;
        let root = d.sqrt();
        let col: Vec<f64> = (0..n)
            .map(|i| if used[i] && i != piv { 0.0 } else { residual[(i, piv)] / root })
            .collect();
        for i in 0..n {
            for j in 0..n {
                residual[(i, j)] -= col[i] * col[j];
            }
        }
        columns.push(col);
    }
    for i in 0..n {
        if !used[i] && residual[(i, i)] < -PSD_SLACK * scale {
            return Err(Error::InvalidParameter(
                "covariance is not positive semi-definite".into(),
            ));
        }
    }
    let rank = columns.len().max(1);
    let mut l = DMatrix::zeros(n, rank);
    for (k, col) in columns.iter().enumerate() {
        for i in 0..n {
            l[(i, k)] = col[i];
        }
    }
    Ok(l)
}

/// Orthonormal basis (columns) for the row space of `rows`, failing if the
/// rows are linearly dependent.
fn row_space_basis(rows: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let (k, r) = rows.shape();
    if k > r {
        return Err(Error::DegenerateConditioning(format!(
            "{what}: {k} coordinates span at most {r} dimensions"
        )));
    }
    let qr = rows.transpose().qr();
    let rr = qr.r();
    for i in 0..k {
        let norm = rows.row(i).norm();
        if norm == 0.0 || rr[(i, i)].abs() <= PIVOT_RTOL * norm {
            return Err(Error::DegenerateConditioning(format!(
                "{what}: coordinate {i} is linearly dependent on the others"
            )));
        }
    }
    Ok(qr.q())
}

/// Natural-log determinant of `rows rows^T`.
fn ln_det_gram(rows: &DMatrix<f64>, reference: &DMatrix<f64>) -> Result<f64> {
    let (k, r) = rows.shape();
    if k > r {
        return Err(Error::Degenerate(format!(
            "{k} coordinates span at most {r} dimensions"
        )));
    }
    let rr = rows.transpose().qr().r();
    let mut ln_det = 0.0;
    for i in 0..k {
        let d = rr[(i, i)].abs();
        let norm = reference.row(i).norm();
        if d == 0.0 || d <= PIVOT_RTOL * norm {
            return Err(Error::Degenerate(format!(
                "coordinate {i} has zero conditional variance"
            )));
        }
        ln_det += 2.0 * d.ln();
    }
    if ln_det < DET_FLOOR.ln() {
        return Err(Error::Degenerate(format!(
            "determinant exp({ln_det}) is below {DET_FLOOR:e}"
        )));
    }
    Ok(ln_det)
}

fn entropy_bits(k: usize, ln_det: f64) -> f64 {
    0.5 * (k as f64 * log2_two_pi_e() + ln_det / LN_2)
}

fn to_strings(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

/// `h(coords) = 1/2 log2((2 pi e)^k det Sigma_coords)`.
pub fn entropy(g: &GaussianVector, coords: &[&str]) -> Result<EntropyValue> {
    if coords.is_empty() {
        return Err(Error::InvalidParameter("empty coordinate set".into()));
    }
    let rows = g.rows(coords)?;
    let ln_det = ln_det_gram(&rows, &rows)?;
    Ok(EntropyValue {
        value: entropy_bits(coords.len(), ln_det),
        coords: to_strings(coords),
        conditioning: Vec::new(),
    })
}

/// `h(target | given)`, the entropy of the Gaussian conditional law whose
/// covariance is the Schur complement of the conditioning block.
pub fn conditional_entropy(g: &GaussianVector, target: &[&str], given: &[&str]) -> Result<EntropyValue> {
    if given.is_empty() {
        return entropy(g, target);
    }
    if target.is_empty() {
        return Err(Error::InvalidParameter("empty target set".into()));
    }
    let t = g.rows(target)?;
    let gr = g.rows(given)?;
    let q = row_space_basis(&gr, "conditioning block")?;
    let residual = &t - (&t * &q) * q.transpose();
    let ln_det = ln_det_gram(&residual, &t)?;
    Ok(EntropyValue {
        value: entropy_bits(target.len(), ln_det),
        coords: to_strings(target),
        conditioning: to_strings(given),
    })
}

/// `I(a; b) = h(a) + h(b) - h(a, b)`, evaluated as `h(a) - h(a | b)`.
pub fn mutual_information(g: &GaussianVector, a: &[&str], b: &[&str]) -> Result<f64> {
    let ha = entropy(g, a)?.value;
    let ha_b = conditional_entropy(g, a, b)?.value;
    Ok(ha - ha_b)
}

/// Noise variance `1 / sum a_j^2` of the maximal-ratio-combined statistic
/// `S + Z~` built from observations `a_j S + Z_j` with unit noise.
pub fn mrc_combine(fadings: &[f64]) -> Result<f64> {
    if fadings.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidParameter("non-finite fading amplitude".into()));
    }
    let energy: f64 = fadings.iter().map(|a| a * a).sum();
    if energy == 0.0 {
        return Err(Error::NoInformation);
    }
    Ok(1.0 / energy)
}

/// Builder for Gaussian vectors defined as linear combinations of
/// independent zero-mean sources.
#[derive(Debug, Clone, Default)]
pub struct LinearGaussianModel {
    sources: Vec<String>,
    std_devs: Vec<f64>,
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl LinearGaussianModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add an independent source with the given variance; it is also exposed
    /// as a coordinate of the same name.
    pub fn source(&mut self, name: &str, variance: f64) -> Result<&mut Self> {
        if !(variance.is_finite() && variance >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "variance of `{name}` must be finite and >= 0"
            )));
        }
        if self.names.iter().any(|n| n == name) {
            return Err(Error::InvalidParameter(format!("duplicate coordinate name `{name}`")));
        }
        let k = self.sources.len();
        self.sources.push(name.to_string());
        self.std_devs.push(variance.sqrt());
        for row in &mut self.rows {
            row.push(0.0);
        }
        let mut row = vec![0.0; k + 1];
        row[k] = variance.sqrt();
        self.names.push(name.to_string());
        self.rows.push(row);
        Ok(self)
    }

    /// Add a coordinate `sum c_i * v_i` over sources or earlier coordinates.
    pub fn coordinate(&mut self, name: &str, terms: &[(&str, f64)]) -> Result<&mut Self> {
        if self.names.iter().any(|n| n == name) {
            return Err(Error::InvalidParameter(format!("duplicate coordinate name `{name}`")));
        }
        let mut row = vec![0.0; self.sources.len()];
        for &(label, coef) in terms {
            let idx = self
                .names
                .iter()
                .position(|n| n == label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            for (acc, v) in row.iter_mut().zip(&self.rows[idx]) {
                *acc += coef * v;
            }
        }
        self.names.push(name.to_string());
        self.rows.push(row);
        Ok(self)
    }

    pub fn build(&self) -> Result<GaussianVector> {
        let n = self.names.len();
        let r = self.sources.len().max(1);
        let loadings = DMatrix::from_fn(n, r, |i, j| self.rows[i].get(j).copied().unwrap_or(0.0));
        GaussianVector::from_loadings(self.names.clone(), loadings)
    }
}

/// Rate `I(U; Y) - I(U; S)` of Costa precoding against `a_pre S` on the
/// channel `Y = X + a_act S + Z`, with `X ~ N(0, P)`, `S ~ N(0, Q)`, unit
/// noise and `U = X + P/(P+1) a_pre S`. The value may be negative under large
/// mismatch; the caller decides whether to clip it.
pub fn costa_mismatched_rate(power: f64, state_power: f64, a_pre: f64, a_act: f64) -> Result<f64> {
    ensure_positive("power", power)?;
    ensure_positive("state power", state_power)?;
    if !(a_pre.is_finite() && a_act.is_finite()) {
        return Err(Error::InvalidParameter("non-finite fading amplitude".into()));
    }
    let lambda = power / (power + 1.0);
    let mut m = LinearGaussianModel::new();
    m.source("X", power)?
        .source("S", state_power)?
        .source("Z", 1.0)?
        .coordinate("U", &[("X", 1.0), ("S", lambda * a_pre)])?
        .coordinate("Y", &[("X", 1.0), ("S", a_act), ("Z", 1.0)])?;
    let g = m.build()?;
    Ok(mutual_information(&g, &["U"], &["Y"])? - mutual_information(&g, &["U"], &["S"])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const H1: f64 = 2.047095585180641; // 1/2 log2(2 pi e)

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
    }

    #[test]
    fn unit_entropies() {
        assert_abs_diff_eq!(log2_two_pi_e() / 2.0, H1, epsilon = 1e-14);
        let g = GaussianVector::from_covariance(vec!["a"], diag(&[1.0])).unwrap();
        assert_abs_diff_eq!(entropy(&g, &["a"]).unwrap().value, H1, epsilon = 1e-12);
        let g = GaussianVector::from_covariance(vec!["a"], diag(&[4.0])).unwrap();
        assert_abs_diff_eq!(entropy(&g, &["a"]).unwrap().value, H1 + 1.0, epsilon = 1e-12);
        let g = GaussianVector::from_covariance(vec!["a", "b"], diag(&[1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(entropy(&g, &["a", "b"]).unwrap().value, 2.0 * H1, epsilon = 1e-12);
    }

    fn awgn(p: f64) -> GaussianVector {
        let mut m = LinearGaussianModel::new();
        m.source("X", p)
            .unwrap()
            .source("Z", 1.0)
            .unwrap()
            .coordinate("Y", &[("X", 1.0), ("Z", 1.0)])
            .unwrap();
        m.build().unwrap()
    }

    #[test]
    fn conditional_examples() {
        let g = GaussianVector::from_covariance(vec!["a", "b"], diag(&[3.0, 5.0])).unwrap();
        let c = conditional_entropy(&g, &["a"], &["b"]).unwrap().value;
        assert_abs_diff_eq!(c, entropy(&g, &["a"]).unwrap().value, epsilon = 1e-12);

        let g = awgn(1.0);
        assert_abs_diff_eq!(conditional_entropy(&g, &["Y"], &["X"]).unwrap().value, H1, epsilon = 1e-12);
        assert!(matches!(
            conditional_entropy(&g, &["Y"], &["Y"]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn mutual_information_examples() {
        assert_abs_diff_eq!(mutual_information(&awgn(1.0), &["X"], &["Y"]).unwrap(), 0.5, epsilon = 1e-12);
        let g = GaussianVector::from_covariance(vec!["a", "b"], diag(&[2.0, 7.0])).unwrap();
        assert_abs_diff_eq!(mutual_information(&g, &["a"], &["b"]).unwrap(), 0.0, epsilon = 1e-12);

        let mut m = LinearGaussianModel::new();
        m.source("X", 1.0).unwrap().source("S", 1.0).unwrap().source("Z", 1.0).unwrap();
        m.coordinate("Y", &[("X", 1.0), ("S", 1.0), ("Z", 1.0)]).unwrap();
        let g = m.build().unwrap();
        let expected = 0.5 * (1.0f64 + 0.5).log2();
        assert_abs_diff_eq!(mutual_information(&g, &["X"], &["Y"]).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(expected, 0.29248125036057815, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_inputs_are_errors() {
        let g = GaussianVector::from_covariance(vec!["a", "b"], DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert!(matches!(entropy(&g, &["a", "b"]), Err(Error::Degenerate(_))));
        assert!(matches!(
            conditional_entropy(&g, &["a"], &["b"]),
            Err(Error::Degenerate(_))
        ));
        let g = GaussianVector::from_covariance(vec!["a", "b", "c"], {
            let mut m = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
            m[(2, 2)] = 2.0;
            m
        })
        .unwrap();
        assert!(matches!(
            conditional_entropy(&g, &["c"], &["a", "b"]),
            Err(Error::DegenerateConditioning(_))
        ));
        assert!(matches!(entropy(&g, &["nope"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn rejects_invalid_covariances() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.2, 1.0]);
        assert!(GaussianVector::from_covariance(vec!["a", "b"], asym).is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianVector::from_covariance(vec!["a", "b"], indefinite).is_err());
        assert!(GaussianVector::from_covariance(vec!["a", "a"], diag(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn mrc_examples() {
        assert_abs_diff_eq!(mrc_combine(&[1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(mrc_combine(&[1.0, 2.0]).unwrap(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(mrc_combine(&[3.0]).unwrap(), 1.0 / 9.0, epsilon = 1e-15);
        assert_eq!(mrc_combine(&[0.0, 0.0]), Err(Error::NoInformation));
    }

    /// `P var(Y) / det cov(U, Y)` with `det` expanded by hand.
    fn costa_closed_form(p: f64, q: f64, b: f64, a: f64) -> f64 {
        let lambda = p / (p + 1.0);
        let var_u = p + lambda * lambda * b * b * q;
        let cov = p + lambda * a * b * q;
        let var_y = p + a * a * q + 1.0;
        0.5 * (p * var_y / (var_u * var_y - cov * cov)).log2()
    }

    #[test]
    fn costa_examples() {
        assert_abs_diff_eq!(costa_mismatched_rate(3.0, 1.0, 2.0, 2.0).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            costa_mismatched_rate(3.0, 1.0, 0.0, 2.0).unwrap(),
            0.5 * 1.6f64.log2(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(0.5 * 1.6f64.log2(), 0.33903595, epsilon = 1e-8);
        // var U = 4.265625, cov = 5.25, var Y = 8
        let v = costa_mismatched_rate(3.0, 1.0, 1.5, 2.0).unwrap();
        assert_abs_diff_eq!(v, costa_closed_form(3.0, 1.0, 1.5, 2.0), epsilon = 1e-12);
        assert_abs_diff_eq!(v, 0.5 * (24.0f64 / 6.5625).log2(), epsilon = 1e-12);
    }

    fn random_psd(n: usize, entries: &[f64]) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n + 2, |i, j| entries[(i * (n + 2) + j) % entries.len()]);
        &b * b.transpose() + DMatrix::identity(n, n) * 0.05
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("v{i}")).collect()
    }

    proptest! {
        #[test]
        fn chain_rule_and_conditioning(n in 2usize..=8, split in 1usize..8, entries in prop::collection::vec(-2.0f64..2.0, 80)) {
            let split = split.min(n - 1);
            let g = GaussianVector::from_covariance(labels(n), random_psd(n, &entries)).unwrap();
            let names = labels(n);
            let a: Vec<&str> = names[..split].iter().map(String::as_str).collect();
            let b: Vec<&str> = names[split..].iter().map(String::as_str).collect();
            let all: Vec<&str> = names.iter().map(String::as_str).collect();
            let joint = entropy(&g, &all).unwrap().value;
            let ha = entropy(&g, &a).unwrap().value;
            let hb_a = conditional_entropy(&g, &b, &a).unwrap().value;
            prop_assert!((joint - (ha + hb_a)).abs() < 1e-12 * joint.abs().max(1.0) * 10.0);
            let hb = entropy(&g, &b).unwrap().value;
            prop_assert!(hb_a <= hb + 1e-12);
            let iab = mutual_information(&g, &a, &b).unwrap();
            let iba = mutual_information(&g, &b, &a).unwrap();
            prop_assert!((iab - iba).abs() < 1e-12 * 10.0);
            prop_assert!(iab >= -1e-9);
            prop_assert!((iab - (ha + hb - joint)).abs() < 1e-11);
        }

        #[test]
        fn mrc_statistic_is_sufficient(k in 1usize..=5, amps in prop::collection::vec(0.1f64..5.0, 5), rho in -0.95f64..0.95, p in 0.1f64..20.0) {
            // T = X + S with X correlated to S; observations a_j S + Z_j.
            let amps = &amps[..k];
            let mut m = LinearGaussianModel::new();
            m.source("W", 1.0).unwrap().source("S", 1.0).unwrap();
            m.coordinate("X", &[("W", (p * (1.0 - rho * rho)).sqrt()), ("S", rho * p.sqrt())]).unwrap();
            let mut obs = Vec::new();
            let sigma2 = mrc_combine(amps).unwrap();
            let mut tilde: Vec<(String, f64)> = Vec::new();
            for (j, a) in amps.iter().enumerate() {
                let z = format!("Z{j}");
                m.source(&z, 1.0).unwrap();
                tilde.push((z.clone(), a * sigma2));
                let o = format!("O{j}");
                m.coordinate(&o, &[("S", *a), (z.as_str(), 1.0)]).unwrap();
                obs.push(o);
            }
            let mut combined: Vec<(&str, f64)> = vec![("S", 1.0)];
            combined.extend(tilde.iter().map(|(n, c)| (n.as_str(), *c)));
            m.coordinate("C", &combined).unwrap();
            m.coordinate("T", &[("X", 1.0), ("S", 1.0)]).unwrap();
            let g = m.build().unwrap();
            let obs_refs: Vec<&str> = obs.iter().map(String::as_str).collect();
            let full = conditional_entropy(&g, &["T"], &obs_refs).unwrap().value;
            let mrc = conditional_entropy(&g, &["T"], &["C"]).unwrap().value;
            prop_assert!((full - mrc).abs() < 1e-10);
            // combined noise variance matches 1 / sum a^2
            let var_c = g.covariance()[(g.dim() - 2, g.dim() - 2)];
            prop_assert!((var_c - (1.0 + sigma2)).abs() < 1e-12 * var_c.max(1.0));
        }

        #[test]
        fn matched_costa_is_interference_free(p in 0.01f64..1000.0, q in 0.01f64..100.0, a in 0.0f64..50.0) {
            let r = costa_mismatched_rate(p, q, a, a).unwrap();
            prop_assert!((r - 0.5 * (1.0 + p).log2()).abs() < 1e-10);
        }

        #[test]
        fn costa_matches_closed_form(p in 0.1f64..100.0, q in 0.1f64..4.0, b in 0.0f64..5.0, a in 0.0f64..5.0) {
            let r = costa_mismatched_rate(p, q, b, a).unwrap();
            prop_assert!((r - costa_closed_form(p, q, b, a)).abs() < 1e-9);
        }
    }
}
