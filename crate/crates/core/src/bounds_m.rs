//! Bounds for `M` fading values and a numerical check of the entropy chain
//! behind the strong fading outer bound.

use crate::channel::{
    chain_holds, largest_strong_fading_subset, BoundKind, ChannelParams, OptimizerState, RateBound,
    StrongFadingVariant,
};
use crate::error::{Error, Result};
use crate::gaussian::{conditional_entropy, log2_two_pi_e, mutual_information, LinearGaussianModel};
use crate::optimize::lin_space;
use crate::par;

/// Normalized channel with `M` fading values and the strong fading predicate
/// variant its bounds are checked under.
#[derive(Debug, Clone, PartialEq)]
pub struct MFadingInstance {
    params: ChannelParams,
    variant: StrongFadingVariant,
}

impl MFadingInstance {
    pub fn new(params: ChannelParams, variant: StrongFadingVariant) -> Result<Self> {
        params.ensure_normalized()?;
        Ok(Self { params, variant })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn variant(&self) -> StrongFadingVariant {
        self.variant
    }

    pub fn m(&self) -> usize {
        self.params.fading().len()
    }

    pub fn is_strong_fading(&self) -> bool {
        chain_holds(self.params.power(), self.params.fading().values(), self.variant)
    }

    fn ensure_strong(&self) -> Result<()> {
        if self.is_strong_fading() {
            Ok(())
        } else {
            Err(Error::RegimeViolation(format!(
                "{} predicate fails for [{}] at P = {}",
                self.variant.label(),
                self.params.fading(),
                self.params.power()
            )))
        }
    }
}

fn log2m_over_m(m: usize) -> f64 {
    (m as f64).log2() / m as f64
}

/// `1/(2M) log(1+P) + 3 + log(M)/M`, valid in the strong fading regime.
pub fn strong_fading_outer(inst: &MFadingInstance) -> Result<RateBound> {
    inst.ensure_strong()?;
    let m = inst.m();
    let p = inst.params.power();
    let value = (1.0 + p).log2() / (2.0 * m as f64) + 3.0 + log2m_over_m(m);
    let mut b = RateBound::new("strong_fading_outer", BoundKind::Outer, value, inst.params.clone())
        .with_note(inst.variant.label());
    if m == 1 {
        b = b.with_note("degenerate: M = 1");
    }
    Ok(b)
}

/// `1/(2M) log(1+P)`: precode against `a_j S` for a fraction `1/M` of the
/// time, for each `j`. Holds for any fading set.
pub fn time_sharing_inner(inst: &MFadingInstance) -> Result<RateBound> {
    let m = inst.m();
    let value = (1.0 + inst.params.power()).log2() / (2.0 * m as f64);
    Ok(RateBound::new("time_sharing_inner", BoundKind::Inner, value, inst.params.clone()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrongFadingGap {
    pub outer: f64,
    pub inner: f64,
    /// `outer - inner`
    pub realized: f64,
    /// `3 + log(M)/M`
    pub bound: f64,
}

impl StrongFadingGap {
    pub fn is_tight(&self, tol: f64) -> bool {
        (self.realized - self.bound).abs() <= tol
    }
}

pub fn strong_fading_gap(inst: &MFadingInstance) -> Result<StrongFadingGap> {
    let outer = strong_fading_outer(inst)?.value;
    let inner = time_sharing_inner(inst)?.value;
    Ok(StrongFadingGap {
        outer,
        inner,
        realized: outer - inner,
        bound: 3.0 + log2m_over_m(inst.m()),
    })
}

/// `1/(2K) log(1+P)` with `K` the size of the largest strong fading subset.
pub fn subset_outer(inst: &MFadingInstance) -> Result<RateBound> {
    let s = largest_strong_fading_subset(&inst.params, inst.variant)?;
    let value = (1.0 + inst.params.power()).log2() / (2.0 * s.size as f64);
    Ok(RateBound::new("subset_outer", BoundKind::Outer, value, inst.params.clone())
        .with_optimizer(OptimizerState::SubsetSize(s.size))
        .with_note(format!("subset={}", s.subset)))
}

/// Slack below which a checked inequality counts as violated.
pub const PROOF_TOL: f64 = 1e-9;

/// Worst case over the input-state correlation grid for receiver `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProofTerm {
    /// One-based receiver index, `2..=M`.
    pub j: usize,
    /// `h(Y_j | V_j)` at `rho_mrc`.
    pub h_y_given_v: f64,
    /// Combined-statistic bound on `h(Y_j | V_j)`.
    pub mrc_bound: f64,
    /// Correlation attaining the smallest `mrc_bound - h_y_given_v`.
    pub rho_mrc: f64,
    /// `h(a_j S + Z_j | V_j)`; it does not depend on the input.
    pub h_side_increment: f64,
    /// Largest `h(Y_j | V_j) - h(a_j S + Z_j | V_j)` over the grid.
    pub difference: f64,
    pub rho_difference: f64,
}

impl ProofTerm {
    pub fn mrc_slack(&self) -> f64 {
        self.mrc_bound - self.h_y_given_v
    }

    pub fn difference_slack(&self) -> f64 {
        2.0 - self.difference
    }
}

/// `h(Y_1) - h(Y_1 | D_2, ..., D_M)` with `D_q = a_q S + Z_q - Z_1`, worst
/// over the grid, against `1/2 log(1+P) + log M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinalTerm {
    pub value: f64,
    pub bound: f64,
    pub rho: f64,
}

impl FinalTerm {
    pub fn slack(&self) -> f64 {
        self.bound - self.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProofTermReport {
    pub terms: Vec<ProofTerm>,
    pub final_term: FinalTerm,
    pub rho_points: usize,
}

impl ProofTermReport {
    /// Smallest slack across all checked inequalities.
    pub fn worst_slack(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| [t.mrc_slack(), t.difference_slack()])
            .fold(self.final_term.slack(), f64::min)
    }

    pub fn all_hold(&self) -> bool {
        self.worst_slack() >= -PROOF_TOL
    }
}

/// `n` evenly spaced correlations covering `[-1, 1]`.
pub fn rho_grid(n: usize) -> Vec<f64> {
    lin_space(-1.0, 1.0, n)
}

struct RhoValues {
    h_y: Vec<f64>,
    final_value: f64,
}

fn evaluate_rho(p: f64, a: &[f64], rho: f64) -> Result<RhoValues> {
    let m = a.len();
    let mut model = LinearGaussianModel::new();
    model.source("X0", 1.0)?.source("S", 1.0)?;
    model.coordinate("X", &[("X0", (p * (1.0 - rho * rho)).max(0.0).sqrt()), ("S", rho * p.sqrt())])?;
    for j in 0..m {
        model.source(&format!("Z{j}"), 1.0)?;
    }
    for (j, aj) in a.iter().enumerate() {
        let z = format!("Z{j}");
        model.coordinate(&format!("Y{j}"), &[("X", 1.0), ("S", *aj), (&z, 1.0)])?;
        model.coordinate(&format!("O{j}"), &[("S", *aj), (&z, 1.0)])?;
        model.coordinate(&format!("D{j}"), &[("S", *aj), (&z, 1.0), ("Z0", -1.0)])?;
    }
    let g = model.build()?;
    let obs: Vec<String> = (0..m).map(|j| format!("O{j}")).collect();
    let h_y = (1..m)
        .map(|j| {
            let given: Vec<&str> = obs[1..j].iter().map(String::as_str).collect();
            conditional_entropy(&g, &[format!("Y{j}").as_str()], &given).map(|e| e.value)
        })
        .collect::<Result<Vec<_>>>()?;
    let d: Vec<String> = (1..m).map(|j| format!("D{j}")).collect();
    let d_refs: Vec<&str> = d.iter().map(String::as_str).collect();
    let final_value = if d_refs.is_empty() {
        0.0
    } else {
        mutual_information(&g, &["Y0"], &d_refs)?
    };
    Ok(RhoValues { h_y, final_value })
}

fn side_increments(a: &[f64]) -> Result<Vec<f64>> {
    let m = a.len();
    let mut model = LinearGaussianModel::new();
    model.source("S", 1.0)?;
    for (j, aj) in a.iter().enumerate() {
        let z = format!("Z{j}");
        model.source(&z, 1.0)?;
        model.coordinate(&format!("O{j}"), &[("S", *aj), (&z, 1.0)])?;
    }
    let g = model.build()?;
    let obs: Vec<String> = (0..m).map(|j| format!("O{j}")).collect();
    (1..m)
        .map(|j| {
            let given: Vec<&str> = obs[1..j].iter().map(String::as_str).collect();
            conditional_entropy(&g, &[obs[j].as_str()], &given).map(|e| e.value)
        })
        .collect()
}

/// Evaluate every inequality of the strong fading outer-bound chain with
/// exact Gaussian entropies, for `X` jointly Gaussian with `S` at each
/// correlation in `rho_grid`. Requires the power-sum predicate to hold.
pub fn check_proof_terms(inst: &MFadingInstance, rho_grid: &[f64]) -> Result<ProofTermReport> {
    if inst.variant != StrongFadingVariant::PowerSum {
        return Err(Error::RegimeViolation(
            "the entropy chain is checked under the power-sum predicate".into(),
        ));
    }
    inst.ensure_strong()?;
    if rho_grid.is_empty() || rho_grid.iter().any(|r| !(-1.0..=1.0).contains(r)) {
        return Err(Error::InvalidParameter("correlation grid must be non-empty within [-1, 1]".into()));
    }
    let p = inst.params.power();
    let a = inst.params.fading().values();
    let m = a.len();
    let per_rho = par::map_slice(rho_grid, |&rho| evaluate_rho(p, a, rho))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let side = side_increments(a)?;
    let l2pe = log2_two_pi_e();
    let mut energy = 0.0;
    let mut terms = Vec::with_capacity(m.saturating_sub(1));
    for j in 1..m {
        energy += a[j - 1] * a[j - 1];
        let mrc_bound = if j == 1 {
            0.5 * (l2pe + ((p.sqrt() + a[1]).powi(2) + 1.0).log2())
        } else {
            0.5 * (l2pe + (p + 1.0 + a[j] * a[j] / energy).log2())
        };
        let mut worst_mrc = (f64::INFINITY, 0.0, 0.0);
        let mut worst_diff = (f64::NEG_INFINITY, 0.0);
        for (r, vals) in rho_grid.iter().zip(&per_rho) {
            let h = vals.h_y[j - 1];
            if mrc_bound - h < worst_mrc.0 {
                worst_mrc = (mrc_bound - h, h, *r);
            }
            if h - side[j - 1] > worst_diff.0 {
                worst_diff = (h - side[j - 1], *r);
            }
        }
        terms.push(ProofTerm {
            j: j + 1,
            h_y_given_v: worst_mrc.1,
            mrc_bound,
            rho_mrc: worst_mrc.2,
            h_side_increment: side[j - 1],
            difference: worst_diff.0,
            rho_difference: worst_diff.1,
        });
    }
    let (value, rho) = rho_grid
        .iter()
        .zip(&per_rho)
        .map(|(r, v)| (v.final_value, *r))
        .fold((f64::NEG_INFINITY, 0.0), |acc, x| if x.0 > acc.0 { x } else { acc });
    Ok(ProofTermReport {
        terms,
        final_term: FinalTerm {
            value,
            bound: 0.5 * (1.0 + p).log2() + (m as f64).log2(),
            rho,
        },
        rho_points: rho_grid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FadingSet;
    use approx::assert_abs_diff_eq;

    fn inst(p: f64, a: &[f64], v: StrongFadingVariant) -> MFadingInstance {
        MFadingInstance::new(ChannelParams::new(p, FadingSet::new(a.to_vec()).unwrap()).unwrap(), v).unwrap()
    }

    const AMP: StrongFadingVariant = StrongFadingVariant::AmplitudeSum;
    const POW: StrongFadingVariant = StrongFadingVariant::PowerSum;

    #[test]
    fn outer_examples() {
        assert_abs_diff_eq!(strong_fading_outer(&inst(15.0, &[0.0, 8.0], AMP)).unwrap().value, 4.5, epsilon = 1e-12);
        let b = strong_fading_outer(&inst(3.0, &[0.0], AMP)).unwrap();
        assert_abs_diff_eq!(b.value, 4.0, epsilon = 1e-12);
        assert!(b.notes.iter().any(|n| n.contains("degenerate")));
        let chain = FadingSet::geometric_chain(255.0, 4).unwrap();
        let i = MFadingInstance::new(ChannelParams::new(255.0, chain).unwrap(), AMP).unwrap();
        assert_abs_diff_eq!(strong_fading_outer(&i).unwrap().value, 4.5, epsilon = 1e-12);
        assert!(matches!(
            strong_fading_outer(&inst(3.0, &[0.0, 1.0, 1.5], AMP)),
            Err(Error::RegimeViolation(_))
        ));
    }

    #[test]
    fn inner_examples() {
        let chain = FadingSet::geometric_chain(255.0, 4).unwrap();
        let i = MFadingInstance::new(ChannelParams::new(255.0, chain).unwrap(), AMP).unwrap();
        assert_abs_diff_eq!(time_sharing_inner(&i).unwrap().value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(time_sharing_inner(&inst(3.0, &[0.0], AMP)).unwrap().value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(time_sharing_inner(&inst(15.0, &[0.0, 1.0], AMP)).unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gap_examples() {
        for (m, expected) in [(1, 3.0), (2, 3.5), (8, 3.375)] {
            let chain = FadingSet::geometric_chain(3.0, m).unwrap();
            let i = MFadingInstance::new(ChannelParams::new(3.0, chain).unwrap(), POW).unwrap();
            let g = strong_fading_gap(&i).unwrap();
            assert_abs_diff_eq!(g.bound, expected, epsilon = 1e-15);
            assert!(g.is_tight(1e-12));
        }
    }

    #[test]
    fn subset_examples() {
        let b = subset_outer(&inst(3.0, &[0.0, 4.0, 4.1], AMP)).unwrap();
        // 4.1^2 = 16.81 >= 4 * 4 so the whole set is strong
        assert_eq!(b.optimizer, Some(OptimizerState::SubsetSize(3)));
        let b = subset_outer(&inst(3.0, &[0.0, 4.0, 4.1], POW)).unwrap();
        assert_eq!(b.optimizer, Some(OptimizerState::SubsetSize(2)));
        assert_abs_diff_eq!(b.value, 0.5, epsilon = 1e-12);
        let b = subset_outer(&inst(3.0, &[0.0], AMP)).unwrap();
        assert_abs_diff_eq!(b.value, 1.0, epsilon = 1e-12);
        assert!(matches!(subset_outer(&inst(3.0, &[1.0], AMP)), Err(Error::Precondition(_))));
    }

    #[test]
    fn proof_terms_two_values() {
        let i = inst(1.0, &[0.0, 2.0], POW);
        let r = check_proof_terms(&i, &[0.0]).unwrap();
        assert_eq!(r.terms.len(), 1);
        let t = &r.terms[0];
        assert_abs_diff_eq!(t.h_y_given_v, 0.5 * (log2_two_pi_e() + 6f64.log2()), epsilon = 1e-12);
        assert_abs_diff_eq!(t.h_side_increment, 0.5 * (log2_two_pi_e() + 5f64.log2()), epsilon = 1e-12);
        assert!(r.all_hold());
    }

    #[test]
    fn proof_terms_hold_on_chains() {
        for p in [1.0, 15.0] {
            for m in 2..=4 {
                let c = ChannelParams::new(p, FadingSet::minimal_power_chain(p, m).unwrap()).unwrap();
                let r = check_proof_terms(&MFadingInstance::new(c, POW).unwrap(), &rho_grid(21)).unwrap();
                assert!(r.all_hold(), "P={p} M={m}: {r:?}");
            }
        }
    }

    #[test]
    fn proof_terms_require_power_sum() {
        assert!(matches!(
            check_proof_terms(&inst(1.0, &[0.0, 2.0], AMP), &[0.0]),
            Err(Error::RegimeViolation(_))
        ));
        assert!(matches!(
            check_proof_terms(&inst(3.0, &[0.0, 1.0, 1.5], POW), &[0.0]),
            Err(Error::RegimeViolation(_))
        ));
    }

    #[test]
    fn rho_grid_covers_extremes() {
        let g = rho_grid(201);
        assert_eq!(g.len(), 201);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[100], 0.0);
        assert_eq!(g[200], 1.0);
    }
}
