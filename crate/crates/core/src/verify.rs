//! Invariant suites run by `dpc verify`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds_m::{check_proof_terms, rho_grid, strong_fading_gap, subset_outer, time_sharing_inner, MFadingInstance};
use crate::bounds_two::{
    carbon_inner, carbon_outer, gap2, inner2_branch_value, inner2_closed, outer2_closed, outer2_numeric, InnerBranch,
    TwoFadingInstance,
};
use crate::channel::{
    chain_holds, largest_strong_fading_subset, normalize, ChannelParams, FadingSet, GeneralizedParams,
    StrongFadingVariant,
};
use crate::error::{Error, Result};
use crate::gaussian::{conditional_entropy, costa_mismatched_rate, entropy, mutual_information, GaussianVector};
use crate::optimize::{lin_space, log_space};
use crate::par;
use crate::sim::{analytic_rate, SchemeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Gap2,
    StrongFading,
    ProofTerms,
    Oracle,
    Continuity,
    Normalization,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Gap2,
        Suite::StrongFading,
        Suite::ProofTerms,
        Suite::Oracle,
        Suite::Continuity,
        Suite::Normalization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Gap2 => "gap2",
            Suite::StrongFading => "strongfading",
            Suite::ProofTerms => "proofterms",
            Suite::Oracle => "oracle",
            Suite::Continuity => "continuity",
            Suite::Normalization => "normalization",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Points per grid axis.
    pub grid: usize,
    pub tolerance: f64,
    /// Largest chain length for the strong fading suites.
    pub max_m: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid: 20,
            tolerance: 1e-9,
            max_m: 4,
            seed: 1,
        }
    }
}

/// One checked inequality family. `worst_slack` is the smallest margin by
/// which it held (negative when it failed).
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub cases: usize,
    pub worst_slack: f64,
    pub passed: bool,
    pub detail: Vec<String>,
}

impl CheckResult {
    fn from_slacks(name: impl Into<String>, slacks: &[f64], tol: f64) -> Self {
        let worst = slacks.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            name: name.into(),
            cases: slacks.len(),
            worst_slack: worst,
            passed: worst >= -tol,
            detail: Vec::new(),
        }
    }

    fn with_detail(mut self, detail: Vec<String>) -> Self {
        self.detail = detail;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<CheckResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    if opts.grid == 0 {
        return Err(Error::InvalidParameter("grid density must be >= 1".into()));
    }
    let checks = match suite {
        Suite::Gap2 => gap2_suite(opts)?,
        Suite::StrongFading => strong_fading_suite(opts)?,
        Suite::ProofTerms => proof_terms_suite(opts)?,
        Suite::Oracle => oracle_suite(opts)?,
        Suite::Continuity => continuity_suite(opts)?,
        Suite::Normalization => normalization_suite(opts)?,
    };
    Ok(SuiteReport { suite, checks })
}

fn two_value_grid(n: usize) -> Result<Vec<TwoFadingInstance>> {
    let mut cells = Vec::new();
    for &p in &log_space(0.1, 1000.0, n) {
        for &a2 in &log_space(0.05, 100.0, n) {
            for &f in &lin_space(0.0, 0.95, n) {
                cells.push(TwoFadingInstance::new(p, a2 * f, a2)?);
            }
        }
    }
    Ok(cells)
}

fn gap2_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let cells = two_value_grid(opts.grid)?;
    let rows = par::map_slice(&cells, |i| -> Result<(f64, Option<f64>, f64, f64)> {
        let g = gap2(i)?;
        let generic = g.fallback.all().then_some(g.generic_bound - g.numeric_gap);
        let carbon = carbon_outer(i.power(), i.a2())?.value - carbon_inner(i.power(), i.a2())?.value;
        Ok((g.case_bound - g.closed_gap, generic, g.outer_numeric - g.inner_closed, carbon))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let tol = opts.tolerance;
    let case: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let generic: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
    let order: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let carbon: Vec<f64> = rows.iter().map(|r| r.3).collect();
    Ok(vec![
        CheckResult::from_slacks("closed gap <= case bound", &case, tol),
        CheckResult::from_slacks("numeric gap <= generic bound (fallback region)", &generic, tol),
        CheckResult::from_slacks("inner <= numeric outer", &order, tol),
        CheckResult::from_slacks("carbon inner <= carbon outer", &carbon, tol),
    ])
}

/// Largest strong fading subset by enumeration of every subset holding `a_1`.
pub fn brute_force_subset_size(power: f64, values: &[f64], variant: StrongFadingVariant) -> usize {
    let m = values.len();
    let mut best = 0;
    for mask in 0u32..(1 << (m - 1)) {
        let mut pick = vec![values[0]];
        pick.extend((1..m).filter(|k| mask >> (k - 1) & 1 == 1).map(|k| values[k]));
        if pick.len() > best && chain_holds(power, &pick, variant) {
            best = pick.len();
        }
    }
    best
}

fn strong_fading_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut gap = Vec::new();
    let mut order = Vec::new();
    for p in [1.0, 15.0, 255.0] {
        for m in 1..=opts.max_m.max(2) {
            for (variant, chain) in [
                (StrongFadingVariant::AmplitudeSum, FadingSet::geometric_chain(p, m)?),
                (StrongFadingVariant::PowerSum, FadingSet::geometric_chain(p, m)?),
                (StrongFadingVariant::PowerSum, FadingSet::minimal_power_chain(p, m)?),
            ] {
                let inst = MFadingInstance::new(ChannelParams::new(p, chain)?, variant)?;
                let g = strong_fading_gap(&inst)?;
                gap.push(-(g.realized - g.bound).abs());
                order.push(g.outer - g.inner);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut subset = Vec::new();
    let mut monotone = Vec::new();
    for _ in 0..opts.grid * 10 {
        let m = rng.random_range(1..=10usize);
        let p = 10f64.powf(rng.random_range(-1.0..2.5));
        let mut v = vec![0.0];
        v.extend((1..m).map(|_| 10f64.powf(rng.random_range(-1.0..3.0))));
        let set = FadingSet::new_dedup(v)?;
        for variant in [StrongFadingVariant::AmplitudeSum, StrongFadingVariant::PowerSum] {
            let c = ChannelParams::new(p, set.clone())?;
            let k = largest_strong_fading_subset(&c, variant)?.size;
            let brute = brute_force_subset_size(p, set.values(), variant);
            subset.push(-((k as f64) - brute as f64).abs());
            let inst = MFadingInstance::new(c, variant)?;
            let whole = subset_outer(&inst)?.value;
            if set.len() > 1 {
                let smaller = FadingSet::new(set.values()[..set.len() - 1].to_vec())?;
                let sub = MFadingInstance::new(ChannelParams::new(p, smaller)?, variant)?;
                monotone.push(subset_outer(&sub)?.value - whole);
            }
            order.push(whole - time_sharing_inner(&inst)?.value);
        }
    }
    Ok(vec![
        CheckResult::from_slacks("outer - inner = 3 + log(M)/M", &gap, 1e-12),
        CheckResult::from_slacks("time sharing <= outer", &order, opts.tolerance),
        CheckResult::from_slacks("subset search = enumeration", &subset, 0.0),
        CheckResult::from_slacks("subset bound non-increasing in the set", &monotone, opts.tolerance),
    ])
}

/// Chains on which the entropy chain is checked: the slowest power-sum
/// chains and the geometric chains.
pub fn proof_term_chains(max_m: usize) -> Result<Vec<(String, ChannelParams)>> {
    let mut out = Vec::new();
    for m in 2..=max_m {
        for p in [1.0, 15.0, 255.0] {
            out.push((format!("minimal P={p} M={m}"), ChannelParams::new(p, FadingSet::minimal_power_chain(p, m)?)?));
        }
        for p in [1.0, 3.0, 15.0] {
            out.push((format!("geometric P={p} M={m}"), ChannelParams::new(p, FadingSet::geometric_chain(p, m)?)?));
        }
    }
    Ok(out)
}

fn proof_terms_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let grid = rho_grid(201);
    let mut checks = Vec::new();
    for (name, c) in proof_term_chains(opts.max_m.clamp(2, 6))? {
        let inst = MFadingInstance::new(c, StrongFadingVariant::PowerSum)?;
        let r = check_proof_terms(&inst, &grid)?;
        let mut detail: Vec<String> = r
            .terms
            .iter()
            .map(|t| {
                format!(
                    "j={} mrc_slack={:.6e} (rho={:.2}) diff={:.6} diff_slack={:.6} (rho={:.2})",
                    t.j,
                    t.mrc_slack(),
                    t.rho_mrc,
                    t.difference,
                    t.difference_slack(),
                    t.rho_difference
                )
            })
            .collect();
        detail.push(format!(
            "final={:.6} bound={:.6} slack={:.6} (rho={:.2})",
            r.final_term.value,
            r.final_term.bound,
            r.final_term.slack(),
            r.final_term.rho
        ));
        checks.push(CheckResult::from_slacks(name, &[r.worst_slack()], opts.tolerance).with_detail(detail));
    }
    Ok(checks)
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n + 2, |_, _| rng.random_range(-2.0..2.0));
    &b * b.transpose() + DMatrix::identity(n, n) * 0.05
}

fn oracle_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut chain, mut cond, mut sym, mut nonneg, mut costa, mut mrc) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for _ in 0..opts.grid * 5 {
        let n = rng.random_range(2..=8usize);
        let split = rng.random_range(1..n);
        let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
        let g = GaussianVector::from_covariance(names.clone(), random_psd(&mut rng, n))?;
        let all: Vec<&str> = names.iter().map(String::as_str).collect();
        let (a, b) = all.split_at(split);
        let joint = entropy(&g, &all)?.value;
        let ha = entropy(&g, a)?.value;
        let hb = entropy(&g, b)?.value;
        let hb_a = conditional_entropy(&g, b, a)?.value;
        chain.push(-(joint - ha - hb_a).abs());
        cond.push(hb - hb_a);
        let iab = mutual_information(&g, a, b)?;
        sym.push(-(iab - mutual_information(&g, b, a)?).abs());
        nonneg.push(iab);

        let p = 10f64.powf(rng.random_range(-1.0..3.0));
        let q = 10f64.powf(rng.random_range(-1.0..1.0));
        let amp = rng.random_range(0.0..20.0);
        costa.push(-(costa_mismatched_rate(p, q, amp, amp)? - 0.5 * (1.0 + p).log2()).abs());

        let k = rng.random_range(1..=5usize);
        let amps: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..5.0)).collect();
        mrc.push(-mrc_gap(&amps, rng.random_range(-0.95..0.95), p)?.abs());
    }
    let tol = opts.tolerance;
    Ok(vec![
        CheckResult::from_slacks("chain rule", &chain, tol),
        CheckResult::from_slacks("conditioning reduces entropy", &cond, tol),
        CheckResult::from_slacks("mutual information symmetric", &sym, tol),
        CheckResult::from_slacks("mutual information >= 0", &nonneg, tol),
        CheckResult::from_slacks("matched Costa = 1/2 log(1+P)", &costa, tol),
        CheckResult::from_slacks("combined statistic is sufficient", &mrc, 1e-10_f64.max(tol)),
    ])
}

/// `h(X + S | observations) - h(X + S | combined statistic)`.
fn mrc_gap(amps: &[f64], rho: f64, p: f64) -> Result<f64> {
    let k = amps.len();
    let energy: f64 = amps.iter().map(|a| a * a).sum();
    // sources W, S, Z_1..Z_k
    let d = 2 + k;
    let mut rows = Vec::new();
    let mut x = vec![0.0; d];
    x[0] = (p * (1.0 - rho * rho)).sqrt();
    x[1] = rho * p.sqrt() + 1.0;
    rows.push(x);
    let mut comb = vec![0.0; d];
    comb[1] = 1.0;
    for (j, a) in amps.iter().enumerate() {
        let mut o = vec![0.0; d];
        o[1] = *a;
        o[2 + j] = 1.0;
        rows.push(o);
        comb[2 + j] = a / energy;
    }
    rows.push(comb);
    let names: Vec<String> = (0..rows.len()).map(|i| format!("r{i}")).collect();
    let l = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let g = GaussianVector::from_loadings(names.clone(), l)?;
    let obs: Vec<&str> = names[1..=k].iter().map(String::as_str).collect();
    let full = conditional_entropy(&g, &["r0"], &obs)?.value;
    let combined = conditional_entropy(&g, &["r0"], &[names[k + 1].as_str()])?.value;
    Ok(full - combined)
}

fn continuity_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut low = Vec::new();
    let mut high = Vec::new();
    for &p in &log_space(0.1, 1000.0, opts.grid * 5) {
        let i = TwoFadingInstance::new(p, 0.0, 1.0)?;
        low.push(-(inner2_branch_value(InnerBranch::NoiseOnly, &i) - inner2_branch_value(InnerBranch::Split, &i)).abs());
        let i = TwoFadingInstance::new(p, 0.0, (p + 1.0).sqrt())?;
        high.push(
            -(inner2_branch_value(InnerBranch::Split, &i) - inner2_branch_value(InnerBranch::PrecodedOnly, &i)).abs(),
        );
    }
    Ok(vec![
        CheckResult::from_slacks("inner branches meet at a2^2 = 1", &low, opts.tolerance),
        CheckResult::from_slacks("inner branches meet at a2^2 = P + 1", &high, opts.tolerance),
    ])
}

/// Bounds of a two-value channel given either normalized, or as powers with
/// the state power folded into effective amplitudes.
fn two_value_bounds(i: &TwoFadingInstance) -> Result<Vec<f64>> {
    let g = gap2(i)?;
    Ok(vec![
        outer2_numeric(i)?.value,
        outer2_closed(i)?.value,
        inner2_closed(i)?.value,
        g.closed_gap,
        g.numeric_gap,
    ])
}

fn normalization_suite(opts: &VerifyOptions) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut two = Vec::new();
    let mut schemes = Vec::new();
    let mut idem = Vec::new();
    for _ in 0..opts.grid * 10 {
        let g = GeneralizedParams {
            power: 10f64.powf(rng.random_range(-1.0..3.0)),
            state_power: 10f64.powf(rng.random_range(-1.0..1.0)),
            noise_power: 10f64.powf(rng.random_range(-1.0..1.0)),
            fading: {
                let a1 = rng.random_range(0.0..5.0);
                vec![a1, a1 + rng.random_range(0.1..20.0)]
            },
        };
        let c = normalize(&g)?;
        let scaled = TwoFadingInstance::with_state_power(
            g.power / g.noise_power,
            g.fading[0],
            g.fading[1],
            g.state_power / g.noise_power,
        )?;
        let a = two_value_bounds(&TwoFadingInstance::from_channel(&c)?)?;
        let b = two_value_bounds(&scaled)?;
        two.extend(a.iter().zip(&b).map(|(x, y)| -(x - y).abs() / x.abs().max(1.0)));

        let unscaled = ChannelParams::with_state_power(
            g.power / g.noise_power,
            g.state_power / g.noise_power,
            FadingSet::new(g.fading.clone())?,
        )?;
        for cfg in [SchemeConfig::Tin, SchemeConfig::CostaAverage, SchemeConfig::TwoCodeword(0.5)] {
            let x = analytic_rate(&c, &cfg)?.compound;
            let y = analytic_rate(&unscaled, &cfg)?.compound;
            schemes.push(-(x - y).abs());
        }
        let again = normalize(&c.to_generalized())?;
        idem.push(-(again.power() - c.power()).abs());
        idem.extend(again.fading().values().iter().zip(c.fading().values()).map(|(x, y)| -(x - y).abs()));
    }
    let tol = 1e-12;
    Ok(vec![
        CheckResult::from_slacks("two-value bounds invariant", &two, tol),
        CheckResult::from_slacks("scheme rates invariant", &schemes, tol),
        CheckResult::from_slacks("normalize idempotent", &idem, tol),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn small_suites_pass() {
        let opts = VerifyOptions {
            grid: 4,
            max_m: 3,
            ..VerifyOptions::default()
        };
        for s in Suite::ALL {
            let r = run_suite(s, &opts).unwrap();
            for c in &r.checks {
                assert!(c.passed, "{s}: {} worst {}", c.name, c.worst_slack);
                assert!(c.cases > 0, "{s}: {} is empty", c.name);
            }
        }
    }

    #[test]
    fn brute_force_subset_examples() {
        assert_eq!(brute_force_subset_size(3.0, &[0.0, 4.0, 5.0], StrongFadingVariant::AmplitudeSum), 3);
        assert_eq!(brute_force_subset_size(1.0, &[0.0, 1.0, 1.2], StrongFadingVariant::AmplitudeSum), 2);
        assert_eq!(brute_force_subset_size(3.0, &[0.0], StrongFadingVariant::AmplitudeSum), 1);
    }
}
