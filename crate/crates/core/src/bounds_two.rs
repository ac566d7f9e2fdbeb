//! Bounds for two fading values `a1 < a2`.
//!
//! Every routine reads the effective amplitudes `a * sqrt(Q)`, so an instance
//! with state power `Q` evaluates exactly like its normalized counterpart.

use std::fmt;

use crate::channel::{BoundKind, ChannelParams, FadingSet, OptimizerState, RateBound};
use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};
use crate::gaussian::costa_mismatched_rate;
use crate::optimize::{bracket_scan, golden_section, log_space, parabolic_step};

/// Two-receiver channel `Y_k = X + a_k S + Z_k` with `0 <= a1 < a2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFadingInstance {
    power: f64,
    a1: f64,
    a2: f64,
    state_power: f64,
}

impl TwoFadingInstance {
    pub fn new(power: f64, a1: f64, a2: f64) -> Result<Self> {
        Self::with_state_power(power, a1, a2, 1.0)
    }

    pub fn with_state_power(power: f64, a1: f64, a2: f64, state_power: f64) -> Result<Self> {
        ensure_positive("power", power)?;
        ensure_positive("state power", state_power)?;
        ensure_nonnegative("a1", a1)?;
        ensure_nonnegative("a2", a2)?;
        if a1 >= a2 {
            return Err(Error::NotStrictlyIncreasing);
        }
        Ok(Self {
            power,
            a1,
            a2,
            state_power,
        })
    }

    /// Instance from a channel with exactly two fading values.
    pub fn from_channel(c: &ChannelParams) -> Result<Self> {
        match c.fading().values() {
            [a1, a2] => Self::with_state_power(c.power(), *a1, *a2, c.state_power()),
            v => Err(Error::InvalidParameter(format!(
                "two-value bounds need exactly 2 fading values, got {}",
                v.len()
            ))),
        }
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn state_power(&self) -> f64 {
        self.state_power
    }

    /// `a1 sqrt(Q)`
    pub fn eff_a1(&self) -> f64 {
        self.a1 * self.state_power.sqrt()
    }

    /// `a2 sqrt(Q)`
    pub fn eff_a2(&self) -> f64 {
        self.a2 * self.state_power.sqrt()
    }

    pub fn channel(&self) -> ChannelParams {
        let fading = FadingSet::new(vec![self.a1, self.a2]).expect("validated at construction");
        ChannelParams::with_state_power(self.power, self.state_power, fading)
            .expect("validated at construction")
    }
}

fn single_channel(power: f64, a: f64) -> Result<ChannelParams> {
    ChannelParams::new(power, FadingSet::new(vec![a])?)
}

/// Outer bound for the two-user channel with independent states and common
/// fading `a`.
pub fn carbon_outer(power: f64, a: f64) -> Result<RateBound> {
    let params = single_channel(power, a)?;
    let num = 1.0 + power + a * a + 2.0 * a * power.sqrt();
    let value = if a * a <= 2.0 {
        0.5 * (num / (1.0 + a * a / 2.0)).log2()
    } else {
        let clamp = (0.25 * (a * a / (2.0 * power + 2.0)).log2()).max(0.0);
        0.5 * (num / (a / 2f64.sqrt())).log2() - clamp
    };
    Ok(RateBound::new("carbon_outer", BoundKind::Outer, value, params))
}

/// Binning plus interference-as-noise inner bound for the same model.
pub fn carbon_inner(power: f64, a: f64) -> Result<RateBound> {
    let params = single_channel(power, a)?;
    let half = a * a / 2.0;
    let value = if half <= 1.0 {
        0.5 * (1.0 + power / (half + 1.0)).log2()
    } else if half <= power + 1.0 {
        0.5 * ((power + half + 1.0) / (a * a)).log2() + 0.25 * half.log2()
    } else {
        0.25 * (1.0 + power).log2()
    };
    Ok(RateBound::new("carbon_inner", BoundKind::Inner, value, params))
}

/// Outer-bound objective at fading scale `gamma`, per channel use:
/// `1/4 log(1+P+g^2 a1^2+2 g a1 sqrt P) + 1/4 log(1+P+g^2 a2^2+2 g a2 sqrt P)
/// - 1/4 log(g^2 (a2-a1)^2)`.
pub fn outer2_objective(inst: &TwoFadingInstance, gamma: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Err(Error::Divergence("objective diverges at gamma = 0".into()));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(objective(inst, gamma))
}

fn objective(inst: &TwoFadingInstance, g: f64) -> f64 {
    let p = inst.power;
    let (a1, a2) = (inst.eff_a1(), inst.eff_a2());
    let sp = p.sqrt();
    let t1 = 1.0 + p + g * g * a1 * a1 + 2.0 * g * a1 * sp;
    let t2 = 1.0 + p + g * g * a2 * a2 + 2.0 * g * a2 * sp;
    0.25 * t1.log2() + 0.25 * t2.log2() - 0.25 * (g * g * (a2 - a1) * (a2 - a1)).log2()
}

/// Cross-term-free relaxation in `x = gamma^2`:
/// `1/2 log(1+P+x a1^2) + 1/2 log(1+P+x a2^2) - 1/2 log(x (a2-a1)^2) + 1`.
pub fn outer2_relaxed_objective(inst: &TwoFadingInstance, x: f64) -> Result<f64> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::InvalidParameter(format!("x must lie in (0, 1], got {x}")));
    }
    let p = inst.power;
    let (a1, a2) = (inst.eff_a1(), inst.eff_a2());
    Ok(0.5 * (1.0 + p + x * a1 * a1).log2() + 0.5 * (1.0 + p + x * a2 * a2).log2()
        - 0.5 * (x * (a2 - a1) * (a2 - a1)).log2()
        + 1.0)
}

/// Stationary point `x* = (P+1)/(a1 a2)` of the relaxation, when it lies in
/// `(0, 1]`, i.e. when `a1 a2 >= P + 1`.
pub fn relaxed_stationary_point(inst: &TwoFadingInstance) -> Option<f64> {
    let prod = inst.eff_a1() * inst.eff_a2();
    (prod > 0.0 && prod >= inst.power + 1.0).then(|| (inst.power + 1.0) / prod)
}

const GAMMA_FLOOR: f64 = 1e-6;
const GAMMA_SCAN: usize = 97;
const GAMMA_TOL: f64 = 1e-10;

/// Minimum of [`outer2_objective`] over `gamma in (0, 1]`.
pub fn outer2_numeric(inst: &TwoFadingInstance) -> Result<RateBound> {
    let f = |g: f64| objective(inst, g);
    let seed = relaxed_stationary_point(inst).map(f64::sqrt);
    let mut grid = log_space(GAMMA_FLOOR, 1.0, GAMMA_SCAN);
    if let Some(s) = seed {
        grid.push(s);
        grid.sort_by(f64::total_cmp);
    }
    let (lo, mid, hi) = bracket_scan(f, &grid);
    let (mut best_g, mut best_v) = golden_section(f, lo, hi, GAMMA_TOL);
    if f(mid) < best_v {
        best_g = mid;
        best_v = f(mid);
    }
    let h = (1e-4 * best_g).max(GAMMA_TOL);
    if best_g - h > 0.0 && best_g + h <= 1.0 {
        let pts = [best_g - h, best_g, best_g + h].map(|g| (g, f(g)));
        if let Some(g) = parabolic_step(pts[0], pts[1], pts[2]) {
            if f(g) < best_v {
                best_g = g;
                best_v = f(g);
            }
        }
    }
    for g in seed.into_iter().chain([1.0]) {
        if f(g) < best_v {
            best_g = g;
            best_v = f(g);
        }
    }
    Ok(RateBound::new("outer2_numeric", BoundKind::Outer, best_v, inst.channel())
        .with_optimizer(OptimizerState::Gamma { gamma: best_g, seed }))
}

/// Region of the two-value parameter plane used by the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapCase {
    /// `a2^2 <= 1`: interference as noise is within half a bit.
    SmallFading,
    /// `a1 a2 >= P + 1` and `a2^2 > P + 1`.
    I,
    /// `1 < a2^2 <= P + 1`.
    II,
    /// `a1 a2 < P + 1 < a2^2`.
    III,
}

impl fmt::Display for GapCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SmallFading => "small-a2",
            Self::I => "I",
            Self::II => "II",
            Self::III => "III",
        })
    }
}

/// Piecewise closed-form outer bound. The branch is picked by `a1 a2`
/// against `P + 1` first and by `a2^2` second.
pub fn outer2_closed(inst: &TwoFadingInstance) -> Result<RateBound> {
    let p = inst.power;
    let (a1, a2) = (inst.eff_a1(), inst.eff_a2());
    let d2 = (a2 - a1) * (a2 - a1);
    if d2 == 0.0 {
        return Err(Error::Divergence("a1 = a2".into()));
    }
    let (case, value) = if a1 * a2 >= p + 1.0 {
        (GapCase::I, 0.25 * (p + 1.0).log2() + 0.25 * ((a2 + a1) * (a2 + a1) / d2).log2() + 1.0)
    } else if a2 * a2 <= p + 1.0 {
        (
            GapCase::II,
            0.25 * (1.0 + p).log2()
                + 0.25 * ((p + 1.0) / (a2 * a2)).log2()
                + 0.25 * (a2 * a2 / d2).log2()
                + 1.5,
        )
    } else {
        (
            GapCase::III,
            0.25 * (1.0 + p).log2() + 0.25 * (p + 1.0 + a2 * a2).log2() - 0.25 * d2.log2() + 1.5,
        )
    };
    Ok(RateBound::new("outer2_closed", BoundKind::Outer, value, inst.channel())
        .with_note(format!("branch={case}")))
}

fn ensure_fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must lie in [0, 1], got {v}")))
    }
}

/// Two-codeword rate with a fraction `beta` of the power on the codeword
/// that treats the state as noise and `1 - beta` on the codeword precoded
/// against `a_k S` in slot `k`:
/// `1/2 log(1 + beta P / ((1-beta) P + a2^2 Q + 1)) + 1/4 log(1 + (1-beta) P)`.
pub fn inner2_rate(inst: &TwoFadingInstance, beta: f64) -> Result<f64> {
    ensure_fraction("beta", beta)?;
    let p = inst.power;
    let b = inst.eff_a2() * inst.eff_a2();
    let precoded = (1.0 - beta) * p;
    Ok(0.5 * (1.0 + beta * p / (precoded + b + 1.0)).log2() + 0.25 * (1.0 + precoded).log2())
}

/// [`inner2_rate`] plus the cross-slot term
/// `1/4 log max{1, (p+1)(p+b+1) / (p + 2bp + b + 1)}` with `p = (1-beta) P`
/// and `b = a2^2 Q`. The extra term vanishes whenever `p <= b - 1`.
pub fn inner2_proof_rate(inst: &TwoFadingInstance, beta: f64) -> Result<f64> {
    let base = inner2_rate(inst, beta)?;
    let p = (1.0 - beta) * inst.power;
    let b = inst.eff_a2() * inst.eff_a2();
    let ratio = (p + 1.0) * (p + b + 1.0) / (p + 2.0 * b * p + b + 1.0);
    Ok(base + 0.25 * ratio.max(1.0).log2())
}

/// Branch of the closed-form inner bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerBranch {
    /// `a2^2 <= 1`: all power treats the state as noise.
    NoiseOnly,
    /// `1 < a2^2 <= P + 1`: split at `alpha* = (a2^2 - 1) / P`.
    Split,
    /// `a2^2 > P + 1`: all power is precoded.
    PrecodedOnly,
}

pub fn inner2_branch(inst: &TwoFadingInstance) -> InnerBranch {
    let b = inst.eff_a2() * inst.eff_a2();
    if b <= 1.0 {
        InnerBranch::NoiseOnly
    } else if b <= inst.power + 1.0 {
        InnerBranch::Split
    } else {
        InnerBranch::PrecodedOnly
    }
}

/// Value of one branch formula, regardless of where the instance sits.
pub fn inner2_branch_value(branch: InnerBranch, inst: &TwoFadingInstance) -> f64 {
    let p = inst.power;
    let b = inst.eff_a2() * inst.eff_a2();
    match branch {
        InnerBranch::NoiseOnly => 0.5 * (1.0 + p / (1.0 + b)).log2(),
        InnerBranch::Split => 0.5 * (1.0 + p + b).log2() - 0.25 * b.log2() - 0.5,
        InnerBranch::PrecodedOnly => 0.25 * (1.0 + p).log2(),
    }
}

/// Optimal precoded power fraction `clamp((a2^2 - 1) / P, 0, 1)`.
pub fn optimal_precoded_fraction(inst: &TwoFadingInstance) -> f64 {
    let b = inst.eff_a2() * inst.eff_a2();
    ((b - 1.0) / inst.power).clamp(0.0, 1.0)
}

/// Closed-form inner bound; the optimizer state carries the precoded fraction.
pub fn inner2_closed(inst: &TwoFadingInstance) -> Result<RateBound> {
    let branch = inner2_branch(inst);
    let value = inner2_branch_value(branch, inst);
    Ok(RateBound::new("inner2_closed", BoundKind::Inner, value, inst.channel())
        .with_optimizer(OptimizerState::PrecodedFraction(optimal_precoded_fraction(inst))))
}

/// The three conditions under which the generic gap statement is checked
/// against the numeric outer bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FallbackConditions {
    pub power_at_least_one: bool,
    pub a2_sq_at_least_one: bool,
    pub spread_at_least_four: bool,
}

impl FallbackConditions {
    pub fn all(&self) -> bool {
        self.power_at_least_one && self.a2_sq_at_least_one && self.spread_at_least_four
    }
}

/// Realized and guaranteed gaps between the two-value bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Gap2Report {
    pub case: GapCase,
    /// Gap guaranteed inside `case`.
    pub case_bound: f64,
    /// `1/2 log((a2+a1)/(a2-a1)) + 2`.
    pub generic_bound: f64,
    /// Closed-form outer bound of the case minus `inner_closed`.
    pub closed_gap: f64,
    /// `outer_numeric - inner_closed`.
    pub numeric_gap: f64,
    /// Outer bound used for `closed_gap`; the trivial `1/2 log(1+P)` in the
    /// small-fading case.
    pub outer_closed: f64,
    pub outer_numeric: f64,
    pub inner_closed: f64,
    pub fallback: FallbackConditions,
}

pub fn gap_case(inst: &TwoFadingInstance) -> GapCase {
    let p = inst.power;
    let (a1, a2) = (inst.eff_a1(), inst.eff_a2());
    if a2 * a2 <= 1.0 {
        GapCase::SmallFading
    } else if a2 * a2 <= p + 1.0 {
        GapCase::II
    } else if a1 * a2 >= p + 1.0 {
        GapCase::I
    } else {
        GapCase::III
    }
}

pub fn gap2(inst: &TwoFadingInstance) -> Result<Gap2Report> {
    let p = inst.power;
    let (a1, a2) = (inst.eff_a1(), inst.eff_a2());
    let d2 = (a2 - a1) * (a2 - a1);
    let case = gap_case(inst);
    let case_bound = match case {
        GapCase::SmallFading => 0.5,
        GapCase::I => 0.25 * ((a2 + a1) * (a2 + a1) / d2).log2() + 1.0,
        GapCase::II | GapCase::III => 0.25 * (a2 * a2 / d2).log2() + 2.0,
    };
    let inner_closed = inner2_closed(inst)?.value;
    let outer_closed = match case {
        GapCase::SmallFading => 0.5 * (1.0 + p).log2(),
        _ => outer2_closed(inst)?.value,
    };
    let outer_numeric = outer2_numeric(inst)?.value;
    Ok(Gap2Report {
        case,
        case_bound,
        generic_bound: 0.5 * ((a2 + a1) / (a2 - a1)).log2() + 2.0,
        closed_gap: outer_closed - inner_closed,
        numeric_gap: outer_numeric - inner_closed,
        outer_closed,
        outer_numeric,
        inner_closed,
        fallback: FallbackConditions {
            power_at_least_one: p >= 1.0,
            a2_sq_at_least_one: a2 * a2 >= 1.0,
            spread_at_least_four: a2 - a1 >= 4.0,
        },
    })
}

/// Costa precoding against the average fading compared with the trivial
/// outer bound, for any number of fading values.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallSpreadReport {
    /// `a_M - a_1`
    pub spread: f64,
    /// `1/2 log(1 + spread^2 P / (P + a_1^2 + 1))`
    pub gap_bound: f64,
    /// `1/2 log(1 + P)`
    pub trivial_outer: f64,
    /// `1/2 log((P+1) / (1 + spread^2 P / (P + a_j^2 + 1)))` per receiver.
    pub rates: Vec<f64>,
    /// Minimum of `rates`.
    pub inner: f64,
    /// Exact Gaussian rate of precoding against the mean amplitude, per receiver.
    pub exact_rates: Vec<f64>,
    pub exact_inner: f64,
}

pub fn costa_small_spread_gap(power: f64, fading: &FadingSet) -> Result<SmallSpreadReport> {
    ensure_positive("power", power)?;
    let a = fading.values();
    let spread = fading.spread();
    let e2p = spread * spread * power;
    let rates: Vec<f64> = a
        .iter()
        .map(|aj| 0.5 * ((power + 1.0) / (1.0 + e2p / (power + aj * aj + 1.0))).log2())
        .collect();
    let mean = fading.mean();
    let exact_rates = a
        .iter()
        .map(|&aj| costa_mismatched_rate(power, 1.0, mean, aj))
        .collect::<Result<Vec<_>>>()?;
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SmallSpreadReport {
        spread,
        gap_bound: 0.5 * (1.0 + e2p / (power + a[0] * a[0] + 1.0)).log2(),
        trivial_outer: 0.5 * (1.0 + power).log2(),
        inner: min(&rates),
        exact_inner: min(&exact_rates),
        rates,
        exact_rates,
    })
}
