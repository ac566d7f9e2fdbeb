//! Channel parameterization for the dirty paper channel with slow fading dirt.
//!
//! The normalized channel is `Y_j = X + a_j S + Z_j` with unit-variance state
//! and noise, input power `P`, and a fading amplitude `a_j` drawn from a fixed
//! finite set known to the receiver only. A channel with arbitrary state and
//! noise powers maps onto this form through [`normalize`].

use std::fmt;

use crate::error::{ensure_nonnegative, ensure_positive, Error, Result};

/// Ordered, distinct, nonnegative fading amplitudes `a_1 < ... < a_M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingSet(Vec<f64>);

impl FadingSet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "fading set must contain at least one value".into(),
            ));
        }
        for &v in &values {
            ensure_nonnegative("fading amplitude", v)?;
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::NotStrictlyIncreasing);
        }
        Ok(Self(values))
    }

    /// Sorts and removes duplicates before validating. Convenience for user
    /// input; library code should call [`FadingSet::new`].
    pub fn new_dedup(mut values: Vec<f64>) -> Result<Self> {
        values.sort_by(f64::total_cmp);
        values.dedup();
        Self::new(values)
    }

    /// The chain `0, P+1, (P+1)^2, ..., (P+1)^(m-1)`. For `P >= 1` it is strong
    /// fading under both predicate variants.
    pub fn geometric_chain(power: f64, m: usize) -> Result<Self> {
        ensure_positive("power", power)?;
        if m == 0 {
            return Err(Error::InvalidParameter("chain length must be >= 1".into()));
        }
        let mut values = vec![0.0];
        values.extend((1..m).map(|k| (power + 1.0).powi(k as i32)));
        Self::new(values)
    }

    /// The slowest-growing power-sum strong fading chain that starts at
    /// `a_2 = P + 1`: every later `a_j^2` sits just above `(P+1) sum_{q<j} a_q^2`.
    pub fn minimal_power_chain(power: f64, m: usize) -> Result<Self> {
        ensure_positive("power", power)?;
        if m == 0 {
            return Err(Error::InvalidParameter("chain length must be >= 1".into()));
        }
        let mut values = vec![0.0];
        let mut energy = 0.0;
        for k in 1..m {
            let a = if k == 1 {
                power + 1.0
            } else {
                ((power + 1.0) * energy * (1.0 + 1e-12)).sqrt()
            };
            energy += a * a;
            values.push(a);
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Spread `a_M - a_1`.
    pub fn spread(&self) -> f64 {
        self.last() - self.first()
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }

    fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|a| a * factor).collect())
    }
}

impl fmt::Display for FadingSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Channel with unit noise, input power `P` and state power `Q`.
///
/// The channel is normalized when `Q = 1`; every closed-form bound in this
/// crate reads `P` and the fading set of a normalized channel, or folds `Q`
/// into effective amplitudes `a * sqrt(Q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    power: f64,
    state_power: f64,
    fading: FadingSet,
}

impl ChannelParams {
    /// Normalized channel (`Q = 1`, unit noise).
    pub fn new(power: f64, fading: FadingSet) -> Result<Self> {
        Self::with_state_power(power, 1.0, fading)
    }

    pub fn with_state_power(power: f64, state_power: f64, fading: FadingSet) -> Result<Self> {
        ensure_positive("power", power)?;
        ensure_positive("state power", state_power)?;
        Ok(Self {
            power,
            state_power,
            fading,
        })
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn state_power(&self) -> f64 {
        self.state_power
    }

    pub fn noise_power(&self) -> f64 {
        1.0
    }

    pub fn fading(&self) -> &FadingSet {
        &self.fading
    }

    pub fn is_normalized(&self) -> bool {
        self.state_power == 1.0
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized {
                state_power: self.state_power,
            })
        }
    }

    /// View as a generalized channel with unit noise.
    pub fn to_generalized(&self) -> GeneralizedParams {
        GeneralizedParams {
            power: self.power,
            state_power: self.state_power,
            noise_power: 1.0,
            fading: self.fading.values().to_vec(),
        }
    }
}

/// Channel `Y = X + A' S' + Z'` with `S' ~ N(0, Q')`, `Z' ~ N(0, N')` and
/// input power `P'`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedParams {
    pub power: f64,
    pub state_power: f64,
    pub noise_power: f64,
    pub fading: Vec<f64>,
}

/// Map a generalized channel onto the normalized one: scale the output by
/// `1/sqrt(N')`, so `P = P'/N'` and `A = A' sqrt(Q'/N')`.
pub fn normalize(g: &GeneralizedParams) -> Result<ChannelParams> {
    ensure_positive("power", g.power)?;
    ensure_positive("state power", g.state_power)?;
    ensure_positive("noise power", g.noise_power)?;
    let fading = FadingSet::new(g.fading.clone())?;
    let fading = fading.scaled((g.state_power / g.noise_power).sqrt())?;
    ChannelParams::new(g.power / g.noise_power, fading)
}

/// Which prefix sum the strong fading predicate compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrongFadingVariant {
    /// `a_j^2 >= (P+1) * sum_{q<j} a_q`, the definition as stated.
    #[default]
    AmplitudeSum,
    /// `a_j^2 >= (P+1) * sum_{q<j} a_q^2`, the form the outer-bound
    /// entropy chain actually manipulates.
    PowerSum,
}

impl StrongFadingVariant {
    fn weight(self, a: f64) -> f64 {
        match self {
            Self::AmplitudeSum => a,
            Self::PowerSum => a * a,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::AmplitudeSum => "amplitude-sum",
            Self::PowerSum => "power-sum",
        }
    }
}

impl std::str::FromStr for StrongFadingVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "amplitude" | "amplitude-sum" | "amp" => Ok(Self::AmplitudeSum),
            "power" | "power-sum" | "squared" => Ok(Self::PowerSum),
            other => Err(Error::InvalidParameter(format!(
                "unknown strong fading variant `{other}`"
            ))),
        }
    }
}

/// Chain condition on an increasing list of amplitudes, starting at zero.
pub(crate) fn chain_holds(power: f64, values: &[f64], variant: StrongFadingVariant) -> bool {
    if values.first() != Some(&0.0) {
        return false;
    }
    let mut prefix = 0.0;
    for &a in values {
        if a * a < (power + 1.0) * prefix {
            return false;
        }
        prefix += variant.weight(a);
    }
    true
}

/// Strong fading predicate: `a_1 = 0` and every later amplitude dominates the
/// accumulated earlier ones by a factor `P + 1`.
pub fn is_strong_fading(c: &ChannelParams, variant: StrongFadingVariant) -> Result<bool> {
    c.ensure_normalized()?;
    Ok(chain_holds(c.power(), c.fading().values(), variant))
}

/// Maximum-cardinality strong fading subset of a fading set with `a_1 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongSubset {
    pub size: usize,
    pub subset: FadingSet,
}

/// Largest subset of the fading set that contains `a_1 = 0` and satisfies the
/// strong fading chain condition.
///
/// Exact for any `M` in `O(M^3)`: for each (last element, chain length) pair
/// only the chain with the smallest prefix sum is kept, since a smaller sum
/// admits every continuation a larger one admits.
pub fn largest_strong_fading_subset(
    c: &ChannelParams,
    variant: StrongFadingVariant,
) -> Result<StrongSubset> {
    c.ensure_normalized()?;
    let a = c.fading().values();
    if a[0] != 0.0 {
        return Err(Error::Precondition(format!(
            "largest strong fading subset requires a_1 = 0, got {}",
            a[0]
        )));
    }
    let m = a.len();
    let scale = c.power() + 1.0;
    // best[i][k]: smallest prefix sum of a valid chain of k+1 elements ending at i
    let mut best = vec![vec![f64::INFINITY; m]; m];
    let mut parent = vec![vec![usize::MAX; m]; m];
    best[0][0] = variant.weight(a[0]);
    for j in 1..m {
        for i in 0..j {
            for k in 0..j {
                let prefix = best[i][k];
                if !prefix.is_finite() || a[j] * a[j] < scale * prefix {
                    continue;
                }
                let sum = prefix + variant.weight(a[j]);
                if sum < best[j][k + 1] {
                    best[j][k + 1] = sum;
                    parent[j][k + 1] = i;
                }
            }
        }
    }
    let (mut end, mut len) = (0, 0);
    for (j, row) in best.iter().enumerate() {
        for (k, s) in row.iter().enumerate() {
            if s.is_finite() && k > len {
                end = j;
                len = k;
            }
        }
    }
    let mut picked = Vec::with_capacity(len + 1);
    let (mut j, mut k) = (end, len);
    loop {
        picked.push(a[j]);
        if k == 0 {
            break;
        }
        j = parent[j][k];
        k -= 1;
    }
    picked.reverse();
    Ok(StrongSubset {
        size: picked.len(),
        subset: FadingSet::new(picked)?,
    })
}

/// Whether a bound limits capacity from below or above.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Inner,
    Outer,
}

/// Optimizer output attached to a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerState {
    /// Minimizing fading scale of the two-value outer bound, with the
    /// analytic seed when one was available.
    Gamma { gamma: f64, seed: Option<f64> },
    /// Maximizing fraction of power given to the precoded codeword.
    PrecodedFraction(f64),
    /// Size of the largest strong fading subset.
    SubsetSize(usize),
}

impl fmt::Display for OptimizerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gamma { gamma, seed: None } => write!(f, "gamma={gamma}"),
            Self::Gamma {
                gamma,
                seed: Some(s),
            } => write!(f, "gamma={gamma} seed={s}"),
            Self::PrecodedFraction(alpha) => write!(f, "alpha={alpha}"),
            Self::SubsetSize(k) => write!(f, "K={k}"),
        }
    }
}

/// A named capacity bound in bits per channel use.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBound {
    pub name: &'static str,
    pub kind: BoundKind,
    pub value: f64,
    pub params: ChannelParams,
    pub optimizer: Option<OptimizerState>,
    pub notes: Vec<String>,
}

impl RateBound {
    pub(crate) fn new(name: &'static str, kind: BoundKind, value: f64, params: ChannelParams) -> Self {
        Self {
            name,
            kind,
            value,
            params,
            optimizer: None,
            notes: Vec::new(),
        }
    }

    pub(crate) fn with_optimizer(mut self, state: OptimizerState) -> Self {
        self.optimizer = Some(state);
        self
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chan(p: f64, a: &[f64]) -> ChannelParams {
        ChannelParams::new(p, FadingSet::new(a.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn fading_set_rejects_duplicates_and_negatives() {
        assert_eq!(
            FadingSet::new(vec![2.0, 2.0]),
            Err(Error::NotStrictlyIncreasing)
        );
        assert_eq!(
            FadingSet::new(vec![3.0, 1.0]),
            Err(Error::NotStrictlyIncreasing)
        );
        assert!(FadingSet::new(vec![-1.0, 1.0]).is_err());
        assert!(FadingSet::new(vec![]).is_err());
        assert_eq!(
            FadingSet::new_dedup(vec![2.0, 0.0, 2.0]).unwrap().values(),
            &[0.0, 2.0]
        );
    }

    #[test]
    fn normalize_examples() {
        let c = normalize(&GeneralizedParams {
            power: 8.0,
            state_power: 4.0,
            noise_power: 2.0,
            fading: vec![1.0],
        })
        .unwrap();
        assert_abs_diff_eq!(c.power(), 4.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.fading().first(), 2f64.sqrt(), epsilon = 1e-15);
        assert!(c.is_normalized());

        let c = normalize(&GeneralizedParams {
            power: 3.5,
            state_power: 1.0,
            noise_power: 1.0,
            fading: vec![0.5, 2.0],
        })
        .unwrap();
        assert_eq!(c, chan(3.5, &[0.5, 2.0]));

        let c = normalize(&GeneralizedParams {
            power: 2.0,
            state_power: 1.0,
            noise_power: 2.0,
            fading: vec![0.0],
        })
        .unwrap();
        assert_eq!(c, chan(1.0, &[0.0]));
    }

    #[test]
    fn normalize_rejects_nonpositive_powers() {
        for (p, q, n) in [(1.0, 0.0, 1.0), (1.0, 1.0, 0.0), (1.0, -1.0, 1.0), (0.0, 1.0, 1.0)] {
            let g = GeneralizedParams {
                power: p,
                state_power: q,
                noise_power: n,
                fading: vec![1.0],
            };
            assert!(matches!(normalize(&g), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn strong_fading_examples() {
        let v = StrongFadingVariant::AmplitudeSum;
        assert!(is_strong_fading(&chan(3.0, &[0.0, 4.0, 5.0]), v).unwrap());
        assert!(is_strong_fading(&chan(3.0, &[0.0]), v).unwrap());
        assert!(!is_strong_fading(&chan(3.0, &[1.0, 4.0, 5.0]), v).unwrap());
        // 25 < 4 * 16 under the squared prefix sum
        assert!(!is_strong_fading(&chan(3.0, &[0.0, 4.0, 5.0]), StrongFadingVariant::PowerSum).unwrap());
    }

    #[test]
    fn strong_fading_requires_normalized_input() {
        let c = ChannelParams::with_state_power(3.0, 2.0, FadingSet::new(vec![0.0]).unwrap()).unwrap();
        assert!(matches!(
            is_strong_fading(&c, StrongFadingVariant::AmplitudeSum),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn geometric_chain_is_strong_for_both_variants() {
        for p in [1.0, 3.0, 15.0, 255.0] {
            for m in 1..=6 {
                let c = ChannelParams::new(p, FadingSet::geometric_chain(p, m).unwrap()).unwrap();
                assert!(is_strong_fading(&c, StrongFadingVariant::AmplitudeSum).unwrap());
                assert!(is_strong_fading(&c, StrongFadingVariant::PowerSum).unwrap());
                let c = ChannelParams::new(p, FadingSet::minimal_power_chain(p, m).unwrap()).unwrap();
                assert!(is_strong_fading(&c, StrongFadingVariant::PowerSum).unwrap());
            }
        }
    }

    #[test]
    fn largest_subset_examples() {
        let v = StrongFadingVariant::AmplitudeSum;
        let s = largest_strong_fading_subset(&chan(3.0, &[0.0, 4.0, 5.0]), v).unwrap();
        assert_eq!(s.size, 3);
        assert_eq!(s.subset.values(), &[0.0, 4.0, 5.0]);

        let s = largest_strong_fading_subset(&chan(3.0, &[0.0]), v).unwrap();
        assert_eq!(s.size, 1);

        // 1.2^2 = 1.44 < 2 * 1, so 1 and 1.2 cannot both follow 0
        let s = largest_strong_fading_subset(&chan(1.0, &[0.0, 1.0, 1.2]), v).unwrap();
        assert_eq!(s.size, 2);
        assert!(chain_holds(1.0, s.subset.values(), v));

        let err = largest_strong_fading_subset(&chan(1.0, &[0.5, 1.0]), v).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn largest_subset_prefers_small_prefix_sums() {
        // Taking 1 blocks 3 (9 < 10 * 1) but taking 2 admits 5 later only if the
        // chain stays light: 0, 2, 5 needs 25 >= 10 * 2.
        let c = chan(9.0, &[0.0, 1.0, 2.0, 3.0, 5.0]);
        let s = largest_strong_fading_subset(&c, StrongFadingVariant::AmplitudeSum).unwrap();
        assert_eq!(s.size, 3);
        assert!(chain_holds(9.0, s.subset.values(), StrongFadingVariant::AmplitudeSum));
    }
}
