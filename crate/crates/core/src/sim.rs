//! Monte Carlo estimation of the information rates of the transmission
//! schemes.
//!
//! Samples are drawn in blocks of [`BLOCK_LEN`]. Each block accumulates the
//! raw second moments of the base draws `(X_N, X_P, S, Z_1, ..., Z_M)`
//! separately for every precoding slot. Every scheme variable (auxiliaries
//! `U`, outputs `Y_j`) is linear in the base draws, so its empirical
//! covariance is the corresponding linear image of those moments, and the
//! rate is the Gaussian mutual information of that covariance.
//!
//! Block `b` of variable `v` is drawn from a ChaCha8 stream keyed by the seed
//! and cell index, with stream id `v` and word position `b << 36`, so results
//! do not depend on how blocks are spread over threads.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::gaussian::{mutual_information, GaussianVector};
use crate::par;

/// Samples per block.
pub const BLOCK_LEN: usize = 1024;

/// Smallest accepted sample count.
pub const MIN_SAMPLES: usize = 10_000;

/// Number of contiguous batches used for batch-means standard errors.
pub const MAX_BATCHES: usize = 20;

/// One precoding slot: the state scaling precoded against and the share of
/// time it is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slot {
    pub target: f64,
    pub fraction: f64,
}

/// Transmission scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeConfig {
    /// Gaussian input decoded with the state treated as noise.
    Tin,
    /// Costa precoding against `target * S` at all times.
    CostaMatched(f64),
    /// Costa precoding against the mean fading amplitude.
    CostaAverage,
    /// Costa precoding against a different target in each slot. An empty
    /// schedule spreads time evenly over the fading set.
    CostaTimeShare(Vec<Slot>),
    /// Power fraction `beta` on a codeword that treats the state as noise and
    /// is decoded first; the rest is precoded against each fading value for
    /// an equal share of time.
    TwoCodeword(f64),
}

impl fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Tin => f.write_str("tin"),
            Self::CostaMatched(a) => write!(f, "costa-matched({a})"),
            Self::CostaAverage => f.write_str("costa-average"),
            Self::CostaTimeShare(s) if s.is_empty() => f.write_str("costa-timeshare"),
            Self::CostaTimeShare(s) => {
                f.write_str("costa-timeshare(")?;
                for (i, slot) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{}:{}", slot.target, slot.fraction)?;
                }
                f.write_str(")")
            }
            Self::TwoCodeword(b) => write!(f, "two-codeword({b})"),
        }
    }
}

/// Power split and slot schedule a scheme resolves to on a given channel.
#[derive(Debug, Clone, PartialEq)]
struct Plan {
    noise_power: f64,
    precoded_power: f64,
    slots: Vec<Slot>,
}

fn is_member(a: f64, values: &[f64]) -> bool {
    values.iter().any(|v| (v - a).abs() <= 1e-12 * v.abs().max(1.0))
}

fn equal_slots(values: &[f64]) -> Vec<Slot> {
    let f = 1.0 / values.len() as f64;
    values.iter().map(|&target| Slot { target, fraction: f }).collect()
}

impl SchemeConfig {
    fn plan(&self, c: &ChannelParams) -> Result<Plan> {
        let p = c.power();
        let values = c.fading().values();
        let precoded = |slots| Plan {
            noise_power: 0.0,
            precoded_power: p,
            slots,
        };
        match self {
            Self::Tin => Ok(Plan {
                noise_power: p,
                precoded_power: 0.0,
                slots: Vec::new(),
            }),
            Self::CostaMatched(a) => {
                if !is_member(*a, values) {
                    return Err(Error::InvalidParameter(format!(
                        "precoding target {a} is not in the fading set"
                    )));
                }
                Ok(precoded(vec![Slot { target: *a, fraction: 1.0 }]))
            }
            Self::CostaAverage => Ok(precoded(vec![Slot {
                target: c.fading().mean(),
                fraction: 1.0,
            }])),
            Self::CostaTimeShare(schedule) if schedule.is_empty() => Ok(precoded(equal_slots(values))),
            Self::CostaTimeShare(schedule) => {
                for s in schedule {
                    if !is_member(s.target, values) {
                        return Err(Error::InvalidParameter(format!(
                            "precoding target {} is not in the fading set",
                            s.target
                        )));
                    }
                    if !(s.fraction.is_finite() && s.fraction > 0.0) {
                        return Err(Error::InvalidParameter(format!(
                            "slot fraction must be > 0, got {}",
                            s.fraction
                        )));
                    }
                }
                let total: f64 = schedule.iter().map(|s| s.fraction).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "slot fractions must sum to 1, got {total}"
                    )));
                }
                Ok(precoded(schedule.clone()))
            }
            Self::TwoCodeword(beta) => {
                if !(0.0..=1.0).contains(beta) {
                    return Err(Error::InvalidParameter(format!("beta must lie in [0, 1], got {beta}")));
                }
                Ok(Plan {
                    noise_power: beta * p,
                    precoded_power: (1.0 - beta) * p,
                    slots: equal_slots(values),
                })
            }
        }
    }
}

impl Plan {
    /// Slots that partition the block; a single full slot when nothing is precoded.
    fn partition(&self) -> Vec<f64> {
        if self.precoded_power > 0.0 {
            self.slots.iter().map(|s| s.fraction).collect()
        } else {
            vec![1.0]
        }
    }
}

/// Per-receiver and compound rates of a scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeRates {
    pub per_receiver: Vec<f64>,
    pub compound: f64,
}

// Base coordinates: 0 = X_N, 1 = X_P, 2 = S, 3 + j = Z_j.
const BASE_XN: usize = 0;
const BASE_XP: usize = 1;
const BASE_S: usize = 2;
const BASE_Z: usize = 3;

fn project(cov: &DMatrix<f64>, rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = cov.nrows();
    let t = DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let out = &t * cov * t.transpose();
    (&out + out.transpose()) * 0.5
}

fn unit(d: usize, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut v = vec![0.0; d];
    for &(i, c) in entries {
        v[i] += c;
    }
    v
}

fn mi_of(cov: &DMatrix<f64>, names: &[&str], rows: &[Vec<f64>], a: &[&str], b: &[&str]) -> Result<f64> {
    let g = GaussianVector::from_covariance(names.to_vec(), project(cov, rows))?;
    mutual_information(&g, a, b)
}

/// Rates of `plan` when the base draws have (empirical or exact) second
/// moments `total` over all samples and `per_slot` within each slot.
fn rates_from_moments(
    plan: &Plan,
    amplitudes: &[f64],
    total: &DMatrix<f64>,
    per_slot: &[DMatrix<f64>],
) -> Result<Vec<f64>> {
    let d = total.nrows();
    let m = amplitudes.len();
    let y = |j: usize| {
        unit(d, &[(BASE_XN, 1.0), (BASE_XP, 1.0), (BASE_S, amplitudes[j]), (BASE_Z + j, 1.0)])
    };
    let noise_rates = if plan.noise_power > 0.0 {
        (0..m)
            .map(|j| mi_of(total, &["XN", "Y"], &[unit(d, &[(BASE_XN, 1.0)]), y(j)], &["XN"], &["Y"]))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![0.0; m]
    };
    if plan.precoded_power <= 0.0 {
        return Ok(noise_rates);
    }
    let common = noise_rates.iter().copied().fold(f64::INFINITY, f64::min);
    let lambda = plan.precoded_power / (plan.precoded_power + 1.0);
    let mut out = vec![common; m];
    for (slot, cov) in plan.slots.iter().zip(per_slot) {
        let u = unit(d, &[(BASE_XP, 1.0), (BASE_S, lambda * slot.target)]);
        let s = unit(d, &[(BASE_S, 1.0)]);
        for (j, r) in out.iter_mut().enumerate() {
            let yp = unit(d, &[(BASE_XP, 1.0), (BASE_S, amplitudes[j]), (BASE_Z + j, 1.0)]);
            let names = ["U", "Y", "S"];
            let rows = [u.clone(), yp, s.clone()];
            let g = GaussianVector::from_covariance(names.to_vec(), project(cov, &rows))?;
            let rate = mutual_information(&g, &["U"], &["Y"])? - mutual_information(&g, &["U"], &["S"])?;
            *r += slot.fraction * rate.max(0.0);
        }
    }
    Ok(out)
}

fn base_dim(c: &ChannelParams) -> usize {
    BASE_Z + c.fading().len()
}

fn exact_base_covariance(plan: &Plan, c: &ChannelParams) -> DMatrix<f64> {
    let d = base_dim(c);
    let mut cov = DMatrix::identity(d, d);
    cov[(BASE_XN, BASE_XN)] = plan.noise_power;
    cov[(BASE_XP, BASE_XP)] = plan.precoded_power;
    cov[(BASE_S, BASE_S)] = c.state_power();
    cov
}

fn compound(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Exact rates of the scheme, from the true second moments.
pub fn analytic_rate(c: &ChannelParams, cfg: &SchemeConfig) -> Result<SchemeRates> {
    let plan = cfg.plan(c)?;
    let cov = exact_base_covariance(&plan, c);
    let per_slot = vec![cov.clone(); plan.slots.len()];
    let per_receiver = rates_from_moments(&plan, c.fading().values(), &cov, &per_slot)?;
    Ok(SchemeRates {
        compound: compound(&per_receiver),
        per_receiver,
    })
}

/// Monte Carlo rate estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub scheme: String,
    pub per_receiver: Vec<f64>,
    /// Batch-means standard error of each entry of `per_receiver`.
    pub stderr: Vec<f64>,
    /// Minimum of `per_receiver`.
    pub compound_rate: f64,
    pub compound_stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub cell: usize,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cell_key(seed: u64, cell: usize) -> [u8; 32] {
    let mut state = seed;
    let mix = splitmix64(&mut state) ^ (cell as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    let mut state = mix;
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Second-moment accumulator (upper triangle) per slot.
#[derive(Clone)]
struct Moments {
    d: usize,
    sums: Vec<Vec<f64>>,
    counts: Vec<usize>,
}

impl Moments {
    fn new(d: usize, slots: usize) -> Self {
        Self {
            d,
            sums: vec![vec![0.0; d * d]; slots],
            counts: vec![0; slots],
        }
    }

    fn add(&mut self, other: &Moments) {
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    fn covariance(&self, slot: usize) -> DMatrix<f64> {
        let n = self.counts[slot].max(1) as f64;
        let s = &self.sums[slot];
        DMatrix::from_fn(self.d, self.d, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            s[a * self.d + b] / n
        })
    }

    fn total(&self) -> DMatrix<f64> {
        let mut all = Moments::new(self.d, 1);
        for (s, c) in self.sums.iter().zip(&self.counts) {
            for (x, y) in all.sums[0].iter_mut().zip(s) {
                *x += y;
            }
            all.counts[0] += c;
        }
        all.covariance(0)
    }
}

fn slot_bounds(len: usize, fractions: &[f64]) -> Vec<usize> {
    let mut bounds = Vec::with_capacity(fractions.len() + 1);
    bounds.push(0);
    let mut acc = 0.0;
    for (i, f) in fractions.iter().enumerate() {
        acc += f;
        let end = if i + 1 == fractions.len() {
            len
        } else {
            ((acc * len as f64).round() as usize).min(len)
        };
        bounds.push(end);
    }
    bounds
}

fn simulate_block(
    key: &[u8; 32],
    block: usize,
    len: usize,
    std_devs: &[f64],
    fractions: &[f64],
) -> Moments {
    let d = std_devs.len();
    let mut draws = vec![vec![0.0; len]; d];
    for (v, (sd, buf)) in std_devs.iter().zip(draws.iter_mut()).enumerate() {
        if *sd == 0.0 {
            continue;
        }
        let mut rng = ChaCha8Rng::from_seed(*key);
        rng.set_stream(v as u64);
        rng.set_word_pos((block as u128) << 36);
        for x in buf.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *x = sd * z;
        }
    }
    let bounds = slot_bounds(len, fractions);
    let mut m = Moments::new(d, fractions.len());
    for (slot, w) in bounds.windows(2).enumerate() {
        let sums = &mut m.sums[slot];
        #[allow(clippy::needless_range_loop)]
        for i in w[0]..w[1] {
            for a in 0..d {
                let xa = draws[a][i];
                if xa == 0.0 {
                    continue;
                }
                for b in a..d {
                    sums[a * d + b] += xa * draws[b][i];
                }
            }
        }
        m.counts[slot] = w[1] - w[0];
    }
    m
}

fn batch_stderr(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

fn simulate_cell(c: &ChannelParams, cfg: &SchemeConfig, samples: usize, seed: u64, cell: usize) -> Result<SimEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples,
            min: MIN_SAMPLES,
        });
    }
    let plan = cfg.plan(c)?;
    let fractions = plan.partition();
    let d = base_dim(c);
    let mut std_devs = vec![1.0; d];
    std_devs[BASE_XN] = plan.noise_power.sqrt();
    std_devs[BASE_XP] = plan.precoded_power.sqrt();
    std_devs[BASE_S] = c.state_power().sqrt();
    let key = cell_key(seed, cell);
    let blocks = samples.div_ceil(BLOCK_LEN);
    let per_block = par::map_range(blocks, |b| {
        let len = BLOCK_LEN.min(samples - b * BLOCK_LEN);
        simulate_block(&key, b, len, &std_devs, &fractions)
    });

    let batches = MAX_BATCHES.min(blocks);
    let mut batch_moments = Vec::with_capacity(batches);
    for k in 0..batches {
        let (lo, hi) = (k * blocks / batches, (k + 1) * blocks / batches);
        let mut acc = Moments::new(d, fractions.len());
        for m in &per_block[lo..hi] {
            acc.add(m);
        }
        batch_moments.push(acc);
    }
    let mut all = Moments::new(d, fractions.len());
    for m in &batch_moments {
        all.add(m);
    }

    let amplitudes = c.fading().values();
    let estimate = |m: &Moments| -> Result<Vec<f64>> {
        let per_slot: Vec<DMatrix<f64>> = (0..fractions.len()).map(|s| m.covariance(s)).collect();
        rates_from_moments(&plan, amplitudes, &m.total(), &per_slot)
    };
    let per_receiver = estimate(&all)?;
    let batch_rates = batch_moments.iter().map(&estimate).collect::<Result<Vec<_>>>()?;
    let stderr = (0..amplitudes.len())
        .map(|j| batch_stderr(&batch_rates.iter().map(|r| r[j]).collect::<Vec<_>>()))
        .collect();
    let compound_stderr = batch_stderr(&batch_rates.iter().map(|r| compound(r)).collect::<Vec<_>>());
    Ok(SimEstimate {
        scheme: cfg.to_string(),
        compound_rate: compound(&per_receiver),
        compound_stderr,
        per_receiver,
        stderr,
        samples,
        seed,
        cell,
    })
}

/// Estimate the rates of `cfg` on `c` from `samples` draws.
pub fn simulate(c: &ChannelParams, cfg: &SchemeConfig, samples: usize, seed: u64) -> Result<SimEstimate> {
    simulate_cell(c, cfg, samples, seed, 0)
}

/// [`simulate`] over a list of channels; cell `i` draws from its own key
/// derived from `(seed, i)`, and cell 0 reproduces [`simulate`].
pub fn sweep_simulate(grid: &[ChannelParams], cfg: &SchemeConfig, samples: usize, seed: u64) -> Result<Vec<SimEstimate>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty simulation grid".into()));
    }
    grid.iter()
        .enumerate()
        .map(|(i, c)| simulate_cell(c, cfg, samples, seed, i))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::FadingSet;
    use approx::assert_abs_diff_eq;

    fn chan(p: f64, a: &[f64]) -> ChannelParams {
        ChannelParams::new(p, FadingSet::new(a.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn analytic_rates_match_closed_forms() {
        let c = chan(3.0, &[2.0]);
        assert_abs_diff_eq!(analytic_rate(&c, &SchemeConfig::Tin).unwrap().compound, 0.5 * 1.6f64.log2(), epsilon = 1e-12);
        assert_abs_diff_eq!(analytic_rate(&c, &SchemeConfig::CostaMatched(2.0)).unwrap().compound, 1.0, epsilon = 1e-12);
        let c = chan(3.0, &[0.0, 2f64.sqrt()]);
        let r = analytic_rate(&c, &SchemeConfig::TwoCodeword(2.0 / 3.0)).unwrap();
        assert_abs_diff_eq!(r.compound, 0.5 * 6f64.log2() - 0.75, epsilon = 1e-12);
        let c = ChannelParams::new(3.0, FadingSet::geometric_chain(3.0, 3).unwrap()).unwrap();
        let r = analytic_rate(&c, &SchemeConfig::CostaTimeShare(Vec::new())).unwrap();
        assert_abs_diff_eq!(r.compound, 2.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn scheme_validation() {
        let c = chan(3.0, &[0.0, 2.0]);
        assert!(analytic_rate(&c, &SchemeConfig::CostaMatched(1.0)).is_err());
        assert!(analytic_rate(&c, &SchemeConfig::TwoCodeword(1.5)).is_err());
        let bad = vec![Slot { target: 0.0, fraction: 0.3 }, Slot { target: 2.0, fraction: 0.3 }];
        assert!(analytic_rate(&c, &SchemeConfig::CostaTimeShare(bad)).is_err());
        assert_eq!(
            simulate(&c, &SchemeConfig::Tin, 9_999, 1),
            Err(Error::TooFewSamples { got: 9_999, min: MIN_SAMPLES })
        );
    }

    #[test]
    fn slot_bounds_partition_block() {
        assert_eq!(slot_bounds(1024, &[0.5, 0.5]), vec![0, 512, 1024]);
        assert_eq!(slot_bounds(10, &[1.0 / 3.0; 3]), vec![0, 3, 7, 10]);
        assert_eq!(slot_bounds(7, &[1.0]), vec![0, 7]);
    }

    #[test]
    fn simulation_is_deterministic_and_close() {
        let c = chan(3.0, &[2.0]);
        let a = simulate(&c, &SchemeConfig::Tin, 200_000, 7).unwrap();
        let b = simulate(&c, &SchemeConfig::Tin, 200_000, 7).unwrap();
        assert_eq!(a, b);
        assert!((a.compound_rate - 0.5 * 1.6f64.log2()).abs() < 0.02);
        assert!(a.stderr[0] > 0.0);
        let other = simulate(&c, &SchemeConfig::Tin, 200_000, 8).unwrap();
        assert_ne!(a.per_receiver, other.per_receiver);
    }

    #[test]
    fn sweep_cell_zero_is_simulate() {
        let c = chan(3.0, &[0.0, 2.0]);
        let s = sweep_simulate(std::slice::from_ref(&c), &SchemeConfig::CostaMatched(2.0), 20_000, 3).unwrap();
        assert_eq!(s[0], simulate(&c, &SchemeConfig::CostaMatched(2.0), 20_000, 3).unwrap());
        assert!(sweep_simulate(&[], &SchemeConfig::Tin, 20_000, 3).is_err());
    }

    #[test]
    fn compound_is_min_of_receivers() {
        let c = chan(1.0, &[0.0, 1.0, 3.0]);
        let e = simulate(&c, &SchemeConfig::CostaAverage, 50_000, 11).unwrap();
        assert_eq!(e.compound_rate, e.per_receiver.iter().copied().fold(f64::INFINITY, f64::min));
    }
}
