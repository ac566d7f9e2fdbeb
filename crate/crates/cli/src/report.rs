//! Row builders shared by the subcommands and the sweep driver.

use dpc_core::bounds_m::{self, MFadingInstance};
use dpc_core::bounds_two::{self as two, TwoFadingInstance};
use dpc_core::sim::{self, SchemeConfig};
use dpc_core::{largest_strong_fading_subset, ChannelParams, Error, FadingSet, OptimizerState, RateBound, Result, StrongFadingVariant};

use crate::csv::fmt_num;

pub type Row = Vec<String>;

/// Output unit for rates. Computation always happens in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Bits,
    Nats,
}

impl Units {
    pub fn rate(self, bits: f64) -> f64 {
        match self {
            Self::Bits => bits,
            Self::Nats => bits * std::f64::consts::LN_2,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            Self::Bits => "bits",
            Self::Nats => "nats",
        }
    }

    fn num(self, bits: f64) -> String {
        fmt_num(self.rate(bits))
    }
}

pub const BOUNDS2_DEFAULT: [&str; 6] = [
    "carbon_outer",
    "carbon_inner",
    "outer2_numeric",
    "outer2_closed",
    "inner2_closed",
    "gap2",
];

/// Rows the two-value mode accepts beyond the defaults.
pub const BOUNDS2_EXTRA: [&str; 8] = [
    "outer2_objective",
    "inner2_rate",
    "inner2_proof_rate",
    "tin",
    "costa-average",
    "costa-timeshare",
    "two-codeword",
    "carbon_gap",
];

pub const BOUNDSM_DEFAULT: [&str; 5] = [
    "strong_fading",
    "strong_fading_outer",
    "time_sharing_inner",
    "strong_fading_gap",
    "subset_outer",
];

pub fn bounds2_header(units: Units) -> Row {
    ["P", "a1", "a2", "bound", &format!("value_{}", units.suffix()), "optimizer", "notes"]
        .map(String::from)
        .to_vec()
}

pub fn boundsm_header(units: Units) -> Row {
    ["P", "fading", "variant", "bound", &format!("value_{}", units.suffix()), "status", "notes"]
        .map(String::from)
        .to_vec()
}

pub fn simulate_header(units: Units) -> Row {
    ["scheme", "receiver", &format!("rate_{}", units.suffix()), "stderr", "N", "seed"]
        .map(String::from)
        .to_vec()
}

fn optimizer_text(state: Option<OptimizerState>) -> String {
    match state {
        None => String::new(),
        Some(OptimizerState::Gamma { gamma, seed: None }) => format!("gamma={}", fmt_num(gamma)),
        Some(OptimizerState::Gamma { gamma, seed: Some(s) }) => {
            format!("gamma={};seed={}", fmt_num(gamma), fmt_num(s))
        }
        Some(OptimizerState::PrecodedFraction(a)) => format!("alpha={}", fmt_num(a)),
        Some(OptimizerState::SubsetSize(k)) => format!("K={k}"),
    }
}

/// Parameters of one two-value cell. `beta` and `gamma` are only needed by
/// the rows that take them.
#[derive(Debug, Clone, Copy)]
pub struct TwoCell {
    pub inst: TwoFadingInstance,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
}

fn two_row(inst: &TwoFadingInstance, bound: &str, value: String, optimizer: String, notes: String) -> Row {
    vec![
        fmt_num(inst.power()),
        fmt_num(inst.a1()),
        fmt_num(inst.a2()),
        bound.to_string(),
        value,
        optimizer,
        notes,
    ]
}

fn rate_row(inst: &TwoFadingInstance, b: &RateBound, units: Units) -> Row {
    two_row(inst, b.name, units.num(b.value), optimizer_text(b.optimizer), b.notes.join(";"))
}

fn need(v: Option<f64>, name: &str, row: &str) -> Result<f64> {
    v.ok_or_else(|| Error::InvalidParameter(format!("`{row}` needs a value for {name}")))
}

pub fn bounds2_row(cell: &TwoCell, name: &str, units: Units) -> Result<Row> {
    let inst = &cell.inst;
    let (p, a2) = (inst.power(), inst.a2());
    let scheme = |cfg: SchemeConfig, optimizer: String| -> Result<Row> {
        let r = sim::analytic_rate(&inst.channel(), &cfg)?;
        let notes = r
            .per_receiver
            .iter()
            .enumerate()
            .map(|(j, v)| format!("R{}={}", j + 1, units.num(*v)))
            .collect::<Vec<_>>()
            .join(";");
        Ok(two_row(inst, name, units.num(r.compound), optimizer, notes))
    };
    match name {
        "carbon_outer" => {
            let b = two::carbon_outer(p, a2)?;
            Ok(rate_row(inst, &b, units))
        }
        "carbon_inner" => {
            let b = two::carbon_inner(p, a2)?;
            Ok(rate_row(inst, &b, units))
        }
        "carbon_gap" => {
            let gap = two::carbon_outer(p, a2)?.value - two::carbon_inner(p, a2)?.value;
            Ok(two_row(inst, name, units.num(gap), String::new(), String::new()))
        }
        "outer2_numeric" => Ok(rate_row(inst, &two::outer2_numeric(inst)?, units)),
        "outer2_closed" => Ok(rate_row(inst, &two::outer2_closed(inst)?, units)),
        "inner2_closed" => Ok(rate_row(inst, &two::inner2_closed(inst)?, units)),
        "gap2" => {
            let g = two::gap2(inst)?;
            let notes = format!(
                "case={};case_bound={};numeric_gap={};generic_bound={};fallback={}",
                g.case,
                units.num(g.case_bound),
                units.num(g.numeric_gap),
                units.num(g.generic_bound),
                if g.fallback.all() { "yes" } else { "no" }
            );
            Ok(two_row(inst, name, units.num(g.closed_gap), String::new(), notes))
        }
        "outer2_objective" => {
            let gamma = need(cell.gamma, "gamma", name)?;
            let v = two::outer2_objective(inst, gamma)?;
            Ok(two_row(inst, name, units.num(v), format!("gamma={}", fmt_num(gamma)), String::new()))
        }
        "inner2_rate" | "inner2_proof_rate" => {
            let beta = need(cell.beta, "beta", name)?;
            let v = if name == "inner2_rate" {
                two::inner2_rate(inst, beta)?
            } else {
                two::inner2_proof_rate(inst, beta)?
            };
            Ok(two_row(inst, name, units.num(v), format!("beta={}", fmt_num(beta)), String::new()))
        }
        "tin" => scheme(SchemeConfig::Tin, String::new()),
        "costa-average" => scheme(SchemeConfig::CostaAverage, String::new()),
        "costa-timeshare" => scheme(SchemeConfig::CostaTimeShare(Vec::new()), String::new()),
        "two-codeword" => {
            let beta = cell.beta.unwrap_or(1.0 - two::optimal_precoded_fraction(inst));
            scheme(SchemeConfig::TwoCodeword(beta), format!("beta={}", fmt_num(beta)))
        }
        other => Err(Error::InvalidParameter(format!("unknown two-value row `{other}`"))),
    }
}

pub fn bounds2_rows(cell: &TwoCell, select: &[String], units: Units) -> Result<Vec<Row>> {
    select.iter().map(|s| bounds2_row(cell, s, units)).collect()
}

fn fading_text(f: &FadingSet) -> String {
    f.values().iter().map(|v| fmt_num(*v)).collect::<Vec<_>>().join(";")
}

/// Status of a bound that may not apply to the instance.
fn status_of(e: &Error) -> Option<&'static str> {
    match e {
        Error::RegimeViolation(_) => Some("regime-violation"),
        Error::Precondition(_) => Some("precondition"),
        _ => None,
    }
}

pub fn boundsm_rows(
    params: &ChannelParams,
    variant: StrongFadingVariant,
    select: &[String],
    units: Units,
) -> Result<Vec<Row>> {
    let inst = MFadingInstance::new(params.clone(), variant)?;
    let base = |bound: &str, value: String, status: &str, notes: String| -> Row {
        vec![
            fmt_num(params.power()),
            fading_text(params.fading()),
            variant.label().to_string(),
            bound.to_string(),
            value,
            status.to_string(),
            notes,
        ]
    };
    let degenerate = if inst.m() == 1 { "degenerate: M = 1" } else { "" };
    let mut rows = Vec::with_capacity(select.len());
    for name in select {
        let outcome: Result<Row> = match name.as_str() {
            "strong_fading" => Ok(base(
                name,
                String::new(),
                if inst.is_strong_fading() { "true" } else { "false" },
                degenerate.to_string(),
            )),
            "strong_fading_outer" => bounds_m::strong_fading_outer(&inst)
                .map(|b| base(name, units.num(b.value), "ok", b.notes.join(";"))),
            "time_sharing_inner" => bounds_m::time_sharing_inner(&inst)
                .map(|b| base(name, units.num(b.value), "ok", degenerate.to_string())),
            "strong_fading_gap" => bounds_m::strong_fading_gap(&inst).map(|g| {
                base(
                    name,
                    units.num(g.realized),
                    "ok",
                    format!("bound={};outer={};inner={}", units.num(g.bound), units.num(g.outer), units.num(g.inner)),
                )
            }),
            "subset_outer" => bounds_m::subset_outer(&inst).and_then(|b| {
                let s = largest_strong_fading_subset(params, variant)?;
                let notes = format!("{};subset={}", optimizer_text(b.optimizer), fading_text(&s.subset));
                Ok(base(name, units.num(b.value), "ok", notes))
            }),
            other => return Err(Error::InvalidParameter(format!("unknown fading-set row `{other}`"))),
        };
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => match status_of(&e) {
                Some(status) => rows.push(base(name, String::new(), status, e.to_string())),
                None => return Err(e),
            },
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn bounds2_values_match_library() {
        let inst = TwoFadingInstance::new(3.0, 1.0, 8.0).unwrap();
        let cell = TwoCell {
            inst,
            beta: None,
            gamma: None,
        };
        let rows = bounds2_rows(&cell, &strings(&BOUNDS2_DEFAULT), Units::Bits).unwrap();
        assert_eq!(rows.len(), 6);
        let inner = two::inner2_closed(&inst).unwrap().value;
        assert_eq!(rows[4][3], "inner2_closed");
        assert_eq!(rows[4][4], fmt_num(inner));
        assert!(rows[3][6].contains("branch="));
        assert!(rows[5][6].starts_with("case="));
    }

    #[test]
    fn nats_scale_rates_only() {
        let inst = TwoFadingInstance::new(3.0, 0.0, 0.5).unwrap();
        let cell = TwoCell {
            inst,
            beta: Some(1.0),
            gamma: None,
        };
        let bits = bounds2_row(&cell, "inner2_rate", Units::Bits).unwrap();
        let nats = bounds2_row(&cell, "inner2_rate", Units::Nats).unwrap();
        let b: f64 = bits[4].parse().unwrap();
        let n: f64 = nats[4].parse().unwrap();
        assert!((n - b * std::f64::consts::LN_2).abs() < 1e-11);
        assert_eq!(bits[0], nats[0]);
    }

    #[test]
    fn missing_beta_is_an_error() {
        let cell = TwoCell {
            inst: TwoFadingInstance::new(3.0, 0.0, 2.0).unwrap(),
            beta: None,
            gamma: None,
        };
        assert!(bounds2_row(&cell, "inner2_rate", Units::Bits).is_err());
        assert!(bounds2_row(&cell, "no_such_row", Units::Bits).is_err());
    }

    #[test]
    fn regime_violation_becomes_status() {
        let c = ChannelParams::new(3.0, FadingSet::new(vec![0.0, 1.0, 1.5]).unwrap()).unwrap();
        let rows = boundsm_rows(&c, StrongFadingVariant::AmplitudeSum, &strings(&BOUNDSM_DEFAULT), Units::Bits).unwrap();
        assert_eq!(rows[0][5], "false");
        assert_eq!(rows[1][5], "regime-violation");
        assert_eq!(rows[1][4], "");
        assert_eq!(rows[2][5], "ok");
        assert_eq!(rows[4][5], "ok");
        assert!(rows[4][6].starts_with("K=2"));
    }
}
