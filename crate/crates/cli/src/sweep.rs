//! Flat text sweep specifications.
//!
//! ```text
//! # comment
//! axis.P  = 0.1,1000,5,log
//! fixed.a1 = 0
//! fixed.a2 = 8
//! select = outer2_closed,inner2_closed
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Param {
    Power,
    A1,
    A2,
    Fading,
    M,
    Beta,
    Gamma,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Self::Power => "P",
            Self::A1 => "a1",
            Self::A2 => "a2",
            Self::Fading => "fading",
            Self::M => "M",
            Self::Beta => "beta",
            Self::Gamma => "gamma",
        }
    }
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "P" | "power" => Self::Power,
            "a1" => Self::A1,
            "a2" => Self::A2,
            "fading" => Self::Fading,
            "M" => Self::M,
            "beta" => Self::Beta,
            "gamma" => Self::Gamma,
            other => return Err(format!("unknown parameter `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Lin,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        use dpc_core::optimize::{lin_space, log_space};
        if self.count == 1 {
            return vec![self.min];
        }
        match self.spacing {
            Spacing::Lin => lin_space(self.min, self.max, self.count),
            Spacing::Log => log_space(self.min, self.max, self.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Fixed {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    pub fixed: BTreeMap<Param, Fixed>,
    pub select: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{}` is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{}` is not finite", s.trim()))
    }
}

fn parse_axis(param: Param, value: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err("axis needs `min,max,count,lin|log`".into());
    }
    if param == Param::Fading {
        return Err("`fading` cannot be an axis; use fixed.fading".into());
    }
    let min = number(parts[0])?;
    let max = number(parts[1])?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| format!("count `{}` is not a positive integer", parts[2]))?;
    let spacing = match parts[3] {
        "lin" => Spacing::Lin,
        "log" => Spacing::Log,
        other => return Err(format!("spacing must be lin or log, got `{other}`")),
    };
    if count == 0 {
        return Err("count must be >= 1".into());
    }
    if count > 1 && min >= max {
        return Err("min must be < max on a multi-point axis".into());
    }
    if spacing == Spacing::Log && min <= 0.0 {
        return Err("log axis needs min > 0".into());
    }
    Ok(Axis {
        param,
        min,
        max,
        count,
        spacing,
    })
}

pub fn parse(text: &str) -> Result<SweepSpec, ParseError> {
    let mut spec = SweepSpec::default();
    let mut seen_select = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ParseError { line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err("expected `key = value`".into()))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(name) = key.strip_prefix("axis.") {
            let param: Param = name.parse().map_err(err)?;
            if spec.axes.iter().any(|a| a.param == param) || spec.fixed.contains_key(&param) {
                return Err(err(format!("`{name}` given twice")));
            }
            spec.axes.push(parse_axis(param, value).map_err(err)?);
        } else if let Some(name) = key.strip_prefix("fixed.") {
            let param: Param = name.parse().map_err(err)?;
            if spec.axes.iter().any(|a| a.param == param) || spec.fixed.contains_key(&param) {
                return Err(err(format!("`{name}` given twice")));
            }
            let fixed = if param == Param::Fading {
                Fixed::List(value.split(',').map(number).collect::<Result<_, _>>().map_err(err)?)
            } else {
                Fixed::Scalar(number(value).map_err(err)?)
            };
            spec.fixed.insert(param, fixed);
        } else if key == "select" {
            if seen_select {
                return Err(err("`select` given twice".into()));
            }
            seen_select = true;
            spec.select = value
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            if spec.select.is_empty() {
                return Err(err("`select` is empty".into()));
            }
        } else {
            return Err(err(format!("unknown key `{key}`")));
        }
    }
    Ok(spec)
}

impl SweepSpec {
    /// Every cell of the grid in axis-major order: the first axis varies
    /// slowest.
    pub fn cells(&self) -> Vec<BTreeMap<Param, f64>> {
        let mut base = BTreeMap::new();
        for (p, v) in &self.fixed {
            if let Fixed::Scalar(x) = v {
                base.insert(*p, *x);
            }
        }
        let mut cells = vec![base];
        for axis in &self.axes {
            let pts = axis.points();
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    pts.iter().map(move |&x| {
                        let mut c = c.clone();
                        c.insert(axis.param, x);
                        c
                    })
                })
                .collect();
        }
        cells
    }

    pub fn fading_list(&self) -> Option<&[f64]> {
        match self.fixed.get(&Param::Fading) {
            Some(Fixed::List(v)) => Some(v),
            _ => None,
        }
    }

    pub fn mentions(&self, p: Param) -> bool {
        self.fixed.contains_key(&p) || self.axes.iter().any(|a| a.param == p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_grammar() {
        let s = parse(
            "# curves\naxis.P = 0.1, 1000, 5, log\n\nfixed.a1 = 0\nfixed.a2 = 8 # tail\nselect = inner2_closed, gap2\n",
        )
        .unwrap();
        assert_eq!(s.axes.len(), 1);
        assert_eq!(s.axes[0].spacing, Spacing::Log);
        assert_eq!(s.fixed[&Param::A2], Fixed::Scalar(8.0));
        assert_eq!(s.select, ["inner2_closed", "gap2"]);
        let cells = s.cells();
        assert_eq!(cells.len(), 5);
        assert_eq!(cells[0][&Param::Power], 0.1);
        assert_eq!(cells[4][&Param::Power], 1000.0);
    }

    #[test]
    fn axis_major_order() {
        let s = parse("axis.P = 1,2,2,lin\naxis.a2 = 3,4,2,lin\n").unwrap();
        let order: Vec<(f64, f64)> = s.cells().iter().map(|c| (c[&Param::Power], c[&Param::A2])).collect();
        assert_eq!(order, [(1.0, 3.0), (1.0, 4.0), (2.0, 3.0), (2.0, 4.0)]);
    }

    #[test]
    fn fading_list_is_fixed() {
        let s = parse("fixed.fading = 0, 16, 4096\naxis.P = 255,255,1,lin").unwrap();
        assert_eq!(s.fading_list(), Some(&[0.0, 16.0, 4096.0][..]));
    }

    #[test]
    fn reports_line_numbers() {
        let cases = [
            ("fixed.a1 = 0\nfixed.q = 1\n", 2),
            ("\n\naxis.P = 1,2,0,lin\n", 3),
            ("axis.P = 2,1,3,lin\n", 1),
            ("axis.P = 0,1,3,log\n", 1),
            ("axis.P = 1,2,3,cubic\n", 1),
            ("fixed.P = 1\naxis.P = 1,2,2,lin\n", 2),
            ("just words\n", 1),
            ("fixed.a2 = x\n", 1),
            ("bogus.a2 = 1\n", 1),
            ("axis.fading = 1,2,2,lin\n", 1),
        ];
        for (text, line) in cases {
            let e = parse(text).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
        }
    }
}
