//! Base angles of the micro-geometry and exactly-representable angle inputs.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a [`BaseAngle`] was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum BaseForm {
    /// α = mπ/n with gcd(m, n) = 1.
    Rational { m: i64, n: i64 },
    /// α given in radians; treated as an irrational multiple of π.
    Real,
}

/// The base angle α of the triangular wall irregularity, 0 < α < π/6.
///
/// Caches the quantities every probability evaluation needs, including the
/// six piece boundaries α, 2α, 3α, π−3α, π−2α, π−α.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "BaseAngleRepr", try_from = "BaseAngleRepr")]
pub struct BaseAngle {
    form: BaseForm,
    value: f64,
    cos: f64,
    breakpoints: [f64; 6],
}

#[derive(Serialize, Deserialize)]
struct BaseAngleRepr {
    #[serde(flatten)]
    form: BaseForm,
    value: f64,
}

impl From<BaseAngle> for BaseAngleRepr {
    fn from(a: BaseAngle) -> Self {
        BaseAngleRepr {
            form: a.form,
            value: a.value,
        }
    }
}

impl TryFrom<BaseAngleRepr> for BaseAngle {
    type Error = Error;

    fn try_from(r: BaseAngleRepr) -> Result<Self> {
        match r.form {
            BaseForm::Rational { m, n } => BaseAngle::rational(m, n),
            BaseForm::Real => BaseAngle::real(r.value),
        }
    }
}

impl BaseAngle {
    /// α = mπ/n. The fraction must already be in lowest terms and satisfy 6m < n.
    pub fn rational(m: i64, n: i64) -> Result<Self> {
        if m <= 0 || n <= 0 {
            return Err(Error::InvalidBaseAngle(format!(
                "{m}/{n}: numerator and denominator must be positive"
            )));
        }
        if m.gcd(&n) != 1 {
            return Err(Error::InvalidBaseAngle(format!(
                "{m}/{n} is not in lowest terms"
            )));
        }
        if 6 * m >= n {
            let shown = if m == 1 { format!("π/{n}") } else { format!("{m}π/{n}") };
            return Err(Error::InvalidBaseAngle(format!(
                "α = {shown} violates α < π/6 (need 6m < n)"
            )));
        }
        let value = m as f64 * PI / n as f64;
        Ok(Self::build(BaseForm::Rational { m, n }, value))
    }

    /// α in radians, 0 < α < π/6.
    pub fn real(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0 && value < PI / 6.0) {
            return Err(Error::InvalidBaseAngle(format!(
                "α = {value} rad violates 0 < α < π/6 ≈ {:.6}",
                PI / 6.0
            )));
        }
        Ok(Self::build(BaseForm::Real, value))
    }

    fn build(form: BaseForm, value: f64) -> Self {
        let a1 = value;
        let a2 = 2.0 * value;
        let a3 = 3.0 * value;
        BaseAngle {
            form,
            value,
            cos: value.cos(),
            breakpoints: [a1, a2, a3, PI - a3, PI - a2, PI - a1],
        }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn form(&self) -> BaseForm {
        self.form
    }

    /// `(m, n)` when α = mπ/n.
    pub fn as_rational(&self) -> Option<(i64, i64)> {
        match self.form {
            BaseForm::Rational { m, n } => Some((m, n)),
            BaseForm::Real => None,
        }
    }

    /// α/π as an exact fraction, when available.
    pub fn pi_ratio(&self) -> Option<Ratio<i64>> {
        self.as_rational().map(|(m, n)| Ratio::new(m, n))
    }

    pub fn is_rational(&self) -> bool {
        self.as_rational().is_some()
    }

    pub(crate) fn cos(&self) -> f64 {
        self.cos
    }

    /// `[α, 2α, 3α, π−3α, π−2α, π−α]`, the boundaries of the probability pieces.
    pub fn breakpoints(&self) -> [f64; 6] {
        self.breakpoints
    }
}

impl fmt::Display for BaseAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.form {
            BaseForm::Rational { m: 1, n } => write!(f, "π/{n}"),
            BaseForm::Rational { m, n } => write!(f, "{m}π/{n}"),
            BaseForm::Real => write!(f, "{}", self.value),
        }
    }
}

/// Parses `m/n` or `pi/n`, `mpi/n`, `m*pi/n` as α = mπ/n, and a plain decimal
/// as radians.
impl FromStr for BaseAngle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.contains('/') || t.to_ascii_lowercase().contains("pi") {
            let ratio = if t.to_ascii_lowercase().contains("pi") {
                parse_pi_ratio(t)?
            } else {
                parse_fraction(t)?
            };
            // Ratio::new reduces, so "2/14" is accepted as π/7.
            BaseAngle::rational(*ratio.numer(), *ratio.denom())
        } else {
            let v: f64 = t
                .parse()
                .map_err(|_| Error::InvalidBaseAngle(format!("cannot parse {t:?}")))?;
            BaseAngle::real(v)
        }
    }
}

/// An angle given exactly as a rational multiple of π, or as a float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleSpec {
    PiRatio(Ratio<i64>),
    Radians(f64),
}

impl AngleSpec {
    pub fn radians(&self) -> f64 {
        match *self {
            AngleSpec::PiRatio(r) => *r.numer() as f64 * PI / *r.denom() as f64,
            AngleSpec::Radians(v) => v,
        }
    }

    pub fn pi_ratio(&self) -> Option<Ratio<i64>> {
        match *self {
            AngleSpec::PiRatio(r) => Some(r),
            AngleSpec::Radians(_) => None,
        }
    }
}

impl From<f64> for AngleSpec {
    fn from(v: f64) -> Self {
        AngleSpec::Radians(v)
    }
}

impl From<Ratio<i64>> for AngleSpec {
    fn from(r: Ratio<i64>) -> Self {
        AngleSpec::PiRatio(r)
    }
}

impl fmt::Display for AngleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AngleSpec::PiRatio(r) if *r.numer() == 1 => write!(f, "pi/{}", r.denom()),
            AngleSpec::PiRatio(r) => write!(f, "{}pi/{}", r.numer(), r.denom()),
            AngleSpec::Radians(v) => write!(f, "{v}"),
        }
    }
}

/// Accepts `pi`, `pi/20`, `3pi/14`, `3*pi/14`, `0.157`.
impl FromStr for AngleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.to_ascii_lowercase().contains("pi") {
            parse_pi_ratio(t).map(AngleSpec::PiRatio)
        } else {
            t.parse::<f64>()
                .map(AngleSpec::Radians)
                .map_err(|_| Error::Precondition(format!("cannot parse angle {t:?}")))
        }
    }
}

fn parse_fraction(t: &str) -> Result<Ratio<i64>> {
    let bad = || Error::InvalidBaseAngle(format!("malformed rational {t:?}, expected m/n"));
    let (a, b) = t.split_once('/').ok_or_else(bad)?;
    let m: i64 = a.trim().parse().map_err(|_| bad())?;
    let n: i64 = b.trim().parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(m, n))
}

fn parse_pi_ratio(t: &str) -> Result<Ratio<i64>> {
    let bad = || Error::Precondition(format!("malformed π expression {t:?}"));
    let lower = t.to_ascii_lowercase().replace(' ', "");
    let (num, den) = match lower.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<i64>().map_err(|_| bad())?),
        None => (lower.clone(), 1),
    };
    let coeff = num
        .strip_suffix("pi")
        .ok_or_else(bad)?
        .trim_end_matches('*');
    let m: i64 = match coeff {
        "" => 1,
        "-" => -1,
        c => c.parse().map_err(|_| bad())?,
    };
    if den == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(m, den))
}
