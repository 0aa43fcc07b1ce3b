//! Signed log-domain scalars and the precision policy.
//!
//! A [`LogScalar`] stores `sign · exp(logmag)` with `logmag` an MPFR float, so
//! quantities such as `r_s ≈ 6^{-(2^s - 1)}` or `exp(2^s g)` never under- or
//! overflow. Addition is a signed log-sum-exp carried out with extra guard bits
//! and reports when the result lost more than half of the working precision
//! to cancellation.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Special;
use rug::{Float, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Largest precision any computation is allowed to escalate to.
pub const MAX_BITS: u32 = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of(x: &Float) -> Sign {
        match x.cmp0() {
            Some(Ordering::Less) => Sign::Neg,
            Some(Ordering::Greater) => Sign::Pos,
            _ => Sign::Zero,
        }
    }

    pub fn as_i32(self) -> i32 {
        match self {
            Sign::Neg => -1,
            Sign::Zero => 0,
            Sign::Pos => 1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
            Sign::Pos => Sign::Neg,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        match self.as_i32() * other.as_i32() {
            1 => Sign::Pos,
            -1 => Sign::Neg,
            _ => Sign::Zero,
        }
    }
}

/// A real number as `sign · exp(logmag)`.
///
/// The precision of a scalar is the precision of its `logmag`. Zero carries
/// `logmag = -∞`.
#[derive(Clone, Debug)]
pub struct LogScalar {
    sign: Sign,
    logmag: Float,
}

/// Result of a checked addition.
#[derive(Clone, Debug)]
pub struct Sum {
    pub value: LogScalar,
    /// Set when `|a + b| < 2^(-prec/2) · max(|a|, |b|)`.
    pub cancellation: bool,
}

impl LogScalar {
    pub fn zero(prec: u32) -> Self {
        LogScalar { sign: Sign::Zero, logmag: Float::with_val(prec, Special::NegInfinity) }
    }

    pub fn one(prec: u32) -> Self {
        LogScalar { sign: Sign::Pos, logmag: Float::new(prec) }
    }

    /// Builds `sign · exp(logmag)`. A zero sign forces the zero scalar.
    pub fn from_parts(sign: Sign, logmag: Float) -> Self {
        if sign == Sign::Zero || logmag.is_infinite() && logmag.is_sign_negative() {
            return LogScalar::zero(logmag.prec());
        }
        LogScalar { sign, logmag }
    }

    /// Positive scalar with the given natural log.
    pub fn from_ln(logmag: Float) -> Self {
        LogScalar::from_parts(Sign::Pos, logmag)
    }

    /// Converts a float, keeping its precision.
    pub fn from_float(x: &Float) -> Self {
        Self::from_float_prec(x, x.prec())
    }

    pub fn from_float_prec(x: &Float, prec: u32) -> Self {
        let sign = Sign::of(x);
        if sign == Sign::Zero {
            return LogScalar::zero(prec);
        }
        let a = Float::with_val(prec + 16, x.abs_ref());
        LogScalar { sign, logmag: Float::with_val(prec, a.ln()) }
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == Sign::Zero
    }

    /// `ln |x|`; `-∞` for zero.
    pub fn ln_abs(&self) -> &Float {
        &self.logmag
    }

    pub fn precision(&self) -> u32 {
        self.logmag.prec()
    }

    pub fn with_precision(&self, prec: u32) -> Self {
        LogScalar { sign: self.sign, logmag: Float::with_val(prec, &self.logmag) }
    }

    /// `sign · exp(logmag)` rounded to `prec` bits.
    pub fn to_float(&self, prec: u32) -> Float {
        if self.is_zero() {
            return Float::new(prec);
        }
        let m = Float::with_val(prec + 16, &self.logmag).exp();
        let v = Float::with_val(prec, m);
        if self.sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.to_float(64).to_f64()
    }

    pub fn neg(&self) -> Self {
        LogScalar { sign: self.sign.flip(), logmag: self.logmag.clone() }
    }

    pub fn abs(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        LogScalar { sign: Sign::Pos, logmag: self.logmag.clone() }
    }

    pub fn mul(&self, other: &LogScalar) -> LogScalar {
        let prec = self.precision().max(other.precision());
        if self.is_zero() || other.is_zero() {
            return LogScalar::zero(prec);
        }
        let logmag = Float::with_val(prec, &self.logmag + &other.logmag);
        LogScalar { sign: self.sign.times(other.sign), logmag }
    }

    /// `1/x`, or `None` for zero.
    pub fn recip(&self) -> Option<LogScalar> {
        if self.is_zero() {
            return None;
        }
        Some(LogScalar { sign: self.sign, logmag: -self.logmag.clone() })
    }

    pub fn div(&self, other: &LogScalar) -> Option<LogScalar> {
        other.recip().map(|r| self.mul(&r))
    }

    /// Multiplies by `exp(k)`.
    pub fn scale_exp(&self, k: &Float) -> LogScalar {
        if self.is_zero() {
            return self.clone();
        }
        let prec = self.precision();
        LogScalar { sign: self.sign, logmag: Float::with_val(prec, &self.logmag + k) }
    }

    /// `|x|^p · sign` for positive `x`; `None` when `x` is not positive.
    pub fn powf(&self, p: &Float) -> Option<LogScalar> {
        if self.sign != Sign::Pos {
            return None;
        }
        let prec = self.precision();
        Some(LogScalar { sign: Sign::Pos, logmag: Float::with_val(prec, &self.logmag * p) })
    }

    /// Checked signed log-sum-exp.
    pub fn add_checked(&self, other: &LogScalar) -> Sum {
        let prec = self.precision().max(other.precision());
        if other.is_zero() {
            return Sum { value: self.with_precision(prec), cancellation: false };
        }
        if self.is_zero() {
            return Sum { value: other.with_precision(prec), cancellation: false };
        }
        let (big, small) = if self.logmag >= other.logmag { (self, other) } else { (other, self) };
        let q = prec + prec / 2 + 32;
        let d = Float::with_val(q, &small.logmag - &big.logmag);
        if big.sign == small.sign {
            let corr = d.exp().ln_1p();
            let logmag = Float::with_val(prec, &big.logmag + &corr);
            return Sum { value: LogScalar { sign: big.sign, logmag }, cancellation: false };
        }
        if d.is_zero() {
            return Sum { value: LogScalar::zero(prec), cancellation: false };
        }
        let corr = (-d.exp()).ln_1p();
        let threshold = -Float::with_val(64, rug::float::Constant::Log2) * (prec / 2);
        let cancellation = corr < threshold;
        let logmag = Float::with_val(prec, &big.logmag + &corr);
        Sum { value: LogScalar { sign: big.sign, logmag }, cancellation }
    }

    pub fn add(&self, other: &LogScalar) -> LogScalar {
        self.add_checked(other).value
    }

    pub fn sub(&self, other: &LogScalar) -> LogScalar {
        self.add(&other.neg())
    }

    /// Total order consistent with the real values.
    pub fn total_cmp(&self, other: &LogScalar) -> Ordering {
        let (sa, sb) = (self.sign.as_i32(), other.sign.as_i32());
        if sa != sb {
            return sa.cmp(&sb);
        }
        match self.sign {
            Sign::Zero => Ordering::Equal,
            Sign::Pos => self.logmag.total_cmp(&other.logmag),
            Sign::Neg => other.logmag.total_cmp(&self.logmag),
        }
    }
}

impl PartialEq for LogScalar {
    fn eq(&self, other: &Self) -> bool {
        self.total_cmp(other) == Ordering::Equal
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.total_cmp(other))
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.sign {
            Sign::Neg => "-",
            Sign::Zero => return f.write_str("0"),
            Sign::Pos => "+",
        };
        write!(f, "{s}exp({})", self.logmag.to_string_radix(10, Some(20)))
    }
}

/// Working precision as a function of the level index.
///
/// `bits(s) = base_bits + ceil(slope_bits_per_node · 2^s)` governs endpoint
/// geometry and polynomial evaluation at level `s`. Scalar closed forms
/// (`ln r_s`, capacities, Widom factors) use [`PrecisionPolicy::scalar_bits`],
/// which grows only linearly in `s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub base_bits: u32,
    #[serde(serialize_with = "ser_rational", deserialize_with = "de_rational")]
    pub slope_bits_per_node: Rational,
    /// Number of precision doublings tried after a flagged cancellation.
    #[serde(default = "default_escalations")]
    pub max_escalations: u32,
}

fn default_escalations() -> u32 {
    2
}

fn ser_rational<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&q.to_string())
}

fn de_rational<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
    let e = crate::expr::ExactReal::deserialize(d)?;
    e.as_rational().ok_or_else(|| serde::de::Error::custom("slope must be rational"))
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { base_bits: 256, slope_bits_per_node: Rational::from(4), max_escalations: 2 }
    }
}

impl PrecisionPolicy {
    pub fn new(base_bits: u32, slope_bits_per_node: Rational) -> Self {
        PrecisionPolicy { base_bits, slope_bits_per_node, max_escalations: 2 }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if self.base_bits < 64 {
            return Err(crate::Error::InvalidInput(format!("base_bits {} < 64", self.base_bits)));
        }
        if self.slope_bits_per_node < 0 {
            return Err(crate::Error::InvalidInput("slope_bits_per_node must be >= 0".into()));
        }
        Ok(())
    }

    pub fn bits(&self, s: u32) -> u32 {
        let extra = (self.slope_bits_per_node.clone() * (rug::Integer::from(1) << s)).ceil();
        let extra = extra.numer().to_u32().unwrap_or(MAX_BITS);
        self.base_bits.saturating_add(extra).min(MAX_BITS)
    }

    pub fn scalar_bits(&self, s: u32) -> u32 {
        (self.base_bits + 64).saturating_add(s).min(MAX_BITS)
    }

    /// Ceiling for cancellation-driven escalation at level `s`.
    pub fn ceiling_bits(&self, s: u32) -> u32 {
        self.bits(s).saturating_mul(1 << self.max_escalations.min(8)).min(MAX_BITS)
    }
}
