//! Subexponential sequences `c_n` and their regularization.
//!
//! [`regularize`] produces `s_n ≥ c_n` with `s_n` nondecreasing and
//! `t_n = (ln s_n)/n` nonincreasing, via the running sup `u_n`, the rates
//! `α_n = (ln u_n)/n`, their tail sups `α*_n` and `s_n = sup_{k≤n} exp(k α*_k)`.
//!
//! Every `s_n` is recorded symbolically as `c_i^(k/j)` (the indices that
//! attain the three sups), so it can be re-evaluated exactly at any precision.
//! When the input is already regular this gives `s_n = c_n` bit for bit.

use std::cmp::Ordering;

use rug::{Float, Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ExactReal;

/// Precision used for the sup selections and for `α`, `t`.
pub const WORK_BITS: u32 = 128;

/// Minimum extension horizon for the tail sup `α*_n`.
pub const MIN_HORIZON: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    /// The table is the whole known sequence.
    #[default]
    None,
    /// `c_n` equals the last entry for every `n` past the table.
    RepeatLast,
}

/// A sequence `c_n`, `n ≥ 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum SequenceSpec {
    /// `c_n = c`.
    Constant { c: ExactReal },
    /// `c_n = a · n^p`.
    Power { a: ExactReal, p: ExactReal },
    /// `c_n = a + b · ln n`.
    Logarithmic { a: ExactReal, b: ExactReal },
    /// `c_n = values[n-1]`, continued by `extension`.
    Table {
        values: Vec<ExactReal>,
        #[serde(default)]
        extension: Extension,
    },
}

fn ge_one(x: &ExactReal, what: &str) -> Result<()> {
    if x.eval(WORK_BITS) < 1 {
        return Err(Error::InvalidInput(format!("{what} = {x} must be >= 1")));
    }
    Ok(())
}

fn ge_zero(x: &ExactReal, what: &str) -> Result<()> {
    if x.eval(WORK_BITS) < 0 {
        return Err(Error::InvalidInput(format!("{what} = {x} must be >= 0")));
    }
    Ok(())
}

impl SequenceSpec {
    pub fn constant(c: &str) -> Result<Self> {
        Ok(SequenceSpec::Constant { c: ExactReal::parse(c)? })
    }

    pub fn power(a: &str, p: &str) -> Result<Self> {
        Ok(SequenceSpec::Power { a: ExactReal::parse(a)?, p: ExactReal::parse(p)? })
    }

    pub fn logarithmic(a: &str, b: &str) -> Result<Self> {
        Ok(SequenceSpec::Logarithmic { a: ExactReal::parse(a)?, b: ExactReal::parse(b)? })
    }

    pub fn table(values: &[&str], extension: Extension) -> Result<Self> {
        let values = values.iter().map(|v| ExactReal::parse(v)).collect::<Result<_>>()?;
        Ok(SequenceSpec::Table { values, extension })
    }

    /// Checks `c_n ≥ 1` for the whole sequence.
    pub fn validate(&self) -> Result<()> {
        match self {
            SequenceSpec::Constant { c } => ge_one(c, "c"),
            SequenceSpec::Power { a, p } => {
                ge_one(a, "a")?;
                ge_zero(p, "p")
            }
            SequenceSpec::Logarithmic { a, b } => {
                ge_one(a, "a")?;
                ge_zero(b, "b")
            }
            SequenceSpec::Table { values, .. } => {
                if values.is_empty() {
                    return Err(Error::InvalidInput("empty sequence table".into()));
                }
                values.iter().try_for_each(|v| ge_one(v, "table entry"))
            }
        }
    }

    /// `c_n` rounded to `prec` bits.
    pub fn evaluate(&self, n: u128, prec: u32) -> Result<Float> {
        assert!(n >= 1, "sequences are indexed from 1");
        let w = prec + 32;
        let v = match self {
            SequenceSpec::Constant { c } => c.eval(w),
            SequenceSpec::Power { a, p } => {
                let pow = (Float::with_val(w, n).ln() * p.eval(w)).exp();
                a.eval(w) * pow
            }
            SequenceSpec::Logarithmic { a, b } => a.eval(w) + b.eval(w) * Float::with_val(w, n).ln(),
            SequenceSpec::Table { .. } => self.table_entry(n)?.eval(w),
        };
        Ok(Float::with_val(prec, v))
    }

    /// `ln c_n` rounded to `prec` bits.
    pub fn ln_value(&self, n: u128, prec: u32) -> Result<Float> {
        assert!(n >= 1, "sequences are indexed from 1");
        let w = prec + 32;
        let v = match self {
            SequenceSpec::Constant { c } => c.ln(w),
            SequenceSpec::Power { a, p } => a.ln(w) + p.eval(w) * Float::with_val(w, n).ln(),
            SequenceSpec::Logarithmic { .. } => self.evaluate(n, w)?.ln(),
            SequenceSpec::Table { .. } => self.table_entry(n)?.ln(w),
        };
        Ok(Float::with_val(prec, v))
    }

    fn table_entry(&self, n: u128) -> Result<&ExactReal> {
        let SequenceSpec::Table { values, extension } = self else { unreachable!() };
        let idx = usize::try_from(n - 1).unwrap_or(usize::MAX);
        match values.get(idx) {
            Some(v) => Ok(v),
            None if *extension == Extension::RepeatLast => Ok(values.last().expect("validated table")),
            None => Err(Error::TableExhausted { n }),
        }
    }

    /// Index from which `c_n` is nondecreasing and `(ln u_n)/n` is
    /// nonincreasing, known from the closed form. `None` for finite tables.
    pub fn settled_from(&self) -> Option<u64> {
        match self {
            SequenceSpec::Constant { .. } => Some(1),
            SequenceSpec::Power { a, p } => {
                // d/dx (ln a + p ln x)/x <= 0  iff  x >= exp(1 - ln a / p)
                let p = p.eval(WORK_BITS);
                if p.is_zero() {
                    return Some(1);
                }
                let x = (Float::with_val(WORK_BITS, 1) - a.ln(WORK_BITS) / p).exp().ceil();
                Some(x.to_f64().max(1.0) as u64)
            }
            SequenceSpec::Logarithmic { b, .. } => {
                // with c(x) = a + b ln x the rate ln c / x decreases once c ln c >= b
                let b = b.eval(WORK_BITS);
                let cond = |n: u64| {
                    let c = self.evaluate(n as u128, WORK_BITS).expect("closed form");
                    Float::with_val(WORK_BITS, c.ln_ref()) * &c >= b
                };
                if cond(1) {
                    return Some(1);
                }
                let mut hi = 2u64;
                while !cond(hi) {
                    hi = hi.checked_mul(2)?;
                }
                let mut lo = hi / 2;
                while hi - lo > 1 {
                    let mid = lo + (hi - lo) / 2;
                    if cond(mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(hi)
            }
            SequenceSpec::Table { values, extension } => match extension {
                Extension::RepeatLast => Some(values.len() as u64),
                Extension::None => None,
            },
        }
    }

    fn known_len(&self) -> Option<u64> {
        match self {
            SequenceSpec::Table { values, extension: Extension::None } => Some(values.len() as u64),
            _ => None,
        }
    }
}

/// Outcome of [`check_regular`]: first violating index per condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub checked_up_to: u64,
    /// `c_n ≥ e`.
    pub at_least_e: Option<u64>,
    /// `c_n` nondecreasing.
    pub monotone: Option<u64>,
    /// `(ln c_n)/n` nonincreasing.
    pub rate_decreasing: Option<u64>,
}

impl RegularityReport {
    pub fn passes(&self) -> bool {
        self.at_least_e.is_none() && self.monotone.is_none() && self.rate_decreasing.is_none()
    }
}

/// Scans `c_1..c_N` for the three regularity conditions.
pub fn check_regular(spec: &SequenceSpec, n_max: u64) -> Result<RegularityReport> {
    if n_max < 2 {
        return Err(Error::InvalidInput("regularity check needs N >= 2".into()));
    }
    let mut report =
        RegularityReport { checked_up_to: n_max, at_least_e: None, monotone: None, rate_decreasing: None };
    let mut prev_ln: Option<Float> = None;
    let mut prev_rate: Option<Float> = None;
    for n in 1..=n_max {
        let ln_c = spec.ln_value(n as u128, WORK_BITS)?;
        if report.at_least_e.is_none() && ln_c < 1 {
            report.at_least_e = Some(n);
        }
        let rate = Float::with_val(WORK_BITS, &ln_c / n);
        if let (Some(pl), Some(pr)) = (&prev_ln, &prev_rate) {
            if report.monotone.is_none() && ln_c < *pl {
                report.monotone = Some(n);
            }
            if report.rate_decreasing.is_none() && rate > *pr {
                report.rate_decreasing = Some(n);
            }
        }
        prev_ln = Some(ln_c);
        prev_rate = Some(rate);
    }
    Ok(report)
}

/// `s_n = c_base^(num/den)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerRep {
    pub base: u128,
    pub num: u128,
    pub den: u128,
}

impl PowerRep {
    fn new(base: u128, num: u128, den: u128) -> Self {
        let g = Integer::from(num).gcd(&Integer::from(den));
        let g = g.to_u128().expect("gcd fits");
        PowerRep { base, num: num / g, den: den / g }
    }

    fn exponent(&self) -> Rational {
        Rational::from((Integer::from(self.num), Integer::from(self.den)))
    }
}

#[derive(Clone, Debug)]
struct Entry {
    rep: PowerRep,
    ln_s: Float,
}

/// The regularized sequence `s_n` with its cached prefix.
#[derive(Clone, Debug)]
pub struct RegularizedSequence {
    source: SequenceSpec,
    entries: Vec<Entry>,
    /// Past the prefix, `s_n = max(s_N, c_n)` (valid for settled sources).
    extends: bool,
    horizon: u64,
}

/// Builds `s_1..s_N` (and possibly a longer prefix needed for certification).
pub fn regularize(spec: &SequenceSpec, n_max: u64) -> Result<RegularizedSequence> {
    spec.validate()?;
    if n_max < 1 {
        return Err(Error::InvalidInput("regularize needs N >= 1".into()));
    }
    let settled = spec.settled_from();
    let (cached, horizon) = match (settled, spec.known_len()) {
        (Some(k), _) => {
            let cached = n_max.max(k);
            (cached, (4 * cached).max(MIN_HORIZON))
        }
        (None, Some(len)) => {
            if n_max > len {
                return Err(Error::TableExhausted { n: n_max as u128 + 1 });
            }
            (n_max, len)
        }
        (None, None) => unreachable!("only finite tables lack a settling index"),
    };

    let w = WORK_BITS;
    let ln_c: Vec<Float> = (1..=horizon).map(|k| spec.ln_value(k as u128, w)).collect::<Result<_>>()?;

    // running sup u_k, ties resolved to the latest index
    let mut u_idx = Vec::with_capacity(horizon as usize);
    let mut best = 0usize;
    for k in 0..horizon as usize {
        if ln_c[k] >= ln_c[best] {
            best = k;
        }
        u_idx.push(best);
    }
    let alpha: Vec<Float> =
        (0..horizon as usize).map(|k| Float::with_val(w, &ln_c[u_idx[k]] / (k as u64 + 1))).collect();

    // tail sup α*_k over [k, horizon], ties resolved to the smallest index
    let mut star = vec![0usize; horizon as usize];
    let mut arg = horizon as usize - 1;
    for k in (0..horizon as usize).rev() {
        if alpha[k] >= alpha[arg] {
            arg = k;
        }
        star[k] = arg;
    }
    if settled.is_some() {
        if let Some(k) = (0..cached as usize).find(|&k| star[k] as u64 + 1 > horizon / 2) {
            return Err(Error::HorizonExhausted { n: k as u64 + 1, horizon });
        }
    }

    // s_n = sup_{k<=n} exp(k α*_k), ties resolved to the latest k
    let mut entries: Vec<Entry> = Vec::with_capacity(cached as usize);
    let mut best: Option<(Float, PowerRep)> = None;
    for (k, &j) in star.iter().enumerate().take(cached as usize) {
        let rep = PowerRep::new(u_idx[j] as u128 + 1, k as u128 + 1, j as u128 + 1);
        let cand = if rep.num == rep.den {
            ln_c[u_idx[j]].clone()
        } else {
            Float::with_val(w, &ln_c[u_idx[j]] * rep.exponent())
        };
        match &best {
            Some((b, _)) if cand < *b => {}
            _ => best = Some((cand, rep)),
        }
        let (ln_s, rep) = best.clone().expect("set above");
        entries.push(Entry { rep, ln_s });
    }

    Ok(RegularizedSequence { source: spec.clone(), entries, extends: settled.is_some(), horizon })
}

impl RegularizedSequence {
    pub fn source(&self) -> &SequenceSpec {
        &self.source
    }

    /// Length of the cached prefix.
    pub fn cached_len(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// True when only the finite prefix is certified (table without
    /// extension rule): `α*_n` is a sup over the table, not the full tail.
    pub fn prefix_certified_only(&self) -> bool {
        !self.extends
    }

    pub fn rep(&self, n: u128) -> Result<PowerRep> {
        assert!(n >= 1, "sequences are indexed from 1");
        let len = self.entries.len() as u128;
        if n <= len {
            return Ok(self.entries[(n - 1) as usize].rep);
        }
        if !self.extends {
            return Err(Error::TableExhausted { n });
        }
        let last = &self.entries[(len - 1) as usize];
        let ln_c = self.source.ln_value(n, WORK_BITS)?;
        Ok(if ln_c >= last.ln_s { PowerRep::new(n, 1, 1) } else { last.rep })
    }

    /// `ln s_n` at working precision, as used for the sup selections.
    pub fn ln_s_work(&self, n: u128) -> Result<Float> {
        let len = self.entries.len() as u128;
        if n >= 1 && n <= len {
            return Ok(self.entries[(n - 1) as usize].ln_s.clone());
        }
        self.ln_value(n, WORK_BITS)
    }

    /// `ln s_n` evaluated from its symbolic form at `prec` bits.
    pub fn ln_value(&self, n: u128, prec: u32) -> Result<Float> {
        let rep = self.rep(n)?;
        let ln_base = self.source.ln_value(rep.base, prec + 16)?;
        let v = if rep.num == rep.den { ln_base } else { ln_base * rep.exponent() };
        Ok(Float::with_val(prec, v))
    }

    pub fn value(&self, n: u128, prec: u32) -> Result<Float> {
        Ok(Float::with_val(prec, self.ln_value(n, prec + 16)?.exp()))
    }

    /// `t_n = (ln s_n)/n`, rounded once from `ln c_base · num/(den·n)` so
    /// that runs with equal exact `t` give equal floats.
    pub fn tail_decay(&self, n: u128) -> Result<Float> {
        let rep = self.rep(n)?;
        let q = Rational::from((Integer::from(rep.num), Integer::from(rep.den) * Integer::from(n)));
        Ok(Float::with_val(WORK_BITS, self.source.ln_value(rep.base, WORK_BITS)? * q))
    }

    /// The cached prefix as a finite table (for idempotence checks).
    pub fn to_table(&self, prec: u32) -> Result<SequenceSpec> {
        let values = (1..=self.cached_len() as u128)
            .map(|n| self.value(n, prec).map(ExactReal::from_float))
            .collect::<Result<_>>()?;
        Ok(SequenceSpec::Table { values, extension: Extension::None })
    }
}

/// Compares two positive reals given by their logs; used by callers that
/// need `c_{2^{n+1}} ≤ c_{2^n}^2`-style checks.
pub fn cmp_ln(a: &Float, b: &Float) -> Ordering {
    a.partial_cmp(b).unwrap_or(Ordering::Equal)
}
