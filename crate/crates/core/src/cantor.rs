//! The sets `K(γ)`: the recursion `r_s = γ_s r_{s-1}²`, the polynomials
//! `P_{2^s}`, `T_{2^s}`, the level sets `E_s` and their capacities.
//!
//! Internally everything is expressed through the normalized map
//! `F_s = (2/r_s) P_{2^s} + 1`, which satisfies `F_0(x) = 2x - 1` and
//! `F_s = 1 + (F_{s-1}² - 1)/(2γ_s)`. Writing `D = F - 1`, `E = F + 1` the
//! forward step is the product `D_s = D_{s-1} E_{s-1} / (2γ_s)`, and the
//! backward step is `u_{s-1} = ±sqrt(1 + 2γ_s (u_s - 1))`.

use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use rug::float::Constant;
use rug::ops::NegAssign;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::ExactReal;
use crate::numerics::{LogScalar, PrecisionPolicy};
use crate::sequences::{regularize, RegularizedSequence, SequenceSpec};

/// Hard ceiling on the level index of a model.
pub const S_CEILING: u32 = 16;

/// What is known about `γ_n` past an explicit list of `L` values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TailCertificate {
    /// `γ_n = value` for all `n > L`.
    Constant { value: ExactReal },
    /// `γ_n ≥ gamma_min` for all `n > L`.
    LowerBound { gamma_min: ExactReal },
    /// `|Σ_{n>L} 2^{-n} ln γ_n| ≤ bound`.
    Remainder { bound: ExactReal },
}

#[derive(Clone, Debug)]
pub enum GammaSource {
    Direct { values: Vec<ExactReal>, tail: Option<TailCertificate> },
    /// `γ_n = s_{2^{n+1}} / (6 s_{2^n}²)`.
    Derived(RegularizedSequence),
}

/// The parameter sequence `γ_1, γ_2, …`.
#[derive(Clone, Debug)]
pub struct Gamma {
    source: GammaSource,
    small: bool,
}

fn ln6(prec: u32) -> Float {
    Float::with_val(prec, 6).ln()
}

fn ln4(prec: u32) -> Float {
    Float::with_val(prec, Constant::Log2) * 2u32
}

impl Gamma {
    /// Direct values, checked against `0 < γ_n < 1/4`.
    pub fn direct(values: Vec<ExactReal>, tail: Option<TailCertificate>) -> Result<Self> {
        let quarter = Float::with_val(128, 0.25);
        let sixth = Float::with_val(128, 6).recip();
        let mut small = true;
        let mut check = |index: u64, v: &ExactReal| -> Result<()> {
            let x = v.eval(128);
            if x <= 0 || x >= quarter {
                return Err(Error::GammaOutOfRange { index, value: v.to_string() });
            }
            if x > sixth {
                small = false;
            }
            Ok(())
        };
        for (i, v) in values.iter().enumerate() {
            check(i as u64 + 1, v)?;
        }
        match &tail {
            Some(TailCertificate::Constant { value }) => check(values.len() as u64 + 1, value)?,
            Some(TailCertificate::LowerBound { gamma_min }) => {
                let g = gamma_min.eval(128);
                if g <= 0 || g >= quarter {
                    return Err(Error::InvalidInput(format!("gamma_min = {gamma_min} must lie in (0, 1/4)")));
                }
                small = false;
            }
            Some(TailCertificate::Remainder { bound }) => {
                if bound.eval(128) < 0 {
                    return Err(Error::InvalidInput(format!("remainder bound {bound} is negative")));
                }
                small = false;
            }
            None => small = false,
        }
        if values.is_empty() && !matches!(tail, Some(TailCertificate::Constant { .. })) {
            return Err(Error::InvalidInput("empty gamma list needs a constant tail".into()));
        }
        Ok(Gamma { source: GammaSource::Direct { values, tail }, small })
    }

    /// `γ ≡ value`.
    pub fn constant(value: &str) -> Result<Self> {
        Gamma::direct(Vec::new(), Some(TailCertificate::Constant { value: ExactReal::parse(value)? }))
    }

    pub fn derived(seq: RegularizedSequence) -> Self {
        // s_{2n} ≤ s_n² for regular s, so γ_n ≤ 1/6 throughout
        Gamma { source: GammaSource::Derived(seq), small: true }
    }

    pub fn source(&self) -> &GammaSource {
        &self.source
    }

    pub fn is_derived(&self) -> bool {
        matches!(self.source, GammaSource::Derived(_))
    }

    /// `γ_n ≤ 1/6` for every `n`.
    pub fn small_gamma(&self) -> bool {
        self.small
    }

    pub fn sequence(&self) -> Option<&RegularizedSequence> {
        match &self.source {
            GammaSource::Derived(seq) => Some(seq),
            GammaSource::Direct { .. } => None,
        }
    }

    /// Largest `n` for which `γ_n` is known, `None` if unbounded.
    pub fn defined_up_to(&self) -> Option<u64> {
        match &self.source {
            GammaSource::Direct { tail: Some(TailCertificate::Constant { .. }), .. } => None,
            GammaSource::Direct { values, .. } => Some(values.len() as u64),
            GammaSource::Derived(seq) if seq.prefix_certified_only() => {
                // needs s_{2^{n+1}} inside the prefix
                Some(u64::from(63 - seq.cached_len().leading_zeros()).saturating_sub(1))
            }
            GammaSource::Derived(_) => None,
        }
    }

    pub fn ln_gamma(&self, n: u64, prec: u32) -> Result<Float> {
        assert!(n >= 1, "gamma is indexed from 1");
        match &self.source {
            GammaSource::Direct { values, tail } => match values.get(n as usize - 1) {
                Some(v) => Ok(v.ln(prec)),
                None => match tail {
                    Some(TailCertificate::Constant { value }) => Ok(value.ln(prec)),
                    _ => Err(Error::GammaUndefined { index: n }),
                },
            },
            GammaSource::Derived(seq) => {
                if n > 120 {
                    return Err(Error::GammaUndefined { index: n });
                }
                let w = prec + 16;
                let hi = seq.ln_value(1u128 << (n + 1), w)?;
                let lo = seq.ln_value(1u128 << n, w)?;
                Ok(Float::with_val(prec, hi - ln6(w) - lo * 2u32))
            }
        }
    }

    pub fn gamma(&self, n: u64, prec: u32) -> Result<Float> {
        match &self.source {
            GammaSource::Direct { values, tail } => match values.get(n as usize - 1) {
                Some(v) => Ok(v.eval(prec)),
                None => match tail {
                    Some(TailCertificate::Constant { value }) => Ok(value.eval(prec)),
                    _ => Err(Error::GammaUndefined { index: n }),
                },
            },
            GammaSource::Derived(_) => Ok(Float::with_val(prec, self.ln_gamma(n, prec + 16)?.exp())),
        }
    }

    /// `Σ_{k>s} 2^{s-k} ln γ_k` as a midpoint and a radius.
    pub fn tail_sum(&self, s: u32, prec: u32) -> Result<(Float, Float)> {
        let w = prec + 32;
        let zero = Float::new(w);
        match &self.source {
            GammaSource::Derived(seq) => {
                if seq.prefix_certified_only() {
                    return Err(Error::MissingTailCertificate);
                }
                let v = -ln6(w) - seq.ln_value(1u128 << (s + 1), w)?;
                Ok((Float::with_val(prec, v), Float::new(prec)))
            }
            GammaSource::Direct { values, tail } => {
                let len = values.len() as u64;
                let mut acc = zero.clone();
                for k in (u64::from(s) + 1)..=len {
                    acc += values[k as usize - 1].ln(w) >> (k - u64::from(s)) as u32;
                }
                let shift = len.saturating_sub(u64::from(s)) as u32;
                let (mid, rad) = match tail {
                    Some(TailCertificate::Constant { value }) => (value.ln(w) >> shift, zero),
                    Some(TailCertificate::LowerBound { gamma_min }) => {
                        let lo = gamma_min.ln(w) >> shift;
                        let hi = -ln4(w) >> shift;
                        let mid = Float::with_val(w, &lo + &hi) / 2u32;
                        let rad = Float::with_val(w, &hi - &lo) / 2u32;
                        (mid, rad)
                    }
                    Some(TailCertificate::Remainder { bound }) => {
                        if u64::from(s) > len {
                            return Err(Error::GammaUndefined { index: len + 1 });
                        }
                        (zero, bound.eval(w) << s)
                    }
                    None => return Err(Error::MissingTailCertificate),
                };
                Ok((Float::with_val(prec, acc + mid), Float::with_val(prec, rad)))
            }
        }
    }
}

/// One approximant `E_s`.
#[derive(Clone, Debug)]
pub struct Level {
    pub s: u32,
    pub log_r: LogScalar,
    /// `2^{s+1}` sorted endpoints; interval `j` (from 1) is
    /// `[endpoints[2j-2], endpoints[2j-1]]`.
    pub endpoints: Vec<Float>,
    /// `ln Cap(E_s)` as a positive log-domain scalar.
    pub log_cap: LogScalar,
    pub bits: u32,
}

/// Where a real point sits relative to the intervals of a level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Position {
    Left,
    Right,
    /// Inside interval `j` (from 1), endpoints included.
    Inside(usize),
    /// Strictly between intervals `j` and `j + 1`.
    Gap(usize),
}

impl Level {
    pub fn interval_count(&self) -> usize {
        self.endpoints.len() / 2
    }

    pub fn interval(&self, j: usize) -> (&Float, &Float) {
        (&self.endpoints[2 * j - 2], &self.endpoints[2 * j - 1])
    }

    pub fn position(&self, x: &Float) -> Position {
        let first = &self.endpoints[0];
        let last = self.endpoints.last().expect("nonempty level");
        if x < first {
            return Position::Left;
        }
        if x > last {
            return Position::Right;
        }
        let below = self.endpoints.partition_point(|e| e < x);
        if below < self.endpoints.len() && self.endpoints[below] == *x {
            return Position::Inside(below / 2 + 1);
        }
        if below % 2 == 1 {
            Position::Inside(below / 2 + 1)
        } else {
            Position::Gap(below / 2)
        }
    }

    /// `Σ_j |I_{j,s}|`.
    pub fn total_length(&self) -> Float {
        let mut acc = Float::new(self.bits);
        for pair in self.endpoints.chunks(2) {
            acc += Float::with_val(self.bits, &pair[1] - &pair[0]);
        }
        acc
    }

    /// CSV rows `s,j,left,right`.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut out = String::from("s,j,left,right\n");
        for j in 1..=self.interval_count() {
            let (a, b) = self.interval(j);
            out.push_str(&format!("{},{},{},{}\n", self.s, j, decimal(a, digits), decimal(b, digits)));
        }
        out
    }
}

/// Decimal rendering with a fixed number of significant digits.
pub fn decimal(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".into();
    }
    x.to_string_radix(10, Some(digits.max(1)))
}

/// Significant decimal digits carried by `bits` binary digits, plus one.
pub fn digits_for(bits: u32) -> usize {
    (f64::from(bits) * std::f64::consts::LOG10_2).ceil() as usize + 1
}

/// A located complementary component of `K(γ)` on the real line.
#[derive(Clone, Debug, PartialEq)]
pub enum GapLocation {
    UnboundedLeft,
    UnboundedRight,
    /// `x0 ∈ E_{s0-1} \ E_{s0}`. `(alpha, beta)` are level-`s0` endpoints
    /// and points of `K(γ)`, so they are the exact ends of the gap.
    Bounded { s0: u32, alpha: Float, beta: Float, index: usize },
}

impl GapLocation {
    pub fn is_bounded(&self) -> bool {
        matches!(self, GapLocation::Bounded { .. })
    }

    /// First admissible level for dyadic residual polynomials.
    pub fn first_level(&self) -> u32 {
        match self {
            GapLocation::Bounded { s0, .. } => *s0,
            _ => 1,
        }
    }
}

/// `ln Cap(K(γ))` with an error radius.
#[derive(Clone, Debug)]
pub struct CapEstimate {
    pub log_cap: LogScalar,
    pub err: Float,
}

/// Result of evaluating `F_s` together with a first-order error bound.
#[derive(Clone, Debug)]
pub struct FValue {
    pub value: LogScalar,
    pub bits: u32,
}

#[derive(Debug)]
pub struct CantorModel {
    gamma: Gamma,
    policy: PrecisionPolicy,
    s_max: u32,
    levels: RwLock<BTreeMap<u32, Arc<Level>>>,
}

impl Clone for CantorModel {
    fn clone(&self) -> Self {
        let levels = self.levels.read().expect("level cache poisoned").clone();
        CantorModel { gamma: self.gamma.clone(), policy: self.policy.clone(), s_max: self.s_max, levels: RwLock::new(levels) }
    }
}

struct Forward {
    d: Float,
    err: Float,
}

impl CantorModel {
    pub fn new(gamma: Gamma, policy: PrecisionPolicy, s_max: u32) -> Result<Self> {
        policy.validate()?;
        if s_max > S_CEILING {
            return Err(Error::InvalidInput(format!("S_max = {s_max} exceeds the ceiling {S_CEILING}")));
        }
        if let Some(n) = gamma.defined_up_to() {
            if n < u64::from(s_max) {
                return Err(Error::GammaUndefined { index: n + 1 });
            }
        }
        Ok(CantorModel { gamma, policy, s_max, levels: RwLock::new(BTreeMap::new()) })
    }

    /// `γ` derived from the regularization of `spec`, with enough of the
    /// prefix cached for `S_max` and the first block past it.
    pub fn from_sequence(spec: &SequenceSpec, policy: PrecisionPolicy, s_max: u32) -> Result<Self> {
        let want = 1u64 << (s_max.min(S_CEILING) + 2);
        let n = match spec {
            SequenceSpec::Table { values, extension: crate::sequences::Extension::None } => {
                want.min(values.len() as u64)
            }
            _ => want,
        };
        let reg = regularize(spec, n)?;
        CantorModel::new(Gamma::derived(reg), policy, s_max)
    }

    pub fn constant_gamma(value: &str, policy: PrecisionPolicy, s_max: u32) -> Result<Self> {
        CantorModel::new(Gamma::constant(value)?, policy, s_max)
    }

    pub fn gamma(&self) -> &Gamma {
        &self.gamma
    }

    pub fn policy(&self) -> &PrecisionPolicy {
        &self.policy
    }

    pub fn s_max(&self) -> u32 {
        self.s_max
    }

    /// `ln r_s` at the scalar precision of level `s`.
    pub fn log_r(&self, s: u32) -> Result<LogScalar> {
        self.log_r_at(s, self.policy.scalar_bits(s))
    }

    /// `ln r_s = ln γ_s + 2 ln r_{s-1}`, `r_0 = 1`.
    pub fn log_r_at(&self, s: u32, prec: u32) -> Result<LogScalar> {
        let w = prec + 32;
        let mut acc = Float::new(w);
        for k in 1..=u64::from(s) {
            acc *= 2u32;
            acc += self.gamma.ln_gamma(k, w)?;
        }
        Ok(LogScalar::from_ln(Float::with_val(prec, acc)))
    }

    /// `ln Cap(E_s) = (ln r_s - ln 4)/2^s`.
    pub fn log_cap_level(&self, s: u32) -> Result<LogScalar> {
        let prec = self.policy.scalar_bits(s);
        let lr = self.log_r_at(s, prec + 8)?;
        let v = Float::with_val(prec + 8, lr.ln_abs() - ln4(prec + 8)) >> s;
        Ok(LogScalar::from_ln(Float::with_val(prec, v)))
    }

    /// `ln Cap(K(γ)) = Σ 2^{-n} ln γ_n`; closed form `-ln(6 s_2)` for derived γ.
    pub fn log_cap_k(&self, eps: &Float) -> Result<CapEstimate> {
        let prec = self.policy.scalar_bits(0);
        let (mid, rad) = self.gamma.tail_sum(0, prec + 16)?;
        let rounding = Float::with_val(prec, 1) >> (prec - 8);
        let err = Float::with_val(prec, rad + rounding);
        if err > *eps {
            return Err(Error::ToleranceUnreachable { width: err.to_f64().to_string(), target: eps.to_f64().to_string(), level: 0 });
        }
        Ok(CapEstimate { log_cap: LogScalar::from_ln(Float::with_val(prec, mid)), err })
    }

    /// Upper bound on `ln Cap(E_s) - ln Cap(K)`, exact up to rounding.
    ///
    /// For derived γ this is `2^{-s} ln(3/2) + 2 t_{2^{s+1}}`.
    pub fn cap_gap_bound(&self, s: u32) -> Result<Float> {
        let prec = 128;
        match self.gamma.sequence() {
            Some(seq) => {
                let ln15 = Float::with_val(prec, 1.5).ln();
                let t = seq.tail_decay(1u128 << (s + 1))?;
                Ok(Float::with_val(prec, (ln15 >> s) + t * 2u32))
            }
            None => {
                let (mid, rad) = self.gamma.tail_sum(s, prec)?;
                let v = Float::with_val(prec, -ln4(prec) - mid).abs() + rad;
                Ok(v >> s)
            }
        }
    }

    /// Smallest `s` whose capacity gap bound is at most `eps`.
    pub fn cap_truncation_level(&self, eps: &Float) -> Result<u32> {
        for s in 0..=118 {
            if self.cap_gap_bound(s)? <= *eps {
                return Ok(s);
            }
        }
        Err(Error::ToleranceUnreachable { width: self.cap_gap_bound(118)?.to_f64().to_string(), target: eps.to_f64().to_string(), level: 118 })
    }

    fn gammas(&self, s: u32, prec: u32) -> Result<Vec<Float>> {
        (1..=u64::from(s)).map(|k| self.gamma.gamma(k, prec)).collect()
    }

    fn forward(&self, s: u32, x: &Float, prec: u32) -> Result<Forward> {
        let u = Float::with_val(64, 1) >> (prec - 1);
        let mut d = Float::with_val(prec, x * 2u32) - 2u32;
        let mut err = Float::with_val(64, d.abs_ref()) * &u;
        let mut e = Float::with_val(prec, &d + 2u32);
        for g in self.gammas(s, prec)? {
            let err_e = Float::with_val(64, e.abs_ref()) * &u + &err;
            let two_g = Float::with_val(prec, &g * 2u32);
            let nd = Float::with_val(prec, &d * &e) / &two_g;
            let mut ne = Float::with_val(64, d.abs_ref()) * &err_e;
            ne += Float::with_val(64, e.abs_ref()) * &err;
            ne += Float::with_val(64, &err * &err_e);
            ne /= Float::with_val(64, &two_g);
            ne += Float::with_val(64, nd.abs_ref()) * &u * 4u32;
            err = ne;
            d = nd;
            e = Float::with_val(prec, &d + 2u32);
        }
        if !d.is_finite() {
            return Err(Error::PrecisionExhausted { context: format!("F_{s} overflowed"), bits: prec });
        }
        Ok(Forward { d, err })
    }

    fn forward_escalating(&self, s: u32, x: &Float) -> Result<(Forward, u32)> {
        let mut prec = self.policy.bits(s).max(x.prec());
        for attempt in 0..=self.policy.max_escalations {
            let fw = self.forward(s, x, prec)?;
            let f = Float::with_val(64, &fw.d + 1u32).abs();
            let scale = f.max(&Float::with_val(64, 1));
            let tol = scale >> (prec / 2);
            if fw.err <= tol {
                return Ok((fw, prec));
            }
            if attempt < self.policy.max_escalations {
                prec *= 2;
            }
        }
        Err(Error::PrecisionExhausted { context: format!("evaluating F_{s}"), bits: prec })
    }

    /// `F_s(x) = (2/r_s) P_{2^s}(x) + 1`.
    pub fn eval_f(&self, s: u32, x: &Float) -> Result<FValue> {
        let (fw, bits) = self.forward_escalating(s, x)?;
        let f = Float::with_val(bits, &fw.d + 1u32);
        Ok(FValue { value: LogScalar::from_float(&f), bits })
    }

    /// `F_s(x) - 1 = (2/r_s) P_{2^s}(x)`, free of cancellation.
    fn eval_d(&self, s: u32, x: &Float) -> Result<(Float, u32)> {
        let (fw, bits) = self.forward_escalating(s, x)?;
        Ok((fw.d, bits))
    }

    /// `P_{2^s}(x)`; `P_1(x) = x - 1`.
    pub fn eval_p(&self, s: u32, x: &Float) -> Result<LogScalar> {
        let (d, bits) = self.eval_d(s, x)?;
        let half_d = LogScalar::from_float(&d).scale_exp(&-Float::with_val(bits, Constant::Log2));
        Ok(self.log_r_at(s, bits)?.mul(&half_d))
    }

    /// `T_{2^s}(x) = P_{2^s}(x) + r_s/2 = (r_s/2) F_s(x)`.
    pub fn eval_t(&self, s: u32, x: &Float) -> Result<LogScalar> {
        let f = self.eval_f(s, x)?;
        let bits = f.bits;
        let half_r = self.log_r_at(s, bits)?.scale_exp(&-Float::with_val(bits, Constant::Log2));
        Ok(half_r.mul(&f.value))
    }

    /// `x ∈ E_s ⇔ |F_s(x)| ≤ 1`.
    pub fn contains(&self, s: u32, x: &Float) -> Result<bool> {
        if *x < 0 || *x > 1 {
            return Ok(false);
        }
        let f = self.eval_f(s, x)?;
        Ok(f.value.is_zero() || *f.value.ln_abs() <= 0)
    }

    /// All `2^s` solutions of `F_s(x) = t` for `t ∈ [-1, 1]`, sorted.
    pub fn preimages(&self, s: u32, t: &Float) -> Result<Vec<Float>> {
        let mut prec = self.policy.bits(s);
        for attempt in 0..=self.policy.max_escalations {
            match self.descend(s, t, prec)? {
                Some(xs) => return Ok(xs),
                None if attempt < self.policy.max_escalations => prec *= 2,
                None => break,
            }
        }
        Err(Error::PrecisionExhausted { context: format!("branch solve at level {s}"), bits: prec })
    }

    /// Backward branches; `None` when a square root argument lost half the bits.
    fn descend(&self, s: u32, t: &Float, prec: u32) -> Result<Option<Vec<Float>>> {
        if t.is_nan() || *t < -1 || *t > 1 {
            return Err(Error::InvalidInput(format!("preimage target {t} outside [-1, 1]")));
        }
        let floor = Float::with_val(64, 1) >> (prec / 2);
        let mut layer = vec![Float::with_val(prec, t)];
        let gammas = self.gammas(s, prec)?;
        for g in gammas.iter().rev() {
            let two_g = Float::with_val(prec, g * 2u32);
            let mut next = Vec::with_capacity(layer.len() * 2);
            for u in &layer {
                let mut w = Float::with_val(prec, u - 1u32);
                w *= &two_g;
                w += 1u32;
                if w < 0 {
                    return Err(Error::RootBracketing { level: s, index: next.len() / 2 });
                }
                if w < floor && !w.is_zero() {
                    return Ok(None);
                }
                let r = w.sqrt();
                let mut neg = r.clone();
                neg.neg_assign();
                next.push(neg);
                next.push(r);
            }
            layer = next;
        }
        let mut xs: Vec<Float> = layer
            .into_iter()
            .map(|u| {
                let mut x = u + 1u32;
                x /= 2u32;
                x
            })
            .collect();
        xs.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
        Ok(Some(xs))
    }

    /// The level `E_s`, built on first use and cached.
    pub fn level(&self, s: u32) -> Result<Arc<Level>> {
        if let Some(l) = self.levels.read().expect("level cache poisoned").get(&s) {
            return Ok(Arc::clone(l));
        }
        let level = Arc::new(self.build_level(s)?);
        let mut cache = self.levels.write().expect("level cache poisoned");
        if s > 0 {
            if let Some(parent) = cache.get(&(s - 1)) {
                check_nesting(parent, &level)?;
            }
        }
        if let Some(child) = cache.get(&(s + 1)) {
            check_nesting(&level, child)?;
        }
        Ok(Arc::clone(cache.entry(s).or_insert(level)))
    }

    fn build_level(&self, s: u32) -> Result<Level> {
        if s > self.s_max {
            return Err(Error::InvalidInput(format!("level {s} beyond S_max = {}", self.s_max)));
        }
        let bits = self.policy.bits(s);
        let mut endpoints = self.preimages(s, &Float::with_val(bits, -1))?;
        endpoints.extend(self.preimages(s, &Float::with_val(bits, 1))?);
        endpoints.sort_by(|a, b| a.partial_cmp(b).expect("finite endpoints"));
        let n = endpoints.len();
        if n != 1usize << (s + 1) || endpoints[0] != 0 || endpoints[n - 1] != 1 {
            return Err(Error::RootBracketing { level: s, index: 0 });
        }
        if let Some(i) = endpoints.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::RootBracketing { level: s, index: i / 2 + 1 });
        }
        Ok(Level { s, log_r: self.log_r(s)?, endpoints, log_cap: self.log_cap_level(s)?, bits })
    }

    /// Finds the component of `ℝ \ K(γ)` containing `x0`.
    pub fn locate_gap(&self, x0: &Float) -> Result<GapLocation> {
        if *x0 < 0 {
            return Ok(GapLocation::UnboundedLeft);
        }
        if *x0 > 1 {
            return Ok(GapLocation::UnboundedRight);
        }
        let s0 = (1..=self.s_max)
            .find_map(|s| match self.contains(s, x0) {
                Ok(true) => None,
                Ok(false) => Some(Ok(s)),
                Err(e) => Some(Err(e)),
            })
            .transpose()?;
        let Some(s0) = s0 else {
            // endpoints of any level are points of K(γ)
            let deepest = self.level(self.s_max)?;
            if deepest.endpoints.binary_search_by(|e| e.partial_cmp(x0).expect("finite")).is_ok() {
                return Err(Error::PointInSet { x0: x0.to_string() });
            }
            return Err(Error::DepthExhausted { depth: self.s_max });
        };
        let level = self.level(s0)?;
        match level.position(x0) {
            Position::Gap(j) => Ok(GapLocation::Bounded {
                s0,
                alpha: level.endpoints[2 * j - 1].clone(),
                beta: level.endpoints[2 * j].clone(),
                index: j,
            }),
            _ => Err(Error::RootBracketing { level: s0, index: 0 }),
        }
    }

    pub fn metadata(&self, eps_cap: &Float) -> Result<ModelMetadata> {
        let cap = self.log_cap_k(eps_cap)?;
        let digits = digits_for(cap.log_cap.precision());
        let (gamma_source, sequence, values, tail) = match self.gamma.source() {
            GammaSource::Derived(seq) => ("derived".to_string(), Some(seq.source().clone()), None, None),
            GammaSource::Direct { values, tail } => {
                ("direct".to_string(), None, Some(values.clone()), tail.clone())
            }
        };
        Ok(ModelMetadata {
            gamma_source,
            sequence,
            gamma_values: values,
            tail_certificate: tail,
            prefix_certified_only: self.gamma.sequence().map(|s| s.prefix_certified_only()).unwrap_or(false),
            small_gamma: self.gamma.small_gamma(),
            s_max: self.s_max,
            log_cap_k: decimal(cap.log_cap.ln_abs(), digits),
            eps_cap: decimal(&cap.err, 6),
        })
    }
}

fn check_nesting(parent: &Level, child: &Level) -> Result<()> {
    let tol = Float::with_val(64, 1) >> parent.bits.saturating_sub(8);
    for j in 1..=parent.interval_count() {
        let (a, b) = parent.interval(j);
        let (c1, _) = child.interval(2 * j - 1);
        let (_, c2) = child.interval(2 * j);
        let lo_ok = Float::with_val(64, a - c1) <= tol;
        let hi_ok = Float::with_val(64, c2 - b) <= tol;
        if !lo_ok || !hi_ok {
            return Err(Error::RootBracketing { level: child.s, index: 2 * j - 1 });
        }
    }
    Ok(())
}

/// Serializable model summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub gamma_source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_values: Option<Vec<ExactReal>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_certificate: Option<TailCertificate>,
    pub prefix_certified_only: bool,
    pub small_gamma: bool,
    pub s_max: u32,
    pub log_cap_k: String,
    pub eps_cap: String,
}
