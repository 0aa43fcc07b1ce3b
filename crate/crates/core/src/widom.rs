//! Widom factors of `K(γ)` at dyadic degrees, residual polynomials and their
//! alternating sets, and the lower-bound checkers.

use std::fmt;

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::cantor::{decimal, CantorModel, GapLocation, S_CEILING};
use crate::error::{Error, Result};
use crate::numerics::{LogScalar, Sign};
use crate::potential::{green_bracket_at, GreenBracket, PointContext};

fn ln2(prec: u32) -> Float {
    Float::with_val(prec, Constant::Log2)
}

fn half_ln6(prec: u32) -> Float {
    Float::with_val(prec, 6).ln() / 2u32
}

/// Tolerance used when comparing quantities of size about `scale` computed
/// at `prec` bits.
fn rounding(prec: u32, scale: &Float) -> Float {
    let s = Float::with_val(64, scale.abs_ref()).max(&Float::with_val(64, 1));
    s >> prec.saturating_sub(16)
}

fn huge_eps() -> Float {
    Float::with_val(64, 1) << 64u32
}

/// `ln W_{∞,2^s}`: `ln(r_s/2) - 2^s ln Cap(K)` for `s ≥ 1`; for `s = 0` the
/// norm `‖x - 1/2‖` is taken over the level-1 endpoints.
pub fn widom_sup_dyadic(model: &CantorModel, s: u32) -> Result<LogScalar> {
    let prec = model.policy().scalar_bits(s);
    let cap = model.log_cap_k(&huge_eps())?;
    let scaled_cap = Float::with_val(prec + 16, cap.log_cap.ln_abs() << s);
    let ln_norm = if s == 0 {
        let level = model.level(1)?;
        let half = Float::with_val(level.bits, 0.5);
        let norm = level
            .endpoints
            .iter()
            .map(|e| Float::with_val(level.bits, e - &half).abs())
            .max_by(|a, b| a.partial_cmp(b).expect("finite endpoints"))
            .expect("nonempty level");
        norm.ln()
    } else {
        Float::with_val(prec + 16, model.log_r_at(s, prec + 16)?.ln_abs() - ln2(prec + 16))
    };
    Ok(LogScalar::from_ln(Float::with_val(prec, ln_norm - scaled_cap)))
}

/// `ln W_{2,2^s} = ½ ln(1 - 2γ_{s+1}) - ln 2 - Σ_{k>s} 2^{s-k} ln γ_k`.
pub fn widom_l2_dyadic(model: &CantorModel, s: u32) -> Result<LogScalar> {
    if !model.gamma().small_gamma() {
        return Err(Error::SmallGammaRequired);
    }
    let prec = model.policy().scalar_bits(s);
    let w = prec + 16;
    let g = model.gamma().gamma(u64::from(s) + 1, w)?;
    let first = (Float::with_val(w, 1) - g * 2u32).ln() / 2u32;
    let (tail, _) = model.gamma().tail_sum(s, w)?;
    Ok(LogScalar::from_ln(Float::with_val(prec, first - ln2(w) - tail)))
}

/// Block index `s` with `2^s ≤ n < 2^{s+1}`.
pub fn block_of(n: u64) -> u32 {
    assert!(n >= 1, "degrees start at 1");
    63 - n.leading_zeros()
}

/// `min_{2^s ≤ m < 2^{s+1}} W_{2,m} = W_{2,2^s}` for the block containing `n`.
pub fn widom_l2_block_min(model: &CantorModel, n: u64) -> Result<LogScalar> {
    widom_l2_dyadic(model, block_of(n))
}

/// `R = T_{2^s} / T_{2^s}(x0)`.
#[derive(Clone, Debug)]
pub struct ResidualPolynomial {
    pub s: u32,
    pub x0: Float,
    pub degree: u64,
    /// `T_{2^s}(x0)`.
    pub t_at_x0: LogScalar,
    /// `F_s(x0)`.
    pub f_at_x0: LogScalar,
    /// `‖R‖_{K(γ)} = (r_s/2)/|T_{2^s}(x0)| = 1/|F_s(x0)|`.
    pub sup_norm: LogScalar,
}

impl ResidualPolynomial {
    /// `R(x) = F_s(x) / F_s(x0)`.
    pub fn eval(&self, model: &CantorModel, x: &Float) -> Result<LogScalar> {
        let f = model.eval_f(self.s, x)?;
        Ok(f.value.div(&self.f_at_x0).expect("F_s(x0) is nonzero off E_s"))
    }
}

pub fn residual_dyadic(model: &CantorModel, s: u32, x0: &Float, gap: &GapLocation) -> Result<ResidualPolynomial> {
    let first = gap.first_level();
    if s < first {
        return Err(Error::Inadmissible { s, s0: first });
    }
    let f = model.eval_f(s, x0)?;
    if f.value.is_zero() || *f.value.ln_abs() <= 0 {
        return Err(Error::PointInSet { x0: x0.to_string() });
    }
    let t = model.eval_t(s, x0)?;
    let sup_norm = f.value.abs().recip().expect("nonzero");
    Ok(ResidualPolynomial { s, x0: x0.clone(), degree: 1u64 << s, t_at_x0: t, f_at_x0: f.value, sup_norm })
}

/// `sign(F_s)` at the `i`-th (from 0) endpoint of level `s`: `+,-,-,+`
/// repeating for `s ≥ 1`, and `-,+` for `F_0 = 2x - 1`.
pub fn endpoint_sign(s: u32, i: usize) -> Sign {
    if s == 0 {
        return if i == 0 { Sign::Neg } else { Sign::Pos };
    }
    if matches!(i % 4, 0 | 3) {
        Sign::Pos
    } else {
        Sign::Neg
    }
}

fn side(x: &Float, x0: &Float) -> Sign {
    match x.partial_cmp(x0) {
        Some(std::cmp::Ordering::Less) => Sign::Neg,
        Some(std::cmp::Ordering::Greater) => Sign::Pos,
        _ => Sign::Zero,
    }
}

/// `2^s + 1` level endpoints forming an `x0`-alternating set for `R`.
///
/// With `q(x) = sign R(x) · sign(x - x0)` and `k` the number of chosen points
/// left of `x0`, the identity reads `q(x_j) = (-1)^{k+1-j}`: the points
/// alternate in `q`, the last one left of `x0` has `q = -1` and the first one
/// right of it `q = +1`. A left-to-right scan keeps every endpoint whose `q`
/// differs from the previously kept one; the answer is the leftmost window of
/// `2^s + 1` kept points with the right sign at `x0`.
pub fn alternating_set(model: &CantorModel, s: u32, x0: &Float, gap: &GapLocation) -> Result<Vec<Float>> {
    let r = residual_dyadic(model, s, x0, gap)?;
    let level = model.level(s)?;
    let fx0 = r.f_at_x0.sign();
    let mut kept: Vec<(usize, Sign)> = Vec::new();
    for (i, e) in level.endpoints.iter().enumerate() {
        let q = endpoint_sign(s, i).times(fx0).times(side(e, x0));
        if q == Sign::Zero {
            continue;
        }
        if kept.last().map(|&(_, p)| p != q).unwrap_or(true) {
            kept.push((i, q));
        }
    }
    let n = (1usize << s) + 1;
    let fits = |w: &[(usize, Sign)]| {
        let left = w.iter().take_while(|&&(i, _)| level.endpoints[i] < *x0).count();
        if left == 0 {
            w[0].1 == Sign::Pos
        } else {
            w[left - 1].1 == Sign::Neg
        }
    };
    let window = kept.windows(n).find(|w| fits(w)).ok_or(Error::PrecisionExhausted {
        context: format!("alternating set at level {s} has only {} points", kept.len()),
        bits: level.bits,
    })?;
    Ok(window.iter().map(|&(i, _)| level.endpoints[i].clone()).collect())
}

/// Result of [`verify_alternation`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlternationCheck {
    pub ok: bool,
    /// Index (from 0) of the first offending point, or `len` for a length error.
    pub first_failure: Option<usize>,
}

pub fn verify_alternation(
    model: &CantorModel,
    points: &[Float],
    r: &ResidualPolynomial,
    tol: &Float,
) -> Result<AlternationCheck> {
    let k = (r.degree as usize) + 1;
    if points.len() != k {
        return Ok(AlternationCheck { ok: false, first_failure: Some(points.len().min(k)) });
    }
    if let Some(i) = points.windows(2).position(|w| w[0] >= w[1]) {
        return Ok(AlternationCheck { ok: false, first_failure: Some(i + 1) });
    }
    let norm = r.sup_norm.to_float(r.sup_norm.precision());
    let allowed = Float::with_val(norm.prec(), &norm * tol);
    let left = points.iter().take_while(|x| **x < r.x0).count();
    for (j, x) in points.iter().enumerate() {
        let v = r.eval(model, x)?;
        let val = v.to_float(norm.prec());
        let want_q = if (left + j) % 2 == 0 { Sign::Pos } else { Sign::Neg };
        let target = match want_q.times(side(x, &r.x0)) {
            Sign::Pos => norm.clone(),
            Sign::Neg => -norm.clone(),
            Sign::Zero => return Ok(AlternationCheck { ok: false, first_failure: Some(j) }),
        };
        if Float::with_val(norm.prec(), &val - &target).abs() > allowed {
            return Ok(AlternationCheck { ok: false, first_failure: Some(j) });
        }
    }
    Ok(AlternationCheck { ok: true, first_failure: None })
}

/// Bracket for `ln W^{(x0)}_{∞,2^s} = 2^s g_K(x0) + ln ‖R‖`.
#[derive(Clone, Debug)]
pub struct ResidualWidom {
    pub residual: ResidualPolynomial,
    pub green: GreenBracket,
    pub ln_lo: Float,
    pub ln_hi: Float,
}

/// Level used for the Green bracket so that the `ln W` bracket has width at
/// most `eps`, capped at the hard level ceiling.
pub fn refinement_level(model: &CantorModel, ctx: &PointContext, s: u32, eps: &Float) -> Result<u32> {
    let start = s.max(ctx.gap.first_level());
    for t in start..=S_CEILING {
        let mut width = model.cap_gap_bound(t)?;
        width += &ctx.eps_cap;
        width *= &ctx.harnack.hi;
        width <<= s;
        if width <= *eps {
            return Ok(t);
        }
    }
    Ok(S_CEILING.max(start))
}

pub fn residual_widom_dyadic(model: &CantorModel, ctx: &PointContext, s: u32, eps: &Float) -> Result<ResidualWidom> {
    let residual = residual_dyadic(model, s, &ctx.x0, &ctx.gap)?;
    let t = refinement_level(model, ctx, s, eps)?;
    let green = green_bracket_at(model, ctx, t)?;
    let prec = green.lo.prec();
    let ln_norm = residual.sup_norm.ln_abs();
    let ln_lo = Float::with_val(prec, &green.lo << s) + ln_norm;
    let ln_hi = Float::with_val(prec, &green.hi << s) + ln_norm;
    Ok(ResidualWidom { residual, green, ln_lo, ln_hi })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowKind {
    /// `W_{∞,2^s}` against Schiefermayr's 2.
    Sup,
    /// `W_{2,2^s}` against 1.
    L2,
    /// `W_{2,2^s}` against `√6 c_{2^{s+1}}`.
    L2Dyadic,
    /// Block minimum against `√6 c_n`.
    L2Block,
    /// Block minimum against `c_n`.
    L2BlockC,
    /// Residual lower bracket against `(√6 c_n / 2)^{1/τ_hi}`.
    Residual,
    /// Residual lower bracket against `c_n^{1/τ_hi}`.
    ResidualC,
    /// Residual lower bracket against `(W_{∞,n}/2)^{1/τ_hi}`.
    ResidualTtt,
    /// Informational: against `(√6 c_n / 2)^{1/τ_lo}`.
    ResidualSharp,
}

impl fmt::Display for RowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowKind::Sup => "sup",
            RowKind::L2 => "l2",
            RowKind::L2Dyadic => "l2-dyadic",
            RowKind::L2Block => "l2-block",
            RowKind::L2BlockC => "l2-block-c",
            RowKind::Residual => "residual",
            RowKind::ResidualC => "residual-c",
            RowKind::ResidualTtt => "residual-ttt",
            RowKind::ResidualSharp => "residual-sharp",
        })
    }
}

/// One checked inequality `value ≥ bound`, all in log form.
#[derive(Clone, Debug)]
pub struct WidomRow {
    pub kind: RowKind,
    pub n: u64,
    pub x0: Option<Float>,
    pub ln_value_lo: Float,
    pub ln_value_hi: Float,
    pub ln_bound: Float,
    /// `[1/τ_hi, 1/τ_lo]` for residual rows.
    pub exponent: Option<(Float, Float)>,
    /// Whether the comparison is a proved consequence (counts toward pass/fail).
    pub certified: bool,
    pub pass: bool,
}

impl WidomRow {
    fn new(kind: RowKind, n: u64, lo: Float, hi: Float, bound: Float, certified: bool) -> Self {
        let prec = lo.prec().min(bound.prec());
        let tol = rounding(prec, &lo.clone().max(&bound)) * 2u32;
        let pass = Float::with_val(prec, &lo - &bound) > tol;
        WidomRow { kind, n, x0: None, ln_value_lo: lo, ln_value_hi: hi, ln_bound: bound, exponent: None, certified, pass }
    }

    /// Failed and counts.
    pub fn is_failure(&self) -> bool {
        self.certified && !self.pass
    }

    pub fn csv_header() -> &'static str {
        "kind,n,x0,value_lo,value_hi,bound,exponent_lo,exponent_hi,pass"
    }

    pub fn to_csv(&self) -> String {
        let d = 40;
        let exp_lo = |x: &Float| decimal(&Float::with_val(x.prec(), x.exp_ref()), d);
        let (e_lo, e_hi) = match &self.exponent {
            Some((a, b)) => (decimal(a, d), decimal(b, d)),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.kind,
            self.n,
            self.x0.as_ref().map(|x| decimal(x, 20)).unwrap_or_default(),
            exp_lo(&self.ln_value_lo),
            exp_lo(&self.ln_value_hi),
            exp_lo(&self.ln_bound),
            e_lo,
            e_hi,
            if self.certified { self.pass.to_string() } else { format!("{} (informational)", self.pass) }
        )
    }

    pub fn record(&self) -> RowRecord {
        let hex = |x: &Float| x.to_string_radix(16, None);
        RowRecord {
            kind: self.kind,
            n: self.n,
            x0: self.x0.as_ref().map(hex),
            ln_value_lo: hex(&self.ln_value_lo),
            ln_value_hi: hex(&self.ln_value_hi),
            ln_bound: hex(&self.ln_bound),
            exponent_lo: self.exponent.as_ref().map(|(a, _)| hex(a)),
            exponent_hi: self.exponent.as_ref().map(|(_, b)| hex(b)),
            value_lo: decimal(&Float::with_val(64, self.ln_value_lo.exp_ref()), 17),
            bound: decimal(&Float::with_val(64, self.ln_bound.exp_ref()), 17),
            certified: self.certified,
            pass: self.pass,
        }
    }
}

/// JSON form of a row; `ln_*` and exponent fields are radix-16 floats at
/// full working precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowRecord {
    pub kind: RowKind,
    pub n: u64,
    pub x0: Option<String>,
    pub ln_value_lo: String,
    pub ln_value_hi: String,
    pub ln_bound: String,
    pub exponent_lo: Option<String>,
    pub exponent_hi: Option<String>,
    pub value_lo: String,
    pub bound: String,
    pub certified: bool,
    pub pass: bool,
}

fn source_ln_c(model: &CantorModel, n: u64, prec: u32) -> Result<Float> {
    let seq = model
        .gamma()
        .sequence()
        .ok_or_else(|| Error::InvalidInput("theorem checks need gamma derived from a sequence".into()))?;
    seq.source().ln_value(u128::from(n), prec)
}

/// Rows `W_{∞,2^s} ≥ 2` and `W_{2,2^s} ≥ 1` for `s ≤ s_top`.
pub fn sup_rows(model: &CantorModel, s_top: u32) -> Result<Vec<WidomRow>> {
    let mut rows = Vec::new();
    for s in 0..=s_top {
        let w = widom_sup_dyadic(model, s)?;
        let v = w.ln_abs().clone();
        rows.push(WidomRow::new(RowKind::Sup, 1 << s, v.clone(), v, ln2(w.precision()), true));
    }
    Ok(rows)
}

pub fn l2_rows(model: &CantorModel, s_top: u32) -> Result<Vec<WidomRow>> {
    let mut rows = Vec::new();
    for s in 0..=s_top {
        let w = widom_l2_dyadic(model, s)?;
        let v = w.ln_abs().clone();
        rows.push(WidomRow::new(RowKind::L2, 1 << s, v.clone(), v, Float::new(w.precision()), true));
    }
    Ok(rows)
}

/// Theorem 1 rows for `n ≤ n_max`.
pub fn check_thm1(model: &CantorModel, n_max: u64) -> Result<Vec<WidomRow>> {
    let mut rows = Vec::new();
    let top = block_of(n_max);
    let mut cache = Vec::with_capacity(top as usize + 1);
    for s in 0..=top {
        cache.push(widom_l2_dyadic(model, s)?);
    }
    for s in 0..=top {
        if (1u64 << (s + 1)) > n_max {
            break;
        }
        let w = &cache[s as usize];
        let p = w.precision();
        let bound = half_ln6(p) + source_ln_c(model, 1 << (s + 1), p)?;
        rows.push(WidomRow::new(RowKind::L2Dyadic, 1 << s, w.ln_abs().clone(), w.ln_abs().clone(), bound, true));
    }
    for n in 1..=n_max {
        let w = &cache[block_of(n) as usize];
        let p = w.precision();
        let ln_c = source_ln_c(model, n, p)?;
        let v = w.ln_abs().clone();
        rows.push(WidomRow::new(RowKind::L2Block, n, v.clone(), v.clone(), half_ln6(p) + &ln_c, true));
        rows.push(WidomRow::new(RowKind::L2BlockC, n, v.clone(), v, ln_c, true));
    }
    Ok(rows)
}

/// Theorem 2 rows at `n = 2^s` for admissible `s ≤ s_top`.
pub fn check_thm2(model: &CantorModel, x0: &Float, s_top: u32, eps: &Float, eps_cap: &Float) -> Result<Vec<WidomRow>> {
    let ctx = PointContext::new(model, x0, eps_cap)?;
    check_thm2_in(model, &ctx, s_top, eps)
}

pub fn check_thm2_in(model: &CantorModel, ctx: &PointContext, s_top: u32, eps: &Float) -> Result<Vec<WidomRow>> {
    let mut rows = Vec::new();
    let (e_lo, e_hi) = ctx.harnack.exponent();
    for s in ctx.gap.first_level()..=s_top {
        let rw = residual_widom_dyadic(model, ctx, s, eps)?;
        let p = rw.ln_lo.prec().min(model.policy().scalar_bits(s));
        let n = 1u64 << s;
        let ln_c = source_ln_c(model, n, p)?;
        let ln_sharp_base = half_ln6(p) + &ln_c - ln2(p);
        let ln_sup = widom_sup_dyadic(model, s)?.ln_abs().clone();
        let specs = [
            (RowKind::Residual, Float::with_val(p, &ln_sharp_base * &e_lo), true),
            (RowKind::ResidualC, Float::with_val(p, &ln_c * &e_lo), true),
            (RowKind::ResidualTtt, Float::with_val(p, (ln_sup - ln2(p)) * &e_lo), true),
            (RowKind::ResidualSharp, Float::with_val(p, &ln_sharp_base * &e_hi), false),
        ];
        for (kind, bound, certified) in specs {
            let mut row = WidomRow::new(kind, n, rw.ln_lo.clone(), rw.ln_hi.clone(), bound, certified);
            row.x0 = Some(ctx.x0.clone());
            row.exponent = Some((e_lo.clone(), e_hi.clone()));
            rows.push(row);
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::PrecisionPolicy;
    use crate::sequences::SequenceSpec;

    fn f(v: f64) -> Float {
        Float::with_val(256, v)
    }

    fn sixth() -> CantorModel {
        CantorModel::constant_gamma("1/6", PrecisionPolicy::default(), 8).unwrap()
    }

    fn const_e(s_max: u32) -> CantorModel {
        CantorModel::from_sequence(&SequenceSpec::constant("e").unwrap(), PrecisionPolicy::default(), s_max).unwrap()
    }

    fn close(a: &LogScalar, want: f64) -> bool {
        (a.to_f64() - want).abs() < 1e-12 * want.abs().max(1.0)
    }

    #[test]
    fn sup_examples() {
        let m = sixth();
        for s in 0..6 {
            assert!(close(&widom_sup_dyadic(&m, s).unwrap(), 3.0), "s={s}");
        }
        let e = const_e(4);
        let three_e = 3.0 * std::f64::consts::E;
        for s in 0..4 {
            assert!(close(&widom_sup_dyadic(&e, s).unwrap(), three_e));
        }
    }

    #[test]
    fn l2_examples() {
        let m = sixth();
        for s in 0..6 {
            assert!(close(&widom_l2_dyadic(&m, s).unwrap(), 6f64.sqrt()));
        }
        assert!(close(&widom_l2_block_min(&m, 5).unwrap(), 6f64.sqrt()));
        let e = const_e(4);
        let want = 3.0 * std::f64::consts::E * (1.0 - 1.0 / (3.0 * std::f64::consts::E)).sqrt();
        assert!(close(&widom_l2_dyadic(&e, 2).unwrap(), want));
        assert_eq!(block_of(1), 0);
        assert_eq!(block_of(4), 2);
        assert_eq!(block_of(7), 2);
    }

    #[test]
    fn residual_examples() {
        let m = sixth();
        let out = GapLocation::UnboundedRight;
        let r = residual_dyadic(&m, 1, &f(2.0), &out).unwrap();
        assert!(close(&r.sup_norm, 1.0 / 25.0));
        let mid = f(0.5);
        let gap = m.locate_gap(&mid).unwrap();
        let r = residual_dyadic(&m, 1, &mid, &gap).unwrap();
        assert!(close(&r.t_at_x0, -1.0 / 6.0));
        assert!(close(&r.sup_norm, 0.5));
        let q = f(0.1);
        let gap = m.locate_gap(&q).unwrap();
        assert!(matches!(residual_dyadic(&m, 1, &q, &gap), Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn alternation_examples() {
        let m = sixth();
        let tol = f(1e-20);
        let out = GapLocation::UnboundedRight;
        let pts = alternating_set(&m, 1, &f(2.0), &out).unwrap();
        assert_eq!(pts.len(), 3);
        assert!(pts[0].is_zero() && pts[2] == 1);
        assert!((pts[1].to_f64() - 0.2113249).abs() < 1e-7);
        let r = residual_dyadic(&m, 1, &f(2.0), &out).unwrap();
        assert!(verify_alternation(&m, &pts, &r, &tol).unwrap().ok);

        let mid = f(0.5);
        let gap = m.locate_gap(&mid).unwrap();
        for s in 1..=4 {
            let pts = alternating_set(&m, s, &mid, &gap).unwrap();
            let r = residual_dyadic(&m, s, &mid, &gap).unwrap();
            assert!(verify_alternation(&m, &pts, &r, &tol).unwrap().ok, "s={s}");
            let mut dropped = pts.clone();
            dropped.remove(1);
            assert!(!verify_alternation(&m, &dropped, &r, &tol).unwrap().ok);
        }
    }

    #[test]
    fn thm1_rows_pass_for_constant_e() {
        let e = const_e(6);
        let rows = check_thm1(&e, 64).unwrap();
        assert!(rows.iter().all(|r| r.pass), "{:?}", rows.iter().find(|r| !r.pass));
        assert_eq!(rows.iter().filter(|r| r.kind == RowKind::L2Dyadic).count(), 6);
    }

    #[test]
    fn thm2_rows_pass_exterior() {
        let e = const_e(6);
        let eps = f(0.25);
        let rows = check_thm2(&e, &f(2.0), 4, &eps, &f(1e-30)).unwrap();
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().filter(|r| r.certified).all(|r| r.pass));
        let first = &rows[0];
        let (lo, hi) = first.exponent.clone().unwrap();
        assert!((lo.to_f64() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12 && lo == hi);
        let csv = first.to_csv();
        assert!(csv.starts_with("residual,2,"));
    }
}
