//! Green functions of `E_s` and `K(γ)`, Harnack distances to `∞`, and the
//! two-sided brackets that connect them.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::cantor::{decimal, CantorModel, GapLocation};
use crate::error::{Error, Result};
use crate::numerics::LogScalar;

/// Working precision for Harnack distances.
pub const HARNACK_BITS: u32 = 256;

/// Waypoint grid depth of the chain bound.
pub const CHAIN_GRID: u32 = 8;

fn slack(x: &Float, up: bool) -> Float {
    let eps = Float::with_val(x.prec(), x.abs_ref()) >> (x.prec().saturating_sub(16));
    if up {
        Float::with_val(x.prec(), x + eps)
    } else {
        Float::with_val(x.prec(), x - eps)
    }
}

/// `g_{[-1,1]}(z) = ln(|z| + sqrt(z² - 1))`, zero for `|z| ≤ 1`.
pub fn green_ref(z: &Float) -> Float {
    let a = Float::with_val(z.prec(), z.abs_ref());
    if a <= 1 {
        return Float::new(z.prec());
    }
    let root = Float::with_val(z.prec(), a.square_ref()) - 1u32;
    (a + root.sqrt()).ln()
}

/// `green_ref` for an argument held in log form:
/// `ln|z| + ln(1 + sqrt(1 - z^{-2}))`.
pub fn green_ref_log(z: &LogScalar) -> Float {
    let prec = z.precision();
    if z.is_zero() || *z.ln_abs() <= 0 {
        return Float::new(prec);
    }
    let inv_sq = Float::with_val(prec, z.ln_abs() * -2i32).exp();
    let root = (Float::with_val(prec, 1) - inv_sq).sqrt();
    Float::with_val(prec, z.ln_abs() + root.ln_1p())
}

/// `g_{E_s}(x0) = 2^{-s} g_{[-1,1]}(F_s(x0))`.
pub fn green_level(model: &CantorModel, s: u32, x0: &Float) -> Result<Float> {
    let f = model.eval_f(s, x0)?;
    Ok(green_ref_log(&f.value) >> s)
}

/// Exact `τ` between `x0` and `∞` on the sphere minus `[a, b]`.
pub fn harnack_one_slit(x0: &Float, a: &Float, b: &Float) -> Result<Float> {
    if *x0 >= *a && *x0 <= *b {
        return Err(Error::InvalidInput(format!("x0 = {x0} lies on the slit")));
    }
    let p = HARNACK_BITS;
    let width = Float::with_val(p, b - a);
    let y = (Float::with_val(p, x0 * 2u32) - a - b) / &width;
    let y = y.abs();
    let zeta = Float::with_val(p, &y + (Float::with_val(p, y.square_ref()) - 1u32).sqrt());
    Ok(tau_from_modulus(&zeta))
}

fn tau_from_modulus(zeta: &Float) -> Float {
    let p = zeta.prec();
    Float::with_val(p, zeta + 1u32) / Float::with_val(p, zeta - 1u32)
}

/// Rectangular complex number used for the slit map at a complex point.
#[derive(Clone, Debug)]
struct Cx {
    re: Float,
    im: Float,
}

impl Cx {
    fn abs(&self) -> Float {
        Float::with_val(self.re.prec(), self.re.hypot_ref(&self.im))
    }

    /// Principal square root.
    fn sqrt(&self) -> Cx {
        let p = self.re.prec();
        let r = self.abs();
        let re = (Float::with_val(p, &r + &self.re) / 2u32).sqrt();
        let mut im = (Float::with_val(p, &r - &self.re) / 2u32).sqrt();
        if self.im.is_sign_negative() {
            im = -im;
        }
        Cx { re, im }
    }
}

/// `τ` between `v = x + ih` and `∞` on the sphere minus `[a, b]`.
pub fn harnack_one_slit_complex(x: &Float, h: &Float, a: &Float, b: &Float) -> Float {
    let p = HARNACK_BITS;
    let width = Float::with_val(p, b - a);
    let y = Cx {
        re: (Float::with_val(p, x * 2u32) - a - b) / &width,
        im: Float::with_val(p, h * 2u32) / &width,
    };
    let sq = Cx {
        re: Float::with_val(p, y.re.square_ref()) - Float::with_val(p, y.im.square_ref()) - 1u32,
        im: Float::with_val(p, &y.re * &y.im) * 2u32,
    }
    .sqrt();
    let plus = Cx { re: Float::with_val(p, &y.re + &sq.re), im: Float::with_val(p, &y.im + &sq.im) }.abs();
    let minus = Cx { re: Float::with_val(p, &y.re - &sq.re), im: Float::with_val(p, &y.im - &sq.im) }.abs();
    tau_from_modulus(&plus.max(&minus))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HarnackMethod {
    ExactOneSlit,
    ChainAndComparison,
}

/// `1 ≤ lo ≤ τ_{Ω_{x0}}(x0, ∞) ≤ hi`.
#[derive(Clone, Debug)]
pub struct HarnackBracket {
    pub x0: Float,
    pub lo: Float,
    pub hi: Float,
    pub method: HarnackMethod,
}

impl HarnackBracket {
    /// `[1/hi, 1/lo]`, the bracket for the exponent `τ_{x0}`.
    pub fn exponent(&self) -> (Float, Float) {
        (Float::with_val(self.hi.prec(), self.hi.recip_ref()), Float::with_val(self.lo.prec(), self.lo.recip_ref()))
    }
}

/// Harnack bracket for `x0` in the located component.
pub fn harnack_for(x0: &Float, gap: &GapLocation) -> Result<HarnackBracket> {
    let p = HARNACK_BITS;
    match gap {
        GapLocation::UnboundedLeft | GapLocation::UnboundedRight => {
            let t = harnack_one_slit(x0, &Float::with_val(p, 0), &Float::with_val(p, 1))?;
            Ok(HarnackBracket { x0: x0.clone(), lo: t.clone(), hi: t, method: HarnackMethod::ExactOneSlit })
        }
        GapLocation::Bounded { alpha, beta, .. } => harnack_bracket(x0, alpha, beta),
    }
}

/// Bracket for `Ω = (sphere \ [0,1]) ∪ (α, β)` with `α < x0 < β`.
///
/// Lower bound: the two one-slit domains `sphere \ [0, α]`, `sphere \ [β, 1]`
/// contain `Ω`. Upper bound: a chain `x0 → x0 + ih → ∞` through the disk of
/// radius `min(x0 - α, β - x0)` and the sphere minus `[0, 1]`.
pub fn harnack_bracket(x0: &Float, alpha: &Float, beta: &Float) -> Result<HarnackBracket> {
    let p = HARNACK_BITS;
    let zero = Float::with_val(p, 0);
    let one = Float::with_val(p, 1);
    let gap = Float::with_val(p, beta - alpha);
    if gap <= Float::with_val(p, 1) >> (p - 16) || *x0 <= *alpha || *x0 >= *beta {
        return Err(Error::DegenerateGap { alpha: alpha.to_string(), beta: beta.to_string() });
    }
    let left = harnack_one_slit(x0, &zero, alpha)?;
    let right = harnack_one_slit(x0, beta, &one)?;
    let lo = slack(&left.max(&right), false);

    let radius = Float::with_val(p, x0 - alpha).min(&Float::with_val(p, beta - x0));
    let mut steps: Vec<Float> =
        (1..=CHAIN_GRID).map(|k| Float::with_val(p, &gap >> k)).filter(|h| *h < radius).collect();
    if steps.is_empty() {
        steps = (1..=CHAIN_GRID).map(|k| Float::with_val(p, &radius >> k)).collect();
    }
    let hi = steps
        .iter()
        .map(|h| {
            let disk = Float::with_val(p, &radius + h) / Float::with_val(p, &radius - h);
            disk * harnack_one_slit_complex(x0, h, &zero, &one)
        })
        .min_by(|a, b| a.partial_cmp(b).expect("finite chain bounds"))
        .expect("nonempty grid");
    let hi = slack(&hi, true);
    let lo = lo.max(&one);
    Ok(HarnackBracket { x0: x0.clone(), lo, hi, method: HarnackMethod::ChainAndComparison })
}

/// Two-sided enclosure of `g_{K(γ)}(x0)` from level `s`.
#[derive(Clone, Debug)]
pub struct GreenBracket {
    pub x0: Float,
    pub s: u32,
    pub lo: Float,
    pub hi: Float,
    pub harnack: HarnackBracket,
}

impl GreenBracket {
    pub fn width(&self) -> Float {
        Float::with_val(self.hi.prec(), &self.hi - &self.lo)
    }

    pub fn row(&self) -> BracketRow {
        BracketRow {
            x0: decimal(&self.x0, 20),
            s: self.s,
            g_lo: decimal(&self.lo, 40),
            g_hi: decimal(&self.hi, 40),
            tau_lo: decimal(&self.harnack.lo, 40),
            tau_hi: decimal(&self.harnack.hi, 40),
            method: self.harnack.method,
        }
    }
}

/// JSON row of a bracket report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketRow {
    pub x0: String,
    pub s: u32,
    pub g_lo: String,
    pub g_hi: String,
    pub tau_lo: String,
    pub tau_hi: String,
    pub method: HarnackMethod,
}

/// Everything about `x0` that does not depend on the level.
#[derive(Clone, Debug)]
pub struct PointContext {
    pub x0: Float,
    pub gap: GapLocation,
    pub harnack: HarnackBracket,
    pub log_cap_k: LogScalar,
    pub eps_cap: Float,
}

impl PointContext {
    pub fn new(model: &CantorModel, x0: &Float, eps_cap: &Float) -> Result<Self> {
        let gap = model.locate_gap(x0)?;
        let harnack = harnack_for(x0, &gap)?;
        let cap = model.log_cap_k(eps_cap)?;
        Ok(PointContext { x0: x0.clone(), gap, harnack, log_cap_k: cap.log_cap, eps_cap: cap.err })
    }
}

/// Bracket at a fixed level: `lo = g_{E_s}(x0)`,
/// `hi = lo + τ_hi (ln Cap(E_s) - ln Cap(K) + ε_cap)`.
pub fn green_bracket_at(model: &CantorModel, ctx: &PointContext, s: u32) -> Result<GreenBracket> {
    let first = ctx.gap.first_level();
    if s < first {
        return Err(Error::Inadmissible { s, s0: first });
    }
    let lo = green_level(model, s, &ctx.x0)?;
    let prec = lo.prec().max(model.policy().scalar_bits(s));
    let cap_s = model.log_cap_level(s)?;
    let mut excess = Float::with_val(prec, cap_s.ln_abs() - ctx.log_cap_k.ln_abs());
    excess += &ctx.eps_cap;
    excess += Float::with_val(prec, 1) >> (model.policy().base_bits - 8);
    let excess = excess.max(&Float::new(prec));
    let hi = Float::with_val(prec, &lo + excess * &ctx.harnack.hi);
    Ok(GreenBracket { x0: ctx.x0.clone(), s, lo: Float::with_val(prec, lo), hi, harnack: ctx.harnack.clone() })
}

/// Refines from the first admissible level until `hi - lo ≤ eps`.
pub fn green_k(model: &CantorModel, x0: &Float, eps: &Float, eps_cap: &Float) -> Result<GreenBracket> {
    let ctx = PointContext::new(model, x0, eps_cap)?;
    green_k_in(model, &ctx, eps)
}

pub fn green_k_in(model: &CantorModel, ctx: &PointContext, eps: &Float) -> Result<GreenBracket> {
    let mut last = None;
    for s in ctx.gap.first_level()..=model.s_max() {
        let b = green_bracket_at(model, ctx, s)?;
        if b.width() <= *eps {
            return Ok(b);
        }
        last = Some(b);
    }
    let width = last.map(|b| b.width().to_f64()).unwrap_or(f64::INFINITY);
    Err(Error::ToleranceUnreachable { width: width.to_string(), target: eps.to_f64().to_string(), level: model.s_max() })
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
        CantorModel::constant_gamma("1/6", PrecisionPolicy::default(), 10).unwrap()
    }

    fn approx(a: &Float, b: f64, tol: f64) -> bool {
        (a.to_f64() - b).abs() < tol
    }

    #[test]
    fn green_ref_examples() {
        assert!(green_ref(&f(1.0)).is_zero());
        assert!(approx(&green_ref(&f(3.0)), 1.7627472, 1e-7));
        assert!(approx(&green_ref(&f(25.0)), 3.9116228, 1e-7));
        let big = LogScalar::from_float(&f(25.0));
        assert!(approx(&green_ref_log(&big), 3.9116228, 1e-7));
    }

    #[test]
    fn green_level_examples() {
        let m = sixth();
        assert!(approx(&green_level(&m, 1, &f(2.0)).unwrap(), 1.9558114, 1e-7));
        assert!(approx(&green_level(&m, 0, &f(2.0)).unwrap(), 1.7627472, 1e-7));
        assert!(green_level(&m, 2, &f(0.0)).unwrap().is_zero());
    }

    #[test]
    fn one_slit_examples() {
        let (z, o) = (f(0.0), f(1.0));
        let t = harnack_one_slit(&f(2.0), &z, &o).unwrap();
        assert!(approx(&t, std::f64::consts::SQRT_2, 1e-15));
        assert!(approx(&harnack_one_slit(&f(-1.0), &z, &o).unwrap(), std::f64::consts::SQRT_2, 1e-15));
        assert!(approx(&harnack_one_slit(&f(1e12), &z, &o).unwrap(), 1.0, 1e-5));
        // the complex evaluation agrees with the real one on the axis
        let c = harnack_one_slit_complex(&f(2.0), &f(0.0), &z, &o);
        assert!(approx(&c, std::f64::consts::SQRT_2, 1e-15));
    }

    #[test]
    fn central_gap_bracket() {
        let m = sixth();
        let x0 = f(0.5);
        let gap = m.locate_gap(&x0).unwrap();
        let GapLocation::Bounded { alpha, beta, .. } = gap.clone() else { panic!() };
        let b = harnack_for(&x0, &gap).unwrap();
        let left = harnack_one_slit(&x0, &f(0.0), &alpha).unwrap();
        let right = harnack_one_slit(&x0, &beta, &f(1.0)).unwrap();
        assert!(approx(&left, right.to_f64(), 1e-30));
        assert!(b.lo > 1 && b.lo <= b.hi && b.hi.is_finite());
        assert_eq!(b.method, HarnackMethod::ChainAndComparison);
    }

    #[test]
    fn green_bracket_examples() {
        let m = sixth();
        let eps_cap = f(1e-40);
        let ctx = PointContext::new(&m, &f(2.0), &eps_cap).unwrap();
        let b = green_bracket_at(&m, &ctx, 1).unwrap();
        assert!(approx(&b.lo, 1.9558114, 1e-7));
        assert!(approx(&b.hi, 2.2425, 1e-3));

        let e = CantorModel::from_sequence(&SequenceSpec::constant("e").unwrap(), PrecisionPolicy::default(), 10).unwrap();
        let ctx = PointContext::new(&e, &f(2.0), &eps_cap).unwrap();
        let b = green_bracket_at(&e, &ctx, 1).unwrap();
        let f1 = Float::with_val(256, 1).exp() * 24u32 + 1u32;
        assert!(approx(&b.lo, green_ref(&f1).to_f64() / 2.0, 1e-14));
        let refined = green_k(&e, &f(2.0), &f(1e-2), &eps_cap).unwrap();
        assert!(refined.lo >= b.lo && refined.hi <= b.hi);
    }
}
