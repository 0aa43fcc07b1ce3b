//! Cross-module consistency checks run by `widom verify invariants`.

use rug::Float;
use serde::{Deserialize, Serialize};

use crate::cantor::{CantorModel, GammaSource, Position};
use crate::error::Result;
use crate::potential::{green_bracket_at, green_level, harnack_one_slit, PointContext};
use crate::widom::{
    alternating_set, endpoint_sign, residual_dyadic, verify_alternation, widom_l2_dyadic, widom_sup_dyadic,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
}

impl InvariantReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &InvariantCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, outcome: std::result::Result<String, String>) {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(InvariantCheck { name: name.into(), passed, detail });
    }
}

#[derive(Clone, Debug)]
pub struct InvariantOptions {
    /// Deepest level examined.
    pub s_top: u32,
    /// Extra sample points; gap midpoints of level 3 are always added.
    pub x0: Vec<Float>,
    pub eps_cap: Float,
    pub alternation_tol: Float,
}

impl InvariantOptions {
    pub fn for_model(model: &CantorModel) -> Self {
        InvariantOptions {
            s_top: model.s_max().min(8),
            x0: vec![Float::with_val(64, -0.5), Float::with_val(64, 2)],
            eps_cap: Float::with_val(64, 1e-30),
            alternation_tol: Float::with_val(64, 1e-20),
        }
    }
}

type Outcome = std::result::Result<String, String>;

fn tol(bits: u32, shift: u32) -> Float {
    Float::with_val(64, 1) >> bits.saturating_sub(shift)
}

/// Midpoints of the bounded gaps of level `min(3, s_max)`.
pub fn gap_samples(model: &CantorModel) -> Result<Vec<Float>> {
    let level = model.level(model.s_max().min(3))?;
    let mut out = Vec::new();
    for j in 1..level.interval_count() {
        let a = &level.endpoints[2 * j - 1];
        let b = &level.endpoints[2 * j];
        out.push(Float::with_val(level.bits, a + b) / 2u32);
    }
    Ok(out)
}

pub fn run_invariants(model: &CantorModel, opts: &InvariantOptions) -> Result<InvariantReport> {
    let mut report = InvariantReport::default();
    let s_top = opts.s_top.min(model.s_max());
    let mut samples = opts.x0.clone();
    samples.extend(gap_samples(model)?);

    report.push("telescoping", telescoping(model, s_top)?);
    report.push("capacity-monotone", capacity_monotone(model, s_top, &opts.eps_cap)?);
    report.push("endpoint-unit-modulus", endpoint_unit(model, s_top)?);
    report.push("nesting", nesting(model, s_top)?);
    if model.gamma().small_gamma() {
        report.push("total-length-decreasing", total_length(model, s_top)?);
    }
    if model.gamma().is_derived() {
        report.push("derived-gamma-gate", gamma_gate(model)?);
        report.push("doubling-growth", doubling(model)?);
    }
    report.push("green-monotone", green_monotone(model, s_top, &samples)?);
    report.push("green-bracket-validity", bracket_validity(model, s_top, &samples, &opts.eps_cap)?);
    report.push("harnack-bracket", harnack_valid(model, &samples, &opts.eps_cap)?);
    report.push("harnack-one-slit-monotone", one_slit_monotone()?);
    report.push("schiefermayr", schiefermayr(model, s_top)?);
    if model.gamma().small_gamma() {
        report.push("l2-below-sup", ordering(model, s_top)?);
    }
    report.push("alternation", alternation(model, s_top, &samples, &opts.alternation_tol)?);
    report.push("residual-level-set", residual_level_set(model, s_top.min(6))?);
    Ok(report)
}

fn telescoping(model: &CantorModel, s_top: u32) -> Result<Outcome> {
    for s in 0..=s_top {
        let p = model.policy().scalar_bits(s);
        let cap = model.log_cap_level(s)?;
        let lhs = Float::with_val(p, cap.ln_abs() << s);
        let rhs = Float::with_val(p, model.log_r(s)?.ln_abs() - Float::with_val(p, 4).ln());
        let scale = Float::with_val(64, rhs.abs_ref()).max(&Float::with_val(64, 1));
        if Float::with_val(p, &lhs - &rhs).abs() > scale * tol(p, 16) {
            return Ok(Err(format!("2^s ln Cap(E_s) != ln r_s - ln 4 at s={s}")));
        }
    }
    Ok(Ok(format!("s=0..{s_top}")))
}

fn capacity_monotone(model: &CantorModel, s_top: u32, eps_cap: &Float) -> Result<Outcome> {
    let k = model.log_cap_k(eps_cap)?;
    let mut prev: Option<Float> = None;
    for s in 0..=s_top {
        let c = model.log_cap_level(s)?.ln_abs().clone();
        let slack = tol(c.prec(), 16);
        if let Some(p) = &prev {
            if Float::with_val(c.prec(), &c - p) > slack {
                return Ok(Err(format!("ln Cap(E_s) increased at s={s}")));
            }
        }
        let below = Float::with_val(c.prec(), k.log_cap.ln_abs() - &c) - &k.err;
        if below > slack {
            return Ok(Err(format!("ln Cap(E_s) below ln Cap(K) at s={s}")));
        }
        prev = Some(c);
    }
    Ok(Ok(format!("nonincreasing to Cap(K) = {}", k.log_cap.to_f64())))
}

/// `log2` of `2 ∏_{k ≤ s} 1/γ_k`, which bounds `|F_s'|` at level-`s` endpoints
/// (all earlier `|F_k|` are at most 1 there).
fn log2_slope(model: &CantorModel, s: u32) -> Result<u32> {
    let mut acc = 1.0;
    for k in 1..=u64::from(s) {
        acc -= model.gamma().ln_gamma(k, 64)?.to_f64() / std::f64::consts::LN_2;
    }
    Ok(acc.ceil().max(0.0) as u32)
}

fn endpoint_unit(model: &CantorModel, s_top: u32) -> Result<Outcome> {
    for s in 0..=s_top {
        let level = model.level(s)?;
        let slack = tol(level.bits, 8 + log2_slope(model, s)?);
        for (i, e) in level.endpoints.iter().enumerate() {
            let f = model.eval_f(s, e)?;
            if f.value.sign() != endpoint_sign(s, i) {
                return Ok(Err(format!("sign of F_{s} wrong at endpoint {i}")));
            }
            if Float::with_val(64, f.value.ln_abs().abs_ref()) > slack {
                return Ok(Err(format!("|F_{s}| != 1 at endpoint {i}")));
            }
        }
        if level.endpoints[0] != 0 || *level.endpoints.last().expect("nonempty") != 1 {
            return Ok(Err(format!("0 or 1 missing from level {s}")));
        }
    }
    Ok(Ok(format!("levels 0..{s_top}")))
}

fn nesting(model: &CantorModel, s_top: u32) -> Result<Outcome> {
    for s in 1..=s_top {
        let parent = model.level(s - 1)?;
        let child = model.level(s)?;
        let slack = tol(parent.bits, 8);
        for j in 1..=parent.interval_count() {
            let (a, b) = parent.interval(j);
            let (c1, _) = child.interval(2 * j - 1);
            let (_, c2) = child.interval(2 * j);
            if Float::with_val(64, a - c1) > slack || Float::with_val(64, c2 - b) > slack {
                return Ok(Err(format!("level {s} children of interval {j} leave their parent")));
            }
        }
    }
    Ok(Ok(format!("levels 1..{s_top}")))
}

fn total_length(model: &CantorModel, s_top: u32) -> Result<Outcome> {
    let mut prev = model.level(0)?.total_length();
    for s in 1..=s_top {
        let cur = model.level(s)?.total_length();
        if cur >= prev {
            return Ok(Err(format!("total length did not decrease at s={s}")));
        }
        prev = cur;
    }
    Ok(Ok(format!("|E_{s_top}| = {}", prev.to_f64())))
}

fn gamma_gate(model: &CantorModel) -> Result<Outcome> {
    let top = model.gamma().defined_up_to().unwrap_or(64).min(64);
    let sixth = Float::with_val(256, 1) / 6u32;
    for n in 1..=top {
        let g = model.gamma().gamma(n, 256)?;
        if g > sixth {
            return Ok(Err(format!("gamma_{n} = {} > 1/6", g.to_f64())));
        }
    }
    Ok(Ok(format!("gamma_n <= 1/6 for n=1..{top}")))
}

fn doubling(model: &CantorModel) -> Result<Outcome> {
    let seq = match model.gamma().source() {
        GammaSource::Derived(seq) => seq,
        GammaSource::Direct { .. } => return Ok(Ok("not derived".into())),
    };
    let top = (63 - seq.cached_len().max(2).leading_zeros()).saturating_sub(1);
    for n in 0..=top {
        let a = seq.ln_s_work(1u128 << n)?;
        let b = seq.ln_s_work(1u128 << (n + 1))?;
        if b > Float::with_val(a.prec(), &a * 2u32) + tol(a.prec(), 8) {
            return Ok(Err(format!("s_(2^{}) > s_(2^{n})^2", n + 1)));
        }
    }
    Ok(Ok(format!("n=0..{top}")))
}

fn green_monotone(model: &CantorModel, s_top: u32, samples: &[Float]) -> Result<Outcome> {
    for x0 in samples {
        let gap = model.locate_gap(x0)?;
        let mut prev: Option<Float> = None;
        for s in gap.first_level()..=s_top {
            let g = green_level(model, s, x0)?;
            if let Some(p) = &prev {
                if Float::with_val(g.prec(), p - &g) > tol(g.prec(), 16) {
                    return Ok(Err(format!("g_(E_s)({}) decreased at s={s}", x0.to_f64())));
                }
            }
            prev = Some(g);
        }
    }
    Ok(Ok(format!("{} points", samples.len())))
}

fn bracket_validity(model: &CantorModel, s_top: u32, samples: &[Float], eps_cap: &Float) -> Result<Outcome> {
    for x0 in samples {
        let ctx = PointContext::new(model, x0, eps_cap)?;
        let first = ctx.gap.first_level();
        let deep: Vec<(u32, Float)> =
            (first..=s_top).map(|s| green_level(model, s, x0).map(|g| (s, g))).collect::<Result<_>>()?;
        for s in first..=s_top {
            let b = green_bracket_at(model, &ctx, s)?;
            for (t, g) in deep.iter().filter(|(t, _)| *t > s) {
                if *g < b.lo || *g > b.hi {
                    return Ok(Err(format!("g_(E_{t})({}) outside level-{s} bracket", x0.to_f64())));
                }
            }
        }
    }
    Ok(Ok(format!("{} points", samples.len())))
}

fn harnack_valid(model: &CantorModel, samples: &[Float], eps_cap: &Float) -> Result<Outcome> {
    for x0 in samples {
        let ctx = PointContext::new(model, x0, eps_cap)?;
        let h = &ctx.harnack;
        if h.lo < 1 || h.lo > h.hi {
            return Ok(Err(format!("bad Harnack bracket at x0={}", x0.to_f64())));
        }
    }
    Ok(Ok(format!("{} points", samples.len())))
}

fn one_slit_monotone() -> Result<Outcome> {
    let z = Float::with_val(256, 0);
    let x0 = Float::with_val(256, 1.5);
    let mut prev = Float::with_val(256, 1);
    for k in 1..=8 {
        let a = Float::with_val(256, k) / 10u32;
        let tau = harnack_one_slit(&x0, &z, &a)?;
        if tau < prev {
            return Ok(Err(format!("tau decreased when the slit grew to [0, {}]", a.to_f64())));
        }
        prev = tau;
    }
    Ok(Ok("slits [0, 0.1..0.8]".into()))
}

fn schiefermayr(model: &CantorModel, s_top: u32) -> Result<Outcome> {
    for s in 0..=s_top {
        let w = widom_sup_dyadic(model, s)?;
        let ln2 = Float::with_val(w.precision(), rug::float::Constant::Log2);
        if *w.ln_abs() < Float::with_val(w.precision(), &ln2 - tol(w.precision(), 16)) {
            return Ok(Err(format!("W_inf < 2 at s={s}")));
        }
    }
    Ok(Ok(format!("s=0..{s_top}")))
}

fn ordering(model: &CantorModel, s_top: u32) -> Result<Outcome> {
    for s in 0..=s_top {
        let sup = widom_sup_dyadic(model, s)?;
        let l2 = widom_l2_dyadic(model, s)?;
        let slack = tol(sup.precision(), 16);
        if *l2.ln_abs() < -slack.clone() {
            return Ok(Err(format!("W_2 < 1 at s={s}")));
        }
        if Float::with_val(sup.precision(), l2.ln_abs() - sup.ln_abs()) > slack {
            return Ok(Err(format!("W_2 > W_inf at s={s}")));
        }
    }
    Ok(Ok(format!("s=0..{s_top}")))
}

fn alternation(model: &CantorModel, s_top: u32, samples: &[Float], tol: &Float) -> Result<Outcome> {
    let mut checked = 0;
    for x0 in samples {
        let gap = model.locate_gap(x0)?;
        for s in gap.first_level()..=s_top {
            let r = residual_dyadic(model, s, x0, &gap)?;
            let pts = alternating_set(model, s, x0, &gap)?;
            let chk = verify_alternation(model, &pts, &r, tol)?;
            if !chk.ok {
                return Ok(Err(format!("alternation failed at x0={}, s={s}", x0.to_f64())));
            }
            checked += 1;
        }
    }
    Ok(Ok(format!("{checked} (x0, s) pairs")))
}

/// `{|R| ≤ ‖R‖}` equals `E_s`: endpoints attain the norm and gap midpoints
/// exceed it.
fn residual_level_set(model: &CantorModel, s_top: u32) -> Result<Outcome> {
    let x0 = Float::with_val(64, 2);
    let gap = model.locate_gap(&x0)?;
    for s in 1..=s_top {
        let r = residual_dyadic(model, s, &x0, &gap)?;
        let level = model.level(s)?;
        let slack = tol(level.bits, 8 + log2_slope(model, s)?);
        for e in &level.endpoints {
            let v = r.eval(model, e)?.div(&r.sup_norm).expect("nonzero norm");
            if Float::with_val(64, v.ln_abs().abs_ref()) > slack {
                return Ok(Err(format!("|R(e)| != ||R|| at level {s}")));
            }
        }
        for j in 1..level.interval_count() {
            let mid = Float::with_val(level.bits, &level.endpoints[2 * j - 1] + &level.endpoints[2 * j]) / 2u32;
            debug_assert_eq!(level.position(&mid), Position::Gap(j));
            let v = r.eval(model, &mid)?.div(&r.sup_norm).expect("nonzero norm");
            if *v.ln_abs() <= 0 {
                return Ok(Err(format!("|R| <= ||R|| inside gap {j} of level {s}")));
            }
        }
    }
    Ok(Ok(format!("levels 1..{s_top}")))
}
