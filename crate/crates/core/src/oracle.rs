//! Brute-force `L²` norms of monic orthogonal polynomials on explicit
//! quadrature measures, used to cross-check the closed forms.

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::cantor::{decimal, CantorModel};
use crate::error::{Error, Result};
use crate::numerics::LogScalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    ArcsineOnInterval { a: String, b: String, m: usize },
    Pullback { s: u32, m: usize },
}

/// A discrete probability measure.
#[derive(Clone, Debug)]
pub struct QuadMeasure {
    pub nodes: Vec<Float>,
    pub weights: Vec<Float>,
    pub provenance: Provenance,
}

impl QuadMeasure {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn precision(&self) -> u32 {
        self.nodes.first().map(Float::prec).unwrap_or(64)
    }

    pub fn total_weight(&self) -> Float {
        let mut acc = Float::new(self.precision());
        for w in &self.weights {
            acc += w;
        }
        acc
    }

    /// `∫ p² dμ` for `p` given by coefficients in increasing degree.
    pub fn norm_sq(&self, coeffs: &[Float]) -> Float {
        let p = self.precision();
        let mut acc = Float::new(p);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let mut v = Float::new(p);
            for c in coeffs.iter().rev() {
                v *= x;
                v += c;
            }
            acc += v.square() * w;
        }
        acc
    }

    pub fn to_csv(&self) -> String {
        let d = crate::cantor::digits_for(self.precision());
        let mut out = String::from("node,weight\n");
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            out.push_str(&format!("{},{}\n", decimal(x, d), decimal(w, d)));
        }
        out
    }
}

fn chebyshev_nodes(m: usize, prec: u32) -> Vec<Float> {
    let pi = Float::with_val(prec + 16, Constant::Pi);
    (1..=m)
        .map(|k| {
            let arg = Float::with_val(prec + 16, &pi * (2 * k as u64 - 1)) / (2 * m as u64);
            Float::with_val(prec, arg.cos())
        })
        .collect()
}

/// Gauss–Chebyshev discretization of the arcsine measure of `[a, b]`.
pub fn arcsine_measure(a: &Float, b: &Float, m: usize, prec: u32) -> Result<QuadMeasure> {
    if m == 0 || a >= b {
        return Err(Error::InvalidInput("arcsine measure needs m >= 1 and a < b".into()));
    }
    let mid = Float::with_val(prec, a + b) / 2u32;
    let half = Float::with_val(prec, b - a) / 2u32;
    let nodes = chebyshev_nodes(m, prec).into_iter().map(|t| Float::with_val(prec, &mid + t * &half)).collect();
    let w = Float::with_val(prec, 1) / m as u64;
    Ok(QuadMeasure {
        nodes,
        weights: vec![w; m],
        provenance: Provenance::ArcsineOnInterval { a: a.to_string(), b: b.to_string(), m },
    })
}

/// Equilibrium measure of `E_s`: all `F_s`-preimages of `m` Chebyshev nodes.
pub fn pullback_quadrature(model: &CantorModel, s: u32, m: usize) -> Result<QuadMeasure> {
    if m == 0 {
        return Err(Error::InvalidInput("pullback quadrature needs m >= 1".into()));
    }
    let prec = model.policy().bits(s);
    let mut nodes = Vec::with_capacity(m << s);
    for t in chebyshev_nodes(m, prec) {
        nodes.extend(model.preimages(s, &t)?);
    }
    let count = nodes.len() as u64;
    let w = Float::with_val(prec, 1) / count;
    Ok(QuadMeasure { weights: vec![w; nodes.len()], nodes, provenance: Provenance::Pullback { s, m } })
}

/// `‖Q_n‖_{L²(μ)}` of the monic orthogonal polynomial.
#[derive(Clone, Debug)]
pub struct GramResult {
    pub n: usize,
    pub monic_norm: LogScalar,
    /// `Q_n` coefficients in increasing degree (`x^n` coefficient is 1).
    pub coefficients: Vec<Float>,
    /// `log2(max pivot / min pivot)` of the elimination.
    pub log2_condition: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GramReport {
    pub n: usize,
    pub ln_monic_norm: String,
    pub log2_condition: f64,
}

impl GramResult {
    pub fn report(&self) -> GramReport {
        GramReport { n: self.n, ln_monic_norm: decimal(self.monic_norm.ln_abs(), 40), log2_condition: self.log2_condition }
    }
}

/// Solves the normal equations `H a = -m` with `H_{ij} = μ_{i+j}` on power
/// moments about the centre of the node range (the monic norm is
/// translation invariant), then `‖Q_n‖² = μ_{2n} + Σ a_j μ_{n+j}`.
pub fn monic_norm(measure: &QuadMeasure, n: usize) -> Result<GramResult> {
    if n >= measure.len() {
        return Err(Error::SingularMoments { n });
    }
    let p = measure.precision();
    if n == 0 {
        return Ok(GramResult {
            n,
            monic_norm: LogScalar::from_float(&measure.total_weight().sqrt()),
            coefficients: vec![Float::with_val(p, 1)],
            log2_condition: 0.0,
        });
    }
    let lo = measure.nodes.iter().min_by(|a, b| a.partial_cmp(b).expect("finite")).expect("nonempty");
    let hi = measure.nodes.iter().max_by(|a, b| a.partial_cmp(b).expect("finite")).expect("nonempty");
    let c = Float::with_val(p, lo + hi) / 2u32;

    let mut mom = vec![Float::new(p); 2 * n + 1];
    for (x, w) in measure.nodes.iter().zip(&measure.weights) {
        let y = Float::with_val(p, x - &c);
        let mut pw = w.clone();
        for mk in mom.iter_mut() {
            *mk += &pw;
            pw *= &y;
        }
    }

    let mut a: Vec<Vec<Float>> = (0..n).map(|i| (0..n).map(|j| mom[i + j].clone()).collect()).collect();
    let mut rhs: Vec<Float> = (0..n).map(|i| -mom[n + i].clone()).collect();
    let mut pivots = Vec::with_capacity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].clone().abs().partial_cmp(&a[j][col].clone().abs()).expect("finite"))
            .expect("nonempty");
        a.swap(col, piv);
        rhs.swap(col, piv);
        let pv = a[col][col].clone();
        if pv.is_zero() {
            return Err(Error::SingularMoments { n });
        }
        pivots.push(Float::with_val(64, pv.abs_ref()));
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot_row = &upper[col];
        for (r, row) in lower.iter_mut().enumerate() {
            let factor = Float::with_val(p, &row[col] / &pv);
            for (x, y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= Float::with_val(p, &factor * y);
            }
            let t = Float::with_val(p, &factor * &rhs[col]);
            rhs[col + 1 + r] -= t;
        }
    }
    let mut sol = vec![Float::new(p); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r].clone();
        for k in r + 1..n {
            acc -= Float::with_val(p, &a[r][k] * &sol[k]);
        }
        sol[r] = acc / &a[r][r];
    }
    let max_p = pivots.iter().max_by(|x, y| x.partial_cmp(y).expect("finite")).expect("n > 0");
    let min_p = pivots.iter().min_by(|x, y| x.partial_cmp(y).expect("finite")).expect("n > 0");
    let log2_condition = Float::with_val(64, max_p / min_p).log2().to_f64();
    if log2_condition > f64::from(p) - 32.0 {
        return Err(Error::SingularMoments { n });
    }

    let mut norm_sq = mom[2 * n].clone();
    for (j, aj) in sol.iter().enumerate() {
        norm_sq += Float::with_val(p, aj * &mom[n + j]);
    }
    if norm_sq <= 0 {
        return Err(Error::SingularMoments { n });
    }

    // expand Σ a_j (x - c)^j + (x - c)^n into powers of x
    let mut shifted = sol;
    shifted.push(Float::with_val(p, 1));
    let coefficients = expand_shift(&shifted, &c);
    Ok(GramResult { n, monic_norm: LogScalar::from_float(&norm_sq.sqrt()), coefficients, log2_condition })
}

/// Coefficients of `q(x - c)` given those of `q`.
fn expand_shift(q: &[Float], c: &Float) -> Vec<Float> {
    let p = c.prec();
    let mut out = vec![Float::new(p); q.len()];
    // Horner in the shifted variable: out = out*(x - c) + q_k
    for qk in q.iter().rev() {
        let mut next = vec![Float::new(p); q.len()];
        for (i, oi) in out.iter().enumerate() {
            if i + 1 < next.len() {
                next[i + 1] += oi;
            }
            next[i] -= Float::with_val(p, oi * c);
        }
        next[0] += qk;
        out = next;
    }
    out
}

/// `ln W_{2,n}(μ) = ln ‖Q_n‖ - n ln Cap`.
pub fn widom_l2_oracle(measure: &QuadMeasure, n: usize, log_cap_ref: &LogScalar) -> Result<LogScalar> {
    let g = monic_norm(measure, n)?;
    let p = measure.precision();
    let v = Float::with_val(p, g.monic_norm.ln_abs() - Float::with_val(p, log_cap_ref.ln_abs() * n as u64));
    Ok(LogScalar::from_ln(v))
}
