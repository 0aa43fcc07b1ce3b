use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use rug::Float;
use serde::Serialize;
use widom_core::cantor::{decimal, digits_for, ModelMetadata};
use widom_core::invariants::{run_invariants, InvariantOptions, InvariantReport};
use widom_core::potential::{green_bracket_at, BracketRow, HarnackMethod, PointContext};
use widom_core::widom::{
    block_of, check_thm1, check_thm2_in, l2_rows, residual_widom_dyadic, sup_rows, RowRecord, WidomRow,
};
use widom_core::PrecisionPolicy;

use crate::config::{Format, RunConfig};

/// Outcome of a command: `failures` counts certified rows or checks that
/// did not hold.
pub struct Outcome {
    pub failures: usize,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    precision: &'a PrecisionPolicy,
    rows: T,
}

fn write(out: &Path, name: &str, body: &str) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(name);
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: Serialize>(cfg: &RunConfig, name: &str, rows: T) -> anyhow::Result<()> {
    let env = Envelope { precision: &cfg.precision, rows };
    write(&cfg.out, name, &(serde_json::to_string_pretty(&env)? + "\n"))
}

fn write_rows(cfg: &RunConfig, stem: &str, rows: &[WidomRow]) -> anyhow::Result<()> {
    match cfg.format {
        Format::Csv => {
            let mut body = String::from(WidomRow::csv_header());
            body.push('\n');
            for r in rows {
                body.push_str(&r.to_csv());
                body.push('\n');
            }
            write(&cfg.out, &format!("{stem}.csv"), &body)
        }
        Format::Json => {
            let recs: Vec<RowRecord> = rows.iter().map(WidomRow::record).collect();
            write_json(cfg, &format!("{stem}.json"), recs)
        }
    }
}

/// Plot data: degree against ln W, whitespace separated.
fn write_plot(cfg: &RunConfig, stem: &str, rows: &[WidomRow]) -> anyhow::Result<()> {
    let mut body = String::from("# n ln_value_lo ln_value_hi\n");
    for r in rows {
        let x0 = r.x0.as_ref().map(|x| format!("{} ", decimal(x, 20))).unwrap_or_default();
        writeln!(body, "{x0}{} {} {}", r.n, decimal(&r.ln_value_lo, 20), decimal(&r.ln_value_hi, 20))?;
    }
    write(&cfg.out, &format!("{stem}.dat"), &body)
}

fn summarize(rows: &[WidomRow]) -> Outcome {
    let failures = rows.iter().filter(|r| r.is_failure()).count();
    let certified = rows.iter().filter(|r| r.certified).count();
    println!("{certified} certified rows, {failures} failed, {} informational", rows.len() - certified);
    Outcome { failures }
}

#[derive(Serialize)]
struct LevelSummary {
    s: u32,
    gamma: Option<String>,
    ln_r: String,
    ln_cap: String,
    bits: u32,
}

#[derive(Serialize)]
struct BuildReport {
    metadata: ModelMetadata,
    precision: PrecisionPolicy,
    levels: Vec<LevelSummary>,
}

pub fn build(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let eps_cap = cfg.eps_cap();
    let metadata = model.metadata(&eps_cap)?;
    let mut levels = Vec::new();
    for s in 0..=cfg.smax {
        let bits = model.policy().scalar_bits(s);
        let d = digits_for(bits);
        let gamma = if s == 0 { None } else { Some(decimal(&model.gamma().gamma(u64::from(s), bits)?, d)) };
        levels.push(LevelSummary {
            s,
            gamma,
            ln_r: decimal(model.log_r(s)?.ln_abs(), d),
            ln_cap: decimal(model.log_cap_level(s)?.ln_abs(), d),
            bits,
        });
    }
    let cap = model.log_cap_k(&eps_cap)?;
    println!(
        "Cap(K) = {} (ln = {}, error <= {}), smallGamma = {}, levels 0..{}",
        decimal(&cap.log_cap.to_float(cap.log_cap.precision()), 30),
        decimal(cap.log_cap.ln_abs(), 30),
        decimal(&cap.err, 3),
        metadata.small_gamma,
        cfg.smax
    );
    if metadata.prefix_certified_only {
        println!("note: sequence table has no extension rule; results are certified on the prefix only");
    }
    let report = BuildReport { metadata, precision: cfg.precision.clone(), levels };
    write(&cfg.out, "model.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    write(&cfg.out, "config.json", &(serde_json::to_string_pretty(cfg)? + "\n"))?;
    Ok(Outcome { failures: 0 })
}

pub fn verify_thm1(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let rows = check_thm1(&model, cfg.n_max())?;
    write_rows(cfg, "thm1", &rows)?;
    Ok(summarize(&rows))
}

pub fn verify_thm2(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let eps = cfg.eps_green();
    let mut rows = Vec::new();
    for x0 in cfg.x0_points() {
        let ctx = PointContext::new(&model, &x0, &cfg.eps_cap())?;
        rows.extend(check_thm2_in(&model, &ctx, cfg.smax, &eps)?);
    }
    write_rows(cfg, "thm2", &rows)?;
    Ok(summarize(&rows))
}

pub fn verify_invariants(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let mut opts = InvariantOptions::for_model(&model);
    opts.x0 = cfg.x0_points();
    opts.eps_cap = cfg.eps_cap();
    let report: InvariantReport = run_invariants(&model, &opts)?;
    for c in &report.checks {
        println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
    }
    match cfg.format {
        Format::Csv => {
            let mut body = String::from("name,passed,detail\n");
            for c in &report.checks {
                writeln!(body, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"))?;
            }
            write(&cfg.out, "invariants.csv", &body)?;
        }
        Format::Json => write_json(cfg, "invariants.json", &report.checks)?,
    }
    Ok(Outcome { failures: report.failures().count() })
}

pub fn report_sup(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let rows = sup_rows(&model, cfg.smax)?;
    write_rows(cfg, "widom-sup", &rows)?;
    write_plot(cfg, "widom-sup", &rows)?;
    Ok(summarize(&rows))
}

pub fn report_l2(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let rows = l2_rows(&model, block_of(cfg.n_max()))?;
    write_rows(cfg, "widom-l2", &rows)?;
    write_plot(cfg, "widom-l2", &rows)?;
    Ok(summarize(&rows))
}

#[derive(Serialize)]
struct ResidualRecord {
    x0: String,
    s: u32,
    n: u64,
    ln_value_lo: String,
    ln_value_hi: String,
    green_level: u32,
    tau_lo: String,
    tau_hi: String,
}

pub fn report_residual(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let eps = cfg.eps_green();
    let mut recs = Vec::new();
    for x0 in cfg.x0_points() {
        let ctx = PointContext::new(&model, &x0, &cfg.eps_cap())?;
        for s in ctx.gap.first_level()..=cfg.smax {
            let rw = residual_widom_dyadic(&model, &ctx, s, &eps)?;
            recs.push(ResidualRecord {
                x0: decimal(&x0, 20),
                s,
                n: 1 << s,
                ln_value_lo: decimal(&rw.ln_lo, 40),
                ln_value_hi: decimal(&rw.ln_hi, 40),
                green_level: rw.green.s,
                tau_lo: decimal(&ctx.harnack.lo, 40),
                tau_hi: decimal(&ctx.harnack.hi, 40),
            });
        }
    }
    match cfg.format {
        Format::Csv => {
            let mut body = String::from("x0,s,n,ln_value_lo,ln_value_hi,green_level,tau_lo,tau_hi\n");
            for r in &recs {
                writeln!(
                    body,
                    "{},{},{},{},{},{},{},{}",
                    r.x0, r.s, r.n, r.ln_value_lo, r.ln_value_hi, r.green_level, r.tau_lo, r.tau_hi
                )?;
            }
            write(&cfg.out, "widom-res.csv", &body)?;
        }
        Format::Json => write_json(cfg, "widom-res.json", &recs)?,
    }
    let mut plot = String::from("# x0 n ln_value_lo ln_value_hi\n");
    for r in &recs {
        writeln!(plot, "{} {} {} {}", r.x0, r.n, r.ln_value_lo, r.ln_value_hi)?;
    }
    write(&cfg.out, "widom-res.dat", &plot)?;
    println!("{} residual brackets", recs.len());
    Ok(Outcome { failures: 0 })
}

fn bracket_csv(rows: &[BracketRow]) -> String {
    let mut body = String::from("x0,s,g_lo,g_hi,tau_lo,tau_hi,method\n");
    for r in rows {
        let method = match r.method {
            HarnackMethod::ExactOneSlit => "exact-one-slit",
            HarnackMethod::ChainAndComparison => "chain-and-comparison",
        };
        body.push_str(&format!("{},{},{},{},{},{},{}\n", r.x0, r.s, r.g_lo, r.g_hi, r.tau_lo, r.tau_hi, method));
    }
    body
}

pub fn report_green(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let mut rows = Vec::new();
    for x0 in cfg.x0_points() {
        let ctx = PointContext::new(&model, &x0, &cfg.eps_cap())?;
        for s in ctx.gap.first_level()..=cfg.smax {
            rows.push(green_bracket_at(&model, &ctx, s)?.row());
        }
    }
    match cfg.format {
        Format::Csv => write(&cfg.out, "green.csv", &bracket_csv(&rows))?,
        Format::Json => write_json(cfg, "green.json", &rows)?,
    }
    println!("{} Green brackets", rows.len());
    Ok(Outcome { failures: 0 })
}

#[derive(Serialize)]
struct HarnackRecord {
    x0: String,
    s0: Option<u32>,
    tau_lo: String,
    tau_hi: String,
    method: HarnackMethod,
}

pub fn report_harnack(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let mut recs = Vec::new();
    for x0 in cfg.x0_points() {
        let ctx = PointContext::new(&model, &x0, &cfg.eps_cap())?;
        let s0 = ctx.gap.is_bounded().then(|| ctx.gap.first_level());
        recs.push(HarnackRecord {
            x0: decimal(&x0, 20),
            s0,
            tau_lo: decimal(&ctx.harnack.lo, 40),
            tau_hi: decimal(&ctx.harnack.hi, 40),
            method: ctx.harnack.method,
        });
    }
    match cfg.format {
        Format::Csv => {
            let mut body = String::from("x0,s0,tau_lo,tau_hi,method\n");
            for r in &recs {
                let method = serde_json::to_value(r.method)?;
                writeln!(
                    body,
                    "{},{},{},{},{}",
                    r.x0,
                    r.s0.map(|s| s.to_string()).unwrap_or_default(),
                    r.tau_lo,
                    r.tau_hi,
                    method.as_str().unwrap_or_default()
                )?;
            }
            write(&cfg.out, "harnack.csv", &body)?;
        }
        Format::Json => write_json(cfg, "harnack.json", &recs)?,
    }
    for r in &recs {
        println!("x0 = {}: tau in [{}, {}]", r.x0, r.tau_lo, r.tau_hi);
    }
    Ok(Outcome { failures: 0 })
}

#[derive(Serialize)]
struct LevelRecord {
    s: u32,
    j: usize,
    left: String,
    right: String,
}

pub fn report_levels(cfg: &RunConfig, level: Option<u32>) -> anyhow::Result<Outcome> {
    let model = cfg.build_model()?;
    let s = level.unwrap_or(cfg.smax);
    if s > model.s_max() {
        anyhow::bail!("level {s} is above smax = {}", model.s_max());
    }
    let lv = model.level(s)?;
    let digits = digits_for(lv.bits);
    match cfg.format {
        Format::Csv => write(&cfg.out, &format!("levels-{s}.csv"), &lv.to_csv(digits))?,
        Format::Json => {
            let recs: Vec<LevelRecord> = (1..=lv.interval_count())
                .map(|j| {
                    let (a, b) = lv.interval(j);
                    LevelRecord { s, j, left: decimal(a, digits), right: decimal(b, digits) }
                })
                .collect();
            write_json(cfg, &format!("levels-{s}.json"), &recs)?;
        }
    }
    let total: Float = lv.total_length();
    println!("level {s}: {} intervals, total length {}", lv.interval_count(), decimal(&total, 20));
    Ok(Outcome { failures: 0 })
}
