use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rug::Float;
use serde::{Deserialize, Serialize};
use widom_core::cantor::S_CEILING;
use widom_core::{CantorModel, ExactReal, Gamma, PrecisionPolicy, SequenceSpec, TailCertificate};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectGamma {
    pub values: Vec<ExactReal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailCertificate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<DirectGamma>,
    #[serde(default)]
    pub precision: PrecisionPolicy,
    #[serde(default = "default_smax")]
    pub smax: u32,
    #[serde(default = "default_eps_cap")]
    pub eps_cap: ExactReal,
    #[serde(default = "default_eps_green")]
    pub eps_green: ExactReal,
    #[serde(default)]
    pub x0: Vec<ExactReal>,
    /// Largest degree for `verify thm1` rows and the L2 table; `2^smax` if unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<u64>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_smax() -> u32 {
    8
}

fn default_eps_cap() -> ExactReal {
    ExactReal::parse("1e-30").expect("literal")
}

fn default_eps_green() -> ExactReal {
    ExactReal::parse("1/4").expect("literal")
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            sequence: None,
            gamma: None,
            precision: PrecisionPolicy::default(),
            smax: default_smax(),
            eps_cap: default_eps_cap(),
            eps_green: default_eps_green(),
            x0: Vec::new(),
            n_max: None,
            out: default_out(),
            format: Format::default(),
        }
    }
}

impl RunConfig {
    /// Reads TOML or JSON, chosen by extension (`.json` is JSON, anything
    /// else TOML).
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        } else {
            toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        match (&self.sequence, &self.gamma) {
            (Some(_), Some(_)) => bail!("give either `sequence` or `gamma`, not both"),
            (None, None) => bail!("one of `sequence` or `gamma` is required"),
            (Some(seq), None) => seq.validate()?,
            (None, Some(_)) => {}
        }
        self.precision.validate()?;
        if self.smax > S_CEILING {
            bail!("smax = {} exceeds the ceiling {S_CEILING}", self.smax);
        }
        for (name, eps) in [("eps_cap", &self.eps_cap), ("eps_green", &self.eps_green)] {
            if eps.eval(64) <= 0 {
                bail!("{name} must be > 0");
            }
        }
        if self.n_max == Some(0) {
            bail!("n_max must be >= 1");
        }
        Ok(())
    }

    pub fn build_model(&self) -> anyhow::Result<CantorModel> {
        self.validate()?;
        let model = match (&self.sequence, &self.gamma) {
            (Some(seq), _) => CantorModel::from_sequence(seq, self.precision.clone(), self.smax)?,
            (None, Some(g)) => {
                let gamma = Gamma::direct(g.values.clone(), g.tail.clone())?;
                CantorModel::new(gamma, self.precision.clone(), self.smax)?
            }
            (None, None) => unreachable!("validated"),
        };
        Ok(model)
    }

    pub fn n_max(&self) -> u64 {
        self.n_max.unwrap_or(1 << self.smax)
    }

    pub fn eps_cap(&self) -> Float {
        self.eps_cap.eval(128)
    }

    pub fn eps_green(&self) -> Float {
        self.eps_green.eval(128)
    }

    /// Sample points, with `{-0.5, 2}` when none are configured.
    pub fn x0_points(&self) -> Vec<Float> {
        let prec = self.precision.base_bits;
        if self.x0.is_empty() {
            return vec![Float::with_val(prec, -0.5), Float::with_val(prec, 2)];
        }
        self.x0.iter().map(|x| x.eval(prec)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let toml_src = r#"
            smax = 6
            x0 = ["2", "-1/2"]
            format = "json"
            [sequence]
            family = "power"
            a = "e"
            p = "1/2"
        "#;
        let a: RunConfig = toml::from_str(toml_src).unwrap();
        let json = serde_json::to_string(&a).unwrap();
        let b: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.smax, 6);
        assert_eq!(a.format, Format::Json);
        a.validate().unwrap();
    }

    #[test]
    fn direct_gamma_config() {
        let src = r#"
            [gamma]
            values = ["1/6"]
            tail = { kind = "constant", value = "1/6" }
        "#;
        let c: RunConfig = toml::from_str(src).unwrap();
        let m = c.build_model().unwrap();
        let cap = m.log_cap_k(&c.eps_cap()).unwrap();
        assert!((cap.log_cap.to_f64() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        let too_big: RunConfig = toml::from_str("[gamma]\nvalues = [\"0.3\"]\ntail = { kind = \"constant\", value = \"0.3\" }").unwrap();
        assert!(too_big.build_model().is_err());
        let neither = RunConfig::default();
        assert!(neither.validate().is_err());
        let mut deep = RunConfig { sequence: Some(SequenceSpec::constant("e").unwrap()), ..RunConfig::default() };
        deep.smax = 17;
        assert!(deep.validate().is_err());
        deep.smax = 4;
        deep.eps_green = ExactReal::parse("0").unwrap();
        assert!(deep.validate().is_err());
        assert!(toml::from_str::<RunConfig>("smx = 3").is_err());
    }
}
