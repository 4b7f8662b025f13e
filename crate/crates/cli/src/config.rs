use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use qdisk::analysis::VerifyOptions;
use qdisk::dirac::TripleData;
use qdisk::sequences::{normalize_weight, PowerLawFamily, Sequence};
use serde::{Deserialize, Serialize};

/// Relative accuracy used when normalizing weights.
const WEIGHT_TOL: f64 = 1e-13;

pub const PRESETS: [(&str, (f64, f64, f64)); 3] =
    [("default", (4.0, 3.0, 5.5)), ("kernel-1", (4.0, 3.0, 9.0)), ("kernel-2", (4.0, 3.0, 10.0))];

pub fn preset(name: &str) -> Result<PowerLawFamily> {
    let (_, (a, b, c)) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| anyhow!("unknown preset `{name}` (known: default, kernel-1, kernel-2)"))?;
    Ok(PowerLawFamily::new(*a, *b, *c)?)
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    family: Option<FamilyFields>,
    sequences: Option<SequenceFields>,
    #[serde(rename = "K")]
    size: Option<usize>,
    modes: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    #[serde(default)]
    tolerances: ToleranceFields,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyFields {
    a: f64,
    b: f64,
    c: f64,
}

/// Unnormalized sequences; the weights are normalized on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFields {
    pub beta: Sequence,
    pub mu: Sequence,
    pub w: Sequence,
    pub w_prime: Sequence,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ToleranceFields {
    identity: Option<f64>,
    covariance: Option<f64>,
    parametrix: Option<f64>,
    tail: Option<f64>,
    stabilization: Option<f64>,
}

/// Flag overrides; each one beats the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub size: Option<usize>,
    pub modes: Option<String>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataSource {
    Family { name: Option<String>, family: PowerLawFamily },
    Custom { sequences: SequenceFields },
}

/// A validated run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub source: DataSource,
    pub options: VerifyOptions,
    /// Where results go; not part of the results themselves.
    #[serde(skip)]
    pub out: PathBuf,
    /// Fields that took their default value.
    pub defaulted: Vec<String>,
}

/// `MIN..MAX`, inclusive; `MIN > MAX` is an empty window.
pub fn parse_modes(s: &str) -> Result<(i64, i64)> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| anyhow!("modes: expected MIN..MAX, got `{s}`"))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<i64>()
            .with_context(|| format!("modes: `{x}` is not an integer"))
    };
    Ok((parse(lo)?, parse(hi)?))
}

impl RunConfig {
    pub fn load(path: Option<&Path>, over: &Overrides) -> Result<Self> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str::<FileConfig>(&text).map_err(|e| anyhow!("{}: {e}", p.display()))?
            }
            None => FileConfig::default(),
        };
        Self::resolve(file, over)
    }

    #[cfg(test)]
    pub fn from_toml(text: &str, over: &Overrides) -> Result<Self> {
        Self::resolve(toml::from_str(text)?, over)
    }

    fn resolve(file: FileConfig, over: &Overrides) -> Result<Self> {
        let mut defaulted = Vec::new();
        let base = VerifyOptions::default();

        let preset_name = over.preset.clone().or(file.preset);
        let source = match (preset_name, file.family, file.sequences) {
            (Some(name), _, _) if over.preset.is_some() => DataSource::Family { family: preset(&name)?, name: Some(name) },
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) | (None, Some(_), Some(_)) => {
                bail!("config: give only one of `preset`, `[family]` and `[sequences]`")
            }
            (Some(name), None, None) => DataSource::Family { family: preset(&name)?, name: Some(name) },
            (None, Some(f), None) => DataSource::Family {
                name: None,
                family: PowerLawFamily::new(f.a, f.b, f.c).context("config field `family`")?,
            },
            (None, None, Some(s)) => DataSource::Custom { sequences: s },
            (None, None, None) => {
                defaulted.push("preset".to_string());
                DataSource::Family { family: preset("default")?, name: Some("default".to_string()) }
            }
        };

        let mut pick = |name: &str, flag: Option<f64>, file: Option<f64>, default: f64| -> Result<f64> {
            let v = flag.or(file).unwrap_or_else(|| {
                defaulted.push(name.to_string());
                default
            });
            if !(v >= 0.0 && v.is_finite()) {
                bail!("config field `{name}`: expected a finite nonnegative number, got {v}");
            }
            Ok(v)
        };
        let t = &file.tolerances;
        let identity_tol = pick("tolerances.identity", over.tol, t.identity, base.identity_tol)?;
        let covariance_tol = pick("tolerances.covariance", over.tol, t.covariance, base.covariance_tol)?;
        let parametrix_tol = pick("tolerances.parametrix", over.tol, t.parametrix, base.parametrix_tol)?;
        let tail_tol = pick("tolerances.tail", None, t.tail, base.tail_tol)?;
        let stabilization_tol = pick("tolerances.stabilization", None, t.stabilization, base.stabilization_tol)?;
        if tail_tol == 0.0 {
            bail!("config field `tolerances.tail`: must be positive");
        }

        let size = over.size.or(file.size).unwrap_or_else(|| {
            defaulted.push("K".to_string());
            base.size
        });
        if size < 8 {
            bail!("config field `K`: need K >= 8, got {size}");
        }
        let (n_min, n_max) = match over.modes.as_deref().or(file.modes.as_deref()) {
            Some(s) => parse_modes(s)?,
            None => {
                defaulted.push("modes".to_string());
                (base.n_min, base.n_max)
            }
        };
        let seed = over.seed.or(file.seed).unwrap_or_else(|| {
            defaulted.push("seed".to_string());
            base.seed
        });
        let out = over.out.clone().or(file.out).unwrap_or_else(|| {
            defaulted.push("out".to_string());
            PathBuf::from("qdisk-out")
        });

        let options = VerifyOptions {
            size,
            n_min,
            n_max,
            seed,
            identity_tol,
            covariance_tol,
            parametrix_tol,
            stabilization_tol,
            tail_tol,
            commutator_sizes: vec![(size / 2).max(8), size],
            ..base
        };
        let cfg = Self { source, options, out, defaulted };
        cfg.data()?;
        Ok(cfg)
    }

    pub fn data(&self) -> Result<TripleData> {
        Ok(match &self.source {
            DataSource::Family { family, .. } => TripleData::from_family(*family, WEIGHT_TOL)?,
            DataSource::Custom { sequences: s } => {
                let w = normalize_weight(&s.w, WEIGHT_TOL).context("config field `sequences.w`")?;
                let wp = normalize_weight(&s.w_prime, WEIGHT_TOL).context("config field `sequences.w_prime`")?;
                TripleData::new(s.beta.clone(), s.mu.clone(), w, wp)?
            }
        })
    }

    /// Comment lines describing the data and the defaulted fields.
    pub fn header(&self, command: &str) -> String {
        let data = match &self.source {
            DataSource::Family { name, family } => format!(
                "power-law family a={} b={} c={}{}",
                family.a,
                family.b,
                family.c,
                name.as_ref().map(|n| format!(" (preset {n})")).unwrap_or_default()
            ),
            DataSource::Custom { .. } => "custom sequences".to_string(),
        };
        let o = &self.options;
        let defaulted = if self.defaulted.is_empty() {
            "none".to_string()
        } else {
            self.defaulted.join(", ")
        };
        format!(
            "# qdisk {command}\n# data: {data}\n# K={} modes={}..{} seed={}\n# defaulted: {defaulted}\n",
            o.size, o.n_min, o.n_max, o.seed
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default_preset() {
        let cfg = RunConfig::from_toml("", &Overrides::default()).unwrap();
        assert_eq!(
            cfg.source,
            DataSource::Family { name: Some("default".into()), family: PowerLawFamily::new(4.0, 3.0, 5.5).unwrap() }
        );
        assert!(cfg.defaulted.contains(&"K".to_string()));
        assert!(cfg.header("check").contains("defaulted: preset"));
    }

    #[test]
    fn flags_override_file() {
        let over = Overrides { size: Some(64), modes: Some("-2..2".into()), tol: Some(0.0), ..Default::default() };
        let cfg = RunConfig::from_toml("K = 100\nseed = 7\n[family]\na = 4\nb = 3\nc = 9\n", &over).unwrap();
        assert_eq!(cfg.options.size, 64);
        assert_eq!((cfg.options.n_min, cfg.options.n_max), (-2, 2));
        assert_eq!(cfg.options.seed, 7);
        assert_eq!(cfg.options.identity_tol, 0.0);
        assert!(!cfg.defaulted.contains(&"seed".to_string()));
    }

    #[test]
    fn boundary_family_is_rejected() {
        let err = RunConfig::from_toml("[family]\na = 4\nb = 3\nc = 5\n", &Overrides::default()).unwrap_err();
        assert!(format!("{err:#}").contains("3 < a < 2b - 1 < c"), "{err:#}");
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = RunConfig::from_toml("K = \"big\"\n", &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
        let err = RunConfig::from_toml("colour = 1\n", &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
        assert!(parse_modes("3").is_err());
        assert_eq!(parse_modes("1..0").unwrap(), (1, 0));
    }

    #[test]
    fn custom_sequences_parse() {
        let text = r#"
[sequences]
beta = { kind = "affine", slope = 1.0, offset = 1.0 }
mu = { kind = "power_law", exponent = -3.0, scale = 1.0 }
w = { kind = "power_law", exponent = -5.5, scale = 1.0 }
w_prime = { kind = "power_law", exponent = -4.0, scale = 1.0 }
"#;
        let cfg = RunConfig::from_toml(text, &Overrides::default()).unwrap();
        assert!(matches!(cfg.source, DataSource::Custom { .. }));
        cfg.data().unwrap();
    }
}
