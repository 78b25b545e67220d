//! Flat `key = value` run files.
//!
//! ```text
//! # named variant with informer limit means
//! variant = cpso
//! w = 0.7
//! c1 = 1.4
//! c2 = 1.4
//! informers = 0, 1
//!
//! # or an explicit spec
//! variant = custom
//! theta0 = gauss(0.5, 0.01)
//! informer = scaledunif(1.4) @ const(0)
//! informer = mix(0.3, 1.5) @ decay(1, 0.1, 2, 0.9)
//!
//! steps = 5000
//! runs = 10000
//! seed = 7
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dist::{CoefficientDistribution, InformerProcess, NipsoSpec};
use crate::error::{Error, Result};
use crate::simulation::{InitialCondition, RecurrenceRun, Tolerances};
use crate::variants::{CpsoParams, FipsParams, UpsoParams, Variant};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub variant: Variant,
    /// Informer limit means for named variants; empty means all zero.
    pub informer_means: Vec<f64>,
    pub steps: usize,
    pub runs: usize,
    pub seed: Option<u64>,
    pub init: InitialCondition,
    pub output_dir: Option<PathBuf>,
    pub tolerances: Tolerances,
}

#[derive(Default)]
struct Raw {
    variant: Option<String>,
    w: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    chat: Option<f64>,
    nsize: Option<usize>,
    u: Option<f64>,
    informers: Vec<f64>,
    theta0: Option<CoefficientDistribution>,
    terms: Vec<(CoefficientDistribution, InformerProcess)>,
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Parse(format!("line {line}: invalid value for `{key}`: {e}")))
}

fn parse_list(value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value("informers", s, line))
        .collect()
}

fn required<T>(value: Option<T>, key: &str, variant: &str) -> Result<T> {
    value.ok_or_else(|| Error::Parse(format!("variant `{variant}` requires `{key}`")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = Raw::default();
        let mut cfg = RunConfig {
            variant: Variant::Cpso(CpsoParams {
                w: 0.0,
                c1: 0.0,
                c2: 0.0,
            }),
            informer_means: Vec::new(),
            steps: 2000,
            runs: 2000,
            seed: None,
            init: InitialCondition::default(),
            output_dir: None,
            tolerances: Tolerances::default(),
        };

        for (idx, full) in text.lines().enumerate() {
            let line = idx + 1;
            let content = full.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {line}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "variant" => raw.variant = Some(value.to_ascii_lowercase()),
                "w" => raw.w = Some(parse_value(key, value, line)?),
                "c1" => raw.c1 = Some(parse_value(key, value, line)?),
                "c2" => raw.c2 = Some(parse_value(key, value, line)?),
                "chat" => raw.chat = Some(parse_value(key, value, line)?),
                "nsize" => raw.nsize = Some(parse_value(key, value, line)?),
                "u" => raw.u = Some(parse_value(key, value, line)?),
                "informers" => raw.informers = parse_list(value, line)?,
                "theta0" => raw.theta0 = Some(parse_value(key, value, line)?),
                "informer" => {
                    let (coef, inf) = value.split_once('@').ok_or_else(|| {
                        Error::Parse(format!(
                            "line {line}: expected `informer = <dist> @ <informer>`"
                        ))
                    })?;
                    raw.terms.push((
                        parse_value(key, coef.trim(), line)?,
                        parse_value(key, inf.trim(), line)?,
                    ));
                }
                "steps" => cfg.steps = parse_value(key, value, line)?,
                "runs" => cfg.runs = parse_value(key, value, line)?,
                "seed" => cfg.seed = Some(parse_value(key, value, line)?),
                "x0_lo" => cfg.init.x0_lo = parse_value(key, value, line)?,
                "x0_hi" => cfg.init.x0_hi = parse_value(key, value, line)?,
                "v0" => cfg.init.v0 = parse_value(key, value, line)?,
                "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
                "mean_se_multiple" => {
                    cfg.tolerances.mean_se_multiple = parse_value(key, value, line)?
                }
                "var_relative" => cfg.tolerances.var_relative = parse_value(key, value, line)?,
                "absolute_floor" => cfg.tolerances.absolute_floor = parse_value(key, value, line)?,
                other => return Err(Error::Parse(format!("line {line}: unknown key `{other}`"))),
            }
        }

        let has_terms = raw.theta0.is_some() || !raw.terms.is_empty();
        let name = raw.variant.clone().unwrap_or_else(|| {
            if has_terms {
                "custom".into()
            } else {
                String::new()
            }
        });
        cfg.variant = match name.as_str() {
            "cpso" => Variant::Cpso(CpsoParams {
                w: required(raw.w, "w", &name)?,
                c1: required(raw.c1, "c1", &name)?,
                c2: required(raw.c2, "c2", &name)?,
            }),
            "fips" => Variant::Fips(FipsParams {
                w: required(raw.w, "w", &name)?,
                c_hat: required(raw.chat, "chat", &name)?,
                n_size: required(raw.nsize, "nsize", &name)?,
            }),
            "upso" => Variant::Upso(UpsoParams {
                w: required(raw.w, "w", &name)?,
                c1: required(raw.c1, "c1", &name)?,
                c2: required(raw.c2, "c2", &name)?,
                u: required(raw.u, "u", &name)?,
            }),
            "custom" => {
                let theta0 = required(raw.theta0, "theta0", &name)?;
                if raw.terms.is_empty() {
                    return Err(Error::NoInformers);
                }
                Variant::Custom(NipsoSpec::new(theta0, raw.terms)?)
            }
            "" => return Err(Error::Parse("missing `variant`".into())),
            other => return Err(Error::Parse(format!("unknown variant `{other}`"))),
        };
        cfg.informer_means = raw.informers;
        // Surface informer-count mismatches at load time.
        cfg.spec()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn spec(&self) -> Result<NipsoSpec> {
        self.variant.spec(&self.informer_means)
    }

    pub fn recurrence_run(&self, seed: u64) -> Result<RecurrenceRun> {
        Ok(RecurrenceRun {
            spec: self.spec()?,
            steps: self.steps,
            runs: self.runs,
            seed,
            init: self.init,
        })
    }

    /// Fully resolved configuration in the same `key = value` form, so it
    /// can be embedded in outputs and parsed back.
    pub fn resolved(&self, seed: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "variant = {}", self.variant.name());
        match &self.variant {
            Variant::Cpso(p) => {
                let _ = writeln!(out, "w = {}\nc1 = {}\nc2 = {}", p.w, p.c1, p.c2);
            }
            Variant::Fips(p) => {
                let _ = writeln!(out, "w = {}\nchat = {}\nnsize = {}", p.w, p.c_hat, p.n_size);
            }
            Variant::Upso(p) => {
                let _ = writeln!(
                    out,
                    "w = {}\nc1 = {}\nc2 = {}\nu = {}",
                    p.w, p.c1, p.c2, p.u
                );
            }
            Variant::Custom(spec) => {
                let _ = writeln!(out, "theta0 = {}", spec.theta0());
                for t in spec.terms() {
                    let _ = writeln!(out, "informer = {} @ {}", t.coefficient, t.informer);
                }
            }
        }
        if !self.informer_means.is_empty() {
            let list: Vec<String> = self.informer_means.iter().map(f64::to_string).collect();
            let _ = writeln!(out, "informers = {}", list.join(", "));
        }
        let _ = writeln!(
            out,
            "steps = {}\nruns = {}\nseed = {seed}",
            self.steps, self.runs
        );
        let _ = writeln!(
            out,
            "x0_lo = {}\nx0_hi = {}\nv0 = {}",
            self.init.x0_lo, self.init.x0_hi, self.init.v0
        );
        if let Some(dir) = &self.output_dir {
            let _ = writeln!(out, "output_dir = {}", dir.display());
        }
        let t = &self.tolerances;
        let _ = writeln!(
            out,
            "mean_se_multiple = {}\nvar_relative = {}\nabsolute_floor = {}",
            t.mean_se_multiple, t.var_relative, t.absolute_floor
        );
        out
    }
}
