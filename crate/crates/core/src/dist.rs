//! Coefficient distributions, informer processes and the N-informer spec.
//!
//! A variant is described by an inertia-like coefficient `theta0` and an
//! ordered list of (coefficient, informer) pairs. The stability criteria only
//! consume the first two moments of each coefficient, so every distribution
//! declares its mean and variance analytically; samplers exist for Monte
//! Carlo validation and are tested against the declared moments.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Sampler = Arc<dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync>;

/// A distribution with declared moments and a caller-supplied sampler.
///
/// Without a sampler, draws are uniform on `mean ± sqrt(3 * variance)`,
/// which has exactly the declared moments.
#[derive(Clone)]
pub struct CustomDistribution {
    pub mean: f64,
    pub variance: f64,
    sampler: Option<Sampler>,
}

impl CustomDistribution {
    pub fn new(mean: f64, variance: f64) -> Self {
        Self {
            mean,
            variance,
            sampler: None,
        }
    }

    pub fn with_sampler(mean: f64, variance: f64, sampler: Sampler) -> Self {
        Self {
            mean,
            variance,
            sampler: Some(sampler),
        }
    }
}

impl fmt::Debug for CustomDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDistribution")
            .field("mean", &self.mean)
            .field("variance", &self.variance)
            .field("sampler", &self.sampler.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

/// Distribution of a stochastic weight θ.
#[derive(Debug, Clone)]
pub enum CoefficientDistribution {
    Constant(f64),
    /// U(lo, hi).
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// c · U(0, 1).
    ScaledUniform(f64),
    /// a · U(0, 1) + b · U'(0, 1) with independent uniforms.
    Mixture {
        a: f64,
        b: f64,
    },
    Gaussian {
        mean: f64,
        variance: f64,
    },
    Custom(CustomDistribution),
}

impl CoefficientDistribution {
    pub fn constant(value: f64) -> Self {
        Self::Constant(value)
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::Uniform { lo, hi }
    }

    pub fn scaled_uniform(scale: f64) -> Self {
        Self::ScaledUniform(scale)
    }

    /// `scale · (u·r + (1 − u)·r')`, the unified-PSO cognitive weight.
    pub fn mixture(u: f64, scale: f64) -> Self {
        Self::Mixture {
            a: scale * u,
            b: scale * (1.0 - u),
        }
    }

    pub fn gaussian(mean: f64, variance: f64) -> Self {
        Self::Gaussian { mean, variance }
    }

    pub fn custom(mean: f64, variance: f64) -> Self {
        Self::Custom(CustomDistribution::new(mean, variance))
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
            Self::ScaledUniform(c) => 0.5 * c,
            Self::Mixture { a, b } => 0.5 * (a + b),
            Self::Gaussian { mean, .. } => mean,
            Self::Custom(ref c) => c.mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Self::Constant(_) => 0.0,
            Self::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Self::ScaledUniform(c) => c * c / 12.0,
            Self::Mixture { a, b } => (a * a + b * b) / 12.0,
            Self::Gaussian { variance, .. } => variance,
            Self::Custom(ref c) => c.variance,
        }
    }

    /// One i.i.d. draw.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Constant(c) => c,
            Self::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Self::ScaledUniform(c) => c * rng.random::<f64>(),
            Self::Mixture { a, b } => a * rng.random::<f64>() + b * rng.random::<f64>(),
            Self::Gaussian { mean, variance } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + variance.sqrt() * z
            }
            Self::Custom(ref c) => match c.sampler {
                Some(ref s) => s(rng),
                None => {
                    let half_width = (3.0 * c.variance).sqrt();
                    c.mean + half_width * (2.0 * rng.random::<f64>() - 1.0)
                }
            },
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Self::Constant(_))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            Self::Constant(c) | Self::ScaledUniform(c) if !c.is_finite() => {
                bad(format!("non-finite parameter in {self}"))
            }
            Self::Uniform { lo, hi } if !finite(&[lo, hi]) || lo > hi => bad(format!(
                "uniform bounds must be finite with lo <= hi, got {self}"
            )),
            Self::Mixture { a, b } if !finite(&[a, b]) => {
                bad(format!("non-finite parameter in {self}"))
            }
            Self::Gaussian { mean, variance } if !finite(&[mean, variance]) || variance < 0.0 => {
                bad(format!(
                    "gaussian needs finite mean and variance >= 0, got {self}"
                ))
            }
            Self::Custom(ref c) if !finite(&[c.mean, c.variance]) || c.variance < 0.0 => bad(
                format!("custom needs finite mean and variance >= 0, got {self}"),
            ),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for CoefficientDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Constant(c) => write!(f, "const({c})"),
            Self::Uniform { lo, hi } => write!(f, "unif({lo},{hi})"),
            Self::ScaledUniform(c) => write!(f, "scaledunif({c})"),
            Self::Mixture { a, b } => {
                let scale = a + b;
                if scale != 0.0 {
                    write!(f, "mix({},{})", a / scale, scale)
                } else {
                    write!(f, "mixab({a},{b})")
                }
            }
            Self::Gaussian { mean, variance } => write!(f, "gauss({mean},{variance})"),
            Self::Custom(ref c) => write!(f, "custom(mean={},var={})", c.mean, c.variance),
        }
    }
}

/// Splits `name(arg, arg, ...)` into the name and its trimmed arguments.
pub(crate) fn split_call(input: &str) -> Result<(&str, Vec<&str>)> {
    let s = input.trim();
    let open = s
        .find('(')
        .ok_or_else(|| Error::Parse(format!("expected `name(...)`, got `{s}`")))?;
    if !s.ends_with(')') {
        return Err(Error::Parse(format!(
            "missing closing parenthesis in `{s}`"
        )));
    }
    let name = s[..open].trim();
    let inner = s[open + 1..s.len() - 1].trim();
    let args = if inner.is_empty() {
        Vec::new()
    } else {
        inner.split(',').map(str::trim).collect()
    };
    Ok((name, args))
}

pub(crate) fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Parse(format!("`{s}` is not a number")))
}

fn expect_args<'a>(name: &str, args: &'a [&'a str], n: usize) -> Result<Vec<f64>> {
    if args.len() != n {
        return Err(Error::Parse(format!(
            "`{name}` takes {n} argument(s), got {}",
            args.len()
        )));
    }
    args.iter().map(|a| parse_f64(a)).collect()
}

impl FromStr for CoefficientDistribution {
    type Err = Error;

    /// Parses `const(0.7)`, `unif(0,1.4)`, `scaledunif(1.4)`, `mix(0.25,1.4)`,
    /// `gauss(0,0.1)` or `custom(mean=...,var=...)`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = split_call(s)?;
        let dist = match name {
            "const" => Self::constant(expect_args(name, &args, 1)?[0]),
            "unif" => {
                let v = expect_args(name, &args, 2)?;
                Self::uniform(v[0], v[1])
            }
            "scaledunif" => Self::scaled_uniform(expect_args(name, &args, 1)?[0]),
            "mix" => {
                let v = expect_args(name, &args, 2)?;
                Self::mixture(v[0], v[1])
            }
            "mixab" => {
                let v = expect_args(name, &args, 2)?;
                Self::Mixture { a: v[0], b: v[1] }
            }
            "gauss" => {
                let v = expect_args(name, &args, 2)?;
                Self::gaussian(v[0], v[1])
            }
            "custom" => {
                let (mut mean, mut var) = (None, None);
                for arg in &args {
                    let (k, v) = arg
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("expected key=value, got `{arg}`")))?;
                    match k.trim() {
                        "mean" => mean = Some(parse_f64(v)?),
                        "var" => var = Some(parse_f64(v)?),
                        other => return Err(Error::Parse(format!("unknown custom key `{other}`"))),
                    }
                }
                match (mean, var) {
                    (Some(m), Some(v)) => Self::custom(m, v),
                    _ => return Err(Error::Parse("custom needs both mean= and var=".into())),
                }
            }
            other => return Err(Error::Parse(format!("unknown distribution `{other}`"))),
        };
        dist.validate()?;
        Ok(dist)
    }
}

/// How an informer position is generated at each time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InformerGenerator {
    /// Always `limit_mean` (stagnation).
    Constant,
    /// `limit_mean + sqrt(limit_variance) · N(0,1)` at every step.
    Gaussian,
    /// Mean `limit_mean + amplitude · rate^t` plus Gaussian noise of variance
    /// `limit_variance`.
    Decaying { amplitude: f64, rate: f64 },
}

/// A time-dependent informer ζ(t) whose mean and variance converge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InformerProcess {
    pub limit_mean: f64,
    pub limit_variance: f64,
    pub generator: InformerGenerator,
}

impl InformerProcess {
    pub fn constant(position: f64) -> Self {
        Self {
            limit_mean: position,
            limit_variance: 0.0,
            generator: InformerGenerator::Constant,
        }
    }

    pub fn gaussian(mean: f64, variance: f64) -> Self {
        Self {
            limit_mean: mean,
            limit_variance: variance,
            generator: InformerGenerator::Gaussian,
        }
    }

    pub fn decaying(mean: f64, variance: f64, amplitude: f64, rate: f64) -> Self {
        Self {
            limit_mean: mean,
            limit_variance: variance,
            generator: InformerGenerator::Decaying { amplitude, rate },
        }
    }

    /// E[ζ(t)].
    pub fn mean_at(&self, t: u64) -> f64 {
        match self.generator {
            InformerGenerator::Decaying { amplitude, rate } => {
                self.limit_mean + amplitude * rate.powf(t as f64)
            }
            _ => self.limit_mean,
        }
    }

    pub fn sample<R: Rng>(&self, t: u64, rng: &mut R) -> f64 {
        match self.generator {
            InformerGenerator::Constant => self.limit_mean,
            _ => {
                let z: f64 = rng.sample(StandardNormal);
                self.mean_at(t) + self.limit_variance.sqrt() * z
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.generator == InformerGenerator::Constant
    }

    pub fn validate(&self) -> Result<()> {
        if !self.limit_mean.is_finite() || !self.limit_variance.is_finite() {
            return Err(Error::InvalidInformer("non-finite limit".into()));
        }
        if self.limit_variance < 0.0 {
            return Err(Error::InvalidInformer(format!(
                "limit variance must be >= 0, got {}",
                self.limit_variance
            )));
        }
        match self.generator {
            InformerGenerator::Constant if self.limit_variance != 0.0 => Err(
                Error::InvalidInformer("a constant informer has zero variance".into()),
            ),
            InformerGenerator::Decaying { amplitude, rate }
                if !amplitude.is_finite() || !(0.0..1.0).contains(&rate) =>
            {
                Err(Error::InvalidInformer(format!(
                    "decay needs a finite amplitude and rate in [0,1), got ({amplitude}, {rate})"
                )))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for InformerProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.generator {
            InformerGenerator::Constant => write!(f, "const({})", self.limit_mean),
            InformerGenerator::Gaussian => {
                write!(f, "gauss({},{})", self.limit_mean, self.limit_variance)
            }
            InformerGenerator::Decaying { amplitude, rate } => write!(
                f,
                "decay({},{},{},{})",
                self.limit_mean, self.limit_variance, amplitude, rate
            ),
        }
    }
}

impl FromStr for InformerProcess {
    type Err = Error;

    /// Parses a bare number, `const(m)`, `gauss(m,v)` or `decay(m,v,a,r)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let informer = if let Ok(x) = s.parse::<f64>() {
            Self::constant(x)
        } else {
            let (name, args) = split_call(s)?;
            match name {
                "const" => Self::constant(expect_args(name, &args, 1)?[0]),
                "gauss" => {
                    let v = expect_args(name, &args, 2)?;
                    Self::gaussian(v[0], v[1])
                }
                "decay" => {
                    let v = expect_args(name, &args, 4)?;
                    Self::decaying(v[0], v[1], v[2], v[3])
                }
                other => return Err(Error::Parse(format!("unknown informer `{other}`"))),
            }
        };
        informer.validate()?;
        Ok(informer)
    }
}

/// One coefficient/informer pair of the velocity update.
#[derive(Debug, Clone)]
pub struct InformerTerm {
    pub coefficient: CoefficientDistribution,
    pub informer: InformerProcess,
}

/// A complete N-informer variant instance: θ₀ plus I ≥ 1 informer terms.
#[derive(Debug, Clone)]
pub struct NipsoSpec {
    theta0: CoefficientDistribution,
    terms: Vec<InformerTerm>,
}

impl NipsoSpec {
    pub fn new(
        theta0: CoefficientDistribution,
        terms: impl IntoIterator<Item = (CoefficientDistribution, InformerProcess)>,
    ) -> Result<Self> {
        let terms: Vec<InformerTerm> = terms
            .into_iter()
            .map(|(coefficient, informer)| InformerTerm {
                coefficient,
                informer,
            })
            .collect();
        if terms.is_empty() {
            return Err(Error::NoInformers);
        }
        theta0.validate()?;
        for t in &terms {
            t.coefficient.validate()?;
            t.informer.validate()?;
        }
        Ok(Self { theta0, terms })
    }

    pub fn theta0(&self) -> &CoefficientDistribution {
        &self.theta0
    }

    pub fn terms(&self) -> &[InformerTerm] {
        &self.terms
    }

    pub fn informer_count(&self) -> usize {
        self.terms.len()
    }

    /// ψ = Σ E[θ_ι].
    pub fn psi(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.mean()).sum()
    }

    /// φ = Σ V[θ_ι].
    pub fn phi(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.variance()).sum()
    }

    /// Same coefficients, informers replaced. Lengths must match.
    pub fn with_informers(&self, informers: &[InformerProcess]) -> Result<Self> {
        if informers.len() != self.terms.len() {
            return Err(Error::InformerCountMismatch {
                expected: self.terms.len(),
                actual: informers.len(),
            });
        }
        Self::new(
            self.theta0.clone(),
            self.terms
                .iter()
                .zip(informers)
                .map(|(t, z)| (t.coefficient.clone(), *z)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeeder;

    const N: usize = 1_000_000;

    /// Sample mean and unbiased variance of n draws.
    fn empirical(dist: &CoefficientDistribution, seed: u64, n: usize) -> (f64, f64) {
        let mut rng = StreamSeeder::new(seed).stream(0, 0);
        let xs: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (mean, var)
    }

    #[test]
    fn analytic_moments() {
        assert_eq!(CoefficientDistribution::uniform(0.0, 1.4).mean(), 0.7);
        assert_eq!(CoefficientDistribution::scaled_uniform(1.4).mean(), 0.7);
        assert_eq!(CoefficientDistribution::constant(0.7).mean(), 0.7);
        assert_eq!(CoefficientDistribution::constant(0.7).variance(), 0.0);
        let m = CoefficientDistribution::mixture(0.25, 1.0);
        assert!((m.mean() - 0.5).abs() < 1e-15);
        let c1: f64 = 1.4;
        let m = CoefficientDistribution::mixture(0.25, c1);
        let expected = c1 * c1 * (0.25f64.powi(2) + 0.75f64.powi(2)) / 12.0;
        assert!((m.variance() - expected).abs() < 1e-15);
        let u = CoefficientDistribution::uniform(0.0, 2.0);
        assert!((u.variance() - 4.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn scaled_uniform_variance_scales_exactly() {
        let base = CoefficientDistribution::uniform(0.0, 1.0).variance();
        for c in [0.5, 1.4, 2.0, 4.0] {
            let v = CoefficientDistribution::scaled_uniform(c).variance();
            assert_eq!(v, c * c * base);
        }
    }

    #[test]
    fn constant_sampler_is_degenerate() {
        let mut rng = StreamSeeder::new(1).stream(0, 0);
        let d = CoefficientDistribution::constant(0.7);
        assert!((0..100).all(|_| d.sample(&mut rng) == 0.7));
    }

    #[test]
    fn uniform_unit_empirical_mean() {
        let (mean, _) = empirical(&CoefficientDistribution::uniform(0.0, 1.0), 11, N);
        assert!((mean - 0.5).abs() < 0.0015, "mean {mean}");
    }

    #[test]
    fn gaussian_empirical_variance() {
        let (_, var) = empirical(&CoefficientDistribution::gaussian(0.0, 1.0), 12, N);
        assert!((var - 1.0).abs() < 0.005, "variance {var}");
    }

    #[test]
    fn every_kind_matches_declared_moments() {
        let kinds = [
            CoefficientDistribution::uniform(-0.3, 1.4),
            CoefficientDistribution::scaled_uniform(1.4),
            CoefficientDistribution::mixture(0.25, 1.4),
            CoefficientDistribution::gaussian(0.2, 0.3),
            CoefficientDistribution::custom(0.6, 0.05),
            CoefficientDistribution::Custom(CustomDistribution::with_sampler(
                1.0,
                1.0,
                Arc::new(|rng: &mut dyn RngCore| {
                    // Exponential(1) by inversion: mean 1, variance 1.
                    -(1.0 - rng.random::<f64>()).ln()
                }),
            )),
        ];
        for (i, d) in kinds.iter().enumerate() {
            let (mean, var) = empirical(d, 100 + i as u64, N);
            let n = N as f64;
            let se_mean = (d.variance() / n).sqrt();
            assert!(
                (mean - d.mean()).abs() < 3.0 * se_mean,
                "{d}: mean {mean} vs {}",
                d.mean()
            );
            // Var of the sample variance is (μ4 − σ⁴)/n; bound μ4 by 9σ⁴
            // (exponential), which covers every kind here.
            let se_var = (8.0 * d.variance().powi(2) / n).sqrt();
            assert!(
                (var - d.variance()).abs() < 3.0 * se_var,
                "{d}: var {var} vs {}",
                d.variance()
            );
        }
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let seeder = StreamSeeder::new(5);
        let (mut ra, mut rb) = (seeder.stream(0, 1), seeder.stream(0, 2));
        let a = CoefficientDistribution::scaled_uniform(1.4);
        let b = CoefficientDistribution::gaussian(0.0, 1.0);
        let pairs: Vec<(f64, f64)> = (0..N)
            .map(|_| (a.sample(&mut ra), b.sample(&mut rb)))
            .collect();
        let n = N as f64;
        let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>() / (n - 1.0);
        let se = (a.variance() * b.variance() / n).sqrt();
        assert!(cov.abs() < 3.0 * se, "cov {cov}, se {se}");
    }

    #[test]
    fn parses_grammar() {
        let cases = [
            ("const(0.7)", 0.7, 0.0),
            ("unif(0,1.4)", 0.7, 1.96 / 12.0),
            ("scaledunif(1.4)", 0.7, 1.96 / 12.0),
            ("gauss(0, 0.1)", 0.0, 0.1),
            ("custom(mean=0.3, var=0.02)", 0.3, 0.02),
        ];
        for (s, m, v) in cases {
            let d: CoefficientDistribution = s.parse().unwrap();
            assert!((d.mean() - m).abs() < 1e-15, "{s}");
            assert!((d.variance() - v).abs() < 1e-15, "{s}");
        }
        let d: CoefficientDistribution = "mix(0.25,1.4)".parse().unwrap();
        assert!((d.mean() - 0.7).abs() < 1e-15);
        let round: CoefficientDistribution = d.to_string().parse().unwrap();
        assert!((round.variance() - d.variance()).abs() < 1e-15);
    }

    #[test]
    fn rejects_malformed_literals() {
        for s in [
            "unif(1)",
            "gauss(0,-1)",
            "unif(2,1)",
            "pareto(1)",
            "const 0.7",
            "custom(mean=1)",
            "const(abc)",
        ] {
            assert!(s.parse::<CoefficientDistribution>().is_err(), "{s}");
        }
    }

    #[test]
    fn informer_invariants() {
        let z = InformerProcess::constant(3.0);
        let mut rng = StreamSeeder::new(0).stream(0, 0);
        assert!((0..10).all(|t| z.sample(t, &mut rng) == 3.0));
        assert_eq!(z.limit_variance, 0.0);
        assert!(InformerProcess::gaussian(0.0, -1.0).validate().is_err());
        assert!(InformerProcess::decaying(0.0, 0.0, 1.0, 1.5)
            .validate()
            .is_err());
        let d: InformerProcess = "decay(1,0.5,2,0.9)".parse().unwrap();
        assert!((d.mean_at(1) - 2.8).abs() < 1e-12);
        assert_eq!(
            "2.5".parse::<InformerProcess>().unwrap(),
            InformerProcess::constant(2.5)
        );
    }

    #[test]
    fn spec_requires_informers() {
        let r = NipsoSpec::new(CoefficientDistribution::constant(0.7), Vec::new());
        assert_eq!(r.unwrap_err(), Error::NoInformers);
        let r = NipsoSpec::new(
            CoefficientDistribution::constant(0.7),
            [(
                CoefficientDistribution::gaussian(0.0, -1.0),
                InformerProcess::constant(0.0),
            )],
        );
        assert!(r.is_err());
    }
}
