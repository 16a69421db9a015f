use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Weibull};
use serde::{Deserialize, Serialize};

use super::LogError;
use crate::shs::{EventKind, ShsEvent};

/// A fitted duration distribution, in seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistributionSpec {
    Weibull { scale: f64, shape: f64 },
    Lognormal { mu: f64, sigma: f64 },
    Normal { mean: f64, stddev: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), LogError> {
        let ok = match *self {
            DistributionSpec::Weibull { scale, shape } => scale > 0.0 && shape > 0.0,
            DistributionSpec::Lognormal { mu, sigma } => mu.is_finite() && sigma > 0.0,
            DistributionSpec::Normal { mean, stddev } => mean.is_finite() && stddev >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(LogError::Spec(format!("invalid parameters for {self:?}")))
        }
    }
}

/// One draw from `spec`.
pub fn sample(spec: &DistributionSpec, rng: &mut impl Rng) -> Result<f64, LogError> {
    spec.validate()?;
    let bad = |e: &dyn std::fmt::Display| LogError::Spec(e.to_string());
    Ok(match *spec {
        DistributionSpec::Weibull { scale, shape } => Weibull::new(scale, shape).map_err(|e| bad(&e))?.sample(rng),
        DistributionSpec::Lognormal { mu, sigma } => LogNormal::new(mu, sigma).map_err(|e| bad(&e))?.sample(rng),
        DistributionSpec::Normal { mean, stddev } => Normal::new(mean, stddev).map_err(|e| bad(&e))?.sample(rng),
    })
}

fn default_count() -> usize {
    1049
}
fn default_iat() -> DistributionSpec {
    DistributionSpec::Weibull { scale: 3.7e4, shape: 0.9 }
}
fn default_er_to_iv() -> DistributionSpec {
    DistributionSpec::Weibull { scale: 5.09e3, shape: 0.59 }
}
fn default_er_to_re() -> DistributionSpec {
    DistributionSpec::Lognormal { mu: 13.15, sigma: 0.53 }
}
fn default_probability() -> f64 {
    0.8
}
fn default_k() -> u64 {
    1
}
fn default_bootstrap() -> usize {
    1000
}

/// Parameters of a synthetic log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogSpec {
    #[serde(default = "default_count")]
    pub trajectory_count: usize,
    #[serde(default = "default_iat")]
    pub iat_er: DistributionSpec,
    #[serde(default = "default_er_to_iv")]
    pub er_to_iv: DistributionSpec,
    #[serde(default = "default_er_to_re")]
    pub er_to_re: DistributionSpec,
    #[serde(default = "default_probability")]
    pub iv_probability: f64,
    #[serde(default = "default_probability")]
    pub re_probability: f64,
    #[serde(default = "default_k")]
    pub density_factor: u64,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Draw arrival gaps directly instead of through the bootstrap.
    #[serde(default)]
    pub simple: bool,
    #[serde(default = "default_bootstrap")]
    pub bootstrap_samples: usize,
}

impl Default for LogSpec {
    fn default() -> Self {
        LogSpec {
            trajectory_count: default_count(),
            iat_er: default_iat(),
            er_to_iv: default_er_to_iv(),
            er_to_re: default_er_to_re(),
            iv_probability: default_probability(),
            re_probability: default_probability(),
            density_factor: default_k(),
            seed: None,
            simple: false,
            bootstrap_samples: default_bootstrap(),
        }
    }
}

impl LogSpec {
    pub fn validate(&self) -> Result<u64, LogError> {
        if self.density_factor < 1 {
            return Err(LogError::Spec("density_factor must be at least 1".into()));
        }
        for (name, p) in [("iv_probability", self.iv_probability), ("re_probability", self.re_probability)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(LogError::Spec(format!("{name} must lie in [0, 1]")));
            }
        }
        if !self.simple && self.bootstrap_samples == 0 {
            return Err(LogError::Spec("bootstrap_samples must be positive".into()));
        }
        for d in [&self.iat_er, &self.er_to_iv, &self.er_to_re] {
            d.validate()?;
        }
        self.seed.ok_or_else(|| LogError::Spec("a seed is required".into()))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bootstrapped mean arrival gap: means of simulated logs, resampled.
fn bootstrap_mean(spec: &LogSpec, rng: &mut ChaCha8Rng) -> Result<f64, LogError> {
    let n = spec.trajectory_count.max(1);
    let mut means = Vec::with_capacity(spec.bootstrap_samples);
    for _ in 0..spec.bootstrap_samples {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample(&spec.iat_er, rng)?;
        }
        means.push(sum / n as f64);
    }
    let resampled: Vec<f64> = (0..means.len()).map(|_| *means.choose(rng).expect("non-empty")).collect();
    Ok(mean(&resampled))
}

fn offset(spec: &DistributionSpec, rng: &mut ChaCha8Rng) -> Result<u64, LogError> {
    Ok((sample(spec, rng)?.round() as u64).max(1))
}

/// Generates a seeded log following `spec`, sorted by timestamp.
pub fn synthesize(spec: &LogSpec) -> Result<Vec<ShsEvent>, LogError> {
    let seed = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.density_factor as f64;
    let gap = if spec.simple {
        None
    } else {
        let mu = bootstrap_mean(spec, &mut rng)?;
        Some(DistributionSpec::Normal { mean: mu / k, stddev: mu / (3.0 * k) })
    };
    let width = spec.trajectory_count.to_string().len();
    let mut events = Vec::new();
    let mut clock = 0.0;
    for i in 0..spec.trajectory_count {
        let draw = match &gap {
            Some(d) => loop {
                let x = sample(d, &mut rng)?;
                if x >= 0.0 {
                    break x;
                }
            },
            None => sample(&spec.iat_er, &mut rng)? / k,
        };
        clock += draw;
        let t = clock.round() as u64;
        let id = format!("P{:0width$}", i + 1);
        events.push(ShsEvent::new(EventKind::ER, id.clone(), t));
        if rng.gen_bool(spec.iv_probability) {
            events.push(ShsEvent::new(EventKind::IV, id.clone(), t + offset(&spec.er_to_iv, &mut rng)?));
        }
        if rng.gen_bool(spec.re_probability) {
            events.push(ShsEvent::new(EventKind::RE, id, t + offset(&spec.er_to_re, &mut rng)?));
        }
    }
    events.sort_by_key(|e| e.timestamp);
    Ok(events)
}
