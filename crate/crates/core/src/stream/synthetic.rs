use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{into_chunks, Chunk, Group, Instance};
use crate::error::{Error, Result};

const MAX_INFORMATIVE: usize = 10;

/// Positive-class probability per group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseRates {
    pub protected: f64,
    pub unprotected: f64,
}

fn default_protected_fraction() -> f64 {
    0.5
}

fn default_window_size() -> usize {
    1000
}

fn default_true() -> bool {
    true
}

/// Configuration of the synthetic biased stream.
///
/// Feature layout: informative features, noise features, the proxy, and
/// (when `group_feature` is set) a 0/1 indicator of the protected group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasStreamConfig {
    pub n_instances: usize,
    pub d_informative: usize,
    pub d_noise: usize,
    /// Correlation between the latent proxy and the standardized group tag.
    pub proxy_strength: f64,
    pub base_rates: BaseRates,
    /// Instance indices at which the concept flips.
    #[serde(default)]
    pub drift_points: Vec<usize>,
    pub seed: u64,
    #[serde(default = "default_protected_fraction")]
    pub protected_fraction: f64,
    #[serde(default = "default_window_size")]
    pub window_size: usize,
    #[serde(default = "default_true")]
    pub group_feature: bool,
}

impl BiasStreamConfig {
    /// The stream used by the desk-scale fairness experiments: strong proxy,
    /// base-rate gap of 0.3 and two concept flips over 20,000 instances.
    pub fn desk_biased(seed: u64) -> Self {
        Self {
            n_instances: 20_000,
            d_informative: 3,
            d_noise: 3,
            proxy_strength: 0.8,
            base_rates: BaseRates {
                protected: 0.65,
                unprotected: 0.35,
            },
            drift_points: vec![7_000, 14_000],
            seed,
            protected_fraction: 0.5,
            window_size: 250,
            group_feature: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_instances == 0 {
            return bad("n_instances must be positive".into());
        }
        if !(1..=MAX_INFORMATIVE).contains(&self.d_informative) {
            return bad(format!("d_informative must lie in 1..={MAX_INFORMATIVE}"));
        }
        for (name, p) in [
            ("proxy_strength", self.proxy_strength),
            ("base_rates.protected", self.base_rates.protected),
            ("base_rates.unprotected", self.base_rates.unprotected),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        if !(self.protected_fraction > 0.0 && self.protected_fraction < 1.0) {
            return bad("protected_fraction must lie in (0, 1)".into());
        }
        if self.window_size == 0 {
            return bad("window_size must be positive".into());
        }
        if self.drift_points.windows(2).any(|w| w[0] >= w[1]) {
            return bad("drift_points must be strictly increasing".into());
        }
        if self.drift_points.last().is_some_and(|&p| p >= self.n_instances) {
            return bad("drift points must be below n_instances".into());
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d_informative + self.d_noise + 1 + usize::from(self.group_feature)
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.d_informative).map(|i| format!("x{i}")).collect();
        names.extend((0..self.d_noise).map(|i| format!("noise{i}")));
        names.push("proxy".into());
        if self.group_feature {
            names.push("group_indicator".into());
        }
        names
    }
}

/// CDF of the sum of `n` independent U(0,1) variables.
fn irwin_hall_cdf(x: f64, n: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= n as f64 {
        return 1.0;
    }
    let nf = n as i32;
    let mut sum = 0.0;
    let mut binom = 1.0;
    for k in 0..=(x.floor() as usize) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * binom * (x - k as f64).powi(nf);
        binom = binom * (n - k) as f64 / (k + 1) as f64;
    }
    let factorial: f64 = (1..=n).map(|i| i as f64).product();
    (sum / factorial).clamp(0.0, 1.0)
}

/// Generate the synthetic biased stream.
///
/// Labels are positive when the uniform-transformed concept score exceeds
/// `1 - base_rate(group)`, so each group's positive rate matches its base
/// rate and the score decides who within a group is positive. Every drift
/// point mirrors all informative features, flipping the concept.
pub fn generate_bias_stream(config: &BiasStreamConfig) -> Result<Vec<Chunk>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let pi = config.protected_fraction;
    let rho = config.proxy_strength;
    let spread = (1.0 - rho * rho).sqrt();
    let mut instances = Vec::with_capacity(config.n_instances);
    let mut concept = 0usize;
    for i in 0..config.n_instances {
        while concept < config.drift_points.len() && config.drift_points[concept] <= i {
            concept += 1;
        }
        let group = if rng.random::<f64>() < pi {
            Group::Protected
        } else {
            Group::Unprotected
        };
        let mut features = Vec::with_capacity(config.dim());
        for _ in 0..config.d_informative {
            features.push(rng.random::<f64>());
        }
        for _ in 0..config.d_noise {
            features.push(rng.random::<f64>());
        }
        let g = if group.is_protected() { 1.0 } else { 0.0 };
        let standardized = (g - pi) / (pi * (1.0 - pi)).sqrt();
        let noise: f64 = rng.sample(StandardNormal);
        let latent = rho * standardized + spread * noise;
        features.push(1.0 / (1.0 + (-1.702 * latent).exp()));
        if config.group_feature {
            features.push(g);
        }

        let flipped = concept % 2 == 1;
        let score: f64 = features[..config.d_informative]
            .iter()
            .map(|&x| if flipped { 1.0 - x } else { x })
            .sum();
        let quantile = irwin_hall_cdf(score, config.d_informative);
        let rate = match group {
            Group::Protected => config.base_rates.protected,
            Group::Unprotected => config.base_rates.unprotected,
        };
        let label = u8::from(quantile > 1.0 - rate);
        instances.push(Instance {
            features,
            group,
            label,
        });
    }
    into_chunks(instances, config.window_size)
}

/// Write chunks as CSV: one column per feature, then `group`
/// (`protected`/`unprotected`) and `label` (0/1).
pub fn write_stream_csv<W: Write>(chunks: &[Chunk], feature_names: &[String], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = feature_names.iter().map(String::as_str).collect();
    header.extend(["group", "label"]);
    writer.write_record(&header)?;
    for inst in chunks.iter().flat_map(|c| &c.instances) {
        let mut row: Vec<String> = inst.features.iter().map(|v| format!("{v}")).collect();
        row.push(
            match inst.group {
                Group::Protected => "protected",
                Group::Unprotected => "unprotected",
            }
            .to_string(),
        );
        row.push(inst.label.to_string());
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io("<csv output>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn irwin_hall_matches_known_values() {
        assert!((irwin_hall_cdf(0.3, 1) - 0.3).abs() < 1e-12);
        // Triangular: F(0.5) = 0.125, F(1) = 0.5, F(1.5) = 0.875.
        assert!((irwin_hall_cdf(0.5, 2) - 0.125).abs() < 1e-12);
        assert!((irwin_hall_cdf(1.0, 2) - 0.5).abs() < 1e-12);
        assert!((irwin_hall_cdf(1.5, 2) - 0.875).abs() < 1e-12);
        assert!((irwin_hall_cdf(1.5, 3) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn irwin_hall_is_monotone() {
        for n in 1..=MAX_INFORMATIVE {
            let mut prev = 0.0;
            for step in 0..=200 {
                let x = n as f64 * step as f64 / 200.0;
                let f = irwin_hall_cdf(x, n);
                assert!(f + 1e-9 >= prev, "n={n} x={x}");
                prev = f;
            }
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = BiasStreamConfig::desk_biased(0);
        c.drift_points = vec![10, 10];
        assert!(c.validate().is_err());
        let mut c = BiasStreamConfig::desk_biased(0);
        c.drift_points = vec![20_000];
        assert!(c.validate().is_err());
        let mut c = BiasStreamConfig::desk_biased(0);
        c.base_rates.protected = 1.5;
        assert!(c.validate().is_err());
    }
}
