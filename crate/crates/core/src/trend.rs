//! Trend detection over recent window discriminations and the policies
//! that decide when feature weights are re-optimized.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const HISTORY_CAPACITY: usize = 5;

/// Cycle values at or below this are treated as zero.
pub const CYCLE_EPSILON: f64 = 1e-12;

/// The last few absolute window discriminations, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationHistory {
    values: VecDeque<f64>,
}

impl DiscriminationHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut h = Self::new();
        for &v in values {
            h.push(v);
        }
        h
    }

    /// Append a value, evicting the oldest beyond capacity.
    pub fn push(&mut self, value: f64) {
        debug_assert!((0.0..=1.0).contains(&value), "history value {value}");
        self.values.push_back(value.clamp(0.0, 1.0));
        while self.values.len() > HISTORY_CAPACITY {
            self.values.pop_front();
        }
    }

    pub fn clear(&mut self) {
        self.values.clear();
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.iter().copied().collect()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.back().copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpDecomposition {
    pub trend: Vec<f64>,
    pub cycle: Vec<f64>,
    pub lambda: f64,
}

/// Hodrick-Prescott filter.
///
/// Solves `(I + lambda * D'D) trend = series`, where `D` is the second
/// difference operator, with a banded Cholesky factorization; the cycle is
/// the residual.
pub fn hp_filter(series: &[f64], lambda: f64) -> Result<HpDecomposition> {
    if series.is_empty() {
        return Err(Error::Empty("series"));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("series"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda {lambda} must be positive")));
    }
    let n = series.len();
    if n <= 2 {
        return Ok(HpDecomposition {
            trend: series.to_vec(),
            cycle: vec![0.0; n],
            lambda,
        });
    }

    // Bands of the symmetric system: diag[i] = A[i][i], off1[i] = A[i][i+1],
    // off2[i] = A[i][i+2].
    let mut diag = vec![1.0; n];
    let mut off1 = vec![0.0; n];
    let mut off2 = vec![0.0; n];
    const STENCIL: [f64; 3] = [1.0, -2.0, 1.0];
    for row in 0..n - 2 {
        for (a, &sa) in STENCIL.iter().enumerate() {
            for (b, &sb) in STENCIL.iter().enumerate().skip(a) {
                let v = lambda * sa * sb;
                match b - a {
                    0 => diag[row + a] += v,
                    1 => off1[row + a] += v,
                    _ => off2[row + a] += v,
                }
            }
        }
    }

    // L has diagonal l0, first subdiagonal l1[i] = L[i][i-1] and second
    // subdiagonal l2[i] = L[i][i-2].
    let mut l0 = vec![0.0; n];
    let mut l1 = vec![0.0; n];
    let mut l2 = vec![0.0; n];
    for i in 0..n {
        if i >= 2 {
            l2[i] = off2[i - 2] / l0[i - 2];
        }
        if i >= 1 {
            let carry = if i >= 2 { l2[i] * l1[i - 1] } else { 0.0 };
            l1[i] = (off1[i - 1] - carry) / l0[i - 1];
        }
        let pivot = diag[i] - l1[i] * l1[i] - l2[i] * l2[i];
        l0[i] = pivot.sqrt();
    }

    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut v = series[i];
        if i >= 1 {
            v -= l1[i] * z[i - 1];
        }
        if i >= 2 {
            v -= l2[i] * z[i - 2];
        }
        z[i] = v / l0[i];
    }
    let mut trend = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = z[i];
        if i + 1 < n {
            v -= l1[i + 1] * trend[i + 1];
        }
        if i + 2 < n {
            v -= l2[i + 2] * trend[i + 2];
        }
        trend[i] = v / l0[i];
    }
    let cycle = series.iter().zip(&trend).map(|(y, t)| y - t).collect();
    Ok(HpDecomposition {
        trend,
        cycle,
        lambda,
    })
}

/// Fires when the smoothed discrimination level has reached `phi` and the
/// latest window sits above the trend.
pub fn should_trigger_hp(pd: &DiscriminationHistory, phi: f64, lambda: f64) -> Result<bool> {
    if pd.len() < 3 {
        return Ok(false);
    }
    let hp = hp_filter(&pd.values(), lambda)?;
    let trend = *hp.trend.last().expect("non-empty");
    let cycle = *hp.cycle.last().expect("non-empty");
    Ok(trend >= phi && cycle > CYCLE_EPSILON)
}

/// Fires when the latest discrimination exceeds the previous one by more
/// than `theta`.
pub fn should_trigger_previous(pd: &DiscriminationHistory, theta: f64) -> bool {
    let v = &pd.values;
    v.len() >= 2 && v[v.len() - 1] - v[v.len() - 2] > theta
}

pub fn should_trigger_every() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerPolicy {
    Hp,
    Every,
    Previous,
}

impl std::str::FromStr for TriggerPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hp" => Ok(TriggerPolicy::Hp),
            "every" => Ok(TriggerPolicy::Every),
            "previous" => Ok(TriggerPolicy::Previous),
            other => Err(Error::InvalidConfig(format!("unknown trigger policy `{other}`"))),
        }
    }
}

impl std::fmt::Display for TriggerPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TriggerPolicy::Hp => "hp",
            TriggerPolicy::Every => "every",
            TriggerPolicy::Previous => "previous",
        })
    }
}

/// Trigger policy with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trigger {
    pub policy: TriggerPolicy,
    pub phi: f64,
    pub theta: f64,
    pub lambda: f64,
}

impl Trigger {
    pub fn fires(&self, pd: &DiscriminationHistory) -> Result<bool> {
        Ok(match self.policy {
            TriggerPolicy::Hp => should_trigger_hp(pd, self.phi, self.lambda)?,
            TriggerPolicy::Every => should_trigger_every(),
            TriggerPolicy::Previous => should_trigger_previous(pd, self.theta),
        })
    }
}
