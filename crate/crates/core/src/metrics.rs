//! Accuracy and statistical-parity discrimination.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::Group;

fn check_lengths(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::LengthMismatch { left, right });
    }
    if left == 0 {
        return Err(Error::Empty("prediction list"));
    }
    Ok(())
}

/// Fraction of predictions equal to their label.
pub fn accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    check_lengths(predictions.len(), labels.len())?;
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, l)| p == l)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Statistical parity of a prediction set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discrimination {
    /// P(ŷ=1 | protected) - P(ŷ=1 | unprotected), or 0.0 when degenerate.
    pub value: f64,
    /// One of the groups had no members.
    pub degenerate: bool,
}

impl Discrimination {
    pub fn abs(&self) -> f64 {
        self.value.abs()
    }
}

pub fn discrimination(predictions: &[u8], groups: &[Group]) -> Result<Discrimination> {
    check_lengths(predictions.len(), groups.len())?;
    let mut counts = [[0usize; 2]; 2];
    for (&p, &g) in predictions.iter().zip(groups) {
        let row = usize::from(!g.is_protected());
        counts[row][0] += 1;
        counts[row][1] += usize::from(p == 1);
    }
    let [[p_n, p_pos], [u_n, u_pos]] = counts;
    if p_n == 0 || u_n == 0 {
        return Ok(Discrimination {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(Discrimination {
        value: p_pos as f64 / p_n as f64 - u_pos as f64 / u_n as f64,
        degenerate: false,
    })
}

/// Per-window metrics emitted by the prequential loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub window: usize,
    pub accuracy: f64,
    /// Signed statistical parity.
    pub discrimination: f64,
    pub abs_discrimination: f64,
    pub triggered: bool,
    pub pareto_size: usize,
    pub wall_time_ms: f64,
}

impl WindowRecord {
    pub const CSV_HEADER: [&'static str; 7] = [
        "window",
        "accuracy",
        "discrimination",
        "abs_discrimination",
        "triggered",
        "pareto_size",
        "wall_time_ms",
    ];

    pub fn csv_row(&self) -> [String; 7] {
        [
            self.window.to_string(),
            format!("{}", self.accuracy),
            format!("{}", self.discrimination),
            format!("{}", self.abs_discrimination),
            u8::from(self.triggered).to_string(),
            self.pareto_size.to_string(),
            format!("{:.3}", self.wall_time_ms),
        ]
    }
}
