//! Stream data model: encoded instances, window chunks, CSV ingestion and a
//! synthetic biased stream with concept drift.

mod ingest;
mod synthetic;

pub use ingest::{ingest, IngestReport, IngestedStream, StreamManifest};
pub use synthetic::{generate_bias_stream, write_stream_csv, BaseRates, BiasStreamConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sensitive-group membership of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Protected,
    Unprotected,
}

impl Group {
    pub fn is_protected(self) -> bool {
        matches!(self, Group::Protected)
    }

    pub fn swapped(self) -> Group {
        match self {
            Group::Protected => Group::Unprotected,
            Group::Unprotected => Group::Protected,
        }
    }
}

/// One encoded observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<f64>,
    pub group: Group,
    pub label: u8,
}

impl Instance {
    pub fn new(features: Vec<f64>, group: Group, label: u8) -> Result<Self> {
        if label > 1 {
            return Err(Error::InvalidConfig(format!("label {label} is not binary")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("instance features"));
        }
        Ok(Self {
            features,
            group,
            label,
        })
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// A window of consecutive instances; `index` starts at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    pub instances: Vec<Instance>,
}

impl Chunk {
    pub fn new(index: usize, instances: Vec<Instance>) -> Result<Self> {
        let first = instances.first().ok_or(Error::Empty("chunk"))?;
        let dim = first.dim();
        if let Some(bad) = instances.iter().find(|i| i.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Self { index, instances })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.instances.first().map_or(0, Instance::dim)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.instances.iter().map(|i| i.label).collect()
    }

    pub fn groups(&self) -> Vec<Group> {
        self.instances.iter().map(|i| i.group).collect()
    }
}

/// Split an instance sequence into windows of `window_size` (last may be
/// short). Windows are numbered from 1.
pub fn into_chunks(instances: Vec<Instance>, window_size: usize) -> Result<Vec<Chunk>> {
    if window_size == 0 {
        return Err(Error::InvalidConfig("window_size must be positive".into()));
    }
    let mut chunks = Vec::with_capacity(instances.len().div_ceil(window_size));
    let mut iter = instances.into_iter().peekable();
    while iter.peek().is_some() {
        let window: Vec<Instance> = iter.by_ref().take(window_size).collect();
        chunks.push(Chunk::new(chunks.len() + 1, window)?);
    }
    Ok(chunks)
}

/// Label-level statistical parity over a whole stream:
/// P(Y=1 | protected) - P(Y=1 | unprotected).
pub fn dataset_discrimination(chunks: &[Chunk]) -> Result<f64> {
    let (mut p_pos, mut p_n, mut u_pos, mut u_n) = (0usize, 0usize, 0usize, 0usize);
    for inst in chunks.iter().flat_map(|c| c.instances.iter()) {
        let pos = usize::from(inst.label == 1);
        match inst.group {
            Group::Protected => {
                p_n += 1;
                p_pos += pos;
            }
            Group::Unprotected => {
                u_n += 1;
                u_pos += pos;
            }
        }
    }
    if p_n == 0 {
        return Err(Error::EmptyGroup("protected"));
    }
    if u_n == 0 {
        return Err(Error::EmptyGroup("unprotected"));
    }
    Ok(p_pos as f64 / p_n as f64 - u_pos as f64 / u_n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(group: Group, label: u8) -> Instance {
        Instance::new(vec![0.0], group, label).unwrap()
    }

    #[test]
    fn chunking_partitions_with_short_tail() {
        let all = (0..3).map(|_| inst(Group::Protected, 1)).collect();
        let chunks = into_chunks(all, 2).unwrap();
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].len(), 2);
        assert_eq!(chunks[1].len(), 1);
        assert_eq!(chunks[1].index, 2);
    }

    #[test]
    fn equal_rates_have_zero_discrimination() {
        let all = vec![
            inst(Group::Protected, 1),
            inst(Group::Unprotected, 1),
            inst(Group::Protected, 1),
        ];
        let chunks = into_chunks(all, 10).unwrap();
        assert_eq!(dataset_discrimination(&chunks).unwrap(), 0.0);
    }

    #[test]
    fn hand_counted_discrimination() {
        let mut all = Vec::new();
        for l in [1, 1, 1, 0] {
            all.push(inst(Group::Protected, l));
        }
        for l in [1, 0, 0, 0] {
            all.push(inst(Group::Unprotected, l));
        }
        let chunks = into_chunks(all, 3).unwrap();
        assert_eq!(dataset_discrimination(&chunks).unwrap(), 0.5);
    }

    #[test]
    fn empty_group_is_an_error() {
        let chunks = into_chunks(vec![inst(Group::Protected, 1)], 4).unwrap();
        assert!(matches!(
            dataset_discrimination(&chunks),
            Err(Error::EmptyGroup("unprotected"))
        ));
    }

    #[test]
    fn rejects_bad_instances() {
        assert!(Instance::new(vec![f64::NAN], Group::Protected, 0).is_err());
        assert!(Instance::new(vec![0.0], Group::Protected, 2).is_err());
        let mixed = vec![inst(Group::Protected, 0), Instance::new(vec![0.0, 1.0], Group::Protected, 0).unwrap()];
        assert!(Chunk::new(1, mixed).is_err());
        assert!(Chunk::new(1, Vec::new()).is_err());
    }
}
