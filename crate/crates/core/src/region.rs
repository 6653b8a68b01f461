//! Region identifiers and traversal sequences.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identifier of a symbolic region. Always strictly positive.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(try_from = "u32", into = "u32")]
pub struct RegionId(u32);

impl RegionId {
    pub fn new(id: u32) -> Result<Self, TraceError> {
        if id == 0 {
            return Err(TraceError::ZeroRegionId);
        }
        Ok(Self(id))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for RegionId {
    type Error = TraceError;

    fn try_from(id: u32) -> Result<Self, Self::Error> {
        Self::new(id)
    }
}

impl From<RegionId> for u32 {
    fn from(id: RegionId) -> u32 {
        id.0
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Errors from constructing region ids and traces.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("region id must be a positive integer")]
    ZeroRegionId,

    #[error("region trace must be nonempty")]
    EmptyTrace,

    #[error("region trace has consecutive duplicate region {0}")]
    ConsecutiveDuplicate(RegionId),
}

/// An ordered, consecutive-duplicate-free sequence of regions traversed
/// by the agent. The first element is the agent's start region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct RegionTrace(Vec<RegionId>);

impl RegionTrace {
    /// Build a trace from a sequence that must already be duplicate-free.
    pub fn new<I>(regions: I) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = RegionId>,
    {
        let regions: Vec<RegionId> = regions.into_iter().collect();
        if regions.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        for pair in regions.windows(2) {
            if pair[0] == pair[1] {
                return Err(TraceError::ConsecutiveDuplicate(pair[0]));
            }
        }
        Ok(Self(regions))
    }

    /// Build a trace by collapsing consecutive duplicates.
    pub fn collapse<I>(regions: I) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = RegionId>,
    {
        let mut out: Vec<RegionId> = Vec::new();
        for r in regions {
            if out.last() != Some(&r) {
                out.push(r);
            }
        }
        if out.is_empty() {
            return Err(TraceError::EmptyTrace);
        }
        Ok(Self(out))
    }

    /// Convenience constructor from raw ids, mostly for tests and data files.
    pub fn from_ids<I>(ids: I) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = u32>,
    {
        let regions: Result<Vec<RegionId>, TraceError> =
            ids.into_iter().map(RegionId::new).collect();
        Self::new(regions?)
    }

    pub fn regions(&self) -> &[RegionId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> RegionId {
        self.0[0]
    }

    pub fn last(&self) -> RegionId {
        *self.0.last().expect("trace is nonempty")
    }

    /// Consecutive (from, to) pairs of the trace.
    pub fn steps(&self) -> impl Iterator<Item = (RegionId, RegionId)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }
}

impl TryFrom<Vec<u32>> for RegionTrace {
    type Error = TraceError;

    fn try_from(ids: Vec<u32>) -> Result<Self, Self::Error> {
        Self::from_ids(ids)
    }
}

impl From<RegionTrace> for Vec<u32> {
    fn from(trace: RegionTrace) -> Vec<u32> {
        trace.0.iter().map(|r| r.get()).collect()
    }
}

impl fmt::Display for RegionTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " -> ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}
