//! Sequence numbering and gap detection per (peer, kind) stream.

use std::collections::BTreeMap;

use crate::envelope::Kind;

/// Issues strictly increasing sequence numbers per kind, starting at 0.
#[derive(Debug, Clone, Default)]
pub struct Sequencer {
    next: BTreeMap<Kind, u64>,
}

impl Sequencer {
    pub fn next(&mut self, kind: &Kind) -> u64 {
        let n = self.next.entry(kind.clone()).or_insert(0);
        let out = *n;
        *n += 1;
        out
    }
}

/// What the tracker concluded about one received envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqStatus {
    InOrder,
    /// Some envelopes were skipped; `got > expected`.
    Gap {
        expected: u64,
        got: u64,
    },
    /// Duplicate or reordered; `got < expected`.
    Stale {
        expected: u64,
        got: u64,
    },
}

/// Expects each kind's sequence to start at the first value seen and rise by one.
#[derive(Debug, Clone, Default)]
pub struct SeqTracker {
    expected: BTreeMap<Kind, u64>,
    gaps: u64,
}

impl SeqTracker {
    pub fn observe(&mut self, kind: &Kind, seq: u64) -> SeqStatus {
        let status = match self.expected.get(kind) {
            None => SeqStatus::InOrder,
            Some(&e) if seq == e => SeqStatus::InOrder,
            Some(&e) if seq > e => SeqStatus::Gap { expected: e, got: seq },
            Some(&e) => SeqStatus::Stale { expected: e, got: seq },
        };
        match status {
            SeqStatus::Stale { .. } => {}
            SeqStatus::Gap { .. } => {
                self.gaps += 1;
                self.expected.insert(kind.clone(), seq + 1);
            }
            SeqStatus::InOrder => {
                self.expected.insert(kind.clone(), seq + 1);
            }
        }
        status
    }

    /// Number of gaps seen so far over all kinds.
    pub fn gaps(&self) -> u64 {
        self.gaps
    }
}
