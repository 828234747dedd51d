use std::fmt;

use serde::Serialize;

use crate::simnet::{digest_of, NodeId, Signature};

use super::{SIGNATURE_BITS, VALUE_BITS};

pub fn endorse_digest(origin: NodeId, value: Option<u64>) -> u64 {
    digest_of(&("endorse", origin, value))
}

pub fn inquiry_digest(inquirer: NodeId) -> u64 {
    digest_of(&("inquiry", inquirer))
}

/// A little node's signed statement that `origin` broadcast `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Endorsement {
    pub origin: NodeId,
    pub value: Option<u64>,
    pub sig: Signature,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuthEntry {
    /// `None` is the null value of a faulty origin.
    pub value: Option<u64>,
    pub signatures: Vec<Signature>,
}

/// One entry per little node, each backed by a threshold of little-node
/// endorsements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuthCommonSet {
    pub entries: Vec<AuthEntry>,
}

impl AuthCommonSet {
    /// The verification predicate: an entry for each of the `little` nodes,
    /// each with at least `threshold` distinct little signers whose
    /// signatures cover that entry's value.
    pub fn verify(&self, little: usize, threshold: usize, mut check: impl FnMut(&Signature) -> bool) -> bool {
        if self.entries.len() != little {
            return false;
        }
        self.entries.iter().enumerate().all(|(origin, entry)| {
            let digest = endorse_digest(origin, entry.value);
            let mut signers: Vec<NodeId> = entry.signatures.iter().map(|s| s.signer).collect();
            signers.sort_unstable();
            signers.dedup();
            signers.len() == entry.signatures.len()
                && signers.len() >= threshold
                && signers.last().is_none_or(|&s| s < little)
                && entry.signatures.iter().all(|s| s.digest == digest && check(s))
        })
    }

    pub fn values(&self) -> Vec<Option<u64>> {
        self.entries.iter().map(|e| e.value).collect()
    }

    /// Maximum value in the set; null sorts below every value and an all-null
    /// set yields 0.
    pub fn decision(&self) -> u64 {
        self.entries.iter().filter_map(|e| e.value).max().unwrap_or(0)
    }

    pub fn bit_size(&self) -> u64 {
        self.entries
            .iter()
            .map(|e| 1 + VALUE_BITS + e.signatures.len() as u64 * SIGNATURE_BITS)
            .sum()
    }
}

impl fmt::Display for AuthCommonSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self
            .entries
            .iter()
            .map(|e| e.value.map_or_else(|| "null".to_string(), |v| v.to_string()))
            .collect();
        write!(f, "[{}]", vals.join(" "))
    }
}
