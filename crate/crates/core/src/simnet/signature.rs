//! Unforgeable signatures simulated by an engine-owned token registry.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::NodeId;

/// A claimed signature by `signer` over `digest`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Signature {
    pub signer: NodeId,
    pub digest: u64,
    pub token: u64,
}

/// Deterministic digest of any hashable value.
pub fn digest_of<T: Hash + ?Sized>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

/// Mints and verifies tokens. Only the engine holds a registry, and it only
/// ever lets node `i` mint for signer `i`.
#[derive(Debug)]
pub struct SignatureRegistry {
    minted: HashMap<(NodeId, u64), (u64, NodeId)>,
    verified: Vec<(NodeId, u64)>,
    denied: Vec<(NodeId, NodeId)>,
    rng: ChaCha8Rng,
}

impl SignatureRegistry {
    pub fn new(seed: u64) -> Self {
        Self {
            minted: HashMap::new(),
            verified: Vec::new(),
            denied: Vec::new(),
            rng: crate::seed::rng(seed, 0x516),
        }
    }

    pub(crate) fn mint(&mut self, minter: NodeId, signer: NodeId, digest: u64) -> Signature {
        if minter != signer {
            self.denied.push((minter, signer));
            // A random token that is (with overwhelming probability) not the real one.
            let token = self.rng.next_u64();
            return Signature { signer, digest, token };
        }
        let rng = &mut self.rng;
        let (token, _) = *self
            .minted
            .entry((signer, digest))
            .or_insert_with(|| (rng.gen(), minter));
        Signature { signer, digest, token }
    }

    pub fn verify(&mut self, sig: &Signature) -> bool {
        let ok = self
            .minted
            .get(&(sig.signer, sig.digest))
            .is_some_and(|&(token, _)| token == sig.token);
        if ok {
            self.verified.push((sig.signer, sig.digest));
        }
        ok
    }

    /// Attempts to mint for another signer, as `(minter, claimed signer)`.
    pub fn denied(&self) -> &[(NodeId, NodeId)] {
        &self.denied
    }

    /// Every successful verification refers to a token minted by its own signer.
    pub fn audit(&self) -> bool {
        self.verified.iter().all(|key| {
            self.minted
                .get(key)
                .is_some_and(|&(_, minter)| minter == key.0)
        })
    }
}
