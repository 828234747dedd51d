//! Authenticated Byzantine protocols: Dolev-Strong broadcast and consensus
//! through authenticated common sets of values.

mod ab_consensus;
mod byzantine;
mod common_set;
mod dolev_strong;

use std::sync::Arc;

use crate::simnet::{Payload, Signature};

pub use ab_consensus::{ab_consensus_programs, AbConfig, AbConsensus, AbPlan, LittleGroup};
pub use common_set::{endorse_digest, inquiry_digest, AuthCommonSet, AuthEntry, Endorsement};
pub use dolev_strong::{dolev_strong_programs, ds_digest, DolevStrong, DsCore, DsOutput, SignedValue};

/// Encoded width of an input value.
pub const VALUE_BITS: u64 = 64;
/// Encoded width of a signature: signer id plus token.
pub const SIGNATURE_BITS: u64 = 32 + 64;

#[derive(Debug, Clone, PartialEq)]
pub enum AuthMsg {
    /// Dolev-Strong relays of every instance, combined per receiver.
    Ds(Vec<SignedValue>),
    Endorse(Vec<Endorsement>),
    Set(Arc<AuthCommonSet>),
    Inquiry(Signature),
    Noise(u64),
}

impl Payload for AuthMsg {
    fn bit_size(&self) -> u64 {
        match self {
            AuthMsg::Ds(chains) => chains.iter().map(SignedValue::bit_size).sum(),
            AuthMsg::Endorse(es) => es.len() as u64 * (32 + 1 + VALUE_BITS + SIGNATURE_BITS),
            AuthMsg::Set(set) => set.bit_size(),
            AuthMsg::Inquiry(_) => SIGNATURE_BITS,
            AuthMsg::Noise(_) => 64,
        }
    }
}
