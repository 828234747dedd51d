//! Run accounting: totals, per-part breakdown and the event transcript.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Event {
    Decide,
    Halt,
    Crash,
    ByzAssign,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Event::Decide => "decide",
            Event::Halt => "halt",
            Event::Crash => "crash",
            Event::ByzAssign => "byz-assign",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub node: NodeId,
    pub round: u64,
    pub event: Event,
    pub value: String,
}

impl fmt::Display for TranscriptRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.node, self.round, self.event, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartMetrics {
    pub label: String,
    pub rounds: u64,
    pub messages: u64,
    pub bits: u64,
}

/// Totals for one execution. Field order is the JSON key order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub rounds: u64,
    pub messages: u64,
    pub bits: u64,
    /// Messages sent by nodes that were never faulty during the run.
    pub messages_nonfaulty: u64,
    pub parts: Vec<PartMetrics>,
    pub transcript: Vec<TranscriptRecord>,
}

impl RunMetrics {
    pub(crate) fn charge(&mut self, label: &str, messages: u64, bits: u64) {
        self.messages += messages;
        self.bits += bits;
        let part = self.part_mut(label);
        part.messages += messages;
        part.bits += bits;
    }

    pub(crate) fn tick(&mut self, label: &str) {
        self.rounds += 1;
        self.part_mut(label).rounds += 1;
    }

    fn part_mut(&mut self, label: &str) -> &mut PartMetrics {
        let idx = match self.parts.iter().position(|p| p.label == label) {
            Some(i) => i,
            None => {
                self.parts.push(PartMetrics {
                    label: label.to_string(),
                    rounds: 0,
                    messages: 0,
                    bits: 0,
                });
                self.parts.len() - 1
            }
        };
        &mut self.parts[idx]
    }

    pub fn part(&self, label: &str) -> Option<&PartMetrics> {
        self.parts.iter().find(|p| p.label == label)
    }

    /// Decision records as `(node, round, value)`.
    pub fn decisions(&self) -> impl Iterator<Item = (NodeId, u64, &str)> {
        self.transcript
            .iter()
            .filter(|r| r.event == Event::Decide)
            .map(|r| (r.node, r.round, r.value.as_str()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("metrics serialize")
    }

    pub fn csv_header() -> &'static [&'static str] {
        &["rounds", "messages", "bits", "messages_nonfaulty"]
    }

    pub fn csv_row(&self) -> [String; 4] {
        [
            self.rounds.to_string(),
            self.messages.to_string(),
            self.bits.to_string(),
            self.messages_nonfaulty.to_string(),
        ]
    }

    /// Transcript as `node,round,event,value` lines.
    pub fn transcript_text(&self) -> String {
        self.transcript.iter().map(|r| format!("{r}\n")).collect()
    }
}
