//! Set-theoretic model of message, information, knowledge and dark
//! message over a finite symbol universe, plus the understanding check
//! between a signal and its image.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Finite universe of symbol ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Universe {
    symbols: BTreeSet<String>,
}

impl Universe {
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: BTreeSet<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::InvalidConfig("universe must be nonempty".into()));
        }
        Ok(Self { symbols })
    }

    pub fn contains(&self, symbol: &str) -> bool {
        self.symbols.contains(symbol)
    }

    pub fn symbols(&self) -> &BTreeSet<String> {
        &self.symbols
    }

    fn check_subset(&self, set: &BTreeSet<String>) -> Result<()> {
        if let Some(out) = set.iter().find(|s| !self.contains(s)) {
            return Err(Error::OutsideUniverse(out.clone()));
        }
        Ok(())
    }
}

/// A message is a subset of the universe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    symbols: BTreeSet<String>,
}

impl Message {
    pub fn new<I, S>(symbols: I, universe: &Universe) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: BTreeSet<String> = symbols.into_iter().map(Into::into).collect();
        universe.check_subset(&symbols)?;
        Ok(Self { symbols })
    }

    pub fn symbols(&self) -> &BTreeSet<String> {
        &self.symbols
    }
}

/// What the receiver already knows and what it can decode. Knowledge is
/// decodable by definition, so K_r must be a subset of C_r.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReceiverState {
    knowledge: BTreeSet<String>,
    codebook: BTreeSet<String>,
}

impl ReceiverState {
    pub fn new<I, J, S, T>(knowledge: I, codebook: J, universe: &Universe) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let knowledge: BTreeSet<String> = knowledge.into_iter().map(Into::into).collect();
        let codebook: BTreeSet<String> = codebook.into_iter().map(Into::into).collect();
        universe.check_subset(&knowledge)?;
        universe.check_subset(&codebook)?;
        if !knowledge.is_subset(&codebook) {
            return Err(Error::KnowledgeNotDecodable);
        }
        Ok(Self {
            knowledge,
            codebook,
        })
    }

    pub fn knowledge(&self) -> &BTreeSet<String> {
        &self.knowledge
    }

    pub fn codebook(&self) -> &BTreeSet<String> {
        &self.codebook
    }
}

/// The three disjoint parts of a received message: fresh decodable
/// information, already-known content, and the undecodable dark part.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub information: BTreeSet<String>,
    pub knowledge_part: BTreeSet<String>,
    pub dark: BTreeSet<String>,
}

impl Partition {
    /// Union of the three parts.
    pub fn whole(&self) -> BTreeSet<String> {
        let mut all = self.information.clone();
        all.extend(self.knowledge_part.iter().cloned());
        all.extend(self.dark.iter().cloned());
        all
    }
}

/// Split a message for a receiver: known symbols, decodable-but-new
/// symbols (the information), and symbols outside the receiver's codebook
/// (the dark message).
pub fn partition(message: &Message, receiver: &ReceiverState) -> Partition {
    let mut information = BTreeSet::new();
    let mut knowledge_part = BTreeSet::new();
    let mut dark = BTreeSet::new();
    for s in message.symbols() {
        if receiver.knowledge.contains(s) {
            knowledge_part.insert(s.clone());
        } else if receiver.codebook.contains(s) {
            information.insert(s.clone());
        } else {
            dark.insert(s.clone());
        }
    }
    Partition {
        information,
        knowledge_part,
        dark,
    }
}

/// Absorb the information of a partition into the receiver's knowledge.
/// The codebook is unchanged: absorbing does not teach new symbols.
pub fn absorb(receiver: &ReceiverState, p: &Partition) -> ReceiverState {
    let mut knowledge = receiver.knowledge.clone();
    knowledge.extend(p.information.iter().cloned());
    ReceiverState {
        knowledge,
        codebook: receiver.codebook.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Understanding {
    Correct,
    Misunderstanding,
}

/// Compare a reconstructed image against the original state: correct when
/// the largest entrywise deviation stays within `tol`.
pub fn understanding(image: &Signal, original: &Signal, tol: f64) -> Result<Understanding> {
    let diff = image.max_abs_diff(original)?;
    if diff <= tol {
        Ok(Understanding::Correct)
    } else {
        Ok(Understanding::Misunderstanding)
    }
}
