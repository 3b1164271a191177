//! Synthetic autoencoder testbed: a small template grammar with three binary
//! properties and a seeded, exactly invertible encoder/decoder over it, in
//! one or two surface languages sharing a latent space.

mod codec;
mod grammar;

use std::io::{BufRead, BufReader, Read, Write};

use thiserror::Error;

pub use codec::{make_bilingual, SynthCodec};
pub use grammar::{CorpusRecord, Grammar, NounEntry, Property, SentenceStructure, VerbEntry};

#[derive(Debug, Error, PartialEq)]
pub enum TestbedError {
    #[error("grammar inventory {0:?} is empty")]
    EmptyInventory(&'static str),
    #[error("grammar inventories are capped at {0} entries")]
    InventoryTooLarge(usize),
    #[error("surface form {0:?} is used by more than one grammar entry")]
    AmbiguousSurfaceForm(String),
    #[error("sentence is not in the grammar: {0}")]
    OutOfGrammar(String),
    #[error("unknown property {0:?} (expected tense, subjnum, or objnum)")]
    UnknownProperty(String),
    #[error("latent dimension {given} is below the feature length {needed}")]
    DimTooSmall { needed: usize, given: usize },
    #[error("invalid codec parameter: {0}")]
    BadParameter(&'static str),
    #[error("grammars do not share a slot structure")]
    StructureMismatch,
    #[error("dimension mismatch: codec has {expected}, embedding has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("corpus must contain at least one sentence")]
    EmptyCorpusRequest,
}

fn label_bits(labels: &[bool; 3]) -> String {
    labels
        .iter()
        .map(|&b| if b { "1" } else { "0" })
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes corpus records as tab-separated lines:
/// `id<TAB>tense,subjnum,objnum<TAB>sentence<TAB>flip_tense<TAB>flip_subjnum<TAB>flip_objnum`.
pub fn write_corpus<W: Write>(mut out: W, records: &[CorpusRecord]) -> crate::Result<()> {
    for r in records {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}",
            r.id,
            label_bits(&r.labels),
            r.sentence,
            r.flips[0],
            r.flips[1],
            r.flips[2],
        )?;
    }
    Ok(())
}

/// Parses the format written by [`write_corpus`].
pub fn read_corpus<R: Read>(input: R) -> crate::Result<Vec<CorpusRecord>> {
    let mut records = Vec::new();
    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(crate::Error::Parse {
                line: lineno,
                message: format!("expected 6 tab-separated fields, got {}", fields.len()),
            });
        }
        let id: usize = fields[0].parse().map_err(|_| crate::Error::Parse {
            line: lineno,
            message: format!("invalid id {:?}", fields[0]),
        })?;
        let bits: Vec<&str> = fields[1].split(',').collect();
        if bits.len() != 3 {
            return Err(crate::Error::Parse {
                line: lineno,
                message: format!("expected 3 comma-separated labels, got {:?}", fields[1]),
            });
        }
        let mut labels = [false; 3];
        for (slot, bit) in labels.iter_mut().zip(&bits) {
            *slot = match *bit {
                "0" => false,
                "1" => true,
                other => {
                    return Err(crate::Error::Parse {
                        line: lineno,
                        message: format!("label must be 0 or 1, got {other:?}"),
                    })
                }
            };
        }
        records.push(CorpusRecord {
            id,
            sentence: fields[2].to_owned(),
            labels,
            flips: [
                fields[3].to_owned(),
                fields[4].to_owned(),
                fields[5].to_owned(),
            ],
        });
    }
    Ok(records)
}
