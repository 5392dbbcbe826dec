//! The weight file: a JSON document with exact rationals written as `"p/q"` strings.

use std::path::Path;

use hilbert_weak11::measure::{BaseSupport, Piece, SignEntry, SignTable, StepMeasure};
use hilbert_weak11::triadic::{Sign, TriadicInterval};
use hilbert_weak11::{Integer, Rational};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceRecord {
    pub a: String,
    pub b: String,
    pub density: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignRecord {
    pub scale: i64,
    /// Decimal string, since indices outgrow JSON numbers at large depth.
    pub index: String,
    pub eps: i8,
    pub defaulted: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightFile {
    pub k: u32,
    pub depth: u32,
    pub base_support_mode: String,
    pub pieces: Vec<PieceRecord>,
    pub signs: Vec<SignRecord>,
}

/// A weight together with what is needed to check it.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedWeight {
    pub k: u32,
    pub depth: u32,
    pub base: BaseSupport,
    pub weight: StepMeasure,
    pub signs: SignTable,
}

fn rational(s: &str) -> Result<Rational, Failure> {
    s.parse::<Rational>().map_err(|e| Failure::config(format!("bad rational `{s}`: {e}")))
}

impl WeightFile {
    pub fn from_weight(k: u32, depth: u32, base: BaseSupport, w: &StepMeasure, signs: &SignTable) -> Self {
        let pieces = w
            .pieces()
            .iter()
            .map(|p| PieceRecord {
                a: p.interval.a.to_string(),
                b: p.interval.b.to_string(),
                density: p.density.to_string(),
            })
            .collect();
        let signs = signs
            .entries()
            .iter()
            .map(|e| SignRecord {
                scale: e.interval.scale(),
                index: e.interval.index().to_string(),
                eps: e.eps.value() as i8,
                defaulted: e.defaulted,
            })
            .collect();
        WeightFile { k, depth, base_support_mode: base.as_str().to_string(), pieces, signs }
    }

    pub fn into_weight(self) -> Result<LoadedWeight, Failure> {
        let base: BaseSupport = self.base_support_mode.parse().map_err(Failure::from)?;
        let mut pieces = Vec::with_capacity(self.pieces.len());
        for p in &self.pieces {
            pieces.push(Piece::new(rational(&p.a)?, rational(&p.b)?, rational(&p.density)?));
        }
        let weight = StepMeasure::new(pieces).map_err(Failure::from)?;
        let mut signs = SignTable::new();
        for s in &self.signs {
            let index: Integer =
                s.index.parse().map_err(|e| Failure::config(format!("bad sign index `{}`: {e}", s.index)))?;
            let eps = Sign::from_value(s.eps as i64)
                .ok_or_else(|| Failure::config(format!("sign must be ±1, got {}", s.eps)))?;
            let stage = if s.scale == 0 {
                0
            } else {
                let depth_index = -s.scale - 1;
                if depth_index < 0 || depth_index % self.k as i64 != 0 {
                    return Err(Failure::config(format!("scale {} is not a J scale for k = {}", s.scale, self.k)));
                }
                (depth_index / self.k as i64) as u32
            };
            signs.insert(SignEntry {
                interval: TriadicInterval::new(s.scale, index),
                stage,
                eps,
                decider: None,
                defaulted: s.defaulted,
            });
        }
        Ok(LoadedWeight { k: self.k, depth: self.depth, base, weight, signs })
    }

    pub fn write(&self, path: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Failure::io(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| Failure::io(format!("{}: {e}", path.display())))
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }
}
