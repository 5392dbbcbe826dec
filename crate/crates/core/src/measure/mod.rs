//! Step measures and the recursive construction of the finite-depth weight `w_N`.

mod construct;
mod step;

pub use construct::{
    build_stages, build_w0, build_weight, choose_sign, refine_stage, Construction, DeciderContext,
};
pub use step::{Piece, StepMeasure};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rug::Rational;

use crate::ball::CertifiedValue;
use crate::triadic::{pow3_rational, Sign, TriadicInterval};
use crate::{Error, Result};

/// Which set carries `w_0` besides `[1/3, 2/3)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum BaseSupport {
    /// `I([0,1)^m)`, matching the pattern `K ↦ K^m ∪ I(K^m)` of later stages.
    #[default]
    Recursive,
    /// `I([0,1))^m`, the middle third of the companion of the unit interval.
    Literal,
}

impl BaseSupport {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseSupport::Recursive => "recursive",
            BaseSupport::Literal => "literal",
        }
    }
}

impl fmt::Display for BaseSupport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaseSupport {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recursive" => Ok(BaseSupport::Recursive),
            "literal" => Ok(BaseSupport::Literal),
            other => Err(Error::InvalidParameter(format!(
                "base support must be `literal` or `recursive`, got `{other}`"
            ))),
        }
    }
}

/// Parameters of one construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstructionParams {
    pub k: u32,
    pub depth: u32,
    pub precision_bits: u32,
    /// Threshold below which an undecidable sign defaults to `+1`; `None` means
    /// `3^{-(N+2)k}` times the total mass.
    pub tolerance: Option<Rational>,
    pub base_support: BaseSupport,
}

impl ConstructionParams {
    pub const DEFAULT_PRECISION: u32 = 128;

    pub fn new(k: u32, depth: u32) -> Result<Self> {
        let p = ConstructionParams {
            k,
            depth,
            precision_bits: Self::DEFAULT_PRECISION,
            tolerance: None,
            base_support: BaseSupport::Recursive,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_precision(mut self, bits: u32) -> Result<Self> {
        self.precision_bits = bits;
        self.validate()?;
        Ok(self)
    }

    pub fn with_base_support(mut self, base: BaseSupport) -> Self {
        self.base_support = base;
        self
    }

    pub fn with_tolerance(mut self, tol: Rational) -> Result<Self> {
        self.tolerance = Some(tol);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("k must be >= 2, got {}", self.k)));
        }
        if self.depth < 1 {
            return Err(Error::InvalidParameter(format!("depth must be >= 1, got {}", self.depth)));
        }
        if self.precision_bits < 64 {
            return Err(Error::InvalidParameter(format!(
                "precision must be >= 64 bits, got {}",
                self.precision_bits
            )));
        }
        let finest = (self.depth as i64 + 2) * self.k as i64;
        if finest > crate::triadic::MAX_SCALE {
            return Err(Error::InvalidParameter(format!(
                "depth·k = {} exceeds the supported scale range",
                finest
            )));
        }
        if let Some(t) = &self.tolerance {
            if t.cmp0() == std::cmp::Ordering::Less {
                return Err(Error::InvalidParameter("tolerance must be nonnegative".into()));
            }
        }
        Ok(())
    }

    /// The sign tolerance `τ` for a measure of the given total mass.
    pub fn sign_tolerance(&self, mass: &Rational) -> Rational {
        match &self.tolerance {
            Some(t) => t.clone(),
            None => pow3_rational(-((self.depth as i64 + 2) * self.k as i64)) * mass,
        }
    }
}

/// One sign choice `ε(J)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SignEntry {
    pub interval: TriadicInterval,
    /// The stage `i` whose collection `K_i` contains the parent of `J`.
    pub stage: u32,
    pub eps: Sign,
    /// Certified value of the far-field decider; absent for tables loaded from disk.
    pub decider: Option<CertifiedValue>,
    pub defaulted: bool,
}

/// The map `J ↦ ε(J)` in construction order (by stage, then left to right).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SignTable {
    entries: Vec<SignEntry>,
    index: HashMap<TriadicInterval, usize>,
}

impl SignTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: SignEntry) {
        match self.index.get(&entry.interval) {
            Some(&i) => self.entries[i] = entry,
            None => {
                self.index.insert(entry.interval.clone(), self.entries.len());
                self.entries.push(entry);
            }
        }
    }

    pub fn get(&self, j: &TriadicInterval) -> Option<&SignEntry> {
        self.index.get(j).map(|&i| &self.entries[i])
    }

    pub fn eps(&self, j: &TriadicInterval) -> Option<Sign> {
        self.get(j).map(|e| e.eps)
    }

    pub fn entries(&self) -> &[SignEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn stage_entries(&self, stage: u32) -> impl Iterator<Item = &SignEntry> {
        self.entries.iter().filter(move |e| e.stage == stage)
    }

    pub fn defaulted_count(&self) -> usize {
        self.entries.iter().filter(|e| e.defaulted).count()
    }
}
