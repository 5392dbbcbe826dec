//! Operators on step measures.

pub mod fast;
pub mod harmonic;
pub mod hilbert;
pub mod maximal;
pub mod quadrature;

pub use fast::{piece_maximals, FastHilbert, PieceMaximal, Target};
pub use hilbert::{hilbert_pv, hilbert_pv_batch, GridMeasure};
pub use maximal::{
    maximal, maximal_batch, maximal_oracle, weighted_maximal, weighted_maximal_batch,
    weighted_maximal_oracle,
};
pub use quadrature::{pv_quadrature_oracle, pv_quadrature_oracle_on_grid, Estimate, GaussRule, DEFAULT_EXCISIONS};
