//! Compile bipartite unitaries into finite-group expansions
//! `U = Σ_f [V·U(f)] ⊗ W(f)` and certify the resulting entanglement-assisted
//! local protocol.
//!
//! The protocol consumes a maximally entangled state of Schmidt rank `|G|`,
//! so the cost is `log₂|G|` ebits. Two-way teleportation costs
//! `2·log₂ min(dA, dB)`. The pipeline finds the smallest admissible group:
//!
//! 1. [`schmidt`]: operator Schmidt decomposition `U = Σ_j A_j ⊗ B_j`.
//! 2. [`sbd`]: finest simultaneous block form of `{A_j† A_k}` and the
//!    equivalence classes of its blocks.
//! 3. [`group`]: smallest catalog group (ordinary or projective) whose irreps
//!    cover the block classes.
//! 4. [`expansion`]: the local unitary `V`, the representation `U(f)` and the
//!    coefficients `W(f)`.
//! 5. [`protocol`]: exhaustive branch simulation of the local protocol.
//!
//! ```
//! use nlgc::{compile, gates, CompileOptions, Catalog};
//!
//! let catalog = Catalog::builtin(16);
//! let exp = compile(&gates::cnot(), &CompileOptions::default(), &catalog).unwrap();
//! assert_eq!(exp.group.order(), 2);
//! assert_eq!(exp.cost_ebits, 1.0);
//! assert_eq!(exp.baseline_ebits, 2.0);
//! ```

pub mod error;
pub mod expansion;
pub mod gates;
pub mod group;
pub mod linalg;
pub mod protocol;
pub mod report;
pub mod sbd;
pub mod schmidt;

pub use error::{Error, Result};
pub use expansion::{compile, Classification, CompileOptions, GroupExpansion, Side};
pub use group::catalog::Catalog;
pub use group::{FactorSystem, FiniteGroup, Representation};
pub use schmidt::{BipartiteUnitary, SchmidtDecomposition};

/// Numerical tolerances shared across modules.
pub mod tolerance {
    /// Admission threshold for `‖U†U − I‖_F` on input gates and `M`.
    pub const EPS_UNITARY: f64 = 1e-8;
    /// Identity checks (orthogonality, reconstruction residuals, fidelities).
    pub const EPS_NUM: f64 = 1e-9;
    /// Relative singular-value cutoff for the Schmidt rank.
    pub const RANK_TOL: f64 = 1e-10;
    /// Off-block magnitude treated as zero in block detection.
    pub const EPS_BLOCK: f64 = 1e-8;
}

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/schmidt.md")]
    mod schmidt {}
    #[doc = include_str!("../../../book/src/blocks.md")]
    mod blocks {}
    #[doc = include_str!("../../../book/src/groups.md")]
    mod groups {}
    #[doc = include_str!("../../../book/src/projective.md")]
    mod projective {}
    #[doc = include_str!("../../../book/src/expansion.md")]
    mod expansion {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
