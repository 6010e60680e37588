//! Realizing a target set of dimensions: the map `φ`, the block map and the
//! sequence `ψ`, and gallery assembly.

mod blocks;
mod gallery;
mod spec;
mod varphi;

pub use blocks::{
    build_psi_prefix, choose_k, choose_k_nearest, k_is_valid, k_lower, k_upper, realized_density_check, BlockMap,
    DensityReport, KRule, PsiBuilder, PsiPrefix,
};
pub use gallery::{assemble_gallery, kx_generator, Generator};
pub use spec::{
    round_to_grid, EffectiveOracle, FiniteSetOracle, IntervalUnionOracle, ReciprocalsOracle, ScaledOracle,
    TargetSpec, TwoLevelOracle, CANONICAL_GRID_BITS, CANONICAL_PAD,
};
pub use varphi::{build_varphi, Adjust, VarphiMap};
