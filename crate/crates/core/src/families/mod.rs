//! Ball-tree families `x ↦ C(x)` inside a finite net of a compact metric
//! space, for upper box and packing dimension targets.

mod assembly;
mod schedule;
mod tree;
mod view;

pub use assembly::{packing_family_assembly, FamilyDescription, FamilyPart};
pub use schedule::{cmp_pow2, level_schedule, level_value, meets_pow2, pow2_floor, KSeq, LevelFunction, Variant};
pub use tree::{
    continuity_check, extend, extend_box, extend_packing, family_dim_report, family_member, family_members,
    has_exact_cardinalities, is_nested, is_separated, BallTree, ContinuityReport, FamilyReport, StepRecord,
    StepReport,
};
pub use view::{MetricSpaceView, SNAP_BITS};
