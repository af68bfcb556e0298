//! Curvature-dimension checks: needles, measure contraction, entropy
//! convexity along W₁ and W₂ plans, the ray condition and the two-interval
//! estimate.

mod condition;
mod entropy;
mod firstclaim;
mod needle;
mod report;

pub use condition::{
    cd1_condition_check, condition_from_localization, localize, ConditionOptions, ConditionReport,
    Localization, RayCheck,
};
pub use entropy::{cd1_entropy_check, cd2_check, mcp_check, EntropyCheckConfig};
pub use firstclaim::{
    firstclaim_check, firstclaim_per_ray, substitution, substitution_window, Substitution, Window,
};
pub use needle::{needle_cd_check, NeedleSampling};
pub use report::{CheckReport, ReportBuilder, Witness};
