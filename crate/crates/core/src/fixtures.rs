//! Canonical instances shipped in `fixtures/`.

use std::path::PathBuf;

use crate::io::{parse_json, MeasureFile, NeedleFile, PlanFile, SpaceFile};
use crate::measures::DiscreteMeasure;
use crate::space::{FiniteMMSpace, Needle};
use crate::transport::DynamicPlan;

macro_rules! fixture_text {
    ($name:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/", $name))
    };
}

/// Absolute path of a fixture file.
pub fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn space(text: &str) -> FiniteMMSpace {
    parse_json::<SpaceFile>(text)
        .and_then(SpaceFile::into_space)
        .expect("fixture space parses")
}

fn measure(text: &str, s: &FiniteMMSpace) -> DiscreteMeasure {
    parse_json::<MeasureFile>(text)
        .and_then(|m| m.into_measure(s))
        .expect("fixture measure parses")
}

fn plan(text: &str, s: &FiniteMMSpace) -> DynamicPlan {
    parse_json::<PlanFile>(text)
        .and_then(|p| p.into_plan(s))
        .expect("fixture plan parses")
}

fn needle(text: &str, grid: Option<f64>) -> Needle {
    parse_json::<NeedleFile>(text)
        .and_then(|n| n.into_needle(grid))
        .expect("fixture needle parses")
}

/// Five points on a line with unit spacing.
pub fn path5() -> FiniteMMSpace {
    space(fixture_text!("path5.json"))
}

/// 3×3 Euclidean grid, uniform measure, row and column geodesics.
pub fn grid3() -> FiniteMMSpace {
    space(fixture_text!("grid3.json"))
}

/// 5×5 Euclidean grid, uniform measure, row and column geodesics.
pub fn grid5() -> FiniteMMSpace {
    space(fixture_text!("grid5.json"))
}

/// 3×3 grid whose middle row carries weights `∝ e^{x²/4}`.
pub fn grid3_corrupted() -> FiniteMMSpace {
    space(fixture_text!("grid3_corrupted.json"))
}

/// Uniform measures on the left and right columns of a `k×k` grid.
pub fn grid_columns(s: &FiniteMMSpace) -> (DiscreteMeasure, DiscreteMeasure) {
    if s.n() == 25 {
        (
            measure(fixture_text!("grid5_left.json"), s),
            measure(fixture_text!("grid5_right.json"), s),
        )
    } else {
        (
            measure(fixture_text!("grid3_left.json"), s),
            measure(fixture_text!("grid3_right.json"), s),
        )
    }
}

/// Center `c` joined to leaves `l1`, `l2`, `l3` at unit distance.
pub fn tripod() -> FiniteMMSpace {
    space(fixture_text!("tripod.json"))
}

/// Path `p0…p3` forking into `a` and `b`, with little mass at `p1`.
pub fn fork() -> FiniteMMSpace {
    space(fixture_text!("fork.json"))
}

/// `δ_{p0}` split between the two branches.
pub fn fork_plan(s: &FiniteMMSpace) -> DynamicPlan {
    plan(fixture_text!("fork_plan.json"), s)
}

/// Seventeen points on a line with unit spacing.
pub fn path17() -> FiniteMMSpace {
    space(fixture_text!("path17.json"))
}

/// Uniform on `q0, q4, …, q16`.
pub fn path17_mu0(s: &FiniteMMSpace) -> DiscreteMeasure {
    measure(fixture_text!("path17_mu0.json"), s)
}

/// Contraction of [`path17_mu0`] onto `q0`.
pub fn path17_contraction(s: &FiniteMMSpace) -> DynamicPlan {
    plan(fixture_text!("path17_contraction.json"), s)
}

pub fn needle_sine(grid: Option<f64>) -> Needle {
    needle(fixture_text!("needle_sine_k1_n3.json"), grid)
}

pub fn needle_constant(grid: Option<f64>) -> Needle {
    needle(fixture_text!("needle_constant.json"), grid)
}

pub fn needle_sinh(grid: Option<f64>) -> Needle {
    needle(fixture_text!("needle_sinh_km1_n3.json"), grid)
}

/// `e^{x²}` sampled on `[0, 1]` with step `0.01`.
pub fn needle_gauss() -> Needle {
    needle(fixture_text!("needle_gauss.json"), None)
}
