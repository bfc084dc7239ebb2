//! Maneuvers as data and the trial orchestration around them.

mod path;
mod script;
mod trial;

pub use path::{Path, PathError, Projection, Segment, JOINT_TOLERANCE};
pub use script::{
    build_maneuver, EventKind, Maneuver, ManeuverOverrides, ManeuverScript, ScriptError,
    ScriptEvent, DEFAULT_FOLLOW_DISTANCE, DEFAULT_START_TIME, DEFAULT_TARGET_SPEED,
    START_GAP_MARGIN,
};
pub use trial::{
    initial_world, run_trial, run_trials, TrialError, TrialOutcome, TrialPlan, TrialResult,
    DEFAULT_TRIAL_TIMEOUT, STANDSTILL_SPEED,
};

/// Arc-length position and tangent heading on the script's course.
pub fn path_query(
    script: &ManeuverScript,
    arc_length: f64,
) -> Result<(crate::Point2, f64), ScriptError> {
    Ok(script.course()?.query(arc_length)?)
}
