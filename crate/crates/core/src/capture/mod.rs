//! Capture simulator.
//!
//! Stands in for the in-game mod: a [`SceneScript`] drives a camera through
//! a scene, and each screenshot, recording or achievement unlock becomes a
//! [`CaptureEvent`] listing the characters and locations visible at that
//! moment in either the main perspective frustum or the UI rectangle.

mod frustum;
mod log;
mod script;

pub use frustum::{sphere_in_frustum, CameraError, CameraState, Frustum, Plane, ScreenRect, Vec3};
pub use log::{
    event_to_line, parse_capture_log, read_capture_log, write_capture_log, write_capture_log_to,
    CaptureLogError,
};
pub use script::{
    load_script, parse_script, run_script, ui_in_rect, ObjectKind, SceneObject, SceneScript,
    ScriptError, Step, StepAction,
};

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::model::MediaRef;

/// What a capture "saw" in place of pixels: the text an image model would
/// read off the screen, the speaking NPC if any, and free-form flags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct TextPayload {
    pub ocr_text: String,
    pub speaker: Option<String>,
    #[serde(default)]
    pub flags: Vec<String>,
}

/// One record of the capture log, prior to classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
pub struct CaptureEvent {
    pub id: String,
    pub timestamp_ms: i64,
    pub media: MediaRef,
    pub detected_characters: Vec<String>,
    pub detected_locations: Vec<String>,
    pub achievement: Option<String>,
    pub payload: TextPayload,
}
