use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frustum::{CameraError, CameraState, Frustum, Vec3};
use super::{CaptureEvent, TextPayload};
use crate::model::{MediaKind, MediaRef};

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("duplicate object name `{0}`")]
    DuplicateObject(String),
    #[error("object `{0}` has non-positive radius")]
    BadRadius(String),
    #[error("unknown object `{name}` at step {step}")]
    UnknownObject { name: String, step: usize },
    #[error("step {step} at t={t_ms} precedes the previous step")]
    OutOfOrder { step: usize, t_ms: i64 },
    #[error("step {step} has negative time {t_ms}")]
    NegativeTime { step: usize, t_ms: i64 },
    #[error("unbalanced recording: {0}")]
    UnbalancedRecording(String),
    #[error("capture at step {0} before any camera was set")]
    NoCamera(usize),
    #[error("camera at step {step}: {source}")]
    Camera {
        step: usize,
        #[source]
        source: CameraError,
    },
    #[error("`{0}` is not a UI element")]
    WrongKind(String),
    #[error("reading script: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing script: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    Character,
    Location,
    UiElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SceneObject {
    pub name: String,
    pub kind: ObjectKind,
    /// World position, or screen position (x, y) for UI elements.
    #[schemars(with = "[f64; 3]")]
    pub center: Vec3,
    /// Bounding-sphere radius, or half-extent of a UI element's square.
    pub radius: f64,
    /// For UI elements: whether an on-screen hit is logged as a character or
    /// a location. UI elements without it (health masks, currency) are never
    /// logged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logs_as: Option<ObjectKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepAction {
    SetCamera { camera: CameraState },
    MoveObject {
        name: String,
        #[schemars(with = "[f64; 3]")]
        center: Vec3,
    },
    CaptureScreenshot,
    StartRecording,
    StopRecording,
    UnlockAchievement { name: String },
    SetPayload { payload: TextPayload },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Step {
    pub t_ms: i64,
    #[serde(flatten)]
    pub action: StepAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct SceneScript {
    pub game_name: String,
    pub objects: Vec<SceneObject>,
    pub steps: Vec<Step>,
}

pub fn parse_script(text: &str) -> Result<SceneScript, ScriptError> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_script(path: impl AsRef<Path>) -> Result<SceneScript, ScriptError> {
    parse_script(&std::fs::read_to_string(path)?)
}

/// Screen-space square overlap against the camera's UI rectangle.
pub fn ui_in_rect(camera: &CameraState, obj: &SceneObject) -> Result<bool, ScriptError> {
    if obj.kind != ObjectKind::UiElement {
        return Err(ScriptError::WrongKind(obj.name.clone()));
    }
    Ok(camera
        .ui_rect
        .overlaps_square(obj.center.x, obj.center.y, obj.radius))
}

impl SceneScript {
    pub fn validate(&self) -> Result<(), ScriptError> {
        let mut names = BTreeSet::new();
        for obj in &self.objects {
            if !names.insert(obj.name.as_str()) {
                return Err(ScriptError::DuplicateObject(obj.name.clone()));
            }
            if !(obj.radius > 0.0 && obj.radius.is_finite()) {
                return Err(ScriptError::BadRadius(obj.name.clone()));
            }
        }
        let mut prev = i64::MIN;
        let mut recording = false;
        for (i, step) in self.steps.iter().enumerate() {
            if step.t_ms < 0 {
                return Err(ScriptError::NegativeTime { step: i, t_ms: step.t_ms });
            }
            if step.t_ms < prev {
                return Err(ScriptError::OutOfOrder { step: i, t_ms: step.t_ms });
            }
            prev = step.t_ms;
            match &step.action {
                StepAction::StartRecording if recording => {
                    return Err(ScriptError::UnbalancedRecording(format!(
                        "step {i} starts a recording while one is running"
                    )))
                }
                StepAction::StartRecording => recording = true,
                StepAction::StopRecording if !recording => {
                    return Err(ScriptError::UnbalancedRecording(format!(
                        "step {i} stops a recording that was never started"
                    )))
                }
                StepAction::StopRecording => recording = false,
                StepAction::MoveObject { name, .. } if !names.contains(name.as_str()) => {
                    return Err(ScriptError::UnknownObject {
                        name: name.clone(),
                        step: i,
                    })
                }
                StepAction::SetCamera { camera } => camera
                    .validate()
                    .map_err(|source| ScriptError::Camera { step: i, source })?,
                _ => {}
            }
        }
        if recording {
            return Err(ScriptError::UnbalancedRecording(
                "script ends while a recording is running".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Default)]
struct Detections {
    characters: BTreeSet<usize>,
    locations: BTreeSet<usize>,
}

impl Detections {
    fn merge(&mut self, other: Detections) {
        self.characters.extend(other.characters);
        self.locations.extend(other.locations);
    }

    fn names(set: &BTreeSet<usize>, objects: &[SceneObject]) -> Vec<String> {
        let mut out: Vec<String> = Vec::with_capacity(set.len());
        for &i in set {
            let name = &objects[i].name;
            if !out.contains(name) {
                out.push(name.clone());
            }
        }
        out
    }
}

struct SimState<'a> {
    objects: Vec<SceneObject>,
    camera: Option<(&'a CameraState, Frustum)>,
    payload: TextPayload,
    recording: Option<(i64, Detections)>,
    events: Vec<CaptureEvent>,
}

impl SimState<'_> {
    /// Indices (in declaration order) of the objects visible right now.
    fn visible(&self) -> Detections {
        let mut det = Detections::default();
        let Some((camera, frustum)) = &self.camera else {
            return det;
        };
        for (i, obj) in self.objects.iter().enumerate() {
            let (seen, logs_as) = match obj.kind {
                ObjectKind::UiElement => (
                    camera
                        .ui_rect
                        .overlaps_square(obj.center.x, obj.center.y, obj.radius),
                    obj.logs_as,
                ),
                kind => (frustum.contains_sphere(&obj.center, obj.radius), Some(kind)),
            };
            if !seen {
                continue;
            }
            match logs_as {
                Some(ObjectKind::Character) => {
                    det.characters.insert(i);
                }
                Some(ObjectKind::Location) => {
                    det.locations.insert(i);
                }
                _ => {}
            }
        }
        det
    }

    fn emit(&mut self, t_ms: i64, kind: MediaKind, det: Detections, achievement: Option<String>) {
        let id = format!("evt-{:04}", self.events.len() + 1);
        let path = match kind {
            MediaKind::Screenshot => format!("screenshots/{id}.png"),
            MediaKind::Recording => format!("recordings/{id}.mp4"),
        };
        self.events.push(CaptureEvent {
            media: MediaRef { kind, path },
            timestamp_ms: t_ms,
            detected_characters: Detections::names(&det.characters, &self.objects),
            detected_locations: Detections::names(&det.locations, &self.objects),
            achievement,
            payload: self.payload.clone(),
            id,
        });
    }
}

/// Executes the script and returns the capture events in emission order.
pub fn run_script(script: &SceneScript) -> Result<Vec<CaptureEvent>, ScriptError> {
    script.validate()?;
    let index: HashMap<&str, usize> = script
        .objects
        .iter()
        .enumerate()
        .map(|(i, o)| (o.name.as_str(), i))
        .collect();

    let mut sim = SimState {
        objects: script.objects.clone(),
        camera: None,
        payload: TextPayload::default(),
        recording: None,
        events: Vec::new(),
    };

    for (i, step) in script.steps.iter().enumerate() {
        match &step.action {
            StepAction::SetCamera { camera } => {
                let frustum = camera
                    .frustum()
                    .map_err(|source| ScriptError::Camera { step: i, source })?;
                sim.camera = Some((camera, frustum));
            }
            StepAction::MoveObject { name, center } => {
                sim.objects[index[name.as_str()]].center = *center;
            }
            StepAction::SetPayload { payload } => sim.payload = payload.clone(),
            StepAction::CaptureScreenshot => {
                if sim.camera.is_none() {
                    return Err(ScriptError::NoCamera(i));
                }
                let det = sim.visible();
                sim.emit(step.t_ms, MediaKind::Screenshot, det, None);
            }
            StepAction::UnlockAchievement { name } => {
                if sim.camera.is_none() {
                    return Err(ScriptError::NoCamera(i));
                }
                let det = sim.visible();
                sim.emit(step.t_ms, MediaKind::Screenshot, det, Some(name.clone()));
            }
            StepAction::StartRecording => {
                if sim.camera.is_none() {
                    return Err(ScriptError::NoCamera(i));
                }
                sim.recording = Some((step.t_ms, Detections::default()));
            }
            StepAction::StopRecording => {
                let (_, mut det) = sim.recording.take().expect("validated alternation");
                det.merge(sim.visible());
                sim.emit(step.t_ms, MediaKind::Recording, det, None);
            }
        }
        // Recordings sample visibility after every step while running.
        if sim.recording.is_some() {
            let now = sim.visible();
            if let Some((_, det)) = sim.recording.as_mut() {
                det.merge(now);
            }
        }
    }
    Ok(sim.events)
}
