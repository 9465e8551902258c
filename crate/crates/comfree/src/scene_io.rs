//! JSON scene files.
//!
//! ```json
//! {
//!   "config": { "dt": 0.002, "impedance": { "k_user": 0.1 } },
//!   "bodies": [
//!     { "name": "ground", "kind": "static", "geom": { "type": "half_space", "normal": [0, 0, 1], "offset": 0 } },
//!     { "name": "ball", "kind": "dynamic", "mass": 1.0, "geom": { "type": "sphere", "radius": 0.05 }, "pos": [0, 0, 0.05] }
//!   ]
//! }
//! ```
//!
//! All quantities are SI. `config` and every body field except `name`, `kind`
//! and `geom` are optional. Dynamic bodies need `mass`; `inertia_body` defaults
//! to the solid inertia of the shape. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use comfree_core::{Body, BodyKind, FrictionParams, GeomShape, Mat3, Quat, Scene, SimConfig, SpatialInertia, ValidationError, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid {}: {}", .0.field, .0.reason)]
    Validation(ValidationError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<ValidationError> for SceneError {
    fn from(e: ValidationError) -> Self {
        SceneError::Validation(e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    #[serde(default)]
    config: SimConfig,
    bodies: Vec<BodyFile>,
}

fn identity() -> Quat {
    Quat::IDENTITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyFile {
    name: String,
    kind: BodyKind,
    geom: GeomShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    inertia_body: Option<Mat3>,
    #[serde(default)]
    pos: Vec3,
    #[serde(default = "identity")]
    orient: Quat,
    #[serde(default)]
    vel: Vec3,
    #[serde(default)]
    ang_vel: Vec3,
    #[serde(default)]
    friction: FrictionParams,
}

impl BodyFile {
    fn into_body(self, index: usize) -> Result<Body, ValidationError> {
        let field = |f: &str| format!("bodies[{index}].{f}");
        let inertia = match self.kind {
            BodyKind::Static => {
                if self.mass.is_some() || self.inertia_body.is_some() {
                    return Err(ValidationError::new(field("mass"), "static bodies carry no inertia"));
                }
                None
            }
            BodyKind::Dynamic => {
                let mass = self.mass.ok_or_else(|| ValidationError::new(field("mass"), "required for dynamic bodies"))?;
                if !(mass > 0.0 && mass.is_finite()) {
                    return Err(ValidationError::new(field("mass"), "must be positive and finite"));
                }
                match self.inertia_body {
                    Some(i) => Some(SpatialInertia::new(mass, i)),
                    None => Some(
                        self.geom
                            .default_inertia(mass)
                            .ok_or_else(|| ValidationError::new(field("geom"), "half-spaces cannot be dynamic"))?,
                    ),
                }
            }
        };
        Ok(Body {
            name: self.name,
            kind: self.kind,
            geom: self.geom,
            inertia,
            pos: self.pos,
            orient: self.orient,
            vel: self.vel,
            ang_vel: self.ang_vel,
            friction: self.friction,
        })
    }

    fn from_body(b: &Body) -> Self {
        BodyFile {
            name: b.name.clone(),
            kind: b.kind,
            geom: b.geom,
            mass: b.inertia.map(|i| i.mass),
            inertia_body: b.inertia.map(|i| i.inertia_body),
            pos: b.pos,
            orient: b.orient,
            vel: b.vel,
            ang_vel: b.ang_vel,
            friction: b.friction,
        }
    }
}

/// Parses and validates a scene document.
pub fn parse_scene(text: &str) -> Result<Scene, SceneError> {
    let file: SceneFile =
        serde_json::from_str(text).map_err(|e| SceneError::Parse { line: e.line(), reason: e.to_string() })?;
    let bodies = file
        .bodies
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.into_body(i))
        .collect::<Result<Vec<_>, _>>()?;
    let scene = Scene::new(bodies, file.config);
    scene.validate()?;
    Ok(scene)
}

pub fn scene_to_json(scene: &Scene) -> String {
    let file = SceneFile { config: scene.config.clone(), bodies: scene.bodies.iter().map(BodyFile::from_body).collect() };
    serde_json::to_string_pretty(&file).expect("scene types always serialize")
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io { path: path.to_path_buf(), source })?;
    parse_scene(&text)
}

pub fn save_scene(scene: &Scene, path: impl AsRef<Path>) -> Result<(), SceneError> {
    let path = path.as_ref();
    std::fs::write(path, scene_to_json(scene)).map_err(|source| SceneError::Io { path: path.to_path_buf(), source })
}
