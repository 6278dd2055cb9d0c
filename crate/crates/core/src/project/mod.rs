//! Projects, objects, scripts and bricks, plus the bundle format.

mod bundle;
mod error;
pub mod format;
mod model;
pub mod path;
mod validate;

pub use bundle::{
    check_loaded, load_project, load_project_bytes, pack_project, read_project,
    read_project_archive, save_project, ASSETS_DIR, MANIFEST_NAME,
};
pub use error::ProjectError;
pub use format::{canonical_manifest, flatten_bricks, manifest_digest, nest_bricks, FlatBrick, NestError};
pub use model::{
    script_variables, walk_bricks, Brick, BrickCategory, GameObject, Look, Project, Script,
    SoundRef, Stage, Trigger, DEFAULT_STAGE_HEIGHT, DEFAULT_STAGE_WIDTH,
};
pub use path::{resolve, Element, ObjectRef};
pub use validate::{has_errors, is_valid_asset_id, validate, Diagnostic, Issue, Severity};
