//! Reading and writing project bundles.
//!
//! A bundle is either a directory holding `project.json` and `assets/<id>`
//! files, or a zip archive with the same entries. Archives are written
//! store-only, entries sorted by name, with fixed timestamps, so equal
//! projects pack to equal bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Cursor, Read, Write};
use std::path::Path;

use zip::write::SimpleFileOptions;
use zip::{CompressionMethod, DateTime, ZipArchive, ZipWriter};

use super::error::ProjectError;
use super::format::{canonical_manifest, manifest_digest, parse_manifest};
use super::model::Project;
use super::validate::{has_errors, validate, Diagnostic, Issue};

pub const MANIFEST_NAME: &str = "project.json";
pub const ASSETS_DIR: &str = "assets";

/// Reads a bundle without validating it.
pub fn read_project(path: &Path) -> Result<Project, ProjectError> {
    if path.is_dir() {
        read_project_dir(path)
    } else {
        let bytes = fs::read(path).map_err(|e| ProjectError::io(path, e))?;
        read_project_archive(&bytes)
    }
}

fn read_project_dir(dir: &Path) -> Result<Project, ProjectError> {
    let manifest_path = dir.join(MANIFEST_NAME);
    let manifest = match fs::read(&manifest_path) {
        Ok(bytes) => bytes,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ProjectError::MissingManifest)
        }
        Err(e) => return Err(ProjectError::io(manifest_path, e)),
    };
    let mut project = parse_manifest(&manifest)?;
    let assets_dir = dir.join(ASSETS_DIR);
    if assets_dir.is_dir() {
        let entries = fs::read_dir(&assets_dir).map_err(|e| ProjectError::io(&assets_dir, e))?;
        for entry in entries {
            let entry = entry.map_err(|e| ProjectError::io(&assets_dir, e))?;
            let path = entry.path();
            if !path.is_file() {
                continue;
            }
            let Some(id) = path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let bytes = fs::read(&path).map_err(|e| ProjectError::io(&path, e))?;
            project.assets.insert(id.to_string(), bytes);
        }
    }
    Ok(project)
}

/// Reads a packed bundle from memory without validating it.
pub fn read_project_archive(bytes: &[u8]) -> Result<Project, ProjectError> {
    let mut archive =
        ZipArchive::new(Cursor::new(bytes)).map_err(|e| ProjectError::Archive(e.to_string()))?;
    let mut manifest = None;
    let mut assets = BTreeMap::new();
    for i in 0..archive.len() {
        let mut entry = archive
            .by_index(i)
            .map_err(|e| ProjectError::Archive(e.to_string()))?;
        if entry.is_dir() {
            continue;
        }
        let name = entry.name().to_string();
        let mut data = Vec::with_capacity(entry.size() as usize);
        entry
            .read_to_end(&mut data)
            .map_err(|e| ProjectError::Archive(e.to_string()))?;
        if name == MANIFEST_NAME {
            manifest = Some(data);
        } else if let Some(id) = name.strip_prefix("assets/") {
            if !id.is_empty() && !id.contains('/') {
                assets.insert(id.to_string(), data);
            }
        }
    }
    let manifest = manifest.ok_or(ProjectError::MissingManifest)?;
    let mut project = parse_manifest(&manifest)?;
    project.assets = assets;
    Ok(project)
}

/// Turns validation errors into the matching load error. Duplicate names and
/// missing assets get their own variants; anything else is `Invalid`.
pub fn check_loaded(project: Project) -> Result<Project, ProjectError> {
    let diagnostics = validate(&project);
    if !has_errors(&diagnostics) {
        return Ok(project);
    }
    for d in &diagnostics {
        match &d.issue {
            Issue::DuplicateName { scope, name } => {
                return Err(ProjectError::DuplicateName {
                    scope: scope.clone(),
                    name: name.clone(),
                })
            }
            Issue::AssetMissing { id } => return Err(ProjectError::AssetMissing(id.clone())),
            _ => {}
        }
    }
    Err(ProjectError::Invalid(diagnostics))
}

/// Reads and validates a bundle (directory or archive).
pub fn load_project(path: &Path) -> Result<Project, ProjectError> {
    check_loaded(read_project(path)?)
}

/// Reads and validates a packed bundle held in memory.
pub fn load_project_bytes(bytes: &[u8]) -> Result<Project, ProjectError> {
    check_loaded(read_project_archive(bytes)?)
}

fn ensure_valid(project: &Project) -> Result<(), ProjectError> {
    let diagnostics = validate(project);
    if has_errors(&diagnostics) {
        let errors: Vec<Diagnostic> = diagnostics.into_iter().filter(|d| d.is_error()).collect();
        return Err(ProjectError::ValidationFailed(errors));
    }
    Ok(())
}

/// Packs a project into archive bytes.
pub fn pack_project(project: &Project) -> Result<Vec<u8>, ProjectError> {
    ensure_valid(project)?;
    Ok(pack_unchecked(project))
}

fn pack_unchecked(project: &Project) -> Vec<u8> {
    let mut entries: Vec<(String, &[u8])> = project
        .assets
        .iter()
        .map(|(id, bytes)| (format!("{ASSETS_DIR}/{id}"), bytes.as_slice()))
        .collect();
    let manifest = canonical_manifest(project);
    entries.push((MANIFEST_NAME.to_string(), &manifest));
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    let options = SimpleFileOptions::default()
        .compression_method(CompressionMethod::Stored)
        .last_modified_time(DateTime::default())
        .unix_permissions(0o644);
    let mut writer = ZipWriter::new(Cursor::new(Vec::new()));
    for (name, bytes) in entries {
        writer
            .start_file(name, options)
            .and_then(|_| writer.write_all(bytes).map_err(Into::into))
            .expect("writing to memory");
    }
    writer.finish().expect("writing to memory").into_inner()
}

/// Saves a project as a directory bundle or, when `packed`, as an archive
/// file at `dest`. Returns the manifest digest.
pub fn save_project(project: &Project, dest: &Path, packed: bool) -> Result<String, ProjectError> {
    ensure_valid(project)?;
    if packed {
        if let Some(parent) = dest.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| ProjectError::io(parent, e))?;
        }
        fs::write(dest, pack_unchecked(project)).map_err(|e| ProjectError::io(dest, e))?;
    } else {
        let assets_dir = dest.join(ASSETS_DIR);
        fs::create_dir_all(&assets_dir).map_err(|e| ProjectError::io(&assets_dir, e))?;
        let manifest_path = dest.join(MANIFEST_NAME);
        fs::write(&manifest_path, canonical_manifest(project))
            .map_err(|e| ProjectError::io(&manifest_path, e))?;
        for (id, bytes) in &project.assets {
            let path = assets_dir.join(id);
            fs::write(&path, bytes).map_err(|e| ProjectError::io(&path, e))?;
        }
    }
    Ok(manifest_digest(project))
}
