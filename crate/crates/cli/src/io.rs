//! Reading and writing clouds by file extension.

use std::fs;
use std::path::{Path, PathBuf};

use structret::{parse_ply, parse_xyz, write_ply, write_xyz, PointCloud};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Xyz,
    Ply,
}

pub fn format_of(path: &Path) -> Option<Format> {
    match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
        "xyz" => Some(Format::Xyz),
        "ply" => Some(Format::Ply),
        _ => None,
    }
}

fn require_format(path: &Path) -> Result<Format, CliError> {
    format_of(path).ok_or_else(|| CliError::Usage(format!("{}: expected a .xyz or .ply file", path.display())))
}

pub fn read_cloud(path: &Path, id: &str) -> Result<PointCloud, CliError> {
    let format = require_format(path)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let cloud = match format {
        Format::Xyz => parse_xyz(&text, id),
        Format::Ply => parse_ply(&text, id),
    }
    .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(cloud.with_source(path.display().to_string()))
}

/// Id derived from the file name.
pub fn stem_id(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "cloud".into(), |s| s.to_string_lossy().into_owned())
}

pub fn write_cloud(path: &Path, cloud: &PointCloud, colors: Option<&[[u8; 3]]>) -> Result<(), CliError> {
    let text = match require_format(path)? {
        Format::Xyz if colors.is_some() => {
            return Err(CliError::Usage(format!(
                "{}: colors need a .ply output",
                path.display()
            )));
        }
        Format::Xyz => write_xyz(cloud),
        Format::Ply => write_ply(cloud, colors)?,
    };
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
        }
        _ => Ok(()),
    }
}

/// A cloud file found under a database input directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Found {
    pub path: PathBuf,
    /// Relative path without extension, `/`-separated.
    pub id: String,
    /// First-level subdirectory, empty for top-level files.
    pub category: String,
}

/// All .xyz/.ply files below `root`, sorted by relative path.
pub fn find_clouds(root: &Path) -> Result<Vec<Found>, CliError> {
    if !root.is_dir() {
        return Err(CliError::Data(format!("{} is not a directory", root.display())));
    }
    let mut found = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        let rd = fs::read_dir(&dir).map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?;
        for ent in rd {
            let path = ent
                .map_err(|e| CliError::Data(format!("cannot list {}: {e}", dir.display())))?
                .path();
            if path.is_dir() {
                stack.push(path);
                continue;
            }
            if format_of(&path).is_none() {
                continue;
            }
            let rel = path.strip_prefix(root).expect("walked from root").with_extension("");
            let parts: Vec<String> = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect();
            let category = if parts.len() > 1 {
                parts[0].clone()
            } else {
                String::new()
            };
            found.push(Found {
                id: parts.join("/"),
                category,
                path,
            });
        }
    }
    found.sort_by(|a, b| a.id.cmp(&b.id).then_with(|| a.path.cmp(&b.path)));
    Ok(found)
}
