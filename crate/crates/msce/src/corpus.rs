//! Directory scanning for PNG corpora.

use std::fs;
use std::path::{Path, PathBuf};

use msce_core::image::luma;
use msce_core::PlaneImage;

use crate::error::{CliError, CliResult};
use crate::image_io::load_png;

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// PNG files, sorted by file name.
    pub paths: Vec<PathBuf>,
    /// One message per skipped entry.
    pub warnings: Vec<String>,
}

fn is_png(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// List the PNG files directly inside `dir` in lexicographic order. Other
/// entries are skipped with a warning (also sent to the log).
pub fn scan_corpus(dir: impl AsRef<Path>) -> CliResult<Corpus> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("{}: not a directory", dir.display())));
    }
    let entries = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut paths = Vec::new();
    let mut warnings = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.is_file() && is_png(&path) {
            paths.push(path);
        } else {
            warnings.push(format!("skipping non-PNG entry {}", path.display()));
        }
    }
    paths.sort();
    warnings.sort();
    for w in &warnings {
        log::warn!("{w}");
    }
    if paths.is_empty() {
        return Err(CliError::Usage(format!("{}: no PNG images found", dir.display())));
    }
    Ok(Corpus { paths, warnings })
}

/// Luminance planes of every image in the corpus, in scan order.
pub fn load_luma_corpus(dir: impl AsRef<Path>) -> CliResult<Vec<(PathBuf, PlaneImage)>> {
    scan_corpus(dir)?
        .paths
        .into_iter()
        .map(|p| {
            let img = load_png(&p)?;
            Ok((p, luma(&img)))
        })
        .collect()
}
