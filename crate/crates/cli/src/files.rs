use std::fs;
use std::path::{Path, PathBuf};

use kronred::io::{self, IoError};
use kronred::ValidatedNetwork;

use crate::error::CliError;

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_error(path: &Path, e: serde_json::Error) -> CliError {
    CliError::File {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

pub fn load_network(path: &Path) -> Result<ValidatedNetwork, CliError> {
    let text = read(path)?;
    let raw = io::parse_network(&text).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(kronred::validate(&raw)?)
}

pub fn read_table(path: &Path) -> Result<io::CsvTable, CliError> {
    let file = fs::File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    io::read_csv(file).map_err(|source| CliError::File {
        path: path.to_path_buf(),
        source,
    })
}

pub fn file_error(path: PathBuf, source: IoError) -> CliError {
    CliError::File { path, source }
}
