use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::Global;

pub const EXIT_INPUT: u8 = 1;
pub const EXIT_PARTIAL: u8 = 2;
pub const EXIT_UNCONVERGED: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Attach the file name to a parse or domain error.
pub fn at<T>(path: &Path, r: cryomos::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Resolve `p` against the directory holding `base`.
pub fn relative_to(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(Path::new(".")).join(p)
    }
}

/// Primary output: a file under `--out`, otherwise standard output.
pub fn emit(g: &Global, name: &str, text: &str) -> CliResult<()> {
    match &g.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::input(e.to_string()))
        }
    }
}

/// Secondary output: a file under `--out`, otherwise standard error.
pub fn emit_side(g: &Global, name: &str, text: &str) -> CliResult<()> {
    match &g.out {
        Some(_) => emit(g, name, text),
        None => {
            eprint!("{text}");
            Ok(())
        }
    }
}

pub fn json<T: serde::Serialize + ?Sized>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable value");
    s.push('\n');
    s
}
