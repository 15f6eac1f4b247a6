use std::fmt;
use std::path::Path;

/// Command outcome other than success; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad invocation or configuration (exit 2).
    Usage(String),
    /// Unreadable, malformed or inconsistent input data (exit 1).
    Data(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Data(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) => f.write_str(m),
        }
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn data(msg: impl Into<String>) -> Failure {
    Failure::Data(msg.into())
}

/// Attaches the offending file to a library or I/O error.
pub trait At<T> {
    fn at(self, path: &Path) -> CmdResult<T>;
}

impl<T, E: fmt::Display> At<T> for Result<T, E> {
    fn at(self, path: &Path) -> CmdResult<T> {
        self.map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
    }
}

pub fn read(path: &Path) -> CmdResult<Vec<u8>> {
    std::fs::read(path).at(path)
}

pub fn read_text(path: &Path) -> CmdResult<String> {
    std::fs::read_to_string(path).at(path)
}

pub fn write(path: &Path, bytes: impl AsRef<[u8]>) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).at(parent)?;
    }
    std::fs::write(path, bytes).at(path)
}

pub fn require_file(path: &Path) -> CmdResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(usage(format!("{}: no such file", path.display())))
    }
}

pub fn require_dir(path: &Path) -> CmdResult {
    if path.is_dir() {
        Ok(())
    } else {
        Err(usage(format!("{}: no such directory", path.display())))
    }
}
