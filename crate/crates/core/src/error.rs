use serde::Serialize;

/// Stable, machine-readable identity of an error.
///
/// `module` names the subsystem that raised the error and `code` is a
/// snake_case identifier that does not change between releases.
pub trait ErrorCode: std::error::Error {
    fn module(&self) -> &'static str;
    fn code(&self) -> &'static str;

    fn report(&self) -> ErrorReport {
        ErrorReport {
            module: self.module(),
            code: self.code(),
            message: self.to_string(),
        }
    }
}

/// JSON shape printed by the CLI for `--errors json`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub module: &'static str,
    pub code: &'static str,
    pub message: String,
}
