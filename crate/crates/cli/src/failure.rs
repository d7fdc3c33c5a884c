use std::path::Path;

use sessionforge::error::ErrorReport;
use sessionforge::ErrorCode;

/// An error on its way to the user, with the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub module: &'static str,
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
}

impl<E: ErrorCode> From<E> for Failure {
    fn from(e: E) -> Self {
        let mut message = e.to_string();
        let mut source = e.source();
        while let Some(s) = source {
            let text = s.to_string();
            if !message.contains(&text) {
                message.push_str(": ");
                message.push_str(&text);
            }
            source = s.source();
        }
        Failure {
            module: e.module(),
            code: e.code(),
            message,
            exit: 1,
        }
    }
}

impl Failure {
    /// Bad flag values that parse but make no sense; exit status 2.
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            module: "cli",
            code: "usage",
            message: message.into(),
            exit: 2,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Failure {
            module: "cli",
            code: "io_error",
            message: format!("{}: {e}", path.display()),
            exit: 1,
        }
    }

    pub fn data(code: &'static str, message: impl Into<String>) -> Self {
        Failure {
            module: "cli",
            code,
            message: message.into(),
            exit: 1,
        }
    }

    pub fn print(&self, json: bool) {
        if json {
            let report = ErrorReport {
                module: self.module,
                code: self.code,
                message: self.message.clone(),
            };
            eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
        } else {
            eprintln!("error [{}/{}]: {}", self.module, self.code, self.message);
        }
    }
}
