use std::fmt;

/// A failure reported as one machine-parsable line:
/// `error: kind=<kind> msg="<message>"`.
#[derive(Debug)]
pub struct CliError {
    pub kind: &'static str,
    pub msg: String,
}

impl CliError {
    pub fn new(kind: &'static str, msg: impl Into<String>) -> Self {
        CliError {
            kind,
            msg: msg.into(),
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Self::new("usage", msg)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg: String = self
            .msg
            .chars()
            .flat_map(|c| match c {
                '"' => vec!['\\', '"'],
                '\\' => vec!['\\', '\\'],
                '\n' => vec!['\\', 'n'],
                c => vec![c],
            })
            .collect();
        write!(f, "error: kind={} msg=\"{}\"", self.kind, msg)
    }
}

impl From<labelfuse::Error> for CliError {
    fn from(e: labelfuse::Error) -> Self {
        CliError::new(e.kind(), e.to_string())
    }
}
