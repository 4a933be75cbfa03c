use kobol_basket::{Category, Error};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_CAPABILITY: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Engine { context: String, source: Error },
}

impl CliError {
    pub fn at(context: impl Into<String>, source: Error) -> Self {
        CliError::Engine {
            context: context.into(),
            source,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Engine { source, .. } => match source.category() {
                Category::Domain => "domain",
                Category::Numeric => "numeric",
                Category::Capability => "capability",
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            "config" => EXIT_CONFIG,
            "domain" => EXIT_DOMAIN,
            "numeric" => EXIT_NUMERIC,
            _ => EXIT_CAPABILITY,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => f.write_str(msg),
            CliError::Engine { context, source } => write!(f, "{context}: {source}"),
        }
    }
}

impl std::error::Error for CliError {}
