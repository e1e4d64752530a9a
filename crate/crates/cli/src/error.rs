use std::fmt;

use agpk_core::Error;

pub const FEASIBLE: u8 = 0;
pub const INFEASIBLE: u8 = 1;
pub const INCONCLUSIVE: u8 = 2;
pub const MALFORMED_JSON: u8 = 64;
pub const OUTSIDE_DOMAIN: u8 = 65;
pub const INVALID_INPUT: u8 = 66;
pub const UNREADABLE: u8 = 67;
pub const USAGE: u8 = 68;

pub const EXIT_CODES: &str = "\
Exit codes:
  0   feasible, verified, or all checks passed
  1   infeasible (numerical evidence), verification failed, or a check failed
  2   inconclusive: iteration cap reached or numerical breakdown
  64  malformed JSON (the message gives line and column)
  65  a point lies outside the domain (the message gives its margin)
  66  invalid input: schema, dimensions, parameters, duplicate points, poles,
      non-commuting or non-admissible tuples, bad AGPK_THREADS
  67  an input file cannot be read
  68  bad command-line usage

Environment:
  AGPK_THREADS  number of worker threads (default: all cores)";

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(INVALID_INPUT, message)
    }

    pub fn json(source: &str, e: &serde_json::Error) -> Self {
        use serde_json::error::Category;
        let code = match e.classify() {
            Category::Syntax | Category::Eof => MALFORMED_JSON,
            Category::Data => INVALID_INPUT,
            Category::Io => UNREADABLE,
        };
        Self::new(code, format!("{source}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. } => OUTSIDE_DOMAIN,
            Error::Inconclusive { .. } | Error::Spectrum(_) | Error::NotHermitian { .. } => INCONCLUSIVE,
            _ => INVALID_INPUT,
        };
        Self::new(code, e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_errors_are_classified() {
        let e = serde_json::from_str::<serde_json::Value>("{\n  \"a\": [1,\n}").unwrap_err();
        let c = CliError::json("p.json", &e);
        assert_eq!(c.code, MALFORMED_JSON);
        assert!(c.message.contains("line 3"), "{}", c.message);
        let e = serde_json::from_str::<Vec<u8>>("[\"x\"]").unwrap_err();
        assert_eq!(CliError::json("p.json", &e).code, INVALID_INPUT);
    }

    #[test]
    fn core_errors_map_to_codes() {
        let c: CliError = Error::Domain { index: 1, margin: -0.25 }.into();
        assert_eq!(c.code, OUTSIDE_DOMAIN);
        assert!(c.message.contains("margin"));
        let c: CliError = Error::Inconclusive { iterations: 3, residual: 1.0 }.into();
        assert_eq!(c.code, INCONCLUSIVE);
        let c: CliError = Error::Duplicate(0, 1).into();
        assert_eq!(c.code, INVALID_INPUT);
    }
}
