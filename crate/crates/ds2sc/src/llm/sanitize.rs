use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SanitizeError {
    #[error("no balanced top-level JSON object in the response")]
    NoObject,
    #[error("extracted object does not parse (line {line}, column {column}): {message}")]
    Parse { line: usize, column: usize, message: String },
}

/// Recovers the JSON object from a chatty response: anything before the
/// first `{` and after its matching `}` is discarded, fences included.
pub fn sanitize_structured(text: &str) -> Result<Value, SanitizeError> {
    let start = text.find('{').ok_or(SanitizeError::NoObject)?;
    let end = matching_brace(&text[start..]).ok_or(SanitizeError::NoObject)?;
    let body = &text[start..start + end + 1];
    serde_json::from_str(body).map_err(|e| SanitizeError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Byte offset of the brace closing the one at offset 0, skipping string
/// literals.
fn matching_brace(s: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, b) in s.bytes().enumerate() {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}
