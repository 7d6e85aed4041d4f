use std::path::Path;

use oneshot_topk::CountVector;

use crate::failure::{CliResult, Failure};

/// One real per line; blank lines and `#` comments (whole-line or trailing)
/// are ignored.
pub fn parse_counts(text: &str, origin: &str) -> CliResult<Vec<f64>> {
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 =
            body.parse().map_err(|_| Failure::invalid(format!("{origin}:{}: not a number: `{body}`", n + 1)))?;
        if !v.is_finite() {
            return Err(Failure::invalid(format!("{origin}:{}: count must be finite", n + 1)));
        }
        values.push(v);
    }
    Ok(values)
}

/// Counts from `--input` or an inline `--x` list; exactly one must be given.
pub fn counts(input: Option<&Path>, inline: Option<&[f64]>) -> CliResult<CountVector> {
    let values = match (input, inline) {
        (Some(_), Some(_)) => return Err(Failure::invalid("give either --input or --x, not both")),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::invalid(format!("cannot read {}: {e}", path.display())))?;
            parse_counts(&text, &path.display().to_string())?
        }
        (None, Some(v)) => v.to_vec(),
        (None, None) => return Err(Failure::invalid("no counts: pass --input <file> or --x v1,v2,...")),
    };
    Ok(CountVector::new(values)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let text = "# header\n1.5\n\n  -2 # trailing\n3e2\n";
        assert_eq!(parse_counts(text, "t").unwrap(), vec![1.5, -2.0, 300.0]);
    }

    #[test]
    fn bad_lines_name_the_line() {
        let err = parse_counts("1\nabc\n", "file.txt").unwrap_err();
        assert_eq!(err.code, 2);
        assert!(err.message.contains("file.txt:2"), "{}", err.message);
        assert!(parse_counts("inf\n", "f").is_err());
    }
}
