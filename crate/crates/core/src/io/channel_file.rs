//! Plain-text channel and distribution formats.
//!
//! A channel file holds one row of whitespace- or comma-separated
//! probabilities per input symbol; `#` starts a comment.

use std::path::Path;

use crate::error::{Error, Result};
use crate::prob::{Channel, Distribution};

/// Row-sum tolerance for parsed channels.
pub const FILE_TOLERANCE: f64 = 1e-9;

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>> {
    line.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("not a number: {t:?}"),
            })
        })
        .collect()
}

/// Parses the channel text format.
pub fn parse_channel(text: &str) -> Result<Channel> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut first_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = numbers(line, i + 1)?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!(
                        "row {} has {} entries, row 0 (line {first_line}) has {}",
                        rows.len(),
                        row.len(),
                        first.len()
                    ),
                });
            }
        } else {
            first_line = i + 1;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty("channel file"));
    }
    Channel::with_tolerance(rows, FILE_TOLERANCE)
}

pub fn parse_channel_file(path: impl AsRef<Path>) -> Result<Channel> {
    parse_channel(&std::fs::read_to_string(path)?)
}

/// Inline matrix: rows separated by `;` or `/`.
pub fn parse_inline_channel(text: &str) -> Result<Channel> {
    parse_channel(&text.replace([';', '/'], "\n"))
}

/// Input law of a query: fixed, or optimised per quantity.
#[derive(Clone, Debug, PartialEq)]
pub enum InputChoice {
    Fixed(Distribution),
    Optimize,
}

/// `p1,p2,...` or `optimize`; validated at the file tolerance.
pub fn parse_input_choice(text: &str) -> Result<InputChoice> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("optimize") {
        return Ok(InputChoice::Optimize);
    }
    let p = numbers(t, 1)?;
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > FILE_TOLERANCE {
        return Err(Error::NotNormalized {
            sum,
            tol: FILE_TOLERANCE,
        });
    }
    if let Some((i, &v)) = p
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidProbability { index: i, value: v });
    }
    // renormalise only the rounding left after the tolerance check
    Ok(InputChoice::Fixed(Distribution::new(
        p.iter().map(|v| v / sum).collect(),
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_bsc_with_comments() {
        let w = parse_channel("# BSC(0.2)\n0.8 0.2\n\n0.2 0.8  # second row\n").unwrap();
        assert_eq!(w, Channel::bsc(0.2).unwrap());
    }

    #[test]
    fn rejects_row_sum_and_names_row() {
        let err = parse_channel("0.8 0.2\n0.5 0.4\n").unwrap_err();
        match err {
            Error::RowNotStochastic { row, sum, .. } => {
                assert_eq!(row, 1);
                assert!((sum - 0.9).abs() < 1e-12);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(parse_channel("0.8 0.2\n0.5 0.4\n")
            .unwrap_err()
            .to_string()
            .contains("row 1"));
    }

    #[test]
    fn rectangular_and_tolerance() {
        let w = parse_channel("0.5 0.5\n1 0\n0.25 0.75\n").unwrap();
        assert_eq!((w.input_size(), w.output_size()), (3, 2));
        assert!(parse_channel("0.3333333333 0.6666666667\n1 0\n").is_ok());
        assert!(matches!(
            parse_channel("0.5 x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_channel("0.5 0.5\n1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_channel("# nothing\n").is_err());
    }

    #[test]
    fn inline_and_input_choice() {
        assert_eq!(
            parse_inline_channel("0.8 0.2; 0.2 0.8").unwrap(),
            Channel::bsc(0.2).unwrap()
        );
        assert_eq!(
            parse_input_choice("optimize").unwrap(),
            InputChoice::Optimize
        );
        match parse_input_choice("0.25,0.75").unwrap() {
            InputChoice::Fixed(p) => assert_eq!(p.probs(), &[0.25, 0.75]),
            _ => panic!(),
        }
        assert!(parse_input_choice("0.2,0.2").is_err());
    }
}
