//! Input parsers: CSV distance matrices, JSON edge lists, JSON generator
//! specs. Every diagnostic carries a line and column.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;
use thiserror::Error;

use crate::rational::{parse_rational, Rational};
use crate::space::{FiniteMetricSpace, GeneratorSpec, SpaceError};

#[derive(Debug, Error)]
pub enum InputError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

pub(crate) fn from_json_str<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, InputError> {
    serde_json::from_str(text).map_err(|e| InputError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// A rational written either as a `"p/q"` string or a JSON integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalToken(pub Rational);

impl<'de> Deserialize<'de> for RationalToken {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = RationalToken;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative rational as \"p/q\" or an integer")
            }
            fn visit_str<E: de::Error>(self, s: &str) -> Result<RationalToken, E> {
                parse_rational(s).map(RationalToken).map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<RationalToken, E> {
                i64::try_from(v)
                    .map(|v| RationalToken(Rational::from_integer(v)))
                    .map_err(|_| E::custom("integer too large"))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<RationalToken, E> {
                if v < 0 {
                    Err(E::custom(format!("negative value `{v}`")))
                } else {
                    Ok(RationalToken(Rational::from_integer(v)))
                }
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<RationalToken, E> {
                Err(E::custom(format!("floating-point value `{v}`; write it as \"p/q\"")))
            }
        }
        d.deserialize_any(V)
    }
}

/// Parses a CSV table of rationals. Blank lines and `#` comments are
/// skipped; columns are 1-based token positions.
pub fn parse_matrix_csv(text: &str) -> Result<Vec<Vec<Rational>>, InputError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            InputError::Syntax { line, column: 0, message: e.to_string() }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|t| t.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, tok)| {
                parse_rational(tok).map_err(|e| InputError::Syntax {
                    line,
                    column: c + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn space_from_csv(text: &str) -> Result<FiniteMetricSpace, InputError> {
    Ok(FiniteMetricSpace::from_distance_matrix(parse_matrix_csv(text)?)?)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize, RationalToken)>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

/// Parses `{"n": int, "edges": [[i, j, "w"], ...]}`.
pub fn space_from_graph_json(text: &str) -> Result<FiniteMetricSpace, InputError> {
    let g: GraphFile = from_json_str(text)?;
    let edges: Vec<(usize, usize, Rational)> = g.edges.iter().map(|&(i, j, w)| (i, j, w.0)).collect();
    let space = FiniteMetricSpace::from_weighted_graph(g.n, &edges)?;
    Ok(match g.labels {
        Some(l) => space.with_labels(l)?,
        None => space,
    })
}

/// Parses `{"kind": "...", "params": {...}}`.
pub fn generator_from_json(text: &str) -> Result<GeneratorSpec, InputError> {
    from_json_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_matrix() {
        let s = space_from_csv("# triangle\n0,1,1\n1, 0 ,1\n1,1,0\n").unwrap();
        assert_eq!(s.len(), 3);
        let s = space_from_csv("0,1/2\n1/2,0\n").unwrap();
        assert_eq!(s.dist(0, 1), Rational::new(1, 2));
    }

    #[test]
    fn csv_diagnostics() {
        match parse_matrix_csv("0,1\n1,-1\n") {
            Err(InputError::Syntax { line: 2, column: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match parse_matrix_csv("0,NaN\n") {
            Err(InputError::Syntax { line: 1, column: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            space_from_csv("0,1\n2,0\n"),
            Err(InputError::Space(SpaceError::AsymmetricMatrix { .. }))
        ));
    }

    #[test]
    fn graph_json() {
        let s = space_from_graph_json(r#"{"n": 4, "edges": [[0,1,"1"],[1,2,1],[2,3,"1"]]}"#).unwrap();
        assert_eq!(s.dist(0, 3), Rational::from_integer(3));
        let err = space_from_graph_json("{\"n\": 2,\n \"edges\": [[0,1,\"-5\"]]}").unwrap_err();
        assert!(matches!(err, InputError::Syntax { line: 2, .. }), "{err}");
        let err = space_from_graph_json(r#"{"n": 2, "edges": [[0,1,0.5]]}"#).unwrap_err();
        assert!(matches!(err, InputError::Syntax { line: 1, .. }), "{err}");
    }

    #[test]
    fn generator_json() {
        let g = generator_from_json(r#"{"kind":"circle","params":{"n":12,"L":"1"}}"#).unwrap();
        assert_eq!(g, GeneratorSpec::Circle { n: 12, length: Rational::from_integer(1) });
        let g = generator_from_json(r#"{"kind":"wedge_of_circles","params":{"L":["1","3/2"],"nodes":[12,18]}}"#)
            .unwrap();
        assert_eq!(g.to_string(), "wedge:L=1;3/2,nodes=12;18");
        assert!(generator_from_json(r#"{"kind":"circle","params":{"n":12,"L":"-1"}}"#).is_err());
    }
}
