//! Text formats: `wfa v1` model files and sample files.
//!
//! ```text
//! wfa v1
//! alphabet a
//! dim 1
//! initial 1
//! final 0.5
//! matrix a
//! 0.5
//! ```
//!
//! Sample files hold one string per line with space-separated symbols; an
//! empty line is the empty string. The first line may be a header
//! `# sample model=<id> seed=<s> n=<n>`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lang::Alphabet;
use crate::sampling::Sample;
use crate::wfa::LinearRepresentation;

/// A parsed model and any validation warnings.
#[derive(Clone, Debug)]
pub struct ParsedModel {
    pub rep: LinearRepresentation,
    pub warnings: Vec<String>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let last_line = text.lines().count() + 1;
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Lines { inner: it.peekable(), last_line }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner.next().ok_or_else(|| {
            parse_err(self.last_line, format!("unexpected end of file, expected {what}"))
        })
    }

    fn peek_line(&mut self) -> usize {
        self.inner.peek().map(|&(n, _)| n).unwrap_or(self.last_line)
    }

    fn keyword(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.next(&format!("`{key}`"))?;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some(k) if k == key => Ok((n, tokens.collect())),
            _ => Err(parse_err(n, format!("expected `{key}`, found `{line}`"))),
        }
    }
}

fn floats(line: usize, tokens: &[&str], expected: usize) -> Result<Vec<f64>> {
    if tokens.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} numbers, found {}", tokens.len()),
        ));
    }
    tokens
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(line, format!("invalid number `{t}`"))))
        .collect()
}

/// Parses a `wfa v1` model and validates it; a divergent model parses with a
/// warning.
pub fn parse_model(text: &str) -> Result<ParsedModel> {
    let mut lines = Lines::new(text);
    let (n, header) = lines.next("`wfa v1` header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["wfa", "v1"] {
        return Err(parse_err(n, format!("expected `wfa v1`, found `{header}`")));
    }
    let (n, symbols) = lines.keyword("alphabet")?;
    let alphabet =
        Alphabet::new(symbols.iter().copied()).map_err(|e| parse_err(n, e.to_string()))?;
    let (n, dim) = lines.keyword("dim")?;
    let d = match dim.as_slice() {
        [v] => v
            .parse::<usize>()
            .ok()
            .filter(|&d| d > 0)
            .ok_or_else(|| parse_err(n, format!("invalid dimension `{v}`")))?,
        _ => return Err(parse_err(n, "expected `dim <d>`")),
    };
    let (n, tokens) = lines.keyword("initial")?;
    let initial = DVector::from_vec(floats(n, &tokens, d)?);
    let (n, tokens) = lines.keyword("final")?;
    let final_weights = DVector::from_vec(floats(n, &tokens, d)?);

    let mut transitions: Vec<Option<DMatrix<f64>>> = vec![None; alphabet.len()];
    for _ in 0..alphabet.len() {
        let (n, tokens) = lines.keyword("matrix")?;
        let symbol = match tokens.as_slice() {
            [s] => alphabet.index_of(s).map_err(|e| parse_err(n, e.to_string()))?,
            _ => return Err(parse_err(n, "expected `matrix <symbol>`")),
        };
        if transitions[symbol].is_some() {
            return Err(parse_err(
                n,
                format!("duplicate matrix for `{}`", alphabet.symbol(symbol)),
            ));
        }
        let mut m = DMatrix::zeros(d, d);
        for r in 0..d {
            let at = lines.peek_line();
            let (n, row) = lines.next("a matrix row")?;
            if row.starts_with("matrix") {
                return Err(parse_err(at, format!("matrix has {r} rows, expected {d}")));
            }
            let values = floats(n, &row.split_whitespace().collect::<Vec<_>>(), d)?;
            m.set_row(r, &DVector::from_vec(values).transpose());
        }
        transitions[symbol] = Some(m);
    }
    if let Ok((n, extra)) = lines.next("") {
        return Err(parse_err(n, format!("unexpected trailing content `{extra}`")));
    }
    let transitions = transitions.into_iter().map(|m| m.expect("every symbol seen")).collect();
    let rep = LinearRepresentation::new(alphabet, initial, transitions, final_weights)?;
    let report = rep.validate(false);
    let mut warnings = Vec::new();
    if !report.convergent {
        warnings.push(format!(
            "series diverges: spectral radius of M_Σ is about {:.6}",
            report.spectral_radius
        ));
    }
    Ok(ParsedModel { rep, warnings })
}

fn push_floats(out: &mut String, values: impl Iterator<Item = f64>) {
    let parts: Vec<String> = values.map(|v| format!("{v:.16e}")).collect();
    out.push_str(&parts.join(" "));
    out.push('\n');
}

/// Renders a model with 17 significant digits, which round-trips exactly.
pub fn render_model(rep: &LinearRepresentation) -> String {
    let mut out = String::from("wfa v1\n");
    let _ = writeln!(out, "alphabet {}", rep.alphabet().symbols().join(" "));
    let _ = writeln!(out, "dim {}", rep.dim());
    out.push_str("initial ");
    push_floats(&mut out, rep.initial().iter().copied());
    out.push_str("final ");
    push_floats(&mut out, rep.final_weights().iter().copied());
    for (x, m) in rep.transitions().iter().enumerate() {
        let _ = writeln!(out, "matrix {}", rep.alphabet().symbol(x));
        for row in m.row_iter() {
            push_floats(&mut out, row.iter().copied());
        }
    }
    out
}

pub fn render_sample(sample: &Sample, alphabet: &Alphabet) -> String {
    let mut out = format!(
        "# sample model={} seed={} n={}\n",
        sample.source,
        sample.seed,
        sample.strings.len()
    );
    for w in &sample.strings {
        out.push_str(&alphabet.render_word(w));
        out.push('\n');
    }
    out
}

/// Parses a sample file. Without a header the seed is 0 and the source empty.
pub fn parse_sample(text: &str, alphabet: &Alphabet) -> Result<Sample> {
    let mut sample = Sample { strings: Vec::new(), seed: 0, source: String::new() };
    let mut declared: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if let Some(comment) = line.strip_prefix('#') {
            if n == 1 {
                for field in comment.split_whitespace().skip(1) {
                    match field.split_once('=') {
                        Some(("model", v)) => sample.source = v.to_string(),
                        Some(("seed", v)) => {
                            sample.seed = v.parse().map_err(|_| parse_err(n, "invalid seed"))?
                        }
                        Some(("n", v)) => {
                            declared = Some(v.parse().map_err(|_| parse_err(n, "invalid n"))?)
                        }
                        _ => {}
                    }
                }
            }
            continue;
        }
        sample.strings.push(alphabet.parse_word(line).map_err(|e| parse_err(n, e.to_string()))?);
    }
    if let Some(expected) = declared {
        if expected != sample.strings.len() {
            return Err(parse_err(
                text.lines().count(),
                format!("header declares {expected} strings, found {}", sample.strings.len()),
            ));
        }
    }
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wfa::tests::p1;

    const P1: &str = "wfa v1\nalphabet a\ndim 1\ninitial 1\nfinal 0.5\nmatrix a\n0.5\n";

    #[test]
    fn parses_minimal_model() {
        let parsed = parse_model(P1).unwrap();
        assert_eq!(parsed.rep, p1());
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# a model\nwfa v1\n\nalphabet a # one symbol\ndim 1\ninitial 1\nfinal 0.5\nmatrix a\n5e-1\n";
        assert_eq!(parse_model(text).unwrap().rep, p1());
    }

    #[test]
    fn round_trip() {
        let rep = LinearRepresentation::new(
            Alphabet::new(["a", "b"]).unwrap(),
            DVector::from_vec(vec![0.1, 1.0 / 3.0]),
            vec![
                DMatrix::from_row_slice(2, 2, &[0.2, 1e-17, 0.0, -0.3]),
                DMatrix::from_row_slice(2, 2, &[std::f64::consts::PI / 10.0, 0.1, 0.2, 0.0]),
            ],
            DVector::from_vec(vec![0.7, 2.0 / 7.0]),
        )
        .unwrap();
        assert_eq!(parse_model(&render_model(&rep)).unwrap().rep, rep);
    }

    #[test]
    fn missing_row_reports_line() {
        let text = "wfa v1\nalphabet a b\ndim 2\ninitial 1 0\nfinal 0.5 0.5\nmatrix a\n0.1 0.1\nmatrix b\n0.1 0.1\n0.1 0.1\n";
        assert_eq!(
            parse_model(text).unwrap_err(),
            Error::Parse { line: 8, message: "matrix has 1 rows, expected 2".into() }
        );
        let truncated =
            "wfa v1\nalphabet a\ndim 2\ninitial 1 0\nfinal 0.5 0.5\nmatrix a\n0.1 0.1\n";
        assert!(matches!(parse_model(truncated), Err(Error::Parse { line: 8, .. })));
        let short = "wfa v1\nalphabet a\ndim 2\ninitial 1\n";
        assert!(matches!(parse_model(short), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn divergent_model_warns() {
        let text = "wfa v1\nalphabet a\ndim 1\ninitial 1\nfinal 0\nmatrix a\n1.0\n";
        let parsed = parse_model(text).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn sample_round_trip() {
        let alpha = Alphabet::new(["a", "b"]).unwrap();
        let sample =
            Sample { strings: vec![vec![0], vec![], vec![0, 1, 1]], seed: 42, source: "p1".into() };
        let text = render_sample(&sample, &alpha);
        assert_eq!(text, "# sample model=p1 seed=42 n=3\na\n\na b b\n");
        assert_eq!(parse_sample(&text, &alpha).unwrap(), sample);
        assert!(parse_sample("# sample model=x seed=1 n=5\na\n", &alpha).is_err());
        assert!(matches!(parse_sample("a\nc\n", &alpha), Err(Error::Parse { line: 2, .. })));
    }
}
