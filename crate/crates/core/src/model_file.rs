//! TOML model files.
//!
//! ```toml
//! k = 1
//! l = 2
//! sigma_x = [[1.0]]
//! a = [[1.0], [1.0]]
//! noise_var = [1.0, 1.0]
//! ```
//!
//! A direct model sets `kind = "direct"`, omits `k` and `a`, and gives the
//! `L × L` covariance of `X` in `Y = X + N`.

use std::path::Path;

use serde::Deserialize;

use crate::duality::DirectModel;
use crate::error::{Error, Result};
use crate::gauss_model::SourceModel;
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Remote(SourceModel),
    Direct(DirectModel),
}

impl ModelFile {
    /// The remote model; a direct model maps to `A = I`.
    pub fn remote(&self) -> &SourceModel {
        match self {
            ModelFile::Remote(m) => m,
            ModelFile::Direct(d) => d.remote(),
        }
    }
}

#[derive(Debug, Deserialize, Default, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Kind {
    #[default]
    Remote,
    Direct,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    #[serde(default)]
    kind: Kind,
    k: Option<usize>,
    l: usize,
    sigma_x: Vec<Vec<f64>>,
    a: Option<Vec<Vec<f64>>>,
    noise_var: Vec<f64>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line of the first `field = ...` assignment, if any.
fn field_line(text: &str, field: &str) -> Option<usize> {
    text.lines()
        .position(|line| {
            let t = line.trim_start();
            t.strip_prefix(field)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

fn field_error(text: &str, field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        line: field_line(text, field),
        field: field.to_string(),
        message: message.into(),
    }
}

fn matrix(text: &str, field: &'static str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<Matrix> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(field_error(
            text,
            field,
            format!("expected a {nrows}x{ncols} nested array"),
        ));
    }
    linalg::from_rows(rows, field)
}

/// Model-level errors are tagged with the most relevant field.
fn attach(text: &str, e: Error) -> Error {
    let field = match &e {
        Error::NonSymmetric(f) | Error::NotPositiveDefinite(f) => *f,
        Error::DimensionMismatch { what, .. } => *what,
        Error::NonpositiveNoise { .. } => "noise_var",
        Error::ZeroObservationRow(_) => "a",
        Error::TooManyObservations { .. } => "l",
        _ => return e,
    };
    let field = match field {
        "sigma_x" | "a" | "noise_var" | "l" => field,
        _ => "sigma_x",
    };
    field_error(text, field, e.to_string())
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    let raw: Raw = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        let field = line
            .and_then(|n| text.lines().nth(n - 1))
            .and_then(|l| l.split('=').next())
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty() && !s.starts_with('['))
            .unwrap_or_else(|| "<document>".into());
        Error::Parse {
            line,
            field,
            message: e.message().to_string(),
        }
    })?;
    let l = raw.l;
    if raw.noise_var.len() != l {
        return Err(field_error(
            text,
            "noise_var",
            format!("expected {l} entries, found {}", raw.noise_var.len()),
        ));
    }
    match raw.kind {
        Kind::Remote => {
            let k = raw.k.ok_or_else(|| field_error(text, "k", "missing field `k`"))?;
            let a = raw
                .a
                .as_ref()
                .ok_or_else(|| field_error(text, "a", "missing field `a`"))?;
            let sigma_x = matrix(text, "sigma_x", &raw.sigma_x, k, k)?;
            let a = matrix(text, "a", a, l, k)?;
            SourceModel::new(sigma_x, a, raw.noise_var)
                .map(ModelFile::Remote)
                .map_err(|e| attach(text, e))
        }
        Kind::Direct => {
            if raw.a.is_some() {
                return Err(field_error(text, "a", "direct models take no observation matrix"));
            }
            if let Some(k) = raw.k.filter(|&k| k != l) {
                return Err(field_error(
                    text,
                    "k",
                    format!("direct models need k = l, found k = {k}"),
                ));
            }
            let sigma_x = matrix(text, "sigma_x", &raw.sigma_x, l, l)?;
            DirectModel::new(sigma_x, raw.noise_var)
                .map(ModelFile::Direct)
                .map_err(|e| attach(text, e))
        }
    }
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: None,
        field: "<file>".into(),
        message: format!("{}: {e}", path.display()),
    })?;
    parse_model(&text)
}

fn write_matrix(out: &mut String, name: &str, m: &Matrix) {
    let rows: Vec<String> = linalg::to_rows(m)
        .iter()
        .map(|r| {
            format!(
                "[{}]",
                r.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(", ")
            )
        })
        .collect();
    out.push_str(&format!("{name} = [{}]\n", rows.join(", ")));
}

/// Inverse of [`parse_model`] (values are written with full precision).
pub fn render_model(model: &ModelFile) -> String {
    let mut out = String::new();
    let noise = |m: &SourceModel| {
        m.noise_var()
            .iter()
            .map(|v| format!("{v:?}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    match model {
        ModelFile::Remote(m) => {
            out.push_str(&format!("k = {}\nl = {}\n", m.k(), m.l()));
            write_matrix(&mut out, "sigma_x", m.sigma_x());
            write_matrix(&mut out, "a", m.a());
            out.push_str(&format!("noise_var = [{}]\n", noise(m)));
        }
        ModelFile::Direct(d) => {
            out.push_str(&format!("kind = \"direct\"\nl = {}\n", d.l()));
            write_matrix(&mut out, "sigma_x", d.sigma_x());
            out.push_str(&format!("noise_var = [{}]\n", noise(d.remote())));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const M1: &str = "k = 1\nl = 2\nsigma_x = [[1.0]]\na = [[1.0], [1]]\nnoise_var = [1.0, 1.0]\n";

    #[test]
    fn parses_remote_and_direct() {
        let m = parse_model(M1).unwrap();
        assert_eq!(m.remote().l(), 2);
        assert_eq!(parse_model(&render_model(&m)).unwrap(), m);

        let d = "kind = \"direct\"\nl = 2\nsigma_x = [[1.0, 0.5], [0.5, 1.0]]\nnoise_var = [0.1, 0.1]\n";
        let m = parse_model(d).unwrap();
        assert!(matches!(m, ModelFile::Direct(_)));
        assert_eq!(parse_model(&render_model(&m)).unwrap(), m);
    }

    #[test]
    fn errors_cite_line_and_field() {
        let bad = M1.replace("noise_var = [1.0, 1.0]", "noise_var = [1.0, -1.0]");
        match parse_model(&bad) {
            Err(Error::Parse { line, field, .. }) => {
                assert_eq!(line, Some(5));
                assert_eq!(field, "noise_var");
            }
            other => panic!("{other:?}"),
        }
        let bad = M1.replace("a = [[1.0], [1]]", "a = [[1.0, 2.0], [1]]");
        assert!(matches!(parse_model(&bad), Err(Error::Parse { line: Some(4), ref field, .. }) if field == "a"));
        let bad = M1.replace("sigma_x = [[1.0]]", "sigma_x = [[1.0]");
        assert!(matches!(parse_model(&bad), Err(Error::Parse { line: Some(_), .. })));
        let bad = format!("{M1}extra = 1\n");
        assert!(matches!(parse_model(&bad), Err(Error::Parse { .. })));
        let bad = M1.replace("sigma_x = [[1.0]]", "sigma_x = [[-1.0]]");
        assert!(matches!(parse_model(&bad), Err(Error::Parse { line: Some(3), ref field, .. }) if field == "sigma_x"));
    }
}
