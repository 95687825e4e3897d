//! Plain-text tensor and matrix files.
//!
//! Tensor: first line `k n_1 ... n_k`, then the entries in row-major order
//! (last index fastest) separated by whitespace. Matrix: first line
//! `MATRIX n m`, then the entries row by row. Floats are written in the
//! shortest form that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tensor::DenseTensor;

pub fn tensor_to_string(t: &DenseTensor) -> String {
    let mut out = String::new();
    let header: Vec<String> = std::iter::once(t.order())
        .chain(t.dims().iter().copied())
        .map(|v| v.to_string())
        .collect();
    out.push_str(&header.join(" "));
    out.push('\n');
    let last = *t.dims().last().expect("tensor has a mode");
    for row in t.data().chunks(last) {
        write_row(&mut out, row);
    }
    out
}

pub fn matrix_to_string(m: &Matrix) -> String {
    let mut out = format!("MATRIX {} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        write_row(&mut out, m.row(i));
    }
    out
}

fn write_row(out: &mut String, row: &[f64]) {
    for (j, v) in row.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        write!(out, "{v:?}").expect("writing to a String");
    }
    out.push('\n');
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor> {
    let (header, mut tokens) = split_header(text)?;
    let mut fields = header.split_whitespace();
    let k: usize = parse_usize(fields.next(), 1, "order")?;
    let dims: Vec<usize> = (0..k).map(|_| parse_usize(fields.next(), 1, "dimension")).collect::<Result<_>>()?;
    if fields.next().is_some() {
        return Err(parse_error(1, format!("header declares order {k} but lists more dimensions")));
    }
    let len: usize = dims.iter().product();
    let data = read_values(&mut tokens, len)?;
    DenseTensor::new(dims, data)
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let (header, mut tokens) = split_header(text)?;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("MATRIX") {
        return Err(parse_error(1, "expected `MATRIX n m` header".into()));
    }
    let rows = parse_usize(fields.next(), 1, "row count")?;
    let cols = parse_usize(fields.next(), 1, "column count")?;
    if fields.next().is_some() {
        return Err(parse_error(1, "trailing fields after `MATRIX n m`".into()));
    }
    Matrix::from_vec(rows, cols, read_values(&mut tokens, rows * cols)?)
}

type Tokens<'a> = Box<dyn Iterator<Item = (usize, &'a str)> + 'a>;

fn split_header(text: &str) -> Result<(&str, Tokens<'_>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_error(1, "empty input".into()))?;
    let tokens = lines.flat_map(|(n, l)| l.split_whitespace().map(move |t| (n + 1, t)));
    Ok((header, Box::new(tokens)))
}

fn parse_usize(field: Option<&str>, line: usize, what: &str) -> Result<usize> {
    let field = field.ok_or_else(|| parse_error(line, format!("missing {what}")))?;
    field
        .parse()
        .map_err(|_| parse_error(line, format!("invalid {what} '{field}'")))
}

fn read_values(tokens: &mut Tokens<'_>, len: usize) -> Result<Vec<f64>> {
    let mut data = Vec::with_capacity(len);
    for (line, tok) in tokens.by_ref() {
        if data.len() == len {
            return Err(parse_error(line, format!("more than {len} entries")));
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| parse_error(line, format!("invalid number '{tok}'")))?;
        if !v.is_finite() {
            return Err(parse_error(line, format!("non-finite entry '{tok}'")));
        }
        data.push(v);
    }
    if data.len() != len {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {len} entries, found {}", data.len()),
        });
    }
    Ok(data)
}

fn parse_error(line: usize, message: String) -> Error {
    Error::Parse { line, message }
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    parse_tensor(&fs::read_to_string(path)?)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    Ok(fs::write(path, tensor_to_string(t))?)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    Ok(fs::write(path, matrix_to_string(m))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{gaussian_vec, stream};

    #[test]
    fn tensor_round_trip_is_exact() {
        let dims = vec![3, 2, 4];
        let mut data = gaussian_vec(&mut stream(1, 0), 24);
        data[0] = 1e-300;
        data[1] = -0.1;
        data[2] = 0.0;
        let t = DenseTensor::new(dims, data).unwrap();
        let text = tensor_to_string(&t);
        assert!(text.starts_with("3 3 2 4\n"));
        assert_eq!(parse_tensor(&text).unwrap(), t);
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = Matrix::from_vec(2, 3, gaussian_vec(&mut stream(2, 0), 6)).unwrap();
        let text = matrix_to_string(&m);
        assert!(text.starts_with("MATRIX 2 3\n"));
        assert_eq!(parse_matrix(&text).unwrap(), m);
    }

    #[test]
    fn free_layout_accepted() {
        let t = parse_tensor("3 1 1 2\n\n  1.5\n-2e0  \n").unwrap();
        assert_eq!(t.data(), &[1.5, -2.0]);
    }

    #[test]
    fn malformed_input_rejected() {
        for bad in [
            "",
            "3 2 2\n1 2 3 4",
            "3 1 1 2\n1",
            "3 1 1 2\n1 2 3",
            "3 1 1 2\n1 x",
            "3 1 1 2\n1 NaN",
            "2 1 0\n",
            "3 1 1 2 5\n1 2",
        ] {
            assert!(parse_tensor(bad).is_err(), "{bad:?}");
        }
        assert!(parse_matrix("MAT 1 1\n1").is_err());
        assert!(parse_matrix("MATRIX 1 2\n1").is_err());
        assert!(matches!(parse_tensor("3 1 1 2\n1 x"), Err(Error::Parse { line: 2, .. })));
    }
}
