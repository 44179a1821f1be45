//! Plain-text formats for matrices, product families, switching systems and sign matrices.
//!
//! All formats are whitespace separated and skip blank lines and lines
//! starting with `#`. Row labels in family files are 1-based.

use crate::error::{Error, Result};
use crate::family::{ProductFamily, UncertaintySet};
use crate::lss::SwitchingSystem;
use crate::matrix::{Matrix, MetzlerMatrix};
use crate::sign::{Sign, SignMatrix};

/// Significant digits used when printing numbers.
pub const DIGITS: usize = 12;

struct Lines<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        Lines {
            inner: Box::new(inner),
            last: 0,
        }
    }

    fn next_line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok((n, l))
            }
            None => Err(Error::Parse {
                line: self.last + 1,
                message: format!("unexpected end of input, expected {what}"),
            }),
        }
    }

    fn finish(mut self) -> Result<()> {
        match self.inner.next() {
            Some((n, _)) => Err(Error::Parse {
                line: n,
                message: "unexpected trailing content".into(),
            }),
            None => Ok(()),
        }
    }

    fn integers(&mut self, count: usize, what: &str) -> Result<Vec<usize>> {
        let (n, l) = self.next_line(what)?;
        let v = l
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| Error::Parse {
                    line: n,
                    message: format!("expected a non-negative integer, found {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if v.len() != count {
            return Err(Error::Parse {
                line: n,
                message: format!("expected {count} integer(s) for {what}, found {}", v.len()),
            });
        }
        Ok(v)
    }

    fn reals(&mut self, count: usize) -> Result<Vec<f64>> {
        let (n, l) = self.next_line("a matrix row")?;
        let v = l
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: n,
                    message: format!("expected a number, found {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if v.len() != count {
            return Err(Error::Parse {
                line: n,
                message: format!("expected {count} entries, found {}", v.len()),
            });
        }
        if let Some(k) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Parse {
                line: n,
                message: format!("entry {} is not finite", k + 1),
            });
        }
        Ok(v)
    }

    fn matrix_body(&mut self, d: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(d * d);
        for _ in 0..d {
            data.extend(self.reals(d)?);
        }
        Matrix::from_row_major(d, data)
    }
}

fn positive_dim(d: usize, line: usize) -> Result<usize> {
    if d == 0 {
        Err(Error::Parse {
            line,
            message: "dimension must be positive".into(),
        })
    } else {
        Ok(d)
    }
}

/// `d` followed by `d` rows.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = Lines::new(text);
    let d = lines.integers(1, "the dimension")?[0];
    positive_dim(d, lines.last)?;
    let m = lines.matrix_body(d)?;
    lines.finish()?;
    Ok(m)
}

/// `d`, then for each row `i m` followed by `m` candidate rows.
pub fn parse_family(text: &str) -> Result<ProductFamily> {
    let mut lines = Lines::new(text);
    let d = lines.integers(1, "the dimension")?[0];
    positive_dim(d, lines.last)?;
    let mut sets = Vec::with_capacity(d);
    for expected in 1..=d {
        let head = lines.integers(2, "a row header `i m`")?;
        let line = lines.last;
        if head[0] != expected {
            return Err(Error::Parse {
                line,
                message: format!("expected row label {expected}, found {}", head[0]),
            });
        }
        let rows = (0..head[1]).map(|_| lines.reals(d)).collect::<Result<Vec<_>>>()?;
        sets.push(UncertaintySet::new(expected - 1, rows).map_err(|e| Error::Parse {
            line,
            message: e.to_string(),
        })?);
    }
    lines.finish()?;
    ProductFamily::new(sets)
}

/// `N d`, then `N` blocks of `d` rows.
pub fn parse_system(text: &str) -> Result<SwitchingSystem> {
    let mut lines = Lines::new(text);
    let head = lines.integers(2, "the header `N d`")?;
    positive_dim(head[0], lines.last)?;
    let d = positive_dim(head[1], lines.last)?;
    let modes = (0..head[0])
        .map(|_| lines.matrix_body(d).and_then(MetzlerMatrix::new))
        .collect::<Result<Vec<_>>>()?;
    lines.finish()?;
    SwitchingSystem::new(modes)
}

/// `d`, then `d` rows of `-`, `0`, `+` tokens.
pub fn parse_sign_matrix(text: &str) -> Result<SignMatrix> {
    let mut lines = Lines::new(text);
    let d = lines.integers(1, "the dimension")?[0];
    positive_dim(d, lines.last)?;
    let mut entries = Vec::with_capacity(d * d);
    for _ in 0..d {
        let (n, l) = lines.next_line("a sign row")?;
        let row = l
            .split_whitespace()
            .map(|t| {
                Sign::parse(t).ok_or_else(|| Error::Parse {
                    line: n,
                    message: format!("expected -, 0 or +, found {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != d {
            return Err(Error::Parse {
                line: n,
                message: format!("expected {d} entries, found {}", row.len()),
            });
        }
        entries.extend(row);
    }
    lines.finish()?;
    SignMatrix::new(d, entries)
}

/// Number with [`DIGITS`] significant digits, trailing zeros removed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".into()
        } else {
            s
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}

/// Matrix in the format read by [`parse_matrix`].
pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("{}\n", m.dim());
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_family(f: &ProductFamily) -> String {
    let mut out = format!("{}\n", f.dim());
    for (i, set) in f.sets().iter().enumerate() {
        out.push_str(&format!("{} {}\n", i + 1, set.len()));
        for row in set.rows() {
            let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn format_system(s: &SwitchingSystem) -> String {
    let mut out = format!("{} {}\n", s.len(), s.dim());
    for m in s.modes() {
        let body = format_matrix(m);
        out.push_str(body.split_once('\n').map_or("", |(_, rest)| rest));
    }
    out
}

pub fn format_sign_matrix(m: &SignMatrix) -> String {
    format!("{}\n{}", m.dim(), m)
}
