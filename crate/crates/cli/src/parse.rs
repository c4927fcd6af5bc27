//! Text forms for matrices and complex points given on the command line.

use num_bigint::BigInt;
use num_complex::Complex64;

use bergdecomp::monomial::ComplexPoint;

/// Parses `[[a, b], [c, d]]`; errors name the offending column.
pub fn parse_matrix(s: &str) -> Result<Vec<Vec<BigInt>>, String> {
    let mut p = Cursor { s: s.as_bytes(), pos: 0 };
    p.expect(b'[')?;
    let mut rows = Vec::new();
    loop {
        p.skip_ws();
        if rows.is_empty() && p.peek() == Some(b']') {
            return Err(p.error("empty matrix"));
        }
        p.expect(b'[')?;
        let mut row = Vec::new();
        loop {
            row.push(p.integer()?);
            p.skip_ws();
            match p.next() {
                Some(b',') => continue,
                Some(b']') => break,
                _ => return Err(p.error_back("expected ',' or ']' after an entry")),
            }
        }
        rows.push(row);
        p.skip_ws();
        match p.next() {
            Some(b',') => continue,
            Some(b']') => break,
            _ => return Err(p.error_back("expected ',' or ']' after a row")),
        }
    }
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(p.error("trailing characters after matrix"));
    }
    Ok(rows)
}

struct Cursor<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<u8> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn expect(&mut self, c: u8) -> Result<(), String> {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected '{}'", c as char)))
        }
    }

    fn integer(&mut self) -> Result<BigInt, String> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'-' | b'+')) {
            self.pos += 1;
        }
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        text.parse().map_err(|_| {
            self.pos = start;
            self.error("expected an integer")
        })
    }

    fn error(&self, msg: &str) -> String {
        format!("matrix parse error at column {}: {msg}", self.pos + 1)
    }

    fn error_back(&mut self, msg: &str) -> String {
        self.pos = self.pos.saturating_sub(1);
        self.error(msg)
    }
}

/// One coordinate: `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("not a complex number: {s:?}");
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix('i') else {
        return t.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re.parse::<f64>().map_err(|_| bad())?, im))
}

/// Comma-separated coordinates.
pub fn parse_point(s: &str) -> Result<ComplexPoint, String> {
    let z = s.split(',').map(parse_complex).collect::<Result<Vec<_>, _>>()?;
    Ok(ComplexPoint::new(z))
}

/// `z;w`, or a single point standing for `z = w`.
pub fn parse_pair(s: &str) -> Result<(ComplexPoint, ComplexPoint), String> {
    match s.split_once(';') {
        Some((a, b)) => Ok((parse_point(a)?, parse_point(b)?)),
        None => {
            let z = parse_point(s)?;
            Ok((z.clone(), z))
        }
    }
}

pub fn fmt_complex(z: Complex64) -> String {
    format!("{:e}{:+e}i", z.re, z.im)
}

pub fn fmt_point(z: &ComplexPoint) -> String {
    z.0.iter().map(|c| fmt_complex(*c)).collect::<Vec<_>>().join(",")
}
