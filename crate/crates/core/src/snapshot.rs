//! Plain-text state snapshots.
//!
//! ```text
//! LTNE-SNAP v1 <Nx> <Nz> <a> <t>
//! FIELD psi
//! 1 1 <value>
//! 1 2 <value>
//! ...
//! FIELD theta
//! ...
//! FIELD phi
//! ...
//! ```
//!
//! Coefficients are listed row-major (`m` outer, `n` inner) and written in
//! shortest round-trip form, so a write/read cycle is lossless.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::params::Domain;
use crate::spectral::SpectralField;

const MAGIC: &str = "LTNE-SNAP";
const VERSION: &str = "v1";
const FIELDS: [&str; 3] = ["psi", "theta", "phi"];

pub fn to_string(s: &State) -> String {
    let dom = s.domain();
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION} {} {} {:e} {:e}", dom.nx, dom.nz, dom.a, s.t).unwrap();
    for (name, f) in s.fields() {
        writeln!(out, "FIELD {name}").unwrap();
        for ((i, j), v) in f.coeffs().indexed_iter() {
            writeln!(out, "{} {} {:e}", i + 1, j + 1, v).unwrap();
        }
    }
    out
}

pub fn write(path: &Path, s: &State) -> Result<()> {
    fs::write(path, to_string(s)).map_err(|e| Error::io(path, e))
}

/// Parses a snapshot. The header fixes `Nx`, `Nz` and `a`; collocation sizes
/// use the default padding.
pub fn parse(text: &str, path: &Path) -> Result<State> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (ln, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty snapshot"))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 || parts[0] != MAGIC || parts[1] != VERSION {
        return Err(Error::parse(
            path,
            ln,
            format!("expected `{MAGIC} {VERSION} Nx Nz a t`, found `{header}`"),
        ));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::parse(path, ln, format!("bad {what} `{s}`")))
    };
    let int = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::parse(path, ln, format!("bad {what} `{s}`")))
    };
    let nx = int(parts[2], "Nx")?;
    let nz = int(parts[3], "Nz")?;
    let a = num(parts[4], "a")?;
    let t = num(parts[5], "t")?;
    let dom = Domain::new(a, nx, nz).map_err(|e| Error::parse(path, ln, e.to_string()))?;

    let mut fields = Vec::with_capacity(3);
    for name in FIELDS {
        let (ln, marker) = lines
            .next()
            .ok_or_else(|| Error::parse(path, ln, format!("missing `FIELD {name}`")))?;
        if marker != format!("FIELD {name}") {
            return Err(Error::parse(
                path,
                ln,
                format!("expected `FIELD {name}`, found `{marker}`"),
            ));
        }
        let mut f = SpectralField::zeros(&dom);
        for m in 1..=nx {
            for n in 1..=nz {
                let (ln, line) = lines
                    .next()
                    .ok_or_else(|| Error::parse(path, ln, format!("truncated field `{name}`")))?;
                let tok: Vec<&str> = line.split_whitespace().collect();
                let ok = tok.len() == 3
                    && tok[0].parse::<usize>() == Ok(m)
                    && tok[1].parse::<usize>() == Ok(n);
                if !ok {
                    return Err(Error::parse(
                        path,
                        ln,
                        format!("expected `{m} {n} <value>`, found `{line}`"),
                    ));
                }
                let v: f64 = tok[2]
                    .parse()
                    .map_err(|_| Error::parse(path, ln, format!("bad value `{}`", tok[2])))?;
                if !v.is_finite() {
                    return Err(Error::parse(path, ln, "non-finite coefficient"));
                }
                f.set(m, n, v)?;
            }
        }
        fields.push(f);
    }
    if let Some((ln, extra)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(Error::parse(path, ln, format!("unexpected trailing line `{extra}`")));
    }
    let phi = fields.pop().unwrap();
    let theta = fields.pop().unwrap();
    let psi = fields.pop().unwrap();
    State::new(psi, theta, phi, t)
}

pub fn read(path: &Path) -> Result<State> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let dom = Domain::new(1.7, 3, 2).unwrap();
        let s = State::new(
            SpectralField::from_fn(&dom, |m, n| 1.0 / (m as f64 + 0.1 * n as f64)),
            SpectralField::from_fn(&dom, |m, n| (m * n) as f64 * std::f64::consts::PI),
            SpectralField::from_fn(&dom, |m, n| -1e-300 * (m + n) as f64),
            0.123456789,
        )
        .unwrap();
        let back = parse(&to_string(&s), Path::new("x")).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let dom = Domain::new(1.0, 1, 2).unwrap();
        let text = to_string(&State::zeros(&dom)).replace("1 2 0e0", "1 3 0e0");
        match parse(&text, Path::new("s.snap")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let truncated: String = to_string(&State::zeros(&dom)).lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(parse(&truncated, Path::new("s.snap")).is_err());
    }
}
