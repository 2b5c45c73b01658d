//! Text serialization of grid functions (`.gfn`) and node masks.
//!
//! ```text
//! gfn 1
//! dim 2
//! shape 3 3
//! origin -0x1p+0 -0x1p+0
//! spacing 0x1p+0
//! 0x0p+0
//! ...
//! ```
//!
//! Every real is written as a hexadecimal float so files round-trip
//! bit-exactly. Masks share the header block (magic `gfnmask 1`) followed by
//! `<bit> <run length>` lines.

use std::io::{BufRead, Write};

use super::{GridFunction, Lattice};
use crate::error::{Error, Result};

/// Formats `x` as a C99-style hexadecimal float, e.g. `-0x1.8p+1`.
pub fn format_hex(x: f64) -> String {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let man = bits & ((1u64 << 52) - 1);
    if exp == 0x7ff {
        // Grid functions never hold these, but keep the formatter total.
        return if man == 0 { format!("{sign}inf") } else { "nan".to_string() };
    }
    let (lead, e) = match (exp, man) {
        (0, 0) => return format!("{sign}0x0p+0"),
        (0, _) => (0, -1022),
        _ => (1, exp - 1023),
    };
    let digits = format!("{man:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e:+}")
    }
}

/// Parses a hexadecimal float. Only exactly representable values are
/// accepted; anything that would need rounding is rejected.
pub fn parse_hex(s: &str) -> Option<f64> {
    let s = s.trim();
    let (neg, rest) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let rest = rest.strip_prefix("0x").or_else(|| rest.strip_prefix("0X"))?;
    let (mant, exp) = match rest.find(['p', 'P']) {
        Some(i) => (&rest[..i], rest[i + 1..].parse::<i64>().ok()?),
        None => (rest, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let mut m: u128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        m = m.checked_mul(16)? + c.to_digit(16)? as u128;
        if m >> 120 != 0 {
            return None;
        }
    }
    let mut e2 = exp.checked_sub(4 * frac_part.len() as i64)?;
    let signed = |v: f64| if neg { -v } else { v };
    if m == 0 {
        return Some(signed(0.0));
    }
    // Drop trailing zero bits so the significand fits.
    let tz = m.trailing_zeros();
    m >>= tz;
    e2 += tz as i64;
    let len = 128 - m.leading_zeros() as i64;
    if len > 53 {
        return None;
    }
    let top = e2 + len - 1;
    if top > 1023 {
        return None;
    }
    if top >= -1022 {
        let biased = (top + 1023) as u64;
        let frac = ((m << (53 - len)) as u64) & ((1u64 << 52) - 1);
        Some(signed(f64::from_bits((biased << 52) | frac)))
    } else {
        // Subnormal: value = k * 2^-1074.
        let shift = e2 + 1074;
        if shift < 0 {
            return None;
        }
        let k = m.checked_shl(shift as u32)?;
        if k >> 52 != 0 {
            return None;
        }
        Some(signed(f64::from_bits(k as u64)))
    }
}

fn parse_real(tok: &str) -> Option<f64> {
    parse_hex(tok).or_else(|| tok.parse::<f64>().ok()).filter(|v| v.is_finite())
}

fn write_header(w: &mut impl Write, magic: &str, lat: &Lattice) -> Result<()> {
    writeln!(w, "{magic} 1")?;
    writeln!(w, "dim {}", lat.dim())?;
    let join = |it: Vec<String>| it.join(" ");
    writeln!(w, "shape {}", join(lat.shape().iter().map(|n| n.to_string()).collect()))?;
    writeln!(w, "origin {}", join(lat.origin().iter().map(|&o| format_hex(o)).collect()))?;
    writeln!(w, "spacing {}", format_hex(lat.spacing()))?;
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next_line(&mut self) -> Result<Option<String>> {
        match self.inner.next() {
            None => Ok(None),
            Some(l) => {
                self.line += 1;
                Ok(Some(l?))
            }
        }
    }

    fn expect(&mut self, what: &str) -> Result<String> {
        self.next_line()?.ok_or_else(|| Error::Format { line: self.line + 1, msg: format!("missing {what}") })
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Format { line: self.line, msg: msg.into() })
    }

    fn keyed(&mut self, key: &str) -> Result<Vec<String>> {
        let l = self.expect(key)?;
        let mut toks = l.split_whitespace();
        if toks.next() != Some(key) {
            return self.err(format!("expected `{key} ...`, found `{l}`"));
        }
        Ok(toks.map(str::to_string).collect())
    }
}

fn read_header<R: BufRead>(lines: &mut Lines<R>, magic: &str) -> Result<Lattice> {
    let first = lines.expect("magic line")?;
    if first.trim() != format!("{magic} 1") {
        return lines.err(format!("expected `{magic} 1`, found `{}`", first.trim()));
    }
    let dim_toks = lines.keyed("dim")?;
    let dim: usize = match dim_toks.as_slice() {
        [d] => match d.parse() {
            Ok(d) if d > 0 => d,
            _ => return lines.err(format!("bad dimension `{d}`")),
        },
        _ => return lines.err("dim takes exactly one value"),
    };
    let shape_toks = lines.keyed("shape")?;
    if shape_toks.len() != dim {
        return lines.err(format!("shape needs {dim} extents, found {}", shape_toks.len()));
    }
    let mut shape = Vec::with_capacity(dim);
    for t in &shape_toks {
        match t.parse::<usize>() {
            Ok(n) => shape.push(n),
            Err(_) => return lines.err(format!("bad extent `{t}`")),
        }
    }
    let origin_toks = lines.keyed("origin")?;
    if origin_toks.len() != dim {
        return lines.err(format!("origin needs {dim} reals, found {}", origin_toks.len()));
    }
    let mut origin = Vec::with_capacity(dim);
    for t in &origin_toks {
        match parse_real(t) {
            Some(v) => origin.push(v),
            None => return lines.err(format!("bad real `{t}`")),
        }
    }
    let sp = lines.keyed("spacing")?;
    let spacing = match sp.as_slice() {
        [t] => match parse_real(t) {
            Some(v) => v,
            None => return lines.err(format!("bad real `{t}`")),
        },
        _ => return lines.err("spacing takes exactly one value"),
    };
    Lattice::new(shape, origin, spacing).map_err(|e| Error::Format { line: lines.line, msg: e.to_string() })
}

pub fn write_gfn(f: &GridFunction, mut w: impl Write) -> Result<()> {
    write_header(&mut w, "gfn", f.lattice())?;
    for &v in f.values() {
        writeln!(w, "{}", format_hex(v))?;
    }
    Ok(())
}

pub fn read_gfn(r: impl BufRead) -> Result<GridFunction> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    let lat = read_header(&mut lines, "gfn")?;
    let mut values = Vec::with_capacity(lat.len());
    while values.len() < lat.len() {
        let l = lines.expect("value")?;
        match parse_real(l.trim()) {
            Some(v) => values.push(v),
            None => return lines.err(format!("bad value `{}`", l.trim())),
        }
    }
    while let Some(l) = lines.next_line()? {
        if !l.trim().is_empty() {
            return lines.err("trailing data after the last value");
        }
    }
    GridFunction::new(lat, values)
}

pub fn save_gfn(f: &GridFunction, path: impl AsRef<std::path::Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_gfn(f, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_gfn(path: impl AsRef<std::path::Path>) -> Result<GridFunction> {
    let file = std::fs::File::open(path)?;
    read_gfn(std::io::BufReader::new(file))
}

pub fn write_mask(lat: &Lattice, bits: &[bool], mut w: impl Write) -> Result<()> {
    write_header(&mut w, "gfnmask", lat)?;
    let mut i = 0;
    while i < bits.len() {
        let b = bits[i];
        let start = i;
        while i < bits.len() && bits[i] == b {
            i += 1;
        }
        writeln!(w, "{} {}", b as u8, i - start)?;
    }
    Ok(())
}

pub fn read_mask(r: impl BufRead) -> Result<(Lattice, Vec<bool>)> {
    let mut lines = Lines { inner: r.lines(), line: 0 };
    let lat = read_header(&mut lines, "gfnmask")?;
    let mut bits = Vec::with_capacity(lat.len());
    while let Some(l) = lines.next_line()? {
        if l.trim().is_empty() {
            continue;
        }
        let toks: Vec<&str> = l.split_whitespace().collect();
        let (b, n) = match toks.as_slice() {
            [b, n] => match (b.parse::<u8>(), n.parse::<usize>()) {
                (Ok(b @ 0..=1), Ok(n)) => (b == 1, n),
                _ => return lines.err(format!("bad run `{}`", l.trim())),
            },
            _ => return lines.err(format!("bad run `{}`", l.trim())),
        };
        if bits.len() + n > lat.len() {
            return lines.err("runs exceed the node count");
        }
        bits.extend(std::iter::repeat_n(b, n));
    }
    if bits.len() != lat.len() {
        return Err(Error::Format {
            line: lines.line,
            msg: format!("runs cover {} of {} nodes", bits.len(), lat.len()),
        });
    }
    Ok((lat, bits))
}
