//! Complex literals in `a+bi` form.

use crate::{c, Error, Result, C64};

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`, with exponents allowed in
/// either part. No spaces.
pub fn parse_complex(s: &str) -> Result<C64> {
    let bad = || Error::InvalidArgument(format!("invalid complex literal '{s}'"));
    if s.is_empty() || s.contains(char::is_whitespace) {
        return Err(bad());
    }
    let bytes = s.as_bytes();
    if let Some(body) = s.strip_suffix('i') {
        // split at the last sign that is not part of an exponent
        let mut split = 0;
        for i in (1..body.len()).rev() {
            let ch = bytes[i];
            if (ch == b'+' || ch == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
                split = i;
                break;
            }
        }
        let (re, im) = body.split_at(split);
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            t => t.parse::<f64>().map_err(|_| bad())?,
        };
        let re = if re.is_empty() { 0.0 } else { re.parse::<f64>().map_err(|_| bad())? };
        if !re.is_finite() || !im.is_finite() {
            return Err(bad());
        }
        Ok(c(re, im))
    } else {
        let re = s.parse::<f64>().map_err(|_| bad())?;
        if !re.is_finite() {
            return Err(bad());
        }
        Ok(c(re, 0.0))
    }
}

/// Inverse of [`parse_complex`], shortest round-trip digits.
pub fn format_complex(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}{}i", z.re, z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}
