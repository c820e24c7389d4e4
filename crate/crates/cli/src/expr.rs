//! Angle expressions: `0.7`, `pi`, `pi*0.2`, `0.2*pi`, `pi/7`, `atan(1/2)`, `atan(0.5)`.
//! Decimals are read at the working precision, never through f64.

use rug::float::Constant;
use rug::Float;

fn number(s: &str, prec: u32) -> Result<Float, String> {
    let s = s.trim();
    if s == "pi" {
        return Ok(Float::with_val(prec, Constant::Pi));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: Float = number(p, prec)?;
        let q: Float = number(q, prec)?;
        if q.is_zero() {
            return Err(format!("division by zero in {s:?}"));
        }
        return Ok(p / q);
    }
    Float::parse(s).map(|v| Float::with_val(prec, v)).map_err(|_| format!("cannot read {s:?} as a number"))
}

pub fn parse_angle(token: &str, prec: u32) -> Result<Float, String> {
    let t = token.trim().replace(' ', "");
    if let Some(arg) = t.strip_prefix("atan(").and_then(|r| r.strip_suffix(')')) {
        return Ok(number(arg, prec)?.atan());
    }
    if let Some((l, r)) = t.split_once('*') {
        return Ok(number(l, prec)? * number(r, prec)?);
    }
    number(&t, prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        let pi = Float::with_val(256, Constant::Pi);
        assert_eq!(parse_angle("pi", 256).unwrap(), pi);
        assert_eq!(parse_angle("pi*0.25", 256).unwrap(), Float::with_val(256, &pi * Float::with_val(256, Float::parse("0.25").unwrap())));
        assert_eq!(parse_angle("pi/4", 256).unwrap(), Float::with_val(256, &pi / 4u32));
        assert_eq!(parse_angle("atan(1/2)", 256).unwrap(), Float::with_val(256, 0.5).atan());
        assert!(parse_angle("atan(1/0)", 256).is_err());
        assert!(parse_angle("seven", 256).is_err());
    }

    #[test]
    fn decimals_are_read_at_full_precision() {
        let a = parse_angle("0.7", 256).unwrap();
        assert_ne!(a, Float::with_val(256, 0.7f64));
        assert_eq!(a, Float::with_val(256, Float::parse("0.7").unwrap()));
    }
}
