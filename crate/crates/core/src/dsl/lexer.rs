use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::DslError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Num(BigRational),
    Op(char),
    Eof,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Parse a decimal literal such as `12`, `0.25` or `1.5e-3` exactly.
pub(crate) fn exact_decimal(text: &str) -> Option<BigRational> {
    let (mant, exp) = match text.find(['e', 'E']) {
        Some(p) => (&text[..p], text[p + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(p) => (&mant[..p], &mant[p + 1..]),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: String = format!("{int_part}{frac_part}");
    let n: BigInt = digits.parse().ok()?;
    let shift = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut scale = BigRational::one();
    for _ in 0..shift.unsigned_abs() {
        scale *= &ten;
    }
    let v = BigRational::from_integer(n);
    Some(if shift >= 0 { v * scale } else { v / scale })
}

pub(crate) fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, DslError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = exact_decimal(&text).ok_or_else(|| DslError::Syntax {
                line: line_no,
                col,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push(Token { tok: Tok::Num(v), line: line_no, col });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), line: line_no, col });
            continue;
        }
        if "+-*/^(),=[]:".contains(c) {
            out.push(Token { tok: Tok::Op(c), line: line_no, col });
            i += 1;
            continue;
        }
        return Err(DslError::Syntax { line: line_no, col, msg: format!("unexpected character `{c}`") });
    }
    out.push(Token { tok: Tok::Eof, line: line_no, col: chars.len() + 1 });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(exact_decimal("0.1").unwrap(), BigRational::new(1.into(), 10.into()));
        assert_eq!(exact_decimal("1.5e-3").unwrap(), BigRational::new(3.into(), 2000.into()));
        assert_eq!(exact_decimal("2e2").unwrap(), BigRational::from_integer(200.into()));
        assert!(exact_decimal(".").is_none());
        assert!(exact_decimal("0").unwrap().is_zero());
    }
}
