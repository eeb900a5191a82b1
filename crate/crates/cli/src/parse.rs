//! Text syntax for fields, cones, point lists and polynomial expressions.

use confspheres::fields::Monomial;
use confspheres::{ConeSpec, Polynomial, ScalarField};

/// A field named on the command line or in the config, before the
/// dimension is known.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Bubble(Option<Vec<f64>>),
    Constant(f64),
    Fundamental(Option<Vec<f64>>),
    Harmonic(String),
    Poly(String),
}

impl FieldSpec {
    pub fn build(&self, n: usize) -> Result<ScalarField, String> {
        let point = |p: &Option<Vec<f64>>| -> Result<Vec<f64>, String> {
            match p {
                None => Ok(vec![0.0; n]),
                Some(v) if v.len() == n => Ok(v.clone()),
                Some(v) => Err(format!("expected {n} coordinates, got {}", v.len())),
            }
        };
        let field = match self {
            FieldSpec::Bubble(c) => ScalarField::bubble(point(c)?),
            FieldSpec::Constant(c) => ScalarField::constant(n, *c),
            FieldSpec::Fundamental(p) => ScalarField::fundamental(point(p)?),
            FieldSpec::Harmonic(e) => ScalarField::harmonic_polynomial(parse_polynomial(e, n)?),
            FieldSpec::Poly(e) => ScalarField::polynomial(parse_polynomial(e, n)?),
        };
        field.map_err(|e| e.to_string())
    }
}

/// `bubble`, `bubble:0.5,0,0`, `bubble(0.5,0,0)`, `constant:2.5`,
/// `fundamental[:pole]`, `harmonic:EXPR`, `poly:EXPR`.
pub fn parse_field(spec: &str) -> Result<FieldSpec, String> {
    let spec = spec.trim();
    let (name, params) = if let Some(open) = spec.find('(') {
        let inner =
            spec[open + 1..].strip_suffix(')').ok_or_else(|| format!("unbalanced parentheses in field '{spec}'"))?;
        (&spec[..open], Some(inner))
    } else if let Some((name, rest)) = spec.split_once(':') {
        (name, Some(rest))
    } else {
        (spec, None)
    };
    let params = params.map(str::trim).filter(|p| !p.is_empty());
    let need = |what: &str| params.ok_or_else(|| format!("field '{name}' needs {what}"));
    match name.trim().to_ascii_lowercase().as_str() {
        "bubble" => Ok(FieldSpec::Bubble(params.map(parse_vector).transpose()?)),
        "fundamental" => Ok(FieldSpec::Fundamental(params.map(parse_vector).transpose()?)),
        "constant" => Ok(FieldSpec::Constant(parse_float(need("a value")?)?)),
        "harmonic" => Ok(FieldSpec::Harmonic(need("a polynomial")?.to_string())),
        "poly" | "polynomial" => Ok(FieldSpec::Poly(need("a polynomial")?.to_string())),
        other => Err(format!("unknown field '{other}' (expected bubble, constant, fundamental, harmonic or poly)")),
    }
}

/// `gammaK:INT`, `gamma:INT`, `gammaINT` or `sigma:1,3`.
pub fn parse_cone(spec: &str, n: usize) -> Result<ConeSpec, String> {
    let s = spec.trim().to_ascii_lowercase();
    let (name, arg) = s.split_once(':').map_or((s.as_str(), ""), |(a, b)| (a, b.trim()));
    let cone = if name == "sigma" {
        let idx = arg
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| format!("bad sigma index '{t}'")))
            .collect::<Result<Vec<_>, _>>()?;
        ConeSpec::custom(n, idx)
    } else if let Some(rest) = name.strip_prefix("gamma") {
        let k = match (rest, arg) {
            ("k", a) | ("", a) if !a.is_empty() => a,
            (r, "") if !r.is_empty() => r,
            _ => return Err(format!("cannot read cone '{spec}'")),
        };
        let k = k.parse::<usize>().map_err(|_| format!("bad cone index '{k}'"))?;
        ConeSpec::gamma_k(n, k)
    } else {
        return Err(format!("unknown cone '{spec}' (expected gammaK:INT or sigma:I,J,..)"));
    };
    cone.map_err(|e| e.to_string())
}

pub fn parse_float(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{}' is not a number", s.trim()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{}' is not finite", s.trim()))
    }
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(parse_float).collect()
}

/// Semicolon-separated points: `0,0,0;1,0,0`.
pub fn parse_points(s: &str) -> Result<Vec<Vec<f64>>, String> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_vector).collect()
}

pub fn parse_floats(s: &str) -> Result<Vec<f64>, String> {
    parse_vector(s)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
}

fn tokenize(expr: &str) -> Result<Vec<Token>, String> {
    let chars: Vec<char> = expr.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1
            }
            '-' => {
                out.push(Token::Minus);
                i += 1
            }
            '*' => {
                out.push(Token::Star);
                i += 1
            }
            '^' => {
                out.push(Token::Caret);
                i += 1
            }
            'x' | 'X' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let idx: usize = chars[start..j]
                    .iter()
                    .collect::<String>()
                    .parse()
                    .map_err(|_| format!("variable at column {} needs an index (x1, x2, ...)", i + 1))?;
                if idx == 0 {
                    return Err("variables are numbered from x1".into());
                }
                out.push(Token::Var(idx - 1));
                i = j;
            }
            d if d.is_ascii_digit() || d == '.' => {
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
                        while j < chars.len() && chars[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Token::Num(text.parse().map_err(|_| format!("bad number '{text}'"))?));
            }
            other => return Err(format!("unexpected '{other}' at column {}", i + 1)),
        }
    }
    Ok(out)
}

/// Sums of signed products of numbers and powers of x1..xn, e.g.
/// `10 + x1*x2`, `1 + 2.5e-1*x1^2 - x2`.
pub fn parse_polynomial(expr: &str, n: usize) -> Result<Polynomial, String> {
    let tokens = tokenize(expr)?;
    if tokens.is_empty() {
        return Err("empty polynomial".into());
    }
    let mut terms = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let mut sign = 1.0;
        while let Some(t @ (Token::Plus | Token::Minus)) = tokens.get(pos) {
            if *t == Token::Minus {
                sign = -sign;
            }
            pos += 1;
        }
        let mut coefficient = sign;
        let mut exponents = vec![0u32; n];
        loop {
            match tokens.get(pos) {
                Some(Token::Num(v)) => {
                    coefficient *= v;
                    pos += 1;
                }
                Some(Token::Var(i)) => {
                    if *i >= n {
                        return Err(format!("x{} used but n = {n}", i + 1));
                    }
                    pos += 1;
                    let mut e = 1u32;
                    if tokens.get(pos) == Some(&Token::Caret) {
                        match tokens.get(pos + 1) {
                            Some(Token::Num(p)) if p.fract() == 0.0 && *p >= 0.0 => e = *p as u32,
                            _ => return Err("exponents must be non-negative integers".into()),
                        }
                        pos += 2;
                    }
                    exponents[*i] += e;
                }
                _ => return Err(format!("incomplete term in '{expr}'")),
            }
            match tokens.get(pos) {
                Some(Token::Star) => pos += 1,
                Some(Token::Plus | Token::Minus) | None => break,
                Some(t) => return Err(format!("unexpected {t:?} in '{expr}'")),
            }
        }
        terms.push(Monomial { coefficient, exponents });
    }
    Polynomial::new(n, terms).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_forms() {
        assert_eq!(parse_field("bubble").unwrap(), FieldSpec::Bubble(None));
        assert_eq!(parse_field("bubble:1,0,0").unwrap(), FieldSpec::Bubble(Some(vec![1.0, 0.0, 0.0])));
        assert_eq!(parse_field("bubble(1,0,0)").unwrap(), FieldSpec::Bubble(Some(vec![1.0, 0.0, 0.0])));
        assert_eq!(parse_field("constant:2.5").unwrap(), FieldSpec::Constant(2.5));
        assert_eq!(parse_field("constant(1)").unwrap(), FieldSpec::Constant(1.0));
        assert!(parse_field("constant").is_err());
        assert!(parse_field("banana").is_err());
        assert!(parse_field("bubble(1,0").is_err());
    }

    #[test]
    fn polynomial_round_trip() {
        let p = parse_polynomial("10 + x1*x2", 3).unwrap();
        assert_eq!(p.value(&[2.0, 3.0, 7.0]), 16.0);
        assert!(p.is_harmonic());
        let q = parse_polynomial("1 - 2.5e-1*x1^2 + 3E+1*x2*x3^2 - -x3", 3).unwrap();
        let y = [0.5, -1.0, 2.0];
        let want = 1.0 - 0.25 * 0.25 + 30.0 * -1.0 * 4.0 + 2.0;
        assert!((q.value(&y) - want).abs() < 1e-12);
        assert!(parse_polynomial("x4", 3).is_err());
        assert!(parse_polynomial("x1^", 3).is_err());
        assert!(parse_polynomial("1 +", 3).is_err());
        assert!(parse_polynomial("x0", 3).is_err());
    }

    #[test]
    fn cones() {
        assert_eq!(parse_cone("gammaK:2", 3).unwrap().label(), ConeSpec::gamma_k(3, 2).unwrap().label());
        assert_eq!(parse_cone("gamma:1", 3).unwrap().label(), ConeSpec::gamma_k(3, 1).unwrap().label());
        assert_eq!(parse_cone("gamma3", 3).unwrap().label(), ConeSpec::gamma_k(3, 3).unwrap().label());
        assert!(parse_cone("gammaK:4", 3).is_err());
        assert!(parse_cone("sigma:1,3", 3).is_ok());
        assert!(parse_cone("delta:1", 3).is_err());
    }

    #[test]
    fn points() {
        assert_eq!(parse_points("0,0,0; 1,2,3").unwrap(), vec![vec![0.0; 3], vec![1.0, 2.0, 3.0]]);
        assert!(parse_points("0,a").is_err());
        assert!(parse_float("nan").is_err());
    }
}
