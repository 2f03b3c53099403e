//! System sources: inline flags and equation files.
//!
//! ```text
//! # comment
//! a = 1/(1+u^2)
//! b = 1/(1+u^2)
//! param C = 1.0
//! box u = 0.1:2
//! ```

use std::fmt;
use std::path::Path;

use wave_equiv::expr::{Binding, SampleBox, Var};
use wave_equiv::invariants::WaveSystem;

/// An error caused by the input, reported with exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<wave_equiv::Error> for InputError {
    fn from(e: wave_equiv::Error) -> InputError {
        InputError(e.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SystemSpec {
    pub origin: String,
    pub a: String,
    pub b: String,
    pub params: Vec<(String, f64)>,
    pub boxes: Vec<(Var, f64, f64)>,
}

impl SystemSpec {
    /// Later bindings win; `extra_*` come from the command line.
    pub fn build(
        &self,
        extra_params: &[(String, f64)],
        extra_boxes: &[(Var, f64, f64)],
    ) -> Result<WaveSystem, InputError> {
        let mut params = Binding::new();
        for (name, v) in self.params.iter().chain(extra_params) {
            params.set_param(name, *v);
        }
        let mut sample_box = SampleBox::default();
        for &(var, lo, hi) in self.boxes.iter().chain(extra_boxes) {
            sample_box = sample_box.with_range(var, lo, hi);
        }
        WaveSystem::parse(&self.a, &self.b, params, sample_box).map_err(|e| InputError(format!("{}: {e}", self.origin)))
    }
}

pub fn parse_param(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or_else(|| format!("expected NAME=VALUE, got `{text}`"))?;
    let name = name.trim();
    let valid = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid || Var::from_name(name).is_some() {
        return Err(format!("`{name}` is not a valid parameter name"));
    }
    let value: f64 = value.trim().parse().map_err(|_| format!("`{}` is not a number", value.trim()))?;
    if !value.is_finite() {
        return Err(format!("parameter {name} must be finite"));
    }
    Ok((name.to_string(), value))
}

pub fn parse_box(text: &str) -> Result<(Var, f64, f64), String> {
    let (var, range) = text.split_once('=').ok_or_else(|| format!("expected VAR=LO:HI, got `{text}`"))?;
    let var = Var::from_name(var.trim()).ok_or_else(|| format!("unknown variable `{}`", var.trim()))?;
    let (lo, hi) = range.split_once(':').ok_or_else(|| format!("expected LO:HI, got `{}`", range.trim()))?;
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("`{}` is not a number", s.trim()));
    let (lo, hi) = (num(lo)?, num(hi)?);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(format!("empty range {lo}:{hi} for {var}"));
    }
    Ok((var, lo, hi))
}

pub fn parse_equation_file(text: &str, origin: &str) -> Result<SystemSpec, InputError> {
    let mut spec = SystemSpec { origin: origin.to_string(), ..SystemSpec::default() };
    let (mut a, mut b) = (None, None);
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = |msg: String| InputError(format!("{origin}:{}: {msg}", k + 1));
        if let Some(rest) = line.strip_prefix("param ") {
            spec.params.push(parse_param(rest).map_err(at)?);
        } else if let Some(rest) = line.strip_prefix("box ") {
            spec.boxes.push(parse_box(rest).map_err(at)?);
        } else if let Some((key, value)) = line.split_once('=') {
            let slot = match key.trim() {
                "a" => &mut a,
                "b" => &mut b,
                other => return Err(at(format!("unknown key `{other}`"))),
            };
            if slot.is_some() {
                return Err(at(format!("`{}` is defined twice", key.trim())));
            }
            *slot = Some(value.trim().to_string());
        } else {
            return Err(at(format!("cannot read `{line}`")));
        }
    }
    match (a, b) {
        (Some(a), Some(b)) => {
            spec.a = a;
            spec.b = b;
            Ok(spec)
        }
        _ => Err(InputError(format!("{origin}: both `a` and `b` are required"))),
    }
}

pub fn read_equation_file(path: &Path) -> Result<SystemSpec, InputError> {
    let text = std::fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    parse_equation_file(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_format() {
        let text = "# P3 member\na = 1/(1+C*u^2)  # coefficient\nb = 1/(1+C*u^2)\n\nparam C = 1.0\nbox u = 0.1:2\n";
        let spec = parse_equation_file(text, "f.eq").unwrap();
        assert_eq!(spec.a, "1/(1+C*u^2)");
        assert_eq!(spec.params, vec![("C".to_string(), 1.0)]);
        assert_eq!(spec.boxes, vec![(Var::U, 0.1, 2.0)]);
        assert!(spec.build(&[], &[]).is_ok());
    }

    #[test]
    fn file_errors_carry_line_numbers() {
        let err = parse_equation_file("a = u\nc = 2\n", "f.eq").unwrap_err();
        assert!(err.0.starts_with("f.eq:2:"), "{err}");
        assert!(parse_equation_file("a = u\n", "f.eq").is_err());
        assert!(parse_equation_file("a = u\na = u\nb = u", "f.eq").is_err());
    }

    #[test]
    fn flags() {
        assert_eq!(parse_param("k=2.5").unwrap(), ("k".to_string(), 2.5));
        assert!(parse_param("u=1").is_err());
        assert!(parse_param("k").is_err());
        assert_eq!(parse_box("v_x=-1:-0.5").unwrap(), (Var::Vx, -1.0, -0.5));
        assert!(parse_box("u=2:1").is_err());
        assert!(parse_box("w=0:1").is_err());
    }
}
