//! Text file format for fields and coefficients.
//!
//! Line one is a JSON header, each following line the base64 encoding of a
//! little-endian `f64` payload. Fields carry one payload, coefficient files
//! three (`A` row-major per cell, `B`, `g`).

use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::build::CoefficientField;
use super::grid::{Cylinder, GridField, GridSpec};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
const ORDER: &str = "time-major";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Header {
    version: u32,
    d: usize,
    nt: usize,
    nx: Vec<usize>,
    t_lo: f64,
    t_hi: f64,
    center: Vec<f64>,
    radius: f64,
    order: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    lambda: Option<f64>,
    #[serde(rename = "Lambda", skip_serializing_if = "Option::is_none", default)]
    big_lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    q: Option<f64>,
}

impl Header {
    fn for_spec(spec: &GridSpec) -> Self {
        Self {
            version: FORMAT_VERSION,
            d: spec.d,
            nt: spec.nt,
            nx: spec.nx.clone(),
            t_lo: spec.domain.t_lo,
            t_hi: spec.domain.t_hi,
            center: spec.domain.center.clone(),
            radius: spec.domain.radius,
            order: ORDER.into(),
            kind: None,
            lambda: None,
            big_lambda: None,
            q: None,
        }
    }

    fn spec(&self) -> Result<GridSpec> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {}", self.version)));
        }
        if self.order != ORDER {
            return Err(Error::Format(format!("unsupported order {:?}", self.order)));
        }
        let domain = Cylinder::new(self.t_lo, self.t_hi, self.center.clone(), self.radius)?;
        GridSpec::new(self.d, self.nt, self.nx.clone(), domain)
    }
}

fn encode(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    STANDARD.encode(bytes)
}

fn decode(line: &str, expected: usize) -> Result<Vec<f64>> {
    let bytes = STANDARD
        .decode(line.trim())
        .map_err(|e| Error::Format(format!("bad base64 payload: {e}")))?;
    if bytes.len() != expected * 8 {
        return Err(Error::Format(format!(
            "payload holds {} bytes, expected {}",
            bytes.len(),
            expected * 8
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn split(text: &str, payloads: usize) -> Result<(Header, Vec<&str>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))?;
    let header: Header = serde_json::from_str(head)?;
    let rest: Vec<&str> = lines.collect();
    if rest.len() != payloads {
        return Err(Error::Format(format!(
            "expected {payloads} payload line(s), found {}",
            rest.len()
        )));
    }
    Ok((header, rest))
}

pub fn field_to_string(u: &GridField) -> Result<String> {
    let header = serde_json::to_string(&Header::for_spec(u.spec()))?;
    Ok(format!("{header}\n{}\n", encode(u.values())))
}

pub fn field_from_str(text: &str) -> Result<GridField> {
    let (header, payload) = split(text, 1)?;
    if header.kind.is_some() {
        return Err(Error::Format("this is a coefficient file, not a field".into()));
    }
    let spec = header.spec()?;
    let values = decode(payload[0], spec.len())?;
    GridField::new(spec, values)
}

pub fn coefficients_to_string(c: &CoefficientField) -> Result<String> {
    let mut h = Header::for_spec(c.spec());
    h.kind = Some("coefficients".into());
    h.lambda = Some(c.lambda);
    h.big_lambda = Some(c.big_lambda);
    h.q = Some(c.q);
    Ok(format!(
        "{}\n{}\n{}\n{}\n",
        serde_json::to_string(&h)?,
        encode(c.a()),
        encode(c.b()),
        encode(c.g())
    ))
}

pub fn coefficients_from_str(text: &str) -> Result<CoefficientField> {
    let (h, payload) = split(text, 3)?;
    let spec = h.spec()?;
    let (Some(lambda), Some(big), Some(q)) = (h.lambda, h.big_lambda, h.q) else {
        return Err(Error::Format("coefficient header needs lambda, Lambda and q".into()));
    };
    let n = spec.len();
    let d = spec.d;
    let a = decode(payload[0], n * d * d)?;
    let b = decode(payload[1], n * d)?;
    let g = decode(payload[2], n)?;
    CoefficientField::new(spec, a, b, g, lambda, big, q)
}

pub fn write_field(path: &Path, u: &GridField) -> Result<()> {
    std::fs::write(path, field_to_string(u)?)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<GridField> {
    field_from_str(&std::fs::read_to_string(path)?)
}

pub fn write_coefficients(path: &Path, c: &CoefficientField) -> Result<()> {
    std::fs::write(path, coefficients_to_string(c)?)?;
    Ok(())
}

pub fn read_coefficients(path: &Path) -> Result<CoefficientField> {
    coefficients_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::build::{build_coefficients, build_field, CoefficientSpec, DiffusionKind, DriftKind, FieldKind, SourceKind};

    #[test]
    fn field_round_trip_is_bit_exact() {
        let spec = GridSpec::q2(2, 4, 8).unwrap();
        let u = build_field(&spec, &FieldKind::SmoothBump).unwrap();
        let text = field_to_string(&u).unwrap();
        let back = field_from_str(&text).unwrap();
        assert_eq!(u, back);
        assert_eq!(field_to_string(&back).unwrap(), text);
        assert!(text.starts_with("{\"version\":1,\"d\":2,\"nt\":4,\"nx\":[8,8],"));
    }

    #[test]
    fn coefficient_round_trip() {
        let spec = GridSpec::q2(1, 8, 8).unwrap();
        let cs = CoefficientSpec {
            lambda: 1.0,
            big_lambda: 2.0,
            q: 4.0,
            diffusion: DiffusionKind::Checkerboard { cell_size: 0.5, seed: 4 },
            drift: DriftKind::Constant { b: vec![-0.5] },
            source: SourceKind::Constant { value: 0.25 },
        };
        let c = build_coefficients(&spec, &cs).unwrap();
        let back = coefficients_from_str(&coefficients_to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(field_from_str(""), Err(Error::Format(_))));
        assert!(matches!(field_from_str("not json\nAAAA"), Err(Error::Json(_))));
        let spec = GridSpec::q2(1, 2, 2).unwrap();
        let u = build_field(&spec, &FieldKind::LinearX).unwrap();
        let text = field_to_string(&u).unwrap();
        let truncated = text.replace("\"version\":1", "\"version\":2");
        assert!(matches!(field_from_str(&truncated), Err(Error::Format(_))));
        let short: String = text.lines().next().unwrap().to_string() + "\nAAAA\n";
        assert!(matches!(field_from_str(&short), Err(Error::Format(_))));
    }
}
