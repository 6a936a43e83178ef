//! Run configuration: the JSON document accepted through `--config` and the
//! flag parsers that assemble the same structure. Unknown keys are rejected;
//! the shipped `docs/config.schema.json` documents the grammar.

use mamv_core::functions::FunctionSpec;
use mamv_core::geometry::ConvexDomain;
use mamv_core::operators::{MvConfig, PhiSpec, QuadConfig, StencilSpec, Variant};
use mamv_core::search::SearchBudget;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Example,
    Rate,
    Solve,
    Sweep,
}

/// Field of the Dirichlet problem: a named catalog function or a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSpec {
    Name(String),
    Constant(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSpec {
    pub h: f64,
    pub eps: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub f: FieldSpec,
    pub g: FieldSpec,
    /// Exact solution for the error report; defaults to `g` when `g` names a
    /// catalog entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
}

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    40_000
}

/// One batch run. Flags mirror these keys one-to-one; a `--config` file
/// supersedes flags so experiment manifests are reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<Variant>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_list: Option<Vec<PhiSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<ConvexDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchBudget>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature: Option<QuadConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stencil: Option<StencilSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn mv_config(&self) -> MvConfig {
        let mut cfg = MvConfig::default();
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(p) = &self.phi {
            cfg.phi = p.clone();
        }
        if let Some(q) = self.quadrature {
            cfg.quad = q;
        }
        if let Some(s) = self.search {
            cfg.search = s;
        }
        if let Some(s) = self.stencil {
            cfg.stencil = s;
        }
        cfg
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// Semantic checks beyond the serde structure.
    pub fn validate(&self) -> Result<(), String> {
        match self.command {
            CommandKind::Example => {
                if self.name.is_none() {
                    return Err("example runs need --name".into());
                }
            }
            CommandKind::Rate => {
                if self.function.is_none() {
                    return Err("rate runs need --function".into());
                }
                if self.x.is_none() {
                    return Err("rate runs need --x".into());
                }
            }
            CommandKind::Sweep => {
                if self.function.is_none() {
                    return Err("sweep runs need --function".into());
                }
                if self.x.is_none() {
                    return Err("sweep runs need --x".into());
                }
                match &self.phi_list {
                    None => return Err("sweep runs need --phi-list".into()),
                    Some(list) if list.is_empty() => {
                        return Err("sweep runs need a non-empty --phi-list".into())
                    }
                    Some(_) => {}
                }
            }
            CommandKind::Solve => {
                if self.solve.is_none() {
                    return Err("solve runs need grid parameters".into());
                }
                if self.domain.is_none() {
                    return Err("solve runs need --domain".into());
                }
            }
        }
        if let Some(eps) = &self.eps {
            if eps.len() < 2 && self.command != CommandKind::Solve {
                return Err("the eps schedule needs at least two scales".into());
            }
            if eps.windows(2).any(|w| w[1] >= w[0]) {
                return Err("the eps schedule must be strictly decreasing".into());
            }
        }
        Ok(())
    }
}

// --- flag parsers -----------------------------------------------------------

pub fn parse_floats(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number '{f}': {e}"))
        })
        .collect()
}

pub fn parse_phi(text: &str) -> Result<PhiSpec, String> {
    if let Some(alpha) = text.strip_prefix("power:") {
        let alpha: f64 = alpha.parse().map_err(|e| format!("bad exponent: {e}"))?;
        return Ok(PhiSpec::Power { alpha });
    }
    if let Some(c) = text.strip_prefix("const:") {
        let c: f64 = c.parse().map_err(|e| format!("bad constant: {e}"))?;
        return Ok(PhiSpec::Constant(c));
    }
    Err(format!("bad phi spec '{text}': use power:ALPHA or const:C"))
}

pub fn parse_phi_list(text: &str) -> Result<Vec<PhiSpec>, String> {
    text.split(',').map(|p| parse_phi(p.trim())).collect()
}

pub fn parse_variant(text: &str) -> Result<Variant, String> {
    match text {
        "solid_restricted" => Ok(Variant::SolidRestricted),
        "solid_domain" => Ok(Variant::SolidDomain),
        "surface_restricted" => Ok(Variant::SurfaceRestricted),
        "surface_domain" => Ok(Variant::SurfaceDomain),
        "weighted_surface" => Ok(Variant::WeightedSurface),
        "discrete" => Ok(Variant::Discrete),
        other => Err(format!("unknown variant '{other}'")),
    }
}

pub fn parse_domain(text: &str) -> Result<ConvexDomain, String> {
    if text == "whole" || text == "whole_space" {
        return Ok(ConvexDomain::whole_space());
    }
    if let Some(rest) = text.strip_prefix("rect:") {
        let v = parse_floats(rest)?;
        if v.len() % 2 != 0 || v.is_empty() {
            return Err("rect takes lo..,hi.. coordinates".into());
        }
        let dim = v.len() / 2;
        return ConvexDomain::rect(v[..dim].to_vec(), v[dim..].to_vec())
            .map_err(|e| e.to_string());
    }
    if let Some(rest) = text.strip_prefix("disc:") {
        let v = parse_floats(rest)?;
        if v.len() < 2 {
            return Err("disc takes center..,radius".into());
        }
        let (center, radius) = v.split_at(v.len() - 1);
        return ConvexDomain::disc(center.to_vec(), radius[0]).map_err(|e| e.to_string());
    }
    Err(format!(
        "bad domain '{text}': use rect:LO..,HI.. or disc:CENTER..,R or whole"
    ))
}

pub fn parse_field(text: &str) -> Result<FieldSpec, String> {
    if let Some(c) = text.strip_prefix("const:") {
        let c: f64 = c.parse().map_err(|e| format!("bad constant: {e}"))?;
        return Ok(FieldSpec::Constant(c));
    }
    Ok(FieldSpec::Name(text.to_string()))
}

pub fn parse_function(name: &str, gamma: Option<f64>) -> FunctionSpec {
    let mut spec = FunctionSpec::named(name);
    spec.gamma = gamma;
    spec
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_grammar() {
        assert_eq!(parse_floats("0.2, 0.1").unwrap(), vec![0.2, 0.1]);
        assert!(matches!(
            parse_phi("power:0.5").unwrap(),
            PhiSpec::Power { alpha } if alpha == 0.5
        ));
        assert!(matches!(parse_phi("const:1000").unwrap(), PhiSpec::Constant(c) if c == 1000.0));
        assert!(parse_phi("exp:2").is_err());
        assert!(matches!(
            parse_domain("rect:-1,-1,1,1").unwrap(),
            ConvexDomain::Rect { .. }
        ));
        assert!(matches!(
            parse_domain("disc:0,0,1").unwrap(),
            ConvexDomain::Disc { .. }
        ));
        assert!(parse_domain("triangle:1,2").is_err());
        assert!(matches!(
            parse_field("const:1").unwrap(),
            FieldSpec::Constant(c) if c == 1.0
        ));
    }

    #[test]
    fn config_round_trip_and_unknown_keys() {
        let json = r#"{
            "command": "rate",
            "function": {"name": "u_plus"},
            "x": [0.0, 0.0],
            "variant": "solid_restricted",
            "phi": {"power": {"alpha": 0.5}},
            "eps": [0.2, 0.1, 0.05]
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        cfg.validate().unwrap();
        let back = serde_json::to_string(&cfg).unwrap();
        let again: RunConfig = serde_json::from_str(&back).unwrap();
        again.validate().unwrap();

        let bad = r#"{"command": "rate", "function": {"name": "u_plus"}, "x": [0,0], "mystery": 1}"#;
        assert!(serde_json::from_str::<RunConfig>(bad).is_err());
    }

    #[test]
    fn schema_document_covers_the_config() {
        let schema: serde_json::Value =
            serde_json::from_str(include_str!("../docs/config.schema.json")).unwrap();
        let properties = schema["properties"].as_object().unwrap();
        for key in [
            "command",
            "name",
            "function",
            "x",
            "variant",
            "phi",
            "phi_list",
            "eps",
            "domain",
            "search",
            "quadrature",
            "stencil",
            "solve",
            "out",
        ] {
            assert!(properties.contains_key(key), "schema misses '{key}'");
        }
        assert_eq!(schema["additionalProperties"], serde_json::json!(false));
    }
}
