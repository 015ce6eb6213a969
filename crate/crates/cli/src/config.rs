//! Run configuration: a TOML document (or the JSON fingerprint emitted in
//! output headers) with every key validated and reported by its full path.

use std::path::PathBuf;

use casimir_lateral::regimes::{Scenario, SWEEP_RANGE};
use casimir_lateral::{Mode, ParticleModel, PermittivityModel, QuadratureConfig};
use serde::{Deserialize, Serialize};

use crate::{Command, Format};

/// Nanometres per metre.
const PER_METRE: f64 = 1e9;
const DEFAULT_VOLUME_NM3: f64 = 1000.0;
/// Default corrugation amplitude as a fraction of the height.
const DEFAULT_AMPLITUDE_FRACTION: f64 = 0.05;
const DEFAULT_MAX_EVALS: usize = 200_000;
const EVAL_REL_TOL: f64 = 1e-8;
const SWEEP_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialKind {
    Plasma,
    Constant,
    #[serde(alias = "perfect")]
    PerfectConductor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub kind: MaterialKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    #[serde(alias = "r")]
    pub aspect_ratio: f64,
    #[serde(default)]
    pub volume_nm3: Option<f64>,
    pub theta_deg: f64,
    #[serde(default)]
    pub phi_deg: f64,
    pub material: MaterialSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default)]
    pub a_nm: Option<f64>,
    pub z0_nm: f64,
    /// Period ratio for `eval`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_c_over_z0: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BracketSection {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub abs_tol: f64,
    #[serde(default = "default_max_evals")]
    pub max_evals: usize,
}

fn default_max_evals() -> usize {
    DEFAULT_MAX_EVALS
}

impl Default for QuadSection {
    fn default() -> Self {
        QuadSection {
            rel_tol: None,
            abs_tol: 0.0,
            max_evals: DEFAULT_MAX_EVALS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

/// The document as written, before validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    pub particle: ParticleSection,
    pub surface: MaterialSection,
    pub geometry: GeometrySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<BracketSection>,
    #[serde(default)]
    pub quad: QuadSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_mode() -> Mode {
    Mode::Retarded
}

/// A validated configuration. `document` holds the input with every default
/// filled in, which is what the output fingerprint records.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub document: ConfigDocument,
    pub scenario: Scenario,
}

impl RunConfig {
    pub fn mode(&self) -> Mode {
        self.document.mode
    }

    pub fn format(&self) -> Format {
        self.document.output.format.unwrap_or(Format::Csv)
    }

    pub fn sweep(&self) -> Option<(f64, f64, usize)> {
        self.document.sweep.as_ref().map(|s| (s.min, s.max, s.points))
    }

    pub fn bracket(&self) -> Option<(f64, f64)> {
        self.document.transition.as_ref().map(|b| (b.lo, b.hi))
    }

    pub fn period_ratio(&self) -> Option<f64> {
        self.document.geometry.lambda_c_over_z0
    }

    /// Fix the subcommand-dependent quadrature default.
    pub fn resolved(&self, command: Command) -> RunConfig {
        let mut out = self.clone();
        out.document.quad.rel_tol.get_or_insert(match command {
            Command::Eval | Command::Transition => EVAL_REL_TOL,
            Command::Sweep | Command::DeltaSweep => SWEEP_REL_TOL,
        });
        out
    }

    /// Quadrature settings for `command`.
    pub fn quadrature(&self, command: Command) -> QuadratureConfig {
        let doc = &self.resolved(command).document;
        QuadratureConfig {
            rel_tol: doc.quad.rel_tol.expect("resolved"),
            abs_tol: doc.quad.abs_tol,
            max_evaluations: doc.quad.max_evals,
            ..QuadratureConfig::default()
        }
    }

    /// Single-line JSON rendering of the resolved configuration; it parses
    /// back through [`parse_config`].
    pub fn fingerprint(&self, command: Command) -> String {
        serde_json::to_string(&self.resolved(command).document).expect("serializable")
    }
}

/// Parse and validate a TOML document, or a JSON fingerprint.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let document = if text.trim_start().starts_with('{') {
        let mut de = serde_json::Deserializer::from_str(text);
        let doc: ConfigDocument = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| decode_error(e.path().to_string(), &e.inner().to_string()))?;
        de.end()
            .map_err(|e| ConfigError::new("<document>", e.to_string()))?;
        doc
    } else {
        let de = toml::Deserializer::parse(text)
            .map_err(|e| ConfigError::new("<document>", e.message().to_string()))?;
        serde_path_to_error::deserialize(de)
            .map_err(|e| decode_error(e.path().to_string(), e.inner().message()))?
    };
    validate(document)
}

fn decode_error(path: String, message: &str) -> ConfigError {
    let path = if path == "." { String::new() } else { path };
    let join = |field: &str| {
        if path == field || path.ends_with(&format!(".{field}")) {
            path.clone()
        } else if path.is_empty() {
            field.to_string()
        } else {
            format!("{path}.{field}")
        }
    };
    // serde reports the enclosing table for unknown or missing fields.
    for (prefix, what) in [("unknown field `", "unknown key"), ("missing field `", "missing key")] {
        if let Some(rest) = message.strip_prefix(prefix) {
            if let Some(end) = rest.find('`') {
                let key = join(&rest[..end]);
                let tail = rest[end + 1..].trim_start_matches(',').trim();
                let msg = if tail.is_empty() {
                    what.to_string()
                } else {
                    format!("{what}; {tail}")
                };
                return ConfigError::new(key, msg);
            }
        }
    }
    let key = if path.is_empty() { "<document>".to_string() } else { path };
    ConfigError::new(key, message.trim().to_string())
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(key, format!("must be positive and finite, got {v}")))
    }
}

fn material(prefix: &str, m: &MaterialSection) -> Result<PermittivityModel, ConfigError> {
    let key = |k: &str| format!("{prefix}.{k}");
    let reject = |k: &str, kind: &str| {
        ConfigError::new(key(k), format!("does not apply to kind = \"{kind}\""))
    };
    match m.kind {
        MaterialKind::Plasma => {
            if m.epsilon.is_some() {
                return Err(reject("epsilon", "plasma"));
            }
            let w = m
                .omega_p
                .ok_or_else(|| ConfigError::new(key("omega_p"), "required for kind = \"plasma\""))?;
            Ok(PermittivityModel::Plasma {
                omega_p: positive(&key("omega_p"), w)?,
            })
        }
        MaterialKind::Constant => {
            if m.omega_p.is_some() {
                return Err(reject("omega_p", "constant"));
            }
            let e = m
                .epsilon
                .ok_or_else(|| ConfigError::new(key("epsilon"), "required for kind = \"constant\""))?;
            if !(e >= 1.0 && e.is_finite()) {
                return Err(ConfigError::new(key("epsilon"), format!("must be finite and >= 1, got {e}")));
            }
            Ok(PermittivityModel::Constant { epsilon: e })
        }
        MaterialKind::PerfectConductor => {
            if m.omega_p.is_some() {
                return Err(reject("omega_p", "perfect_conductor"));
            }
            if m.epsilon.is_some() {
                return Err(reject("epsilon", "perfect_conductor"));
            }
            Ok(PermittivityModel::PerfectConductor)
        }
    }
}

fn validate(mut doc: ConfigDocument) -> Result<RunConfig, ConfigError> {
    let p = &mut doc.particle;
    if !(p.aspect_ratio >= 1.0 && p.aspect_ratio.is_finite()) {
        return Err(ConfigError::new(
            "particle.aspect_ratio",
            format!("must be finite and >= 1, got {}", p.aspect_ratio),
        ));
    }
    let volume = positive("particle.volume_nm3", *p.volume_nm3.get_or_insert(DEFAULT_VOLUME_NM3))?;
    if !(0.0..=180.0).contains(&p.theta_deg) {
        return Err(ConfigError::new(
            "particle.theta_deg",
            format!("must lie in [0, 180], got {}", p.theta_deg),
        ));
    }
    if !p.phi_deg.is_finite() {
        return Err(ConfigError::new("particle.phi_deg", "must be finite"));
    }
    let particle_material = material("particle.material", &p.material)?;
    let surface = material("surface", &doc.surface)?;

    let g = &mut doc.geometry;
    let z0 = positive("geometry.z0_nm", g.z0_nm)?;
    let a = positive(
        "geometry.a_nm",
        *g.a_nm.get_or_insert(DEFAULT_AMPLITUDE_FRACTION * z0),
    )?;
    if a >= z0 {
        return Err(ConfigError::new(
            "geometry.a_nm",
            format!("must be smaller than geometry.z0_nm ({a} >= {z0})"),
        ));
    }
    if let Some(l) = g.lambda_c_over_z0 {
        positive("geometry.lambda_c_over_z0", l)?;
    }

    if let Some(s) = &doc.sweep {
        if !(s.min >= SWEEP_RANGE.0 && s.min <= SWEEP_RANGE.1) {
            return Err(ConfigError::new(
                "sweep.min",
                format!("must lie in [{}, {}], got {}", SWEEP_RANGE.0, SWEEP_RANGE.1, s.min),
            ));
        }
        if !(s.max > s.min && s.max <= SWEEP_RANGE.1) {
            return Err(ConfigError::new(
                "sweep.max",
                format!("must lie in (sweep.min, {}], got {}", SWEEP_RANGE.1, s.max),
            ));
        }
        if s.points < 2 {
            return Err(ConfigError::new(
                "sweep.points",
                format!("must be at least 2, got {}", s.points),
            ));
        }
    }
    if let Some(b) = &doc.transition {
        positive("transition.lo", b.lo)?;
        if !(b.hi > b.lo && b.hi.is_finite()) {
            return Err(ConfigError::new(
                "transition.hi",
                format!("must exceed transition.lo, got {}", b.hi),
            ));
        }
    }

    let q = &doc.quad;
    if let Some(r) = q.rel_tol {
        if !(r > 0.0 && r < 1.0) {
            return Err(ConfigError::new("quad.rel_tol", format!("must lie in (0, 1), got {r}")));
        }
    }
    if !(q.abs_tol >= 0.0 && q.abs_tol.is_finite()) {
        return Err(ConfigError::new(
            "quad.abs_tol",
            format!("must be finite and non-negative, got {}", q.abs_tol),
        ));
    }
    if q.max_evals < 21 {
        return Err(ConfigError::new(
            "quad.max_evals",
            format!("must be at least 21, got {}", q.max_evals),
        ));
    }
    doc.output.format.get_or_insert(Format::Csv);

    let p = &doc.particle;
    let particle = ParticleModel::new(
        p.aspect_ratio,
        volume / PER_METRE.powi(3),
        particle_material,
        p.theta_deg.to_radians(),
        p.phi_deg.to_radians(),
    )
    .map_err(|e| ConfigError::new("particle", e.to_string()))?;
    let scenario = Scenario {
        particle,
        surface,
        height: z0 / PER_METRE,
        amplitude: a / PER_METRE,
    };
    Ok(RunConfig {
        document: doc,
        scenario,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const GOLD: &str = r#"
mode = "vdw"

[particle]
aspect_ratio = 2.0
theta_deg = 90.0
phi_deg = 0.0

[particle.material]
kind = "plasma"
omega_p = 1.385e16

[surface]
kind = "plasma"
omega_p = 1.385e16

[geometry]
z0_nm = 30.0
"#;

    #[test]
    fn minimal_gold_document() {
        let c = parse_config(GOLD).unwrap();
        assert_eq!(c.mode(), Mode::Vdw);
        assert_eq!(c.scenario.height, 30e-9);
        assert!((c.scenario.amplitude - 1.5e-9).abs() < 1e-24);
        assert!((c.scenario.particle.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        assert_eq!(c.format(), Format::Csv);
        assert_eq!(c.quadrature(Command::Eval).rel_tol, 1e-8);
        assert_eq!(c.quadrature(Command::Sweep).rel_tol, 1e-6);
    }

    #[test]
    fn amplitude_must_be_below_height() {
        let text = GOLD.replace("z0_nm = 30.0", "z0_nm = 30.0\na_nm = 50.0");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.key, "geometry.a_nm");
    }

    #[test]
    fn unknown_key_is_named() {
        let text = GOLD.replace("theta_deg = 90.0", "theta_deg = 90.0\nmass = 1.0");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.key, "particle.mass");
        assert!(e.to_string().contains("particle.mass"));
        let text = GOLD.replace("mode = \"vdw\"", "mode = \"vdw\"\ncolour = 1");
        assert_eq!(parse_config(&text).unwrap_err().key, "colour");
    }

    #[test]
    fn missing_and_mistyped_keys() {
        let text = GOLD.replace("z0_nm = 30.0", "");
        assert_eq!(parse_config(&text).unwrap_err().key, "geometry.z0_nm");
        let text = GOLD.replace("z0_nm = 30.0", "z0_nm = \"thirty\"");
        assert_eq!(parse_config(&text).unwrap_err().key, "geometry.z0_nm");
        let text = GOLD.replace("omega_p = 1.385e16\n\n[geometry]", "\n[geometry]");
        assert_eq!(parse_config(&text).unwrap_err().key, "surface.omega_p");
        let text = GOLD.replace("mode = \"vdw\"", "mode = \"static\"");
        assert_eq!(parse_config(&text).unwrap_err().key, "mode");
    }

    #[test]
    fn material_kinds() {
        let text = GOLD.replace(
            "[surface]\nkind = \"plasma\"\nomega_p = 1.385e16",
            "[surface]\nkind = \"constant\"\nepsilon = 3.997",
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.scenario.surface, PermittivityModel::Constant { epsilon: 3.997 });
        let text = GOLD.replace(
            "[surface]\nkind = \"plasma\"\nomega_p = 1.385e16",
            "[surface]\nkind = \"perfect\"",
        );
        assert_eq!(parse_config(&text).unwrap().scenario.surface, PermittivityModel::PerfectConductor);
        let text = GOLD.replace(
            "[surface]\nkind = \"plasma\"\nomega_p = 1.385e16",
            "[surface]\nkind = \"perfect_conductor\"\nepsilon = 2.0",
        );
        assert_eq!(parse_config(&text).unwrap_err().key, "surface.epsilon");
    }

    #[test]
    fn range_checks() {
        for (patch, key) in [
            ("aspect_ratio = 0.5", "particle.aspect_ratio"),
            ("theta_deg = 200.0", "particle.theta_deg"),
        ] {
            let field = patch.split(' ').next().unwrap();
            let original = GOLD
                .lines()
                .find(|l| l.starts_with(field))
                .unwrap();
            let e = parse_config(&GOLD.replace(original, patch)).unwrap_err();
            assert_eq!(e.key, key);
        }
        let text = format!("{GOLD}\n[sweep]\nmin = 0.05\nmax = 12.0\npoints = 10\n");
        assert_eq!(parse_config(&text).unwrap_err().key, "sweep.min");
        let text = format!("{GOLD}\n[sweep]\nmin = 1.0\nmax = 12.0\npoints = 1\n");
        assert_eq!(parse_config(&text).unwrap_err().key, "sweep.points");
        let text = format!("{GOLD}\n[quad]\nrel_tol = 0.0\n");
        assert_eq!(parse_config(&text).unwrap_err().key, "quad.rel_tol");
    }

    #[test]
    fn fingerprint_round_trip() {
        let text = format!("{GOLD}\n[sweep]\nmin = 1.0\nmax = 12.0\npoints = 100\n");
        let c = parse_config(&text).unwrap();
        for cmd in [Command::Eval, Command::Sweep] {
            let fp = c.fingerprint(cmd);
            assert!(!fp.contains('\n'));
            let back = parse_config(&fp).unwrap();
            assert_eq!(back.resolved(cmd), c.resolved(cmd));
            assert_eq!(back.fingerprint(cmd), fp);
        }
    }

    #[test]
    fn fingerprint_rejects_unknown_keys_too() {
        let c = parse_config(GOLD).unwrap();
        let fp = c.fingerprint(Command::Eval).replacen('{', "{\"extra\":1,", 1);
        assert_eq!(parse_config(&fp).unwrap_err().key, "extra");
    }
}
