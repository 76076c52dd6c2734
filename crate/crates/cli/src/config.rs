//! Plain-text suite configuration: `key = value` lines, `[section]` headers,
//! `#` comments.
//!
//! ```text
//! suite = all
//! seed = 42
//!
//! [chart]
//! resolution = 32
//!
//! [metric]
//! generator = random_riemannian
//! modes = 2
//! amplitude = 0.8
//! bump = 0.3
//!
//! [tolerances]
//! adjoint = 1e-6
//!
//! [params]
//! warped_lengths = 5, 10, 20
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Suite {
    Cone,
    Curvature,
    Gauge,
    Geodesic,
    Chern,
    Index,
    Scales,
    All,
}

pub const MODULE_SUITES: [Suite; 7] =
    [Suite::Cone, Suite::Curvature, Suite::Gauge, Suite::Geodesic, Suite::Chern, Suite::Index, Suite::Scales];

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Cone => "cone",
            Suite::Curvature => "curvature",
            Suite::Gauge => "gauge",
            Suite::Geodesic => "geodesic",
            Suite::Chern => "chern",
            Suite::Index => "index",
            Suite::Scales => "scales",
            Suite::All => "all",
        }
    }

    pub fn parse(s: &str) -> CliResult<Suite> {
        MODULE_SUITES
            .iter()
            .chain(&[Suite::All])
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| CliError::UnknownSuite(s.to_string()))
    }

    pub fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => MODULE_SUITES.to_vec(),
            s => vec![s],
        }
    }

    /// Whether the suite draws random inputs (and so needs a seed).
    pub fn randomized(self) -> bool {
        self.members().iter().any(|s| matches!(s, Suite::Cone | Suite::Gauge | Suite::Scales))
    }

    /// Default tolerances, by name.
    pub fn tolerances(self) -> Vec<(&'static str, f64)> {
        let one: &[(&str, f64)] = match self {
            Suite::Cone => &[("john_factor", 1e-6), ("john_ellipse", 1e-6), ("john_equivariance", 1e-5)],
            Suite::Curvature => &[
                ("sphere_scalar", 1e-4),
                ("half_plane_scalar", 1e-5),
                ("flat_scalar", 1e-10),
                ("symmetry", 1e-6),
                ("compatibility", 1e-6),
            ],
            Suite::Gauge => &[
                ("adjoint", 1e-6),
                ("conformal", 1e-4),
                ("scaling_law", 1e-6),
                ("volume", 1e-6),
                ("slice_reconstruction", 1e-6),
                ("slice_divergence", 1e-5),
                ("slice_orthogonality", 1e-6),
            ],
            Suite::Geodesic => &[("sphere_distance", 1e-6), ("great_circle", 1e-6), ("drift_rate", 1e-8), ("homogeneity", 1e-8)],
            Suite::Chern => &[
                ("gauss_bonnet_sphere", 1e-3),
                ("gauss_bonnet_torus", 1e-4),
                ("family_constancy", 1e-4),
                ("frame_independence", 1e-8),
                ("series_coefficients", 1e-12),
            ],
            Suite::Index => &[("circle_spectrum", 1e-3), ("sphere_spectrum", 1e-9)],
            Suite::Scales => &[
                ("qi_identity", 1e-9),
                ("qi_scaling", 1e-4),
                ("sobolev_closed_form", 1e-8),
                ("sobolev_duplication", 1e-12),
                ("sobolev_envelope", 1e-12),
            ],
            Suite::All => return MODULE_SUITES.iter().flat_map(|s| s.tolerances()).collect(),
        };
        one.to_vec()
    }

    /// Default suite parameters (lists of numbers), by name.
    pub fn params(self) -> Vec<(&'static str, Vec<f64>)> {
        match self {
            Suite::Cone => vec![("convexity_pairs", vec![200.0]), ("perturbations", vec![500.0]), ("sylvester_trials", vec![100.0])],
            Suite::Gauge => vec![("adjoint_trials", vec![20.0])],
            Suite::Chern => vec![("family_members", vec![11.0]), ("sphere_resolution", vec![128.0])],
            Suite::Index => vec![("path_samples", vec![11.0]), ("sphere_band", vec![16.0])],
            Suite::Scales => vec![
                ("sobolev_samples", vec![50.0]),
                ("warped_rates", vec![0.0, 0.05, 1.0]),
                ("warped_lengths", vec![5.0, 10.0, 20.0]),
            ],
            Suite::Curvature | Suite::Geodesic => vec![],
            Suite::All => MODULE_SUITES.iter().flat_map(|s| s.params()).collect(),
        }
    }
}

/// Parameters that must be positive integers.
const INTEGER_PARAMS: &[&str] = &[
    "convexity_pairs",
    "perturbations",
    "sylvester_trials",
    "adjoint_trials",
    "family_members",
    "sphere_resolution",
    "path_samples",
    "sphere_band",
    "sobolev_samples",
];

pub const GENERATORS: &[&str] = &["random_riemannian"];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub suite: Suite,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    /// Resolution of the periodic test charts.
    pub resolution: usize,
    pub generator: String,
    pub modes: usize,
    pub amplitude: f64,
    /// Amplitude of the deterministic bumpy-torus metric.
    pub bump: f64,
    pub tolerances: BTreeMap<String, f64>,
    pub params: BTreeMap<String, Vec<f64>>,
}

impl SuiteConfig {
    /// Defaults for `suite`; the seed still has to be supplied for
    /// randomized suites.
    pub fn defaults(suite: Suite, seed: Option<u64>) -> SuiteConfig {
        SuiteConfig {
            suite,
            seed,
            output: None,
            resolution: 32,
            generator: "random_riemannian".into(),
            modes: 2,
            amplitude: 0.8,
            bump: 0.3,
            tolerances: suite.tolerances().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            params: suite.params().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }

    pub fn param(&self, name: &str) -> &[f64] {
        &self.params[name]
    }

    pub fn count(&self, name: &str) -> usize {
        self.params[name][0] as usize
    }

    pub fn parse(text: &str) -> CliResult<SuiteConfig> {
        let mut entries: Vec<(usize, String, String, String)> = Vec::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::config(line, content, "unterminated section header"))?
                    .trim();
                if !["chart", "metric", "tolerances", "params"].contains(&name) {
                    return Err(CliError::config(line, name, "unknown section"));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| CliError::config(line, content, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(CliError::config(line, key, "empty key or value"));
            }
            if entries.iter().any(|(_, s, k, _)| *s == section && k == key) {
                return Err(CliError::config(line, key, "duplicate key"));
            }
            entries.push((line, section.clone(), key.to_string(), value.to_string()));
        }

        let suite_entry = entries
            .iter()
            .find(|(_, s, k, _)| s.is_empty() && k == "suite")
            .ok_or_else(|| CliError::config(0, "suite", "missing required key"))?;
        let suite = Suite::parse(&suite_entry.3)?;
        let mut cfg = SuiteConfig::defaults(suite, None);

        for (line, section, key, value) in &entries {
            let (line, key, value) = (*line, key.as_str(), value.as_str());
            match (section.as_str(), key) {
                ("", "suite") => {}
                ("", "seed") => {
                    cfg.seed = Some(value.parse().map_err(|_| CliError::config(line, key, "expected an unsigned 64-bit integer"))?)
                }
                ("", "output") => cfg.output = Some(PathBuf::from(value)),
                ("chart", "resolution") => cfg.resolution = parse_int(line, key, value)?,
                ("metric", "generator") => {
                    if !GENERATORS.contains(&value) {
                        return Err(CliError::config(line, key, format!("unknown generator `{value}`")));
                    }
                    cfg.generator = value.to_string();
                }
                ("metric", "modes") => cfg.modes = parse_int(line, key, value)?,
                ("metric", "amplitude") => cfg.amplitude = parse_real(line, key, value)?,
                ("metric", "bump") => cfg.bump = parse_real(line, key, value)?,
                ("tolerances", _) => {
                    let slot = cfg.tolerances.get_mut(key).ok_or_else(|| {
                        CliError::config(line, key, format!("not a tolerance of suite `{}`", suite.name()))
                    })?;
                    let v = parse_real(line, key, value)?;
                    if v <= 0.0 {
                        return Err(CliError::config(line, key, "tolerances must be positive"));
                    }
                    *slot = v;
                }
                ("params", _) => {
                    let slot = cfg.params.get_mut(key).ok_or_else(|| {
                        CliError::config(line, key, format!("not a parameter of suite `{}`", suite.name()))
                    })?;
                    let list = value
                        .split(',')
                        .map(|v| parse_real(line, key, v.trim()))
                        .collect::<CliResult<Vec<f64>>>()?;
                    if INTEGER_PARAMS.contains(&key) && (list.len() != 1 || list[0] < 1.0 || list[0].fract() != 0.0) {
                        return Err(CliError::config(line, key, "expected one positive integer"));
                    }
                    *slot = list;
                }
                _ => {
                    let place = if section.is_empty() { "top level".to_string() } else { format!("section [{section}]") };
                    return Err(CliError::config(line, key, format!("unknown key in {place}")));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks the cross-key invariants; line 0 means "not tied to a line".
    pub fn validate(&self) -> CliResult<()> {
        if self.suite.randomized() && self.seed.is_none() {
            return Err(CliError::config(0, "seed", format!("suite `{}` is randomized and needs a seed", self.suite.name())));
        }
        if self.resolution < 16 || !self.resolution.is_multiple_of(2) {
            return Err(CliError::config(0, "resolution", "expected an even resolution of at least 16"));
        }
        if self.modes == 0 {
            return Err(CliError::config(0, "modes", "expected at least one mode"));
        }
        if !(self.amplitude > 0.0) {
            return Err(CliError::config(0, "amplitude", "expected a positive amplitude"));
        }
        if !(self.bump.abs() < 1.0) {
            return Err(CliError::config(0, "bump", "bump amplitude must lie in (-1, 1)"));
        }
        for (k, &v) in &self.tolerances {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(0, k, "tolerances must be positive"));
            }
        }
        if let Some(rates) = self.params.get("warped_rates") {
            if rates.iter().any(|&a| a < 0.0) {
                return Err(CliError::config(0, "warped_rates", "rates must be nonnegative"));
            }
        }
        if let Some(lengths) = self.params.get("warped_lengths") {
            if lengths.is_empty() || lengths.iter().any(|&t| t <= 0.0) || lengths.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::config(0, "warped_lengths", "lengths must be positive and increasing"));
            }
        }
        Ok(())
    }

    /// Canonical text of the effective configuration; parsing it gives
    /// back the same config.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "suite = {}", self.suite.name());
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed = {seed}");
        }
        if let Some(out) = &self.output {
            let _ = writeln!(s, "output = {}", out.display());
        }
        let _ = writeln!(s, "\n[chart]\nresolution = {}", self.resolution);
        let _ = writeln!(
            s,
            "\n[metric]\ngenerator = {}\nmodes = {}\namplitude = {:?}\nbump = {:?}",
            self.generator, self.modes, self.amplitude, self.bump
        );
        let _ = writeln!(s, "\n[tolerances]");
        for (k, v) in &self.tolerances {
            let _ = writeln!(s, "{k} = {v:e}");
        }
        if !self.params.is_empty() {
            let _ = writeln!(s, "\n[params]");
            for (k, v) in &self.params {
                let list: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
                let _ = writeln!(s, "{k} = {}", list.join(", "));
            }
        }
        s
    }
}

fn parse_real(line: usize, key: &str, value: &str) -> CliResult<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::config(line, key, format!("`{value}` is not a finite number")))
}

fn parse_int(line: usize, key: &str, value: &str) -> CliResult<usize> {
    value.parse().map_err(|_| CliError::config(line, key, format!("`{value}` is not a nonnegative integer")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn invalid_at(text: &str) -> (usize, String) {
        match SuiteConfig::parse(text) {
            Err(CliError::ConfigInvalid { line, key, .. }) => (line, key),
            other => panic!("expected ConfigInvalid, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = SuiteConfig::parse("suite = cone\nseed = 7\n").unwrap();
        assert_eq!(cfg, SuiteConfig::defaults(Suite::Cone, Some(7)));
        assert_eq!(cfg.count("convexity_pairs"), 200);
    }

    #[test]
    fn sections_and_overrides() {
        let text = "# comment\nsuite = scales\nseed = 1 # trailing\n[tolerances]\nqi_scaling = 2e-4\n[params]\nwarped_lengths = 4, 8\n[chart]\nresolution = 24\n";
        let cfg = SuiteConfig::parse(text).unwrap();
        assert_eq!(cfg.tolerance("qi_scaling"), 2e-4);
        assert_eq!(cfg.param("warped_lengths"), &[4.0, 8.0]);
        assert_eq!(cfg.resolution, 24);
    }

    #[test]
    fn unknown_keys_rejected_with_line() {
        assert_eq!(invalid_at("suite = cone\nseed = 1\ncolour = red\n"), (3, "colour".into()));
        assert_eq!(invalid_at("suite = cone\nseed = 1\n[tolerances]\nsphere_scalar = 1e-4\n"), (4, "sphere_scalar".into()));
        assert_eq!(invalid_at("suite = cone\nseed = 1\n[extras]\n"), (3, "extras".into()));
        assert_eq!(invalid_at("suite = cone\nseed = 1\nseed = 2\n"), (3, "seed".into()));
        assert_eq!(invalid_at("suite = cone\nseed = 1\njunk\n"), (3, "junk".into()));
    }

    #[test]
    fn nonpositive_tolerance_rejected() {
        assert_eq!(invalid_at("suite = gauge\nseed = 1\n[tolerances]\nadjoint = 0\n"), (4, "adjoint".into()));
        assert_eq!(invalid_at("suite = gauge\nseed = 1\n[tolerances]\nadjoint = -1e-3\n"), (4, "adjoint".into()));
    }

    #[test]
    fn seed_required_for_randomized_suites() {
        assert_eq!(invalid_at("suite = all\n"), (0, "seed".into()));
        assert_eq!(invalid_at("suite = gauge\n"), (0, "seed".into()));
        assert!(SuiteConfig::parse("suite = curvature\n").is_ok());
        assert!(matches!(SuiteConfig::parse("suite = nope\nseed = 1\n"), Err(CliError::UnknownSuite(_))));
    }

    #[test]
    fn bad_params_rejected() {
        assert_eq!(invalid_at("suite = cone\nseed = 1\n[params]\nconvexity_pairs = 2.5\n"), (4, "convexity_pairs".into()));
        assert_eq!(invalid_at("suite = scales\nseed = 1\n[params]\nwarped_lengths = 10, 5\n"), (0, "warped_lengths".into()));
    }

    #[test]
    fn echo_round_trips() {
        for suite in MODULE_SUITES.iter().chain(&[Suite::All]) {
            let mut cfg = SuiteConfig::defaults(*suite, Some(42));
            cfg.amplitude = 0.1 + 0.2;
            cfg.tolerances.values_mut().for_each(|v| *v *= 1.0 / 3.0);
            cfg.output = Some("out/report.json".into());
            assert_eq!(SuiteConfig::parse(&cfg.echo()).unwrap(), cfg);
        }
    }
}
