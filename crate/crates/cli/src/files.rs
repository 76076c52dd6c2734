//! Metric, tensor, sample and family-spec files.

use std::path::{Path, PathBuf};

use polymet_core::cone::{decode_polymetric, encode_metrics, Inertia, MetricField, PolymetricBlob, POLYMETRIC_MAGIC};
use polymet_core::grid::io::{decode_field, encode_field, FIELD_MAGIC};
use polymet_core::grid::{Scheme, TensorField};

use crate::error::{CliError, CliResult};

pub fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn default_scheme(t: &TensorField) -> Scheme {
    if t.chart().fully_periodic() {
        Scheme::Spectral
    } else {
        Scheme::Central4
    }
}

/// Reads a polymetric file; a bare field blob is taken as one Riemannian
/// component.
pub fn read_polymetric(path: &Path) -> CliResult<PolymetricBlob> {
    let bytes = read_bytes(path)?;
    let blob = if bytes.starts_with(POLYMETRIC_MAGIC) {
        decode_polymetric(&bytes)?
    } else if bytes.starts_with(FIELD_MAGIC) {
        let (t, used) = decode_field(&bytes)?;
        if used != bytes.len() {
            return Err(CliError::io(path, "trailing bytes after the field blob"));
        }
        let n = t.chart().dim();
        let scheme = default_scheme(&t);
        PolymetricBlob { components: vec![t], inertias: vec![Inertia::riemannian(n)], schemes: vec![scheme] }
    } else {
        return Err(CliError::io(path, "not a polymetric or field file"));
    };
    Ok(blob)
}

/// First (or only) component of a metric file, validated.
pub fn read_metric(path: &Path) -> CliResult<MetricField> {
    let p = read_polymetric(path)?.into_polymetric()?;
    Ok(p.components()[0].clone())
}

pub fn read_tensor(path: &Path) -> CliResult<TensorField> {
    let bytes = read_bytes(path)?;
    let (t, used) = decode_field(&bytes)?;
    if used != bytes.len() {
        return Err(CliError::io(path, "trailing bytes after the field blob"));
    }
    Ok(t)
}

pub fn write_metrics(path: &Path, metrics: &[MetricField]) -> CliResult<()> {
    write_bytes(path, &encode_metrics(metrics))
}

pub fn write_tensor(path: &Path, t: &TensorField) -> CliResult<()> {
    write_bytes(path, &encode_field(t))
}

/// Points, one per line, coordinates separated by whitespace or commas.
pub fn read_samples(path: &Path) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let p = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| CliError::io(path, format!("line {}: {e}", i + 1)))?;
        out.push(p);
    }
    Ok(out)
}

/// Metric family `g_s = base + s·perturbation` over a parameter grid.
///
/// ```text
/// base = bumpy.pmp
/// perturbation = h.pmf
/// parameters = 0, 0.1, 0.2
/// ```
/// Relative paths are resolved against the spec file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub base: PathBuf,
    pub perturbation: Option<PathBuf>,
    pub parameters: Vec<f64>,
}

impl FamilySpec {
    pub fn parse(text: &str, dir: &Path) -> CliResult<FamilySpec> {
        let (mut base, mut perturbation, mut parameters) = (None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::config(line, content, "expected `key = value`"))?;
            match k {
                "base" => base = Some(dir.join(v)),
                "perturbation" => perturbation = Some(dir.join(v)),
                "parameters" => {
                    let list = v
                        .split(',')
                        .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
                        .collect::<Option<Vec<f64>>>()
                        .ok_or_else(|| CliError::config(line, k, "expected a comma-separated list of numbers"))?;
                    parameters = Some(list);
                }
                _ => return Err(CliError::config(line, k, "unknown key (base, perturbation, parameters)")),
            }
        }
        let base = base.ok_or_else(|| CliError::config(0, "base", "missing required key"))?;
        let parameters = parameters.ok_or_else(|| CliError::config(0, "parameters", "missing required key"))?;
        if parameters.is_empty() {
            return Err(CliError::config(0, "parameters", "empty parameter grid"));
        }
        Ok(FamilySpec { base, perturbation, parameters })
    }

    pub fn read(path: &Path) -> CliResult<FamilySpec> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        FamilySpec::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// The family members, each validated against the base signature.
    pub fn members(&self) -> CliResult<Vec<MetricField>> {
        let base = read_metric(&self.base)?;
        let h = match &self.perturbation {
            Some(p) => Some(read_tensor(p)?),
            None => None,
        };
        self.parameters
            .iter()
            .map(|&s| match &h {
                Some(h) => Ok(base.perturbed(h, s)?),
                None => Ok(base.clone()),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use polymet_core::models;

    #[test]
    fn family_spec_parsing() {
        let spec = FamilySpec::parse("base = g.pmp\nperturbation = h.pmf # comment\nparameters = 0, 0.5,1\n", Path::new("/d")).unwrap();
        assert_eq!(spec.base, PathBuf::from("/d/g.pmp"));
        assert_eq!(spec.parameters, vec![0.0, 0.5, 1.0]);
        assert!(matches!(FamilySpec::parse("base = g\n", Path::new(".")), Err(CliError::ConfigInvalid { key, .. }) if key == "parameters"));
        assert!(matches!(FamilySpec::parse("base = g\nfoo = 1\n", Path::new(".")), Err(CliError::ConfigInvalid { line: 2, .. })));
    }

    #[test]
    fn metric_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let g = models::bumpy_torus(12, 0.2).unwrap();
        let p = dir.path().join("g.pmp");
        write_metrics(&p, &[g.clone()]).unwrap();
        assert_eq!(read_metric(&p).unwrap(), g);
        let f = dir.path().join("g.pmf");
        write_tensor(&f, g.components()).unwrap();
        assert_eq!(read_metric(&f).unwrap(), g);
        let s = dir.path().join("s.txt");
        std::fs::write(&s, "1 2\n# skip\n3, 4\n").unwrap();
        assert_eq!(read_samples(&s).unwrap(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }
}
