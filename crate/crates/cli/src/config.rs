//! Experiment configuration files and kernel descriptions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use valforge::bodies::{parse_label, BodySpec, ConvexBody};
use valforge::kernel::{decompose_kernel, HarmonicTable, TensorDecomposition, DEFAULT_TOL};
use valforge::sphere::harmonics::HarmonicExpansion;
use valforge::sphere::SphericalFunction;
use valforge::synthesis::Parity;

use crate::error::{CliError, CliResult};

/// Everything a command may read from `--config`; flags override fields.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<Parity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_bodies: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_sweep: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bodies: Vec<BodySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn build_bodies(&self, n: usize) -> CliResult<Vec<ConvexBody>> {
        self.bodies
            .iter()
            .enumerate()
            .map(|(i, b)| {
                ConvexBody::from_spec(b, n).map_err(|e| CliError::Input(format!("body {i}: {e}")))
            })
            .collect()
    }
}

/// A kernel `K(x_1, ..., x_m)` on a product of spheres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `f_1(x_1) ... f_m(x_m)`.
    Separable { factors: Vec<FactorSpec> },
    /// `sum_e c_e Y_{e,1}(x_1) ... Y_{e,m}(x_m)` over harmonic labels `"l:i"`.
    HarmonicTable {
        max_degree: usize,
        entries: Vec<TableEntry>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tol: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FactorSpec {
    /// Support function of a smooth body.
    Body(BodySpec),
    /// Harmonic expansion keyed by `"l:i"`.
    Harmonic(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub labels: Vec<String>,
    pub coefficient: f64,
}

fn harmonic(n: usize, coeffs: &BTreeMap<String, f64>) -> valforge::Result<HarmonicExpansion> {
    let entries = coeffs
        .iter()
        .map(|(l, c)| Ok((parse_label(l)?, *c)))
        .collect::<valforge::Result<Vec<_>>>()?;
    HarmonicExpansion::from_labels(n, &entries)
}

impl KernelSpec {
    /// Number of sphere arguments; `None` for an empty table.
    pub fn arity(&self) -> Option<usize> {
        match self {
            KernelSpec::Separable { factors } => Some(factors.len()),
            KernelSpec::HarmonicTable { entries, .. } => entries.first().map(|e| e.labels.len()),
        }
    }

    /// Tensor decomposition of the kernel on `(S^{n-1})^arity`.
    pub fn decomposition(&self, n: usize, arity: usize) -> CliResult<TensorDecomposition> {
        if let Some(a) = self.arity().filter(|a| *a != arity) {
            return Err(CliError::Input(format!(
                "kernel has arity {a}, degree k needs {arity}"
            )));
        }
        match self {
            KernelSpec::Separable { factors } => {
                let fs = factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| -> CliResult<Arc<dyn SphericalFunction>> {
                        match f {
                            FactorSpec::Body(b) => {
                                let body = ConvexBody::from_spec(b, n)
                                    .map_err(|e| CliError::Input(format!("factor {i}: {e}")))?;
                                if !body.is_smooth() {
                                    return Err(CliError::Input(format!(
                                        "factor {i}: kernel factors must be smooth"
                                    )));
                                }
                                Ok(Arc::new(body))
                            }
                            FactorSpec::Harmonic(c) => {
                                Ok(Arc::new(harmonic(n, c).map_err(|e| {
                                    CliError::Input(format!("factor {i}: {e}"))
                                })?))
                            }
                        }
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(TensorDecomposition::separable(fs)?)
            }
            KernelSpec::HarmonicTable {
                max_degree,
                entries,
                tol,
            } => {
                let parsed = entries
                    .iter()
                    .map(|e| {
                        if e.labels.len() != arity {
                            return Err(CliError::Input(
                                "all table entries need the same number of labels".into(),
                            ));
                        }
                        let labels = e
                            .labels
                            .iter()
                            .map(|l| parse_label(l))
                            .collect::<valforge::Result<Vec<_>>>()?;
                        Ok((labels, e.coefficient))
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                let table = HarmonicTable::new(n, *max_degree, &parsed)?.with_arity(arity)?;
                Ok(decompose_kernel(
                    &table,
                    *max_degree,
                    tol.unwrap_or(DEFAULT_TOL),
                )?)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_kernel_configs() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"n": 3, "k": 1, "kernel": {"kind": "separable", "factors": [
                {"body": {"kind": "ellipsoid", "matrix": [[2,0,0],[0,1,0],[0,0,0.5]]}},
                {"harmonic": {"0:0": 1.0, "2:1": 0.1}}]}}"#,
        )
        .unwrap();
        let d = cfg.kernel.as_ref().unwrap().decomposition(3, 2).unwrap();
        assert_eq!(d.arity(), 2);
        assert!(cfg.kernel.as_ref().unwrap().decomposition(3, 1).is_err());

        let table: KernelSpec = serde_json::from_str(
            r#"{"kind": "harmonic_table", "max_degree": 2,
                "entries": [{"labels": ["0:0", "0:0"], "coefficient": 2.0}, {"labels": ["1:0", "2:2"], "coefficient": 0.3}]}"#,
        )
        .unwrap();
        assert_eq!(table.decomposition(3, 2).unwrap().len(), 2);
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"n": 3, "colour": 1}"#).is_err());
        assert!(serde_json::from_str::<KernelSpec>(
            r#"{"kind": "separable", "factors": [], "x": 0}"#
        )
        .is_err());
        let polytope = r#"{"kind": "separable", "factors": [{"body": {"kind": "polytope",
            "vertices": [[0,0,0],[1,0,0],[0,1,0],[0,0,1]]}}]}"#;
        let k: KernelSpec = serde_json::from_str(polytope).unwrap();
        assert!(matches!(k.decomposition(3, 1), Err(CliError::Input(_))));
    }
}
