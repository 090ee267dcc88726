//! JSON artifact for a synthesized finite combination of mixed volumes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use valforge::bodies::{BodySpec, ConvexBody};
use valforge::family::{EllipsoidFamily, NormConstant};
use valforge::synthesis::{CombinationTerm, FiniteCombination, Parity};

use crate::config::KernelSpec;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub t: f64,
    pub c: f64,
    pub c_sampled: f64,
    /// Matrices `A` of the ellipsoids `h(x) = sqrt(x^T A x)`, row by row.
    pub matrices: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub alpha: Vec<usize>,
    pub radius: f64,
    pub plus: BodySpec,
    pub minus: BodySpec,
}

/// `mu(K) ~ sum_alpha V(K[k], L+_alpha, E[alpha]) - V(K[k], L-_alpha, E[alpha])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinationArtifact {
    pub n: usize,
    pub k: usize,
    pub parity: Parity,
    pub degree: usize,
    pub kernel: KernelSpec,
    pub mixed_volume_count: usize,
    pub mixed_volume_bound: usize,
    pub family: FamilySpec,
    pub terms: Vec<TermSpec>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix(n: usize, rows: &[Vec<f64>]) -> CliResult<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(CliError::Input(format!("family matrix must be {n}x{n}")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl CombinationArtifact {
    pub fn new(comb: &FiniteCombination, kernel: &KernelSpec, degree: usize) -> Self {
        let family = comb.family();
        Self {
            n: comb.n(),
            k: comb.k(),
            parity: comb.parity(),
            degree,
            kernel: kernel.clone(),
            mixed_volume_count: comb.mixed_volume_count(),
            mixed_volume_bound: comb.mixed_volume_bound(),
            family: FamilySpec {
                t: family.t(),
                c: family.c().certified,
                c_sampled: family.c().sampled,
                matrices: family.matrices().iter().map(rows).collect(),
            },
            terms: comb
                .terms()
                .iter()
                .map(|t| TermSpec {
                    alpha: t.alpha.clone(),
                    radius: t.radius,
                    plus: t.plus.to_spec(),
                    minus: t.minus.to_spec(),
                })
                .collect(),
        }
    }

    /// Rebuilds the combination; `L+` bodies are re-certified on load.
    pub fn combination(&self) -> CliResult<FiniteCombination> {
        let n = self.n;
        let matrices = self
            .family
            .matrices
            .iter()
            .map(|m| matrix(n, m))
            .collect::<CliResult<Vec<_>>>()?;
        let c = NormConstant {
            certified: self.family.c,
            sampled: self.family.c_sampled,
        };
        let family = EllipsoidFamily::from_matrices(n, self.family.t, c, matrices)?;
        let terms = self
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let plus = ConvexBody::from_spec(&t.plus, n)?;
                let minus = ConvexBody::from_spec(&t.minus, n)?;
                let g = plus.perturbation().cloned().ok_or_else(|| {
                    CliError::Input(format!("term {i}: L+ must be a perturbed ball"))
                })?;
                Ok(CombinationTerm {
                    alpha: t.alpha.clone(),
                    g,
                    plus,
                    minus,
                    radius: t.radius,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(FiniteCombination::new(
            n,
            self.k,
            self.parity,
            family,
            terms,
        )?)
    }
}
