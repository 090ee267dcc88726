//! Subcommand implementations. Each returns its stdout text, any files to
//! place in the output directory, and whether its checks passed.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use valforge::bodies::{random_smooth_body, ConvexBody};
use valforge::family::{build_family, dual_frame, spanning_certificate, EllipsoidFamily};
use valforge::functionals::{
    mixed_volume_polytope_route, mixed_volume_quadrature, steiner_coefficients, DEFAULT_LEVELS,
};
use valforge::gw::{divergence_sweep, log_spaced};
use valforge::sphere::{build_grid, SphereGrid};
use valforge::synthesis::{
    synthesize, CombinationEvaluator, FiniteCombination, KernelEvaluator, KernelValuation, Parity,
};

use crate::artifact::CombinationArtifact;
use crate::config::{ExperimentConfig, KernelSpec};
use crate::error::{CliError, CliResult};

pub const DEFAULT_N: usize = 3;
pub const DEFAULT_K: usize = 1;
pub const DEFAULT_DEGREE: usize = 20;
pub const DEFAULT_SYNTHESIS_TOL: f64 = 1e-2;
pub const DEFAULT_TEST_BODIES: usize = 20;
pub const DEFAULT_EPS_SWEEP: &str = "1e-2:1e-5:7";

#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub files: Vec<(String, String)>,
    pub passed: bool,
    /// Short human-readable summary for stderr.
    pub note: Option<String>,
}

/// Flag values after merging with the configuration file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: ExperimentConfig,
    pub n: usize,
    pub k: usize,
    pub degree: usize,
    pub tol: Option<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn new(
        config: ExperimentConfig,
        n: Option<usize>,
        k: Option<usize>,
        degree: Option<usize>,
        tol: Option<f64>,
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> CliResult<Self> {
        let s = Self {
            n: n.or(config.n).unwrap_or(DEFAULT_N),
            k: k.or(config.k).unwrap_or(DEFAULT_K),
            degree: degree.or(config.degree).unwrap_or(DEFAULT_DEGREE),
            tol: tol.or(config.tol),
            seed: seed.or(config.seed).unwrap_or(0),
            out: out.or_else(|| config.out.clone()),
            config,
        };
        if s.n < 2 {
            return Err(CliError::Input(format!(
                "--n must be at least 2, got {}",
                s.n
            )));
        }
        if let Some(t) = s.tol.filter(|t| !(*t > 0.0)) {
            return Err(CliError::Input(format!("--tol must be positive, got {t}")));
        }
        Ok(s)
    }

    fn grid(&self) -> CliResult<SphereGrid> {
        Ok(build_grid(self.n, self.degree)?)
    }
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::input(e.error()))?)
        .map_err(CliError::input)
}

fn all_balls_family(n: usize) -> CliResult<EllipsoidFamily> {
    let real = build_family(n)?;
    let balls = vec![nalgebra::DMatrix::identity(n, n); real.len()];
    Ok(EllipsoidFamily::from_matrices(
        n,
        real.t(),
        real.c(),
        balls,
    )?)
}

pub fn spanning_check(s: &Settings, all_balls: bool) -> CliResult<Output> {
    let family = if all_balls {
        all_balls_family(s.n)?
    } else {
        build_family(s.n)?
    };
    let grid = s.grid()?;
    let (passed, min_sigma, argmin) = match spanning_certificate(&family, &grid) {
        Ok(c) => (true, c.min_sigma, c.argmin_node),
        Err(valforge::Error::SpanningFailure { node, sigma }) => (false, sigma, node),
        Err(e) => return Err(e.into()),
    };
    let report = json!({
        "n": s.n,
        "N": family.len(),
        "t": family.t(),
        "c": family.c().certified,
        "c_sampled": family.c().sampled,
        "degree": grid.degree(),
        "nodes": grid.len(),
        "min_sigma": min_sigma,
        "argmin_node": argmin,
        "argmin_point": grid.nodes()[argmin].iter().collect::<Vec<_>>(),
        "pass": passed,
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    Ok(Output {
        stdout: text.clone(),
        files: vec![("spanning.json".into(), text)],
        passed,
        note: (!passed)
            .then(|| format!("family does not span: min sigma {min_sigma:.3e} at node {argmin}")),
    })
}

pub fn mixed_volume(s: &Settings) -> CliResult<Output> {
    let bodies = s.config.build_bodies(s.n)?;
    if bodies.len() != s.n {
        return Err(CliError::Input(format!(
            "need exactly n = {} bodies, got {}",
            s.n,
            bodies.len()
        )));
    }
    let refs: Vec<&ConvexBody> = bodies.iter().collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut routes: Vec<(&str, valforge::Result<f64>)> = vec![];
    let grid = s.grid()?;
    routes.push(("quadrature", mixed_volume_quadrature(&refs, &grid)));
    routes.push((
        "polytope",
        mixed_volume_polytope_route(&refs, &DEFAULT_LEVELS),
    ));
    let mut values = Vec::new();
    for (name, r) in routes {
        match r {
            Ok(v) => {
                values.push(v);
                rows.push(vec![name.to_string(), v.to_string()]);
            }
            Err(e @ (valforge::Error::InvalidInput(_) | valforge::Error::Unsupported(_))) => {
                skipped.push(format!("{name}: {e}"));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if values.is_empty() {
        return Err(CliError::Input(format!(
            "no route applies: {}",
            skipped.join("; ")
        )));
    }
    let spread = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - values.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    rows.push(vec!["spread".into(), spread.to_string()]);
    let text = csv_string(&["route", "value"], &rows)?;
    Ok(Output {
        stdout: text.clone(),
        files: vec![("mixed_volume.csv".into(), text)],
        passed: true,
        note: (!skipped.is_empty()).then(|| format!("skipped {}", skipped.join("; "))),
    })
}

pub fn steiner(s: &Settings) -> CliResult<Output> {
    let bodies = s.config.build_bodies(s.n)?;
    let [body] = bodies.as_slice() else {
        return Err(CliError::Input(format!(
            "steiner needs exactly one body, got {}",
            bodies.len()
        )));
    };
    let coeffs = steiner_coefficients(body, &s.grid()?)?;
    let rows: Vec<Vec<String>> = coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| vec![j.to_string(), c.to_string()])
        .collect();
    let text = csv_string(&["j", "coefficient"], &rows)?;
    Ok(Output {
        stdout: text.clone(),
        files: vec![("steiner.csv".into(), text)],
        passed: true,
        note: None,
    })
}

struct Verification {
    csv: String,
    max_relative_error: f64,
}

fn verify_against_kernel(
    comb: &FiniteCombination,
    v: &KernelValuation,
    grid: &SphereGrid,
    seed: u64,
    count: usize,
) -> CliResult<Verification> {
    let kernel = KernelEvaluator::new(v, grid)?;
    let eval = CombinationEvaluator::new(comb, grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(count);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let body = random_smooth_body(&mut rng, i, grid)?;
        let a = kernel.evaluate(&body)?;
        let b = eval.evaluate(&body)?;
        let rel = if a == 0.0 {
            (b - a).abs()
        } else {
            (b - a).abs() / a.abs()
        };
        worst = worst.max(rel);
        rows.push(vec![
            i.to_string(),
            format!("{:?}", body.kind()).to_lowercase(),
            a.to_string(),
            b.to_string(),
            rel.to_string(),
        ]);
    }
    let csv = csv_string(
        &[
            "index",
            "kind",
            "kernel_value",
            "combination_value",
            "relative_error",
        ],
        &rows,
    )?;
    Ok(Verification {
        csv,
        max_relative_error: worst,
    })
}

fn verification_output(
    artifact: Option<&CombinationArtifact>,
    comb: &FiniteCombination,
    ver: Verification,
    tol: f64,
) -> CliResult<Output> {
    let passed =
        ver.max_relative_error <= tol && comb.mixed_volume_count() <= comb.mixed_volume_bound();
    let summary = json!({
        "n": comb.n(),
        "k": comb.k(),
        "parity": comb.parity(),
        "mixed_volumes": comb.mixed_volume_count(),
        "bound": comb.mixed_volume_bound(),
        "max_relative_error": ver.max_relative_error,
        "tol": tol,
        "pass": passed,
    });
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    let mut files = vec![
        ("verification.csv".into(), ver.csv),
        ("summary.json".into(), text.clone()),
    ];
    if let Some(a) = artifact {
        files.push((
            "combination.json".into(),
            serde_json::to_string_pretty(a)? + "\n",
        ));
    }
    Ok(Output {
        stdout: text,
        files,
        passed,
        note: (!passed).then(|| {
            format!(
                "max relative error {:.3e} exceeds {tol:e}",
                ver.max_relative_error
            )
        }),
    })
}

fn kernel_spec(s: &Settings) -> CliResult<&KernelSpec> {
    s.config
        .kernel
        .as_ref()
        .ok_or_else(|| CliError::Input("configuration has no kernel".into()))
}

pub fn synthesize_and_verify(
    s: &Settings,
    parity: Option<Parity>,
    test_bodies: Option<usize>,
) -> CliResult<Output> {
    let spec = kernel_spec(s)?;
    if s.k == 0 || s.k >= s.n {
        return Err(CliError::Input(format!(
            "--k must lie in 1..={}, got {}",
            s.n - 1,
            s.k
        )));
    }
    let parity = parity.or(s.config.parity).unwrap_or_default();
    let decomposition = spec.decomposition(s.n, s.n - s.k)?;
    let v = KernelValuation::new(s.k, decomposition, parity)?;
    let family = build_family(s.n)?;
    let grid = s.grid()?;
    let frame = dual_frame(&family, &grid)?;
    let comb = synthesize(&v, &family, &frame, &grid)?;
    let artifact = CombinationArtifact::new(&comb, spec, s.degree);
    let count = test_bodies
        .or(s.config.test_bodies)
        .unwrap_or(DEFAULT_TEST_BODIES);
    let ver = verify_against_kernel(&comb, &v, &grid, s.seed, count)?;
    verification_output(
        Some(&artifact),
        &comb,
        ver,
        s.tol.unwrap_or(DEFAULT_SYNTHESIS_TOL),
    )
}

pub fn verify(
    s: &Settings,
    artifact: &std::path::Path,
    degree: Option<usize>,
    test_bodies: Option<usize>,
) -> CliResult<Output> {
    let text = std::fs::read_to_string(artifact)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", artifact.display())))?;
    let art: CombinationArtifact = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", artifact.display())))?;
    let comb = art.combination()?;
    let decomposition = art.kernel.decomposition(art.n, art.n - art.k)?;
    let v = KernelValuation::new(art.k, decomposition, art.parity)?;
    let grid = build_grid(art.n, degree.unwrap_or(art.degree))?;
    let count = test_bodies
        .or(s.config.test_bodies)
        .unwrap_or(DEFAULT_TEST_BODIES);
    let ver = verify_against_kernel(&comb, &v, &grid, s.seed, count)?;
    verification_output(None, &comb, ver, s.tol.unwrap_or(DEFAULT_SYNTHESIS_TOL))
}

/// Parses `start:stop:count` into log-spaced values.
pub fn parse_sweep(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || {
        CliError::Input(format!(
            "sweep must look like start:stop:count, got {spec:?}"
        ))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let [a, b, c] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    Ok(log_spaced(a, b, c)?)
}

pub fn counterexample(s: &Settings, sweep: Option<&str>, eps: Option<f64>) -> CliResult<Output> {
    let eps_values = match eps {
        Some(e) => vec![e],
        None => parse_sweep(
            sweep
                .or(s.config.eps_sweep.as_deref())
                .unwrap_or(DEFAULT_EPS_SWEEP),
        )?,
    };
    let sweep = divergence_sweep(&eps_values, s.n)?;
    let rows: Vec<Vec<String>> = sweep
        .probes
        .iter()
        .map(|p| {
            vec![
                p.eps.to_string(),
                p.t_value.to_string(),
                p.lower_bound.to_string(),
                p.pass.to_string(),
            ]
        })
        .collect();
    let csv = csv_string(&["eps", "T", "lower_bound", "pass"], &rows)?;
    let plot: String = sweep
        .probes
        .iter()
        .map(|p| format!("{} {}\n", p.eps.log10(), p.t_value.log10()))
        .collect();
    let bounds_pass = sweep.probes.iter().all(|p| p.pass);
    let passed = if sweep.probes.len() > 1 {
        sweep.pass()
    } else {
        bounds_pass
    };
    let summary = json!({
        "n": s.n,
        "points": sweep.probes.len(),
        "slope": if sweep.slope.is_finite() { json!(sweep.slope) } else { json!(null) },
        "slope_pass": sweep.slope_pass,
        "bounds_pass": bounds_pass,
        "pass": passed,
    });
    let note = if sweep.probes.len() > 1 {
        format!(
            "log-log slope {:.4} ({})",
            sweep.slope,
            if sweep.slope_pass {
                "ok"
            } else {
                "outside -0.5 +- 0.05"
            }
        )
    } else {
        format!(
            "single point, lower bound {}",
            if bounds_pass { "holds" } else { "fails" }
        )
    };
    Ok(Output {
        stdout: csv.clone(),
        files: vec![
            ("counterexample.csv".into(), csv),
            ("divergence.dat".into(), plot),
            (
                "summary.json".into(),
                serde_json::to_string_pretty(&summary)? + "\n",
            ),
        ],
        passed,
        note: Some(note),
    })
}
