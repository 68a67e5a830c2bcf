//! Seeded invariant checks over the geometry and pipeline, runnable from
//! the command line.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classify::{DiagnosisLabel, SymptomDomainPartition};
use crate::embed::{embed, EmbeddingParams};
use crate::features::{curvature_trace, DispersionPoint, FeatureParams};
use crate::local_stats::GaussianPoint;
use crate::spd::{
    random_spd, random_tangent, scalar_curvature, scalar_curvature_oracle, scalar_curvature_terms, spd_sqrt,
    sylvester_solve, wasserstein_distance, CurvatureBound, DistanceForm, SpdMatrix,
};
use crate::synth;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult { name, passed, detail }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub mutation: Option<usize>,
    pub checks: Vec<CheckResult>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestConfig {
    pub seed: u64,
    /// Flip the sign of closed-form term 0, 1 or 2 before comparing with
    /// the oracle.
    pub mutation: Option<usize>,
}

fn signs(mutation: Option<usize>) -> [f64; 3] {
    let mut s = [1.0; 3];
    if let Some(i) = mutation {
        s[i % 3] = -1.0;
    }
    s
}

/// Closed-form curvature against the orthonormal-basis sum on 100 SPD(3)
/// and 25 SPD(2) samples, relative tolerance 1e-8.
pub fn oracle_equivalence(seed: u64, mutation: Option<usize>) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs = signs(mutation);
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut failure = None;
    for n in std::iter::repeat_n(3, 100).chain(std::iter::repeat_n(2, 25)) {
        let s = random_spd(&mut rng, n, 0.1);
        let closed = scalar_curvature_terms(&s).map(|t| t.signed_total(signs));
        let oracle = scalar_curvature_oracle(&s);
        match (closed, oracle) {
            (Ok(c), Ok(o)) => worst = worst.max((c - o).abs() / o.abs()),
            (Err(e), _) | (_, Err(e)) => failure = Some(e.to_string()),
        }
    }
    let passed = failure.is_none() && worst <= 1e-8;
    let detail = failure.unwrap_or_else(|| format!("max relative error {worst:.3e} in {:.2?}", start.elapsed()));
    CheckResult::new("curvature closed form matches basis sum", passed, detail)
}

fn curvature_bound(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut violations = 0;
    let mut total = 0;
    for n in [2, 3, 5] {
        for _ in 0..334 {
            let s = random_spd(rng, n, 0.05);
            total += 1;
            let ok = scalar_curvature(&s)
                .ok()
                .zip(CurvatureBound::of(&s).ok())
                .is_some_and(|(rho, b)| b.contains(rho));
            if !ok {
                violations += 1;
            }
        }
    }
    CheckResult::new(
        "0 < curvature < 3n(n-1)/λ_min2",
        violations == 0,
        format!("{violations} violations in {total} samples"),
    )
}

fn homogeneity(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let s = random_spd(rng, 3, 0.1);
        let rho = scalar_curvature(&s).unwrap_or(f64::NAN);
        for c in [0.1, 2.0, 10.0] {
            let scaled = s.scaled(c).and_then(|m| scalar_curvature(&m)).unwrap_or(f64::NAN);
            worst = worst.max((c * scaled - rho).abs() / rho);
        }
    }
    CheckResult::new(
        "c·ρ(cS) = ρ(S)",
        worst <= 1e-10,
        format!("max relative error {worst:.3e}"),
    )
}

fn sylvester_and_sqrt(rng: &mut ChaCha8Rng) -> CheckResult {
    let (mut worst_res, mut worst_sqrt) = (0.0_f64, 0.0_f64);
    for i in 0..1000 {
        let n = 2 + i % 4;
        let s = random_spd(rng, n, 0.1);
        let y = random_tangent(rng, n);
        if let Ok(g) = sylvester_solve(&s, &y) {
            let (m, gm) = (s.matrix(), g.as_matrix());
            let r = (m * gm + gm * m - y.as_matrix()).norm() / y.as_matrix().norm();
            worst_res = worst_res.max(r);
        } else {
            worst_res = f64::INFINITY;
        }
        let root = spd_sqrt(&s);
        let back = root.matrix() * root.matrix();
        worst_sqrt = worst_sqrt.max((back - s.matrix()).norm() / s.matrix().norm());
    }
    CheckResult::new(
        "Sylvester residual and square root",
        worst_res <= 1e-10 && worst_sqrt <= 1e-10,
        format!("residual {worst_res:.3e}, sqrt {worst_sqrt:.3e}"),
    )
}

fn wasserstein_cases(rng: &mut ChaCha8Rng) -> CheckResult {
    let mut errs = Vec::new();
    for n in [2, 3, 5] {
        let s = random_spd(rng, n, 0.1);
        let mu = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let g = |mean: DVector<f64>, cov: SpdMatrix| GaussianPoint { mean, covariance: cov };
        let same = wasserstein_distance(
            &g(mu.clone(), s.clone()),
            &g(mu.clone(), s.clone()),
            DistanceForm::Additive,
        );
        errs.push(same.map_or(f64::INFINITY, |d| d.abs()));
        let id = SpdMatrix::identity(n);
        let four = SpdMatrix::new(DMatrix::identity(n, n) * 4.0).expect("4I");
        let zero = DVector::zeros(n);
        let w = wasserstein_distance(&g(zero.clone(), id), &g(zero, four), DistanceForm::Additive);
        errs.push(w.map_or(f64::INFINITY, |d| (d - (n as f64).sqrt()).abs()));
        let nu = DVector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let shift = (&mu - &nu).norm();
        let w = wasserstein_distance(&g(mu, s.clone()), &g(nu, s), DistanceForm::Additive);
        errs.push(w.map_or(f64::INFINITY, |d| (d - shift).abs()));
    }
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    CheckResult::new(
        "Wasserstein analytic cases",
        worst <= 1e-12,
        format!("max error {worst:.3e}"),
    )
}

fn pipeline_counts() -> CheckResult {
    let beat = synth::standard_beat();
    let params = FeatureParams::default();
    let cloud = embed(&params.amplitude.apply(&beat.samples), &EmbeddingParams::default());
    let a = curvature_trace(&beat.samples, &params);
    let b = curvature_trace(&beat.samples, &params);
    let (passed, detail) = match (cloud, a, b) {
        (Ok(c), Ok(a), Ok(b)) => {
            let same = a
                .curvature
                .values()
                .iter()
                .zip(b.curvature.values())
                .all(|(x, y)| x.to_bits() == y.to_bits());
            (
                c.len() == 289 && a.spd.len() == 289 && same,
                format!(
                    "{} embedded, {} SPD points, repeat identical: {same}",
                    c.len(),
                    a.spd.len()
                ),
            )
        }
        _ => (false, "pipeline failed on the standard beat".into()),
    };
    CheckResult::new("289 points per beat, deterministic", passed, detail)
}

fn partition_totality() -> CheckResult {
    let p = SymptomDomainPartition::default();
    let mut seen = std::collections::BTreeSet::new();
    let mut count = 0;
    for i in 0..=400 {
        for j in 0..=600 {
            let label = p.classify(DispersionPoint::new(i as f64 * 0.5, j as f64 * 0.5));
            seen.insert(label);
            count += 1;
        }
    }
    let passed = seen.len() == DiagnosisLabel::ALL.len();
    CheckResult::new(
        "domain partition labels every point",
        passed,
        format!("{count} grid points, {} distinct labels", seen.len()),
    )
}

fn normal_range() -> CheckResult {
    let beat = synth::standard_beat();
    match curvature_trace(&beat.samples, &FeatureParams::default()) {
        Ok(t) => {
            let frac = t.curvature.fraction_within(0.0, 200.0);
            CheckResult::new(
                "normal beat curvature within [0, 200]",
                frac >= 0.95,
                format!("{:.1}% inside", 100.0 * frac),
            )
        }
        Err(e) => CheckResult::new("normal beat curvature within [0, 200]", false, e.to_string()),
    }
}

/// Run every check.
pub fn run(config: &SelftestConfig) -> SelftestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let oracle_seed = rng.random();
    let checks = vec![
        oracle_equivalence(oracle_seed, config.mutation),
        curvature_bound(&mut rng),
        homogeneity(&mut rng),
        sylvester_and_sqrt(&mut rng),
        wasserstein_cases(&mut rng),
        pipeline_counts(),
        normal_range(),
        partition_totality(),
    ];
    SelftestReport {
        seed: config.seed,
        mutation: config.mutation,
        checks,
    }
}
