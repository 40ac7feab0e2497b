//! Linear projection of instances to 2D fit by alternating least squares:
//! minimize the joint feature- and outcome-reconstruction error
//! ||F - B Z||^2 + ||Y - C Z||^2 subject to Z = A F, over seeded restarts.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeding::derive_seed;

const MAX_ITERS: usize = 1000;
const REL_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PilotError {
    #[error("fitting requires at least 3 instances, got {0}")]
    TooFewInstances(usize),
    #[error("fitting requires at least 2 features, got {0}")]
    TooFewFeatures(usize),
    #[error("fewer than 2 features vary; {0} constant feature(s) dropped")]
    TooFewVaryingFeatures(usize),
    #[error("feature/outcome length mismatch: {features} vs {outcomes}")]
    LengthMismatch { features: usize, outcomes: usize },
    #[error("feature count mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("every restart diverged; objective traces: {0:?}")]
    Diverged(Vec<Vec<f64>>),
}

/// Per-feature standardization captured at fit time. Constant input columns
/// are dropped from the fit; `kept` maps model columns back to input columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub kept: Vec<usize>,
    pub input_dim: usize,
}

/// Fitted projection: A maps standardized features to 2D, B maps 2D back to
/// feature estimates, C maps 2D to an outcome estimate. Z holds the training
/// coordinates and always equals the projection of the training features.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub z: Vec<[f64; 2]>,
    pub objective: f64,
    pub standardization: Standardization,
    pub seed: u64,
    pub objective_trace: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    z: Vec<[f64; 2]>,
    objective: f64,
    standardization: Standardization,
    seed: u64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

fn from_rows(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(nr, nc, |r, c| rows[r][c])
}

impl ProjectionModel {
    /// Feature count the model expects from `project`.
    pub fn input_dim(&self) -> usize {
        self.standardization.input_dim
    }

    pub fn to_json(&self) -> String {
        let doc = ModelJson {
            a: rows(&self.a),
            b: rows(&self.b),
            c: rows(&self.c),
            z: self.z.clone(),
            objective: self.objective,
            standardization: self.standardization.clone(),
            seed: self.seed,
        };
        serde_json::to_string_pretty(&doc).expect("model serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let doc: ModelJson = serde_json::from_str(text)?;
        Ok(Self {
            a: from_rows(&doc.a),
            b: from_rows(&doc.b),
            c: from_rows(&doc.c),
            z: doc.z,
            objective: doc.objective,
            standardization: doc.standardization,
            seed: doc.seed,
            objective_trace: Vec::new(),
        })
    }
}

/// Moore-Penrose pseudo-inverse via SVD with a relative cutoff.
fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = 1e-12 * max_sv.max(1e-300);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let mut sigma_inv = DMatrix::zeros(vt.nrows(), u.ncols());
    for (i, &sv) in svd.singular_values.iter().enumerate() {
        if sv > cutoff {
            sigma_inv[(i, i)] = 1.0 / sv;
        }
    }
    vt.transpose() * sigma_inv * u.transpose()
}

struct Standardized {
    /// n_kept x i matrix of z-scored features, one column per instance.
    f: DMatrix<f64>,
    standardization: Standardization,
}

fn standardize(features: &DMatrix<f64>) -> Standardized {
    let (n_rows, n_cols) = (features.nrows(), features.ncols());
    let mut means = Vec::with_capacity(n_cols);
    let mut stds = Vec::with_capacity(n_cols);
    let mut kept = Vec::new();
    for c in 0..n_cols {
        let col: Vec<f64> = features.column(c).iter().copied().collect();
        let (mean, std) = crate::dataset::column_mean_std(&col);
        if std > 0.0 {
            kept.push(c);
            means.push(mean);
            stds.push(std);
        } else {
            log::warn!("dropping constant feature column {c} from projection fit");
        }
    }
    let mut f = DMatrix::zeros(kept.len(), n_rows);
    for (row, (&c, (&mean, &std))) in kept.iter().zip(means.iter().zip(&stds)).enumerate() {
        for r in 0..n_rows {
            f[(row, r)] = (features[(r, c)] - mean) / std;
        }
    }
    Standardized {
        f,
        standardization: Standardization {
            means,
            stds,
            kept,
            input_dim: n_cols,
        },
    }
}

fn objective_value(
    f: &DMatrix<f64>,
    y: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> f64 {
    let z = a * f;
    let feat_err = f - b * &z;
    let out_err = y - c * &z;
    feat_err.norm_squared() + out_err.norm_squared()
}

struct RestartResult {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    objective: f64,
    trace: Vec<f64>,
}

fn run_restart(f: &DMatrix<f64>, y: &DMatrix<f64>, seed: u64) -> RestartResult {
    let n = f.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (n as f64).sqrt();
    let mut a = DMatrix::from_fn(2, n, |_, _| {
        let v: f64 = rng.sample(StandardNormal);
        v * scale
    });
    // stacked target [F; Y] reconstructed by [B; C] * A * F
    let mut t = DMatrix::zeros(n + 1, f.ncols());
    t.view_mut((0, 0), (n, f.ncols())).copy_from(f);
    t.view_mut((n, 0), (1, f.ncols())).copy_from(y);
    let ompf = f * f.transpose(); // n x n Gram matrix
    let ompf_pinv = pinv(&ompf);
    let tft = &t * f.transpose(); // (n+1) x n, constant across iterations

    let mut b = DMatrix::zeros(n, 2);
    let mut c = DMatrix::zeros(1, 2);
    let mut trace = Vec::new();
    let mut prev: Option<f64> = None;
    for _ in 0..MAX_ITERS {
        // closed-form B, C given A: ordinary least squares on Z
        let z = &a * f;
        let zzt_pinv = pinv(&(&z * z.transpose()));
        b = f * z.transpose() * &zzt_pinv;
        c = y * z.transpose() * &zzt_pinv;
        trace.push(objective_value(f, y, &a, &b, &c));

        // least-squares A given B, C on the substituted objective
        let mut g = DMatrix::zeros(n + 1, 2);
        g.view_mut((0, 0), (n, 2)).copy_from(&b);
        g.view_mut((n, 0), (1, 2)).copy_from(&c);
        let gtg_pinv = pinv(&(g.transpose() * &g));
        a = gtg_pinv * g.transpose() * &tft * &ompf_pinv;
        let obj = objective_value(f, y, &a, &b, &c);
        trace.push(obj);

        if !obj.is_finite() {
            break;
        }
        if let Some(p) = prev {
            if (p - obj).abs() <= REL_TOL * p.abs().max(1e-12) {
                break;
            }
        }
        prev = Some(obj);
    }
    let objective = *trace.last().expect("at least one iteration");
    RestartResult {
        a,
        b,
        c,
        objective,
        trace,
    }
}

/// Fit the projection with `restarts` seeded initializations of A, keeping
/// the model with the lowest final objective (ties broken by restart index).
pub fn fit_pilot(
    features: &DMatrix<f64>,
    outcomes: &[u8],
    restarts: usize,
    seed: u64,
) -> Result<ProjectionModel, PilotError> {
    if features.nrows() < 3 {
        return Err(PilotError::TooFewInstances(features.nrows()));
    }
    if features.ncols() < 2 {
        return Err(PilotError::TooFewFeatures(features.ncols()));
    }
    if features.nrows() != outcomes.len() {
        return Err(PilotError::LengthMismatch {
            features: features.nrows(),
            outcomes: outcomes.len(),
        });
    }
    let std = standardize(features);
    if std.standardization.kept.len() < 2 {
        return Err(PilotError::TooFewVaryingFeatures(
            features.ncols() - std.standardization.kept.len(),
        ));
    }
    let y = DMatrix::from_fn(1, outcomes.len(), |_, c| f64::from(outcomes[c]));

    let results: Vec<RestartResult> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| run_restart(&std.f, &y, derive_seed(seed, r as u64)))
        .collect();
    let best = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.objective.is_finite())
        .min_by(|(i, x), (j, y)| {
            x.objective
                .partial_cmp(&y.objective)
                .unwrap()
                .then(i.cmp(j))
        })
        .map(|(i, _)| i);
    let Some(best) = best else {
        return Err(PilotError::Diverged(
            results.into_iter().map(|r| r.trace).collect(),
        ));
    };
    let r = &results[best];

    // The objective is invariant under (A, B, C) -> (D A, B D^-1, C D^-1)
    // for any invertible 2x2 D, so the optimum's scale and shear are
    // arbitrary; only an orthogonal ambiguity is inherent. Canonicalize so
    // B has orthonormal columns (QR with positive diagonal): distances in Z
    // then equal distances of the feature reconstruction, making areas
    // comparable across fits. Any invertible D preserves the objective
    // exactly, so a regularized R keeps the identity B D^-1 D A = B A.
    let mut a = r.a.clone();
    let mut b = r.b.clone();
    let mut c = r.c.clone();
    let qr = b.clone().qr();
    let mut rmat = qr.r();
    let dmax = rmat[(0, 0)].abs().max(rmat[(1, 1)].abs());
    if dmax > 0.0 {
        for k in 0..2 {
            if rmat[(k, k)] < 0.0 {
                for col in 0..2 {
                    rmat[(k, col)] = -rmat[(k, col)];
                }
            }
            if rmat[(k, k)] < 1e-9 * dmax {
                rmat[(k, k)] = 1e-9 * dmax;
            }
        }
        let rmat_inv = rmat
            .clone()
            .try_inverse()
            .expect("regularized triangular matrix is invertible");
        a = &rmat * a;
        b *= &rmat_inv;
        c *= &rmat_inv;
    }
    let z_mat = &a * &std.f;
    let z = (0..z_mat.ncols())
        .map(|i| [z_mat[(0, i)], z_mat[(1, i)]])
        .collect();
    let objective = objective_value(&std.f, &y, &a, &b, &c);
    Ok(ProjectionModel {
        a,
        b,
        c,
        z,
        objective,
        standardization: std.standardization,
        seed,
        objective_trace: r.trace.clone(),
    })
}

/// Project raw feature rows through the stored standardization and A.
pub fn project(model: &ProjectionModel, raw: &DMatrix<f64>) -> Result<Vec<[f64; 2]>, PilotError> {
    if raw.ncols() != model.input_dim() {
        return Err(PilotError::DimensionMismatch {
            expected: model.input_dim(),
            got: raw.ncols(),
        });
    }
    let s = &model.standardization;
    let mut coords = Vec::with_capacity(raw.nrows());
    for r in 0..raw.nrows() {
        let mut p = [0.0f64; 2];
        for (col, (&src, (&mean, &std))) in
            s.kept.iter().zip(s.means.iter().zip(&s.stds)).enumerate()
        {
            let v = (raw[(r, src)] - mean) / std;
            p[0] += model.a[(0, col)] * v;
            p[1] += model.a[(1, col)] * v;
        }
        coords.push(p);
    }
    Ok(coords)
}

/// Evaluate the fitted objective on arbitrary raw features and outcomes.
pub fn pilot_objective(
    model: &ProjectionModel,
    features: &DMatrix<f64>,
    outcomes: &[u8],
) -> Result<f64, PilotError> {
    if features.ncols() != model.input_dim() {
        return Err(PilotError::DimensionMismatch {
            expected: model.input_dim(),
            got: features.ncols(),
        });
    }
    if features.nrows() != outcomes.len() {
        return Err(PilotError::LengthMismatch {
            features: features.nrows(),
            outcomes: outcomes.len(),
        });
    }
    let s = &model.standardization;
    let mut f = DMatrix::zeros(s.kept.len(), features.nrows());
    for (row, (&src, (&mean, &std))) in s.kept.iter().zip(s.means.iter().zip(&s.stds)).enumerate()
    {
        for r in 0..features.nrows() {
            f[(row, r)] = (features[(r, src)] - mean) / std;
        }
    }
    let y = DMatrix::from_fn(1, outcomes.len(), |_, c| f64::from(outcomes[c]));
    Ok(objective_value(&f, &y, &model.a, &model.b, &model.c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn exactly_representable_case_reaches_zero() {
        // Y is a linear function of the two standardized features.
        let features = random_matrix(40, 2, 9);
        let std = standardize(&features);
        let outcomes_f: Vec<f64> = (0..40)
            .map(|i| 0.3 * std.f[(0, i)] - 0.7 * std.f[(1, i)])
            .collect();
        // fit against the float targets via a custom Y by reusing run_restart
        let y = DMatrix::from_fn(1, 40, |_, c| outcomes_f[c]);
        let r = run_restart(&std.f, &y, 1);
        assert!(r.objective < 1e-6, "objective {}", r.objective);
    }

    #[test]
    fn constant_zero_outcome_gives_zero_c() {
        let features = random_matrix(60, 3, 4);
        let outcomes = vec![0u8; 60];
        let model = fit_pilot(&features, &outcomes, 3, 7).unwrap();
        assert!(model.c.iter().all(|v| v.abs() < 1e-3), "c = {}", model.c);
    }

    #[test]
    fn fit_is_deterministic() {
        let features = random_matrix(30, 4, 15);
        let outcomes: Vec<u8> = (0..30).map(|i| u8::from(i % 3 == 0)).collect();
        let m1 = fit_pilot(&features, &outcomes, 5, 99).unwrap();
        let m2 = fit_pilot(&features, &outcomes, 5, 99).unwrap();
        assert_eq!(m1.a, m2.a);
        assert_eq!(m1.b, m2.b);
        assert_eq!(m1.c, m2.c);
        assert_eq!(m1.to_json(), m2.to_json());
    }

    #[test]
    fn objective_trace_is_non_increasing() {
        for seed in 0..10u64 {
            let features = random_matrix(50, 5, seed);
            let outcomes: Vec<u8> = (0..50).map(|i| u8::from((i * seed as usize) % 4 == 0)).collect();
            let model = fit_pilot(&features, &outcomes, 2, seed).unwrap();
            for w in model.objective_trace.windows(2) {
                assert!(
                    w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0),
                    "trace increased: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }
    }

    #[test]
    fn perturbing_a_does_not_decrease_objective() {
        let features = random_matrix(40, 3, 21);
        let outcomes: Vec<u8> = (0..40).map(|i| u8::from(i % 2 == 0)).collect();
        let model = fit_pilot(&features, &outcomes, 3, 5).unwrap();
        let base = pilot_objective(&model, &features, &outcomes).unwrap();
        for r in 0..2 {
            for c in 0..model.a.ncols() {
                for delta in [1e-5, -1e-5] {
                    let mut m = model.clone();
                    m.a[(r, c)] += delta;
                    let perturbed = pilot_objective(&m, &features, &outcomes).unwrap();
                    assert!(
                        perturbed >= base - 1e-7,
                        "perturbation decreased objective: {base} -> {perturbed}"
                    );
                }
            }
        }
    }

    #[test]
    fn projecting_training_rows_reproduces_z() {
        let features = random_matrix(25, 3, 33);
        let outcomes: Vec<u8> = (0..25).map(|i| u8::from(i % 5 == 0)).collect();
        let model = fit_pilot(&features, &outcomes, 2, 3).unwrap();
        let coords = project(&model, &features).unwrap();
        for (p, q) in coords.iter().zip(&model.z) {
            assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_row_projects_to_origin_and_reflection_negates() {
        let features = random_matrix(30, 3, 8);
        let outcomes: Vec<u8> = (0..30).map(|i| u8::from(i % 2 == 0)).collect();
        let model = fit_pilot(&features, &outcomes, 2, 17).unwrap();
        let means = &model.standardization.means;
        let mean_row = DMatrix::from_fn(1, 3, |_, c| means[c]);
        let p = project(&model, &mean_row).unwrap()[0];
        assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12);

        let x = DMatrix::from_fn(1, 3, |_, c| features[(4, c)]);
        let reflected = DMatrix::from_fn(1, 3, |_, c| 2.0 * means[c] - features[(4, c)]);
        let px = project(&model, &x).unwrap()[0];
        let pr = project(&model, &reflected).unwrap()[0];
        assert!((px[0] + pr[0]).abs() < 1e-9 && (px[1] + pr[1]).abs() < 1e-9);
    }

    #[test]
    fn objective_with_zero_b_c_is_total_norm() {
        let features = random_matrix(20, 3, 40);
        let outcomes: Vec<u8> = (0..20).map(|i| u8::from(i % 4 == 0)).collect();
        let mut model = fit_pilot(&features, &outcomes, 1, 2).unwrap();
        model.b.fill(0.0);
        model.c.fill(0.0);
        let got = pilot_objective(&model, &features, &outcomes).unwrap();
        let std = standardize(&features);
        let y_norm: f64 = outcomes.iter().map(|&v| f64::from(v) * f64::from(v)).sum();
        let expected = std.f.norm_squared() + y_norm;
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn objective_matches_naive_double_loop() {
        let features = random_matrix(15, 3, 50);
        let outcomes: Vec<u8> = (0..15).map(|i| u8::from(i % 3 == 0)).collect();
        let model = fit_pilot(&features, &outcomes, 2, 11).unwrap();
        let got = pilot_objective(&model, &features, &outcomes).unwrap();

        // independent evaluation of both Frobenius norms
        let s = &model.standardization;
        let n = s.kept.len();
        let rows = features.nrows();
        let mut f = vec![vec![0.0; rows]; n];
        for (row, &src) in s.kept.iter().enumerate() {
            for r in 0..rows {
                f[row][r] = (features[(r, src)] - s.means[row]) / s.stds[row];
            }
        }
        let mut z = vec![[0.0f64; 2]; rows];
        for (i, zi) in z.iter_mut().enumerate() {
            for d in 0..2 {
                let mut acc = 0.0;
                for row in 0..n {
                    acc += model.a[(d, row)] * f[row][i];
                }
                zi[d] = acc;
            }
        }
        let mut expected = 0.0;
        for row in 0..n {
            for i in 0..rows {
                let recon = model.b[(row, 0)] * z[i][0] + model.b[(row, 1)] * z[i][1];
                let d = f[row][i] - recon;
                expected += d * d;
            }
        }
        for (i, zi) in z.iter().enumerate() {
            let recon = model.c[(0, 0)] * zi[0] + model.c[(0, 1)] * zi[1];
            let d = f64::from(outcomes[i]) - recon;
            expected += d * d;
        }
        assert!((got - expected).abs() < 1e-10, "{got} vs {expected}");
    }

    #[test]
    fn constant_features_are_dropped() {
        let mut features = random_matrix(20, 3, 60);
        for r in 0..20 {
            features[(r, 1)] = 4.0;
        }
        let outcomes: Vec<u8> = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
        let model = fit_pilot(&features, &outcomes, 2, 1).unwrap();
        assert_eq!(model.standardization.kept, vec![0, 2]);
        assert_eq!(model.input_dim(), 3);
        assert!(project(&model, &features).is_ok());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let features = random_matrix(20, 3, 70);
        let outcomes: Vec<u8> = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
        let model = fit_pilot(&features, &outcomes, 1, 1).unwrap();
        let wrong = random_matrix(5, 4, 71);
        assert!(matches!(
            project(&model, &wrong),
            Err(PilotError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn model_json_round_trips() {
        let features = random_matrix(20, 3, 80);
        let outcomes: Vec<u8> = (0..20).map(|i| u8::from(i % 2 == 0)).collect();
        let model = fit_pilot(&features, &outcomes, 2, 13).unwrap();
        let json = model.to_json();
        let back = ProjectionModel::from_json(&json).unwrap();
        assert_eq!(model.a, back.a);
        assert_eq!(model.b, back.b);
        assert_eq!(model.c, back.c);
        assert_eq!(model.z, back.z);
        assert_eq!(json, back.to_json());
    }

    #[test]
    fn topology_is_preserved_for_planar_data() {
        // features depend linearly on 2 latent coordinates
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60;
        let latent: Vec<[f64; 2]> = (0..n)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let mixing: Vec<[f64; 2]> = (0..5)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let features = DMatrix::from_fn(n, 5, |r, c| {
            mixing[c][0] * latent[r][0] + mixing[c][1] * latent[r][1]
        });
        let outcomes: Vec<u8> = latent.iter().map(|l| u8::from(l[0] + l[1] > 0.0)).collect();
        let model = fit_pilot(&features, &outcomes, 5, 3).unwrap();

        let mut high = Vec::new();
        let mut low = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let mut dh = 0.0;
                for c in 0..5 {
                    let d = features[(i, c)] - features[(j, c)];
                    dh += d * d;
                }
                high.push(dh.sqrt());
                let dz = [
                    model.z[i][0] - model.z[j][0],
                    model.z[i][1] - model.z[j][1],
                ];
                low.push((dz[0] * dz[0] + dz[1] * dz[1]).sqrt());
            }
        }
        let rho = crate::experiments::spearman(&high, &low).unwrap().rho;
        assert!(rho >= 0.9, "topology probe rho = {rho}");
    }
}
