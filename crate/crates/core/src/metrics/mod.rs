//! Distribution distances and generated-molecule quality scores.

mod chem;
mod tables;

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::molgraph::{
    canonical_key, fingerprint, tanimoto, DenseGraph, MolecularGraph, ATOM_TYPES, BOND_TYPES, N_MAX,
};

pub use chem::{
    drug_candidate_from_components, drug_candidate_score, logp, molecular_weight, np_score, qed,
    qed_from_properties, qed_properties, rotatable_bonds, sa_penalty, sa_score, EnvironmentTable,
    NpModel, QedProperties,
};
pub use tables::{Hump, ScoreTables, TABLE_VERSION};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("sample sets differ in size: {0} vs {1}")]
    UnequalSamples(usize, usize),
    #[error("covariance matrix is not symmetric positive semi-definite")]
    NotPsd,
    #[error("eigendecomposition did not converge")]
    Eigen,
    #[error("molecule is not chemically valid")]
    InvalidMolecule,
    #[error("score table: {0}")]
    Table(String),
}

/// Width of [`batch_embed`] rows: atom distributions followed by the
/// upper-triangle bond distributions.
pub const EMBED_WIDTH: usize = N_MAX * ATOM_TYPES + N_MAX * (N_MAX - 1) / 2 * BOND_TYPES;

/// Flattening shared by the critic input and the Fréchet embedding.
pub trait Embed {
    fn embed(&self) -> Vec<f64>;
}

impl Embed for DenseGraph {
    fn embed(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(EMBED_WIDTH);
        for row in self.atom_probs() {
            v.extend_from_slice(row);
        }
        for i in 0..N_MAX {
            for j in i + 1..N_MAX {
                v.extend_from_slice(self.bond_probs(i, j));
            }
        }
        v
    }
}

impl Embed for MolecularGraph {
    fn embed(&self) -> Vec<f64> {
        DenseGraph::from_graph(self).embed()
    }
}

/// One embedding row per molecule.
pub fn batch_embed<T: Embed>(mols: &[T]) -> Result<Vec<Vec<f64>>, MetricsError> {
    if mols.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    Ok(mols.iter().map(Embed::embed).collect())
}

/// Mean and covariance of a batch of embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStatistics {
    mean: Vec<f64>,
    cov: DMatrix<f64>,
}

impl BatchStatistics {
    /// Checks symmetry (1e-12) and that no eigenvalue is below −1e-9.
    pub fn new(mean: Vec<f64>, cov: DMatrix<f64>) -> Result<Self, MetricsError> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(MetricsError::Dimension(d, cov.nrows()));
        }
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(MetricsError::NotPsd);
                }
            }
        }
        let eig = SymmetricEigen::try_new(cov.clone(), 1e-14, 0).ok_or(MetricsError::Eigen)?;
        if eig.eigenvalues.iter().any(|&l| l < -1e-9) {
            return Err(MetricsError::NotPsd);
        }
        Ok(Self { mean, cov })
    }

    /// Sample mean and unbiased covariance. A single row gives a zero
    /// covariance.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricsError> {
        let n = rows.len();
        if n == 0 {
            return Err(MetricsError::EmptyBatch);
        }
        let d = rows[0].len();
        if let Some(r) = rows.iter().find(|r| r.len() != d) {
            return Err(MetricsError::Dimension(d, r.len()));
        }
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut cov = DMatrix::zeros(d, d);
        if n == 1 {
            log::warn!("covariance of a single sample; using zero covariance");
        } else {
            let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
            cov = centered.transpose() * &centered / (n as f64 - 1.0);
            // exact symmetry
            for i in 0..d {
                for j in 0..i {
                    let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                }
            }
        }
        Ok(Self { mean, cov })
    }

    pub fn of_batch<T: Embed>(mols: &[T]) -> Result<Self, MetricsError> {
        Self::from_rows(&batch_embed(mols)?)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

fn symmetric_eigen(m: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, MetricsError> {
    SymmetricEigen::try_new(m, 1e-15, 0).ok_or(MetricsError::Eigen)
}

/// Square root of a PSD matrix, negative eigenvalues clamped to 0.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, MetricsError> {
    let eig = symmetric_eigen(m.clone())?;
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&root) * v.transpose())
}

/// Squared Fréchet distance between the Gaussians fitted to two batches:
/// `‖m − m_w‖² + Tr(C + C_w − 2 (C C_w)^{1/2})`, with the cross term
/// evaluated as `Tr((C^{1/2} C_w C^{1/2})^{1/2})`.
pub fn frechet_distance(real: &BatchStatistics, fake: &BatchStatistics) -> Result<f64, MetricsError> {
    FrechetReference::new(real.clone())?.distance(fake)
}

/// Real-side statistics with `C^{1/2}` cached, for repeated distances
/// against one fixed reference batch.
#[derive(Debug, Clone)]
pub struct FrechetReference {
    stats: BatchStatistics,
    sqrt_cov: DMatrix<f64>,
}

impl FrechetReference {
    pub fn new(stats: BatchStatistics) -> Result<Self, MetricsError> {
        let sqrt_cov = psd_sqrt(&stats.cov)?;
        Ok(Self { stats, sqrt_cov })
    }

    pub fn stats(&self) -> &BatchStatistics {
        &self.stats
    }

    pub fn distance(&self, fake: &BatchStatistics) -> Result<f64, MetricsError> {
        let real = &self.stats;
        if real.dim() != fake.dim() {
            return Err(MetricsError::Dimension(real.dim(), fake.dim()));
        }
        let mean_term: f64 = real
            .mean
            .iter()
            .zip(&fake.mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let s = &self.sqrt_cov;
        let mut inner = s * &fake.cov * s;
        inner = (&inner + inner.transpose()) * 0.5;
        let cross: f64 = symmetric_eigen(inner)?
            .eigenvalues
            .iter()
            .map(|l| l.max(0.0).sqrt())
            .sum();
        let d2 = mean_term + real.cov.trace() + fake.cov.trace() - 2.0 * cross;
        Ok(d2.max(0.0))
    }
}

/// Empirical 1-D Wasserstein-1 distance between equal-size samples: mean
/// absolute difference of the sorted values.
pub fn wasserstein1_1d(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    if a.len() != b.len() {
        return Err(MetricsError::UnequalSamples(a.len(), b.len()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    Ok(x.iter().zip(&y).map(|(p, q)| (p - q).abs()).sum::<f64>() / x.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchQuality {
    pub validity: f64,
    pub uniqueness: f64,
    pub novelty: f64,
    pub diversity: f64,
}

/// Validity, uniqueness, novelty (all relative to the generated count) and
/// diversity = 1 − mean pairwise Tanimoto over the valid molecules.
pub fn batch_quality(
    mols: &[MolecularGraph],
    training_keys: &HashSet<Vec<u8>>,
) -> Result<BatchQuality, MetricsError> {
    if mols.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let total = mols.len() as f64;
    let valid: Vec<&MolecularGraph> = mols.iter().filter(|m| m.is_valid()).collect();
    let keys: Vec<Vec<u8>> = valid
        .iter()
        .map(|m| canonical_key(m).expect("valid"))
        .collect();
    let distinct: HashSet<&Vec<u8>> = keys.iter().collect();
    let novel = keys.iter().filter(|k| !training_keys.contains(*k)).count();

    let diversity = if valid.len() < 2 {
        0.0
    } else {
        let fps: Vec<_> = valid.iter().map(|m| fingerprint(m).expect("valid")).collect();
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..fps.len() {
            for j in i + 1..fps.len() {
                sum += tanimoto(&fps[i], &fps[j]);
                pairs += 1;
            }
        }
        1.0 - sum / pairs as f64
    };
    Ok(BatchQuality {
        validity: valid.len() as f64 / total,
        uniqueness: distinct.len() as f64 / total,
        novelty: novel as f64 / total,
        diversity,
    })
}

/// Everything needed to score generated molecules against a training split.
#[derive(Debug, Clone)]
pub struct ChemContext {
    pub tables: ScoreTables,
    pub training_keys: HashSet<Vec<u8>>,
    pub training_envs: EnvironmentTable,
    pub np: NpModel,
}

impl ChemContext {
    /// Builds keys and environment tables from `training`, using the
    /// oxygen-rich subset as the NP reference split.
    pub fn from_training(training: &[MolecularGraph], tables: ScoreTables) -> Self {
        Self {
            tables,
            training_keys: training.iter().filter_map(|g| canonical_key(g).ok()).collect(),
            training_envs: EnvironmentTable::from_graphs(training),
            np: NpModel::oxygen_rich_reference(training),
        }
    }
}

/// Mean chem scores over a batch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChemScores {
    pub np_score: f64,
    pub qed_score: f64,
    pub logp_score: f64,
    pub sa_score: f64,
    pub drug_candidate_score: f64,
}

/// NP/QED/logP/SA are averaged over valid molecules (neutral values 0, 0,
/// 0, 10 when none are valid); the drug-candidate score is averaged over
/// all molecules, invalid ones counting 0.
pub fn chem_scores(mols: &[MolecularGraph], ctx: &ChemContext) -> Result<ChemScores, MetricsError> {
    if mols.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let t = &ctx.tables;
    let valid: Vec<&MolecularGraph> = mols.iter().filter(|m| m.is_valid()).collect();
    let mean = |f: &dyn Fn(&MolecularGraph) -> f64, empty: f64| {
        if valid.is_empty() {
            empty
        } else {
            valid.iter().map(|m| f(m)).sum::<f64>() / valid.len() as f64
        }
    };
    Ok(ChemScores {
        np_score: mean(&|m| np_score(m, &ctx.np, t).expect("valid"), 0.0),
        qed_score: mean(&|m| qed(m, t).expect("valid"), 0.0),
        logp_score: mean(&|m| logp(m, t).expect("valid"), 0.0),
        sa_score: mean(&|m| sa_score(m, &ctx.training_envs, t).expect("valid"), 10.0),
        drug_candidate_score: mols
            .iter()
            .map(|m| drug_candidate_score(m, &ctx.training_keys, &ctx.training_envs, t))
            .sum::<f64>()
            / mols.len() as f64,
    })
}

/// One row of the architecture comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub label: String,
    pub frechet: f64,
    pub wasserstein: f64,
    pub validity: f64,
    pub uniqueness: f64,
    pub novelty: f64,
    pub diversity: f64,
    pub np_score: f64,
    pub qed_score: f64,
    pub logp_score: f64,
    pub sa_score: f64,
    pub drug_candidate_score: f64,
}

pub const REPORT_CSV_HEADER: &str = "label,frechet,wasserstein,validity,uniqueness,novelty,diversity,np_score,qed_score,logp_score,sa_score,drug_candidate_score";

impl MetricsReport {
    pub fn new(label: impl Into<String>, frechet: f64, wasserstein: f64, q: BatchQuality, c: ChemScores) -> Self {
        Self {
            label: label.into(),
            frechet,
            wasserstein,
            validity: q.validity,
            uniqueness: q.uniqueness,
            novelty: q.novelty,
            diversity: q.diversity,
            np_score: c.np_score,
            qed_score: c.qed_score,
            logp_score: c.logp_score,
            sa_score: c.sa_score,
            drug_candidate_score: c.drug_candidate_score,
        }
    }

    /// Lists every field outside its declared range.
    pub fn range_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, v: f64, lo: f64, hi: f64| {
            if !(v >= lo && v <= hi) {
                out.push(format!("{name} = {v} outside [{lo}, {hi}]"));
            }
        };
        check("frechet", self.frechet, 0.0, f64::INFINITY);
        check("wasserstein", self.wasserstein, 0.0, f64::INFINITY);
        check("validity", self.validity, 0.0, 1.0);
        check("uniqueness", self.uniqueness, 0.0, 1.0);
        check("novelty", self.novelty, 0.0, 1.0);
        check("diversity", self.diversity, 0.0, 1.0);
        check("qed_score", self.qed_score, 0.0, 1.0);
        check("sa_score", self.sa_score, 1.0, 10.0);
        check("drug_candidate_score", self.drug_candidate_score, 0.0, 1.0);
        check("np_score", self.np_score, -5.0, 5.0);
        check("logp_score", self.logp_score, f64::NEG_INFINITY, f64::INFINITY);
        if self.novelty > self.validity || self.uniqueness > self.validity {
            out.push("novelty/uniqueness exceed validity".into());
        }
        out
    }

    pub fn csv_row(&self) -> String {
        let label = if self.label.contains([',', '"', '\n']) {
            format!("\"{}\"", self.label.replace('"', "\"\""))
        } else {
            self.label.clone()
        };
        format!(
            "{label},{},{},{},{},{},{},{},{},{},{},{}",
            self.frechet,
            self.wasserstein,
            self.validity,
            self.uniqueness,
            self.novelty,
            self.diversity,
            self.np_score,
            self.qed_score,
            self.logp_score,
            self.sa_score,
            self.drug_candidate_score
        )
    }
}
