//! Unigram TF-IDF with smoothed idf and L2-normalized rows, reduced by a seeded
//! randomized truncated SVD (subspace iteration).

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, orthonormalize_columns, Matrix};

const OVERSAMPLING: usize = 10;
const POWER_ITERATIONS: usize = 4;

/// Sparse row: (column, value) pairs sorted by column.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Clone, Debug)]
pub struct TfIdfModel {
    terms: Vec<String>,
    vocabulary: HashMap<String, usize>,
    idf: Vec<f64>,
    /// vocabulary x k, orthonormal columns
    basis: Matrix,
}

#[derive(Serialize, Deserialize)]
struct TfIdfFile {
    terms: Vec<String>,
    idf: Vec<f64>,
    k: usize,
    basis: Vec<f64>,
}

impl TfIdfModel {
    /// Fits vocabulary, idf and the SVD basis on training documents.
    pub fn fit<D, T>(documents: &[D], k: usize, seed: u64) -> Result<Self>
    where
        D: AsRef<[T]>,
        T: AsRef<str>,
    {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let terms: Vec<String> = documents
            .iter()
            .flat_map(|d| d.as_ref().iter().map(|t| t.as_ref().to_owned()))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let achievable = terms.len().min(documents.len());
        if k == 0 || k > achievable {
            return Err(Error::Rank {
                requested: k,
                achievable,
            });
        }
        let vocabulary: HashMap<String, usize> = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();

        let mut df = vec![0usize; terms.len()];
        for doc in documents {
            let seen: BTreeSet<usize> = doc
                .as_ref()
                .iter()
                .map(|t| vocabulary[t.as_ref()])
                .collect();
            for col in seen {
                df[col] += 1;
            }
        }
        let n = documents.len() as f64;
        let idf: Vec<f64> = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();

        let mut model = Self {
            terms,
            vocabulary,
            idf,
            basis: Matrix::zeros(0, 0),
        };
        let rows: Vec<SparseRow> = documents
            .iter()
            .map(|d| model.tfidf_row(d.as_ref().iter().map(|t| t.as_ref())))
            .collect();
        model.basis = truncated_svd_basis(&rows, model.terms.len(), k, seed);
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.basis.cols()
    }

    pub fn vocabulary_len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn column_of(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// L2-normalized TF-IDF row; out-of-vocabulary tokens are ignored.
    pub fn tfidf_row<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> SparseRow {
        let mut counts: HashMap<usize, f64> = HashMap::new();
        for token in tokens {
            if let Some(&col) = self.vocabulary.get(token) {
                *counts.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let mut row: SparseRow = counts
            .into_iter()
            .map(|(col, tf)| (col, tf * self.idf[col]))
            .collect();
        row.sort_unstable_by_key(|&(col, _)| col);
        let norm = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        row
    }

    /// Projects a document onto the reduced space.
    pub fn transform<'a>(&self, tokens: impl IntoIterator<Item = &'a str>) -> Vec<f64> {
        self.project(&self.tfidf_row(tokens))
    }

    pub fn project(&self, row: &SparseRow) -> Vec<f64> {
        let mut out = vec![0.0; self.k()];
        for &(col, v) in row {
            axpy(v, self.basis.row(col), &mut out);
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = TfIdfFile {
            terms: self.terms.clone(),
            idf: self.idf.clone(),
            k: self.k(),
            basis: self.basis.as_slice().to_vec(),
        };
        fs::write(path, serde_json::to_string(&file)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: TfIdfFile = serde_json::from_str(&text)?;
        if file.idf.len() != file.terms.len() {
            return Err(Error::Shape(
                "idf length differs from vocabulary size".into(),
            ));
        }
        let basis = Matrix::from_vec(file.terms.len(), file.k, file.basis)?;
        let vocabulary = file
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self {
            terms: file.terms,
            vocabulary,
            idf: file.idf,
            basis,
        })
    }
}

/// `rows (n x v, sparse) * dense (v x l)`
fn sparse_times_dense(rows: &[SparseRow], dense: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(rows.len(), dense.cols());
    for (i, row) in rows.iter().enumerate() {
        let dst = out.row_mut(i);
        for &(col, v) in row {
            axpy(v, dense.row(col), dst);
        }
    }
    out
}

/// `rows^T (v x n) * dense (n x l)`
fn sparse_t_times_dense(rows: &[SparseRow], vocab: usize, dense: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(vocab, dense.cols());
    for (i, row) in rows.iter().enumerate() {
        let src = dense.row(i);
        for &(col, v) in row {
            axpy(v, src, out.row_mut(col));
        }
    }
    out
}

/// Top-`k` right singular vectors of the sparse matrix as a `vocab x k` matrix.
fn truncated_svd_basis(rows: &[SparseRow], vocab: usize, k: usize, seed: u64) -> Matrix {
    let l = (k + OVERSAMPLING).min(vocab).min(rows.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut omega = Matrix::zeros(vocab, l);
    for v in omega.as_mut_slice() {
        *v = StandardNormal.sample(&mut rng);
    }

    let mut q = sparse_times_dense(rows, &omega);
    orthonormalize_columns(&mut q);
    for _ in 0..POWER_ITERATIONS {
        let mut z = sparse_t_times_dense(rows, vocab, &q);
        orthonormalize_columns(&mut z);
        q = sparse_times_dense(rows, &z);
        orthonormalize_columns(&mut q);
    }

    // B = Q^T A, so B^T = A^T Q = Q2 R and B = R^T Q2^T.
    let bt = sparse_t_times_dense(rows, vocab, &q);
    let mut q2 = bt.clone();
    orthonormalize_columns(&mut q2);
    let r = q2.transpose().matmul(&bt).expect("shapes agree");

    let rt = DMatrix::from_fn(l, l, |i, j| r.get(j, i));
    let svd = rt.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let mut basis = Matrix::zeros(vocab, k);
    for (out_col, &sv_idx) in order.iter().take(k).enumerate() {
        // right singular vector of R^T is row `sv_idx` of V^T
        let w: Vec<f64> = (0..l).map(|j| v_t[(sv_idx, j)]).collect();
        let mut column = vec![0.0; vocab];
        for (t, value) in column.iter_mut().enumerate() {
            *value = q2.row(t).iter().zip(&w).map(|(a, b)| a * b).sum();
        }
        let pivot =
            column.iter().copied().fold(
                0.0f64,
                |best, v| if v.abs() > best.abs() { v } else { best },
            );
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (t, value) in column.into_iter().enumerate() {
            basis.set(t, out_col, sign * value);
        }
    }
    basis
}
