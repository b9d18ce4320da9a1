//! Row-compressed complex matrices for second-quantized operators.

use num_complex::Complex64 as c64;
use std::collections::BTreeMap;

use crate::linalg::CMat;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMat {
    dim: usize,
    rows: Vec<Vec<(usize, c64)>>,
}

impl SparseMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(dim: usize, entries: impl IntoIterator<Item = (usize, usize, c64)>) -> Self {
        let mut acc: Vec<BTreeMap<usize, c64>> = vec![BTreeMap::new(); dim];
        for (i, j, z) in entries {
            *acc[i].entry(j).or_insert(c64::new(0.0, 0.0)) += z;
        }
        let rows = acc
            .into_iter()
            .map(|r| r.into_iter().filter(|(_, z)| *z != c64::new(0.0, 0.0)).collect())
            .collect();
        Self { dim, rows }
    }

    pub fn from_dense(m: &CMat) -> Self {
        let n = m.nrows();
        let rows = (0..n)
            .map(|i| {
                (0..n)
                    .filter_map(|j| {
                        let z = m[(i, j)];
                        (z != c64::new(0.0, 0.0)).then_some((j, z))
                    })
                    .collect()
            })
            .collect();
        Self { dim: n, rows }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, i: usize) -> &[(usize, c64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> c64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map_or(c64::new(0.0, 0.0), |p| self.rows[i][p].1)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, z)| (i, j, z)))
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (i, j, z) in self.triplets() {
            m[(i, j)] = z;
        }
        m
    }

    /// Dense restriction to the rows and columns in `idx`.
    pub fn block(&self, idx: &[usize]) -> CMat {
        let mut pos = vec![usize::MAX; self.dim];
        for (k, &i) in idx.iter().enumerate() {
            pos[i] = k;
        }
        let mut m = CMat::zeros(idx.len(), idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for &(j, z) in &self.rows[i] {
                if pos[j] != usize::MAX {
                    m[(a, pos[j])] = z;
                }
            }
        }
        m
    }

    pub fn add(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.dim, other.dim);
        SparseMat::from_triplets(self.dim, self.triplets().chain(other.triplets()))
    }

    pub fn scaled(&self, k: c64) -> SparseMat {
        SparseMat {
            dim: self.dim,
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|&(j, z)| (j, z * k)).collect())
                .collect(),
        }
    }

    pub fn matmul(&self, other: &SparseMat) -> SparseMat {
        assert_eq!(self.dim, other.dim);
        let mut acc = vec![c64::new(0.0, 0.0); self.dim];
        let mut touched = Vec::new();
        let mut rows = Vec::with_capacity(self.dim);
        for r in &self.rows {
            for &(k, a) in r {
                for &(j, b) in &other.rows[k] {
                    if acc[j] == c64::new(0.0, 0.0) {
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let row: Vec<(usize, c64)> = touched
                .iter()
                .filter_map(|&j| {
                    let z = std::mem::replace(&mut acc[j], c64::new(0.0, 0.0));
                    (z != c64::new(0.0, 0.0)).then_some((j, z))
                })
                .collect();
            touched.clear();
            rows.push(row);
        }
        SparseMat { dim: self.dim, rows }
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn fro_norm(&self) -> f64 {
        self.triplets().map(|(_, _, z)| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute row sum; bounds the operator norm of a Hermitian matrix.
    pub fn row_sum_norm(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, z)| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.triplets()
            .map(|(i, j, z)| (z - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, _)| i == j)
    }
}

/// Connected components of the union of the nonzero patterns, each sorted.
pub fn components(dim: usize, mats: &[&SparseMat]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..dim).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for m in mats {
        for (i, j, _) in m.triplets() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..dim {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}
