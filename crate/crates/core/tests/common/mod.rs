//! Shared helpers for the integration suites: a seeded random-instance
//! generator and a brute-force vertex enumerator used as an independent
//! oracle on tiny instances.

use std::collections::{BTreeMap, BTreeSet};

use mot_core::measure::DiscreteMeasure;
use mot_core::rational::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

pub fn golden_mu() -> DiscreteMeasure {
    DiscreteMeasure::new([(r("1"), r("1/2")), (r("3"), r("1/2"))]).unwrap()
}

pub fn golden_nu() -> DiscreteMeasure {
    DiscreteMeasure::new([
        (r("0"), r("1/2")),
        (r("2"), r("1/6")),
        (r("5"), r("1/3")),
    ])
    .unwrap()
}

/// Deterministic generator of marginal pairs in convex order: a random base
/// probability measure, thickened by chains of mean-preserving splits. The
/// first marginal is a split chain of the base and the second extends the
/// first, so the pair is ordered by construction.
pub struct InstanceGen {
    rng: ChaCha8Rng,
}

impl InstanceGen {
    pub fn new(seed: u64) -> Self {
        InstanceGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Random probability measure on up to `max_atoms` integer atoms.
    pub fn measure(&mut self, max_atoms: usize) -> DiscreteMeasure {
        let count = self.rng.gen_range(1..=max_atoms);
        let mut atoms: BTreeMap<i64, i64> = BTreeMap::new();
        while atoms.len() < count {
            let x = self.rng.gen_range(-12..=12);
            atoms.entry(x).or_insert_with(|| self.rng.gen_range(1..=9));
        }
        let total: i64 = atoms.values().sum();
        DiscreteMeasure::new(
            atoms
                .into_iter()
                .map(|(x, w)| (Rational::from_int(x), Rational::new(w, total))),
        )
        .unwrap()
    }

    pub fn split_chain(&mut self, base: &DiscreteMeasure, splits: usize) -> DiscreteMeasure {
        let mut out = base.clone();
        for _ in 0..splits {
            let index = self.rng.gen_range(0..out.len());
            let d = Rational::new(self.rng.gen_range(1..=6), 2);
            out = out.mean_preserving_split(index, &d).unwrap();
        }
        out
    }

    /// An ordered pair (mu, nu) with mu below nu in convex order.
    pub fn instance(
        &mut self,
        max_base: usize,
        max_mu_splits: usize,
        max_nu_splits: usize,
    ) -> (DiscreteMeasure, DiscreteMeasure) {
        let base = self.measure(max_base);
        let mu_splits = self.rng.gen_range(0..=max_mu_splits);
        let mu = self.split_chain(&base, mu_splits);
        let nu_splits = self.rng.gen_range(0..=max_nu_splits);
        let nu = self.split_chain(&mu, nu_splits);
        (mu, nu)
    }

    pub fn int_in(&mut self, lo: i64, hi: i64) -> i64 {
        self.rng.gen_range(lo..=hi)
    }
}

fn gauss_solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&row| !a[row][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for entry in a[col].iter_mut() {
            *entry = &*entry / &p;
        }
        b[col] = &b[col] / &p;
        let pivot_vals = a[col].clone();
        let pivot_rhs = b[col].clone();
        for (row, entries) in a.iter_mut().enumerate() {
            if row == col || entries[col].is_zero() {
                continue;
            }
            let factor = entries[col].clone();
            for (entry, pv) in entries.iter_mut().zip(&pivot_vals) {
                if !pv.is_zero() {
                    *entry = &*entry - &(&factor * pv);
                }
            }
            b[row] = &b[row] - &(&factor * &pivot_rhs);
        }
    }
    Some(b)
}

fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance to the next combination in lexicographic order.
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] < n - k + pos {
                idx[pos] += 1;
                for later in pos + 1..k {
                    idx[later] = idx[later - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return;
            }
        }
        if k == 0 {
            return;
        }
    }
}

/// Enumerates every vertex of the polytope of martingale couplings of
/// (mu, nu), as full coupling matrices. Built directly from the defining
/// equations, independently of the library's program builders.
pub fn enumerate_coupling_vertices(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
) -> Vec<Vec<Vec<Rational>>> {
    let n = mu.len();
    let m = nu.len();
    let cols = n * m;

    let mut rows: Vec<(Vec<Rational>, Rational)> = Vec::new();
    for j in 0..n {
        let mut row = vec![Rational::zero(); cols];
        for i in 0..m {
            row[j * m + i] = Rational::one();
        }
        rows.push((row, mu.weights()[j].clone()));
    }
    for i in 0..m {
        let mut row = vec![Rational::zero(); cols];
        for j in 0..n {
            row[j * m + i] = Rational::one();
        }
        rows.push((row, nu.weights()[i].clone()));
    }
    for j in 0..n {
        let mut row = vec![Rational::zero(); cols];
        for i in 0..m {
            row[j * m + i] = &nu.atoms()[i] - &mu.atoms()[j];
        }
        rows.push((row, Rational::zero()));
    }

    // Keep a maximal independent subset of rows (incremental elimination).
    let mut kept: Vec<usize> = Vec::new();
    let mut reduced: Vec<(usize, Vec<Rational>)> = Vec::new(); // (pivot col, row)
    for (ri, (row, rhs)) in rows.iter().enumerate() {
        let mut work = row.clone();
        work.push(rhs.clone());
        for (pivot, red) in &reduced {
            if !work[*pivot].is_zero() {
                let factor = work[*pivot].clone();
                for (w, r2) in work.iter_mut().zip(red.iter()) {
                    let delta = &factor * r2;
                    *w = &*w - &delta;
                }
            }
        }
        match (0..cols).find(|&c| !work[c].is_zero()) {
            Some(pivot) => {
                let p = work[pivot].clone();
                for w in work.iter_mut() {
                    *w = &*w / &p;
                }
                reduced.push((pivot, work));
                kept.push(ri);
            }
            None => assert!(
                work[cols].is_zero(),
                "coupling equations are consistent for ordered marginals"
            ),
        }
    }
    let rank = kept.len();

    let mut vertices: BTreeSet<Vec<Vec<Rational>>> = BTreeSet::new();
    for_each_combination(cols, rank, |subset| {
        let a: Vec<Vec<Rational>> = kept
            .iter()
            .map(|&ri| subset.iter().map(|&c| rows[ri].0[c].clone()).collect())
            .collect();
        let b: Vec<Rational> = kept.iter().map(|&ri| rows[ri].1.clone()).collect();
        if let Some(values) = gauss_solve(a, b) {
            if values.iter().all(|v| !v.is_negative()) {
                let mut q = vec![vec![Rational::zero(); m]; n];
                for (pos, &c) in subset.iter().enumerate() {
                    q[c / m][c % m] = values[pos].clone();
                }
                vertices.insert(q);
            }
        }
    });
    vertices.into_iter().collect()
}
