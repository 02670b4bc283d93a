//! Smith normal form over the integers with unimodular transforms.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Matrix = Vec<Vec<BigInt>>;

/// `U · M · W = S` with `S` diagonal, diagonal entries nonnegative and each
/// dividing the next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Snf {
    pub u: Matrix,
    pub s: Matrix,
    pub w: Matrix,
}

impl Snf {
    /// Diagonal of `S`, `min(rows, cols)` entries.
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        let k = self.s.len().min(self.s.first().map_or(0, Vec::len));
        (0..k).map(|i| self.s[i][i].clone()).collect()
    }
}

pub fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigInt::one()
                    } else {
                        BigInt::zero()
                    }
                })
                .collect()
        })
        .collect()
}

pub fn from_i64(m: &[Vec<i64>]) -> Matrix {
    m.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

pub fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).fold(BigInt::zero(), |acc, k| acc + &row[k] * &b[k][j]))
                .collect()
        })
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &Matrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Computes the Smith normal form of an integer matrix. Pivots are chosen by
/// minimal absolute value to keep the transforms small.
pub fn smith_normal_form(m: &Matrix) -> Snf {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut s = m.clone();
    let mut u = identity(rows);
    let mut w = identity(cols);

    for t in 0..rows.min(cols) {
        loop {
            let Some((pi, pj)) = min_pivot(&s, t) else {
                // remaining block is zero
                return finish(u, s, w);
            };
            s.swap(t, pi);
            u.swap(t, pi);
            swap_cols(&mut s, t, pj);
            swap_cols(&mut w, t, pj);

            let mut clean = true;
            for i in t + 1..rows {
                if s[i][t].is_zero() {
                    continue;
                }
                let q = s[i][t].div_floor(&s[t][t]);
                add_row(&mut s, i, t, &-&q);
                add_row(&mut u, i, t, &-&q);
                if !s[i][t].is_zero() {
                    clean = false;
                }
            }
            for j in t + 1..cols {
                if s[t][j].is_zero() {
                    continue;
                }
                let q = s[t][j].div_floor(&s[t][t]);
                add_col(&mut s, j, t, &-&q);
                add_col(&mut w, j, t, &-&q);
                if !s[t][j].is_zero() {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility: fold any offending row into row t and retry
            let p = s[t][t].clone();
            let bad = (t + 1..rows).find(|&i| (t + 1..cols).any(|j| !s[i][j].is_multiple_of(&p)));
            match bad {
                Some(i) => {
                    add_row(&mut s, t, i, &BigInt::one());
                    add_row(&mut u, t, i, &BigInt::one());
                }
                None => break,
            }
        }
        if s[t][t].is_negative() {
            for x in s[t].iter_mut() {
                *x = -&*x;
            }
            for x in u[t].iter_mut() {
                *x = -&*x;
            }
        }
    }
    finish(u, s, w)
}

fn finish(u: Matrix, s: Matrix, w: Matrix) -> Snf {
    Snf { u, s, w }
}

fn min_pivot(s: &Matrix, t: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for (i, row) in s.iter().enumerate().skip(t) {
        for (j, x) in row.iter().enumerate().skip(t) {
            if x.is_zero() {
                continue;
            }
            if best.is_none_or(|(bi, bj)| x.abs() < s[bi][bj].abs()) {
                best = Some((i, j));
            }
        }
    }
    best
}

fn swap_cols(m: &mut Matrix, a: usize, b: usize) {
    if a != b {
        for row in m.iter_mut() {
            row.swap(a, b);
        }
    }
}

/// row[dst] += k * row[src]
fn add_row(m: &mut Matrix, dst: usize, src: usize, k: &BigInt) {
    let src_row = m[src].clone();
    for (x, y) in m[dst].iter_mut().zip(&src_row) {
        *x += k * y;
    }
}

/// col[dst] += k * col[src]
fn add_col(m: &mut Matrix, dst: usize, src: usize, k: &BigInt) {
    for row in m.iter_mut() {
        let y = row[src].clone();
        row[dst] += k * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn factors(m: &[Vec<i64>]) -> Vec<i64> {
        smith_normal_form(&from_i64(m))
            .invariant_factors()
            .iter()
            .map(|x| i64::try_from(x).unwrap())
            .collect()
    }

    #[test]
    fn triangle_reduced_laplacian() {
        assert_eq!(factors(&[vec![2, -1], vec![-1, 2]]), vec![1, 3]);
    }

    #[test]
    fn identity_has_unit_factors() {
        assert_eq!(
            factors(&[vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]),
            vec![1, 1, 1]
        );
    }

    #[test]
    fn diagonal_is_reordered_into_divisibility_chain() {
        // diag(2, 3) ≅ Z/6
        assert_eq!(factors(&[vec![2, 0], vec![0, 3]]), vec![1, 6]);
        assert_eq!(factors(&[vec![4, 0], vec![0, 6]]), vec![2, 12]);
    }

    #[test]
    fn bareiss_determinant() {
        let m = from_i64(&[vec![2, -1, 0], vec![-1, 2, -1], vec![0, -1, 2]]);
        assert_eq!(determinant(&m), BigInt::from(4));
    }

    proptest! {
        #[test]
        fn transforms_are_unimodular_and_reproduce_s(
            entries in proptest::collection::vec(-6i64..=6, 16),
            rows in 1usize..=4,
            cols in 1usize..=4,
        ) {
            let m: Vec<Vec<i64>> = (0..rows).map(|i| entries[i * 4..i * 4 + cols].to_vec()).collect();
            let mb = from_i64(&m);
            let snf = smith_normal_form(&mb);
            prop_assert_eq!(mul(&mul(&snf.u, &mb), &snf.w), snf.s.clone());
            prop_assert_eq!(determinant(&snf.u).abs(), BigInt::one());
            prop_assert_eq!(determinant(&snf.w).abs(), BigInt::one());
            for i in 0..rows {
                for j in 0..cols {
                    if i != j {
                        prop_assert!(snf.s[i][j].is_zero());
                    }
                }
            }
            let d = snf.invariant_factors();
            for k in 1..d.len() {
                prop_assert!(!d[k - 1].is_negative());
                if !d[k - 1].is_zero() {
                    prop_assert!(d[k].is_multiple_of(&d[k - 1]));
                } else {
                    prop_assert!(d[k].is_zero());
                }
            }
        }
    }
}
