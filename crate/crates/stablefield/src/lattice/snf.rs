use crate::error::{Error, Result};
use crate::lattice::IntMatrix;

fn cap() -> Error {
    Error::Capacity("integer overflow in Smith normal form".into())
}

/// Smith decomposition `left * input * right = diag`, with `left` and
/// `right` unimodular and the diagonal satisfying the divisibility chain
/// `d_i | d_{i+1}`. Nonzero invariant factors are positive and come first;
/// trailing zeros indicate rank deficiency.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub left: IntMatrix,
    pub diag: Vec<i64>,
    pub right: IntMatrix,
}

impl SmithDecomposition {
    /// Number of nonzero invariant factors.
    pub fn rank(&self) -> usize {
        self.diag.iter().filter(|&&d| d != 0).count()
    }

    /// The diagonal expanded to the shape of the original matrix.
    pub fn diag_matrix(&self, rows: usize, cols: usize) -> IntMatrix {
        let mut m = IntMatrix::zeros(rows, cols);
        for (i, &d) in self.diag.iter().enumerate() {
            m.set(i, i, d);
        }
        m
    }
}

struct Work {
    rows: usize,
    cols: usize,
    m: Vec<i128>,
    p: Vec<i128>, // rows x rows, accumulates row ops
    q: Vec<i128>, // cols x cols, accumulates col ops
}

impl Work {
    fn at(&self, i: usize, j: usize) -> i128 {
        self.m[i * self.cols + j]
    }

    fn row_sub(&mut self, dst: usize, src: usize, f: i128) -> Result<()> {
        for j in 0..self.cols {
            let t = self.m[src * self.cols + j].checked_mul(f).ok_or_else(cap)?;
            let e = &mut self.m[dst * self.cols + j];
            *e = e.checked_sub(t).ok_or_else(cap)?;
        }
        for j in 0..self.rows {
            let t = self.p[src * self.rows + j].checked_mul(f).ok_or_else(cap)?;
            let e = &mut self.p[dst * self.rows + j];
            *e = e.checked_sub(t).ok_or_else(cap)?;
        }
        Ok(())
    }

    fn col_sub(&mut self, dst: usize, src: usize, f: i128) -> Result<()> {
        for i in 0..self.rows {
            let t = self.m[i * self.cols + src].checked_mul(f).ok_or_else(cap)?;
            let e = &mut self.m[i * self.cols + dst];
            *e = e.checked_sub(t).ok_or_else(cap)?;
        }
        for i in 0..self.cols {
            let t = self.q[i * self.cols + src].checked_mul(f).ok_or_else(cap)?;
            let e = &mut self.q[i * self.cols + dst];
            *e = e.checked_sub(t).ok_or_else(cap)?;
        }
        Ok(())
    }

    fn row_swap(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.m.swap(a * self.cols + j, b * self.cols + j);
        }
        for j in 0..self.rows {
            self.p.swap(a * self.rows + j, b * self.rows + j);
        }
    }

    fn col_swap(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.m.swap(i * self.cols + a, i * self.cols + b);
        }
        for i in 0..self.cols {
            self.q.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    fn row_negate(&mut self, r: usize) {
        for j in 0..self.cols {
            self.m[r * self.cols + j] = -self.m[r * self.cols + j];
        }
        for j in 0..self.rows {
            self.p[r * self.rows + j] = -self.p[r * self.rows + j];
        }
    }

    /// Left-multiplies rows `(i, i+1)` by the unimodular `[[a,b],[c,d]]`.
    fn row_pair_transform(&mut self, i: usize, t: [[i128; 2]; 2]) -> Result<()> {
        let combine = |x: i128, y: i128, r: &[i128; 2]| -> Result<i128> {
            r[0].checked_mul(x)
                .and_then(|l| r[1].checked_mul(y).map(|rr| (l, rr)))
                .and_then(|(l, rr)| l.checked_add(rr))
                .ok_or_else(cap)
        };
        for j in 0..self.cols {
            let (x, y) = (self.m[i * self.cols + j], self.m[(i + 1) * self.cols + j]);
            self.m[i * self.cols + j] = combine(x, y, &t[0])?;
            self.m[(i + 1) * self.cols + j] = combine(x, y, &t[1])?;
        }
        for j in 0..self.rows {
            let (x, y) = (self.p[i * self.rows + j], self.p[(i + 1) * self.rows + j]);
            self.p[i * self.rows + j] = combine(x, y, &t[0])?;
            self.p[(i + 1) * self.rows + j] = combine(x, y, &t[1])?;
        }
        Ok(())
    }

    /// Right-multiplies columns `(j, j+1)` by the unimodular
    /// `[[a,b],[c,d]]` (columns transform as `col'_a = a col_j + c col_{j+1}`).
    fn col_pair_transform(&mut self, j: usize, t: [[i128; 2]; 2]) -> Result<()> {
        let combine = |x: i128, y: i128, c0: i128, c1: i128| -> Result<i128> {
            c0.checked_mul(x)
                .and_then(|l| c1.checked_mul(y).map(|r| (l, r)))
                .and_then(|(l, r)| l.checked_add(r))
                .ok_or_else(cap)
        };
        for i in 0..self.rows {
            let (x, y) = (self.m[i * self.cols + j], self.m[i * self.cols + j + 1]);
            self.m[i * self.cols + j] = combine(x, y, t[0][0], t[1][0])?;
            self.m[i * self.cols + j + 1] = combine(x, y, t[0][1], t[1][1])?;
        }
        for i in 0..self.cols {
            let (x, y) = (self.q[i * self.cols + j], self.q[i * self.cols + j + 1]);
            self.q[i * self.cols + j] = combine(x, y, t[0][0], t[1][0])?;
            self.q[i * self.cols + j + 1] = combine(x, y, t[0][1], t[1][1])?;
        }
        Ok(())
    }
}

/// Quotient of `a / b` rounded to minimize the remainder magnitude.
fn nearest_quotient(a: i128, b: i128) -> i128 {
    debug_assert!(b != 0);
    let q0 = a / b;
    let mut best = q0;
    let mut best_rem = (a - q0 * b).abs();
    for cand in [q0 - 1, q0 + 1] {
        if let Some(prod) = cand.checked_mul(b) {
            let rem = (a - prod).abs();
            if rem < best_rem {
                best = cand;
                best_rem = rem;
            }
        }
    }
    best
}

fn egcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, s, t) = egcd(b, a.rem_euclid(b));
        // a = (a/b floored)*b + a mod b
        let q = (a - a.rem_euclid(b)) / b;
        (g, t, s - q * t)
    }
}

/// Smith normal form over the integers with transform tracking.
///
/// Two phases keep intermediate growth polynomial: plain alternating
/// elimination diagonalizes the matrix (the pivot magnitude halves on
/// every remainder swap), then the divisibility chain is enforced by
/// pairwise 2x2 Bezout transforms on the diagonal, which touch nothing
/// else. Deterministic: pivots are the smallest nonzero magnitude in the
/// remaining block, ties broken row-major.
pub fn smith_normal_form(a: &IntMatrix) -> Result<SmithDecomposition> {
    let rows = a.rows();
    let cols = a.cols();
    let mut w = Work {
        rows,
        cols,
        m: (0..rows * cols)
            .map(|idx| a.get(idx / cols.max(1), idx % cols.max(1)) as i128)
            .collect(),
        p: identity_flat(rows),
        q: identity_flat(cols),
    };
    if rows == 0 || cols == 0 {
        return finish(w);
    }
    let kmax = rows.min(cols);

    // phase 1: diagonalize
    for k in 0..kmax {
        let Some((pi, pj)) = find_pivot(&w, k) else {
            break;
        };
        w.row_swap(k, pi);
        w.col_swap(k, pj);
        loop {
            let mut clean = true;
            for i in k + 1..rows {
                if w.at(i, k) != 0 {
                    let f = nearest_quotient(w.at(i, k), w.at(k, k));
                    w.row_sub(i, k, f)?;
                    if w.at(i, k) != 0 {
                        w.row_swap(i, k);
                        clean = false;
                    }
                }
            }
            for j in k + 1..cols {
                if w.at(k, j) != 0 {
                    let f = nearest_quotient(w.at(k, j), w.at(k, k));
                    w.col_sub(j, k, f)?;
                    if w.at(k, j) != 0 {
                        w.col_swap(j, k);
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
    }

    // positive pivots
    for i in 0..kmax {
        if w.at(i, i) < 0 {
            w.row_negate(i);
        }
    }

    // phase 2: bubble zeros to the end and enforce d_i | d_{i+1} with
    // 2x2 transforms diag(a,b) -> diag(g, ab/g)
    loop {
        let mut changed = false;
        for i in 0..kmax.saturating_sub(1) {
            let a = w.at(i, i);
            let b = w.at(i + 1, i + 1);
            if a == 0 && b != 0 {
                w.row_swap(i, i + 1);
                w.col_swap(i, i + 1);
                changed = true;
                continue;
            }
            if a == 0 || b == 0 || b % a == 0 {
                continue;
            }
            let (g, s, t) = egcd(a, b);
            debug_assert_eq!(s * a + t * b, g);
            // left = [[s, t], [-b/g, a/g]], right = [[1, -t b/g], [1, s a/g]]
            w.row_pair_transform(i, [[s, t], [-(b / g), a / g]])?;
            w.col_pair_transform(i, [[1, -(t * b) / g], [1, (s * a) / g]])?;
            debug_assert_eq!(w.at(i, i), g);
            debug_assert_eq!(w.at(i + 1, i + 1), (a / g) * b);
            changed = true;
        }
        if !changed {
            break;
        }
    }

    finish(w)
}

fn identity_flat(n: usize) -> Vec<i128> {
    let mut v = vec![0i128; n * n];
    for i in 0..n {
        v[i * n + i] = 1;
    }
    v
}

fn find_pivot(w: &Work, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, i128)> = None;
    for i in k..w.rows {
        for j in k..w.cols {
            let x = w.at(i, j).abs();
            if x != 0 && best.map_or(true, |(_, _, b)| x < b) {
                best = Some((i, j, x));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

fn finish(w: Work) -> Result<SmithDecomposition> {
    let to_mat = |flat: &[i128], r: usize, c: usize| -> Result<IntMatrix> {
        let mut m = IntMatrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m.set(i, j, i64::try_from(flat[i * c + j]).map_err(|_| cap())?);
            }
        }
        Ok(m)
    };
    let kmax = w.rows.min(w.cols);
    let mut diag = Vec::with_capacity(kmax);
    for i in 0..kmax {
        diag.push(i64::try_from(w.at(i, i)).map_err(|_| cap())?);
    }
    Ok(SmithDecomposition {
        left: to_mat(&w.p, w.rows, w.rows)?,
        diag,
        right: to_mat(&w.q, w.cols, w.cols)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &IntMatrix) {
        let s = smith_normal_form(a).unwrap();
        let lhs = s
            .left
            .checked_mul(a)
            .unwrap()
            .checked_mul(&s.right)
            .unwrap();
        assert_eq!(lhs, s.diag_matrix(a.rows(), a.cols()), "P*A*Q != diag");
        assert_eq!(s.left.det().unwrap().abs(), 1, "left not unimodular");
        assert_eq!(s.right.det().unwrap().abs(), 1, "right not unimodular");
        let nz: Vec<i64> = s.diag.iter().copied().filter(|&d| d != 0).collect();
        for w in nz.windows(2) {
            assert_eq!(w[1] % w[0], 0, "divisibility chain broken: {:?}", s.diag);
        }
        assert!(nz.iter().all(|&d| d > 0));
        let first_zero = s.diag.iter().position(|&d| d == 0);
        if let Some(z) = first_zero {
            assert!(s.diag[z..].iter().all(|&d| d == 0));
        }
    }

    #[test]
    fn column_vector() {
        let a = IntMatrix::from_rows(&[vec![2], vec![0]]).unwrap();
        let s = smith_normal_form(&a).unwrap();
        assert_eq!(s.diag, vec![2]);
        check(&a);
    }

    #[test]
    fn identity_input() {
        let a = IntMatrix::identity(3);
        let s = smith_normal_form(&a).unwrap();
        assert_eq!(s.diag, vec![1, 1, 1]);
        check(&a);
    }

    #[test]
    fn two_by_two() {
        let a = IntMatrix::from_rows(&[vec![2, 4], vec![6, 8]]).unwrap();
        let s = smith_normal_form(&a).unwrap();
        assert_eq!(s.diag, vec![2, 4]);
        check(&a);
    }

    #[test]
    fn rank_deficient() {
        let a = IntMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        let s = smith_normal_form(&a).unwrap();
        assert_eq!(s.diag, vec![1, 0]);
        check(&a);
    }

    #[test]
    fn zero_and_empty() {
        check(&IntMatrix::zeros(2, 3));
        check(&IntMatrix::zeros(0, 0));
        check(&IntMatrix::zeros(3, 0));
    }

    #[test]
    fn divisibility_repair_case() {
        // diag would come out (2, 3) without the chain repair
        let a = IntMatrix::from_rows(&[vec![2, 0], vec![0, 3]]).unwrap();
        let s = smith_normal_form(&a).unwrap();
        assert_eq!(s.diag, vec![1, 6]);
        check(&a);
    }

    #[test]
    fn previously_exploding_case() {
        let a = IntMatrix::from_rows(&[
            vec![-3, 3, -3, 10, 6],
            vec![-9, -3, -8, -8, -7],
            vec![-9, 9, 0, 4, 7],
            vec![6, -8, -10, 1, -2],
        ])
        .unwrap();
        check(&a);
    }
}
