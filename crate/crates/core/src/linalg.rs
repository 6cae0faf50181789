//! Small dense complex matrices.
//!
//! The drift generator is 14×14 (15×15 once augmented with the affine
//! column), so everything here is written for clarity on tiny dense
//! problems: row-major storage, LU with partial pivoting, a Padé(13)
//! scaling-and-squaring exponential and a Hessenberg + shifted-QR
//! eigenvalue iteration.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::scalar::{re, Cx, Real};

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Cx::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Cx::one();
        }
        m
    }

    /// Builds a matrix from row slices. Panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Cx<T>>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "row {i} has wrong length");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Cx<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, s: Cx<T>) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// `self += s * other`
    fn axpy(&mut self, s: T, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b * s;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Cx::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> T {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).fold(T::zero(), |acc, i| acc + self.data[i * n + j].norm()))
            .fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> Cx<T> {
        (0..self.n).fold(Cx::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn count_nonzero_in_row(&self, i: usize) -> usize {
        self.row(i).iter().filter(|z| !z.is_zero()).count()
    }

    /// LU factorization with partial pivoting. Returns `None` if a pivot
    /// magnitude falls to `pivot_tol` or below.
    pub fn lu(&self, pivot_tol: T) -> Option<Lu<T>> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let mut min_pivot = T::infinity();
        for col in 0..n {
            let (p, pmag) = (col..n)
                .map(|r| (r, a[r * n + col].norm()))
                .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
            min_pivot = min_pivot.min(pmag);
            if pmag.is_nan() || pmag <= pivot_tol {
                return None;
            }
            if p != col {
                for j in 0..n {
                    a.swap(col * n + j, p * n + j);
                }
                perm.swap(col, p);
                sign = -sign;
            }
            let pivot = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / pivot;
                a[r * n + col] = f;
                if f.is_zero() {
                    continue;
                }
                for j in col + 1..n {
                    a[r * n + j] = a[r * n + j] - f * a[col * n + j];
                }
            }
        }
        Some(Lu {
            n,
            lu: a,
            perm,
            sign,
            min_pivot,
        })
    }

    /// Solves `self · X = rhs` for a matrix right-hand side.
    pub fn solve(&self, rhs: &Self, pivot_tol: T) -> Option<Self> {
        let lu = self.lu(pivot_tol)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        let mut col = vec![Cx::zero(); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = rhs[(i, j)];
            }
            let x = lu.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        Some(out)
    }

    /// Matrix exponential by scaling and squaring around a degree-13
    /// diagonal Padé approximant.
    pub fn expm(&self) -> Self {
        let n = self.n;
        if n == 0 {
            return self.clone();
        }
        // Largest 1-norm for which the [13/13] approximant is accurate to
        // unit roundoff in double precision.
        let theta13 = T::lit(5.371_920_351_148_152);
        let norm = self.norm1();
        let squarings = if norm > theta13 {
            (norm / theta13).log2().ceil().to_i32().unwrap_or(0).max(0)
        } else {
            0
        };
        let scale = T::lit(2.0).powi(-squarings);
        let a = self.scaled(re(scale));
        let mut e = pade13(&a);
        for _ in 0..squarings {
            e = e.matmul(&e);
        }
        e
    }

    /// Eigenvalues in no particular order.
    pub fn eigenvalues(&self) -> Vec<Cx<T>> {
        let mut h = self.clone();
        h.reduce_to_hessenberg();
        h.hessenberg_qr_eigenvalues()
    }

    /// Unitary similarity to upper Hessenberg form by Householder
    /// reflections.
    fn reduce_to_hessenberg(&mut self) {
        let n = self.n;
        if n < 3 {
            return;
        }
        let two = T::lit(2.0);
        for k in 0..n - 2 {
            let xnorm = (k + 1..n)
                .fold(T::zero(), |acc, i| acc + self[(i, k)].norm_sqr())
                .sqrt();
            if xnorm == T::zero() {
                continue;
            }
            let x0 = self[(k + 1, k)];
            let phase = if x0.norm() == T::zero() {
                Cx::one()
            } else {
                x0 / re(x0.norm())
            };
            let alpha = -phase * re(xnorm);
            let mut v: Vec<Cx<T>> = (k + 1..n).map(|i| self[(i, k)]).collect();
            v[0] = v[0] - alpha;
            let vnorm = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
            if vnorm == T::zero() {
                continue;
            }
            for z in &mut v {
                *z = *z / re(vnorm);
            }
            // H <- (I - 2vv*) H
            for j in 0..n {
                let w = v
                    .iter()
                    .enumerate()
                    .fold(Cx::zero(), |acc, (t, vi)| acc + vi.conj() * self[(k + 1 + t, j)]);
                for (t, vi) in v.iter().enumerate() {
                    let cur = self[(k + 1 + t, j)];
                    self[(k + 1 + t, j)] = cur - *vi * w * re(two);
                }
            }
            // H <- H (I - 2vv*)
            for i in 0..n {
                let w = v
                    .iter()
                    .enumerate()
                    .fold(Cx::<T>::zero(), |acc, (t, vj)| acc + self[(i, k + 1 + t)] * *vj);
                for (t, vj) in v.iter().enumerate() {
                    let cur = self[(i, k + 1 + t)];
                    self[(i, k + 1 + t)] = cur - w * vj.conj() * re(two);
                }
            }
            for i in k + 2..n {
                self[(i, k)] = Cx::zero();
            }
        }
    }

    /// Shifted QR iteration on an upper Hessenberg matrix with Wilkinson
    /// shifts and deflation of negligible subdiagonals.
    fn hessenberg_qr_eigenvalues(mut self) -> Vec<Cx<T>> {
        let n = self.n;
        let mut eig = vec![Cx::zero(); n];
        if n == 0 {
            return eig;
        }
        let eps = T::epsilon();
        let scale = self.norm1().max(T::min_positive_value());
        let mut hi = n;
        let mut iter = 0usize;
        let max_iter = 100 * n;
        while hi > 0 {
            if hi == 1 {
                eig[0] = self[(0, 0)];
                break;
            }
            let mut l = hi - 1;
            while l > 0 {
                let mut s = self[(l - 1, l - 1)].norm() + self[(l, l)].norm();
                if s == T::zero() {
                    s = scale;
                }
                if self[(l, l - 1)].norm() <= eps * s {
                    self[(l, l - 1)] = Cx::zero();
                    break;
                }
                l -= 1;
            }
            if l == hi - 1 {
                eig[hi - 1] = self[(hi - 1, hi - 1)];
                hi -= 1;
                iter = 0;
                continue;
            }
            iter += 1;
            if iter > max_iter {
                // Unconverged block: report its diagonal rather than loop.
                for k in l..hi {
                    eig[k] = self[(k, k)];
                }
                hi = l;
                iter = 0;
                continue;
            }
            let mu = if iter % 11 == 10 {
                // exceptional shift to break cycles
                self[(hi - 1, hi - 1)] + re(self[(hi - 1, hi - 2)].norm() * T::lit(0.75))
            } else {
                wilkinson_shift(
                    self[(hi - 2, hi - 2)],
                    self[(hi - 2, hi - 1)],
                    self[(hi - 1, hi - 2)],
                    self[(hi - 1, hi - 1)],
                )
            };
            self.qr_step(l, hi, mu);
        }
        eig
    }

    /// One explicit shifted QR step `H - mu I = QR`, `H <- RQ + mu I`
    /// restricted to the active block `[lo, hi)`.
    fn qr_step(&mut self, lo: usize, hi: usize, mu: Cx<T>) {
        for k in lo..hi {
            self[(k, k)] = self[(k, k)] - mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi - 1 {
            let x = self[(k, k)];
            let y = self[(k + 1, k)];
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == T::zero() {
                (Cx::one(), Cx::zero())
            } else {
                (x / re(r), y / re(r))
            };
            for j in k..hi {
                let u = self[(k, j)];
                let v = self[(k + 1, j)];
                self[(k, j)] = c.conj() * u + s.conj() * v;
                self[(k + 1, j)] = -s * u + c * v;
            }
            rots.push((c, s));
        }
        for (t, &(c, s)) in rots.iter().enumerate() {
            let k = lo + t;
            let top = (k + 2).min(hi);
            for i in lo..top {
                let p = self[(i, k)];
                let q = self[(i, k + 1)];
                self[(i, k)] = p * c + q * s;
                self[(i, k + 1)] = -p * s.conj() + q * c.conj();
            }
        }
        for k in lo..hi {
            self[(k, k)] = self[(k, k)] + mu;
        }
    }
}

fn wilkinson_shift<T: Real>(a: Cx<T>, b: Cx<T>, c: Cx<T>, d: Cx<T>) -> Cx<T> {
    let half = re(T::lit(0.5));
    let m = (a + d) * half;
    let disc = (((a - d) * half) * ((a - d) * half) + b * c).sqrt();
    let l1 = m + disc;
    let l2 = m - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Coefficients of the [13/13] Padé approximant to `exp`.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

fn pade13<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    let n = a.dim();
    let b = |k: usize| T::lit(PADE13[k]);
    let ident = CMatrix::identity(n);
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    let mut inner = CMatrix::zeros(n);
    inner.axpy(b(13), &a6);
    inner.axpy(b(11), &a4);
    inner.axpy(b(9), &a2);
    let mut odd = a6.matmul(&inner);
    odd.axpy(b(7), &a6);
    odd.axpy(b(5), &a4);
    odd.axpy(b(3), &a2);
    odd.axpy(b(1), &ident);
    let u = a.matmul(&odd);

    let mut inner = CMatrix::zeros(n);
    inner.axpy(b(12), &a6);
    inner.axpy(b(10), &a4);
    inner.axpy(b(8), &a2);
    let mut v = a6.matmul(&inner);
    v.axpy(b(6), &a6);
    v.axpy(b(4), &a4);
    v.axpy(b(2), &a2);
    v.axpy(b(0), &ident);

    let num = v.add(&u);
    let den = v.sub(&u);
    // The denominator is well conditioned once ||A||_1 <= theta13.
    den.solve(&num, T::zero())
        .expect("Pade denominator is nonsingular for a scaled argument")
}

/// LU factors with row permutation, from [`CMatrix::lu`].
#[derive(Clone, Debug)]
pub struct Lu<T> {
    n: usize,
    lu: Vec<Cx<T>>,
    perm: Vec<usize>,
    sign: T,
    min_pivot: T,
}

impl<T: Real> Lu<T> {
    pub fn solve_vec(&self, b: &[Cx<T>]) -> Vec<Cx<T>> {
        let n = self.n;
        let mut x: Vec<Cx<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for (k, xk) in x.iter().enumerate().take(i) {
                s = s - self.lu[i * n + k] * *xk;
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for (k, xk) in x.iter().enumerate().skip(i + 1) {
                s = s - self.lu[i * n + k] * *xk;
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }

    pub fn determinant(&self) -> Cx<T> {
        (0..self.n).fold(re(self.sign), |acc, i| acc * self.lu[i * self.n + i])
    }

    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cx<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[i * self.n + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        &mut self.data[i * self.n + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cx;

    type C = Cx<f64>;

    fn lcg_matrix(n: usize, seed: u64, scale: f64) -> CMatrix<f64> {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * scale
        };
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = cx(next(), next());
            }
        }
        m
    }

    /// Plain Taylor series with repeated halving; independent of the Padé path.
    fn expm_taylor(a: &CMatrix<f64>) -> CMatrix<f64> {
        let halvings = 12;
        let small = a.scaled(re(0.5f64.powi(halvings)));
        let mut term = CMatrix::identity(a.dim());
        let mut sum = term.clone();
        for k in 1..40 {
            term = term.matmul(&small).scaled(re(1.0 / k as f64));
            sum = sum.add(&term);
        }
        for _ in 0..halvings {
            sum = sum.matmul(&sum);
        }
        sum
    }

    fn max_diff(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
        a.data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn solve_recovers_known_solution() {
        let a = lcg_matrix(6, 3, 2.0);
        let x = lcg_matrix(6, 4, 2.0);
        let b = a.matmul(&x);
        let got = a.solve(&b, 1e-300).unwrap();
        assert!(max_diff(&got, &x) < 1e-12);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let m = CMatrix::from_rows(&[
            vec![C::new(1.0, 0.0), C::new(2.0, 0.0)],
            vec![C::new(2.0, 0.0), C::new(4.0, 0.0)],
        ]);
        assert!(m.lu(1e-12).is_none());
    }

    #[test]
    fn determinant_of_triangular_is_diagonal_product() {
        let mut m = lcg_matrix(5, 9, 1.0);
        for i in 0..5 {
            for j in 0..i {
                m[(i, j)] = C::new(0.0, 0.0);
            }
        }
        let want = (0..5).fold(C::new(1.0, 0.0), |acc, i| acc * m[(i, i)]);
        let got = m.lu(0.0).unwrap().determinant();
        assert!((got - want).norm() < 1e-14 * want.norm().max(1.0));
    }

    #[test]
    fn expm_of_diagonal_is_scalar_exponentials() {
        let mut m = CMatrix::<f64>::zeros(3);
        m[(0, 0)] = cx(1.5, -2.0);
        m[(1, 1)] = cx(-20.0, 7.0);
        m[(2, 2)] = cx(0.0, 30.0);
        let e = m.expm();
        for i in 0..3 {
            let want = m[(i, i)].exp();
            assert!((e[(i, i)] - want).norm() <= 1e-13 * want.norm().max(1.0));
        }
        assert_eq!(e[(0, 1)], C::new(0.0, 0.0));
    }

    #[test]
    fn expm_matches_taylor_oracle() {
        for (seed, scale) in [(1, 0.5), (2, 4.0), (5, 20.0)] {
            let a = lcg_matrix(8, seed, scale);
            let e = a.expm();
            let t = expm_taylor(&a);
            let rel = max_diff(&e, &t) / t.norm1();
            assert!(rel < 1e-11, "seed {seed}: rel {rel:e}");
        }
    }

    #[test]
    fn expm_of_nilpotent_jordan_block() {
        // exp([[0,1],[0,0]] t) = [[1,t],[0,1]]
        let m = CMatrix::from_rows(&[
            vec![C::new(0.0, 0.0), C::new(3.0, 0.0)],
            vec![C::new(0.0, 0.0), C::new(0.0, 0.0)],
        ]);
        let e = m.expm();
        assert!((e[(0, 1)] - C::new(3.0, 0.0)).norm() < 1e-15);
        assert!((e[(0, 0)] - C::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigenvalues_of_triangular_matrix() {
        let mut m = lcg_matrix(7, 11, 3.0);
        for i in 0..7 {
            for j in 0..i {
                m[(i, j)] = C::new(0.0, 0.0);
            }
        }
        let mut eig = m.eigenvalues();
        for i in 0..7 {
            let d = m[(i, i)];
            let (k, dist) = eig
                .iter()
                .enumerate()
                .map(|(k, z)| (k, (z - d).norm()))
                .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
            assert!(dist < 1e-12, "diag {d} not found");
            eig.remove(k);
        }
    }

    #[test]
    fn eigenvalues_match_trace_and_determinant() {
        for seed in 20..26 {
            let m = lcg_matrix(14, seed, 2.0);
            let eig = m.eigenvalues();
            let sum = eig.iter().fold(C::new(0.0, 0.0), |a, &z| a + z);
            let prod = eig.iter().fold(C::new(1.0, 0.0), |a, &z| a * z);
            let det = m.lu(0.0).unwrap().determinant();
            assert!((sum - m.trace()).norm() < 1e-11);
            assert!((prod - det).norm() < 1e-9 * det.norm().max(1.0));
        }
    }

    #[test]
    fn eigenvalues_match_nalgebra_schur() {
        for seed in 40..44 {
            let m = lcg_matrix(10, seed, 5.0);
            let na = nalgebra::DMatrix::from_fn(10, 10, |i, j| m[(i, j)]);
            let (_, t) = na.schur().unpack();
            let mut theirs: Vec<C> = t.diagonal().iter().copied().collect();
            for z in m.eigenvalues() {
                let (k, dist) = theirs
                    .iter()
                    .enumerate()
                    .map(|(k, w)| (k, (w - z).norm()))
                    .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
                assert!(dist < 1e-9, "eigenvalue {z} unmatched ({dist:e})");
                theirs.remove(k);
            }
        }
    }

    #[test]
    fn single_precision_expm() {
        let mut m = CMatrix::<f32>::zeros(2);
        m[(0, 0)] = cx(0.3, 1.0);
        m[(1, 1)] = cx(-1.0, 0.0);
        m[(0, 1)] = cx(0.5, 0.0);
        let e = m.expm();
        assert!((e[(0, 0)] - m[(0, 0)].exp()).norm() < 1e-5);
    }
}
