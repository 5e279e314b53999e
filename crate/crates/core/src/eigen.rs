//! Closed-form eigensolvers for small complex matrices.
//!
//! Coupled-mode matrices here are at most 3×3, so eigenvalues come from the
//! characteristic polynomial (quadratic or depressed cubic, Newton-polished)
//! and eigenvectors from null-space cross products. Results are sorted by
//! ascending real part, ties broken by ascending `-Im λ`.

use core::cmp::Ordering;

use num_complex::Complex;

use crate::scalar::Real;

pub type C<T> = Complex<T>;

/// Eigenvalue with its right eigenvector, normalized to unit 2-norm and
/// phase-fixed so that the largest component is real and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenpair<T, const N: usize> {
    pub value: C<T>,
    pub vector: [C<T>; N],
}

fn cmp_eigenvalues<T: Real>(a: &C<T>, b: &C<T>) -> Ordering {
    a.re.partial_cmp(&b.re)
        .unwrap_or(Ordering::Equal)
        .then_with(|| (-a.im).partial_cmp(&-b.im).unwrap_or(Ordering::Equal))
}

fn normalize<T: Real, const N: usize>(mut v: [C<T>; N]) -> [C<T>; N] {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
    if norm > T::zero() {
        let (mut best, mut best_abs) = (0, T::zero());
        for (i, z) in v.iter().enumerate() {
            if z.norm() > best_abs {
                best = i;
                best_abs = z.norm();
            }
        }
        let phase = v[best].conj() / v[best].norm();
        for z in v.iter_mut() {
            *z = *z * phase / norm;
        }
        // the pivot is real by construction
        v[best] = C::new(v[best].re, T::zero());
    }
    v
}

fn unit<T: Real, const N: usize>(i: usize) -> [C<T>; N] {
    let mut v = [C::new(T::zero(), T::zero()); N];
    v[i] = C::new(T::one(), T::zero());
    v
}

fn is_diagonal<T: Real, const N: usize>(m: &[[C<T>; N]; N]) -> bool {
    let zero = C::new(T::zero(), T::zero());
    (0..N).all(|i| (0..N).all(|j| i == j || m[i][j] == zero))
}

fn sorted<T: Real, const N: usize>(mut pairs: [Eigenpair<T, N>; N]) -> [Eigenpair<T, N>; N] {
    pairs.sort_by(|a, b| cmp_eigenvalues(&a.value, &b.value));
    pairs
}

fn diagonal_pairs<T: Real, const N: usize>(m: &[[C<T>; N]; N]) -> [Eigenpair<T, N>; N] {
    sorted(core::array::from_fn(|i| Eigenpair {
        value: m[i][i],
        vector: unit(i),
    }))
}

/// Mean of the diagonal, used to shift the spectrum near zero before
/// forming polynomial coefficients.
fn diagonal_shift<T: Real, const N: usize>(m: &[[C<T>; N]; N]) -> C<T> {
    let sum = (0..N).fold(C::new(T::zero(), T::zero()), |acc, i| acc + m[i][i]);
    sum / T::from_usize_lossy(N)
}

pub fn eig2<T: Real>(m: &[[C<T>; 2]; 2]) -> [Eigenpair<T, 2>; 2] {
    if is_diagonal(m) {
        return diagonal_pairs(m);
    }
    let half = T::lit(0.5);
    let mean = (m[0][0] + m[1][1]) * half;
    let d = (m[0][0] - m[1][1]) * half;
    let r = (d * d + m[0][1] * m[1][0]).sqrt();
    let values = [mean - r, mean + r];
    sorted(values.map(|value| Eigenpair {
        value,
        vector: null_vector_2(m, value),
    }))
}

fn null_vector_2<T: Real>(m: &[[C<T>; 2]; 2], value: C<T>) -> [C<T>; 2] {
    // rows of (M - λ I): either (M01, λ - M00) or (λ - M11, M10) spans the null space
    let a = [m[0][1], value - m[0][0]];
    let b = [value - m[1][1], m[1][0]];
    let na = a[0].norm_sqr() + a[1].norm_sqr();
    let nb = b[0].norm_sqr() + b[1].norm_sqr();
    normalize(if na >= nb { a } else { b })
}

fn cross<T: Real>(a: &[C<T>; 3], b: &[C<T>; 3]) -> [C<T>; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm_sqr3<T: Real>(v: &[C<T>; 3]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Roots of `t³ + p·t + q = 0` (Cardano, then Newton-polished).
fn depressed_cubic_roots<T: Real>(p: C<T>, q: C<T>) -> [C<T>; 3] {
    let zero = C::new(T::zero(), T::zero());
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let disc = (q * q / T::lit(4.0) + p * p * p / T::lit(27.0)).sqrt();
    // pick the larger-magnitude branch to avoid cancellation
    let w1 = -q / two + disc;
    let w2 = -q / two - disc;
    let w = if w1.norm() >= w2.norm() { w1 } else { w2 };
    let u = if w == zero { zero } else { w.cbrt() };
    let v = if u == zero { zero } else { -p / (u * three) };
    let omega = C::new(-T::lit(0.5), three.sqrt() * T::lit(0.5));
    let omega2 = omega.conj();
    let mut roots = [u + v, omega * u + omega2 * v, omega2 * u + omega * v];
    for root in roots.iter_mut() {
        *root = polish_cubic_root(*root, p, q);
    }
    roots
}

fn polish_cubic_root<T: Real>(mut t: C<T>, p: C<T>, q: C<T>) -> C<T> {
    let f = |t: C<T>| t * t * t + p * t + q;
    let mut ft = f(t);
    for _ in 0..8 {
        let df = t * t * T::lit(3.0) + p;
        if df.norm() == T::zero() {
            break;
        }
        let next = t - ft / df;
        let fnext = f(next);
        if fnext.norm() < ft.norm() {
            t = next;
            ft = fnext;
        } else {
            break;
        }
    }
    t
}

pub fn eig3<T: Real>(m: &[[C<T>; 3]; 3]) -> [Eigenpair<T, 3>; 3] {
    if is_diagonal(m) {
        return diagonal_pairs(m);
    }
    let shift = diagonal_shift(m);
    let mut a = *m;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= shift;
    }
    // traceless after the shift: t³ + p t + q with p = sum of principal minors, q = -det
    let minors = a[0][0] * a[1][1] - a[0][1] * a[1][0] + a[0][0] * a[2][2] - a[0][2] * a[2][0] + a[1][1] * a[2][2]
        - a[1][2] * a[2][1];
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let roots = depressed_cubic_roots(minors, -det);

    let scale = a
        .iter()
        .flat_map(|row| row.iter())
        .map(|z| z.norm())
        .fold(T::zero(), T::max)
        .max(T::min_positive_value());
    let mut pairs: [Eigenpair<T, 3>; 3] = core::array::from_fn(|k| Eigenpair {
        value: roots[k] + shift,
        vector: [C::new(T::zero(), T::zero()); 3],
    });
    let mut used: Vec<[C<T>; 3]> = Vec::with_capacity(3);
    for (k, pair) in pairs.iter_mut().enumerate() {
        let mut rows = a;
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] -= roots[k];
        }
        pair.vector = null_vector_3(&rows, scale, &used);
        used.push(pair.vector);
    }
    sorted(pairs)
}

/// Null vector of a (numerically) singular 3×3 matrix. When the null space
/// is two-dimensional, vectors already handed out for a repeated eigenvalue
/// are avoided.
fn null_vector_3<T: Real>(rows: &[[C<T>; 3]; 3], scale: T, used: &[[C<T>; 3]]) -> [C<T>; 3] {
    let candidates = [
        cross(&rows[0], &rows[1]),
        cross(&rows[0], &rows[2]),
        cross(&rows[1], &rows[2]),
    ];
    let best = candidates
        .iter()
        .copied()
        .max_by(|x, y| norm_sqr3(x).partial_cmp(&norm_sqr3(y)).unwrap_or(Ordering::Equal))
        .expect("three candidates");
    let rank2_floor = T::lit(1e-20) * scale.powi(4);
    if norm_sqr3(&best) > rank2_floor {
        return normalize(best);
    }
    // rank <= 1: the null space is orthogonal (bilinearly) to the dominant row
    let row = rows
        .iter()
        .copied()
        .max_by(|x, y| norm_sqr3(x).partial_cmp(&norm_sqr3(y)).unwrap_or(Ordering::Equal))
        .expect("three rows");
    if norm_sqr3(&row) <= T::lit(1e-20) * scale * scale {
        // zero matrix: any vector, pick the first unused unit vector
        for i in 0..3 {
            let e = unit::<T, 3>(i);
            if !used.iter().any(|u| u == &e) {
                return e;
            }
        }
        return unit(0);
    }
    let mut basis = Vec::with_capacity(2);
    for i in 0..3 {
        let c = cross(&row, &unit::<T, 3>(i));
        if norm_sqr3(&c) > T::lit(1e-20) * norm_sqr3(&row) {
            basis.push(normalize(c));
        }
    }
    basis.sort_by(|x, y| norm_sqr3(y).partial_cmp(&norm_sqr3(x)).unwrap_or(Ordering::Equal));
    let first = basis[0];
    // second basis vector of the null space, independent of the first
    let second = normalize(cross(&row, &first.map(|z| z.conj())));
    let overlap = |u: &[C<T>; 3], v: &[C<T>; 3]| -> T {
        u.iter().zip(v).fold(C::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b).norm()
    };
    let fresh = |v: &[C<T>; 3]| used.iter().all(|u| overlap(u, v) < T::lit(0.999));
    if fresh(&first) {
        first
    } else if norm_sqr3(&second) > T::zero() && fresh(&second) {
        second
    } else {
        first
    }
}

/// `vᵀ A v` (bilinear, no conjugation).
pub fn bilinear<T: Real, const N: usize>(v: &[C<T>; N], a: &[[C<T>; N]; N]) -> C<T> {
    let mut acc = C::new(T::zero(), T::zero());
    for i in 0..N {
        for j in 0..N {
            acc += v[i] * a[i][j] * v[j];
        }
    }
    acc
}

/// First-order eigenvalue derivative `vᵀ (dM) v / vᵀ v` for a complex
/// symmetric matrix, whose left eigenvectors are the transposed right ones.
pub fn symmetric_eigenvalue_derivative<T: Real, const N: usize>(v: &[C<T>; N], dm: &[[C<T>; N]; N]) -> C<T> {
    let norm = v.iter().fold(C::new(T::zero(), T::zero()), |acc, z| acc + z * z);
    bilinear(v, dm) / norm
}
