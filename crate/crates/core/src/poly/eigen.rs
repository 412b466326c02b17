//! Real nonsymmetric eigenvalues via balancing, Hessenberg reduction and the
//! Francis double-shift QR iteration.
//!
//! Only eigenvalues are produced; no Schur vectors are accumulated.

use num_complex::Complex64;

const RADIX: f64 = 2.0;
const MAX_ITERATIONS_PER_ROOT: usize = 60;

/// Dense row-major square matrix used as QR workspace.
#[derive(Clone, Debug)]
pub(crate) struct Square {
    n: usize,
    data: Vec<f64>,
}

impl Square {
    pub(crate) fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub(crate) fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }
}

impl std::ops::Index<(usize, usize)> for Square {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Square {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct NoConvergence;

/// Eigenvalues of a general real square matrix.
pub(crate) fn eigenvalues(mut a: Square) -> Result<Vec<Complex64>, NoConvergence> {
    balance(&mut a);
    reduce_to_hessenberg(&mut a);
    hessenberg_qr(a)
}

/// Eigenvalues of a matrix already in upper Hessenberg form (e.g. a companion matrix).
pub(crate) fn hessenberg_eigenvalues(mut a: Square) -> Result<Vec<Complex64>, NoConvergence> {
    balance(&mut a);
    hessenberg_qr(a)
}

/// Diagonal similarity scaling by powers of two so that row and column norms
/// are comparable. Preserves Hessenberg structure and is exact in floating point.
fn balance(a: &mut Square) {
    let n = a.dim();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / RADIX;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Gaussian elimination with pivoting to upper Hessenberg form.
fn reduce_to_hessenberg(a: &mut Square) {
    let n = a.dim();
    for m in 1..n.saturating_sub(1) {
        let mut x = 0.0_f64;
        let mut pivot = m;
        for j in m..n {
            if a[(j, m - 1)].abs() > x.abs() {
                x = a[(j, m - 1)];
                pivot = j;
            }
        }
        if pivot != m {
            for j in (m - 1)..n {
                let tmp = a[(pivot, j)];
                a[(pivot, j)] = a[(m, j)];
                a[(m, j)] = tmp;
            }
            for j in 0..n {
                let tmp = a[(j, pivot)];
                a[(j, pivot)] = a[(j, m)];
                a[(j, m)] = tmp;
            }
        }
        if x != 0.0 {
            for i in (m + 1)..n {
                let mut y = a[(i, m - 1)];
                if y != 0.0 {
                    y /= x;
                    a[(i, m - 1)] = y;
                    for j in m..n {
                        a[(i, j)] -= y * a[(m, j)];
                    }
                    for j in 0..n {
                        a[(j, m)] += y * a[(j, i)];
                    }
                }
            }
        }
    }
    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            a[(i, j)] = 0.0;
        }
    }
}

#[inline]
fn sign(a: f64, b: f64) -> f64 {
    if b >= 0.0 {
        a.abs()
    } else {
        -a.abs()
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix.
fn hessenberg_qr(mut a: Square) -> Result<Vec<Complex64>, NoConvergence> {
    let n = a.dim();
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    if n == 0 {
        return Ok(Vec::new());
    }

    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let top = nn as usize;
            // look for a single small subdiagonal element
            let mut l = top;
            while l >= 1 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() + s == s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }

            let mut x = a[(top, top)];
            if l == top {
                wr[top] = x + t;
                wi[top] = 0.0;
                nn -= 1;
                break;
            }
            let mut y = a[(top - 1, top - 1)];
            let mut w = a[(top, top - 1)] * a[(top - 1, top)];
            if l == top - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let mut z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    z = p + sign(z, p);
                    wr[top - 1] = x + z;
                    wr[top] = x + z;
                    if z != 0.0 {
                        wr[top] = x - w / z;
                    }
                    wi[top - 1] = 0.0;
                    wi[top] = 0.0;
                } else {
                    wr[top - 1] = x + p;
                    wr[top] = x + p;
                    wi[top - 1] = -z;
                    wi[top] = z;
                }
                nn -= 2;
                break;
            }

            if its == MAX_ITERATIONS_PER_ROOT {
                return Err(NoConvergence);
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 0..=top {
                    a[(i, i)] -= x;
                }
                let s = a[(top, top - 1)].abs() + a[(top - 1, top - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // form shift and look for two consecutive small subdiagonal elements
            let mut m = top - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u + v == v {
                    break;
                }
                m -= 1;
            }
            for i in (m + 2)..=top {
                a[(i, i - 2)] = 0.0;
                if i != m + 2 {
                    a[(i, i - 3)] = 0.0;
                }
            }

            // double QR step on rows l..=top and columns m..=top
            let mut k = m;
            while k < top {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = 0.0;
                    if k != top - 1 {
                        r = a[(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s != 0.0 {
                    if k == m {
                        if l != m {
                            a[(k, k - 1)] = -a[(k, k - 1)];
                        }
                    } else {
                        a[(k, k - 1)] = -s * x;
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    let z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=top {
                        let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                        if k != top - 1 {
                            pp += r * a[(k + 2, j)];
                            a[(k + 2, j)] -= pp * z;
                        }
                        a[(k + 1, j)] -= pp * y;
                        a[(k, j)] -= pp * x;
                    }
                    let mmin = if top < k + 3 { top } else { k + 3 };
                    for i in l..=mmin {
                        let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                        if k != top - 1 {
                            pp += z * a[(i, k + 2)];
                            a[(i, k + 2)] -= pp * r;
                        }
                        a[(i, k + 1)] -= pp * q;
                        a[(i, k)] -= pp;
                    }
                }
                k += 1;
            }
        }
    }

    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex64::new(re, im))
        .collect())
}
