//! Small fixed-size complex linear algebra for the two-qubit simulator.
//!
//! Everything here is sized for a 4-dimensional Hilbert space: 4x4 operator
//! matrices and the 16x16 superoperators acting on row-major-vectorised
//! density matrices. No allocation-free cleverness beyond plain arrays; the
//! hot path is the 16x16 matrix product.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type M2 = [[C64; 2]; 2];
pub type M4 = [[C64; 4]; 4];
pub type M16 = [[C64; 16]; 16];
pub type V16 = [C64; 16];

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn zeros4() -> M4 {
    [[ZERO; 4]; 4]
}

pub fn eye4() -> M4 {
    let mut m = zeros4();
    for i in 0..4 {
        m[i][i] = ONE;
    }
    m
}

pub fn add4(a: &M4, b: &M4) -> M4 {
    let mut r = zeros4();
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = a[i][j] + b[i][j];
        }
    }
    r
}

pub fn scale4(a: &M4, s: C64) -> M4 {
    let mut r = zeros4();
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = a[i][j] * s;
        }
    }
    r
}

pub fn mul4(a: &M4, b: &M4) -> M4 {
    let mut r = zeros4();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            for j in 0..4 {
                r[i][j] += aik * b[k][j];
            }
        }
    }
    r
}

/// Conjugate transpose.
pub fn adj4(a: &M4) -> M4 {
    let mut r = zeros4();
    for i in 0..4 {
        for j in 0..4 {
            r[i][j] = a[j][i].conj();
        }
    }
    r
}

pub fn trace4(a: &M4) -> C64 {
    a[0][0] + a[1][1] + a[2][2] + a[3][3]
}

/// Kronecker product of two single-qubit operators, first factor = qubit A.
pub fn kron22(a: &M2, b: &M2) -> M4 {
    let mut r = zeros4();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    r[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    r
}

/// Largest row sum of absolute values; cheap upper bound on the spectral
/// radius of a Hermitian matrix (Gershgorin).
pub fn inf_norm4(a: &M4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        let mut s = 0.0;
        for j in 0..4 {
            s += a[i][j].norm();
        }
        if s > worst {
            worst = s;
        }
    }
    worst
}

/// Eigenvalues of a Hermitian 4x4, ascending. Cyclic complex Jacobi; the
/// matrix is tiny so convergence is a handful of sweeps.
pub fn eigvals_hermitian4(a: &M4) -> [f64; 4] {
    let mut m = *a;
    for _sweep in 0..40 {
        let mut off = 0.0f64;
        for p in 0..4 {
            for q in (p + 1)..4 {
                off += m[p][q].norm_sqr();
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = m[p][q];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                // Phase rotation makes the (p,q) element real, then an
                // ordinary real Jacobi rotation zeroes it.
                let phase = apq / C64::new(r, 0.0);
                let app = m[p][p].re;
                let aqq = m[q][q].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                // Column rotation: col_p' = c*col_p - s*conj(phase)*col_q,
                // col_q' = s*phase*col_p + c*col_q, then the matching row op.
                let sp = C64::new(s, 0.0) * phase;
                let spc = sp.conj();
                for i in 0..4 {
                    let aip = m[i][p];
                    let aiq = m[i][q];
                    m[i][p] = aip * c - aiq * spc;
                    m[i][q] = aip * sp + aiq * c;
                }
                for j in 0..4 {
                    let apj = m[p][j];
                    let aqj = m[q][j];
                    m[p][j] = apj * c - aqj * sp;
                    m[q][j] = apj * spc + aqj * c;
                }
            }
        }
    }
    let mut ev = [m[0][0].re, m[1][1].re, m[2][2].re, m[3][3].re];
    ev.sort_by(|x, y| x.partial_cmp(y).expect("eigenvalues are finite"));
    ev
}

pub fn zeros16() -> M16 {
    [[ZERO; 16]; 16]
}

pub fn eye16() -> M16 {
    let mut m = zeros16();
    for i in 0..16 {
        m[i][i] = ONE;
    }
    m
}

pub fn mul16(a: &M16, b: &M16) -> M16 {
    let mut r = zeros16();
    for i in 0..16 {
        for k in 0..16 {
            let aik = a[i][k];
            if aik == ZERO {
                continue;
            }
            let row = &b[k];
            let out = &mut r[i];
            for j in 0..16 {
                out[j] += aik * row[j];
            }
        }
    }
    r
}

pub fn matvec16(a: &M16, v: &V16) -> V16 {
    let mut r = [ZERO; 16];
    for i in 0..16 {
        let mut acc = ZERO;
        let row = &a[i];
        for j in 0..16 {
            acc += row[j] * v[j];
        }
        r[i] = acc;
    }
    r
}

/// Maximum absolute column sum (induced 1-norm).
pub fn norm1_16(a: &M16) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..16 {
        let mut s = 0.0;
        for i in 0..16 {
            s += a[i][j].norm();
        }
        if s > worst {
            worst = s;
        }
    }
    worst
}

/// Matrix exponential by scaling-and-squaring with an adaptive Taylor series.
/// The scaled norm is kept at or below 1/4 so the series converges in a dozen
/// terms; generators here are Lindbladians, whose exponentials are
/// contractions, so the repeated squaring is well behaved.
pub fn expm16(a: &M16) -> M16 {
    let norm = norm1_16(a);
    let mut squarings = 0u32;
    let mut scale = 1.0f64;
    if norm > 0.25 {
        squarings = libm::ceil(libm::log2(norm / 0.25)) as u32;
        scale = libm::pow(0.5, squarings as f64);
    }
    let mut x = zeros16();
    for i in 0..16 {
        for j in 0..16 {
            x[i][j] = a[i][j] * scale;
        }
    }
    let mut result = eye16();
    let mut term = eye16();
    for k in 1..=30u32 {
        term = mul16(&term, &x);
        let inv_k = C64::new(1.0 / k as f64, 0.0);
        let mut tnorm = 0.0f64;
        for i in 0..16 {
            for j in 0..16 {
                term[i][j] *= inv_k;
                result[i][j] += term[i][j];
                tnorm += term[i][j].norm_sqr();
            }
        }
        if tnorm < 1e-34 {
            break;
        }
    }
    for _ in 0..squarings {
        result = mul16(&result, &result);
    }
    result
}

/// a^k by binary exponentiation.
pub fn pow16(a: &M16, mut k: u64) -> M16 {
    let mut result = eye16();
    let mut base = *a;
    while k > 0 {
        if k & 1 == 1 {
            result = mul16(&result, &base);
        }
        k >>= 1;
        if k > 0 {
            base = mul16(&base, &base);
        }
    }
    result
}

/// Row-major vectorisation: v[4r + c] = rho[r][c].
pub fn vec_rho(rho: &M4) -> V16 {
    let mut v = [ZERO; 16];
    for r in 0..4 {
        for c in 0..4 {
            v[4 * r + c] = rho[r][c];
        }
    }
    v
}

pub fn unvec_rho(v: &V16) -> M4 {
    let mut rho = zeros4();
    for r in 0..4 {
        for c in 0..4 {
            rho[r][c] = v[4 * r + c];
        }
    }
    rho
}

/// Superoperator for rho -> A rho (row-major vectorisation).
pub fn super_left(a: &M4) -> M16 {
    let mut s = zeros16();
    for r in 0..4 {
        for k in 0..4 {
            if a[r][k] == ZERO {
                continue;
            }
            for c in 0..4 {
                s[4 * r + c][4 * k + c] = a[r][k];
            }
        }
    }
    s
}

/// Superoperator for rho -> rho B.
pub fn super_right(b: &M4) -> M16 {
    let mut s = zeros16();
    for l in 0..4 {
        for c in 0..4 {
            if b[l][c] == ZERO {
                continue;
            }
            for r in 0..4 {
                s[4 * r + c][4 * r + l] = b[l][c];
            }
        }
    }
    s
}

/// Superoperator for rho -> A rho B.
pub fn super_sandwich(a: &M4, b: &M4) -> M16 {
    mul16(&super_left(a), &super_right(b))
}

/// Solve a small dense real system in place (partial pivoting). Used by the
/// Gauss-Newton normal equations; n never exceeds 8.
pub fn solve_dense(a: &mut [[f64; 8]; 8], b: &mut [f64; 8], n: usize) -> Option<[f64; 8]> {
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if libm::fabs(a[r][col]) > libm::fabs(a[piv][col]) {
                piv = r;
            }
        }
        if libm::fabs(a[piv][col]) < 1e-300 {
            return None;
        }
        if piv != col {
            a.swap(piv, col);
            b.swap(piv, col);
        }
        let d = a[col][col];
        for r in (col + 1)..n {
            let f = a[r][col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 8];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for c in (col + 1)..n {
            acc -= a[col][c] * x[c];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}
