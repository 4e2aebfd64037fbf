//! Small dense complex linear algebra: the 4x4 left eigensolver used for
//! stability matrices, plus helpers shared by the quantum layer.

use nalgebra::{Matrix4, Vector4};

use crate::{Error, Result, C64};

pub type CMat4 = Matrix4<C64>;
pub type CVec4 = Vector4<C64>;

/// Residual contract for accepted eigenpairs, relative to `||L||`.
pub const EIG_RESIDUAL_TOL: f64 = 1e-10;

/// Eigenvalues closer than this (relative to `||L||`) are treated as one cluster.
const CLUSTER_TOL: f64 = 1e-6;

/// Eigenvalues and left eigenvectors of a 4x4 matrix, `u_j^dagger L = lambda_j u_j^dagger`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigensystem {
    pub eigenvalues: [C64; 4],
    /// Columns are the left eigenvectors `u_j`, unit-normalized unless built
    /// from closed forms.
    pub left: CMat4,
    /// `max_j ||u_j^dagger L - lambda_j u_j^dagger|| / (||L|| ||u_j||)`.
    pub residual: f64,
}

impl Eigensystem {
    /// Wraps a known eigensystem, checking the residual contract against `l`.
    pub fn from_parts(l: &CMat4, eigenvalues: [C64; 4], left: CMat4) -> Result<Self> {
        let residual = left_residual(l, &eigenvalues, &left);
        if residual > EIG_RESIDUAL_TOL {
            return Err(Error::DefectiveMatrix(residual));
        }
        Ok(Self {
            eigenvalues,
            left,
            residual,
        })
    }

    pub fn u(&self, j: usize) -> CVec4 {
        self.left.column(j).into_owned()
    }

    pub fn max_real_part(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// The eigenvalue with the largest real part.
    pub fn leading(&self) -> C64 {
        *self
            .eigenvalues
            .iter()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .expect("four eigenvalues")
    }

    /// `U = col(u_1^dagger, ..., u_4^dagger)`, rows are the conjugated left vectors.
    pub fn projection_matrix(&self) -> CMat4 {
        self.left.adjoint()
    }
}

pub fn frobenius(m: &CMat4) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius-norm condition number, infinite for singular input.
pub fn condition_number(m: &CMat4) -> f64 {
    match m.try_inverse() {
        Some(inv) => frobenius(m) * frobenius(&inv),
        None => f64::INFINITY,
    }
}

fn left_residual(l: &CMat4, eigenvalues: &[C64; 4], left: &CMat4) -> f64 {
    let scale = frobenius(l).max(f64::MIN_POSITIVE);
    (0..4)
        .map(|j| {
            let u = left.column(j);
            let row = u.adjoint() * l - u.adjoint() * eigenvalues[j];
            let un = u.norm();
            if un == 0.0 {
                f64::INFINITY
            } else {
                row.norm() / (scale * un)
            }
        })
        .fold(0.0, f64::max)
}

/// Coefficients `[c0, c1, c2, c3]` of `det(z I - L) = z^4 + c3 z^3 + c2 z^2 + c1 z + c0`
/// by the Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(l: &CMat4) -> [C64; 4] {
    let id = CMat4::identity();
    let mut coeffs = [C64::new(0.0, 0.0); 4];
    let mut m = CMat4::zeros();
    let mut c_prev = C64::new(1.0, 0.0);
    for k in 1..=4 {
        m = l * m + id * c_prev;
        let c = -(l * m).trace() / k as f64;
        coeffs[4 - k] = c;
        c_prev = c;
    }
    coeffs
}

fn poly_eval(coeffs: &[C64; 4], z: C64) -> (C64, C64) {
    // monic quartic and its derivative by Horner
    let mut p = C64::new(1.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All four roots of the monic quartic, Aberth-Ehrlich followed by Newton polishing.
pub fn quartic_roots(coeffs: &[C64; 4]) -> [C64; 4] {
    let bound = 1.0 + coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let r0 = 0.5 * bound;
    let mut z: [C64; 4] =
        std::array::from_fn(|k| C64::from_polar(r0, 0.4 + k as f64 * std::f64::consts::FRAC_PI_2));
    for _ in 0..500 {
        let mut max_step = 0.0_f64;
        for k in 0..4 {
            let (p, dp) = poly_eval(coeffs, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..4)
                .filter(|&m| m != k)
                .map(|m| {
                    let d = z[k] - z[m];
                    if d.norm() == 0.0 {
                        C64::new(0.0, 0.0)
                    } else {
                        1.0 / d
                    }
                })
                .sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm());
            }
        }
        if max_step <= 1e-15 * bound {
            break;
        }
    }
    for root in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = poly_eval(coeffs, *root);
            if dp.norm() == 0.0 || p.norm() == 0.0 {
                break;
            }
            let next = *root - p / dp;
            let (pn, _) = poly_eval(coeffs, next);
            if pn.norm() < p.norm() {
                *root = next;
            } else {
                break;
            }
        }
    }
    z
}

fn start_vector(k: usize) -> CVec4 {
    let mut v = CVec4::from_element(C64::new(0.05, 0.02));
    v[k % 4] = C64::new(1.0, 0.0);
    v[(k + 1) % 4] += C64::new(0.0, 0.3);
    v.normalize()
}

fn project_out(v: &mut CVec4, basis: &[CVec4]) {
    for b in basis {
        let c = b.dotc(v);
        *v -= b * c;
    }
}

/// Shifted inverse iteration on `L^dagger - conj(lambda)` restricted to the
/// orthogonal complement of `basis`, with Rayleigh-quotient refinement of the
/// eigenvalue.
fn inverse_iteration(
    l: &CMat4,
    ladj: &CMat4,
    id: &CMat4,
    lambda: C64,
    k: usize,
    basis: &[CVec4],
    scale: f64,
) -> (C64, CVec4) {
    let mut lam = lambda;
    let mut v = start_vector(k);
    project_out(&mut v, basis);
    v = v.normalize();
    let mut shift_eps = 1e-13 * scale;
    let resid = |v: &CVec4, lam: C64| (v.adjoint() * l - v.adjoint() * lam).norm();
    for _ in 0..8 {
        let shift = lam.conj() + C64::new(shift_eps, 0.7 * shift_eps);
        let solved = match (ladj - id * shift).lu().solve(&v) {
            Some(x) if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => x,
            _ => {
                shift_eps *= 1e3;
                continue;
            }
        };
        let mut w = solved;
        project_out(&mut w, basis);
        let n = w.norm();
        if n == 0.0 || !n.is_finite() {
            shift_eps *= 1e3;
            continue;
        }
        v = w.unscale(n);
        let rq = (v.adjoint() * l * v)[(0, 0)];
        if resid(&v, rq) < resid(&v, lam) {
            lam = rq;
        }
    }
    (lam, v)
}

/// Left eigensystem of a general 4x4 complex matrix.
///
/// Eigenvalues come from the characteristic polynomial; each left vector is
/// obtained by shifted inverse iteration on `L^dagger - conj(lambda)`.
/// Vectors within a cluster of (numerically) equal eigenvalues are
/// re-orthogonalized against each other, so a defective cluster shows up as a
/// residual failure.
pub fn left_eigensystem(l: &CMat4) -> Result<Eigensystem> {
    if l.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let scale = frobenius(l);
    if scale == 0.0 {
        return Ok(Eigensystem {
            eigenvalues: [C64::new(0.0, 0.0); 4],
            left: CMat4::identity(),
            residual: 0.0,
        });
    }
    let mut lambdas = quartic_roots(&characteristic_polynomial(l));
    lambdas.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    // cluster assignment in sorted order
    let mut cluster = [0usize; 4];
    for k in 1..4 {
        let mut c = k;
        for m in 0..k {
            if (lambdas[k] - lambdas[m]).norm() <= CLUSTER_TOL * scale {
                c = cluster[m];
                break;
            }
        }
        cluster[k] = c;
    }
    // members of a cluster share the averaged eigenvalue
    for k in 0..4 {
        let members: Vec<usize> = (0..4).filter(|&m| cluster[m] == cluster[k]).collect();
        if members.len() > 1 {
            let mean: C64 = members.iter().map(|&m| lambdas[m]).sum::<C64>() / members.len() as f64;
            lambdas[k] = mean;
        }
    }

    let ladj = l.adjoint();
    let id = CMat4::identity();
    let mut left = CMat4::zeros();
    for k in 0..4 {
        let siblings: Vec<CVec4> = (0..k)
            .filter(|&m| cluster[m] == cluster[k])
            .map(|m| left.column(m).into_owned())
            .collect();
        let (mut lam, mut v) = inverse_iteration(l, &ladj, &id, lambdas[k], k, &[], scale);
        // two roots of one eigenspace may return the same vector
        let parallel = (0..k).any(|m| {
            (lambdas[m] - lam).norm() <= 1e-4 * scale && left.column(m).dotc(&v).norm() > 1.0 - 1e-12
        });
        if !siblings.is_empty() || parallel {
            let basis: Vec<CVec4> = (0..k)
                .filter(|&m| cluster[m] == cluster[k] || (lambdas[m] - lam).norm() <= 1e-4 * scale)
                .map(|m| left.column(m).into_owned())
                .collect();
            (lam, v) = inverse_iteration(l, &ladj, &id, lam, k, &basis, scale);
        }
        lambdas[k] = lam;
        left.set_column(k, &v);
    }
    let residual = left_residual(l, &lambdas, &left);
    if residual > EIG_RESIDUAL_TOL || !residual.is_finite() {
        return Err(Error::DefectiveMatrix(residual));
    }
    Ok(Eigensystem {
        eigenvalues: lambdas,
        left,
        residual,
    })
}

/// Largest pairwise distance under the best matching of two eigenvalue sets.
pub fn multiset_distance(a: &[C64; 4], b: &[C64; 4]) -> f64 {
    let mut best = f64::INFINITY;
    let mut perm = [0usize, 1, 2, 3];
    // Heap's algorithm over the 24 permutations
    let mut c = [0usize; 4];
    let eval = |p: &[usize; 4]| (0..4).map(|j| (a[j] - b[p[j]]).norm()).fold(0.0, f64::max);
    best = best.min(eval(&perm));
    let mut i = 0;
    while i < 4 {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(eval(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

/// Solves the real 4x4 system `a x = b`.
pub fn solve_real4(a: &Matrix4<f64>, b: &Vector4<f64>) -> Option<Vector4<f64>> {
    a.lu().solve(b)
}
