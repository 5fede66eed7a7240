//! Small dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense complex square matrix on the full spin space or on a sector.
pub type Operator = DMatrix<Complex64>;

/// Dense complex column vector.
pub type StateVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> Operator {
    Operator::identity(dim, dim)
}

/// Builds a dense operator from row-major nested arrays.
pub fn from_rows<const N: usize>(rows: [[Complex64; N]; N]) -> Operator {
    Operator::from_fn(N, N, |r, c| rows[r][c])
}

pub fn to_complex(m: &DMatrix<f64>) -> Operator {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Largest entry modulus.
pub fn max_abs(m: &Operator) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &Operator) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// `max |U^dagger U - I|`.
pub fn unitarity_defect(u: &Operator) -> f64 {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - identity(n)))
}

pub fn hermiticity_defect(h: &Operator) -> f64 {
    max_abs(&(h - h.adjoint()))
}

pub fn is_unitary(u: &Operator, tol: f64) -> bool {
    u.is_square() && unitarity_defect(u) < tol
}

pub fn is_hermitian(h: &Operator, tol: f64) -> bool {
    h.is_square() && hermiticity_defect(h) < tol
}

/// Kronecker product `a ⊗ b` (first factor is the most significant index).
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    a.kronecker(b)
}

/// Phase-insensitive entrywise distance.
///
/// The phase `e^{i phi}` is fixed by aligning the largest-modulus entry of
/// `v` with the same entry of `u`; the result is `max |u - e^{i phi} v|`.
pub fn phase_distance(u: &Operator, v: &Operator) -> f64 {
    assert_eq!(u.shape(), v.shape(), "phase_distance: shape mismatch");
    let (k, _) =
        v.iter().enumerate().fold((0, -1.0), |(bk, bm), (k, z)| if z.norm() > bm { (k, z.norm()) } else { (bk, bm) });
    let phase = if u[k].norm() > 0.0 && v[k].norm() > 0.0 {
        let z = u[k] / v[k];
        z / z.norm()
    } else {
        ONE
    };
    max_abs(&(u - v * phase))
}

/// Unitary polar factor `W (W^dagger W)^{-1/2}` computed from the SVD.
pub fn polar_unitary(w: &Operator) -> Operator {
    let svd = w.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    u * v_t
}

/// Haar-random unitary via QR of a complex Ginibre matrix with phase fix.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let z = Operator::from_fn(dim, dim, |_, _| c(gaussian(rng), gaussian(rng)));
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= ph;
        }
    }
    q
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Determinant of a 4x4 matrix together with its adjugate (transpose of the
/// cofactor matrix), so that `d det = tr(adj . dW)` holds even for singular input.
pub fn det_adjugate_4(w: &Operator) -> (Complex64, Operator) {
    assert_eq!(w.shape(), (4, 4));
    let mut adj = Operator::zeros(4, 4);
    for r in 0..4 {
        for col in 0..4 {
            let minor = minor3(w, r, col);
            let sign = if (r + col) % 2 == 0 { 1.0 } else { -1.0 };
            // adj = cofactor^T
            adj[(col, r)] = minor * sign;
        }
    }
    let det = (0..4).map(|k| w[(0, k)] * adj[(k, 0)]).sum();
    (det, adj)
}

fn minor3(w: &Operator, skip_r: usize, skip_c: usize) -> Complex64 {
    let rows: Vec<usize> = (0..4).filter(|&r| r != skip_r).collect();
    let cols: Vec<usize> = (0..4).filter(|&c| c != skip_c).collect();
    let a = |i: usize, j: usize| w[(rows[i], cols[j])];
    a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0))
}

/// Pauli matrices (x, y, z).
pub fn paulis() -> [Operator; 3] {
    [from_rows([[ZERO, ONE], [ONE, ZERO]]), from_rows([[ZERO, -I], [I, ZERO]]), from_rows([[ONE, ZERO], [ZERO, -ONE]])]
}

/// `exp(-i theta (n . sigma) / 2)` for a unit axis `n`.
pub fn su2_rotation(axis: [f64; 3], theta: f64) -> Operator {
    let [x, y, z] = paulis();
    let gen = x * c(axis[0], 0.0) + y * c(axis[1], 0.0) + z * c(axis[2], 0.0);
    identity(2) * c((theta / 2.0).cos(), 0.0) - gen * c(0.0, (theta / 2.0).sin())
}
