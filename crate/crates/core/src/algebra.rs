//! Concrete finite-dimensional complex Banach algebras.
//!
//! Three unital algebras are provided:
//!
//! * [`AlgebraKind::PointwiseCn`]: `C^n` with coordinatewise product and the
//!   sup norm.
//! * [`AlgebraKind::TruncatedPoly`]: `C[t]/(t^N)` with the truncated Cauchy
//!   product and the l1 coefficient norm (submultiplicative for convolution).
//! * [`AlgebraKind::MatrixCStar`]: `n x n` complex matrices with the operator
//!   norm; a C*-algebra under the conjugate transpose.
//!
//! Elements are plain coefficient vectors tagged with their descriptor.
//! Matrices are stored row-major. Equality is never tested bitwise by the
//! library; use [`Element::approx_eq`].

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, stream_rng};

/// Default absolute tolerance for element comparisons.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Tolerance used when checking that an argument is unitary.
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgebraKind {
    PointwiseCn,
    TruncatedPoly,
    MatrixCStar,
}

impl AlgebraKind {
    pub fn name(self) -> &'static str {
        match self {
            AlgebraKind::PointwiseCn => "pointwise",
            AlgebraKind::TruncatedPoly => "poly",
            AlgebraKind::MatrixCStar => "matrix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDescriptor", into = "RawDescriptor")]
pub struct AlgebraDescriptor {
    kind: AlgebraKind,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    kind: AlgebraKind,
    dim: usize,
}

impl TryFrom<RawDescriptor> for AlgebraDescriptor {
    type Error = Error;

    fn try_from(raw: RawDescriptor) -> Result<Self> {
        AlgebraDescriptor::new(raw.kind, raw.dim)
    }
}

impl From<AlgebraDescriptor> for RawDescriptor {
    fn from(d: AlgebraDescriptor) -> Self {
        RawDescriptor {
            kind: d.kind,
            dim: d.dim,
        }
    }
}

impl fmt::Display for AlgebraDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind.name(), self.dim)
    }
}

impl AlgebraDescriptor {
    pub fn new(kind: AlgebraKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension {
                dim,
                reason: "dimension must be at least 1",
            });
        }
        Ok(AlgebraDescriptor { kind, dim })
    }

    pub fn pointwise(n: usize) -> Result<Self> {
        Self::new(AlgebraKind::PointwiseCn, n)
    }

    pub fn poly(order: usize) -> Result<Self> {
        Self::new(AlgebraKind::TruncatedPoly, order)
    }

    pub fn matrix(n: usize) -> Result<Self> {
        Self::new(AlgebraKind::MatrixCStar, n)
    }

    pub fn kind(&self) -> AlgebraKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// All three kinds carry a unit.
    pub fn unital(&self) -> bool {
        true
    }

    /// Number of complex coefficients of an element (`n*n` for matrices).
    pub fn basis_len(&self) -> usize {
        match self.kind {
            AlgebraKind::MatrixCStar => self.dim * self.dim,
            _ => self.dim,
        }
    }

    pub fn is_commutative(&self) -> bool {
        self.kind != AlgebraKind::MatrixCStar || self.dim == 1
    }

    fn require_matrix(&self) -> Result<usize> {
        match self.kind {
            AlgebraKind::MatrixCStar => Ok(self.dim),
            _ => Err(Error::WrongKind {
                expected: "matrix",
                found: *self,
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Element {
    alg: AlgebraDescriptor,
    coeffs: Vec<Complex64>,
}

impl Element {
    pub fn zero(alg: AlgebraDescriptor) -> Self {
        Element {
            alg,
            coeffs: vec![ZERO; alg.basis_len()],
        }
    }

    /// The unit: `1` in the polynomial ring, the all-ones vector, the identity.
    pub fn one(alg: AlgebraDescriptor) -> Self {
        let mut e = Self::zero(alg);
        match alg.kind {
            AlgebraKind::PointwiseCn => e.coeffs.fill(ONE),
            AlgebraKind::TruncatedPoly => e.coeffs[0] = ONE,
            AlgebraKind::MatrixCStar => {
                for i in 0..alg.dim {
                    e.coeffs[i * alg.dim + i] = ONE;
                }
            }
        }
        e
    }

    /// The `i`-th basis vector (matrix units are flattened row-major).
    pub fn basis(alg: AlgebraDescriptor, i: usize) -> Self {
        let mut e = Self::zero(alg);
        e.coeffs[i] = ONE;
        e
    }

    pub fn from_coeffs(alg: AlgebraDescriptor, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != alg.basis_len() {
            return Err(Error::TensorShape {
                expected: alg.basis_len(),
                found: coeffs.len(),
            });
        }
        Ok(Element { alg, coeffs })
    }

    /// Convenience constructor from real coefficients.
    pub fn from_real(alg: AlgebraDescriptor, coeffs: &[f64]) -> Result<Self> {
        Self::from_coeffs(alg, coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn algebra(&self) -> AlgebraDescriptor {
        self.alg
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    fn check_same(&self, other: &Element) -> Result<()> {
        if self.alg != other.alg {
            return Err(Error::AlgebraMismatch {
                left: self.alg,
                right: other.alg,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        Ok(Element { alg: self.alg, coeffs })
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        Ok(Element { alg: self.alg, coeffs })
    }

    pub fn neg(&self) -> Element {
        Element {
            alg: self.alg,
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, lambda: Complex64) -> Element {
        Element {
            alg: self.alg,
            coeffs: self.coeffs.iter().map(|c| lambda * c).collect(),
        }
    }

    /// Multiplication by a real scalar. Powers of two are exact.
    pub fn scale_real(&self, t: f64) -> Element {
        Element {
            alg: self.alg,
            coeffs: self.coeffs.iter().map(|c| c * t).collect(),
        }
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.check_same(other)?;
        let n = self.alg.dim;
        let coeffs = match self.alg.kind {
            AlgebraKind::PointwiseCn => self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).collect(),
            AlgebraKind::TruncatedPoly => {
                // pairs (i, k-i) and (k-i, i) are summed together so the
                // product commutes bitwise
                let (a, b) = (&self.coeffs, &other.coeffs);
                (0..n)
                    .map(|k| {
                        let mut acc = ZERO;
                        for i in 0..=k / 2 {
                            let j = k - i;
                            acc += if i == j { a[i] * b[i] } else { a[i] * b[j] + a[j] * b[i] };
                        }
                        acc
                    })
                    .collect()
            }
            AlgebraKind::MatrixCStar => {
                let mut out = vec![ZERO; n * n];
                for i in 0..n {
                    for k in 0..n {
                        let a = self.coeffs[i * n + k];
                        for j in 0..n {
                            out[i * n + j] += a * other.coeffs[k * n + j];
                        }
                    }
                }
                out
            }
        };
        Ok(Element { alg: self.alg, coeffs })
    }

    /// Involution: conjugate transpose for matrices, coefficientwise
    /// conjugation for the commutative kinds.
    pub fn adjoint(&self) -> Element {
        let n = self.alg.dim;
        let coeffs = match self.alg.kind {
            AlgebraKind::MatrixCStar => {
                let mut out = vec![ZERO; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[j * n + i] = self.coeffs[i * n + j].conj();
                    }
                }
                out
            }
            _ => self.coeffs.iter().map(|c| c.conj()).collect(),
        };
        Element { alg: self.alg, coeffs }
    }

    pub fn norm(&self) -> f64 {
        match self.alg.kind {
            AlgebraKind::PointwiseCn => self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max),
            AlgebraKind::TruncatedPoly => self.coeffs.iter().map(|c| c.norm()).sum(),
            AlgebraKind::MatrixCStar => {
                if self.alg.dim == 1 {
                    return self.coeffs[0].norm();
                }
                if self.is_zero() {
                    return 0.0;
                }
                self.to_matrix().singular_values().max()
            }
        }
    }

    /// `||self - other||`.
    pub fn dist(&self, other: &Element) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    pub fn approx_eq(&self, other: &Element, tol: f64) -> bool {
        self.dist(other).map(|d| d <= tol).unwrap_or(false)
    }

    pub(crate) fn to_matrix(&self) -> DMatrix<Complex64> {
        let n = self.alg.dim;
        DMatrix::from_row_slice(n, n, &self.coeffs)
    }

    pub(crate) fn from_matrix(alg: AlgebraDescriptor, m: &DMatrix<Complex64>) -> Element {
        let n = alg.dim;
        let mut coeffs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                coeffs.push(m[(i, j)]);
            }
        }
        Element { alg, coeffs }
    }

    /// `max(||u u* - e||, ||u* u - e||)`.
    pub fn unitarity_defect(&self) -> f64 {
        let e = Element::one(self.alg);
        let adj = self.adjoint();
        let a = self.mul(&adj).and_then(|p| p.dist(&e)).unwrap_or(f64::INFINITY);
        let b = adj.mul(self).and_then(|p| p.dist(&e)).unwrap_or(f64::INFINITY);
        a.max(b)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn require_unitary(&self) -> Result<()> {
        let defect = self.unitarity_defect();
        if defect <= UNITARY_TOL {
            Ok(())
        } else {
            Err(Error::NotUnitary { defect })
        }
    }
}

/// Gaussian element rescaled to the requested norm, drawn from `rng`.
pub fn random_element_with<R: Rng + ?Sized>(rng: &mut R, alg: AlgebraDescriptor, target_norm: f64) -> Result<Element> {
    if !(target_norm > 0.0 && target_norm.is_finite()) {
        return Err(Error::NonPositiveNorm(target_norm));
    }
    loop {
        let coeffs: Vec<Complex64> = (0..alg.basis_len()).map(|_| complex_gaussian(rng)).collect();
        let g = Element { alg, coeffs };
        let n = g.norm();
        if n > 0.0 {
            return Ok(g.scale_real(target_norm / n));
        }
    }
}

/// Deterministic Gaussian element of norm `target_norm` for `seed`.
pub fn random_element(alg: AlgebraDescriptor, seed: u64, target_norm: f64) -> Result<Element> {
    random_element_with(&mut stream_rng(seed, 0), alg, target_norm)
}

/// Haar-distributed unitary drawn from `rng`: QR of a complex Gaussian
/// matrix with the phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary_with<R: Rng + ?Sized>(rng: &mut R, alg: AlgebraDescriptor) -> Result<Element> {
    let n = alg.require_matrix()?;
    let g = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(Element::from_matrix(alg, &q))
}

pub fn random_unitary(alg: AlgebraDescriptor, seed: u64) -> Result<Element> {
    random_unitary_with(&mut stream_rng(seed, 0), alg)
}

fn hermitian_part(c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    (c + c.adjoint()) * Complex64::new(0.5, 0.0)
}

fn skew_part(c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    // (c - c*) / (2i), Hermitian
    (c - c.adjoint()) * Complex64::new(0.0, -0.5)
}

/// Square root of a positive semidefinite Hermitian matrix. Returns `None`
/// when an eigenvalue is negative beyond rounding.
fn psd_sqrt(m: &DMatrix<Complex64>) -> Option<DMatrix<Complex64>> {
    let n = m.nrows();
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut d = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        let lam = eig.eigenvalues[i];
        if lam < -1e-10 {
            return None;
        }
        d[(i, i)] = Complex64::new(lam.max(0.0).sqrt(), 0.0);
    }
    let v = &eig.eigenvectors;
    Some(v * d * v.adjoint())
}

/// Writes a Hermitian contraction `h` as `(w+ + w-)/2` with
/// `w± = h ± i (e - h^2)^{1/2}` unitary.
fn hermitian_to_unitaries(h: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = h.nrows();
    let id = DMatrix::<Complex64>::identity(n, n);
    let attempt = |h: &DMatrix<Complex64>| psd_sqrt(&(&id - h * h)).map(|s| s * Complex64::new(0.0, 1.0));
    let (h, s) = match attempt(h) {
        Some(s) => (h.clone(), s),
        None => {
            // near-boundary contraction: pull it inside the unit ball once
            let shrunk = h * Complex64::new(1.0 - 1e-12, 0.0);
            match attempt(&shrunk) {
                Some(s) => (shrunk, s),
                None => return Err(Error::Decomposition("e - h^2 is not positive semidefinite".into())),
            }
        }
    };
    Ok((&h + &s, &h - &s))
}

/// Decomposes `x` into at most four scaled unitaries, `x = sum λ_j u_j`,
/// with `sum |λ_j| <= 2 ||x||`.
///
/// `x = ||x|| c` with `||c|| = 1`; a Hermitian `c` is the average of two
/// unitaries, otherwise `c = h + i k` with `h`, `k` Hermitian contractions,
/// each split the same way.
pub fn unitary_decompose(x: &Element) -> Result<Vec<(Complex64, Element)>> {
    let alg = x.algebra();
    alg.require_matrix()?;
    let e = Element::one(alg);
    let norm = x.norm();
    if norm == 0.0 {
        return Ok(vec![(ZERO, e)]);
    }
    if x.unitarity_defect() <= 1e-14 {
        return Ok(vec![(ONE, x.clone())]);
    }
    let c = x.scale_real(1.0 / norm).to_matrix();
    let h = hermitian_part(&c);
    let k = skew_part(&c);
    let half = Complex64::new(0.5 * norm, 0.0);
    let mut out = Vec::with_capacity(4);
    let (w1, w2) = hermitian_to_unitaries(&h)?;
    out.push((half, Element::from_matrix(alg, &w1)));
    out.push((half, Element::from_matrix(alg, &w2)));
    if k.iter().any(|v| v.norm() > 0.0) {
        let (w3, w4) = hermitian_to_unitaries(&k)?;
        let ihalf = Complex64::new(0.0, 0.5 * norm);
        out.push((ihalf, Element::from_matrix(alg, &w3)));
        out.push((ihalf, Element::from_matrix(alg, &w4)));
    }
    for (_, u) in &out {
        let defect = u.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::Decomposition(format!("piece has unitarity defect {defect:e}")));
        }
    }
    Ok(out)
}

/// `sum λ_j u_j`.
pub fn recombine(alg: AlgebraDescriptor, pieces: &[(Complex64, Element)]) -> Result<Element> {
    pieces
        .iter()
        .try_fold(Element::zero(alg), |acc, (lam, u)| acc.add(&u.scale(*lam)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn all_kinds() -> Vec<AlgebraDescriptor> {
        vec![
            AlgebraDescriptor::pointwise(3).unwrap(),
            AlgebraDescriptor::poly(4).unwrap(),
            AlgebraDescriptor::matrix(3).unwrap(),
        ]
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(AlgebraDescriptor::poly(0).is_err());
    }

    #[test]
    fn add_scale_examples() {
        let p2 = AlgebraDescriptor::pointwise(2).unwrap();
        let s = Element::from_real(p2, &[1.0, 0.0]).unwrap().add(&Element::from_real(p2, &[0.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s.coeffs(), &[ONE, ONE]);

        let p3 = AlgebraDescriptor::poly(3).unwrap();
        let x = Element::from_real(p3, &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!(x.scale(c(2.0, 0.0)).coeffs(), &[ZERO, c(2.0, 0.0), ZERO]);
        assert!(x.scale(ZERO).is_zero());
        let y = Element::from_real(p2, &[1.0, 0.0]).unwrap();
        assert_eq!(y.scale(c(0.0, 1.0)).coeffs(), &[c(0.0, 1.0), ZERO]);

        for alg in all_kinds() {
            let x = random_element(alg, 3, 1.5).unwrap();
            assert!(x.add(&Element::zero(alg)).unwrap().approx_eq(&x, 0.0));
            assert!(x.add(&x.neg()).unwrap().is_zero());
        }
    }

    #[test]
    fn mismatch_is_an_error() {
        let a = Element::one(AlgebraDescriptor::poly(3).unwrap());
        let b = Element::one(AlgebraDescriptor::pointwise(3).unwrap());
        assert!(matches!(a.add(&b), Err(Error::AlgebraMismatch { .. })));
        assert!(matches!(a.mul(&b), Err(Error::AlgebraMismatch { .. })));
    }

    #[test]
    fn truncated_products() {
        let p3 = AlgebraDescriptor::poly(3).unwrap();
        let t = Element::from_real(p3, &[0.0, 1.0, 0.0]).unwrap();
        let t2 = t.mul(&t).unwrap();
        assert_eq!(t2.coeffs(), &[ZERO, ZERO, ONE]);
        assert!(t2.mul(&t).unwrap().is_zero());
    }

    #[test]
    fn nilpotent_matrix_squares_to_zero() {
        let m2 = AlgebraDescriptor::matrix(2).unwrap();
        let n = Element::from_real(m2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(n.mul(&n).unwrap().is_zero());
    }

    #[test]
    fn norm_examples() {
        let p3 = AlgebraDescriptor::poly(3).unwrap();
        let x = Element::from_coeffs(p3, vec![c(1.0, 0.0), c(-2.0, 0.0), c(0.0, 3.0)]).unwrap();
        assert_eq!(x.norm(), 6.0);
        let m2 = AlgebraDescriptor::matrix(2).unwrap();
        let y = Element::from_real(m2, &[0.0, 2.0, 0.0, 0.0]).unwrap();
        assert!((y.norm() - 2.0).abs() < 1e-15);
        for alg in all_kinds() {
            assert_eq!(Element::zero(alg).norm(), 0.0);
            assert!((Element::one(alg).norm() - 1.0).abs() < 1e-15, "{alg}");
        }
    }

    #[test]
    fn random_element_norm_and_determinism() {
        for alg in all_kinds() {
            let x = random_element(alg, 7, 1.0).unwrap();
            assert!((x.norm() - 1.0).abs() <= 1e-12);
            let again = random_element(alg, 7, 1.0).unwrap();
            assert_eq!(x.coeffs(), again.coeffs());
            let big = random_element(alg, 7, 3.5).unwrap();
            assert!(big.approx_eq(&x.scale_real(3.5), 1e-12));
        }
        assert!(random_element(all_kinds()[0], 1, 0.0).is_err());
    }

    #[test]
    fn submultiplicative_homogeneous_commutative() {
        for alg in all_kinds() {
            let mut rng = stream_rng(11, alg.basis_len() as u64);
            for _ in 0..1000 {
                let nx = crate::rng::log_uniform(&mut rng, 0.25, 4.0);
                let ny = crate::rng::log_uniform(&mut rng, 0.25, 4.0);
                let x = random_element_with(&mut rng, alg, nx).unwrap();
                let y = random_element_with(&mut rng, alg, ny).unwrap();
                let xy = x.mul(&y).unwrap();
                assert!(xy.norm() <= x.norm() * y.norm() * (1.0 + 1e-12));
                let lam = crate::rng::complex_gaussian(&mut rng);
                let lhs = x.scale(lam).norm();
                let rhs = lam.norm() * x.norm();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs);
                if alg.is_commutative() {
                    let yx = y.mul(&x).unwrap();
                    assert_eq!(xy.coeffs(), yx.coeffs());
                }
            }
        }
        // explicit non-commuting witness
        let m2 = AlgebraDescriptor::matrix(2).unwrap();
        let a = Element::from_real(m2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        let b = Element::from_real(m2, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        let ab = a.mul(&b).unwrap();
        let ba = b.mul(&a).unwrap();
        assert!(ab.dist(&ba).unwrap() > 0.5);
    }

    #[test]
    fn cstar_identity() {
        let m3 = AlgebraDescriptor::matrix(3).unwrap();
        for seed in 0..200 {
            let x = random_element(m3, seed, 0.3 + seed as f64 * 0.01).unwrap();
            let lhs = x.adjoint().mul(&x).unwrap().norm();
            let rhs = x.norm().powi(2);
            assert!((lhs - rhs).abs() <= 1e-10 * rhs);
        }
    }

    #[test]
    fn unitaries() {
        for n in 1..=4 {
            let alg = AlgebraDescriptor::matrix(n).unwrap();
            for seed in 0..20 {
                let u = random_unitary(alg, seed).unwrap();
                assert!((u.norm() - 1.0).abs() <= 1e-12);
                let uu = u.mul(&u.adjoint()).unwrap();
                assert!(uu.dist(&Element::one(alg)).unwrap() <= 1e-12);
                if n == 1 {
                    assert!((u.coeffs()[0].norm() - 1.0).abs() <= 1e-12);
                }
            }
        }
        assert!(random_unitary(AlgebraDescriptor::poly(2).unwrap(), 0).is_err());
    }

    #[test]
    fn decompose_identity_zero_random() {
        let m3 = AlgebraDescriptor::matrix(3).unwrap();
        let e = Element::one(m3);
        let d = unitary_decompose(&e).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].0, ONE);
        assert!(d[0].1.approx_eq(&e, 0.0));

        let z = Element::zero(m3);
        let d = unitary_decompose(&z).unwrap();
        assert!(recombine(m3, &d).unwrap().is_zero());
        assert!(d.iter().map(|(l, _)| l.norm()).sum::<f64>() <= 1e-10);

        for seed in 0..100 {
            let x = random_element(m3, seed, 1.0).unwrap();
            let d = unitary_decompose(&x).unwrap();
            assert!(d.len() <= 4);
            for (_, u) in &d {
                assert!(u.is_unitary(1e-10));
            }
            assert!(recombine(m3, &d).unwrap().dist(&x).unwrap() <= 1e-10);
            let total: f64 = d.iter().map(|(l, _)| l.norm()).sum();
            assert!(total <= 2.0 * x.norm() + 1e-10);
        }
        assert!(unitary_decompose(&Element::one(AlgebraDescriptor::poly(2).unwrap())).is_err());
    }

    #[test]
    fn hermitian_input_uses_two_pieces() {
        let m2 = AlgebraDescriptor::matrix(2).unwrap();
        let h = Element::from_real(m2, &[0.3, 0.2, 0.2, -0.1]).unwrap();
        let d = unitary_decompose(&h).unwrap();
        assert_eq!(d.len(), 2);
        assert!(recombine(m2, &d).unwrap().dist(&h).unwrap() <= 1e-12);
    }
}
