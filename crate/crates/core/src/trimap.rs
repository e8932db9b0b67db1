//! Tri-maps `f: A^3 -> B`.
//!
//! Every map is an exact trilinear tensor plus an optional structured
//! perturbation whose size is `theta0 * ||x||^r ||z||^r ||a||^r`. The
//! perturbation vanishes whenever an argument is zero, so every [`TriMap`]
//! satisfies `f(0,z,a) = f(x,0,a) = f(x,z,0) = 0` by construction.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{random_element, random_element_with, AlgebraDescriptor, Element};
use crate::error::{Error, Result};
use crate::rng::{complex_gaussian, hash_coeffs, stream_rng};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Anything that can be evaluated on a triple of domain elements: exact
/// tensors, perturbed maps, and extracted Hyers limits.
pub trait TriEval: Sync {
    fn domain(&self) -> AlgebraDescriptor;
    fn codomain(&self) -> AlgebraDescriptor;
    fn eval(&self, x: &Element, z: &Element, a: &Element) -> Result<Element>;
}

impl<T: TriEval + ?Sized> TriEval for &T {
    fn domain(&self) -> AlgebraDescriptor {
        (**self).domain()
    }
    fn codomain(&self) -> AlgebraDescriptor {
        (**self).codomain()
    }
    fn eval(&self, x: &Element, z: &Element, a: &Element) -> Result<Element> {
        (**self).eval(x, z, a)
    }
}

pub(crate) fn check_domain(dom: AlgebraDescriptor, args: &[&Element]) -> Result<()> {
    for e in args {
        if e.algebra() != dom {
            return Err(Error::AlgebraMismatch {
                left: dom,
                right: e.algebra(),
            });
        }
    }
    Ok(())
}

/// `D(e_i, e_j, e_k) = sum_l T[i][j][k][l] f_l`, stored row-major in
/// `(i, j, k, l)`.
#[derive(Debug, Clone)]
pub struct TrilinearTensor {
    domain: AlgebraDescriptor,
    codomain: AlgebraDescriptor,
    coeffs: Vec<Complex64>,
    permuting: bool,
}

impl TrilinearTensor {
    pub fn zeros(domain: AlgebraDescriptor, codomain: AlgebraDescriptor) -> Self {
        let m = domain.basis_len();
        TrilinearTensor {
            domain,
            codomain,
            coeffs: vec![ZERO; m * m * m * codomain.basis_len()],
            permuting: true,
        }
    }

    pub fn from_coeffs(domain: AlgebraDescriptor, codomain: AlgebraDescriptor, coeffs: Vec<Complex64>) -> Result<Self> {
        let m = domain.basis_len();
        let expected = m * m * m * codomain.basis_len();
        if coeffs.len() != expected {
            return Err(Error::TensorShape {
                expected,
                found: coeffs.len(),
            });
        }
        Ok(TrilinearTensor {
            domain,
            codomain,
            coeffs,
            permuting: false,
        })
    }

    pub fn from_fn(
        domain: AlgebraDescriptor,
        codomain: AlgebraDescriptor,
        mut f: impl FnMut(usize, usize, usize, usize) -> Complex64,
    ) -> Self {
        let (m, p) = (domain.basis_len(), codomain.basis_len());
        let mut coeffs = Vec::with_capacity(m * m * m * p);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..p {
                        coeffs.push(f(i, j, k, l));
                    }
                }
            }
        }
        TrilinearTensor {
            domain,
            codomain,
            coeffs,
            permuting: false,
        }
    }

    /// Gaussian tensor scaled so that `||D(x,z,a)||` is of order
    /// `||x|| ||z|| ||a||`.
    pub fn random(domain: AlgebraDescriptor, codomain: AlgebraDescriptor, seed: u64) -> Self {
        let mut rng = stream_rng(seed, 0);
        let m = domain.basis_len() as f64;
        let scale = 1.0 / (m * m * m).sqrt();
        Self::from_fn(domain, codomain, |_, _, _, _| complex_gaussian(&mut rng) * scale)
    }

    pub fn domain(&self) -> AlgebraDescriptor {
        self.domain
    }

    pub fn codomain(&self) -> AlgebraDescriptor {
        self.codomain
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_permuting(&self) -> bool {
        self.permuting
    }

    pub fn with_permuting(mut self, flag: bool) -> Self {
        self.permuting = flag;
        self
    }

    fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        let (m, p) = (self.domain.basis_len(), self.codomain.basis_len());
        ((i * m + j) * m + k) * p + l
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.coeffs[self.index(i, j, k, l)]
    }

    /// Exact contraction. Scaling one argument by a power of two scales the
    /// result by the same power exactly (absent underflow/overflow), since
    /// every product and every partial sum is scaled identically.
    pub fn contract(&self, x: &Element, z: &Element, a: &Element) -> Result<Element> {
        check_domain(self.domain, &[x, z, a])?;
        let (m, p) = (self.domain.basis_len(), self.codomain.basis_len());
        let (xc, zc, ac) = (x.coeffs(), z.coeffs(), a.coeffs());
        let mut out = vec![ZERO; p];
        for i in 0..m {
            if xc[i] == ZERO {
                continue;
            }
            for j in 0..m {
                let xz = xc[i] * zc[j];
                if xz == ZERO {
                    continue;
                }
                for k in 0..m {
                    let w = xz * ac[k];
                    if w == ZERO {
                        continue;
                    }
                    let base = ((i * m + j) * m + k) * p;
                    for (o, t) in out.iter_mut().zip(&self.coeffs[base..base + p]) {
                        *o += w * t;
                    }
                }
            }
        }
        Element::from_coeffs(self.codomain, out)
    }

    /// Checks the permuting invariant coefficientwise.
    pub fn max_permuting_gap(&self) -> f64 {
        let (m, p) = (self.domain.basis_len(), self.codomain.basis_len());
        let mut gap: f64 = 0.0;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..p {
                        let v = self.get(i, j, k, l);
                        for [a, b, c] in permutations([i, j, k]) {
                            gap = gap.max((self.get(a, b, c, l) - v).norm());
                        }
                    }
                }
            }
        }
        gap
    }
}

impl TriEval for TrilinearTensor {
    fn domain(&self) -> AlgebraDescriptor {
        self.domain
    }
    fn codomain(&self) -> AlgebraDescriptor {
        self.codomain
    }
    fn eval(&self, x: &Element, z: &Element, a: &Element) -> Result<Element> {
        self.contract(x, z, a)
    }
}

/// The six orderings of a triple.
pub fn permutations<T: Copy>([a, b, c]: [T; 3]) -> [[T; 3]; 6] {
    [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
}

/// `D(x, y, z) = t * x' * y' * z'` on `C[t]/(t^N)`, `'` the formal
/// derivative.
///
/// `x -> x'` alone is not a derivation of the truncated ring
/// (`(t * t^{N-1})' = 0` but `t' t^{N-1} + t (t^{N-1})' = N t^{N-1}`); the
/// weight `t` absorbs that top-degree defect, and every permuting
/// triderivation of `C[t]/(t^N)` has the form `q x' y' z'` with `q in (t)`.
pub fn make_poly_triderivation(order: usize) -> Result<TrilinearTensor> {
    if order < 2 {
        return Err(Error::InvalidDimension {
            dim: order,
            reason: "polynomial triderivation needs truncation order >= 2",
        });
    }
    let alg = AlgebraDescriptor::poly(order)?;
    let t = TrilinearTensor::from_fn(alg, alg, |i, j, k, l| {
        if i == 0 || j == 0 || k == 0 {
            return ZERO;
        }
        // t * t^{i-1} t^{j-1} t^{k-1}
        if i + j + k - 2 == l {
            Complex64::new((i * j * k) as f64, 0.0)
        } else {
            ZERO
        }
    });
    Ok(t.with_permuting(true))
}

/// `H(x, y, z) = x(0) y(0) z(0)` from `C[t]/(t^N)` into `C = PointwiseCn(1)`.
///
/// Evaluation at a point is a ring homomorphism of the truncated algebra only
/// at `t = 0`, so any other point is rejected.
pub fn make_poly_trihomomorphism(order: usize, point: Complex64) -> Result<TrilinearTensor> {
    if point != ZERO {
        return Err(Error::NonZeroPoint(point));
    }
    let dom = AlgebraDescriptor::poly(order)?;
    let cod = AlgebraDescriptor::pointwise(1)?;
    let t = TrilinearTensor::from_fn(dom, cod, |i, j, k, _| {
        if i == 0 && j == 0 && k == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        }
    });
    Ok(t.with_permuting(true))
}

/// `H(x, y, z) = h(x) h(y) h(z)` on `C^n` with `h(x)_l = x_{perm[l]}`.
pub fn make_pointwise_trihomomorphism(n: usize, perm: &[usize]) -> Result<TrilinearTensor> {
    let mut seen = vec![false; n];
    if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidPermutation(perm.to_vec()));
    }
    let alg = AlgebraDescriptor::pointwise(n)?;
    let t = TrilinearTensor::from_fn(alg, alg, |i, j, k, l| {
        if i == perm[l] && j == perm[l] && k == perm[l] {
            Complex64::new(1.0, 0.0)
        } else {
            ZERO
        }
    });
    Ok(t.with_permuting(true))
}

/// `D(x, z, a) = tr(z) tr(a) (c x - x c)` on `n x n` matrices: an inner
/// derivation in the first slot scaled by a bilinear scalar form. Not
/// permuting; used to exercise the unitary-decomposition pathway on a
/// noncommutative algebra.
pub fn make_inner_triderivation(n: usize, seed: u64) -> Result<TrilinearTensor> {
    let alg = AlgebraDescriptor::matrix(n)?;
    let c = random_element(alg, seed, 1.0)?;
    let m = alg.basis_len();
    let mut commutators = Vec::with_capacity(m);
    for i in 0..m {
        let e = Element::basis(alg, i);
        commutators.push(c.mul(&e)?.sub(&e.mul(&c)?)?);
    }
    let diag = |j: usize| j / n == j % n;
    Ok(TrilinearTensor::from_fn(alg, alg, |i, j, k, l| {
        if diag(j) && diag(k) {
            commutators[i].coeffs()[l]
        } else {
            ZERO
        }
    }))
}

/// Average over the six slot orderings; the result is flagged permuting.
/// Entries whose six permuted values already agree bitwise are copied, so a
/// symmetric tensor is a fixed point exactly.
pub fn symmetrize(t: &TrilinearTensor) -> TrilinearTensor {
    let sixth = 1.0 / 6.0;
    let out = TrilinearTensor::from_fn(t.domain, t.codomain, |i, j, k, l| {
        let mut key = [i, j, k];
        key.sort_unstable();
        let vals = permutations(key).map(|[a, b, c]| t.get(a, b, c, l));
        if vals.iter().all(|v| *v == vals[0]) {
            vals[0]
        } else {
            vals.iter().sum::<Complex64>() * sixth
        }
    });
    out.with_permuting(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// `theta0 * prod ||.||^r * u` for a fixed unit codomain vector `u`.
    Radial,
    /// `theta0 * prod ||.||^r * v(x, z, a)`, `v` a unit direction keyed by
    /// the exact bits of the arguments.
    SeededNoise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub theta0: f64,
    pub r: f64,
    pub direction_seed: u64,
}

impl PerturbationSpec {
    pub fn radial(theta0: f64, r: f64, direction_seed: u64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::Radial,
            theta0,
            r,
            direction_seed,
        }
    }

    pub fn seeded_noise(theta0: f64, r: f64, direction_seed: u64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::SeededNoise,
            theta0,
            r,
            direction_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta0 >= 0.0 && self.theta0.is_finite()) {
            return Err(Error::InvalidParams(format!("theta0 must be finite and >= 0, got {}", self.theta0)));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParams(format!("perturbation exponent must be finite and >= 0, got {}", self.r)));
        }
        Ok(())
    }
}

/// `f = D + g`.
#[derive(Debug, Clone)]
pub struct TriMap {
    exact: TrilinearTensor,
    perturbation: Option<PerturbationSpec>,
    radial_dir: Option<Element>,
}

impl TriMap {
    pub fn exact(d: TrilinearTensor) -> Self {
        TriMap {
            exact: d,
            perturbation: None,
            radial_dir: None,
        }
    }

    pub fn exact_part(&self) -> &TrilinearTensor {
        &self.exact
    }

    pub fn perturbation(&self) -> Option<&PerturbationSpec> {
        self.perturbation.as_ref()
    }

    /// The perturbation term `g(x, z, a)` alone.
    pub fn perturbation_term(&self, x: &Element, z: &Element, a: &Element) -> Result<Element> {
        check_domain(self.exact.domain, &[x, z, a])?;
        let cod = self.exact.codomain;
        let Some(spec) = &self.perturbation else {
            return Ok(Element::zero(cod));
        };
        let (nx, nz, na) = (x.norm(), z.norm(), a.norm());
        if spec.theta0 == 0.0 || nx == 0.0 || nz == 0.0 || na == 0.0 {
            return Ok(Element::zero(cod));
        }
        let mag = spec.theta0 * (nx.powf(spec.r) * nz.powf(spec.r) * na.powf(spec.r));
        let dir = match spec.kind {
            PerturbationKind::Radial => self.radial_dir.clone().expect("radial direction set at construction"),
            PerturbationKind::SeededNoise => {
                let key = hash_coeffs(spec.direction_seed, &[x.coeffs(), z.coeffs(), a.coeffs()]);
                random_element_with(&mut stream_rng(key, 1), cod, 1.0)?
            }
        };
        Ok(dir.scale_real(mag))
    }
}

/// Attaches a perturbation to an exact tensor.
pub fn perturb(d: TrilinearTensor, spec: PerturbationSpec) -> Result<TriMap> {
    spec.validate()?;
    let radial_dir = match spec.kind {
        PerturbationKind::Radial => Some(random_element(d.codomain, spec.direction_seed, 1.0)?),
        PerturbationKind::SeededNoise => None,
    };
    Ok(TriMap {
        exact: d,
        perturbation: Some(spec),
        radial_dir,
    })
}

impl TriEval for TriMap {
    fn domain(&self) -> AlgebraDescriptor {
        self.exact.domain
    }
    fn codomain(&self) -> AlgebraDescriptor {
        self.exact.codomain
    }
    fn eval(&self, x: &Element, z: &Element, a: &Element) -> Result<Element> {
        let d = self.exact.contract(x, z, a)?;
        match &self.perturbation {
            None => Ok(d),
            Some(_) => d.add(&self.perturbation_term(x, z, a)?),
        }
    }
}

/// `(s, r, theta)` with `0 < |s| < 1`, `r >= 0`, `theta >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityParams {
    pub s: Complex64,
    pub r: f64,
    pub theta: f64,
}

impl StabilityParams {
    pub fn new(s: Complex64, r: f64, theta: f64) -> Result<Self> {
        let p = StabilityParams { s, r, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.s.norm();
        if !(m < 1.0) {
            return Err(Error::InvalidParams(format!("|s| < 1 is required, got |s| = {m}")));
        }
        if m == 0.0 {
            return Err(Error::InvalidParams("s must be nonzero".into()));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::InvalidParams(format!("r must be finite and >= 0, got {}", self.r)));
        }
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::InvalidParams(format!("theta must be finite and >= 0, got {}", self.theta)));
        }
        Ok(())
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }
}

/// On-disk form of a tensor. Coefficients are `[re, im]` pairs in row-major
/// `(i, j, k, l)` order; `serde_json` is built with `float_roundtrip`, so
/// finite binary64 values survive a write/read cycle bit for bit.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorDocument {
    format: String,
    version: u32,
    domain: AlgebraDescriptor,
    codomain: AlgebraDescriptor,
    permuting: bool,
    shape: [usize; 4],
    coeffs: Vec<[f64; 2]>,
}

const TENSOR_FORMAT: &str = "tristab-tensor";
const TENSOR_VERSION: u32 = 1;

impl TrilinearTensor {
    pub fn to_json(&self) -> String {
        let m = self.domain.basis_len();
        let doc = TensorDocument {
            format: TENSOR_FORMAT.into(),
            version: TENSOR_VERSION,
            domain: self.domain,
            codomain: self.codomain,
            permuting: self.permuting,
            shape: [m, m, m, self.codomain.basis_len()],
            coeffs: self.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("tensor document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TensorDocument = serde_json::from_str(text).map_err(|source| Error::Format {
            path: "<tensor>".into(),
            source,
        })?;
        if doc.format != TENSOR_FORMAT || doc.version != TENSOR_VERSION {
            return Err(Error::Config(format!("not a {TENSOR_FORMAT} v{TENSOR_VERSION} document")));
        }
        let m = doc.domain.basis_len();
        if doc.shape != [m, m, m, doc.codomain.basis_len()] {
            return Err(Error::Config(format!("shape {:?} does not match the algebras", doc.shape)));
        }
        let coeffs = doc.coeffs.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Ok(TrilinearTensor::from_coeffs(doc.domain, doc.codomain, coeffs)?.with_permuting(doc.permuting))
    }
}
