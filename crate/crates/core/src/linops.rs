//! Matrix-free linear operators between (real or complex) coefficient spaces
//! and complex data spaces.
//!
//! Every operator acts on `Complex64` slices. An operator whose domain field is
//! [`Field::Real`] is only *meant* to be applied to real vectors; its adjoint
//! returns the conjugate-transpose action of the complex-linear extension, and
//! callers that need the real adjoint take the real part. With that
//! convention the dot-product test
//! `<A u, w> = <u, A^H w>` (inner product conjugate-linear in the second
//! argument) holds exactly for real `u`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Largest dimension `densify` will materialize.
pub const DENSE_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    Real,
    Complex,
}

pub trait LinearOperator: Send + Sync + fmt::Debug {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;
    fn domain_field(&self) -> Field;
    fn range_field(&self) -> Field;

    /// `out = A u`. Lengths are the caller's responsibility.
    fn forward_into(&self, u: &[Complex64], out: &mut [Complex64]);

    /// `out = A^H w`. Lengths are the caller's responsibility.
    fn adjoint_into(&self, w: &[Complex64], out: &mut [Complex64]);

    fn apply_forward(&self, u: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len("apply_forward", self.domain_dim(), u.len())?;
        let mut out = vec![Complex64::default(); self.range_dim()];
        self.forward_into(u, &mut out);
        Ok(out)
    }

    fn apply_adjoint(&self, w: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len("apply_adjoint", self.range_dim(), w.len())?;
        let mut out = vec![Complex64::default(); self.domain_dim()];
        self.adjoint_into(w, &mut out);
        Ok(out)
    }

    /// Forward action on a real vector.
    fn apply_real(&self, x: &[f64]) -> Result<Vec<Complex64>> {
        check_len("apply_real", self.domain_dim(), x.len())?;
        let u: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let mut out = vec![Complex64::default(); self.range_dim()];
        self.forward_into(&u, &mut out);
        Ok(out)
    }
}

pub type OperatorRef = Arc<dyn LinearOperator>;

/// `sum_i a_i conj(b_i)`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

pub fn norm2(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn to_complex(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

#[derive(Debug, Clone)]
pub struct Identity {
    n: usize,
    field: Field,
}

impl Identity {
    pub fn new(n: usize, field: Field) -> Self {
        Self { n, field }
    }
}

impl LinearOperator for Identity {
    fn domain_dim(&self) -> usize {
        self.n
    }
    fn range_dim(&self) -> usize {
        self.n
    }
    fn domain_field(&self) -> Field {
        self.field
    }
    fn range_field(&self) -> Field {
        self.field
    }
    fn forward_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(u);
    }
    fn adjoint_into(&self, w: &[Complex64], out: &mut [Complex64]) {
        out.copy_from_slice(w);
    }
}

#[derive(Debug, Clone)]
pub struct Zero {
    domain: usize,
    range: usize,
}

impl Zero {
    pub fn new(domain: usize, range: usize) -> Self {
        Self { domain, range }
    }
}

impl LinearOperator for Zero {
    fn domain_dim(&self) -> usize {
        self.domain
    }
    fn range_dim(&self) -> usize {
        self.range
    }
    fn domain_field(&self) -> Field {
        Field::Complex
    }
    fn range_field(&self) -> Field {
        Field::Complex
    }
    fn forward_into(&self, _u: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::default());
    }
    fn adjoint_into(&self, _w: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::default());
    }
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
    domain_field: Field,
}

impl DenseMatrix {
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(nrows * ncols);
        for row in rows {
            check_len("DenseMatrix row", ncols, row.len())?;
            data.extend(row);
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            data,
            domain_field: Field::Complex,
        })
    }

    /// Marks the domain as real so adjoint tests draw real probe vectors.
    pub fn with_domain_field(mut self, field: Field) -> Self {
        self.domain_field = field;
        self
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }
}

impl LinearOperator for DenseMatrix {
    fn domain_dim(&self) -> usize {
        self.cols
    }
    fn range_dim(&self) -> usize {
        self.rows
    }
    fn domain_field(&self) -> Field {
        self.domain_field
    }
    fn range_field(&self) -> Field {
        Field::Complex
    }
    fn forward_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
        }
    }
    fn adjoint_into(&self, w: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::default());
        for (r, wr) in w.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * wr;
            }
        }
    }
}

/// Selected coefficients of the unnormalized DFT of a length-`n` signal,
/// each multiplied by a complex spectrum value:
/// `(A u)_r = s_r * sum_j u_j exp(-2 pi i k_r j / n)`.
///
/// Duplicate row indices are allowed; each duplicate is an independent
/// measurement and the adjoint sums their contributions.
#[derive(Debug, Clone)]
pub struct FourierRestriction {
    n: usize,
    rows: Vec<usize>,
    spectrum: Vec<Complex64>,
    twiddle: Vec<Complex64>,
}

impl FourierRestriction {
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }
}

pub fn make_fourier_restriction(
    n: usize,
    rows: &[usize],
    spectrum: &[Complex64],
) -> Result<FourierRestriction> {
    if n == 0 {
        return Err(Error::IncompatibleLength {
            kind: "fourier-restriction",
            n,
            reason: "length must be positive",
        });
    }
    check_len("fourier spectrum", rows.len(), spectrum.len())?;
    if let Some(&row) = rows.iter().find(|&&r| r >= n) {
        return Err(Error::RowOutOfRange { row, n });
    }
    let twiddle = (0..n)
        .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / n as f64))
        .collect();
    Ok(FourierRestriction {
        n,
        rows: rows.to_vec(),
        spectrum: spectrum.to_vec(),
        twiddle,
    })
}

impl LinearOperator for FourierRestriction {
    fn domain_dim(&self) -> usize {
        self.n
    }
    fn range_dim(&self) -> usize {
        self.rows.len()
    }
    fn domain_field(&self) -> Field {
        Field::Real
    }
    fn range_field(&self) -> Field {
        Field::Complex
    }
    fn forward_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        for ((o, &k), s) in out.iter_mut().zip(&self.rows).zip(&self.spectrum) {
            let mut acc = Complex64::default();
            let mut idx = 0usize;
            for uj in u {
                acc += uj * self.twiddle[idx];
                idx += k;
                if idx >= n {
                    idx -= n;
                }
            }
            *o = s * acc;
        }
    }
    fn adjoint_into(&self, w: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        out.fill(Complex64::default());
        for ((wr, &k), s) in w.iter().zip(&self.rows).zip(&self.spectrum) {
            let c = s.conj() * wr;
            let mut idx = 0usize;
            for o in out.iter_mut() {
                *o += c * self.twiddle[idx].conj();
                idx += k;
                if idx >= n {
                    idx -= n;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformKind {
    #[default]
    Identity,
    /// Full-depth orthonormal Haar wavelet; needs a power-of-two length.
    OrthonormalWavelet,
    /// Orthonormal DCT-II.
    Dct,
}

impl TransformKind {
    pub fn name(self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::OrthonormalWavelet => "orthonormal-wavelet",
            TransformKind::Dct => "dct",
        }
    }
}

/// Real orthonormal transform. `forward` is the analysis map, `adjoint` the
/// synthesis map, and `C^T C = I`.
#[derive(Debug, Clone)]
pub struct SparsifyingTransform {
    kind: TransformKind,
    n: usize,
    // cos(pi m / (2n)) for m in 0..4n, DCT only
    cos_table: Vec<f64>,
}

impl SparsifyingTransform {
    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    fn dct_scale(&self, k: usize) -> f64 {
        if k == 0 {
            (1.0 / self.n as f64).sqrt()
        } else {
            (2.0 / self.n as f64).sqrt()
        }
    }
}

pub fn make_sparsifying_transform(kind: TransformKind, n: usize) -> Result<SparsifyingTransform> {
    if n == 0 {
        return Err(Error::IncompatibleLength {
            kind: kind.name(),
            n,
            reason: "length must be positive",
        });
    }
    if kind == TransformKind::OrthonormalWavelet && !n.is_power_of_two() {
        return Err(Error::IncompatibleLength {
            kind: kind.name(),
            n,
            reason: "wavelet length must be a power of two",
        });
    }
    let cos_table = if kind == TransformKind::Dct {
        (0..4 * n)
            .map(|m| (PI * m as f64 / (2 * n) as f64).cos())
            .collect()
    } else {
        Vec::new()
    };
    Ok(SparsifyingTransform { kind, n, cos_table })
}

fn haar_analysis(x: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut len = x.len();
    while len > 1 {
        let half = len / 2;
        scratch.clear();
        scratch.extend_from_slice(&x[..len]);
        for i in 0..half {
            let (a, b) = (scratch[2 * i], scratch[2 * i + 1]);
            x[i] = (a + b) * s;
            x[half + i] = (a - b) * s;
        }
        len = half;
    }
}

fn haar_synthesis(x: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let n = x.len();
    let mut len = 1;
    while len < n {
        scratch.clear();
        scratch.extend_from_slice(&x[..2 * len]);
        for i in 0..len {
            let (a, d) = (scratch[i], scratch[len + i]);
            x[2 * i] = (a + d) * s;
            x[2 * i + 1] = (a - d) * s;
        }
        len *= 2;
    }
}

impl LinearOperator for SparsifyingTransform {
    fn domain_dim(&self) -> usize {
        self.n
    }
    fn range_dim(&self) -> usize {
        self.n
    }
    fn domain_field(&self) -> Field {
        Field::Real
    }
    fn range_field(&self) -> Field {
        Field::Real
    }
    fn forward_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        match self.kind {
            TransformKind::Identity => out.copy_from_slice(u),
            TransformKind::OrthonormalWavelet => {
                out.copy_from_slice(u);
                haar_analysis(out, &mut Vec::with_capacity(self.n));
            }
            TransformKind::Dct => {
                let period = 4 * self.n;
                for (k, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    for (j, uj) in u.iter().enumerate() {
                        acc += uj * self.cos_table[((2 * j + 1) * k) % period];
                    }
                    *o = acc * self.dct_scale(k);
                }
            }
        }
    }
    fn adjoint_into(&self, w: &[Complex64], out: &mut [Complex64]) {
        match self.kind {
            TransformKind::Identity => out.copy_from_slice(w),
            TransformKind::OrthonormalWavelet => {
                out.copy_from_slice(w);
                haar_synthesis(out, &mut Vec::with_capacity(self.n));
            }
            TransformKind::Dct => {
                let period = 4 * self.n;
                for (j, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::default();
                    for (k, wk) in w.iter().enumerate() {
                        acc += wk * (self.dct_scale(k) * self.cos_table[((2 * j + 1) * k) % period]);
                    }
                    *o = acc;
                }
            }
        }
    }
}

/// `outer ∘ inner`.
#[derive(Debug, Clone)]
pub struct Composition {
    outer: OperatorRef,
    inner: OperatorRef,
}

impl Composition {
    pub fn new(outer: OperatorRef, inner: OperatorRef) -> Result<Self> {
        check_len("composition", outer.domain_dim(), inner.range_dim())?;
        Ok(Self { outer, inner })
    }
}

impl LinearOperator for Composition {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.outer.range_dim()
    }
    fn domain_field(&self) -> Field {
        self.inner.domain_field()
    }
    fn range_field(&self) -> Field {
        self.outer.range_field()
    }
    fn forward_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        let mut mid = vec![Complex64::default(); self.inner.range_dim()];
        self.inner.forward_into(u, &mut mid);
        self.outer.forward_into(&mid, out);
    }
    fn adjoint_into(&self, w: &[Complex64], out: &mut [Complex64]) {
        let mut mid = vec![Complex64::default(); self.outer.domain_dim()];
        self.outer.adjoint_into(w, &mut mid);
        self.inner.adjoint_into(&mid, out);
    }
}

/// `A^H` as an operator: forward and adjoint swapped.
#[derive(Debug, Clone)]
pub struct Adjoint(pub OperatorRef);

impl LinearOperator for Adjoint {
    fn domain_dim(&self) -> usize {
        self.0.range_dim()
    }
    fn range_dim(&self) -> usize {
        self.0.domain_dim()
    }
    fn domain_field(&self) -> Field {
        self.0.range_field()
    }
    fn range_field(&self) -> Field {
        self.0.domain_field()
    }
    fn forward_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        self.0.adjoint_into(u, out);
    }
    fn adjoint_into(&self, w: &[Complex64], out: &mut [Complex64]) {
        self.0.forward_into(w, out);
    }
}

/// Wraps an operator and negates its adjoint. Only useful for exercising the
/// adjoint test's failure path.
#[derive(Debug, Clone)]
pub struct CorruptedAdjoint(pub OperatorRef);

impl LinearOperator for CorruptedAdjoint {
    fn domain_dim(&self) -> usize {
        self.0.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.0.range_dim()
    }
    fn domain_field(&self) -> Field {
        self.0.domain_field()
    }
    fn range_field(&self) -> Field {
        self.0.range_field()
    }
    fn forward_into(&self, u: &[Complex64], out: &mut [Complex64]) {
        self.0.forward_into(u, out);
    }
    fn adjoint_into(&self, w: &[Complex64], out: &mut [Complex64]) {
        self.0.adjoint_into(w, out);
        out.iter_mut().for_each(|z| *z = -*z);
    }
}

fn random_vector(rng: &mut ChaCha8Rng, len: usize, field: Field) -> Vec<Complex64> {
    (0..len)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = match field {
                Field::Real => 0.0,
                Field::Complex => StandardNormal.sample(rng),
            };
            Complex64::new(re, im)
        })
        .collect()
}

/// Randomized dot-product test. Returns the largest relative discrepancy
/// `|<A u, w> - <u, A^H w>| / (|A u| |w| + tiny)` over `trials` seeded draws.
pub fn adjoint_test(op: &dyn LinearOperator, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidConfig("adjoint_test needs at least one trial".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = random_vector(&mut rng, op.domain_dim(), op.domain_field());
        let w = random_vector(&mut rng, op.range_dim(), op.range_field());
        let au = op.apply_forward(&u)?;
        let ahw = op.apply_adjoint(&w)?;
        let lhs = inner(&au, &w);
        let rhs = inner(&u, &ahw);
        let rel = (lhs - rhs).norm() / (norm2(&au) * norm2(&w) + f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    Ok(worst)
}

/// Materializes the operator column by column; row-major result.
pub fn densify(op: &dyn LinearOperator) -> Result<Vec<Vec<Complex64>>> {
    let (m, n) = (op.range_dim(), op.domain_dim());
    if m.max(n) > DENSE_LIMIT {
        return Err(Error::TooLarge {
            dim: m.max(n),
            limit: DENSE_LIMIT,
        });
    }
    let mut dense = vec![vec![Complex64::default(); n]; m];
    let mut e = vec![Complex64::default(); n];
    let mut col = vec![Complex64::default(); m];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        op.forward_into(&e, &mut col);
        for (row, c) in dense.iter_mut().zip(&col) {
            row[j] = *c;
        }
        e[j] = Complex64::default();
    }
    Ok(dense)
}
