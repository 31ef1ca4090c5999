use crate::error::{Error, Result};
use crate::fourier::{
    self, cmat_herm_eig, cmat_mul, cmat_svd, dft_mode3, idft_mode3, ComplexMatrix, SpectralTensor,
    C64, HERMITIAN_TOL,
};

/// Real `n x m x p` tensor stored slice-major, then row-major:
/// entry `(i, j, k)` lives at `k*n*m + i*m + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    m: usize,
    p: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn new(n: usize, m: usize, p: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || m == 0 || p == 0 {
            return Err(Error::DimensionMismatch(format!(
                "tensor dimensions must be positive, got {n}x{m}x{p}"
            )));
        }
        if data.len() != n * m * p {
            return Err(Error::DimensionMismatch(format!(
                "{} values cannot fill a {n}x{m}x{p} tensor",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry at index {pos}")));
        }
        Ok(Self { n, m, p, data })
    }

    pub fn zeros(n: usize, m: usize, p: usize) -> Self {
        assert!(n >= 1 && m >= 1 && p >= 1, "tensor dimensions must be positive");
        Self {
            n,
            m,
            p,
            data: vec![0.0; n * m * p],
        }
    }

    /// Builds a tensor from frontal slices given as nested rows.
    pub fn from_frontal_slices<S, R>(slices: &[S]) -> Result<Self>
    where
        S: AsRef<[R]>,
        R: AsRef<[f64]>,
    {
        let p = slices.len();
        let n = slices.first().map_or(0, |s| s.as_ref().len());
        let m = slices
            .first()
            .and_then(|s| s.as_ref().first())
            .map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n * m * p);
        for slice in slices {
            let rows = slice.as_ref();
            if rows.len() != n || rows.iter().any(|r| r.as_ref().len() != m) {
                return Err(Error::DimensionMismatch("ragged frontal slices".into()));
            }
            for row in rows {
                data.extend_from_slice(row.as_ref());
            }
        }
        Self::new(n, m, p, data)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n, self.m, self.p)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_square(&self) -> bool {
        self.n == self.m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[k * self.n * self.m + i * self.m + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.data[k * self.n * self.m + i * self.m + j] = value;
    }

    /// Frontal slice `k` as a row-major `n x m` block.
    pub fn frontal(&self, k: usize) -> &[f64] {
        let len = self.n * self.m;
        &self.data[k * len..(k + 1) * len]
    }

    pub fn frontal_mut(&mut self, k: usize) -> &mut [f64] {
        let len = self.n * self.m;
        &mut self.data[k * len..(k + 1) * len]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            data: self.data.iter().map(|&x| f(x)).collect(),
            ..*self
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        Ok(Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..*self
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, x| acc.max(x.abs()))
    }
}

/// Identity under the T-product: first frontal slice `I_n`, the rest zero.
pub fn identity_tensor(n: usize, p: usize) -> Tensor3 {
    let mut t = Tensor3::zeros(n, n, p);
    for i in 0..n {
        t.set(i, i, 0, 1.0);
    }
    t
}

pub fn frobenius_norm(a: &Tensor3) -> f64 {
    a.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative Frobenius distance `||a - b|| / max(||b||, tiny)`.
pub fn relative_error(a: &Tensor3, b: &Tensor3) -> Result<f64> {
    let diff = frobenius_norm(&a.sub(b)?);
    Ok(diff / frobenius_norm(b).max(f64::MIN_POSITIVE))
}

/// `a * b` computed as slice-wise products of the mode-3 spectra.
pub fn t_product(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    if a.m != b.n || a.p != b.p {
        return Err(Error::DimensionMismatch(format!(
            "cannot T-multiply {}x{}x{} by {}x{}x{}",
            a.n, a.m, a.p, b.n, b.m, b.p
        )));
    }
    let ah = dft_mode3(a);
    let bh = dft_mode3(b);
    let prod = spectral_product(&ah, &bh)?;
    idft_mode3(&prod)
}

pub(crate) fn spectral_product(a: &SpectralTensor, b: &SpectralTensor) -> Result<SpectralTensor> {
    a.map_slices(|i, s| cmat_mul(s, b.slice(i)))
}

/// T-transpose: slice 0 transposed, slices `1..p` transposed and reversed.
pub fn t_transpose(a: &Tensor3) -> Tensor3 {
    let (n, m, p) = a.dims();
    let mut out = Tensor3::zeros(m, n, p);
    for k in 0..p {
        let src = (p - k) % p;
        for i in 0..n {
            for j in 0..m {
                out.set(j, i, k, a.get(i, j, src));
            }
        }
    }
    out
}

fn require_square(a: &Tensor3, what: &str) -> Result<()> {
    if a.is_square() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} needs square frontal slices, got {}x{}x{}",
            a.n, a.m, a.p
        )))
    }
}

/// T-inverse; fails with the index of the first singular Fourier slice.
pub fn t_inverse(a: &Tensor3) -> Result<Tensor3> {
    require_square(a, "T-inverse")?;
    let inv = dft_mode3(a).map_slices(|_, s| fourier::cmat_inv(s))?;
    idft_mode3(&inv)
}

/// Index of the first Fourier slice whose Hermitian part is not positive
/// definite at relative tolerance `tol`, or `None` when all pass.
///
/// Uses `(M + M^H)/2`, which equals `M` for Hermitian slices. A slice with a
/// positive definite Hermitian part has its whole spectrum in the open right
/// half-plane, which is what the square-root iterations need.
pub fn t_pd_violation(a: &Tensor3, tol: f64) -> Result<Option<usize>> {
    require_square(a, "positive-definiteness test")?;
    Ok(spectral_pd_violation(&dft_mode3(a), tol))
}

pub(crate) fn spectral_pd_violation(a: &SpectralTensor, tol: f64) -> Option<usize> {
    a.slices().iter().position(|s| !slice_is_pd(s, tol))
}

fn slice_is_pd(s: &ComplexMatrix, tol: f64) -> bool {
    match cmat_herm_eig(&s.hermitian_part()) {
        Ok(eig) => {
            let max = eig.values[0];
            let min = *eig.values.last().expect("non-empty");
            max > 0.0 && min > tol * max
        }
        Err(_) => false,
    }
}

pub fn is_t_positive_definite(a: &Tensor3, tol: f64) -> Result<bool> {
    Ok(t_pd_violation(a, tol)?.is_none())
}

/// True when every Fourier slice is Hermitian within `tol` (absolute), which
/// holds exactly when `a` equals its own T-transpose.
pub fn is_t_hermitian(a: &Tensor3, tol: f64) -> Result<bool> {
    require_square(a, "Hermitian test")?;
    Ok(dft_mode3(a).slices().iter().all(|s| s.is_hermitian(tol)))
}

/// Largest Fourier-slice condition number `lambda_max / lambda_min` of a tensor
/// with Hermitian positive definite slices.
pub fn max_slice_condition(a: &Tensor3) -> Result<f64> {
    require_square(a, "condition number")?;
    let mut worst: f64 = 1.0;
    for (i, s) in dft_mode3(a).slices().iter().enumerate() {
        let eig = cmat_herm_eig(s).map_err(|e| e.at_slice(i))?;
        let min = *eig.values.last().expect("non-empty");
        if !(min > 0.0) {
            return Err(Error::not_pd(Some(i)));
        }
        worst = worst.max(eig.values[0] / min);
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct TSvdResult {
    pub u: Tensor3,
    pub s: Tensor3,
    pub v: Tensor3,
}

/// T-SVD `a = u * s * v^T` from a complex SVD of each Fourier slice.
///
/// Slices past `p/2` are conjugates of earlier ones, so their factors are
/// mirrored; that keeps `u`, `s`, `v` real.
pub fn t_svd(a: &Tensor3) -> Result<TSvdResult> {
    let (n, m, p) = a.dims();
    let ah = dft_mode3(a);
    let half: Vec<(ComplexMatrix, Vec<f64>, ComplexMatrix)> =
        (0..=p / 2).map(|i| cmat_svd(ah.slice(i))).collect();
    let mut u_slices = Vec::with_capacity(p);
    let mut s_slices = Vec::with_capacity(p);
    let mut v_slices = Vec::with_capacity(p);
    for i in 0..p {
        let (src, mirrored) = if i <= p / 2 { (i, false) } else { (p - i, true) };
        let (u, sigma, v) = &half[src];
        let mut s = ComplexMatrix::zeros(n, m);
        for (d, &x) in sigma.iter().enumerate() {
            s[(d, d)] = C64::new(x, 0.0);
        }
        if mirrored {
            u_slices.push(u.conj());
            v_slices.push(v.conj());
        } else {
            u_slices.push(u.clone());
            v_slices.push(v.clone());
        }
        s_slices.push(s);
    }
    Ok(TSvdResult {
        u: idft_mode3(&SpectralTensor::from_slices(u_slices)?)?,
        s: idft_mode3(&SpectralTensor::from_slices(s_slices)?)?,
        v: idft_mode3(&SpectralTensor::from_slices(v_slices)?)?,
    })
}

/// Principal T-square root by a matrix square root of every Fourier slice.
///
/// Hermitian slices use the eigendecomposition; other slices (which arise when
/// the tensor is not T-symmetric) go through a Schur factorization.
pub fn t_sqrt_direct(a: &Tensor3) -> Result<Tensor3> {
    require_square(a, "T-square root")?;
    let ah = dft_mode3(a);
    if let Some(slice) = spectral_pd_violation(&ah, fourier::PD_TOL) {
        return Err(Error::not_pd(Some(slice)));
    }
    idft_mode3(&spectral_sqrt_direct(&ah)?)
}

pub(crate) fn spectral_sqrt_direct(ah: &SpectralTensor) -> Result<SpectralTensor> {
    ah.map_slices_mirrored(|_, s| fourier::cmat_sqrt_principal(s))
}

/// Whether every slice of a spectrum is Hermitian, at a tolerance scaled to the
/// slice magnitude.
pub(crate) fn spectrum_is_hermitian(ah: &SpectralTensor) -> bool {
    ah.slices()
        .iter()
        .all(|s| s.is_hermitian(HERMITIAN_TOL * s.max_abs().max(1.0)))
}
