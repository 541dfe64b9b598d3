//! Dense Hermitian operator algebra on finite product Hilbert spaces.
//!
//! Everything downstream (model builders, the block-diagonalizing transform,
//! thermal witnesses, probe dynamics) is expressed through the four primitives
//! here: tensor products, Hermitian eigendecomposition, matrix functions and
//! the partial trace over the apparatus factors.
//!
//! Index convention, fixed globally: the system factor is the slowest-varying
//! (leftmost) index of every Kronecker product. A full-space basis state is
//! `|n⟩ ⊗ |k⟩` at flat index `n * app_dim + k`. Branch projections and the
//! partial trace rely on this ordering.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Entrywise tolerance for the Hermiticity check `max |A - A^†|`.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Factorization bookkeeping: one system factor followed by an ordered list of
/// apparatus factors. Total dimension is the product of all factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductSpace {
    sys_dim: usize,
    app_dims: Vec<usize>,
}

impl ProductSpace {
    pub fn new(sys_dim: usize, app_dims: Vec<usize>) -> Result<Self> {
        if sys_dim == 0 || app_dims.contains(&0) {
            return Err(Error::InvalidModel(
                "every factor dimension must be at least 1".into(),
            ));
        }
        Ok(Self { sys_dim, app_dims })
    }

    /// Space holding only a system factor.
    pub fn system_only(dim: usize) -> Self {
        Self { sys_dim: dim.max(1), app_dims: Vec::new() }
    }

    /// Space holding only apparatus factors (trivial system factor).
    pub fn apparatus_only(app_dims: Vec<usize>) -> Self {
        Self { sys_dim: 1, app_dims }
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn app_dims(&self) -> &[usize] {
        &self.app_dims
    }

    /// Product of the apparatus factor dimensions (1 when there are none).
    pub fn app_dim(&self) -> usize {
        self.app_dims.iter().product()
    }

    pub fn total_dim(&self) -> usize {
        self.sys_dim * self.app_dim()
    }

    /// The system factor of this space, as a standalone space.
    pub fn system_factor(&self) -> ProductSpace {
        ProductSpace::system_only(self.sys_dim)
    }

    /// The apparatus factors of this space, as a standalone space.
    pub fn apparatus_factor(&self) -> ProductSpace {
        ProductSpace::apparatus_only(self.app_dims.clone())
    }
}

/// Dense complex square matrix tagged with the product space it acts on.
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: CMatrix,
    space: ProductSpace,
}

impl Operator {
    pub fn new(matrix: CMatrix, space: ProductSpace) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.nrows() != space.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "matrix side {} does not match product-space dimension {}",
                matrix.nrows(),
                space.total_dim()
            )));
        }
        Ok(Self { matrix, space })
    }

    pub fn zeros(space: ProductSpace) -> Self {
        let d = space.total_dim();
        Self { matrix: CMatrix::zeros(d, d), space }
    }

    pub fn identity(space: ProductSpace) -> Self {
        let d = space.total_dim();
        Self { matrix: CMatrix::identity(d, d), space }
    }

    /// Diagonal operator from real entries.
    pub fn from_real_diagonal(space: ProductSpace, diag: &[f64]) -> Result<Self> {
        if diag.len() != space.total_dim() {
            return Err(Error::DimensionMismatch(format!(
                "diagonal length {} does not match space dimension {}",
                diag.len(),
                space.total_dim()
            )));
        }
        let v = DVector::from_iterator(diag.len(), diag.iter().map(|&x| C64::new(x, 0.0)));
        Ok(Self { matrix: CMatrix::from_diagonal(&v), space })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Reinterpret the same matrix on a compatible space of equal total dimension.
    pub fn with_space(mut self, space: ProductSpace) -> Result<Self> {
        if space.total_dim() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "cannot relabel a dim-{} operator onto a dim-{} space",
                self.dim(),
                space.total_dim()
            )));
        }
        self.space = space;
        Ok(self)
    }

    pub fn adjoint(&self) -> Operator {
        Operator { matrix: self.matrix.adjoint(), space: self.space.clone() }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diagonal().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Entrywise maximum modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max |A - A^†|`, the entrywise deviation from Hermiticity.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= HERMITICITY_TOL
    }

    /// `(A + A^†)/2`.
    pub fn symmetrized(&self) -> Operator {
        let sym = (&self.matrix + self.matrix.adjoint()).scale(0.5);
        Operator { matrix: sym, space: self.space.clone() }
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator { matrix: self.matrix.map(|x| x * c), space: self.space.clone() }
    }

    pub fn scale_re(&self, c: f64) -> Operator {
        self.scale(C64::new(c, 0.0))
    }

    fn assert_same_space(&self, other: &Operator, what: &str) {
        assert_eq!(
            self.space, other.space,
            "{what}: operators live on different product spaces"
        );
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs, "add");
        Operator { matrix: &self.matrix + &rhs.matrix, space: self.space.clone() }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs, "sub");
        Operator { matrix: &self.matrix - &rhs.matrix, space: self.space.clone() }
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs, "mul");
        Operator { matrix: &self.matrix * &rhs.matrix, space: self.space.clone() }
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
    space: ProductSpace,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// `max - min` of the spectrum; the scale used by relative tolerances.
    pub fn spectral_range(&self) -> f64 {
        self.max_eigenvalue() - self.min_eigenvalue()
    }

    /// `U diag(f(λ)) U^†` for a complex-valued function of the spectrum.
    /// Used for propagators `e^{-iλt}`; the real case is [`func_of_hermitian`].
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> Operator {
        let d = self.eigenvalues.len();
        let diag = DVector::from_iterator(d, self.eigenvalues.iter().map(|&l| f(l)));
        let m = &self.eigenvectors * CMatrix::from_diagonal(&diag) * self.eigenvectors.adjoint();
        Operator { matrix: m, space: self.space.clone() }
    }

    /// `max |U^†U - 1|`.
    pub fn orthonormality_deviation(&self) -> f64 {
        let d = self.eigenvalues.len();
        let g = self.eigenvectors.adjoint() * &self.eigenvectors;
        let mut dev: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
                dev = dev.max((g[(i, j)] - target).norm());
            }
        }
        dev
    }
}

/// Kronecker product with the left operand as the slower (system-major) index.
///
/// The result space keeps `a`'s system factor; every factor of `b` is appended
/// to the apparatus list. Bilinear in both arguments.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let mut app_dims = a.space.app_dims.clone();
    if b.space.sys_dim != 1 {
        app_dims.push(b.space.sys_dim);
    }
    app_dims.extend_from_slice(&b.space.app_dims);
    let space = ProductSpace::new(a.space.sys_dim, app_dims)?;
    let matrix = a.matrix.kronecker(&b.matrix);
    Operator::new(matrix, space)
}

/// Eigendecomposition of a Hermitian operator, eigenvalues ascending.
///
/// Inputs within [`HERMITICITY_TOL`] of Hermitian are symmetrized before
/// decomposition; anything farther is rejected.
pub fn eig_hermitian(a: &Operator) -> Result<SpectralDecomposition> {
    let dev = a.hermiticity_deviation();
    if dev > HERMITICITY_TOL {
        return Err(Error::NotHermitian { deviation: dev, tolerance: HERMITICITY_TOL });
    }
    let d = a.dim();

    // Exactly diagonal matrices (the model builders produce many) skip the
    // solver: sort the diagonal and permute identity columns.
    let exactly_diagonal = (0..d).all(|i| {
        (0..d).all(|j| i == j || (a.matrix[(i, j)] == C64::new(0.0, 0.0)))
    });
    if exactly_diagonal {
        let mut idx: Vec<usize> = (0..d).collect();
        let diag: Vec<f64> = (0..d).map(|i| a.matrix[(i, i)].re).collect();
        idx.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());
        let eigenvalues: Vec<f64> = idx.iter().map(|&i| diag[i]).collect();
        let mut eigenvectors = CMatrix::zeros(d, d);
        for (col, &i) in idx.iter().enumerate() {
            eigenvectors[(i, col)] = C64::new(1.0, 0.0);
        }
        return Ok(SpectralDecomposition { eigenvalues, eigenvectors, space: a.space.clone() });
    }

    let sym = a.symmetrized();
    let eig = sym.matrix.symmetric_eigen();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let eigenvalues: Vec<f64> = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(d, d);
    for (col, &i) in idx.iter().enumerate() {
        eigenvectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok(SpectralDecomposition { eigenvalues, eigenvectors, space: a.space.clone() })
}

/// `U diag(f(λ)) U^†` for a real function of a Hermitian operator's spectrum.
///
/// Fails if `f` is not finite on some eigenvalue (the offending eigenvalue is
/// named in the error), e.g. an overflowing Boltzmann factor.
pub fn func_of_hermitian(sd: &SpectralDecomposition, f: impl Fn(f64) -> f64) -> Result<Operator> {
    for &l in &sd.eigenvalues {
        if !f(l).is_finite() {
            return Err(Error::NonFiniteFunction { eigenvalue: l });
        }
    }
    Ok(sd.map_spectrum(|l| C64::new(f(l), 0.0)))
}

/// Trace over all apparatus factors: `(Tr_A a)_{nm} = Σ_k a_{nk,mk}`.
///
/// Linear and trace-preserving; the result lives on the system factor.
pub fn partial_trace_system(a: &Operator) -> Operator {
    let ds = a.space.sys_dim;
    let da = a.space.app_dim();
    let mut out = CMatrix::zeros(ds, ds);
    for n in 0..ds {
        for m in 0..ds {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..da {
                acc += a.matrix[(n * da + k, m * da + k)];
            }
            out[(n, m)] = acc;
        }
    }
    Operator { matrix: out, space: a.space.system_factor() }
}

/// `AB - BA`.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    if a.space != b.space {
        return Err(Error::DimensionMismatch(
            "commutator of operators on different spaces".into(),
        ));
    }
    let m = &a.matrix * &b.matrix - &b.matrix * &a.matrix;
    Ok(Operator { matrix: m, space: a.space.clone() })
}

/// Frobenius norm of `[a, b]`.
pub fn commutator_norm(a: &Operator, b: &Operator) -> Result<f64> {
    Ok(commutator(a, b)?.frobenius_norm())
}
