//! Unitary elements and the measurement-induced superselection map.
//!
//! The catalog fixes the interferometer conventions used throughout:
//! a beam splitter transmits with amplitude 1 and reflects with amplitude i
//! (reflection costs a π/2 phase), so the dud Mach-Zehnder composite
//! `BS·M·BS` sends `|1⟩` to exactly `−|1⟩`.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qstate::{ensure_same_space, HilbertSpace, StateVector, TOL_MATRIX};

/// Unitarity tolerance for catalog-built matrices.
pub const TOL_UNITARY: f64 = 1e-9;
/// Looser unitarity tolerance for matrices typed by hand in scenario files.
pub const TOL_UNITARY_DSL: f64 = 1e-6;

/// A named unitary matrix over a labeled space. `U†U = I` is checked at
/// construction.
#[derive(Debug, Clone)]
pub struct UnitaryOp {
    space: Arc<HilbertSpace>,
    matrix: Vec<Complex64>, // row-major dim×dim
    name: String,
}

impl UnitaryOp {
    pub fn new(space: Arc<HilbertSpace>, matrix: Vec<Complex64>, name: impl Into<String>) -> Result<Self> {
        Self::with_tolerance(space, matrix, name, TOL_UNITARY)
    }

    pub fn with_tolerance(
        space: Arc<HilbertSpace>,
        matrix: Vec<Complex64>,
        name: impl Into<String>,
        tol: f64,
    ) -> Result<Self> {
        let n = space.dim();
        if matrix.len() != n * n {
            return Err(Error::AmplitudeCountMismatch { expected: n * n, actual: matrix.len() });
        }
        for (i, e) in matrix.iter().enumerate() {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::NonFiniteAmplitude { index: i });
            }
        }
        let deviation = unitarity_deviation(&matrix, n);
        if deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { space, matrix, name: name.into() })
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.space.dim() + col]
    }
}

/// Max-entry deviation of `U†U` from the identity.
pub fn unitarity_deviation(matrix: &[Complex64], n: usize) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::ZERO;
            for k in 0..n {
                acc += matrix[k * n + i].conj() * matrix[k * n + j];
            }
            let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
            dev = dev.max((acc - target).norm());
        }
    }
    dev
}

/// 50/50 splitter on a two-path space: `(1/√2)·[[1, i], [i, 1]]` in label
/// order, so `|1⟩ → (|1⟩ + i|2⟩)/√2` and `|2⟩ → (i|1⟩ + |2⟩)/√2`.
pub fn beam_splitter(space: &Arc<HilbertSpace>) -> Result<UnitaryOp> {
    require_dim(space, 2)?;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let t = Complex64::new(r, 0.0);
    let refl = Complex64::new(0.0, r);
    UnitaryOp::new(Arc::clone(space), vec![t, refl, refl, t], "beam_splitter")
}

/// Fully silvered mirror pair on a two-path space: swaps the paths with a
/// reflection phase i (`|2⟩ → i|1⟩`, and `|1⟩ → i|2⟩` by unitarity).
pub fn mirror(space: &Arc<HilbertSpace>) -> Result<UnitaryOp> {
    require_dim(space, 2)?;
    let i = Complex64::new(0.0, 1.0);
    UnitaryOp::new(Arc::clone(space), vec![Complex64::ZERO, i, i, Complex64::ZERO], "mirror")
}

/// Ideal spin-dependent deflection on a spin⊗path product space.
///
/// Spin basis index k shifts the path index by k (mod 2): the first spin
/// component leaves the path alone, the second advances it one position, so
/// with path labels (upper, lower) the state
/// `(c₁|up⟩ + c₂|down⟩)⊗|upper⟩` becomes `c₁|up⊗upper⟩ + c₂|down⊗lower⟩`.
/// On the rest of the basis the shift acts as its own inverse.
pub fn spin_path_coupler(
    spin: &Arc<HilbertSpace>,
    path: &Arc<HilbertSpace>,
) -> Result<UnitaryOp> {
    require_dim(spin, 2)?;
    require_dim(path, 2)?;
    let product = crate::qstate::tensor_product_space(spin, path)?;
    let n = product.dim();
    let mut matrix = vec![Complex64::ZERO; n * n];
    for s in 0..2 {
        for p in 0..2 {
            let from = s * 2 + p;
            let to = s * 2 + ((p + s) % 2);
            matrix[to * n + from] = Complex64::ONE;
        }
    }
    UnitaryOp::new(product, matrix, "spin_path_coupler")
}

fn require_dim(space: &Arc<HilbertSpace>, expected: usize) -> Result<()> {
    if space.dim() == expected {
        Ok(())
    } else {
        Err(Error::WrongDimension { expected, actual: space.dim() })
    }
}

/// `U|ψ⟩`.
pub fn apply(u: &UnitaryOp, psi: &StateVector) -> Result<StateVector> {
    ensure_same_space(u.space(), psi.space())?;
    let n = psi.dim();
    let amps = psi.amplitudes();
    let mut out = vec![Complex64::ZERO; n];
    for (row, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for col in 0..n {
            acc += u.matrix[row * n + col] * amps[col];
        }
        *slot = acc;
    }
    StateVector::new(Arc::clone(psi.space()), out)
}

/// A partition of the basis labels into outcome sectors.
#[derive(Debug, Clone)]
pub struct SuperselectionBasis {
    space: Arc<HilbertSpace>,
    block_of_index: Vec<usize>,
    blocks: Vec<Vec<String>>,
}

impl SuperselectionBasis {
    pub fn new(space: Arc<HilbertSpace>, blocks: Vec<Vec<String>>) -> Result<Self> {
        let mut block_of_index = vec![usize::MAX; space.dim()];
        let mut seen = 0usize;
        for (b, block) in blocks.iter().enumerate() {
            for label in block {
                let idx = space
                    .index_of(label)
                    .ok_or_else(|| Error::UnknownLabel { label: label.clone() })?;
                if block_of_index[idx] != usize::MAX {
                    return Err(Error::BadPartition(format!("label {label:?} listed twice")));
                }
                block_of_index[idx] = b;
                seen += 1;
            }
        }
        if seen != space.dim() {
            return Err(Error::BadPartition(format!(
                "blocks cover {seen} of {} labels",
                space.dim()
            )));
        }
        Ok(Self { space, block_of_index, blocks })
    }

    /// One singleton block per label: full dynamical diagonalization.
    pub fn singletons(space: &Arc<HilbertSpace>) -> Self {
        let blocks = space.labels().iter().map(|l| vec![l.clone()]).collect();
        Self::new(Arc::clone(space), blocks).expect("singleton blocks always partition")
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn blocks(&self) -> &[Vec<String>] {
        &self.blocks
    }
}

/// Measurement-induced superselection: zeroes every matrix entry that
/// connects different outcome sectors. With singleton blocks the output is
/// exactly `diag(|cₙ|²)`.
pub fn superselect(
    rho: &crate::qstate::DensityMatrix,
    basis: &SuperselectionBasis,
) -> Result<crate::qstate::DensityMatrix> {
    ensure_same_space(rho.space(), basis.space())?;
    let n = rho.dim();
    let mut entries = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            if basis.block_of_index[i] == basis.block_of_index[j] {
                entries[i * n + j] = rho.entry(i, j);
            }
        }
    }
    crate::qstate::DensityMatrix::new(Arc::clone(rho.space()), entries)
}

/// Test-support constructor: a deterministically seeded random unitary via
/// Gram-Schmidt on a random complex matrix.
pub fn random_unitary(
    space: &Arc<HilbertSpace>,
    rng: &mut impl crate::rng::UnitSource,
) -> Result<UnitaryOp> {
    let n = space.dim();
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for _ in 0..n {
        loop {
            let mut v: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.next_unit() - 0.5, rng.next_unit() - 0.5))
                .collect();
            for prev in &cols {
                let overlap: Complex64 =
                    prev.iter().zip(&v).map(|(p, x)| p.conj() * x).sum();
                for (x, p) in v.iter_mut().zip(prev) {
                    *x -= overlap * p;
                }
            }
            let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for x in &mut v {
                    *x /= norm;
                }
                cols.push(v);
                break;
            }
        }
    }
    let mut matrix = vec![Complex64::ZERO; n * n];
    for (c, col) in cols.iter().enumerate() {
        for (r, x) in col.iter().enumerate() {
            matrix[r * n + c] = *x;
        }
    }
    UnitaryOp::new(Arc::clone(space), matrix, "random_unitary")
}
