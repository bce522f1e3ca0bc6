//! States and density matrices over finite labeled Hilbert spaces.
//!
//! Basis states carry text labels (`"cell_12"`, `"up"`, `"1"`) so that
//! scenario descriptions map onto amplitudes directly; label declaration
//! order fixes amplitude order and sampling order everywhere. Tensor-product
//! spaces record their factor structure at construction, which is what makes
//! [`partial_trace`] well defined. Global phase is never normalized away;
//! use [`fidelity_pure`] for phase-insensitive comparison.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for pure arithmetic identities (norms, single products).
pub const TOL_EXACT: f64 = 1e-12;
/// Tolerance for accumulated matrix operations.
pub const TOL_MATRIX: f64 = 1e-9;
/// Lower bound for density-matrix pivot estimates in the PSD check.
pub const TOL_PSD: f64 = -1e-8;
/// Largest dimension at which the PSD factorization runs at build time.
const PSD_CHECK_DIM: usize = 16;

/// Separator used when tensor products join factor labels.
pub const LABEL_JOIN: char = '\u{2297}'; // ⊗

/// A finite Hilbert space with a labeled, ordered basis.
///
/// Spaces built by [`tensor_product_space`] remember their factors; atomic
/// spaces have none.
#[derive(Debug, Clone)]
pub struct HilbertSpace {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    factors: Vec<Arc<HilbertSpace>>,
}

impl HilbertSpace {
    /// Builds an atomic space. Labels must be non-empty and pairwise distinct.
    pub fn new<I, S>(labels: I) -> Result<Arc<Self>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        Self::with_factors(labels, Vec::new())
    }

    fn with_factors(labels: Vec<String>, factors: Vec<Arc<HilbertSpace>>) -> Result<Arc<Self>> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("space needs at least one basis label"));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateLabel { label: label.clone() });
            }
        }
        Ok(Arc::new(Self { labels, index, factors }))
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_at(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Recorded tensor factors; empty for atomic spaces.
    pub fn factors(&self) -> &[Arc<HilbertSpace>] {
        &self.factors
    }

    /// Two spaces are interchangeable when their ordered labels agree.
    pub fn same_space(a: &Arc<HilbertSpace>, b: &Arc<HilbertSpace>) -> bool {
        Arc::ptr_eq(a, b) || a.labels == b.labels
    }

    fn summary(&self) -> String {
        if self.dim() <= 4 {
            format!("{{{}}}", self.labels.join(", "))
        } else {
            format!("dim-{} ({}, ...)", self.dim(), self.labels[0])
        }
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.summary())
    }
}

pub(crate) fn ensure_same_space(a: &Arc<HilbertSpace>, b: &Arc<HilbertSpace>) -> Result<()> {
    if HilbertSpace::same_space(a, b) {
        Ok(())
    } else {
        Err(Error::SpaceMismatch { left: a.summary(), right: b.summary() })
    }
}

/// Tensor product of two spaces. Result labels are `"a⊗b"` pairs in
/// row-major order (left factor slowest); factor lists flatten, so
/// `(a⊗b)⊗c` records three factors.
pub fn tensor_product_space(
    a: &Arc<HilbertSpace>,
    b: &Arc<HilbertSpace>,
) -> Result<Arc<HilbertSpace>> {
    let mut labels = Vec::with_capacity(a.dim() * b.dim());
    for la in a.labels() {
        for lb in b.labels() {
            labels.push(format!("{la}{LABEL_JOIN}{lb}"));
        }
    }
    let mut factors = Vec::new();
    let mut push = |s: &Arc<HilbertSpace>| {
        if s.factors.is_empty() {
            factors.push(Arc::clone(s));
        } else {
            factors.extend(s.factors.iter().cloned());
        }
    };
    push(a);
    push(b);
    HilbertSpace::with_factors(labels, factors)
}

/// A vector of complex amplitudes over a labeled basis.
#[derive(Debug, Clone)]
pub struct StateVector {
    space: Arc<HilbertSpace>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes; checks length and finiteness, not normalization.
    pub fn new(space: Arc<HilbertSpace>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::AmplitudeCountMismatch {
                expected: space.dim(),
                actual: amplitudes.len(),
            });
        }
        for (i, amp) in amplitudes.iter().enumerate() {
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::NonFiniteAmplitude { index: i });
            }
        }
        Ok(Self { space, amplitudes })
    }

    /// The basis state `|label⟩`.
    pub fn basis(space: &Arc<HilbertSpace>, label: &str) -> Result<Self> {
        let idx = space
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel { label: label.to_string() })?;
        let mut amplitudes = vec![Complex64::ZERO; space.dim()];
        amplitudes[idx] = Complex64::ONE;
        Ok(Self { space: Arc::clone(space), amplitudes })
    }

    /// The uniform superposition with every amplitude `1/√dim`.
    pub fn uniform(space: &Arc<HilbertSpace>) -> Self {
        let c = Complex64::new(1.0 / (space.dim() as f64).sqrt(), 0.0);
        Self { space: Arc::clone(space), amplitudes: vec![c; space.dim()] }
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude_of(&self, label: &str) -> Option<Complex64> {
        self.space.index_of(label).map(|i| self.amplitudes[i])
    }

    /// `[re, im]` pairs in label order; the wire form used for JSON output.
    pub fn amplitude_pairs(&self) -> Vec<[f64; 2]> {
        self.amplitudes.iter().map(|c| [c.re, c.im]).collect()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (norm(self) - 1.0).abs() <= tol
    }

    pub(crate) fn ensure_normalized(&self, tol: f64) -> Result<()> {
        let n = norm(self);
        if (n - 1.0).abs() <= tol {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm: n })
        }
    }
}

/// `√(Σ |cₙ|²)`.
pub fn norm(psi: &StateVector) -> f64 {
    psi.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Scales to unit norm, preserving direction and phase.
pub fn normalize(psi: &StateVector) -> Result<StateVector> {
    let n = norm(psi);
    if n <= 1e-12 {
        return Err(Error::ZeroVector { norm: n });
    }
    let inv = 1.0 / n;
    Ok(StateVector {
        space: Arc::clone(&psi.space),
        amplitudes: psi.amplitudes.iter().map(|c| c * inv).collect(),
    })
}

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    ensure_same_space(&a.space, &b.space)?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `|a⟩ ⊗ |b⟩` on the recorded product space.
pub fn tensor_product(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    let space = tensor_product_space(&a.space, &b.space)?;
    let mut amplitudes = Vec::with_capacity(a.dim() * b.dim());
    for ca in &a.amplitudes {
        for cb in &b.amplitudes {
            amplitudes.push(ca * cb);
        }
    }
    Ok(StateVector { space, amplitudes })
}

/// `|⟨a|b⟩|²` for normalized pure states; 1 iff equal up to global phase.
pub fn fidelity_pure(a: &StateVector, b: &StateVector) -> Result<f64> {
    a.ensure_normalized(TOL_MATRIX)?;
    b.ensure_normalized(TOL_MATRIX)?;
    Ok(inner_product(a, b)?.norm_sqr())
}

/// A Hermitian, trace-1, positive-semidefinite matrix over a labeled basis.
///
/// All three invariants are verified at construction: Hermiticity and trace
/// entrywise at [`TOL_MATRIX`], positivity by a diagonally pivoted
/// Cholesky-style factorization (dimensions ≤ 16) whose smallest pivot
/// estimate must stay above [`TOL_PSD`].
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: Arc<HilbertSpace>,
    entries: Vec<Complex64>, // row-major dim×dim
}

impl DensityMatrix {
    pub fn new(space: Arc<HilbertSpace>, entries: Vec<Complex64>) -> Result<Self> {
        let n = space.dim();
        if entries.len() != n * n {
            return Err(Error::AmplitudeCountMismatch { expected: n * n, actual: entries.len() });
        }
        for (i, e) in entries.iter().enumerate() {
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::NonFiniteAmplitude { index: i });
            }
        }
        let mut herm_dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let dev = (entries[i * n + j] - entries[j * n + i].conj()).norm();
                herm_dev = herm_dev.max(dev);
            }
        }
        if herm_dev > TOL_MATRIX {
            return Err(Error::NotHermitian { deviation: herm_dev });
        }
        let trace: Complex64 = (0..n).map(|i| entries[i * n + i]).sum();
        if (trace.re - 1.0).abs() > TOL_MATRIX || trace.im.abs() > TOL_MATRIX {
            return Err(Error::InvalidTrace { trace: trace.re });
        }
        if n <= PSD_CHECK_DIM {
            let estimate = min_pivot_estimate(&entries, n);
            if estimate < TOL_PSD {
                return Err(Error::NotPositiveSemidefinite { estimate });
            }
        }
        Ok(Self { space, entries })
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.entry(i, i).re).sum()
    }

    /// `Tr ρ²`; 1 for pure states.
    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                // Tr ρ² = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² by Hermiticity
                acc += self.entries[i * n + j].norm_sqr();
            }
        }
        acc
    }
}

/// Smallest pivot seen by a diagonally pivoted Cholesky-style factorization.
/// Non-negative (up to rounding) iff the Hermitian input is PSD.
fn min_pivot_estimate(entries: &[Complex64], n: usize) -> f64 {
    let mut a = entries.to_vec();
    let mut order: Vec<usize> = (0..n).collect();
    let mut min_pivot = f64::INFINITY;
    // numerically-zero threshold scaled to the largest initial diagonal
    let max_diag = (0..n).map(|i| entries[i * n + i].re).fold(0.0f64, f64::max);
    let zero_cut = 1e-13 * max_diag.max(1.0);

    for k in 0..n {
        // pivot on the largest remaining diagonal entry
        let (p, d) = (k..n)
            .map(|j| (j, a[order[j] * n + order[j]].re))
            .fold((k, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        order.swap(k, p);
        if d <= zero_cut {
            // remaining block is numerically zero (or negative): its diagonal
            // entries are the eigenvalue estimates left over
            for j in k..n {
                min_pivot = min_pivot.min(a[order[j] * n + order[j]].re);
            }
            return min_pivot.min(d);
        }
        min_pivot = min_pivot.min(d);
        let rk = order[k];
        for i in (k + 1)..n {
            let ri = order[i];
            let lik = a[ri * n + rk] / d;
            for j in (k + 1)..n {
                let rj = order[j];
                let update = lik * a[rk * n + rj];
                a[ri * n + rj] -= update;
            }
        }
    }
    min_pivot
}

/// `ρ = |ψ⟩⟨ψ|` for a normalized pure state.
pub fn density_from_state(psi: &StateVector) -> Result<DensityMatrix> {
    psi.ensure_normalized(TOL_MATRIX)?;
    let n = psi.dim();
    let mut entries = vec![Complex64::ZERO; n * n];
    for i in 0..n {
        for j in 0..n {
            entries[i * n + j] = psi.amplitudes[i] * psi.amplitudes[j].conj();
        }
    }
    DensityMatrix::new(Arc::clone(&psi.space), entries)
}

/// Traces out every factor not listed in `keep`.
///
/// `keep` holds strictly increasing factor indices into the space's recorded
/// factor list. Keeping a single factor returns a matrix on that factor's
/// original space.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let factors = rho.space().factors();
    if factors.is_empty() {
        return Err(Error::NotAProductSpace);
    }
    if keep.is_empty() {
        return Err(Error::EmptyInput("must keep at least one factor"));
    }
    for w in keep.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::EmptyInput("keep indices must be strictly increasing"));
        }
    }
    if let Some(&bad) = keep.iter().find(|&&i| i >= factors.len()) {
        return Err(Error::SubsystemOutOfRange { index: bad, count: factors.len() });
    }

    let dims: Vec<usize> = factors.iter().map(|f| f.dim()).collect();
    let traced: Vec<usize> = (0..factors.len()).filter(|i| !keep.contains(i)).collect();

    let kept_space = if keep.len() == 1 {
        Arc::clone(&factors[keep[0]])
    } else {
        let mut it = keep.iter();
        let first = *it.next().unwrap();
        let mut acc = Arc::clone(&factors[first]);
        for &i in it {
            acc = tensor_product_space(&acc, &factors[i])?;
        }
        acc
    };

    let kept_dims: Vec<usize> = keep.iter().map(|&i| dims[i]).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&i| dims[i]).collect();
    let kept_total: usize = kept_dims.iter().product();
    let traced_total: usize = traced_dims.iter().product::<usize>().max(1);

    // flat index of the full space from per-factor indices
    let flat = |kept_idx: &[usize], traced_idx: &[usize]| -> usize {
        let mut full = vec![0usize; dims.len()];
        for (slot, &f) in keep.iter().enumerate() {
            full[f] = kept_idx[slot];
        }
        for (slot, &f) in traced.iter().enumerate() {
            full[f] = traced_idx[slot];
        }
        full.iter().zip(&dims).fold(0, |acc, (&i, &d)| acc * d + i)
    };
    let unrank = |mut r: usize, shape: &[usize]| -> Vec<usize> {
        let mut out = vec![0usize; shape.len()];
        for (slot, &d) in shape.iter().enumerate().rev() {
            out[slot] = r % d;
            r /= d;
        }
        out
    };

    let n = rho.dim();
    let mut entries = vec![Complex64::ZERO; kept_total * kept_total];
    for m in 0..kept_total {
        let mi = unrank(m, &kept_dims);
        for mp in 0..kept_total {
            let mpi = unrank(mp, &kept_dims);
            let mut sum = Complex64::ZERO;
            for t in 0..traced_total {
                let ti = unrank(t, &traced_dims);
                sum += rho.entries[flat(&mi, &ti) * n + flat(&mpi, &ti)];
            }
            entries[m * kept_total + mp] = sum;
        }
    }
    DensityMatrix::new(kept_space, entries)
}

/// An observable given by eigenvalues on label subspaces that partition the
/// basis.
#[derive(Debug, Clone)]
pub struct Observable {
    space: Arc<HilbertSpace>,
    eigenvalue_by_index: Vec<f64>,
    eigenpairs: Vec<(f64, Vec<String>)>,
}

impl Observable {
    pub fn new(space: Arc<HilbertSpace>, eigenpairs: Vec<(f64, Vec<String>)>) -> Result<Self> {
        let mut eigenvalue_by_index = vec![f64::NAN; space.dim()];
        let mut seen = 0usize;
        for (value, subspace) in &eigenpairs {
            if !value.is_finite() {
                return Err(Error::BadPartition(format!("eigenvalue {value} is not finite")));
            }
            for label in subspace {
                let idx = space
                    .index_of(label)
                    .ok_or_else(|| Error::UnknownLabel { label: label.clone() })?;
                if !eigenvalue_by_index[idx].is_nan() {
                    return Err(Error::BadPartition(format!("label {label:?} listed twice")));
                }
                eigenvalue_by_index[idx] = *value;
                seen += 1;
            }
        }
        if seen != space.dim() {
            return Err(Error::BadPartition(format!(
                "subspaces cover {seen} of {} labels",
                space.dim()
            )));
        }
        Ok(Self { space, eigenvalue_by_index, eigenpairs })
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        &self.space
    }

    pub fn eigenpairs(&self) -> &[(f64, Vec<String>)] {
        &self.eigenpairs
    }

    pub fn eigenvalue_at(&self, index: usize) -> f64 {
        self.eigenvalue_by_index[index]
    }
}

/// `⟨ψ|F|ψ⟩ = Σₙ fₙ |cₙ|²` for a normalized state.
pub fn expectation(psi: &StateVector, obs: &Observable) -> Result<f64> {
    ensure_same_space(&psi.space, &obs.space)?;
    psi.ensure_normalized(TOL_MATRIX)?;
    Ok(psi
        .amplitudes
        .iter()
        .enumerate()
        .map(|(i, c)| obs.eigenvalue_by_index[i] * c.norm_sqr())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dim2() -> Arc<HilbertSpace> {
        HilbertSpace::new(["1", "2"]).unwrap()
    }

    fn state(space: &Arc<HilbertSpace>, amps: &[Complex64]) -> StateVector {
        StateVector::new(Arc::clone(space), amps.to_vec()).unwrap()
    }

    /// (|1⟩ + i|2⟩)/√2
    fn gamma(space: &Arc<HilbertSpace>) -> StateVector {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        state(space, &[c(r, 0.0), c(0.0, r)])
    }

    #[test]
    fn norm_of_basis_state_is_one() {
        let sp = dim2();
        assert_eq!(norm(&state(&sp, &[c(1.0, 0.0), c(0.0, 0.0)])), 1.0);
    }

    #[test]
    fn norm_of_two_unit_entries_is_sqrt_two() {
        let sp = dim2();
        let n = norm(&state(&sp, &[c(1.0, 0.0), c(0.0, 1.0)]));
        assert!((n - 2.0f64.sqrt()).abs() <= TOL_EXACT);
    }

    #[test]
    fn norm_of_uniform_state_is_one() {
        let sp = HilbertSpace::new(["a", "b", "c", "d"]).unwrap();
        assert!((norm(&StateVector::uniform(&sp)) - 1.0).abs() <= TOL_EXACT);
    }

    #[test]
    fn normalize_scales_down() {
        let sp = dim2();
        let out = normalize(&state(&sp, &[c(2.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert!((out.amplitudes()[0] - c(1.0, 0.0)).norm() <= TOL_EXACT);
        assert_eq!(out.amplitudes()[1], Complex64::ZERO);
    }

    #[test]
    fn normalize_uniform_two_component() {
        let sp = dim2();
        let out = normalize(&state(&sp, &[c(1.0, 0.0), c(0.0, 1.0)])).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out.amplitudes()[0] - c(r, 0.0)).norm() <= TOL_EXACT);
        assert!((out.amplitudes()[1] - c(0.0, r)).norm() <= TOL_EXACT);
    }

    #[test]
    fn normalize_rejects_zero_vector() {
        let sp = dim2();
        let err = normalize(&state(&sp, &[Complex64::ZERO, Complex64::ZERO])).unwrap_err();
        assert!(matches!(err, Error::ZeroVector { .. }));
    }

    #[test]
    fn inner_product_on_basis_states() {
        let sp = dim2();
        let one = StateVector::basis(&sp, "1").unwrap();
        let two = StateVector::basis(&sp, "2").unwrap();
        assert_eq!(inner_product(&one, &one).unwrap(), Complex64::ONE);
        assert_eq!(inner_product(&one, &two).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn inner_product_with_split_state() {
        let sp = dim2();
        let one = StateVector::basis(&sp, "1").unwrap();
        let g = gamma(&sp);
        let ip = inner_product(&one, &g).unwrap();
        assert!((ip - c(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() <= TOL_EXACT);
        let gg = inner_product(&g, &g).unwrap();
        assert!((gg - Complex64::ONE).norm() <= TOL_EXACT);
    }

    #[test]
    fn inner_product_rejects_space_mismatch() {
        let a = StateVector::basis(&dim2(), "1").unwrap();
        let other = HilbertSpace::new(["x", "y"]).unwrap();
        let b = StateVector::basis(&other, "x").unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::SpaceMismatch { .. })));
    }

    #[test]
    fn tensor_product_multiplies_dimensions() {
        let spin = HilbertSpace::new(["up", "down"]).unwrap();
        let path = HilbertSpace::new(["1", "2"]).unwrap();
        let prod = tensor_product_space(&spin, &path).unwrap();
        assert_eq!(prod.dim(), 4);
        assert_eq!(prod.labels()[0], "up\u{2297}1");
        assert_eq!(prod.factors().len(), 2);
    }

    #[test]
    fn tensor_product_of_basis_states() {
        let spin = HilbertSpace::new(["up", "down"]).unwrap();
        let path = HilbertSpace::new(["1", "2"]).unwrap();
        let up = StateVector::basis(&spin, "up").unwrap();
        let one = StateVector::basis(&path, "1").unwrap();
        let prod = tensor_product(&up, &one).unwrap();
        assert_eq!(prod.amplitude_of("up\u{2297}1").unwrap(), Complex64::ONE);
        assert_eq!(norm(&prod), 1.0);
    }

    #[test]
    fn tensor_product_distributes() {
        let spin = HilbertSpace::new(["up", "down"]).unwrap();
        let path = HilbertSpace::new(["1", "2"]).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = state(&spin, &[c(r, 0.0), c(r, 0.0)]);
        let one = StateVector::basis(&path, "1").unwrap();
        let prod = tensor_product(&plus, &one).unwrap();
        let expect = [c(r, 0.0), Complex64::ZERO, c(r, 0.0), Complex64::ZERO];
        for (got, want) in prod.amplitudes().iter().zip(expect) {
            assert!((got - want).norm() <= TOL_EXACT);
        }
    }

    #[test]
    fn density_of_basis_state_is_projector() {
        let sp = dim2();
        let rho = density_from_state(&StateVector::basis(&sp, "1").unwrap()).unwrap();
        assert_eq!(rho.entry(0, 0), Complex64::ONE);
        assert_eq!(rho.entry(1, 1), Complex64::ZERO);
        assert!((rho.purity() - 1.0).abs() <= TOL_MATRIX);
    }

    #[test]
    fn density_of_split_state() {
        // outer product cₙ cₘ* of (1, i)/√2 → [[1/2, -i/2], [i/2, 1/2]]
        let sp = dim2();
        let rho = density_from_state(&gamma(&sp)).unwrap();
        assert!((rho.entry(0, 0) - c(0.5, 0.0)).norm() <= TOL_EXACT);
        assert!((rho.entry(0, 1) - c(0.0, -0.5)).norm() <= TOL_EXACT);
        assert!((rho.entry(1, 0) - c(0.0, 0.5)).norm() <= TOL_EXACT);
        assert!((rho.entry(1, 1) - c(0.5, 0.0)).norm() <= TOL_EXACT);
    }

    #[test]
    fn density_rejects_unnormalized_input() {
        let sp = dim2();
        let bad = state(&sp, &[c(2.0, 0.0), Complex64::ZERO]);
        assert!(matches!(density_from_state(&bad), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn density_constructor_rejects_negative_eigenvalue() {
        // Hermitian, trace 1, eigenvalues 1.2 and -0.2
        let sp = dim2();
        let entries = vec![c(0.5, 0.0), c(0.7, 0.0), c(0.7, 0.0), c(0.5, 0.0)];
        assert!(matches!(
            DensityMatrix::new(sp, entries),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn partial_trace_of_product_state_is_pure() {
        let spin = HilbertSpace::new(["up", "down"]).unwrap();
        let path = HilbertSpace::new(["1", "2"]).unwrap();
        let up = StateVector::basis(&spin, "up").unwrap();
        let one = StateVector::basis(&path, "1").unwrap();
        let rho = density_from_state(&tensor_product(&up, &one).unwrap()).unwrap();
        let reduced = partial_trace(&rho, &[0]).unwrap();
        assert!(HilbertSpace::same_space(reduced.space(), &spin));
        assert_eq!(reduced.entry(0, 0), Complex64::ONE);
        assert!((reduced.purity() - 1.0).abs() <= TOL_MATRIX);
    }

    #[test]
    fn partial_trace_of_entangled_pair_is_maximally_mixed() {
        // (|up⊗1⟩ + |down⊗2⟩)/√2: summing c_{n,N} c*_{m,N} by hand gives
        // diag(1/2, 1/2) on the kept factor
        let spin = HilbertSpace::new(["up", "down"]).unwrap();
        let path = HilbertSpace::new(["1", "2"]).unwrap();
        let prod = tensor_product_space(&spin, &path).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let psi = state(&prod, &[c(r, 0.0), Complex64::ZERO, Complex64::ZERO, c(r, 0.0)]);
        let rho = density_from_state(&psi).unwrap();
        let reduced = partial_trace(&rho, &[0]).unwrap();
        assert!((reduced.entry(0, 0) - c(0.5, 0.0)).norm() <= TOL_EXACT);
        assert!((reduced.entry(1, 1) - c(0.5, 0.0)).norm() <= TOL_EXACT);
        assert!(reduced.entry(0, 1).norm() <= TOL_EXACT);
        assert!((reduced.trace() - 1.0).abs() <= TOL_MATRIX);
    }

    #[test]
    fn partial_trace_requires_product_structure() {
        let sp = dim2();
        let rho = density_from_state(&StateVector::basis(&sp, "1").unwrap()).unwrap();
        assert!(matches!(partial_trace(&rho, &[0]), Err(Error::NotAProductSpace)));
    }

    #[test]
    fn expectation_of_eigenstate() {
        let sp = HilbertSpace::new(["up", "down"]).unwrap();
        let sz = Observable::new(
            Arc::clone(&sp),
            vec![(0.5, vec!["up".into()]), (-0.5, vec!["down".into()])],
        )
        .unwrap();
        let up = StateVector::basis(&sp, "up").unwrap();
        assert_eq!(expectation(&up, &sz).unwrap(), 0.5);
    }

    #[test]
    fn expectation_of_weighted_superposition() {
        // |c₁|² = 0.36 → 0.36·(+1/2) + 0.64·(−1/2) = −0.14
        let sp = HilbertSpace::new(["up", "down"]).unwrap();
        let sz = Observable::new(
            Arc::clone(&sp),
            vec![(0.5, vec!["up".into()]), (-0.5, vec!["down".into()])],
        )
        .unwrap();
        let psi = state(&sp, &[c(0.6, 0.0), c(0.0, 0.8)]);
        assert!((expectation(&psi, &sz).unwrap() - (-0.14)).abs() <= TOL_EXACT);
    }

    #[test]
    fn expectation_of_uniform_state_over_hemispheres_vanishes() {
        let labels: Vec<String> = (1..=8).map(|i| format!("cell_{i}")).collect();
        let sp = HilbertSpace::new(labels.clone()).unwrap();
        let hemi = Observable::new(
            Arc::clone(&sp),
            vec![(1.0, labels[..4].to_vec()), (-1.0, labels[4..].to_vec())],
        )
        .unwrap();
        let uniform = StateVector::uniform(&sp);
        assert!(expectation(&uniform, &hemi).unwrap().abs() <= TOL_EXACT);
    }

    #[test]
    fn observable_rejects_non_partition() {
        let sp = dim2();
        assert!(Observable::new(Arc::clone(&sp), vec![(1.0, vec!["1".into()])]).is_err());
        assert!(Observable::new(
            sp,
            vec![(1.0, vec!["1".into(), "2".into()]), (2.0, vec!["2".into()])]
        )
        .is_err());
    }

    #[test]
    fn fidelity_cases() {
        let sp = dim2();
        let one = StateVector::basis(&sp, "1").unwrap();
        let two = StateVector::basis(&sp, "2").unwrap();
        let minus_one = state(&sp, &[c(-1.0, 0.0), Complex64::ZERO]);
        assert_eq!(fidelity_pure(&one, &one).unwrap(), 1.0);
        assert_eq!(fidelity_pure(&one, &two).unwrap(), 0.0);
        // global phase −1 is physically identical
        assert_eq!(fidelity_pure(&one, &minus_one).unwrap(), 1.0);
    }
}
