//! Subsystem labels, the partial trace and its adjoint embedding.
//!
//! Qubit `q` (1-based) is bit `N − q` of a computational-basis index, i.e.
//! qubit 1 is the most significant bit. A label's mask uses bit `q − 1` for
//! qubit `q`.

use std::fmt;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{qubits_for_dim, CMatrix};

/// Largest register handled by the `u32` subset masks.
pub const MAX_QUBITS: usize = 32;

/// A nonempty subset `𝒥` of the qubits `{1..N}`, with precomputed index maps.
///
/// Every full-space index splits uniquely as `kept[a] + traced[c]`, where
/// `a` indexes the reduced space of the kept qubits and `c` the complement.
#[derive(Clone, Debug)]
pub struct SubsystemLabel {
    mask: u32,
    num_qubits: usize,
    kept: Vec<usize>,
    traced: Vec<usize>,
}

impl SubsystemLabel {
    pub fn new(mask: u32, num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::InvalidSubsystem(format!("register size {num_qubits} out of range 1..={MAX_QUBITS}")));
        }
        if mask == 0 {
            return Err(Error::InvalidSubsystem("empty subsystem".into()));
        }
        if num_qubits < 32 && mask >> num_qubits != 0 {
            return Err(Error::InvalidSubsystem(format!("mask {mask:#b} names qubits beyond {num_qubits}")));
        }
        let kept_pos: Vec<usize> =
            (1..=num_qubits).filter(|q| mask & (1 << (q - 1)) != 0).map(|q| num_qubits - q).collect();
        let traced_pos: Vec<usize> =
            (1..=num_qubits).filter(|q| mask & (1 << (q - 1)) == 0).map(|q| num_qubits - q).collect();
        Ok(Self { mask, num_qubits, kept: scatter_table(&kept_pos), traced: scatter_table(&traced_pos) })
    }

    /// Builds a label from 1-based qubit numbers.
    pub fn from_qubits(qubits: &[usize], num_qubits: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &q in qubits {
            if q == 0 || q > num_qubits {
                return Err(Error::InvalidSubsystem(format!("qubit {q} outside 1..={num_qubits}")));
            }
            mask |= 1 << (q - 1);
        }
        Self::new(mask, num_qubits)
    }

    #[inline]
    pub fn mask(&self) -> u32 {
        self.mask
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Number of kept qubits `|𝒥|`.
    pub fn len(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    /// Kept qubits, ascending, 1-based.
    pub fn qubits(&self) -> Vec<usize> {
        (1..=self.num_qubits).filter(|q| self.mask & (1 << (q - 1)) != 0).collect()
    }

    /// Dimension of the kept space, `2^{|𝒥|}`.
    pub fn dim(&self) -> usize {
        self.kept.len()
    }

    /// Dimension of the complement space, `2^{N−|𝒥|}`.
    pub fn complement_dim(&self) -> usize {
        self.traced.len()
    }

    pub fn full_dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn intersection(&self, other: &Self) -> Option<Self> {
        if self.num_qubits != other.num_qubits {
            return None;
        }
        Self::new(self.mask & other.mask, self.num_qubits).ok()
    }

    /// Re-expresses `self` inside the reduced register of `parent`, whose
    /// kept qubits are renumbered `1..=|parent|` in ascending order.
    pub fn relative_to(&self, parent: &Self) -> Result<Self> {
        if self.num_qubits != parent.num_qubits || self.mask & !parent.mask != 0 {
            return Err(Error::InvalidSubsystem(format!("{self} is not contained in {parent}")));
        }
        let mut mask = 0u32;
        for (i, q) in parent.qubits().into_iter().enumerate() {
            if self.mask & (1 << (q - 1)) != 0 {
                mask |= 1 << i;
            }
        }
        Self::new(mask, parent.len())
    }

    #[inline]
    pub(crate) fn kept_offsets(&self) -> &[usize] {
        &self.kept
    }

    #[inline]
    pub(crate) fn traced_offsets(&self) -> &[usize] {
        &self.traced
    }
}

/// For bit positions `pos` (most significant first), returns the full-space
/// offsets of every reduced index.
fn scatter_table(pos: &[usize]) -> Vec<usize> {
    let k = pos.len();
    (0..1usize << k)
        .map(|a| {
            let mut off = 0;
            for (i, &p) in pos.iter().enumerate() {
                if a >> (k - 1 - i) & 1 == 1 {
                    off |= 1 << p;
                }
            }
            off
        })
        .collect()
}

impl PartialEq for SubsystemLabel {
    fn eq(&self, other: &Self) -> bool {
        self.mask == other.mask && self.num_qubits == other.num_qubits
    }
}

impl Eq for SubsystemLabel {}

impl Hash for SubsystemLabel {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.mask.hash(state);
        self.num_qubits.hash(state);
    }
}

impl PartialOrd for SubsystemLabel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Lexicographic on the sorted qubit lists.
impl Ord for SubsystemLabel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.qubits().cmp(&other.qubits())
    }
}

impl fmt::Display for SubsystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q: Vec<String> = self.qubits().iter().map(|q| q.to_string()).collect();
        write!(f, "{{{}}}", q.join(","))
    }
}

/// All `k`-subsets of `{1..n}` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Result<Vec<SubsystemLabel>> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("subset size {k} out of range 1..={n}")));
    }
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (1..=k).collect();
    loop {
        out.push(SubsystemLabel::from_qubits(&combo, n)?);
        let mut i = k;
        while i > 0 && combo[i - 1] == n - k + i {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        combo[i - 1] += 1;
        for j in i..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
    Ok(out)
}

/// `tr_{𝒥^c}[ρ]`. Works on any square matrix of matching size, PSD or not.
pub fn partial_trace(rho: &CMatrix, keep: &SubsystemLabel) -> Result<CMatrix> {
    let n = qubits_for_dim(rho.dim())?;
    if n != keep.num_qubits() {
        return Err(Error::DimensionMismatch { expected: keep.full_dim(), found: rho.dim() });
    }
    let kept = keep.kept_offsets();
    let traced = keep.traced_offsets();
    let d = kept.len();
    let mut out = CMatrix::zeros(d);
    for (a, &ka) in kept.iter().enumerate() {
        for (b, &kb) in kept.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for &c in traced {
                acc += rho[(ka + c, kb + c)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Adds `scale · (m ⊗ 𝟙_{𝒥^c})` into `target`, with `m`'s factor placed at
/// the qubit positions of `label`. This is the adjoint of [`partial_trace`].
pub fn add_embedded(target: &mut CMatrix, m: &CMatrix, label: &SubsystemLabel, scale: f64) -> Result<()> {
    if target.dim() != label.full_dim() {
        return Err(Error::DimensionMismatch { expected: label.full_dim(), found: target.dim() });
    }
    if m.dim() != label.dim() {
        return Err(Error::DimensionMismatch { expected: label.dim(), found: m.dim() });
    }
    let kept = label.kept_offsets();
    let traced = label.traced_offsets();
    for (a, &ka) in kept.iter().enumerate() {
        for (b, &kb) in kept.iter().enumerate() {
            let v = m[(a, b)] * scale;
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for &c in traced {
                target[(ka + c, kb + c)] += v;
            }
        }
    }
    Ok(())
}

/// `m ⊗ 𝟙_{𝒥^c}` embedded at the positions of `label`.
pub fn embed_identity(m: &CMatrix, label: &SubsystemLabel) -> Result<CMatrix> {
    let mut out = CMatrix::zeros(label.full_dim());
    add_embedded(&mut out, m, label, 1.0)?;
    Ok(out)
}
