//! Dense state-vector reference used to validate the Heisenberg fast path.
//!
//! Basis convention: site `j` is bit `j` of the amplitude index (site 0 is the
//! least significant bit). Inside a two-qubit gate the local index is
//! `q₀ + 2·q₁`, where `q₀` is the first site of the pair.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use num_complex::Complex64 as C64;

use crate::clifford::{GateWord, Primitive};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::magic_state::SiteKind;
use crate::pauli::PauliString;

pub const MAX_DENSE_SITES: usize = 12;
/// Largest system for which the global SRE sums over all `4^L` strings.
pub const MAX_GLOBAL_SRE_SITES: usize = 7;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense `2×2` Hadamard.
pub fn hadamard() -> CMatrix {
    let h = FRAC_1_SQRT_2;
    CMatrix::from_rows(&[&[c(h, 0.0), c(h, 0.0)], &[c(h, 0.0), c(-h, 0.0)]])
}

pub fn phase_s() -> CMatrix {
    CMatrix::from_rows(&[&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), c(0.0, 1.0)]])
}

pub fn phase_t() -> CMatrix {
    let w = C64::from_polar(1.0, FRAC_PI_4);
    CMatrix::from_rows(&[&[c(1.0, 0.0), c(0.0, 0.0)], &[c(0.0, 0.0), w]])
}

/// `4×4` matrix of a primitive in the local basis `q₀ + 2·q₁`.
pub fn primitive_matrix(p: Primitive) -> CMatrix {
    let id = CMatrix::identity(2);
    // kron puts its left factor on the high bit, i.e. on q₁
    let on = |m: CMatrix, q: u8| if q == 0 { id.kron(&m) } else { m.kron(&id) };
    match p {
        Primitive::H(q) => on(hadamard(), q),
        Primitive::S(q) => on(phase_s(), q),
        Primitive::Cnot { control, target } => {
            let mut m = CMatrix::zeros(4);
            for l in 0..4usize {
                let out = if (l >> control) & 1 == 1 { l ^ (1 << target) } else { l };
                m[(out, l)] = c(1.0, 0.0);
            }
            m
        }
    }
}

/// Unitary of a word; the first primitive acts first.
pub fn word_matrix(word: &GateWord) -> CMatrix {
    word.0.iter().fold(CMatrix::identity(4), |acc, &p| primitive_matrix(p).matmul(&acc))
}

/// Dense matrix of a Pauli string in the site-`j` = bit-`j` convention.
pub fn pauli_matrix(p: &PauliString) -> CMatrix {
    let n = p.n_sites();
    let dim = 1usize << n;
    let (x, z) = masks(p);
    let ph = C64::i().powu(u32::from(p.phase_exp()));
    let mut m = CMatrix::zeros(dim);
    for k in 0..dim {
        let s = if (k as u64 & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        m[(k ^ x as usize, k)] = ph * s;
    }
    m
}

fn masks(p: &PauliString) -> (u64, u64) {
    assert!(p.n_sites() <= 64);
    (p.x_words()[0], p.z_words()[0])
}

/// Normalized state vector on at most [`MAX_DENSE_SITES`] qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseState {
    n_sites: usize,
    amps: Vec<C64>,
}

impl DenseState {
    /// Product of `|0⟩` and `|T⟩ = (|0⟩ + e^{iπ/4}|1⟩)/√2` factors.
    pub fn prepare_initial(kinds: &[SiteKind]) -> Result<Self> {
        let n = kinds.len();
        if n > MAX_DENSE_SITES {
            return Err(Error::OracleTooLarge { n, cap: MAX_DENSE_SITES });
        }
        let t1 = C64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4);
        let mut amps = vec![c(1.0, 0.0)];
        for kind in kinds {
            let (a0, a1) = match kind {
                SiteKind::Zero => (c(1.0, 0.0), c(0.0, 0.0)),
                SiteKind::T => (c(FRAC_1_SQRT_2, 0.0), t1),
            };
            // new site becomes the next-higher bit
            let mut next = Vec::with_capacity(amps.len() * 2);
            next.extend(amps.iter().map(|&v| v * a0));
            next.extend(amps.iter().map(|&v| v * a1));
            amps = next;
        }
        Ok(Self { n_sites: n, amps })
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n > MAX_DENSE_SITES {
            return Err(Error::OracleTooLarge { n, cap: MAX_DENSE_SITES });
        }
        Ok(Self { n_sites: n, amps })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_site(&self, s: usize) -> Result<()> {
        if s >= self.n_sites {
            return Err(Error::SiteOutOfRange { site: s, n_sites: self.n_sites });
        }
        Ok(())
    }

    pub fn apply_single(&mut self, m: &CMatrix, site: usize) -> Result<()> {
        self.check_site(site)?;
        let bit = 1usize << site;
        for k in 0..self.amps.len() {
            if k & bit == 0 {
                let (a0, a1) = (self.amps[k], self.amps[k | bit]);
                self.amps[k] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
                self.amps[k | bit] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
            }
        }
        Ok(())
    }

    /// Applies a `4×4` unitary with local qubit 0 on site `i` and 1 on `j`.
    pub fn apply_pair(&mut self, m: &CMatrix, i: usize, j: usize) -> Result<()> {
        self.check_site(i)?;
        self.check_site(j)?;
        if i == j {
            return Err(Error::InvalidGate(format!("pair ({i}, {j})")));
        }
        let (bi, bj) = (1usize << i, 1usize << j);
        for k in 0..self.amps.len() {
            if k & (bi | bj) != 0 {
                continue;
            }
            let idx = [k, k | bi, k | bj, k | bi | bj];
            let old = idx.map(|q| self.amps[q]);
            for (r, &q) in idx.iter().enumerate() {
                self.amps[q] = (0..4).map(|c| m[(r, c)] * old[c]).sum();
            }
        }
        Ok(())
    }

    /// Applies a generator word on the pair `(i, j)` in unitary order.
    pub fn apply_gate_word(&mut self, word: &GateWord, pair: (usize, usize)) -> Result<()> {
        if word.is_empty() {
            return Ok(());
        }
        self.apply_pair(&word_matrix(word), pair.0, pair.1)
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<C64> {
        if p.n_sites() != self.n_sites {
            return Err(Error::LengthMismatch { left: p.n_sites(), right: self.n_sites });
        }
        let (x, z) = masks(p);
        let ph = C64::i().powu(u32::from(p.phase_exp()));
        let mut acc = c(0.0, 0.0);
        for (k, &a) in self.amps.iter().enumerate() {
            let s = if (k as u64 & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.amps[k ^ x as usize].conj() * a * s;
        }
        Ok(acc * ph)
    }

    /// Partial trace onto `sites`; local bit `r` of the result is `sites[r]`.
    pub fn reduced_density(&self, sites: &[usize]) -> Result<DensityMatrix> {
        if sites.len() > 4 {
            return Err(Error::RegionTooLarge { width: sites.len(), cap: 4 });
        }
        for &s in sites {
            self.check_site(s)?;
        }
        let n = sites.len();
        let dim = 1usize << n;
        let keep: usize = sites.iter().map(|&s| 1usize << s).sum();
        let local = |k: usize| -> usize {
            sites.iter().enumerate().map(|(r, &s)| ((k >> s) & 1) << r).sum()
        };
        let mut m = CMatrix::zeros(dim);
        for (k, &a) in self.amps.iter().enumerate() {
            let env = k & !keep;
            let lk = local(k);
            for (l, &b) in self.amps.iter().enumerate() {
                if l & !keep != env {
                    continue;
                }
                m[(lk, local(l))] += a * b.conj();
            }
        }
        Ok(DensityMatrix { n_sites: n, matrix: m })
    }

    /// Global α = 2 SRE of the pure state by summing all `4^L` Pauli strings.
    pub fn global_sre2(&self) -> Result<f64> {
        let n = self.n_sites;
        if n > MAX_GLOBAL_SRE_SITES {
            return Err(Error::OracleTooLarge { n, cap: MAX_GLOBAL_SRE_SITES });
        }
        let dim = 1usize << n;
        let mut sum4 = 0.0;
        for x in 0..dim {
            for z in 0..dim {
                let mut acc = c(0.0, 0.0);
                for (k, &a) in self.amps.iter().enumerate() {
                    let s = if (k & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
                    acc += self.amps[k ^ x].conj() * a * s;
                }
                // |⟨X^x Z^z⟩| equals |⟨letters⟩|, phases drop out
                sum4 += acc.norm_sqr().powi(2);
            }
        }
        Ok(-(sum4 / dim as f64).ln())
    }
}

/// Density matrix of a small subsystem.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let dim = matrix.dim();
        let n = dim.trailing_zeros() as usize;
        if dim != 1 << n {
            return Err(Error::InvalidSpectrum(format!("dimension {dim} is not a power of 2")));
        }
        Ok(Self { n_sites: n, matrix })
    }

    /// `|ψ⟩⟨ψ|` of a state vector.
    pub fn pure(state: &DenseState) -> Result<Self> {
        let all: Vec<usize> = (0..state.n_sites()).collect();
        state.reduced_density(&all)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        // other on the high bits keeps `self` as the low sites
        DensityMatrix { n_sites: self.n_sites + other.n_sites, matrix: other.matrix.kron(&self.matrix) }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.matrix.matmul(&self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.matrix.hermitian_eigenvalues()
    }

    /// Checks Hermiticity, unit trace and positivity within tolerance.
    pub fn is_valid(&self, tol: f64) -> bool {
        let herm = self.matrix.max_abs_diff(&self.matrix.adjoint()) < tol;
        let tr = (self.trace() - 1.0).abs() < tol;
        let psd = self.eigenvalues().first().is_none_or(|&e| e >= -1e-10);
        herm && tr && psd
    }

    /// `Tr[ρP]` for a string on the subsystem.
    pub fn pauli_coefficient(&self, p: &PauliString) -> Result<C64> {
        if p.n_sites() != self.n_sites {
            return Err(Error::LengthMismatch { left: p.n_sites(), right: self.n_sites });
        }
        let (x, z) = masks(p);
        let ph = C64::i().powu(u32::from(p.phase_exp()));
        let dim = 1usize << self.n_sites;
        let mut acc = c(0.0, 0.0);
        for k in 0..dim {
            let s = if (k as u64 & z).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            acc += self.matrix[(k, k ^ x as usize)] * s;
        }
        Ok(acc * ph)
    }

    /// `Tr[ρP]` over all `4^n` letter strings (identity first, then
    /// lexicographic in `I, X, Y, Z` with site 0 varying slowest).
    pub fn pauli_spectrum(&self) -> Vec<f64> {
        use crate::pauli::Letter;
        let n = self.n_sites;
        (0..(1usize << (2 * n)))
            .map(|code| {
                let letters: Vec<Letter> = (0..n)
                    .map(|site| Letter::ALL[(code >> (2 * (n - 1 - site))) & 3])
                    .collect();
                let p = PauliString::from_letters(&letters, false);
                self.pauli_coefficient(&p).expect("matching size").re
            })
            .collect()
    }

    /// `M_α(ρ) = (ln A_α + S₂)/(1 - α)` with `A_α = 2^{-n} Σ |Tr ρP|^{2α}`.
    pub fn sre_alpha(&self, alpha: f64) -> Result<f64> {
        if alpha == 1.0 {
            return Err(Error::AlphaOne);
        }
        let spectrum = self.pauli_spectrum();
        let a_alpha = spectrum.iter().map(|c| c.abs().powf(2.0 * alpha)).sum::<f64>()
            / (1u64 << self.n_sites) as f64;
        let s2 = -self.purity().ln();
        Ok((a_alpha.ln() + s2) / (1.0 - alpha))
    }
}

/// Outcome of comparing the Heisenberg fast path with dense evolution.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EquivalenceReport {
    pub n_sites: usize,
    pub depth: usize,
    pub circuits: usize,
    /// Largest `|fast - dense|` over single-site expectations.
    pub max_expectation_error: f64,
    /// Largest deviation of the global SRE from `ln(4/3)·#T`.
    pub max_global_sre_error: f64,
    pub expectations_checked: u64,
}

impl EquivalenceReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.max_expectation_error <= tol && self.max_global_sre_error <= tol
    }
}

/// Samples `circuits` circuits (alternating gate kinds and magic placements),
/// evolves the dense state layer by layer and compares every single-site
/// `X`, `Y`, `Z` expectation against the generator frame at every time. The
/// global SRE is checked at every time when `L` allows it.
pub fn equivalence_suite(n_sites: usize, depth: usize, circuits: usize, seed: u64) -> Result<EquivalenceReport> {
    use crate::circuit::{pairs_for_layer, sample_rng, BrickworkSchedule, Circuit, GateKind, HeisenbergFrame};
    use crate::magic_state::ProductState;
    use crate::pauli::Letter;

    if n_sites > MAX_DENSE_SITES {
        return Err(Error::OracleTooLarge { n: n_sites, cap: MAX_DENSE_SITES });
    }
    let mut report = EquivalenceReport {
        n_sites,
        depth,
        circuits,
        max_expectation_error: 0.0,
        max_global_sre_error: 0.0,
        expectations_checked: 0,
    };
    for c in 0..circuits {
        let kind = if c % 2 == 0 { GateKind::FullClifford } else { GateKind::Restricted };
        let magic: Vec<usize> = if c % 4 < 2 { vec![n_sites / 2] } else { vec![1, n_sites - 2] };
        let schedule = BrickworkSchedule::new(n_sites, depth, kind)?;
        let circuit = Circuit::sample(schedule, &mut sample_rng(seed, c as u64));
        let product = ProductState::with_magic(n_sites, &magic)?;
        let mut dense = DenseState::prepare_initial(product.kinds())?;
        let mut frame = HeisenbergFrame::new(n_sites);
        let target = crate::sre::LN_4_3 * magic.len() as f64;
        for t in 0..=depth {
            if t > 0 {
                let layer = circuit.layer(t);
                for (g, pair) in layer.iter().zip(pairs_for_layer(t, n_sites)?) {
                    dense.apply_gate_word(&g.word(), pair)?;
                }
                frame.apply_layer(layer);
            }
            for site in 0..n_sites {
                let fast = frame.site_expectations(&product, site);
                for (k, letter) in [Letter::X, Letter::Y, Letter::Z].into_iter().enumerate() {
                    let p = PauliString::single_site(site, letter, n_sites)?;
                    let d = dense.pauli_expectation(&p)?;
                    let err = (d - C64::new(fast[k].value(), 0.0)).norm();
                    report.max_expectation_error = report.max_expectation_error.max(err);
                    report.expectations_checked += 1;
                }
            }
            if n_sites <= MAX_GLOBAL_SRE_SITES {
                let err = (dense.global_sre2()? - target).abs();
                report.max_global_sre_error = report.max_global_sre_error.max(err);
            }
        }
    }
    Ok(report)
}
