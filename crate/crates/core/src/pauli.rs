//! Signed Pauli strings on `L` sites with bit-packed X/Z masks.
//!
//! A string is stored as `i^phase · ⊗ⱼ X^xⱼ Z^zⱼ`. In this form a `Y` letter is
//! `x = z = 1` together with one unit of phase, since `Y = i·XZ`. Products only
//! need the rule `Z^a X^b = (-1)^{a·b} X^b Z^a`, so multiplication is XOR on
//! the masks plus a popcount on the phase.
//!
//! Site `0` is the leftmost character of the text form (`"+IXYZ"` has `X` on
//! site 1).

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A single-site Pauli letter.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

    /// `(x, z)` bits of the letter in the `X^x Z^z` encoding.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | '_' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

pub(crate) fn words_for(n_sites: usize) -> usize {
    n_sites.div_ceil(64).max(1)
}

/// Phase increment (mod 4) picked up when multiplying `(x1, z1)` by `(x2, z2)`
/// on a block of words.
#[inline]
pub(crate) fn product_phase(z1: &[u64], x2: &[u64]) -> u8 {
    let flips: u32 = z1.iter().zip(x2).map(|(a, b)| (a & b).count_ones()).sum();
    ((flips & 1) as u8) << 1
}

/// A Pauli operator `i^phase · ⊗ⱼ X^xⱼ Z^zⱼ` on `n_sites` qubits.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n_sites: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: u8,
}

impl PauliString {
    /// The identity on `n_sites` qubits.
    pub fn identity(n_sites: usize) -> Self {
        let w = words_for(n_sites);
        Self { n_sites, x: vec![0; w], z: vec![0; w], phase: 0 }
    }

    /// The Hermitian string with `letter` at `site` and identity elsewhere.
    pub fn single_site(site: usize, letter: Letter, n_sites: usize) -> Result<Self> {
        if site >= n_sites {
            return Err(Error::SiteOutOfRange { site, n_sites });
        }
        let mut p = Self::identity(n_sites);
        p.set_letter(site, letter);
        Ok(p)
    }

    /// Builds a Hermitian string from per-site letters with overall sign `+1`
    /// or `-1`.
    pub fn from_letters(letters: &[Letter], negative: bool) -> Self {
        let mut p = Self::identity(letters.len());
        for (site, &l) in letters.iter().enumerate() {
            p.set_letter(site, l);
        }
        if negative {
            p.phase = (p.phase + 2) & 3;
        }
        p
    }

    /// Builds a string from raw masks (site `j` is bit `j % 64` of word `j / 64`).
    pub fn from_masks(n_sites: usize, x: Vec<u64>, z: Vec<u64>, phase: u8) -> Result<Self> {
        let w = words_for(n_sites);
        if x.len() != w || z.len() != w {
            return Err(Error::LengthMismatch { left: x.len(), right: z.len() });
        }
        let mut p = Self { n_sites, x, z, phase: phase & 3 };
        p.clear_padding();
        Ok(p)
    }

    fn clear_padding(&mut self) {
        let rem = self.n_sites % 64;
        if rem != 0 {
            let last = self.x.len() - 1;
            let mask = (1u64 << rem) - 1;
            self.x[last] &= mask;
            self.z[last] &= mask;
        }
    }

    /// Replaces the letter at `site`, keeping the overall sign of a Hermitian
    /// string unchanged.
    pub fn set_letter(&mut self, site: usize, letter: Letter) {
        let old_y = self.letter(site) == Letter::Y;
        let (xb, zb) = letter.bits();
        let (w, b) = (site / 64, site % 64);
        self.x[w] = (self.x[w] & !(1 << b)) | ((xb as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((zb as u64) << b);
        let new_y = letter == Letter::Y;
        let delta: u8 = match (old_y, new_y) {
            (false, true) => 1,
            (true, false) => 3,
            _ => 0,
        };
        self.phase = (self.phase + delta) & 3;
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Power of `i` multiplying `⊗ⱼ X^xⱼ Z^zⱼ`.
    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn x_bit(&self, site: usize) -> bool {
        (self.x[site / 64] >> (site % 64)) & 1 == 1
    }

    pub fn z_bit(&self, site: usize) -> bool {
        (self.z[site / 64] >> (site % 64)) & 1 == 1
    }

    pub fn letter(&self, site: usize) -> Letter {
        Letter::from_bits(self.x_bit(site), self.z_bit(site))
    }

    pub fn letters(&self) -> Vec<Letter> {
        (0..self.n_sites).map(|j| self.letter(j)).collect()
    }

    pub fn y_count(&self) -> u32 {
        self.x.iter().zip(&self.z).map(|(a, b)| (a & b).count_ones()).sum()
    }

    /// Phase of the operator relative to the plain letter product, as a power
    /// of `i`.
    pub fn letter_phase(&self) -> u8 {
        (self.phase + 4 - (self.y_count() & 3) as u8) & 3
    }

    pub fn is_hermitian(&self) -> bool {
        self.letter_phase() & 1 == 0
    }

    /// `+1` or `-1` for Hermitian strings, `None` otherwise.
    pub fn sign(&self) -> Option<i8> {
        match self.letter_phase() {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// Multiplies by the scalar `i^k`.
    pub fn mul_phase(&mut self, k: u8) {
        self.phase = (self.phase + k) & 3;
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(Error::LengthMismatch { left: self.n_sites, right: other.n_sites });
        }
        Ok(())
    }

    /// Operator product `self · other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let mut r = self.clone();
        r.mul_assign(other)?;
        Ok(r)
    }

    /// In-place right multiplication `self ← self · other`.
    pub fn mul_assign(&mut self, other: &Self) -> Result<()> {
        self.check_len(other)?;
        self.phase = (self.phase + other.phase + product_phase(&self.z, &other.x)) & 3;
        for (a, b) in self.x.iter_mut().zip(&other.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&other.z) {
            *a ^= b;
        }
        Ok(())
    }

    /// Whether the two operators commute (even symplectic form).
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_len(other)?;
        let s: u32 = (0..self.x.len())
            .map(|w| ((self.x[w] & other.z[w]) ^ (self.z[w] & other.x[w])).count_ones())
            .sum();
        Ok(s.is_multiple_of(2))
    }

    /// Sites carrying a non-identity letter, in increasing order.
    pub fn support(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for (w, (a, b)) in self.x.iter().zip(&self.z).enumerate() {
            let mut m = a | b;
            while m != 0 {
                let bit = m.trailing_zeros() as usize;
                out.push(w * 64 + bit);
                m &= m - 1;
            }
        }
        out
    }

    /// Smallest and largest supported site.
    pub fn support_bounds(&self) -> Option<(usize, usize)> {
        let s = self.support();
        Some((*s.first()?, *s.last()?))
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Two-site restriction as a 4-bit code: `x_i`, `z_i`, `x_j`, `z_j` in bits 0..4.
    #[inline]
    pub(crate) fn local_code(&self, i: usize, j: usize) -> u8 {
        (self.x_bit(i) as u8)
            | (self.z_bit(i) as u8) << 1
            | (self.x_bit(j) as u8) << 2
            | (self.z_bit(j) as u8) << 3
    }

    #[inline]
    pub(crate) fn set_local_code(&mut self, i: usize, j: usize, code: u8) {
        for (site, shift) in [(i, 0), (j, 2)] {
            let (w, b) = (site / 64, site % 64);
            let xb = ((code >> shift) & 1) as u64;
            let zb = ((code >> (shift + 1)) & 1) as u64;
            self.x[w] = (self.x[w] & !(1 << b)) | (xb << b);
            self.z[w] = (self.z[w] & !(1 << b)) | (zb << b);
        }
    }

    /// Two-site string on `(i, j)` with the same `X^x Z^z`-form phase. The
    /// letter sign only matches the original when no `Y` sits outside the pair.
    pub fn restrict_pair(&self, i: usize, j: usize) -> PauliString {
        let code = self.local_code(i, j) as u64;
        let x = (code & 1) | ((code >> 2) & 1) << 1;
        let z = ((code >> 1) & 1) | ((code >> 3) & 1) << 1;
        PauliString { n_sites: 2, x: vec![x], z: vec![z], phase: self.phase }
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.letter_phase() {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        for j in 0..self.n_sites {
            write!(f, "{}", self.letter(j).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (k, rest) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i").or_else(|| s.strip_prefix("−i")) {
            (3, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-').or_else(|| s.strip_prefix('−')) {
            (2, r)
        } else {
            (0, s)
        };
        let letters = rest
            .chars()
            .map(|c| Letter::from_char(c).ok_or_else(|| Error::Parse(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::Parse(s.to_string()));
        }
        let mut p = PauliString::from_letters(&letters, false);
        p.mul_phase(k);
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_site_examples() {
        let id = PauliString::single_site(0, Letter::I, 4).unwrap();
        assert!(id.is_identity());
        assert_eq!(id.phase_exp(), 0);

        let y = PauliString::single_site(2, Letter::Y, 4).unwrap();
        assert_eq!(y.x_words()[0], 0b0100);
        assert_eq!(y.z_words()[0], 0b0100);
        assert_eq!(y.phase_exp(), 1);
        assert_eq!(y.to_string(), "+IIYI");

        let z = PauliString::single_site(1, Letter::Z, 2).unwrap();
        assert_eq!(z.x_words()[0], 0);
        assert_eq!(z.z_words()[0], 0b10);
        assert_eq!(z.phase_exp(), 0);

        assert_eq!(
            PauliString::single_site(4, Letter::X, 4),
            Err(Error::SiteOutOfRange { site: 4, n_sites: 4 })
        );
    }

    #[test]
    fn multiply_examples() {
        // XZ = -iY as operators; in X^x Z^z form that is x = z = 1 with no phase.
        let xz = p("X").multiply(&p("Z")).unwrap();
        assert_eq!((xz.x_words()[0], xz.z_words()[0], xz.phase_exp()), (1, 1, 0));
        assert_eq!(xz.to_string(), "-iY");
        assert_eq!(xz, p("-iY"));

        let q = p("-XYZI");
        assert_eq!(q.multiply(&PauliString::identity(4)).unwrap(), q);
        let zx = p("ZX");
        let sq = zx.multiply(&zx).unwrap();
        assert!(sq.is_identity());
        assert_eq!(sq.phase_exp(), 0);

        assert!(matches!(p("X").multiply(&p("XX")), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X").commutes(&p("Z")).unwrap());
        assert!(p("XX").commutes(&p("ZZ")).unwrap());
        assert!(p("XYZ").commutes(&PauliString::identity(3)).unwrap());
        assert!(p("X").commutes(&p("XX")).is_err());
    }

    #[test]
    fn support_examples() {
        assert!(PauliString::identity(3).support().is_empty());
        assert_eq!(p("IYZ").support(), vec![1, 2]);
        let x5 = PauliString::single_site(5, Letter::X, 30).unwrap();
        assert_eq!(x5.support(), vec![5]);
        assert_eq!(x5.support_bounds(), Some((5, 5)));
    }

    #[test]
    fn hermiticity_and_sign() {
        assert_eq!(p("-ZZ").sign(), Some(-1));
        assert_eq!(p("+YY").sign(), Some(1));
        assert_eq!(p("+iX").sign(), None);
        assert!(!p("+iX").is_hermitian());
    }

    #[test]
    fn text_round_trip_beyond_one_word() {
        let s: String = "+".to_string() + &"XYZI".repeat(20);
        let q = p(&s);
        assert_eq!(q.n_sites(), 80);
        assert_eq!(q.to_string(), s);
        assert_eq!(q.weight(), 60);
        assert_eq!(p("−ZZ").to_string(), "-ZZ");
    }

    #[test]
    fn set_letter_keeps_sign() {
        let mut q = p("-XYZ");
        q.set_letter(1, Letter::X);
        assert_eq!(q.to_string(), "-XXZ");
        q.set_letter(0, Letter::Y);
        assert_eq!(q.to_string(), "-YXZ");
    }

    #[test]
    fn local_code_round_trip() {
        let mut q = p("IXYZ");
        assert_eq!(q.local_code(1, 2), 0b1101);
        q.set_local_code(0, 3, 0b0110);
        assert_eq!(q.letter(0), Letter::Z);
        assert_eq!(q.letter(3), Letter::X);
        let r = p("-YIZ").restrict_pair(0, 2);
        assert_eq!(r.to_string(), "-YZ");
    }
}
