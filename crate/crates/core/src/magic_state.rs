//! Exact Pauli expectation values on product states of `|0⟩` and `|T⟩`.
//!
//! For `|T⟩ = (|0⟩ + e^{iπ/4}|1⟩)/√2` the single-site expectations are
//! `⟨X⟩ = ⟨Y⟩ = 1/√2`, `⟨Z⟩ = 0`; on `|0⟩` only `I` and `Z` survive.
//! Expectations factorize over sites, so every value is `0` or
//! `±2^{-k/2}` with `k` the number of T sites hit by an `X` or `Y`.

use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{words_for, Letter, PauliString};

/// Per-site preparation of the initial state.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SiteKind {
    Zero,
    T,
}

/// A real number that is exactly `0` or `sign · 2^{-half_exp/2}`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactValue {
    sign: i8,
    half_exp: u32,
}

impl ExactValue {
    pub const ZERO: ExactValue = ExactValue { sign: 0, half_exp: 0 };
    pub const ONE: ExactValue = ExactValue { sign: 1, half_exp: 0 };

    pub fn new(sign: i8, half_exp: u32) -> Self {
        if sign == 0 {
            Self::ZERO
        } else {
            Self { sign: sign.signum(), half_exp }
        }
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// `k` in `|value| = 2^{-k/2}`; meaningless for zero.
    pub fn half_exp(self) -> u32 {
        self.half_exp
    }

    pub fn abs(self) -> Self {
        Self { sign: self.sign.abs(), ..self }
    }

    /// `value²` as an exact power of two (zero for zero).
    pub fn square(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            pow2_neg(self.half_exp)
        }
    }

    pub fn value(self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let k = self.half_exp;
        let mag = if k.is_multiple_of(2) {
            pow2_neg(k / 2)
        } else {
            std::f64::consts::FRAC_1_SQRT_2 * pow2_neg(k / 2)
        };
        f64::from(self.sign) * mag
    }
}

pub(crate) fn pow2_neg(k: u32) -> f64 {
    f64::powi(0.5, k as i32)
}

impl fmt::Display for ExactValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.sign, self.half_exp) {
            (0, _) => f.write_str("0"),
            (s, 0) => write!(f, "{}1", if s < 0 { "-" } else { "" }),
            (s, k) => write!(f, "{}2^(-{k}/2)", if s < 0 { "-" } else { "" }),
        }
    }
}

impl std::ops::Mul for ExactValue {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        Self::new(self.sign * other.sign, self.half_exp + other.half_exp)
    }
}

/// Single-site expectation `⟨kind| letter |kind⟩`.
pub fn site_factor(kind: SiteKind, letter: Letter) -> ExactValue {
    match (kind, letter) {
        (_, Letter::I) | (SiteKind::Zero, Letter::Z) => ExactValue::ONE,
        (SiteKind::Zero, _) | (SiteKind::T, Letter::Z) => ExactValue::ZERO,
        (SiteKind::T, Letter::X) => ExactValue::new(1, 1),
        (SiteKind::T, Letter::Y) => ExactValue::new(1, 1),
    }
}

/// Product state of `|0⟩` and `|T⟩` factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProductState {
    kinds: Vec<SiteKind>,
    zero_mask: Vec<u64>,
    t_mask: Vec<u64>,
}

impl ProductState {
    pub fn new(kinds: Vec<SiteKind>) -> Self {
        let w = words_for(kinds.len());
        let mut zero_mask = vec![0u64; w];
        let mut t_mask = vec![0u64; w];
        for (j, k) in kinds.iter().enumerate() {
            let m = match k {
                SiteKind::Zero => &mut zero_mask,
                SiteKind::T => &mut t_mask,
            };
            m[j / 64] |= 1 << (j % 64);
        }
        Self { kinds, zero_mask, t_mask }
    }

    /// `|0…0⟩` with `|T⟩` on each of `magic_sites`.
    pub fn with_magic(n_sites: usize, magic_sites: &[usize]) -> Result<Self> {
        let mut kinds = vec![SiteKind::Zero; n_sites];
        for &m in magic_sites {
            if m >= n_sites {
                return Err(Error::SiteOutOfRange { site: m, n_sites });
            }
            kinds[m] = SiteKind::T;
        }
        Ok(Self::new(kinds))
    }

    pub fn n_sites(&self) -> usize {
        self.kinds.len()
    }

    pub fn kinds(&self) -> &[SiteKind] {
        &self.kinds
    }

    pub fn magic_sites(&self) -> Vec<usize> {
        (0..self.n_sites()).filter(|&j| self.kinds[j] == SiteKind::T).collect()
    }

    /// `⟨ψ₀|p|ψ₀⟩` for a Hermitian string.
    pub fn expectation(&self, p: &PauliString) -> Result<ExactValue> {
        if p.n_sites() != self.n_sites() {
            return Err(Error::LengthMismatch { left: p.n_sites(), right: self.n_sites() });
        }
        if !p.is_hermitian() {
            return Err(Error::NonHermitian(p.to_string()));
        }
        Ok(self.expectation_words(p.x_words(), p.z_words(), p.phase_exp()))
    }

    /// Expectation of `i^phase · ⊗ X^x Z^z` given as raw masks. The operator
    /// must be Hermitian.
    #[inline]
    pub(crate) fn expectation_words(&self, x: &[u64], z: &[u64], phase: u8) -> ExactValue {
        let mut k = 0u32;
        let mut ny = 0u32;
        for w in 0..x.len() {
            let (xw, zw) = (x[w], z[w]);
            if xw & self.zero_mask[w] != 0 || zw & !xw & self.t_mask[w] != 0 {
                return ExactValue::ZERO;
            }
            k += (xw & self.t_mask[w]).count_ones();
            ny += (xw & zw).count_ones();
        }
        // every surviving letter has expectation +1 or +1/√2, so only the
        // overall sign of the letter string matters (0 or 2 when Hermitian)
        let letter_phase = (u32::from(phase) + 4 - (ny & 3)) & 3;
        debug_assert!(letter_phase & 1 == 0, "non-Hermitian operator");
        ExactValue::new(if letter_phase == 2 { -1 } else { 1 }, k)
    }

    /// Counts nonzero expectations over all `4^width` strings supported on
    /// `width` consecutive sites starting at `start` (wrapping periodically).
    pub fn count_nonzero_in_region(&self, start: usize, width: usize) -> Result<u64> {
        const CAP: usize = 14;
        let n = self.n_sites();
        if width > CAP {
            return Err(Error::RegionTooLarge { width, cap: CAP });
        }
        if width > n {
            return Err(Error::RegionTooLarge { width, cap: n });
        }
        if start >= n {
            return Err(Error::SiteOutOfRange { site: start, n_sites: n });
        }
        let sites: Vec<usize> = (0..width).map(|k| (start + k) % n).collect();
        let w = words_for(n);
        let mut count = 0u64;
        let mut x = vec![0u64; w];
        let mut z = vec![0u64; w];
        for code in 0..(1u64 << (2 * width)) {
            x.iter_mut().for_each(|v| *v = 0);
            z.iter_mut().for_each(|v| *v = 0);
            let mut ny = 0u8;
            for (k, &s) in sites.iter().enumerate() {
                let (xb, zb) = ((code >> (2 * k)) & 1, (code >> (2 * k + 1)) & 1);
                x[s / 64] |= xb << (s % 64);
                z[s / 64] |= zb << (s % 64);
                ny += (xb & zb) as u8;
            }
            // phase = ny makes every enumerated string Hermitian with sign +1
            if !self.expectation_words(&x, &z, ny & 3).is_zero() {
                count += 1;
            }
        }
        Ok(count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn site_factors() {
        assert_eq!(site_factor(SiteKind::Zero, Letter::Z).value(), 1.0);
        assert_eq!(site_factor(SiteKind::Zero, Letter::X).value(), 0.0);
        assert_eq!(site_factor(SiteKind::Zero, Letter::Y).value(), 0.0);
        assert_eq!(site_factor(SiteKind::T, Letter::I).value(), 1.0);
        assert_eq!(site_factor(SiteKind::T, Letter::X).value(), FRAC_1_SQRT_2);
        assert_eq!(site_factor(SiteKind::T, Letter::Y).value(), FRAC_1_SQRT_2);
        assert_eq!(site_factor(SiteKind::T, Letter::Z).value(), 0.0);
    }

    #[test]
    fn two_site_expectations() {
        let s = ProductState::new(vec![SiteKind::Zero, SiteKind::T]);
        let e = |q: &str| s.expectation(&p(q)).unwrap().value();
        assert_eq!(e("ZX"), FRAC_1_SQRT_2);
        assert_eq!(e("IX"), FRAC_1_SQRT_2);
        assert_eq!(e("ZY"), FRAC_1_SQRT_2);
        assert_eq!(e("-IY"), -FRAC_1_SQRT_2);
        assert_eq!(e("II"), 1.0);
        assert_eq!(e("ZI"), 1.0);
        assert_eq!(e("XI"), 0.0);
        assert_eq!(e("IZ"), 0.0);
        // ten of the sixteen strings vanish
        let nonzero = Letter::ALL
            .iter()
            .flat_map(|&a| Letter::ALL.iter().map(move |&b| (a, b)))
            .filter(|&(a, b)| {
                !s.expectation(&PauliString::from_letters(&[a, b], false)).unwrap().is_zero()
            })
            .count();
        assert_eq!(nonzero, 6);
        assert!(s.expectation(&p("+iXI")).is_err());
        assert!(s.expectation(&p("XII")).is_err());
    }

    #[test]
    fn multi_t_values() {
        let s = ProductState::with_magic(4, &[1, 2]).unwrap();
        let v = s.expectation(&p("ZXYI")).unwrap();
        assert_eq!((v.sign(), v.half_exp()), (1, 2));
        assert_eq!(v.value(), 0.5);
        assert_eq!(s.expectation(&p("-ZXYI")).unwrap().value(), -0.5);
        assert_eq!(v.square(), 0.25);
        assert_eq!(s.magic_sites(), vec![1, 2]);
    }

    #[test]
    fn counting_law_small() {
        let s = ProductState::with_magic(8, &[3]).unwrap();
        assert_eq!(s.count_nonzero_in_region(2, 2).unwrap(), 6);
        assert_eq!(s.count_nonzero_in_region(2, 4).unwrap(), 24);
        // no T site inside: only {I, Z} strings survive
        assert_eq!(s.count_nonzero_in_region(4, 3).unwrap(), 8);
        // wrapping region
        assert_eq!(s.count_nonzero_in_region(6, 3).unwrap(), 8);
        assert!(s.count_nonzero_in_region(0, 15).is_err());
    }
}
