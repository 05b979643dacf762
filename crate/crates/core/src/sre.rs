//! Second stabilizer Rényi entropy (natural log) from Pauli spectra.
//!
//! For an `n`-qubit state with Pauli coefficients `c_P = Tr[ρP]`,
//!
//! ```text
//! M₂(ρ) = -ln( Σ_P c_P⁴ / Σ_P c_P² )
//! ```
//!
//! With a single T site every coefficient is `0`, `±1/√2` or `±1`, so a
//! spectrum is summarized by the counts `(a, b)` of entries equal to `1` and
//! `1/√2`, and `M₂ = -ln((a + b/4)/(a + b/2))`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::magic_state::ExactValue;

/// `ln(4/3)`, the α = 2 SRE of a single T state.
pub const LN_4_3: f64 = 0.287_682_072_451_780_9;

/// Counts of `|c| = 1` entries (`a`, identity included) and `|c| = 1/√2`
/// entries (`b`) in a spectrum.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SpectrumCounts {
    pub a: u32,
    pub b: u32,
}

/// Exact α = 2 SRE of a spectrum with `a` unit and `b` half-weight entries.
pub fn sre2_from_counts(c: SpectrumCounts) -> Result<f64> {
    if c.a == 0 {
        return Err(Error::InvalidSpectrum("no identity entry (a = 0)".into()));
    }
    let (a, b) = (f64::from(c.a), f64::from(c.b));
    // + 0.0 turns -0.0 into 0.0 for stabilizer spectra
    Ok(-((a + b / 4.0) / (a + b / 2.0)).ln() + 0.0)
}

/// α = 2 SRE from a list of coefficient magnitudes (identity first).
pub fn sre2_from_values(values: &[f64]) -> Result<f64> {
    let (mut s2, mut s4) = (0.0, 0.0);
    for &v in values {
        if !v.is_finite() {
            return Err(Error::InvalidSpectrum(format!("non-finite entry {v}")));
        }
        let sq = v * v;
        s2 += sq;
        s4 += sq * sq;
    }
    if s2 == 0.0 {
        return Err(Error::InvalidSpectrum("all-zero spectrum".into()));
    }
    Ok(-(s4 / s2).ln())
}

/// α = 2 SRE from exact coefficients. Sums of powers of two are exact in `f64`
/// here, so rounding only enters through the final logarithm.
pub fn sre2_from_exact(values: &[ExactValue]) -> Result<f64> {
    let (mut s2, mut s4) = (0.0, 0.0);
    for v in values {
        let sq = v.square();
        s2 += sq;
        s4 += sq * sq;
    }
    if s2 == 0.0 {
        return Err(Error::InvalidSpectrum("all-zero spectrum".into()));
    }
    Ok(-(s4 / s2).ln())
}

/// Single-qubit α = 2 SRE from the `X`, `Y`, `Z` coefficients (identity is 1).
#[inline]
pub fn single_qubit_sre(c: [ExactValue; 3]) -> f64 {
    let mut a = 1usize;
    let mut b = 0usize;
    let mut general = false;
    for v in c {
        if v.is_zero() {
            continue;
        }
        match v.half_exp() {
            0 => a += 1,
            1 => b += 1,
            _ => general = true,
        }
    }
    if general {
        let vals = [ExactValue::ONE, c[0], c[1], c[2]];
        return sre2_from_exact(&vals).expect("identity entry is nonzero");
    }
    if b == 0 {
        return 0.0;
    }
    counts_table()[a][b]
}

fn counts_table() -> &'static [[f64; 4]; 5] {
    static TABLE: OnceLock<[[f64; 4]; 5]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0.0; 4]; 5];
        for (a, row) in t.iter_mut().enumerate().skip(1) {
            for (b, slot) in row.iter_mut().enumerate() {
                *slot = sre2_from_counts(SpectrumCounts { a: a as u32, b: b as u32 }).unwrap();
            }
        }
        t
    })
}

/// Closed form `M_α(|T⟩) = ln[(1 + 2^{1-α})/2] / (1 - α)`.
pub fn sre_alpha_t_closed_form(alpha: f64) -> Result<f64> {
    if alpha == 1.0 {
        return Err(Error::AlphaOne);
    }
    Ok(((1.0 + 2.0 * 2f64.powf(-alpha)) / 2.0).ln() / (1.0 - alpha))
}

/// The four single-qubit spectra reachable with one T site.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum SingleQubitClass {
    /// `{1, 0, 0, 0}`
    MaximallyMixed,
    /// `{1, 1, 0, 0}`
    PureStabilizer,
    /// `{1, 1/√2, 0, 0}`
    HalfMagic,
    /// `{1, 1/√2, 1/√2, 0}`
    FullMagic,
}

impl SingleQubitClass {
    pub fn counts(self) -> SpectrumCounts {
        let (a, b) = match self {
            Self::MaximallyMixed => (1, 0),
            Self::PureStabilizer => (2, 0),
            Self::HalfMagic => (1, 1),
            Self::FullMagic => (1, 2),
        };
        SpectrumCounts { a, b }
    }

    pub fn sre(self) -> f64 {
        sre2_from_counts(self.counts()).unwrap()
    }
}

/// Matches a four-entry spectrum (identity first) against the single-T table.
/// Entries must be exactly `0`, `1/√2` or `1` in magnitude.
pub fn classify_single_qubit_spectrum(values: &[f64]) -> Result<SingleQubitClass> {
    let unknown = || Error::UnknownSpectrum(values.to_vec());
    if values.len() != 4 || values[0].abs() != 1.0 {
        return Err(unknown());
    }
    let (mut a, mut b) = (0, 0);
    for &v in &values[1..] {
        let v = v.abs();
        if v == 1.0 {
            a += 1;
        } else if v == std::f64::consts::FRAC_1_SQRT_2 {
            b += 1;
        } else if v != 0.0 {
            return Err(unknown());
        }
    }
    match (a, b) {
        (0, 0) => Ok(SingleQubitClass::MaximallyMixed),
        (1, 0) => Ok(SingleQubitClass::PureStabilizer),
        (0, 1) => Ok(SingleQubitClass::HalfMagic),
        (0, 2) => Ok(SingleQubitClass::FullMagic),
        _ => Err(unknown()),
    }
}

/// Exact classification of the three non-identity coefficients.
pub fn classify_exact(c: [ExactValue; 3]) -> Result<SingleQubitClass> {
    let vals: Vec<f64> = std::iter::once(1.0).chain(c.iter().map(|v| v.value())).collect();
    classify_single_qubit_spectrum(&vals)
}

/// One `(a, b)` class of two-qubit spectra with its SRE.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumClass {
    pub a: u32,
    pub b: u32,
    pub sre: f64,
    /// Number of distinct supports (coefficient positions) realizing the class.
    pub supports: usize,
}

/// Two-qubit spectra consistent with a single-T initial state: coefficients in
/// `{0, ±1/√2, ±1}` with `c_II = 1`, purity bounds, a positive semidefinite
/// density matrix, and the coset structure inherited from the initial state
/// (the `1/√2` entries fill at most two cosets of the group of unit entries).
pub fn enumerate_allowed_two_qubit_spectra() -> Vec<SpectrumClass> {
    enumerate_two_qubit(true)
}

/// Same search without the coset condition: every spectrum on the value grid
/// that belongs to some valid density matrix.
pub fn enumerate_psd_two_qubit_spectra() -> Vec<SpectrumClass> {
    enumerate_two_qubit(false)
}

fn enumerate_two_qubit(require_cosets: bool) -> Vec<SpectrumClass> {
    let mut classes: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    let codes: Vec<u8> = (1..16).collect();
    for n1 in 0..=3usize {
        for nh in 0..=6usize {
            // Σ c² ≤ 4 with c_II = 1
            if 2 * n1 + nh > 6 {
                continue;
            }
            for_each_combination(&codes, n1, &mut |ones| {
                let rest: Vec<u8> = codes.iter().copied().filter(|c| !ones.contains(c)).collect();
                for_each_combination(&rest, nh, &mut |halves| {
                    if !marginals_ok(ones, halves) {
                        return;
                    }
                    if require_cosets && !coset_structure_ok(ones, halves) {
                        return;
                    }
                    if exact_psd::some_sign_pattern_is_psd(ones, halves) {
                        *classes.entry((1 + n1 as u32, nh as u32)).or_default() += 1;
                    }
                });
            });
        }
    }
    classes
        .into_iter()
        .map(|((a, b), supports)| SpectrumClass {
            a,
            b,
            sre: sre2_from_counts(SpectrumCounts { a, b }).unwrap(),
            supports,
        })
        .collect()
}

fn for_each_combination(items: &[u8], k: usize, f: &mut dyn FnMut(&[u8])) {
    fn rec(items: &[u8], k: usize, start: usize, buf: &mut Vec<u8>, f: &mut dyn FnMut(&[u8])) {
        if buf.len() == k {
            f(buf);
            return;
        }
        for i in start..items.len() {
            if items.len() - i < k - buf.len() {
                break;
            }
            buf.push(items[i]);
            rec(items, k, i + 1, buf, f);
            buf.pop();
        }
    }
    rec(items, k, 0, &mut Vec::with_capacity(k), f);
}

// Bloch-vector bounds of the two marginals, in units of 1/2 (a unit entry
// counts 2, a 1/√2 entry counts 1).
fn marginals_ok(ones: &[u8], halves: &[u8]) -> bool {
    let weight = |mask: u8| {
        ones.iter().filter(|&&c| c & mask == 0).count() * 2
            + halves.iter().filter(|&&c| c & mask == 0).count()
    };
    weight(0b1100) <= 2 && weight(0b0011) <= 2
}

fn coset_structure_ok(ones: &[u8], halves: &[u8]) -> bool {
    let mut group: Vec<u8> = vec![0];
    group.extend_from_slice(ones);
    for &g in &group {
        for &h in &group {
            if !group.contains(&(g ^ h)) {
                return false;
            }
        }
    }
    for &s in halves {
        for &g in &group {
            if !halves.contains(&(s ^ g)) {
                return false;
            }
        }
    }
    halves.len() <= 2 * group.len()
}

/// Exact positive-semidefiniteness test over `Z[√2][i]`.
///
/// `M = 4√2 ρ` has entries `a + b√2 (+ i(…))` with integer `a, b`. A Hermitian
/// matrix is PSD iff every elementary symmetric function of its eigenvalues is
/// non-negative, i.e. every sum of `k×k` principal minors is `≥ 0`.
mod exact_psd {
    use std::ops::{Add, Mul, Neg, Sub};

    /// `a + b√2`
    #[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
    pub(super) struct Root2 {
        a: i64,
        b: i64,
    }

    impl Root2 {
        pub(super) const fn new(a: i64, b: i64) -> Self {
            Self { a, b }
        }

        pub(super) fn signum(self) -> i32 {
            let (a, b) = (self.a, self.b);
            let sa = a.signum();
            let sb = b.signum();
            if sa >= 0 && sb >= 0 {
                return (sa + sb).signum() as i32;
            }
            if sa <= 0 && sb <= 0 {
                return -((sa.abs() + sb.abs()).signum() as i32);
            }
            // opposite signs: compare a² with 2b²
            let lhs = (a as i128) * (a as i128);
            let rhs = 2 * (b as i128) * (b as i128);
            match lhs.cmp(&rhs) {
                std::cmp::Ordering::Greater => sa as i32,
                std::cmp::Ordering::Less => sb as i32,
                std::cmp::Ordering::Equal => 0,
            }
        }
    }

    impl Add for Root2 {
        type Output = Self;
        fn add(self, o: Self) -> Self {
            Self::new(self.a + o.a, self.b + o.b)
        }
    }

    impl Sub for Root2 {
        type Output = Self;
        fn sub(self, o: Self) -> Self {
            Self::new(self.a - o.a, self.b - o.b)
        }
    }

    impl Neg for Root2 {
        type Output = Self;
        fn neg(self) -> Self {
            Self::new(-self.a, -self.b)
        }
    }

    impl Mul for Root2 {
        type Output = Self;
        fn mul(self, o: Self) -> Self {
            Self::new(self.a * o.a + 2 * self.b * o.b, self.a * o.b + self.b * o.a)
        }
    }

    /// Complex number over `Z[√2]`.
    #[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
    pub(super) struct C2 {
        re: Root2,
        im: Root2,
    }

    impl Add for C2 {
        type Output = Self;
        fn add(self, o: Self) -> Self {
            C2 { re: self.re + o.re, im: self.im + o.im }
        }
    }

    impl Sub for C2 {
        type Output = Self;
        fn sub(self, o: Self) -> Self {
            C2 { re: self.re - o.re, im: self.im - o.im }
        }
    }

    impl Mul for C2 {
        type Output = Self;
        fn mul(self, o: Self) -> Self {
            C2 {
                re: self.re * o.re - self.im * o.im,
                im: self.re * o.im + self.im * o.re,
            }
        }
    }

    // Single-qubit letter matrices as (re, im) integer entries, letter index
    // from (x, z) bits: I, X, Y, Z.
    fn letter_matrix(x: u8, z: u8) -> [[(i64, i64); 2]; 2] {
        match (x, z) {
            (0, 0) => [[(1, 0), (0, 0)], [(0, 0), (1, 0)]],
            (1, 0) => [[(0, 0), (1, 0)], [(1, 0), (0, 0)]],
            (1, 1) => [[(0, 0), (0, -1)], [(0, 1), (0, 0)]],
            _ => [[(1, 0), (0, 0)], [(0, 0), (-1, 0)]],
        }
    }

    fn pauli_matrix(code: u8) -> [[(i64, i64); 4]; 4] {
        let q0 = letter_matrix(code & 1, (code >> 1) & 1);
        let q1 = letter_matrix((code >> 2) & 1, (code >> 3) & 1);
        let mut m = [[(0, 0); 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                let (a, b) = q0[r >> 1][c >> 1];
                let (p, q) = q1[r & 1][c & 1];
                m[r][c] = (a * p - b * q, a * q + b * p);
            }
        }
        m
    }

    type Mat = [[C2; 4]; 4];

    fn det(m: &Mat, idx: &[usize]) -> C2 {
        match idx.len() {
            1 => m[idx[0]][idx[0]],
            _ => {
                // expansion along the first row of the submatrix
                let r = idx[0];
                let mut acc = C2::default();
                for (k, &c) in idx.iter().enumerate() {
                    let rows: Vec<usize> = idx[1..].to_vec();
                    let cols: Vec<usize> = idx.iter().copied().filter(|&x| x != c).collect();
                    let minor = det_rect(m, &rows, &cols);
                    let term = m[r][c] * minor;
                    acc = if k % 2 == 0 { acc + term } else { acc - term };
                }
                acc
            }
        }
    }

    fn det_rect(m: &Mat, rows: &[usize], cols: &[usize]) -> C2 {
        if rows.len() == 1 {
            return m[rows[0]][cols[0]];
        }
        let r = rows[0];
        let mut acc = C2::default();
        for (k, &c) in cols.iter().enumerate() {
            let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
            let term = m[r][c] * det_rect(m, &rows[1..], &sub_cols);
            acc = if k % 2 == 0 { acc + term } else { acc - term };
        }
        acc
    }

    /// Exact PSD test of `M = 4√2 ρ`.
    pub(super) fn is_psd(m: &Mat) -> bool {
        for size in 1..=4usize {
            let mut total = Root2::default();
            for mask in 1u32..16 {
                if mask.count_ones() as usize != size {
                    continue;
                }
                let idx: Vec<usize> = (0..4).filter(|&k| mask & (1 << k) != 0).collect();
                let d = det(m, &idx);
                debug_assert_eq!(d.im, Root2::default());
                total = total + d.re;
            }
            if total.signum() < 0 {
                return false;
            }
        }
        true
    }

    /// Builds `4√2 ρ` for unit coefficients on `ones` and `1/√2` coefficients
    /// on `halves`, with signs from the bit pattern `signs`.
    pub(super) fn scaled_density(ones: &[u8], halves: &[u8], signs: u32) -> Mat {
        let mut m: Mat = [[C2::default(); 4]; 4];
        // 4√2 ρ = √2 I + Σ_ones ±√2 P + Σ_halves ±P
        let terms = std::iter::once((0u8, Root2::new(0, 1)))
            .chain(ones.iter().enumerate().map(|(k, &c)| {
                let s = if signs & (1 << k) != 0 { -1 } else { 1 };
                (c, Root2::new(0, s))
            }))
            .chain(halves.iter().enumerate().map(|(k, &c)| {
                let s = if signs & (1 << (ones.len() + k)) != 0 { -1 } else { 1 };
                (c, Root2::new(s, 0))
            }));
        for (code, coef) in terms {
            let p = pauli_matrix(code);
            for r in 0..4 {
                for c in 0..4 {
                    let (re, im) = p[r][c];
                    m[r][c] = m[r][c]
                        + C2 { re: coef * Root2::new(re, 0), im: coef * Root2::new(im, 0) };
                }
            }
        }
        m
    }

    pub(super) fn some_sign_pattern_is_psd(ones: &[u8], halves: &[u8]) -> bool {
        let n = ones.len() + halves.len();
        (0..(1u32 << n)).any(|signs| is_psd(&scaled_density(ones, halves, signs)))
    }

    #[cfg(test)]
    pub(super) fn root2_signum(a: i64, b: i64) -> i32 {
        Root2::new(a, b).signum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN_6_5: f64 = 0.182_321_556_793_954_6;

    #[test]
    fn counts_examples() {
        let s = |a, b| sre2_from_counts(SpectrumCounts { a, b }).unwrap();
        assert!((s(1, 2) - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((s(1, 2) - LN_4_3).abs() < 1e-15);
        assert!((s(1, 1) - LN_6_5).abs() < 1e-15);
        assert_eq!(s(2, 0), 0.0);
        assert_eq!(s(4, 0), 0.0);
        assert!(sre2_from_counts(SpectrumCounts { a: 0, b: 2 }).is_err());
    }

    #[test]
    fn values_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(sre2_from_values(&[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!((sre2_from_values(&[1.0, h, h, 0.0]).unwrap() - LN_4_3).abs() < 1e-15);
        let expected = -((1.0 + 2.0 / 16.0) / (1.0 + 2.0 / 4.0f64)).ln();
        assert!((sre2_from_values(&[1.0, 0.5, 0.5, 0.0]).unwrap() - expected).abs() < 1e-15);
        assert!((expected - LN_4_3).abs() < 1e-15);
        assert!(sre2_from_values(&[0.0; 4]).is_err());
    }

    #[test]
    fn closed_form() {
        assert!((sre_alpha_t_closed_form(2.0).unwrap() - LN_4_3).abs() < 1e-15);
        let a3 = 0.5 * (8.0f64 / 5.0).ln();
        assert!((sre_alpha_t_closed_form(3.0).unwrap() - a3).abs() < 1e-15);
        // independent evaluation of the Rényi entropy of {1/2, 1/4, 1/4, 0} shifted by ln 2
        let alpha = 20.0f64;
        let probs = [0.5f64, 0.25, 0.25];
        let renyi = (probs.iter().map(|p| p.powf(alpha)).sum::<f64>()).ln() / (1.0 - alpha);
        assert!((sre_alpha_t_closed_form(alpha).unwrap() - (renyi - 2f64.ln())).abs() < 1e-12);
        assert_eq!(sre_alpha_t_closed_form(1.0), Err(Error::AlphaOne));
    }

    #[test]
    fn single_qubit_fast_path_matches_values() {
        let vals = [ExactValue::ZERO, ExactValue::ONE, ExactValue::new(1, 1), ExactValue::new(-1, 1)];
        for &x in &vals {
            for &y in &vals {
                for &z in &vals {
                    let fast = single_qubit_sre([x, y, z]);
                    let slow = sre2_from_values(&[1.0, x.value(), y.value(), z.value()]).unwrap();
                    assert!((fast - slow).abs() < 1e-15);
                }
            }
        }
        let quarter = ExactValue::new(1, 4);
        let v = single_qubit_sre([quarter, ExactValue::ZERO, ExactValue::ZERO]);
        let expected = -((1.0 + 1.0 / 256.0) / (1.0 + 1.0 / 16.0f64)).ln();
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn classification() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(
            classify_single_qubit_spectrum(&[1.0, h, h, 0.0]).unwrap(),
            SingleQubitClass::FullMagic
        );
        assert!((SingleQubitClass::FullMagic.sre() - LN_4_3).abs() < 1e-15);
        assert_eq!(
            classify_single_qubit_spectrum(&[1.0, 0.0, 0.0, 0.0]).unwrap(),
            SingleQubitClass::MaximallyMixed
        );
        assert_eq!(SingleQubitClass::MaximallyMixed.sre(), 0.0);
        assert_eq!(
            classify_single_qubit_spectrum(&[1.0, 0.0, -1.0, 0.0]).unwrap(),
            SingleQubitClass::PureStabilizer
        );
        assert_eq!(
            classify_single_qubit_spectrum(&[1.0, 0.0, 0.0, -h]).unwrap(),
            SingleQubitClass::HalfMagic
        );
        assert!(classify_single_qubit_spectrum(&[1.0, 0.5, 0.0, 0.0]).is_err());
        assert!(classify_single_qubit_spectrum(&[1.0, 1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn root2_sign() {
        use exact_psd::root2_signum as s;
        assert_eq!(s(0, 0), 0);
        assert_eq!(s(3, -2), 1); // 3 - 2.83
        assert_eq!(s(2, -2), -1);
        assert_eq!(s(-3, 2), -1);
        assert_eq!(s(-1, 1), 1);
        assert_eq!(s(0, -1), -1);
    }

    #[test]
    fn psd_examples() {
        // |0T⟩: c_II = c_ZI = 1, c_IX = c_ZX = 1/√2, c_IY = c_ZY = -1/√2
        let zi = 0b0010;
        let (ix, zx, iy, zy) = (0b0100, 0b0110, 0b1100, 0b1110);
        let m = exact_psd::scaled_density(&[zi], &[ix, zx, iy, zy], 0b1100 << 1);
        assert!(exact_psd::is_psd(&m));
        // (2, 1): pure qubit 0 but only one half entry → negative eigenvalue
        let m = exact_psd::scaled_density(&[zi], &[ix], 0);
        assert!(!exact_psd::is_psd(&m));
        // maximally mixed
        assert!(exact_psd::is_psd(&exact_psd::scaled_density(&[], &[], 0)));
    }

    #[test]
    fn coset_condition() {
        assert!(coset_structure_ok(&[0b0010], &[0b0100, 0b0110]));
        assert!(!coset_structure_ok(&[0b0010], &[0b0100]));
        assert!(!coset_structure_ok(&[], &[0b0001, 0b0100, 0b0101]));
        assert!(coset_structure_ok(&[], &[0b0001, 0b0100]));
    }
}
