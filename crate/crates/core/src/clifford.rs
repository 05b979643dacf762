//! Two-qubit Clifford gates as adjoint actions on Pauli operators.
//!
//! A gate `C` is stored through its adjoint action `A(P) = C† P C` on the four
//! generators `X₀, Z₀, X₁, Z₁`. Two gates are equal when these signed images
//! agree, i.e. elements are taken modulo global phase. The full group is built
//! once by breadth-first closure from the identity under `H`, `S` and `CNOT`
//! and cached for the life of the process.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pauli::PauliString;

/// Order of the two-qubit Clifford group modulo phases.
pub const FULL_GROUP_ORDER: usize = 11520;

/// A primitive gate acting on qubit `0` or `1` of a pair.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Primitive {
    H(u8),
    S(u8),
    Cnot { control: u8, target: u8 },
}

impl Primitive {
    /// Fixed ordering used by the enumeration.
    pub const GENERATORS: [Primitive; 6] = [
        Primitive::H(0),
        Primitive::H(1),
        Primitive::S(0),
        Primitive::S(1),
        Primitive::Cnot { control: 0, target: 1 },
        Primitive::Cnot { control: 1, target: 0 },
    ];

    fn validate(self) -> Result<()> {
        let ok = match self {
            Primitive::H(q) | Primitive::S(q) => q < 2,
            Primitive::Cnot { control, target } => control < 2 && target < 2 && control != target,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidGate(self.to_string()))
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Primitive::H(q) => write!(f, "H{q}"),
            Primitive::S(q) => write!(f, "S{q}"),
            Primitive::Cnot { control, target } => write!(f, "CX{control}{target}"),
        }
    }
}

/// Sequence of primitives in the order they act on states (first element
/// acts first).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct GateWord(pub Vec<Primitive>);

impl GateWord {
    /// Replays the word into its adjoint action.
    pub fn to_gate(&self) -> Result<CliffordGate2> {
        self.0.iter().try_fold(CliffordGate2::identity(), |acc, &p| {
            Ok(CliffordGate2::primitive(p)?.compose(&acc))
        })
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for GateWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("I");
        }
        for (k, p) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

// Local two-site Pauli codes: bit 0 = x₀, bit 1 = z₀, bit 2 = x₁, bit 3 = z₁.
// A signed local operator packs the code in the low nibble and the X^x Z^z
// phase in bits 4..6.
const LOCAL_X: u8 = 0b0101;

#[inline]
fn local_mul(a: u8, b: u8) -> u8 {
    let (ca, cb) = (a & 15, b & 15);
    let flips = ((ca >> 1) & cb & LOCAL_X).count_ones() as u8;
    let phase = ((a >> 4) + (b >> 4) + 2 * flips) & 3;
    (ca ^ cb) | (phase << 4)
}

#[inline]
fn local_is_hermitian(v: u8) -> bool {
    let code = v & 15;
    let ny = (code & (code >> 1) & LOCAL_X).count_ones() as u8;
    ((v >> 4) + 4 - ny) & 1 == 0
}

#[inline]
fn local_symplectic(a: u8, b: u8) -> u32 {
    let (xa, za) = (a & LOCAL_X, (a >> 1) & LOCAL_X);
    let (xb, zb) = (b & LOCAL_X, (b >> 1) & LOCAL_X);
    ((xa & zb) ^ (za & xb)).count_ones() & 1
}

fn local_to_pauli(v: u8) -> PauliString {
    let code = (v & 15) as u64;
    let x = (code & 1) | ((code >> 2) & 1) << 1;
    let z = ((code >> 1) & 1) | ((code >> 3) & 1) << 1;
    PauliString::from_masks(2, vec![x], vec![z], v >> 4).expect("two-site masks")
}

/// Adjoint action of a two-qubit Clifford element, stored as the signed images
/// of `X₀, Z₀, X₁, Z₁` plus a 16-entry lookup table for all local Paulis.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct CliffordGate2 {
    images: [u8; 4],
    table: [u8; 16],
}

impl CliffordGate2 {
    fn from_images(images: [u8; 4]) -> Self {
        let mut table = [0u8; 16];
        for (code, slot) in table.iter_mut().enumerate() {
            let mut acc = 0u8;
            for (k, &img) in images.iter().enumerate() {
                if code & (1 << k) != 0 {
                    acc = local_mul(acc, img);
                }
            }
            *slot = acc;
        }
        Self { images, table }
    }

    pub fn identity() -> Self {
        Self::from_images([1, 2, 4, 8])
    }

    /// Adjoint action of a primitive, `A(P) = C† P C`.
    pub fn primitive(p: Primitive) -> Result<Self> {
        p.validate()?;
        let mut img = [1u8, 2, 4, 8];
        match p {
            Primitive::H(q) => {
                let q = 2 * q as usize;
                img.swap(q, q + 1);
            }
            Primitive::S(q) => {
                // S† X S = -Y = i³·XZ
                let q = 2 * q as usize;
                img[q] = (img[q] | img[q + 1]) | (3 << 4);
            }
            Primitive::Cnot { control, target } => {
                let (c, t) = (2 * control as usize, 2 * target as usize);
                img[c] |= img[t];
                img[t + 1] |= img[c + 1];
            }
        }
        Ok(Self::from_images(img))
    }

    /// Gate whose unitary is `self · first`: `first` acts on states before
    /// `self`. As adjoint actions this is `P ↦ A_first(A_self(P))`.
    pub fn compose(&self, first: &CliffordGate2) -> CliffordGate2 {
        let images = self.images.map(|v| first.apply_local(v));
        CliffordGate2::from_images(images)
    }

    #[inline]
    fn apply_local(&self, v: u8) -> u8 {
        let e = self.table[(v & 15) as usize];
        (e & 15) | ((((e >> 4) + (v >> 4)) & 3) << 4)
    }

    /// Image of generator `k` (`0: X₀, 1: Z₀, 2: X₁, 3: Z₁`) as a two-site string.
    pub fn image(&self, k: usize) -> PauliString {
        local_to_pauli(self.images[k])
    }

    pub fn images(&self) -> [PauliString; 4] {
        [0, 1, 2, 3].map(|k| self.image(k))
    }

    /// Packed images, usable as a compact key.
    pub fn key(&self) -> [u8; 4] {
        self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images == [1, 2, 4, 8]
    }

    /// Checks Hermiticity, non-triviality and preservation of the commutation
    /// structure of the generator images.
    pub fn is_valid(&self) -> bool {
        let imgs = self.images;
        if imgs.iter().any(|&v| v & 15 == 0 || !local_is_hermitian(v)) {
            return false;
        }
        for a in 0..4 {
            for b in (a + 1)..4 {
                let expected = u32::from((a, b) == (0, 1) || (a, b) == (2, 3));
                if local_symplectic(imgs[a], imgs[b]) != expected {
                    return false;
                }
            }
        }
        // rank over GF(2)
        let mut rows: Vec<u8> = imgs.iter().map(|v| v & 15).collect();
        let mut rank = 0;
        for bit in 0..4 {
            if let Some(pos) = (rank..4).find(|&r| rows[r] & (1 << bit) != 0) {
                rows.swap(rank, pos);
                for r in 0..4 {
                    if r != rank && rows[r] & (1 << bit) != 0 {
                        rows[r] ^= rows[rank];
                    }
                }
                rank += 1;
            }
        }
        rank == 4
    }

    /// `C† p C` for a Hermitian two-site string.
    pub fn conjugate_pauli(&self, p: &PauliString) -> Result<PauliString> {
        if p.n_sites() != 2 {
            return Err(Error::LengthMismatch { left: p.n_sites(), right: 2 });
        }
        if !p.is_hermitian() {
            return Err(Error::NonHermitian(p.to_string()));
        }
        let mut q = p.clone();
        self.apply_to(&mut q, 0, 1);
        Ok(q)
    }

    /// Conjugates the sites `(i, j)` of `p` in place, with `i` playing qubit 0.
    #[inline]
    pub fn apply_to(&self, p: &mut PauliString, i: usize, j: usize) {
        let code = p.local_code(i, j);
        if code == 0 {
            return;
        }
        let e = self.table[code as usize];
        p.set_local_code(i, j, e & 15);
        p.mul_phase(e >> 4);
    }
}

impl Default for CliffordGate2 {
    fn default() -> Self {
        Self::identity()
    }
}

impl fmt::Display for CliffordGate2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ["X0", "Z0", "X1", "Z1"];
        for (k, name) in names.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{name}->{}", self.image(k))?;
        }
        Ok(())
    }
}

/// The enumerated group with a shortest generator word per element.
#[derive(Debug)]
pub struct GroupTable {
    pub gates: Vec<CliffordGate2>,
    pub words: Vec<GateWord>,
}

/// Breadth-first closure from the identity under [`Primitive::GENERATORS`].
///
/// Order is deterministic: BFS with the fixed generator order, new elements
/// appended in discovery order. Each word is a shortest one.
pub fn enumerate_full_group() -> GroupTable {
    let prims: Vec<CliffordGate2> = Primitive::GENERATORS
        .iter()
        .map(|&p| CliffordGate2::primitive(p).expect("valid generator"))
        .collect();
    let mut gates = vec![CliffordGate2::identity()];
    let mut words = vec![GateWord::default()];
    let mut seen: HashMap<[u8; 4], usize> = HashMap::new();
    seen.insert(gates[0].key(), 0);
    let mut head = 0;
    while head < gates.len() {
        let g = gates[head];
        for (k, prim) in prims.iter().enumerate() {
            let next = prim.compose(&g);
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(next.key()) {
                e.insert(gates.len());
                let mut w = words[head].clone();
                w.0.push(Primitive::GENERATORS[k]);
                gates.push(next);
                words.push(w);
            }
        }
        head += 1;
    }
    GroupTable { gates, words }
}

/// Process-wide cached enumeration.
pub fn full_group() -> &'static GroupTable {
    static TABLE: OnceLock<GroupTable> = OnceLock::new();
    TABLE.get_or_init(enumerate_full_group)
}

/// Index drawn uniformly from `[0, 11520)`.
pub fn sample_uniform_index<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(0..FULL_GROUP_ORDER)
}

/// Uniformly random element of the two-qubit Clifford group.
pub fn sample_uniform<R: Rng + ?Sized>(rng: &mut R) -> CliffordGate2 {
    full_group().gates[sample_uniform_index(rng)]
}

/// One draw of the restricted gate set: a CNOT with random orientation, then
/// two independent single-qubit gates from `{H, S}` on random qubits of the
/// pair, applied in draw order.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct RestrictedDraw {
    pub cnot: Primitive,
    pub first: Primitive,
    pub second: Primitive,
}

impl RestrictedDraw {
    /// Number of distinct raw draw tuples.
    pub const COUNT: usize = 32;

    /// Decodes a tuple index in `[0, 32)`: bit 0 CNOT direction, bits 1..3 the
    /// first single-qubit draw (gate, qubit), bits 3..5 the second.
    pub fn from_index(index: usize) -> Self {
        assert!(index < Self::COUNT);
        let cnot = if index & 1 == 0 {
            Primitive::Cnot { control: 0, target: 1 }
        } else {
            Primitive::Cnot { control: 1, target: 0 }
        };
        let single = |bits: usize| {
            let q = ((bits >> 1) & 1) as u8;
            if bits & 1 == 0 {
                Primitive::H(q)
            } else {
                Primitive::S(q)
            }
        };
        Self { cnot, first: single(index >> 1), second: single(index >> 3) }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let forward = rng.random::<bool>();
        let mut single = || {
            let gate_s = rng.random::<bool>();
            let q = rng.random::<bool>() as usize;
            (gate_s as usize) | (q << 1)
        };
        let first = single();
        let second = single();
        Self::from_index((!forward as usize) | (first << 1) | (second << 3))
    }

    pub fn word(&self) -> GateWord {
        GateWord(vec![self.cnot, self.first, self.second])
    }

    pub fn gate(&self) -> CliffordGate2 {
        self.word().to_gate().expect("restricted primitives are valid")
    }

    pub fn index(&self) -> usize {
        let enc = |p: Primitive| match p {
            Primitive::H(q) => (q as usize) << 1,
            Primitive::S(q) => 1 | (q as usize) << 1,
            Primitive::Cnot { .. } => unreachable!(),
        };
        let dir = usize::from(self.cnot != Primitive::Cnot { control: 0, target: 1 });
        dir | enc(self.first) << 1 | enc(self.second) << 3
    }
}

/// All 32 restricted outcomes, indexed by [`RestrictedDraw::index`].
pub fn restricted_table() -> &'static [CliffordGate2; 32] {
    static TABLE: OnceLock<[CliffordGate2; 32]> = OnceLock::new();
    TABLE.get_or_init(|| std::array::from_fn(|k| RestrictedDraw::from_index(k).gate()))
}

pub fn sample_restricted<R: Rng + ?Sized>(rng: &mut R) -> CliffordGate2 {
    restricted_table()[RestrictedDraw::sample(rng).index()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn images_str(g: &CliffordGate2) -> Vec<String> {
        g.images().iter().map(|q| q.to_string()).collect()
    }

    #[test]
    fn primitive_images() {
        let h = CliffordGate2::primitive(Primitive::H(0)).unwrap();
        assert_eq!(images_str(&h), ["+ZI", "+XI", "+IX", "+IZ"]);

        let s = CliffordGate2::primitive(Primitive::S(0)).unwrap();
        assert_eq!(images_str(&s)[..2], ["-YI", "+ZI"]);

        let cx = CliffordGate2::primitive(Primitive::Cnot { control: 0, target: 1 }).unwrap();
        assert_eq!(images_str(&cx), ["+XX", "+ZI", "+IX", "+ZZ"]);
        assert!(cx.compose(&cx).is_identity());

        assert!(CliffordGate2::primitive(Primitive::H(2)).is_err());
        assert!(CliffordGate2::primitive(Primitive::Cnot { control: 1, target: 1 }).is_err());
    }

    #[test]
    fn compose_examples() {
        let h = CliffordGate2::primitive(Primitive::H(0)).unwrap();
        let s = CliffordGate2::primitive(Primitive::S(0)).unwrap();
        assert_eq!(CliffordGate2::identity().compose(&h), h);
        assert!(h.compose(&h).is_identity());
        let z = s.compose(&s);
        assert_eq!(z.image(0).to_string(), "-XI");
        assert_eq!(z.image(1).to_string(), "+ZI");
    }

    #[test]
    fn conjugate_examples() {
        let cx = CliffordGate2::primitive(Primitive::Cnot { control: 0, target: 1 }).unwrap();
        assert_eq!(cx.conjugate_pauli(&p("XI")).unwrap(), p("XX"));
        assert_eq!(cx.conjugate_pauli(&p("YI")).unwrap(), p("YX"));
        let id = CliffordGate2::identity();
        assert_eq!(id.conjugate_pauli(&p("-YZ")).unwrap(), p("-YZ"));
        assert!(cx.conjugate_pauli(&p("+iXI")).is_err());
        assert!(cx.conjugate_pauli(&p("XII")).is_err());
    }

    #[test]
    fn full_group_has_11520_valid_elements() {
        let table = full_group();
        assert_eq!(table.gates.len(), FULL_GROUP_ORDER);
        assert!(table.gates[0].is_identity() && table.words[0].is_empty());
        assert_eq!(table.gates.iter().filter(|g| g.is_identity()).count(), 1);
        assert!(table.gates.iter().all(CliffordGate2::is_valid));
        for (g, w) in table.gates.iter().zip(&table.words) {
            assert_eq!(&w.to_gate().unwrap(), g);
        }
        // BFS gives non-decreasing word lengths
        assert!(table.words.windows(2).all(|w| w[0].len() <= w[1].len()));
    }

    #[test]
    fn restricted_draws() {
        let all: std::collections::HashSet<_> =
            (0..RestrictedDraw::COUNT).map(RestrictedDraw::from_index).collect();
        assert_eq!(all.len(), 32);
        for k in 0..32 {
            assert_eq!(RestrictedDraw::from_index(k).index(), k);
        }
        let members: std::collections::HashSet<_> = full_group().gates.iter().collect();
        assert!(restricted_table().iter().all(|g| members.contains(g) && g.is_valid()));
        let distinct: std::collections::HashSet<_> = restricted_table().iter().collect();
        assert!(distinct.len() < FULL_GROUP_ORDER);
    }

    #[test]
    fn sampling_is_seeded() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| sample_uniform_index(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert!(sample_restricted(&mut rng).is_valid());
        }
    }
}
