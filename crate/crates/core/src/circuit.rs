//! Brickwork schedule, Heisenberg evolution of Pauli strings and light cones.
//!
//! Layer `τ` (1-based) acts on the pairs `(2k, 2k+1)` when `τ` is odd and on
//! `(2k+1, 2k+2 mod L)` when `τ` is even. The state after `t` layers is
//! `U(t)|ψ₀⟩` with `U(t) = U_t ⋯ U_1`, so layer 1 touches the state first and
//! an operator read out at time `t` is `W_t(P) = U(t)† P U(t)`.
//!
//! Two evaluation routes are provided. [`Circuit::heisenberg`] conjugates one
//! string through layers `t, t-1, …, 1`. [`HeisenbergFrame`] instead tracks the
//! images of all `2L` single-site generators and advances with
//! `W_{t+1}(P) = W_t(A_{t+1}(P))`, which costs one pass per layer and serves
//! every site and time of a sample at once.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clifford::{full_group, restricted_table, GateWord, RestrictedDraw, FULL_GROUP_ORDER};
use crate::error::{Error, Result};
use crate::magic_state::{ExactValue, ProductState};
use crate::pauli::{product_phase, words_for, PauliString};

/// Ensemble the two-qubit gates are drawn from.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    /// Uniform over the 11520 elements of the two-qubit Clifford group.
    FullClifford,
    /// CNOT with random orientation followed by two random `H`/`S` gates.
    Restricted,
    /// Every gate is the identity; draws no randomness. Test hook.
    Identity,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::FullClifford => "full-clifford",
            GateKind::Restricted => "restricted",
            GateKind::Identity => "identity",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GateKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "full-clifford" | "full" | "clifford" => Ok(GateKind::FullClifford),
            "restricted" => Ok(GateKind::Restricted),
            "identity" => Ok(GateKind::Identity),
            other => Err(Error::Config(format!("unknown circuit kind {other:?}"))),
        }
    }
}

/// Periodic brickwork of `depth` layers on `n_sites` qubits.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct BrickworkSchedule {
    n_sites: usize,
    depth: usize,
    kind: GateKind,
}

impl BrickworkSchedule {
    pub fn new(n_sites: usize, depth: usize, kind: GateKind) -> Result<Self> {
        if n_sites < 2 || n_sites % 2 == 1 {
            return Err(Error::OddLength(n_sites));
        }
        Ok(Self { n_sites, depth, kind })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn pairs_per_layer(&self) -> usize {
        self.n_sites / 2
    }
}

/// Gate pairs of layer `layer` (1-based) on a ring of `n_sites` qubits.
pub fn pairs_for_layer(layer: usize, n_sites: usize) -> Result<Vec<(usize, usize)>> {
    if n_sites < 2 || n_sites % 2 == 1 {
        return Err(Error::OddLength(n_sites));
    }
    if layer == 0 {
        return Err(Error::ZeroTime);
    }
    let off = usize::from(layer.is_multiple_of(2));
    Ok((0..n_sites / 2).map(|k| ((2 * k + off) % n_sites, (2 * k + 1 + off) % n_sites)).collect())
}

#[inline]
fn pair_at(layer: usize, k: usize, n_sites: usize) -> (usize, usize) {
    let off = usize::from(layer.is_multiple_of(2));
    ((2 * k + off) % n_sites, (2 * k + 1 + off) % n_sites)
}

/// Per-sample random stream: ChaCha8 keyed by the master seed, with the
/// sample index selecting an independent stream.
pub fn sample_rng(master_seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(sample_index);
    rng
}

/// One drawn gate, remembered by its index so it can be replayed densely.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum GateChoice {
    Full(u16),
    Restricted(u8),
    Identity,
}

impl GateChoice {
    /// Draws one gate; called exactly once per `(layer, pair)` in order.
    pub fn draw<R: Rng + ?Sized>(kind: GateKind, rng: &mut R) -> Self {
        match kind {
            GateKind::FullClifford => GateChoice::Full(rng.random_range(0..FULL_GROUP_ORDER) as u16),
            GateKind::Restricted => GateChoice::Restricted(RestrictedDraw::sample(rng).index() as u8),
            GateKind::Identity => GateChoice::Identity,
        }
    }

    pub fn gate(self) -> crate::clifford::CliffordGate2 {
        match self {
            GateChoice::Full(k) => full_group().gates[k as usize],
            GateChoice::Restricted(k) => restricted_table()[k as usize],
            GateChoice::Identity => crate::clifford::CliffordGate2::identity(),
        }
    }

    pub fn word(self) -> GateWord {
        match self {
            GateChoice::Full(k) => full_group().words[k as usize].clone(),
            GateChoice::Restricted(k) => RestrictedDraw::from_index(k as usize).word(),
            GateChoice::Identity => GateWord::default(),
        }
    }
}

/// One realization of the random brickwork circuit.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    schedule: BrickworkSchedule,
    // layer-major, `depth × L/2`
    gates: Vec<GateChoice>,
}

impl Circuit {
    /// Draws gates for layers `1..=T`, pairs in [`pairs_for_layer`] order.
    pub fn sample<R: Rng + ?Sized>(schedule: BrickworkSchedule, rng: &mut R) -> Self {
        let mut c = Self { schedule, gates: Vec::new() };
        c.resample(rng);
        c
    }

    /// Redraws every gate in place, reusing the allocation.
    pub fn resample<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let kind = self.schedule.kind;
        let n = self.schedule.depth * self.schedule.pairs_per_layer();
        self.gates.clear();
        self.gates.extend((0..n).map(|_| GateChoice::draw(kind, rng)));
    }

    /// Builds a circuit from explicit gates, layer-major.
    pub fn from_gates(schedule: BrickworkSchedule, gates: Vec<GateChoice>) -> Result<Self> {
        let expected = schedule.depth * schedule.pairs_per_layer();
        if gates.len() != expected {
            return Err(Error::LengthMismatch { left: gates.len(), right: expected });
        }
        Ok(Self { schedule, gates })
    }

    pub fn schedule(&self) -> BrickworkSchedule {
        self.schedule
    }

    /// Gates of layer `layer` (1-based), aligned with [`pairs_for_layer`].
    pub fn layer(&self, layer: usize) -> &[GateChoice] {
        let w = self.schedule.pairs_per_layer();
        &self.gates[(layer - 1) * w..layer * w]
    }

    /// `U(t)† p U(t)`, applying layers `t, t-1, …, 1` to the operator.
    pub fn heisenberg(&self, p: &PauliString, t: usize) -> Result<PauliString> {
        let n = self.schedule.n_sites;
        if p.n_sites() != n {
            return Err(Error::LengthMismatch { left: p.n_sites(), right: n });
        }
        if t > self.schedule.depth {
            return Err(Error::Config(format!("time {t} beyond depth {}", self.schedule.depth)));
        }
        let mut q = p.clone();
        for layer in (1..=t).rev() {
            for (k, g) in self.layer(layer).iter().enumerate() {
                if let GateChoice::Identity = g {
                    continue;
                }
                let (i, j) = pair_at(layer, k, n);
                g.gate().apply_to(&mut q, i, j);
            }
        }
        Ok(q)
    }

    /// `[W_0(p), W_1(p), …, W_T(p)]`.
    pub fn trajectory(&self, p: &PauliString) -> Result<Vec<PauliString>> {
        (0..=self.schedule.depth).map(|t| self.heisenberg(p, t)).collect()
    }

    /// Gate words per layer as text, one layer per line.
    pub fn dump(&self) -> String {
        let n = self.schedule.n_sites;
        let mut out = String::new();
        for layer in 1..=self.schedule.depth {
            out.push_str(&format!("layer {layer}:"));
            for (k, g) in self.layer(layer).iter().enumerate() {
                let (i, j) = pair_at(layer, k, n);
                out.push_str(&format!(" ({i},{j})={}", g.word()));
            }
            out.push('\n');
        }
        out
    }
}

/// Samples one circuit from `rng` and returns the readout trajectory of `p0`
/// at times `0..=T`.
pub fn evolve_trajectory<R: Rng + ?Sized>(
    p0: &PauliString,
    schedule: BrickworkSchedule,
    rng: &mut R,
) -> Result<Vec<PauliString>> {
    Circuit::sample(schedule, rng).trajectory(p0)
}

/// Images `W_t(X_j)` and `W_t(Z_j)` of every single-site generator.
///
/// Row `2j` holds `X_j`, row `2j + 1` holds `Z_j`.
#[derive(Clone, Debug)]
pub struct HeisenbergFrame {
    n_sites: usize,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    phase: Vec<u8>,
    time: usize,
    // scratch rows for the four new images of one gate
    sx: Vec<u64>,
    sz: Vec<u64>,
}

impl HeisenbergFrame {
    pub fn new(n_sites: usize) -> Self {
        let words = words_for(n_sites);
        let mut f = Self {
            n_sites,
            words,
            x: vec![0; 2 * n_sites * words],
            z: vec![0; 2 * n_sites * words],
            phase: vec![0; 2 * n_sites],
            time: 0,
            sx: vec![0; 4 * words],
            sz: vec![0; 4 * words],
        };
        f.reset();
        f
    }

    /// Back to `t = 0`: every generator maps to itself.
    pub fn reset(&mut self) {
        self.x.iter_mut().for_each(|v| *v = 0);
        self.z.iter_mut().for_each(|v| *v = 0);
        self.phase.iter_mut().for_each(|v| *v = 0);
        let w = self.words;
        for j in 0..self.n_sites {
            self.x[2 * j * w + j / 64] = 1 << (j % 64);
            self.z[(2 * j + 1) * w + j / 64] = 1 << (j % 64);
        }
        self.time = 0;
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    /// Advances by one layer: `gates` are the gates of layer `time + 1`.
    pub fn apply_layer(&mut self, gates: &[GateChoice]) {
        let layer = self.time + 1;
        debug_assert_eq!(gates.len(), self.n_sites / 2);
        for (k, g) in gates.iter().enumerate() {
            if let GateChoice::Identity = g {
                continue;
            }
            let (i, j) = pair_at(layer, k, self.n_sites);
            self.apply_gate(g.gate(), i, j);
        }
        self.time = layer;
    }

    fn apply_gate(&mut self, gate: crate::clifford::CliffordGate2, i: usize, j: usize) {
        let w = self.words;
        let rows = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1];
        let mut new_phase = [0u8; 4];
        for (slot, &img) in gate.key().iter().enumerate() {
            let (sx, sz) = (&mut self.sx[slot * w..(slot + 1) * w], &mut self.sz[slot * w..(slot + 1) * w]);
            sx.iter_mut().for_each(|v| *v = 0);
            sz.iter_mut().for_each(|v| *v = 0);
            let mut ph = img >> 4;
            // product of old images in the fixed order X_i, Z_i, X_j, Z_j
            for (bit, &r) in rows.iter().enumerate() {
                if img & (1 << bit) == 0 {
                    continue;
                }
                let (rx, rz) = (&self.x[r * w..(r + 1) * w], &self.z[r * w..(r + 1) * w]);
                ph = ph.wrapping_add(self.phase[r]).wrapping_add(product_phase(sz, rx));
                for k in 0..w {
                    sx[k] ^= rx[k];
                    sz[k] ^= rz[k];
                }
            }
            new_phase[slot] = ph & 3;
        }
        for (slot, &r) in rows.iter().enumerate() {
            self.x[r * w..(r + 1) * w].copy_from_slice(&self.sx[slot * w..(slot + 1) * w]);
            self.z[r * w..(r + 1) * w].copy_from_slice(&self.sz[slot * w..(slot + 1) * w]);
            self.phase[r] = new_phase[slot];
        }
    }

    fn row(&self, r: usize) -> (&[u64], &[u64], u8) {
        let w = self.words;
        (&self.x[r * w..(r + 1) * w], &self.z[r * w..(r + 1) * w], self.phase[r])
    }

    /// `W_t(X_site)` as a string.
    pub fn image_x(&self, site: usize) -> PauliString {
        self.row_string(2 * site)
    }

    pub fn image_z(&self, site: usize) -> PauliString {
        self.row_string(2 * site + 1)
    }

    /// `W_t(Y_site) = i·W_t(X_site)·W_t(Z_site)`.
    pub fn image_y(&self, site: usize) -> PauliString {
        let mut y = self.image_x(site).multiply(&self.image_z(site)).expect("same length");
        y.mul_phase(1);
        y
    }

    fn row_string(&self, r: usize) -> PauliString {
        let (x, z, ph) = self.row(r);
        PauliString::from_masks(self.n_sites, x.to_vec(), z.to_vec(), ph).expect("frame row")
    }

    /// Expectations of `W_t(X_i)`, `W_t(Y_i)`, `W_t(Z_i)` in the product state.
    #[inline]
    pub fn site_expectations(&self, state: &ProductState, site: usize) -> [ExactValue; 3] {
        let (xx, xz, xp) = self.row(2 * site);
        let (zx, zz, zp) = self.row(2 * site + 1);
        let ex = state.expectation_words(xx, xz, xp);
        let ez = state.expectation_words(zx, zz, zp);
        // i·W(X)·W(Z): sum the masks and add the product phase
        let ey = if self.words == 1 {
            let ph = 1u8.wrapping_add(xp).wrapping_add(zp).wrapping_add(product_phase(xz, zx)) & 3;
            state.expectation_words(&[xx[0] ^ zx[0]], &[xz[0] ^ zz[0]], ph)
        } else {
            let yx: Vec<u64> = xx.iter().zip(zx).map(|(a, b)| a ^ b).collect();
            let yz: Vec<u64> = xz.iter().zip(zz).map(|(a, b)| a ^ b).collect();
            let ph = 1u8.wrapping_add(xp).wrapping_add(zp).wrapping_add(product_phase(xz, zx)) & 3;
            state.expectation_words(&yx, &yz, ph)
        };
        [ex, ey, ez]
    }
}

/// Backward light cone `[s, ℓ]` of site `i` after `t` layers, as unwrapped
/// site indices (reduce mod `L` for the ring).
pub fn lightcone_interval(i: usize, t: usize) -> Result<(isize, isize)> {
    if t == 0 {
        return Err(Error::ZeroTime);
    }
    let (i, t) = (i as isize, t as isize);
    // odd site with odd t, or even site with even t: extends one further left
    let left_heavy = (i % 2 == 1) == (t % 2 == 1);
    Ok(if left_heavy { (i - t, i + t - 1) } else { (i - t + 1, i + t) })
}

/// Whether `site` lies in the light cone of `i` at time `t` on a ring of `n`.
/// Time 0 is the site itself.
pub fn lightcone_contains(i: usize, t: usize, site: usize, n_sites: usize) -> bool {
    if t == 0 {
        return site == i;
    }
    let (s, l) = lightcone_interval(i, t).expect("t >= 1");
    if l - s + 1 >= n_sites as isize {
        return true;
    }
    let n = n_sites as isize;
    let off = (site as isize - s).rem_euclid(n);
    off <= l - s
}
