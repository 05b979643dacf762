//! Fast path against the dense state-vector reference.

use num_complex::Complex64 as C64;
use sre_spread::circuit::{pairs_for_layer, sample_rng, BrickworkSchedule, Circuit, GateKind};
use sre_spread::clifford::full_group;
use sre_spread::linalg::CMatrix;
use sre_spread::magic_state::{ProductState, SiteKind};
use sre_spread::oracle::{equivalence_suite, pauli_matrix, DenseState, DensityMatrix};
use sre_spread::pauli::{Letter, PauliString};
use sre_spread::sre::{sre2_from_exact, LN_4_3};

fn evolve_dense(kinds: &[SiteKind], circuit: &Circuit, t: usize) -> DenseState {
    let n = kinds.len();
    let mut s = DenseState::prepare_initial(kinds).unwrap();
    for layer in 1..=t {
        for (g, pair) in circuit.layer(layer).iter().zip(pairs_for_layer(layer, n).unwrap()) {
            s.apply_gate_word(&g.word(), pair).unwrap();
        }
    }
    s
}

#[test]
fn suite_small_sizes() {
    for n in [2, 4, 6] {
        let r = equivalence_suite(n, 5, 20, 3).unwrap();
        assert!(r.passed(1e-10), "{r:?}");
    }
}

/// `Q_τ` as a dense operator equals `U(τ)† P U(τ)` built from the gate words.
#[test]
fn trajectory_matches_dense_conjugation() {
    let n = 6;
    for kind in [GateKind::FullClifford, GateKind::Restricted] {
        let s = BrickworkSchedule::new(n, 3, kind).unwrap();
        let c = Circuit::sample(s, &mut sample_rng(21, 0));
        let p0: PauliString = "IXIZYI".parse().unwrap();
        let traj = c.trajectory(&p0).unwrap();
        for (t, q) in traj.iter().enumerate() {
            // U(t) column by column from basis states
            let dim = 1 << n;
            let mut u = CMatrix::zeros(dim);
            for k in 0..dim {
                let mut amps = vec![C64::new(0.0, 0.0); dim];
                amps[k] = C64::new(1.0, 0.0);
                let mut st = DenseState::from_amplitudes(amps).unwrap();
                for layer in 1..=t {
                    for (g, pair) in c.layer(layer).iter().zip(pairs_for_layer(layer, n).unwrap()) {
                        st.apply_gate_word(&g.word(), pair).unwrap();
                    }
                }
                for (r, a) in st.amplitudes().iter().enumerate() {
                    u[(r, k)] = *a;
                }
            }
            let lhs = u.adjoint().matmul(&pauli_matrix(&p0)).matmul(&u);
            assert!(lhs.max_abs_diff(&pauli_matrix(q)) < 1e-10, "t = {t}");
        }
    }
}

/// Two-site SRE from the sixteen Heisenberg-evolved strings equals the SRE of
/// the dense reduced density matrix.
#[test]
fn two_qubit_sre_matches_reduced_density() {
    let n = 6;
    let magic = [2usize];
    let product = ProductState::with_magic(n, &magic).unwrap();
    for seed in 0..10 {
        let s = BrickworkSchedule::new(n, 4, GateKind::FullClifford).unwrap();
        let c = Circuit::sample(s, &mut sample_rng(seed, 1));
        for t in 0..=4 {
            let dense = evolve_dense(product.kinds(), &c, t);
            for (i, j) in [(1usize, 2usize), (2, 3), (5, 0)] {
                let mut vals = Vec::new();
                for a in Letter::ALL {
                    for b in Letter::ALL {
                        let mut p = PauliString::identity(n);
                        p.set_letter(i, a);
                        p.set_letter(j, b);
                        vals.push(product.expectation(&c.heisenberg(&p, t).unwrap()).unwrap());
                    }
                }
                let fast = sre2_from_exact(&vals).unwrap();
                let rho = dense.reduced_density(&[i, j]).unwrap();
                assert!(rho.is_valid(1e-10));
                assert!((rho.sre_alpha(2.0).unwrap() - fast).abs() < 1e-10, "seed {seed} t {t} pair ({i},{j})");
            }
        }
    }
}

#[test]
fn global_sre_is_conserved_and_additive() {
    let kinds = [SiteKind::T, SiteKind::Zero, SiteKind::Zero, SiteKind::T, SiteKind::Zero, SiteKind::Zero];
    let s = BrickworkSchedule::new(6, 6, GateKind::FullClifford).unwrap();
    let c = Circuit::sample(s, &mut sample_rng(8, 8));
    for t in 0..=6 {
        let m = evolve_dense(&kinds, &c, t).global_sre2().unwrap();
        assert!((m - 2.0 * LN_4_3).abs() < 1e-10);
    }

    let t1 = DensityMatrix::pure(&DenseState::prepare_initial(&[SiteKind::T]).unwrap()).unwrap();
    let z = DensityMatrix::pure(&DenseState::prepare_initial(&[SiteKind::Zero]).unwrap()).unwrap();
    for alpha in [2.0, 3.0] {
        let joint = t1.tensor(&t1).tensor(&z);
        let sum = 2.0 * t1.sre_alpha(alpha).unwrap() + z.sre_alpha(alpha).unwrap();
        assert!((joint.sre_alpha(alpha).unwrap() - sum).abs() < 1e-10);
    }
}

#[test]
fn random_stabilizer_states_have_zero_sre() {
    let g = full_group();
    for k in (0..g.words.len()).step_by(313) {
        let mut s = DenseState::prepare_initial(&[SiteKind::Zero; 3]).unwrap();
        s.apply_gate_word(&g.words[k], (0, 1)).unwrap();
        s.apply_gate_word(&g.words[(7 * k + 1) % g.words.len()], (1, 2)).unwrap();
        assert!(s.global_sre2().unwrap().abs() < 1e-10);
        let rho = DensityMatrix::pure(&s).unwrap();
        assert!(rho.sre_alpha(2.0).unwrap().abs() < 1e-10);
    }
}
