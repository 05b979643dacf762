//! Algebraic invariants checked on random inputs.

use proptest::prelude::*;
use sre_spread::clifford::full_group;
use sre_spread::linalg::CMatrix;
use sre_spread::oracle::{pauli_matrix, word_matrix};
use sre_spread::pauli::{Letter, PauliString};

fn letters(n: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(prop::sample::select(Letter::ALL.to_vec()), n)
}

fn pauli(n: usize) -> impl Strategy<Value = PauliString> {
    (letters(n), any::<bool>()).prop_map(|(l, neg)| PauliString::from_letters(&l, neg))
}

fn pauli_pair_and_gate() -> impl Strategy<Value = (PauliString, PauliString, usize)> {
    (pauli(2), pauli(2), 0..full_group().gates.len())
}

proptest! {
    #[test]
    fn multiplication_is_associative(a in pauli(70), b in pauli(70), c in pauli(70)) {
        let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
        let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn product_matches_dense(a in pauli(3), b in pauli(3)) {
        let dense = pauli_matrix(&a).matmul(&pauli_matrix(&b));
        prop_assert!(pauli_matrix(&a.multiply(&b).unwrap()).max_abs_diff(&dense) < 1e-12);
    }

    #[test]
    fn commutation_matches_dense(a in pauli(4), b in pauli(4)) {
        let (ma, mb) = (pauli_matrix(&a), pauli_matrix(&b));
        let commute = ma.matmul(&mb).max_abs_diff(&mb.matmul(&ma)) < 1e-12;
        prop_assert_eq!(a.commutes(&b).unwrap(), commute);
    }

    #[test]
    fn conjugation_matches_dense_and_preserves_structure((p, q, k) in pauli_pair_and_gate()) {
        let g = &full_group().gates[k];
        let u = word_matrix(&full_group().words[k]);
        let cp = g.conjugate_pauli(&p).unwrap();
        let cq = g.conjugate_pauli(&q).unwrap();
        let dense: CMatrix = u.adjoint().matmul(&pauli_matrix(&p)).matmul(&u);
        prop_assert!(pauli_matrix(&cp).max_abs_diff(&dense) < 1e-12);
        prop_assert!(cp.is_hermitian());
        prop_assert_eq!(cp.commutes(&cq).unwrap(), p.commutes(&q).unwrap());
        prop_assert_eq!(
            g.conjugate_pauli(&p.multiply(&q).unwrap().clone()).ok(),
            p.multiply(&q).unwrap().is_hermitian().then(|| cp.multiply(&cq).unwrap())
        );
    }

    #[test]
    fn hermitian_strings_have_real_sign(p in pauli(9)) {
        prop_assert!(p.is_hermitian());
        prop_assert!(matches!(p.sign(), Some(1) | Some(-1)));
        let s = p.to_string();
        prop_assert_eq!(s.parse::<PauliString>().unwrap(), p);
    }
}
