use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use realqt::bound::words::{moment_key, reduce_word, MomentKey, Word};
use realqt::bound::{assemble_problem, feasibility_check, Level, Strategy as Model};
use realqt::quantum::{kron, partial_trace_matrix, ComplexMatrix, DensityMatrix};

fn word(max_letter: u8) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..max_letter, 0..=8).prop_map(Word)
}

fn density(dim: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
        let entries: Vec<Complex64> = v.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let g = ComplexMatrix::new(dim, dim, &entries).unwrap();
        let m = &(&g * &g.dagger()) + &ComplexMatrix::identity(dim).scale(1e-3);
        DensityMatrix::normalized(m).unwrap().0
    })
}

proptest! {
    #[test]
    fn reduction_is_idempotent(w in word(6)) {
        let r = reduce_word(&w);
        prop_assert!(r.is_reduced());
        prop_assert_eq!(reduce_word(&r), r.clone());
        prop_assert!(r.len() <= w.len());
    }

    #[test]
    fn reduction_is_confluent(u in word(6), v in word(6)) {
        let mut joined = u.0.clone();
        joined.extend(&v.0);
        let direct = reduce_word(&Word(joined));
        prop_assert_eq!(reduce_word(&u).concat(&reduce_word(&v)), direct.clone());
        prop_assert_eq!(u.concat(&v), direct);
    }

    #[test]
    fn reduction_commutes_with_reversal(w in word(3)) {
        prop_assert_eq!(reduce_word(&w.reversed()), reduce_word(&w).reversed());
    }

    #[test]
    fn canonical_keys_are_stable(a in word(3), c in word(6)) {
        let k = MomentKey::new(reduce_word(&a), reduce_word(&c));
        let h = k.hermitian_canonical();
        prop_assert_eq!(h.hermitian_canonical(), h.clone());
        prop_assert_eq!(k.joint_reverse().hermitian_canonical(), h);
        let t = k.transpose_canonical();
        prop_assert_eq!(t.transpose_canonical(), t);
    }

    #[test]
    fn adjoint_entry_has_reversed_key(ra in word(3), rc in word(6), ca in word(3), cc in word(6)) {
        let row = (reduce_word(&ra), reduce_word(&rc));
        let col = (reduce_word(&ca), reduce_word(&cc));
        prop_assert_eq!(moment_key(&col, &row), moment_key(&row, &col).joint_reverse());
    }

    #[test]
    fn partial_trace_inverts_kron(a in density(2), b in density(4)) {
        let ab = kron(a.matrix(), b.matrix());
        prop_assert_eq!(ab.rows(), 8);
        let ka = partial_trace_matrix(&ab, &[2, 4], &[0]).unwrap();
        let kb = partial_trace_matrix(&ab, &[2, 4], &[1]).unwrap();
        prop_assert!(ka.max_abs_diff(a.matrix()) < 1e-12);
        prop_assert!(kb.max_abs_diff(b.matrix()) < 1e-12);
        prop_assert!((ab.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace(r in density(4)) {
        let kept = partial_trace_matrix(r.matrix(), &[2, 2], &[1]).unwrap();
        prop_assert!((kept.trace() - r.matrix().trace()).norm() < 1e-12);
        prop_assert!(kept.is_hermitian(1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn real_strategies_satisfy_level_one_plus(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=2, dc in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = Model::random_real([da, db, db, dc], &mut rng).unwrap();
        let problem = assemble_problem(Level::OneAB, true);
        let report = feasibility_check(&problem, &s).unwrap();
        prop_assert!(report.violated(1e-8).is_empty(), "{:?}", report);
    }
}
