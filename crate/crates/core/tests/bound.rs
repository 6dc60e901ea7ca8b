use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use realqt::bound::sdpa::read_sdpa;
use realqt::bound::{
    assemble_problem, exhaustive_deterministic, export_sdpa, feasibility_check, parse_sdpa, render_sdpa,
    seesaw_lower_bound, solve, Bound, BoundStatus, Level, SdpaInstance, SolverOptions, Strategy,
};

const W_COMPLEX: f64 = 0.897_056_274_847_714_1;

fn solve_level(level: Level, pt: bool) -> Bound {
    let b = solve(&assemble_problem(level, pt), &SolverOptions::default()).unwrap();
    assert_ne!(b.status, BoundStatus::NumericalFailure);
    b
}

#[test]
fn complex_strategy_breaks_only_transposition_at_level_two() {
    let p = assemble_problem(Level::Two, true);
    let r = feasibility_check(&p, &Strategy::ideal_complex()).unwrap();
    assert_eq!(r.violated(1e-8), vec!["partial-transpose"]);
    assert!((r.objective - W_COMPLEX).abs() < 1e-9, "{}", r.objective);
    assert!(r.feasible(1e-8, false));
    assert!(!r.feasible(1e-8, true));
}

#[test]
fn real_strategies_are_feasible_at_level_two() {
    let p = assemble_problem(Level::Two, true);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for dims in [[2, 2, 2, 2], [1, 2, 2, 3], [3, 1, 2, 2]] {
        let s = Strategy::random_real(dims, &mut rng).unwrap();
        let r = feasibility_check(&p, &s).unwrap();
        assert!(r.violated(1e-8).is_empty(), "{dims:?}: {r:?}");
    }
    let det = feasibility_check(&p, &Strategy::deterministic([1, -1, -1, -1])).unwrap();
    assert!(det.violated(1e-8).is_empty());
    assert!(det.objective <= 0.7486);
}

#[test]
fn level_two_export_has_expected_shape() {
    let p = assemble_problem(Level::Two, true);
    let text = render_sdpa(&p);
    let inst = parse_sdpa(&text).unwrap();
    let mut expected = vec![370; 8];
    expected.push(-2 * p.constraints.len() as i64);
    assert_eq!(inst.block_struct, expected);
    assert_eq!(inst.num_vars(), p.num_vars());
    for &(v, c) in &p.objective {
        assert_eq!(inst.c[v], -c);
    }
    assert_eq!(inst, SdpaInstance::from_problem(&p));
}

#[test]
fn export_is_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let p = assemble_problem(Level::OneAB, true);
    let (f1, f2) = (dir.path().join("a.dat-s"), dir.path().join("b.dat-s"));
    let h1 = export_sdpa(&p, &f1).unwrap();
    let h2 = export_sdpa(&assemble_problem(Level::OneAB, true), &f2).unwrap();
    assert_eq!(h1, h2);
    let (t1, t2) = (std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());
    assert_eq!(t1, t2);
    assert!(String::from_utf8(t1).unwrap().contains(&format!("sha256 {h1}")));
    assert_eq!(read_sdpa(&f1).unwrap(), SdpaInstance::from_problem(&p));
}

#[test]
fn level_one_bound_is_certified() {
    let b = solve_level(Level::One, true);
    assert_eq!(b.status, BoundStatus::Optimal);
    assert!(b.dual >= b.primal - b.tolerance);
    assert!(b.dual >= 0.7486);
    assert!(b.dual < 1.0);
}

#[test]
fn dropping_transposition_admits_the_complex_value() {
    for level in [Level::One, Level::OneAB] {
        let b = solve_level(level, false);
        assert!(b.dual >= W_COMPLEX - b.tolerance, "{level}: {}", b.dual);
    }
}

#[test]
fn bounds_are_monotone_in_level() {
    let one = solve_level(Level::One, true);
    let two = solve_level(Level::OneAB, true);
    assert!(one.dual + one.tolerance >= two.dual - two.gap, "{} vs {}", one.dual, two.dual);
}

#[test]
fn seesaw_stays_below_bounds() {
    let duals = [solve_level(Level::One, true).dual, solve_level(Level::OneAB, true).dual];
    for seed in 0..4 {
        let s = seesaw_lower_bound([2, 2, 2, 2], 4, seed).unwrap();
        for d in duals {
            assert!(s.value <= d + 1e-6, "seed {seed}: {} > {d}", s.value);
        }
    }
    let (w, ..) = exhaustive_deterministic();
    let one = seesaw_lower_bound([1, 1, 1, 1], 64, 0).unwrap().value;
    assert!((one - w).abs() < 1e-12, "{one} vs {w}");
}

#[test]
fn symmetric_and_generic_layouts_agree() {
    for pt in [true, false] {
        let p = assemble_problem(Level::One, pt);
        let sym = solve(&p, &SolverOptions::default()).unwrap();
        let generic = solve(&p, &SolverOptions { symmetry: false, ..Default::default() }).unwrap();
        assert_eq!(sym.status, BoundStatus::Optimal);
        assert_eq!(generic.status, BoundStatus::Optimal);
        assert!((sym.dual - generic.dual).abs() <= 2.0 * sym.tolerance, "pt {pt}: {} vs {}", sym.dual, generic.dual);
    }
}
