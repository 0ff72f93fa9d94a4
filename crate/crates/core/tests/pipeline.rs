//! End-to-end flows through the public API.

use vinogradov::counting::{brute_force_j, rep_count_map, run_ladder};
use vinogradov::exponents::{bound_catalog, compare_fit_to_catalog, fit_or_verdict, FitOutcome};
use vinogradov::{correlate, count_j, Budget, CountMap, HTuple, LadderTemplate, SystemParams};

#[test]
fn serialized_map_counts_like_a_fresh_one() {
    let b = Budget::default();
    let map = rep_count_map(2, 3, 1, 9, &b).unwrap();
    let mut bytes = Vec::new();
    map.write_to(&mut bytes).unwrap();
    let back = CountMap::read_from(&bytes[..]).unwrap();
    assert_eq!(back, map);

    let h = HTuple::from_i64s(&[1, 3, 7]).unwrap();
    let p = SystemParams::new(2, 3, 9, h.clone()).unwrap();
    assert_eq!(correlate(&back, &back, &h).unwrap(), brute_force_j(&p, &b).unwrap());
}

#[test]
fn ladder_fit_matches_main_conjecture() {
    let b = Budget::default();
    let template = LadderTemplate {
        s: 3,
        k: 2,
        h: HTuple::zero(2).unwrap(),
    };
    let ladder = run_ladder(&template, &[8, 16, 32, 64], &b).unwrap();
    let FitOutcome::Fitted(fit) = fit_or_verdict(&ladder).unwrap() else {
        panic!("nonzero ladder");
    };
    // critical case s = k(k+1)/2: s and 2s - k(k+1)/2 both equal 3, up to a log factor
    assert!((fit.slope - 3.0).abs() < 0.3, "{}", fit.slope);
    let records = bound_catalog(3, 2, &template.h).unwrap();
    let cmp = compare_fit_to_catalog(&fit, &records, 0.4);
    assert!(cmp.iter().any(|c| c.consistent));
}

#[test]
fn count_is_symmetric_under_negating_h() {
    let b = Budget::default();
    for v in [[1i64, 3], [2, 0], [0, 4]] {
        let h = HTuple::from_i64s(&v).unwrap();
        let neg = HTuple::from_i64s(&[-v[0], -v[1]]).unwrap();
        let a = count_j(&SystemParams::new(2, 2, 12, h).unwrap(), &b).unwrap().0;
        let c = count_j(&SystemParams::new(2, 2, 12, neg).unwrap(), &b).unwrap().0;
        assert_eq!(a, c);
    }
}
