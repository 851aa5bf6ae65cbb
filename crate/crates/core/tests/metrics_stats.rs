mod oracles;

use rand::Rng;

use dupq_core::eval::{mann_whitney_u, mrr, recall_at, spearman_rho, upper_bound, RetrievalReport};

use oracles::*;

#[test]
fn metric_fixture_matches_hand_values() {
    let f = metric_fixture();
    assert!((mrr(&f.ranks).unwrap() - f.mrr).abs() <= 1e-12);
    for (k, want) in &f.rr {
        assert!((recall_at(&f.ranks, *k) - want).abs() <= 1e-12, "RR@{k}");
    }
    let present: Vec<bool> = f.ranks.iter().map(Option::is_some).collect();
    assert!((upper_bound(&present) - f.upper).abs() <= 1e-12);
    let report = RetrievalReport::from_ranked(&lists_with_ranks(&f.ranks, 120)).unwrap();
    assert!((report.mrr - f.mrr).abs() <= 1e-12);
    assert!((report.upper_bound - f.upper).abs() <= 1e-12);
    assert!(report.mrr <= report.upper_bound);
}

#[test]
fn recall_is_monotone_in_k() {
    let f = metric_fixture();
    let mut last = 0.0;
    for k in 1..=500 {
        let v = recall_at(&f.ranks, k);
        assert!(v >= last, "RR@{k} dropped");
        last = v;
    }
    assert!((last - f.upper).abs() <= 1e-12);
}

#[test]
fn spearman_matches_oracle_on_tied_fixtures() {
    let mut r = rng(4);
    let mut checked = 0;
    while checked < 50 {
        let (x, y) = tied_fixture(&mut r);
        let Ok(rho) = spearman_rho(&x, &y) else { continue };
        assert!((rho - spearman_oracle(&x, &y)).abs() <= 1e-10, "{x:?} {y:?}");
        checked += 1;
    }
}

#[test]
fn mann_whitney_exact_and_identities() {
    let mw = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
    assert_eq!(mw.u_a, 0.0);
    assert_eq!(mw.p_value, 0.1);
    assert!(mw.exact);

    let mut r = rng(5);
    for _ in 0..100 {
        let na = r.random_range(1..15);
        let nb = r.random_range(1..15);
        let a: Vec<f64> = (0..na).map(|_| r.random_range(0..6) as f64).collect();
        let b: Vec<f64> = (0..nb).map(|_| r.random_range(0..6) as f64).collect();
        let ab = mann_whitney_u(&a, &b).unwrap();
        let ba = mann_whitney_u(&b, &a).unwrap();
        assert!((ab.u_a + ab.u_b - (na * nb) as f64).abs() < 1e-9);
        assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        assert_eq!(ab.u_a, ba.u_b);
        assert!((0.0..=1.0).contains(&ab.p_value));
    }
}
