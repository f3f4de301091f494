use alphaloss::boost::{adaboost_alpha, boosting_weights, BoostConfig};
use alphaloss::data::{inject_symmetric_noise, long_servedio_experiment};
use alphaloss::losses::{weight, Alpha};

fn a(v: f64) -> Alpha {
    Alpha::new(v).unwrap()
}

// Only for α ≤ 1: above one the weight peaks and then decays for very negative margins.
#[test]
fn weights_nonincreasing_in_margin_for_convex_alpha() {
    let ds = inject_symmetric_noise(&long_servedio_experiment(200, 5).unwrap(), 0.1, 6).unwrap();
    let (ens, _) = adaboost_alpha(&ds, &BoostConfig::new(a(1.0), 15, 1), None).unwrap();
    let margins: Vec<f64> = (0..ds.len())
        .map(|i| f64::from(ds.label(i)) * ens.score(ds.row(i)).unwrap())
        .collect();
    for alpha in [a(0.5), a(0.8), a(1.0)] {
        let w = boosting_weights(&ens, &ds, alpha).unwrap();
        let sum: f64 = w.dist.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12, "α={alpha:?} sums to {sum}");
        assert!(w.dist.iter().all(|&d| d > 0.0));
        let mut idx: Vec<usize> = (0..ds.len()).collect();
        idx.sort_by(|&i, &j| margins[i].total_cmp(&margins[j]));
        for p in idx.windows(2) {
            let (lo, hi) = (w.dist[p[0]], w.dist[p[1]]);
            if margins[p[0]] < margins[p[1]] {
                assert!(hi <= lo * (1.0 + 1e-12), "α={alpha:?}: {hi} > {lo}");
            }
        }
    }
}

#[test]
fn large_alpha_gives_up_on_hard_points() {
    assert!(weight(a(2.0), -30.0) < weight(a(2.0), -5.0));
    assert!(weight(Alpha::INFINITY, -30.0) < weight(Alpha::INFINITY, -5.0));
    assert!(weight(Alpha::HALF, -30.0) > 1e3 * weight(Alpha::HALF, -5.0));
}

#[test]
fn weight_is_not_monotone_above_one() {
    for alpha in [a(2.0), a(5.0), Alpha::INFINITY] {
        let w: Vec<f64> = (-400..=400).map(|k| weight(alpha, k as f64 * 0.1)).collect();
        assert!(w.windows(2).any(|p| p[1] > p[0]), "α={alpha:?}");
        assert!(w.windows(2).any(|p| p[1] < p[0]), "α={alpha:?}");
    }
}

#[test]
fn training_is_deterministic() {
    let ds = inject_symmetric_noise(&long_servedio_experiment(150, 9).unwrap(), 0.2, 10).unwrap();
    let cfg = BoostConfig::new(a(2.0), 20, 2);
    let (e1, t1) = adaboost_alpha(&ds, &cfg, None).unwrap();
    let (e2, t2) = adaboost_alpha(&ds, &cfg, None).unwrap();
    assert_eq!(e1.to_json().unwrap(), e2.to_json().unwrap());
    assert_eq!(t1, t2);
}
