use std::f64::consts::E;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ordstat::bounds::{kmin_bounds, kmin_moment_lower, max1_bounds, min_moment_upper, BoundReport};
use ordstat::distributions::SurvivalTable;
use ordstat::montecarlo::{
    check_kmin_tail, estimate_order_stat, estimate_order_stats, kmin_tail_parameter,
};
use ordstat::partition::{build_partition, verify_partition};
use ordstat::{BoundConstants, DistributionModel, Order, OrliczFunction, Statistic, Weights};

fn random_ascending(seed: u64, n: usize) -> Weights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Weights::sorted(
        (0..n).map(|_| rng.random_range(0.5..5.0)).collect(),
        Order::Ascending,
    )
    .unwrap()
}

#[test]
fn kmin_of_all_equals_kmax_of_one() {
    let model = DistributionModel::gaussian();
    let x = vec![1.0; 20];
    let a = estimate_order_stat(&x, &model, 20, Statistic::Kmin, 100_000, 1).unwrap();
    let b = estimate_order_stat(&x, &model, 1, Statistic::Kmax, 100_000, 2).unwrap();
    let tol = 4.0 * (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    assert!((a.mean - b.mean).abs() <= tol, "{a:?} {b:?}");
    // With shared draws the two paths pick the same entry.
    let shared = estimate_order_stats(
        &x,
        &model,
        &[(20, Statistic::Kmin), (1, Statistic::Kmax)],
        1000,
        3,
    )
    .unwrap();
    assert_eq!(shared[0].mean, shared[1].mean);
}

#[test]
fn kmin_tail_below_inverse_h_norm() {
    // With H = (e/k)·G, t below ‖(1/x_i)‖_H^{-1} gives a(t) < 1.
    let model = DistributionModel::gaussian();
    let x = random_ascending(7, 25);
    let k = 3;
    let g_model = model.clone();
    let h = OrliczFunction::explicit(
        move |t| E / k as f64 * (1.0 - g_model.survival_ext(t)),
        f64::INFINITY,
        false,
    );
    let t = 0.9 / h.norm(&x.reciprocals()).unwrap();
    let a = kmin_tail_parameter(x.values(), &model, k, t);
    assert!(a > 0.0 && a < 1.0, "a = {a}");
    let c = check_kmin_tail(x.values(), &model, k, t, 100_000, 9).unwrap();
    assert!(c.holds, "{c:?}");
}

#[test]
fn tabulated_gaussian_tracks_closed_form() {
    let g = DistributionModel::gaussian();
    let mut rows = Vec::new();
    let mut t: f64 = 0.0;
    loop {
        let f = g.survival(t).unwrap();
        rows.push((t, f));
        if f <= 1e-12 {
            break;
        }
        t += 0.01;
    }
    let table = DistributionModel::tabulated(SurvivalTable::new(&rows).unwrap());
    assert!(table.is_log_concave());
    let x = random_ascending(11, 60);
    for k in [1, 3, 10] {
        let exact = kmin_bounds(&x, &g, k).unwrap();
        let approx = kmin_bounds(&x, &table, k).unwrap();
        let rel = (exact.lower - approx.lower).abs() / exact.lower;
        assert!(rel < 1e-4, "k = {k}: {} vs {}", exact.lower, approx.lower);
        assert_eq!(exact.argmax_j, approx.argmax_j);
    }
}

#[test]
fn moment_bounds_sandwich_simulation() {
    let model = DistributionModel::gaussian();
    let x = random_ascending(13, 40);
    for p in [0.5, 1.0, 2.0] {
        let e = estimate_order_stat(x.values(), &model, 1, Statistic::KminPower(p), 100_000, 17)
            .unwrap();
        let lower = kmin_moment_lower(&x, &model, 1, p).unwrap();
        let upper = min_moment_upper(&x, &model, p).unwrap();
        let slack = 4.0 * e.ci_halfwidth;
        assert!(
            lower - slack <= e.mean && e.mean <= upper + slack,
            "p = {p}: {lower} {} {upper}",
            e.mean
        );
    }
    let k = 4;
    let e = estimate_order_stat(
        x.values(),
        &model,
        k,
        Statistic::KminPower(2.0),
        100_000,
        19,
    )
    .unwrap();
    assert!(kmin_moment_lower(&x, &model, k, 2.0).unwrap() <= e.mean + 4.0 * e.ci_halfwidth);
}

#[test]
fn max1_sandwich_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for model in [
        DistributionModel::gaussian(),
        DistributionModel::sym_exponential(0.5).unwrap(),
    ] {
        let constants = BoundConstants::for_model(&model);
        for inst in 0..5 {
            let n = rng.random_range(1..80);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..5.0)).collect();
            let r = max1_bounds(&x, &model, &constants).unwrap();
            let e = estimate_order_stat(&x, &model, 1, Statistic::Kmax, 50_000, inst).unwrap();
            let slack = 4.0 * e.ci_halfwidth;
            assert!(
                r.lower - slack <= e.mean && e.mean <= r.upper.unwrap() + slack,
                "{model}: {r:?} {e:?}"
            );
        }
    }
}

#[test]
fn partition_from_csv_weights() {
    let x = Weights::parse_csv("0.5\n0.7\n1\n1\n2\n3.5\n4\n8\n9\n12\n", Order::Ascending).unwrap();
    let h = OrliczFunction::make_n(&DistributionModel::gaussian()).unwrap();
    for k in 1..=x.len() {
        let r = build_partition(&x, &h, k).unwrap();
        assert_eq!(r.blocks.len(), k);
        let again = verify_partition(&x, &h, k, &r).unwrap();
        assert_eq!(again, r.certificate);
        assert!(again.holds);
    }
}

#[test]
fn bound_report_json_round_trip() {
    let x = random_ascending(23, 30);
    let r = kmin_bounds(&x, &DistributionModel::gaussian(), 4).unwrap();
    let text = serde_json::to_string(&r).unwrap();
    let back: BoundReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, r);
    assert_eq!(serde_json::to_string(&back).unwrap(), text);
}
