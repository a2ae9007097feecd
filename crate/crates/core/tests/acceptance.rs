//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use torus_gof::circle::{w2_circle, CircularSample};
use torus_gof::gof::{
    composed_one_sample_bound, ks_normality_pvalue, mcdiarmid_one_sample, upper_bound_pvalue, Method,
};
use torus_gof::ot::{solve_ot, solve_ot_bruteforce};
use torus_gof::sim::{
    clt_deviation_experiment, mean_rate_check, run_scenario, Law, MethodConfig, ScenarioName,
    ScenarioSpec, WrappedGaussianSpec,
};
use torus_gof::torus::{circle_gap, TorusSample};

fn report(id: u32, pass: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn random_sample(rng: &mut impl Rng, n: usize) -> TorusSample {
    let rows: Vec<[f64; 2]> = (0..n).map(|_| [rng.gen(), rng.gen()]).collect();
    TorusSample::from_rows(&rows).unwrap()
}

fn rate(spec: &ScenarioSpec, method: Method, config: &MethodConfig) -> f64 {
    run_scenario(spec, &[method], config)
        .unwrap()
        .rejection_rate(method, 0.05)
        .unwrap()
}

const ALPHA: f64 = 0.05;

#[test]
fn criterion_01_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(2..=6);
        let p = random_sample(&mut rng, n);
        let q = random_sample(&mut rng, n);
        let exact = solve_ot(&p, &q).unwrap().cost;
        let brute = solve_ot_bruteforce(&p, &q).unwrap().cost;
        worst = worst.max((exact - brute).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-10 && secs < 10.0;
    report(1, pass, format!("max |solve_ot - brute force| = {worst:.3e}, {secs:.2} s"));
    assert!(pass);
}

// Minimum over cyclic shifts of sorted orders, each pair at its geodesic gap.
fn cyclic_brute_force(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    (0..n)
        .map(|s| (0..n).map(|i| circle_gap(x[i], y[(i + s) % n]).powi(2)).sum::<f64>() / n as f64)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_02_circle_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0f64;
    let mut worst_self = 0.0f64;
    let mut worst_invariance = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(1..=6);
        let x = CircularSample::new(&(0..n).map(|_| rng.gen()).collect::<Vec<f64>>()).unwrap();
        let y = CircularSample::new(&(0..n).map(|_| rng.gen()).collect::<Vec<f64>>()).unwrap();
        let c = w2_circle(&x, &y).unwrap().cost;
        worst = worst.max((c - cyclic_brute_force(x.values(), y.values())).abs());
        let r: f64 = rng.gen_range(-3.0..3.0);
        let xr = x.rotate(r).unwrap();
        worst_self = worst_self.max(w2_circle(&xr, &x.rotate(r).unwrap()).unwrap().cost);
        let both = w2_circle(&xr, &y.rotate(r).unwrap()).unwrap().cost;
        worst_invariance = worst_invariance.max((both - c).abs());
    }
    let pass = worst <= 1e-9 && worst_self == 0.0 && worst_invariance <= 1e-9;
    report(
        2,
        pass,
        format!(
            "max |w2_circle - cyclic brute force| = {worst:.3e}; max w2_circle(X+r, X+r) = {worst_self:.3e}; max |w2(X+r, Y+r) - w2(X, Y)| = {worst_invariance:.3e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_bounded_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst_excess = f64::NEG_INFINITY;
    for trial in 0..500 {
        let n = rng.gen_range(2..=12);
        let m = rng.gen_range(2..=12);
        let p = random_sample(&mut rng, n);
        let q = random_sample(&mut rng, m);
        let base = solve_ot(&p, &q).unwrap().cost;
        let new_point = [rng.gen::<f64>(), rng.gen::<f64>()];
        let (changed, bound) = if trial % 2 == 0 {
            let i = rng.gen_range(0..n);
            (solve_ot(&p.replace_point(i, &new_point).unwrap(), &q).unwrap().cost, 0.5 / n as f64)
        } else {
            let j = rng.gen_range(0..m);
            (solve_ot(&p, &q.replace_point(j, &new_point).unwrap()).unwrap().cost, 0.5 / m as f64)
        };
        worst_excess = worst_excess.max((changed - base).abs() - bound);
    }
    let pass = worst_excess <= 1e-12;
    report(3, pass, format!("max (|dT_2| - 1/(2n)) over 500 swaps = {worst_excess:.3e}"));
    assert!(pass);
}

#[test]
fn criterion_04_upper_bound_arithmetic() {
    let v = upper_bound_pvalue(0.1, 100, 100).unwrap();
    let err = (v - (-4.0f64).exp()).abs();
    let grid: Vec<f64> = (1..=100).map(|i| upper_bound_pvalue(i as f64 * 0.005, 100, 100).unwrap()).collect();
    let monotone = grid.windows(2).all(|w| w[1] < w[0]);
    let pass = err <= 1e-12 && monotone;
    report(4, pass, format!("|p(0.1,100,100) - exp(-4)| = {err:.3e}, strictly decreasing on 100 points: {monotone}"));
    assert!(pass);
}

#[test]
fn criterion_05_type_one_control() {
    let spec = ScenarioSpec::named(ScenarioName::H0, 100, 100, 500, 2024).unwrap();
    let config = MethodConfig::default();
    let result = run_scenario(&spec, &[Method::Marginal, Method::UpperBound], &config).unwrap();
    let marginal = result.rejection_rate(Method::Marginal, ALPHA).unwrap();
    let upper = result.rejection_rate(Method::UpperBound, ALPHA).unwrap();
    let limit = ALPHA + 3.0 * (ALPHA * (1.0 - ALPHA) / 500.0).sqrt();
    let pass = marginal <= limit && upper == 0.0;
    report(
        5,
        pass,
        format!(
            "H0 n=m=100 R=500: marginal rate {marginal:.3} (limit {limit:.4}), upper-bound rate {upper:.3}, {:.1} s",
            result.runtime_seconds
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_power() {
    let config = MethodConfig::default();
    let h1_small = ScenarioSpec::named(ScenarioName::H1, 100, 100, 200, 606).unwrap();
    let h1_large = ScenarioSpec::named(ScenarioName::H1, 300, 300, 200, 607).unwrap();
    let marginal = rate(&h1_small, Method::Marginal, &config);
    let upper = rate(&h1_large, Method::UpperBound, &config);
    let pass = marginal >= 0.95 && upper >= 0.95;
    report(6, pass, format!("H1 marginal power (n=100) {marginal:.3}, upper-bound power (n=300) {upper:.3}"));
    assert!(pass);
}

#[test]
fn criterion_07_equal_marginals() {
    let config = MethodConfig::default();
    let h4 = ScenarioSpec::named(ScenarioName::H4, 100, 100, 200, 707).unwrap();
    let marginal = rate(&h4, Method::Marginal, &config);
    let powers: Vec<f64> = [200usize, 350, 500]
        .iter()
        .map(|&n| rate(&ScenarioSpec::named(ScenarioName::H4, n, n, 200, 708).unwrap(), Method::UpperBound, &config))
        .collect();
    let increasing = powers.windows(2).all(|w| w[1] >= w[0]);
    let pass = marginal <= 0.15 && powers[2] >= 0.5 && increasing;
    report(
        7,
        pass,
        format!("H4 marginal power (n=100) {marginal:.3}; upper-bound power at n=200,350,500: {powers:.3?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_clt_negative_finding() {
    let config = MethodConfig::default();
    let h1 = ScenarioSpec::named(ScenarioName::H1, 100, 100, 200, 808).unwrap();
    let clt = rate(&h1, Method::CltDiagnostic, &config);
    let pass = clt <= 0.1;
    report(8, pass, format!("H1 n=m=100 R=200 clt-diagnostic rejection rate {clt:.3}"));
    assert!(pass);
}

#[test]
fn criterion_09_clt_normality() {
    let sigma = [[0.01, 1e-4], [1e-4, 0.01]];
    let p = Law::WrappedGaussian(WrappedGaussianSpec::new([0.5, 0.5], sigma).unwrap());
    let q = Law::WrappedGaussian(WrappedGaussianSpec::new([0.3, 0.6], sigma).unwrap());
    let pvals: Vec<f64> = [9001u64, 9002, 9003]
        .iter()
        .map(|&seed| ks_normality_pvalue(&clt_deviation_experiment(&p, &q, 500, 200, seed).unwrap()).unwrap())
        .collect();
    let passing = pvals.iter().filter(|&&v| v > 0.05).count();
    let pass = passing >= 2;
    report(9, pass, format!("KS normality p-values over 3 seeds: {pvals:.3?}"));
    assert!(pass);
}

#[test]
fn criterion_10_mean_rate() {
    let table = mean_rate_check(&[100, 300, 1000], 20, 1010).unwrap();
    let ratios: Vec<f64> = table.rows.iter().map(|r| r.ratio).collect();
    let slope = table.fitted_exponent.unwrap();
    let pass = ratios.iter().all(|r| (0.5..=2.5).contains(r)) && (-1.2..=-0.75).contains(&slope);
    report(10, pass, format!("ratios to log(n)/(4 pi n): {ratios:.3?}, fitted exponent {slope:.3}"));
    assert!(pass);
}

#[test]
fn criterion_11_bound_comparison() {
    let mut worst = f64::INFINITY;
    let mut points = 0;
    for n in [50usize, 100, 200] {
        for i in 1..=20 {
            let t = i as f64 * 0.005;
            let composed = composed_one_sample_bound(mcdiarmid_one_sample, n, n, t, 2).unwrap();
            let direct = upper_bound_pvalue(t, n, n).unwrap();
            worst = worst.min(composed - direct);
            points += 1;
        }
    }
    let pass = worst >= 0.0;
    report(11, pass, format!("min (composed - direct) over {points} grid points = {worst:.3e}"));
    assert!(pass);
}
