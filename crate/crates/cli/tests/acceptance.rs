//! Acceptance gate: one test per criterion, each printing a single
//! PASS/FAIL line (visible with `--nocapture`; the assertions are the
//! actual gate). Suites 1-7 are self-contained; suite 8 needs a
//! Boston-format CSV supplied via the ROBSEL_BOSTON_CSV environment
//! variable and is skipped otherwise.
//!
//! Run with: cargo test --release -p robsel --test acceptance -- --nocapture

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use robsel::realdata::{run_realdata, RealDataConfig};
use robsel::sim::{run_scenario, SimScenario};
use robsel_core::criteria::{dbbc, t_matrix, CriteriaConfig, CriterionKind};
use robsel_core::solver::fit_one;
use robsel_core::{Dataset, LossSpec, Matrix, SolverConfig, WeightVector};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {id} ({name}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "acceptance {id} ({name}) failed: {detail}");
}

fn rate<'a>(
    table: &'a robsel::sim::RateTable,
    criterion: &str,
    alpha: f64,
    r: f64,
) -> &'a robsel::sim::RateRow {
    table
        .rows
        .iter()
        .find(|row| row.criterion == criterion && row.alpha == alpha && row.r == r)
        .expect("rate row present")
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[test]
fn acceptance_1_high_dimensional_selection_rates() {
    let scenario = SimScenario {
        n: 500,
        p: 200,
        s: 5,
        beta_star: None,
        sigma2: 1.0,
        contamination_rates: vec![0.0, 0.01, 0.05, 0.1],
        outlier_multiplier: 10.0,
        alphas: vec![0.0, 0.1],
        criteria: vec![
            CriterionKind::Dbbc,
            CriterionKind::Edbbc,
            CriterionKind::GedbbcPractical,
        ],
        trials: 100,
        seed: 20260823,
        grid_length: 50,
        uniform_baselines: true,
        lambda_init: None,
    };
    let table = run_scenario(&scenario, None).unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for &r in &[0.0, 0.01, 0.05, 0.1] {
        for criterion in ["E-DBBC", "GE-DBBC"] {
            let tm = rate(&table, criterion, 0.1, r).tm;
            detail.push_str(&format!("{criterion}(0.1) TM@r={r}: {tm:.0}%; "));
            pass &= tm >= 90.0;
        }
    }
    let om_dbbc = rate(&table, "DBBC", 0.0, 0.05).om;
    let om_bic = rate(&table, "unif-BIC", 0.0, 0.01).om;
    detail.push_str(&format!("DBBC(0) OM@r=0.05: {om_dbbc:.0}%; unif-BIC OM@r=0.01: {om_bic:.0}%"));
    pass &= om_dbbc >= 80.0 && om_bic >= 85.0;
    report(1, "high-dimensional selection rates", pass, &detail);
}

#[test]
fn acceptance_2_large_sample_contaminated_rates() {
    let scenario = SimScenario {
        n: 5000,
        p: 20,
        s: 5,
        beta_star: None,
        sigma2: 1.0,
        contamination_rates: vec![0.1],
        outlier_multiplier: 10.0,
        alphas: vec![0.1, 0.5, 1.0],
        criteria: vec![
            CriterionKind::Dbbc,
            CriterionKind::Edbbc,
            CriterionKind::GedbbcPractical,
        ],
        trials: 50,
        seed: 42,
        grid_length: 50,
        uniform_baselines: false,
        lambda_init: None,
    };
    let table = run_scenario(&scenario, None).unwrap();
    let mut detail = String::new();
    let mut pass = true;
    for &alpha in &[0.1, 0.5, 1.0] {
        for criterion in ["DBBC", "E-DBBC", "GE-DBBC"] {
            let tm = rate(&table, criterion, alpha, 0.1).tm;
            detail.push_str(&format!("{criterion}({alpha}) TM: {tm:.0}%; "));
            pass &= tm >= 95.0;
        }
    }
    report(2, "large-sample contaminated rates", pass, &detail);
}

#[test]
fn acceptance_3_efficiency_loss_at_large_alpha() {
    let scenario = SimScenario {
        n: 200,
        p: 1000,
        s: 5,
        beta_star: None,
        sigma2: 1.0,
        contamination_rates: vec![0.0],
        outlier_multiplier: 10.0,
        alphas: vec![0.1, 1.0],
        criteria: vec![CriterionKind::Edbbc],
        trials: 50,
        seed: 42,
        grid_length: 50,
        uniform_baselines: false,
        lambda_init: None,
    };
    let table = run_scenario(&scenario, None).unwrap();
    let um_small = rate(&table, "E-DBBC", 0.1, 0.0).um;
    let um_large = rate(&table, "E-DBBC", 1.0, 0.0).um;
    let pass = um_large - um_small >= 20.0;
    report(
        3,
        "efficiency loss at large alpha",
        pass,
        &format!("UM(alpha=1) {um_large:.0}% vs UM(alpha=0.1) {um_small:.0}%"),
    );
}

#[test]
fn acceptance_4_robust_boundedness() {
    // fixed fit; one response magnified by m; delta = criterion change
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (n, p) = (50, 4);
    let mut xd = Vec::with_capacity(n * p);
    for _ in 0..n * p {
        xd.push(standard_normal(&mut rng));
    }
    let x = Matrix::from_vec(n, p, xd).unwrap();
    let mut beta = vec![0.0; p];
    beta[0] = 1.0;
    beta[1] = -1.0;
    let mut y = x.matvec(&beta);
    for v in y.iter_mut() {
        *v += 0.3 * standard_normal(&mut rng);
    }
    assert!(y[0].abs() > 0.05, "fixture needs a nonzero first response");

    let config = CriteriaConfig::default();
    let delta = |alpha: f64, m: f64| -> f64 {
        let spec = LossSpec::new(alpha, 1.0).unwrap();
        let clean = Dataset::new(x.clone(), y.clone()).unwrap();
        let mut y_c = y.clone();
        y_c[0] *= m;
        let contaminated = Dataset::new(x.clone(), y_c).unwrap();
        dbbc(&contaminated, &spec, &beta, &config).unwrap().value
            - dbbc(&clean, &spec, &beta, &config).unwrap().value
    };

    let d3 = delta(0.1, 1e3);
    let d6 = delta(0.1, 1e6);
    let saturates = (d6 - d3).abs() <= 1e-6 * d3.abs() + 1e-9;
    let ratio = delta(0.0, 1e3) / delta(0.0, 1e2);
    let diverges = ratio >= 10.0;
    report(
        4,
        "robust boundedness",
        saturates && diverges,
        &format!(
            "alpha=0.1: |D(1e6)-D(1e3)| = {:.2e}; alpha=0: D(1e3)/D(1e2) = {ratio:.0}",
            (d6 - d3).abs()
        ),
    );
}

#[test]
fn acceptance_5_oracle_equivalence() {
    // independent cyclic coordinate descent for the least-squares LASSO
    fn cd_lasso(data: &Dataset, sigma2: f64, lambda: f64) -> Vec<f64> {
        let (n, p) = (data.n(), data.p());
        let nl = n as f64 * lambda * sigma2;
        let col_sq: Vec<f64> = (0..p)
            .map(|j| (0..n).map(|i| data.x().get(i, j).powi(2)).sum())
            .collect();
        let mut beta = vec![0.0; p];
        let mut r = data.y().to_vec();
        for _ in 0..200_000 {
            let mut change = 0.0f64;
            for j in 0..p {
                let old = beta[j];
                let mut z = 0.0;
                for (i, &ri) in r.iter().enumerate() {
                    z += data.x().get(i, j) * (ri + data.x().get(i, j) * old);
                }
                let new = if z > nl {
                    (z - nl) / col_sq[j]
                } else if z < -nl {
                    (z + nl) / col_sq[j]
                } else {
                    0.0
                };
                if new != old {
                    for (i, ri) in r.iter_mut().enumerate() {
                        *ri += data.x().get(i, j) * (old - new);
                    }
                    beta[j] = new;
                    change = change.max((new - old).abs());
                }
            }
            if change < 1e-13 {
                break;
            }
        }
        beta
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let config = SolverConfig {
        tol_obj: 1e-12,
        tol_kkt: 1e-9,
        max_iterations: 500_000,
    };
    let mut worst = 0.0f64;
    let mut all_kkt_ok = true;
    for case in 0..100 {
        let n = 20 + case % 41; // up to 60
        let p = 2 + case % 11; // up to 12
        let sigma2 = [0.5, 1.0, 2.0][case % 3];
        let mut xd = Vec::with_capacity(n * p);
        for _ in 0..n * p {
            xd.push(standard_normal(&mut rng));
        }
        let x = Matrix::from_vec(n, p, xd).unwrap();
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            y.push(x.get(i, 0) * 1.5 - x.get(i, 1 % p) + 0.5 * standard_normal(&mut rng));
        }
        let data = Dataset::new(x, y).unwrap();
        let spec = LossSpec::new(0.0, sigma2).unwrap();
        let w = WeightVector::uniform(p);
        let lambda = 0.01 + 0.02 * (case % 7) as f64;
        let fit = fit_one(&data, &spec, &w, lambda, &vec![0.0; p], &config).unwrap();
        all_kkt_ok &= fit.converged() && fit.kkt_residual <= 1e-6 * n as f64;
        let oracle = cd_lasso(&data, sigma2, lambda);
        for (j, &oj) in oracle.iter().enumerate() {
            worst = worst.max((fit.beta[j] - oj).abs());
        }
    }
    let pass = worst < 1e-6 && all_kkt_ok;
    report(
        5,
        "oracle equivalence",
        pass,
        &format!("worst coordinate gap {worst:.2e} over 100 instances; KKT within 1e-6*n: {all_kkt_ok}"),
    );
}

#[test]
fn acceptance_6_moment_identities() {
    let draws = 10_000_000usize;
    let mut worst = 0.0f64;
    for &alpha in &[0.1, 0.5, 1.0] {
        for &sigma2 in &[0.5, 1.0, 2.0] {
            let spec = LossSpec::new(alpha, sigma2).unwrap();
            let m = spec.moment_coefficients().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(
                (alpha * 1000.0) as u64 * 31 + (sigma2 * 1000.0) as u64,
            );
            let sd = sigma2.sqrt();
            let (mut s1, mut s2, mut sc) = (0.0f64, 0.0f64, 0.0f64);
            for _ in 0..draws {
                let eps = sd * standard_normal(&mut rng);
                let score = spec.rho_prime(eps);
                s1 += score;
                s2 += score * score;
                sc += spec.rho_second(eps);
            }
            let nf = draws as f64;
            let var = s2 / nf - (s1 / nf).powi(2);
            worst = worst.max(((var - m.omega_coeff) / m.omega_coeff).abs());
            worst = worst.max(((sc / nf - m.d_coeff) / m.d_coeff).abs());
        }
    }
    report(
        6,
        "moment identities",
        worst < 0.01,
        &format!("worst relative error {worst:.4} over 9 (alpha, sigma2) pairs, 1e7 draws each"),
    );
}

#[test]
fn acceptance_7_derivative_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_first = 0.0f64;
    for _ in 0..1000 {
        let alpha = rng.random::<f64>() * 1.5;
        let sigma2 = 0.3 + rng.random::<f64>() * 2.0;
        let z = 8.0 * (rng.random::<f64>() - 0.5);
        let spec = LossSpec::new(alpha, sigma2).unwrap();
        let h = 1e-6;
        let fd1 = (spec.rho(z + h) - spec.rho(z - h)) / (2.0 * h);
        worst_first = worst_first.max((spec.rho_prime(z) - fd1).abs());
    }

    // t_matrix against a finite-difference Hessian of the mean loss
    let mut worst_hess = 0.0f64;
    for case in 0..20 {
        let (n, p) = (25 + case, 3);
        let mut xd = Vec::with_capacity(n * p);
        for _ in 0..n * p {
            xd.push(standard_normal(&mut rng));
        }
        let x = Matrix::from_vec(n, p, xd).unwrap();
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            y.push(x.get(i, 0) + 0.3 * standard_normal(&mut rng));
        }
        let data = Dataset::new(x, y).unwrap();
        let spec = LossSpec::new(0.1 + 0.04 * case as f64, 1.0).unwrap();
        let beta = vec![0.9, -0.1, 0.05];
        let active = vec![0usize, 1, 2];
        let t = t_matrix(&data, &spec, &beta, &active).unwrap();
        let f = |b: &[f64]| -> f64 {
            data.residuals(b).iter().map(|&r| spec.rho(r)).sum::<f64>() / n as f64
        };
        let h = 1e-4;
        for a in 0..p {
            for b in 0..p {
                let mut bpp = beta.clone();
                let mut bpm = beta.clone();
                let mut bmp = beta.clone();
                let mut bmm = beta.clone();
                bpp[a] += h;
                bpp[b] += h;
                bpm[a] += h;
                bpm[b] -= h;
                bmp[a] -= h;
                bmp[b] += h;
                bmm[a] -= h;
                bmm[b] -= h;
                let fd = (f(&bpp) - f(&bpm) - f(&bmp) + f(&bmm)) / (4.0 * h * h);
                worst_hess = worst_hess.max((t.get(a, b) - fd).abs());
            }
        }
    }
    let pass = worst_first < 1e-6 && worst_hess < 1e-5;
    report(
        7,
        "derivative checks",
        pass,
        &format!("worst rho' gap {worst_first:.2e}; worst Hessian gap {worst_hess:.2e}"),
    );
}

#[test]
fn acceptance_8_real_data_pipeline() {
    let Some(path) = std::env::var_os("ROBSEL_BOSTON_CSV") else {
        println!("ACCEPTANCE 8 (real-data pipeline): SKIPPED — set ROBSEL_BOSTON_CSV to a Boston-format CSV");
        return;
    };
    let table = robsel::io::read_numeric_csv(std::path::Path::new(&path)).unwrap();
    let response = if table.headers.iter().any(|h| h == "medv") {
        "medv".to_string()
    } else {
        table.headers.last().unwrap().clone()
    };
    let config = RealDataConfig {
        response,
        k: 1,
        m: 10.0,
        repetitions: 100,
        seed: 31,
        alphas: vec![0.1],
        criteria: vec![CriterionKind::GedbbcPractical, CriterionKind::Dbbc],
        grid_length: 50,
        s_hint: 15,
        no_interactions: false,
    };
    let report_data = run_realdata(&table, &config, None).unwrap();
    let ge = report_data
        .rows
        .iter()
        .find(|r| r.criterion == "GE-DBBC")
        .unwrap();
    let db = report_data
        .rows
        .iter()
        .find(|r| r.criterion == "DBBC")
        .unwrap();
    let pass = ge.cr_mean >= 0.85 && ge.nu_raw_mean <= db.nu_raw_mean;
    report(
        8,
        "real-data pipeline",
        pass,
        &format!(
            "GE-DBBC(0.1) CR {:.3}, raw nu {:.1}; DBBC(0.1) raw nu {:.1}",
            ge.cr_mean, ge.nu_raw_mean, db.nu_raw_mean
        ),
    );
}
