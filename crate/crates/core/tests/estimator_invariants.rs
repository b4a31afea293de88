use trajnoise::covariance::{build_covariance, cholesky, SolverKind};
use trajnoise::estimator::{log_likelihood, mle_fit, wls_fit, MinimizerOptions, MleOptions, NoiseFamily};
use trajnoise::noise_model::NoiseModelSpec;
use trajnoise::series::TimeSeries;
use trajnoise::synthesis::simulate_noise;
use trajnoise::trajectory::{build_design_matrix, DesignMatrix, TrajectoryModelSpec};

fn problem(n: usize, model: &NoiseModelSpec<f64>, seed: u64) -> (TimeSeries<f64>, DesignMatrix<f64>, Vec<f64>) {
    let traj = TrajectoryModelSpec::linear_seasonal(2000.0);
    let t = TimeSeries::daily(51544.0, vec![0.0; n]).unwrap();
    let design = build_design_matrix(&traj, &t.years()).unwrap();
    let signal = design.apply(&[6.0, 3.0, 1.0, -0.5, 0.3, 0.2]);
    let noise = simulate_noise(model, n, seed).unwrap();
    let y: Vec<f64> = signal.iter().zip(&noise).map(|(s, e)| s + e).collect();
    (TimeSeries::daily(51544.0, y.clone()).unwrap(), design, y)
}

fn residuals(design: &DesignMatrix<f64>, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(design.apply(x)).map(|(a, b)| a - b).collect()
}

#[test]
fn wls_estimate_is_a_likelihood_maximum() {
    let model = NoiseModelSpec::power_law(-1.0, 1.2);
    let (_, design, y) = problem(300, &model, 4);
    let chol = cholesky(&build_covariance(&model, 300).unwrap()).unwrap();
    let x = wls_fit(&design, &chol, &y).unwrap().x;
    let best = log_likelihood(&chol, &residuals(&design, &x, &y)).unwrap();
    for j in 0..x.len() {
        for eps in [1e-6, -1e-6] {
            let mut p = x.clone();
            p[j] += eps * x[j].abs().max(1.0);
            let l = log_likelihood(&chol, &residuals(&design, &p, &y)).unwrap();
            assert!(l <= best + 1e-9, "column {j}, step {eps}: {l} > {best}");
        }
    }
}

#[test]
fn covariance_scale_leaves_estimate_unchanged() {
    let model = NoiseModelSpec::ggm(-1.0, 0.95, 1.0);
    let (_, design, y) = problem(250, &model, 8);
    let c = build_covariance(&model, 250).unwrap();
    let a = wls_fit(&design, &cholesky(&c).unwrap(), &y).unwrap();
    let alpha = 7.5;
    let b = wls_fit(&design, &cholesky(&c.scaled(alpha)).unwrap(), &y).unwrap();
    for (p, q) in a.x.iter().zip(&b.x) {
        assert!((p - q).abs() <= 1e-10 * p.abs().max(1.0));
    }
    for i in 0..a.x.len() {
        for j in 0..a.x.len() {
            let want = alpha * a.covariance.get(i, j);
            assert!((b.covariance.get(i, j) - want).abs() <= 1e-10 * want.abs().max(1e-12));
        }
    }
}

#[test]
fn likelihood_stays_finite_at_large_n() {
    // Toeplitz path at N = 10^4
    let n = 10_000;
    let model = NoiseModelSpec::flicker(2.0);
    let (ts, ..) = problem(n, &model, 1);
    let opts = MleOptions {
        solver: SolverKind::Toeplitz,
        ..MleOptions::default()
    };
    let fit = mle_fit(&ts, &TrajectoryModelSpec::linear_seasonal(2000.0), &NoiseFamily::fixed(model), &opts).unwrap();
    assert!(fit.ln_likelihood.is_finite());

    // dense random walk: determinant far beyond f64 range if not taken in logs
    let n = 2500;
    let model = NoiseModelSpec::random_walk(3.0f64);
    let chol = cholesky(&build_covariance(&model, n).unwrap()).unwrap();
    assert!(chol.ln_det().is_finite());
    let w = simulate_noise(&model, n, 2).unwrap();
    assert!(log_likelihood(&chol, &w).unwrap().is_finite());
}

#[test]
fn profiled_and_joint_amplitudes_agree() {
    let n = 400;
    let model = NoiseModelSpec::power_law_plus_white(-1.0, 1.0, 1.5);
    let (ts, ..) = problem(n, &model, 12);
    let traj = TrajectoryModelSpec::linear_seasonal(2000.0);
    let opts = MleOptions {
        minimizer: MinimizerOptions {
            xatol: 1e-5,
            ..MleOptions::default().minimizer
        },
        ..MleOptions::default()
    };
    let mixed = mle_fit(&ts, &traj, &NoiseFamily::power_law_white(), &opts).unwrap();
    let joint = mle_fit(&ts, &traj, &NoiseFamily::power_law_white_joint(), &opts).unwrap();
    assert!(
        (mixed.ln_likelihood - joint.ln_likelihood).abs() < 1e-4,
        "{} vs {}",
        mixed.ln_likelihood,
        joint.ln_likelihood
    );
    let (k1, k2) = (mixed.noise.filter().kappa(), joint.noise.filter().kappa());
    assert!((k1 - k2).abs() < 0.01, "{k1} vs {k2}");
}
