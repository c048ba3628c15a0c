//! Cross-module statistical properties that need the simulation designs:
//! signal-versus-noise separation, eigenvalue-curve behavior, and
//! regularization sensitivity.

use nalgebra::DMatrix;
use rand::Rng;

use frechet_sdr::evalmetrics::{distance_correlation_sq, trace_correlation};
use frechet_sdr::kwire::{kwire_fit, kwire_insample, KernelSpec};
use frechet_sdr::ladle::ladle_estimate;
use frechet_sdr::metrics::{pairwise_distance_matrix, MetricSpec, ResponseSet};
use frechet_sdr::simgen::{
    gen_sample, run_experiment, Case, GroundTruth, Model, Scenario, SimDesign, SimMethod,
};
use frechet_sdr::stream;
use frechet_sdr::wire::{wire_fit, PredictorMatrix};

fn design(model: Model, case: Case, n: usize, p: usize, seed: u64) -> SimDesign {
    SimDesign::new(model, case, n, p, Scenario::PaperDefault, seed).unwrap()
}

// With distances generated independently of the predictors, every singular
// value of the fitted candidate-direction matrix is noise; the largest such
// value must stay below the leading singular value under a real signal at
// the same size.
#[test]
fn independence_keeps_singular_values_below_signal() {
    let (n, p) = (500, 5);
    let mut max_null = 0.0_f64;
    let mut min_signal = f64::INFINITY;
    for run in 0..20u64 {
        let mut rng = stream::substream(901, &[run]);
        let x = PredictorMatrix::new(DMatrix::from_fn(n, p, |_, _| rng.random_range(0.0..1.0)))
            .unwrap();
        // responses drawn independently of x
        let ys =
            ResponseSet::euclidean(DMatrix::from_fn(n, 1, |_, _| rng.random_range(-1.0..1.0)))
                .unwrap();
        let dist = pairwise_distance_matrix(&ys, &MetricSpec::Euclidean).unwrap();
        let null_fit = wire_fit(&x, &dist, 1).unwrap();
        max_null = max_null.max(null_fit.singular_values[0]);

        let d = design(Model::I, Case::I, n, p, 902 + run);
        let sample = gen_sample(&d, 0).unwrap();
        let dist = pairwise_distance_matrix(&sample.y, &d.metric()).unwrap();
        let signal_fit = wire_fit(&sample.x, &dist, 1).unwrap();
        min_signal = min_signal.min(signal_fit.singular_values[0]);
    }
    assert!(
        max_null < min_signal,
        "largest null singular value {max_null} not below smallest signal value {min_signal}"
    );
}

// Model I case (i) identifies only the first direction (the scale is
// constant); at n=400 the fit recovers it nearly perfectly.
#[test]
fn model1_case1_identifies_first_direction() {
    let d = design(Model::I, Case::I, 400, 10, 904);
    for rep in 0..5 {
        let sample = gen_sample(&d, rep).unwrap();
        let dist = pairwise_distance_matrix(&sample.y, &d.metric()).unwrap();
        let fit = wire_fit(&sample.x, &dist, 1).unwrap();
        let truth = match &sample.truth {
            GroundTruth::Basis(b) => b.clone(),
            _ => unreachable!(),
        };
        let r2 = trace_correlation(&truth, &fit.basis).unwrap();
        assert!(r2 >= 0.97, "replicate {rep}: r2 = {r2}");
    }
}

// Table direction: accuracy improves with the sample size on the
// linear-truth cells (the nonlinear-truth columns of the table are noise
// for the linear method and carry no direction).
#[test]
fn accuracy_improves_with_n() {
    for (model, case) in [
        (Model::I, Case::I),
        (Model::I, Case::Ii),
        (Model::II, Case::I),
        (Model::III, Case::I),
    ] {
        let small = run_experiment(
            &design(model, case, 100, 10, 905),
            &SimMethod::Wire,
            10,
        )
        .unwrap()
        .mean_r2
        .unwrap();
        let large = run_experiment(
            &design(model, case, 400, 10, 905),
            &SimMethod::Wire,
            10,
        )
        .unwrap()
        .mean_r2
        .unwrap();
        assert!(
            large >= small,
            "{model:?}/{case:?}: mean r2 fell from {small} to {large} as n grew"
        );
    }
}

// With a rank-2 signal (Model I case ii) the normalized squared singular
// values drop sharply after index d: g_n(2) < 0.1 g_n(1) in the majority of
// seeded runs. The g_n curve depends only on the full-sample fit, so a
// single bootstrap replicate suffices.
#[test]
fn ladle_gn_curve_drops_after_true_dimension() {
    let mut drops = 0;
    for run in 0..20u64 {
        let d = design(Model::I, Case::Ii, 400, 10, 906 + run);
        let sample = gen_sample(&d, 0).unwrap();
        let dist = pairwise_distance_matrix(&sample.y, &d.metric()).unwrap();
        let ladle = ladle_estimate(&sample.x, &dist, 1, 1).unwrap();
        if ladle.g_n[2] < 0.1 * ladle.g_n[1] {
            drops += 1;
        }
    }
    assert!(drops > 10, "g_n dropped after d in only {drops}/20 runs");
}

// Over-regularization degrades the kernel fit: at a bandwidth where the
// kernel actually varies across this design (sigma of the order of the
// median predictor distance; at sigma = 0.1 the Gram matrix is numerically
// the identity and the fit is invariant to the ridge up to scaling),
// epsilon = 1e-3 beats epsilon = 10 in the majority of seeded runs.
#[test]
fn kwire_over_regularization_degrades_fit() {
    let mut wins = 0;
    for run in 0..20u64 {
        let d = design(Model::II, Case::Ii, 200, 10, 907 + run);
        let sample = gen_sample(&d, 0).unwrap();
        let dist = pairwise_distance_matrix(&sample.y, &d.metric()).unwrap();
        let truth = match &sample.truth {
            GroundTruth::Predictors(f) => f.clone(),
            _ => unreachable!(),
        };
        let kernel = KernelSpec::gaussian(3.0).unwrap();
        let sharp = kwire_fit(&sample.x, &dist, 1, 1e-3, &kernel).unwrap();
        let blunt = kwire_fit(&sample.x, &dist, 1, 10.0, &kernel).unwrap();
        let rho_sharp = distance_correlation_sq(&truth, &kwire_insample(&sharp)).unwrap();
        let rho_blunt = distance_correlation_sq(&truth, &kwire_insample(&blunt)).unwrap();
        if rho_sharp > rho_blunt {
            wins += 1;
        }
    }
    assert!(wins > 10, "sharper ridge won only {wins}/20 runs");
}
