use volqml::innovations::{InnovationSpec, RngStream};
use volqml::models::{CompactRegion, ModelSpec, ThetaVector};
use volqml::qmle::{fit, FitOptions};
use volqml::sre::{simulate_stationary, SimOptions};

#[test]
#[ignore]
fn diag_coverage() {
    let model = ModelSpec::garch(1, 1).unwrap();
    let truth = ThetaVector::new(model, vec![0.1, 0.2, 0.5]).unwrap();
    let region = CompactRegion::default_for(model);
    let opts = FitOptions {
        starts: 1,
        ..FitOptions::default()
    };
    let n = 4000;
    let reps = 200;
    let results: Vec<_> = volqml::exec::map_indexed(reps, |r| {
        let stream = RngStream::new(808, 0).child(2).child(0).child(r as u64);
        let path = simulate_stationary(
            &truth,
            &InnovationSpec::Normal,
            stream,
            n,
            &SimOptions::default(),
        )
        .unwrap();
        let rep = fit(path.data(), &region, &opts).unwrap();
        let c = rep.theta_hat.coeffs().to_vec();
        let se = rep.covariance.as_ref().unwrap().std_errors.clone();
        (c, se, rep.converged, rep.iterations)
    });
    for k in 0..3 {
        let est: Vec<f64> = results.iter().map(|(c, _, _, _)| c[k]).collect();
        let ses: Vec<f64> = results.iter().map(|(_, s, _, _)| s[k]).collect();
        let mean = est.iter().sum::<f64>() / reps as f64;
        let sd = (est.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / reps as f64).sqrt();
        let mean_se = ses.iter().sum::<f64>() / reps as f64;
        let truth_k = [0.1, 0.2, 0.5][k];
        let cover = results
            .iter()
            .filter(|(c, s, _, _)| (c[k] - truth_k).abs() <= 1.96 * s[k])
            .count() as f64
            / reps as f64;
        println!(
            "coord {k}: mean {mean:.5} (truth {truth_k}), bias {:+.5}, empirical sd {sd:.5}, mean SE {mean_se:.5}, ratio sd/SE {:.3}, coverage {cover:.3}",
            mean - truth_k,
            sd / mean_se
        );
    }
    let n_conv = results.iter().filter(|(_, _, c, _)| *c).count();
    let max_iter = results.iter().map(|(_, _, _, i)| *i).max().unwrap();
    println!("converged {n_conv}/{reps}, max iterations {max_iter}");
}

#[test]
#[ignore]
fn diag_equivalence() {
    let model = ModelSpec::garch(1, 1).unwrap();
    let truth = ThetaVector::new(model, vec![0.1, 0.2, 0.5]).unwrap();
    let region = CompactRegion::default_for(model);
    let opts = FitOptions {
        starts: 1,
        compute_covariance: false,
        ..FitOptions::default()
    };
    let n = 8000;
    let m = 0.1 / 0.3;
    for (a, b) in [
        (m, 25.0 * 0.1 + 10.0),
        (m, 2.0 * m + 0.5),
        (m, m + 0.25),
        (m, m + 1.0),
        (m, 2.0 * m),
    ] {
        let mut worst = 0.0_f64;
        for r in 0..2u64 {
            let stream = RngStream::new(1010, 0).child(5).child(0).child(r);
            let run_one = |init: f64| {
                let sim = SimOptions {
                    burn_in: 0,
                    initial: Some(vec![init]),
                };
                let path =
                    simulate_stationary(&truth, &InnovationSpec::Normal, stream, n, &sim).unwrap();
                fit(path.data(), &region, &opts).unwrap()
            };
            let fa = run_one(a);
            let fb = run_one(b);
            for k in 0..3 {
                worst = worst.max((fa.theta_hat.coeffs()[k] - fb.theta_hat.coeffs()[k]).abs());
            }
        }
        println!("inits ({a:.3}, {b:.3}): max gap {worst:.3e}");
    }
}
