//! Fast built-in oracle checks for `goamp selftest`.

use goamp_core::denoisers::InnerPrior;
use goamp_core::goamp::{run_goamp, run_oamp_linear, DampingConfig};
use goamp_core::model::{delta_of, MeasurementChannel, NonzeroLaw, ProblemInstance};
use goamp_core::operator::{build_operator, SpectralModel};
use goamp_core::quad::GaussHermite;
use goamp_core::se::{reconstruction_threshold, se_inner_map_phi, se_outer_step_bayes};

pub fn run() -> Vec<(String, bool)> {
    let mut out = Vec::new();
    let mut check = |name: &str, pass: bool| out.push((name.to_string(), pass));

    let d = reconstruction_threshold(&SpectralModel::single_atom(), 1e-4, 1.0);
    check("threshold flat spectrum = 2.0002", matches!(d, Ok(v) if (v - 2.0002).abs() < 1e-9));

    let delta = delta_of(1 << 16, 16, 200);
    check("delta(2^16, 16, 200) ~ 1.5028", matches!(delta, Ok(v) if (v - 1.5028).abs() < 5e-4));

    let phi = se_inner_map_phi(1.0, NonzeroLaw::Gaussian { power: 1.0 });
    check("phi(1) ~ 0.19875", (phi - 0.19875).abs() < 1e-4);

    let q40 = GaussHermite::new(40);
    let q80 = GaussHermite::new(80);
    let ch = MeasurementChannel::OneBitSign { sigma2: 1e-4 };
    let a = se_outer_step_bayes(0.5, ch, 1.0, &q40);
    let b = se_outer_step_bayes(0.5, ch, 1.0, &q80);
    check(
        "quadrature order 40 vs 80 agree",
        matches!((a, b), (Ok(x), Ok(y)) if (x.0 - y.0).abs() < 1e-10),
    );

    // adjoint identity on a small operator
    let mut rng = goamp_core::rng::trial_stream(1, 0);
    let adjoint_ok = match build_operator(8, 32, 10.0, &mut rng) {
        Ok(op) => {
            let x: Vec<f64> = (0..32).map(|i| ((i * 13 % 7) as f64 - 3.0) / 3.0).collect();
            let y: Vec<f64> = (0..8).map(|i| (i * 5 % 3) as f64 - 1.0).collect();
            let lhs: f64 = op.apply(&x).iter().zip(&y).map(|(a, b)| a * b).sum();
            let rhs: f64 = x.iter().zip(op.apply_adjoint(&y)).map(|(a, b)| a * b).sum();
            (lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0)
        }
        Err(_) => false,
    };
    check("operator adjoint identity", adjoint_ok);

    // GOAMP = OAMP on a small linear instance
    let equiv_ok = (|| -> Option<bool> {
        let pb = ProblemInstance::generate(
            256,
            4,
            64,
            10.0,
            NonzeroLaw::Gaussian { power: 1.0 },
            MeasurementChannel::Linear { sigma2: 1e-4 },
            7,
            0,
        )
        .ok()?;
        let prior = InnerPrior::new(256, 4, 1.0);
        let g = run_goamp(&pb, 6, DampingConfig::off(), &prior).ok()?;
        let o = run_oamp_linear(&pb, 6, DampingConfig::off(), &prior).ok()?;
        let dev = g
            .x_hat
            .iter()
            .zip(&o.x_hat)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        Some(dev < 1e-8)
    })()
    .unwrap_or(false);
    check("GOAMP equals OAMP on linear channel", equiv_ok);

    out
}
