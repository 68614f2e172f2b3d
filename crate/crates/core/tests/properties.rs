use num_complex::Complex64;
use proptest::prelude::*;

use zeno_gate::dynamics::{gate_analysis, loss_metrics, run, FieldParams, GateConfig, Regime};
use zeno_gate::pulse::{PulseShape, PulseSpec, TimeGrid};
use zeno_gate::schmidt::{reduced_density_eigenvalues, schmidt_decompose, JointWavefunction};

const OMEGA: f64 = 1.2e15;

fn config(kappa_s: f64, kappa_p: f64, kappa_f: f64, upsilon: f64, regime: Regime, q_ratio: f64) -> GateConfig {
    let dt = 2e-11;
    let slow = kappa_s.min(kappa_p);
    let t_end = 20.0 / slow + 5.0 * dt;
    let pulse = |kappa: f64, t_end: f64| Some(PulseSpec { shape: PulseShape::RisingExponential { kappa, t_end }, carrier_phase: 0.0 });
    GateConfig {
        signal: FieldParams::new(OMEGA, OMEGA / kappa_s, q_ratio * OMEGA / kappa_s),
        pump: FieldParams::new(OMEGA, OMEGA / kappa_p, q_ratio * OMEGA / kappa_p),
        sf: FieldParams::new(2.0 * OMEGA, 2.0 * OMEGA / kappa_f, q_ratio * 2.0 * OMEGA / kappa_f),
        upsilon,
        regime,
        signal_pulse: pulse(kappa_s, t_end + 1.0 / kappa_s),
        pump_pulse: pulse(kappa_p, t_end),
        dt,
        t_start: 0.0,
        window: ((t_end + 14.0 / slow) / dt).round() * dt,
        output_bin_signal: 10.0 * dt,
        output_bin_pump: 10.0 * dt,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn coherent_runs_conserve_probability(ks in 0.6e9..1.5e9f64, kp in 0.6e9..1.5e9f64, kf in 0.5e9..2e9f64, u in 0.0..3e9f64) {
        let traj = run(&config(ks, kp, kf, u, Regime::Cqz, 100.0)).unwrap();
        let deficit = loss_metrics(&traj).total_norm_deficit;
        prop_assert!(deficit.abs() < 1e-9, "{deficit}");
        prop_assert!(traj.residual < 1e-4);
    }

    #[test]
    fn lossy_runs_never_gain_probability(ks in 0.6e9..1.5e9f64, kp in 0.6e9..1.5e9f64, kf in 0.5e9..2e9f64, u in 0.0..3e9f64, q in 10.0..200.0f64) {
        let traj = run(&config(ks, kp, kf, u, Regime::Iqz, q)).unwrap();
        prop_assert!(traj.norm.windows(2).all(|w| w[1] <= w[0] + 1e-14));
        let deficit = loss_metrics(&traj).total_norm_deficit;
        prop_assert!((deficit - traj.dissipated.total()).abs() < 1e-10, "{deficit} vs {}", traj.dissipated.total());
    }

    #[test]
    fn schmidt_weights_are_bounded_by_the_joint_output(ks in 0.6e9..1.5e9f64, kp in 0.6e9..1.5e9f64, kf in 0.5e9..2e9f64, u in 0.0..3e9f64) {
        let traj = run(&config(ks, kp, kf, u, Regime::Cqz, 100.0)).unwrap();
        let (m, res) = gate_analysis(&traj).unwrap();
        let tie = 1e-10 * res.coefficients[0];
        prop_assert!(res.coefficients.windows(2).all(|w| w[0] >= w[1] - tie));
        prop_assert!(res.total() <= traj.joint_norm + 1e-9);
        prop_assert!((0.0..=1.0 + 1e-9).contains(&m.fidelity));
        prop_assert!(m.first_mode_probability <= m.conditional_first_mode_probability + 1e-12);
    }

    #[test]
    fn svd_weights_match_density_eigenvalues(rows in 2usize..24, cols in 2usize..24, seed in 0.0..10.0f64) {
        let values: Vec<Complex64> = (0..rows * cols)
            .map(|k| {
                let (i, j) = ((k / cols) as f64, (k % cols) as f64);
                Complex64::from_polar(1.0 + (seed * i + 0.3 * j).sin(), seed * (0.2 * i * j + j))
            })
            .collect();
        let psi = JointWavefunction::new(TimeGrid::new(0.0, 0.3, rows).unwrap(), TimeGrid::new(0.0, 0.7, cols).unwrap(), values).unwrap();
        let res = schmidt_decompose(&psi, 0).unwrap();
        let ev = reduced_density_eigenvalues(&psi);
        prop_assert!((res.total() - psi.norm_sqr()).abs() < 1e-10 * psi.norm_sqr());
        for (a, e) in res.coefficients.iter().zip(&ev) {
            prop_assert!((a * a - e).abs() < 1e-10 * psi.norm_sqr());
        }
    }
}
