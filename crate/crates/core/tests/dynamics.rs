use ews_core::models::{basic_reproduction_number, critical_beta, equilibria, sir_rhs, Model, SeirParams, SirParams};
use ews_core::noise::{diffusion_demographic, DemographicTerms, Matrix, NoiseSpec};
use ews_core::scenario::{extract_window, normalize_window, sample_scenario, Class, ModelKind, MAX_HORIZON};
use ews_core::sde::{integrate_ode, BetaSchedule, Simulation};
use ews_core::stream::stream;
use proptest::prelude::*;

fn sir_params() -> impl Strategy<Value = SirParams> {
    (1.0..500.0f64, 0.05..3.0f64, 0.05..3.0f64).prop_map(|(l, m, a)| SirParams::new(l, m, a).unwrap())
}

/// Covariance rate summed directly over the five transitions of the reduced SIR model.
fn transition_covariance(s: f64, i: f64, p: &SirParams, beta: f64) -> [[f64; 2]; 2] {
    let events = [
        (p.recruitment, [1.0, 0.0]),
        (p.death * s, [-1.0, 0.0]),
        (beta * s * i, [-1.0, 1.0]),
        (p.death * i, [0.0, -1.0]),
        (p.recovery * i, [0.0, -1.0]),
    ];
    let mut v = [[0.0; 2]; 2];
    for (rate, d) in events {
        for r in 0..2 {
            for c in 0..2 {
                v[r][c] += rate * d[r] * d[c];
            }
        }
    }
    v
}

proptest! {
    #[test]
    fn r0_is_linear_and_critical_beta_is_its_root(p in sir_params(), beta in 1e-4..10.0f64) {
        let r = basic_reproduction_number(&p, beta);
        prop_assert!((basic_reproduction_number(&p, 2.0 * beta) - 2.0 * r).abs() <= 1e-12 * r.max(1.0));
        let bc = critical_beta(&p);
        prop_assert!((basic_reproduction_number(&p, bc) - 1.0).abs() < 1e-12);
        prop_assert_eq!(r < 1.0, beta < bc);
    }

    #[test]
    fn seir_critical_beta_is_root(l in 1.0..500.0f64, d in 0.05..3.0f64, k in 0.05..3.0f64, g in 0.05..3.0f64) {
        let model = Model::Seir(SeirParams::new(l, d, k, g).unwrap());
        prop_assert!((model.basic_reproduction_number(model.critical_beta()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equilibria_are_stationary(p in sir_params(), scale in 0.1..5.0f64) {
        let beta = scale * critical_beta(&p);
        for eq in equilibria(&p, beta).unwrap() {
            let f = sir_rhs(&eq, &p, beta).unwrap();
            let norm = (f[0] * f[0] + f[1] * f[1]).sqrt();
            let size = (eq[0] * eq[0] + eq[1] * eq[1]).sqrt();
            prop_assert!(norm < 1e-10 * (1.0 + size), "{:?} -> {:?}", eq, f);
        }
    }

    #[test]
    fn demographic_root_squares_to_covariance(
        p in sir_params(), s in 0.0..2000.0f64, i in 0.0..500.0f64, beta in 0.0..0.1f64,
    ) {
        prop_assume!(p.recruitment + s + i > 0.0);
        let g = diffusion_demographic(&[s, i], &p, beta).unwrap();
        let v = Matrix::from_rows(transition_covariance(s, i, &p, beta));
        prop_assert!(g.gram().sub(&v).norm() <= 1e-9 * v.norm());
        prop_assert_eq!(g.get(0, 1), g.get(1, 0));
        let t = DemographicTerms::compute(s, i, &p, beta).unwrap();
        prop_assert!(t.covariance().sub(&v).norm() <= 1e-12 * v.norm());
        // Symmetric 2x2 with nonnegative trace and determinant is PSD.
        let det = g.get(0, 0) * g.get(1, 1) - g.get(0, 1) * g.get(1, 0);
        prop_assert!(g.get(0, 0) + g.get(1, 1) >= 0.0 && det >= -1e-9 * v.norm());
    }

    #[test]
    fn simulations_are_pure_functions_of_seed(seed in any::<u64>(), sigma in 0.0..2.0f64) {
        let sim = Simulation::new(
            ModelKind::SirWhite.model(),
            NoiseSpec::additive(vec![sigma, sigma]).unwrap(),
            BetaSchedule::constant(0.01),
            vec![500.0, 7.0],
        )
        .span(0.0, 5.0);
        let a = sim.run(seed).unwrap();
        let b = sim.run(seed).unwrap();
        prop_assert_eq!(&a.states, &b.states);
        prop_assert!(a.states.iter().flatten().all(|v| *v >= 0.0));
    }

    #[test]
    fn scenario_classes_match_final_r0(seed in any::<u64>(), transcritical in any::<bool>(), k in 0usize..4) {
        let kind = ModelKind::ALL[k];
        let class = if transcritical { Class::Transcritical } else { Class::Null };
        let s = sample_scenario(&mut stream(seed, 0), 0, class, kind, 1.0).unwrap();
        prop_assert!(s.beta.beta1 >= 0.0);
        prop_assert!(s.beta.at(MAX_HORIZON) >= s.beta.at(0.0));
        let r = s.model.basic_reproduction_number(s.beta.at(MAX_HORIZON));
        prop_assert_eq!(r >= 1.0, transcritical, "R0(1500) = {}", r);
        if let Some(t) = s.transition_time {
            prop_assert!((0.0..=MAX_HORIZON).contains(&t));
        }
    }

    #[test]
    fn windows_have_exact_length_and_idempotent_normalization(
        series in prop::collection::vec(-50.0..50.0f64, 1..700), len in prop::sample::select(vec![100usize, 500]),
    ) {
        prop_assume!(series.iter().any(|v| *v != 0.0));
        let w = extract_window(&series, Class::Null, len, 0).unwrap();
        prop_assert_eq!(w.len(), len);
        prop_assert!(w.values[len - w.pad_count..].iter().all(|v| *v == 0.0));
        match normalize_window(&w) {
            Ok(once) => {
                let twice = normalize_window(&once).unwrap();
                for (a, b) in once.values.iter().zip(&twice.values) {
                    prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
                }
                let mean_abs = once.observed().iter().map(|v| v.abs()).sum::<f64>() / once.observed().len() as f64;
                prop_assert!((mean_abs - 1.0).abs() < 1e-12);
            }
            Err(e) => prop_assert!(matches!(e, ews_core::Error::DegenerateWindow)),
        }
    }
}

#[test]
fn zero_noise_equals_euler_for_every_model() {
    for kind in ModelKind::ALL {
        let model = kind.model();
        let beta = BetaSchedule::linear(0.5 * model.critical_beta(), 0.01 * model.critical_beta());
        let noise = kind.noise(vec![0.0; kind.noise_dim()]).unwrap();
        let sde = Simulation::new(model, noise, beta, kind.initial_state())
            .span(0.0, 20.0)
            .diffusion_scale(if kind == ModelKind::SirDemographic { 0.0 } else { 1.0 })
            .run(3)
            .unwrap();
        let ode = integrate_ode(&model, &beta, &kind.initial_state(), 0.0, 20.0, 0.01, 1).unwrap();
        assert_eq!(sde.states.len(), ode.states.len());
        for (a, b) in sde.states.iter().zip(&ode.states) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0), "{kind}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn one_additive_step_is_weakly_consistent() {
    let model = ModelKind::SirWhite.model();
    let x0 = [300.0, 40.0];
    let beta = 0.015;
    let dt = 0.01;
    let sigma = [0.8, 0.5];
    let sim = Simulation::new(
        model,
        NoiseSpec::additive(sigma.to_vec()).unwrap(),
        BetaSchedule::constant(beta),
        x0.to_vec(),
    )
    .span(0.0, dt)
    .dt(dt);
    let f = model.rhs(&x0, beta).unwrap();
    let n = 2000;
    let incs: Vec<[f64; 2]> = (0..n)
        .map(|seed| {
            let t = sim.run(seed).unwrap();
            let x1 = &t.states[1];
            [x1[0] - x0[0], x1[1] - x0[1]]
        })
        .collect();
    for j in 0..2 {
        let mean = incs.iter().map(|d| d[j]).sum::<f64>() / n as f64;
        let se = sigma[j] * dt.sqrt() / (n as f64).sqrt();
        assert!(
            (mean - f[j] * dt).abs() <= 4.0 * se,
            "component {j}: mean {mean}, expected {}",
            f[j] * dt
        );
        let var = incs.iter().map(|d| (d[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = sigma[j] * sigma[j] * dt;
        assert!(
            (var - expected).abs() <= 0.1 * expected,
            "component {j}: var {var}, expected {expected}"
        );
    }
    // Independent components: sample correlation within 4/sqrt(n) of 0.
    let m: Vec<f64> = (0..2)
        .map(|j| incs.iter().map(|d| d[j]).sum::<f64>() / n as f64)
        .collect();
    let c = |a: usize, b: usize| incs.iter().map(|d| (d[a] - m[a]) * (d[b] - m[b])).sum::<f64>();
    let corr = c(0, 1) / (c(0, 0) * c(1, 1)).sqrt();
    assert!(corr.abs() <= 4.0 / (n as f64).sqrt(), "corr {corr}");
}
