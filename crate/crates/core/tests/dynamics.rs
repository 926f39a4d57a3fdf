use nlgp::closed_form::gp_soliton;
use nlgp::dynamics::{distance_d, evolve, evolve_with, stability_experiment, translate, EvolutionConfig, Stepper};
use nlgp::fields::ComplexField;
use nlgp::minimizer::{minimize, Init, MinimizerConfig};
use nlgp::{Error, Grid, InteractionKernel};

fn desk() -> Grid {
    Grid::new(8192, 256.0).unwrap()
}

#[test]
fn soliton_density_travels_at_its_speed() {
    let g = desk();
    let k = InteractionKernel::dirac();
    let c = 1.0;
    let mut u = gp_soliton(c, &g).unwrap().complex;
    let stepper = Stepper::new(&g, &k, u.phase_jump, 1e-3);
    for _ in 0..1000 {
        stepper.step(&mut u).unwrap();
    }
    let t = 1.0;
    // the closed-form density at x − ct
    let a2 = (2.0 - c * c) / 2.0;
    let kk = (2.0f64 - c * c).sqrt();
    let err = g
        .positions()
        .iter()
        .zip(&u.values)
        .map(|(&x, v)| {
            let exact = 1.0 - a2 / (0.5 * kk * (x - c * t)).cosh().powi(2);
            (v.norm_sqr() - exact).abs()
        })
        .fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn constant_state_series_are_constant() {
    let g = Grid::new(256, 32.0).unwrap();
    let k = InteractionKernel::exp_pair(0.05, 0.15).unwrap();
    let cfg = EvolutionConfig { dt: 1e-2, t_end: 1.0, record_every: 10, ..Default::default() };
    let s = evolve(&ComplexField::constant(&g), &k, &cfg, None).unwrap();
    assert_eq!(s.len(), 11);
    assert!(s.energies.iter().all(|&e| e == 0.0));
    assert!(s.momenta.iter().all(|p| *p == Some(0.0)));
    assert!(s.min_modulus.iter().all(|&m| (m - 1.0).abs() < 1e-14));
    assert!(s.distances.iter().all(Option::is_none));
}

#[test]
fn one_step_shift_distance_matches_definition() {
    let g = desk();
    let u = gp_soliton(1.0, &g).unwrap().complex;
    let h = g.spacing();
    let v = translate(&u, h);
    let d = distance_d(&u, &v).unwrap();
    assert!(d > 0.0);
    // analytic derivative and modulus of u and u(· − h)
    let c: f64 = 1.0;
    let kk = (2.0 - c * c).sqrt();
    let a = kk / 2f64.sqrt();
    let du = |x: f64| 0.5 * a * kk / (0.5 * kk * x).cosh().powi(2);
    let m = |x: f64| (a * a * (0.5 * kk * x).tanh().powi(2) + c * c / 2.0).sqrt();
    let lim = 60.0;
    let q = |f: &dyn Fn(f64) -> f64| -> f64 {
        (0..240)
            .map(|i| {
                let (lo, hi) = (-lim + i as f64 * 0.5, -lim + (i + 1) as f64 * 0.5);
                quadrature::integrate(f, lo, hi, 1e-14).integral
            })
            .sum()
    };
    let kin = q(&|x| (du(x) - du(x - h)).powi(2)).sqrt();
    let modl = q(&|x| (m(x) - m(x - h)).powi(2)).sqrt();
    assert!((d - (kin + modl)).abs() < 1e-8 * d, "{d} vs {}", kin + modl);
}

#[test]
fn unperturbed_minimizer_stays_put() {
    let g = desk();
    let k = InteractionKernel::dirac();
    let sol = minimize(&k, 0.5, Init::Kdv, &g, &MinimizerConfig::default()).unwrap();
    assert!(sol.converged);
    let cfg = EvolutionConfig { dt: 1e-3, t_end: 5.0, record_every: 500, perturbation_amplitude: 0.0, seed: 1 };
    let rep = stability_experiment(&sol, &k, &cfg).unwrap();
    assert!(rep.max_distance <= 5e-4, "{}", rep.max_distance);
}

#[test]
fn attractive_kernel_is_unstable() {
    let g = Grid::new(1024, 128.0).unwrap();
    let k = InteractionKernel::dirac();
    let sol = minimize(&k, 0.5, Init::Kdv, &g, &MinimizerConfig::default()).unwrap();
    let attractive = k.scaled(-1.0);
    // resolved run: energy is conserved, the perturbation grows without bound
    let cfg = EvolutionConfig { dt: 1e-2, t_end: 30.0, record_every: 10, perturbation_amplitude: 1e-2, seed: 3 };
    let rep = stability_experiment(&sol, &attractive, &cfg).unwrap();
    assert!(rep.growth() > 100.0, "{}", rep.growth());
    // coarse run: the energy check aborts
    let cfg = EvolutionConfig { dt: 0.1, t_end: 100.0, record_every: 1, ..cfg };
    match stability_experiment(&sol, &attractive, &cfg) {
        Err(Error::Blowup { t, .. }) => assert!(t > 0.0 && t < 100.0),
        other => panic!("expected blowup, got {other:?}"),
    }
}

#[test]
fn observer_sees_every_record() {
    let g = Grid::new(512, 64.0).unwrap();
    let k = InteractionKernel::dirac();
    let u = gp_soliton(0.8, &g).unwrap().complex;
    let cfg = EvolutionConfig { dt: 1e-2, t_end: 0.55, record_every: 20, ..Default::default() };
    let mut seen = Vec::new();
    let s = evolve_with(&u, &k, &cfg, None, |t, _| seen.push(t)).unwrap();
    assert_eq!(seen, s.times);
    assert_eq!(s.times.len(), 4);
    assert!((s.times[3] - 0.55).abs() < 1e-12);
}
