use std::f64::consts::PI;
use std::path::Path;

use approx::assert_relative_eq;
use ltne::certificates::*;
use ltne::cli::measured_decay_rate;
use ltne::config::{analytic_state, initial_state, AnalyticIc, InitialCondition};
use ltne::integrator::{run, RunOptions};
use ltne::spectral::{hk_seminorm_sq, tail_fraction, SpectralField};
use ltne::{Domain, Dynamics, ModelOptions, Params, Scheme, State, StepperConfig};

fn certified_run(
    d: &Dynamics,
    s0: &State,
    dt: f64,
    t_end: f64,
    sample_every: u64,
    cfg: CertificateConfig,
) -> Vec<TrajectoryRecord> {
    let stepper = StepperConfig { dt, scheme: Scheme::ImexCnab2, t_end, sample_every };
    let mut suite = CertificateSuite::new(d, stepper, cfg, s0).unwrap();
    run(d, s0, &stepper, &mut suite, &RunOptions::default()).unwrap().into_result().unwrap().records
}

fn random_ic(d: &Dynamics, seed: u64, energy: f64) -> State {
    let ic = InitialCondition::Random { seed, energy, decay: 0.5 };
    initial_state(&ic, d.params(), d.domain(), Path::new(".")).unwrap()
}

fn record(t: f64, norms: Norms) -> TrajectoryRecord {
    TrajectoryRecord { t, norms, ..Default::default() }
}

#[test]
fn constants_examples() {
    let cfg = CertificateConfig::default();
    for lambda in [0.1, 1.0, 7.0] {
        let k = compute_constants(&Params { lambda, ..Params::default() }, 1.0, &cfg, 1.0).unwrap();
        assert_eq!(k.m8, 1.0);
        assert_eq!(k.t0, 0.0);
        assert_relative_eq!(k.m7, 2.0 * PI * PI, max_relative = 1e-15);
    }
    let k = compute_constants(&Params { alpha: 4.0, gamma: 1.0, lambda: 1.0, ..Params::default() }, 1.0, &cfg, 1.0).unwrap();
    assert_relative_eq!(k.m8, 4.0, max_relative = 1e-15);
    assert_relative_eq!(k.t0, 4f64.ln() / k.m7, max_relative = 1e-15);
    assert_relative_eq!(k.m7, 2.0 * PI * PI / 4.0, max_relative = 1e-15);

    let k = compute_constants(&Params::default(), 2.0, &cfg, 3.0).unwrap();
    assert_relative_eq!(k.m7, PI * PI * 1.25, max_relative = 1e-15);
    assert_eq!(k.c_tilde, 0.5);
    assert_eq!(k.m1, 1.0);
    assert_eq!(k.m2, 2.0 * (100.0f64 * 100.0 / 2.0 + 0.25));
    assert_relative_eq!(k.rho_r_sq, 3.0 * (1.0 + 1e4 / 4.0), max_relative = 1e-15);
}

#[test]
fn c_tilde_out_of_range_is_rejected() {
    let p = Params { alpha: 2.0, ..Params::default() };
    for c in [0.0, 0.5, 0.7, -0.1] {
        let cfg = CertificateConfig { c_tilde: Some(c), ..Default::default() };
        assert!(compute_constants(&p, 1.0, &cfg, 1.0).is_err(), "c_tilde {c}");
    }
    let cfg = CertificateConfig { c_tilde: Some(0.49), ..Default::default() };
    assert!(compute_constants(&p, 1.0, &cfg, 1.0).is_ok());
}

#[test]
fn cdep_rate_formula() {
    let k = compute_constants(&Params::default(), 1.0, &CertificateConfig::default(), 1.0).unwrap();
    let p = Params { ra: 2.0, lambda: 1e-12, ..Params::default() };
    // tiny lambda: max{mso^2 |grad theta|^2 Pr/Da, Ra^2/4}
    assert_relative_eq!(k.cdep_rate(&p, 0.5), 1.0, max_relative = 1e-9);
    assert_eq!(k.cdep_rate(&p, 10.0), 10.0);
    let q = Params { ra: 0.1, lambda: 40.0, alpha: 0.5, ..Params::default() };
    assert_eq!(k.cdep_rate(&q, 0.0), 40.0 / 2.0);
}

#[test]
fn decay_of_zero_data_passes_with_unit_slack() {
    let k = compute_constants(&Params::default(), 1.0, &CertificateConfig::default(), 0.0).unwrap();
    let z = record(0.0, Norms::default());
    let c = check_decay(&record(1.0, Norms::default()), &z, &k);
    assert!(c.ok);
    assert_eq!(c.slack, 1.0);
}

#[test]
fn decay_of_single_mode_is_strictly_below_bound() {
    let p = Params::default();
    let mu = -2.0 * PI * PI;
    let norms_at = |t: f64| {
        let th = 0.5 * ((mu * t).exp() + ((mu - 2.0) * t).exp());
        let ph = 0.5 * ((mu * t).exp() - ((mu - 2.0) * t).exp());
        Norms { theta2: 0.25 * th * th, phi2: 0.25 * ph * ph, ..Default::default() }
    };
    let init = record(0.0, norms_at(0.0));
    let k = compute_constants(&p, 1.0, &CertificateConfig::default(), 0.25).unwrap();
    assert_eq!(k.m8, 1.0);
    for i in 1..=500 {
        let t = i as f64 * 0.01;
        let c = check_decay(&record(t, norms_at(t)), &init, &k);
        assert!(c.ok && c.slack > 0.0, "t={t}: {c:?}");
    }
}

#[test]
fn dissipation_integral_matches_closed_form() {
    // lambda -> 0 decouples phi; theta = 2 e^{mu t} sin(pi x) sin(pi z) gives
    // |grad theta|^2 = 2 pi^2 e^{-4 pi^2 t}
    let p = Params { lambda: 1e-9, ..Params::default() };
    let dom = Domain::new(1.0, 8, 8).unwrap();
    let d = Dynamics::new(p, dom, ModelOptions { nonlinear: false, conduction_coupling: false }).unwrap();
    let mut s0 = State::zeros(&dom);
    s0.theta.set(1, 1, 2.0).unwrap();
    let cfg = CertificateConfig { cdep: false, ..Default::default() };
    let recs = certified_run(&d, &s0, 1e-4, 1.0, 100, cfg);
    let last = recs.last().unwrap();
    let exact = (1.0 - (-4.0 * PI * PI).exp()) / 2.0;
    let integral = last.dissip_integral.unwrap();
    // trapezoid of the exact integrand on the sample grid
    let f = |t: f64| 2.0 * PI * PI * (-4.0 * PI * PI * t).exp();
    let trap: f64 = (0..100).map(|i| 0.005 * (f(i as f64 * 0.01) + f((i + 1) as f64 * 0.01))).sum();
    assert_relative_eq!(integral, trap, max_relative = 1e-6);
    assert_relative_eq!(integral, exact, max_relative = 0.02);
    assert!(last.dissip_ok.unwrap());
    assert!(recs.iter().all(|r| r.dissip_ok == Some(true)));
    let k = compute_constants(&p, 1.0, &CertificateConfig::default(), 1.0).unwrap();
    assert!(last.dissip_rhs.unwrap() >= k.m9);
}

#[test]
fn psi_absorbing_trivial_and_frozen_theta() {
    let p = Params::default();
    let cfg = CertificateConfig::default();

    let k0 = compute_constants(&p, 1.0, &cfg, 0.0).unwrap();
    let zero = record(0.0, Norms::default());
    let (c, steady) = check_psi_absorbing(&record(2.0, Norms::default()), &zero, &k0, &p);
    assert!(c.ok && steady);

    // theta frozen in mode (1,1): each psi mode relaxes to Ra D theta / (mu (1 - C mu))
    let dom = Domain::new(1.0, 8, 4).unwrap();
    let d = Dynamics::new(p, dom, ModelOptions::default()).unwrap();
    let theta = SpectralField::mode(&dom, 1, 1, 1.0).unwrap();
    let lin = d.linear();
    let forcing = lin.psi_forcing(&theta);
    let dx = ltne::spectral::dx_projection_matrix(8, 1.0);
    let star = SpectralField::from_fn(&dom, |m, n| {
        let mu = ltne::spectral::laplacian_eigenvalue(m, n, 1.0);
        let dth = if n == 1 { dx[[m - 1, 0]] } else { 0.0 };
        p.ra * dth / (mu * (1.0 - p.c * mu))
    });
    let from_op = SpectralField::from_fn(&dom, |m, n| -forcing.get(m, n) / lin.psi_multiplier[[m - 1, n - 1]]);
    assert!(star.sub(&from_op).max_abs() <= 1e-14 * star.max_abs());

    let theta2 = hk_seminorm_sq(&theta, 0);
    let k = compute_constants(&p, 1.0, &cfg, theta2).unwrap();
    let psi_at = |t: f64| {
        SpectralField::from_fn(&dom, |m, n| {
            let rate = lin.psi_multiplier[[m - 1, n - 1]];
            star.get(m, n) * (1.0 - (rate * t).exp())
        })
    };
    let norms_at = |t: f64| Norms { lap_psi2: hk_seminorm_sq(&psi_at(t), 2), theta2, ..Default::default() };
    let t0 = record(0.0, norms_at(0.0));
    let mut last_slack = f64::INFINITY;
    for i in 1..=200 {
        let t = i as f64 * 0.05;
        let (c, steady) = check_psi_absorbing(&record(t, norms_at(t)), &t0, &k, &p);
        assert!(c.ok && steady, "t={t}: {c:?}");
        last_slack = c.slack;
    }
    let limit = p.ra * p.ra * theta2 / (4.0 * p.c);
    assert_relative_eq!(last_slack, 1.0 - hk_seminorm_sq(&star, 2) / limit, max_relative = 1e-9);
}

#[test]
fn h1_absorbing_trivial_cases_and_short_window() {
    let p = Params::default();
    let k = compute_constants(&p, 1.0, &CertificateConfig::default(), 0.0).unwrap();
    let window: Vec<TrajectoryRecord> = (0..=100).map(|i| record(i as f64 * 0.01, Norms::default())).collect();
    let c = check_h1_absorbing(&window, &k, &p).unwrap();
    assert!(c.ok);
    assert!(check_h1_absorbing(&window[..1], &k, &p).is_err());
}

#[test]
fn h1_absorbing_passes_on_a_random_run() {
    let dom = Domain::new(1.0, 16, 16).unwrap();
    let d = Dynamics::new(Params::default(), dom, ModelOptions::default()).unwrap();
    let s0 = random_ic(&d, 12, 1.0);
    let cfg = CertificateConfig { r: 1.0, cdep: false, ..Default::default() };
    let recs = certified_run(&d, &s0, 1e-3, 3.0, 10, cfg);
    let checked: Vec<_> = recs.iter().filter_map(|r| r.h1_absorb_ok).collect();
    assert!(!checked.is_empty());
    assert!(checked.iter().all(|&ok| ok));
    // the first window ends one r after the anchor
    let first = recs.iter().find(|r| r.h1_absorb_ok.is_some()).unwrap();
    assert!((first.t - 1.0).abs() < 1e-9);
    assert!(recs.iter().all(|r| r.h1_absorb_slack.is_none_or(|s| s.is_finite())));
}

#[test]
fn continuous_dependence_identical_and_perturbed() {
    let dom = Domain::new(1.0, 16, 16).unwrap();
    let d = Dynamics::new(Params::default(), dom, ModelOptions::default()).unwrap();
    let s0 = random_ic(&d, 4, 1.0);
    let same = CertificateConfig { cdep_perturbation: 0.0, ..Default::default() };
    let recs = certified_run(&d, &s0, 1e-3, 0.5, 10, same);
    assert!(recs.iter().all(|r| r.cdep_d == Some(0.0) && r.cdep_ok == Some(true)));

    let cfg = CertificateConfig { cdep_perturbation: 1e-6, cdep_mode: (2, 1), ..Default::default() };
    let recs = certified_run(&d, &s0, 1e-3, 1.0, 10, cfg);
    let d0 = recs[0].cdep_d.unwrap();
    assert_relative_eq!(d0, 0.25 * 1e-12, max_relative = 1e-6);
    assert!(recs.iter().all(|r| r.cdep_ok == Some(true)));
    // the difference decays
    assert!(recs.last().unwrap().cdep_d.unwrap() < d0);
}

#[test]
fn continuous_dependence_needs_the_difference_functional() {
    let p = Params::default();
    let k = compute_constants(&p, 1.0, &CertificateConfig::default(), 1.0).unwrap();
    let recs = vec![record(0.0, Norms::default()), record(0.1, Norms::default())];
    assert!(check_continuous_dependence(&recs, &k, &p).is_err());
}

#[test]
fn energy_balance_zero_states() {
    let k = compute_constants(&Params::default(), 1.0, &CertificateConfig::default(), 0.0).unwrap();
    let rec = TrajectoryRecord {
        ebal_dedt: Some(0.0),
        ebal_q: Some(0.0),
        ebal_y12: Some(0.0),
        ebal_ey: Some(0.0),
        ..Default::default()
    };
    let (c, resid, rel) = check_energy_balance(&rec, &k).unwrap();
    assert!(c.ok);
    assert_eq!((resid, rel, c.slack), (0.0, 0.0, 1.0));
    assert!(check_energy_balance(&record(0.0, Norms::default()), &k).is_none());
}

#[test]
fn energy_balance_residual_quarters_with_dt() {
    let dom = Domain::new(1.0, 8, 8).unwrap();
    let d = Dynamics::new(Params::default(), dom, ModelOptions { nonlinear: false, conduction_coupling: false }).unwrap();
    let mut s0 = State::zeros(&dom);
    s0.theta.set(1, 1, 1.0).unwrap();
    let cfg = CertificateConfig { cdep: false, ..Default::default() };
    let coarse = certified_run(&d, &s0, 1e-3, 0.2, 50, cfg.clone());
    let fine = certified_run(&d, &s0, 5e-4, 0.2, 100, cfg);
    assert_eq!(coarse.len(), fine.len());
    for (a, b) in coarse.iter().zip(&fine).skip(1) {
        assert!((a.t - b.t).abs() < 1e-12);
        let ratio = a.ebal_resid.unwrap() / b.ebal_resid.unwrap();
        assert!((3.5..=4.5).contains(&ratio), "t={}: ratio {ratio}", a.t);
        assert_eq!(a.ebal_ok, Some(true));
    }
}

#[test]
fn algebraic_tail_collapses() {
    let dom = Domain::new(1.0, 32, 32).unwrap();
    let d = Dynamics::new(Params::default(), dom, ModelOptions::default()).unwrap();
    let s0 = analytic_state(AnalyticIc::AlgebraicTail, 4, &dom);
    let (mut tail, mut total) = (0.0, 0.0);
    for m in 1..=32usize {
        for n in 1..=32usize {
            let mu2 = ((m * m + n * n) as f64 * PI * PI).powi(2);
            let w = mu2 / ((m * m + n * n) as f64).powi(2);
            total += w;
            if m > 16 || n > 16 {
                tail += w;
            }
        }
    }
    assert_relative_eq!(tail_fraction(&s0.theta, 2, 16).unwrap(), tail / total, max_relative = 1e-12);

    let cfg = CertificateConfig { cdep: false, tail_cutoff: Some(16), ..Default::default() };
    let recs = certified_run(&d, &s0, 1e-3, 0.1, 100, cfg);
    let (first, last) = (recs[0].tail_fracs.unwrap(), recs.last().unwrap().tail_fracs.unwrap());
    assert!(first[1] > last[1]);
    assert!(last[1] < 1e-6 * first[1]);
    let (ok, worst) = check_tail_regularity(&State::zeros(&dom), 2, 16, 1e-8).unwrap();
    assert!(ok && worst == 0.0);
}

#[test]
fn linear_certificates_are_invariant_under_scaling() {
    let dom = Domain::new(1.0, 12, 12).unwrap();
    let d = Dynamics::new(Params::default(), dom, ModelOptions { nonlinear: false, conduction_coupling: false }).unwrap();
    let s0 = random_ic(&d, 5, 1.0);
    let cfg = CertificateConfig { cdep: false, ..Default::default() };
    let full = certified_run(&d, &s0, 1e-3, 1.0, 10, cfg.clone());
    let half = certified_run(&d, &s0.scaled(0.5), 1e-3, 1.0, 10, cfg);
    for (a, b) in full.iter().zip(&half) {
        assert_eq!(a.decay_ok, b.decay_ok);
        assert_relative_eq!(a.norms.theta2, 4.0 * b.norms.theta2, max_relative = 1e-12);
        assert_relative_eq!(a.decay_rhs.unwrap(), 4.0 * b.decay_rhs.unwrap(), max_relative = 1e-12);
        assert!((a.decay_slack.unwrap() - b.decay_slack.unwrap()).abs() <= 1e-12);
    }
}

#[test]
fn m7_bounds_the_measured_decay_rate() {
    for (alpha, lambda, gamma) in [(1.0, 1.0, 1.0), (0.5, 2.0, 1.0), (2.0, 0.5, 3.0)] {
        let p = Params { alpha, lambda, gamma, ..Params::default() };
        let dom = Domain::new(1.0, 12, 12).unwrap();
        let d = Dynamics::new(p, dom, ModelOptions::default()).unwrap();
        let s0 = random_ic(&d, 2, 1.0);
        let cfg = CertificateConfig { cdep: false, ..Default::default() };
        let recs = certified_run(&d, &s0, 1e-3, 5.0, 10, cfg);
        let rate = measured_decay_rate(&recs, 1.0).unwrap();
        let k = compute_constants(&p, 1.0, &CertificateConfig::default(), 1.0).unwrap();
        assert!(rate >= k.m7 * (1.0 - 1e-6), "alpha={alpha}: rate {rate} < M7 {}", k.m7);
    }
}

#[test]
fn recertification_is_bit_identical_and_monotone_in_mso() {
    let dom = Domain::new(1.0, 12, 12).unwrap();
    let p = Params::default();
    let d = Dynamics::new(p, dom, ModelOptions::default()).unwrap();
    let s0 = random_ic(&d, 7, 1.0);
    let cfg = CertificateConfig::default();
    let recs = certified_run(&d, &s0, 1e-3, 2.0, 10, cfg.clone());
    let again = recertify(p, 1.0, cfg.clone(), &recs).unwrap();
    assert_eq!(recs, again);

    let looser = recertify(p, 1.0, CertificateConfig { mso: 10.0, ..cfg }, &recs).unwrap();
    for (a, b) in recs.iter().zip(&looser) {
        for ((name, ok_a), (_, ok_b)) in a.verdicts().iter().zip(b.verdicts()) {
            assert!(!(*ok_a && !ok_b), "{name} flipped at t={}", a.t);
        }
        if let (Some(x), Some(y)) = (a.cdep_bound, b.cdep_bound) {
            assert!(y >= x);
        }
    }
}

#[test]
fn evaluator_requires_increasing_times() {
    let mut ev = CertificateEvaluator::new(Params::default(), 1.0, CertificateConfig::default()).unwrap();
    ev.push(record(0.0, Norms::default())).unwrap();
    assert!(ev.push(record(0.0, Norms::default())).is_err());
}

#[test]
fn zero_run_passes_everything() {
    let dom = Domain::new(1.0, 8, 8).unwrap();
    let p = Params::default();
    let d = Dynamics::new(p, dom, ModelOptions::default()).unwrap();
    let cfg = CertificateConfig { tail: true, tail_warmup: 0.0, ..Default::default() };
    let recs = certified_run(&d, &State::zeros(&dom), 1e-3, 1.5, 10, cfg.clone());
    assert!(recs.iter().all(|r| r.all_ok()));
    let summary = summarize(&recs, &p, &cfg);
    assert!(summary.iter().all(|s| s.passed()));
    assert!(summary.iter().filter(|s| s.enabled).all(|s| s.evaluated > 0));
}
