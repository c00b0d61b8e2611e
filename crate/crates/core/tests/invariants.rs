use rabi_triangle::dynamics::{chirality_metric, default_t_final, evolve, FockBasis};
use rabi_triangle::meanfield::{energy_gain, residuals, solve_displacements, Displacement};
use rabi_triangle::model::{softest_coupling, Params, PhaseLabel};
use rabi_triangle::scaling::{exponent_report, Outcome, Quantity, Side, Transition, DEFAULT_POINTS, DEFAULT_WINDOW};

fn params(theta: f64, ratio: f64) -> Params<f64> {
    let p = Params::default().with_theta(theta);
    let (gc, _) = softest_coupling(&p).unwrap();
    p.with_g1(gc * ratio)
}

fn max_abs(r: &[f64]) -> f64 {
    r.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

#[test]
fn chiral_solutions_mirror_under_flux_reversal() {
    for theta in [0.1, 0.3, 1.2] {
        let plus = params(theta, 1.2);
        let minus = plus.with_theta(-theta);
        let sp = solve_displacements(&plus).unwrap();
        let sm = solve_displacements(&minus).unwrap();
        assert_eq!(sp.label, PhaseLabel::Chiral);
        assert!((sp.energy_gain - sm.energy_gain).abs() <= 1e-10 * sp.energy_gain.abs());
        let d = sp.disp;
        let conj = Displacement { a: d.a, b: d.b.map(|x| -x) };
        let reflected = Displacement {
            a: [d.a[0], d.a[2], d.a[1]],
            b: [d.b[0], d.b[2], d.b[1]],
        };
        for image in [conj, reflected] {
            assert!(max_abs(&residuals(&minus, &image)) < 1e-10);
            assert!((energy_gain(&minus, &image) - sp.energy_gain).abs() <= 1e-10 * sp.energy_gain.abs());
        }
    }
}

fn exponent(r: &rabi_triangle::scaling::ExponentReport, side: Side, q: Quantity) -> (f64, f64) {
    match &r.get(side, q).unwrap().outcome {
        Outcome::Exponent { value, fit, .. } => (*value, fit.slope_stderr),
        o => panic!("{q:?}: {o:?}"),
    }
}

#[test]
fn zero_flux_site_classes_split() {
    let r = exponent_report(&Params::default(), Transition::NpAfsp, DEFAULT_WINDOW, DEFAULT_POINTS).unwrap();
    for make in [Quantity::VarX as fn(usize) -> Quantity, Quantity::Photon] {
        let (e1, s1) = exponent(&r, Side::Above, make(0));
        let (e2, s2) = exponent(&r, Side::Above, make(1));
        let (e3, _) = exponent(&r, Side::Above, make(2));
        assert!((e2 - e3).abs() <= 0.01, "{e2} {e3}");
        let sigma = s1.max(s2);
        // the exponent carries a factor 1/2 when it comes from a variance
        assert!((e1 - e2).abs() > 5.0 * sigma, "{e1} {e2} {sigma}");
    }
}

#[test]
fn fits_are_window_stable() {
    for t in Transition::ALL {
        let r = exponent_report(&Params::default(), t, DEFAULT_WINDOW, DEFAULT_POINTS).unwrap();
        assert!(r.failures.is_empty(), "{t}: {:?}", r.failures);
        for e in &r.entries {
            assert!(e.outcome.window_stable(), "{t} {:?} {:?}: {:?}", e.side, e.quantity, e.outcome);
        }
    }
}

#[test]
fn chirality_is_odd_in_flux() {
    let basis = FockBasis::new(2).unwrap();
    let run = |theta: f64| {
        let p = Params::new(1.0, 50.0, 0.1, 0.05, theta).unwrap();
        chirality_metric(&evolve(&p, &basis, default_t_final(0.05) / 3.0, 0.1).unwrap())
    };
    for theta in [0.3, 0.8, std::f64::consts::FRAC_PI_2] {
        let (a, b) = (run(theta), run(-theta));
        assert_eq!(a, -b, "theta = {theta}");
        assert_ne!(a, 0);
    }
    assert_eq!(run(0.0), 0);
}
