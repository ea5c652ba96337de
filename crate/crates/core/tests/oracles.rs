use mfs_core::grid::{ds_quotient, DiscreteSpace, GridDomain, GridFunction, ModularKind, LUXEMBURG_TOL};
use mfs_core::nfunc::{
    conjugate, growth_certificate, sobolev_conjugate_inverse, xi_bounds, NFunctionFamily, SamplePlan, SymmetricField,
    XiKind, DEFAULT_CONJUGATE_DEPTH,
};
use mfs_core::operator::{derivative_pairing, gradient, splus_diagnostic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const O: [f64; 2] = [0.5, 0.5];

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

fn aniso(p: f64, a: f64) -> NFunctionFamily {
    NFunctionFamily::anisotropic(p, SymmetricField::Constant(a)).unwrap()
}

#[test]
fn conjugate_of_half_square() {
    let c = conjugate(&aniso(2.0, 0.5), O, O, 1.0, DEFAULT_CONJUGATE_DEPTH).unwrap();
    assert!(close(c.value, 0.5, 1e-10), "{c:?}");
    assert!(c.converged && c.accuracy <= 1e-6);
}

#[test]
fn conjugate_of_third_cube() {
    let c = conjugate(&aniso(3.0, 1.0 / 3.0), O, O, 1.0, DEFAULT_CONJUGATE_DEPTH).unwrap();
    assert!(close(c.value, 2.0 / 3.0, 1e-10), "{c:?}");
}

#[test]
fn conjugate_at_zero() {
    for fam in [aniso(2.0, 1.0), NFunctionFamily::log_perturbed(SymmetricField::Constant(2.0)).unwrap()] {
        assert_eq!(conjugate(&fam, O, O, 0.0, DEFAULT_CONJUGATE_DEPTH).unwrap().value, 0.0);
    }
}

#[test]
fn conjugate_matches_legendre_power_law() {
    // t^p/p has conjugate t^p'/p'.
    for p in [1.5, 2.5, 4.0] {
        let fam = aniso(p, 1.0 / p);
        let pc = p / (p - 1.0);
        for t in [1e-3, 0.7, 3.0, 1e3] {
            let c = conjugate(&fam, O, O, t, DEFAULT_CONJUGATE_DEPTH).unwrap();
            assert!(close(c.value, t.powf(pc) / pc, 1e-9), "p={p} t={t} {c:?}");
        }
    }
}

#[test]
fn xi_table() {
    assert_eq!(xi_bounds(XiKind::Zero, 2.0, 3.0, 0.5).unwrap(), (0.125, 0.25));
    let (lo, hi) = xi_bounds(XiKind::One, 2.0, 3.0, 4.0).unwrap();
    assert!(close(lo, 8.0, 1e-14) && close(hi, 16.0, 1e-14));
    for kind in [XiKind::Zero, XiKind::One, XiKind::Two { dim: 2, s: 0.25 }] {
        assert_eq!(xi_bounds(kind, 1.2, 1.5, 1.0).unwrap(), (1.0, 1.0));
    }
}

#[test]
fn sobolev_conjugate_square_root_oracle() {
    let v = sobolev_conjugate_inverse(&aniso(2.0, 1.0), O, 0.5, 2, 1.0).unwrap();
    assert!(close(v, 4.0, 1e-10), "{v}");
    assert_eq!(sobolev_conjugate_inverse(&aniso(2.0, 1.0), O, 0.5, 2, 0.0).unwrap(), 0.0);
}

#[test]
fn log_perturbed_growth_range() {
    let fam = NFunctionFamily::log_perturbed(SymmetricField::Constant(2.0)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let plan = SamplePlan::standard([0.0, 0.0], [1.0, 1.0], 2, &mut rng);
    let cert = growth_certificate(&fam, &plan).unwrap();
    assert!(cert.growth_pass);
    assert!(cert.min_ratio >= 2.0 && cert.max_ratio <= 3.0);
    // t^2 phi / Phi = 2 + t / ((1 + t) log(1 + t)): slow approach to 2, fast approach to 3.
    assert!(cert.min_ratio < 2.08 && cert.max_ratio > 2.999, "{cert:?}");
    assert!(cert.argmin.0 > 1e5 && cert.argmax.0 < 1e-5);
}

fn square(cells: usize, s: f64, fam: NFunctionFamily) -> DiscreteSpace {
    let d = GridDomain::rectangle(2, [0.0, 0.0], [1.0, 1.0], cells, 0.25).unwrap();
    DiscreteSpace::new(d, s, fam).unwrap()
}

#[test]
fn quotient_of_indicator_next_to_collar() {
    let d = GridDomain::rectangle(2, [0.0, 0.0], [1.0, 1.0], 8, 0.25).unwrap();
    let i = d.interior_node(0);
    let j = i - 1;
    assert!(d.interior_index(j).is_none());
    let mut v = vec![0.0; d.n_interior()];
    v[0] = 1.0;
    let u = GridFunction::from_values(&d, v).unwrap();
    let q = ds_quotient(&d, &u, i, j, 0.5).unwrap();
    assert!(close(q, 1.0 / d.h().sqrt(), 1e-12), "{q}");
    let c = GridFunction::constant(&d, 3.0);
    assert_eq!(ds_quotient(&d, &c, i, d.interior_node(1), 0.5).unwrap(), 0.0);
    assert!(ds_quotient(&d, &c, i, i, 0.5).is_err());
}

#[test]
fn hat_modular_and_norm_of_constants() {
    let sp = square(10, 0.5, aniso(2.0, 1.0));
    let one = GridFunction::constant(sp.domain(), 1.0);
    assert!(close(sp.hat(&one), 1.0, 1e-12));
    for c in [0.3, -2.0, 7.5] {
        let u = GridFunction::constant(sp.domain(), c);
        let lam = sp.luxemburg(ModularKind::Hat, &u, LUXEMBURG_TOL).unwrap();
        assert!(close(lam, c.abs(), 1e-9), "{c}: {lam}");
    }
    assert_eq!(sp.luxemburg(ModularKind::Gagliardo, &sp.zeros(), LUXEMBURG_TOL).unwrap(), 0.0);
}

#[test]
fn scaling_sandwich_on_random_fields() {
    let fam = NFunctionFamily::double_phase(2.0, 3.0, SymmetricField::Constant(1.0)).unwrap();
    let sp = square(8, 0.3, fam);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (lo, hi) = xi_bounds(XiKind::Zero, 2.0, 3.0, 2.0).unwrap();
    for _ in 0..20 {
        let u = GridFunction::gaussian(sp.domain(), &mut rng);
        let j = sp.gagliardo(&u);
        let j2 = sp.gagliardo(&u.scaled(2.0));
        assert!(lo * j <= j2 * (1.0 + 1e-12) && j2 <= hi * j * (1.0 + 1e-12));
    }
}

#[test]
fn pairing_sandwich_and_central_difference() {
    let fam = NFunctionFamily::double_phase(2.0, 3.0, SymmetricField::Constant(1.0)).unwrap();
    let sp = square(8, 0.3, fam);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let u = GridFunction::gaussian(sp.domain(), &mut rng);
        let v = GridFunction::gaussian(sp.domain(), &mut rng);
        let j = sp.gagliardo(&u);
        let puu = derivative_pairing(&sp, &u, &u).unwrap();
        assert!(2.0 * j <= puu * (1.0 + 1e-12) && puu <= 3.0 * j * (1.0 + 1e-12));
        let puv = derivative_pairing(&sp, &u, &v).unwrap();
        let err = |h: f64| ((sp.gagliardo(&u.axpy(h, &v)) - sp.gagliardo(&u.axpy(-h, &v))) / (2.0 * h) - puv).abs();
        let (e1, e2) = (err(1e-2), err(1e-3));
        let rate = (e1 / e2).log10();
        assert!((1.8..=2.2).contains(&rate), "rate {rate}: {e1:e} {e2:e}");
    }
}

#[test]
fn splus_along_converging_and_fixed_sequences() {
    let fam = NFunctionFamily::double_phase(2.0, 3.0, SymmetricField::Constant(1.0)).unwrap();
    let sp = square(8, 0.3, fam);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let u = GridFunction::gaussian(sp.domain(), &mut rng);
    let w0 = GridFunction::gaussian(sp.domain(), &mut rng);
    // Without the component along J'(u) the pairing decays like 1/n^2 and keeps one sign.
    let g = gradient(&sp, &u).unwrap();
    let c = sp.domain().cell_measure();
    let w = w0.axpy(-g.dot_h(&w0, c) / g.dot_h(&g, c), &g);
    let seq: Vec<_> = (4..=64).map(|n| u.axpy(1.0 / n as f64, &w)).collect();
    let rep = splus_diagnostic(&sp, &seq, &u).unwrap();
    for pair in rep.entries.windows(2) {
        assert!(pair[1].a < pair[0].a && pair[1].b < pair[0].b, "{pair:?}");
    }
    let fixed = splus_diagnostic(&sp, &vec![u.axpy(1.0, &w); 5], &u).unwrap();
    assert!(fixed.entries.iter().all(|e| e.a > 1e-3));
}
