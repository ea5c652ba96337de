use mfs_core::grid::{
    grid_csv_string, read_grid_csv, DiscreteSpace, DomainSpec, GridFunction, ModularKind, LUXEMBURG_TOL,
};
use mfs_core::nfunc::{
    conjugate, xi_bounds, ConjugateTable, NFunctionFamily, SymmetricField, XiKind, DEFAULT_CONJUGATE_DEPTH,
};
use mfs_core::numeric::log_grid;
use mfs_core::operator::{derivative_pairing, gradient, monotonicity_gap};
use mfs_core::solver::{Nonlinearity, Problem};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const O: [f64; 2] = [0.5, 0.5];

fn family() -> impl Strategy<Value = NFunctionFamily> {
    prop_oneof![
        (1.2f64..3.0, 0.1f64..3.0, 0.1f64..5.0)
            .prop_map(|(p, dq, a)| { NFunctionFamily::double_phase(p, p + dq, SymmetricField::Constant(a)).unwrap() }),
        (1.2f64..4.0, 0.1f64..5.0)
            .prop_map(|(p, a)| NFunctionFamily::anisotropic(p, SymmetricField::Constant(a)).unwrap()),
        (1.5f64..3.0, 0.0f64..0.5).prop_map(|(b, amp)| {
            NFunctionFamily::variable_exponent(SymmetricField::Bump { base: b, amplitude: amp, center: O, width: 0.2 })
                .unwrap()
        }),
        (1.2f64..3.0).prop_map(|p| NFunctionFamily::log_perturbed(SymmetricField::Constant(p)).unwrap()),
    ]
}

fn log_scale(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| [a, b])
}

fn space(fam: NFunctionFamily) -> DiscreteSpace {
    DiscreteSpace::new(DomainSpec::unit_box(2, 6).build().unwrap(), 0.3, fam).unwrap()
}

fn field(sp: &DiscreteSpace, seed: u64, scale: f64) -> GridFunction {
    GridFunction::gaussian(sp.domain(), &mut ChaCha8Rng::seed_from_u64(seed)).scaled(scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scaling_sandwich(fam in family(), x in point(), y in point(), sigma in log_scale(1e-3, 1e3), t in log_scale(1e-6, 1e6)) {
        let phi = fam.local(x, y);
        let (lo, hi) = xi_bounds(XiKind::Zero, fam.ell(), fam.m(), sigma).unwrap();
        let v = phi.phi(sigma * t);
        let base = phi.phi(t);
        prop_assert!(lo * base <= v * (1.0 + 1e-10));
        prop_assert!(v <= hi * base * (1.0 + 1e-10));
    }

    #[test]
    fn young_inequality(fam in family(), x in point(), s in log_scale(1e-4, 1e4), t in log_scale(1e-4, 1e4)) {
        let c = conjugate(&fam, x, x, t, DEFAULT_CONJUGATE_DEPTH).unwrap();
        let phi = fam.local(x, x);
        let slack = 1e-10 * (s * t).max(phi.phi(s) + c.value);
        prop_assert!(s * t <= phi.phi(s) + c.value + c.accuracy + slack);
        prop_assert!(c.accuracy <= 1e-6 * c.value.max(1.0));
    }

    #[test]
    fn conjugate_of_density_bounded_by_doubling(fam in family(), x in point(), t in log_scale(1e-4, 1e4)) {
        let phi = fam.local(x, x);
        let c = conjugate(&fam, x, x, phi.density(t), DEFAULT_CONJUGATE_DEPTH).unwrap();
        prop_assert!(c.value - c.accuracy <= phi.phi(2.0 * t) * (1.0 + 1e-10));
    }

    #[test]
    fn density_is_monotone(fam in family(), x in point(), y in point(), a in log_scale(1e-6, 1e6), b in log_scale(1e-6, 1e6)) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let phi = fam.local(x, y);
        prop_assert!(phi.density(lo) <= phi.density(hi) * (1.0 + 1e-12));
    }

    #[test]
    fn conjugate_table_shape(fam in family(), x in point()) {
        let table = ConjugateTable::build(&fam, &[(x, x)], &log_grid(1e-3, 1e3, 4), DEFAULT_CONJUGATE_DEPTH).unwrap();
        prop_assert!(table.shape_violation() <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_modular_sandwich(fam in family(), seed in any::<u64>(), scale in log_scale(1e-2, 1e2)) {
        let sp = space(fam);
        let u = field(&sp, seed, scale);
        for kind in [ModularKind::Gagliardo, ModularKind::Hat] {
            let lam = sp.luxemburg(kind, &u, LUXEMBURG_TOL).unwrap();
            let (lo, hi) = xi_bounds(XiKind::Zero, sp.family().ell(), sp.family().m(), lam).unwrap();
            let v = sp.modular(kind, &u);
            let slack = 1e-8 * sp.family().m();
            prop_assert!(lo * (1.0 - slack) <= v && v <= hi * (1.0 + slack), "{kind:?}: {lo} {v} {hi}");
        }
    }

    #[test]
    fn norm_is_homogeneous(fam in family(), seed in any::<u64>(), c in log_scale(1e-2, 1e2)) {
        let sp = space(fam);
        let u = field(&sp, seed, 1.0);
        let a = sp.norm(&u).unwrap();
        let b = sp.norm(&u.scaled(-c)).unwrap();
        prop_assert!((b - c * a).abs() <= 1e-8 * c * a);
    }

    #[test]
    fn modular_is_even_and_vanishes_only_at_zero(fam in family(), seed in any::<u64>()) {
        let sp = space(fam);
        let u = field(&sp, seed, 1.0);
        prop_assert_eq!(sp.gagliardo(&u), sp.gagliardo(&-&u));
        prop_assert!(sp.gagliardo(&u) > 0.0);
        prop_assert_eq!(sp.gagliardo(&sp.zeros()), 0.0);
    }

    #[test]
    fn gradient_pairing_duality(fam in family(), seed in any::<u64>()) {
        let sp = space(fam);
        let u = field(&sp, seed, 1.0);
        let v = field(&sp, seed ^ 1, 1.0);
        let g = gradient(&sp, &u).unwrap();
        let lhs = g.dot_h(&v, sp.domain().cell_measure());
        let rhs = derivative_pairing(&sp, &u, &v).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        prop_assert!(g.dot_h(&u, sp.domain().cell_measure()) >= 0.0);
    }

    #[test]
    fn pairing_between_ell_and_m_modular(fam in family(), seed in any::<u64>(), scale in log_scale(1e-2, 1e2)) {
        let sp = space(fam);
        let u = field(&sp, seed, scale);
        let j = sp.gagliardo(&u);
        let p = derivative_pairing(&sp, &u, &u).unwrap();
        prop_assert!(sp.family().ell() * j <= p * (1.0 + 1e-10));
        prop_assert!(p <= sp.family().m() * j * (1.0 + 1e-10));
    }

    #[test]
    fn monotone_termwise(fam in family(), seed in any::<u64>()) {
        let sp = space(fam);
        let g = monotonicity_gap(&sp, &field(&sp, seed, 1.0), &field(&sp, seed ^ 7, 3.0)).unwrap();
        prop_assert!(g.min_term >= -1e-12 * g.scale);
    }

    #[test]
    fn energy_is_even_and_cerami_defect_holds(fam in family(), seed in any::<u64>(), r_off in 0.1f64..2.0, scale in log_scale(1e-1, 1e1)) {
        let m = fam.m();
        let sp = space(fam);
        let u = field(&sp, seed, scale);
        let nl = Nonlinearity::power_log(m + r_off).unwrap();
        let problem = Problem::new(sp, nl);
        prop_assert_eq!(problem.energy(&u), problem.energy(&-&u));
        let cell = problem.space().domain().cell_measure();
        let pairing = problem.energy_gradient(&u).unwrap().dot_h(&u, cell);
        let lhs = m * problem.energy(&u) - pairing;
        let rhs: f64 = u.values().iter().map(|&t| nl.defect(t, m) * cell).sum();
        prop_assert!(lhs >= rhs - 1e-10 * lhs.abs().max(rhs.abs()).max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn csv_roundtrip(seed in any::<u64>(), cells in 2usize..10) {
        let d = DomainSpec::unit_box(2, cells).build().unwrap();
        let u = GridFunction::gaussian(&d, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = read_grid_csv(&d, grid_csv_string(&d, &u).unwrap().as_bytes()).unwrap();
        prop_assert_eq!(back.values(), u.values());
    }

    #[test]
    fn domain_spec_roundtrip(dim in 1usize..=2, cells in 2usize..40, collar in 0.05f64..1.0) {
        let spec = DomainSpec { collar, ..DomainSpec::unit_box(dim, cells) };
        let text = serde_json::to_string(&spec).unwrap();
        prop_assert_eq!(serde_json::from_str::<DomainSpec>(&text).unwrap(), spec);
    }
}
