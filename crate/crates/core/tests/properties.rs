use alab_core::eigencount::{count_sorted, interlacing_check};
use alab_core::estimators::{falling_product, hoeffding_radius, sigma_omega};
use alab_core::measures::cantor_concentration_ratio;
use alab_core::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn eigenvalues(dense: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(dense).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

fn band_matrix(n: usize, bandwidth: usize, entries: &[f64]) -> SymBandMatrix {
    let mut h = SymBandMatrix::zeros(n, bandwidth);
    let mut it = entries.iter().cycle();
    for i in 0..n {
        for j in i.saturating_sub(bandwidth)..=i {
            h.set(i, j, *it.next().unwrap());
        }
    }
    h
}

fn interval() -> impl Strategy<Value = HalfOpenInterval> {
    (-6.0..6.0f64, 1e-3..6.0f64).prop_map(|(a, len)| HalfOpenInterval::new(a, a + len).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tridiagonal_count_matches_eigenvalues(
        diag in prop::collection::vec(-3.0..3.0f64, 1..80),
        off_seed in prop::collection::vec(-1.5..1.5f64, 80),
        i in interval(),
    ) {
        let off = &off_seed[..diag.len() - 1];
        let h = SymBandMatrix::tridiagonal(&diag, off).unwrap();
        let ev = eigenvalues(h.to_dense());
        let direct = ev.iter().filter(|&&e| i.lo() < e && e <= i.hi()).count();
        prop_assert_eq!(count_in_interval(&h, &i), direct);
    }

    #[test]
    fn banded_count_matches_eigenvalues(
        n in 1usize..40,
        bw in 0usize..8,
        entries in prop::collection::vec(-2.0..2.0f64, 64),
        i in interval(),
    ) {
        let h = band_matrix(n, bw.min(n - 1), &entries);
        let ev = eigenvalues(h.to_dense());
        prop_assert_eq!(count_in_interval(&h, &i), count_sorted(&ev, &i));
    }

    #[test]
    fn counts_are_additive(
        diag in prop::collection::vec(-3.0..3.0f64, 2..60),
        a in -5.0..0.0f64,
        gap1 in 1e-3..3.0f64,
        gap2 in 1e-3..3.0f64,
    ) {
        let off = vec![1.0; diag.len() - 1];
        let h = SymBandMatrix::tridiagonal(&diag, &off).unwrap();
        let (b, c) = (a + gap1, a + gap1 + gap2);
        let left = count_in_interval(&h, &HalfOpenInterval::new(a, b).unwrap());
        let right = count_in_interval(&h, &HalfOpenInterval::new(b, c).unwrap());
        prop_assert_eq!(left + right, count_in_interval(&h, &HalfOpenInterval::new(a, c).unwrap()));
        prop_assert_eq!(inertia_leq(&h, c) - inertia_leq(&h, a), left + right);
    }

    #[test]
    fn interlacing_holds_on_chains(
        potential in prop::collection::vec(-3.0..3.0f64, 1..16),
        site_seed in 0usize..16,
        x in -6.0..6.0f64,
        y in -6.0..6.0f64,
        i in interval(),
    ) {
        let volume = FiniteVolume::new(vec![potential.len()]).unwrap();
        let free = FreeOperator::adjacency(Boundary::Simple);
        let j = site_seed % potential.len();
        let (s, t) = if x <= y { (x, y) } else { (y, x) };
        let record = interlacing_check(&volume, &free, &PotentialConfig(potential.clone()), j, s, t, &i).unwrap();
        prop_assert!(record.holds);

        // Independent recount with dense eigensolves.
        let count = |w: f64| {
            let mut p = potential.clone();
            p[j] = w;
            let mut h = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(p));
            for k in 1..potential.len() {
                h[(k, k - 1)] = 1.0;
                h[(k - 1, k)] = 1.0;
            }
            count_sorted(&eigenvalues(h), &i)
        };
        prop_assert!(count(s).abs_diff(count(t)) <= 1);
    }

    #[test]
    fn sigma_is_a_stable_sorting_permutation(counts in prop::collection::vec(0usize..5, 1..6)) {
        let sigma = sigma_omega(&counts);
        let mut expected: Vec<usize> = (0..counts.len()).collect();
        expected.sort_by_key(|&k| counts[k]);
        prop_assert_eq!(&sigma, &expected);
        prop_assert!(sigma.windows(2).all(|w| counts[w[0]] <= counts[w[1]]));
    }

    #[test]
    fn falling_product_matches_direct_product(counts in prop::collection::vec(0usize..12, 1..6)) {
        let mut sorted = counts.clone();
        sorted.sort_unstable();
        let direct: i128 = sorted
            .iter()
            .enumerate()
            .map(|(k, &c)| c as i128 - k as i128)
            .product();
        prop_assert_eq!(falling_product(&sorted).unwrap() as i128, direct.max(0));
    }

    #[test]
    fn hoeffding_radius_closed_form(range in 0.1..100.0f64, n in 1u64..1_000_000, conf in 0.5..0.999f64) {
        let r = hoeffding_radius(range, n, conf).unwrap();
        let expected = range * ((2.0 / (1.0 - conf)).ln() / (2.0 * n as f64)).sqrt();
        prop_assert!((r - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn cantor_concentration_is_monotone_and_subadditive(s in 1e-6..0.5f64, t in 1e-6..0.5f64) {
        let mu = Measure::cantor(40).unwrap();
        let (cs, ct, cst) = (
            mu.concentration(s).unwrap(),
            mu.concentration(t).unwrap(),
            mu.concentration(s + t).unwrap(),
        );
        prop_assert!(cst + 1e-12 >= cs.max(ct));
        prop_assert!(cst <= cs + ct + 1e-12);
    }

    #[test]
    fn cantor_concentration_at_triadic_rationals(k in 1u32..20, m in 1u64..3) {
        let den = 3u64.pow(k);
        let mu = Measure::cantor(40).unwrap();
        let exact = cantor_concentration_ratio(m, den).unwrap();
        prop_assert!((mu.concentration(m as f64 / den as f64).unwrap() - exact).abs() <= 1e-12);
        prop_assert!(exact >= 0.5f64.powi(k as i32) && exact <= 1.0);
    }
}
