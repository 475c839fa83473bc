use intdim::capacity::{capacity_profile, capacity_symbolic, CapacityConfig, KernelMatrix, ProbabilityVector};
use intdim::cloud::PointCloud;
use intdim::covering::{box_count, cover_sum, cover_sum_lower_certificate, CoverConfig};
use intdim::kernels::{ker_profile, ker_psi, ker_symbolic_phi, ker_z, AdmissibleFn};
use intdim::rng::RngStream;
use intdim::scenarios::{sample_grassmannian, sample_translation};
use intdim::symbolic::{
    coding_point, refine_to_depth, singular_values, validate_ifs, AffineIfs, StopRule, SymbolicSet, Word,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rotation(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Planar IFS with maps `R(a)·diag(σ1, σ2)·R(b)`.
fn planar_ifs() -> impl Strategy<Value = AffineIfs> {
    prop::collection::vec((0.05f64..0.45, 0.05f64..0.45, 0.0f64..6.3, 0.0f64..6.3), 2..4).prop_map(|maps| {
        let mats = maps
            .into_iter()
            .map(|(s1, s2, a, b)| rotation(a) * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![s1, s2])) * rotation(b))
            .collect();
        validate_ifs(mats).unwrap()
    })
}

fn word_for(ifs: &AffineIfs, raw: &[u8]) -> Word {
    let m = ifs.maps() as u8;
    Word::new(raw.iter().map(|s| s % m + 1).collect()).unwrap()
}

fn gauge() -> impl Strategy<Value = AdmissibleFn> {
    prop_oneof![
        (0.15f64..=1.0).prop_map(|t| AdmissibleFn::theta(t).unwrap()),
        Just(AdmissibleFn::loglike()),
        Just(AdmissibleFn::boxlike()),
    ]
}

fn direct_ln_sv(ifs: &AffineIfs, w: &Word) -> Vec<f64> {
    let mut p = DMatrix::identity(ifs.dim(), ifs.dim());
    for &s in w.symbols() {
        p *= ifs.matrix(s);
    }
    let mut sv: Vec<f64> = p.singular_values().iter().map(|v| v.ln()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Maximum of a function of `ln u` on `[lo, hi]`: 10^4 geometric points, then
/// three rounds of refinement around the best point.
fn grid_zoom_max(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = 10_000;
    let (mut a, mut b) = (lo, hi);
    let mut best = f64::NEG_INFINITY;
    for _ in 0..4 {
        let h = (b - a) / (n - 1) as f64;
        let mut arg = a;
        for i in 0..n {
            let x = if i == n - 1 { b } else { a + i as f64 * h };
            let v = f(x);
            if v > best {
                best = v;
                arg = x;
            }
        }
        a = (arg - 2.0 * h).max(lo);
        b = (arg + 2.0 * h).min(hi);
    }
    best.max(f(lo)).max(f(hi))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn singular_values_positive_and_submultiplicative(ifs in planar_ifs(), i in prop::collection::vec(any::<u8>(), 0..8), j in prop::collection::vec(any::<u8>(), 0..8)) {
        let (wi, wj) = (word_for(&ifs, &i), word_for(&ifs, &j));
        let sv = singular_values(&ifs, &wi);
        prop_assert!(sv.iter().all(|v| *v > 0.0));
        prop_assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        let a1 = |w: &Word| singular_values(&ifs, w)[0];
        prop_assert!(a1(&wi.concat(&wj)) <= a1(&wi) * a1(&wj) * (1.0 + 1e-12));
    }

    #[test]
    fn refinement_is_an_antichain_covering_the_input(ifs in planar_ifs(), c in 0.01f64..0.3, roots in prop::collection::vec(prop::collection::vec(any::<u8>(), 1..3), 1..3)) {
        let words: Vec<Word> = roots.iter().map(|r| word_for(&ifs, r)).collect();
        let Ok(set) = SymbolicSet::new(words) else { return Ok(()) };
        let out = refine_to_depth(&set, &ifs, StopRule::Threshold(c), 1 << 16).unwrap();
        let leaves = out.words();
        for (k, a) in leaves.iter().enumerate() {
            prop_assert!(singular_values(&ifs, a)[0] <= c);
            prop_assert!(set.words().iter().any(|r| r.is_prefix_of(a)));
            for b in &leaves[k + 1..] {
                prop_assert!(!a.is_prefix_of(b) && !b.is_prefix_of(a));
            }
        }
        // Same cylinder union: every long word through a root passes through exactly one leaf.
        let mut rng = RngStream::new(1, 0);
        for r in set.words() {
            let tail: Vec<u8> = (0..30).map(|_| (rng.uniform() * ifs.maps() as f64) as u8).collect();
            let x = r.concat(&word_for(&ifs, &tail));
            prop_assert_eq!(leaves.iter().filter(|l| l.is_prefix_of(&x)).count(), 1);
        }
    }

    #[test]
    fn coding_truncation_tail(ifs in planar_ifs(), raw in prop::collection::vec(any::<u8>(), 20..24), n in 1usize..12, seed in any::<u64>()) {
        let rho = 1.5;
        let a = sample_translation(rho, 2, ifs.maps(), &mut RngStream::new(seed, 0)).unwrap();
        let x = word_for(&ifs, &raw);
        let head = coding_point(&ifs, &a, &x.truncate(n)).unwrap().point;
        let full = coding_point(&ifs, &a, &x).unwrap().point;
        let gap = intdim::cloud::euclidean(&head, &full);
        let alpha = ifs.alpha_plus();
        prop_assert!(gap <= alpha.powi(n as i32) * rho * ifs.maps() as f64 / (1.0 - alpha) + 1e-15);
    }

    #[test]
    fn translation_lies_in_ball(rho in 0.1f64..5.0, seed in any::<u64>()) {
        let a = sample_translation(rho, 2, 3, &mut RngStream::new(seed, 1)).unwrap();
        prop_assert!(a.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt() <= rho);
    }

    #[test]
    fn ker_z_in_unit_interval_and_monotone(ifs in planar_ifs(), raw in prop::collection::vec(any::<u8>(), 0..8), r1 in 1e-6f64..1.0, r2 in 1e-6f64..1.0) {
        let w = word_for(&ifs, &raw);
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let (zl, zh) = (ker_z(&ifs, &w, lo), ker_z(&ifs, &w, hi));
        prop_assert!(zl > 0.0 && zh <= 1.0);
        prop_assert!(zl <= zh);
    }

    #[test]
    fn symbolic_kernel_sandwich(ifs in planar_ifs(), raw in prop::collection::vec(any::<u8>(), 0..10), phi in gauge(), r in 1e-4f64..0.3, t in 0.0f64..2.0, ds in 0.0f64..2.0) {
        let s = (t + ds).min(2.0);
        let w = word_for(&ifs, &raw);
        let ks = ker_symbolic_phi(&ifs, &w, r, s, &phi).unwrap();
        let kt = ker_symbolic_phi(&ifs, &w, r, t, &phi).unwrap();
        let p = phi.phi(r);
        prop_assert!(r.powf(t - s) * kt <= ks * (1.0 + 1e-12));
        prop_assert!(ks <= p.powf(t - s) * kt * (1.0 + 1e-12));
    }

    #[test]
    fn profile_kernel_sandwich_and_monotone(phi in gauge(), r in 1e-4f64..0.3, d1 in 0.0f64..2.0, d2 in 0.0f64..2.0, tau in 0.2f64..3.0, fs in 0.0f64..1.0, ft in 0.0f64..1.0) {
        let (t, s) = if fs * tau >= ft * tau { (ft * tau, fs * tau) } else { (fs * tau, ft * tau) };
        let ks = ker_profile(d1, r, s, tau, &phi).unwrap();
        let kt = ker_profile(d1, r, t, tau, &phi).unwrap();
        let p = phi.phi(r);
        prop_assert!(r.powf(t - s) * kt <= ks * (1.0 + 1e-12));
        prop_assert!(ks <= p.powf(t - s) * kt * (1.0 + 1e-12));
        // A 1-Lipschitz image never lowers the kernel.
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(ker_profile(near, r, s, tau, &phi).unwrap() >= ker_profile(far, r, s, tau, &phi).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn psi_non_increasing(phi in gauge(), r in 1e-4f64..0.3, s in 0.0f64..2.0, d1 in 0.0f64..0.5, d2 in 0.0f64..0.5) {
        let (near, far) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(ker_psi(near, r, s, &phi).unwrap() >= ker_psi(far, r, s, &phi).unwrap());
    }

    #[test]
    fn symbolic_maximizer_matches_grid(ifs in planar_ifs(), raw in prop::collection::vec(any::<u8>(), 0..10), phi in gauge(), r in 1e-4f64..0.3, s in 0.0f64..2.0) {
        let w = word_for(&ifs, &raw);
        let ln_sv = direct_ln_sv(&ifs, &w);
        let f = |lu: f64| -s * lu + ln_sv.iter().map(|a| (lu - a).min(0.0)).sum::<f64>();
        let oracle = grid_zoom_max(phi.phi(r).ln(), r.ln(), f).exp();
        let k = ker_symbolic_phi(&ifs, &w, r, s, &phi).unwrap();
        prop_assert!(rel(k, oracle) <= 1e-6, "{k} vs {oracle}");
    }

    #[test]
    fn profile_maximizer_matches_grid(phi in gauge(), r in 1e-4f64..0.3, delta in 1e-6f64..2.0, tau in 0.2f64..3.0, fs in 0.0f64..1.0) {
        let s = fs * tau;
        let ld = delta.ln();
        let f = |lu: f64| -s * lu + tau * (lu - ld).min(0.0);
        let oracle = grid_zoom_max(phi.phi(r).ln(), r.ln(), f).exp();
        let k = ker_profile(delta, r, s, tau, &phi).unwrap();
        prop_assert!(rel(k, oracle) <= 1e-6, "{k} vs {oracle}");
    }

    #[test]
    fn projections_are_one_lipschitz(x in prop::collection::vec(-5.0f64..5.0, 4), y in prop::collection::vec(-5.0f64..5.0, 4), seed in any::<u64>(), m in 1usize..4) {
        let frame = sample_grassmannian(4, m, &mut RngStream::new(seed, 0)).unwrap();
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let image = frame.coordinates(&diff);
        let norm = |v: &[f64]| v.iter().map(|c| c * c).sum::<f64>().sqrt();
        prop_assert!(norm(&image) <= norm(&diff) * (1.0 + 1e-12));
    }
}

fn random_cloud(seed: u64, n: usize, d: usize) -> PointCloud {
    let mut rng = RngStream::new(seed, 0);
    PointCloud::new(d, (0..n * d).map(|_| rng.uniform()).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn symbolic_capacity_sandwich_and_monotone(ifs in planar_ifs(), phi in gauge(), r in 0.01f64..0.3, t in 0.0f64..1.5, ds in 0.05f64..0.5) {
        let s = t + ds;
        let set = SymbolicSet::full_shift();
        let cfg = CapacityConfig::default();
        let cs = capacity_symbolic(&set, &ifs, r, s, &phi, &cfg).unwrap();
        let ct = capacity_symbolic(&set, &ifs, r, t, &phi, &cfg).unwrap();
        let p = phi.phi(r);
        let lhs = (s - t) * p.ln() + ct.ln_capacity;
        let rhs = (s - t) * r.ln() + ct.ln_capacity;
        prop_assert!(lhs <= cs.ln_capacity + 1e-9);
        prop_assert!(cs.ln_capacity <= rhs + 1e-9);
        // log C^s / (-log r) strictly decreases in s.
        prop_assert!(cs.ln_capacity < ct.ln_capacity);
    }

    #[test]
    fn profile_capacity_monotone_in_s(seed in any::<u64>(), r in 0.02f64..0.3, tau in 0.5f64..2.0, f1 in 0.0f64..0.45, f2 in 0.55f64..1.0) {
        let cloud = random_cloud(seed, 30, 2);
        let phi = AdmissibleFn::theta(0.5).unwrap();
        let cfg = CapacityConfig::default().with_tol(1e-10);
        let lo = capacity_profile(&cloud, r, f1 * tau, tau, &phi, &cfg).unwrap();
        let hi = capacity_profile(&cloud, r, f2 * tau, tau, &phi, &cfg).unwrap();
        prop_assert!(hi.ln_capacity < lo.ln_capacity);
        // s = 0: the kernel is at most 1, so the capacity is at least 1.
        let zero = capacity_profile(&cloud, r, 0.0, tau, &phi, &cfg).unwrap();
        prop_assert!(zero.capacity >= 1.0 - 1e-9);
    }

    #[test]
    fn cover_sums_reprice_within_sandwich(seed in any::<u64>(), phi in gauge(), r in 0.01f64..0.3, t in 0.0f64..1.5, ds in 0.0f64..0.5) {
        let s = t + ds;
        let cloud = random_cloud(seed, 300, 2);
        let cover = cover_sum(&cloud, r, t, &phi, &CoverConfig::default()).unwrap();
        let st = cover.reprice(t);
        let ss = cover.reprice(s);
        prop_assert!((st - cover.upper_bound).abs() <= 1e-12 * st);
        prop_assert!(phi.phi(r).powf(s - t) * st <= ss * (1.0 + 1e-12));
        prop_assert!(ss <= r.powf(s - t) * st * (1.0 + 1e-12));
    }

    #[test]
    fn certificate_below_cover(seed in any::<u64>(), phi in gauge(), r in 0.01f64..0.3, s in 0.0f64..2.0) {
        let cloud = random_cloud(seed, 200, 2);
        let upper = cover_sum(&cloud, r, s, &phi, &CoverConfig::default()).unwrap().upper_bound;
        let w = ProbabilityVector::uniform(cloud.len()).unwrap();
        let lower = cover_sum_lower_certificate(&cloud, &w, r, s, &phi).unwrap();
        prop_assert!(lower <= upper * (1.0 + 1e-12), "{lower} > {upper}");
        let greedy = cover_sum(&cloud, r, s, &phi, &CoverConfig::default().with_strategy("greedy")).unwrap().upper_bound;
        prop_assert!(lower <= greedy * (1.0 + 1e-12));
    }

    #[test]
    fn box_counts_non_increasing(seed in any::<u64>(), d1 in 0.005f64..0.5, d2 in 0.005f64..0.5) {
        let cloud = random_cloud(seed, 400, 2);
        let (small, big) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        // Cells anchored at the same corner nest only for ratios that are powers of 2.
        let big = small * 2f64.powi((big / small).log2().floor() as i32);
        prop_assert!(box_count(&cloud, small).unwrap() >= box_count(&cloud, big).unwrap());
    }
}

#[test]
fn capacity_curves_are_deterministic() {
    let cloud = random_cloud(4, 40, 2);
    let phi = AdmissibleFn::theta(0.5).unwrap();
    let cfg = CapacityConfig::default();
    let a = capacity_profile(&cloud, 0.1, 0.7, 1.0, &phi, &cfg).unwrap();
    let b = capacity_profile(&cloud, 0.1, 0.7, 1.0, &phi, &cfg).unwrap();
    assert_eq!(a.ln_capacity.to_bits(), b.ln_capacity.to_bits());
    assert_eq!(a.equilibrium, b.equilibrium);
}

#[test]
fn kernel_matrix_is_symmetric() {
    let k = KernelMatrix::from_fn(5, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs())).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            assert_eq!(k.get(i, j), k.get(j, i));
        }
    }
}
