use fsc_core::bhatt::{bhattacharyya, ChannelKernel, DistanceMatrix};
use fsc_core::codebook::{emit_codeword, euler_circuit, expurgate, round_type, MarkovTypeSpec};
use fsc_core::exponent::{e0, maximize_e0, CostModel, PairDistribution, SolverOptions};
use fsc_core::fsm::{augment, feasible_pairs, shift_register, FeasiblePairSet, StateMachine};
use fsc_core::isi::{build_isi_machine, e0_isi, exact_moments, gray_stats, induced_pair_distribution, GrayOptions, IsiSpec};
use proptest::prelude::*;

fn simplex(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn distances(n: usize) -> impl Strategy<Value = DistanceMatrix> {
    prop::collection::vec(0.0f64..5.0, n * n).prop_map(move |v| DistanceMatrix::from_fn(n, |i, j| v[i * n + j]).unwrap())
}

fn binary_isi(h: Vec<f64>) -> IsiSpec {
    IsiSpec {
        h,
        sigma2: 1.0,
        levels: vec![-1.0, 1.0],
        gamma: 1.0,
    }
}

/// A shift-consistent law on `(k+1)`-tuples: stationary Markov chain on
/// `k`-tuples driven by per-state input probabilities.
fn markov_tuples(k: usize, p_one: &[f64]) -> Vec<f64> {
    if k == 0 {
        return vec![1.0 - p_one[0], p_one[0]];
    }
    let states = 1usize << k;
    let step = |s: usize, x: usize| ((s << 1) | x) & (states - 1);
    let mut pi = vec![1.0 / states as f64; states];
    for _ in 0..5000 {
        let mut next = vec![0.0; states];
        for s in 0..states {
            next[step(s, 0)] += pi[s] * (1.0 - p_one[s]);
            next[step(s, 1)] += pi[s] * p_one[s];
        }
        pi = next;
    }
    let mut q = vec![0.0; states * 2];
    for s in 0..states {
        q[2 * s] = pi[s] * (1.0 - p_one[s]);
        q[2 * s + 1] = pi[s] * p_one[s];
    }
    let total: f64 = q.iter().sum();
    q.iter().map(|v| v / total).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn e0_is_permutation_equivariant(d in distances(5), q in simplex(5), perm in Just((0..5).collect::<Vec<usize>>()).prop_shuffle()) {
        let pd = DistanceMatrix::from_fn(5, |i, j| d.get(perm[i], perm[j])).unwrap();
        let mut pq = vec![0.0; 5];
        for i in 0..5 {
            pq[i] = q[perm[i]];
        }
        prop_assert!((e0(&q, &d).unwrap() - e0(&pq, &pd).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn e0_scales_linearly_and_is_nonnegative(d in distances(4), q in simplex(4), c in 0.1f64..10.0) {
        let v = e0(&q, &d).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert!((e0(&q, &d.scaled(c)).unwrap() - c * v).abs() < 1e-10 * (1.0 + c * v));
    }

    #[test]
    fn discrete_distances_are_a_semimetric_table(rows in prop::collection::vec(simplex(3), 4)) {
        let pairs = FeasiblePairSet::from_arcs(2, &[(0, 0, 0), (0, 1, 1), (1, 0, 0), (1, 1, 1)]).unwrap();
        let d = bhattacharyya(&ChannelKernel::discrete(rows).unwrap(), &pairs).unwrap();
        for i in 0..4 {
            prop_assert!(d.get(i, i).abs() < 1e-12);
            for j in 0..4 {
                prop_assert!(d.get(i, j) >= 0.0);
                prop_assert_eq!(d.get(i, j), d.get(j, i));
            }
        }
    }

    #[test]
    fn gaussian_distances_ignore_a_common_shift(means in prop::collection::vec(-3.0f64..3.0, 4), shift in -10.0f64..10.0, var in 0.1f64..4.0) {
        let m = StateMachine::new(vec!["0".into()], vec![0.0, 1.0], vec![0, 0], None).unwrap();
        let pairs = feasible_pairs(&augment(&m).unwrap().machine).unwrap();
        let a = bhattacharyya(&ChannelKernel::gaussian(means.clone(), var).unwrap(), &pairs).unwrap();
        let b = bhattacharyya(&ChannelKernel::gaussian(means.iter().map(|x| x + shift).collect(), var).unwrap(), &pairs).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                prop_assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-9);
                let dm = means[i] - means[j];
                prop_assert!((a.get(i, j) - dm * dm / (8.0 * var)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn circuits_realize_their_type(k in 1usize..=2, seed in any::<u64>(), p in prop::collection::vec(0.2f64..0.8, 4), n in 8usize..64) {
        let machine = shift_register(&[-1.0, 1.0], k).unwrap();
        let pairs = feasible_pairs(&machine).unwrap();
        let q = markov_tuples(k, &p);
        let spec = round_type(&q, &pairs, n).unwrap();
        prop_assert_eq!(spec.counts.iter().sum::<usize>(), n);
        let path = euler_circuit(&spec, &pairs, 0, seed).unwrap();
        prop_assert_eq!(MarkovTypeSpec::of_path(&path, &pairs).unwrap(), spec);
        let word = emit_codeword(&path, &machine).unwrap();
        let mut s = path[0];
        for (t, &x) in word.iter().enumerate() {
            s = machine.next(s, x);
            prop_assert_eq!(s, path[(t + 1) % n]);
        }
    }

    #[test]
    fn isi_closed_form_matches_generic(k in 0usize..=2, p in prop::collection::vec(0.05f64..0.95, 4), h in prop::collection::vec(-2.0f64..2.0, 3)) {
        let spec = binary_isi(h[..=k].to_vec());
        prop_assume!(spec.validate().is_ok());
        let ch = build_isi_machine(&spec).unwrap();
        let d = bhattacharyya(&ch.kernel, &ch.pairs).unwrap();
        let q = markov_tuples(k, &p);
        let pd = induced_pair_distribution(&q, &spec, &ch).unwrap();
        prop_assert!((e0_isi(&q, &spec).unwrap() - e0(pd.as_slice(), &d).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn expurgation_keeps_distinct_candidates(seed in any::<u64>(), m in 1usize..5) {
        let machine = shift_register(&[-1.0, 1.0], 1).unwrap();
        let pairs = feasible_pairs(&machine).unwrap();
        let spec = round_type(&[0.25; 4], &pairs, 16).unwrap();
        let paths: Vec<Vec<usize>> = (0..2 * m - 1).map(|i| euler_circuit(&spec, &pairs, 0, seed ^ i as u64).unwrap()).collect();
        let d = DistanceMatrix::from_fn(4, |i, j| if i == j { 0.0 } else { 0.5 }).unwrap();
        let sel = expurgate(&paths, &pairs, &d, m, None).unwrap();
        let mut kept = sel.kept.clone();
        kept.sort_unstable();
        kept.dedup();
        prop_assert_eq!(kept.len(), m);
        prop_assert!(sel.kept.iter().all(|&i| i < paths.len()));
    }

    #[test]
    fn gray_series_never_exceeds_error_power(amp in 0.3f64..4.0, delta in 0.1f64..1.0) {
        let st = gray_stats(amp, delta, 1.1, 3, GrayOptions { max_terms: 300, ..GrayOptions::default() }).unwrap();
        let (_, ee) = exact_moments(amp, delta);
        prop_assert!(st.eps.iter().all(|&e| e >= 0.0));
        prop_assert!(st.r_ee[0] <= ee * (1.0 + 1e-9));
        prop_assert!((st.r_ee[0] + st.tail_power - ee).abs() < 1e-9 * ee.max(1e-300) + 1e-15);
        for l in 1..=3 {
            prop_assert!(st.r_ee[l].abs() <= st.r_ee[0] + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn optimum_grows_with_budget(h1 in -1.0f64..1.0, g in 0.0f64..0.9) {
        let spec = binary_isi(vec![1.0, h1]);
        let ch = build_isi_machine(&spec).unwrap();
        let d = bhattacharyya(&ch.kernel, &ch.pairs).unwrap();
        // costs 0 for -1 and 1 for +1
        let at = |gamma: f64| {
            let cost = CostModel { phi: vec![0.0, 1.0], gamma };
            maximize_e0(&d, &ch.pairs, &cost, &SolverOptions::default()).unwrap().value
        };
        prop_assert!(at(g) <= at(g + 0.1) + 1e-7);
    }

    #[test]
    fn optimum_is_stationary_and_within_budget(h1 in -1.0f64..1.0, g in 0.1f64..1.0) {
        let spec = binary_isi(vec![1.0, h1]);
        let ch = build_isi_machine(&spec).unwrap();
        let d = bhattacharyya(&ch.kernel, &ch.pairs).unwrap();
        let cost = CostModel { phi: vec![0.0, 1.0], gamma: g };
        let res = maximize_e0(&d, &ch.pairs, &cost, &SolverOptions::default()).unwrap();
        let q = res.argmax.distribution();
        prop_assert!(PairDistribution::new(q.clone(), &ch.pairs).is_ok());
        let spend: f64 = cost.pair_costs(&ch.pairs).unwrap().iter().zip(&q).map(|(c, p)| c * p).sum();
        prop_assert!(spend <= g + 1e-7);
        prop_assert!((e0(&q, &d).unwrap() - res.value).abs() < 1e-9 || !res.concave);
    }
}
