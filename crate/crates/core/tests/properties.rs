use kronred::io;
use kronred::metrics;
use kronred::numerics::{self, NULL_TOL};
use kronred::phasor;
use kronred::random_network::{self, RandomNetworkSpec};
use kronred::reduction::{self, PStrategy};
use kronred::simulation::{self, SolverConfig};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn network_from_seed(seed: u64) -> kronred::ValidatedNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_network::random_network(&mut rng, &RandomNetworkSpec::default())
}

fn short_run() -> SolverConfig {
    SolverConfig::new(1e-3, 0.3, 3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn incidence_has_rank_n_minus_one(seed in any::<u64>()) {
        let net = network_from_seed(seed);
        let b = net.incidence().to_real();
        prop_assert_eq!(numerics::numerical_rank(&b, NULL_TOL), net.n_nodes() - 1);
        let ones = DMatrix::from_element(1, net.n_nodes(), 1.0);
        prop_assert_eq!((ones * &b).amax(), 0.0);
    }

    #[test]
    fn reduced_order_is_edges_minus_interior(seed in any::<u64>()) {
        let net = network_from_seed(seed);
        let b0 = net.partition().b0;
        for s in PStrategy::ALL {
            let model = reduction::reduce(&net, s).unwrap();
            prop_assert_eq!(model.order(), net.n_edges() - net.n_interior());
            prop_assert!((&b0 * &model.p).amax() < 1e-12);
            prop_assert!(model.lhat.clone().cholesky().is_some());
        }
    }

    #[test]
    fn tree_basis_is_integer(seed in any::<u64>()) {
        let net = network_from_seed(seed);
        let p = reduction::build_p(&net, PStrategy::TreeElimination).unwrap().into_matrix();
        prop_assert!(p.iter().all(|x| x.fract() == 0.0));
    }

    #[test]
    fn kron_reduction_has_zero_row_sums(seed in any::<u64>(), omega in 0.01f64..100.0) {
        let net = network_from_seed(seed);
        let y = phasor::admittance(&net, omega).unwrap();
        let yr = phasor::kron_reduce(&y).unwrap().yr;
        let scale = numerics::max_abs_complex(&yr);
        for row in yr.row_iter() {
            let sum: Complex64 = row.iter().sum();
            prop_assert!(sum.norm() <= 1e-10 * scale);
        }
        prop_assert!(numerics::max_abs_complex(&(&yr - yr.transpose())) <= 1e-10 * scale);
    }

    #[test]
    fn kron_reduction_ignores_edge_orientation(seed in any::<u64>(), k in any::<prop::sample::Index>()) {
        let net = network_from_seed(seed);
        let flipped = net.with_flipped_edge(k.index(net.n_edges()));
        let a = phasor::kron_reduce(&phasor::admittance(&net, 3.0).unwrap()).unwrap().yr;
        let b = phasor::kron_reduce(&phasor::admittance(&flipped, 3.0).unwrap()).unwrap().yr;
        prop_assert!(numerics::max_abs_complex(&(a - &b)) <= 1e-12 * numerics::max_abs_complex(&b));
    }

    #[test]
    fn injections_balance_and_match_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network::random_network(&mut rng, &RandomNetworkSpec::default());
        let f0 = random_network::random_consistent_flows(&mut rng, &net, 5.0);
        let x = random_network::random_excitation(&mut rng, net.n_boundary());
        let model = reduction::reduce(&net, PStrategy::ModalDiagonalizing).unwrap();
        let red = simulation::simulate_reduced(&model, &x, &f0, &short_run()).unwrap();
        let dae = simulation::simulate_dae_oracle(&net, &x, &f0, &short_run()).unwrap();
        prop_assert!(red.max_injection_imbalance() <= 1e-9 * red.max_abs_injection().max(1.0));
        prop_assert!(metrics::relative_injection_error(&red, &dae).unwrap() <= 1e-8);
    }
}

#[test]
fn model_file_round_trip_reproduces_trajectory_bit_for_bit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let net = random_network::random_network(&mut rng, &RandomNetworkSpec::default());
    let f0 = random_network::random_consistent_flows(&mut rng, &net, 5.0);
    let x = random_network::random_excitation(&mut rng, net.n_boundary());
    let labels = io::ChannelLabels::for_network(&net);
    for s in PStrategy::ALL {
        let model = reduction::reduce(&net, s).unwrap();
        let reread = io::model_from_json(&io::model_to_json(&model)).unwrap();
        assert_eq!(reread, model);
        let a = simulation::simulate_reduced(&model, &x, &f0, &short_run()).unwrap();
        let b = simulation::simulate_reduced(&reread, &x, &f0, &short_run()).unwrap();
        assert_eq!(
            io::trajectory_csv_string(&a, &labels),
            io::trajectory_csv_string(&b, &labels)
        );
    }
}

#[test]
fn network_json_round_trip() {
    let net = network_from_seed(5);
    let text = io::network_to_json(&net.to_network());
    let back = kronred::validate(&io::parse_network(&text).unwrap()).unwrap();
    assert_eq!(back, net);
}
