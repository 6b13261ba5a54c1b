use proptest::prelude::*;

use cdyn::graph::{rhs_graph, SpaceQuadrature};
use cdyn::grid::{embed_piecewise, l2_distance, project_discrete};
use cdyn::mass::{discretize_mass_law, SourceKernel};
use cdyn::mean_field::{empirical_measure, pushforward_measure, source_term, wasserstein1, ParticleMeasure};
use cdyn::micro::rhs_micro;
use cdyn::{AgentEnsemble, FieldPair, GridFunction, InteractionKernel, MassLaw, Quadrature};

fn kernel(pick: u8, radius: f64) -> InteractionKernel {
    match pick % 3 {
        0 => InteractionKernel::Linear,
        1 => InteractionKernel::RationalRadial,
        _ => InteractionKernel::compact_sine(radius).unwrap(),
    }
}

fn ensemble() -> impl Strategy<Value = AgentEnsemble> {
    (1usize..12).prop_flat_map(|n| {
        (
            prop::collection::vec(-2.0..2.0f64, n),
            prop::collection::vec(0.05..3.0f64, n),
        )
            .prop_map(|(x, m)| AgentEnsemble::new(1, x, m).unwrap())
    })
}

fn unit_mean(mut e: AgentEnsemble) -> AgentEnsemble {
    let mean = e.total_weight() / e.len() as f64;
    e.weights.iter_mut().for_each(|w| *w /= mean);
    e
}

proptest! {
    #[test]
    fn projection_inverts_embedding(v in prop::collection::vec(-5.0..5.0f64, 1..40)) {
        let g = embed_piecewise(&v, 1).unwrap();
        let back = project_discrete(&g, v.len(), Quadrature::default()).unwrap();
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn l2_is_refinement_invariant(
        f in prop::collection::vec(-3.0..3.0f64, 1..9),
        g in prop::collection::vec(-3.0..3.0f64, 1..9),
        a in 1usize..4,
        b in 1usize..4,
    ) {
        let (f, g) = (GridFunction::scalar(f).unwrap(), GridFunction::scalar(g).unwrap());
        let d = l2_distance(&f, &g).unwrap();
        prop_assert!((d - l2_distance(&g, &f).unwrap()).abs() <= 1e-14);
        prop_assert!((d - l2_distance(&f.refine(a), &g.refine(b)).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn pushforward_of_embedding_is_empirical(e in ensemble()) {
        let fp = FieldPair::from_ensemble(&e);
        let d = wasserstein1(&empirical_measure(&e).unwrap(), &pushforward_measure(&fp).unwrap()).unwrap();
        prop_assert_eq!(d, 0.0);
    }

    #[test]
    fn grid_aligned_rates_equal_micro_rates(e in ensemble(), pick in 0u8..3, radius in 0.2..2.0f64, gain in 0.1..3.0f64) {
        let k = kernel(pick, radius);
        for law in [
            MassLaw::Zero,
            MassLaw::group_influence(k.clone()),
            MassLaw::psi_sk(SourceKernel::PairTanh { gain }),
        ] {
            let (dx, dm) = rhs_micro(&e, &k, &law).unwrap();
            let r = rhs_graph(&FieldPair::from_ensemble(&e), &k, &law, SpaceQuadrature::GridAligned).unwrap();
            for (a, b) in dx.iter().chain(&dm).zip(r.x.values().iter().chain(r.m.values())) {
                prop_assert!((a - b).abs() <= 1e-12, "{} vs {} under {}", a, b, law.name());
            }
        }
    }

    #[test]
    fn group_influence_is_its_factorized_form(e in ensemble(), pick in 0u8..3, radius in 0.2..2.0f64) {
        let e = unit_mean(e);
        let k = kernel(pick, radius);
        let x = e.position_field();
        let m = e.weight_field();
        let direct = discretize_mass_law(&MassLaw::group_influence(k.clone()), &x, &m).unwrap();
        let factored = discretize_mass_law(&MassLaw::psi_sk(SourceKernel::GroupInfluence(k)), &x, &m).unwrap();
        for (a, b) in direct.iter().zip(&factored) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn skew_sources_are_neutral(e in ensemble(), gain in 0.1..3.0f64, radius in 0.2..2.0f64) {
        let mu = empirical_measure(&e).unwrap();
        for s in [SourceKernel::PairTanh { gain }, SourceKernel::GroupInfluence(InteractionKernel::compact_sine(radius).unwrap())] {
            let h = source_term(&mu, &s).unwrap();
            prop_assert!(h.iter().sum::<f64>().abs() <= 1e-10);
        }
    }

    #[test]
    fn translation_moves_w1_by_the_shift(e in ensemble(), shift in -3.0..3.0f64) {
        let mu = empirical_measure(&unit_mean(e)).unwrap();
        let moved: Vec<f64> = mu.locations().iter().map(|x| x + shift).collect();
        let nu = ParticleMeasure::new(1, moved, mu.masses()).unwrap();
        let d = wasserstein1(&mu, &nu).unwrap();
        prop_assert!((d - shift.abs() * mu.total_mass()).abs() <= 1e-12);
    }
}
