//! η-Wasserstein distance against a generic LP solver on the dual program
//! with every pairwise constraint written out.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use mkrein::measures::{eta_cost, eta_wasserstein, DiscreteMeasure};
use proptest::prelude::*;

fn lp_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eta: f64) -> f64 {
    let mut support: Vec<(f64, f64)> = Vec::new();
    for (m, sign) in [(mu, 1.0), (nu, -1.0)] {
        for (x, w) in m.iter() {
            match support.iter_mut().find(|(y, _)| *y == x) {
                Some(slot) => slot.1 += sign * w,
                None => support.push((x, sign * w)),
            }
        }
    }
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let h: Vec<_> = support
        .iter()
        .enumerate()
        .map(|(i, &(_, mass))| {
            // Objective is invariant under constants; pin h_0 = 0.
            let bounds = if i == 0 {
                (0.0, 0.0)
            } else {
                (f64::NEG_INFINITY, f64::INFINITY)
            };
            lp.add_var(mass, bounds)
        })
        .collect();
    for i in 0..support.len() {
        for j in 0..support.len() {
            if i != j {
                let d = eta_cost((support[i].0 - support[j].0).abs(), eta);
                lp.add_constraint([(h[i], 1.0), (h[j], -1.0)], ComparisonOp::Le, d);
            }
        }
    }
    lp.solve().expect("bounded feasible LP").objective()
}

#[test]
fn split_mass_against_midpoint() {
    let mu = DiscreteMeasure::uniform(&[0.0, 1.0]).unwrap();
    let nu = DiscreteMeasure::dirac(0.5).unwrap();
    let oracle = lp_oracle(&mu, &nu, 0.5);
    assert!((oracle - 0.5).abs() < 1e-9, "oracle {oracle}");
    assert!((eta_wasserstein(&mu, &nu, 0.5).unwrap() - oracle).abs() < 1e-9);
}

#[test]
fn far_diracs_pay_the_concave_cost() {
    for &t in &[0.3, 1.0, 4.0, 25.0] {
        let mu = DiscreteMeasure::dirac(0.0).unwrap();
        let nu = DiscreteMeasure::dirac(t).unwrap();
        let want = if t <= 1.0 { t } else { t.sqrt() };
        assert!((lp_oracle(&mu, &nu, 0.5) - want).abs() < 1e-9);
        assert!((eta_wasserstein(&mu, &nu, 0.5).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn long_moves_prefer_one_jump_over_a_chain() {
    // Moving mass 0 → 9 directly costs 3 while the chain through 3 and 6 costs
    // √3·3; the solver must not restrict itself to neighbouring arcs.
    let mu = DiscreteMeasure::new(&[0.0, 3.0, 6.0], Some(&[0.5, 0.25, 0.25])).unwrap();
    let nu = DiscreteMeasure::new(&[3.0, 6.0, 9.0], Some(&[0.25, 0.25, 0.5])).unwrap();
    let oracle = lp_oracle(&mu, &nu, 0.5);
    assert!((eta_wasserstein(&mu, &nu, 0.5).unwrap() - oracle).abs() < 1e-9);
}

fn measure(max_atoms: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec((-6.0f64..6.0, 0.05f64..1.0), 1..=max_atoms).prop_map(|pairs| {
        let (atoms, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        DiscreteMeasure::new(&atoms, Some(&weights)).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matches_lp_oracle(mu in measure(5), nu in measure(5), eta in 0.05f64..0.95) {
        let got = eta_wasserstein(&mu, &nu, eta).unwrap();
        let want = lp_oracle(&mu, &nu, eta);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want), "{got} vs {want}");
    }

    #[test]
    fn metric_axioms_on_three_atom_triples(
        a in measure(3), b in measure(3), c in measure(3), eta in 0.05f64..0.95
    ) {
        let ab = eta_wasserstein(&a, &b, eta).unwrap();
        let ba = eta_wasserstein(&b, &a, eta).unwrap();
        let bc = eta_wasserstein(&b, &c, eta).unwrap();
        let ac = eta_wasserstein(&a, &c, eta).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
        prop_assert!(ac <= ab + bc + 1e-10);
        prop_assert!((ab - lp_oracle(&a, &b, eta)).abs() <= 1e-9 * (1.0 + ab));
        prop_assert!(eta_wasserstein(&a, &a, eta).unwrap().abs() < 1e-12);
    }
}
