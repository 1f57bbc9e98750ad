mod common;

use introbust::bounds::{
    brute_force_max, do_search, lower_bound_br, sa_first_order, ve_marginal, verify, Backend, BoundsError, BrOptions,
    DEFAULT_WITNESS_CAP,
};
use std::sync::Arc;

use introbust::classifier::{nb_to_circuit, NaiveBayesModel};
use introbust::engine::upper_bound;
use introbust::{compile_model, CompileOptions, Decision, Evidence, InterventionSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::close;

#[test]
fn insurance_positive_rate() {
    let bn = common::network("insurance.bif");
    let ev = Evidence::from_pairs(&bn, &[("MedCost", "AboveThousand")]).unwrap();
    assert!(close(ve_marginal(&bn, &ev).unwrap(), 0.072, 5e-4));
}

#[test]
fn insurance_classifier_error_rates() {
    let bn = common::network("insurance.bif");
    let nb = NaiveBayesModel::from_network(&bn, "MedCost", &["Age", "MakeModel", "DrivHist"], 0.12).unwrap();
    let net = bn.augment(Arc::new(nb_to_circuit(&nb, "Pred").unwrap()), "Pred").unwrap();
    let rate = |pairs: &[(&str, &str)]| ve_marginal(&net, &Evidence::from_pairs(&net, pairs).unwrap()).unwrap();
    let fnr = rate(&[("MedCost", "AboveThousand"), ("Pred", "BelowThousand")]);
    let fpr = rate(&[("MedCost", "BelowThousand"), ("Pred", "AboveThousand")]);
    assert!(close(fnr, 0.02453, 5e-6), "{fnr}");
    assert!(close(fpr, 0.1981, 5e-5), "{fpr}");
}

#[test]
fn ve_matches_enumeration_on_full_instantiations() {
    let (bn, circuit) = common::toy();
    let net = bn.augment(circuit, "C1").unwrap();
    for x in common::instantiations(&net) {
        let ev = Evidence::full(&x);
        assert!(close(ve_marginal(&net, &ev).unwrap(), net.joint_probability_dense(&x), 1e-15));
    }
}

#[test]
fn empty_spec_reduces_to_the_marginal() {
    let (bn, circuit) = common::toy();
    let model = compile_model(&bn, circuit, "C1", &CompileOptions::default()).unwrap();
    let net = &model.network;
    let ev = Evidence::from_pairs(net, &[("accident", "1"), ("C1", "low")]).unwrap();
    let spec = InterventionSpec::empty();
    let p = ve_marginal(net, &ev).unwrap();
    assert!(close(p, 0.01924, 1e-12));

    let lb = lower_bound_br(net, &ev, &spec, Backend::Ve, &BrOptions::default()).unwrap();
    assert_eq!(lb.sweeps, 0);
    assert!(lb.converged);
    assert_eq!(lb.value, p);
    assert_eq!(brute_force_max(net, &ev, &spec, DEFAULT_WITNESS_CAP).unwrap().0, p);
    assert_eq!(do_search(net, &ev, &spec, DEFAULT_WITNESS_CAP).unwrap().0, p);
    assert_eq!(sa_first_order(net, &ev, &spec, Backend::Ve).unwrap().value, 0.0);
    assert!(close(upper_bound(&model.ac, net, &ev, &spec).unwrap(), p, 1e-12));
}

#[test]
fn do_search_on_one_binary_root() {
    let (bn, _) = common::three_node();
    let ev = Evidence::from_pairs(&bn, &[("Y", "0")]).unwrap();
    let spec = InterventionSpec::parametric(&bn, &["W"]).unwrap();
    let (v, choice) = do_search(&bn, &ev, &spec, DEFAULT_WITNESS_CAP).unwrap();
    // max(P(y0 | do w0), P(y0 | do w1)) = max(0.6, 0.2).
    assert!(close(v, 0.6, 1e-12));
    assert_eq!(choice[&bn.require_var("W").unwrap()], 0);
}

#[test]
fn first_order_is_exact_for_a_single_cpt() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let bn = common::random_network(&mut rng, 5, 3);
        let ev = common::random_evidence(&mut rng, &bn, 0.4);
        let spec = common::random_parametric(&mut rng, &bn, 1);
        if spec.intervenable.len() != 1 {
            continue;
        }
        let sa = sa_first_order(&bn, &ev, &spec, Backend::Ve).unwrap();
        let (bf, _) = brute_force_max(&bn, &ev, &spec, DEFAULT_WITNESS_CAP).unwrap();
        assert!(close(sa.value, bf, 1e-12), "{} vs {bf}", sa.value);
    }
}

#[test]
fn cap_is_reported() {
    let (bn, circuit) = common::toy();
    let net = bn.augment(circuit, "C1").unwrap();
    let ev = Evidence::new();
    let spec = InterventionSpec::parametric(&net, &["model", "class"]).unwrap();
    match brute_force_max(&net, &ev, &spec, 10.0) {
        Err(BoundsError::CapExceeded { required, cap }) => {
            assert_eq!(required, 64.0);
            assert_eq!(cap, 10.0);
        }
        other => panic!("expected cap error, got {other:?}"),
    }
}

#[test]
fn structural_specs_need_a_matching_circuit() {
    let (bn, circuit) = common::three_node();
    let model = compile_model(&bn, circuit, "Yhat", &CompileOptions::default()).unwrap();
    let net = &model.network;
    let spec = InterventionSpec::structural(net, &["W"], &[("W", &["X"])]).unwrap();
    let ev = Evidence::from_pairs(net, &[("Y", "0"), ("Yhat", "1")]).unwrap();
    let err = lower_bound_br(net, &ev, &spec, Backend::Ac(&model.ac), &BrOptions::default()).unwrap_err();
    assert!(matches!(err, BoundsError::BackendMismatch(_)));
}

#[test]
fn decisions_on_the_toy_network() {
    let (bn, circuit) = common::toy();
    let model = compile_model(&bn, circuit, "C1", &CompileOptions::default()).unwrap();
    let net = &model.network;
    let ev = Evidence::from_pairs(net, &[("accident", "1"), ("C1", "low")]).unwrap();
    for names in [&["model", "class"][..], &["model"], &["risky", "age"]] {
        let spec = InterventionSpec::parametric(net, names).unwrap();
        let (d, _) = verify(&model, &ev, &spec, 1.0, true, &BrOptions::default()).unwrap();
        assert_eq!(d, Decision::Robust);
    }
}

/// Searches random instances for a strict gap between the bounds and checks
/// that an epsilon inside it is inconclusive, and never robust when the
/// exact value exceeds epsilon.
#[test]
fn gap_instances_are_inconclusive() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut found = 0;
    for _ in 0..400 {
        let bn = common::random_network(&mut rng, 6, 3);
        let circuit = common::random_classifier(&mut rng, &bn);
        let Ok(model) = compile_model(&bn, circuit, "Yhat", &CompileOptions::default()) else {
            continue;
        };
        let net = &model.network;
        let spec = common::random_parametric(&mut rng, net, 2);
        if introbust::bounds::witness_space(net, &spec) > 5000.0 {
            continue;
        }
        let ev = common::random_evidence(&mut rng, net, 0.3);
        let options = BrOptions::default();
        let lb = lower_bound_br(net, &ev, &spec, Backend::Ve, &options).unwrap().value;
        let ub = upper_bound(&model.ac, net, &ev, &spec).unwrap();
        if ub - lb < 1e-6 {
            continue;
        }
        let eps = (lb + ub) / 2.0;
        let (d, report) = verify(&model, &ev, &spec, eps, false, &options).unwrap();
        assert_eq!(d, Decision::Inconclusive);
        assert!(report.lb <= report.ub + 1e-12);
        let (bf, _) = brute_force_max(net, &ev, &spec, DEFAULT_WITNESS_CAP).unwrap();
        if bf > eps {
            assert_ne!(d, Decision::Robust);
        }
        found += 1;
        if found >= 5 {
            break;
        }
    }
    assert!(found > 0, "no instance with a gap between the bounds");
}

#[test]
fn restarts_are_reproducible() {
    let (bn, circuit) = common::toy();
    let net = bn.augment(circuit, "C1").unwrap();
    let ev = Evidence::from_pairs(&net, &[("accident", "1"), ("C1", "low")]).unwrap();
    let spec = InterventionSpec::parametric(&net, &["model", "class", "risky"]).unwrap();
    let options = BrOptions {
        restarts: 6,
        seed: 99,
        ..BrOptions::default()
    };
    let a = lower_bound_br(&net, &ev, &spec, Backend::Ve, &options).unwrap();
    let b = lower_bound_br(&net, &ev, &spec, Backend::Ve, &options).unwrap();
    assert_eq!(a, b);
    let (bf, _) = brute_force_max(&net, &ev, &spec, DEFAULT_WITNESS_CAP).unwrap();
    assert!(a.value <= bf + 1e-12);
}
