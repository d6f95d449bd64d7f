use approx::assert_relative_eq;
use grantfree_aoi::asymptotics::{special_case_aoi_noma, special_case_p_fail};
use grantfree_aoi::markov::{analyze, failure_probability, renewal_moments, transitions, update_delay_pmf};
use grantfree_aoi::{Config, GenerationModel};

#[test]
fn failure_probability_is_pmf_complement() {
    for cfg in [Config::noma(12, 5, 3).with_fixed_ptx(0.3), Config::oma(9, 4)] {
        let model = transitions(&cfg).unwrap();
        let pmf = update_delay_pmf(&model, cfg.slots_per_frame);
        let head: f64 = pmf.iter().sum();
        assert_relative_eq!(failure_probability(&model, cfg.slots_per_frame), 1.0 - head, epsilon = 1e-12);
    }
}

#[test]
fn pmf_sums_to_one_with_enough_slots() {
    let model = transitions(&Config::noma(6, 1, 2).with_fixed_ptx(0.5)).unwrap();
    let total: f64 = update_delay_pmf(&model, 2_000).iter().sum();
    assert_relative_eq!(total, 1.0, epsilon = 1e-12);
}

#[test]
fn special_case_agrees_with_full_chain() {
    for m in [2, 3, 8, 40, 100] {
        for ptx in [0.05, 0.3, 0.9, 1.0] {
            let cfg = Config::noma(m, 1, 2).with_fixed_ptx(ptx);
            let model = transitions(&cfg).unwrap();
            let pf = special_case_p_fail(ptx, m).unwrap();
            assert_relative_eq!(failure_probability(&model, 1), pf, epsilon = 1e-12);
            if pf < 0.999 {
                let full = analyze(&cfg).unwrap().gar;
                let closed = special_case_aoi_noma(ptx, m, 6.0).unwrap();
                assert_relative_eq!(full, closed, max_relative = 1e-9);
            }
        }
    }
}

#[test]
fn gaw_never_exceeds_gar_and_matches_at_one_slot() {
    for n in [1, 2, 5, 10] {
        let cfg = Config::noma(10, n, 4).with_fixed_ptx(0.25);
        let aoi = analyze(&cfg).unwrap();
        assert!(aoi.gaw <= aoi.gar + 1e-12);
        if n == 1 {
            assert_relative_eq!(aoi.gaw, aoi.gar, max_relative = 1e-12);
        }
        assert_eq!(aoi.for_model(GenerationModel::Gaw), aoi.gaw);
    }
}

#[test]
fn moment_identities() {
    let cfg = Config::oma(5, 3).with_fixed_ptx(0.2);
    let mo = renewal_moments(&transitions(&cfg).unwrap(), 3, 6.0).unwrap();
    let frame = 18.0;
    assert_relative_eq!(mo.e_y, frame * mo.e_x, max_relative = 1e-12);
    assert!(mo.e_y2 >= mo.e_y * mo.e_y);
    assert!(mo.e_s >= 6.0 && mo.e_s <= frame);
    assert!(mo.e_s2 >= mo.e_s * mo.e_s - 1e-9);
}
