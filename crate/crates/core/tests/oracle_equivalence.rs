use grantfree_aoi::markov::transitions;
use grantfree_aoi::oracle::{enumerate_noma_slot, enumerate_oma_slot};
use grantfree_aoi::{feasibility_probability, Config, Power, TxPower};

#[test]
fn noma_closed_form_rows_match_enumeration() {
    let mut worst = 0.0_f64;
    for k in 2..=4 {
        for &ptx in &[0.3, 0.7, 1.0] {
            for m in 1..=6 {
                let model = transitions(&Config::noma(m, 1, k).with_fixed_ptx(ptx)).unwrap();
                for j in 0..m {
                    let dist = enumerate_noma_slot(m - j, k, ptx, &vec![1.0; k]).unwrap();
                    for i in 0..=k.min(m - j - 1) {
                        worst = worst.max((model.entry(j, j + i) - dist.advance(i)).abs());
                    }
                    worst = worst.max((model.absorb(j) - dist.absorb()).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-9, "largest deviation {worst:e}");
}

#[test]
fn oma_rows_match_enumeration_with_outage() {
    let powers = [TxPower::Finite(1.0), TxPower::Finite(100.0), Power::Infinite];
    for power in powers {
        for m in 2..=8 {
            let cfg = Config::oma(m, 1).with_fixed_ptx(0.4).with_power(power);
            let model = transitions(&cfg).unwrap();
            let success = feasibility_probability(cfg.epsilon(), power);
            for j in 0..m {
                let dist = enumerate_oma_slot(m - j, 0.4, success).unwrap();
                assert!((model.entry(j, j) - dist.advance(0)).abs() <= 1e-12);
                if j + 1 < m {
                    assert!((model.entry(j, j + 1) - dist.advance(1)).abs() <= 1e-12);
                }
                assert!((model.absorb(j) - dist.absorb()).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn adaptive_oma_rows_match_enumeration() {
    let m = 7;
    let model = transitions(&Config::oma(m, 1)).unwrap();
    for j in 0..m {
        let dist = enumerate_oma_slot(m - j, 1.0 / (m - j) as f64, 1.0).unwrap();
        assert!((model.absorb(j) - dist.absorb()).abs() <= 1e-12);
    }
}

#[test]
fn rows_are_stochastic_up_to_two_hundred_users() {
    for m in [2, 10, 50, 200] {
        for k in [2, 4] {
            for ptx in [0.01, 0.2, 1.0] {
                let model = transitions(&Config::noma(m, 1, k).with_fixed_ptx(ptx)).unwrap();
                assert!(model.max_row_deviation() <= 1e-12, "M={m} K={k} ptx={ptx}");
                for j in 0..m {
                    assert!(model.band_row(j).iter().all(|&p| p >= 0.0));
                    assert!(model.absorb(j) >= 0.0);
                }
            }
        }
        let oma = transitions(&Config::oma(m, 1)).unwrap();
        assert!(oma.max_row_deviation() <= 1e-12);
    }
}
