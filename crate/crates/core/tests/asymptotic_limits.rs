use grantfree_aoi::asymptotics::{
    aoi_ratio_asymptotic, asymptotic_aoi, oma_single_slot_aoi_at_optimum, optimal_ptx, solve_eta,
};
use grantfree_aoi::markov::analyze;
use grantfree_aoi::{Config, Scheme};

fn full_chain_ratio(m: usize) -> f64 {
    let noma = Config::noma(m, 1, 2).with_fixed_ptx(optimal_ptx(Scheme::Noma, m));
    let oma = Config::oma(m, 1).with_fixed_ptx(optimal_ptx(Scheme::Oma, m));
    analyze(&noma).unwrap().gar / analyze(&oma).unwrap().gar
}

#[test]
fn ratio_approaches_limit_monotonically() {
    let limit: f64 = aoi_ratio_asymptotic();
    let gaps: Vec<f64> = [50, 100, 200, 400].iter().map(|&m| (full_chain_ratio(m) - limit).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
    assert!(gaps[2] / limit < 0.03, "{gaps:?}");
}

#[test]
fn oma_asymptote_tracks_exact_value() {
    for m in [8, 20, 50, 200, 1000] {
        let exact: f64 = oma_single_slot_aoi_at_optimum(m, 1, 6.0);
        let asym: f64 = asymptotic_aoi(Scheme::Oma, m, 1, 6.0);
        assert!((asym - exact).abs() / exact < 0.05, "M={m}: {asym} vs {exact}");
        let chain = analyze(&Config::oma(m, 1).with_fixed_ptx(1.0 / m as f64)).unwrap().gar;
        assert!((chain - exact).abs() / exact < 1e-9, "M={m}: {chain} vs {exact}");
    }
}

#[test]
fn noma_asymptote_tracks_full_chain() {
    let eta = solve_eta::<f64>().eta;
    let m = 400;
    let chain = analyze(&Config::noma(m, 1, 2).with_fixed_ptx(eta / m as f64)).unwrap().gar;
    let asym: f64 = asymptotic_aoi(Scheme::Noma, m, 1, 6.0);
    assert!((chain - asym).abs() / asym < 0.02, "{chain} vs {asym}");
}
