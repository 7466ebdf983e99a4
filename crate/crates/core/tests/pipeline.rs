use quantdim::antichain::DEFAULT_CAP;
use quantdim::{
    classify, discretize, lloyd, sample_measure, Antichain, Classification, CylinderGeometry, LloydOptions,
    MarkovSystem, SccDecomposition, Scope, SpectralOptions,
};

const CONFIG: &str = r#"{
  "order_r": 1.0,
  "transition": [[0.25, 0.25, 0.5, 0.0], [0.25, 0.25, 0.5, 0.0], [0.0, 0.0, 0.5, 0.5], [0.0, 0.0, 0.5, 0.5]],
  "ratios": [[0.25, 0.25, 0.125, 0.0], [0.25, 0.25, 0.125, 0.0], [0.0, 0.0, 0.125, 0.125], [0.0, 0.0, 0.125, 0.125]],
  "initial": [0.25, 0.25, 0.25, 0.25],
  "separation_t": 0.5
}"#;

fn system() -> MarkovSystem {
    MarkovSystem::from_json(CONFIG).expect("valid config")
}

#[test]
fn json_to_classification() {
    let sys = system();
    assert_eq!(sys.separation_t(), Some(0.5));
    let dec = SccDecomposition::new(&sys);
    let report = classify(&sys, &dec, &SpectralOptions::default()).unwrap();
    assert!((report.s_r - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(report.classification, Classification::LowerCoefficientInfinite);
}

#[test]
fn antichain_to_codebook() {
    let sys = system();
    let chain = Antichain::lambda(&sys, 2, DEFAULT_CAP).unwrap();
    assert!(chain.is_prefix_free());
    assert!(chain.is_maximal(&sys, &Scope::all()));

    let geom = CylinderGeometry::realize(&sys, None).unwrap();
    assert_eq!(geom.separation_t(), 0.5);
    let measure = discretize(&sys, &chain, &geom).unwrap();
    assert_eq!(measure.len(), chain.phi());
    assert!((measure.total_weight() - 1.0).abs() < 1e-12);

    let mut last = f64::INFINITY;
    for n in [1, 2, 4, 8] {
        let q = lloyd(&measure, n, sys.order_r(), &LloydOptions::default()).unwrap();
        assert_eq!(q.codebook.len(), n);
        assert!(q.distortion <= last + 1e-15);
        last = q.distortion;
    }
}

#[test]
fn samples_fall_in_their_cylinders() {
    let sys = system();
    let geom = CylinderGeometry::realize(&sys, None).unwrap();
    let samples = sample_measure(&geom, &sys, 500, 1e-4, 11).unwrap();
    assert_eq!(samples.len(), 500);
    for s in &samples {
        let cell = geom.interval(&s.word);
        assert!(cell.left <= s.position && s.position <= cell.right());
        assert!(cell.len <= 1e-4);
    }
}
