use opo_wasm_demo::{bifurcation, entanglement, spectrum};

#[test]
fn exports_return_json() {
    let b: serde_json::Value = serde_json::from_str(&bifurcation(1.2, 0.2, 3.0, 40).unwrap()).unwrap();
    assert_eq!(b["samples"].as_array().unwrap().len(), 40);
    assert!((b["special"]["hopf"][0].as_f64().unwrap() - 0.1).abs() < 1e-12);

    let s: serde_json::Value =
        serde_json::from_str(&spectrum(1.2, 0.2, 0.1, "phi-pi/4", "Y", 2.0, 5).unwrap()).unwrap();
    assert!((s["value"][0].as_f64().unwrap() - 0.1002197).abs() < 1e-6);

    let e: serde_json::Value = serde_json::from_str(&entanglement(0.14, 5).unwrap()).unwrap();
    assert_eq!(e.as_array().unwrap().len(), 5);
}
