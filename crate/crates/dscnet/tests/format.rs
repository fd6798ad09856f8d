use dscnet::format::{Instance, ModelSpec};

#[test]
fn model_blocks_parse_from_hand_written_json() {
    let text = r#"{
        "nodes": [{"id": 0, "x": 0.1, "y": 0.2}, {"id": 1, "x": 0.9, "y": 0.5}],
        "edges": [{"tail": 0, "head": 1, "capacity": 22.0, "cost": 1.0}],
        "sources": [0],
        "terminals": [1],
        "model": {"type": "ceo", "sigma_x2": 0.01, "sigma_i2": [0.005], "D": 0.003}
    }"#;
    let inst: Instance = serde_json::from_str(text).unwrap();
    assert_eq!(inst.model, Some(ModelSpec::Ceo { sigma_x2: 0.01, sigma_i2: vec![0.005], distortion: 0.003 }));
    let net = inst.network().unwrap();
    assert_eq!(net.nodes()[1].position, Some([0.9, 0.5]));
    assert!(inst.ceo().is_ok());
    assert!(inst.multicast().is_err());

    let sw: ModelSpec = serde_json::from_str(r#"{"type": "gaussian-sw", "sigma2": 1, "c": 1, "beta": 1, "delta": 0.01}"#).unwrap();
    assert_eq!(sw, ModelSpec::default_sw());
    let back: ModelSpec = serde_json::from_str(&serde_json::to_string(&sw).unwrap()).unwrap();
    assert_eq!(back, sw);
}

#[test]
fn malformed_instances_are_rejected() {
    let cyclic = r#"{"nodes": [{"id": 0}, {"id": 1}],
        "edges": [{"tail": 0, "head": 1, "capacity": 1, "cost": 1}, {"tail": 1, "head": 0, "capacity": 1, "cost": 1}],
        "sources": [0], "terminals": [1]}"#;
    let inst: Instance = serde_json::from_str(cyclic).unwrap();
    assert!(inst.network().is_err());
    let half = r#"{"nodes": [{"id": 0, "x": 1.0}, {"id": 1}], "edges": [], "sources": [0], "terminals": [1]}"#;
    assert!(serde_json::from_str::<Instance>(half).unwrap().network().is_err());
    let unordered = r#"{"nodes": [{"id": 1}, {"id": 0}], "edges": [], "sources": [0], "terminals": [1]}"#;
    assert!(serde_json::from_str::<Instance>(unordered).unwrap().network().is_err());
}
