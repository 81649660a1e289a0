//! Kept in its own binary: it sets a process-wide environment variable.

#[test]
fn element_cap_comes_from_the_environment() {
    std::env::set_var("ARBOR_MAX_ELEMENTS", "100");
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = arbor::run(
        ["arbor", "enumerate", "grigorchuk", "--depth", "4"],
        &mut out,
        &mut err,
    );
    assert_eq!(code, arbor::EXIT_CAPACITY);

    let code = arbor::run(
        [
            "arbor",
            "enumerate",
            "grigorchuk",
            "--depth",
            "2",
            "--format",
            "json",
        ],
        &mut out,
        &mut err,
    );
    assert_eq!(code, arbor::EXIT_OK);
    let report: serde_json::Value = serde_json::from_slice(&out).unwrap();
    assert_eq!(report["config"]["max_elements"], 100);
}
