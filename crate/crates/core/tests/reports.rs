use orlicz_core::acceptance::{run_suite, Suite};
use orlicz_core::report::{config_hash, Envelope};
use orlicz_core::solver::problem::dirac_problem;
use orlicz_core::solver::run_problem;
use orlicz_core::Exec;

#[test]
fn suite_reports_are_byte_identical() {
    let a = serde_json::to_string(&run_suite(Suite::Norms, 7, Exec::Parallel)).unwrap();
    let b = serde_json::to_string(&run_suite(Suite::Norms, 7, Exec::Sequential)).unwrap();
    assert_eq!(a, b);
    assert!(!a.contains("elapsed"));
}

#[test]
fn solve_reports_are_byte_identical_and_carry_the_hash() {
    let spec = dirac_problem(1, 128, &[4.0, 8.0]);
    let run = |exec| {
        let rep = run_problem(&spec, std::path::Path::new("."), exec).unwrap();
        serde_json::to_string(&Envelope::new("solve", &spec, &rep)).unwrap()
    };
    let a = run(Exec::Parallel);
    assert_eq!(a, run(Exec::Sequential));
    assert!(a.contains(&config_hash(&spec)));
    assert!(a.contains("\"tolerances\""));
}
