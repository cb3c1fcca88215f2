//! Runs the argument-free examples so they stay in sync with the library.

#[allow(dead_code)]
mod quickstart {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/quickstart.rs"));
}

#[allow(dead_code)]
mod fit_csv {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/fit_csv.rs"));
}

#[allow(dead_code)]
mod objective_geometry {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/objective_geometry.rs"));
}

#[allow(dead_code)]
mod screening {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/screening.rs"));
}

#[allow(dead_code)]
mod grouping_effect {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/grouping_effect.rs"));
}

#[allow(dead_code)]
mod theoretical_lambda {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/theoretical_lambda.rs"));
}

#[allow(dead_code)]
mod custom_optimizer {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/custom_optimizer.rs"));
}

#[allow(dead_code)]
mod selection_rules {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/selection_rules.rs"));
}

#[test]
fn quickstart_example_runs() {
    quickstart::run_example().expect("quickstart example");
}

#[test]
fn fit_csv_example_runs() {
    fit_csv::run_example().expect("fit_csv example");
}

#[test]
fn objective_geometry_example_runs() {
    objective_geometry::run_example().expect("objective_geometry example");
}

#[test]
fn screening_example_runs() {
    screening::run_example().expect("screening example");
}

#[test]
fn grouping_effect_example_runs() {
    grouping_effect::run_example().expect("grouping_effect example");
}

#[test]
fn theoretical_lambda_example_runs() {
    theoretical_lambda::run_example().expect("theoretical_lambda example");
}

#[test]
fn custom_optimizer_example_runs() {
    custom_optimizer::run_example().expect("custom_optimizer example");
}

#[test]
fn selection_rules_example_runs() {
    selection_rules::run_example().expect("selection_rules example");
}
