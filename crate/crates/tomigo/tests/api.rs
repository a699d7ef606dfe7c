mod common;

use common::rest::*;
use common::*;

#[test]
fn full_rest_flow() {
    let dir = tempfile::tempdir().unwrap();
    check_full_flow(&TestServer::start(mock_service(dir.path())));
}

#[test]
fn errors_are_problem_details() {
    let dir = tempfile::tempdir().unwrap();
    check_problem_details(&TestServer::start(mock_service(dir.path())));
}

#[test]
fn concurrent_mutations_yield_exactly_one_conflict() {
    let dir = tempfile::tempdir().unwrap();
    check_concurrent_mutations(dir.path());
}

#[test]
fn crash_mid_write_serves_previous_version() {
    let dir = tempfile::tempdir().unwrap();
    check_crash_safety(dir.path());
}
