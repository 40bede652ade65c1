use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use team_disclosure_ffi::*;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { td_string_free(s) };
    out
}

#[test]
fn solve_round_trip() {
    let spec = CString::new("k_majority:2,2").unwrap();
    let dist = CString::new("independent:1/2").unwrap();
    let mut p = ptr::null_mut();
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(td_protocol_parse(spec.as_ptr(), &mut p), TdStatus::Ok);
        assert_eq!(
            td_distribution_parse(dist.as_ptr(), 2, &mut d),
            TdStatus::Ok
        );
        let mut n = 0;
        assert_eq!(td_protocol_members(p, &mut n), TdStatus::Ok);
        assert_eq!(n, 2);
        let mut more = false;
        assert_eq!(
            td_protocol_requires_more_consensus(p, &mut more),
            TdStatus::Ok
        );
        assert!(more);
        let mut json = ptr::null_mut();
        assert_eq!(td_solve(p, d, &mut json), TdStatus::Ok);
        let json = take(json);
        assert!(json.contains("\"interior\""), "{json}");
        assert!(json.contains("\"1/3\""), "{json}");
        td_protocol_free(p);
        td_distribution_free(d);
    }
}

#[test]
fn errors_set_status_and_message() {
    let bad = CString::new("majority:2").unwrap();
    let mut p = ptr::null_mut();
    unsafe {
        assert_eq!(
            td_protocol_parse(bad.as_ptr(), &mut p),
            TdStatus::InvalidInput
        );
        assert!(p.is_null());
        assert!(take(td_last_error()).contains("majority:2"));
        assert_eq!(
            td_protocol_parse(ptr::null(), &mut p),
            TdStatus::NullPointer
        );
    }

    let big = CString::new("k_majority:5,3").unwrap();
    let dist = CString::new("independent:1/2").unwrap();
    let mut d = ptr::null_mut();
    unsafe {
        assert_eq!(td_protocol_parse(big.as_ptr(), &mut p), TdStatus::Ok);
        assert_eq!(
            td_distribution_parse(dist.as_ptr(), 5, &mut d),
            TdStatus::Ok
        );
        let mut json = ptr::null_mut();
        assert_eq!(td_solve(p, d, &mut json), TdStatus::ComputeCap);
        assert!(json.is_null());
        td_protocol_free(p);
        td_distribution_free(d);
        td_protocol_free(ptr::null_mut());
    }
}

#[test]
fn binary_gains_pick_optimal_level() {
    let env = CString::new(
        r#"{"n":3,
            "full":{"p":"1/2","q_common":"51/100","q_own":"51/100","q_other":"51/100"},
            "deviation":{"p":"1/2","q_common":"1/2","q_own":"1/2","q_other":"1/2"}}"#,
    )
    .unwrap();
    let mut json = ptr::null_mut();
    let mut k = 0;
    unsafe {
        assert_eq!(
            td_binary_gains(env.as_ptr(), &mut json, &mut k),
            TdStatus::Ok
        );
    }
    let gains: Vec<String> = take(json)
        .trim()
        .trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .map(|s| s.trim().trim_matches('"').to_owned())
        .collect();
    assert_eq!(gains.len(), 3);
    assert!((1..=3).contains(&k));
}

#[test]
fn header_declares_every_export_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/team_disclosure.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "td_last_error",
        "td_string_free",
        "td_protocol_parse",
        "td_protocol_free",
        "td_protocol_members",
        "td_protocol_requires_more_consensus",
        "td_distribution_parse",
        "td_distribution_free",
        "td_solve",
        "td_binary_gains",
        "TD_STATUS_COMPUTE_CAP",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"])
        .arg(&header)
        .status()
    else {
        return;
    };
    assert!(status.success());
}
