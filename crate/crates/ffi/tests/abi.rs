use std::ffi::{CStr, CString};
use std::ptr;

use mterm_lab_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(mtl_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn worked_example_through_the_abi() {
    unsafe {
        let mut space = ptr::null_mut();
        assert_eq!(mtl_space_new(2, 2.0, &mut space), MtlStatus::Ok);
        let mut sys = ptr::null_mut();
        assert_eq!(mtl_system_canonical(space, &mut sys), MtlStatus::Ok);
        assert_eq!(mtl_system_len(sys), 2);
        let f = [0.5, 0.5];
        let mut trace = ptr::null_mut();
        let st = mtl_wrga_run(sys, f.as_ptr(), 2, 1.0, MtlPolicy::Exact as u32, 2, 0.0, 0, &mut trace);
        assert_eq!(st, MtlStatus::Ok, "{}", last_error());
        assert_eq!(mtl_trace_len(trace), 2);
        let mut res = [0.0; 3];
        assert_eq!(mtl_trace_residuals(trace, res.as_mut_ptr(), 3), MtlStatus::Ok);
        assert!((res[1] - 0.5).abs() < 1e-12);
        assert!((res[2] - 0.05f64.sqrt()).abs() < 1e-9);
        let mut g = [0.0; 2];
        assert_eq!(mtl_trace_approximant(trace, g.as_mut_ptr(), 2), MtlStatus::Ok);
        assert!((g[0] - 0.3).abs() < 1e-9 && (g[1] - 0.4).abs() < 1e-9);
        let mut s = ptr::null_mut();
        assert_eq!(mtl_trace_to_jsonl(trace, &mut s), MtlStatus::Ok);
        assert_eq!(CStr::from_ptr(s).to_str().unwrap().lines().count(), 2);
        mtl_string_free(s);
        mtl_trace_free(trace);
        mtl_system_free(sys);
        mtl_space_free(space);
    }
}

#[test]
fn errors_set_status_and_message() {
    unsafe {
        let mut space = ptr::null_mut();
        assert_eq!(mtl_space_new(3, 1.0, &mut space), MtlStatus::InvalidArgument);
        assert!(space.is_null());
        assert!(last_error().contains("p = 1"), "{}", last_error());

        assert_eq!(mtl_space_new(3, 2.0, &mut space), MtlStatus::Ok);
        assert_eq!(last_error(), "");
        let zero = [0.0; 3];
        let mut g = [0.0; 3];
        assert_eq!(mtl_space_norming_functional(space, zero.as_ptr(), 3, g.as_mut_ptr()), MtlStatus::Undefined);
        let mut n = 0.0;
        assert_eq!(mtl_space_norm(space, zero.as_ptr(), 2, &mut n), MtlStatus::DimensionMismatch);
        assert_eq!(mtl_space_norm(ptr::null(), zero.as_ptr(), 3, &mut n), MtlStatus::NullPointer);

        let mut sys = ptr::null_mut();
        assert_eq!(mtl_system_random(space, 5, 9, &mut sys), MtlStatus::Ok);
        let mut trace = ptr::null_mut();
        let st = mtl_wrga_run(sys, [1.0, 0.0, 0.0].as_ptr(), 3, 1.0, 7, 3, f64::NAN, 0, &mut trace);
        assert_eq!(st, MtlStatus::InvalidArgument);
        assert!(last_error().contains("policy"));
        mtl_system_free(sys);
        mtl_space_free(space);

        let bad = CString::new("{\"nope\": 1}").unwrap();
        assert_eq!(mtl_system_from_json(bad.as_ptr(), &mut sys), MtlStatus::Serialization);
    }
}

#[test]
fn system_json_round_trip_and_sigma() {
    unsafe {
        let mut space = ptr::null_mut();
        assert_eq!(mtl_space_new(4, 3.0, &mut space), MtlStatus::Ok);
        let mut sys = ptr::null_mut();
        assert_eq!(mtl_system_random(space, 6, 1, &mut sys), MtlStatus::Ok);
        let mut json = ptr::null_mut();
        assert_eq!(mtl_system_to_json(sys, &mut json), MtlStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(mtl_system_from_json(json, &mut back), MtlStatus::Ok, "{}", last_error());
        let mut json2 = ptr::null_mut();
        assert_eq!(mtl_system_to_json(back, &mut json2), MtlStatus::Ok);
        assert_eq!(CStr::from_ptr(json), CStr::from_ptr(json2));
        mtl_string_free(json);
        mtl_string_free(json2);
        mtl_system_free(back);
        mtl_system_free(sys);
        mtl_space_free(space);

        let x = [3.0, -1.0, 2.0];
        let mut e = 0.0;
        assert_eq!(mtl_sigma_m_canonical(x.as_ptr(), 3, 1, 2.0, &mut e), MtlStatus::Ok);
        assert!((e - 5f64.sqrt()).abs() < 1e-12);
    }
}
