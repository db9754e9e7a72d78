use std::ffi::{CStr, CString};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::ptr;

use fractrace_ffi::*;

fn last_error() -> Option<String> {
    let p = ft_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn parse(text: &str, d: usize) -> *mut FtPotential {
    let s = CString::new(text).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ft_potential_parse(s.as_ptr(), d, &mut p) }, FtStatus::Ok);
    p
}

#[test]
fn errors_set_and_clear_last_message() {
    let mut out = 0.0;
    let status = unsafe { ft_stable_moment(3.0, 0.1, &mut out) };
    assert_eq!(status, FtStatus::InvalidArgument);
    assert!(last_error().unwrap().contains("alpha"), "{:?}", last_error());

    assert_eq!(unsafe { ft_stable_moment(1.0, -0.5, &mut out) }, FtStatus::Ok);
    assert!(last_error().is_none());
    assert_eq!(unsafe { ft_stable_moment(1.0, -0.5, ptr::null_mut()) }, FtStatus::NullPointer);
}

#[test]
fn last_error_is_per_thread() {
    let mut out = 0.0;
    assert_eq!(unsafe { ft_kernel_at_zero(0, 1.0, 1.0, &mut out) }, FtStatus::InvalidArgument);
    let other = std::thread::spawn(last_error).join().unwrap();
    assert!(other.is_none());
    assert!(last_error().is_some());
}

#[test]
fn closed_forms_match() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(ft_stable_moment(1.0, -1.0, &mut out), FtStatus::Ok);
        // Γ(3)/Γ(2)
        assert!((out - 2.0).abs() < 1e-12);
        assert_eq!(ft_kernel_at_zero(1, 2.0, 1.0, &mut out), FtStatus::Ok);
        assert!((out - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-12);
        let x = [1.0];
        assert_eq!(ft_kernel_value(1, 1.0, 1.0, x.as_ptr(), &mut out), FtStatus::Ok);
        // Cauchy: 1/(π(1 + x²))
        assert!((out - 1.0 / (2.0 * PI)).abs() < 1e-8, "{out}");
    }
}

#[test]
fn rng_handles_are_reproducible() {
    unsafe {
        let (a, b) = (ft_rng_new(7), ft_rng_new(7));
        for _ in 0..100 {
            let (mut x, mut y) = (0.0, 0.0);
            assert_eq!(ft_sample_stable(a, 1.2, 0.5, &mut x), FtStatus::Ok);
            assert_eq!(ft_sample_stable(b, 1.2, 0.5, &mut y), FtStatus::Ok);
            assert_eq!(x, y);
            assert!(x > 0.0);
        }
        let mut s = 0.0;
        assert_eq!(ft_sample_stable(a, 2.0, 0.3, &mut s), FtStatus::Ok);
        assert_eq!(s, 0.3);
        assert_eq!(ft_sample_relativistic(a, 1.0, 0.5, 1.0, &mut s), FtStatus::Ok);
        assert_eq!(ft_sample_mixed(a, 1.0, 1.5, 0.5, 1.0, &mut s), FtStatus::Ok);
        assert_eq!(ft_sample_mixed(a, 1.5, 1.0, 0.5, 1.0, &mut s), FtStatus::InvalidArgument);
        assert_eq!(ft_sample_stable(ptr::null_mut(), 1.0, 1.0, &mut s), FtStatus::NullPointer);
        ft_rng_free(a);
        ft_rng_free(b);
        ft_rng_free(ptr::null_mut());
    }
}

#[test]
fn potential_functionals() {
    unsafe {
        let p = parse("gaussian:c=1,s=1", 1);
        let mut out = 0.0;
        assert_eq!(ft_potential_integral_power(p, 1, &mut out), FtStatus::Ok);
        assert!((out - PI.sqrt()).abs() < 1e-10);
        assert_eq!(ft_potential_integral_power(p, 2, &mut out), FtStatus::Ok);
        assert!((out - (PI / 2.0).sqrt()).abs() < 1e-10);
        // ∫ 4x² e^{-2x²} dx = √(π/2)
        assert_eq!(ft_potential_dirichlet_energy(p, &mut out), FtStatus::Ok);
        assert!((out - (PI / 2.0).sqrt()).abs() < 1e-10, "{out}");
        ft_potential_free(p);

        let q = ft_potential_new(2);
        assert!(!q.is_null());
        let c = [1.0, -1.0];
        assert_eq!(ft_potential_add_gaussian(q, 2.0, 0.5, c.as_ptr()), FtStatus::Ok);
        assert_eq!(ft_potential_add_gaussian(q, -1.0, 1.0, ptr::null()), FtStatus::Ok);
        assert_eq!(ft_potential_add_gaussian(q, 1.0, -1.0, ptr::null()), FtStatus::InvalidArgument);
        assert_eq!(ft_potential_evaluate(q, c.as_ptr(), &mut out), FtStatus::Ok);
        assert!((out - (2.0 - (-2.0f64).exp())).abs() < 1e-12);
        ft_potential_free(q);

        assert!(ft_potential_new(0).is_null());
        assert!(last_error().is_some());
        let bad = CString::new("gaussian:c=1,s=-2").unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(ft_potential_parse(bad.as_ptr(), 1, &mut h), FtStatus::InvalidArgument);
        assert!(h.is_null());
    }
}

#[test]
fn constants_and_coefficients() {
    let mut e = FtEstimate::default();
    unsafe {
        assert_eq!(ft_constant(FtConstant::K1, 2, 2.0, true, 0, 0, &mut e), FtStatus::Ok);
        assert!((e.value - 1.0 / 12.0).abs() < 1e-9 && e.stderr == 0.0);
        assert_eq!(ft_constant(FtConstant::K1, 2, 1.0, true, 0, 0, &mut e), FtStatus::InvalidArgument);

        assert_eq!(ft_constant(FtConstant::K1, 2, 2.0, false, 200_000, 3, &mut e), FtStatus::Ok);
        assert_eq!(e.n_samples, 200_000);
        assert!((e.value - 1.0 / 12.0).abs() < 4.0 * e.stderr, "{e:?}");

        let p = parse("gaussian:c=1,s=1", 1);
        assert_eq!(ft_coefficient(p, 0, 1, 1.0, 1000, 1, &mut e), FtStatus::InvalidArgument);
        assert_eq!(ft_coefficient(p, 1, 2, 1.0, 20_000, 1, &mut e), FtStatus::Ok);
        assert!(e.value.is_finite() && e.stderr > 0.0);
        ft_potential_free(p);
    }
}

#[test]
fn matrix_aj_respects_capacity() {
    let mut buf = vec![0.0; 25];
    unsafe {
        assert_eq!(ft_matrix_aj(6, 1.0, buf.as_mut_ptr(), 24), FtStatus::BufferTooSmall);
        assert_eq!(ft_matrix_aj(6, 1.0, buf.as_mut_ptr(), buf.len()), FtStatus::Ok);
    }
    let expect: Vec<f64> = fractrace::coefficients::matrix_aj(6, 1.0).unwrap().into_iter().flatten().collect();
    assert_eq!(buf, expect);
}

#[test]
fn trace_fit_recovers_first_coefficient() {
    let p = parse("gaussian:c=1,s=1", 1);
    let (mut ex, mut co, mut un) = ([0.0; 16], [0.0; 16], [0.0; 16]);
    let mut n = 0;
    let status = unsafe {
        ft_trace_fit(
            p, 1.0, 40.0, 1024, 1e-3, 1e-1, 40, 3, 1,
            ex.as_mut_ptr(), co.as_mut_ptr(), un.as_mut_ptr(), 16, &mut n,
        )
    };
    assert_eq!(status, FtStatus::Ok, "{:?}", last_error());
    assert!(n >= 2);
    assert_eq!(ex[0], 1.0);
    assert!(((co[0] + PI.sqrt()) / PI.sqrt()).abs() < 0.01, "{}", co[0]);
    assert!(un[..n].iter().all(|u| u.is_finite()));

    let mut small = 0;
    let status = unsafe {
        ft_trace_fit(
            p, 1.0, 10.0, 128, 1e-3, 1e-1, 20, 3, 1,
            ex.as_mut_ptr(), co.as_mut_ptr(), un.as_mut_ptr(), 1, &mut small,
        )
    };
    assert_eq!(status, FtStatus::BufferTooSmall);
    assert!(small > 1);
    unsafe { ft_potential_free(p) };
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ft_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/fractrace.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["ft_trace_fit", "FT_STATUS_BUFFER_TOO_SMALL", "typedef struct FtRng FtRng"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-Wall", "-Werror", "-x", "c"]).arg(&header).output() else {
        eprintln!("cc not found, skipping compile check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
