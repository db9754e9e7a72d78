//! C ABI over `fractrace`.
//!
//! Every function returns an [`FtStatus`]; results go through out-pointers.
//! On failure the message is available from [`ft_last_error_message`] on the
//! same thread. Handles are created by `*_new` functions and released by the
//! matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fractrace::coefficients::{
    constant_k_deterministic, exponent_schedule, matrix_aj, mc_coefficient_cnj, mc_constant_k, mc_family_constant,
    FamilyConstant, KConstant,
};
use fractrace::heat_kernel::{kernel_at_zero_t, kernel_value, KernelQuery};
use fractrace::potential::Potential;
use fractrace::rng::{stream, Stream};
use fractrace::subordinator::{stable_moment, SubordinatorSpec};
use fractrace::trace_oracle::{fit_expansion, geometric_grid, trace_difference_curve, FitOptions, SpectralGrid};
use fractrace::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    InvalidArgument = 1,
    /// A finiteness condition of the expansion does not hold.
    Validity = 2,
    Numerical = 3,
    NullPointer = 4,
    BufferTooSmall = 5,
    AcceptanceFloor = 6,
    Panic = 7,
    Other = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtConstant {
    K1 = 0,
    K2 = 1,
    K3 = 2,
    L = 3,
    M = 4,
    N = 5,
}

/// Monte Carlo estimate; stderr is 0 for deterministic values.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FtEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

/// Seeded random stream.
pub struct FtRng {
    inner: Stream,
}

/// Sum of Gaussian terms c·exp(−|x − x0|²/s²).
pub struct FtPotential {
    inner: Potential,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(FtStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidParameter(_) | Error::Config(_) => FtStatus::InvalidArgument,
            Error::Validity(_) => FtStatus::Validity,
            Error::Quadrature(_) | Error::Numerical(_) | Error::RankDeficient { .. } => FtStatus::Numerical,
            Error::AcceptanceFloor { .. } => FtStatus::AcceptanceFloor,
            _ => FtStatus::Other,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FtStatus::NullPointer, format!("{what} is null"))
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            FtStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FtStatus::Panic
        }
    }
}

/// Write through an out-pointer after a null check.
unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn rng_mut<'a>(rng: *mut FtRng) -> Result<&'a mut Stream, Failure> {
    rng.as_mut().map(|r| &mut r.inner).ok_or_else(|| null("rng"))
}

unsafe fn potential_ref<'a>(p: *const FtPotential) -> Result<&'a Potential, Failure> {
    p.as_ref().map(|p| &p.inner).ok_or_else(|| null("potential"))
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn ft_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New random stream; free with `ft_rng_free`.
#[no_mangle]
pub extern "C" fn ft_rng_new(seed: u64) -> *mut FtRng {
    Box::into_raw(Box::new(FtRng { inner: stream(seed) }))
}

/// # Safety
/// `rng` must come from `ft_rng_new` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ft_rng_free(rng: *mut FtRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

unsafe fn sample_spec(spec: SubordinatorSpec, rng: *mut FtRng, t: f64, out: *mut f64) -> FtStatus {
    guard(|| {
        let r = rng_mut(rng)?;
        put(out, spec.sample(t, r)?)
    })
}

/// One draw of S_t for the α/2-stable subordinator.
///
/// # Safety
/// `rng` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_sample_stable(rng: *mut FtRng, alpha: f64, t: f64, out: *mut f64) -> FtStatus {
    sample_spec(SubordinatorSpec::Stable { alpha }, rng, t, out)
}

/// # Safety
/// `rng` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_sample_relativistic(rng: *mut FtRng, alpha: f64, m: f64, t: f64, out: *mut f64) -> FtStatus {
    sample_spec(SubordinatorSpec::Relativistic { alpha, m }, rng, t, out)
}

/// # Safety
/// `rng` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_sample_mixed(
    rng: *mut FtRng,
    alpha: f64,
    beta: f64,
    a: f64,
    t: f64,
    out: *mut f64,
) -> FtStatus {
    sample_spec(SubordinatorSpec::Mixed { alpha, beta, a }, rng, t, out)
}

/// E[S_1^η] = Γ(1 − 2η/α)/Γ(1 − η).
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_stable_moment(alpha: f64, eta: f64, out: *mut f64) -> FtStatus {
    guard(|| put(out, stable_moment(alpha, eta)?))
}

/// p_t(0) of the d-dimensional α-stable process.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_kernel_at_zero(d: usize, alpha: f64, t: f64, out: *mut f64) -> FtStatus {
    guard(|| put(out, kernel_at_zero_t(d, alpha, t)?))
}

/// p_t(x) with `x` pointing to `d` coordinates.
///
/// # Safety
/// `x` must hold `d` readable values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_kernel_value(d: usize, alpha: f64, t: f64, x: *const f64, out: *mut f64) -> FtStatus {
    guard(|| {
        let x = slice(x, d, "x")?.to_vec();
        put(out, kernel_value(&KernelQuery { d, t, x, spec: SubordinatorSpec::Stable { alpha } })?)
    })
}

/// New zero potential in `d` dimensions; null if `d` is invalid.
#[no_mangle]
pub extern "C" fn ft_potential_new(d: usize) -> *mut FtPotential {
    match Potential::zero(d) {
        Ok(inner) => Box::into_raw(Box::new(FtPotential { inner })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Parse `gaussian:c=..,s=..[,x0=a|b];...` or `zero` into a new handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_potential_parse(text: *const c_char, d: usize, out: *mut *mut FtPotential) -> FtStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| Failure(FtStatus::InvalidArgument, "text is not UTF-8".into()))?;
        let inner = Potential::parse(s, d)?;
        put(out, Box::into_raw(Box::new(FtPotential { inner })))
    })
}

/// # Safety
/// `p` must come from `ft_potential_new` or `ft_potential_parse` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ft_potential_free(p: *mut FtPotential) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Append c·exp(−|x − center|²/width²); `center` holds `d` values (null means the origin).
///
/// # Safety
/// `p` must be a live handle; `center` null or `d` readable values.
#[no_mangle]
pub unsafe extern "C" fn ft_potential_add_gaussian(
    p: *mut FtPotential,
    amplitude: f64,
    width: f64,
    center: *const f64,
) -> FtStatus {
    guard(|| {
        let h = p.as_mut().ok_or_else(|| null("potential"))?;
        let d = h.inner.dim();
        let c = if center.is_null() { vec![0.0; d] } else { slice(center, d, "center")?.to_vec() };
        h.inner = h.inner.clone().with_term(amplitude, width, c)?;
        Ok(())
    })
}

/// V(x) with `x` holding the potential's dimension of values.
///
/// # Safety
/// `p` must be a live handle, `x` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_potential_evaluate(p: *const FtPotential, x: *const f64, out: *mut f64) -> FtStatus {
    guard(|| {
        let v = potential_ref(p)?;
        put(out, v.evaluate(slice(x, v.dim(), "x")?))
    })
}

/// ∫V^k.
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_potential_integral_power(p: *const FtPotential, k: u32, out: *mut f64) -> FtStatus {
    guard(|| put(out, potential_ref(p)?.integral_power(k)?))
}

/// ∫|∇V|².
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_potential_dirichlet_energy(p: *const FtPotential, out: *mut f64) -> FtStatus {
    guard(|| put(out, potential_ref(p)?.dirichlet_energy()))
}

/// K1, K2, K3 or L, M, N. With `analytic` (α = 2 only) the value comes from
/// quadrature and `n_samples`, `seed` are ignored.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_constant(
    which: FtConstant,
    d: usize,
    alpha: f64,
    analytic: bool,
    n_samples: u64,
    seed: u64,
    out: *mut FtEstimate,
) -> FtStatus {
    guard(|| {
        let (k, family) = match which {
            FtConstant::K1 => (KConstant::K1, None),
            FtConstant::K2 => (KConstant::K2, None),
            FtConstant::K3 => (KConstant::K3, None),
            FtConstant::L => (KConstant::K1, Some(FamilyConstant::L)),
            FtConstant::M => (KConstant::K3, Some(FamilyConstant::M)),
            FtConstant::N => (KConstant::K2, Some(FamilyConstant::N)),
        };
        let est = if analytic {
            if alpha != 2.0 {
                return Err(Failure(FtStatus::InvalidArgument, "analytic constants exist only at alpha = 2".into()));
            }
            let f = family.map_or(Ok(1.0), |f| f.factor(d, alpha))?;
            FtEstimate { value: constant_k_deterministic(k, d)? * f, stderr: 0.0, n_samples: 0 }
        } else {
            let e = match family {
                Some(f) => mc_family_constant(f, d, alpha, n_samples, seed)?,
                None => mc_constant_k(k, d, alpha, n_samples, seed)?,
            };
            FtEstimate { value: e.value, stderr: e.stderr, n_samples: e.n_samples }
        };
        put(out, est)
    })
}

/// Monte Carlo C_{n,j}(V).
///
/// # Safety
/// `p` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ft_coefficient(
    p: *const FtPotential,
    n: u32,
    j: u32,
    alpha: f64,
    n_samples: u64,
    seed: u64,
    out: *mut FtEstimate,
) -> FtStatus {
    guard(|| {
        let e = mc_coefficient_cnj(potential_ref(p)?, n, j, alpha, n_samples, seed)?;
        put(out, FtEstimate { value: e.value, stderr: e.stderr, n_samples: e.n_samples })
    })
}

/// A_J(α) row-major into `out`, which must hold (J−1)² values.
///
/// # Safety
/// `out` must hold `capacity` writable values.
#[no_mangle]
pub unsafe extern "C" fn ft_matrix_aj(j_max: u32, alpha: f64, out: *mut f64, capacity: usize) -> FtStatus {
    guard(|| {
        let m = matrix_aj(j_max, alpha)?;
        let flat: Vec<f64> = m.into_iter().flatten().collect();
        if capacity < flat.len() {
            return Err(Failure(FtStatus::BufferTooSmall, format!("need {} values, got {capacity}", flat.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::ptr::copy_nonoverlapping(flat.as_ptr(), out, flat.len());
        Ok(())
    })
}

/// Spectral trace curve of a 1D or 2D potential on [−L, L]^d with N modes per
/// axis, fitted against the (J, M) exponent schedule plus the cutoff power.
/// Writes up to `capacity` terms and their count to `count`.
///
/// # Safety
/// `p` must be a live handle; the three arrays must hold `capacity` writable
/// values and `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ft_trace_fit(
    p: *const FtPotential,
    alpha: f64,
    half_period: f64,
    modes: usize,
    t_min: f64,
    t_max: f64,
    points: usize,
    j_max: u32,
    m: u32,
    exponents: *mut f64,
    coefficients: *mut f64,
    uncertainties: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> FtStatus {
    guard(|| {
        let v = potential_ref(p)?;
        let grid = SpectralGrid::new(v.dim(), half_period, modes)?;
        let t = geometric_grid(t_min, t_max, points)?;
        let curve = trace_difference_curve(v, alpha, grid, &t)?;
        let schedule = exponent_schedule(j_max, m, alpha, v.dim())?;
        let fit = fit_expansion(&curve, &schedule, &FitOptions { extra: vec![schedule.cutoff], ..FitOptions::default() })?;
        let n = fit.terms.len();
        put(count, n)?;
        if capacity < n {
            return Err(Failure(FtStatus::BufferTooSmall, format!("fit has {n} terms, capacity {capacity}")));
        }
        if exponents.is_null() || coefficients.is_null() || uncertainties.is_null() {
            return Err(null("output array"));
        }
        for (i, term) in fit.terms.iter().enumerate() {
            *exponents.add(i) = term.exponent;
            *coefficients.add(i) = term.coefficient;
            *uncertainties.add(i) = term.uncertainty;
        }
        Ok(())
    })
}
