//! C ABI for `concmat`.
//!
//! Every fallible function returns a [`ConcmatStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`concmat_last_error`]. Matrices live behind the opaque
//! [`ConcmatMatrix`] handle; strings returned by the library must be released
//! with [`concmat_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use concmat::matstat;
use num_complex::Complex64;
use concmat::report::{run_config, Report};
use concmat::vecnorms::{ke_numeric, lp_norm, UnconditionalNorm};
use concmat::{Error, Matrix};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcmatStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidInput = 3,
    UnsupportedDimension = 4,
    UnboundedSupport = 5,
    Domain = 6,
    TooLarge = 7,
    Incompatible = 8,
    Refused = 9,
    Config = 10,
    Io = 11,
    BufferTooSmall = 12,
    Panic = 13,
}

/// Opaque dense complex matrix.
pub struct ConcmatMatrix(Matrix);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> ConcmatStatus {
    match e {
        Error::InvalidParameter(_) => ConcmatStatus::InvalidParameter,
        Error::InvalidInput(_) => ConcmatStatus::InvalidInput,
        Error::UnsupportedDimension(_) => ConcmatStatus::UnsupportedDimension,
        Error::UnboundedSupport(_) => ConcmatStatus::UnboundedSupport,
        Error::Domain(_) => ConcmatStatus::Domain,
        Error::TooLarge(_) => ConcmatStatus::TooLarge,
        Error::Incompatible(_) => ConcmatStatus::Incompatible,
        Error::Refused(_) => ConcmatStatus::Refused,
        Error::Config(_) => ConcmatStatus::Config,
        Error::Io(_) => ConcmatStatus::Io,
    }
}

struct Fail(ConcmatStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(ConcmatStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ConcmatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ConcmatStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal error: {msg}"));
            ConcmatStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn matrix<'a>(m: *const ConcmatMatrix) -> Result<&'a Matrix, Fail> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("matrix"))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn concmat_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn concmat_version() -> *const c_char {
    static V: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr().cast()
}

/// Builds a real `rows × cols` matrix from row-major `data`.
///
/// # Safety
/// `data` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_matrix_new_real(
    rows: usize,
    cols: usize,
    data: *const f64,
    out: *mut *mut ConcmatMatrix,
) -> ConcmatStatus {
    guard(|| {
        let d = slice(data, rows.saturating_mul(cols), "data")?;
        let m = Matrix::from_real(rows, cols, d)?;
        write(out, Box::into_raw(Box::new(ConcmatMatrix(m))))
    })
}

/// Builds a complex matrix from row-major real and imaginary parts.
///
/// # Safety
/// `re` and `im` must each point to `rows * cols` doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_matrix_new_complex(
    rows: usize,
    cols: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut ConcmatMatrix,
) -> ConcmatStatus {
    guard(|| {
        let len = rows.saturating_mul(cols);
        let (re, im) = (slice(re, len, "re")?, slice(im, len, "im")?);
        let data = re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect();
        let m = Matrix::new(rows, cols, data)?;
        write(out, Box::into_raw(Box::new(ConcmatMatrix(m))))
    })
}

/// Releases a matrix. Null is ignored.
///
/// # Safety
/// `m` must come from a `concmat_matrix_new_*` call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn concmat_matrix_free(m: *mut ConcmatMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Writes the row and column counts.
///
/// # Safety
/// `m` must be a live handle; `rows` and `cols` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_matrix_shape(m: *const ConcmatMatrix, rows: *mut usize, cols: *mut usize) -> ConcmatStatus {
    guard(|| {
        let a = matrix(m)?;
        write(rows, a.rows())?;
        write(cols, a.cols())
    })
}

/// `‖A‖_{p→q}`; pass `INFINITY` for ∞. `exact` (nullable) receives 1 for
/// closed-form values.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable; `exact` may be null.
#[no_mangle]
pub unsafe extern "C" fn concmat_opnorm_pq(
    m: *const ConcmatMatrix,
    p: f64,
    q: f64,
    out: *mut f64,
    exact: *mut i32,
) -> ConcmatStatus {
    guard(|| {
        let r = matstat::opnorm_pq(matrix(m)?, p, q)?;
        if !exact.is_null() {
            exact.write(i32::from(r.exact));
        }
        write(out, r.value)
    })
}

/// Schatten `p`-norm.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_schatten_norm(m: *const ConcmatMatrix, p: f64, out: *mut f64) -> ConcmatStatus {
    guard(|| write(out, matstat::schatten_norm(matrix(m)?, p)?))
}

/// Ky Fan `k`-norm.
///
/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_kyfan_norm(m: *const ConcmatMatrix, k: usize, out: *mut f64) -> ConcmatStatus {
    guard(|| write(out, matstat::kyfan_norm(matrix(m)?, k)?))
}

unsafe fn copy_spectrum(values: &[f64], out: *mut f64, cap: usize, len: *mut usize) -> Result<(), Fail> {
    write(len, values.len())?;
    if cap < values.len() {
        return Err(Fail(ConcmatStatus::BufferTooSmall, format!("need room for {} values, got {cap}", values.len())));
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Eigenvalues of a Hermitian matrix, nonincreasing. `len` always receives
/// the count; `BufferTooSmall` is returned when `cap` is below it.
///
/// # Safety
/// `m` must be a live handle; `out` must have room for `cap` doubles;
/// `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_eigvals_hermitian(
    m: *const ConcmatMatrix,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> ConcmatStatus {
    guard(|| copy_spectrum(&matstat::eigvals_hermitian(matrix(m)?)?.values, out, cap, len))
}

/// Singular values, nonincreasing; buffer protocol as for
/// [`concmat_eigvals_hermitian`].
///
/// # Safety
/// As for [`concmat_eigvals_hermitian`].
#[no_mangle]
pub unsafe extern "C" fn concmat_singular_values(
    m: *const ConcmatMatrix,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> ConcmatStatus {
    guard(|| copy_spectrum(&matstat::singular_values(matrix(m)?)?.values, out, cap, len))
}

/// `‖v‖_p` of a real vector.
///
/// # Safety
/// `v` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_lp_norm(v: *const f64, len: usize, p: f64, out: *mut f64) -> ConcmatStatus {
    guard(|| write(out, lp_norm(slice(v, len, "v")?, p)?))
}

/// `K_E(t)` for `E = ℓq` on ℝ^dim; `+∞` when `t` exceeds `dim^{1/q}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_ke_lq(q: f64, dim: usize, t: f64, out: *mut f64) -> ConcmatStatus {
    guard(|| write(out, ke_numeric(&UnconditionalNorm::lq(q, dim)?, t)?))
}

/// Convex-hull distance `f_c(A, x)` on `{0,…,255}^dim`. `points` holds
/// `count` row-major points of length `dim`.
///
/// # Safety
/// `points` must point to `count * dim` bytes, `x` to `dim` bytes; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn concmat_convex_distance(
    points: *const u8,
    count: usize,
    dim: usize,
    x: *const u8,
    out: *mut f64,
) -> ConcmatStatus {
    guard(|| {
        let flat = slice(points, count.saturating_mul(dim), "points")?;
        let a: Vec<Vec<u8>> = if dim == 0 { vec![vec![]; count] } else { flat.chunks(dim).map(<[u8]>::to_vec).collect() };
        let x = slice(x, dim, "x")?;
        write(out, concmat::talagrand::convex_distance(&a, x)?)
    })
}

/// Parses a TOML config, runs every entry and returns the reports as a JSON
/// array (timing included). `all_pass` (nullable) receives 1 when every
/// entry passed. Free the string with [`concmat_string_free`].
///
/// # Safety
/// `config` must be a NUL-terminated UTF-8 string; `json_out` must be
/// writable; `all_pass` may be null.
#[no_mangle]
pub unsafe extern "C" fn concmat_run_config(
    config: *const c_char,
    json_out: *mut *mut c_char,
    all_pass: *mut i32,
) -> ConcmatStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        let text = CStr::from_ptr(config)
            .to_str()
            .map_err(|_| Fail(ConcmatStatus::InvalidInput, "config is not valid UTF-8".into()))?;
        let cfg = concmat::config::parse_config_str(text)?;
        let reports = run_config(&cfg, None, |_| {})?;
        let body: Vec<String> = reports.iter().map(Report::to_json).collect();
        let json = format!("[{}]", body.join(","));
        if !all_pass.is_null() {
            all_pass.write(i32::from(reports.iter().all(Report::pass)));
        }
        let c = CString::new(json).map_err(|_| Fail(ConcmatStatus::InvalidInput, "report contains NUL".into()))?;
        write(json_out, c.into_raw())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn concmat_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
