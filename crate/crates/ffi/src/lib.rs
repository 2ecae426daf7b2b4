//! C ABI over the expression kernel and the certificate pipeline.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free`. Every entry point returns an
//! [`LqStatus`]; on failure a message is kept per thread and can be read
//! with [`lq_last_error`]. Panics are caught and reported as
//! `LQ_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lambda_quad::catalog::{self, Problem};
use lambda_quad::check::Sampling;
use lambda_quad::expr::{parse, Env, Expr, Var};
use lambda_quad::pipeline::{run_pipeline, RunOptions};
use lambda_quad::spec::ProblemSpec;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Eval = 4,
    UnknownVariable = 5,
    BufferTooSmall = 6,
    Problem = 7,
    Panic = 8,
}

/// A parsed expression.
pub struct LqExpr {
    expr: Expr,
}

/// A compiled problem, from the catalog or a JSON spec.
pub struct LqProblem {
    problem: Problem,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

type Outcome = Result<(), (LqStatus, String)>;

fn guard(f: impl FnOnce() -> Outcome) -> LqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LqStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside lambda-quad");
            LqStatus::Panic
        }
    }
}

fn null(what: &str) -> (LqStatus, String) {
    (LqStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (LqStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (LqStatus::InvalidUtf8, format!("{what}: {e}")))
}

/// Message of the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses `text` into a new handle stored in `*out`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lq_expr_parse(text: *const c_char, out: *mut *mut LqExpr) -> LqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(text, "text")?;
        let expr = parse(text).map_err(|e| (LqStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(LqExpr { expr }));
        Ok(())
    })
}

/// Releases a handle from `lq_expr_parse` or `lq_expr_diff`. Null is ignored.
///
/// # Safety
/// `expr` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn lq_expr_free(expr: *mut LqExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Evaluates at the jet point `(x, u, ux)`.
///
/// # Safety
/// `expr` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn lq_expr_eval(
    expr: *const LqExpr,
    x: f64,
    u: f64,
    ux: f64,
    out: *mut f64,
) -> LqStatus {
    guard(|| {
        let e = expr.as_ref().ok_or_else(|| null("expr"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = e
            .expr
            .eval(&Env::jet(x, u, ux))
            .map_err(|err| (LqStatus::Eval, err.to_string()))?;
        Ok(())
    })
}

/// Evaluates with `values[k]` bound to the k-th of `x, u, ux, w, C, C1, C2`;
/// `len` may be shorter than seven, leaving the rest unbound.
///
/// # Safety
/// `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lq_expr_eval_vars(
    expr: *const LqExpr,
    values: *const f64,
    len: usize,
    out: *mut f64,
) -> LqStatus {
    guard(|| {
        let e = expr.as_ref().ok_or_else(|| null("expr"))?;
        if out.is_null() || (values.is_null() && len > 0) {
            return Err(null("values or out"));
        }
        let values = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(values, len)
        };
        let env = Var::ALL
            .iter()
            .zip(values)
            .fold(Env::new(), |env, (v, val)| env.with(*v, *val));
        *out = e
            .expr
            .eval(&env)
            .map_err(|err| (LqStatus::Eval, err.to_string()))?;
        Ok(())
    })
}

/// Differentiates with respect to the variable named `var` (`x`, `u`,
/// `ux`, `w`, `C`, `C1`, `C2`) into a new handle.
///
/// # Safety
/// `expr` must be a live handle, `var` NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lq_expr_diff(
    expr: *const LqExpr,
    var: *const c_char,
    out: *mut *mut LqExpr,
) -> LqStatus {
    guard(|| {
        let e = expr.as_ref().ok_or_else(|| null("expr"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let name = str_arg(var, "var")?;
        let v = Var::from_name(name).ok_or_else(|| {
            (
                LqStatus::UnknownVariable,
                format!("unknown variable `{name}`"),
            )
        })?;
        *out = Box::into_raw(Box::new(LqExpr {
            expr: e.expr.diff(v),
        }));
        Ok(())
    })
}

fn copy_out(text: &str, buf: *mut c_char, len: usize, needed: *mut usize) -> Outcome {
    let bytes = text.as_bytes();
    unsafe {
        if !needed.is_null() {
            *needed = bytes.len() + 1;
        }
        if buf.is_null() || len < bytes.len() + 1 {
            return Err((
                LqStatus::BufferTooSmall,
                format!("{} bytes needed", bytes.len() + 1),
            ));
        }
        ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, bytes.len());
        *buf.add(bytes.len()) = 0;
    }
    Ok(())
}

/// Writes the rendered expression into `buf`. The required size including
/// the terminator goes to `*needed` when it is non-null; a null or short
/// buffer yields `LQ_STATUS_BUFFER_TOO_SMALL`.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn lq_expr_render(
    expr: *const LqExpr,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> LqStatus {
    guard(|| {
        let e = expr.as_ref().ok_or_else(|| null("expr"))?;
        copy_out(&e.expr.to_string(), buf, len, needed)
    })
}

/// Loads a catalog problem by name.
///
/// # Safety
/// `name` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lq_problem_from_catalog(
    name: *const c_char,
    out: *mut *mut LqProblem,
) -> LqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = str_arg(name, "name")?;
        let problem = catalog::get_problem(name).map_err(|e| (LqStatus::Problem, e.to_string()))?;
        *out = Box::into_raw(Box::new(LqProblem { problem }));
        Ok(())
    })
}

/// Compiles a problem from a JSON spec document.
///
/// # Safety
/// `json` must be NUL-terminated and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn lq_problem_from_json(
    json: *const c_char,
    out: *mut *mut LqProblem,
) -> LqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let spec = ProblemSpec::from_json(text).map_err(|e| (LqStatus::Problem, e.to_string()))?;
        let problem = Problem::from_spec(spec).map_err(|e| (LqStatus::Problem, e.to_string()))?;
        *out = Box::into_raw(Box::new(LqProblem { problem }));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a live handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn lq_problem_free(problem: *mut LqProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs the full procedure. `*passed` is set to 1 iff every check passed;
/// when `report` is non-null it receives the JSON report, to be released
/// with `lq_string_free`.
///
/// # Safety
/// `problem` must be a live handle; `passed` valid; `report` null or valid.
#[no_mangle]
pub unsafe extern "C" fn lq_problem_run(
    problem: *const LqProblem,
    tol: f64,
    samples: usize,
    seed: u64,
    passed: *mut i32,
    report: *mut *mut c_char,
) -> LqStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if passed.is_null() {
            return Err(null("passed"));
        }
        let opts = RunOptions {
            sampling: Sampling { samples, tol, seed },
            ..RunOptions::default()
        };
        let r = run_pipeline(&p.problem, &opts);
        *passed = i32::from(r.passed);
        if !report.is_null() {
            let json = CString::new(r.to_json()).map_err(|e| (LqStatus::Problem, e.to_string()))?;
            *report = json.into_raw();
        }
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or come from this library and not be freed before.
#[no_mangle]
pub unsafe extern "C" fn lq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
