//! C ABI over `stratex`.
//!
//! Every fallible function returns an [`StxStatus`]. On failure the message
//! is available from [`stx_last_error`] on the same thread until the next
//! call. Strings handed out by the library must be released with
//! [`stx_string_free`], templates with [`stx_template_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stratex::engine::{run_session, SessionConfig};
use stratex::parser::template_json;
use stratex::scenario::load_scenario;
use stratex::{Audience, Explainer, OfflineBackend, StrategyTemplate, TemplateKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StxStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Explain = 4,
    Scenario = 5,
    Engine = 6,
    InvalidArgument = 7,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StxAudience {
    Expert = 0,
    Layperson = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StxKind {
    Acceptance = 0,
    Bidding = 1,
}

/// A parsed strategy template.
pub struct StxTemplate {
    inner: StrategyTemplate,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|b| *b != 0);
    let c = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

type Failure = (StxStatus, String);

/// Run `f`, record its error and turn panics into [`StxStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> StxStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StxStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            StxStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((StxStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (StxStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn template_ref<'a>(t: *const StxTemplate) -> Result<&'a StrategyTemplate, Failure> {
    t.as_ref()
        .map(|t| &t.inner)
        .ok_or((StxStatus::NullArgument, "template is null".to_string()))
}

fn check_out<T>(out: *mut T) -> Result<(), Failure> {
    if out.is_null() {
        return Err((StxStatus::NullArgument, "output pointer is null".into()));
    }
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    let mut bytes = s.into_bytes();
    bytes.retain(|b| *b != 0);
    *out = CString::new(bytes).expect("nul bytes removed").into_raw();
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn stx_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn stx_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse template source text into `*out`.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stx_template_parse(source: *const c_char, out: *mut *mut StxTemplate) -> StxStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let src = read_str(source, "source")?;
        let inner = stratex::parse_template(src).map_err(|e| (StxStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(StxTemplate { inner }));
        Ok(())
    })
}

/// Release a template. Null is ignored.
///
/// # Safety
/// `t` must come from [`stx_template_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn stx_template_free(t: *mut StxTemplate) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live template and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stx_template_kind(t: *const StxTemplate, out: *mut StxKind) -> StxStatus {
    guard(|| {
        check_out(out)?;
        *out = match template_ref(t)?.kind() {
            TemplateKind::Acceptance => StxKind::Acceptance,
            TemplateKind::Bidding => StxKind::Bidding,
        };
        Ok(())
    })
}

/// # Safety
/// `t` must be a live template and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stx_template_phase_count(t: *const StxTemplate, out: *mut usize) -> StxStatus {
    guard(|| {
        check_out(out)?;
        *out = template_ref(t)?.phases().len();
        Ok(())
    })
}

/// Zero-based index of the phase containing normalized time `time`.
///
/// # Safety
/// `t` must be a live template and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stx_template_phase_at(t: *const StxTemplate, time: f64, out: *mut usize) -> StxStatus {
    guard(|| {
        check_out(out)?;
        if !(0.0..=1.0).contains(&time) {
            return Err((StxStatus::InvalidArgument, format!("time {time} outside [0, 1]")));
        }
        *out = template_ref(t)?.phase_index_at(time);
        Ok(())
    })
}

/// The template as JSON.
///
/// # Safety
/// `t` must be a live template and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stx_template_to_json(t: *const StxTemplate, out: *mut *mut c_char) -> StxStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let json = serde_json::to_string(&template_json(template_ref(t)?)).expect("template serializes");
        put_string(out, json);
        Ok(())
    })
}

/// Explain a template with the offline backend. `*out` receives the
/// validated explanation as JSON.
///
/// # Safety
/// `t` must be a live template and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stx_template_explain(
    t: *const StxTemplate,
    audience: StxAudience,
    out: *mut *mut c_char,
) -> StxStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let template = template_ref(t)?;
        let audience = match audience {
            StxAudience::Expert => Audience::Expert,
            StxAudience::Layperson => Audience::Layperson,
        };
        let backend = OfflineBackend::default();
        let result = Explainer::new(&backend)
            .explain_template(template, audience, &mut ())
            .map_err(|e| (StxStatus::Explain, e.to_string()))?;
        put_string(out, serde_json::to_string(&result).expect("explanation serializes"));
        Ok(())
    })
}

/// Run the scenario at `path` against the builtin Boulware agent. A zero
/// `deadline` or null `seed` keeps the scenario's value. `*out` receives
/// the outcome, transcript included, as JSON.
///
/// # Safety
/// `path` must be a NUL-terminated string, `seed` null or readable and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn stx_simulate(
    path: *const c_char,
    deadline: u32,
    seed: *const u64,
    out: *mut *mut c_char,
) -> StxStatus {
    guard(|| {
        check_out(out)?;
        *out = ptr::null_mut();
        let path = read_str(path, "path")?;
        let scenario =
            load_scenario(Path::new(path)).map_err(|e| (StxStatus::Scenario, format!("{path}: {e}")))?;
        let a = scenario.agent_a().map_err(|e| (StxStatus::Scenario, e.to_string()))?;
        let b = scenario.agent_b(None);
        let config = SessionConfig {
            deadline: if deadline == 0 { scenario.session.deadline } else { deadline },
            seed: seed.as_ref().copied().unwrap_or(scenario.session.seed),
        };
        let outcome = run_session(&scenario.domain, &a, &b, config)
            .map_err(|e| (StxStatus::Engine, e.to_string()))?;
        put_string(out, serde_json::to_string(&outcome).expect("outcome serializes"));
        Ok(())
    })
}
