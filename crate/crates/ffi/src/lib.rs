//! C ABI over the tempoq engine.
//!
//! Every fallible function returns a [`TqStatus`]; on failure a message is
//! available from [`tq_last_error`] on the same thread. Handles are opaque and
//! must be released with their `_free` function. Strings returned through
//! `out` parameters are owned by the caller and released with
//! [`tq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use tempoq::gdn::{Engine, GdnNetwork};
use tempoq::logs;
use tempoq::model::snapshot::Snapshot;
use tempoq::model::HistoryGraph;
use tempoq::mtgl::{parse, CompiledQuery};
use tempoq::oracle;
use tempoq::shs::{self, AdaptationLoop, EventKind, LoopConfig, RunReport, ShsEvent, Variant};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TqStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Invalid = 4,
    Io = 5,
    Engine = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TqVariant {
    Intempo = 0,
    IntempoPlus = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TqEventKind {
    Er = 0,
    Iv = 1,
    Re = 2,
}

/// A runtime model with history loaded from a snapshot.
pub struct TqModel {
    graph: HistoryGraph,
}

/// A compiled query bound to the type graph of the model it was created for.
pub struct TqQuery {
    query: Arc<CompiledQuery>,
    engine: Engine,
}

/// An adaptation loop over the healthcare scenario.
pub struct TqLoop {
    inner: AdaptationLoop,
}

struct Failure(TqStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: TqStatus, msg: impl ToString) -> FfiResult<T> {
    Err(Failure(status, msg.to_string()))
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> TqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            TqStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            TqStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(TqStatus::NullArgument, format!("{what} is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(TqStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().map_or_else(|| fail(TqStatus::NullArgument, format!("{what} is null")), Ok)
}

unsafe fn handle_mut<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().map_or_else(|| fail(TqStatus::NullArgument, format!("{what} is null")), Ok)
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return fail(TqStatus::NullArgument, format!("{what} is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> FfiResult<()> {
    let c = CString::new(s).or_else(|_| fail(TqStatus::Engine, "output contains a NUL byte"))?;
    put(out, c.into_raw(), "out")
}

fn compile_queries(source: &str, graph: &HistoryGraph) -> FfiResult<Vec<Arc<CompiledQuery>>> {
    let file = parse(source).or_else(|e| fail(TqStatus::Parse, e))?;
    let qs = file.compile(graph.types()).or_else(|e| fail(TqStatus::Parse, e))?;
    Ok(qs.into_iter().map(Arc::new).collect())
}

fn select(qs: Vec<Arc<CompiledQuery>>, name: Option<&str>) -> FfiResult<Arc<CompiledQuery>> {
    let found = match name {
        Some(n) => qs.into_iter().find(|q| q.name == n),
        None => qs.into_iter().next(),
    };
    found.map_or_else(|| fail(TqStatus::Invalid, format!("no query named {}", name.unwrap_or("<first>"))), Ok)
}

fn variant(v: TqVariant) -> Variant {
    match v {
        TqVariant::Intempo => Variant::Intempo,
        TqVariant::IntempoPlus => Variant::IntempoPlus,
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> FfiResult<String> {
    serde_json::to_string(value).or_else(|e| fail(TqStatus::Engine, e))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn tq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a model from snapshot JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tq_model_from_json(json: *const c_char, out: *mut *mut TqModel) -> TqStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let snap = Snapshot::from_json(json).or_else(|e| fail(TqStatus::Parse, e))?;
        let graph = snap.into_graph().or_else(|e| fail(TqStatus::Invalid, e))?;
        put(out, Box::into_raw(Box::new(TqModel { graph })), "out")
    })
}

/// Number of elements in the model, including deleted ones that were not pruned.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tq_model_element_count(model: *const TqModel, out: *mut usize) -> TqStatus {
    guard(|| {
        let m = handle(model, "model")?;
        put(out, m.graph.elements().count(), "out")
    })
}

/// # Safety
/// `model` must come from [`tq_model_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tq_model_free(model: *mut TqModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Compiles query `name` (the first query when null) from `source` against
/// the model's type graph.
///
/// # Safety
/// Pointers must be valid; `name` may be null.
#[no_mangle]
pub unsafe extern "C" fn tq_query_new(
    model: *const TqModel,
    source: *const c_char,
    name: *const c_char,
    out: *mut *mut TqQuery,
) -> TqStatus {
    guard(|| {
        let m = handle(model, "model")?;
        let source = str_arg(source, "source")?;
        let name = opt_str_arg(name, "name")?;
        let query = select(compile_queries(source, &m.graph)?, name)?;
        let net = Arc::new(GdnNetwork::build(query.clone(), m.graph.types()));
        let engine = Engine::new(net, m.graph.types().clone());
        put(out, Box::into_raw(Box::new(TqQuery { query, engine })), "out")
    })
}

/// Cut-off point and future horizon of the query, in time units.
///
/// # Safety
/// `query` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tq_query_bounds(query: *const TqQuery, cutoff: *mut u64, horizon: *mut u64) -> TqStatus {
    guard(|| {
        let q = handle(query, "query")?;
        put(cutoff, q.query.cutoff, "cutoff")?;
        put(horizon, q.query.future_horizon, "horizon")
    })
}

/// Evaluates the query over the model and writes the classified match report
/// as JSON to `out`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tq_query_execute(
    query: *mut TqQuery,
    model: *const TqModel,
    now: u64,
    out: *mut *mut c_char,
) -> TqStatus {
    guard(|| {
        let q = handle_mut(query, "query")?;
        let m = handle(model, "model")?;
        let report = q.engine.execute_full(&m.graph).or_else(|e| fail(TqStatus::Engine, e))?;
        put_string(out, to_json(&report.classified(q.query.future_horizon, now))?)
    })
}

/// Evaluates the query with the brute-force checker up to `horizon` and
/// writes the result as JSON to `out`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tq_oracle_evaluate(
    query: *const TqQuery,
    model: *const TqModel,
    horizon: u64,
    out: *mut *mut c_char,
) -> TqStatus {
    guard(|| {
        let q = handle(query, "query")?;
        let m = handle(model, "model")?;
        let result = oracle::evaluate(&m.graph, &q.query, horizon).or_else(|e| fail(TqStatus::Invalid, e))?;
        put_string(out, result.to_json())
    })
}

/// # Safety
/// `query` must come from [`tq_query_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tq_query_free(query: *mut TqQuery) {
    if !query.is_null() {
        drop(Box::from_raw(query));
    }
}

/// Creates an adaptation loop with the bundled sepsis queries.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tq_loop_new(variant_: TqVariant, period: u64, out: *mut *mut TqLoop) -> TqStatus {
    guard(|| {
        let mut cfg = LoopConfig::new(variant(variant_), shs::bundled_queries()).with_period(period);
        cfg.timing = false;
        let inner = AdaptationLoop::new(cfg).or_else(|e| fail(TqStatus::Invalid, e))?;
        put(out, Box::into_raw(Box::new(TqLoop { inner })), "out")
    })
}

/// Feeds one event into the loop's model. `applied` is set to 0 when the
/// event was skipped (for example for an unknown patient).
///
/// # Safety
/// `lp` must be a live handle, `patient` a NUL-terminated string; `applied`
/// may be null.
#[no_mangle]
pub unsafe extern "C" fn tq_loop_monitor(
    lp: *mut TqLoop,
    kind: TqEventKind,
    patient: *const c_char,
    timestamp: u64,
    applied: *mut i32,
) -> TqStatus {
    guard(|| {
        let lp = handle_mut(lp, "loop")?;
        let patient = str_arg(patient, "patient")?;
        let kind = match kind {
            TqEventKind::Er => EventKind::ER,
            TqEventKind::Iv => EventKind::IV,
            TqEventKind::Re => EventKind::RE,
        };
        let done =
            lp.inner.monitor(&ShsEvent::new(kind, patient, timestamp)).or_else(|e| fail(TqStatus::Invalid, e))?;
        if !applied.is_null() {
            applied.write(i32::from(done));
        }
        Ok(())
    })
}

/// Runs one analyze, plan, execute and maintain cycle at time `now` and
/// reports the number of violations it detected.
///
/// # Safety
/// `lp` must be a live handle; `new_violations` may be null.
#[no_mangle]
pub unsafe extern "C" fn tq_loop_invoke(lp: *mut TqLoop, now: u64, new_violations: *mut usize) -> TqStatus {
    guard(|| {
        let lp = handle_mut(lp, "loop")?;
        let stats = lp.inner.invoke(now).or_else(|e| fail(TqStatus::Engine, e))?;
        if !new_violations.is_null() {
            new_violations.write(stats.new_violations);
        }
        Ok(())
    })
}

/// Number of elements currently held by the loop's model.
///
/// # Safety
/// `lp` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tq_loop_element_count(lp: *const TqLoop, out: *mut usize) -> TqStatus {
    guard(|| {
        let lp = handle(lp, "loop")?;
        put(out, lp.inner.model().graph().elements().count(), "out")
    })
}

/// All violations detected so far, as a JSON array.
///
/// # Safety
/// `lp` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tq_loop_violations(lp: *const TqLoop, out: *mut *mut c_char) -> TqStatus {
    guard(|| {
        let lp = handle(lp, "loop")?;
        put_string(out, to_json(&lp.inner.violations())?)
    })
}

/// # Safety
/// `lp` must come from [`tq_loop_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tq_loop_free(lp: *mut TqLoop) {
    if !lp.is_null() {
        drop(Box::from_raw(lp));
    }
}

/// Replays a CSV event log through the loop with the bundled queries and
/// writes the run report as JSON to `out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tq_replay_log(
    path: *const c_char,
    variant_: TqVariant,
    period: u64,
    out: *mut *mut c_char,
) -> TqStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let events = logs::ingest(path).or_else(|e| match e {
            logs::LogError::Io(_) => fail(TqStatus::Io, e),
            _ => fail(TqStatus::Parse, e),
        })?;
        let mut cfg = LoopConfig::new(variant(variant_), shs::bundled_queries()).with_period(period);
        cfg.timing = false;
        let outcome = shs::run_loop(&events, &cfg).or_else(|e| fail(TqStatus::Invalid, e))?;
        put_string(out, RunReport::new(&cfg, outcome, Some(path.to_string())).to_json())
    })
}
