//! C ABI over `nimcore`.
//!
//! Every entry point returns a [`NimcoreStatus`]; on failure the message is
//! available from [`nimcore_last_error`] on the same thread. Circuits are
//! passed around as opaque [`NimcoreCircuit`] handles and released with
//! [`nimcore_circuit_free`]. Strings returned by the library are released
//! with [`nimcore_string_free`]. Positions are arrays of `uint32_t` heap
//! sizes; rule variants are the strings `nim`, `kayles` or `subtraction:1,2,3`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nimcore::agents::{preserving_reply, Agent, FrameHistory, OracleAgent};
use nimcore::circuit::{build_move_validator_circuit, build_nimber_diff_circuit, Circuit, PositionEncoding};
use nimcore::game::GrundySolver;
use nimcore::models::{compile_to_ac0, ThresholdNetwork};
use nimcore::nimber::{nim_sum, nimber_diff, BitWidth};
use nimcore::{Error, GameMove, GameRules, Position};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NimcoreStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPosition = 3,
    IllegalMove = 4,
    ContractViolation = 5,
    ResourceExhausted = 6,
    TerminalPosition = 7,
    ArityMismatch = 8,
    MalformedCircuit = 9,
    ParseError = 10,
    InvalidModel = 11,
    UnsupportedModel = 12,
    Io = 13,
    Panic = 14,
}

/// A move as seen from C. `split` is non-zero only for Kayles row splits.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NimcoreMove {
    pub heap_index: usize,
    pub new_count: u32,
    pub split: u32,
}

impl From<GameMove> for NimcoreMove {
    fn from(m: GameMove) -> Self {
        NimcoreMove { heap_index: m.heap_index, new_count: m.new_count, split: m.split }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct NimcoreMetrics {
    pub depth: usize,
    pub size: usize,
    pub fan_in_max: usize,
}

/// Opaque circuit handle.
pub struct NimcoreCircuit {
    inner: Circuit,
}

struct Failure {
    status: NimcoreStatus,
    message: String,
}

impl Failure {
    fn new(status: NimcoreStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidPosition(_) => NimcoreStatus::InvalidPosition,
            Error::IllegalMove { .. } => NimcoreStatus::IllegalMove,
            Error::ContractViolation(_) => NimcoreStatus::ContractViolation,
            Error::ResourceExhausted(_) => NimcoreStatus::ResourceExhausted,
            Error::TerminalPosition => NimcoreStatus::TerminalPosition,
            Error::ArityMismatch { .. } => NimcoreStatus::ArityMismatch,
            Error::MalformedCircuit(_) => NimcoreStatus::MalformedCircuit,
            Error::Parse { .. } => NimcoreStatus::ParseError,
            Error::InvalidModel(_) => NimcoreStatus::InvalidModel,
            Error::UnsupportedModel(_) | Error::ThresholdCap { .. } => NimcoreStatus::UnsupportedModel,
            Error::Io(_) => NimcoreStatus::Io,
            Error::InvalidRules(_) | Error::MixedVariants { .. } | Error::Agent(_) | Error::Config(_) => {
                NimcoreStatus::InvalidArgument
            }
        };
        Failure { status, message: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn guard(f: impl FnOnce() -> Outcome) -> NimcoreStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            NimcoreStatus::Ok
        }
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            NimcoreStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure::new(NimcoreStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn position(ptr: *const u32, len: usize, what: &str) -> Result<Position, Failure> {
    Ok(Position::new(slice(ptr, len, what)?.to_vec())?)
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(NimcoreStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn rules(ptr: *const c_char) -> Result<GameRules, Failure> {
    Ok(text(ptr, "rules")?.parse()?)
}

unsafe fn circuit<'a>(ptr: *const NimcoreCircuit) -> Result<&'a Circuit, Failure> {
    ptr.as_ref().map(|c| &c.inner).ok_or_else(|| null("circuit"))
}

fn give_circuit(c: Circuit, dst: &mut *mut NimcoreCircuit) {
    *dst = Box::into_raw(Box::new(NimcoreCircuit { inner: c }));
}

/// Message for the last failed call on this thread, or null after a
/// success. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn nimcore_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// XOR of all heap sizes.
///
/// # Safety
/// `heaps` points to `len` readable values; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_nim_sum(heaps: *const u32, len: usize, out_value: *mut u32) -> NimcoreStatus {
    guard(|| {
        let p = position(heaps, len, "heaps")?;
        *out(out_value, "out_value")? = nim_sum(&p).value();
        Ok(())
    })
}

/// Nimber difference of two equal-length positions differing in at most
/// `k_max` heaps; more differences give `ContractViolation`.
///
/// # Safety
/// `p1` and `p2` each point to `len` readable values; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_nimber_diff(
    p1: *const u32,
    p2: *const u32,
    len: usize,
    k_max: usize,
    out_value: *mut u32,
) -> NimcoreStatus {
    guard(|| {
        let (a, b) = (position(p1, len, "p1")?, position(p2, len, "p2")?);
        *out(out_value, "out_value")? = nimber_diff(&a, &b, k_max)?.value();
        Ok(())
    })
}

/// Grundy value of a position under the named rules.
///
/// # Safety
/// `rules_name` is a nul-terminated string; `heaps` points to `len` values.
#[no_mangle]
pub unsafe extern "C" fn nimcore_grundy(
    rules_name: *const c_char,
    heaps: *const u32,
    len: usize,
    out_value: *mut u32,
) -> NimcoreStatus {
    guard(|| {
        let r = rules(rules_name)?;
        let p = position(heaps, len, "heaps")?;
        r.validate(&p)?;
        *out(out_value, "out_value")? = GrundySolver::new(r).grundy(&p)?.value();
        Ok(())
    })
}

/// The optimal-play agent's move (a move to nimber zero when one exists).
///
/// # Safety
/// `rules_name` is a nul-terminated string; `heaps` points to `len` values;
/// `out_move` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_oracle_move(
    rules_name: *const c_char,
    heaps: *const u32,
    len: usize,
    out_move: *mut NimcoreMove,
) -> NimcoreStatus {
    guard(|| {
        let r = rules(rules_name)?;
        let p = position(heaps, len, "heaps")?;
        r.validate(&p)?;
        let history = FrameHistory::new(1, p)?;
        // the oracle never draws from the generator
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = OracleAgent::new().choose(&r, &history, &mut rng)?;
        *out(out_move, "out_move")? = m.into();
        Ok(())
    })
}

/// Reply that undoes the opponent's nimber change between `before` and
/// `after` (NIM, one heap changed). `*out_found` is false when no single-heap
/// reply exists.
///
/// # Safety
/// `before` and `after` each point to `len` values; outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_preserving_reply(
    before: *const u32,
    after: *const u32,
    len: usize,
    out_move: *mut NimcoreMove,
    out_found: *mut bool,
) -> NimcoreStatus {
    guard(|| {
        let (p, q) = (position(before, len, "before")?, position(after, len, "after")?);
        let reply = preserving_reply(&p, &q)?;
        *out(out_found, "out_found")? = reply.is_some();
        *out(out_move, "out_move")? = reply.map(NimcoreMove::from).unwrap_or_default();
        Ok(())
    })
}

/// Parses the circuit text format.
///
/// # Safety
/// `source` is a nul-terminated string; `out_circuit` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_parse(
    source: *const c_char,
    out_circuit: *mut *mut NimcoreCircuit,
) -> NimcoreStatus {
    guard(|| {
        let c = Circuit::from_text(text(source, "text")?)?;
        give_circuit(c, out(out_circuit, "out_circuit")?);
        Ok(())
    })
}

/// Builds the nimber-difference circuit over two `heaps`-heap positions of
/// `bits`-bit heaps. Outputs are the value bits, most significant first,
/// then the validity bit.
///
/// # Safety
/// `out_circuit` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_build_nimber_diff(
    heaps: usize,
    bits: u32,
    k_max: usize,
    out_circuit: *mut *mut NimcoreCircuit,
) -> NimcoreStatus {
    guard(|| {
        let c = build_nimber_diff_circuit(heaps, BitWidth::new(bits)?, k_max)?.into_circuit();
        give_circuit(c, out(out_circuit, "out_circuit")?);
        Ok(())
    })
}

/// Builds the three-frame move-validator circuit.
///
/// # Safety
/// `out_circuit` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_build_validator(
    heaps: usize,
    bits: u32,
    k_max: usize,
    out_circuit: *mut *mut NimcoreCircuit,
) -> NimcoreStatus {
    guard(|| {
        let enc = PositionEncoding::three_frame(heaps, BitWidth::new(bits)?)?;
        let c = build_move_validator_circuit(enc, k_max)?.into_circuit();
        give_circuit(c, out(out_circuit, "out_circuit")?);
        Ok(())
    })
}

/// Compiles a threshold-network JSON description.
///
/// # Safety
/// `json` is a nul-terminated string; `out_circuit` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_model_compile(
    json: *const c_char,
    out_circuit: *mut *mut NimcoreCircuit,
) -> NimcoreStatus {
    guard(|| {
        let net = ThresholdNetwork::from_json(text(json, "json")?)?;
        give_circuit(compile_to_ac0(&net)?, out(out_circuit, "out_circuit")?);
        Ok(())
    })
}

/// Number of input bits the circuit expects.
///
/// # Safety
/// `handle` is a live circuit handle; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_input_arity(
    handle: *const NimcoreCircuit,
    out_value: *mut usize,
) -> NimcoreStatus {
    guard(|| {
        *out(out_value, "out_value")? = circuit(handle)?.input_arity();
        Ok(())
    })
}

/// Number of output bits.
///
/// # Safety
/// `handle` is a live circuit handle; `out_value` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_output_count(
    handle: *const NimcoreCircuit,
    out_value: *mut usize,
) -> NimcoreStatus {
    guard(|| {
        *out(out_value, "out_value")? = circuit(handle)?.outputs().len();
        Ok(())
    })
}

/// Evaluates on one input vector of 0/1 bytes. `outputs_len` must equal the
/// output count.
///
/// # Safety
/// `inputs` points to `inputs_len` bytes; `outputs` to `outputs_len`
/// writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_evaluate(
    handle: *const NimcoreCircuit,
    inputs: *const u8,
    inputs_len: usize,
    outputs: *mut u8,
    outputs_len: usize,
) -> NimcoreStatus {
    guard(|| {
        let c = circuit(handle)?;
        let bits: Vec<bool> = slice(inputs, inputs_len, "inputs")?.iter().map(|&b| b != 0).collect();
        let result = c.evaluate(&bits)?;
        if outputs_len != result.len() {
            return Err(Error::ArityMismatch { expected: result.len(), actual: outputs_len }.into());
        }
        if outputs.is_null() && outputs_len > 0 {
            return Err(null("outputs"));
        }
        for (i, &b) in result.iter().enumerate() {
            *outputs.add(i) = u8::from(b);
        }
        Ok(())
    })
}

/// # Safety
/// `handle` is a live circuit handle; `out_metrics` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_metrics(
    handle: *const NimcoreCircuit,
    out_metrics: *mut NimcoreMetrics,
) -> NimcoreStatus {
    guard(|| {
        let m = circuit(handle)?.metrics();
        *out(out_metrics, "out_metrics")? = NimcoreMetrics { depth: m.depth, size: m.size, fan_in_max: m.fan_in_max };
        Ok(())
    })
}

/// Serializes to the text format. Free the string with
/// [`nimcore_string_free`].
///
/// # Safety
/// `handle` is a live circuit handle; `out_text` is writable.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_to_text(
    handle: *const NimcoreCircuit,
    out_text: *mut *mut c_char,
) -> NimcoreStatus {
    guard(|| {
        let s = CString::new(circuit(handle)?.to_text())
            .map_err(|_| Failure::new(NimcoreStatus::MalformedCircuit, "text contains a nul byte"))?;
        *out(out_text, "out_text")? = s.into_raw();
        Ok(())
    })
}

/// Releases a circuit handle. Null is ignored.
///
/// # Safety
/// `handle` is null or a circuit from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nimcore_circuit_free(handle: *mut NimcoreCircuit) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` is null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nimcore_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
