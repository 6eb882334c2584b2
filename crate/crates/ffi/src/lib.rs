//! C ABI over toeplitz-lab. Decks are opaque handles; every call returns a `TlStatus` and the
//! message of the last failure on the calling thread is available from `tl_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use toeplitz_lab::config::{Deck, DeckConfig};
use toeplitz_lab::lattice::GroupElement;
use toeplitz_lab::suites::{verify_all, Options};
use toeplitz_lab::{measures, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidConfig = 2,
    InvariantViolation = 3,
    DepthExhausted = 4,
    BudgetExhausted = 5,
    Io = 6,
    Panic = 7,
}

/// Opaque deck handle.
pub struct TlDeck {
    deck: Deck,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TlStatus {
    match e {
        Error::Invariant(_) | Error::Verification(_) => TlStatus::InvariantViolation,
        Error::DepthExhausted(_) | Error::LevelOutOfRange { .. } => TlStatus::DepthExhausted,
        Error::Budget(_) => TlStatus::BudgetExhausted,
        Error::Io(_) => TlStatus::Io,
        _ => TlStatus::InvalidConfig,
    }
}

fn guard(f: impl FnOnce() -> Result<(), TlStatus>) -> TlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside toeplitz-lab".into());
            TlStatus::Panic
        }
    }
}

fn fail(e: Error) -> TlStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> TlStatus {
    set_error(format!("{what} is null"));
    TlStatus::NullPointer
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, TlStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{what} is not UTF-8"));
        TlStatus::InvalidConfig
    })
}

unsafe fn deck_arg<'a>(d: *const TlDeck) -> Result<&'a Deck, TlStatus> {
    d.as_ref().map(|d| &d.deck).ok_or_else(|| null("deck"))
}

unsafe fn put_deck(cfg: Result<DeckConfig, Error>, out: *mut *mut TlDeck) -> Result<(), TlStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    let deck = cfg.and_then(DeckConfig::build).map_err(fail)?;
    *out = Box::into_raw(Box::new(TlDeck { deck }));
    Ok(())
}

/// Loads a bundled deck by name ("williams-m2", "z2-m2", ...).
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_deck_load_bundled(name: *const c_char, out: *mut *mut TlDeck) -> TlStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        put_deck(DeckConfig::bundled(name), out)
    })
}

/// Loads a deck from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tl_deck_load_file(path: *const c_char, out: *mut *mut TlDeck) -> TlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put_deck(DeckConfig::load(Path::new(path)), out)
    })
}

/// # Safety
/// `deck` must come from a `tl_deck_load_*` call and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tl_deck_free(deck: *mut TlDeck) {
    if !deck.is_null() {
        drop(Box::from_raw(deck));
    }
}

/// Lattice rank r and order of the finite part.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_deck_shape(deck: *const TlDeck, rank: *mut usize, finite_order: *mut usize) -> TlStatus {
    guard(|| {
        let d = deck_arg(deck)?;
        if rank.is_null() || finite_order.is_null() {
            return Err(null("out"));
        }
        *rank = d.array().chain().rank();
        *finite_order = d.array().chain().finite_order();
        Ok(())
    })
}

/// η at (v, f): symbol and defining level.
///
/// # Safety
/// `v` must point to `len` integers; out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_eta_value(
    deck: *const TlDeck,
    v: *const i64,
    len: usize,
    f: usize,
    out_symbol: *mut u8,
    out_level: *mut u32,
) -> TlStatus {
    guard(|| {
        let d = deck_arg(deck)?;
        if v.is_null() || out_symbol.is_null() || out_level.is_null() {
            return Err(null("argument"));
        }
        let coords = std::slice::from_raw_parts(v, len);
        let g = GroupElement::new(coords, f);
        d.array().group().conforms(&g).map_err(fail)?;
        let cell = d.array().cell(&g).ok_or_else(|| {
            fail(Error::DepthExhausted(format!("{g} is not reached within the configured levels")))
        })?;
        *out_symbol = cell.symbol;
        *out_level = cell.level;
        Ok(())
    })
}

/// Frequencies of η over D_nR as fractions, in alphabet order. `out_len` receives the alphabet
/// size; nothing is written past `cap`.
///
/// # Safety
/// The three arrays must hold `cap` entries; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_mu_n_freq(
    deck: *const TlDeck,
    n: usize,
    symbols: *mut u8,
    numerators: *mut i64,
    denominators: *mut i64,
    cap: usize,
    out_len: *mut usize,
) -> TlStatus {
    guard(|| {
        let d = deck_arg(deck)?;
        if out_len.is_null() || (cap > 0 && (symbols.is_null() || numerators.is_null() || denominators.is_null())) {
            return Err(null("argument"));
        }
        let t = d
            .array
            .group_toeplitz()
            .ok_or_else(|| fail(Error::Config(format!("{} is not a group deck", d.name()))))?;
        let mu = measures::mu_n_freq(t, n).map_err(fail)?;
        *out_len = mu.symbols.len();
        for (k, (s, m)) in mu.symbols.iter().zip(&mu.mass).enumerate().take(cap) {
            *symbols.add(k) = *s;
            *numerators.add(k) = *m.numer() as i64;
            *denominators.add(k) = *m.denom() as i64;
        }
        Ok(())
    })
}

/// Whether the counted d_{n+1} equals the product formula.
///
/// # Safety
/// `out_equal` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_d_product_check(deck: *const TlDeck, n: usize, out_equal: *mut bool) -> TlStatus {
    guard(|| {
        let d = deck_arg(deck)?;
        if out_equal.is_null() {
            return Err(null("out_equal"));
        }
        *out_equal = measures::d_product_check(d.array(), n).map_err(fail)?.equal;
        Ok(())
    })
}

/// Runs every suite and returns the verdict document as JSON. Release it with `tl_string_free`.
/// Returns `TL_STATUS_INVARIANT_VIOLATION` (with the document still written) when a hard check fails.
///
/// # Safety
/// `out_json` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tl_verify_all_json(deck: *const TlDeck, out_json: *mut *mut c_char) -> TlStatus {
    guard(|| {
        let d = deck_arg(deck)?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        let v = verify_all(d, &Options::default()).map_err(fail)?;
        let text = serde_json::to_string(&v).map_err(|e| fail(e.into()))?;
        *out_json = CString::new(text).expect("JSON has no NUL").into_raw();
        if v.budget_exhausted {
            set_error("a required search ran out of budget".into());
            return Err(TlStatus::BudgetExhausted);
        }
        if !v.passed {
            set_error("a hard check failed".into());
            return Err(TlStatus::InvariantViolation);
        }
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failure on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn tl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
