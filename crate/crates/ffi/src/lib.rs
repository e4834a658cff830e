//! C ABI over the simulator.
//!
//! Every function returns a [`MarunStatus`]; on failure the message is
//! available from [`marun_last_error`] on the same thread. Handles are
//! opaque and must be released with [`marun_sim_free`]; strings returned by
//! the library are released with [`marun_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use marun::bridge::topics::parse_command;
use marun::scenario::{run_scenario, ScenarioSpec, Scene, ScriptedController};
use marun::sim::Simulation;

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarunStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Command = 5,
    Physics = 6,
    Scenario = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Opaque simulation handle.
pub struct MarunSim {
    sim: Simulation,
}

/// Length of a state hash including the terminating NUL.
pub const MARUN_HASH_BUFFER_LEN: usize = 65;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("NULs removed"));
}

struct Failure(MarunStatus, String);

type Res<T> = Result<T, Failure>;

fn fail<T>(status: MarunStatus, msg: impl Into<String>) -> Res<T> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, recording any failure or panic.
fn guard(f: impl FnOnce() -> Res<()>) -> MarunStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MarunStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MarunStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return fail(MarunStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p).to_str().or_else(|_| fail(MarunStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn sim_mut<'a>(p: *mut MarunSim) -> Res<&'a mut MarunSim> {
    p.as_mut().map_or_else(|| fail(MarunStatus::NullPointer, "sim is null"), Ok)
}

unsafe fn sim_ref<'a>(p: *const MarunSim) -> Res<&'a MarunSim> {
    p.as_ref().map_or_else(|| fail(MarunStatus::NullPointer, "sim is null"), Ok)
}

fn check_out<T>(p: *mut T, what: &str) -> Res<()> {
    if p.is_null() {
        return fail(MarunStatus::NullPointer, format!("{what} is null"));
    }
    Ok(())
}

fn check_dt(dt: f64) -> Res<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return fail(MarunStatus::InvalidArgument, format!("dt must be positive, got {dt}"));
    }
    Ok(())
}

fn check_limb(s: &MarunSim, limb: u32) -> Res<usize> {
    let n = s.sim.robot().limbs.len();
    if (limb as usize) < n {
        Ok(limb as usize)
    } else {
        fail(MarunStatus::InvalidArgument, format!("limb {limb} out of range (0..{n})"))
    }
}

fn build(scene: &Scene, dt: f64, out: *mut *mut MarunSim) -> Res<()> {
    let sim = scene.build_simulation(dt).or_else(|e| fail(MarunStatus::Config, e.to_string()))?;
    // SAFETY: checked non-null by the caller.
    unsafe { *out = Box::into_raw(Box::new(MarunSim { sim })) };
    Ok(())
}

/// Message describing the last failure on this thread; empty after a
/// successful call. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn marun_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Robot alone in open water.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_new_default(dt: f64, out: *mut *mut MarunSim) -> MarunStatus {
    guard(|| {
        check_out(out, "out")?;
        check_dt(dt)?;
        build(&Scene::empty(), dt, out)
    })
}

/// Robot plus the bodies of a scene document.
///
/// # Safety
/// `scene_json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_new_from_scene_json(scene_json: *const c_char, dt: f64, out: *mut *mut MarunSim) -> MarunStatus {
    guard(|| {
        check_out(out, "out")?;
        check_dt(dt)?;
        let text = text(scene_json, "scene_json")?;
        let scene = Scene::from_json_str(text, "scene").or_else(|e| fail(MarunStatus::Config, e.to_string()))?;
        build(&scene, dt, out)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sim` must come from a `marun_sim_new_*` call and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_free(sim: *mut MarunSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Applies a command message (JSON) to a command topic, taking effect at
/// the next step.
///
/// # Safety
/// `sim` must be a live handle; `topic` and `msg_json` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_publish(sim: *mut MarunSim, topic: *const c_char, msg_json: *const c_char) -> MarunStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        let topic = text(topic, "topic")?;
        let msg: serde_json::Value = serde_json::from_str(text(msg_json, "msg_json")?)
            .or_else(|e| fail(MarunStatus::Command, format!("msg is not JSON: {e}")))?;
        let cmd = parse_command(topic, &msg).or_else(|e| fail(MarunStatus::Command, e.to_string()))?;
        s.sim.apply(&cmd);
        Ok(())
    })
}

/// Advances `steps` fixed steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_step(sim: *mut MarunSim, steps: u32) -> MarunStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        for _ in 0..steps {
            s.sim.step(&[]).or_else(|e| fail(MarunStatus::Physics, e.to_string()))?;
        }
        Ok(())
    })
}

/// Simulation time, s.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_time(sim: *const MarunSim, out: *mut f64) -> MarunStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        check_out(out, "out")?;
        *out = s.sim.time();
        Ok(())
    })
}

/// Steps taken so far.
///
/// # Safety
/// `sim` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_step_index(sim: *const MarunSim, out: *mut u64) -> MarunStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        check_out(out, "out")?;
        *out = s.sim.step_index();
        Ok(())
    })
}

/// Writes the 64-character hex state hash and a NUL into `buf`, which must
/// hold at least `MARUN_HASH_BUFFER_LEN` bytes.
///
/// # Safety
/// `sim` must be a live handle; `buf` must be writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_state_hash(sim: *const MarunSim, buf: *mut c_char, len: usize) -> MarunStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        check_out(buf, "buf")?;
        let hash = s.sim.state_hash();
        if len < hash.len() + 1 {
            return fail(MarunStatus::BufferTooSmall, format!("need {} bytes, got {len}", hash.len() + 1));
        }
        ptr::copy_nonoverlapping(hash.as_ptr().cast::<c_char>(), buf, hash.len());
        *buf.add(hash.len()) = 0;
        Ok(())
    })
}

/// World-frame (x, y, z) origins of a limb's segments, proximal first,
/// written to `xyz` (3 doubles per segment). `count` receives the segment
/// count; if `capacity` (in doubles) is too small nothing else is written.
///
/// # Safety
/// `sim` must be a live handle; `xyz` writable for `capacity` doubles;
/// `count` writable.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_limb_segments(
    sim: *const MarunSim,
    limb: u32,
    xyz: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> MarunStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        check_out(count, "count")?;
        let limb = check_limb(s, limb)?;
        let ids = s.sim.segment_ids(limb);
        *count = ids.len();
        if capacity < 3 * ids.len() {
            return fail(MarunStatus::BufferTooSmall, format!("need {} doubles, got {capacity}", 3 * ids.len()));
        }
        check_out(xyz, "xyz")?;
        let out = std::slice::from_raw_parts_mut(xyz, 3 * ids.len());
        for (chunk, id) in out.chunks_exact_mut(3).zip(ids) {
            let p = s.sim.world().body(*id).state.pose.position;
            chunk.copy_from_slice(&[p.x, p.y, p.z]);
        }
        Ok(())
    })
}

/// Estimated contact force at a limb tip, world frame, N.
///
/// # Safety
/// `sim` must be a live handle; `xyz` writable for 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn marun_sim_tip_force(sim: *const MarunSim, limb: u32, xyz: *mut f64) -> MarunStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        check_out(xyz, "xyz")?;
        let limb = check_limb(s, limb)?;
        let f = s.sim.limb_state(limb).tip_contact_force;
        std::slice::from_raw_parts_mut(xyz, 3).copy_from_slice(&[f.x, f.y, f.z]);
        Ok(())
    })
}

/// Runs a scenario headless with a scripted command stream (JSON lines of
/// `{step, topic, msg}`) and returns the metrics record as JSON in
/// `metrics_json`, to be released with `marun_string_free`.
///
/// # Safety
/// The three inputs must be NUL-terminated strings; `metrics_json` writable.
#[no_mangle]
pub unsafe extern "C" fn marun_run_scenario_json(
    scenario_json: *const c_char,
    scene_json: *const c_char,
    script_jsonl: *const c_char,
    dt: f64,
    metrics_json: *mut *mut c_char,
) -> MarunStatus {
    guard(|| {
        check_out(metrics_json, "metrics_json")?;
        check_dt(dt)?;
        let spec = ScenarioSpec::from_json_str(text(scenario_json, "scenario_json")?, "scenario")
            .or_else(|e| fail(MarunStatus::Config, e.to_string()))?;
        let scene = Scene::from_json_str(text(scene_json, "scene_json")?, "scene")
            .or_else(|e| fail(MarunStatus::Config, e.to_string()))?;
        let mut script = ScriptedController::parse(text(script_jsonl, "script_jsonl")?)
            .or_else(|e| fail(MarunStatus::Scenario, e.to_string()))?;
        let run = run_scenario(&spec, &scene, &mut script, dt).or_else(|e| fail(MarunStatus::Scenario, e.to_string()))?;
        let json = CString::new(run.record.to_json()).or_else(|_| fail(MarunStatus::Scenario, "metrics contain NUL"))?;
        *metrics_json = json.into_raw();
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn marun_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
