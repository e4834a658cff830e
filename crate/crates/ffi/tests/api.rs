use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use marun_ffi::*;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(marun_last_error()) }.to_str().unwrap().to_owned()
}

fn new_default() -> *mut MarunSim {
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { marun_sim_new_default(0.02, &mut sim) }, MarunStatus::Ok);
    assert!(!sim.is_null());
    sim
}

fn hash(sim: *const MarunSim) -> String {
    let mut buf = [0 as c_char; MARUN_HASH_BUFFER_LEN];
    assert_eq!(unsafe { marun_sim_state_hash(sim, buf.as_mut_ptr(), buf.len()) }, MarunStatus::Ok);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap().to_owned()
}

#[test]
fn step_and_read_back() {
    let sim = new_default();
    let (topic, msg) = (cstr("/ursula/limb/1/cmd"), cstr(r#"{"axes":[0.5,-0.5]}"#));
    assert_eq!(unsafe { marun_sim_publish(sim, topic.as_ptr(), msg.as_ptr()) }, MarunStatus::Ok);
    assert_eq!(unsafe { marun_sim_step(sim, 100) }, MarunStatus::Ok);

    let (mut t, mut n) = (0.0, 0u64);
    unsafe {
        assert_eq!(marun_sim_time(sim, &mut t), MarunStatus::Ok);
        assert_eq!(marun_sim_step_index(sim, &mut n), MarunStatus::Ok);
    }
    assert_eq!(n, 100);
    assert!((t - 2.0).abs() < 1e-12);

    let mut count = 0usize;
    let mut xyz = vec![0.0; 3 * 64];
    assert_eq!(unsafe { marun_sim_limb_segments(sim, 1, xyz.as_mut_ptr(), xyz.len(), &mut count) }, MarunStatus::Ok);
    assert!(count > 1);
    let seg: Vec<[f64; 3]> = xyz[..3 * count].chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let d = |a: [f64; 3], b: [f64; 3]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt();
    let first = d(seg[0], seg[1]);
    assert!(seg.windows(2).all(|w| (d(w[0], w[1]) - first).abs() < 1e-9));

    let mut f = [1.0; 3];
    assert_eq!(unsafe { marun_sim_tip_force(sim, 1, f.as_mut_ptr()) }, MarunStatus::Ok);
    assert_eq!(f, [0.0; 3]);
    unsafe { marun_sim_free(sim) };
}

#[test]
fn same_inputs_same_hash() {
    let (a, b) = (new_default(), new_default());
    let (topic, msg) = (cstr("/ursula/vehicle/cmd"), cstr(r#"{"surge":0.4,"yaw_rate":-0.2}"#));
    for s in [a, b] {
        unsafe {
            assert_eq!(marun_sim_publish(s, topic.as_ptr(), msg.as_ptr()), MarunStatus::Ok);
            assert_eq!(marun_sim_step(s, 60), MarunStatus::Ok);
        }
    }
    assert_eq!(hash(a), hash(b));
    assert_eq!(hash(a).len(), 64);
    unsafe {
        marun_sim_free(a);
        marun_sim_free(b);
    }
}

#[test]
fn errors_are_codes_with_messages() {
    let sim = new_default();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(marun_sim_new_default(0.0, &mut out), MarunStatus::InvalidArgument);
        assert!(out.is_null());
        assert!(last_error().contains("dt"));

        assert_eq!(marun_sim_new_default(0.02, ptr::null_mut()), MarunStatus::NullPointer);
        assert_eq!(marun_sim_step(ptr::null_mut(), 1), MarunStatus::NullPointer);

        let (odom, empty) = (cstr("/ursula/vehicle/odom"), cstr("{}"));
        assert_eq!(marun_sim_publish(sim, odom.as_ptr(), empty.as_ptr()), MarunStatus::Command);
        assert!(last_error().contains("wrong direction"), "{}", last_error());

        let (cmd, junk) = (cstr("/ursula/vehicle/cmd"), cstr("{surge"));
        assert_eq!(marun_sim_publish(sim, cmd.as_ptr(), junk.as_ptr()), MarunStatus::Command);

        let bad = [0xffu8, 0];
        assert_eq!(marun_sim_publish(sim, bad.as_ptr().cast(), empty.as_ptr()), MarunStatus::InvalidUtf8);

        let mut small = [0 as c_char; 8];
        assert_eq!(marun_sim_state_hash(sim, small.as_mut_ptr(), small.len()), MarunStatus::BufferTooSmall);

        let mut f = [0.0; 3];
        assert_eq!(marun_sim_tip_force(sim, 9, f.as_mut_ptr()), MarunStatus::InvalidArgument);

        let mut count = 0usize;
        assert_eq!(marun_sim_limb_segments(sim, 0, ptr::null_mut(), 0, &mut count), MarunStatus::BufferTooSmall);
        assert!(count > 0);

        let scene = cstr(r#"{"schema_version": 1, "bodies": 4}"#);
        let mut out = ptr::null_mut();
        assert_eq!(marun_sim_new_from_scene_json(scene.as_ptr(), 0.02, &mut out), MarunStatus::Config);

        // success clears the message
        assert_eq!(marun_sim_step(sim, 1), MarunStatus::Ok);
        assert_eq!(last_error(), "");
        marun_sim_free(sim);
        marun_sim_free(ptr::null_mut());
        marun_string_free(ptr::null_mut());
    }
}

#[test]
fn scene_from_json() {
    let text = std::fs::read_to_string(fixtures().join("scenes/contact.json")).unwrap();
    let scene = cstr(&text);
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { marun_sim_new_from_scene_json(scene.as_ptr(), 0.02, &mut sim) }, MarunStatus::Ok);
    assert_eq!(unsafe { marun_sim_step(sim, 10) }, MarunStatus::Ok);
    unsafe { marun_sim_free(sim) };
}

#[test]
fn scenario_through_the_c_api_matches_the_library() {
    let read = |p: &str| std::fs::read_to_string(fixtures().join(p)).unwrap();
    let (scn, scene, script) = (cstr(&read("test1.json")), cstr(&read("scenes/contact.json")), cstr(&read("sol1.jsonl")));
    let mut out: *mut c_char = ptr::null_mut();
    let status = unsafe { marun_run_scenario_json(scn.as_ptr(), scene.as_ptr(), script.as_ptr(), 0.02, &mut out) };
    assert_eq!(status, MarunStatus::Ok, "{}", last_error());
    let json = unsafe { CStr::from_ptr(out) }.to_str().unwrap().to_owned();
    unsafe { marun_string_free(out) };

    let loaded = marun::scenario::load_scenario(&fixtures().join("test1.json")).unwrap();
    let mut ctl = marun::scenario::ScriptedController::load(&fixtures().join("sol1.jsonl")).unwrap();
    let run = marun::scenario::run_scenario(&loaded.spec, &loaded.scene, &mut ctl, 0.02).unwrap();
    assert_eq!(json, run.record.to_json());
    assert!(run.record.success);
}
