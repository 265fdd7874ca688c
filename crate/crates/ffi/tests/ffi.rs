use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use treebalance_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(tb_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn perfect(depth: u32) -> *mut TbTree {
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { tb_tree_perfect(depth, &mut t) }, TbStatus::Ok);
    t
}

#[test]
fn tree_construction_and_counts() {
    unsafe {
        let t = perfect(10);
        let mut n = 0;
        assert_eq!(tb_tree_node_count(t, &mut n), TbStatus::Ok);
        assert_eq!(n, 2047);
        tb_tree_free(t);

        let mut f = ptr::null_mut();
        assert_eq!(tb_tree_fibonacci(10, &mut f), TbStatus::Ok);
        assert_eq!(tb_tree_node_count(f, &mut n), TbStatus::Ok);
        assert_eq!(n, 109);
        tb_tree_free(f);

        let text = CString::new("((. .) (. .))").unwrap();
        let mut p = ptr::null_mut();
        assert_eq!(tb_tree_parse(text.as_ptr(), &mut p), TbStatus::Ok);
        assert_eq!(tb_tree_node_count(p, &mut n), TbStatus::Ok);
        assert_eq!(n, 3);
        tb_tree_free(p);

        let mut r = ptr::null_mut();
        assert_eq!(tb_tree_biased_random(1000, 0.5, 7, &mut r), TbStatus::Ok);
        assert_eq!(tb_tree_node_count(r, &mut n), TbStatus::Ok);
        assert_eq!(n, 1000);
        tb_tree_free(r);

        tb_tree_free(ptr::null_mut());
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let bad = CString::new("(. ").unwrap();
        let mut t = ptr::null_mut();
        assert_eq!(tb_tree_parse(bad.as_ptr(), &mut t), TbStatus::ParseError);
        assert!(t.is_null());
        assert!(!last_error().is_empty());

        assert_eq!(
            tb_tree_node_count(ptr::null(), &mut 0),
            TbStatus::NullPointer
        );
        assert_eq!(tb_tree_perfect(3, ptr::null_mut()), TbStatus::NullPointer);
        assert_eq!(tb_tree_fibonacci(0, &mut t), TbStatus::InvalidArgument);

        let tree = perfect(4);
        let mut config = tb_config_default();
        config.p = 0;
        let mut plan = ptr::null_mut();
        assert_eq!(
            tb_partition(tree, &config, &mut plan),
            TbStatus::InvalidArgument
        );
        assert!(last_error().contains("p must be"));
        tb_tree_free(tree);

        let tree = perfect(2);
        assert_eq!(tb_tree_node_count(tree, &mut 0), TbStatus::Ok);
        assert_eq!(last_error(), "");
        tb_tree_free(tree);
    }
}

#[test]
fn estimates() {
    unsafe {
        let tree = perfect(12);
        let config = tb_config_default();
        let mut est = 0.0;
        let mut probes = 0;
        assert_eq!(
            tb_estimate_node_count(tree, &config, &mut est, &mut probes),
            TbStatus::Ok
        );
        assert_eq!(est, 8191.0);
        assert!(probes >= 1);
        assert_eq!(
            tb_estimate_node_count(tree, &config, &mut est, ptr::null_mut()),
            TbStatus::Ok
        );
        tb_tree_free(tree);
        assert_eq!(tb_fast_node_count(0.0), 1.0593);
    }
}

#[test]
fn partition_plans() {
    unsafe {
        let tree = perfect(10);
        let mut config = tb_config_default();
        config.p = 4;
        let mut plan = ptr::null_mut();
        assert_eq!(tb_partition(tree, &config, &mut plan), TbStatus::Ok);
        // the plan owns its data
        tb_tree_free(tree);

        let mut workers = 0;
        assert_eq!(tb_plan_workers(plan, &mut workers), TbStatus::Ok);
        assert_eq!(workers, 4);
        let mut total = 0;
        for w in 0..workers {
            let mut n = 0;
            assert_eq!(tb_plan_worker_node_count(plan, w, &mut n), TbStatus::Ok);
            total += n;
            let mut e = 0.0;
            assert_eq!(tb_plan_worker_estimated_work(plan, w, &mut e), TbStatus::Ok);
            assert!(e > 0.0);
            let mut roots = 0;
            assert_eq!(tb_plan_worker_root_count(plan, w, &mut roots), TbStatus::Ok);
            assert!(roots >= 1);
        }
        assert_eq!(total, 2047);
        assert_eq!(
            tb_plan_worker_node_count(plan, 4, &mut 0),
            TbStatus::InvalidArgument
        );

        let mut needed = 0;
        assert_eq!(
            tb_plan_to_text(plan, ptr::null_mut(), 0, &mut needed),
            TbStatus::BufferTooSmall
        );
        let mut buf = vec![0 as std::ffi::c_char; needed];
        assert_eq!(
            tb_plan_to_text(plan, buf.as_mut_ptr(), buf.len(), &mut needed),
            TbStatus::Ok
        );
        let text = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert!(text.starts_with("treebalance-plan 1\nworkers 4\n"));
        assert_eq!(text.len() + 1, needed);
        tb_plan_free(plan);

        let tree = perfect(3);
        let mut trivial = ptr::null_mut();
        assert_eq!(tb_trivial_partition(tree, 3, &mut trivial), TbStatus::Ok);
        let mut n = 0;
        assert_eq!(tb_plan_worker_node_count(trivial, 0, &mut n), TbStatus::Ok);
        assert_eq!(n, 9);
        tb_plan_free(trivial);
        tb_tree_free(tree);
        tb_plan_free(ptr::null_mut());
    }
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(crate_dir().join("include/treebalance.h")).unwrap();
    for name in [
        "#ifndef TREEBALANCE_H",
        "typedef struct TbTree TbTree;",
        "typedef struct TbPlan TbPlan;",
        "TB_STATUS_OK = 0",
        "TB_STATUS_PANIC = 9",
        "typedef struct TbConfig",
        "tb_last_error(void)",
        "tb_config_default(void)",
        "tb_tree_fibonacci(",
        "tb_tree_biased_random(",
        "tb_tree_perfect(",
        "tb_tree_parse(",
        "tb_tree_free(",
        "tb_tree_node_count(",
        "tb_estimate_node_count(",
        "tb_fast_node_count(",
        "tb_partition(",
        "tb_trivial_partition(",
        "tb_plan_free(",
        "tb_plan_workers(",
        "tb_plan_worker_node_count(",
        "tb_plan_worker_estimated_work(",
        "tb_plan_worker_root_count(",
        "tb_plan_to_text(",
    ] {
        assert!(header.contains(name), "header is missing {name}");
    }
}

/// `target/<profile>` of the running test binary.
fn profile_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(Path::parent).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = profile_dir().join("libtreebalance_ffi.a");
    assert!(
        lib.exists(),
        "static library not built at {}",
        lib.display()
    );
    let dir = std::env::temp_dir().join(format!("tb-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "treebalance.h"

int main(void) {
    TbTree *tree = NULL;
    if (tb_tree_fibonacci(20, &tree) != TB_STATUS_OK) return 1;
    TbConfig config = tb_config_default();
    config.p = 4;
    TbPlan *plan = NULL;
    if (tb_partition(tree, &config, &plan) != TB_STATUS_OK) return 2;
    uint64_t total = 0;
    for (uint32_t w = 0; w < 4; w++) {
        uint64_t n = 0;
        if (tb_plan_worker_node_count(plan, w, &n) != TB_STATUS_OK) return 3;
        total += n;
    }
    uint64_t expected = 0;
    tb_tree_node_count(tree, &expected);
    if (tb_tree_parse("(", &tree) != TB_STATUS_PARSE_ERROR) return 4;
    printf("%llu %llu %s\n", (unsigned long long)total, (unsigned long long)expected,
           tb_last_error()[0] ? "error-set" : "error-empty");
    tb_plan_free(plan);
    tb_tree_free(tree);
    return total == expected ? 0 : 5;
}
"#,
    )
    .unwrap();
    let exe = dir.join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("run the C compiler");
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "C program exited with {:?}",
        out.status
    );
    assert_eq!(
        String::from_utf8_lossy(&out.stdout).trim(),
        "13529 13529 error-set"
    );
    let _ = std::fs::remove_dir_all(&dir);
}
