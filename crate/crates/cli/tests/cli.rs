use std::io::Write;
use std::process::{Command, Stdio};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn rwpe(args: &[&str], stdin: &str) -> Run {
    let mut child = Command::new(env!("CARGO_BIN_EXE_rwpe"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // commands that never read stdin close the pipe early
    let _ = child.stdin.take().unwrap().write_all(stdin.as_bytes());
    let out = child.wait_with_output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

#[test]
fn rewrite_with_bundled_rules() {
    let r = rwpe(&["rewrite", "--verify"], "(x + 0) * 1 + (2 + 3)");
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout.trim(), "x + 5");
    assert!(r.stderr.contains("verify: ok"));
}

#[test]
fn naive_trace_lists_steps() {
    let r = rwpe(&["rewrite", "--engine", "naive-topdown", "--trace"], "(x+0)+(y+0)");
    assert_eq!(r.code, 0);
    let steps: Vec<&str> = r.stderr.lines().filter(|l| l.starts_with("step")).collect();
    assert_eq!(steps, ["step add_zero at [0,1] 5 -> 1 (goal 13)", "step add_zero at [1] 5 -> 1 (goal 9)"]);
    assert_eq!(r.stdout.trim(), "x + y");
}

#[test]
fn engines_agree_on_output() {
    let src = "let a = x + 0 in let b = a * 1 in b + a";
    let outs: Vec<String> = ["nbe", "naive-topdown", "naive-bottomup"]
        .iter()
        .map(|e| rwpe(&["rewrite", "--engine", e, "--verify"], src))
        .map(|r| {
            assert_eq!(r.code, 0, "{}", r.stderr);
            r.stdout
        })
        .collect();
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[1], outs[2]);
}

#[test]
fn rule_file_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.rules");
    std::fs::write(&p, "rule sub_neg : forall (x : int) (y : int), x - (0 - y) => x + y\n").unwrap();
    let r = rwpe(&["rewrite", "--rules", p.to_str().unwrap()], "(a * 2) - (0 - b)");
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout.trim(), "a * 2 + b");
    let r = rwpe(&["check", p.to_str().unwrap()], "");
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout.trim(), "ok    sub_neg");
}

#[test]
fn check_reports_bad_rules_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.rules");
    std::fs::write(&p, "rule fine : forall (x : int), x * 1 => x\nrule leak : forall (x : int), x * 0 => y\n").unwrap();
    let r = rwpe(&["check", p.to_str().unwrap()], "");
    assert_eq!(r.code, 1);
    assert!(r.stdout.contains("ok    fine"));
    assert!(r.stdout.contains("error leak"));
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(rwpe(&["rewrite"], "(x +").code, 2);
    assert_eq!(rwpe(&["rewrite", "/nonexistent/term"], "").code, 2);
    assert_eq!(rwpe(&["rewrite", "--engine", "sideways"], "x").code, 2);
    assert_eq!(rwpe(&["bench", "--family", "nope", "--n", "1"], "").code, 2);
    assert_eq!(rwpe(&["frobnicate"], "").code, 2);
}

#[test]
fn analyze_bounds_inserts_clips() {
    let r = rwpe(&["analyze-bounds", "--bounds", "a=0..10", "--bounds", "b=0..5"], "let t = a + b in t + 0");
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(r.stdout.trim(), "let t = clip[0,10](a) + clip[0,5](b) in clip[0,14](t) + 0");
    assert!(r.stderr.contains("t : [0, 14)"));
}

#[test]
fn bounds_enable_the_carry_rule() {
    let src = "let t = a * b in add_with_carry64 t 0";
    let narrow = rwpe(&["rewrite", "--stats", "--verify", "--bounds", "a=0..65536", "--bounds", "b=0..65536"], src);
    assert_eq!(narrow.code, 0, "{}", narrow.stderr);
    assert!(narrow.stdout.contains("in (0, clip[0,4294836226](t))"), "{}", narrow.stdout);
    assert!(narrow.stderr.contains("adc64_zero"), "{}", narrow.stderr);
    let wide = rwpe(&["rewrite", "--bounds", "a=0..18446744073709551616", "--bounds", "b=0..3"], src);
    assert_eq!(wide.code, 0, "{}", wide.stderr);
    assert!(wide.stdout.contains("add_with_carry64"), "{}", wide.stdout);
}

#[test]
fn bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("out.csv");
    let r = rwpe(
        &["bench", "--family", "liftlets_map", "--engine", "naive-bottomup", "--n", "1,2", "--m", "2", "--repetitions", "1", "--out", p.to_str().unwrap()],
        "",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let recs = rwpe::bench::read_csv(std::fs::File::open(&p).unwrap()).unwrap();
    assert_eq!(recs.len(), 2);
    assert!(recs.iter().all(|r| r.ok() && r.engine == "naive-bottomup"));
    assert_eq!(recs.iter().map(|r| r.lets_lifted).collect::<Vec<_>>(), [3, 6]);
    let head = std::fs::read_to_string(&p).unwrap();
    assert_eq!(head.lines().next(), Some(rwpe::bench::CSV_HEADER));
}

#[test]
fn stdlib_passes_check() {
    let r = rwpe(&["stdlib"], "");
    assert_eq!(r.code, 0);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("std.rules");
    std::fs::write(&p, &r.stdout).unwrap();
    let c = rwpe(&["check", p.to_str().unwrap()], "");
    assert_eq!(c.code, 0, "{}", c.stdout);
    assert_eq!(c.stdout.lines().filter(|l| l.starts_with("ok")).count(), 16);
}
