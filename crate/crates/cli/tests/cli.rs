use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

fn scratch(name: &str, contents: &str) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let dir = std::env::temp_dir().join(format!("clslab-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join(format!("{}-{name}", COUNTER.fetch_add(1, Ordering::Relaxed)));
    fs::write(&path, contents).unwrap();
    path
}

fn clslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clslab")).args(args).output().expect("binary runs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = clslab(args);
    (
        out.status.code().expect("exited"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn p(path: &PathBuf) -> &str {
    path.to_str().unwrap()
}

const ONE_DIM: &str = "1\n1\n-1\n";
const PATH3: &str = "EOPL 2 2\n00 01 00 0\n01 10 00 1\n10 10 01 2\n";
const CLO: &str = "PROBLEM CLO\ndim 1\nnorm 1\neps 1/2\nlambda 1\nf\nARITH 1 2 1\nCONST 1/2\nMUL 0 1\n2\np\nARITH 1 0 1\n0\n";

#[test]
fn pipeline_on_files() {
    let (code, out, _) = run(&["pipeline", "plcp", p(&scratch("one.lcp", ONE_DIM))]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("direct  Q1 1") && out.contains("reduced Q1 1"), "{out}");
    assert!(out.contains("CERTIFICATE"), "{out}");

    let (code, out, _) = run(&["pipeline", "plcp", p(&scratch("triv.lcp", "1\n1\n2\n"))]);
    assert_eq!(code, 0);
    assert!(out.contains("reduced Q1 0"), "{out}");

    let (code, out, _) = run(&["pipeline", "plcp", p(&scratch("tie.lcp", "2\n1 0\n0 1\n-1 -1\n"))]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("degenerate"), "{out}");
}

#[test]
fn pipeline_random_batch_is_seeded() {
    let a = run(&["pipeline", "plcp", "--random", "6", "--seed", "11", "--max-dim", "3"]);
    let b = run(&["pipeline", "plcp", "--random", "6", "--seed", "11", "--max-dim", "3"]);
    assert_eq!(a.0, 0, "{}", a.1);
    assert_eq!(a.1, b.1);
    assert_eq!(a.1.matches("agree").count(), 6);
}

#[test]
fn solve_and_check() {
    let f = scratch("one.lcp", ONE_DIM);
    let (code, out, _) = run(&["solve-lcp", p(&f), "--trace"]);
    assert_eq!(code, 0);
    assert!(out.contains("outcome Q1 1") && out.contains("vertex 0"), "{out}");
    assert_eq!(run(&["check-pmatrix", p(&f)]).0, 0);
    let (code, out, _) = run(&["check-pmatrix", p(&scratch("np.lcp", "2\n0 1\n1 0\n-1 -1\n"))]);
    assert_eq!(code, 1);
    assert!(out.contains("S={1}"), "{out}");
    // With the opposite sign convention M = [[1]] reads as [[-1]].
    let (_, out, _) = run(&["--paper-sign", "check-pmatrix", p(&f)]);
    assert!(out.contains("not a P-matrix"), "{out}");
}

#[test]
fn reduce_then_enumerate() {
    let src = scratch("m.eoml", "EOML 3\n000 001 000 1\n001 010 000 2\n010 010 001 3\n");
    let dst = src.with_extension("eopl");
    assert_eq!(run(&["reduce", "eoml-eopl", p(&src), "-o", p(&dst)]).0, 0);
    let text = fs::read_to_string(&dst).unwrap();
    assert!(text.starts_with("EOPL 4 4\n"), "{text}");
    let (code, out, _) = run(&["enumerate", p(&dst)]);
    assert_eq!(code, 0);
    assert_eq!(out, "R1 1010\n1 solutions\n");
}

#[test]
fn reduce_trivial_eopl_is_immediate() {
    let src = scratch("end.eopl", "EOPL 2 2\n00 01 00 0\n01 01 00 1\n");
    let (code, out, _) = run(&["reduce", "eopl-eoml", p(&src)]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "immediate R1 01");
}

#[test]
fn reduce_circuit_instances() {
    let (code, out, _) = run(&["reduce", "clo-mmc", p(&scratch("a.clo", CLO))]);
    assert_eq!(code, 0);
    assert!(out.starts_with("PROBLEM MMC\n") && out.contains("\nc 7/8\n"), "{out}");
    let mmc = scratch("b.mmc", &out);
    let (code, out, _) = run(&["reduce", "mmc-gc", p(&mmc)]);
    assert_eq!(code, 0);
    assert!(out.starts_with("PROBLEM GC\n"), "{out}");
    let (code, _, err) = run(&["reduce", "gc-clo", p(&mmc)]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn follow_streams_a_trace() {
    let f = scratch("p.eopl", PATH3);
    let (code, out, _) = run(&["follow", p(&f), "--trace"]);
    assert_eq!(code, 0);
    assert_eq!(out, "0 00 0\n1 01 1\n2 10 2\nsolution R1 10 after 2 steps\n");
    let (code, out, _) = run(&["follow", p(&f), "--max-steps", "1", "--trace"]);
    assert_eq!(code, 1);
    assert_eq!(out, "0 00 0\n1 01 1\n");
    let (code, out, _) = run(&["follow", p(&scratch("one.lcp", ONE_DIM))]);
    assert_eq!(code, 0);
    assert!(out.contains("solution R1 10") && out.contains("lcp Q1 1"), "{out}");
}

#[test]
fn verify_exit_codes() {
    let inst = scratch("p.eopl", PATH3);
    let (code, out, _) = run(&["verify", "eopl", p(&inst), p(&scratch("s", "R1 10\n"))]);
    assert_eq!(code, 0, "{out}");
    // An R2 claim at 01 needs V(S(01)) <= V(01), but 2 > 1.
    let (code, out, _) = run(&["verify", "eopl", p(&inst), p(&scratch("s", "R2 01\n"))]);
    assert_eq!(code, 1);
    assert!(out.contains("V(x) = 1, V(S(x)) = 2"), "{out}");
    let (code, _, _) = run(&["verify", "eopl", p(&inst), p(&scratch("s", "Q7 01\n"))]);
    assert_eq!(code, 4);

    let mmc = "PROBLEM MMC\ndim 1\nnorm 1\neps 1/4\nc 1/2\ndelta_d 1\nlambda 1\nf\nARITH 1 2 1\nCONST 1/2\nMUL 0 1\n2\nd\nARITH 2 2 1\nSUB 0 1\nABS 2\n3\n";
    let (code, out, _) =
        run(&["verify", "mmc", p(&scratch("m.mmc", mmc)), p(&scratch("s", "MMviol 4 0 ; 1/2 ; 1\n"))]);
    assert_eq!(code, 1, "{out}");

    let (code, _, _) = run(&["verify", "lcp", p(&scratch("one.lcp", ONE_DIM)), p(&scratch("s", "Q1 1\n"))]);
    assert_eq!(code, 0);
}

#[test]
fn usage_errors_exit_4() {
    assert_eq!(run(&["reduce", "nope", "x"]).0, 4);
    assert_eq!(run(&["solve-lcp", "/nonexistent/file"]).0, 4);
    let (code, _, err) = run(&["solve-lcp", p(&scratch("bad.lcp", "2\n1 0\n0\n-1 -1\n"))]);
    assert_eq!(code, 4);
    assert!(err.contains("line 3"), "{err}");
    assert_eq!(run(&["frobnicate"]).0, 4);
    assert_eq!(run(&["pipeline", "plcp"]).0, 4);
}
