use std::io::Write;
use std::process::{Command, Stdio};

use polyperm::format::{read_pmat, write_lhc, write_pmat};
use polyperm::latin::{q_hypercube, z_matrix};
use polyperm::{LatinHypercube, MultiDimMatrix};

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn polyperm(args: &[&str], stdin: &str) -> Run {
    let mut child = Command::new(env!("CARGO_BIN_EXE_polyperm"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    Run {
        code: out.status.code().expect("exited"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn zmat(d: usize, n: usize) -> String {
    write_pmat(&z_matrix(d, n).unwrap())
}

#[test]
fn permanent_exit_codes() {
    let r = polyperm(&["permanent", "-"], &zmat(3, 4));
    assert_eq!((r.code, r.stdout.trim()), (1, "0"));

    let id = write_pmat(&MultiDimMatrix::identity(4));
    let r = polyperm(&["permanent", "-"], &id);
    assert_eq!((r.code, r.stdout.trim()), (0, "1"));

    let r = polyperm(&["permanent", "-"], &zmat(4, 2));
    assert_eq!((r.code, r.stdout.trim()), (0, "4"));
}

#[test]
fn invalid_input_exits_2() {
    let r = polyperm(&["permanent", "-"], "pmat 2 2 exact\n1 0\n0 x\n");
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("line 3"), "{}", r.stderr);
    assert_eq!(polyperm(&["permanent", "/nonexistent/file"], "").code, 2);
    assert_eq!(polyperm(&["no-such-command"], "").code, 2);
    // constructive search only handles 4-dimensional order-4 input
    assert_eq!(polyperm(&["find-diagonal", "--method", "constructive", "-"], &zmat(3, 4)).code, 2);
    // and only polystochastic input
    let lopsided = write_pmat(&polyperm::gen::ones_where(4, 4, |i| i[0] == 0).unwrap());
    assert_eq!(polyperm(&["find-diagonal", "--method", "constructive", "-"], &lopsided).code, 2);
}

#[test]
fn find_diagonal_methods() {
    let r = polyperm(&["find-diagonal", "-"], &zmat(5, 2));
    assert_eq!((r.code, r.stdout.trim()), (1, "none"));

    let quarter = "pmat 4 4 exact\n".to_string() + &"1/4 1/4 1/4 1/4\n".repeat(64);
    let r = polyperm(&["find-diagonal", "--method", "constructive", "--trace", "-"], &quarter);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("branch: rectangle_transversal"), "{}", r.stdout);

    for seed in ["1", "2", "3"] {
        let gen = polyperm(&["gen", "poly", "4", "4", "--terms", "5", "--seed", seed], "");
        assert_eq!(gen.code, 0);
        let a = polyperm(&["find-diagonal", "--method", "constructive", "-"], &gen.stdout);
        let b = polyperm(&["find-diagonal", "--method", "exhaustive", "-"], &gen.stdout);
        assert_eq!((a.code, b.code), (0, 0));
        assert!(a.stdout.starts_with("diag "));
    }
}

#[test]
fn verify_targets() {
    let r = polyperm(&["verify", "lemma1"], "");
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("target: lemma1"));
    assert!(r.stdout.contains("wall_time_s:"));

    let r = polyperm(&["verify", "prop2", "--jobs", "1"], "");
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.contains("workers: 1"));
}

#[test]
fn theorem44_batch_is_independent_of_workers() {
    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with("workers:") && !l.starts_with("wall_time_s:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let a = polyperm(&["verify", "theorem44", "--count", "200", "--seed", "5", "--jobs", "1"], "");
    let b = polyperm(&["verify", "theorem44", "--count", "200", "--seed", "5", "--jobs", "3"], "");
    assert_eq!((a.code, b.code), (0, 0));
    assert_eq!(strip(&a.stdout), strip(&b.stdout));
}

#[test]
fn convert_round_trips() {
    // Q^3_4 as a latin cube maps exactly onto Z^4_4
    let q = write_lhc(&q_hypercube(3, 4).unwrap());
    let r = polyperm(&["convert", "-", "lhc-to-pmat"], &q);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout, zmat(4, 4));

    let r = polyperm(&["convert", "-", "pmat-to-lhc"], &zmat(5, 4));
    assert_eq!(r.code, 0);
    let back = polyperm(&["convert", "-", "lhc-to-pmat"], &r.stdout);
    assert_eq!(back.stdout, zmat(5, 4));

    let cayley = write_lhc(&LatinHypercube::cayley_cyclic(4));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cayley.pmat");
    let r = polyperm(&["convert", "-", "lhc-to-pmat", "-o", out.to_str().unwrap()], &cayley);
    assert_eq!(r.code, 0);
    let m = read_pmat(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(m.is_polystochastic(0.0) && m.is_zero_one());
    assert_eq!(polyperm(&["permanent", out.to_str().unwrap()], "").code, 1);

    let r = polyperm(&["convert", "-", "lhc-to-pmat"], "lhc 2 2\n0 0\n1 1\n");
    assert_eq!(r.code, 2);
    let r = polyperm(&["convert", "-", "pmat-to-lhc"], &write_pmat(&MultiDimMatrix::identity(3).to_float()));
    assert_eq!(r.code, 0);
}

#[test]
fn gen_kinds() {
    let r = polyperm(&["gen", "zmatrix", "3", "4"], "");
    assert_eq!((r.code, r.stdout.as_str()), (0, zmat(3, 4).as_str()));

    let r = polyperm(&["gen", "poly", "4", "4", "--terms", "5", "--seed", "1"], "");
    let a = read_pmat(&r.stdout).unwrap();
    assert!(a.is_polystochastic(0.0));
    assert_eq!((a.dim(), a.order()), (4, 4));

    let x = polyperm(&["gen", "latin", "2", "5", "--seed", "9"], "");
    let y = polyperm(&["gen", "latin", "2", "5", "--seed", "9"], "");
    assert_eq!(x.code, 0);
    assert_eq!(x.stdout, y.stdout);
    assert!(x.stdout.starts_with("lhc 2 5\n"));

    let noisy = "pmat 2 2 float\n2 1\n1 2\n";
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("noisy.pmat");
    std::fs::write(&input, noisy).unwrap();
    let r = polyperm(&["gen", "sinkhorn", "--input", input.to_str().unwrap()], "");
    assert_eq!(r.code, 0);
    assert!(r.stderr.contains("converged: true"));
    assert!(read_pmat(&r.stdout).unwrap().is_polystochastic(1e-9));

    assert_eq!(polyperm(&["gen", "poly"], "").code, 2);
    assert_eq!(polyperm(&["gen", "sinkhorn"], "").code, 2);
}

#[test]
fn classes_and_decompose() {
    let r = polyperm(&["classes", "4", "3"], "");
    assert_eq!(r.code, 0);
    assert!(r.stdout.starts_with("classes: 10\n"));
    assert_eq!(r.stdout.matches("transversal: none").count(), 1);

    let half = "pmat 2 2 exact\n1/2 1/2\n1/2 1/2\n";
    let r = polyperm(&["decompose", "-"], half);
    assert_eq!(r.code, 0);
    assert_eq!(r.stdout.lines().count(), 2);
    assert!(r.stdout.lines().all(|l| l.starts_with("theta 1/2 : perm ")));

    assert_eq!(polyperm(&["decompose", "-"], "pmat 2 2 exact\n1 1\n0 0\n").code, 2);
}
