use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use polyperm::birkhoff::{birkhoff_decompose, verify_lemma2};
use polyperm::diagonals::{find_positive_diagonal, permanent};
use polyperm::format::{read_lhc, read_pmat, write_decomposition, write_lhc, write_pmat};
use polyperm::gen::{
    random_latin, random_polystochastic, sinkhorn_project, DEFAULT_SINKHORN_MAX_ITER,
    DEFAULT_SINKHORN_TOL,
};
use polyperm::latin::{from_matrix, to_matrix, z_matrix};
use polyperm::prover44::find_positive_diagonal_44;
use polyperm::rowlatin::{enumerate_classes, find_transversal, verify_lemma1};
use polyperm::verify::{verify_census, verify_prop2, verify_sun, verify_theorem44, Theorem44Options};
use polyperm::{Error, DEFAULT_EPS};

/// Permanents, positive diagonals, and latin hypercubes of multidimensional matrices.
#[derive(Parser)]
#[command(name = "polyperm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the permanent of a `pmat` file; exit 1 when it is zero.
    Permanent { file: PathBuf },
    /// Print a positive diagonal; exit 1 when there is none.
    FindDiagonal {
        file: PathBuf,
        #[arg(long)]
        trace: bool,
        #[arg(long, value_enum, default_value_t = Method::Exhaustive)]
        method: Method,
    },
    /// Run a verification batch; exit 1 on any violation.
    Verify {
        #[arg(value_enum)]
        target: Target,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Number of random inputs for `theorem44`.
        #[arg(long, default_value_t = 10_000)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Allow census scopes beyond the desk-scale defaults.
        #[arg(long)]
        unsafe_scope: bool,
    },
    /// Convert between latin hypercube and (0,1)-matrix files.
    Convert {
        file: PathBuf,
        #[arg(value_enum)]
        direction: Direction,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a latin hypercube, a polystochastic matrix, a Z matrix, or a
    /// line-scaled matrix.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        /// Dimension (hypercube dimension for `latin`); unused by `sinkhorn`.
        dim: Option<usize>,
        order: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        terms: usize,
        /// Input `pmat` file for `sinkhorn`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SINKHORN_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_SINKHORN_MAX_ITER)]
        max_iter: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List the equivalence classes of k x m row-latin rectangles.
    Classes { k: usize, m: usize },
    /// Birkhoff decomposition of a doubly stochastic `pmat` file.
    Decompose { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Constructive,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Lemma1,
    Lemma2,
    Prop2,
    Sun,
    Theorem44,
    Census,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    LhcToPmat,
    PmatToLhc,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenKind {
    Latin,
    Poly,
    Zmatrix,
    Sinkhorn,
}

/// Exit codes: 0 positive/pass, 1 zero/violation, 2 invalid input.
enum Outcome {
    Positive,
    Negative,
}

fn read_input(path: &PathBuf) -> Result<String, Error> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| Error::Input(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }
}

fn emit(text: &str, output: &Option<PathBuf>) -> Result<(), Error> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| Error::Input(format!("{}: {e}", p.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Input(format!("stdout: {e}"))),
    }
}

fn need(v: Option<usize>, what: &str) -> Result<usize, Error> {
    v.ok_or_else(|| Error::Input(format!("missing {what}")))
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    match cli.command {
        Command::Permanent { file } => {
            let a = read_pmat(&read_input(&file)?)?;
            let p = permanent(&a)?;
            println!("{p}");
            Ok(if p.is_positive(DEFAULT_EPS) {
                Outcome::Positive
            } else {
                Outcome::Negative
            })
        }
        Command::FindDiagonal {
            file,
            trace,
            method,
        } => {
            let a = read_pmat(&read_input(&file)?)?;
            match method {
                Method::Constructive => {
                    let (d, t) = find_positive_diagonal_44(&a)?;
                    println!("{d}");
                    if trace {
                        println!("{t}");
                    }
                    Ok(Outcome::Positive)
                }
                Method::Exhaustive => match find_positive_diagonal(&a) {
                    Some(d) => {
                        println!("{d}");
                        Ok(Outcome::Positive)
                    }
                    None => {
                        println!("none");
                        Ok(Outcome::Negative)
                    }
                },
            }
        }
        Command::Verify {
            target,
            jobs,
            count,
            seed,
            unsafe_scope,
        } => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(j) = jobs {
                builder = builder.num_threads(j.max(1));
            }
            let pool = builder
                .build()
                .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
            let workers = pool.current_num_threads();
            let start = Instant::now();
            let (scope, text, passed) = pool.install(|| -> Result<_, Error> {
                Ok(match target {
                    Target::Lemma1 => {
                        let r = verify_lemma1();
                        (Some("4x3 row-latin rectangles, all raw tables".to_string()), r.to_string(), r.passed())
                    }
                    Target::Lemma2 => {
                        let r = verify_lemma2();
                        (Some("all 2^16 order-4 support patterns".to_string()), r.to_string(), r.passed())
                    }
                    Target::Prop2 => {
                        let r = verify_prop2()?;
                        (Some("Z^3_2 Z^3_4 Z^3_6 Z^5_2 Z^5_4".to_string()), r.to_string(), r.passed())
                    }
                    Target::Sun => {
                        let r = verify_sun()?;
                        (Some("Z^4_2 Z^4_3 Z^4_4 Z^6_2".to_string()), r.to_string(), r.passed())
                    }
                    Target::Theorem44 => {
                        let r = verify_theorem44(Theorem44Options {
                            count,
                            seed,
                            ..Default::default()
                        });
                        (None, r.to_string(), r.passed())
                    }
                    Target::Census => {
                        let r = verify_census(unsafe_scope)?;
                        (None, r.to_string(), r.passed())
                    }
                })
            })?;
            println!("target: {}", target.to_possible_value().expect("named").get_name());
            if let Some(scope) = scope {
                println!("scope: {scope}");
            }
            println!("workers: {workers}");
            println!("{text}");
            println!("wall_time_s: {:.3}", start.elapsed().as_secs_f64());
            Ok(if passed {
                Outcome::Positive
            } else {
                Outcome::Negative
            })
        }
        Command::Convert {
            file,
            direction,
            output,
        } => {
            let text = read_input(&file)?;
            let out = match direction {
                Direction::LhcToPmat => write_pmat(&to_matrix(&read_lhc(&text)?)?),
                Direction::PmatToLhc => write_lhc(&from_matrix(&read_pmat(&text)?)?),
            };
            emit(&out, &output)?;
            Ok(Outcome::Positive)
        }
        Command::Gen {
            kind,
            dim,
            order,
            seed,
            terms,
            input,
            tol,
            max_iter,
            output,
        } => {
            let text = match kind {
                GenKind::Latin => {
                    write_lhc(&random_latin(need(dim, "dimension")?, need(order, "order")?, seed)?)
                }
                GenKind::Poly => write_pmat(&random_polystochastic(
                    need(dim, "dimension")?,
                    need(order, "order")?,
                    terms,
                    seed,
                )?),
                GenKind::Zmatrix => write_pmat(&z_matrix(need(dim, "dimension")?, need(order, "order")?)?),
                GenKind::Sinkhorn => {
                    let path = input.ok_or_else(|| Error::Input("sinkhorn needs --input".into()))?;
                    let a = read_pmat(&read_input(&path)?)?;
                    let r = sinkhorn_project(&a, tol, max_iter)?;
                    eprintln!(
                        "converged: {} sweeps: {} residual: {:e}",
                        r.converged, r.sweeps, r.residual
                    );
                    write_pmat(&r.matrix)
                }
            };
            emit(&text, &output)?;
            Ok(Outcome::Positive)
        }
        Command::Classes { k, m } => {
            let classes = enumerate_classes(k, m)?;
            println!("classes: {}", classes.len());
            for c in &classes {
                println!("{c}");
                match find_transversal(c) {
                    Some(t) => {
                        let cells: Vec<String> = t.iter().map(|(r, c)| format!("({r},{c})")).collect();
                        println!("transversal: {}", cells.join(" "));
                    }
                    None => println!("transversal: none"),
                }
            }
            Ok(Outcome::Positive)
        }
        Command::Decompose { file } => {
            let a = read_pmat(&read_input(&file)?)?;
            print!("{}", write_decomposition(&birkhoff_decompose(&a)?));
            Ok(Outcome::Positive)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(Outcome::Positive) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
