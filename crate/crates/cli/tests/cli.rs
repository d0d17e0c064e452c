use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn textnorm(args: &[&str], stdin: &[u8]) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_textnorm"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn normalize_stdin_token_mode() {
    let o = textnorm(
        &["normalize", "-l", "malagasy", "--filter-mode", "token"],
        "Собака @ FIRY IZAO?\n".as_bytes(),
    );
    assert_eq!(stdout(&o), "<UNK> amin'ny firy izao\n");
}

#[test]
fn normalize_writes_rejections_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.txt");
    fs::write(&input, b"Ny trano.\n\xd0\xa1\xd0\xbe good\nok \xff\n").unwrap();
    let rej = dir.path().join("rej.jsonl");
    let log = dir.path().join("log.jsonl");
    let o = textnorm(
        &[
            "normalize",
            "-l",
            "mg",
            s(&input),
            "--rejected",
            s(&rej),
            "--log",
            s(&log),
        ],
        b"",
    );
    assert_eq!(stdout(&o), "ny trano\nok\n");
    let rej = fs::read_to_string(rej).unwrap();
    assert_eq!(rej.lines().count(), 1);
    assert!(
        rej.contains("\"line\":2") && rej.contains("\"invalid_tokens\":[\"со\"]"),
        "{rej}"
    );
    let log = fs::read_to_string(log).unwrap();
    assert!(
        log.contains("invalid_utf8") && log.contains("\"line\":3"),
        "{log}"
    );
}

#[test]
fn normalize_trace_prints_steps() {
    let o = textnorm(
        &[
            "normalize",
            "-l",
            "malagasy",
            "--filter-mode",
            "token",
            "--trace",
        ],
        "Собака @ FIRY IZAO?".as_bytes(),
    );
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "1\tсобака @ firy izao?");
    assert_eq!(lines[4], "5\t<UNK> amin'ny firy izao ");
    assert_eq!(lines[5], "6\t<UNK> amin'ny firy izao");
}

#[test]
fn stats_table() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("ud.conllu");
    let mut text = String::new();
    for i in 0..8 {
        let sent = if i < 2 {
            "собака"
        } else {
            "sawubona baba"
        };
        text.push_str(&format!(
            "# sent_id = {i}\n# text = {sent}\n1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n\n"
        ));
    }
    fs::write(&f, text).unwrap();
    let o = textnorm(
        &[
            "stats",
            "-l",
            "zulu",
            "--source-kind",
            "ud",
            "--source",
            "UD",
            s(&f),
        ],
        b"",
    );
    assert_eq!(
        stdout(&o),
        "language\tsource\tkept\trejected\tpct_rejected\nzulu\tUD\t6\t2\t25.00\n"
    );
}

#[test]
fn eval_hand_model() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.txt");
    fs::write(&f, "a b\n").unwrap();
    let model = dir.path().join("m.txt");
    let o = textnorm(
        &[
            "eval",
            "--train",
            s(&f),
            "--test",
            s(&f),
            "--scoring",
            "bigrams",
            "--save-model",
            s(&model),
        ],
        b"",
    );
    assert!(stdout(&o).starts_with("perplexity\t3.00\nngrams\t3\n"));
    assert!(fs::read_to_string(model).unwrap().contains("#bigrams"));
}

fn afrikaans_corpus(dir: &Path) -> std::path::PathBuf {
    let words = ["het", "was", "goed", "die", "man", "kom", "huis", "toe"];
    let mut text = String::new();
    let mut hets = 0;
    for i in 0..200usize {
        let sent: Vec<&str> = (0..5)
            .map(|j| match words[(i * 7 + j * 3) % words.len()] {
                "het" => {
                    hets += 1;
                    if hets % 2 == 0 {
                        "'t"
                    } else {
                        "het"
                    }
                }
                w => w,
            })
            .collect();
        text.push_str(&sent.join(" "));
        text.push_str(".\n");
    }
    let p = dir.join("af.txt");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn experiment_and_report() {
    let dir = tempfile::tempdir().unwrap();
    afrikaans_corpus(dir.path());
    let zu = dir.path().join("zu.txt");
    fs::write(&zu, "sawubona baba\nngi-ya-bonga\n".repeat(20)).unwrap();
    let manifest = dir.path().join("run.toml");
    fs::write(
        &manifest,
        "seed = 7\n\n[[experiment]]\nlanguage = \"afrikaans\"\nsource = \"LCC\"\nkind = \"plain\"\npath = \"af.txt\"\n\n\
         [[experiment]]\nlanguage = \"zu\"\nsource = \"UD\"\nkind = \"plain\"\npath = \"zu.txt\"\n",
    )
    .unwrap();
    let tsv = dir.path().join("out.tsv");
    let o = textnorm(
        &["experiment", "--manifest", s(&manifest), "-o", s(&tsv)],
        b"",
    );
    stdout(&o);
    let table = fs::read_to_string(&tsv).unwrap();
    let rows: Vec<Vec<&str>> = table.lines().map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][0], "language");
    let af_row = rows.iter().find(|r| r[0] == "afrikaans").unwrap();
    let (base, exp): (f64, f64) = (af_row[2].parse().unwrap(), af_row[3].parse().unwrap());
    assert!(exp < base, "{table}");

    let again = textnorm(&["experiment", "--manifest", s(&manifest)], b"");
    assert_eq!(stdout(&again), table);

    let r = stdout(&textnorm(&["report", s(&tsv)], b""));
    assert!(r.contains("afrikaans  LCC"), "{r}");
    assert!(r.contains("mean_pct") && r.contains("UD "), "{r}");
}

#[test]
fn experiment_flags() {
    let dir = tempfile::tempdir().unwrap();
    let af = afrikaans_corpus(dir.path());
    let o = textnorm(
        &[
            "experiment",
            "-l",
            "af",
            "--source",
            "X",
            "--relative-divisor",
            "base",
            "--scoring",
            "bigrams",
            s(&af),
        ],
        b"",
    );
    let out = stdout(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split('\t').collect();
    let (base, raw, rel): (f64, f64, f64) = (
        row[2].parse().unwrap(),
        row[4].parse().unwrap(),
        row[5].parse().unwrap(),
    );
    assert!((rel * base - raw).abs() <= 0.01, "{out}");
    assert!(raw < 0.0);
    assert_eq!(row[6], "0.00000000");
}

#[test]
fn failures_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("ru.txt");
    fs::write(&f, "собака\n").unwrap();
    let log = dir.path().join("log.jsonl");
    let o = textnorm(
        &["experiment", "-l", "somali", s(&f), "--log", s(&log)],
        b"",
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(fs::read_to_string(log)
        .unwrap()
        .contains("no sentences left"));

    let o = textnorm(&["normalize", "-l", "klingon"], b"");
    assert!(!o.status.success());
    let o = textnorm(&["normalize", "-l", "hausa", "--direction", "onwu"], b"");
    assert!(!o.status.success());
    let o = textnorm(
        &["experiment", "--scoring", "trigrams", "-l", "af", s(&f)],
        b"",
    );
    assert!(!o.status.success());
}

#[test]
fn profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("profiles.toml");
    fs::write(
        &p,
        "[profile.zulu-short]\nlanguage = \"zulu\"\nclassifiers = [\"i\"]\n",
    )
    .unwrap();
    let run = |lang: &str| {
        stdout(&textnorm(
            &["normalize", "--profiles", s(&p), "-l", lang],
            b"i-Afrika u-Ann\n",
        ))
    };
    assert_eq!(run("zulu-short"), "iafrika u-ann\n");
    assert_eq!(run("zulu"), "iafrika uann\n");
}
