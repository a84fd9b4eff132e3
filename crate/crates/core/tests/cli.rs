use dser::cli::run;
use serde_json::Value;

fn report(args: &[&str]) -> (i32, Value) {
    let dir = std::env::temp_dir().join(format!("dser-cli-{}-{}", std::process::id(), args.join("_").len()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join(format!("{}.json", args.join("_").replace([':', '/', ','], "-")));
    let mut argv = vec!["dser", "--output", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    let code = run(argv);
    let text = std::fs::read_to_string(&out).unwrap_or_else(|_| "null".into());
    (code, serde_json::from_str(&text).unwrap())
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(["dser"]), 2);
    assert_eq!(run(["dser", "verify-relations", "--ring", "zmod:4"]), 2);
    assert_eq!(run(["dser", "verify-relations", "--ring", "nonsense"]), 2);
    assert_eq!(run(["dser", "factor-conjugate", "--class", "bogus"]), 2);
    assert_eq!(run(["dser", "enumerate", "--ring", "rationals"]), 2);
    assert_eq!(run(["dser", "k1", "--levels", "1,3"]), 2);
    assert_eq!(run(["dser", "decompose", "--word", "/nonexistent/word.json"]), 2);
}

#[test]
fn relations_report() {
    let (code, v) = report(&["verify-relations", "--ring", "zmod:5", "--trials", "10"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], "dser-report/1");
    assert_eq!(v["passed"], true);
    assert_eq!(v["result"]["i"]["failures"], 0);
}

#[test]
fn rational_factorizations() {
    let (code, v) = report(&["factor-conjugate", "--ring", "rationals", "--m", "2", "--trials", "5"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"].as_object().unwrap().len(), 6);
}

#[test]
fn enumeration_of_smallest_group() {
    let (code, v) = report(&["enumerate", "--ring", "zmod:3", "--n", "1", "--m", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["orthogonal"]["order"], 48);
    assert_eq!(v["result"]["normal"], true);
}

#[test]
fn word_files_drive_decompose_and_reduce() {
    let word = r#"{"ring":"zmod:7","n":1,"m":3,"word":[
        {"t":"EA","i":3,"w":["2"]},
        {"t":"EB","i":3,"w":["5"]},
        {"t":"comm","a":{"t":"EA","i":1,"w":["1"]},"b":{"t":"EB","i":3,"w":["3"]}},
        {"t":"EA","i":2,"w":["4"]}]}"#;
    let path = std::env::temp_dir().join(format!("dser-word-{}.json", std::process::id()));
    std::fs::write(&path, word).unwrap();
    let p = path.to_str().unwrap();
    let (code, v) = report(&["decompose", "--word", p]);
    assert_eq!(code, 0);
    assert_eq!(v["config"]["ring"], "zmod:7");
    assert_eq!(v["result"]["certificates"]["reduced_entry"], "0");
    let (code, v) = report(&["reduce", "--word", p]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["product_matches"], true);
}

#[test]
fn same_seed_gives_identical_reports() {
    let args = ["factor-conjugate", "--ring", "zmod:9", "--seed", "7", "--trials", "5"];
    let (a, b) = (report(&args), report(&args));
    assert_eq!(a.0, 0);
    assert_eq!(serde_json::to_string(&a.1).unwrap(), serde_json::to_string(&b.1).unwrap());
}

#[test]
fn check_all_passes() {
    let (code, v) = report(&["check-all", "--seed", "42"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"].as_array().unwrap().len(), 8);
}
