use std::path::PathBuf;

use usage_eval::annotation::{parse_response, render_options, ParseConfig, PromptTemplate};

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/prompts").join(format!("{name}.json"));
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn builtins_match_golden_files() {
    for t in PromptTemplate::builtins() {
        let file = t.name.replace('-', "_");
        assert_eq!(t.render_golden(), golden(&file), "{} differs from its golden file", t.name);
    }
}

#[test]
fn example_answers_parse_to_their_own_labels() {
    for t in PromptTemplate::builtins() {
        for (_, answer) in &t.example_turns {
            let (set, status) = parse_response(answer, t.style, &ParseConfig::default());
            assert_eq!(status, usage_eval::annotation::ParseStatus::Ok);
            assert!(answer.ends_with(&render_options(&set)));
        }
    }
}
