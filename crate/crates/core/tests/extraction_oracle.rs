use std::collections::BTreeMap;

use ipl::attributes::{
    parse_attributes, serialize_attributes, AttributeExtractor, AttributeRules, ExtractionLexicon, LexiconFile, RuleExtractor,
};
use ipl::catalog::AttributeTemplate;
use proptest::prelude::*;

const BRANDS: [&str; 6] = ["Apple", "Huawei", "Honor", "Honor Magic", "Mi", "LG"];
const COLORS: [&str; 5] = ["red", "dark red", "blue", "midnight green", "green"];

fn lexicon() -> ExtractionLexicon {
    let rules = |vals: &[&str]| AttributeRules {
        values: vals.iter().map(|v| v.to_string()).collect(),
        patterns: vec![],
    };
    let mut attrs = BTreeMap::new();
    attrs.insert("Brand".to_string(), rules(&BRANDS));
    attrs.insert("Color".to_string(), rules(&COLORS));
    let mut categories = BTreeMap::new();
    categories.insert("phone".to_string(), attrs);
    ExtractionLexicon::compile(LexiconFile { categories }).unwrap()
}

fn is_word(c: Option<char>) -> bool {
    c.is_some_and(|c| c.is_alphanumeric() || c == '_')
}

/// Earliest whole-word, case-insensitive occurrence of any value; the
/// longest value wins among those starting at the same byte.
fn oracle(text: &str, values: &[&str]) -> Option<String> {
    let lower = text.to_ascii_lowercase();
    let mut best: Option<(usize, usize)> = None;
    for v in values {
        let needle = v.to_ascii_lowercase();
        let mut from = 0;
        while let Some(off) = lower[from..].find(&needle) {
            let (s, e) = (from + off, from + off + needle.len());
            let before = text[..s].chars().next_back();
            let after = text[e..].chars().next();
            if !is_word(before) && !is_word(after) {
                let better = match best {
                    None => true,
                    Some((bs, be)) => s < bs || (s == bs && e - s > be - bs),
                };
                if better {
                    best = Some((s, e));
                }
                break;
            }
            from = s + 1;
        }
    }
    best.map(|(s, e)| text[s..e].to_string())
}

fn description() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        prop::sample::select(BRANDS.to_vec()).prop_map(String::from),
        prop::sample::select(COLORS.to_vec()).prop_map(String::from),
        prop::sample::select(vec!["phone", "used", "Mix", "Honorable", "reddish", "bluegreen", "128GB", ",", "-", "LGx"]).prop_map(String::from),
    ];
    prop::collection::vec((piece, prop::sample::select(vec![" ", "", ", ", "/"])), 0..10)
        .prop_map(|parts| parts.into_iter().map(|(w, sep)| w + sep).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]
    #[test]
    fn gazetteer_matches_whole_word_oracle(text in description(), upper in any::<bool>()) {
        let text = if upper { text.to_uppercase() } else { text };
        let template = AttributeTemplate::new(["Brand", "Color"]).unwrap();
        let got = RuleExtractor::new(lexicon()).extract(&text, "phone", &template);
        prop_assert_eq!(got.get("Brand").map(String::from), oracle(&text, &BRANDS));
        prop_assert_eq!(got.get("Color").map(String::from), oracle(&text, &COLORS));
        for (_, v) in got.iter() {
            prop_assert!(text.contains(v));
        }
        // Serialization round trip.
        let back = parse_attributes(&serialize_attributes(&got), "phone", &template).unwrap();
        prop_assert_eq!(back, got);
    }
}

#[test]
fn bundled_lexicon_reproduces_worked_example() {
    let lex = ExtractionLexicon::from_json(include_str!("../data/lexicon.json")).unwrap();
    let template = AttributeTemplate::new(["Brand", "Model", "Storage Capacity", "Color", "Version", "Screen Condition"]).unwrap();
    let got = RuleExtractor::new(lex).extract(
        "Huawei mate10Pro 6+64G completely original unrefurbished smartphone Mainland China version light scratches",
        "cellphone",
        &template,
    );
    assert_eq!(got.get("Brand"), Some("Huawei"));
    assert_eq!(got.get("Model"), Some("mate10Pro"));
    assert_eq!(got.get("Storage Capacity"), Some("6+64G"));
    assert_eq!(got.get("Version"), Some("Mainland China"));
    assert_eq!(got.get("Color"), None);
}

#[test]
fn values_outside_template_are_ignored() {
    let template = AttributeTemplate::new(["Color"]).unwrap();
    let got = RuleExtractor::new(lexicon()).extract("Apple phone in blue", "phone", &template);
    assert_eq!(got.names().collect::<Vec<_>>(), vec!["Color"]);
    let other = RuleExtractor::new(lexicon()).extract("Apple phone in blue", "laptop", &template);
    assert!(other.is_empty());
}
