//! Majority consensus over annotators, class filtering and a stratified split.

use std::collections::BTreeSet;

use rationale_frontier::corpus::{consensus, filter_classes, split, LabelSpace, RawSample};

fn raw(id: &str, text: &str, votes: &[&str], masks: &[&str]) -> RawSample {
    RawSample {
        id: id.into(),
        tokens: text.split(' ').map(String::from).collect(),
        label_votes: votes.iter().map(|v| v.to_string()).collect(),
        annotator_masks: masks
            .iter()
            .map(|m| m.chars().map(|c| c == '1').collect())
            .collect(),
        split: None,
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let labels = LabelSpace::new(
        vec!["positive".into(), "negative".into(), "neutral".into()],
        BTreeSet::from([0, 1]),
    )?;
    let corpus = vec![
        raw(
            "r1",
            "a truly great film",
            &["positive", "positive", "neutral"],
            &["0110", "0011", "0010"],
        ),
        raw(
            "r2",
            "dull and far too long",
            &["negative", "negative", "negative"],
            &["10000", "10011", "00011"],
        ),
        raw(
            "r3",
            "it exists",
            &["positive", "negative", "neutral"],
            &["00", "01", "00"],
        ),
        raw(
            "r4",
            "nothing much happens",
            &["neutral", "neutral", "negative"],
            &["000", "000", "011"],
        ),
        raw(
            "r5",
            "great fun",
            &["positive", "positive", "positive"],
            &["10", "10", "11"],
        ),
        raw(
            "r6",
            "awful acting",
            &["negative", "negative", "positive"],
            &["11", "10", "01"],
        ),
    ];

    let mut merged = Vec::new();
    for r in &corpus {
        match consensus(r, &labels)? {
            Some(s) => {
                let kept: Vec<&str> = s.masked_tokens(&s.rationale).collect();
                println!(
                    "{:<3} {:<9} rationale {:?}",
                    s.id,
                    labels.names()[s.label],
                    kept
                );
                merged.push(s);
            }
            None => println!("{:<3} dropped: no majority label", r.id),
        }
    }

    let filtered = filter_classes(merged, &labels, &BTreeSet::from([0, 1]))?;
    println!("kept classes {:?}", filtered.labels.names());
    for s in split(filtered.samples, 0.5, 1)? {
        println!("{:<3} {:?}", s.id, s.split.expect("assigned"));
    }
    Ok(())
}
