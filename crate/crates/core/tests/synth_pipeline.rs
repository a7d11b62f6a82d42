mod common;

use refweave::synth::generate_corpus;

#[test]
fn pipeline_reproduces_synthetic_oracle() {
    let corpus = generate_corpus(0, 200).unwrap();
    let failures: Vec<String> = corpus.iter().filter_map(|(d, e)| common::check_synth_document(d, e).err()).collect();
    assert!(failures.is_empty(), "{} failures, first: {:?}", failures.len(), &failures[..failures.len().min(5)]);
}
