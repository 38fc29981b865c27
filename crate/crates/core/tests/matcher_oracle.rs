mod common;

use common::{random_cxn, random_sentence};
use cxnforge_core::matcher::{check_binding, compile, match_sentence, oracle_match, MatchRecord};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn records(ms: Vec<cxnforge_core::Match>) -> Vec<MatchRecord> {
    ms.iter().map(|m| m.record()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn compiled_search_agrees_with_oracle(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cxn = random_cxn(&mut rng, 4);
        let sentence = random_sentence(&mut rng, 15);
        let pattern = compile(&cxn).unwrap();
        let fast = match_sentence(&pattern, &sentence);
        let slow = oracle_match(&cxn, &sentence).unwrap();
        for m in &fast {
            prop_assert!(check_binding(&cxn, &sentence, &m.binding).iter().all(|c| !c.failed()));
        }
        prop_assert_eq!(records(fast), records(slow));
    }

    #[test]
    fn no_match_extends_another(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cxn = random_cxn(&mut rng, 4);
        let sentence = random_sentence(&mut rng, 10);
        let ms = match_sentence(&compile(&cxn).unwrap(), &sentence);
        for a in &ms {
            for b in &ms {
                let extends = b.binding.len() > a.binding.len()
                    && a.binding.iter().all(|(k, v)| b.binding.get(k) == Some(v));
                prop_assert!(!extends);
            }
        }
    }
}

#[test]
fn oracle_refuses_large_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cxn = random_cxn(&mut rng, 2);
    let mut sentence = random_sentence(&mut rng, 1);
    while sentence.len() <= cxnforge_core::matcher::ORACLE_MAX_TOKENS {
        let mut more = random_sentence(&mut rng, 30);
        sentence.tokens.append(&mut more.tokens);
    }
    assert!(oracle_match(&cxn, &sentence).is_err());
}

#[test]
fn generator_exercises_optional_nodes() {
    let mut with_matches = 0;
    let mut with_unbound_optional = 0;
    for seed in 0..1000 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cxn = random_cxn(&mut rng, 4);
        let sentence = random_sentence(&mut rng, 15);
        let ms = match_sentence(&compile(&cxn).unwrap(), &sentence);
        if !ms.is_empty() {
            with_matches += 1;
        }
        if ms.iter().any(|m| m.binding.len() < cxn.nodes.len()) {
            with_unbound_optional += 1;
        }
    }
    eprintln!("{} with matches, {} with unbound optional nodes", with_matches, with_unbound_optional);
    assert!(with_matches > 200);
    assert!(with_unbound_optional > 20);
}
