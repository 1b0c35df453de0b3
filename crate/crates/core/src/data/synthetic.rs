use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gap::{GapInstance, Mention};

const MALE: [&str; 3] = ["John", "Peter", "David"];
const FEMALE: [&str; 3] = ["Mary", "Susan", "Emma"];
const ACTIONS: [&str; 3] = ["fix", "sell", "paint"];
const NOUNS: [&str; 3] = ["car", "boat", "house"];
const ADJECTIVES: [&str; 2] = ["old", "new"];

/// Two-sentence texts `<A> told <B> that <pronoun> would <action> the
/// <noun> . The <noun> was <adj> .` where A and B have opposite genders
/// and the pronoun agrees with exactly one of them.
pub fn template_corpus(n: usize, seed: u64) -> Vec<GapInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            let male = *MALE.choose(&mut rng).expect("nonempty");
            let female = *FEMALE.choose(&mut rng).expect("nonempty");
            let male_first = rng.gen_bool(0.5);
            let (a, b) = if male_first { (male, female) } else { (female, male) };
            let refers_to_male = rng.gen_bool(0.5);
            let pronoun = if refers_to_male { "he" } else { "she" };
            let verb = "told";
            let action = ACTIONS.choose(&mut rng).expect("nonempty");
            let noun = NOUNS.choose(&mut rng).expect("nonempty");
            let adj = ADJECTIVES.choose(&mut rng).expect("nonempty");

            let head = format!("{a} {verb} {b} that ");
            let text = format!("{head}{pronoun} would {action} the {noun} . The {noun} was {adj} .");
            let offset_b = a.chars().count() + 1 + verb.chars().count() + 1;
            let label_a = refers_to_male == male_first;
            GapInstance {
                id: format!("synthetic-{k}"),
                text,
                pronoun: Mention {
                    text: pronoun.to_string(),
                    offset: head.chars().count(),
                },
                name_a: Mention {
                    text: a.to_string(),
                    offset: 0,
                },
                name_b: Mention {
                    text: b.to_string(),
                    offset: offset_b,
                },
                label_a,
                label_b: !label_a,
                url: String::new(),
            }
        })
        .collect()
}
