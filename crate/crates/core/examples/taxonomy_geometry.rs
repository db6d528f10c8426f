//! Jiang-Conrath similarities over a small concept taxonomy.
//!
//! cargo run --example taxonomy_geometry

use std::collections::HashMap;

use lingeo::corpus::Vocabulary;
use lingeo::geometry::Provenance;
use lingeo::pipeline::similarity_geometry;
use lingeo::taxonomy::{concept_probabilities, jiang_conrath, lcs, taxonomy_similarity_matrix, Taxonomy};

const TAXONOMY: &str = "\
concept entity
concept animal
concept vehicle
concept dog
concept cat
concept car
isa animal entity
isa vehicle entity
isa dog animal
isa cat animal
isa car vehicle
member puppy dog
member hound dog
member kitten cat
member sedan car
";

fn main() -> lingeo::Result<()> {
    let tax = Taxonomy::parse(TAXONOMY, "inline")?;
    let counts: HashMap<String, u64> = [("puppy", 12), ("hound", 4), ("kitten", 9), ("sedan", 7)]
        .iter()
        .map(|(w, c)| (w.to_string(), *c))
        .collect();
    let p = concept_probabilities(&tax, &counts, 1.0)?;
    for c in 0..tax.len() {
        println!("p({:<7}) = {:.4}", tax.name(c), p.get(c));
    }

    let id = |n: &str| tax.concept(n).expect("known concept");
    for (a, b) in [("dog", "cat"), ("dog", "car")] {
        let l = lcs(&tax, &p, id(a), id(b))?;
        println!(
            "{a} / {b}: lcs {}, score {:.4}",
            tax.name(l),
            jiang_conrath(&tax, &p, id(a), id(b))?
        );
    }

    let vocab = Vocabulary::new(["hound", "kitten", "puppy", "sedan", "wheel"]);
    let t = taxonomy_similarity_matrix(&tax, &p, &vocab)?;
    println!("word similarities (wheel is outside the taxonomy):\n{:.3}", t.matrix());
    let h = similarity_geometry(&t, Provenance::Taxonomy)?;
    println!("taxonomy transform: {} x {}", h.nrows(), h.ncols());
    Ok(())
}
