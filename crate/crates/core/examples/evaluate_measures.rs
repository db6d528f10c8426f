//! The four separation measures on two embeddings of the same labels.
//!
//! cargo run --example evaluate_measures

use lingeo::evaluate::{davies_bouldin, intra_inter, knn_accuracy, lda_overlap, scatter_matrices, LabeledEmbedding};

fn main() -> lingeo::Result<()> {
    let labels: Vec<String> = (0..8).map(|i| if i < 4 { "pos" } else { "neg" }.to_string()).collect();
    let tight = [
        [0.0, 0.0],
        [0.2, 0.1],
        [0.1, 0.3],
        [0.3, 0.2],
        [3.0, 3.0],
        [3.2, 2.9],
        [2.9, 3.1],
        [3.1, 3.2],
    ];
    let loose = [
        [0.0, 0.0],
        [1.5, 1.0],
        [0.5, 2.0],
        [2.0, 1.5],
        [1.0, 1.2],
        [2.5, 2.0],
        [1.2, 0.4],
        [2.2, 2.6],
    ];

    for (name, coords) in [("tight", &tight), ("loose", &loose)] {
        let emb = LabeledEmbedding::new(coords, &labels)?;
        let s = scatter_matrices(&emb);
        println!("{name}:");
        println!("  tr S_W {:.3}, tr S_B {:.3}", s.within.trace(), s.between.trace());
        println!("  (i)   intra/inter    {:.4}", intra_inter(&emb, None));
        println!("  (ii)  Davies-Bouldin {:.4}", davies_bouldin(&emb)?);
        println!("  (iii) 3-NN accuracy  {:.3}", knn_accuracy(&emb, 3)?);
        println!("  (iv)  overlap        {:.4}", lda_overlap(&emb)?);
    }
    Ok(())
}
