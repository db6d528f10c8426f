//! PCA and t-SNE on three Gaussian blobs in five dimensions.
//!
//! cargo run --release --example reduce

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use lingeo::evaluate::{knn_accuracy, LabeledEmbedding};
use lingeo::reduce::{pca_projection, tsne, PointCloud, TsneConfig};

fn main() -> lingeo::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let per = 40;
    let data = DMatrix::from_fn(3 * per, 5, |i, j| {
        let center = if j == i / per { 6.0 } else { 0.0 };
        center + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
    });
    let ids = (0..3 * per).map(|i| format!("p{i}")).collect();
    let labels: Vec<String> = (0..3 * per).map(|i| format!("blob{}", i / per)).collect();
    let cloud = PointCloud::new(ids, data)?;

    let pca = pca_projection(&cloud)?;
    println!(
        "PCA keeps {:.1}% of the variance ({:.3}, {:.3})",
        100.0 * (pca.variances[0] + pca.variances[1]) / pca.total_variance,
        pca.variances[0],
        pca.variances[1]
    );
    let coords = pca.project(&cloud.data);
    println!(
        "PCA 1-NN accuracy {:.3}",
        knn_accuracy(&LabeledEmbedding::new(&coords, &labels)?, 1)?
    );

    let result = tsne(
        &cloud,
        &TsneConfig {
            perplexity: 15.0,
            seed: 11,
            ..TsneConfig::default()
        },
    )?;
    for (it, kl) in result.kl_trace.iter().step_by(4) {
        println!("t-SNE iteration {it:>4}: KL {kl:.4}");
    }
    println!(
        "t-SNE 1-NN accuracy {:.3}",
        knn_accuracy(&LabeledEmbedding::new(&result.coords, &labels)?, 1)?
    );
    Ok(())
}
