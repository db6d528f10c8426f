//! Builds a manual geometry from a cluster spec and compares document
//! distances before and after.
//!
//! cargo run --example manual_geometry

use lingeo::corpus::{ingest, PreprocessConfig, Preprocessor, RawDocument};
use lingeo::geometry::spec::GeometrySpec;
use lingeo::geometry::{distance, factorize_t, transform, SimilarityMatrix, TfScaling};

fn doc(id: &str, text: &str) -> RawDocument {
    RawDocument {
        id: id.into(),
        text: text.into(),
        label: None,
    }
}

fn main() -> lingeo::Result<()> {
    let docs = [
        doc("r1", "a wonderful film with a superb cast"),
        doc("r2", "an excellent movie and a brilliant script"),
        doc("r3", "a dreadful film with an awful script"),
    ];
    let config = PreprocessConfig {
        stem: false,
        ..Default::default()
    };
    let matrix = ingest(&docs, &config)?;

    let spec: GeometrySpec = serde_json::from_str(
        r#"{"clusters": [
              {"name": "praise", "words": ["wonderful", "superb", "excellent", "brilliant"], "rho_self": 1, "importance": 3},
              {"name": "scorn", "words": ["dreadful", "awful"], "rho_self": 1, "importance": 3}],
            "rho_pairs": [{"a": "praise", "b": "praise", "value": 1},
                          {"a": "scorn", "b": "scorn", "value": 1}],
            "rest": {"importance": 0.2}}"#,
    )?;
    let h = spec.build(matrix.vocab(), &Preprocessor::from_config(&config)?)?;
    println!(
        "H: {} x {}, content hash {}",
        h.nrows(),
        h.ncols(),
        &spec.content_hash()[..12]
    );

    let t_identity = SimilarityMatrix::new(nalgebra::DMatrix::identity(h.ncols(), h.ncols()))?.certify()?;
    let t_manual = SimilarityMatrix::new(h.gram())?.certify()?;
    let x = transform(
        &lingeo::geometry::TransformMatrix::identity(h.ncols()),
        &matrix.counts,
        TfScaling::Relative,
    )?;
    let row = |i: usize| x.row(i).iter().copied().collect::<Vec<_>>();
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        println!(
            "d({}, {}): identity {:.4}  manual {:.4}",
            matrix.ids[a],
            matrix.ids[b],
            distance(&t_identity, &row(a), &row(b))?,
            distance(&t_manual, &row(a), &row(b))?
        );
    }

    // Any PSD similarity factors back into an equivalent transform.
    let back = factorize_t(&t_manual)?;
    println!(
        "factorized H reproduces T to {:.1e}",
        (back.gram() - t_manual.matrix()).abs().max()
    );
    Ok(())
}
