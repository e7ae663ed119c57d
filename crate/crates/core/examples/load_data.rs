//! Loading CSV and IDX inputs and turning them into a logistic objective.

use std::fs;

use symaccel::data::{
    encode_idx_images, encode_idx_labels, load_delimited, load_idx_pair, standardize, DelimitedOptions, LabelColumn,
    LabelRule,
};
use symaccel::{LogisticRegression, Objective, Result};

fn main() -> Result<()> {
    let dir = std::env::temp_dir().join("symaccel-load-data");
    fs::create_dir_all(&dir)?;

    let csv = dir.join("iris-like.tsv");
    fs::write(&csv, "5.1\t3.5\tsetosa\n4.9\t3.0\tsetosa\n7.0\t3.2\tversicolor\n6.4\t3.2\tversicolor\n")?;
    let options = DelimitedOptions {
        delimiter: b'\t',
        has_header: false,
        label_column: LabelColumn::Index(2),
        positive_label: "setosa".into(),
    };
    let table = load_delimited(&csv, &options)?;
    println!("delimited: {} rows, {} features, labels {:?}", table.len(), table.dim(), table.labels());

    let pixels: Vec<u8> = (0..6 * 9).map(|i| (i * 29 % 256) as u8).collect();
    let images = dir.join("images.idx3");
    let labels = dir.join("labels.idx1");
    fs::write(&images, encode_idx_images(3, 3, &pixels))?;
    fs::write(&labels, encode_idx_labels(&[0, 1, 2, 3, 4, 5]))?;
    let digits = load_idx_pair(&images, &labels, LabelRule::OneVsRest(3))?;
    println!("idx: {} images of {} pixels, labels {:?}", digits.len(), digits.dim(), digits.labels());

    let (scaled, _) = standardize(&digits)?;
    let f = LogisticRegression::from_dataset(&scaled.with_intercept(), 1e-8)?;
    println!("f(0) = {:.6} (ln 2 = {:.6})", f.value(&vec![0.0; f.dim()])?, std::f64::consts::LN_2);
    Ok(())
}
