//! One drop-and-grow update on a 4×4 layer at 50% sparsity: the two
//! weakest active weights go, the two inactive positions with the largest
//! gradient come in at zero.

use stgt::sparse::drop_and_grow_layer;
use stgt::Tensor;

fn main() -> stgt::Result<()> {
    let mut mask = Tensor::new(vec![4, 4], (0..16).map(|i| ((i + i / 4) % 2 == 0) as u8 as f64).collect())?;
    let mut w = Tensor::new(
        vec![4, 4],
        vec![0.9, 0.0, -0.05, 0.0, 0.0, 0.4, 0.0, -0.7, 0.3, 0.0, 0.02, 0.0, 0.0, -0.6, 0.0, 0.8],
    )?;
    let grad = Tensor::new(
        vec![4, 4],
        vec![0.1, 0.02, 0.3, -0.9, 0.05, 0.2, -0.01, 0.4, 0.0, 0.6, 0.1, 0.03, -0.2, 0.1, 0.15, 0.0],
    )?;
    show("mask before", &mask);
    show("weights before", &w);
    let update = drop_and_grow_layer(&mut w, &mut mask, &grad, 0.25)?;
    println!("dropped {:?}, grown {:?}", update.dropped, update.grown);
    show("mask after", &mask);
    show("weights after", &w);
    println!("active count stays {}", mask.count_nonzero());
    Ok(())
}

fn show(title: &str, t: &Tensor) {
    println!("{title}:");
    for i in 0..t.rows() {
        println!("  {:?}", t.row(i));
    }
}
