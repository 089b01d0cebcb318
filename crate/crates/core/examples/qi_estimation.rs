//! Estimating a quantity of interest E[φ(f(X, Θ))] from a training sample
//! drawn under covariate shift.

use wknn::estimators::{qi_hat, qi_knn, qi_tilde, Model, Observable};
use wknn::random::{open01, stream_rng, Law};
use wknn::{knn_weights, neighbor_table, NormSpec};

fn main() -> wknn::Result<()> {
    // X ~ U[0, 1]^2, training inputs X' ~ N((0.5, 0.5), 0.3^2 I)
    let x_law = Law::uniform_box(vec![0.0; 2], vec![1.0; 2])?;
    let train_law = Law::gaussian(vec![0.5, 0.5], &[0.09, 0.0, 0.0, 0.09])?;
    // f(x, θ) = (x1 + x2) + θ with θ ~ U[-0.5, 0.5]; φ(y) = y^2
    let model = Model::new("sum_plus_noise", 1, |x, t| vec![x[0] + x[1] + t], |rng| open01(rng) - 0.5);
    let phi = Observable::new("square", |y| y[0] * y[0], None);
    // E[(X1 + X2 + Θ)^2] = Var(X1 + X2) + 1 + Var(Θ) = 1/6 + 1 + 1/12
    let truth = 1.0 / 6.0 + 1.0 + 1.0 / 12.0;

    let mut rng = stream_rng(3, 0);
    let eval = x_law.sample(&mut rng, 2000)?;
    let train = model.label(train_law.sample(&mut rng, 2000)?, &mut rng)?;
    let psi: Vec<f64> = train
        .inputs()
        .points()
        .map(|x| (x[0] + x[1]).powi(2) + 1.0 / 12.0)
        .collect();

    let naive = train.outputs().points().map(|y| phi.eval(y)).sum::<f64>() / train.len() as f64;
    println!("truth {truth:.4}, unweighted training mean {naive:.4}");
    for k in [1, 5, 25] {
        let wv = knn_weights(&neighbor_table(&eval, train.inputs(), k, NormSpec::L2)?, train.len())?;
        println!(
            "k = {k:>2}: QI hat {:.4}, QI tilde {:.4}, plug-in {:.4}",
            qi_hat(&wv, train.outputs(), &phi)?,
            qi_tilde(&wv, &psi)?,
            qi_knn(&eval, &train, k, &phi, NormSpec::L2)?
        );
    }
    Ok(())
}
