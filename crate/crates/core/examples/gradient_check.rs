//! Compares backprop gradients of a small policy net against central differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use s2cd::nn::{log_softmax, DenseNet, NetSpec};

fn main() -> s2cd::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let net = DenseNet::new(NetSpec::policy(11).with_hidden(vec![16, 16]), &mut rng)?;
    let x: Vec<f64> = (0..11).map(|i| (i as f64 * 0.37).sin()).collect();
    let loss = |n: &DenseNet| -> f64 {
        let (_, c) = n.forward(&x).unwrap();
        -log_softmax(c.raw())[1]
    };
    let (_, cache) = net.forward(&x)?;
    let lp = log_softmax(cache.raw());
    let raw_grad: Vec<f64> = (0..3).map(|i| lp[i].exp() - if i == 1 { 1.0 } else { 0.0 }).collect();
    let mut grad = net.zero_grad();
    net.backward_raw(&cache, &raw_grad, &mut grad)?;

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..net.param_count() {
        let mut a = net.clone();
        let mut b = net.clone();
        a.params_mut()[i] += h;
        b.params_mut()[i] -= h;
        let fd = (loss(&a) - loss(&b)) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-4));
    }
    println!("{} parameters, max relative error {worst:.2e}", net.param_count());
    Ok(())
}
