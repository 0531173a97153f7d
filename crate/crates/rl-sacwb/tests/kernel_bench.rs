//! Manual micro-benchmarks of the conv layer pieces.
//! cargo test -p rl-sacwb --release --test kernel_bench -- --ignored --nocapture

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rl_sacwb::nn::Conv2d;

#[test]
#[ignore]
fn conv_layer_pieces() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let b = 64usize;

    for (c_in, c_out, h, w, name) in [
        (3usize, 8usize, 64usize, 64usize, "conv1"),
        (8, 16, 31, 31, "conv2"),
        (16, 32, 15, 15, "conv3"),
    ] {
        let conv: Conv2d<f32> = Conv2d::init(c_in, c_out, 3, 2, &mut rng);
        let x = Array2::from_shape_fn((b, h * w * c_in), |_| rng.random_range(-1.0f32..1.0));
        // warm
        let (out, cache) = conv.forward(&x, h, w);
        let d_out = out.clone();
        let reps = 20;
        let t0 = std::time::Instant::now();
        for _ in 0..reps {
            let _ = conv.forward(&x, h, w);
        }
        let fwd = t0.elapsed().as_secs_f64() / reps as f64;
        let t0 = std::time::Instant::now();
        for _ in 0..reps {
            let _ = conv.backward(&cache, &d_out);
        }
        let bwd = t0.elapsed().as_secs_f64() / reps as f64;
        println!("{name}: forward {:.2} ms, backward {:.2} ms", fwd * 1e3, bwd * 1e3);
    }
}
