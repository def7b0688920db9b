use proptest::prelude::*;
use rul_uap::ndgrad::{finite_diff_check, Elementwise, GradError, Var};
use rul_uap::{Tape, Tensor, TensorF32};

fn tensor(shape: &[usize], data: Vec<f64>) -> Tensor {
    Tensor::from_vec(shape.to_vec(), data).unwrap()
}

fn matrix(p: usize, q: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-2.0f64..2.0, p * q).prop_map(move |d| tensor(&[p, q], d))
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..5, 1usize..5, 1usize..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matmul_sum_gradients_match_finite_differences(
        (a, b) in dims().prop_flat_map(|(p, q, r)| (matrix(p, q), matrix(q, r)))
    ) {
        let bb = b.clone();
        let rep = finite_diff_check(
            move |t: &mut Tape, x: Var| {
                let bv = t.constant(bb.clone());
                let c = t.matmul(x, bv)?;
                Ok(t.sum(c))
            },
            &a,
            1e-5,
            1e-6,
        )
        .unwrap();
        prop_assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn composed_graph_gradients_match_finite_differences(x in matrix(3, 4), b in matrix(1, 4)) {
        // sum(tanh(x + b) * sigmoid(x)) squared through an MSE against zero
        let bb = b.clone();
        let rep = finite_diff_check(
            move |t: &mut Tape, x: Var| {
                let bv = t.constant(bb.clone());
                let h = t.add_row_bias(x, bv)?;
                let th = t.tanh(h);
                let sg = t.sigmoid(x);
                let p = t.mul(th, sg)?;
                let s = t.sum(p);
                let z = t.constant(Tensor::scalar(0.0));
                t.mse_loss(s, z)
            },
            &x,
            1e-5,
            1e-5,
        )
        .unwrap();
        prop_assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn gradient_is_linear_in_the_loss(x in matrix(2, 3), a in -3.0f64..3.0, c in -3.0f64..3.0) {
        // grad(a*f + c*g) == a*grad(f) + c*grad(g) with f = sum(x*x), g = sum(tanh(x))
        let grad_of = |wf: f64, wg: f64| {
            let mut t = Tape::new();
            let v = t.param(x.clone());
            let sq = t.mul(v, v).unwrap();
            let f = t.sum(sq);
            let th = t.tanh(v);
            let g = t.sum(th);
            let fs = t.scale(f, wf);
            let gs = t.scale(g, wg);
            let l = t.add(fs, gs).unwrap();
            t.backward(l).unwrap().get(v).unwrap().clone()
        };
        let combined = grad_of(a, c);
        let gf = grad_of(1.0, 0.0);
        let gg = grad_of(0.0, 1.0);
        for i in 0..x.len() {
            let want = a * gf.data()[i] + c * gg.data()[i];
            prop_assert!((combined.data()[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn identity_product_is_bit_exact(a in dims().prop_flat_map(|(p, q, _)| matrix(p, q))) {
        let (p, _) = a.dims2().unwrap();
        prop_assert_eq!(Tensor::eye(p).matmul(&a).unwrap(), a);
    }

    #[test]
    fn forward_and_backward_are_deterministic(x in matrix(3, 3)) {
        let run = || {
            let mut t = Tape::new();
            let v = t.param(x.clone());
            let m = t.matmul(v, v).unwrap();
            let s = t.sigmoid(m);
            let l = t.sum(s);
            let value = t.value(l).data()[0];
            (value, t.backward(l).unwrap().get(v).unwrap().clone())
        };
        let (v1, g1) = run();
        let (v2, g2) = run();
        prop_assert_eq!(v1.to_bits(), v2.to_bits());
        prop_assert_eq!(g1, g2);
    }

    #[test]
    fn sigmoid_stays_finite_for_large_inputs(v in -800.0f64..800.0) {
        let mut t = Tape::new();
        let x = t.param(Tensor::scalar(v));
        let s = t.sigmoid(x);
        let y = t.value(s).data()[0];
        prop_assert!((0.0..=1.0).contains(&y));
        let g = t.backward(s).unwrap();
        prop_assert!(g.get(x).unwrap().data()[0].is_finite());
    }
}

#[test]
fn hand_matmul_and_identity() {
    let a = tensor(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]);
    let b = tensor(&[2, 2], vec![5.0, 6.0, 7.0, 8.0]);
    assert_eq!(a.matmul(&b).unwrap().data(), &[19.0, 22.0, 43.0, 50.0]);
    assert_eq!(Tensor::eye(2).matmul(&b).unwrap(), b);
}

#[test]
fn scalar_chain_rule() {
    // loss = (w x - y)^2, d/dx = 2 w (w x - y)
    let (w, xv, y) = (1.5, -0.4, 2.0);
    let mut t = Tape::new();
    let wv = t.constant(Tensor::scalar(w));
    let x = t.param(Tensor::scalar(xv));
    let yv = t.constant(Tensor::scalar(y));
    let p = t.mul(wv, x).unwrap();
    let l = t.mse_loss(p, yv).unwrap();
    let g = t.backward(l).unwrap();
    assert_eq!(g.get(x).unwrap().data()[0], 2.0 * w * (w * xv - y));
}

#[test]
fn shape_errors_are_reported_not_panics() {
    let mut t = Tape::new();
    let a = t.param(Tensor::zeros(vec![2, 3]));
    let b = t.param(Tensor::zeros(vec![2, 3]));
    let err = t.matmul(a, b).unwrap_err();
    assert!(matches!(err, GradError::Shape { .. }));
    assert!(err.to_string().contains("[2, 3]"));
    assert!(t.elementwise(Elementwise::Add, &[a]).is_err());
}

#[test]
fn works_in_single_precision() {
    let mut t: rul_uap::ndgrad::Tape<f32> = rul_uap::ndgrad::Tape::new();
    let x = t.param(TensorF32::from_vec(vec![1, 2], vec![0.0, 1.0]).unwrap());
    let s = t.sigmoid(x);
    let l = t.sum(s);
    let g = t.backward(l).unwrap();
    assert_eq!(g.get(x).unwrap().data()[0], 0.25f32);
}
