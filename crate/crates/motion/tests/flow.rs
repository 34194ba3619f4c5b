use actparse_core::Tensor;
use actparse_motion::{
    compose, horn_schunck_energy, horn_schunck_flow, horn_schunck_flow_traced, warp_clip, FlowParams, VideoClip,
};

const SIZE: usize = 48;

/// Seeded noise smoothed by repeated wrap-around box blurs.
fn texture(seed: u64) -> Vec<f32> {
    let mut img = Tensor::random_uniform(&[SIZE, SIZE], 0.0, 1.0, seed).unwrap().into_data();
    for _ in 0..3 {
        let src = img.clone();
        for y in 0..SIZE {
            for x in 0..SIZE {
                let mut acc = 0f32;
                for dy in [SIZE - 1, 0, 1] {
                    for dx in [SIZE - 1, 0, 1] {
                        acc += src[((y + dy) % SIZE) * SIZE + (x + dx) % SIZE];
                    }
                }
                img[y * SIZE + x] = acc / 9.0;
            }
        }
    }
    // stretch contrast back towards [0, 1]
    let (lo, hi) = img.iter().fold((f32::MAX, f32::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    img.iter().map(|&v| (v - lo) / (hi - lo)).collect()
}

/// `img` moved by `(dx, dy)` pixels with wrap-around.
fn roll(img: &[f32], dx: usize, dy: usize) -> Vec<f32> {
    let mut out = vec![0f32; img.len()];
    for y in 0..SIZE {
        for x in 0..SIZE {
            out[((y + dy) % SIZE) * SIZE + (x + dx) % SIZE] = img[y * SIZE + x];
        }
    }
    out
}

fn frame(data: Vec<f32>) -> Tensor {
    Tensor::from_vec(&[SIZE, SIZE], data).unwrap()
}

fn interior_median(t: &Tensor) -> f32 {
    let mut v: Vec<f32> = (8..SIZE - 8)
        .flat_map(|y| (8..SIZE - 8).map(move |x| (y, x)))
        .map(|(y, x)| t.data()[y * SIZE + x])
        .collect();
    v.sort_by(f32::total_cmp);
    v[v.len() / 2]
}

#[test]
fn one_pixel_translations_are_recovered() {
    for seed in 0..5 {
        let a = texture(seed);
        let (u, v) = horn_schunck_flow(&frame(a.clone()), &frame(roll(&a, 1, 0)), &FlowParams::default()).unwrap();
        let (mu, mv) = (interior_median(&u), interior_median(&v));
        assert!((0.5..=1.5).contains(&mu) && mv.abs() < 0.25, "seed {seed}: ({mu}, {mv})");

        let (u, v) = horn_schunck_flow(&frame(a.clone()), &frame(roll(&a, 0, 1)), &FlowParams::default()).unwrap();
        let (mu, mv) = (interior_median(&u), interior_median(&v));
        assert!((0.5..=1.5).contains(&mv) && mu.abs() < 0.25, "seed {seed} vertical: ({mu}, {mv})");
    }
}

#[test]
fn reversed_pair_gives_opposite_flow() {
    let a = frame(texture(7));
    let b = frame(roll(a.data(), 1, 0));
    let (fwd, _) = horn_schunck_flow(&a, &b, &FlowParams::default()).unwrap();
    let (bwd, _) = horn_schunck_flow(&b, &a, &FlowParams::default()).unwrap();
    assert!((interior_median(&fwd) + interior_median(&bwd)).abs() < 0.25);
}

#[test]
fn energy_never_increases() {
    for seed in 0..6 {
        let a = frame(texture(seed));
        let b = if seed % 2 == 0 {
            frame(roll(a.data(), 1, 1))
        } else {
            Tensor::random_uniform(&[SIZE, SIZE], 0.0, 1.0, 100 + seed).unwrap()
        };
        let params = FlowParams {
            iterations: 60,
            ..FlowParams::default()
        };
        let (u, v, energies) = horn_schunck_flow_traced(&a, &b, &params).unwrap();
        let zero = Tensor::zeros(&[SIZE, SIZE]).unwrap();
        let start = horn_schunck_energy(&a, &b, &zero, &zero, params.alpha).unwrap();
        assert!(energies[0] <= start);
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
        let last = horn_schunck_energy(&a, &b, &u, &v, params.alpha).unwrap();
        assert!((last - energies[59]).abs() <= 1e-4 * energies[59].max(1e-12));
    }
}

#[test]
fn translating_clip_motion_channels() {
    let base = texture(11);
    let t = 5;
    let mut data = Vec::new();
    for i in 0..t {
        data.extend(roll(&base, i, 0));
    }
    let clip = VideoClip::new(Tensor::from_vec(&[t, SIZE, SIZE, 1], data).unwrap()).unwrap();
    let am = compose(&clip, &FlowParams::default()).unwrap();
    assert_eq!(am.volume().dims(), &[3, t, SIZE, SIZE]);
    let plane = SIZE * SIZE;
    for i in 0..t {
        let vx = Tensor::from_vec(&[SIZE, SIZE], am.channel(1)[i * plane..(i + 1) * plane].to_vec()).unwrap();
        let vy = Tensor::from_vec(&[SIZE, SIZE], am.channel(2)[i * plane..(i + 1) * plane].to_vec()).unwrap();
        assert!((0.5..=1.5).contains(&interior_median(&vx)));
        assert!(interior_median(&vy).abs() < 0.25);
    }
    // the final frame repeats the flow of the last pair
    assert_eq!(am.channel(1)[(t - 1) * plane..], am.channel(1)[(t - 2) * plane..(t - 1) * plane]);
}

#[test]
fn static_clip_has_no_motion() {
    let f = texture(3);
    let mut data = f.clone();
    data.extend(&f);
    data.extend(&f);
    let rgb: Vec<f32> = data.iter().flat_map(|&v| [v, v, v]).collect();
    let clip = VideoClip::new(Tensor::from_vec(&[3, SIZE, SIZE, 3], rgb).unwrap()).unwrap();
    let am = compose(&clip, &FlowParams::default()).unwrap();
    assert!(am.channel(1).iter().chain(am.channel(2)).all(|v| v.abs() < 1e-6));
    for (a, b) in am.channel(0).iter().zip(&data) {
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn compose_then_identity_warp_keeps_appearance() {
    let clip = VideoClip::new(Tensor::random_uniform(&[4, 12, 10, 3], 0.0, 1.0, 9).unwrap()).unwrap();
    let am = compose(&clip, &FlowParams { iterations: 20, ..FlowParams::default() }).unwrap();
    let w = warp_clip(&am, [4, 12, 10]).unwrap();
    for (a, b) in am.channel(0).iter().zip(w.channel(0)) {
        assert!((a - b).abs() < 1e-5);
    }
}
