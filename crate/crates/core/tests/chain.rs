//! End-to-end properties of the public API, checked against values computed
//! directly in this file.

use std::f64::consts::PI;

use otfs_core::{
    assemble_frame, extract_data, make_pattern, propagate_ideal_all, qam_demodulate,
    qam_modulate, receive, ChannelRealization, DdFrame, FrameParams, PathSpec, PatternVariant,
    QamOrder, Transforms, C64,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frame_from(values: &[(f64, f64)], p: &FrameParams) -> DdFrame {
    DdFrame::from_vec(p, values.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn modulate_then_demodulate_is_identity(
        values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16 * 8),
        cp in 0usize..6,
    ) {
        let p = FrameParams::with_spacing_wavelengths(16, 8, 15e3, 4e9, 1, 0.45, cp).unwrap();
        let t = Transforms::new(&p);
        let x = frame_from(&values, &p);
        let back = t.demodulate(&t.modulate(&x, cp).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(x.as_slice()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transforms_preserve_energy(values in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16 * 8)) {
        let p = FrameParams::with_spacing_wavelengths(16, 8, 15e3, 4e9, 1, 0.45, 0).unwrap();
        let x = frame_from(&values, &p);
        let s = Transforms::new(&p).modulate(&x, 0).unwrap();
        prop_assert!((s.energy() - x.energy()).abs() <= 1e-10 * (1.0 + x.energy()));
    }

    #[test]
    fn qam_round_trip(bits in prop::collection::vec(0u8..=1, 0..64), sixteen in any::<bool>()) {
        let order = if sixteen { QamOrder::Qam16 } else { QamOrder::Qam4 };
        let usable = bits.len() / order.bits_per_symbol() * order.bits_per_symbol();
        let bits = &bits[..usable];
        let symbols = qam_modulate(bits, order).unwrap();
        let power: f64 = symbols.iter().map(|s| s.norm_sqr()).sum();
        // every constellation point of either order has magnitude at most sqrt(1.8)
        prop_assert!(power <= 1.8 * symbols.len() as f64 + 1e-12);
        prop_assert_eq!(qam_demodulate(&symbols, order), bits.to_vec());
    }
}

#[test]
fn constellations_have_unit_average_power() {
    for (order, bps) in [(QamOrder::Qam4, 2), (QamOrder::Qam16, 4)] {
        let count = 1usize << bps;
        let bits: Vec<u8> = (0..count)
            .flat_map(|v| (0..bps).rev().map(move |i| ((v >> i) & 1) as u8))
            .collect();
        let symbols = qam_modulate(&bits, order).unwrap();
        let mean: f64 = symbols.iter().map(|s| s.norm_sqr()).sum::<f64>() / count as f64;
        assert!((mean - 1.0).abs() < 1e-12, "{order:?}: {mean}");
    }
}

#[test]
fn data_survives_assembly_and_extraction() {
    let p = FrameParams::desk(1).unwrap();
    for variant in PatternVariant::ALL {
        let pat = make_pattern(variant, &p, 3, 4, 30.0, 0.01).unwrap();
        let data: Vec<C64> = (0..pat.data_len()).map(|i| C64::new(i as f64, -(i as f64))).collect();
        let x = assemble_frame(&data, &pat, &p).unwrap();
        assert_eq!(extract_data(&x, &pat).unwrap(), data);
        // pilot power is sigma2 * 10^(snr_p / 10)
        assert!((x.get(pat.l0, pat.k0).norm_sqr() - 10.0).abs() < 1e-9);
        let nonzero = x.as_slice().iter().filter(|v| v.norm() > 0.0).count();
        // data cell 0 carries the value zero
        assert_eq!(nonzero, pat.data_len());
    }
}

#[test]
fn noiseless_receiver_recovers_four_separated_paths() {
    let p = FrameParams::desk(256).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f_d = p.max_doppler_hz(500.0);
    let k_max = p.doppler_support(f_d);
    let nt = p.n as f64 * p.symbol_duration();
    let pat = make_pattern(PatternVariant::FullGuard, &p, 3, k_max, 40.0, 0.0).unwrap();
    for _ in 0..5 {
        // four well-separated directions, each with its own delay
        let offset = rng.random::<f64>() * 0.2;
        let paths: Vec<PathSpec> = (0..4)
            .map(|b| {
                let u: f64 = -0.8 + 0.5 * b as f64 + offset;
                let aoa = u.acos();
                let k = (nt * f_d * u + 0.5).floor() as i64;
                let gain = C64::from_polar(0.5 + rng.random::<f64>(), rng.random::<f64>() * 2.0 * PI);
                PathSpec::on_grid(b, k, aoa, gain, &p)
            })
            .collect();
        let ch = ChannelRealization::from_paths(paths, f_d, &p);
        let bits: Vec<u8> = (0..2 * pat.data_len()).map(|_| rng.random_range(0..=1)).collect();
        let x = assemble_frame(&qam_modulate(&bits, QamOrder::Qam4).unwrap(), &pat, &p).unwrap();
        let frames = propagate_ideal_all(&x, &ch, &p).unwrap();
        let us: Vec<f64> = ch.paths.iter().map(|q| q.aoa.cos()).collect();
        let out = receive(&frames, &us, &pat, f_d, &p).unwrap();
        for (est, path) in out.estimates.iter().zip(&ch.paths) {
            assert_eq!((est.l_hat, est.k_hat), (path.l, path.k));
        }
        assert_eq!(qam_demodulate(&out.symbols, QamOrder::Qam4), bits);
    }
}
