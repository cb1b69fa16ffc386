use proptest::prelude::*;

use quanvolve::circuit::{integrated_circuit, MappingKind};
use quanvolve::layer::{apply_layer_direct, preprocess_dataset, LayerConfig, Padding};
use quanvolve::quantize::{MemoTable, QuantizedImage};
use quanvolve::sim::DecodeMode;

fn image(height: usize, width: usize, levels: usize, seed: u64) -> QuantizedImage {
    let data = (0..height * width)
        .map(|i| (quanvolve::seed::mix(seed, i as u64) % levels as u64) as u16)
        .collect();
    QuantizedImage::from_indices(height, width, levels, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maps_have_expected_shape_and_range(
        h in 3usize..12, w in 3usize..12, k in 2usize..4, same in any::<bool>(), seed in any::<u64>(),
    ) {
        prop_assume!(h >= k && w >= k);
        let padding = if same { Padding::Same } else { Padding::None };
        let filters = (0..2).map(|i| integrated_circuit(k, 3, k * k + 2, MappingKind::Simple, seed ^ i).unwrap()).collect();
        let mut cfg = LayerConfig::new(filters, DecodeMode::Analytic, seed).unwrap();
        cfg.padding = padding;
        let imgs = vec![image(h, w, 7, seed), image(h, w, 7, seed.wrapping_add(1))];
        let memo = MemoTable::new(k, 7).unwrap();
        let (maps, report) = preprocess_dataset(&imgs, &cfg, &memo).unwrap();
        for (img, map) in imgs.iter().zip(&maps) {
            prop_assert_eq!(map.channels, 2);
            prop_assert_eq!(map.height, padding.positions(h, k));
            prop_assert_eq!(map.width, padding.positions(w, k));
            prop_assert!(map.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let direct = apply_layer_direct(img, &cfg).unwrap();
            prop_assert_eq!(&direct.data, &map.data);
        }
        prop_assert_eq!(report.evaluator_calls, 2 * report.unique_patches);
    }
}
