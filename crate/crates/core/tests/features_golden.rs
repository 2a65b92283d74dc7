//! Feature CSV output for a fixed handcrafted stack, compared byte for byte
//! against a committed reference. Set `SNOWPIPE_BLESS=1` to regenerate it.

mod common;

use std::fs;

use common::{golden_path, handcrafted_stack, oracle_pixel_features};
use snowpipe::features::{assemble_features, assemble_with_layout, ChannelLayout};
use snowpipe::gridstack::valid_mask;

#[test]
fn handcrafted_features_match_golden_csv() {
    let stack = handcrafted_stack(4, 3);
    let mask = valid_mask(&stack);
    assert_eq!(mask.len(), 11);
    let m = assemble_features(&stack, &mask).unwrap();
    let mut csv = Vec::new();
    m.write_csv(&mut csv).unwrap();
    let path = golden_path("features_handcrafted.csv");
    if std::env::var_os("SNOWPIPE_BLESS").is_some() {
        fs::write(&path, &csv).unwrap();
    }
    let expected = fs::read(&path).unwrap();
    assert_eq!(
        String::from_utf8(csv).unwrap(),
        String::from_utf8(expected).unwrap()
    );
}

#[test]
fn golden_rows_agree_with_loop_oracle() {
    let stack = handcrafted_stack(4, 3);
    let text = fs::read_to_string(golden_path("features_handcrafted.csv")).unwrap();
    let mask = valid_mask(&stack);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), mask.len());
    for (line, &p) in rows.iter().zip(mask.indices()) {
        let values: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let oracle = oracle_pixel_features(&stack, p);
        assert_eq!(&values[..21], &oracle[..]);
        assert_eq!(values[21], stack.target().values()[p] as f64);
    }
}

#[test]
fn los_layout_appends_phase_sum() {
    let stack = handcrafted_stack(4, 3);
    let mask = valid_mask(&stack);
    let m = assemble_with_layout(&stack, &mask, ChannelLayout::WithLos).unwrap();
    assert_eq!(m.channels(), 22);
    for (i, &p) in mask.indices().iter().enumerate() {
        let sum: f64 = stack
            .acquisitions()
            .iter()
            .map(|a| a.phase.values()[p] as f64)
            .sum();
        assert_eq!(m.row(i)[21], sum);
        assert_eq!(m.row(i)[0], sum / 12.0);
    }
}
