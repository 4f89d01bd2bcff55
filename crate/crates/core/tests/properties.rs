//! Property tests for the data layer.

use nalgebra::DMatrix;
use proptest::prelude::*;
use sess_core::matio::{
    destandardize_coef, format_matrix, parse_matrix, standardize, Dataset, MatrixFormat,
};

fn finite_f64() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e12..1e12f64,
        -1.0..1.0f64,
        Just(0.0),
        Just(1.0),
        Just(-1.0),
        Just(std::f64::consts::PI),
        Just(1.234567890123456e-30),
        Just(-9.87654321e17),
    ]
}

fn matrix_strategy(max_dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_dim, 1..=max_dim).prop_flat_map(|(r, c)| {
        proptest::collection::vec(finite_f64(), r * c)
            .prop_map(move |data| DMatrix::from_vec(r, c, data))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn file_round_trip_is_exact(m in matrix_strategy(12), tsv in any::<bool>()) {
        let format = if tsv { MatrixFormat::Tsv } else { MatrixFormat::Csv };
        let text = format_matrix(&m, format, None);
        let back = parse_matrix(&text, format, false).unwrap();
        prop_assert_eq!(m, back);
    }

    #[test]
    fn standardization_factorizes_the_design(
        m in matrix_strategy(10),
        shift in 1..5usize,
    ) {
        // need n >= 2 and no zero columns; rebuild a safe matrix
        let n = m.nrows().max(2) + shift;
        let p = m.ncols();
        let x = DMatrix::from_fn(n, p, |i, j| {
            let base = if i < m.nrows() { m[(i, j)] } else { 0.0 };
            base + 1.0 + (i * p + j) as f64 * 0.25
        });
        let ds = Dataset::new(x.clone(), DMatrix::zeros(n, 1)).unwrap();
        let std = standardize(&ds).unwrap();
        // X_orig == X_std * diag(col_scales) entrywise
        for j in 0..p {
            for i in 0..n {
                let rebuilt = std.x[(i, j)] * std.col_scales[j];
                let err = (rebuilt - x[(i, j)]).abs();
                prop_assert!(err <= 1e-12 * x[(i, j)].abs().max(1.0));
            }
        }
        // destandardize inverts the coefficient mapping
        let c_std = DMatrix::from_fn(p, 2, |i, k| (i + k) as f64 * 0.5 - 1.0);
        let c = destandardize_coef(&c_std, &std.col_scales).unwrap();
        let lhs = &x * &c;
        let rhs = &std.x * &c_std;
        let scale = rhs.abs().max().max(1.0);
        prop_assert!((lhs - rhs).abs().max() <= 1e-10 * scale);
    }

    #[test]
    fn ragged_input_is_rejected(rows in 2..8usize, cols in 2..6usize, short in 1..4usize) {
        let m = DMatrix::from_element(rows, cols, 1.5);
        let mut text = format_matrix(&m, MatrixFormat::Csv, None);
        // truncate the last line to fewer fields
        let cut = short.min(cols - 1);
        let lines: Vec<&str> = text.lines().collect();
        let last = lines[rows - 1];
        let fields: Vec<&str> = last.split(',').collect();
        let short_line = fields[..cut].join(",");
        text = lines[..rows - 1].join("\n") + "\n" + &short_line + "\n";
        let err = parse_matrix(&text, MatrixFormat::Csv, false).unwrap_err();
        let ragged = matches!(err, sess_core::matio::MatError::RaggedRows { .. });
        prop_assert!(ragged);
    }
}
