//! The checked-in fixture files must stay bit-identical to the reference
//! instances. Run the ignored test to regenerate them after a deliberate
//! change:
//!
//! ```text
//! cargo test -p gptensor --test fixtures regenerate -- --ignored
//! ```

use std::path::PathBuf;

use gptensor::{read_factors, read_tensor, reference, write_factors, write_tensor};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn tensor_fixtures() -> Vec<(&'static str, gptensor::DenseTensor)> {
    vec![
        ("small_cubic_3x3x3.json", reference::small_cubic()),
        ("cubic_rank4_4x4x3.json", reference::cubic_rank4()),
        ("order4_rank5_5x4x3x3.json", reference::order4_rank5()),
        ("radial_sum_5x5x4.json", reference::radial_sum_5x5x4()),
    ]
}

fn factor_fixtures() -> Vec<(&'static str, gptensor::CPDecomposition)> {
    vec![
        (
            "cubic_rank4_expected_factors.json",
            reference::cubic_rank4_factors(),
        ),
        (
            "order4_rank5_expected_factors.json",
            reference::order4_rank5_expected_factors(),
        ),
    ]
}

#[test]
fn checked_in_fixtures_match_reference() {
    for (name, tensor) in tensor_fixtures() {
        let loaded = read_tensor(fixture_dir().join(name)).expect(name);
        assert_eq!(loaded.dims(), tensor.dims(), "{name}: dims");
        for (a, b) in loaded.data().iter().zip(tensor.data()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits(), "{name}");
            assert_eq!(a.im.to_bits(), b.im.to_bits(), "{name}");
        }
    }
    for (name, cp) in factor_fixtures() {
        let loaded = read_factors(fixture_dir().join(name)).expect(name);
        assert_eq!(loaded.rank(), cp.rank(), "{name}: rank");
        for (fa, fb) in loaded.factors().iter().zip(cp.factors()) {
            for (a, b) in fa.iter().zip(fb.iter()) {
                assert_eq!(a.re.to_bits(), b.re.to_bits(), "{name}");
                assert_eq!(a.im.to_bits(), b.im.to_bits(), "{name}");
            }
        }
    }
}

#[test]
#[ignore = "writes the fixture files; run explicitly after changing the reference instances"]
fn regenerate() {
    let dir = fixture_dir();
    std::fs::create_dir_all(&dir).unwrap();
    for (name, tensor) in tensor_fixtures() {
        write_tensor(dir.join(name), &tensor).unwrap();
    }
    for (name, cp) in factor_fixtures() {
        write_factors(dir.join(name), &cp).unwrap();
    }
}
