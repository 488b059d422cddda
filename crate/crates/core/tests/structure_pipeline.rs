use std::time::Instant;

use bsl_core::gap::{structure_scan, ScanParams};
use bsl_core::hyperplane::NormalVector;

#[test]
fn all_ones_scan_certifies() {
    for n in [4usize, 6, 8] {
        let a = NormalVector::new(vec![1; n]).unwrap();
        let t = Instant::now();
        let s = structure_scan(&a, &ScanParams::default()).unwrap();
        let secs = t.elapsed().as_secs_f64();
        assert!(s.label.as_ref().unwrap().exceptional, "n={n}");
        assert!(s.stopped_at.is_none(), "n={n}: {:?}", s.stages);
        let check = s.check.as_ref().unwrap();
        assert!(check.contains_all && check.pnorm_ok, "n={n}: {check:?}");
        assert!(check.pnorm_sum.unwrap() <= 10.0);
        assert!(secs < 30.0, "n={n} took {secs}s");
    }
}

#[test]
fn scan_is_reproducible() {
    let a = NormalVector::new(vec![1, 1, 2, 2, 3, 3]).unwrap();
    let x = structure_scan(&a, &ScanParams::default()).unwrap();
    let y = structure_scan(&a, &ScanParams::default()).unwrap();
    assert_eq!(format!("{x:?}"), format!("{y:?}"));
}
