use ndarray::Array2;
use proptest::prelude::*;
use shapereg::data_io::{
    format_annotations, format_detections, load_dataset_dir, parse_annotation_bytes, parse_annotations,
    parse_detections, read_raster, write_raster, AnnotationFormat, MsrrRaster, RasterData,
};
use shapereg::decode::{Detection, PredictionRaster};
use shapereg::encode::{encode, RasterGrid};
use shapereg::geom::{Point2, Polygon};
use shapereg::synth::synthetic_suite;
use std::path::PathBuf;

fn fixture(format: AnnotationFormat) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(format!("{}.txt", format.name()))
}

fn close(a: &[Point2], b: &[Point2], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.dist(*q) <= tol)
}

#[test]
fn fixtures_parse_serialize_parse_is_a_fixed_point() {
    for format in AnnotationFormat::ALL {
        let text = std::fs::read_to_string(fixture(format)).unwrap();
        let first = parse_annotations(format, &text).unwrap();
        assert!(!first.annotations.is_empty(), "{format}");
        let again =
            parse_annotations(format, &format_annotations(format, &first.annotations, first.image_size)).unwrap();
        assert_eq!(again.image_size, first.image_size);
        assert_eq!(again.annotations.len(), first.annotations.len());
        for (a, b) in first.annotations.iter().zip(&again.annotations) {
            assert_eq!(a.ignore, b.ignore, "{format}");
            assert!(close(&a.upper, &b.upper, 1e-9) && close(&a.lower, &b.lower, 1e-9), "{format}: {a:?} vs {b:?}");
        }
        // A third pass reproduces the second exactly.
        let third =
            parse_annotations(format, &format_annotations(format, &again.annotations, again.image_size)).unwrap();
        assert_eq!(
            format_annotations(format, &third.annotations, None),
            format_annotations(format, &again.annotations, None)
        );
    }
}

#[test]
fn fixture_conventions() {
    let ctw = parse_annotations(
        AnnotationFormat::Ctw1500,
        &std::fs::read_to_string(fixture(AnnotationFormat::Ctw1500)).unwrap(),
    )
    .unwrap();
    assert_eq!((ctw.annotations[0].upper.len(), ctw.annotations[0].lower.len()), (7, 7));
    let ic = parse_annotations(
        AnnotationFormat::Icdar2015,
        &std::fs::read_to_string(fixture(AnnotationFormat::Icdar2015)).unwrap(),
    )
    .unwrap();
    assert_eq!(ic.annotations.iter().map(|a| a.ignore).collect::<Vec<_>>(), [false, true, false]);
    assert_eq!(ic.annotations[2].text.as_deref(), Some("a,b"));
    let tt = parse_annotations(
        AnnotationFormat::TotalText,
        &std::fs::read_to_string(fixture(AnnotationFormat::TotalText)).unwrap(),
    )
    .unwrap();
    assert_eq!(tt.annotations[2].upper.len(), 5);
    assert!(tt.annotations[1].ignore);
}

#[test]
fn dataset_directory_loads_every_file() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["gt_b.txt", "gt_a.txt"] {
        std::fs::copy(fixture(AnnotationFormat::TotalText), dir.path().join(name)).unwrap();
    }
    std::fs::write(dir.path().join("notes.md"), "not an annotation").unwrap();
    let records = load_dataset_dir(dir.path(), AnnotationFormat::TotalText).unwrap();
    assert_eq!(records.iter().map(|r| r.image_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    assert_eq!(records[0].image_size, (240, 160));
}

#[test]
fn label_and_prediction_files_roundtrip() {
    let s = &synthetic_suite(2, 8)[1];
    let grid = RasterGrid::for_image(s.image_size.0, s.image_size.1, 2).unwrap();
    let (labels, _) = encode(std::slice::from_ref(&s.annotation), grid).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.msrr");
    write_raster(&path, &RasterData::Labels(labels.clone())).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let RasterData::Labels(back) = read_raster(&path).unwrap() else { panic!("expected labels") };
    assert_eq!(back.mask, labels.mask);
    assert_eq!(back.grid, labels.grid);
    assert!(back.dist_x.iter().zip(&labels.dist_x).all(|(a, b)| *a == (*b as f32) as f64));
    write_raster(&path, &RasterData::Labels(back)).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);

    let pred = PredictionRaster::from_labels(&labels);
    write_raster(&path, &RasterData::Prediction(pred)).unwrap();
    assert!(matches!(read_raster(&path).unwrap(), RasterData::Prediction(_)));
}

#[test]
fn detections_roundtrip_to_a_thousandth() {
    let tri =
        Polygon::new(vec![Point2::new(0.12345, 1.0), Point2::new(10.0004, 2.0), Point2::new(3.0, 9.87654)]).unwrap();
    let dets = vec![Detection::new(tri.clone(), 0.9), Detection::new(tri, 0.25)];
    let text = format_detections(&dets);
    assert!(text.starts_with("0.900,3,"));
    let back = parse_detections(&text).unwrap();
    for (a, b) in dets.iter().zip(&back) {
        assert!((a.score - b.score).abs() <= 1e-3);
        assert!(close(a.polygon.vertices(), b.polygon.vertices(), 1e-3));
    }
    assert!(parse_detections("").unwrap().is_empty());
    assert_eq!(parse_detections("0.5,3,0,0,1,0,0,1\n1.5,3,0,0,1,0,0,1\n").unwrap_err().line, 2);
}

fn raster() -> impl Strategy<Value = MsrrRaster> {
    (1u32..12, 1u32..12, 1u32..6, 1usize..5).prop_flat_map(|(w, h, stride, c)| {
        proptest::collection::vec(any::<u32>(), (w * h) as usize * c).prop_map(move |bits| {
            let planes = bits
                .chunks((w * h) as usize)
                .map(|chunk| {
                    Array2::from_shape_vec((h as usize, w as usize), chunk.iter().map(|&b| f32::from_bits(b)).collect())
                        .unwrap()
                })
                .collect();
            MsrrRaster::new(w, h, stride, planes).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn msrr_bytes_roundtrip_exactly(r in raster()) {
        let bytes = r.to_bytes();
        let back = MsrrRaster::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn msrr_reader_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
        let _ = MsrrRaster::from_bytes(&bytes);
        let mut with_magic = b"MSRR".to_vec();
        with_magic.extend(&bytes);
        let _ = MsrrRaster::from_bytes(&with_magic);
    }

    #[test]
    fn parsers_never_panic_and_locate_errors(bytes in proptest::collection::vec(any::<u8>(), 0..300)) {
        let lines = bytes.iter().filter(|&&b| b == b'\n').count() + 1;
        for format in AnnotationFormat::ALL {
            if let Err(e) = parse_annotation_bytes(format, &bytes) {
                prop_assert!(e.line >= 1 && e.line <= lines);
            }
        }
    }

    #[test]
    fn numeric_garbage_lines_are_located(good in 0usize..4, junk in "[0-9,.\\- ]{0,40}") {
        for format in AnnotationFormat::ALL {
            let valid = std::fs::read_to_string(fixture(format)).unwrap();
            let body: Vec<&str> = valid.lines().skip(1).collect();
            let mut text: String = (0..good).map(|i| format!("{}\n", body[i % body.len()])).collect();
            text.push_str(&junk);
            text.push('\n');
            match parse_annotations(format, &text) {
                Ok(parsed) => prop_assert!(parsed.annotations.len() == good + usize::from(!junk.trim().is_empty())),
                Err(e) => prop_assert_eq!(e.line, good + 1),
            }
        }
    }
}
