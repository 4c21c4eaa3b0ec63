use std::io::Write;

use apnn_core::{cross_validate, kfold, load_csv, ApnnError, CvOptions, Method};

fn write_temp(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn bundled_iris_matches_file_round_trip() {
    let f = write_temp(apnn_core::IRIS_CSV);
    let d = load_csv(f.path()).unwrap();
    assert_eq!(d, apnn_core::iris());
    assert_eq!(d.len(), 150);
    assert_eq!(d.n_features(), 4);
    assert_eq!(d.class_counts(), vec![50, 50, 50]);
    assert_eq!(
        d.label_names(),
        ["Iris-setosa", "Iris-versicolor", "Iris-virginica"]
    );
}

#[test]
fn headerless_file_with_string_labels() {
    let mut text = String::new();
    for i in 0..6 {
        let t = 0.01 * i as f64;
        text.push_str(&format!("1.0,{t},north\n{t},1.0,east\n"));
    }
    let f = write_temp(&text);
    let d = load_csv(f.path()).unwrap();
    assert_eq!(d.len(), 12);
    assert_eq!(d.n_classes(), 2);
    for m in Method::ALL {
        let r = cross_validate(&d, m, 3, 5, &CvOptions::default()).unwrap();
        assert_eq!(r.folds.len(), 3);
        let floor = if m.quantized() { 0.9 } else { 1.0 };
        assert!(r.mean_accuracy >= floor, "{m}: {}", r.mean_accuracy);
    }
}

#[test]
fn load_errors_carry_location() {
    let missing = std::env::temp_dir().join("apnn-no-such-file.csv");
    assert!(matches!(load_csv(&missing), Err(ApnnError::Io { .. })));

    let f = write_temp("a,b,label\n1,2,x\n3,y\n");
    assert!(matches!(
        load_csv(f.path()),
        Err(ApnnError::RaggedRow { row: 3, .. })
    ));

    let f = write_temp("a,b,label\n1,2,x\n3,oops,y\n");
    assert!(matches!(
        load_csv(f.path()),
        Err(ApnnError::NonNumeric { row: 3, .. })
    ));

    let f = write_temp("a,b,label\n1,2,x\n3,4,x\n");
    assert!(matches!(
        load_csv(f.path()),
        Err(ApnnError::TooFewClasses { found: 1 })
    ));
}

#[test]
fn fold_assignment_file() {
    let d = apnn_core::iris();
    let split = kfold(&d, 5, 42).unwrap();
    let mut out = Vec::new();
    split.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sample_index,fold_id"));
    let mut per_fold = [0usize; 5];
    for (i, l) in lines.enumerate() {
        let (idx, fold) = l.split_once(',').unwrap();
        assert_eq!(idx.parse::<usize>().unwrap(), i);
        per_fold[fold.parse::<usize>().unwrap()] += 1;
    }
    assert_eq!(per_fold, [30; 5]);
    assert_eq!(split, kfold(&d, 5, 42).unwrap());
    assert_ne!(split.assignments(), kfold(&d, 5, 43).unwrap().assignments());
}
