use everting::estimation::extract_motion_params;
use everting::ingest::{parse_track, parse_track_str, LengthUnit, TrackFile};
use everting::kinematics::{iterate_trajectory, MotionParams, Pose};

#[test]
fn exported_trajectory_reparses_exactly() {
    let p = MotionParams::new(-0.4, 0.07, 2.5, 1.1).unwrap();
    let traj = iterate_trajectory(&p, &Pose::new(1.0, 2.0, -0.3), 25);
    let csv = traj.to_csv(&["everting test".into()]);
    let track = parse_track_str(&csv, LengthUnit::Meter, 60.0).unwrap();
    assert_eq!(track.samples.len(), traj.len());
    let headings = track.headings.as_ref().unwrap();
    for ((a, b), h) in track.samples.iter().zip(&traj.samples).zip(headings) {
        assert!((a.t - b.t).abs() < 1e-12);
        assert!((a.x - b.pose.position.x).abs() < 1e-12);
        assert!((a.y - b.pose.position.y).abs() < 1e-12);
        assert!((h - b.pose.heading()).abs() < 1e-12);
    }
    let ex = extract_motion_params(&track, 25).unwrap();
    assert!((ex.params.delta_phi - p.delta_phi).abs() < 1e-6);
    assert!((ex.params.delta_x - p.delta_x).abs() < 1e-6);
}

#[test]
fn bundled_sample_tracks_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data");
    for (name, unit) in [("track_gamma090.csv", LengthUnit::Meter), ("track_gamma270_mm.tsv", LengthUnit::Millimeter)] {
        let file = TrackFile {
            unit,
            ..TrackFile::new(format!("{dir}/{name}"))
        };
        let track = parse_track(&file).unwrap();
        assert!(track.samples.len() > 10, "{name}");
        assert!(track.headings.is_some(), "{name}");
        extract_motion_params(&track, 12).unwrap();
    }
}

#[test]
fn missing_file_is_an_io_error() {
    let err = parse_track(&TrackFile::new("/nonexistent/track.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/track.csv"));
}
