use phid::cache::{decode, encode, load, save};
use phid::geometry::DomainGeometry;
use phid::spectrum::{build_spectrum, disk_rule_for};
use phid::PhidError;

fn small_disk() -> phid::spectrum::Spectrum {
    build_spectrum(DomainGeometry::disk(disk_rule_for(30)).unwrap(), 30).unwrap()
}

#[test]
fn roundtrip_preserves_everything() {
    let s = small_disk();
    let dir = std::env::temp_dir().join(format!("phid-cache-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("disk.phidspec");
    save(&s, &path).unwrap();
    let t = load(&path).unwrap();
    assert_eq!(s.lambdas, t.lambdas);
    assert_eq!(s.node_values, t.node_values);
    assert_eq!(s.boundary_slopes, t.boundary_slopes);
    assert_eq!(s.geom.nodes, t.geom.nodes);
    assert_eq!(s.modes, t.modes);
    let x = [0.31, -0.42];
    assert_eq!(s.eval(7, x), t.eval(7, x));
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn flipped_payload_byte_fails_the_checksum() {
    let mut bytes = encode(&small_disk()).unwrap();
    let n = bytes.len();
    bytes[n - 3] ^= 1;
    let err = decode(&bytes).unwrap_err();
    assert!(matches!(err, PhidError::Cache(_)));
    assert!(err.to_string().contains("checksum"), "{err}");
}

#[test]
fn bad_magic_and_truncation_are_refused() {
    let bytes = encode(&small_disk()).unwrap();
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(decode(&wrong).unwrap_err().to_string().contains("magic"));
    assert!(decode(&bytes[..30]).is_err());
}

#[test]
fn non_orthonormal_modes_are_refused_on_load() {
    let mut s = small_disk();
    for v in s.node_values[2].iter_mut() {
        *v *= 1.01;
    }
    let err = decode(&encode(&s).unwrap()).unwrap_err();
    assert!(err.to_string().contains("orthonormality"), "{err}");
}
