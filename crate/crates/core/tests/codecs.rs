use taco_core::codec::{decode_container, CodecKind, CodecRegistry, CodecSpec, FrameShape, LOSSLESS};
use taco_core::{synth, Error};

#[test]
fn builtins_round_trip_through_the_container() {
    let reg = CodecRegistry::with_builtins();
    assert_eq!(reg.ids(), ["store", "taco-l-lite", "taco-ll-lite"]);
    for (name, frame) in synth::fixtures() {
        for id in reg.ids() {
            let codec = reg.get(id).unwrap();
            for q in codec.qualities() {
                let bytes = codec.encode(&frame, &q).unwrap();
                let via_codec = codec.decode(&bytes, &FrameShape::from(&frame)).unwrap();
                let via_container = decode_container(&bytes).unwrap();
                assert_eq!(via_codec, via_container, "{id} {q} {name}");
                assert_eq!(via_codec.mapping(), frame.mapping(), "{id} keeps force mapping on {name}");
                if codec.kind().is_lossless() {
                    assert_eq!(via_codec.pixels(), frame.pixels(), "{id} on {name}");
                }
            }
        }
    }
}

#[test]
fn every_single_byte_flip_is_detected() {
    let frame = synth::tactile_frame(40, 30, 5);
    let reg = CodecRegistry::with_builtins();
    for id in ["taco-ll-lite", "taco-l-lite"] {
        let codec = reg.get(id).unwrap();
        let q = codec.qualities().pop().unwrap();
        let good = codec.encode(&frame, &q).unwrap();
        let reference = decode_container(&good).unwrap();
        for i in 0..good.len() {
            let mut bad = good.clone();
            bad[i] ^= 0x40;
            // every byte is covered by a checksum or by the magic/version check
            match decode_container(&bad) {
                Err(_) => {}
                Ok(f) => panic!("{id}: flip at byte {i} decoded to {} frame", if f == reference { "the same" } else { "a different" }),
            }
        }
    }
}

#[test]
fn external_lossless_gzip_matches_store_semantics() {
    let mut reg = CodecRegistry::with_builtins();
    reg.register_external(CodecSpec {
        id: "gzip".into(),
        kind: CodecKind::ExternalLossless,
        encode_cmd: Some("gzip -9 -n -c {in} > {out}".into()),
        decode_cmd: Some("gzip -d -c {in} > {out}".into()),
        qualities: vec![],
    })
    .unwrap();
    let gz = reg.get("gzip").unwrap();
    let frame = synth::smooth_frame(64, 48, 0.5, 3);
    let bytes = gz.encode(&frame, LOSSLESS).unwrap();
    assert!(bytes.len() < frame.raw_len());
    assert_eq!(gz.decode(&bytes, &FrameShape::from(&frame)).unwrap().pixels(), frame.pixels());
    assert!(matches!(
        reg.register_external(CodecSpec {
            id: "store".into(),
            kind: CodecKind::ExternalLossless,
            encode_cmd: Some("cp {in} {out}".into()),
            decode_cmd: Some("cp {in} {out}".into()),
            qualities: vec![],
        }),
        Err(Error::DuplicateCodec(_))
    ));
}
