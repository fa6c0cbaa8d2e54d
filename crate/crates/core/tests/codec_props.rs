//! Structural properties of the frame codec and the streaming decoder.

use ecglink_core::codec::{
    encode_packet, parse_payload, DataRow, DecodeEvent, DecodeEventKind, Packet, StreamDecoder,
};
use proptest::prelude::*;

fn arb_row() -> impl Strategy<Value = DataRow> {
    let base = prop_oneof![
        any::<u8>().prop_map(DataRow::poor_signal),
        any::<u8>().prop_map(DataRow::heart_rate),
        any::<i16>().prop_map(DataRow::temperature_centi_c),
        any::<u8>().prop_map(DataRow::spo2),
        any::<bool>().prop_map(DataRow::motion),
        any::<i16>().prop_map(DataRow::raw_ecg),
        (0x81u8..=0xFF, proptest::collection::vec(any::<u8>(), 0..6))
            .prop_map(|(code, value)| DataRow::new(code, value).expect("extended codes take any width")),
    ];
    (base, 0u8..3).prop_map(|(row, level)| row.with_excode_level(level))
}

fn arb_packet() -> impl Strategy<Value = Packet> {
    proptest::collection::vec(arb_row(), 1..12).prop_map(Packet::new)
}

fn decoded_packets(events: &[DecodeEvent]) -> Vec<Packet> {
    events
        .iter()
        .filter_map(|e| match &e.kind {
            DecodeEventKind::PacketDecoded(p) => Some(p.clone()),
            _ => None,
        })
        .collect()
}

proptest! {
    #[test]
    fn encode_then_stream_decode_round_trips(packet in arb_packet()) {
        let frame = encode_packet(&packet).unwrap();
        let mut dec = StreamDecoder::new();
        let events = dec.feed(&frame);
        prop_assert_eq!(decoded_packets(&events), vec![packet]);
        prop_assert_eq!(dec.stats().packets_ok, 1);
    }

    #[test]
    fn serialized_rows_account_for_every_payload_byte(packet in arb_packet()) {
        let frame = encode_packet(&packet).unwrap();
        let plength = frame[2] as usize;
        let payload = &frame[3..frame.len() - 1];
        prop_assert_eq!(payload.len(), plength);
        let wire_sum: usize = packet.rows.iter().map(DataRow::wire_len).sum();
        prop_assert_eq!(wire_sum, plength);
        let rows = parse_payload(payload).unwrap();
        prop_assert_eq!(rows, packet.rows);
    }

    #[test]
    fn any_payload_byte_flip_fails_the_checksum(
        packet in arb_packet(),
        position in any::<proptest::sample::Index>(),
        delta in 1u8..=255,
    ) {
        let frame = encode_packet(&packet).unwrap();
        let payload_len = frame.len() - 4;
        let idx = 3 + position.index(payload_len);
        let mut corrupt = frame;
        corrupt[idx] = corrupt[idx].wrapping_add(delta);

        let mut dec = StreamDecoder::new();
        let events = dec.feed(&corrupt);
        let saw_checksum_error = events
            .iter()
            .any(|e| matches!(e.kind, DecodeEventKind::ChecksumError { .. }));
        prop_assert!(decoded_packets(&events).is_empty());
        prop_assert!(saw_checksum_error);
    }

    #[test]
    fn garbage_prefix_never_hides_the_frame(
        packet in arb_packet(),
        mut garbage in proptest::collection::vec(any::<u8>(), 0..64),
    ) {
        if let Some(last) = garbage.last_mut() {
            if *last == 0xAA {
                *last = 0xAB;
            }
        }
        let frame = encode_packet(&packet).unwrap();
        let mut stream = garbage;
        stream.extend_from_slice(&frame);

        let mut dec = StreamDecoder::new();
        let mut events = dec.feed(&stream);
        events.extend(dec.finish());
        prop_assert!(decoded_packets(&events).contains(&packet));
    }

    #[test]
    fn event_offsets_never_decrease(
        packets in proptest::collection::vec(arb_packet(), 1..4),
        noise in proptest::collection::vec(any::<u8>(), 0..32),
    ) {
        let mut stream = noise;
        for p in &packets {
            stream.extend(encode_packet(p).unwrap());
        }
        let mut dec = StreamDecoder::new();
        let mut events = dec.feed(&stream);
        events.extend(dec.finish());
        let offsets: Vec<u64> = events.iter().map(|e| e.byte_offset).collect();
        prop_assert!(offsets.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn checksum_exit_accounting_matches_construction() {
    // Payloads free of sync bytes so each corrupted frame settles as
    // exactly one checksum error.
    let good = encode_packet(&Packet::new(vec![DataRow::heart_rate(64), DataRow::spo2(97)]))
        .unwrap();
    let mut corrupt = good.clone();
    let last = corrupt.len() - 1;
    corrupt[last] ^= 0x5A;

    let mut stream = Vec::new();
    let mut expect_ok = 0u64;
    let mut expect_bad = 0u64;
    for i in 0..100 {
        stream.extend_from_slice(&[0x01, 0x02]); // scan noise
        if i % 3 == 0 {
            stream.extend_from_slice(&corrupt);
            expect_bad += 1;
        } else {
            stream.extend_from_slice(&good);
            expect_ok += 1;
        }
    }

    let mut dec = StreamDecoder::new();
    dec.feed(&stream);
    dec.finish();
    let stats = dec.stats();
    assert_eq!(stats.packets_ok, expect_ok);
    assert_eq!(stats.checksum_errors, expect_bad);
    assert_eq!(stats.row_format_errors, 0);
    assert_eq!(stats.packets_ok + stats.checksum_errors, expect_ok + expect_bad);
}

#[test]
fn decoder_survives_pure_garbage() {
    let mut dec = StreamDecoder::new();
    let mut rng_state = 0x1234_5678_u64;
    let mut garbage = Vec::with_capacity(1 << 16);
    for _ in 0..(1 << 16) {
        // xorshift; plain deterministic filler.
        rng_state ^= rng_state << 13;
        rng_state ^= rng_state >> 7;
        rng_state ^= rng_state << 17;
        garbage.push(rng_state as u8);
    }
    let events = dec.feed(&garbage);
    // Whatever the events, the decoder must stay consistent and resumable.
    let frame = encode_packet(&Packet::new(vec![DataRow::motion(false)])).unwrap();
    let mut tail = dec.finish();
    tail.extend(dec.feed(&frame));
    assert!(decoded_packets(&tail).contains(&Packet::new(vec![DataRow::motion(false)])));
    let _ = events;
}
