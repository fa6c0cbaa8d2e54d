//! Transport-level properties: segmentation identity, size bounds, and
//! pulse accounting.

use ecglink_core::bridge::{
    reassemble, Bridge, BridgeEvent, Notification, ATT_OVERHEAD, MTU_MAX, MTU_MIN,
};
use proptest::prelude::*;

fn connected_with_mtu(mtu: usize) -> Bridge {
    let mut b = Bridge::new();
    b.handle_event(BridgeEvent::PowerOn).unwrap();
    b.handle_event(BridgeEvent::Connect).unwrap();
    if mtu != b.mtu() {
        b.handle_event(BridgeEvent::MtuUpdate(mtu)).unwrap();
    }
    b
}

proptest! {
    #[test]
    fn segment_then_reassemble_is_identity(
        mtu in MTU_MIN..=MTU_MAX,
        data in proptest::collection::vec(any::<u8>(), 0..4096),
    ) {
        let mut bridge = connected_with_mtu(mtu);
        let notifications = bridge.uart_in(&data).unwrap();
        prop_assert_eq!(reassemble(&notifications).unwrap(), data);
    }

    #[test]
    fn every_notification_respects_the_budget(
        mtu in MTU_MIN..=MTU_MAX,
        data in proptest::collection::vec(any::<u8>(), 1..2048),
    ) {
        let mut bridge = connected_with_mtu(mtu);
        let notifications = bridge.uart_in(&data).unwrap();
        let limit = mtu - ATT_OVERHEAD;
        for (i, n) in notifications.iter().enumerate() {
            prop_assert!(n.payload.len() <= limit);
            if i + 1 < notifications.len() {
                prop_assert_eq!(n.payload.len(), limit, "only the final burst segment may be short");
            }
        }
        let total: usize = notifications.iter().map(|n| n.payload.len()).sum();
        prop_assert_eq!(total, data.len());
    }

    #[test]
    fn sequence_numbers_are_contiguous_across_bursts(
        bursts in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..256), 1..10),
    ) {
        let mut bridge = connected_with_mtu(23);
        let mut all = Vec::new();
        for burst in &bursts {
            all.extend(bridge.uart_in(burst).unwrap());
        }
        for (i, n) in all.iter().enumerate() {
            prop_assert_eq!(n.seq, i as u64);
        }
        let flat: Vec<u8> = bursts.concat();
        prop_assert_eq!(reassemble(&all).unwrap(), flat);
    }
}

#[test]
fn pulse_count_equals_notification_count_over_a_run() {
    let mut bridge = connected_with_mtu(27);
    let mut total = 0u64;
    for size in [0usize, 1, 23, 24, 100, 999, 4000] {
        total += bridge.uart_in(&vec![0x42; size]).unwrap().len() as u64;
    }
    assert_eq!(bridge.stats().brts_pulses, total);
    assert_eq!(bridge.stats().notifications, total);
}

#[test]
fn reconnection_restarts_the_sequence() {
    let mut bridge = connected_with_mtu(23);
    let first = bridge.uart_in(&[1; 30]).unwrap();
    assert_eq!(first.last().unwrap().seq, 1);
    bridge.handle_event(BridgeEvent::Disconnect).unwrap();
    bridge.handle_event(BridgeEvent::Connect).unwrap();
    let second = bridge.uart_in(&[2; 5]).unwrap();
    assert_eq!(second[0].seq, 0, "sequence is per connection");
}

#[test]
fn reassembly_accepts_any_contiguous_start() {
    let ns = vec![
        Notification { seq: 7, payload: vec![1, 2] },
        Notification { seq: 8, payload: vec![3] },
    ];
    assert_eq!(reassemble(&ns).unwrap(), vec![1, 2, 3]);
}
