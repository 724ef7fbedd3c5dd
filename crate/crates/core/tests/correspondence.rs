use backoff_core::ballsbins::{place_balls, singleton_indicators};
use backoff_core::protocols::run_window;
use backoff_core::RngStream;

#[test]
fn window_successes_equal_placement_singletons() {
    for (m, w) in [(1, 1), (2, 2), (7, 3), (50, 64), (300, 10_000), (1000, 1000)] {
        for t in 0..25 {
            let stream = RngStream::new(77, t);
            let occ = place_balls(m, w, &stream).unwrap();
            let expected = singleton_indicators(&occ).count;
            assert_eq!(run_window(m, w, &stream).unwrap().successes, expected, "m={m} w={w} t={t}");
        }
    }
}
