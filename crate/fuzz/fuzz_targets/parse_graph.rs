#![no_main]

use graph_eikonal::MetricGraph;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(g) = MetricGraph::from_json(text) {
        // a graph that parses must survive its own round trip
        let again = MetricGraph::build(&g.to_spec()).expect("round trip");
        assert_eq!(again, g);
    }
});
