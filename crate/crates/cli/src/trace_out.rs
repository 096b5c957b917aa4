//! Render trace events as JSON lines. Fields are written by hand so the
//! byte layout is stable and `tick` always comes first; all dynamic
//! values are numbers or fixed identifier strings, so no escaping is
//! needed.

use std::fmt::Write as _;

use coopcache_core::trace::TraceEvent;

fn fmt_weight(w: f64) -> String {
    format!("{w}")
}

pub fn render_event(e: &TraceEvent) -> String {
    match e {
        TraceEvent::PreReq {
            tick,
            node,
            op,
            data_id,
            outcome,
        } => format!(
            "{{\"tick\":{tick},\"event\":\"prereq\",\"node\":{},\"op\":\"{}\",\"data_id\":{},\"outcome\":\"{outcome}\"}}",
            node.0,
            op.name(),
            data_id.0,
        ),
        TraceEvent::Election {
            tick,
            cluster,
            head,
            initiator,
            weights,
            messages,
        } => {
            let mut w = String::new();
            for (i, (n, v)) in weights.iter().enumerate() {
                if i > 0 {
                    w.push(',');
                }
                let _ = write!(w, "[{},{}]", n.0, fmt_weight(*v));
            }
            let init = match initiator {
                Some(n) => format!("{}", n.0),
                None => String::from("null"),
            };
            format!(
                "{{\"tick\":{tick},\"event\":\"election\",\"cluster\":\"{cluster}\",\"head\":{},\"initiator\":{init},\"messages\":{messages},\"weights\":[{w}]}}",
                head.0,
            )
        }
        TraceEvent::Protocol {
            tick,
            kind,
            cluster,
            actor,
            messages,
        } => format!(
            "{{\"tick\":{tick},\"event\":\"protocol\",\"kind\":\"{}\",\"cluster\":\"{cluster}\",\"actor\":{},\"messages\":{messages}}}",
            kind.name(),
            actor.0,
        ),
        TraceEvent::Request { tick, outcome } => {
            let serving = match outcome.serving_node {
                Some(n) => format!("{}", n.0),
                None => String::from("null"),
            };
            format!(
                "{{\"tick\":{tick},\"event\":\"request\",\"requester\":{},\"data_id\":{},\"served_by\":\"{}\",\"serving_node\":{serving},\"hops_traveled\":{},\"control_messages\":{},\"data_messages\":{}}}",
                outcome.requester.0,
                outcome.data_id.0,
                outcome.served_by.name(),
                outcome.hops_traveled,
                outcome.control_messages,
                outcome.data_messages,
            )
        }
    }
}

pub fn render_events(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&render_event(e));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use coopcache_core::trace::{PreReqOp, TraceEvent};
    use coopcache_core::{DataId, NodeId};

    #[test]
    fn lines_start_with_tick_and_parse_as_json() {
        let e = TraceEvent::PreReq {
            tick: 5,
            node: NodeId(3),
            op: PreReqOp::Lookup,
            data_id: DataId(8),
            outcome: String::from("candidates:2"),
        };
        let line = render_event(&e);
        assert!(line.starts_with("{\"tick\":5,"));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["node"], 3);
        assert_eq!(v["op"], "lookup");
    }
}
