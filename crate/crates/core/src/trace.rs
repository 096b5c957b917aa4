//! Structured trace events. The core accumulates these as plain values;
//! rendering to JSON lines is the CLI's job.

use alloc::string::String;
use alloc::vec::Vec;

use crate::discovery::RequestOutcome;
use crate::model::{DataId, NodeId};
use crate::topology::ClusterId;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum PreReqOp {
    Lookup,
    Record,
    Invalidate,
}

impl PreReqOp {
    pub fn name(self) -> &'static str {
        match self {
            PreReqOp::Lookup => "lookup",
            PreReqOp::Record => "record",
            PreReqOp::Invalidate => "invalidate",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ProtocolKind {
    Join,
    Leave,
    Handover,
    HeadClaim,
    HeadTimeout,
    MemberTimeout,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Join => "join",
            ProtocolKind::Leave => "leave",
            ProtocolKind::Handover => "handover",
            ProtocolKind::HeadClaim => "head_claim",
            ProtocolKind::HeadTimeout => "head_timeout",
            ProtocolKind::MemberTimeout => "member_timeout",
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum TraceEvent {
    PreReq {
        tick: u64,
        node: NodeId,
        op: PreReqOp,
        data_id: DataId,
        outcome: String,
    },
    Election {
        tick: u64,
        cluster: ClusterId,
        head: NodeId,
        initiator: Option<NodeId>,
        weights: Vec<(NodeId, f64)>,
        messages: u64,
    },
    Protocol {
        tick: u64,
        kind: ProtocolKind,
        cluster: ClusterId,
        actor: NodeId,
        messages: u64,
    },
    Request {
        tick: u64,
        outcome: RequestOutcome,
    },
}

/// Collects trace events; disabled sinks drop everything.
#[derive(Clone, PartialEq, Debug)]
pub struct TraceSink {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl TraceSink {
    pub fn new(enabled: bool) -> Self {
        TraceSink {
            enabled,
            events: Vec::new(),
        }
    }

    pub fn push(&mut self, event: TraceEvent) {
        if self.enabled {
            self.events.push(event);
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }
}
