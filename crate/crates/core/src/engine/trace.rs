use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::tvg::{NodeId, Port};

use super::whiteboard::WbDelta;
use super::{AgentId, Outcome};

/// Something notable that happened during a round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Death {
        agent: AgentId,
        node: NodeId,
    },
    Declared {
        agent: AgentId,
        node: NodeId,
        port: Port,
    },
    RoleExchange {
        case: String,
        agents: Vec<AgentId>,
    },
    DfsRestart {
        agent: AgentId,
        label: u32,
        reason: String,
    },
    Activated {
        agent: AgentId,
        role: String,
    },
    InferredCase {
        agent: AgentId,
        note: String,
    },
    Note {
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub id: AgentId,
    pub node: Option<NodeId>,
    pub alive: bool,
    pub role: String,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentStart {
    pub id: AgentId,
    pub node: NodeId,
}

/// One round: the absent edges, where every agent stands after the Move
/// step, and what changed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrace {
    pub round: u64,
    pub missing: Vec<(NodeId, NodeId)>,
    pub agents: Vec<AgentTrace>,
    pub whiteboard: Vec<WbDelta>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub algorithm: String,
    pub adversary: String,
    pub node_count: usize,
    pub edge_count: usize,
    pub black_hole: Option<NodeId>,
    pub agents: Vec<AgentStart>,
}

/// A line of the line-delimited trace format.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TraceLine {
    Init(TraceHeader),
    Round(RoundTrace),
    Outcome(Outcome),
}

pub fn write_trace<W: Write>(lines: &[TraceLine], mut out: W) -> io::Result<()> {
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn trace_to_string(lines: &[TraceLine]) -> String {
    let mut buf = Vec::new();
    write_trace(lines, &mut buf).expect("in-memory write");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Parses a trace; the error carries the 1-based line number.
pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceLine>, (usize, String)> {
    let mut lines = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| (i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        lines.push(serde_json::from_str(&line).map_err(|e| (i + 1, e.to_string()))?);
    }
    Ok(lines)
}
