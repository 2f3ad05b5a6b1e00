//! The event loop.
//!
//! Events run in (time, sequence) order. Each node owns a seeded ChaCha
//! stream, so a run is a pure function of the scenario and its seed. Links
//! are lossless store-and-forward FIFOs: a point-to-point link keeps one
//! transmit queue per direction, a broadcast link one shared medium.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::time::{SimDuration, SimTime};

use super::topology::{FaceId, FaceInfo, LinkId, LinkKind, NodeId, Topology};
use crate::ndn::Packet;

/// Per-node random stream.
pub type SimRng = ChaCha8Rng;

/// Ground-truth origin of a frame. Carried for measurement only; protocol
/// logic never branches on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Provenance {
    #[default]
    Honest,
    Attack,
    Corrupted,
    Fake,
}

impl Provenance {
    pub fn is_poisoned(self) -> bool {
        matches!(self, Provenance::Corrupted | Provenance::Fake)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub packet: Packet,
    pub provenance: Provenance,
}

impl Frame {
    pub fn new(packet: Packet, provenance: Provenance) -> Self {
        Self { packet, provenance }
    }
}

/// Behaviour hooks the engine calls on every node.
pub trait Node {
    fn start(&mut self, _ctx: &mut Ctx<'_>) {}
    fn on_frame(&mut self, ctx: &mut Ctx<'_>, face: FaceId, frame: Frame);
    fn on_timer(&mut self, ctx: &mut Ctx<'_>, token: u64);
}

/// Per-callback handle: the clock, the node's RNG, and buffers for outgoing
/// frames and timers which the engine drains when the callback returns.
pub struct Ctx<'a> {
    pub now: SimTime,
    pub node: NodeId,
    pub rng: &'a mut ChaCha8Rng,
    pub faces: &'a [FaceInfo],
    outbox: Vec<(FaceId, Frame, SimDuration)>,
    timers: Vec<(SimTime, u64)>,
}

impl<'a> Ctx<'a> {
    pub fn send(&mut self, face: FaceId, frame: Frame) {
        self.outbox.push((face, frame, SimDuration::ZERO));
    }

    /// Hands a frame to the link after `delay` of local processing.
    pub fn send_after(&mut self, delay: SimDuration, face: FaceId, frame: Frame) {
        self.outbox.push((face, frame, delay));
    }

    pub fn schedule(&mut self, at: SimTime, token: u64) {
        self.timers.push((at.max(self.now), token));
    }

    pub fn schedule_in(&mut self, after: SimDuration, token: u64) {
        self.timers.push((self.now + after, token));
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }
}

#[derive(Debug)]
enum EventKind {
    /// A frame finishes queuing locally and enters the link.
    Transmit {
        from: NodeId,
        face: FaceId,
        frame: Frame,
    },
    Deliver {
        to: NodeId,
        face: FaceId,
        frame: Frame,
    },
    Timer {
        node: NodeId,
        token: u64,
    },
}

#[derive(Debug)]
struct Scheduled {
    time: SimTime,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed so the max-heap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub frames_sent: u64,
    pub frames_delivered: u64,
    pub scope_drops: u64,
    pub events: u64,
}

pub struct Simulator<N: Node> {
    topology: Topology,
    nodes: Vec<N>,
    rngs: Vec<ChaCha8Rng>,
    face_info: Vec<Vec<FaceInfo>>,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    now: SimTime,
    /// Per link: one busy-until per endpoint (p2p) or a single shared one (broadcast).
    busy_until: Vec<Vec<SimTime>>,
    pending_deliveries: u64,
    stats: EngineStats,
    started: bool,
}

impl<N: Node> Simulator<N> {
    /// `nodes[i]` implements node `NodeId(i)` of `topology`.
    pub fn new(topology: Topology, nodes: Vec<N>, seed: u64) -> Self {
        assert_eq!(topology.node_count(), nodes.len(), "one behaviour per topology node");
        let rngs = (0..nodes.len())
            .map(|i| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(i as u64 + 1);
                r
            })
            .collect();
        let face_info = (0..nodes.len()).map(|i| topology.face_info(NodeId(i as u32))).collect();
        let busy_until = topology
            .links()
            .iter()
            .map(|l| match l.kind {
                LinkKind::P2p => vec![SimTime::ZERO; l.endpoints.len()],
                LinkKind::Broadcast => vec![SimTime::ZERO],
            })
            .collect();
        Self {
            topology,
            nodes,
            rngs,
            face_info,
            queue: BinaryHeap::new(),
            seq: 0,
            now: SimTime::ZERO,
            busy_until,
            pending_deliveries: 0,
            stats: EngineStats::default(),
            started: false,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn nodes(&self) -> &[N] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &N {
        &self.nodes[id.0 as usize]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut N {
        &mut self.nodes[id.0 as usize]
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    /// Frames handed to links whose delivery has not run yet.
    pub fn in_flight(&self) -> u64 {
        self.pending_deliveries
    }

    fn push(&mut self, time: SimTime, kind: EventKind) {
        debug_assert!(time >= self.now, "event scheduled in the past");
        self.seq += 1;
        self.queue.push(Scheduled {
            time,
            seq: self.seq,
            kind,
        });
    }

    /// Places a frame on a link and schedules its arrival at every receiver.
    /// Returns the arrival time.
    pub fn schedule_send(&mut self, from: NodeId, link: LinkId, frame: Frame, now: SimTime) -> SimTime {
        let spec = self.topology.link(link).clone();
        let pos = spec
            .endpoints
            .iter()
            .position(|&e| e == from)
            .expect("sender is an endpoint of the link");
        let slot = match spec.kind {
            LinkKind::P2p => pos,
            LinkKind::Broadcast => 0,
        };
        let ser = SimDuration::serialization(frame.packet.wire_len(), spec.bandwidth_bps);
        let start = now.max(self.busy_until[link.0 as usize][slot]);
        let done = start + ser;
        self.busy_until[link.0 as usize][slot] = done;
        let arrival = done + spec.delay;
        self.stats.frames_sent += 1;
        let receivers: Vec<NodeId> = spec.endpoints.iter().copied().filter(|&e| e != from).collect();
        for to in receivers {
            let face = self
                .topology
                .face_on(to, link)
                .expect("receiver has a face on the link");
            self.pending_deliveries += 1;
            self.push(
                arrival,
                EventKind::Deliver {
                    to,
                    face,
                    frame: frame.clone(),
                },
            );
        }
        arrival
    }

    fn with_ctx<F: FnOnce(&mut N, &mut Ctx<'_>)>(&mut self, node: NodeId, f: F) {
        let idx = node.0 as usize;
        let mut ctx = Ctx {
            now: self.now,
            node,
            rng: &mut self.rngs[idx],
            faces: &self.face_info[idx],
            outbox: Vec::new(),
            timers: Vec::new(),
        };
        f(&mut self.nodes[idx], &mut ctx);
        let Ctx { outbox, timers, .. } = ctx;
        for (at, token) in timers {
            self.push(at, EventKind::Timer { node, token });
        }
        for (face, frame, delay) in outbox {
            if let Packet::Interest(i) = &frame.packet {
                // Scope 0 and 1 never leave the originating host.
                if matches!(i.scope, Some(0) | Some(1)) {
                    self.stats.scope_drops += 1;
                    continue;
                }
            }
            if delay == SimDuration::ZERO {
                self.transmit(node, face, frame);
            } else {
                let at = self.now + delay;
                self.push(
                    at,
                    EventKind::Transmit {
                        from: node,
                        face,
                        frame,
                    },
                );
            }
        }
    }

    fn transmit(&mut self, from: NodeId, face: FaceId, frame: Frame) {
        match self.topology.face_link(from, face) {
            Some(link) => {
                self.schedule_send(from, link, frame, self.now);
            }
            None => log::warn!("{from} sent on nonexistent face {face}"),
        }
    }

    fn start_nodes(&mut self) {
        if self.started {
            return;
        }
        self.started = true;
        for i in 0..self.nodes.len() {
            self.with_ctx(NodeId(i as u32), |n, ctx| n.start(ctx));
        }
    }

    fn dispatch(&mut self, ev: Scheduled) {
        self.now = ev.time;
        self.stats.events += 1;
        match ev.kind {
            EventKind::Transmit { from, face, frame } => self.transmit(from, face, frame),
            EventKind::Deliver { to, face, frame } => {
                self.pending_deliveries -= 1;
                self.stats.frames_delivered += 1;
                self.with_ctx(to, |n, ctx| n.on_frame(ctx, face, frame));
            }
            EventKind::Timer { node, token } => self.with_ctx(node, |n, ctx| n.on_timer(ctx, token)),
        }
    }

    /// Runs every event with time <= `until`, calling `sample` after the
    /// last event at or before each multiple of `tick`.
    pub fn run<F>(&mut self, until: SimTime, tick: SimDuration, mut sample: F)
    where
        F: FnMut(SimTime, &[N]),
    {
        if self.nodes.is_empty() {
            return;
        }
        self.start_nodes();
        let tick = tick.as_micros().max(1);
        let mut next_tick = SimTime((self.now.0 / tick + 1) * tick);
        loop {
            let next_event = self.queue.peek().map(|e| e.time);
            match next_event {
                Some(t) if t <= until && t <= next_tick => {
                    let ev = self.queue.pop().unwrap();
                    self.dispatch(ev);
                }
                _ if next_tick <= until => {
                    self.now = next_tick;
                    sample(next_tick, &self.nodes);
                    next_tick = SimTime(next_tick.0 + tick);
                }
                _ => break,
            }
        }
        self.now = self.now.max(until.min(next_tick));
    }

    /// Runs events up to `until` without sampling.
    pub fn run_until(&mut self, until: SimTime) {
        if self.nodes.is_empty() {
            return;
        }
        self.start_nodes();
        while let Some(t) = self.queue.peek().map(|e| e.time) {
            if t > until {
                break;
            }
            let ev = self.queue.pop().unwrap();
            self.dispatch(ev);
        }
        self.now = self.now.max(until);
    }

    /// Injects a frame as if `node` had sent it on `face` now.
    pub fn inject(&mut self, node: NodeId, face: FaceId, frame: Frame) {
        self.start_nodes();
        self.transmit(node, face, frame);
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::{DataParts, Interest, KeyLocator, Name};
    use crate::simnet::topology::{LinkSpec, Role};

    #[derive(Default)]
    struct Recorder {
        got: Vec<(SimTime, FaceId)>,
        echo_timer: Option<u64>,
        fired: Vec<(SimTime, u64)>,
    }

    impl Node for Recorder {
        fn start(&mut self, ctx: &mut Ctx<'_>) {
            if let Some(t) = self.echo_timer {
                ctx.schedule_in(SimDuration::from_ms(t), t);
            }
        }
        fn on_frame(&mut self, ctx: &mut Ctx<'_>, face: FaceId, _frame: Frame) {
            self.got.push((ctx.now, face));
        }
        fn on_timer(&mut self, ctx: &mut Ctx<'_>, token: u64) {
            self.fired.push((ctx.now, token));
        }
    }

    fn data_of_size(total: usize) -> Frame {
        let base = DataParts::unsigned(
            Name::parse("/a").unwrap(),
            vec![],
            KeyLocator::EmbeddedKey(vec![]),
            [0; 32],
        )
        .build();
        let overhead = Packet::Data(base).wire_len();
        let p = DataParts::unsigned(
            Name::parse("/a").unwrap(),
            vec![0; total - overhead],
            KeyLocator::EmbeddedKey(vec![]),
            [0; 32],
        )
        .build();
        let f = Frame::new(Packet::Data(p), Provenance::Honest);
        assert_eq!(f.packet.wire_len(), total);
        f
    }

    fn pair() -> (Simulator<Recorder>, NodeId, NodeId, LinkId) {
        let mut t = Topology::new();
        let a = t.add_node("a", Role::Router);
        let b = t.add_node("b", Role::Router);
        let l = t.p2p(a, b, 12_000_000, SimDuration::from_ms(1));
        (
            Simulator::new(t, vec![Recorder::default(), Recorder::default()], 1),
            a,
            b,
            l,
        )
    }

    #[test]
    fn one_ms_serialization_plus_one_ms_delay() {
        let (mut sim, a, b, l) = pair();
        let at = sim.schedule_send(a, l, data_of_size(1500), SimTime::ZERO);
        assert_eq!(at, SimTime::from_ms(2));
        sim.run_until(SimTime::from_ms(10));
        assert_eq!(sim.node(b).got, vec![(SimTime::from_ms(2), FaceId(0))]);
    }

    #[test]
    fn back_to_back_packets_queue() {
        let (mut sim, a, _b, l) = pair();
        let t1 = sim.schedule_send(a, l, data_of_size(1500), SimTime::ZERO);
        let t2 = sim.schedule_send(a, l, data_of_size(1500), SimTime::ZERO);
        assert_eq!(t2 - t1, SimDuration::from_ms(1));
        // The reverse direction has its own queue.
        let (mut sim, a, b, l) = pair();
        let t1 = sim.schedule_send(a, l, data_of_size(1500), SimTime::ZERO);
        let t2 = sim.schedule_send(b, l, data_of_size(1500), SimTime::ZERO);
        assert_eq!(t1, t2);
    }

    #[test]
    fn broadcast_reaches_every_other_endpoint() {
        let mut t = Topology::new();
        let ids: Vec<_> = (0..3).map(|i| t.add_node(format!("r{i}"), Role::Router)).collect();
        let l = t.add_link(LinkSpec {
            endpoints: ids.clone(),
            bandwidth_bps: 12_000_000,
            delay: SimDuration::from_ms(1),
            kind: LinkKind::Broadcast,
        });
        let mut sim = Simulator::new(t, (0..3).map(|_| Recorder::default()).collect(), 1);
        sim.schedule_send(ids[0], l, data_of_size(1500), SimTime::ZERO);
        sim.run_until(SimTime::from_ms(5));
        assert!(sim.node(ids[0]).got.is_empty());
        assert_eq!(sim.node(ids[1]).got.len(), 1);
        assert_eq!(sim.node(ids[2]).got.len(), 1);
        assert_eq!(sim.stats().frames_delivered, 2);
        assert_eq!(sim.in_flight(), 0);
    }

    #[test]
    fn local_scope_never_leaves_host() {
        struct Sender;
        impl Node for Sender {
            fn start(&mut self, ctx: &mut Ctx<'_>) {
                for scope in [0u8, 1, 2] {
                    let i = Interest::new(Name::parse("/x").unwrap(), scope as u64).with_scope(scope);
                    ctx.send(FaceId(0), Frame::new(Packet::Interest(i), Provenance::Honest));
                }
            }
            fn on_frame(&mut self, _: &mut Ctx<'_>, _: FaceId, _: Frame) {}
            fn on_timer(&mut self, _: &mut Ctx<'_>, _: u64) {}
        }
        enum Either {
            S(Sender),
            R(Recorder),
        }
        impl Node for Either {
            fn start(&mut self, ctx: &mut Ctx<'_>) {
                if let Either::S(s) = self {
                    s.start(ctx)
                }
            }
            fn on_frame(&mut self, ctx: &mut Ctx<'_>, f: FaceId, fr: Frame) {
                if let Either::R(r) = self {
                    r.on_frame(ctx, f, fr)
                }
            }
            fn on_timer(&mut self, _: &mut Ctx<'_>, _: u64) {}
        }
        let mut t = Topology::new();
        let a = t.add_node("a", Role::Consumer);
        let b = t.add_node("b", Role::Router);
        t.p2p(a, b, 1_000_000, SimDuration::from_ms(1));
        let mut sim = Simulator::new(t, vec![Either::S(Sender), Either::R(Recorder::default())], 3);
        sim.run_until(SimTime::from_ms(100));
        match sim.node(b) {
            Either::R(r) => assert_eq!(r.got.len(), 1, "only the scope-2 interest crosses the link"),
            _ => unreachable!(),
        }
        assert_eq!(sim.stats().scope_drops, 2);
    }

    #[test]
    fn sampling_and_timers_follow_clock() {
        let mut t = Topology::new();
        t.add_node("a", Role::Router);
        let mut sim = Simulator::new(
            t,
            vec![Recorder {
                echo_timer: Some(25),
                ..Default::default()
            }],
            1,
        );
        let mut samples = Vec::new();
        sim.run(SimTime::from_ms(50), SimDuration::from_ms(10), |now, nodes| {
            samples.push((now, nodes[0].fired.len()))
        });
        assert_eq!(samples.len(), 5);
        assert_eq!(samples[1], (SimTime::from_ms(20), 0));
        assert_eq!(samples[2], (SimTime::from_ms(30), 1));
        assert_eq!(sim.node(NodeId(0)).fired, vec![(SimTime::from_ms(25), 25)]);
    }

    #[test]
    fn empty_simulation_samples_nothing() {
        let mut sim: Simulator<Recorder> = Simulator::new(Topology::new(), vec![], 1);
        let mut rows = 0;
        sim.run(SimTime::from_ms(1000), SimDuration::from_ms(10), |_, _| rows += 1);
        assert_eq!(rows, 0);
    }
}
