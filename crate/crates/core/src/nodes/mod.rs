//! Node behaviours and the wrapper the simulator drives.

pub mod catalog;
pub mod compromised;
pub mod consumer;
pub mod producer;
pub mod zombie;

pub use consumer::{Consumer, ConsumerConfig, ConsumerStats, FetchMode, Workload};
pub use producer::{Producer, ProducerConfig, ProducerStats};
pub use zombie::{Zombie, ZombieStats};

use crate::ndn::Packet;
use crate::router::{Action, Router};
use crate::simnet::{Ctx, FaceId, Frame, Node, Provenance};

#[derive(Debug, Clone)]
pub enum SimNode {
    Router(Box<Router>),
    Consumer(Box<Consumer>),
    Producer(Box<Producer>),
    Zombie(Box<Zombie>),
}

fn apply(ctx: &mut Ctx<'_>, actions: Vec<Action>) {
    for a in actions {
        match a {
            Action::Send { face, frame, delay } => ctx.send_after(delay, face, frame),
            Action::Timer { at, token } => ctx.schedule(at, token),
            Action::Drop(_) => {}
        }
    }
}

impl SimNode {
    pub fn as_router(&self) -> Option<&Router> {
        match self {
            SimNode::Router(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_router_mut(&mut self) -> Option<&mut Router> {
        match self {
            SimNode::Router(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_consumer(&self) -> Option<&Consumer> {
        match self {
            SimNode::Consumer(c) => Some(c),
            _ => None,
        }
    }

    pub fn as_producer(&self) -> Option<&Producer> {
        match self {
            SimNode::Producer(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_producer_mut(&mut self) -> Option<&mut Producer> {
        match self {
            SimNode::Producer(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_zombie(&self) -> Option<&Zombie> {
        match self {
            SimNode::Zombie(z) => Some(z),
            _ => None,
        }
    }
}

impl Node for SimNode {
    fn start(&mut self, ctx: &mut Ctx<'_>) {
        match self {
            SimNode::Router(r) => {
                let acts = r.start(ctx.now);
                apply(ctx, acts);
            }
            SimNode::Consumer(c) => c.start(ctx),
            SimNode::Producer(_) => {}
            SimNode::Zombie(z) => z.start(ctx),
        }
    }

    fn on_frame(&mut self, ctx: &mut Ctx<'_>, face: FaceId, frame: Frame) {
        match self {
            SimNode::Router(r) => {
                let acts = match frame.packet {
                    Packet::Interest(i) => r.on_interest(face, i, frame.provenance, ctx.now, ctx.rng),
                    Packet::Data(d) => r.on_data(face, d, frame.provenance, ctx.now, ctx.rng),
                };
                apply(ctx, acts);
            }
            SimNode::Consumer(c) => c.on_frame(ctx, face, frame),
            SimNode::Producer(p) => {
                if let Packet::Interest(i) = frame.packet {
                    let attack = frame.provenance == Provenance::Attack;
                    if let Some((data, delay)) = p.serve(&i, attack, ctx.now) {
                        ctx.send_after(delay, face, Frame::new(Packet::Data(data), Provenance::Honest));
                    }
                }
            }
            SimNode::Zombie(z) => z.on_frame(ctx, face, frame),
        }
    }

    fn on_timer(&mut self, ctx: &mut Ctx<'_>, token: u64) {
        match self {
            SimNode::Router(r) => {
                let acts = r.on_timer(token, ctx.now, ctx.rng);
                apply(ctx, acts);
            }
            SimNode::Consumer(c) => c.on_timer(ctx, token),
            SimNode::Producer(_) => {}
            SimNode::Zombie(z) => z.on_timer(ctx, token),
        }
    }
}
