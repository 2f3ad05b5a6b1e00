//! Attack hosts. Each zombie runs one task per attack it takes part in.

use rand::Rng;

use crate::attacks::{gen_flood_interest, AttackKind, AttackSpec, Pacing};
use crate::ndn::{Interest, Name, Packet};
use crate::simnet::{Ctx, FaceId, Frame, Provenance, SimDuration, SimTime};

#[derive(Debug, Clone)]
struct Task {
    spec: AttackSpec,
    /// This zombie's position among the attack's zombies, and their count.
    rank: usize,
    of: usize,
    seq: u64,
    /// Anticipation wave, sorted by send time.
    wave: Vec<(SimTime, Name)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ZombieStats {
    pub interests_sent: u64,
    pub data_received: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Zombie {
    tasks: Vec<Task>,
    pub stats: ZombieStats,
}

impl Zombie {
    pub fn new() -> Self {
        Self::default()
    }

    /// Joins `spec` as zombie number `rank` of `of`.
    pub fn add_task(&mut self, spec: AttackSpec, rank: usize, of: usize) {
        self.tasks.push(Task {
            spec,
            rank,
            of: of.max(1),
            seq: 0,
            wave: Vec::new(),
        });
    }

    fn interval(spec: &AttackSpec) -> SimDuration {
        SimDuration::from_secs_f64(1.0 / spec.rate).max(SimDuration::from_micros(1))
    }

    fn send(&mut self, ctx: &mut Ctx<'_>, interest: Interest) {
        for f in 0..ctx.face_count() {
            ctx.send(
                FaceId(f as u32),
                Frame::new(Packet::Interest(interest.clone()), Provenance::Attack),
            );
            self.stats.interests_sent += 1;
        }
    }

    pub fn start(&mut self, ctx: &mut Ctx<'_>) {
        for (i, t) in self.tasks.iter_mut().enumerate() {
            let start = SimTime::from_ms(t.spec.start_ms);
            match t.spec.kind {
                k if k.is_flood() => {
                    // Stagger zombies evenly across one sending interval.
                    let phase = Self::interval(&t.spec).as_micros() * t.rank as u64 / t.of as u64;
                    ctx.schedule(start + SimDuration::from_micros(phase), i as u64);
                }
                AttackKind::PoisonAnticipate => {
                    let jitter = t.spec.jitter_ms * 1000;
                    for name in t.spec.all_names() {
                        for _ in 0..t.spec.copies {
                            let off = if jitter == 0 { 0 } else { ctx.rng.gen_range(0..jitter) };
                            t.wave.push((start + SimDuration::from_micros(off), name.clone()));
                        }
                    }
                    t.wave.sort();
                    t.wave.reverse();
                    if let Some((at, _)) = t.wave.last() {
                        ctx.schedule(*at, i as u64);
                    }
                }
                _ => {}
            }
        }
    }

    pub fn on_frame(&mut self, _ctx: &mut Ctx<'_>, _face: FaceId, frame: Frame) {
        if matches!(frame.packet, Packet::Data(_)) {
            self.stats.data_received += 1;
        }
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx<'_>, token: u64) {
        let i = token as usize;
        let Some(t) = self.tasks.get_mut(i) else { return };
        let stop = SimTime::from_ms(t.spec.stop_ms);
        if ctx.now >= stop {
            return;
        }
        if t.spec.kind == AttackKind::PoisonAnticipate {
            let mut due = Vec::new();
            while t.wave.last().is_some_and(|(at, _)| *at <= ctx.now) {
                due.push(t.wave.pop().expect("checked").1);
            }
            let next = t.wave.last().map(|(at, _)| *at);
            let lifetime = t.spec.lifetime_ms;
            for name in due {
                let mut interest = Interest::new(name, ctx.rng.gen());
                if let Some(ms) = lifetime {
                    interest = interest.with_lifetime(ms);
                }
                self.send(ctx, interest);
            }
            if let Some(at) = next {
                ctx.schedule(at, token);
            }
            return;
        }
        let interest = gen_flood_interest(&t.spec, t.rank, t.seq, ctx.rng);
        t.seq += 1;
        let gap = match t.spec.pacing {
            Pacing::Constant => Self::interval(&t.spec),
            Pacing::Poisson => {
                let u: f64 = ctx.rng.gen_range(f64::EPSILON..1.0);
                SimDuration::from_secs_f64(-u.ln() / t.spec.rate).max(SimDuration::from_micros(1))
            }
        };
        self.send(ctx, interest);
        ctx.schedule(ctx.now + gap, token);
    }
}
