//! Byte encoding of messages for the stream transport.
//!
//! A stream opens with one version byte. Each message is a frame
//! `[len: u32][kind: u8][payload]`, `len` counting `kind` and the payload,
//! all little-endian. Envelope payloads are `[source: u32][dest: u32]
//! [count: u32]` followed by `count` child records
//! `[t': u32][state: u64][re: i64][im: i64]`.

use std::io::{self, Read, Write};

use crate::circuit::BasisState;
use crate::clock::ClockKey;
use crate::fciqmc::{Child, Weight};

use super::{Envelope, Message, Reduction};

pub const WIRE_VERSION: u8 = 1;
pub const CHILD_RECORD_BYTES: usize = 28;
/// Frames larger than this are rejected as corrupt.
pub const MAX_FRAME_BYTES: usize = 1 << 30;

const KIND_ENVELOPE: u8 = 0;
const KIND_PARTIAL: u8 = 1;
const KIND_TOTAL: u8 = 2;

fn invalid(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

pub fn write_version<W: Write>(w: &mut W) -> io::Result<()> {
    w.write_all(&[WIRE_VERSION])
}

pub fn read_version<R: Read>(r: &mut R) -> io::Result<()> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    if b[0] != WIRE_VERSION {
        return Err(invalid(format!("unsupported wire version {}", b[0])));
    }
    Ok(())
}

fn put_reduction(buf: &mut Vec<u8>, r: &Reduction) {
    for v in [r.walkers, r.spawned, r.died, r.cloned, r.annihilated, r.shift.to_bits()] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&(r.parts.len() as u32).to_le_bytes());
    for &(num, den) in &r.parts {
        buf.extend_from_slice(&num.to_le_bytes());
        buf.extend_from_slice(&den.to_le_bytes());
    }
}

/// Encode one message as a complete frame.
pub fn encode(msg: &Message) -> Vec<u8> {
    let mut body = Vec::new();
    match msg {
        Message::Envelope(env) => {
            body.push(KIND_ENVELOPE);
            body.extend_from_slice(&(env.source as u32).to_le_bytes());
            body.extend_from_slice(&(env.dest as u32).to_le_bytes());
            body.extend_from_slice(&(env.children.len() as u32).to_le_bytes());
            for c in &env.children {
                body.extend_from_slice(&(c.key.t as u32).to_le_bytes());
                body.extend_from_slice(&c.key.state.0.to_le_bytes());
                body.extend_from_slice(&c.weight.re.to_le_bytes());
                body.extend_from_slice(&c.weight.im.to_le_bytes());
            }
        }
        Message::Partial(r) => {
            body.push(KIND_PARTIAL);
            put_reduction(&mut body, r);
        }
        Message::Total(r) => {
            body.push(KIND_TOTAL);
            put_reduction(&mut body, r);
        }
    }
    let mut frame = Vec::with_capacity(4 + body.len());
    frame.extend_from_slice(&(body.len() as u32).to_le_bytes());
    frame.extend_from_slice(&body);
    frame
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take<const N: usize>(&mut self) -> io::Result<[u8; N]> {
        if self.buf.len() < N {
            return Err(invalid("truncated frame"));
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> io::Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> io::Result<u64> {
        self.take::<8>().map(u64::from_le_bytes)
    }

    fn i64(&mut self) -> io::Result<i64> {
        self.take::<8>().map(i64::from_le_bytes)
    }

    fn f64(&mut self) -> io::Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }
}

fn get_reduction(c: &mut Cursor) -> io::Result<Reduction> {
    let walkers = c.u64()?;
    let spawned = c.u64()?;
    let died = c.u64()?;
    let cloned = c.u64()?;
    let annihilated = c.u64()?;
    let shift = f64::from_bits(c.u64()?);
    let n = c.u32()? as usize;
    if c.buf.len() != n * 16 {
        return Err(invalid("reduction length mismatch"));
    }
    let parts = (0..n).map(|_| Ok((c.f64()?, c.f64()?))).collect::<io::Result<_>>()?;
    Ok(Reduction { walkers, spawned, died, cloned, annihilated, shift, parts })
}

/// Decode a frame body (everything after the length prefix).
pub fn decode(body: &[u8]) -> io::Result<Message> {
    let (&kind, rest) = body.split_first().ok_or_else(|| invalid("empty frame"))?;
    let mut c = Cursor { buf: rest };
    match kind {
        KIND_ENVELOPE => {
            let source = c.u32()? as usize;
            let dest = c.u32()? as usize;
            let count = c.u32()? as usize;
            if c.buf.len() != count * CHILD_RECORD_BYTES {
                return Err(invalid("envelope length mismatch"));
            }
            let mut children = Vec::with_capacity(count);
            for _ in 0..count {
                let t = c.u32()? as usize;
                let state = BasisState(c.u64()?);
                let weight = Weight::new(c.i64()?, c.i64()?);
                children.push(Child { key: ClockKey::new(state, t), weight });
            }
            Ok(Message::Envelope(Envelope { source, dest, children }))
        }
        KIND_PARTIAL => Ok(Message::Partial(get_reduction(&mut c)?)),
        KIND_TOTAL => Ok(Message::Total(get_reduction(&mut c)?)),
        k => Err(invalid(format!("unknown frame kind {k}"))),
    }
}

pub fn write_message<W: Write>(w: &mut W, msg: &Message) -> io::Result<()> {
    w.write_all(&encode(msg))?;
    w.flush()
}

pub fn read_message<R: Read>(r: &mut R) -> io::Result<Message> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let len = u32::from_le_bytes(len) as usize;
    if len == 0 || len > MAX_FRAME_BYTES {
        return Err(invalid(format!("bad frame length {len}")));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    decode(&body)
}
