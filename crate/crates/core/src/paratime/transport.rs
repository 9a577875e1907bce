//! Point-to-point links between neighbouring shards.
//!
//! Every link is a [`Port`] pair. Sends never block on the peer: the channel
//! backend is unbounded and the stream backend hands frames to a writer
//! thread. This lets both neighbours send before either receives.

use std::io::{BufReader, BufWriter, Read, Write};
use std::sync::mpsc::{self, Receiver, Sender};
use std::thread::JoinHandle;

use super::{wire, Message, ParatimeError};

pub trait Port: Send {
    fn send(&mut self, msg: Message) -> Result<(), ParatimeError>;
    fn recv(&mut self) -> Result<Message, ParatimeError>;
}

/// Left and right port of each shard, in shard order.
pub type ShardPorts<P> = Vec<(Option<P>, Option<P>)>;

/// In-process backend over `std::sync::mpsc`.
pub struct ChannelPort {
    tx: Sender<Message>,
    rx: Receiver<Message>,
}

impl ChannelPort {
    pub fn pair() -> (ChannelPort, ChannelPort) {
        let (tx_a, rx_b) = mpsc::channel();
        let (tx_b, rx_a) = mpsc::channel();
        (ChannelPort { tx: tx_a, rx: rx_a }, ChannelPort { tx: tx_b, rx: rx_b })
    }
}

impl Port for ChannelPort {
    fn send(&mut self, msg: Message) -> Result<(), ParatimeError> {
        self.tx.send(msg).map_err(|_| ParatimeError::Transport("peer hung up".into()))
    }

    fn recv(&mut self) -> Result<Message, ParatimeError> {
        self.rx.recv().map_err(|_| ParatimeError::Transport("peer hung up".into()))
    }
}

/// Byte-stream backend using the wire format. Works over any duplex byte
/// stream split into a read half and a write half, e.g. a socket and its
/// `try_clone`.
pub struct StreamPort<R: Read> {
    reader: BufReader<R>,
    version_checked: bool,
    tx: Option<Sender<Message>>,
    writer: Option<JoinHandle<std::io::Result<()>>>,
}

impl<R: Read + Send> StreamPort<R> {
    pub fn new<W: Write + Send + 'static>(reader: R, writer: W) -> Self {
        let (tx, rx) = mpsc::channel::<Message>();
        let handle = std::thread::spawn(move || {
            let mut w = BufWriter::new(writer);
            wire::write_version(&mut w)?;
            w.flush()?;
            for msg in rx {
                wire::write_message(&mut w, &msg)?;
            }
            Ok(())
        });
        StreamPort { reader: BufReader::new(reader), version_checked: false, tx: Some(tx), writer: Some(handle) }
    }
}

impl<R: Read + Send> Port for StreamPort<R> {
    fn send(&mut self, msg: Message) -> Result<(), ParatimeError> {
        let tx = self.tx.as_ref().expect("sender present until drop");
        tx.send(msg).map_err(|_| ParatimeError::Transport("writer thread stopped".into()))
    }

    fn recv(&mut self) -> Result<Message, ParatimeError> {
        let io = |e: std::io::Error| ParatimeError::Transport(e.to_string());
        if !self.version_checked {
            wire::read_version(&mut self.reader).map_err(io)?;
            self.version_checked = true;
        }
        wire::read_message(&mut self.reader).map_err(io)
    }
}

impl<R: Read> Drop for StreamPort<R> {
    fn drop(&mut self) {
        self.tx.take();
        if let Some(h) = self.writer.take() {
            let _ = h.join();
        }
    }
}

/// Channel links for a chain of `n` shards.
pub fn channel_links(n: usize) -> ShardPorts<ChannelPort> {
    chain(n, |_| Ok::<_, ParatimeError>(ChannelPort::pair())).expect("channel creation cannot fail")
}

#[cfg(unix)]
pub type SocketPort = StreamPort<std::os::unix::net::UnixStream>;

/// Unix socket links for a chain of `n` shards.
#[cfg(unix)]
pub fn socket_links(n: usize) -> Result<ShardPorts<SocketPort>, ParatimeError> {
    use std::os::unix::net::UnixStream;
    let io = |e: std::io::Error| ParatimeError::Transport(e.to_string());
    chain(n, |_| {
        let (a, b) = UnixStream::pair().map_err(io)?;
        let (a_w, b_w) = (a.try_clone().map_err(io)?, b.try_clone().map_err(io)?);
        Ok((StreamPort::new(a, a_w), StreamPort::new(b, b_w)))
    })
}

fn chain<P, E>(n: usize, mut link: impl FnMut(usize) -> Result<(P, P), E>) -> Result<ShardPorts<P>, E> {
    let mut ports: ShardPorts<P> = (0..n).map(|_| (None, None)).collect();
    for i in 1..n {
        let (right_of_prev, left_of_this) = link(i)?;
        ports[i - 1].1 = Some(right_of_prev);
        ports[i].0 = Some(left_of_this);
    }
    Ok(ports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::BasisState;
    use crate::clock::ClockKey;
    use crate::fciqmc::{Child, Weight};
    use crate::paratime::Envelope;

    fn env(source: usize, dest: usize, n: usize) -> Message {
        let children = (0..n)
            .map(|i| Child { key: ClockKey::new(BasisState(i as u64), dest), weight: Weight::new(i as i64, -1) })
            .collect();
        Message::Envelope(Envelope { source, dest, children })
    }

    fn exchange<P: Port + 'static>(mut a: P, mut b: P) {
        // both sides send large frames before receiving
        let big = 50_000;
        let h = std::thread::spawn(move || {
            b.send(env(1, 0, big)).unwrap();
            let got = b.recv().unwrap();
            (b, got)
        });
        a.send(env(0, 1, big)).unwrap();
        let got_a = a.recv().unwrap();
        let (_b, got_b) = h.join().unwrap();
        for (got, src) in [(got_a, 1), (got_b, 0)] {
            match got {
                Message::Envelope(e) => {
                    assert_eq!(e.source, src);
                    assert_eq!(e.children.len(), big);
                }
                _ => panic!("expected envelope"),
            }
        }
    }

    #[test]
    fn channel_pair_exchanges() {
        let (a, b) = ChannelPort::pair();
        exchange(a, b);
    }

    #[cfg(unix)]
    #[test]
    fn socket_pair_exchanges_without_deadlock() {
        let mut ports = socket_links(2).unwrap();
        let b = ports[1].0.take().unwrap();
        let a = ports[0].1.take().unwrap();
        exchange(a, b);
    }

    #[test]
    fn chain_shape() {
        let ports = channel_links(3);
        assert!(ports[0].0.is_none() && ports[0].1.is_some());
        assert!(ports[1].0.is_some() && ports[1].1.is_some());
        assert!(ports[2].0.is_some() && ports[2].1.is_none());
        let single = channel_links(1);
        assert!(single[0].0.is_none() && single[0].1.is_none());
    }

    #[cfg(unix)]
    #[test]
    fn hang_up_is_an_error() {
        let mut ports = socket_links(2).unwrap();
        let mut a = ports[0].1.take().unwrap();
        drop(ports);
        assert!(matches!(a.recv(), Err(ParatimeError::Transport(_))));
    }
}
