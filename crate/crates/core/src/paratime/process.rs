//! Shards as separate processes joined by Unix domain sockets.
//!
//! Link `k` connects shard `k-1` (listening on `link-k.sock` in a shared
//! directory) with shard `k`. The parent process runs shard 0 and collects a
//! short text summary from every child's standard output.

use std::fmt::Write as _;
use std::io::{self, ErrorKind};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use super::{assemble, partition_times, run_shard, ExchangeLog, ParallelRun, ParatimeError, ShardReport, SocketPort, StreamPort};
use crate::clock::ClockOracle;
use crate::fciqmc::{Observable, RunStatus, SimParams};

/// How long a shard waits for its neighbours to appear.
pub const CONNECT_TIMEOUT: Duration = Duration::from_secs(30);

fn link_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("link-{k}.sock"))
}

fn io_err(e: io::Error) -> ParatimeError {
    ParatimeError::Transport(e.to_string())
}

fn port(s: UnixStream) -> Result<SocketPort, ParatimeError> {
    let w = s.try_clone().map_err(io_err)?;
    Ok(StreamPort::new(s, w))
}

fn connect_within(path: &Path, deadline: Instant) -> Result<UnixStream, ParatimeError> {
    loop {
        match UnixStream::connect(path) {
            Ok(s) => return Ok(s),
            Err(e) if matches!(e.kind(), ErrorKind::NotFound | ErrorKind::ConnectionRefused) && Instant::now() < deadline => {
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(ParatimeError::Transport(format!("connect {}: {e}", path.display()))),
        }
    }
}

fn accept_within(l: &UnixListener, deadline: Instant) -> Result<UnixStream, ParatimeError> {
    l.set_nonblocking(true).map_err(io_err)?;
    loop {
        match l.accept() {
            Ok((s, _)) => {
                s.set_nonblocking(false).map_err(io_err)?;
                return Ok(s);
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock && Instant::now() < deadline => {
                std::thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(ParatimeError::Transport(format!("accept: {e}"))),
        }
    }
}

/// Left and right links of shard `id` out of `n`, rendezvousing in `dir`.
pub fn connect_chain(
    dir: &Path,
    id: usize,
    n: usize,
    timeout: Duration,
) -> Result<(Option<SocketPort>, Option<SocketPort>), ParatimeError> {
    let deadline = Instant::now() + timeout;
    let listener = if id + 1 < n { Some(UnixListener::bind(link_path(dir, id + 1)).map_err(io_err)?) } else { None };
    let left = if id > 0 { Some(port(connect_within(&link_path(dir, id), deadline)?)?) } else { None };
    let right = match listener {
        Some(l) => Some(port(accept_within(&l, deadline)?)?),
        None => None,
    };
    Ok((left, right))
}

/// Line-oriented summary of a non-lead shard. Statistics are omitted since
/// the lead shard holds the same totals.
pub fn encode_summary(r: &ShardReport) -> String {
    let mut s = String::new();
    match r.status {
        RunStatus::Completed => s.push_str("status completed\n"),
        RunStatus::Extinct { iteration } => writeln!(s, "status extinct {iteration}").unwrap(),
    }
    writeln!(s, "shift {:016x}", r.shift.to_bits()).unwrap();
    writeln!(s, "exchange {} {} {}", r.exchange.envelopes, r.exchange.children, r.exchange.non_adjacent).unwrap();
    s.push_str("walkers");
    for w in &r.walkers {
        write!(s, " {w}").unwrap();
    }
    s.push('\n');
    s
}

pub fn decode_summary(text: &str) -> Result<ShardReport, ParatimeError> {
    let bad = |what: &str| ParatimeError::Protocol(format!("bad shard summary: {what}"));
    let mut status = None;
    let mut shift = None;
    let mut exchange = None;
    let mut walkers = None;
    for line in text.lines() {
        let mut f = line.split_whitespace();
        let key = f.next();
        let nums = |f: std::str::SplitWhitespace<'_>| f.map(str::parse::<u64>).collect::<Result<Vec<u64>, _>>();
        match key {
            Some("status") => {
                status = Some(match (f.next(), f.next()) {
                    (Some("completed"), None) => RunStatus::Completed,
                    (Some("extinct"), Some(it)) => RunStatus::Extinct { iteration: it.parse().map_err(|_| bad("status"))? },
                    _ => return Err(bad("status")),
                })
            }
            Some("shift") => {
                let bits = f.next().and_then(|h| u64::from_str_radix(h, 16).ok()).ok_or_else(|| bad("shift"))?;
                shift = Some(f64::from_bits(bits));
            }
            Some("exchange") => match nums(f).map_err(|_| bad("exchange"))?[..] {
                [envelopes, children, non_adjacent] => exchange = Some(ExchangeLog { envelopes, children, non_adjacent }),
                _ => return Err(bad("exchange")),
            },
            Some("walkers") => walkers = Some(nums(f).map_err(|_| bad("walkers"))?),
            None => {}
            Some(other) => return Err(bad(other)),
        }
    }
    Ok(ShardReport {
        stats: Vec::new(),
        measure_from: 0,
        status: status.ok_or_else(|| bad("missing status"))?,
        walkers: walkers.ok_or_else(|| bad("missing walkers"))?,
        exchange: exchange.ok_or_else(|| bad("missing exchange"))?,
        shift: shift.ok_or_else(|| bad("missing shift"))?,
    })
}

/// Run shard 0 here and shards `1..n_shards` as child processes.
/// `launch(id)` must return a command that runs shard `id` against the
/// same problem and parameters, calls [`connect_chain`] on `dir` and prints
/// [`encode_summary`] on success. `dir` must exist and be private to this run.
pub fn run_processes(
    params: &SimParams,
    oracle: &ClockOracle,
    observables: &[Observable],
    n_shards: usize,
    dir: &Path,
    mut launch: impl FnMut(usize) -> Command,
) -> Result<ParallelRun, ParatimeError> {
    params.validate()?;
    let plan = partition_times(oracle.time_points(), n_shards)?;
    let started = Instant::now();
    let mut children = Vec::with_capacity(n_shards.saturating_sub(1));
    for id in 1..n_shards {
        let spawned = launch(id)
            .stdin(std::process::Stdio::null())
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::piped())
            .spawn();
        match spawned {
            Ok(c) => children.push(c),
            Err(e) => {
                for mut c in children {
                    let _ = c.kill();
                    let _ = c.wait();
                }
                return Err(ParatimeError::Transport(format!("cannot start shard {id}: {e}")));
            }
        }
    }
    let lead = match connect_chain(dir, 0, n_shards, CONNECT_TIMEOUT) {
        Ok((left, right)) => run_shard(params, oracle, observables, &plan, 0, left, right),
        Err(e) => {
            for c in children.iter_mut() {
                let _ = c.kill();
            }
            Err(e)
        }
    };
    let mut outputs = vec![lead];
    for (k, child) in children.into_iter().enumerate() {
        let id = k + 1;
        let out = child.wait_with_output().map_err(io_err);
        outputs.push(out.and_then(|o| {
            if o.status.success() {
                decode_summary(&String::from_utf8_lossy(&o.stdout))
            } else {
                let msg = String::from_utf8_lossy(&o.stderr).trim().to_string();
                let msg = format!("shard {id} ({}): {msg}", o.status);
                // a hang-up seen by a child is a symptom, not the cause
                if msg.contains("transport:") {
                    Err(ParatimeError::Transport(msg))
                } else {
                    Err(ParatimeError::Worker(msg))
                }
            }
        }));
    }
    assemble(plan, observables, outputs, started.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_round_trip() {
        let r = ShardReport {
            stats: Vec::new(),
            measure_from: 0,
            status: RunStatus::Extinct { iteration: 17 },
            walkers: vec![3, 0, 12],
            exchange: ExchangeLog { envelopes: 6, children: 40, non_adjacent: 0 },
            shift: -0.1234,
        };
        assert_eq!(decode_summary(&encode_summary(&r)).unwrap(), r);
        assert!(decode_summary("status completed\n").is_err());
        assert!(decode_summary("bogus 1\n").is_err());
    }

    #[test]
    fn chain_rendezvous_in_a_directory() {
        let dir = std::env::temp_dir().join(format!("clockqmc-chain-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let n = 3;
        let handles: Vec<_> = (0..n)
            .map(|id| {
                let dir = dir.clone();
                std::thread::spawn(move || connect_chain(&dir, id, n, Duration::from_secs(5)).map(|(l, r)| (l.is_some(), r.is_some())))
            })
            .collect();
        let shapes: Vec<_> = handles.into_iter().map(|h| h.join().unwrap().unwrap()).collect();
        assert_eq!(shapes, [(false, true), (true, true), (true, false)]);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn missing_neighbour_times_out() {
        let dir = std::env::temp_dir().join(format!("clockqmc-timeout-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        let r = connect_chain(&dir, 1, 2, Duration::from_millis(50));
        assert!(matches!(r, Err(ParatimeError::Transport(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
