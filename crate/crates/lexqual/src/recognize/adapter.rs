//! Subprocess line protocol for plugging in an external word analyzer.
//!
//! Request: one word per line, `\n`-terminated. Response: one line per word,
//! `surface<TAB>0|1`, in the same order. The adapter command is run through
//! `sh -c`, words are flushed in batches, and each batch gets its own reply
//! timeout. Any protocol violation discards the whole result.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use thiserror::Error;

pub const DEFAULT_BATCH_SIZE: usize = 10_000;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Clone)]
pub struct AdapterConfig {
    /// Shell command line the adapter process is started with.
    pub command: String,
    pub batch_size: usize,
    /// Reply timeout per batch.
    pub timeout: Duration,
}

impl AdapterConfig {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            batch_size: DEFAULT_BATCH_SIZE,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("cannot start adapter {command:?}: {source}")]
    Spawn { command: String, source: io::Error },
    #[error("adapter exited {status} after {got} of {expected} replies")]
    Crashed {
        status: String,
        expected: usize,
        got: usize,
    },
    #[error("adapter reply timeout in batch {batch} (waited {waited:?})")]
    Timeout { batch: usize, waited: Duration },
    #[error("adapter reply line {line} malformed: {content:?} ({reason})")]
    MalformedReply {
        line: usize,
        content: String,
        reason: String,
    },
    #[error("adapter replied {got} lines for {expected} words")]
    CountMismatch { expected: usize, got: usize },
    #[error("adapter i/o: {0}")]
    Io(#[from] io::Error),
}

fn kill_and_reap(child: &mut Child) {
    let _ = child.kill();
    let _ = child.wait();
}

/// Sends every word to the adapter and joins the replies back positionally.
/// Errors discard all partial results.
pub fn external_recognize_batch(
    words: &[String],
    cfg: &AdapterConfig,
) -> Result<Vec<(String, bool)>, AdapterError> {
    if words.is_empty() {
        return Ok(Vec::new());
    }
    let batch_size = cfg.batch_size.max(1);

    let mut child = Command::new("sh")
        .arg("-c")
        .arg(&cfg.command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|source| AdapterError::Spawn {
            command: cfg.command.clone(),
            source,
        })?;

    // writer thread: the adapter may reply line by line, so writing the full
    // request from a separate thread avoids a pipe-buffer deadlock
    let mut stdin = child.stdin.take().expect("piped stdin");
    let request: Vec<String> = words.to_vec();
    let writer = thread::spawn(move || -> io::Result<()> {
        for (i, word) in request.iter().enumerate() {
            writeln!(stdin, "{word}")?;
            if (i + 1) % batch_size == 0 {
                stdin.flush()?;
            }
        }
        stdin.flush()
    });

    let stdout = child.stdout.take().expect("piped stdout");
    let (tx, rx) = mpsc::channel::<io::Result<String>>();
    let reader = thread::spawn(move || {
        for line in BufReader::new(stdout).lines() {
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let mut results = Vec::with_capacity(words.len());
    let mut deadline = Instant::now() + cfg.timeout;
    for (i, word) in words.iter().enumerate() {
        if i % batch_size == 0 {
            deadline = Instant::now() + cfg.timeout;
        }
        let remaining = deadline.saturating_duration_since(Instant::now());
        let line = match rx.recv_timeout(remaining) {
            Ok(Ok(line)) => line,
            Ok(Err(source)) => {
                kill_and_reap(&mut child);
                return Err(AdapterError::Io(source));
            }
            Err(RecvTimeoutError::Timeout) => {
                kill_and_reap(&mut child);
                return Err(AdapterError::Timeout {
                    batch: i / batch_size,
                    waited: cfg.timeout,
                });
            }
            Err(RecvTimeoutError::Disconnected) => {
                // reply stream ended early: distinguish a crash from a
                // well-behaved adapter that simply answered too few lines
                let status = child.wait()?;
                let _ = writer.join();
                let _ = reader.join();
                if status.success() {
                    return Err(AdapterError::CountMismatch {
                        expected: words.len(),
                        got: i,
                    });
                }
                return Err(AdapterError::Crashed {
                    status: status.to_string(),
                    expected: words.len(),
                    got: i,
                });
            }
        };

        let malformed = |reason: &str| AdapterError::MalformedReply {
            line: i + 1,
            content: line.clone(),
            reason: reason.into(),
        };
        let (surface, flag) = match line.split_once('\t') {
            Some(parts) => parts,
            None => {
                kill_and_reap(&mut child);
                return Err(malformed("expected surface<TAB>0|1"));
            }
        };
        if surface != word {
            kill_and_reap(&mut child);
            return Err(malformed("reply does not match the queried word"));
        }
        let recognized = match flag {
            "0" => false,
            "1" => true,
            _ => {
                kill_and_reap(&mut child);
                return Err(malformed("flag must be 0 or 1"));
            }
        };
        results.push((word.clone(), recognized));
    }

    // all replies in hand; give the adapter a moment to exit, then reap it
    drop(rx);
    let _ = writer.join();
    let grace = Instant::now() + cfg.timeout;
    loop {
        match child.try_wait()? {
            Some(_) => break,
            None if Instant::now() >= grace => {
                kill_and_reap(&mut child);
                break;
            }
            None => thread::sleep(Duration::from_millis(5)),
        }
    }
    let _ = reader.join();
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    fn quick(command: &str) -> AdapterConfig {
        AdapterConfig {
            command: command.into(),
            batch_size: 4,
            timeout: Duration::from_secs(5),
        }
    }

    const IDENTITY: &str = r#"while read w; do printf '%s\t1\n' "$w"; done"#;
    const REJECT_ALL: &str = r#"while read w; do printf '%s\t0\n' "$w"; done"#;

    #[test]
    fn identity_adapter_recognizes_all() {
        let input = words(&["talo", "kala", "wapaa", "x", "y"]);
        let out = external_recognize_batch(&input, &quick(IDENTITY)).unwrap();
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|(_, r)| *r));
        assert_eq!(out[2].0, "wapaa");
    }

    #[test]
    fn reject_adapter_recognizes_none() {
        let input = words(&["talo", "kala"]);
        let out = external_recognize_batch(&input, &quick(REJECT_ALL)).unwrap();
        assert!(out.iter().all(|(_, r)| !*r));
    }

    #[test]
    fn short_reply_is_count_mismatch() {
        // replies to 2 of 3 words, then exits cleanly
        let cmd = r#"n=0; while read w; do n=$((n+1)); [ $n -le 2 ] && printf '%s\t1\n' "$w"; done; exit 0"#;
        let err = external_recognize_batch(&words(&["a", "b", "c"]), &quick(cmd)).unwrap_err();
        match err {
            AdapterError::CountMismatch {
                expected: 3,
                got: 2,
            } => {}
            other => panic!("expected count mismatch, got {other:?}"),
        }
    }

    #[test]
    fn crash_mid_batch() {
        let cmd = r#"read w; printf '%s\t1\n' "$w"; exit 7"#;
        let err = external_recognize_batch(&words(&["a", "b", "c"]), &quick(cmd)).unwrap_err();
        match err {
            AdapterError::Crashed { got: 1, .. } => {}
            other => panic!("expected crash, got {other:?}"),
        }
    }

    #[test]
    fn malformed_reply_line() {
        let cmd = r#"while read w; do printf '%s\n' "$w"; done"#; // missing tab+flag
        let err = external_recognize_batch(&words(&["a"]), &quick(cmd)).unwrap_err();
        assert!(matches!(err, AdapterError::MalformedReply { line: 1, .. }));

        let cmd = r#"while read w; do printf '%s\t2\n' "$w"; done"#; // bad flag
        let err = external_recognize_batch(&words(&["a"]), &quick(cmd)).unwrap_err();
        assert!(matches!(err, AdapterError::MalformedReply { .. }));
    }

    #[test]
    fn out_of_order_reply_is_malformed() {
        let cmd = r#"while read w; do printf 'zzz\t1\n'; done"#;
        let err = external_recognize_batch(&words(&["a"]), &quick(cmd)).unwrap_err();
        assert!(matches!(err, AdapterError::MalformedReply { .. }));
    }

    #[test]
    fn timeout_fires() {
        let cfg = AdapterConfig {
            command: "sleep 30".into(),
            batch_size: 2,
            timeout: Duration::from_millis(200),
        };
        let start = Instant::now();
        let err = external_recognize_batch(&words(&["a", "b"]), &cfg).unwrap_err();
        assert!(matches!(err, AdapterError::Timeout { batch: 0, .. }));
        assert!(start.elapsed() < Duration::from_secs(5));
    }

    #[test]
    fn batches_larger_than_pipe_buffer() {
        // enough words to overflow a 64 KiB pipe if replies were not drained
        let input: Vec<String> = (0..30_000).map(|i| format!("word{i}")).collect();
        let cfg = AdapterConfig {
            command: IDENTITY.into(),
            batch_size: 10_000,
            timeout: Duration::from_secs(30),
        };
        let out = external_recognize_batch(&input, &cfg).unwrap();
        assert_eq!(out.len(), 30_000);
        assert!(out.iter().all(|(_, r)| *r));
    }

    #[test]
    fn empty_input_is_trivial() {
        let out = external_recognize_batch(&[], &quick(IDENTITY)).unwrap();
        assert!(out.is_empty());
    }
}
