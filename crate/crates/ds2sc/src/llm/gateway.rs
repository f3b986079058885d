use std::collections::{BTreeMap, VecDeque};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;

use super::{
    render_transcript, LlmError, LlmRequest, LlmResponse, ProviderConfig, TranscriptEntry, TranscriptMode,
};

/// Where responses come from.
#[derive(Debug, Clone)]
pub enum Source {
    /// HTTP calls to a chat-completion endpoint.
    Live(ProviderConfig),
    /// Responses looked up by request digest. Repeated requests consume
    /// recorded responses in order and then keep returning the last one.
    Replay(Vec<TranscriptEntry>),
    /// Responses handed out in order, whatever the request.
    Scripted(Vec<LlmResponse>),
}

#[derive(Debug)]
enum State {
    Live(ProviderConfig),
    Replay(BTreeMap<String, (VecDeque<LlmResponse>, Option<LlmResponse>)>),
    Scripted { queue: VecDeque<LlmResponse>, consumed: usize },
}

/// Single point through which every agent talks to a model. Every exchange
/// is logged, and appended to `record_path` when one is set.
#[derive(Debug)]
pub struct Gateway {
    state: State,
    exchanges: Vec<TranscriptEntry>,
    record_path: Option<PathBuf>,
    live_calls: usize,
}

impl Gateway {
    pub fn new(source: Source) -> Self {
        let state = match source {
            Source::Live(cfg) => State::Live(cfg),
            Source::Replay(entries) => {
                let mut map: BTreeMap<String, (VecDeque<LlmResponse>, Option<LlmResponse>)> = BTreeMap::new();
                for e in entries {
                    map.entry(e.request_digest).or_default().0.push_back(e.response);
                }
                State::Replay(map)
            }
            Source::Scripted(responses) => State::Scripted {
                queue: responses.into(),
                consumed: 0,
            },
        };
        Self {
            state,
            exchanges: Vec::new(),
            record_path: None,
            live_calls: 0,
        }
    }

    pub fn scripted<S: Into<String>>(texts: impl IntoIterator<Item = S>) -> Self {
        Self::new(Source::Scripted(texts.into_iter().map(LlmResponse::scripted).collect()))
    }

    pub fn with_record_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.record_path = Some(path.into());
        self
    }

    pub fn mode(&self) -> TranscriptMode {
        match self.state {
            State::Live(_) => TranscriptMode::Record,
            State::Replay(_) => TranscriptMode::Replay,
            State::Scripted { .. } => TranscriptMode::Scripted,
        }
    }

    pub fn exchanges(&self) -> &[TranscriptEntry] {
        &self.exchanges
    }

    /// Number of HTTP requests issued so far (retries included once).
    pub fn live_calls(&self) -> usize {
        self.live_calls
    }

    pub fn complete(&mut self, req: &LlmRequest) -> Result<LlmResponse, LlmError> {
        req.validate()?;
        let digest = req.digest();
        let response = match &mut self.state {
            State::Live(cfg) => {
                self.live_calls += 1;
                cfg.complete(req)?
            }
            State::Replay(map) => {
                let slot = map.get_mut(&digest).ok_or_else(|| LlmError::ReplayMiss { digest: digest.clone() })?;
                match slot.0.pop_front() {
                    Some(r) => {
                        slot.1 = Some(r.clone());
                        r
                    }
                    None => slot.1.clone().ok_or_else(|| LlmError::ReplayMiss { digest: digest.clone() })?,
                }
            }
            State::Scripted { queue, consumed } => {
                let r = queue.pop_front().ok_or(LlmError::ScriptExhausted { consumed: *consumed })?;
                *consumed += 1;
                r
            }
        };
        log::debug!(
            "{} exchange {} ({} chars{})",
            req.agent_kind,
            &digest[..12],
            response.text.len(),
            if response.truncated { ", truncated" } else { "" }
        );
        let entry = TranscriptEntry {
            request_digest: digest,
            agent_kind: Some(req.agent_kind),
            response: response.clone(),
        };
        if let Some(path) = &self.record_path {
            let line = render_transcript(std::slice::from_ref(&entry));
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .and_then(|mut f| f.write_all(line.as_bytes()))
                .map_err(|e| LlmError::Io(format!("{}: {e}", path.display())))?;
        }
        self.exchanges.push(entry);
        Ok(response)
    }
}
