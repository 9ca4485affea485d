use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;
use tracing::debug;

/// A GET request with query parameters, kept explicit so it can be digested.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub url: String,
    pub params: Vec<(String, String)>,
}

impl Request {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            params: Vec::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<String>) -> Self {
        self.params.push((key.to_string(), value.into()));
        self
    }

    pub fn get_param(&self, key: &str) -> Option<&str> {
        self.params
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("network error: {0}")]
    Network(String),
    #[error("upstream returned HTTP {code}")]
    Status { code: u16, body: String },
}

impl TransportError {
    /// Network failures, throttling (429) and server errors are worth retrying.
    pub fn is_retryable(&self) -> bool {
        match self {
            TransportError::Network(_) => true,
            TransportError::Status { code, .. } => *code == 429 || *code >= 500,
        }
    }
}

pub trait Transport: Send + Sync {
    fn get(&self, request: &Request) -> Result<String, TransportError>;
}

impl<T: Transport + ?Sized> Transport for Arc<T> {
    fn get(&self, request: &Request) -> Result<String, TransportError> {
        (**self).get(request)
    }
}

impl<F> Transport for F
where
    F: Fn(&Request) -> Result<String, TransportError> + Send + Sync,
{
    fn get(&self, request: &Request) -> Result<String, TransportError> {
        self(request)
    }
}

/// Blocking HTTPS transport.
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("np-alarm/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, request: &Request) -> Result<String, TransportError> {
        let response = self
            .client
            .get(&request.url)
            .query(&request.params)
            .send()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        let status = response.status();
        let body = response
            .text()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        if status.is_success() {
            Ok(body)
        } else {
            Err(TransportError::Status {
                code: status.as_u16(),
                body,
            })
        }
    }
}

/// Source of time for rate limiting and backoff.
pub trait Clock: Send + Sync {
    /// Monotonic time since an arbitrary origin.
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Clock whose `sleep` advances time instantly.
#[derive(Default)]
pub struct VirtualClock {
    now: Mutex<Duration>,
}

impl VirtualClock {
    pub fn advance(&self, by: Duration) {
        *self.now.lock().unwrap() += by;
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, duration: Duration) {
        self.advance(duration);
    }
}

/// Sliding-window limiter: at most `per_second` acquisitions in any 1 s window.
pub struct RateLimiter {
    per_second: usize,
    recent: Mutex<VecDeque<Duration>>,
    clock: Arc<dyn Clock>,
}

impl RateLimiter {
    pub fn new(per_second: u32, clock: Arc<dyn Clock>) -> Self {
        Self {
            per_second: per_second.max(1) as usize,
            recent: Mutex::new(VecDeque::new()),
            clock,
        }
    }

    /// Blocks until a request may be sent. Holding the lock while sleeping
    /// serializes acquisition across threads.
    pub fn acquire(&self) {
        let window = Duration::from_secs(1);
        let mut recent = self.recent.lock().unwrap();
        loop {
            let now = self.clock.now();
            while recent.front().is_some_and(|t| *t + window <= now) {
                recent.pop_front();
            }
            if recent.len() < self.per_second {
                recent.push_back(now);
                return;
            }
            let wait = *recent.front().unwrap() + window - now;
            self.clock.sleep(wait);
        }
    }
}

pub struct RateLimited<T> {
    inner: T,
    limiter: Arc<RateLimiter>,
}

impl<T> RateLimited<T> {
    pub fn new(inner: T, limiter: Arc<RateLimiter>) -> Self {
        Self { inner, limiter }
    }
}

impl<T: Transport> Transport for RateLimited<T> {
    fn get(&self, request: &Request) -> Result<String, TransportError> {
        self.limiter.acquire();
        self.inner.get(request)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            retries: 3,
            initial_backoff: Duration::from_millis(500),
        }
    }
}

/// Retries retryable failures with exponential backoff.
pub struct Retrying<T> {
    inner: T,
    policy: RetryPolicy,
    clock: Arc<dyn Clock>,
}

impl<T> Retrying<T> {
    pub fn new(inner: T, policy: RetryPolicy, clock: Arc<dyn Clock>) -> Self {
        Self {
            inner,
            policy,
            clock,
        }
    }
}

impl<T: Transport> Transport for Retrying<T> {
    fn get(&self, request: &Request) -> Result<String, TransportError> {
        let mut backoff = self.policy.initial_backoff;
        let mut attempt = 0;
        loop {
            match self.inner.get(request) {
                Err(e) if e.is_retryable() && attempt < self.policy.retries => {
                    attempt += 1;
                    debug!(url = %request.url, attempt, error = %e, "retrying request");
                    self.clock.sleep(backoff);
                    backoff *= 2;
                }
                other => return other,
            }
        }
    }
}

/// Counts calls that reach the wrapped transport.
pub struct Counting<T> {
    inner: T,
    calls: AtomicUsize,
}

impl<T> Counting<T> {
    pub fn new(inner: T) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<T: Transport> Transport for Counting<T> {
    fn get(&self, request: &Request) -> Result<String, TransportError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.get(request)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limiter_spaces_bursts_by_one_second() {
        let clock = Arc::new(VirtualClock::default());
        let limiter = RateLimiter::new(3, clock.clone());
        let mut times = Vec::new();
        for _ in 0..7 {
            limiter.acquire();
            times.push(clock.now());
        }
        assert_eq!(times[2], Duration::ZERO);
        assert_eq!(times[3], Duration::from_secs(1));
        assert_eq!(times[6], Duration::from_secs(2));
    }

    #[test]
    fn retries_then_surfaces_error() {
        let clock = Arc::new(VirtualClock::default());
        let flaky = Counting::new(|_: &Request| -> Result<String, TransportError> {
            Err(TransportError::Status {
                code: 503,
                body: String::new(),
            })
        });
        let flaky = Arc::new(flaky);
        let retrying = Retrying::new(flaky.clone(), RetryPolicy::default(), clock.clone());
        let err = retrying.get(&Request::new("http://x")).unwrap_err();
        assert!(matches!(err, TransportError::Status { code: 503, .. }));
        assert_eq!(flaky.calls(), 4);
        // 0.5 + 1 + 2 seconds of backoff.
        assert_eq!(clock.now(), Duration::from_millis(3500));
    }

    #[test]
    fn client_errors_are_not_retried() {
        let clock = Arc::new(VirtualClock::default());
        let failing = Arc::new(Counting::new(|_: &Request| -> Result<String, TransportError> {
            Err(TransportError::Status {
                code: 400,
                body: String::new(),
            })
        }));
        let retrying = Retrying::new(failing.clone(), RetryPolicy::default(), clock);
        assert!(retrying.get(&Request::new("http://x")).is_err());
        assert_eq!(failing.calls(), 1);
    }
}
