//! Shared entry point for all oracle traffic: validates requests, bounds the
//! number of requests in flight, rate-limits with a token bucket and retries
//! transient network failures with exponential backoff.

use std::sync::{Arc, Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::{ChatBackend, OracleError, OracleRequest};

#[derive(Debug, Clone, PartialEq)]
pub struct GatewayConfig {
    /// Maximum concurrent backend calls.
    pub max_in_flight: usize,
    /// Sustained requests per second; `None` disables rate limiting.
    pub requests_per_second: Option<f64>,
    /// Burst size of the token bucket.
    pub burst: usize,
    /// Retries after the first failed attempt.
    pub retries: u32,
    /// Delay before the first retry; doubles each time.
    pub initial_backoff: Duration,
}

impl GatewayConfig {
    pub fn unlimited() -> Self {
        Self {
            max_in_flight: usize::MAX,
            requests_per_second: None,
            burst: 1,
            retries: 3,
            initial_backoff: Duration::from_millis(1),
        }
    }

    pub fn live() -> Self {
        Self {
            max_in_flight: 4,
            requests_per_second: Some(1.0),
            burst: 4,
            retries: 3,
            initial_backoff: Duration::from_secs(2),
        }
    }
}

struct Bucket {
    tokens: f64,
    last: Instant,
}

pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    config: GatewayConfig,
    in_flight: Mutex<usize>,
    slot_free: Condvar,
    bucket: Mutex<Bucket>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>, config: GatewayConfig) -> Self {
        let bucket = Bucket { tokens: config.burst as f64, last: Instant::now() };
        Self {
            backend,
            config,
            in_flight: Mutex::new(0),
            slot_free: Condvar::new(),
            bucket: Mutex::new(bucket),
        }
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    fn take_token(&self) {
        let Some(rate) = self.config.requests_per_second else {
            return;
        };
        loop {
            let wait = {
                let mut b = self.bucket.lock().unwrap();
                let now = Instant::now();
                b.tokens = (b.tokens + now.duration_since(b.last).as_secs_f64() * rate).min(self.config.burst as f64);
                b.last = now;
                if b.tokens >= 1.0 {
                    b.tokens -= 1.0;
                    return;
                }
                Duration::from_secs_f64((1.0 - b.tokens) / rate)
            };
            thread::sleep(wait);
        }
    }

    fn attempt(&self, req: &OracleRequest) -> Result<String, OracleError> {
        {
            let mut n = self.in_flight.lock().unwrap();
            while *n >= self.config.max_in_flight {
                n = self.slot_free.wait(n).unwrap();
            }
            *n += 1;
        }
        self.take_token();
        let out = self.backend.complete(req);
        *self.in_flight.lock().unwrap() -= 1;
        self.slot_free.notify_one();
        out
    }

    pub fn complete(&self, req: &OracleRequest) -> Result<String, OracleError> {
        req.check()?;
        let mut backoff = self.config.initial_backoff;
        let mut last = String::new();
        for attempt in 0..=self.config.retries {
            if attempt > 0 {
                log::warn!("oracle request failed ({last}); retry {attempt} in {backoff:?}");
                thread::sleep(backoff);
                backoff *= 2;
            }
            match self.attempt(req) {
                Err(OracleError::Network(e)) => last = e,
                other => return other,
            }
        }
        Err(OracleError::Unavailable(format!("{} attempts failed; last error: {last}", self.config.retries + 1)))
    }
}
