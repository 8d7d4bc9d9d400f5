//! Retry with exponential backoff, and a cap on concurrent calls.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use nodemind_core::{ChatMessage, CompletionParams, Provider, ProviderError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub base_delay_secs: f64,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay_secs: 0.5, factor: 2.0 }
    }
}

impl RetryPolicy {
    /// Upper bound of the backoff before retry number `retry` (0-based).
    pub fn ceiling(&self, retry: u32) -> Duration {
        let secs = self.base_delay_secs * self.factor.powi(retry as i32);
        Duration::from_secs_f64(secs.clamp(0.0, 3600.0))
    }

    /// Full jitter: uniform in `[0, ceiling]`.
    pub fn backoff<R: Rng>(&self, retry: u32, rng: &mut R) -> Duration {
        self.ceiling(retry).mul_f64(rng.gen::<f64>())
    }
}

type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

/// Retries retryable provider errors according to a [`RetryPolicy`].
pub struct Retrying<P> {
    inner: P,
    policy: RetryPolicy,
    sleep: Sleeper,
}

impl<P: Provider> Retrying<P> {
    pub fn new(inner: P, policy: RetryPolicy) -> Self {
        Self { inner, policy, sleep: Arc::new(std::thread::sleep) }
    }

    /// Replaces the sleep function, e.g. to record backoffs in tests.
    pub fn with_sleeper(mut self, sleep: impl Fn(Duration) + Send + Sync + 'static) -> Self {
        self.sleep = Arc::new(sleep);
        self
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Provider> Provider for Retrying<P> {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ProviderError> {
        let mut retry = 0;
        loop {
            match self.inner.complete(messages, params) {
                Err(e) if e.retryable() && retry < self.policy.max_retries => {
                    let wait = self.policy.backoff(retry, &mut rand::thread_rng());
                    (self.sleep)(wait);
                    retry += 1;
                }
                other => return other,
            }
        }
    }
}

/// Limits how many calls to the wrapped provider run at once. Share one
/// instance (behind an `Arc`) to make the limit process-wide.
pub struct Throttled<P> {
    inner: P,
    cap: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl<P: Provider> Throttled<P> {
    pub fn new(inner: P, cap: usize) -> Self {
        assert!(cap > 0, "in-flight cap must be positive");
        Self { inner, cap, in_flight: Mutex::new(0), freed: Condvar::new() }
    }
}

impl<P: Provider> Provider for Throttled<P> {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ProviderError> {
        {
            let mut n = self.in_flight.lock().expect("in-flight lock");
            while *n >= self.cap {
                n = self.freed.wait(n).expect("in-flight lock");
            }
            *n += 1;
        }
        struct Release<'a>(&'a Mutex<usize>, &'a Condvar);
        impl Drop for Release<'_> {
            fn drop(&mut self) {
                *self.0.lock().expect("in-flight lock") -= 1;
                self.1.notify_one();
            }
        }
        let _release = Release(&self.in_flight, &self.freed);
        self.inner.complete(messages, params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nodemind_core::llm::ScriptStep;
    use nodemind_core::{ProviderErrorKind, ScriptedProvider};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn call(p: &impl Provider) -> Result<String, ProviderError> {
        p.complete(&[ChatMessage::user("q")], &CompletionParams::default())
    }

    fn recorded(steps: Vec<ScriptStep>) -> (Retrying<ScriptedProvider>, Arc<Mutex<Vec<Duration>>>) {
        let waits = Arc::new(Mutex::new(Vec::new()));
        let w = waits.clone();
        let p = Retrying::new(ScriptedProvider::from_steps(steps), RetryPolicy::default())
            .with_sleeper(move |d| w.lock().unwrap().push(d));
        (p, waits)
    }

    #[test]
    fn retries_then_succeeds() {
        let (p, waits) = recorded(vec![
            ScriptStep::Fail(ProviderErrorKind::RateLimited),
            ScriptStep::Fail(ProviderErrorKind::Timeout),
            ScriptStep::Respond("ok".into()),
        ]);
        assert_eq!(call(&p).unwrap(), "ok");
        assert_eq!(p.inner().request_count(), 3);
        let waits = waits.lock().unwrap();
        assert_eq!(waits.len(), 2);
        assert!(waits[0] <= Duration::from_millis(500));
        assert!(waits[1] <= Duration::from_millis(1000));
    }

    #[test]
    fn at_most_four_attempts() {
        let (p, waits) = recorded(vec![ScriptStep::Fail(ProviderErrorKind::ServerError); 6]);
        assert_eq!(call(&p).unwrap_err().kind, ProviderErrorKind::ServerError);
        assert_eq!(p.inner().request_count(), 4);
        assert_eq!(waits.lock().unwrap().len(), 3);
    }

    #[test]
    fn non_retryable_errors_fail_fast() {
        for kind in [ProviderErrorKind::AuthError, ProviderErrorKind::MalformedResponse, ProviderErrorKind::ScriptExhausted] {
            let (p, waits) = recorded(vec![ScriptStep::Fail(kind), ScriptStep::Respond("late".into())]);
            assert_eq!(call(&p).unwrap_err().kind, kind);
            assert_eq!(p.inner().request_count(), 1);
            assert!(waits.lock().unwrap().is_empty());
        }
    }

    #[test]
    fn backoff_ceiling_doubles() {
        let policy = RetryPolicy::default();
        let ceilings: Vec<f64> = (0..3).map(|i| policy.ceiling(i).as_secs_f64()).collect();
        assert_eq!(ceilings, vec![0.5, 1.0, 2.0]);
        let mut rng = rand::thread_rng();
        for i in 0..3 {
            for _ in 0..100 {
                assert!(policy.backoff(i, &mut rng) <= policy.ceiling(i));
            }
        }
    }

    struct Counting {
        now: AtomicUsize,
        peak: AtomicUsize,
    }

    impl Provider for Counting {
        fn complete(&self, _: &[ChatMessage], _: &CompletionParams) -> Result<String, ProviderError> {
            let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(n, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(20));
            self.now.fetch_sub(1, Ordering::SeqCst);
            Ok(String::new())
        }
    }

    #[test]
    fn throttle_caps_concurrency() {
        let p = Arc::new(Throttled::new(Counting { now: AtomicUsize::new(0), peak: AtomicUsize::new(0) }, 4));
        let handles: Vec<_> = (0..16)
            .map(|_| {
                let p = p.clone();
                std::thread::spawn(move || call(&*p).unwrap())
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let peak = p.inner.peak.load(Ordering::SeqCst);
        assert!(peak <= 4 && peak >= 2, "peak {peak}");
    }
}
