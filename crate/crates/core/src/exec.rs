//! Worker configuration. With the `parallel` feature, clause work runs on a
//! rayon pool; without it everything runs on the calling thread.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// The global rayon pool, one thread per core.
    #[default]
    Auto,
    Threads(usize),
}

impl Parallelism {
    /// `None` means all cores, `Some(1)` the sequential path.
    pub fn from_workers(workers: Option<usize>) -> Self {
        match workers {
            None | Some(0) => Parallelism::Auto,
            Some(1) => Parallelism::Sequential,
            Some(n) => Parallelism::Threads(n),
        }
    }
}

pub struct Executor {
    kind: Parallelism,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor").field("kind", &self.kind).finish()
    }
}

impl Executor {
    pub fn new(kind: Parallelism) -> Result<Self> {
        #[cfg(feature = "parallel")]
        {
            let pool = match kind {
                Parallelism::Threads(n) if n > 1 => Some(
                    rayon::ThreadPoolBuilder::new()
                        .num_threads(n)
                        .build()
                        .map_err(|e| Error::Config(format!("thread pool: {e}")))?,
                ),
                _ => None,
            };
            Ok(Self { kind, pool })
        }
        #[cfg(not(feature = "parallel"))]
        {
            if let Parallelism::Threads(0) = kind {
                return Err(Error::Config("zero workers".into()));
            }
            Ok(Self { kind })
        }
    }

    pub fn sequential() -> Self {
        Self {
            kind: Parallelism::Sequential,
            #[cfg(feature = "parallel")]
            pool: None,
        }
    }

    pub fn kind(&self) -> Parallelism {
        self.kind
    }

    /// Whether clause loops should take the rayon path.
    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel")
            && match self.kind {
                Parallelism::Sequential | Parallelism::Threads(1) => false,
                Parallelism::Auto | Parallelism::Threads(_) => true,
            }
    }

    /// Runs `f` inside this executor's pool, if it has one.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.install(f);
        }
        f()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::sequential()
    }
}
