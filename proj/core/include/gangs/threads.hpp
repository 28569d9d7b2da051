#pragma once

#include <functional>

namespace gangs {

/// Worker cap for the few parallel sections in the library. Reads the
/// GANGS_THREADS environment variable once; falls back to the hardware
/// concurrency. Always at least 1.
int max_threads();

/// Runs fn(0..n-1), splitting indices over at most max_threads() workers.
/// The work partition is a function of n and the thread cap alone, so a
/// given index always sees the same call ordering within its worker.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace gangs
