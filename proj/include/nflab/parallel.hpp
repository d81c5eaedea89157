// Minimal fixed-size thread pool with an index-ordered parallel_for.
//
// Work is always split into a deterministic list of jobs addressed by index;
// callers combine per-job results in index order, so numeric output does not
// depend on how many worker threads actually ran the jobs.
#pragma once

#include <cstddef>
#include <functional>

namespace nflab {

// Number of worker threads to use. Reads the NFLAB_THREADS environment
// variable once (values < 1 fall back to hardware concurrency).
std::size_t worker_count();

// Override worker_count() programmatically (0 restores the environment-based
// default). Intended for the CLI --threads flag and for tests.
void set_worker_count(std::size_t n);

// Runs fn(i) for i in [0, n_jobs). Jobs may execute on any thread in any
// order; the call returns after all jobs finish. Exceptions thrown by jobs
// are rethrown (first one wins). With one worker everything runs inline.
void parallel_for(std::size_t n_jobs, const std::function<void(std::size_t)>& fn);

}  // namespace nflab
