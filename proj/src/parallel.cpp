#include "nflab/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace nflab {

namespace {

std::size_t detect_workers() {
    if (const char* env = std::getenv("NFLAB_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<std::size_t>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

std::size_t g_workers = 0;  // 0 means "not resolved yet"

}  // namespace

std::size_t worker_count() {
    if (g_workers == 0) g_workers = detect_workers();
    return g_workers;
}

void set_worker_count(std::size_t n) {
    g_workers = n ? n : detect_workers();
}

void parallel_for(std::size_t n_jobs, const std::function<void(std::size_t)>& body) {
    if (n_jobs == 0) return;
    std::size_t workers = worker_count();
    if (workers > n_jobs) workers = n_jobs;
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_jobs; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto run = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n_jobs) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(run);
    run();
    for (auto& th : pool) th.join();

    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nflab
