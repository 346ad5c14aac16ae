#pragma once

#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "brimm/rng.hpp"

namespace brimm {

// Runs fn(replicate_index, stream) for every replicate, each on its own
// substream of `master`.  Workers pull disjoint static strides, and results
// must be written into per-replicate slots by the caller, so the outcome is
// identical for every thread count.
template <typename Fn>
void for_each_replicate(std::uint64_t n_replicates, const RngStream& master,
                        int n_threads, Fn&& fn) {
    n_threads = std::max(1, n_threads);
    if (n_threads == 1) {
        for (std::uint64_t r = 0; r < n_replicates; ++r) {
            RngStream stream = master.substream(r);
            fn(r, stream);
        }
        return;
    }
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) {
        workers.emplace_back([&, w]() {
            try {
                for (std::uint64_t r = w; r < n_replicates;
                     r += static_cast<std::uint64_t>(n_threads)) {
                    RngStream stream = master.substream(r);
                    fn(r, stream);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& worker : workers) worker.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace brimm
