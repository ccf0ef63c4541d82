#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace flowsieve {

// Global thread cap set by the CLI's --threads flag. 0 means use the
// hardware count. Every parallel_for result is written per-index, so output
// is identical for any cap value.
inline unsigned& thread_cap() {
    static unsigned cap = 0;
    return cap;
}

inline void set_thread_cap(unsigned n) { thread_cap() = n; }

inline unsigned effective_threads(size_t work_items) {
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    unsigned cap = thread_cap();
    unsigned t = (cap == 0) ? hw : (cap < hw ? cap : hw);
    if (work_items < t) t = static_cast<unsigned>(work_items);
    return t == 0 ? 1 : t;
}

// Runs fn(i) for i in [0, n). Work is pulled from a shared counter; fn must
// only write to slots owned by its index.
template <class Fn>
void parallel_for(size_t n, Fn&& fn) {
    const unsigned threads = effective_threads(n);
    if (threads <= 1) {
        for (size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                next.store(n, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace flowsieve
