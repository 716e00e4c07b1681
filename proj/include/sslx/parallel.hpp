#ifndef SSLX_PARALLEL_HPP
#define SSLX_PARALLEL_HPP

#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace sslx {

// Runs fn(i) for i in [0, count). Work items must be independent; callers
// keep determinism by writing into pre-allocated slots indexed by i, so the
// result does not depend on the thread count.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::exception_ptr error;
    std::mutex error_mutex;
    const int workers = std::min(threads, count);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < count; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace sslx

#endif
