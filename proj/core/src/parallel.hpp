#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kslight::detail {

// Static round-robin fan-out: task t runs on worker t % workers. The first
// exception (lowest task index) is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t tasks, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, tasks));
    if (workers == 1) {
        for (std::size_t t = 0; t < tasks; ++t) fn(t);
        return;
    }
    std::mutex mutex;
    std::exception_ptr error;
    std::size_t error_task = tasks;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t t = w; t < tasks; t += workers) {
                try {
                    fn(t);
                } catch (...) {
                    std::lock_guard lock(mutex);
                    if (t < error_task) {
                        error_task = t;
                        error = std::current_exception();
                    }
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace kslight::detail
