#pragma once

#include <condition_variable>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace speckern
{

/// Fixed set of workers that split an index range into contiguous chunks.
/// The calling thread runs chunk 0.
class ThreadPool
{
public:
    using Task = std::function<void(int begin, int end, int worker)>;

    explicit ThreadPool(int threads = 1);
    ~ThreadPool();
    ThreadPool(const ThreadPool &) = delete;
    ThreadPool &operator=(const ThreadPool &) = delete;

    int size() const { return static_cast<int>(m_workers.size()) + 1; }

    /// Runs fn over [0, n); rethrows the first exception raised by any chunk.
    void parallel_for(int n, const Task &fn);

private:
    void worker_loop(int id);

    std::vector<std::thread> m_workers;
    std::mutex m_mutex;
    std::condition_variable m_start;
    std::condition_variable m_done;
    const Task *m_task = nullptr;
    int m_n = 0;
    int m_chunks = 0;
    unsigned long m_generation = 0;
    int m_pending = 0;
    bool m_stop = false;
    std::exception_ptr m_error;
};

/// Explicit value if given, else SPECKERN_THREADS, else 1. Throws ConfigError
/// for non-positive or malformed values.
int resolve_thread_count(std::optional<int> requested);

} // namespace speckern
