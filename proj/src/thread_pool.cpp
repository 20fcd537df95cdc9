#include "speckern/thread_pool.hpp"

#include "speckern/error.hpp"

#include <cstdlib>
#include <string>

namespace speckern
{

ThreadPool::ThreadPool(int threads)
{
    if (threads < 1)
    {
        throw ConfigError("thread count must be at least 1");
    }
    for (int i = 1; i < threads; ++i)
    {
        m_workers.emplace_back([this, i] { worker_loop(i); });
    }
}

ThreadPool::~ThreadPool()
{
    {
        std::lock_guard lock(m_mutex);
        m_stop = true;
    }
    m_start.notify_all();
    for (auto &t : m_workers)
    {
        t.join();
    }
}

namespace
{

void chunk_bounds(int n, int chunks, int c, int &begin, int &end)
{
    const int base = n / chunks;
    const int extra = n % chunks;
    begin = c * base + (c < extra ? c : extra);
    end = begin + base + (c < extra ? 1 : 0);
}

} // namespace

void ThreadPool::parallel_for(int n, const Task &fn)
{
    if (n <= 0)
    {
        return;
    }
    const int chunks = n < size() ? n : size();
    if (chunks == 1)
    {
        fn(0, n, 0);
        return;
    }
    {
        std::lock_guard lock(m_mutex);
        m_task = &fn;
        m_n = n;
        m_chunks = chunks;
        m_pending = chunks - 1;
        m_error = nullptr;
        ++m_generation;
    }
    m_start.notify_all();

    int begin = 0;
    int end = 0;
    chunk_bounds(n, chunks, 0, begin, end);
    std::exception_ptr local;
    try
    {
        fn(begin, end, 0);
    }
    catch (...)
    {
        local = std::current_exception();
    }

    std::unique_lock lock(m_mutex);
    m_done.wait(lock, [this] { return m_pending == 0; });
    m_task = nullptr;
    if (local)
    {
        std::rethrow_exception(local);
    }
    if (m_error)
    {
        std::rethrow_exception(m_error);
    }
}

void ThreadPool::worker_loop(int id)
{
    unsigned long seen = 0;
    for (;;)
    {
        const Task *task = nullptr;
        int n = 0;
        int chunks = 0;
        {
            std::unique_lock lock(m_mutex);
            m_start.wait(lock, [&] { return m_stop || m_generation != seen; });
            if (m_stop)
            {
                return;
            }
            seen = m_generation;
            task = m_task;
            n = m_n;
            chunks = m_chunks;
        }
        if (id < chunks)
        {
            int begin = 0;
            int end = 0;
            chunk_bounds(n, chunks, id, begin, end);
            try
            {
                (*task)(begin, end, id);
            }
            catch (...)
            {
                std::lock_guard lock(m_mutex);
                if (!m_error)
                {
                    m_error = std::current_exception();
                }
            }
            std::lock_guard lock(m_mutex);
            if (--m_pending == 0)
            {
                m_done.notify_one();
            }
        }
    }
}

int resolve_thread_count(std::optional<int> requested)
{
    if (requested)
    {
        if (*requested < 1)
        {
            throw ConfigError("--threads must be at least 1");
        }
        return *requested;
    }
    if (const char *env = std::getenv("SPECKERN_THREADS"); env && *env)
    {
        char *end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096)
        {
            throw ConfigError("SPECKERN_THREADS must be a positive integer, got '" +
                              std::string(env) + "'");
        }
        return static_cast<int>(v);
    }
    return 1;
}

} // namespace speckern
