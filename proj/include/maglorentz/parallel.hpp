//---------------------------------------------------------------------------//
//! \file maglorentz/parallel.hpp
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mlg
{
//---------------------------------------------------------------------------//
/*!
 * Call body(i) for every i in [0, n) using up to `workers` threads.
 *
 * Work items are claimed dynamically, so results must be written to
 * per-index slots; any reduction happens afterwards in index order, which
 * keeps outputs independent of the worker count. The first exception thrown
 * by a work item is rethrown on the calling thread.
 */
template<class F>
void parallel_for(std::size_t n, unsigned workers, F&& body)
{
    workers = std::max(1u, workers);
    if (workers == 1 || n <= 1)
    {
        for (std::size_t i = 0; i < n; ++i)
        {
            body(i);
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++)
        {
            try
            {
                body(i);
            }
            catch (...)
            {
                std::lock_guard lock(error_mutex);
                if (!error)
                {
                    error = std::current_exception();
                }
                next = n;
            }
        }
    };

    std::vector<std::thread> pool;
    auto extra = std::min<std::size_t>(workers, n) - 1;
    pool.reserve(extra);
    for (std::size_t w = 0; w < extra; ++w)
    {
        pool.emplace_back(run);
    }
    run();
    for (auto& t : pool)
    {
        t.join();
    }
    if (error)
    {
        std::rethrow_exception(error);
    }
}

}  // namespace mlg
