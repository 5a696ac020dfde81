// Copyright 2026 klce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace klce {

// Tiny persistent worker pool for data-parallel loops. Work items always
// write disjoint outputs, so results are bit-identical for any worker count.
class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    int workers() const { return static_cast<int>(threads_.size()) + 1; }

    // Runs f(i) for i in [0, n), partitioned into contiguous chunks.
    template <typename F>
    void for_each(int n, F&& f) {
        const int w = workers();
        if (n <= 1 || w <= 1) {
            for (int i = 0; i < n; ++i) f(i);
            return;
        }
        const int chunks = std::min(n, w);
        std::atomic<int> remaining{chunks - 1};
        {
            std::lock_guard<std::mutex> lock(mu_);
            for (int c = 1; c < chunks; ++c) {
                const int lo = static_cast<int>(static_cast<long long>(n) * c / chunks);
                const int hi = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
                tasks_.emplace_back([&f, lo, hi, &remaining, this] {
                    for (int i = lo; i < hi; ++i) f(i);
                    if (remaining.fetch_sub(1) == 1) {
                        std::lock_guard<std::mutex> lk(mu_);
                        done_.notify_all();
                    }
                });
            }
            work_.notify_all();
        }
        const int hi0 = static_cast<int>(static_cast<long long>(n) / chunks);
        for (int i = 0; i < hi0; ++i) f(i);
        std::unique_lock<std::mutex> lock(mu_);
        done_.wait(lock, [&] { return remaining.load() == 0; });
    }

private:
    ThreadPool() {
        const unsigned hw = std::thread::hardware_concurrency();
        const int extra = hw > 1 ? static_cast<int>(std::min(hw, 8u)) - 1 : 0;
        for (int i = 0; i < extra; ++i)
            threads_.emplace_back([this] { worker_loop(); });
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lock(mu_);
            stop_ = true;
            work_.notify_all();
        }
        for (auto& t : threads_) t.join();
    }

    void worker_loop() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock<std::mutex> lock(mu_);
                work_.wait(lock, [&] { return stop_ || !tasks_.empty(); });
                if (stop_ && tasks_.empty()) return;
                task = std::move(tasks_.back());
                tasks_.pop_back();
            }
            task();
        }
    }

    std::vector<std::thread> threads_;
    std::vector<std::function<void()>> tasks_;
    std::mutex mu_;
    std::condition_variable work_, done_;
    bool stop_ = false;
};

template <typename F>
void parallel_for(int n, F&& f) {
    ThreadPool::instance().for_each(n, std::forward<F>(f));
}

} // namespace klce
