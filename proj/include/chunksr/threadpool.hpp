#pragma once

#include <cstddef>
#include <functional>

namespace chunksr {

// Minimal persistent worker pool. parallel_for runs fn(i) for i in
// [0, count); each work item is self-contained, so the outcome is identical
// for any thread count (callers keep reduction order fixed themselves).
class ThreadPool {
public:
    static ThreadPool& instance();

    void set_threads(int n);  // clamps to [1, 64]
    int threads() const;

    void parallel_for(size_t count, const std::function<void(size_t)>& fn);

private:
    ThreadPool();
    ~ThreadPool();
    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    struct Impl;
    Impl* impl_;
};

}  // namespace chunksr
