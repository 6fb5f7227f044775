#include "chunksr/threadpool.hpp"

#include <atomic>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace chunksr {

struct ThreadPool::Impl {
    std::mutex mu;
    std::condition_variable cv_work;
    std::condition_variable cv_done;
    std::vector<std::thread> workers;
    const std::function<void(size_t)>* fn = nullptr;
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    size_t count = 0;
    size_t generation = 0;
    int busy = 0;
    int target_threads = 1;
    bool stop = false;

    void run_items(const std::function<void(size_t)>& f) {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= count) break;
            try {
                f(i);
            } catch (...) {
                std::unique_lock<std::mutex> lk(mu);
                if (!error) error = std::current_exception();
                next.store(count);  // stop handing out work
                break;
            }
        }
    }

    void worker_loop() {
        size_t seen = 0;
        for (;;) {
            const std::function<void(size_t)>* f;
            {
                std::unique_lock<std::mutex> lk(mu);
                cv_work.wait(lk, [&] { return stop || generation != seen; });
                if (stop) return;
                seen = generation;
                f = fn;
                ++busy;
            }
            run_items(*f);
            {
                std::unique_lock<std::mutex> lk(mu);
                if (--busy == 0) cv_done.notify_all();
            }
        }
    }

    void resize(int n) {
        std::unique_lock<std::mutex> lk(mu);
        target_threads = n;
        const int want = n - 1;  // caller participates
        while (static_cast<int>(workers.size()) < want) {
            workers.emplace_back([this] { worker_loop(); });
        }
        // extra workers stay parked; they only cost an idle thread
    }

    void shutdown() {
        {
            std::unique_lock<std::mutex> lk(mu);
            stop = true;
        }
        cv_work.notify_all();
        for (auto& t : workers) t.join();
        workers.clear();
    }
};

ThreadPool::ThreadPool() : impl_(new Impl) {}

ThreadPool::~ThreadPool() {
    impl_->shutdown();
    delete impl_;
}

ThreadPool& ThreadPool::instance() {
    static ThreadPool pool;
    return pool;
}

void ThreadPool::set_threads(int n) {
    if (n < 1) n = 1;
    if (n > 64) n = 64;
    impl_->resize(n);
}

int ThreadPool::threads() const { return impl_->target_threads; }

void ThreadPool::parallel_for(size_t count,
                              const std::function<void(size_t)>& fn) {
    if (count == 0) return;
    const int nthreads = impl_->target_threads;
    if (nthreads <= 1 || count == 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    {
        std::unique_lock<std::mutex> lk(impl_->mu);
        impl_->fn = &fn;
        impl_->count = count;
        impl_->next.store(0);
        impl_->error = nullptr;
        ++impl_->generation;
    }
    impl_->cv_work.notify_all();
    impl_->run_items(fn);
    std::exception_ptr err;
    {
        std::unique_lock<std::mutex> lk(impl_->mu);
        impl_->cv_done.wait(lk, [&] { return impl_->busy == 0; });
        err = impl_->error;
    }
    if (err) std::rethrow_exception(err);
}

}  // namespace chunksr
