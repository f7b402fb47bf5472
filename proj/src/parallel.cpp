#include "histoconv/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

namespace histoconv {

namespace {

int env_threads() {
  if (const char* s = std::getenv("HISTOCONV_THREADS")) {
    const int v = std::atoi(s);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::atomic<int> g_max_threads{0};

thread_local bool t_in_worker = false;

// Lazily spawned pool. Workers with index >= (job worker budget - 1) sit a
// job out, so lowering the thread cap takes effect without joining threads.
class Pool {
 public:
  static Pool& instance() {
    static Pool p;
    return p;
  }

  void run(std::int64_t n, std::int64_t grain,
           const std::function<void(std::int64_t, std::int64_t)>& body, int workers) {
    ensure_threads(workers - 1);
    const std::int64_t chunk =
        std::max<std::int64_t>(grain, (n + workers * 4 - 1) / (workers * 4));
    const std::int64_t nchunks = (n + chunk - 1) / chunk;

    {
      std::lock_guard lk(m_);
      job_.body = &body;
      job_.n = n;
      job_.chunk = chunk;
      job_.nchunks = nchunks;
      job_.workers = workers;
      job_.next.store(0, std::memory_order_relaxed);
      job_.done = 0;
      job_.error = nullptr;
      ++job_id_;
      cv_.notify_all();
    }

    work_on_current_job();

    std::exception_ptr error;
    {
      std::unique_lock lk(m_);
      done_cv_.wait(lk, [&] { return job_.done == job_.nchunks; });
      job_.body = nullptr;
      error = std::exchange(job_.error, nullptr);
    }
    if (error) std::rethrow_exception(error);
  }

 private:
  struct Job {
    const std::function<void(std::int64_t, std::int64_t)>* body = nullptr;
    std::int64_t n = 0, chunk = 1, nchunks = 0;
    int workers = 1;
    std::atomic<std::int64_t> next{0};
    std::int64_t done = 0;
    std::exception_ptr error;
  };

  ~Pool() {
    {
      std::lock_guard lk(m_);
      stop_ = true;
      cv_.notify_all();
    }
    for (auto& t : threads_) t.join();
  }

  void ensure_threads(int count) {
    std::lock_guard lk(m_);
    while (static_cast<int>(threads_.size()) < count) {
      const int index = static_cast<int>(threads_.size());
      threads_.emplace_back([this, index] { worker_main(index); });
    }
  }

  void work_on_current_job() {
    for (;;) {
      const std::int64_t c = job_.next.fetch_add(1, std::memory_order_relaxed);
      if (c >= job_.nchunks) return;
      const std::int64_t begin = c * job_.chunk;
      const std::int64_t end = std::min(job_.n, begin + job_.chunk);
      std::exception_ptr error;
      try {
        (*job_.body)(begin, end);
      } catch (...) {
        error = std::current_exception();
      }
      std::lock_guard lk(m_);
      if (error && !job_.error) job_.error = error;
      if (++job_.done == job_.nchunks) done_cv_.notify_all();
    }
  }

  void worker_main(int index) {
    t_in_worker = true;
    std::uint64_t seen = 0;
    for (;;) {
      {
        std::unique_lock lk(m_);
        cv_.wait(lk, [&] { return stop_ || (job_id_ != seen && job_.body != nullptr); });
        if (stop_) return;
        seen = job_id_;
        if (index >= job_.workers - 1) continue;  // over the cap for this job
      }
      work_on_current_job();
    }
  }

  std::mutex m_;
  std::condition_variable cv_, done_cv_;
  std::vector<std::thread> threads_;
  Job job_;
  std::uint64_t job_id_ = 0;
  bool stop_ = false;
};

}  // namespace

int max_threads() {
  int v = g_max_threads.load(std::memory_order_relaxed);
  if (v == 0) {
    v = env_threads();
    g_max_threads.store(v, std::memory_order_relaxed);
  }
  return v;
}

void set_max_threads(int n) { g_max_threads.store(n < 1 ? 1 : n, std::memory_order_relaxed); }

namespace detail {

void pool_run(std::int64_t n, std::int64_t grain,
              const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (t_in_worker) {  // no nested jobs; run inline
    body(0, n);
    return;
  }
  Pool::instance().run(n, grain, body, max_threads());
}

}  // namespace detail

}  // namespace histoconv
