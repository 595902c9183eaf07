#include "muskat/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace muskat {

int worker_count() {
  if (const char* env = std::getenv("MUSKAT_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body, int workers) {
  if (count == 0) return;
  const std::size_t w = std::min<std::size_t>(count, static_cast<std::size_t>(workers > 0 ? workers : worker_count()));
  if (w <= 1) {
    body(0, count);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(w - 1);
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto run = [&](std::size_t b, std::size_t e) {
    try {
      body(b, e);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };
  for (std::size_t k = 1; k < w; ++k) threads.emplace_back(run, count * k / w, count * (k + 1) / w);
  run(0, count / w);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace muskat
