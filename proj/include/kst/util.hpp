#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <exception>
#include <mutex>
#include <span>
#include <string_view>
#include <thread>
#include <type_traits>
#include <vector>

namespace kst {

/// FNV-1a, used for cache provenance stamps.
class Hasher {
 public:
  Hasher& bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 1099511628211ULL;
    }
    return *this;
  }
  template <class T>
    requires std::is_arithmetic_v<T>
  Hasher& add(T value) {
    return bytes(&value, sizeof(T));
  }
  template <class T>
    requires std::is_arithmetic_v<T>
  Hasher& add(std::span<const T> values) {
    return bytes(values.data(), values.size_bytes());
  }
  Hasher& add(std::string_view s) { return bytes(s.data(), s.size()); }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 1469598103934665603ULL;
};

/// Runs body(i) for i in [0, count) on up to hardware_concurrency threads.
/// Work items must be independent; the first exception is rethrown.
template <class Body>
void parallel_for(std::size_t count, Body&& body) {
  const std::size_t workers =
      std::min<std::size_t>(count, std::max(1u, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace kst
