#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vid2ode {

// Runtime failures carry an exit-code category: 1 = runtime, 2 = usage/config.
class Error : public std::runtime_error {
 public:
  Error(std::string msg, int exit_code = 1)
      : std::runtime_error(std::move(msg)), exit_code_(exit_code) {}
  int exit_code() const { return exit_code_; }

 private:
  int exit_code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string msg) : Error(std::move(msg), 2) {}
};

// Global worker count for parallel_for. 0 means "use hardware_concurrency".
// Overridable via --threads or the VID2ODE_THREADS environment variable.
void set_thread_count(int n);
int thread_count();

// Chunked parallel loop over [0, n). The function receives the loop index.
// Workers own disjoint index ranges; callers that accumulate must do so into
// per-index slots and reduce afterwards in index order so results do not
// depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

bool is_finite(double x);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Formats a double with enough digits to round-trip (shortest such form).
std::string format_double(double x);

}  // namespace vid2ode
