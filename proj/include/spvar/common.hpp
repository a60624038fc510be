#ifndef SPVAR_COMMON_HPP
#define SPVAR_COMMON_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spvar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Coarse failure classes. The CLI maps them onto exit codes.
enum class ErrorCategory { config, data, numerical, precondition };

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::data: return "data";
    case ErrorCategory::numerical: return "numerical";
    case ErrorCategory::precondition: return "precondition";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& what) { throw Error(c, what); }

/// Maps any integer time or season index onto the 1-based season range 1..S.
constexpr int wrap_season(long long idx, int num_seasons) {
  if (num_seasons < 1) throw std::invalid_argument("wrap_season: num_seasons must be >= 1");
  long long r = (idx - 1) % num_seasons;
  if (r < 0) r += num_seasons;
  return static_cast<int>(r) + 1;
}

}  // namespace spvar

#endif  // SPVAR_COMMON_HPP
