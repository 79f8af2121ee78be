#ifndef NPMIX_ERROR_HPP
#define NPMIX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace npmix {

/// Failure categories. Each maps to a process exit code so drivers can
/// distinguish bad input (2) from numeric/convergence trouble (3) from bad
/// configuration (4).
enum class errc {
  parse,            // malformed input file
  layout,           // condition layout inconsistent with the data
  missing_key,      // lookup failed (e.g. gene length absent)
  alignment,        // two inputs do not cover the same ids
  io,               // file not readable/writable
  scale,            // data on the wrong scale for the operation
  degenerate_data,  // input admits no meaningful answer (all-zero, constant)
  empty_component,  // a mixture component lost all posterior mass
  numeric,          // log-space underflow or non-finite intermediate
  singular,         // variance collapsed onto the floor
  infeasible,       // request impossible for the data (m > n)
  selection,        // no candidate model could be fit
  config,           // invalid or contradictory run configuration
};

constexpr int exit_code(errc c) {
  switch (c) {
    case errc::parse:
    case errc::layout:
    case errc::missing_key:
    case errc::alignment:
    case errc::io:
    case errc::scale:
      return 2;
    case errc::config:
      return 4;
    default:
      return 3;
  }
}

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

}  // namespace npmix

#endif
