#pragma once

#include <stdexcept>
#include <string>

namespace nph {

// An instance whose feasible set is empty (e.g. a liquidity floor above the
// whole wealth, or capacity bounds that cannot hold one unit of mass).
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solve that hit its iteration cap before the convergence test.
struct NotConvergedError : std::runtime_error {
  explicit NotConvergedError(const std::string& what) : std::runtime_error(what) {}
};

// A malformed or inconsistent run configuration (maps to exit code 2).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nph
