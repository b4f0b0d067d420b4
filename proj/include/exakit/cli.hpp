#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace exakit::cli {

inline constexpr const char* kToolVersion = "0.3.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;      ///< bad flags, config or infeasible request
inline constexpr int kExitNumerical = 2;  ///< residual, convergence or regression check failed

/// Runs one invocation. `args` excludes the program name, e.g.
/// {"hpl", "--config", "desk.cfg", "--out", "run1"}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// `key=start:stop:count` or `key=start:stop:count:log`.
struct Sweep {
    std::string key;
    double start = 0.0;
    double stop = 0.0;
    int count = 0;
    bool log = false;
    std::vector<double> values() const;
};
Sweep parse_sweep(const std::string& text);

}  // namespace exakit::cli
