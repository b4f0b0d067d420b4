#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace exakit {

/// Logical P x Q rank grid with NB x NB blocks dealt out cyclically.
/// Ranks are numbered column-major: rank = p + q * P.
class ProcessGrid {
public:
    ProcessGrid(std::int64_t p, std::int64_t q, std::int64_t nb);

    std::int64_t p() const { return p_; }
    std::int64_t q() const { return q_; }
    std::int64_t nb() const { return nb_; }
    std::int64_t size() const { return p_ * q_; }

    std::int64_t rank_of(std::int64_t prow, std::int64_t pcol) const { return prow + pcol * p_; }
    std::int64_t row_of_rank(std::int64_t rank) const { return rank % p_; }
    std::int64_t col_of_rank(std::int64_t rank) const { return rank / p_; }

    /// Grid coordinate owning global row (or column) index `g` along a
    /// dimension with `procs` ranks.
    std::int64_t owner_coord(std::int64_t g, std::int64_t procs) const { return (g / nb_) % procs; }
    /// Local index of global index `g` on its owner.
    std::int64_t local_index(std::int64_t g, std::int64_t procs) const {
        return (g / nb_) / procs * nb_ + g % nb_;
    }
    /// Global index of local index `l` on grid coordinate `coord`.
    std::int64_t global_index(std::int64_t l, std::int64_t coord, std::int64_t procs) const {
        return ((l / nb_) * procs + coord) * nb_ + l % nb_;
    }
    /// Number of indices of a length-n dimension owned by `coord` (numroc).
    std::int64_t local_extent(std::int64_t n, std::int64_t coord, std::int64_t procs) const;

    friend bool operator==(const ProcessGrid&, const ProcessGrid&) = default;

private:
    std::int64_t p_;
    std::int64_t q_;
    std::int64_t nb_;
};

struct Ownership {
    std::int64_t p = 0;
    std::int64_t q = 0;
    std::int64_t li = 0;
    std::int64_t lj = 0;
    friend bool operator==(const Ownership&, const Ownership&) = default;
};

/// Owner and local position of global entry (i, j) of an n x n matrix.
/// Throws ContractViolation when i or j is outside [0, n).
Ownership owner(std::int64_t i, std::int64_t j, const ProcessGrid& grid, std::int64_t n);

enum class PrecisionMode { HPL64, MXP };

std::string to_string(PrecisionMode m);

struct BenchmarkConfig {
    std::int64_t n = 0;
    std::int64_t nb = 0;
    std::int64_t p = 1;
    std::int64_t q = 1;
    std::int64_t nodes = 1;
    std::int64_t ppn = 1;
    PrecisionMode mode = PrecisionMode::HPL64;
    int lookahead = 1;
};

struct ConfigCheck {
    std::vector<std::string> violations;
    std::int64_t panels = 0;
    bool ok() const { return violations.empty(); }
};

/// Checks every constraint independently and reports each violation.
ConfigCheck validate_config(const BenchmarkConfig& cfg);

}  // namespace exakit
