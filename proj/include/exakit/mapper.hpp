#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "exakit/topology.hpp"

namespace exakit {

enum class MapMode { HPL, MXP };
std::string to_string(MapMode m);
MapMode parse_map_mode(const std::string& s);

enum class MemoryKind { DDR, HBM };

struct MemoryBinding {
    MemoryKind kind = MemoryKind::DDR;
    int domain = 0;
    friend bool operator==(const MemoryBinding&, const MemoryBinding&) = default;
};

struct RankBinding {
    int rank = 0;
    int socket = 0;
    int core_first = 0;  ///< inclusive, global core numbering socket * cores_per_socket + i
    int core_last = 0;   ///< inclusive
    std::vector<int> gpu_ids;
    int nic_primary = 0;
    std::vector<int> nic_bcast;
    MemoryBinding bulk;
    MemoryBinding staging;
    friend bool operator==(const RankBinding&, const RankBinding&) = default;
};

struct BindingPlan {
    MapMode mode = MapMode::HPL;
    int ppn = 0;
    std::vector<RankBinding> ranks;
    friend bool operator==(const BindingPlan&, const BindingPlan&) = default;
};

class InfeasiblePlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// GPUs owned by one rank: 1 for HPL, 3 for MXP.
int gpus_per_rank(MapMode mode);

/// Ranks are split evenly across sockets in rank order. Within a socket
/// GPUs go out in id order and cores are partitioned into equal contiguous
/// ranges (remainder cores stay unassigned). NICs follow the phase_specific
/// policy: SWAP on the socket's first NIC, BCAST on the next three.
/// Throws InfeasiblePlanError naming the violated constraint.
BindingPlan plan_bindings(const NodeTopology& topo, int ppn, MapMode mode);

struct PlanViolation {
    int rank = 0;
    std::string kind;
    std::string detail;
};

/// Pure check; an empty list means the plan is valid. Violation kinds:
/// "cross-socket GPU", "cross-socket NIC", "cross-socket core range",
/// "cross-socket memory", "GPU double-assignment", "NIC role conflict",
/// "core-range overlap", "unknown device".
std::vector<PlanViolation> validate_plan(const BindingPlan& plan, const NodeTopology& topo);

enum class PlanFormat { Human, Directives, Json };
PlanFormat parse_plan_format(const std::string& s);

/// Directives format, version 1: a header line `# exakit-directives v1`
/// followed by one line per rank:
///   rank=<r> cpus=<first>-<last> membind=<ddr domain> staging=<hbm domain>
///   gpus=<id,...> nic_pref=<id> nic_bcast=<id,...>
/// (single line, fields separated by one space, lists comma-separated).
std::string render_plan(const BindingPlan& plan, PlanFormat format);

/// Inverse of render_plan(plan, Json).
BindingPlan parse_plan_json(const std::string& text);

}  // namespace exakit
