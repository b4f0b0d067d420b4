#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exakit/topology.hpp"

namespace exakit {

/// Alpha-beta network with a two-level (group) latency abstraction.
struct NetworkModel {
    double latency_alpha = 2e-6;     ///< s per message
    double bandwidth_beta = 25e9;    ///< bytes/s per NIC
    int nics_per_node = 8;
    int sockets = 2;                 ///< NICs are split evenly across sockets
    double intra_group = 1.0;        ///< latency multiplier within a group
    double inter_group = 1.0;        ///< latency multiplier across groups
    std::int64_t ranks_per_group = 0;  ///< 0 puts every rank in one group

    void validate() const;
    double latency(std::int64_t src, std::int64_t dst) const;
    double message_time(std::int64_t src, std::int64_t dst, double bytes) const;
    NodeTopology node() const;
};

enum class FaultScope { Rank, Link };

/// A rank fault pushes every send the rank starts inside the window by
/// extra_delay and adds extra_delay to every message arriving at it inside
/// the window. A link fault adds extra_delay to messages on the (rank, peer)
/// link, either direction, whose transfer starts inside the window.
struct FaultEvent {
    double start_time = 0.0;
    double duration = 0.0;
    FaultScope scope = FaultScope::Rank;
    std::int64_t rank = 0;
    std::int64_t peer = -1;
    double extra_delay = 0.0;

    bool active(double t) const { return t >= start_time && t < start_time + duration; }
    friend bool operator==(const FaultEvent&, const FaultEvent&) = default;
};

struct FaultSchedule {
    std::vector<FaultEvent> events;
    friend bool operator==(const FaultSchedule&, const FaultSchedule&) = default;
};

enum class ExchangeStrategy { AllCollective, Hybrid };
enum class BcastAlgo { Ring, BinomialTree };
enum class NicPolicy { PhaseSpecific, RoundRobin };
enum class Phase { Swap, Bcast };

std::string to_string(ExchangeStrategy s);
std::string to_string(BcastAlgo a);
std::string to_string(NicPolicy p);

struct SimResult {
    double makespan = 0.0;
    std::vector<double> completion;
    std::vector<double> stall;
    std::uint64_t messages = 0;
    std::uint64_t delivered = 0;
    std::optional<std::string> deadlock;

    std::int64_t delayed_ranks() const;
    friend bool operator==(const SimResult&, const SimResult&) = default;
};

/// One step of a rank's communication program. Sends occupy the sender for
/// the whole transfer; receives block until the matching message arrives.
struct CommOp {
    enum class Kind { Send, Recv };
    Kind kind = Kind::Send;
    std::int64_t peer = 0;
    double bytes = 0.0;
    std::int64_t tag = 0;
};
using CommProgram = std::vector<CommOp>;

/// Event-driven execution of per-rank programs. Events are ordered by
/// (time, insertion sequence), so results are bit-reproducible. If the
/// event queue drains with ranks still blocked, `deadlock` names them.
/// `stall` is left zero; see simulate_panel_exchange.
SimResult run_programs(const std::vector<CommProgram>& programs, const NetworkModel& net,
                       const FaultSchedule& faults = {});

SimResult simulate_bcast(BcastAlgo algo, std::int64_t q, double msg_bytes, const NetworkModel& net);

/// Exchange among the P ranks of one process column. `columns` panel columns
/// are exchanged in sequence: AllCollective uses a dissemination-style
/// recursive-doubling allreduce for each; Hybrid uses a forwarding chain
/// 0 -> 1 -> ... -> P-1 for the first column and the allreduce afterwards.
/// Stall per rank is the faulted completion minus the fault-free completion.
SimResult simulate_panel_exchange(ExchangeStrategy strategy, std::int64_t p, double panel_bytes,
                                  const NetworkModel& net, const FaultSchedule& faults, std::int64_t columns = 1);

/// NIC ids used by a rank on `socket` for one phase.
std::vector<int> assign_nics(Phase phase, const NodeTopology& node, NicPolicy policy, int socket = 0);

struct ContentionResult {
    double t_swap = 0.0;
    double t_bcast = 0.0;
};

/// Fluid fair-share model: each phase is striped evenly over its NIC set,
/// concurrent flows on a NIC split its bandwidth equally, and a phase
/// finishes at alpha plus the latest completion among its stripes.
ContentionResult simulate_phase_contention(double swap_bytes, double bcast_bytes, NicPolicy policy,
                                           const NetworkModel& net);

/// Poisson arrivals on [0, horizon) with exponential extra_delay of mean
/// `mean_delay`; each event is a rank fault on a uniformly drawn rank whose
/// window lasts as long as its delay.
FaultSchedule generate_faults(double rate, double mean_delay, double horizon, std::uint64_t seed,
                              std::int64_t ranks);

}  // namespace exakit
