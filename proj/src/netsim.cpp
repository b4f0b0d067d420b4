#include "exakit/netsim.hpp"

#include <algorithm>
#include <bit>
#include <deque>
#include <map>
#include <queue>
#include <tuple>

#include "exakit/kvconfig.hpp"
#include "exakit/matrix.hpp"
#include "exakit/rng.hpp"

namespace exakit {

void NetworkModel::validate() const {
    if (!(latency_alpha >= 0.0)) throw ContractViolation("network: latency_alpha must be >= 0");
    if (!(bandwidth_beta > 0.0)) throw ContractViolation("network: bandwidth_beta must be > 0");
    if (nics_per_node < 1) throw ContractViolation("network: nics_per_node must be >= 1");
    if (sockets < 1 || nics_per_node % sockets != 0) {
        throw ContractViolation("network: nics_per_node must split evenly across sockets");
    }
    if (!(intra_group > 0.0) || !(inter_group > 0.0)) {
        throw ContractViolation("network: latency multipliers must be > 0");
    }
    if (ranks_per_group < 0) throw ContractViolation("network: ranks_per_group must be >= 0");
}

double NetworkModel::latency(std::int64_t src, std::int64_t dst) const {
    const bool same = ranks_per_group == 0 || src / ranks_per_group == dst / ranks_per_group;
    return latency_alpha * (same ? intra_group : inter_group);
}

double NetworkModel::message_time(std::int64_t src, std::int64_t dst, double bytes) const {
    return latency(src, dst) + bytes / bandwidth_beta;
}

NodeTopology NetworkModel::node() const {
    validate();
    NodeTopology t;
    t.sockets = sockets;
    t.cores_per_socket = 1;
    const int per = nics_per_node / sockets;
    for (int id = 0; id < nics_per_node; ++id) t.nics.push_back({id, id / per});
    t.memory.assign(static_cast<std::size_t>(sockets), MemoryDomains{});
    return t;
}

std::string to_string(ExchangeStrategy s) { return s == ExchangeStrategy::Hybrid ? "hybrid" : "allcollective"; }
std::string to_string(BcastAlgo a) { return a == BcastAlgo::Ring ? "ring" : "binomial_tree"; }
std::string to_string(NicPolicy p) { return p == NicPolicy::PhaseSpecific ? "phase_specific" : "round_robin"; }

std::int64_t SimResult::delayed_ranks() const {
    return std::count_if(stall.begin(), stall.end(), [](double s) { return s > 0.0; });
}

namespace {

struct RankState {
    std::size_t pc = 0;
    double time = 0.0;
    bool blocked = false;
    bool done = false;
};

using MailKey = std::tuple<std::int64_t, std::int64_t, std::int64_t>;  // src, dst, tag

}  // namespace

SimResult run_programs(const std::vector<CommProgram>& programs, const NetworkModel& net,
                       const FaultSchedule& faults) {
    net.validate();
    const auto ranks = static_cast<std::int64_t>(programs.size());
    for (const CommProgram& prog : programs) {
        for (const CommOp& op : prog) {
            if (op.peer < 0 || op.peer >= ranks) throw ContractViolation("run_programs: peer out of range");
            if (!(op.bytes >= 0.0)) throw ContractViolation("run_programs: negative message size");
        }
    }

    std::vector<RankState> st(programs.size());
    std::map<MailKey, std::deque<double>> mailbox;
    using Event = std::tuple<double, std::uint64_t, std::int64_t>;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue;
    std::uint64_t seq = 0;
    SimResult res;

    for (std::int64_t r = 0; r < ranks; ++r) queue.emplace(0.0, seq++, r);

    while (!queue.empty()) {
        const auto [t, s, r] = queue.top();
        queue.pop();
        RankState& me = st[r];
        me.time = t;
        const CommProgram& prog = programs[r];
        while (true) {
            if (me.pc == prog.size()) {
                me.done = true;
                break;
            }
            const CommOp& op = prog[me.pc];
            if (op.kind == CommOp::Kind::Send) {
                double start = me.time;
                for (const FaultEvent& f : faults.events) {
                    if (f.scope == FaultScope::Rank && f.rank == r && f.active(start)) start += f.extra_delay;
                }
                const double busy = net.message_time(r, op.peer, op.bytes);
                double arrival = start + busy;
                for (const FaultEvent& f : faults.events) {
                    const bool on_link = (f.rank == r && f.peer == op.peer) || (f.rank == op.peer && f.peer == r);
                    if (f.scope == FaultScope::Link && on_link && f.active(start)) arrival += f.extra_delay;
                }
                for (const FaultEvent& f : faults.events) {
                    if (f.scope == FaultScope::Rank && f.rank == op.peer && f.active(arrival)) arrival += f.extra_delay;
                }
                ++res.messages;
                RankState& dst = st[op.peer];
                const CommProgram& dprog = programs[op.peer];
                const bool waiting = dst.blocked && dprog[dst.pc].peer == r && dprog[dst.pc].tag == op.tag;
                if (waiting) {
                    dst.blocked = false;
                    ++dst.pc;
                    ++res.delivered;
                    queue.emplace(std::max(dst.time, arrival), seq++, op.peer);
                } else {
                    mailbox[{r, op.peer, op.tag}].push_back(arrival);
                }
                ++me.pc;
                me.time = start + busy;
                queue.emplace(me.time, seq++, r);
                break;
            }
            auto it = mailbox.find({op.peer, r, op.tag});
            if (it == mailbox.end() || it->second.empty()) {
                me.blocked = true;
                break;
            }
            const double arrival = it->second.front();
            it->second.pop_front();
            ++res.delivered;
            ++me.pc;
            if (arrival > me.time) {
                me.time = arrival;
                queue.emplace(me.time, seq++, r);
                break;
            }
        }
    }

    res.completion.resize(programs.size());
    res.stall.assign(programs.size(), 0.0);
    std::string stuck;
    for (std::int64_t r = 0; r < ranks; ++r) {
        res.completion[r] = st[r].time;
        res.makespan = std::max(res.makespan, st[r].time);
        if (!st[r].done) {
            const CommOp& op = programs[r][st[r].pc];
            stuck += (stuck.empty() ? "" : "; ") + std::string("rank ") + std::to_string(r) +
                     " waits on rank " + std::to_string(op.peer) + " tag " + std::to_string(op.tag);
        }
    }
    if (!stuck.empty()) {
        res.deadlock = "deadlock: " + stuck;
    } else if (res.delivered != res.messages) {
        res.deadlock = "undelivered messages: " + std::to_string(res.messages - res.delivered);
    }
    return res;
}

namespace {

void append_allreduce(std::vector<CommProgram>& progs, double bytes, std::int64_t column) {
    const auto p = static_cast<std::int64_t>(progs.size());
    const int rounds = std::bit_width(static_cast<std::uint64_t>(p - 1));
    for (int s = 0; s < rounds; ++s) {
        const std::int64_t dist = std::int64_t{1} << s;
        const std::int64_t tag = column * 64 + s;
        for (std::int64_t i = 0; i < p; ++i) {
            progs[i].push_back({CommOp::Kind::Send, (i + dist) % p, bytes, tag});
            progs[i].push_back({CommOp::Kind::Recv, ((i - dist) % p + p) % p, bytes, tag});
        }
    }
}

void append_chain(std::vector<CommProgram>& progs, double bytes, std::int64_t column) {
    const auto p = static_cast<std::int64_t>(progs.size());
    const std::int64_t tag = column * 64;
    for (std::int64_t i = 0; i < p; ++i) {
        if (i > 0) progs[i].push_back({CommOp::Kind::Recv, i - 1, bytes, tag});
        if (i + 1 < p) progs[i].push_back({CommOp::Kind::Send, i + 1, bytes, tag});
    }
}

}  // namespace

SimResult simulate_bcast(BcastAlgo algo, std::int64_t q, double msg_bytes, const NetworkModel& net) {
    if (q < 1) throw ContractViolation("simulate_bcast: q must be >= 1");
    std::vector<CommProgram> progs(static_cast<std::size_t>(q));
    if (algo == BcastAlgo::Ring) {
        append_chain(progs, msg_bytes, 0);
    } else {
        for (std::int64_t r = 0; r < q; ++r) {
            std::int64_t mask = 1;
            while (mask < q) {
                if (r & mask) {
                    progs[r].push_back({CommOp::Kind::Recv, r - mask, msg_bytes, 0});
                    break;
                }
                mask <<= 1;
            }
            for (mask >>= 1; mask > 0; mask >>= 1) {
                if (r + mask < q) progs[r].push_back({CommOp::Kind::Send, r + mask, msg_bytes, 0});
            }
        }
    }
    return run_programs(progs, net);
}

SimResult simulate_panel_exchange(ExchangeStrategy strategy, std::int64_t p, double panel_bytes,
                                  const NetworkModel& net, const FaultSchedule& faults, std::int64_t columns) {
    if (p < 1) throw ContractViolation("simulate_panel_exchange: P must be >= 1");
    if (columns < 1) throw ContractViolation("simulate_panel_exchange: columns must be >= 1");
    if (!(panel_bytes >= 0.0)) throw ContractViolation("simulate_panel_exchange: negative panel size");
    for (const FaultEvent& f : faults.events) {
        if (f.rank < 0 || f.rank >= p) throw ContractViolation("simulate_panel_exchange: fault rank out of range");
        if (!(f.start_time >= 0.0) || !(f.duration >= 0.0) || !(f.extra_delay >= 0.0)) {
            throw ContractViolation("simulate_panel_exchange: fault times must be >= 0");
        }
    }
    std::vector<CommProgram> progs(static_cast<std::size_t>(p));
    for (std::int64_t c = 0; c < columns; ++c) {
        if (c == 0 && strategy == ExchangeStrategy::Hybrid) {
            append_chain(progs, panel_bytes, c);
        } else {
            append_allreduce(progs, panel_bytes, c);
        }
    }
    const SimResult clean = run_programs(progs, net);
    SimResult res = run_programs(progs, net, faults);
    for (std::size_t r = 0; r < res.completion.size(); ++r) {
        res.stall[r] = std::max(0.0, res.completion[r] - clean.completion[r]);
    }
    return res;
}

std::vector<int> assign_nics(Phase phase, const NodeTopology& node, NicPolicy policy, int socket) {
    if (policy == NicPolicy::RoundRobin) {
        std::vector<int> all;
        for (const Device& d : node.nics) all.push_back(d.id);
        return all;
    }
    if (socket < 0 || socket >= node.sockets) throw ContractViolation("assign_nics: socket out of range");
    const std::vector<int> local = node.nics_on(socket);
    if (local.size() < 4) {
        throw ConfigError("phase_specific NIC policy needs >= 4 NICs on socket " + std::to_string(socket) +
                          ", found " + std::to_string(local.size()));
    }
    if (phase == Phase::Swap) return {local[0]};
    return {local[1], local[2], local[3]};
}

namespace {

/// Completion of every flow sharing one link under processor sharing.
std::vector<double> fair_share(const std::vector<double>& volumes, double beta) {
    std::vector<std::size_t> order(volumes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return volumes[a] < volumes[b]; });
    std::vector<double> finish(volumes.size(), 0.0);
    double t = 0.0;
    double served = 0.0;
    auto active = static_cast<double>(std::count_if(volumes.begin(), volumes.end(), [](double v) { return v > 0.0; }));
    for (std::size_t idx : order) {
        const double v = volumes[idx];
        if (v <= 0.0) continue;
        t += (v - served) * active / beta;
        served = v;
        finish[idx] = t;
        active -= 1.0;
    }
    return finish;
}

}  // namespace

ContentionResult simulate_phase_contention(double swap_bytes, double bcast_bytes, NicPolicy policy,
                                           const NetworkModel& net) {
    if (!(swap_bytes >= 0.0) || !(bcast_bytes >= 0.0)) {
        throw ContractViolation("simulate_phase_contention: volumes must be >= 0");
    }
    const NodeTopology node = net.node();
    const std::vector<int> swap_set = assign_nics(Phase::Swap, node, policy);
    const std::vector<int> bcast_set = assign_nics(Phase::Bcast, node, policy);

    // Per NIC: [swap stripe, bcast stripe].
    std::map<int, std::vector<double>> load;
    for (int nic : swap_set) load.try_emplace(nic, 2, 0.0).first->second[0] = swap_bytes / swap_set.size();
    for (int nic : bcast_set) load.try_emplace(nic, 2, 0.0).first->second[1] = bcast_bytes / bcast_set.size();

    double swap_end = 0.0;
    double bcast_end = 0.0;
    for (const auto& [nic, vols] : load) {
        const std::vector<double> fin = fair_share(vols, net.bandwidth_beta);
        swap_end = std::max(swap_end, fin[0]);
        bcast_end = std::max(bcast_end, fin[1]);
    }
    ContentionResult out;
    out.t_swap = swap_bytes > 0.0 ? net.latency_alpha + swap_end : 0.0;
    out.t_bcast = bcast_bytes > 0.0 ? net.latency_alpha + bcast_end : 0.0;
    return out;
}

FaultSchedule generate_faults(double rate, double mean_delay, double horizon, std::uint64_t seed,
                              std::int64_t ranks) {
    if (!(rate >= 0.0)) throw ContractViolation("generate_faults: rate must be >= 0");
    if (!(mean_delay > 0.0)) throw ContractViolation("generate_faults: mean_delay must be > 0");
    if (!(horizon >= 0.0)) throw ContractViolation("generate_faults: horizon must be >= 0");
    if (ranks < 1) throw ContractViolation("generate_faults: ranks must be >= 1");
    FaultSchedule out;
    if (rate == 0.0) return out;
    PortableRng rng(seed);
    double t = 0.0;
    while (true) {
        t += rng.exponential(1.0 / rate);
        if (t >= horizon) break;
        FaultEvent e;
        e.start_time = t;
        e.extra_delay = rng.exponential(mean_delay);
        e.duration = e.extra_delay;
        e.scope = FaultScope::Rank;
        e.rank = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(ranks)));
        out.events.push_back(e);
    }
    return out;
}

}  // namespace exakit
