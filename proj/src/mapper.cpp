#include "exakit/mapper.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "exakit/matrix.hpp"
#include "exakit/netsim.hpp"

namespace exakit {

std::string to_string(MapMode m) { return m == MapMode::HPL ? "hpl" : "mxp"; }

MapMode parse_map_mode(const std::string& s) {
    if (s == "hpl" || s == "HPL") return MapMode::HPL;
    if (s == "mxp" || s == "MXP") return MapMode::MXP;
    throw ContractViolation("unknown mapping mode '" + s + "' (expected hpl or mxp)");
}

PlanFormat parse_plan_format(const std::string& s) {
    if (s == "human") return PlanFormat::Human;
    if (s == "directives") return PlanFormat::Directives;
    if (s == "json") return PlanFormat::Json;
    throw ContractViolation("unknown plan format '" + s + "' (expected human, directives or json)");
}

int gpus_per_rank(MapMode mode) { return mode == MapMode::HPL ? 1 : 3; }

BindingPlan plan_bindings(const NodeTopology& topo, int ppn, MapMode mode) {
    topo.validate();
    if (ppn < 1) throw InfeasiblePlanError("ppn must be >= 1");
    if (ppn % topo.sockets != 0) {
        throw InfeasiblePlanError("ppn divisible by sockets: ppn=" + std::to_string(ppn) + " is not a multiple of " +
                                  std::to_string(topo.sockets) + " sockets");
    }
    const int need = gpus_per_rank(mode);
    const auto total = static_cast<int>(topo.gpus.size());
    if (need * ppn > total) {
        throw InfeasiblePlanError("GPU demand: " + std::to_string(need * ppn) + " GPUs needed, " +
                                  std::to_string(total) + " available");
    }
    const int per_socket = ppn / topo.sockets;
    const int cores_each = topo.cores_per_socket / per_socket;
    if (cores_each < 1) {
        throw InfeasiblePlanError("core supply: " + std::to_string(per_socket) + " ranks per socket, " +
                                  std::to_string(topo.cores_per_socket) + " cores per socket");
    }

    BindingPlan plan;
    plan.mode = mode;
    plan.ppn = ppn;
    for (int s = 0; s < topo.sockets; ++s) {
        const std::vector<int> gpus = topo.gpus_on(s);
        if (static_cast<int>(gpus.size()) < need * per_socket) {
            throw InfeasiblePlanError("GPU demand on socket " + std::to_string(s) + ": " +
                                      std::to_string(need * per_socket) + " GPUs needed, " +
                                      std::to_string(gpus.size()) + " available");
        }
        std::vector<int> swap;
        std::vector<int> bcast;
        try {
            swap = assign_nics(Phase::Swap, topo, NicPolicy::PhaseSpecific, s);
            bcast = assign_nics(Phase::Bcast, topo, NicPolicy::PhaseSpecific, s);
        } catch (const std::exception& e) {
            throw InfeasiblePlanError(std::string("NIC supply: ") + e.what());
        }
        for (int i = 0; i < per_socket; ++i) {
            RankBinding rb;
            rb.rank = s * per_socket + i;
            rb.socket = s;
            rb.core_first = s * topo.cores_per_socket + i * cores_each;
            rb.core_last = rb.core_first + cores_each - 1;
            rb.gpu_ids.assign(gpus.begin() + i * need, gpus.begin() + (i + 1) * need);
            rb.nic_primary = swap.front();
            rb.nic_bcast = bcast;
            rb.bulk = {MemoryKind::DDR, topo.ddr_domain(s)};
            rb.staging = {MemoryKind::HBM, topo.hbm_domain(s)};
            plan.ranks.push_back(rb);
        }
    }
    return plan;
}

std::vector<PlanViolation> validate_plan(const BindingPlan& plan, const NodeTopology& topo) {
    std::vector<PlanViolation> out;
    auto add = [&](int rank, const char* kind, const std::string& detail) { out.push_back({rank, kind, detail}); };
    const auto ngpu = static_cast<int>(topo.gpus.size());
    const auto nnic = static_cast<int>(topo.nics.size());
    std::map<int, int> gpu_owner;
    std::map<int, std::pair<int, char>> nic_role;  // nic -> (rank, 'p' or 'b')

    for (const RankBinding& rb : plan.ranks) {
        const int s = rb.socket;
        if (s < 0 || s >= topo.sockets) {
            add(rb.rank, "unknown device", "socket " + std::to_string(s));
            continue;
        }
        const int lo = s * topo.cores_per_socket;
        const int hi = lo + topo.cores_per_socket - 1;
        if (rb.core_first > rb.core_last || rb.core_first < lo || rb.core_last > hi) {
            add(rb.rank, "cross-socket core range",
                "cores " + std::to_string(rb.core_first) + "-" + std::to_string(rb.core_last) + " outside socket " +
                    std::to_string(s));
        }
        for (int g : rb.gpu_ids) {
            if (g < 0 || g >= ngpu) {
                add(rb.rank, "unknown device", "GPU " + std::to_string(g));
                continue;
            }
            if (topo.gpu_socket(g) != s) {
                add(rb.rank, "cross-socket GPU", "GPU " + std::to_string(g) + " is on socket " +
                                                     std::to_string(topo.gpu_socket(g)));
            }
            const auto [it, fresh] = gpu_owner.emplace(g, rb.rank);
            if (!fresh) {
                add(rb.rank, "GPU double-assignment",
                    "GPU " + std::to_string(g) + " already bound to rank " + std::to_string(it->second));
            }
        }
        auto check_nic = [&](int n, char role) {
            if (n < 0 || n >= nnic) {
                add(rb.rank, "unknown device", "NIC " + std::to_string(n));
                return;
            }
            if (topo.nic_socket(n) != s) {
                add(rb.rank, "cross-socket NIC", "NIC " + std::to_string(n) + " is on socket " +
                                                     std::to_string(topo.nic_socket(n)));
            }
            const auto [it, fresh] = nic_role.emplace(n, std::make_pair(rb.rank, role));
            if (!fresh && it->second.second != role) {
                add(rb.rank, "NIC role conflict", "NIC " + std::to_string(n) + " used for both SWAP and BCAST");
            }
        };
        check_nic(rb.nic_primary, 'p');
        for (int n : rb.nic_bcast) {
            if (n == rb.nic_primary) {
                add(rb.rank, "NIC role conflict", "primary NIC " + std::to_string(n) + " also in BCAST set");
                continue;
            }
            check_nic(n, 'b');
        }
        if (rb.bulk.kind != MemoryKind::DDR || rb.bulk.domain != topo.ddr_domain(s) ||
            rb.staging.kind != MemoryKind::HBM || rb.staging.domain != topo.hbm_domain(s)) {
            add(rb.rank, "cross-socket memory", "memory domains do not match socket " + std::to_string(s));
        }
    }

    for (std::size_t a = 0; a < plan.ranks.size(); ++a) {
        for (std::size_t b = a + 1; b < plan.ranks.size(); ++b) {
            const RankBinding& x = plan.ranks[a];
            const RankBinding& y = plan.ranks[b];
            if (x.core_first <= y.core_last && y.core_first <= x.core_last) {
                add(y.rank, "core-range overlap", "cores overlap with rank " + std::to_string(x.rank));
            }
        }
    }
    return out;
}

namespace {

std::string join(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string mem_name(const MemoryBinding& m) {
    return (m.kind == MemoryKind::DDR ? "DDR" : "HBM") + std::to_string(m.domain);
}

nlohmann::ordered_json mem_json(const MemoryBinding& m) {
    return {{"domain", m.domain}, {"kind", m.kind == MemoryKind::DDR ? "DDR" : "HBM"}};
}

MemoryBinding mem_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind != "DDR" && kind != "HBM") throw ContractViolation("plan json: unknown memory kind '" + kind + "'");
    return {kind == "DDR" ? MemoryKind::DDR : MemoryKind::HBM, j.at("domain").get<int>()};
}

}  // namespace

std::string render_plan(const BindingPlan& plan, PlanFormat format) {
    std::ostringstream out;
    if (format == PlanFormat::Human) {
        char line[256];
        std::snprintf(line, sizeof line, "%-5s %-6s %-9s %-7s %-8s %-10s %-5s %s\n", "rank", "socket", "cores",
                      "gpus", "nic_pref", "nic_bcast", "bulk", "staging");
        out << "binding plan: mode=" << to_string(plan.mode) << " ppn=" << plan.ppn << '\n' << line;
        for (const RankBinding& rb : plan.ranks) {
            const std::string cores = std::to_string(rb.core_first) + "-" + std::to_string(rb.core_last);
            std::snprintf(line, sizeof line, "%-5d %-6d %-9s %-7s %-8d %-10s %-5s %s\n", rb.rank, rb.socket,
                          cores.c_str(), join(rb.gpu_ids).c_str(), rb.nic_primary, join(rb.nic_bcast).c_str(),
                          mem_name(rb.bulk).c_str(), mem_name(rb.staging).c_str());
            out << line;
        }
    } else if (format == PlanFormat::Directives) {
        out << "# exakit-directives v1\n";
        for (const RankBinding& rb : plan.ranks) {
            out << "rank=" << rb.rank << " cpus=" << rb.core_first << '-' << rb.core_last
                << " membind=" << rb.bulk.domain << " staging=" << rb.staging.domain << " gpus=" << join(rb.gpu_ids)
                << " nic_pref=" << rb.nic_primary << " nic_bcast=" << join(rb.nic_bcast) << '\n';
        }
    } else {
        nlohmann::ordered_json j;
        j["format"] = "exakit-binding-plan";
        j["version"] = 1;
        j["mode"] = to_string(plan.mode);
        j["ppn"] = plan.ppn;
        j["ranks"] = nlohmann::ordered_json::array();
        for (const RankBinding& rb : plan.ranks) {
            nlohmann::ordered_json r;
            r["rank"] = rb.rank;
            r["socket"] = rb.socket;
            r["cores"] = {{"first", rb.core_first}, {"last", rb.core_last}};
            r["gpus"] = rb.gpu_ids;
            r["nic_primary"] = rb.nic_primary;
            r["nic_bcast"] = rb.nic_bcast;
            r["memory"] = {{"bulk", mem_json(rb.bulk)}, {"staging", mem_json(rb.staging)}};
            j["ranks"].push_back(r);
        }
        out << j.dump(2) << '\n';
    }
    return out.str();
}

BindingPlan parse_plan_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(std::string("plan json: ") + e.what());
    }
    if (j.value("format", "") != "exakit-binding-plan" || j.value("version", 0) != 1) {
        throw ContractViolation("plan json: unsupported format or version");
    }
    try {
        BindingPlan plan;
        plan.mode = parse_map_mode(j.at("mode").get<std::string>());
        plan.ppn = j.at("ppn").get<int>();
        for (const auto& r : j.at("ranks")) {
            RankBinding rb;
            rb.rank = r.at("rank").get<int>();
            rb.socket = r.at("socket").get<int>();
            rb.core_first = r.at("cores").at("first").get<int>();
            rb.core_last = r.at("cores").at("last").get<int>();
            rb.gpu_ids = r.at("gpus").get<std::vector<int>>();
            rb.nic_primary = r.at("nic_primary").get<int>();
            rb.nic_bcast = r.at("nic_bcast").get<std::vector<int>>();
            rb.bulk = mem_from_json(r.at("memory").at("bulk"));
            rb.staging = mem_from_json(r.at("memory").at("staging"));
            plan.ranks.push_back(rb);
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw ContractViolation(std::string("plan json: ") + e.what());
    }
}

}  // namespace exakit
