#include "exakit/topology.hpp"

#include <sstream>

#include "exakit/kvconfig.hpp"
#include "exakit/matrix.hpp"

namespace exakit {

NodeTopology NodeTopology::exascale_blade() {
    NodeTopology t;
    t.sockets = 2;
    t.cores_per_socket = 52;  // placeholder
    for (int id = 0; id < 6; ++id) t.gpus.push_back({id, id / 3});
    for (int id = 0; id < 8; ++id) t.nics.push_back({id, id / 4});
    constexpr std::uint64_t kGiB = 1ull << 30;
    t.memory.assign(2, MemoryDomains{64 * kGiB, 512 * kGiB});
    return t;
}

NodeTopology NodeTopology::parse(const std::string& text) {
    const KvConfig kv = KvConfig::parse(text);
    kv.check_known({"sockets", "cores_per_socket", "gpu_sockets", "nic_sockets", "hbm_bytes", "ddr_bytes"});
    NodeTopology t;
    t.sockets = static_cast<int>(kv.require_int("sockets"));
    t.cores_per_socket = static_cast<int>(kv.require_int("cores_per_socket"));
    const auto gs = kv.get_int_list("gpu_sockets");
    for (std::size_t i = 0; i < gs.size(); ++i) t.gpus.push_back({static_cast<int>(i), static_cast<int>(gs[i])});
    const auto ns = kv.get_int_list("nic_sockets");
    for (std::size_t i = 0; i < ns.size(); ++i) t.nics.push_back({static_cast<int>(i), static_cast<int>(ns[i])});
    const auto hbm = kv.get_int_list("hbm_bytes");
    const auto ddr = kv.get_int_list("ddr_bytes");
    if (hbm.size() != ddr.size()) throw ConfigError("topology: hbm_bytes and ddr_bytes lengths differ");
    for (std::size_t i = 0; i < hbm.size(); ++i) {
        t.memory.push_back({static_cast<std::uint64_t>(hbm[i]), static_cast<std::uint64_t>(ddr[i])});
    }
    try {
        t.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    return t;
}

std::string NodeTopology::serialize() const {
    std::ostringstream out;
    auto list = [&](auto&& range, auto&& field) {
        bool first = true;
        for (const auto& d : range) {
            out << (first ? "" : ",") << field(d);
            first = false;
        }
        out << '\n';
    };
    out << "sockets = " << sockets << '\n';
    out << "cores_per_socket = " << cores_per_socket << '\n';
    out << "gpu_sockets = ";
    list(gpus, [](const Device& d) { return d.socket; });
    out << "nic_sockets = ";
    list(nics, [](const Device& d) { return d.socket; });
    out << "hbm_bytes = ";
    list(memory, [](const MemoryDomains& m) { return m.hbm_bytes; });
    out << "ddr_bytes = ";
    list(memory, [](const MemoryDomains& m) { return m.ddr_bytes; });
    return out.str();
}

std::vector<int> NodeTopology::gpus_on(int socket) const {
    std::vector<int> ids;
    for (const Device& d : gpus)
        if (d.socket == socket) ids.push_back(d.id);
    return ids;
}

std::vector<int> NodeTopology::nics_on(int socket) const {
    std::vector<int> ids;
    for (const Device& d : nics)
        if (d.socket == socket) ids.push_back(d.id);
    return ids;
}

int NodeTopology::gpu_socket(int id) const {
    if (id < 0 || id >= static_cast<int>(gpus.size())) throw ContractViolation("unknown GPU id");
    return gpus[id].socket;
}

int NodeTopology::nic_socket(int id) const {
    if (id < 0 || id >= static_cast<int>(nics.size())) throw ContractViolation("unknown NIC id");
    return nics[id].socket;
}

void NodeTopology::validate() const {
    if (sockets < 1) throw ContractViolation("topology: sockets must be >= 1");
    if (cores_per_socket < 1) throw ContractViolation("topology: cores_per_socket must be >= 1");
    auto check = [&](const std::vector<Device>& devs, const char* what) {
        for (std::size_t i = 0; i < devs.size(); ++i) {
            if (devs[i].id != static_cast<int>(i)) {
                throw ContractViolation(std::string("topology: ") + what + " ids must be 0..n-1");
            }
            if (devs[i].socket < 0 || devs[i].socket >= sockets) {
                throw ContractViolation(std::string("topology: ") + what + " " + std::to_string(i) +
                                        " on missing socket");
            }
        }
    };
    check(gpus, "GPU");
    check(nics, "NIC");
    if (static_cast<int>(memory.size()) != sockets) {
        throw ContractViolation("topology: one memory entry per socket required");
    }
}

}  // namespace exakit
