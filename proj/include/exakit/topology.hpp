#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace exakit {

struct Device {
    int id = 0;
    int socket = 0;
    friend bool operator==(const Device&, const Device&) = default;
};

struct MemoryDomains {
    std::uint64_t hbm_bytes = 0;
    std::uint64_t ddr_bytes = 0;
    friend bool operator==(const MemoryDomains&, const MemoryDomains&) = default;
};

/// Declarative description of one compute node.
///
/// Memory domain ids: DDR of socket s is domain s, HBM of socket s is
/// domain sockets + s.
struct NodeTopology {
    int sockets = 2;
    int cores_per_socket = 0;
    std::vector<Device> gpus;
    std::vector<Device> nics;
    std::vector<MemoryDomains> memory;

    /// Two sockets, three GPUs and four NICs per socket, 64 GiB HBM and
    /// 512 GiB DDR per socket. cores_per_socket is a placeholder (52).
    static NodeTopology exascale_blade();

    /// Parses the key = value topology file:
    ///   sockets = 2
    ///   cores_per_socket = 52
    ///   gpu_sockets = 0,0,0,1,1,1     # socket of GPU id 0, 1, ...
    ///   nic_sockets = 0,0,0,0,1,1,1,1
    ///   hbm_bytes = 68719476736,68719476736   # per socket
    ///   ddr_bytes = 549755813888,549755813888
    static NodeTopology parse(const std::string& text);
    std::string serialize() const;

    /// Device ids on a socket, ascending.
    std::vector<int> gpus_on(int socket) const;
    std::vector<int> nics_on(int socket) const;
    int gpu_socket(int id) const;
    int nic_socket(int id) const;

    int ddr_domain(int socket) const { return socket; }
    int hbm_domain(int socket) const { return sockets + socket; }

    /// Throws ContractViolation if any device references a missing socket,
    /// ids are not 0..n-1, or memory entries do not match the socket count.
    void validate() const;

    friend bool operator==(const NodeTopology&, const NodeTopology&) = default;
};

}  // namespace exakit
