#include <set>
#include <sstream>
#include <string>

#include "doctest.h"
#include "exakit/kvconfig.hpp"
#include "exakit/mapper.hpp"
#include "exakit/matrix.hpp"
#include "exakit/topology.hpp"
#include "json.hpp"

using namespace exakit;

namespace {

bool has_kind(const std::vector<PlanViolation>& v, const std::string& kind) {
    for (const PlanViolation& p : v)
        if (p.kind == kind) return true;
    return false;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_CASE("six ranks per node in HPL mode") {
    const NodeTopology topo = NodeTopology::exascale_blade();
    const BindingPlan plan = plan_bindings(topo, 6, MapMode::HPL);
    REQUIRE(plan.ranks.size() == 6);
    for (int r = 0; r < 6; ++r) {
        const RankBinding& rb = plan.ranks[r];
        CHECK(rb.rank == r);
        CHECK(rb.socket == r / 3);
        CHECK(rb.gpu_ids == std::vector<int>{r});
        CHECK(rb.nic_primary == (r < 3 ? 0 : 4));
        CHECK(rb.nic_bcast == (r < 3 ? std::vector<int>{1, 2, 3} : std::vector<int>{5, 6, 7}));
        CHECK(rb.bulk == MemoryBinding{MemoryKind::DDR, r / 3});
        CHECK(rb.staging == MemoryBinding{MemoryKind::HBM, 2 + r / 3});
    }
    CHECK(plan.ranks[0].core_first == 0);
    CHECK(plan.ranks[0].core_last == 16);
    CHECK(plan.ranks[2].core_last == 50);
    CHECK(plan.ranks[3].core_first == 52);
    CHECK(validate_plan(plan, topo).empty());
}

TEST_CASE("two ranks per node in MXP mode") {
    const NodeTopology topo = NodeTopology::exascale_blade();
    const BindingPlan plan = plan_bindings(topo, 2, MapMode::MXP);
    REQUIRE(plan.ranks.size() == 2);
    CHECK(plan.ranks[0].gpu_ids == std::vector<int>{0, 1, 2});
    CHECK(plan.ranks[1].gpu_ids == std::vector<int>{3, 4, 5});
    CHECK(plan.ranks[0].core_first == 0);
    CHECK(plan.ranks[0].core_last == 51);
    CHECK(validate_plan(plan, topo).empty());
}

TEST_CASE("infeasible requests name the constraint") {
    const NodeTopology topo = NodeTopology::exascale_blade();
    auto message = [&](int ppn, MapMode m) -> std::string {
        try {
            plan_bindings(topo, ppn, m);
        } catch (const InfeasiblePlanError& e) {
            return e.what();
        }
        return "";
    };
    CHECK(message(12, MapMode::HPL) == "GPU demand: 12 GPUs needed, 6 available");
    CHECK(message(4, MapMode::MXP) == "GPU demand: 12 GPUs needed, 6 available");
    CHECK(message(3, MapMode::HPL).rfind("ppn divisible by sockets", 0) == 0);
    CHECK(message(0, MapMode::HPL) != "");

    NodeTopology few_nics = topo;
    few_nics.nics = {{0, 0}, {1, 0}, {2, 1}, {3, 1}};
    try {
        plan_bindings(few_nics, 2, MapMode::HPL);
        FAIL("expected InfeasiblePlanError");
    } catch (const InfeasiblePlanError& e) {
        CHECK(std::string(e.what()).rfind("NIC supply", 0) == 0);
    }

    NodeTopology tiny = topo;
    tiny.cores_per_socket = 2;
    CHECK_THROWS_AS(plan_bindings(tiny, 6, MapMode::HPL), InfeasiblePlanError);
}

TEST_CASE("every feasible plan validates and is socket-local") {
    for (int cores : {3, 8, 52, 64}) {
        NodeTopology topo = NodeTopology::exascale_blade();
        topo.cores_per_socket = cores;
        for (MapMode mode : {MapMode::HPL, MapMode::MXP}) {
            for (int ppn = 1; ppn <= 16; ++ppn) {
                BindingPlan plan;
                try {
                    plan = plan_bindings(topo, ppn, mode);
                } catch (const InfeasiblePlanError&) {
                    continue;
                }
                CHECK(static_cast<int>(plan.ranks.size()) == ppn);
                CHECK(validate_plan(plan, topo).empty());
                std::set<int> gpus;
                for (const RankBinding& rb : plan.ranks) {
                    CHECK(static_cast<int>(rb.gpu_ids.size()) == gpus_per_rank(mode));
                    for (int g : rb.gpu_ids) {
                        CHECK(topo.gpu_socket(g) == rb.socket);
                        CHECK(gpus.insert(g).second);
                    }
                    CHECK(topo.nic_socket(rb.nic_primary) == rb.socket);
                    CHECK(rb.core_first / cores == rb.socket);
                    CHECK(rb.core_last / cores == rb.socket);
                }
            }
        }
    }
}

TEST_CASE("validate_plan catches constructed violations") {
    const NodeTopology topo = NodeTopology::exascale_blade();
    const BindingPlan good = plan_bindings(topo, 6, MapMode::HPL);

    BindingPlan p = good;
    p.ranks[0].gpu_ids = {4};
    CHECK(has_kind(validate_plan(p, topo), "cross-socket GPU"));

    p = good;
    p.ranks[1].gpu_ids = {0};
    CHECK(has_kind(validate_plan(p, topo), "GPU double-assignment"));

    p = good;
    p.ranks[0].nic_primary = 5;
    CHECK(has_kind(validate_plan(p, topo), "cross-socket NIC"));

    p = good;
    p.ranks[0].nic_primary = 1;
    CHECK(has_kind(validate_plan(p, topo), "NIC role conflict"));

    p = good;
    p.ranks[0].core_last = 60;
    CHECK(has_kind(validate_plan(p, topo), "cross-socket core range"));

    p = good;
    p.ranks[1].core_first = 10;
    CHECK(has_kind(validate_plan(p, topo), "core-range overlap"));

    p = good;
    p.ranks[0].bulk.domain = 1;
    CHECK(has_kind(validate_plan(p, topo), "cross-socket memory"));

    p = good;
    p.ranks[0].gpu_ids = {17};
    CHECK(has_kind(validate_plan(p, topo), "unknown device"));
}

TEST_CASE("directive rendering") {
    const NodeTopology topo = NodeTopology::exascale_blade();
    const BindingPlan plan = plan_bindings(topo, 6, MapMode::HPL);
    const std::vector<std::string> lines = lines_of(render_plan(plan, PlanFormat::Directives));
    REQUIRE(lines.size() == 7);
    CHECK(lines[0] == "# exakit-directives v1");
    CHECK(lines[1] == "rank=0 cpus=0-16 membind=0 staging=2 gpus=0 nic_pref=0 nic_bcast=1,2,3");
    CHECK(lines[6] == "rank=5 cpus=86-102 membind=1 staging=3 gpus=5 nic_pref=4 nic_bcast=5,6,7");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::size_t count = 0;
        for (std::size_t pos = lines[i].find("nic_pref="); pos != std::string::npos;
             pos = lines[i].find("nic_pref=", pos + 1))
            ++count;
        CHECK(count == 1);
    }
}

TEST_CASE("JSON rendering round-trips and agrees with the table") {
    const NodeTopology topo = NodeTopology::exascale_blade();
    for (auto [ppn, mode] : {std::pair{6, MapMode::HPL}, std::pair{2, MapMode::MXP}, std::pair{2, MapMode::HPL}}) {
        const BindingPlan plan = plan_bindings(topo, ppn, mode);
        const std::string text = render_plan(plan, PlanFormat::Json);
        CHECK(parse_plan_json(text) == plan);
        const auto j = nlohmann::json::parse(text);
        CHECK(j["format"] == "exakit-binding-plan");
        CHECK(j["version"] == 1);
        const std::vector<std::string> human = lines_of(render_plan(plan, PlanFormat::Human));
        REQUIRE(human.size() == plan.ranks.size() + 2);
        for (std::size_t r = 0; r < plan.ranks.size(); ++r) {
            std::istringstream row(human[r + 2]);
            std::string rank, socket, cores, gpus;
            row >> rank >> socket >> cores >> gpus;
            std::string expect;
            for (const auto& g : j["ranks"][r]["gpus"]) expect += (expect.empty() ? "" : ",") + std::to_string(g.get<int>());
            CHECK(gpus == expect);
        }
    }
    CHECK_THROWS(parse_plan_json("{\"format\": \"other\"}"));
}

TEST_CASE("format and mode names") {
    CHECK(parse_plan_format("human") == PlanFormat::Human);
    CHECK(parse_plan_format("directives") == PlanFormat::Directives);
    CHECK(parse_plan_format("json") == PlanFormat::Json);
    CHECK_THROWS(parse_plan_format("yaml"));
    CHECK(parse_map_mode("mxp") == MapMode::MXP);
    CHECK(to_string(MapMode::HPL) == "hpl");
    CHECK_THROWS(parse_map_mode("fp16"));
}

TEST_CASE("topology files") {
    const NodeTopology blade = NodeTopology::exascale_blade();
    CHECK(NodeTopology::parse(blade.serialize()) == blade);
    CHECK(blade.gpus_on(1) == std::vector<int>{3, 4, 5});
    CHECK(blade.nics_on(0) == std::vector<int>{0, 1, 2, 3});
    CHECK(blade.hbm_domain(1) == 3);
    CHECK(blade.ddr_domain(1) == 1);

    const NodeTopology t = NodeTopology::parse(
        "sockets = 1\ncores_per_socket = 8\ngpu_sockets = 0,0\nnic_sockets = 0,0,0,0\n"
        "hbm_bytes = 100\nddr_bytes = 200\n");
    CHECK(t.sockets == 1);
    CHECK(t.gpus.size() == 2);
    CHECK(t.memory[0] == MemoryDomains{100, 200});
    CHECK_THROWS_AS(NodeTopology::parse("sockets = 2\ncores_per_socket = 4\ngpu_sockets = 0,3\n"), ConfigError);
    CHECK_THROWS_AS(NodeTopology::parse("bogus = 1\n"), ConfigError);
}
