// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <boost/multiprecision/cpp_int.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "exakit/cli.hpp"
#include "exakit/dense.hpp"
#include "exakit/grid.hpp"
#include "exakit/hpl.hpp"
#include "exakit/mapper.hpp"
#include "exakit/mxp.hpp"
#include "exakit/netsim.hpp"
#include "exakit/perf_model.hpp"
#include "exakit/report_io.hpp"
#include "exakit/scenarios.hpp"

using namespace exakit;
namespace fs = std::filesystem;
using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

namespace {

struct Check {
    bool ok = true;
    std::string why;
    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            why = what;
        }
    }
};

MachineParams large_run_hpl() {
    MachineParams mp;
    mp.n = 28'773'888;
    mp.nb = 384;
    mp.p = 162;
    mp.q = 342;
    mp.lookahead = 1;
    mp.r_pfact = 5e13;
    mp.bw_net = 7e11;
    mp.latency_alpha = 2e-6;
    return mp;
}

constexpr double kTargetRmax = 1.012e18;
constexpr double kNodes = 9'234;
constexpr double kRmaxSingle = 1.390e14;

CalibrationResult calibrated() {
    CalibrationTargets tg;
    tg.rmax = kTargetRmax;
    tg.nodes = kNodes;
    tg.rmax_single_node = kRmaxSingle;
    return calibrate(tg, large_run_hpl(), FreeParam::RDgemm);
}

Check fp64_correctness() {
    Check c;
    const std::int64_t ns[] = {128, 256, 512, 1024};
    const std::int64_t nbs[] = {16, 32, 64};
    const std::pair<std::int64_t, std::int64_t> grids[] = {{1, 1}, {2, 2}, {1, 4}, {4, 1}};
    for (int i = 0; i < 20; ++i) {
        const std::int64_t n = ns[i % 4];
        const std::int64_t nb = nbs[i % 3];
        const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
        std::vector<double> first;
        for (auto [p, q] : grids) {
            const RunReport r = run_hpl(BenchmarkConfig{n, nb, p, q, 1, p * q, PrecisionMode::HPL64, 1}, seed);
            c.require(r.residual < kResidualThreshold, "residual " + format_double(r.residual) + " at N=" +
                                                           std::to_string(n) + " NB=" + std::to_string(nb));
            if (first.empty()) {
                first = r.x;
            } else {
                c.require(r.x == first, "solution differs across grids at N=" + std::to_string(n));
            }
        }
    }
    return c;
}

Check flop_accounting() {
    Check c;
    for (auto [n, nb] : {std::pair{256, 32}, std::pair{512, 64}, std::pair{384, 16}}) {
        const RunReport r = run_hpl(BenchmarkConfig{n, nb, 2, 2, 1, 4, PrecisionMode::HPL64, 1}, 77);
        std::uint64_t sum = 0;
        for (const PanelRecord& p : emit_phase_trace(r)) sum += p.flops_pfact + p.flops_dtrsm + p.flops_dgemm;
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        c.require(sum == flops::lu(un), "panel flop sum differs from the closed form at N=" + std::to_string(n));
        c.require(6 * sum == 4 * un * un * un - 3 * un * un - un, "closed form mismatch at N=" + std::to_string(n));
    }
    for (std::uint64_t n = 1; n <= 10'000; ++n) {
        const cpp_int two_n3 = cpp_int(2) * n * n * n;
        const FlopCount fc = hpl_flops_exact(n);
        const unsigned __int128 num = fc.numerator;
        const cpp_int held = (cpp_int(static_cast<std::uint64_t>(num >> 64)) << 64) +
                             cpp_int(static_cast<std::uint64_t>(num));
        c.require(held == two_n3 && fc.denominator == 3, "exact count wrong at N=" + std::to_string(n));
        const cpp_rational exact(two_n3, 3);
        const double v = hpl_flops(n);
        const cpp_rational err = abs(cpp_rational(v) - exact);
        const double up = std::nextafter(v, std::numeric_limits<double>::infinity());
        const double down = std::nextafter(v, 0.0);
        c.require(err <= abs(cpp_rational(up) - exact) && err <= abs(cpp_rational(down) - exact),
                  "hpl_flops not correctly rounded at N=" + std::to_string(n));
    }
    return c;
}

Check config_fidelity() {
    Check c;
    const BenchmarkConfig hpl{28'773'888, 384, 162, 342, 9'234, 6, PrecisionMode::HPL64, 1};
    const BenchmarkConfig mxp{57'693'696, 1'536, 152, 125, 9'500, 2, PrecisionMode::MXP, 1};
    const ConfigCheck a = validate_config(hpl);
    const ConfigCheck b = validate_config(mxp);
    c.require(a.ok() && a.panels == 74'932, "HPL configuration");
    c.require(b.ok() && b.panels == 37'561, "MxP configuration");
    for (const BenchmarkConfig& base : {hpl, mxp}) {
        for (int field = 0; field < 4; ++field) {
            for (int delta : {-1, 1}) {
                BenchmarkConfig x = base;
                std::int64_t* f[] = {&x.p, &x.q, &x.nodes, &x.ppn};
                *f[field] += delta;
                const ConfigCheck r = validate_config(x);
                bool named = false;
                for (const std::string& v : r.violations) named |= v == "P·Q ≠ nodes·PPN";
                c.require(named, "perturbation of field " + std::to_string(field) + " accepted");
            }
        }
    }
    return c;
}

Check mxp_convergence() {
    Check c;
    for (std::size_t n : {256u, 512u, 1024u}) {
        for (std::uint64_t seed : {1u, 2u}) {
            const auto [a, b] = generate_mxp_system(n, seed);
            MxpOptions o;
            o.nb = 128;
            const MxpResult r = solve_mxp(a, b, o);
            c.require(r.report.converged && r.report.final_residual < 16.0 && r.report.iterations <= 10,
                      "n=" + std::to_string(n) + " did not converge within 10 iterations");
            c.require(r.report.storage_bytes == n * n * 2, "BF16 footprint at n=" + std::to_string(n));
        }
    }
    return c;
}

Check model_closure() {
    Check c;
    const CalibrationResult r = calibrated();
    c.require(r.ok, "calibration failed: " + r.diagnostic);
    if (!r.ok) return c;
    const double achieved = rmax(r.params);
    c.require(std::fabs(achieved - kTargetRmax) / kTargetRmax < 0.01, "R_max " + format_double(achieved));
    const double eta = scaling_efficiency(achieved, kNodes, kRmaxSingle);
    c.require(std::fabs(eta - 0.788) <= 0.005, "eta " + format_double(eta));
    return c;
}

Check crossover_shape() {
    Check c;
    const CalibrationResult r = calibrated();
    c.require(r.ok, "calibration failed");
    if (!r.ok) return c;
    const RuntimeTrace tr = total_runtime(r.params);
    for (std::size_t k = 1; k < tr.panels.size(); ++k)
        c.require(tr.panels[k].t_dgemm < tr.panels[k - 1].t_dgemm, "t_dgemm not strictly decreasing");
    const auto ks = bound_switch_index(tr);
    c.require(ks.has_value(), "no bound switch");
    if (!ks) return c;
    for (std::size_t k = 0; k < tr.panels.size(); ++k) {
        const bool gemm = tr.panels[k].bound_by == BoundBy::Dgemm;
        c.require(gemm == (static_cast<std::int64_t>(k) < *ks), "bound_by switches more than once");
    }
    return c;
}

Check resilience() {
    Check c;
    const NetworkModel net;
    const double m = 1e6;
    bool strict = false;
    for (std::int64_t p = 1; p <= 16; ++p) {
        const SimResult clean = simulate_panel_exchange(ExchangeStrategy::Hybrid, p, m, net, {});
        const double bound = static_cast<double>(p - 1) * (net.latency_alpha + m / net.bandwidth_beta);
        c.require(clean.makespan <= bound * (1 + 1e-12), "fault-free hybrid overhead at P=" + std::to_string(p));
        for (std::int64_t f = 0; f < p; ++f) {
            FaultEvent e;
            e.rank = f;
            e.duration = 1e30;
            e.extra_delay = 1e-4;
            const FaultSchedule fs{{e}};
            const auto all = simulate_panel_exchange(ExchangeStrategy::AllCollective, p, m, net, fs).delayed_ranks();
            const auto hyb = simulate_panel_exchange(ExchangeStrategy::Hybrid, p, m, net, fs).delayed_ranks();
            c.require(hyb <= all, "hybrid affects more ranks at P=" + std::to_string(p));
            strict |= hyb < all;
        }
    }
    c.require(strict, "hybrid never strictly better");
    return c;
}

Check nic_isolation() {
    Check c;
    const NetworkModel net;
    const double swap = 1e6;
    const cli::Sweep sweep{"bcast_bytes", swap / 1000.0, swap, 13, true};
    std::optional<double> ps_ref;
    double rr_prev = -1.0;
    for (double bcast : sweep.values()) {
        const double ps = simulate_phase_contention(swap, bcast, NicPolicy::PhaseSpecific, net).t_swap;
        const double rr = simulate_phase_contention(swap, bcast, NicPolicy::RoundRobin, net).t_swap;
        if (!ps_ref) ps_ref = ps;
        c.require(ps == *ps_ref, "phase_specific SWAP time changed at bcast=" + format_double(bcast));
        c.require(rr > rr_prev, "round_robin SWAP time not increasing at bcast=" + format_double(bcast));
        rr_prev = rr;
    }
    return c;
}

Check binding_plans(const fs::path& golden) {
    Check c;
    const NodeTopology topo = NodeTopology::exascale_blade();
    const std::pair<int, MapMode> cases[] = {{6, MapMode::HPL}, {2, MapMode::MXP}};
    for (auto [ppn, mode] : cases) {
        const BindingPlan plan = plan_bindings(topo, ppn, mode);
        c.require(validate_plan(plan, topo).empty(), "violations in ppn=" + std::to_string(ppn));
        const std::string stem = "plan_ppn" + std::to_string(ppn) + "_" + to_string(mode);
        for (auto [fmt, ext] : {std::pair{PlanFormat::Human, ".txt"}, std::pair{PlanFormat::Directives, ".directives"},
                                std::pair{PlanFormat::Json, ".json"}}) {
            const fs::path want = golden / (stem + ext);
            c.require(fs::exists(want) && read_text(want) == render_plan(plan, fmt),
                      "rendering differs from " + want.filename().string());
        }
    }
    try {
        plan_bindings(topo, 12, MapMode::HPL);
        c.require(false, "ppn=12 accepted");
    } catch (const InfeasiblePlanError& e) {
        c.require(std::string(e.what()) == "GPU demand: 12 GPUs needed, 6 available",
                  std::string("unexpected message: ") + e.what());
    }
    return c;
}

Check determinism(const fs::path& work) {
    Check c;
    fs::remove_all(work);
    fs::create_directories(work);
    write_text(work / "hpl.cfg", "n = 256\nnb = 32\np = 2\nq = 2\nnodes = 1\nppn = 4\n");
    write_text(work / "mxp.cfg", "n = 256\nnb = 64\n");
    write_text(work / "model.cfg",
               "n = 1024\nnb = 64\np = 2\nq = 2\nr_dgemm = 1e9\nr_pfact = 1e8\nbw_net = 1e8\nlatency_alpha = 1e-6\n");
    write_text(work / "netsim.cfg", "p = 8\npanel_bytes = 1e6\nfault_rate = 2e4\nfault_mean_delay = 1e-5\n"
                                    "fault_horizon = 1e-3\n");
    write_text(work / "validate.cfg", "n = 28773888\nnb = 384\np = 162\nq = 342\nnodes = 9234\nppn = 6\n");
    write_text(work / "map.cfg", "ppn = 6\nmode = hpl\nformat = json\n");
    write_text(work / "corpus" / "h.cfg", "n = 64\nnb = 8\n");
    Scenario s;
    s.name = "tiny";
    s.subcommand = "hpl";
    s.config = "h.cfg";
    s.seed = 4;
    save_scenario_index(work / "corpus", {s});
    run_scenarios(work / "corpus", "", true);

    struct Case {
        std::string name;
        std::vector<std::string> args;
    };
    const std::vector<Case> cases = {
        {"hpl", {"hpl", "--config", (work / "hpl.cfg").string(), "--seed", "11"}},
        {"mxp", {"mxp", "--config", (work / "mxp.cfg").string(), "--seed", "11"}},
        {"model", {"model", "--config", (work / "model.cfg").string(), "--sweep", "bw_net=1e7:1e9:4:log"}},
        {"netsim", {"netsim", "--config", (work / "netsim.cfg").string(), "--seed", "11"}},
        {"map", {"map", "--config", (work / "map.cfg").string()}},
        {"validate", {"validate", "--config", (work / "validate.cfg").string()}},
        {"scenarios", {"scenarios", "--dir", (work / "corpus").string()}},
    };
    for (const Case& k : cases) {
        std::string digest[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = work / (k.name + std::to_string(rep));
            std::vector<std::string> args = k.args;
            if (k.name != "scenarios") {
                args.push_back("--out");
                args.push_back(out.string());
            }
            std::ostringstream so, se;
            const int code = cli::run(args, so, se);
            c.require(code == 0, k.name + " exited " + std::to_string(code) + ": " + se.str());
            write_text(out / "stdout.txt", so.str());
            digest[rep] = payload_digest(out);
        }
        c.require(digest[0] == digest[1], k.name + " payloads differ between runs");
    }
    fs::remove_all(work);
    return c;
}

}  // namespace

int main() {
    const fs::path root = EXAKIT_SOURCE_DIR;
    const fs::path work = fs::temp_directory_path() / "exakit_acceptance";
    struct Criterion {
        int id;
        std::string name;
        double budget_s;
        std::function<Check()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "FP64 correctness", 60, fp64_correctness},
        {2, "flop accounting", 60, flop_accounting},
        {3, "config fidelity", 1, config_fidelity},
        {4, "mixed-precision convergence", 120, mxp_convergence},
        {5, "model closure", 30, model_closure},
        {6, "crossover behavior", 30, crossover_shape},
        {7, "resilience properties", 60, resilience},
        {8, "NIC isolation", 10, nic_isolation},
        {9, "binding plans", 1, [&] { return binding_plans(root / "tests" / "golden"); }},
        {10, "determinism", 600, [&] { return determinism(work); }},
    };
    int failed = 0;
    for (const Criterion& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = cr.run();
        } catch (const std::exception& e) {
            c.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        c.require(secs < cr.budget_s, "runtime " + format_double(secs) + " s over budget");
        char timing[64];
        std::snprintf(timing, sizeof timing, "%.2f s", secs);
        std::cout << (c.ok ? "PASS" : "FAIL") << " criterion " << cr.id << ": " << cr.name << " (" << timing << ")";
        if (!c.ok) std::cout << " -- " << c.why;
        std::cout << '\n';
        if (!c.ok) ++failed;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
