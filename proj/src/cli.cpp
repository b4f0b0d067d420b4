#include "exakit/cli.hpp"

#include <cmath>
#include <ctime>
#include <filesystem>
#include <optional>
#include <ostream>

#include "CLI11.hpp"
#include "exakit/grid.hpp"
#include "exakit/hpl.hpp"
#include "exakit/kvconfig.hpp"
#include "exakit/mapper.hpp"
#include "exakit/mxp.hpp"
#include "exakit/netsim.hpp"
#include "exakit/perf_model.hpp"
#include "exakit/report_io.hpp"
#include "exakit/rng.hpp"
#include "exakit/scenarios.hpp"

namespace exakit::cli {

namespace fs = std::filesystem;

std::vector<double> Sweep::values() const {
    std::vector<double> v;
    for (int i = 0; i < count; ++i) {
        const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        if (i == 0) {
            v.push_back(start);
        } else if (i == count - 1) {
            v.push_back(stop);
        } else {
            v.push_back(log ? std::exp(std::log(start) + t * (std::log(stop) - std::log(start)))
                            : start + t * (stop - start));
        }
    }
    return v;
}

Sweep parse_sweep(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--sweep: expected key=start:stop:count[:log]");
    Sweep s;
    s.key = text.substr(0, eq);
    std::vector<std::string> parts;
    std::string rest = text.substr(eq + 1);
    for (std::size_t pos = 0;;) {
        const auto colon = rest.find(':', pos);
        parts.push_back(rest.substr(pos, colon - pos));
        if (colon == std::string::npos) break;
        pos = colon + 1;
    }
    if (parts.size() < 3 || parts.size() > 4 || (parts.size() == 4 && parts[3] != "log")) {
        throw ConfigError("--sweep: expected key=start:stop:count[:log]");
    }
    KvConfig kv;
    kv.set("start", parts[0]);
    kv.set("stop", parts[1]);
    kv.set("count", parts[2]);
    s.start = kv.require_double("start");
    s.stop = kv.require_double("stop");
    s.count = static_cast<int>(kv.require_int("count"));
    s.log = parts.size() == 4;
    if (s.count < 1) throw ConfigError("--sweep: count must be >= 1");
    if (s.log && !(s.start > 0.0 && s.stop > 0.0)) throw ConfigError("--sweep: log sweep needs positive bounds");
    return s;
}

namespace {

struct Invocation {
    std::string subcommand;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string format = "text";
    std::string sweep;
    // map
    std::string topology;
    int ppn = 0;
    std::string mode;
    // scenarios
    std::string dir = "scenarios";
    std::string filter;
    bool bless = false;
};

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

class OutputSet {
public:
    explicit OutputSet(const Invocation& inv) : inv_(inv), dir_(inv.out_dir) {}

    void write(const std::string& name, const std::string& content) {
        write_text(dir_ / name, content);
        names_.push_back(name);
    }

    void finish(std::optional<std::uint64_t> seed) {
        Json m;
        m["subcommand"] = inv_.subcommand;
        m["config"] = inv_.config.empty() ? Json(nullptr) : Json(inv_.config);
        m["seed"] = seed ? Json(*seed) : Json(nullptr);
        m["outputs"] = names_;
        m["tool_version"] = kToolVersion;
        m["timestamp"] = utc_timestamp();
        write_text(dir_ / "manifest.json", dump_json(m));
    }

private:
    const Invocation& inv_;
    fs::path dir_;
    std::vector<std::string> names_;
};

KvConfig load_config(const Invocation& inv) {
    if (inv.config.empty()) throw ConfigError(inv.subcommand + ": --config is required");
    return KvConfig::load(inv.config);
}

std::uint64_t resolve_seed(const Invocation& inv, const KvConfig& kv) {
    if (inv.seed) return *inv.seed;
    return static_cast<std::uint64_t>(kv.get_int("seed", 1));
}

PrecisionMode parse_mode(const std::string& s) {
    if (s == "hpl") return PrecisionMode::HPL64;
    if (s == "mxp") return PrecisionMode::MXP;
    throw ConfigError("config key 'mode': expected hpl or mxp, got '" + s + "'");
}

const std::set<std::string> kBenchKeys{"n", "nb", "p", "q", "nodes", "ppn", "mode", "lookahead", "seed"};

BenchmarkConfig bench_config(const KvConfig& kv) {
    BenchmarkConfig c;
    c.n = kv.require_int("n");
    c.nb = kv.require_int("nb");
    c.p = kv.get_int("p", 1);
    c.q = kv.get_int("q", 1);
    c.nodes = kv.get_int("nodes", 1);
    c.ppn = kv.get_int("ppn", c.p * c.q / std::max<std::int64_t>(c.nodes, 1));
    c.mode = parse_mode(kv.get_string("mode", "hpl"));
    c.lookahead = static_cast<int>(kv.get_int("lookahead", 1));
    return c;
}

bool report_violations(const ConfigCheck& chk, std::ostream& err) {
    for (const std::string& v : chk.violations) err << "config violation: " << v << '\n';
    return chk.ok();
}

Json comm_json(const CommCounters& c) {
    return {{"bcast_bytes", c.bcast_bytes}, {"swap_bytes", c.swap_bytes}, {"u_bcast_bytes", c.u_bcast_bytes}};
}

std::string vector_csv(const std::vector<double>& v, const char* name) {
    CsvTable t({"index", name});
    for (std::size_t i = 0; i < v.size(); ++i) t.add_row({std::to_string(i), format_double(v[i])});
    return t.str();
}

int cmd_validate(const Invocation& inv, std::ostream& out, std::ostream& err) {
    const KvConfig kv = load_config(inv);
    kv.check_known(kBenchKeys);
    const BenchmarkConfig cfg = bench_config(kv);
    const ConfigCheck chk = validate_config(cfg);
    report_violations(chk, err);
    Json j;
    j["valid"] = chk.ok();
    j["mode"] = to_string(cfg.mode);
    j["n"] = cfg.n;
    j["nb"] = cfg.nb;
    j["p"] = cfg.p;
    j["q"] = cfg.q;
    j["nodes"] = cfg.nodes;
    j["ppn"] = cfg.ppn;
    j["panels"] = chk.panels;
    j["violations"] = chk.violations;
    if (inv.format == "json") {
        out << dump_json(j);
    } else if (chk.ok()) {
        out << "valid: " << to_string(cfg.mode) << " N=" << cfg.n << " NB=" << cfg.nb << " grid=" << cfg.p << "x"
            << cfg.q << " panels=" << chk.panels << '\n';
    } else {
        out << "invalid: " << chk.violations.size() << " violation(s)\n";
    }
    if (!inv.out_dir.empty()) {
        OutputSet outs(inv);
        outs.write("validation.json", dump_json(j));
        outs.finish(std::nullopt);
    }
    return chk.ok() ? kExitOk : kExitUsage;
}

int cmd_hpl(const Invocation& inv, std::ostream& out, std::ostream& err) {
    const KvConfig kv = load_config(inv);
    kv.check_known(kBenchKeys);
    const BenchmarkConfig cfg = bench_config(kv);
    const std::uint64_t seed = resolve_seed(inv, kv);
    if (!report_violations(validate_config(cfg), err)) return kExitUsage;
    if (cfg.mode != PrecisionMode::HPL64) throw ConfigError("hpl: config mode must be hpl");
    if (cfg.n > kMaxDeskN) throw ConfigError("hpl: N exceeds the desk-scale limit " + std::to_string(kMaxDeskN));

    const RunReport rep = run_hpl(cfg, seed);
    Json j;
    j["n"] = rep.n;
    j["nb"] = rep.nb;
    j["p"] = rep.p;
    j["q"] = rep.q;
    j["nodes"] = cfg.nodes;
    j["ppn"] = cfg.ppn;
    j["lookahead"] = rep.lookahead;
    j["seed"] = seed;
    j["panels"] = rep.panels;
    j["scaled_residual"] = rep.residual;
    j["threshold"] = rep.threshold;
    j["passed"] = rep.passed;
    j["flops"] = hpl_flops(static_cast<std::uint64_t>(rep.n));
    j["comm"] = comm_json(rep.comm);

    CsvTable trace({"panel", "bytes_bcast", "bytes_swap", "flops_pfact", "flops_dtrsm", "flops_dgemm"});
    for (const PanelRecord& r : emit_phase_trace(rep)) {
        trace.add_row({std::to_string(r.panel), std::to_string(r.bytes_bcast), std::to_string(r.bytes_swap),
                       std::to_string(r.flops_pfact), std::to_string(r.flops_dtrsm), std::to_string(r.flops_dgemm)});
    }
    OutputSet outs(inv);
    outs.write("report.json", dump_json(j));
    outs.write("trace.csv", trace.str());
    outs.write("solution.csv", vector_csv(rep.x, "x"));
    outs.finish(seed);

    if (inv.format == "json") {
        out << dump_json(j);
    } else {
        out << "hpl: N=" << rep.n << " NB=" << rep.nb << " grid=" << rep.p << "x" << rep.q
            << " scaled_residual=" << format_double(rep.residual) << (rep.passed ? " PASSED" : " FAILED") << '\n';
    }
    return rep.passed ? kExitOk : kExitNumerical;
}

PrecisionTag parse_store(const std::string& s) {
    if (s == "bf16") return PrecisionTag::BF16;
    if (s == "fp32") return PrecisionTag::FP32;
    if (s == "fp64") return PrecisionTag::FP64;
    throw ConfigError("config key 'store': expected bf16, fp32 or fp64, got '" + s + "'");
}

RefinementMethod parse_method(const std::string& s) {
    if (s == "plain") return RefinementMethod::Plain;
    if (s == "gmres") return RefinementMethod::Gmres;
    throw ConfigError("config key 'method': expected plain or gmres, got '" + s + "'");
}

int cmd_mxp(const Invocation& inv, std::ostream& out, std::ostream&) {
    const KvConfig kv = load_config(inv);
    kv.check_known({"n", "nb", "seed", "tolerance", "max_iters", "store", "method", "restart", "system"});
    const auto n = static_cast<std::size_t>(kv.require_int("n"));
    if (n < 1 || n > static_cast<std::size_t>(kMaxDeskN)) throw ConfigError("mxp: n must be in [1, 4096]");
    MxpOptions o;
    o.nb = static_cast<std::size_t>(kv.get_int("nb", static_cast<std::int64_t>(std::min<std::size_t>(128, n))));
    o.tol = kv.get_double("tolerance", 16.0);
    o.max_iters = static_cast<int>(kv.get_int("max_iters", 50));
    o.store = parse_store(kv.get_string("store", "bf16"));
    o.method = parse_method(kv.get_string("method", "plain"));
    o.restart = static_cast<int>(kv.get_int("restart", 10));
    if (o.max_iters < 0) throw ConfigError("mxp: max_iters must be >= 0");
    const std::uint64_t seed = resolve_seed(inv, kv);
    const std::string system = kv.get_string("system", "random");

    DenseMatrix a;
    std::vector<double> b;
    if (system == "random") {
        std::tie(a, b) = generate_mxp_system(n, seed);
    } else if (system == "identity") {
        a = DenseMatrix::identity(n);
        PortableRng rng(seed);
        b.resize(n);
        for (double& v : b) v = rng.centered();
    } else {
        throw ConfigError("config key 'system': expected random or identity, got '" + system + "'");
    }

    const MxpResult res = solve_mxp(a, b, o);
    const RefinementReport& r = res.report;
    Json j;
    j["system"] = system;
    j["n"] = r.n;
    j["nb"] = r.nb;
    j["seed"] = seed;
    j["store"] = std::string(to_string(r.store));
    j["method"] = to_string(r.method);
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["final_residual"] = r.final_residual;
    j["tolerance"] = o.tol;
    j["storage_bytes"] = r.storage_bytes;
    j["lowprec_flops"] = r.lowprec_flops;
    j["fp64_flops"] = r.fp64_flops;
    j["diagnostic"] = r.diagnostic ? Json(*r.diagnostic) : Json(nullptr);

    CsvTable hist({"iteration", "scaled_residual"});
    for (std::size_t i = 0; i < r.residual_history.size(); ++i) {
        hist.add_row({std::to_string(i + 1), format_double(r.residual_history[i])});
    }
    OutputSet outs(inv);
    outs.write("report.json", dump_json(j));
    outs.write("residuals.csv", hist.str());
    outs.write("solution.csv", vector_csv(res.x, "x"));
    outs.finish(seed);

    if (inv.format == "json") {
        out << dump_json(j);
    } else {
        out << "mxp: n=" << r.n << " store=" << to_string(r.store) << " method=" << to_string(r.method)
            << " iterations=" << r.iterations << " final_residual=" << format_double(r.final_residual)
            << (r.converged ? " CONVERGED" : " NOT CONVERGED") << '\n';
    }
    return r.converged ? kExitOk : kExitNumerical;
}

Json params_json(const MachineParams& mp) {
    return {{"n", mp.n},           {"nb", mp.nb},
            {"p", mp.p},           {"q", mp.q},
            {"lookahead", mp.lookahead}, {"r_dgemm", mp.r_dgemm},
            {"r_pfact", mp.r_pfact}, {"bw_net", mp.bw_net},
            {"latency_alpha", mp.latency_alpha}, {"element_bytes", mp.element_bytes}};
}

Json opt_index(const std::optional<std::int64_t>& k) { return k ? Json(*k) : Json(nullptr); }

int cmd_model(const Invocation& inv, std::ostream& out, std::ostream& err) {
    const KvConfig kv = load_config(inv);
    kv.check_known({"n", "nb", "p", "q", "lookahead", "r_dgemm", "r_pfact", "bw_net", "latency_alpha",
                    "element_bytes", "nodes", "rmax_single_node", "calibrate", "target_rmax"});
    MachineParams mp;
    mp.n = kv.require_int("n");
    mp.nb = kv.require_int("nb");
    mp.p = kv.get_int("p", 1);
    mp.q = kv.get_int("q", 1);
    mp.lookahead = static_cast<int>(kv.get_int("lookahead", 1));
    mp.r_dgemm = kv.get_double("r_dgemm", 0.0);
    mp.r_pfact = kv.require_double("r_pfact");
    mp.bw_net = kv.get_double("bw_net", 0.0);
    mp.latency_alpha = kv.get_double("latency_alpha", 0.0);
    mp.element_bytes = kv.get_double("element_bytes", 8.0);
    const double nodes = kv.get_double("nodes", 1.0);
    std::optional<double> rmax1;
    if (kv.has("rmax_single_node")) rmax1 = kv.require_double("rmax_single_node");

    const std::string cal = kv.get_string("calibrate", "none");
    Json cal_json = nullptr;
    if (cal != "none") {
        FreeParam free;
        if (cal == "r_dgemm") {
            free = FreeParam::RDgemm;
        } else if (cal == "bw_net") {
            free = FreeParam::BwNet;
        } else if (cal == "both") {
            free = FreeParam::Both;
        } else {
            throw ConfigError("config key 'calibrate': expected none, r_dgemm, bw_net or both");
        }
        CalibrationTargets tg;
        tg.rmax = kv.require_double("target_rmax");
        tg.nodes = nodes;
        tg.rmax_single_node = rmax1;
        const CalibrationResult cr = calibrate(tg, mp, free);
        if (!cr.ok) {
            err << cr.diagnostic << '\n';
            return kExitNumerical;
        }
        mp = cr.params;
        cal_json = {{"free", cal}, {"target_rmax", tg.rmax}, {"rel_error", cr.rel_error}};
    }
    check_params(mp);

    const RuntimeTrace tr = total_runtime(mp);
    const double r = hpl_flops(static_cast<std::uint64_t>(mp.n)) / tr.total;
    CsvTable trace({"k", "n_k", "t_dgemm", "t_pfact", "t_bcast", "t_swap", "step", "bound_by"});
    for (const PhaseTimes& t : tr.panels) {
        trace.add_row({std::to_string(t.k), std::to_string(mp.n - t.k * mp.nb), format_double(t.t_dgemm),
                       format_double(t.t_pfact), format_double(t.t_bcast), format_double(t.t_swap),
                       format_double(t.step), to_string(t.bound_by)});
    }
    Json j;
    j["params"] = params_json(mp);
    j["T_total"] = tr.total;
    j["R_max"] = r;
    j["k_star"] = opt_index(crossover_index(mp));
    j["bound_switch_index"] = opt_index(bound_switch_index(tr));
    j["eta"] = rmax1 ? Json(scaling_efficiency(r, nodes, *rmax1)) : Json(nullptr);
    j["calibration"] = cal_json;

    OutputSet outs(inv);
    outs.write("trace.csv", trace.str());
    outs.write("summary.json", dump_json(j));

    if (!inv.sweep.empty()) {
        const Sweep sw = parse_sweep(inv.sweep);
        CsvTable st({sw.key, "T_total", "R_max", "k_star"});
        for (double v : sw.values()) {
            MachineParams m = mp;
            if (sw.key == "r_dgemm") {
                m.r_dgemm = v;
            } else if (sw.key == "r_pfact") {
                m.r_pfact = v;
            } else if (sw.key == "bw_net") {
                m.bw_net = v;
            } else if (sw.key == "latency_alpha") {
                m.latency_alpha = v;
            } else {
                throw ConfigError("--sweep: key must be r_dgemm, r_pfact, bw_net or latency_alpha");
            }
            const RuntimeTrace t = total_runtime(m);
            const auto k = crossover_index(m);
            st.add_row({format_double(v), format_double(t.total),
                        format_double(hpl_flops(static_cast<std::uint64_t>(m.n)) / t.total),
                        k ? std::to_string(*k) : std::string()});
        }
        outs.write("sweep.csv", st.str());
    }
    outs.finish(std::nullopt);

    if (inv.format == "json") {
        out << dump_json(j);
    } else {
        const auto k = crossover_index(mp);
        out << "model: T_total=" << format_double(tr.total) << " s R_max=" << format_double(r)
            << " flop/s k*=" << (k ? std::to_string(*k) : std::string("none")) << '\n';
    }
    return kExitOk;
}

NetworkModel network_from(const KvConfig& kv) {
    NetworkModel net;
    net.latency_alpha = kv.get_double("latency_alpha", net.latency_alpha);
    net.bandwidth_beta = kv.get_double("bandwidth_beta", net.bandwidth_beta);
    net.nics_per_node = static_cast<int>(kv.get_int("nics_per_node", net.nics_per_node));
    net.sockets = static_cast<int>(kv.get_int("sockets", net.sockets));
    net.intra_group = kv.get_double("intra_group", net.intra_group);
    net.inter_group = kv.get_double("inter_group", net.inter_group);
    net.ranks_per_group = kv.get_int("ranks_per_group", net.ranks_per_group);
    try {
        net.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(e.what());
    }
    return net;
}

Json sim_json(const SimResult& r) {
    double total_stall = 0.0;
    for (double s : r.stall) total_stall += s;
    return {{"makespan", r.makespan},
            {"messages", r.messages},
            {"delivered", r.delivered},
            {"delayed_ranks", r.delayed_ranks()},
            {"total_stall", total_stall},
            {"deadlock", r.deadlock ? Json(*r.deadlock) : Json(nullptr)}};
}

std::string sim_csv(const SimResult& r) {
    CsvTable t({"rank", "completion_time", "stall_time"});
    for (std::size_t i = 0; i < r.completion.size(); ++i) {
        t.add_row({std::to_string(i), format_double(r.completion[i]), format_double(r.stall[i])});
    }
    return t.str();
}

int cmd_netsim(const Invocation& inv, std::ostream& out, std::ostream& err) {
    const KvConfig kv = load_config(inv);
    kv.check_known({"p", "panel_bytes", "columns", "latency_alpha", "bandwidth_beta", "nics_per_node", "sockets",
                    "intra_group", "inter_group", "ranks_per_group", "fault_rank", "fault_start", "fault_duration",
                    "fault_delay", "fault_rate", "fault_mean_delay", "fault_horizon", "seed", "bcast_q",
                    "swap_bytes", "bcast_bytes"});
    const NetworkModel net = network_from(kv);
    const std::int64_t p = kv.get_int("p", 8);
    const double bytes = kv.get_double("panel_bytes", 1e6);
    const std::int64_t columns = kv.get_int("columns", 1);
    if (p < 1) throw ConfigError("netsim: p must be >= 1");
    if (columns < 1) throw ConfigError("netsim: columns must be >= 1");
    if (!(bytes >= 0.0)) throw ConfigError("netsim: panel_bytes must be >= 0");
    const std::uint64_t seed = resolve_seed(inv, kv);

    FaultSchedule faults;
    if (kv.has("fault_rate")) {
        faults = generate_faults(kv.require_double("fault_rate"), kv.get_double("fault_mean_delay", 1e-3),
                                 kv.get_double("fault_horizon", 1.0), seed, p);
    }
    if (kv.has("fault_rank")) {
        FaultEvent e;
        e.rank = kv.require_int("fault_rank");
        e.start_time = kv.get_double("fault_start", 0.0);
        e.extra_delay = kv.require_double("fault_delay");
        e.duration = kv.get_double("fault_duration", 1e30);
        if (e.rank < 0 || e.rank >= p) throw ConfigError("netsim: fault_rank out of range");
        faults.events.push_back(e);
    }

    const SimResult all = simulate_panel_exchange(ExchangeStrategy::AllCollective, p, bytes, net, faults, columns);
    const SimResult hyb = simulate_panel_exchange(ExchangeStrategy::Hybrid, p, bytes, net, faults, columns);

    CsvTable cmp({"strategy", "makespan", "messages", "delayed_ranks", "total_stall"});
    for (const auto& [name, r] : {std::pair<std::string, const SimResult*>{"allcollective", &all}, {"hybrid", &hyb}}) {
        const Json s = sim_json(*r);
        cmp.add_row({name, format_double(r->makespan), std::to_string(r->messages), std::to_string(r->delayed_ranks()),
                     format_double(s["total_stall"].get<double>())});
    }

    CsvTable fl({"start_time", "duration", "scope", "rank", "peer", "extra_delay"});
    for (const FaultEvent& e : faults.events) {
        fl.add_row({format_double(e.start_time), format_double(e.duration),
                    e.scope == FaultScope::Rank ? "rank" : "link", std::to_string(e.rank), std::to_string(e.peer),
                    format_double(e.extra_delay)});
    }

    const std::int64_t bq = kv.get_int("bcast_q", p);
    CsvTable bc({"algo", "q", "makespan"});
    for (BcastAlgo algo : {BcastAlgo::Ring, BcastAlgo::BinomialTree}) {
        bc.add_row({to_string(algo), std::to_string(bq), format_double(simulate_bcast(algo, bq, bytes, net).makespan)});
    }

    const double swap_bytes = kv.get_double("swap_bytes", bytes);
    const double bcast_bytes = kv.get_double("bcast_bytes", bytes);
    CsvTable ct({"policy", "t_swap", "t_bcast"});
    Json cont = Json::object();
    for (NicPolicy pol : {NicPolicy::PhaseSpecific, NicPolicy::RoundRobin}) {
        try {
            const ContentionResult c = simulate_phase_contention(swap_bytes, bcast_bytes, pol, net);
            ct.add_row({to_string(pol), format_double(c.t_swap), format_double(c.t_bcast)});
            cont[to_string(pol)] = {{"t_swap", c.t_swap}, {"t_bcast", c.t_bcast}};
        } catch (const ConfigError& e) {
            cont[to_string(pol)] = {{"error", e.what()}};
        }
    }

    Json j;
    j["p"] = p;
    j["panel_bytes"] = bytes;
    j["columns"] = columns;
    j["seed"] = seed;
    j["faults"] = faults.events.size();
    j["strategies"] = {{"allcollective", sim_json(all)}, {"hybrid", sim_json(hyb)}};
    j["contention"] = cont;

    OutputSet outs(inv);
    outs.write("allcollective.csv", sim_csv(all));
    outs.write("hybrid.csv", sim_csv(hyb));
    outs.write("comparison.csv", cmp.str());
    outs.write("faults.csv", fl.str());
    outs.write("bcast.csv", bc.str());
    outs.write("contention.csv", ct.str());
    outs.write("summary.json", dump_json(j));
    outs.finish(seed);

    if (inv.format == "json") {
        out << dump_json(j);
    } else {
        out << "netsim: P=" << p << " faults=" << faults.events.size() << '\n' << cmp.str();
    }
    if (all.deadlock || hyb.deadlock) {
        err << (all.deadlock ? *all.deadlock : *hyb.deadlock) << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_map(const Invocation& inv, std::ostream& out, std::ostream&) {
    KvConfig kv;
    if (!inv.config.empty()) {
        kv = KvConfig::load(inv.config);
        kv.check_known({"topology", "ppn", "mode", "format"});
    }
    std::string topo_path = inv.topology.empty() ? kv.get_string("topology", "") : inv.topology;
    if (!topo_path.empty() && !inv.config.empty() && inv.topology.empty() && fs::path(topo_path).is_relative()) {
        topo_path = (fs::path(inv.config).parent_path() / topo_path).string();
    }
    const NodeTopology topo =
        topo_path.empty() ? NodeTopology::exascale_blade() : NodeTopology::parse(read_text(topo_path));
    const int ppn = inv.ppn > 0 ? inv.ppn : static_cast<int>(kv.get_int("ppn", 0));
    if (ppn < 1) throw ConfigError("map: ppn must be given and >= 1");
    const MapMode mode = parse_map_mode(inv.mode.empty() ? kv.get_string("mode", "hpl") : inv.mode);
    const std::string fmt = inv.format != "text" ? inv.format : kv.get_string("format", "human");
    const PlanFormat pf = parse_plan_format(fmt);

    const BindingPlan plan = plan_bindings(topo, ppn, mode);
    const std::string text = render_plan(plan, pf);
    out << text;
    if (!inv.out_dir.empty()) {
        OutputSet outs(inv);
        outs.write(pf == PlanFormat::Json ? "plan.json" : pf == PlanFormat::Directives ? "plan.directives" : "plan.txt",
                   text);
        outs.finish(std::nullopt);
    }
    return kExitOk;
}

int cmd_scenarios(const Invocation& inv, std::ostream& out, std::ostream&) {
    const auto outcomes = run_scenarios(inv.dir, inv.filter, inv.bless);
    int failed = 0;
    for (const ScenarioOutcome& o : outcomes) {
        out << (o.passed ? "PASS " : "FAIL ") << o.name;
        if (!o.detail.empty()) out << " (" << o.detail << ")";
        out << '\n';
        if (!o.passed) ++failed;
    }
    out << outcomes.size() - failed << "/" << outcomes.size() << " scenarios passed\n";
    return failed == 0 ? kExitOk : kExitNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"exakit: desk-scale HPL, HPL-MxP, performance model, network and binding tools", "exakit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    Invocation inv;
    std::uint64_t seed = 0;
    std::vector<CLI::Option*> seed_opts;

    auto common = [&](CLI::App* sub, bool with_seed) {
        sub->add_option("--config", inv.config, "key = value config file");
        if (with_seed) seed_opts.push_back(sub->add_option("--seed", seed, "RNG seed (overrides the config)"));
        sub->add_option("--out", inv.out_dir, "output directory");
        sub->add_option("--format", inv.format, "stdout format: text or json (map: human, directives, json)");
    };
    CLI::App* hpl = app.add_subcommand("hpl", "FP64 blocked LU with partial pivoting on simulated ranks");
    common(hpl, true);
    CLI::App* mxp = app.add_subcommand("mxp", "low-precision LU plus FP64 iterative refinement");
    common(mxp, true);
    CLI::App* model = app.add_subcommand("model", "analytic per-panel runtime model and calibration");
    common(model, false);
    model->add_option("--sweep", inv.sweep, "key=start:stop:count[:log]");
    CLI::App* net = app.add_subcommand("netsim", "panel-exchange network simulation with fault injection");
    common(net, true);
    CLI::App* map = app.add_subcommand("map", "rank to core/GPU/NIC/memory binding plan");
    common(map, false);
    map->add_option("--topology", inv.topology, "topology file (default: built-in blade)");
    map->add_option("--ppn", inv.ppn, "ranks per node");
    map->add_option("--mode", inv.mode, "hpl or mxp");
    CLI::App* val = app.add_subcommand("validate", "check a benchmark configuration");
    common(val, false);
    CLI::App* scn = app.add_subcommand("scenarios", "run the pinned reproduction corpus");
    scn->add_option("--dir", inv.dir, "corpus directory");
    scn->add_option("--filter", inv.filter, "only scenarios whose name contains this text");
    scn->add_flag("--bless", inv.bless, "rewrite stored digests from this run");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    inv.subcommand = app.get_subcommands().front()->get_name();
    for (const CLI::Option* o : seed_opts)
        if (o->count() > 0) inv.seed = seed;

    try {
        if (inv.subcommand == "hpl") return cmd_hpl(inv, out, err);
        if (inv.subcommand == "mxp") return cmd_mxp(inv, out, err);
        if (inv.subcommand == "model") return cmd_model(inv, out, err);
        if (inv.subcommand == "netsim") return cmd_netsim(inv, out, err);
        if (inv.subcommand == "map") return cmd_map(inv, out, err);
        if (inv.subcommand == "validate") return cmd_validate(inv, out, err);
        return cmd_scenarios(inv, out, err);
    } catch (const SingularMatrixError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const PrecisionOverflowError& e) {
        err << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace exakit::cli
