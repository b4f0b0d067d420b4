#include "exakit/scenarios.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "exakit/cli.hpp"
#include "exakit/kvconfig.hpp"
#include "exakit/report_io.hpp"

namespace exakit {

namespace fs = std::filesystem;

std::vector<Scenario> load_scenario_index(const fs::path& dir) {
    const fs::path index = dir / "index.json";
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(index));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario index '" + index.string() + "': " + e.what());
    }
    std::vector<Scenario> out;
    try {
        for (const auto& s : j.at("scenarios")) {
            Scenario sc;
            sc.name = s.at("name").get<std::string>();
            sc.subcommand = s.at("subcommand").get<std::string>();
            sc.config = s.value("config", "");
            sc.args = s.value("args", std::vector<std::string>{});
            if (s.contains("seed") && !s.at("seed").is_null()) sc.seed = s.at("seed").get<std::uint64_t>();
            sc.expect_exit = s.value("expect_exit", 0);
            sc.digest = s.value("digest", "");
            sc.covers = s.value("covers", "");
            out.push_back(sc);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario index '" + index.string() + "': " + e.what());
    }
    return out;
}

void save_scenario_index(const fs::path& dir, const std::vector<Scenario>& scenarios) {
    Json arr = Json::array();
    for (const Scenario& sc : scenarios) {
        Json s;
        s["name"] = sc.name;
        s["subcommand"] = sc.subcommand;
        s["config"] = sc.config;
        s["args"] = sc.args;
        s["seed"] = sc.seed ? Json(*sc.seed) : Json(nullptr);
        s["expect_exit"] = sc.expect_exit;
        s["covers"] = sc.covers;
        s["digest"] = sc.digest;
        arr.push_back(s);
    }
    Json j;
    j["version"] = 1;
    j["scenarios"] = arr;
    write_text(dir / "index.json", dump_json(j));
}

std::string payload_digest(const fs::path& out_dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(out_dir)) {
        if (!e.is_regular_file()) continue;
        const std::string rel = fs::relative(e.path(), out_dir).generic_string();
        if (rel == "manifest.json") continue;
        files.push_back(rel);
    }
    std::sort(files.begin(), files.end());
    std::string blob;
    for (const std::string& rel : files) {
        const std::string body = read_text(out_dir / rel);
        blob += rel + "\n" + std::to_string(body.size()) + "\n" + body;
    }
    return sha256_hex(blob);
}

namespace {

fs::path fresh_dir(const std::string& name) {
    std::random_device rd;
    const fs::path base = fs::temp_directory_path();
    for (int attempt = 0; attempt < 100; ++attempt) {
        const fs::path p = base / ("exakit-scn-" + name + "-" + std::to_string(rd()));
        if (fs::create_directory(p)) return p;
    }
    throw std::runtime_error("cannot create a temporary directory");
}

}  // namespace

std::vector<ScenarioOutcome> run_scenarios(const fs::path& dir, const std::string& filter, bool bless) {
    std::vector<Scenario> all = load_scenario_index(dir);
    std::vector<ScenarioOutcome> outcomes;
    bool changed = false;
    for (Scenario& sc : all) {
        if (!filter.empty() && sc.name.find(filter) == std::string::npos) continue;
        ScenarioOutcome oc;
        oc.name = sc.name;
        const fs::path out_dir = fresh_dir(sc.name);
        std::vector<std::string> args{sc.subcommand};
        if (!sc.config.empty()) {
            args.push_back("--config");
            args.push_back((dir / sc.config).string());
        }
        if (sc.seed) {
            args.push_back("--seed");
            args.push_back(std::to_string(*sc.seed));
        }
        args.push_back("--out");
        args.push_back(out_dir.string());
        args.insert(args.end(), sc.args.begin(), sc.args.end());

        std::ostringstream out;
        std::ostringstream err;
        const int code = cli::run(args, out, err);
        write_text(out_dir / "stdout.txt", out.str());
        oc.digest = payload_digest(out_dir);
        fs::remove_all(out_dir);

        if (code != sc.expect_exit) {
            oc.detail = "exit code " + std::to_string(code) + ", expected " + std::to_string(sc.expect_exit);
            if (!err.str().empty()) oc.detail += ": " + err.str().substr(0, err.str().find('\n'));
        } else if (bless) {
            if (sc.digest != oc.digest) changed = true;
            sc.digest = oc.digest;
            oc.passed = true;
            oc.detail = "blessed";
        } else if (oc.digest != sc.digest) {
            oc.detail = "digest mismatch: expected " + sc.digest + ", got " + oc.digest;
        } else {
            oc.passed = true;
        }
        outcomes.push_back(oc);
    }
    if (bless && changed) save_scenario_index(dir, all);
    return outcomes;
}

}  // namespace exakit
