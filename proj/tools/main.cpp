#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "fpgadiag/error.hpp"
#include "fpgadiag/report.hpp"
#include "fpgadiag/scenario.hpp"
#include "fpgadiag/svg.hpp"

namespace fs = std::filesystem;
using namespace fpgadiag;

namespace {

enum class Level { Error, Warn, Info, Debug };

Level log_level() {
    const char* v = std::getenv("FPGADIAG_LOG");
    if (!v) return Level::Warn;
    const std::string s = v;
    if (s == "error" || s == "quiet") return Level::Error;
    if (s == "info") return Level::Info;
    if (s == "debug") return Level::Debug;
    return Level::Warn;
}

void log(Level level, const std::string& msg) {
    static const Level threshold = log_level();
    if (level > threshold) return;
    static const char* names[] = {"error", "warn", "info", "debug"};
    std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DiagError(ErrorCode::Io, "cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out || !(out << text)) throw DiagError(ErrorCode::Io, "cannot write " + p.string());
    log(Level::Info, "wrote " + p.string());
}

fs::path prepare_out(const std::string& out, const Scenario* scenario) {
    fs::path dir = !out.empty() ? fs::path(out) : scenario ? fs::path(scenario->outputs.directory) : fs::path(".");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DiagError(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
    return dir;
}

void write_svgs(const fs::path& dir, const std::string& report_text) {
    for (const auto& [name, svg] : render_report(Json::parse(report_text))) write_file(dir / name, svg);
}

void log_verdicts(const Analysis& a) {
    for (const auto& c : a.conditions) {
        for (const auto& [stage, why] : c.skipped) log(Level::Debug, c.info.name + ": skipped " + stage + ": " + why);
        if (c.verdict) log(Level::Info, c.info.name + ": " + std::string(to_string(c.verdict->mechanism)));
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Phase-sweep timing diagnosis simulator and analyzer"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
    app.require_subcommand(1);

    std::string scenario_path, records_path, report_path, out_dir;
    unsigned threads = 1;

    auto* run = app.add_subcommand("run", "simulate a scenario and analyze it");
    run->add_option("scenario", scenario_path, "scenario file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--threads", threads, "worker threads, 0 = all cores");

    auto* analyze = app.add_subcommand("analyze", "analyze recorded measurements");
    analyze->add_option("records", records_path, "records.csv")->required();
    analyze->add_option("scenario", scenario_path, "scenario file")->required();
    analyze->add_option("--out", out_dir, "output directory");

    auto* render = app.add_subcommand("render", "render figures from a report");
    render->add_option("report", report_path, "report.json")->required();
    render->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (run->parsed()) {
            const auto scenario = load_scenario(scenario_path);
            const auto dir = prepare_out(out_dir, &scenario);
            log(Level::Info, "running " + scenario_path + " with " + std::to_string(threads) + " thread(s)");
            const auto result = run_pipeline(scenario, threads);
            log_verdicts(result.analysis);
            write_file(dir / "records.csv", result.records_csv);
            write_file(dir / "report.json", result.report_json);
            if (scenario.outputs.svg) write_svgs(dir, result.report_json);
        } else if (analyze->parsed()) {
            const auto scenario = load_scenario(scenario_path);
            const auto dir = prepare_out(out_dir, &scenario);
            const auto result = analyze_pipeline(scenario, read_file(records_path));
            log_verdicts(result.analysis);
            write_file(dir / "report.json", result.report_json);
            if (scenario.outputs.svg) write_svgs(dir, result.report_json);
        } else if (render->parsed()) {
            const auto text = read_file(report_path);
            const auto dir = prepare_out(out_dir, nullptr);
            write_svgs(dir, text);
        }
    } catch (const DiagError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Json::exception& e) {
        std::cerr << "error: malformed report: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
