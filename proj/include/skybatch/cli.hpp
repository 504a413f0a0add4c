#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "skybatch/gen.hpp"
#include "skybatch/sched.hpp"
#include "skybatch/sim.hpp"

namespace skybatch::cli {

struct BuildArgs {
    std::filesystem::path out_dir;
    std::size_t capacity = 1'000;
    std::uint64_t seed = 1;
    std::size_t n_objects = 256'000;
};

struct GenArgs {
    std::filesystem::path bucket_dir;
    std::filesystem::path out_trace;
    std::filesystem::path report_path; // defaults to out_trace + ".genreport"
    gen::TraceConfig cfg;
};

struct RunArgs {
    std::filesystem::path bucket_dir;
    std::filesystem::path trace_path;
    std::string policy = "liferaft"; // liferaft | rr | noshare
    double alpha = 0.0;
    bool normalize = true;
    std::size_t cache_buckets = 20;
    double threshold = 0.03;
    double tb_ms = 1200.0;
    double tm_ms = 0.13;
    std::uint64_t seed = 0; // label column only; the run itself is exact replay
    std::optional<std::filesystem::path> out;     // metrics CSV (stdout if unset)
    std::optional<std::filesystem::path> explain; // per-decision schedule log
};

struct SweepArgs {
    std::filesystem::path bucket_dir;
    std::filesystem::path trace_path;
    std::filesystem::path out_dir;
    std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> rates{1.5, 6.0};
    std::vector<std::uint64_t> seeds{1, 2, 3};
    double tolerance = 0.2;
    bool normalize = true;
    std::size_t cache_buckets = 20;
    double threshold = 0.03;
    double tb_ms = 1200.0;
    double tm_ms = 0.13;
};

struct SelectAlphaArgs {
    std::filesystem::path curve_path;
    double tolerance = 0.2;
};

void cmd_build(const BuildArgs& args, std::ostream& out);
void cmd_gen(const GenArgs& args, std::ostream& out);
void cmd_run(const RunArgs& args, std::ostream& out);
void cmd_sweep(const SweepArgs& args, std::ostream& out);
void cmd_select_alpha(const SelectAlphaArgs& args, std::ostream& out);

sched::PolicyKind parse_policy(const std::string& name);

// CLI11 wiring; returns the process exit code (0 ok, 2 config, 3 runtime).
int run_main(int argc, char** argv);

} // namespace skybatch::cli
