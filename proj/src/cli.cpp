#include "skybatch/cli.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "skybatch/errors.hpp"
#include "skybatch/trace_io.hpp"

namespace skybatch::cli {

namespace {

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<std::shared_ptr<const store::Bucket>> load_all_buckets(
    const std::filesystem::path& dir, const store::Manifest& man) {
    std::vector<std::shared_ptr<const store::Bucket>> buckets;
    buckets.reserve(man.buckets.size());
    for (std::uint32_t i = 0; i < man.buckets.size(); ++i) {
        buckets.push_back(std::make_shared<store::Bucket>(store::read_bucket(dir, man, i)));
    }
    return buckets;
}

store::BucketCache::Loader loader_for(
    std::vector<std::shared_ptr<const store::Bucket>> buckets) {
    return [buckets = std::move(buckets)](std::uint32_t index) { return buckets.at(index); };
}

void write_metrics_csv(std::ostream& os, const std::string& config_echo,
                       const std::vector<std::string>& rows) {
    os << "# " << config_echo << "\n";
    os << "policy,alpha,rate_qps,seed,completed,makespan_ms,throughput_qps,"
          "mean_resp_ms,var_resp_ms2,cache_hit_rate\n";
    for (const auto& r : rows) os << r << "\n";
}

std::string metrics_row(const std::string& policy, double alpha, double rate,
                        std::uint64_t seed, const sim::SimMetrics& m) {
    std::ostringstream row;
    row << policy << ',' << fmt(alpha) << ',' << fmt(rate) << ',' << seed << ','
        << m.completed << ',' << fmt(m.makespan_ms) << ',' << fmt(m.throughput_qps) << ','
        << fmt(m.mean_response_ms) << ',' << fmt(m.var_response_ms2) << ','
        << fmt(m.cache_hit_rate);
    return row.str();
}

double realized_rate_qps(const std::vector<workload::Query>& queries) {
    if (queries.empty() || queries.back().arrival <= 0) return 0.0;
    return static_cast<double>(queries.size()) / (to_ms(queries.back().arrival) / 1000.0);
}

} // namespace

sched::PolicyKind parse_policy(const std::string& name) {
    if (name == "liferaft") return sched::PolicyKind::LifeRaft;
    if (name == "rr") return sched::PolicyKind::RoundRobin;
    if (name == "noshare") return sched::PolicyKind::NoShare;
    throw ConfigError("unknown policy '" + name + "' (expected liferaft, rr, noshare)");
}

void cmd_build(const BuildArgs& args, std::ostream& out) {
    if (args.capacity < 1 || args.n_objects < 1) {
        throw ConfigError("build: capacity and object count must be >= 1");
    }
    gen::CatalogConfig cfg;
    cfg.seed = args.seed;
    cfg.n_objects = args.n_objects;
    auto catalog = gen::generate_catalog(cfg);
    auto buckets = store::partition_catalog(std::move(catalog), args.capacity);
    auto manifest = store::write_buckets(buckets, args.capacity, args.out_dir);
    out << "buckets " << manifest.buckets.size() << "\n";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, manifest.layout_hash());
    out << "layout " << buf << "\n";
}

void cmd_gen(const GenArgs& args, std::ostream& out) {
    auto manifest = store::read_manifest(args.bucket_dir);
    auto result = gen::generate_trace(args.cfg, manifest);

    std::vector<std::string> header;
    header.push_back("skybatch trace");
    std::ostringstream echo;
    echo << "config: seed=" << args.cfg.seed << " queries=" << args.cfg.n_queries
         << " rate_qps=" << fmt(args.cfg.rate_qps) << " objects=" << args.cfg.objects_min
         << ".." << args.cfg.objects_max << " shape=" << fmt(args.cfg.objects_shape)
         << " rho=" << fmt(args.cfg.rho) << " hotspots=" << args.cfg.hotspot_count
         << " tuned_exponent=" << fmt(result.report.tuned_exponent);
    header.push_back(echo.str());
    workload::write_trace(args.out_trace, result.queries, header, manifest.layout_hash());

    auto report_path = args.report_path.empty()
                           ? std::filesystem::path(args.out_trace.string() + ".genreport")
                           : args.report_path;
    std::ofstream rf(report_path, std::ios::trunc);
    if (!rf) throw StorageError("cannot write " + report_path.string());
    rf << result.report.to_text();

    out << "queries " << result.queries.size() << "\n";
    out << "top2pct_mass " << fmt(result.report.stats.top2pct_mass) << "\n";
    out << "top10_query_coverage " << fmt(result.report.stats.top10_query_coverage) << "\n";
    for (const auto& w : result.report.warnings) {
        out << "warning " << w << "\n";
    }
}

namespace {

sim::SimConfig sim_config(const std::string& policy, double alpha, bool normalize,
                          std::size_t cache_buckets, double threshold, double tb_ms,
                          double tm_ms, std::size_t capacity) {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha outside [0,1]");
    if (threshold <= 0.0 || threshold >= 1.0) throw ConfigError("threshold outside (0,1)");
    if (tb_ms <= 0.0 || tm_ms <= 0.0) throw ConfigError("cost constants must be > 0");
    sim::SimConfig cfg;
    cfg.policy.kind = parse_policy(policy);
    cfg.policy.alpha = alpha;
    cfg.policy.normalize = normalize;
    cfg.policy.costs = {tb_ms, tm_ms};
    cfg.cache_buckets = cache_buckets;
    cfg.model.costs = {tb_ms, tm_ms};
    cfg.model.threshold = threshold;
    cfg.model.bucket_capacity = capacity;
    return cfg;
}

std::string config_echo(const char* cmd, const RunArgs& args) {
    std::ostringstream echo;
    echo << cmd << " config: policy=" << args.policy << " alpha=" << fmt(args.alpha)
         << " normalize_eq2=" << (args.normalize ? 1 : 0)
         << " cache_buckets=" << args.cache_buckets << " threshold=" << fmt(args.threshold)
         << " tb_ms=" << fmt(args.tb_ms) << " tm_ms=" << fmt(args.tm_ms)
         << " seed=" << args.seed << " trace=" << args.trace_path.filename().string();
    return echo.str();
}

} // namespace

void cmd_run(const RunArgs& args, std::ostream& out) {
    auto manifest = store::read_manifest(args.bucket_dir);
    auto trace = workload::read_trace(args.trace_path);
    if (trace.layout_hash && *trace.layout_hash != manifest.layout_hash()) {
        throw ConfigError("trace was generated against a different bucket layout");
    }

    auto cfg = sim_config(args.policy, args.alpha, args.normalize, args.cache_buckets,
                          args.threshold, args.tb_ms, args.tm_ms, manifest.capacity);
    auto loader = loader_for(load_all_buckets(args.bucket_dir, manifest));

    std::vector<sim::DecisionRecord> decisions;
    auto metrics = sim::run(trace.queries, manifest, loader, cfg,
                            args.explain ? &decisions : nullptr);

    std::vector<std::string> rows{metrics_row(args.policy, args.alpha,
                                              realized_rate_qps(trace.queries), args.seed,
                                              metrics)};
    if (args.out) {
        std::ofstream f(*args.out, std::ios::trunc);
        if (!f) throw StorageError("cannot write " + args.out->string());
        write_metrics_csv(f, config_echo("run", args), rows);
    } else {
        write_metrics_csv(out, config_echo("run", args), rows);
    }

    if (args.explain) {
        std::ofstream f(*args.explain, std::ios::trunc);
        if (!f) throw StorageError("cannot write " + args.explain->string());
        f << "# " << config_echo("run", args) << "\n";
        f << "time_ms,bucket,score,strategy,batch_size\n";
        for (const auto& d : decisions) {
            f << fmt(to_ms(d.time)) << ',' << d.bucket << ',' << fmt(d.score) << ','
              << (d.strategy == join::Strategy::Scan ? "scan" : "index") << ','
              << d.batch_size << "\n";
        }
    }
}

void cmd_sweep(const SweepArgs& args, std::ostream& out) {
    if (args.alphas.empty() || args.rates.empty() || args.seeds.empty()) {
        throw ConfigError("sweep: empty alpha/rate/seed grid");
    }
    if (args.tolerance < 0.0 || args.tolerance >= 1.0) {
        throw ConfigError("sweep: tolerance outside [0,1)");
    }
    auto manifest = store::read_manifest(args.bucket_dir);
    auto trace = workload::read_trace(args.trace_path);
    if (trace.layout_hash && *trace.layout_hash != manifest.layout_hash()) {
        throw ConfigError("trace was generated against a different bucket layout");
    }

    auto base = sim_config("liferaft", 0.0, args.normalize, args.cache_buckets,
                           args.threshold, args.tb_ms, args.tm_ms, manifest.capacity);
    auto loader = loader_for(load_all_buckets(args.bucket_dir, manifest));

    auto result = sim::sweep(trace.queries, manifest, loader, args.alphas, args.rates,
                             args.seeds, base);

    std::filesystem::create_directories(args.out_dir);

    std::ostringstream echo;
    echo << "sweep config: tolerance=" << fmt(args.tolerance)
         << " normalize_eq2=" << (args.normalize ? 1 : 0)
         << " cache_buckets=" << args.cache_buckets << " threshold=" << fmt(args.threshold)
         << " tb_ms=" << fmt(args.tb_ms) << " tm_ms=" << fmt(args.tm_ms)
         << " trace=" << args.trace_path.filename().string();

    std::vector<std::string> rows;
    for (const auto& cell : result.cells) {
        rows.push_back(
            metrics_row("liferaft", cell.alpha, cell.rate_qps, cell.seed, cell.metrics));
    }
    {
        std::ofstream f(args.out_dir / "cells.csv", std::ios::trunc);
        if (!f) throw StorageError("cannot write sweep cells.csv");
        write_metrics_csv(f, echo.str(), rows);
    }

    std::ofstream sel(args.out_dir / "selected_alpha.csv", std::ios::trunc);
    if (!sel) throw StorageError("cannot write selected_alpha.csv");
    sel << "# " << echo.str() << "\n";
    sel << "rate_qps,alpha,throughput_sacrificed_pct\n";

    for (const auto& curve : result.curves) {
        std::ostringstream name;
        name << "curve_rate_" << fmt(curve.rate_qps) << ".csv";
        write_curve_csv(args.out_dir / name.str(), curve,
                        {echo.str(), "rate_qps=" + fmt(curve.rate_qps),
                         "columns: alpha, throughput (queries/s), mean response (ms)"});

        double alpha = sched::select_alpha(curve, args.tolerance);
        double best = 0.0, chosen = 0.0;
        for (const auto& p : curve.points) {
            best = std::max(best, p.throughput_qps);
            if (p.alpha == alpha) chosen = p.throughput_qps;
        }
        double sacrificed = best <= 0.0 ? 0.0 : 100.0 * (1.0 - chosen / best);
        out << "rate " << fmt(curve.rate_qps) << ": alpha " << fmt(alpha)
            << " (throughput sacrificed " << fmt(sacrificed) << "%)\n";
        sel << fmt(curve.rate_qps) << ',' << fmt(alpha) << ',' << fmt(sacrificed) << "\n";
    }
}

void cmd_select_alpha(const SelectAlphaArgs& args, std::ostream& out) {
    auto curve = sched::read_curve_csv(args.curve_path);
    double alpha = sched::select_alpha(curve, args.tolerance);
    out << "alpha " << fmt(alpha) << "\n";
}

int run_main(int argc, char** argv) {
    CLI::App app{"skybatch: data-driven batch scheduling simulator for spatial "
                 "cross-match workloads"};
    app.require_subcommand(1);
    app.set_config("--config")->description("key=value config file ([subcommand] sections)");
    app.allow_config_extras(CLI::config_extras_mode::error);

    BuildArgs build;
    auto* cb = app.add_subcommand("build", "generate a catalog and write bucket files");
    cb->add_option("--out", build.out_dir, "bucket directory")->required();
    cb->add_option("--capacity", build.capacity, "objects per bucket")
        ->capture_default_str();
    cb->add_option("--seed", build.seed, "catalog seed")->capture_default_str();
    cb->add_option("--n", build.n_objects, "catalog size")->capture_default_str();

    GenArgs genargs;
    auto* cg = app.add_subcommand("gen", "generate a skewed query trace");
    cg->add_option("--bucket-dir", genargs.bucket_dir, "bucket directory")->required();
    cg->add_option("--out", genargs.out_trace, "trace file to write")->required();
    cg->add_option("--report", genargs.report_path, "generation report path");
    cg->add_option("--seed", genargs.cfg.seed, "trace seed")->capture_default_str();
    cg->add_option("--queries", genargs.cfg.n_queries, "query count")
        ->capture_default_str();
    cg->add_option("--rate", genargs.cfg.rate_qps, "arrival rate, queries/s")
        ->capture_default_str();
    cg->add_option("--objects-min", genargs.cfg.objects_min, "min objects per query")
        ->capture_default_str();
    cg->add_option("--objects-max", genargs.cfg.objects_max, "max objects per query")
        ->capture_default_str();
    cg->add_option("--objects-shape", genargs.cfg.objects_shape,
                   "power-law shape (0 = uniform)")
        ->capture_default_str();
    cg->add_option("--hotspots", genargs.cfg.hotspot_count, "hotspot count")
        ->capture_default_str();
    cg->add_option("--zipf", genargs.cfg.zipf_exponent, "zipf exponent (when not tuning)")
        ->capture_default_str();
    cg->add_flag("!--no-tune", genargs.cfg.tune_skew, "disable skew tuning");
    cg->add_option("--rho", genargs.cfg.rho, "temporal hotspot reuse probability")
        ->capture_default_str();
    cg->add_option("--radius-min", genargs.cfg.radius_min, "min match radius (rad)")
        ->capture_default_str();
    cg->add_option("--radius-max", genargs.cfg.radius_max, "max match radius (rad)")
        ->capture_default_str();

    RunArgs runargs;
    std::string run_out, run_explain;
    auto* cr = app.add_subcommand("run", "simulate one policy over a trace");
    cr->add_option("--bucket-dir", runargs.bucket_dir, "bucket directory")->required();
    cr->add_option("--trace", runargs.trace_path, "trace file")->required();
    cr->add_option("--policy", runargs.policy, "liferaft | rr | noshare")
        ->capture_default_str();
    cr->add_option("--alpha", runargs.alpha, "age bias in [0,1]")->capture_default_str();
    cr->add_flag("!--no-normalize-eq2", runargs.normalize,
                 "score with the verbatim un-normalized aged throughput");
    cr->add_option("--cache-buckets", runargs.cache_buckets, "bucket cache capacity")
        ->capture_default_str();
    cr->add_option("--threshold", runargs.threshold, "index/scan break-even fraction")
        ->capture_default_str();
    cr->add_option("--tb-ms", runargs.tb_ms, "bucket read cost, ms")->capture_default_str();
    cr->add_option("--tm-ms", runargs.tm_ms, "per-object match cost, ms")
        ->capture_default_str();
    cr->add_option("--seed", runargs.seed, "label recorded in the seed column")
        ->capture_default_str();
    cr->add_option("--out", run_out, "metrics CSV path (stdout when omitted)");
    cr->add_option("--explain", run_explain, "write the per-decision schedule log here");

    SweepArgs sweepargs;
    auto* cs = app.add_subcommand("sweep", "alpha x saturation sweep with alpha selection");
    cs->add_option("--bucket-dir", sweepargs.bucket_dir, "bucket directory")->required();
    cs->add_option("--trace", sweepargs.trace_path, "trace file")->required();
    cs->add_option("--out", sweepargs.out_dir, "output directory")->required();
    cs->add_option("--alphas", sweepargs.alphas, "alpha grid")
        ->delimiter(',')
        ->capture_default_str();
    cs->add_option("--rates", sweepargs.rates, "arrival-rate grid, queries/s")
        ->delimiter(',')
        ->capture_default_str();
    cs->add_option("--seeds", sweepargs.seeds, "arrival reseeding grid")
        ->delimiter(',')
        ->capture_default_str();
    cs->add_option("--tolerance", sweepargs.tolerance,
                   "allowed fractional throughput degradation")
        ->capture_default_str();
    cs->add_flag("!--no-normalize-eq2", sweepargs.normalize,
                 "score with the verbatim un-normalized aged throughput");
    cs->add_option("--cache-buckets", sweepargs.cache_buckets, "bucket cache capacity")
        ->capture_default_str();
    cs->add_option("--threshold", sweepargs.threshold, "index/scan break-even fraction")
        ->capture_default_str();
    cs->add_option("--tb-ms", sweepargs.tb_ms, "bucket read cost, ms")
        ->capture_default_str();
    cs->add_option("--tm-ms", sweepargs.tm_ms, "per-object match cost, ms")
        ->capture_default_str();

    SelectAlphaArgs selargs;
    auto* csel = app.add_subcommand("select-alpha", "pick alpha from a trade-off curve");
    csel->add_option("--curve", selargs.curve_path, "curve CSV")->required();
    csel->add_option("--tolerance", selargs.tolerance,
                     "allowed fractional throughput degradation")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cb) cmd_build(build, std::cout);
        if (*cg) cmd_gen(genargs, std::cout);
        if (*cr) {
            if (!run_out.empty()) runargs.out = run_out;
            if (!run_explain.empty()) runargs.explain = run_explain;
            cmd_run(runargs, std::cout);
        }
        if (*cs) cmd_sweep(sweepargs, std::cout);
        if (*csel) cmd_select_alpha(selargs, std::cout);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

} // namespace skybatch::cli
