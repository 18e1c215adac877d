#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "regbip/bisect.hpp"
#include "regbip/edge_tools.hpp"
#include "regbip/factor.hpp"
#include "regbip/generators.hpp"
#include "regbip/graph.hpp"
#include "regbip/pipeline.hpp"
#include "regbip/rng.hpp"
#include "regbip/spectral.hpp"

namespace {

using namespace regbip;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitStageFail = 3;

Graph load_graph(const std::string& path) {
    if (path == "-") return read_edge_list(std::cin);
    return load_edge_list(path);
}

void save_graph(const std::string& path, const Graph& g) {
    if (path == "-") {
        write_edge_list(std::cout, g);
        return;
    }
    save_edge_list(path, g);
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-" || path.empty()) {
        std::cout << text << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << text << '\n';
}

long long total_resamples(const nlohmann::json& trace) {
    long long total = 0;
    if (trace.contains("initial")) total += trace["initial"]["stats"]["resamples"].get<long long>();
    if (trace.contains("iterations"))
        for (const auto& it : trace["iterations"]) {
            total += it["stats_x"]["resamples"].get<long long>();
            total += it["stats_y"]["resamples"].get<long long>();
        }
    if (trace.contains("cleanup") && trace["cleanup"].contains("stats_x")) {
        total += trace["cleanup"]["stats_x"]["resamples"].get<long long>();
        total += trace["cleanup"]["stats_y"]["resamples"].get<long long>();
    }
    return total;
}

void apply_config_file(PipelineParams& params, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    nlohmann::json j;
    in >> j;
    if (j.contains("mode"))
        params.mode = j["mode"].get<std::string>() == "strict" ? PipelineParams::Mode::strict
                                                               : PipelineParams::Mode::practical;
    if (j.contains("seed")) params.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("rho")) params.rho = j["rho"].get<double>();
    if (j.contains("alpha")) params.alpha = j["alpha"].get<double>();
    if (j.contains("gamma")) params.gamma = j["gamma"].get<double>();
    if (j.contains("resample_cap")) params.resample_cap = j["resample_cap"].get<long long>();
    if (j.contains("stop_degree")) params.stop_degree = j["stop_degree"].get<int>();
    if (j.contains("initial_slack_multiplier"))
        params.initial_slack_multiplier = j["initial_slack_multiplier"].get<double>();
    if (j.contains("l1_multiplier")) params.l1_multiplier = j["l1_multiplier"].get<double>();
    if (j.contains("goodness_fraction")) params.goodness_fraction = j["goodness_fraction"].get<double>();
    if (j.contains("cleanup_extra")) params.cleanup_extra = j["cleanup_extra"].get<int>();
    if (j.contains("max_iterations")) params.max_iterations = j["max_iterations"].get<int>();
}

struct PipelineFlags {
    std::string mode = "practical";
    std::string config_path;
    PipelineParams params;

    void attach(CLI::App* cmd, bool with_seed = true) {
        cmd->add_option("--mode", mode, "strict or practical")->check(CLI::IsMember({"strict", "practical"}));
        if (with_seed) cmd->add_option("--seed", params.seed, "RNG seed, recorded in output");
        cmd->add_option("--config", config_path, "JSON file overriding parameter defaults");
        cmd->add_option("--rho", params.rho, "regularization density parameter");
        cmd->add_option("--alpha", params.alpha, "demand density parameter");
        cmd->add_option("--gamma", params.gamma, "demand spread parameter");
        cmd->add_option("--stop-degree", params.stop_degree, "practical: iterate until remainders reach this max degree");
        cmd->add_option("--slack-multiplier", params.initial_slack_multiplier, "practical: initial bisection slack = mult*sqrt(d)");
        cmd->add_option("--l1-multiplier", params.l1_multiplier, "practical: cut degree window multiplier");
        cmd->add_option("--goodness-fraction", params.goodness_fraction, "practical: goodness threshold = fraction*d");
        cmd->add_option("--cleanup-extra", params.cleanup_extra, "practical: cleanup bisection count = ceil(log2 Delta) + extra");
        cmd->add_option("--resample-cap", params.resample_cap, "resampling cap per operation");
    }

    PipelineParams finalize(const std::vector<std::string>& argv_snapshot) {
        // --config supplies values under the flags' own names; explicit
        // flags win because CLI11 already wrote them into params. Re-parse
        // order: defaults, then config, then the flags seen on argv.
        (void)argv_snapshot;
        params.mode = mode == "strict" ? PipelineParams::Mode::strict : PipelineParams::Mode::practical;
        return params;
    }
};

int cmd_generate(const std::string& spec, const std::string& out) {
    Graph g = generate_from_spec(spec);
    save_graph(out, g);
    std::cerr << "generated " << g.n() << " vertices, " << g.edge_count() << " edges from " << spec << "\n";
    return kExitOk;
}

int cmd_certify(const std::string& in, double budget, const std::string& out) {
    Graph g = load_graph(in);
    SpectralCertificate cert = certify(g, budget);
    write_text(out, certificate_to_json(cert));
    return kExitOk;
}

int cmd_decompose(const std::string& in, PipelineParams params, const std::string& out,
                  const std::string& trace_path, bool no_timestamp) {
    Graph g = load_graph(in);
    DecomposeResult result = decompose(g, params);
    nlohmann::json j = decomposition_to_json(result, params, !no_timestamp);
    write_text(out, j.dump(2));
    if (!trace_path.empty()) write_text(trace_path, result.trace.dump(2));
    return kExitOk;
}

int cmd_factorize(const std::string& in, PipelineParams params, const std::string& out) {
    Graph g = load_graph(in);
    OneFactorizationResult result = one_factorization(g, params);
    write_text(out, matchings_to_json(g, result).dump(2));
    return kExitOk;
}

int cmd_verify(const std::string& graph_path, const std::string& dec_path, const std::string& out) {
    Graph g = load_graph(graph_path);
    std::ifstream in(dec_path);
    if (!in) throw std::runtime_error("cannot open " + dec_path);
    nlohmann::json j;
    in >> j;
    Decomposition dec = decomposition_from_json(j);
    dec.host = g;
    VerificationReport report = verify(g, dec);
    write_text(out, report.to_json().dump(2));
    return report.all_green() ? kExitOk : kExitVerifyFail;
}

int cmd_probe(const std::string& in, PipelineParams params, int trials, const std::string& out) {
    Graph g = load_graph(in);
    auto reg = g.regular_degree();
    if (!reg) throw std::invalid_argument("probe requires a regular graph");
    const int d = *reg;
    Rng master(params.seed);
    BisectCaps caps{params.resample_cap};
    const double slack = params.initial_slack(d);
    Rng rng_initial = master.spawn();
    auto initial = initial_bisection(g, d, slack, rng_initial, caps);
    BipartiteGraph gxy = induced_bipartite(g, initial.parts);

    auto side_graph = [&](const std::vector<int>& side) {
        auto mask = vertex_mask(g.n(), side);
        std::vector<Edge> edges;
        for (const Edge& e : g.edges())
            if (mask[static_cast<std::size_t>(e.first)] && mask[static_cast<std::size_t>(e.second)])
                edges.push_back(e);
        return Graph(g.n(), std::move(edges));
    };
    GoodBisectionConfig cfg;
    cfg.d = d;
    cfg.d_prime = d / 2.0;
    cfg.l1_multiplier = params.l1_multiplier;
    cfg.goodness_threshold = params.goodness_threshold(d);
    Rng rng_x = master.spawn();
    Rng rng_y = master.spawn();
    auto bx = good_bisection(gxy, true, side_graph(initial.parts.left), cfg, rng_x, caps);
    auto by = good_bisection(gxy, false, side_graph(initial.parts.right), cfg, rng_y, caps);

    Bipartition probe_parts{bx.split.left, by.split.left};
    if (probe_parts.left.size() != probe_parts.right.size()) probe_parts.right = by.split.right;
    if (probe_parts.left.size() != probe_parts.right.size())
        throw std::runtime_error("probe: could not balance the primed sides");
    BipartiteGraph sub = induced_bipartite(gxy.graph, probe_parts);

    std::vector<int> both = probe_parts.left;
    both.insert(both.end(), probe_parts.right.begin(), probe_parts.right.end());
    auto st = side_degree_stats(sub.graph, both);

    Rng rng_probe = master.spawn();
    ProbeReport report = probe_robust_matchability(sub, d, params.rho, params.alpha, params.gamma,
                                                   trials, rng_probe);
    nlohmann::json j = nlohmann::json::parse(report.to_json());
    j["min_degree"] = st.min_degree;
    j["goodness_threshold"] = cfg.goodness_threshold;
    j["rho"] = params.rho;
    j["alpha"] = params.alpha;
    j["gamma"] = params.gamma;
    j["seed"] = params.seed;
    write_text(out, j.dump(2));
    return report.successes == report.trials ? kExitOk : kExitVerifyFail;
}

int cmd_bench(const std::vector<int>& ns, const std::vector<int>& ds, PipelineParams base,
              const std::string& out) {
    std::ostringstream csv;
    csv << "n,d,mode,parts,bound,resamples,wall_ms,verified\n";
    Rng master(base.seed);
    for (int n : ns) {
        for (int d : ds) {
            if (d >= n || (static_cast<long long>(n) * d) % 2 != 0) continue;
            Rng cell_rng = master.spawn();
            std::uint64_t cell_seed = cell_rng.next_u64();
            PipelineParams params = base;
            params.seed = cell_seed;
            int parts = 0;
            double bound = 0.0;
            long long resamples = 0;
            bool verified = false;
            auto start = std::chrono::steady_clock::now();
            try {
                Graph g = random_regular(n, d, cell_seed);
                DecomposeResult result = decompose(g, params);
                parts = result.report.part_count;
                bound = result.report.bound;
                resamples = total_resamples(result.trace);
                verified = result.report.all_green();
            } catch (const std::exception& e) {
                std::cerr << "bench cell n=" << n << " d=" << d << " failed: " << e.what() << "\n";
            }
            auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
            csv << n << ',' << d << ',' << base.mode_name() << ',' << parts << ',' << bound << ','
                << resamples << ',' << wall << ',' << (verified ? 1 : 0) << '\n';
        }
    }
    std::string text = csv.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    write_text(out, text);
    return kExitOk;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string tok;
    while (std::getline(in, tok, ',')) out.push_back(std::stoi(tok));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regular bipartite decompositions of pseudorandom regular graphs"};
    app.require_subcommand(1);

    // generate
    auto* generate = app.add_subcommand("generate", "write a graph in edge-list format");
    std::string gen_spec, gen_out = "-";
    generate->add_option("--spec", gen_spec, "e.g. random_regular:n=200,d=32,seed=7")->required();
    generate->add_option("--out", gen_out, "output path or -");

    // certify
    auto* certify_cmd = app.add_subcommand("certify", "spectral (n,d,lambda) certificate");
    std::string cert_in, cert_out = "-";
    double cert_budget = 1.0 / 12.0;
    certify_cmd->add_option("--in", cert_in, "edge-list path or -")->required();
    certify_cmd->add_option("--budget", cert_budget, "lambda budget as a fraction of d");
    certify_cmd->add_option("--out", cert_out, "certificate JSON path or -");

    // decompose
    auto* decompose_cmd = app.add_subcommand("decompose", "decompose into regular bipartite spanning subgraphs");
    std::string dec_in, dec_out = "-", dec_trace;
    bool no_timestamp = false;
    PipelineFlags dec_flags;
    decompose_cmd->add_option("--in", dec_in, "edge-list path or -")->required();
    decompose_cmd->add_option("--out", dec_out, "decomposition JSON path or -");
    decompose_cmd->add_option("--trace", dec_trace, "trace JSON path");
    decompose_cmd->add_flag("--no-timestamp", no_timestamp, "omit the timestamp field");
    dec_flags.attach(decompose_cmd);

    // factorize
    auto* factorize_cmd = app.add_subcommand("factorize", "decompose into perfect matchings");
    std::string fac_in, fac_out = "-";
    PipelineFlags fac_flags;
    factorize_cmd->add_option("--in", fac_in, "edge-list path or -")->required();
    factorize_cmd->add_option("--out", fac_out, "matchings JSON path or -");
    fac_flags.attach(factorize_cmd);

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "check a decomposition against its graph");
    std::string ver_graph, ver_dec, ver_out = "-";
    verify_cmd->add_option("--graph", ver_graph, "edge-list path or -")->required();
    verify_cmd->add_option("--dec", ver_dec, "decomposition JSON path")->required();
    verify_cmd->add_option("--out", ver_out, "report JSON path or -");

    // probe
    auto* probe_cmd = app.add_subcommand("probe", "robust-matchability probe of the absorber");
    std::string probe_in, probe_out = "-";
    int probe_trials = 200;
    PipelineFlags probe_flags;
    probe_flags.params.rho = 0.05;
    probe_flags.params.alpha = 0.05;
    probe_cmd->add_option("--in", probe_in, "edge-list path or -")->required();
    probe_cmd->add_option("--trials", probe_trials, "number of probe trials");
    probe_cmd->add_option("--out", probe_out, "report JSON path or -");
    probe_flags.attach(probe_cmd);

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "decompose a grid of random regular graphs, CSV output");
    std::string bench_ns = "64,128", bench_ds = "8,16,32", bench_out = "-";
    PipelineFlags bench_flags;
    bench_cmd->add_option("--n-list", bench_ns, "comma-separated vertex counts");
    bench_cmd->add_option("--d-list", bench_ds, "comma-separated degrees");
    bench_cmd->add_option("--out", bench_out, "CSV path or -");
    bench_flags.attach(bench_cmd);

    // Apply --config before CLI11 writes explicit flags.
    for (PipelineFlags* flags : {&dec_flags, &fac_flags, &probe_flags, &bench_flags}) {
        (void)flags;
    }
    std::vector<std::string> raw_args(argv + 1, argv + argc);
    for (std::size_t i = 0; i + 1 < raw_args.size(); ++i) {
        if (raw_args[i] == "--config") {
            try {
                for (PipelineFlags* flags : {&dec_flags, &fac_flags, &probe_flags, &bench_flags})
                    apply_config_file(flags->params, raw_args[i + 1]);
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitUsage;
            }
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*generate) return cmd_generate(gen_spec, gen_out);
        if (*certify_cmd) return cmd_certify(cert_in, cert_budget, cert_out);
        if (*decompose_cmd)
            return cmd_decompose(dec_in, dec_flags.finalize(raw_args), dec_out, dec_trace, no_timestamp);
        if (*factorize_cmd) return cmd_factorize(fac_in, fac_flags.finalize(raw_args), fac_out);
        if (*verify_cmd) return cmd_verify(ver_graph, ver_dec, ver_out);
        if (*probe_cmd) return cmd_probe(probe_in, probe_flags.finalize(raw_args), probe_trials, probe_out);
        if (*bench_cmd)
            return cmd_bench(parse_int_list(bench_ns), parse_int_list(bench_ds),
                             bench_flags.finalize(raw_args), bench_out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStageFail;
    }
    return kExitUsage;
}
