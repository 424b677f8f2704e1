#include "tte/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tte/embedding.hpp"
#include "tte/engine.hpp"
#include "tte/error.hpp"
#include "tte/metrics.hpp"
#include "tte/provider.hpp"
#include "tte/registry.hpp"
#include "tte/sandbox.hpp"
#include "tte/theory.hpp"

namespace tte::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Usage-level failure carrying its exit code.
struct Exit {
    int code;
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Exit{kUsage, "cannot read " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fixed(double v, int digits) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(digits) << v;
    return ss.str();
}

struct RunArgs {
    std::string config_path;
    std::vector<std::string> sets;
    std::string provider;
    std::string embedder = "hash:256";
    std::string sandbox = kDefaultSandbox;
    std::string corpus;
    std::string library;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool provider_judge = false;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
    EngineConfig config;
    try {
        if (!a.config_path.empty()) config = EngineConfig::from_json(json::parse(read_file(a.config_path)));
        for (const std::string& kv : a.sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw Exit{kUsage, "--set expects key=value, got '" + kv + "'"};
            config.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        config.validate();
    } catch (const json::exception& e) {
        throw Exit{kUsage, std::string("config: ") + e.what()};
    } catch (const Error& e) {
        throw Exit{kUsage, e.what()};
    }

    std::vector<Problem> problems;
    try {
        problems = parse_corpus(read_file(a.corpus));
    } catch (const Error& e) {
        throw Exit{kUsage, e.what()};
    }

    std::unique_ptr<ModelProvider> provider;
    std::unique_ptr<Embedder> embedder;
    try {
        provider = make_provider(a.provider, config.temperature);
        embedder = make_embedder(a.embedder);
    } catch (const Error& e) {
        throw Exit{e.code() == ErrorCode::InvalidArgument ? kUsage : kProviderBootstrap, e.what()};
    }

    ToolLibrary library(config.capacity, config.min_usage);
    if (!a.library.empty()) {
        try {
            library = load_snapshot(read_file(a.library), embedder->id());
        } catch (const Error& e) {
            throw Exit{kUsage, e.what()};
        }
        library.set_capacity(config.capacity);
        library.set_min_usage(config.min_usage);
    }
    if (library.provider().empty()) library.set_embedding_identity(embedder->id(), embedder->dim());

    std::unique_ptr<Sandbox> sandbox;
    try {
        SupervisorOptions opts;
        opts.address_space_mb = config.memory_cap_mb;
        sandbox = make_sandbox(a.sandbox, opts);
    } catch (const Error& e) {
        throw Exit{kSandboxBootstrap, e.what()};
    }

    const fs::path dir(a.out_dir);
    std::error_code ec;
    fs::create_directories(dir / "traces", ec);
    if (ec) throw Exit{kUsage, "cannot create " + (dir / "traces").string() + ": " + ec.message()};

    Engine engine(config, Providers{*provider, *embedder, *embedder, nullptr}, *sandbox);
    StreamResult stream = run_stream(problems, std::move(library), engine,
                                     [&](std::size_t i, const SolveResult& r, const ToolLibrary&) {
                                         write_file_atomic((dir / "traces" / (problems[i].id + ".json")).string(),
                                                           trace_to_json(problems[i], r).dump(2) + "\n");
                                     });

    std::vector<metrics::EvalRecord> records;
    std::ostringstream csv;
    csv << "problem_id,predicted,gold,correct,judge_mode,final_action,library_size,diagnostic\n";
    for (std::size_t i = 0; i < problems.size(); ++i) {
        const Problem& p = problems[i];
        metrics::JudgeOptions jo;
        jo.use_provider = a.provider_judge;
        jo.provider = provider.get();
        jo.question = p.question;
        records.push_back(metrics::judge(p.id, stream.results[i].answer, p.gold, jo));
        const auto& r = records.back();
        const std::string gold = p.gold.value.is_string() ? p.gold.value.get<std::string>() : p.gold.value.dump();
        csv << metrics::csv_escape(p.id) << ',' << metrics::csv_escape(r.predicted.value_or("")) << ','
            << metrics::csv_escape(gold) << ',' << (r.correct ? "true" : "false") << ','
            << metrics::to_string(r.judge_mode) << ',' << to_string(stream.results[i].trace.final_action) << ','
            << stream.library_sizes[i] << ',' << metrics::csv_escape(r.diagnostic) << '\n';
    }

    ordered_json report = metrics::build_report(records, stream.library, stream.library_sizes, config.lambda);
    ordered_json manifest;
    manifest["config"] = config.to_json();
    manifest["provider"] = a.provider;
    manifest["embedder"] = embedder->id();
    manifest["sandbox"] = a.sandbox;
    manifest["corpus"] = a.corpus;
    manifest["library"] = a.library.empty() ? ordered_json(nullptr) : ordered_json(a.library);
    manifest["seed"] = a.seed;
    report["manifest"] = manifest;

    write_file_atomic((dir / "library.json").string(), save_snapshot(stream.library));
    write_file_atomic((dir / "report.json").string(), report.dump(2) + "\n");
    write_file_atomic((dir / "records.csv").string(), csv.str());

    std::size_t correct = 0;
    for (const auto& r : records) correct += r.correct ? 1 : 0;
    out << "solved " << correct << "/" << records.size() << ", library size " << stream.library.size() << "\n";
    return kOk;
}

int cmd_inspect(const std::string& path, std::ostream& out) {
    ToolLibrary lib;
    try {
        lib = load_snapshot(read_file(path));
    } catch (const Error& e) {
        throw Exit{kUsage, e.what()};
    }
    out << "library size: " << lib.size() << " (capacity " << lib.capacity() << ")\n";
    if (lib.empty()) {
        out << "TRR undefined (empty library)\n";
        return kOk;
    }
    auto opt = [](const std::optional<double>& v) { return v ? fixed(*v, 4) : std::string("undefined"); };
    out << "k\tTRR\tTRR_evol\tTRR_trans\n";
    for (std::uint64_t k : metrics::kReportKs) {
        const auto s = metrics::trr_stratified(lib, k);
        out << k << '\t' << fixed(metrics::trr_at_k(lib, k), 4) << '\t' << opt(s.evol) << '\t' << opt(s.trans)
            << '\n';
    }
    out << "hits\ttools\n";
    for (const auto& [label, n] : metrics::histogram_bins(metrics::hit_histogram(lib))) {
        out << label << '\t' << n << '\n';
    }
    return kOk;
}

int cmd_sample(const std::string& corpus, const std::string& embedder_spec, std::size_t n_clusters,
               std::size_t per_cluster, std::uint64_t seed, std::ostream& out) {
    std::vector<Problem> problems;
    std::unique_ptr<Embedder> embedder;
    try {
        problems = parse_corpus(read_file(corpus));
        embedder = make_embedder(embedder_spec);
    } catch (const Error& e) {
        throw Exit{kUsage, e.what()};
    }
    if (n_clusters == 0 || per_cluster == 0) throw Exit{kUsage, "clusters and per-cluster must be positive"};
    std::vector<metrics::SampleItem> items;
    try {
        for (const Problem& p : problems) items.push_back({p.id, embedder->embed(p.question)});
    } catch (const Error& e) {
        throw Exit{kProviderBootstrap, e.what()};
    }
    for (const std::string& id : metrics::stratified_seed_sample(items, n_clusters, per_cluster, seed)) {
        out << id << '\n';
    }
    return kOk;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty()) out << text;
    else write_file_atomic(path, text);
}

}  // namespace

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorCode::InvalidArgument, "cannot write " + tmp);
        f << content;
        f.flush();
        if (!f) throw Error(ErrorCode::InvalidArgument, "short write to " + tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::InvalidArgument, "cannot rename onto " + path);
    }
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Test-time tool evolution engine"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Solve a problem stream and evolve the tool library");
    run_cmd->add_option("--config", run.config_path, "JSON file with engine settings");
    run_cmd->add_option("--set", run.sets, "Override one setting: key=value");
    run_cmd->add_option("--provider", run.provider, "scripted:<path> or http:<url>")->required();
    run_cmd->add_option("--embedder", run.embedder, "hash:<dim> or http:<url>#dim=<n>#model=<m>");
    run_cmd->add_option("--sandbox", run.sandbox, "stub:<path> or cmd:<argv>");
    run_cmd->add_option("--corpus", run.corpus, "JSON-lines problem file")->required();
    run_cmd->add_option("--library", run.library, "Initial library snapshot");
    run_cmd->add_option("--out", run.out_dir, "Output directory");
    run_cmd->add_option("--seed", run.seed, "Recorded in the run manifest");
    run_cmd->add_flag("--provider-judge", run.provider_judge, "Ask the provider to judge text answers");

    std::string inspect_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Summarize a library snapshot");
    inspect_cmd->add_option("snapshot", inspect_path)->required();

    auto* sim_cmd = app.add_subcommand("sim", "Run a dynamics simulation and print CSV");
    sim_cmd->require_subcommand(1);
    std::string sim_out;
    sim_cmd->add_option("--out", sim_out, "Write CSV here instead of stdout");

    theory::GrowthParams growth;
    double horizon = 0.0, dt = 0.0;
    auto* growth_cmd = sim_cmd->add_subcommand("growth", "Library size dynamics");
    growth_cmd->add_option("--lambda-g", growth.lambda_g);
    growth_cmd->add_option("--lambda-p", growth.lambda_p);
    growth_cmd->add_option("--k-cap", growth.k_cap);
    growth_cmd->add_option("--l0", growth.l0);
    growth_cmd->add_option("--horizon", horizon, "Default 20/B");
    growth_cmd->add_option("--dt", dt, "Default 1e-3/B");
    growth.record_stride = 100;
    growth_cmd->add_option("--stride", growth.record_stride, "Emit every n-th step");

    theory::RetrievalNoiseModel retrieval;
    auto* retrieval_cmd = sim_cmd->add_subcommand("retrieval", "Retrieval success against distractors");
    retrieval_cmd->add_option("--relevant-mean", retrieval.relevant.mean);
    retrieval_cmd->add_option("--relevant-sd", retrieval.relevant.stddev);
    retrieval_cmd->add_option("--noise-mean", retrieval.noise.mean);
    retrieval_cmd->add_option("--noise-sd", retrieval.noise.stddev);
    retrieval_cmd->add_option("--n", retrieval.n_values, "Library sizes")->delimiter(',');
    retrieval_cmd->add_option("--samples", retrieval.samples);
    retrieval_cmd->add_option("--seed", retrieval.seed);

    theory::DecompositionSimConfig decomp;
    std::string joint = "independent";
    std::vector<double> marginals;
    auto* decomp_cmd = sim_cmd->add_subcommand("decomposition", "Atomic vs. monolithic reuse");
    decomp_cmd->add_option("--k", decomp.k);
    decomp_cmd->add_option("--marginals", marginals, "One per op, or one shared value")->delimiter(',');
    decomp_cmd->add_option("--model", joint)->check(CLI::IsMember({"independent", "all-or-subset"}));
    decomp_cmd->add_option("--p-partial", decomp.p_partial);
    decomp_cmd->add_option("--queries", decomp.num_queries);
    decomp_cmd->add_option("--seed", decomp.seed);

    std::string sample_corpus, sample_embedder = "hash:256";
    std::size_t n_clusters = 10, per_cluster = 1;
    std::uint64_t sample_seed = 0;
    auto* sample_cmd = app.add_subcommand("sample", "Cluster-stratified seed sampling");
    sample_cmd->add_option("--corpus", sample_corpus)->required();
    sample_cmd->add_option("--embedder", sample_embedder);
    sample_cmd->add_option("--clusters", n_clusters);
    sample_cmd->add_option("--per-cluster", per_cluster);
    sample_cmd->add_option("--seed", sample_seed);

    std::vector<std::string> rev(args.rbegin(), args.rend());  // CLI11 consumes from the back
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*run_cmd) return cmd_run(run, out);
        if (*inspect_cmd) return cmd_inspect(inspect_path, out);
        if (*sample_cmd) return cmd_sample(sample_corpus, sample_embedder, n_clusters, per_cluster, sample_seed, out);
        std::ostringstream csv;
        try {
            if (*growth_cmd) {
                if (horizon > 0.0) growth.horizon = horizon;
                if (dt > 0.0) growth.dt = dt;
                theory::write_csv(csv, theory::library_growth(growth));
            } else if (*retrieval_cmd) {
                theory::write_csv(csv, theory::retrieval_success_curve(retrieval));
            } else {
                decomp.joint_model =
                    joint == "independent" ? theory::JointModel::Independent : theory::JointModel::AllOrSubset;
                if (marginals.size() == 1) marginals.assign(static_cast<std::size_t>(std::max(decomp.k, 1)), marginals[0]);
                if (!marginals.empty()) decomp.op_marginals = marginals;
                else decomp.op_marginals.assign(static_cast<std::size_t>(std::max(decomp.k, 1)), 0.5);
                theory::write_csv(csv, theory::simulate_decomposition_gain(decomp));
            }
        } catch (const Error& e) {
            throw Exit{kUsage, e.what()};
        }
        emit(sim_out, csv.str(), out);
        return kOk;
    } catch (const Exit& e) {
        err << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace tte::cli
