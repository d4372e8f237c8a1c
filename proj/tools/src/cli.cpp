#include "geoprune_cli/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <csignal>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "geoprune/corruption.hpp"
#include "geoprune/error.hpp"
#include "geoprune/geometry.hpp"
#include "geoprune/io.hpp"
#include "geoprune/network.hpp"
#include "geoprune/pruning.hpp"
#include "geoprune/registry.hpp"
#include "geoprune/service.hpp"
#include "geoprune/stats.hpp"
#include "geoprune/synthetic.hpp"

namespace geoprune::cli {

using nlohmann::json;

namespace {

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::size_t> parse_sizes(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t pos = 0;
        const unsigned long v = std::stoul(item, &pos);
        if (pos != item.size()) throw std::invalid_argument("not an integer list: '" + text + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

NetworkSpec read_spec_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    // A checkpoint manifest carries its spec under "spec".
    const json j = json::parse(ss.str(), nullptr, false);
    if (j.is_object() && j.contains("spec") && !j.contains("layer_sizes")) return spec_from_json(j.at("spec").dump());
    return spec_from_json(ss.str());
}

struct Options {
    bool json_out = false;

    // train
    std::string spec_path;
    std::string layers;
    std::uint64_t init_seed = 0;
    std::string data;
    std::string out;
    std::size_t epochs = 30;
    double lr = 0.05;
    std::size_t batch = 32;
    std::uint64_t seed = 0;

    // prune
    std::string method = "magnitude";
    double rate = 0.5;
    std::string in;
    std::string scope = "global";

    // corrupt
    std::string types;

    // snapshot / registry
    std::string registry;
    std::string ckpt;
    std::string archive;
    std::string combo;
    std::string arch = "mlp";
    std::optional<double> combo_rate;
    std::string train_dataset;

    // eval
    std::string suite;
    std::string subset;
    bool per_severity = false;
    std::string filter_arch;

    // rand-angle
    std::string dims = "2,8,32,128,512";
    std::size_t pairs = 10000;

    // margin-shift
    std::string ref;
    std::string cmp;

    // serve
    std::string host = "127.0.0.1";
    int port = 8080;
    std::vector<std::string> origins;

    // export
    std::string what = "dataset";
    std::string kind = "glyphs";
    std::size_t samples = 1000;
    std::size_t classes = 4;
    std::size_t side = 8;
    std::uint64_t first_id = 0;
    std::string dataset_id;
    std::string snapshot_dataset = kCleanDataset;
    std::optional<std::uint32_t> class_label;
};

void emit(std::ostream& out, bool as_json, const json& j, const std::string& text) {
    if (as_json) {
        out << j.dump() << '\n';
    } else {
        out << text;
    }
}

Registry open_registry(const Options& o) {
    std::filesystem::path root = o.registry;
    if (const char* env = std::getenv(kRegistryEnvVar); root.empty() && env && *env) root = env;
    if (root.empty()) throw std::invalid_argument("--registry is required (or set " + std::string(kRegistryEnvVar) + ")");
    return Registry::open(root);
}

int cmd_train(const Options& o, std::ostream& out) {
    NetworkSpec spec;
    if (!o.spec_path.empty()) {
        spec = read_spec_file(o.spec_path);
    } else if (!o.layers.empty()) {
        spec.layer_sizes = parse_sizes(o.layers);
        spec.seed = o.init_seed;
    } else {
        throw std::invalid_argument("train needs --spec or --layers");
    }
    spec.validate();
    const LabeledDataset data = load_dataset(o.data);
    TrainConfig cfg{o.lr, o.epochs, o.batch, o.seed};
    const Network net = train(Network::initialize(spec), data, cfg);
    save_checkpoint(o.out, net);
    const double acc = accuracy(net, data);
    const double l = mean_loss(net, data);
    std::ostringstream text;
    text << "trained " << o.out << "  train accuracy " << std::fixed << std::setprecision(4) << acc << "  loss " << l
         << '\n';
    emit(out, o.json_out, {{"checkpoint", o.out}, {"train_accuracy", acc}, {"train_loss", l}}, text.str());
    return 0;
}

int cmd_prune(const Options& o, std::ostream& out) {
    const PruneMethod method = parse_prune_method(o.method);
    const PruneScope scope = parse_prune_scope(o.scope);
    std::optional<LabeledDataset> data;
    if (!o.data.empty()) data = load_dataset(o.data);
    Network result = [&]() -> Network {
        if (method == PruneMethod::mpt) {
            NetworkSpec spec;
            if (!o.spec_path.empty()) {
                spec = read_spec_file(o.spec_path);
            } else if (!o.in.empty()) {
                spec = load_checkpoint(o.in).spec();
            } else {
                throw std::invalid_argument("mpt needs --spec or --in for the architecture");
            }
            if (!data) throw std::invalid_argument("mpt needs --data");
            BipropConfig cfg;
            cfg.prune_rate = o.rate;
            cfg.epochs = o.epochs;
            cfg.learning_rate = o.lr;
            cfg.batch_size = o.batch;
            cfg.seed = o.seed;
            return biprop_train(spec, *data, cfg).network;
        }
        if (o.in.empty()) throw std::invalid_argument("prune needs --in");
        const Network net = load_checkpoint(o.in);
        switch (method) {
            case PruneMethod::none: return net;
            case PruneMethod::random: return apply_mask(net, prune_random(net, o.rate, o.seed));
            case PruneMethod::magnitude: return apply_mask(net, prune_magnitude(net, o.rate, scope));
            case PruneMethod::taylor: {
                if (!data) throw std::invalid_argument("taylor needs --data");
                return apply_mask(net, prune_by_scores(taylor_importance(net, *data), o.rate, scope,
                                                       default_prunable_layers(net)));
            }
            case PruneMethod::mpt: break;
        }
        throw std::logic_error("unhandled method");
    }();
    save_checkpoint(o.out, result);
    const PruneMask mask = mask_of(result);
    json j{{"checkpoint", o.out},
           {"method", std::string(to_string(method))},
           {"rate", o.rate},
           {"sparsity", sparsity(mask)},
           {"masked", mask.masked_count()},
           {"prunable", mask.prunable_weight_count()}};
    std::ostringstream text;
    text << "pruned " << o.out << " with " << to_string(method) << "  sparsity " << sparsity(mask) << " ("
         << mask.masked_count() << "/" << mask.prunable_weight_count() << ")";
    if (data) {
        const double acc = accuracy(result, *data);
        j["accuracy"] = acc;
        text << "  accuracy " << acc;
    }
    text << '\n';
    emit(out, o.json_out, j, text.str());
    return 0;
}

int cmd_corrupt(const Options& o, std::ostream& out) {
    const LabeledDataset data = load_dataset(o.data);
    std::vector<CorruptionType> types;
    if (o.types.empty()) {
        types = default_suite_types();
    } else {
        for (const auto& t : split(o.types)) types.push_back(parse_corruption_type(t));
    }
    const CorruptedDataset suite = build_suite(data, types, o.seed);
    export_archive(o.out, suite);
    std::ostringstream text;
    text << "wrote " << suite.types.size() << " types x " << kSeverityLevels << " severities for " << suite.size()
         << " samples to " << o.out << '\n';
    emit(out, o.json_out,
         {{"archive", o.out}, {"types", suite.types}, {"samples", suite.size()}, {"variants", suite.total_variants()}},
         text.str());
    return 0;
}

int cmd_snapshot(const Options& o, std::ostream& out) {
    std::filesystem::path root = o.registry;
    if (const char* env = std::getenv(kRegistryEnvVar); root.empty() && env && *env) root = env;
    if (root.empty()) throw std::invalid_argument("--registry is required (or set " + std::string(kRegistryEnvVar) + ")");
    Registry reg = Registry::create(root);
    const LabeledDataset data = load_dataset(o.data);
    std::vector<std::string> written;

    std::string combo_id = o.combo;
    Network net = [&]() -> Network {
        if (!combo_id.empty() && reg.contains(combo_id)) return reg.load_network(combo_id);
        if (o.ckpt.empty()) throw std::invalid_argument("--ckpt is required for a new combination");
        return load_checkpoint(o.ckpt);
    }();
    const std::string created = utc_now();
    if (combo_id.empty() || !reg.contains(combo_id)) {
        Combination c;
        c.id = combo_id;
        c.architecture = o.arch;
        c.method = parse_prune_method(o.method);
        c.prune_rate = o.combo_rate ? *o.combo_rate : std::round(sparsity(mask_of(net)) * 1000.0) / 1000.0;
        c.dataset_id = o.train_dataset.empty() ? data.id : o.train_dataset;
        c.clean_accuracy = accuracy(net, data);
        if (c.id.empty()) c.id = default_combination_id(c);
        combo_id = c.id;
        if (!reg.contains(combo_id)) {
            GeometrySnapshot clean = geometry_snapshot(net, data, combo_id, kCleanDataset);
            clean.created_at = created;
            reg.register_combination(c, net, std::span(&clean, 1));
            written.push_back(kCleanDataset);
        }
    }
    if (!reg.has_snapshot(combo_id, kCleanDataset)) {
        GeometrySnapshot clean = geometry_snapshot(net, data, combo_id, kCleanDataset);
        clean.created_at = created;
        reg.add_snapshot(combo_id, clean);
        written.push_back(kCleanDataset);
    }
    if (!o.archive.empty()) {
        const CorruptedDataset suite = ingest_archive(o.archive, &data);
        for (const auto& type : suite.types) {
            for (int s = 1; s <= kSeverityLevels; ++s) {
                const std::string ds = variant_dataset_id(type, s);
                if (reg.has_snapshot(combo_id, ds)) continue;
                GeometrySnapshot snap = geometry_snapshot(net, suite.as_dataset(type, s), combo_id, ds);
                snap.created_at = created;
                reg.add_snapshot(combo_id, snap);
                written.push_back(ds);
            }
        }
    }
    std::ostringstream text;
    text << "combination " << combo_id << ": wrote " << written.size() << " snapshot(s)\n";
    emit(out, o.json_out, {{"combination_id", combo_id}, {"written", written}}, text.str());
    return 0;
}

int cmd_eval(const Options& o, std::ostream& out) {
    const Registry reg = open_registry(o);
    std::optional<SubsetSelection> subset;
    if (!o.subset.empty()) subset = reg.load_subset(o.subset);

    if (!o.combo.empty()) {
        const std::string suite = o.suite.empty() ? kCleanDataset : o.suite;
        std::vector<std::string> datasets;
        if (suite == kCleanDataset || parse_variant_dataset_id(suite)) {
            datasets.push_back(suite);
        } else {
            for (int s = 1; s <= kSeverityLevels; ++s) datasets.push_back(variant_dataset_id(suite, s));
        }
        std::size_t correct = 0, total = 0;
        for (const auto& ds : datasets) {
            for (const auto& s : reg.load_snapshot(o.combo, ds).samples) {
                if (subset && !std::binary_search(subset->sample_ids.begin(), subset->sample_ids.end(), s.sample_id)) {
                    continue;
                }
                ++total;
                correct += s.correct ? 1 : 0;
            }
        }
        if (total == 0) throw std::invalid_argument("no samples to evaluate");
        const double acc = static_cast<double>(correct) / static_cast<double>(total);
        std::ostringstream text;
        text << o.combo << " on " << suite << ": " << correct << "/" << total << " = " << acc << '\n';
        emit(out, o.json_out,
             {{"combination_id", o.combo}, {"suite", suite}, {"correct", correct}, {"total", total}, {"accuracy", acc}},
             text.str());
        return 0;
    }

    const auto combos = reg.combinations();
    EvaluationOptions opts;
    opts.types = o.suite.empty() ? common_suite_types(reg, combos) : split(o.suite);
    opts.per_severity = o.per_severity;
    if (!o.filter_arch.empty()) opts.architecture = o.filter_arch;
    const EvaluationTable full = evaluation_table(reg, opts);
    std::vector<DeltaCell> delta;
    const EvaluationTable* shown = &full;
    EvaluationTable sub;
    if (subset) {
        opts.subset = &*subset;
        sub = evaluation_table(reg, opts);
        delta = subset_delta(full, sub);
        shown = &sub;
    }
    if (o.json_out) {
        out << api::evaluation_table_json(*shown, subset ? &delta : nullptr) << '\n';
        return 0;
    }
    for (const auto& row : shown->rows) {
        out << row.key << '\n';
        for (const auto& m : row.methods) {
            out << "  " << std::left << std::setw(10) << m.method;
            for (const auto& c : m.cells) {
                out << "  r=" << c.prune_rate << ":" << std::fixed << std::setprecision(4) << c.accuracy
                    << std::defaultfloat;
            }
            out << '\n';
        }
    }
    for (const auto& d : delta) {
        out << "delta " << d.row << " " << d.method << " r=" << d.prune_rate << " " << std::showpos << d.delta
            << std::noshowpos << '\n';
    }
    return 0;
}

int cmd_correlate(const Options& o, std::ostream& out) {
    const Registry reg = open_registry(o);
    if (o.combo.empty()) throw std::invalid_argument("correlate needs --combo");
    const SuiteSnapshots suite = load_suite_snapshots(reg, o.combo);
    const auto records = robustness_from_snapshots(suite.clean, suite.variants);
    const CorrelationReport r = metric_robustness_correlations(suite.clean, records);
    if (o.json_out) {
        out << api::correlations_json(o.combo, r) << '\n';
    } else {
        out << o.combo << " (n=" << r.n << ")  rc_angle " << r.rc_angle << "  rc_l2 " << r.rc_l2 << "  rc_margin "
            << r.rc_margin << '\n';
    }
    return 0;
}

int cmd_rand_angle(const Options& o, std::ostream& out) {
    const auto dims = parse_sizes(o.dims);
    const AngleExperimentResult r = random_angle_experiment(dims, o.pairs, o.seed);
    if (o.json_out) {
        out << api::angle_experiment_json(r) << '\n';
    } else {
        for (const auto& row : r.rows) {
            out << "d=" << row.dim << "  mean " << std::fixed << std::setprecision(2) << row.mean_deg << "  std "
                << row.std_deg << std::defaultfloat << '\n';
        }
    }
    return 0;
}

int cmd_margin_shift(const Options& o, std::ostream& out) {
    const Registry reg = open_registry(o);
    if (o.ref.empty() || o.cmp.empty()) throw std::invalid_argument("margin-shift needs --ref and --cmp");
    const MarginShiftReport r = margin_shift(reg, o.ref, o.cmp);
    if (o.json_out) {
        out << api::margin_shift_json(r) << '\n';
    } else {
        out << "ref " << r.ref_id << "  clean acc " << r.ref_clean_accuracy << "  median shift " << r.ref.median << '\n'
            << "cmp " << r.cmp_id << "  clean acc " << r.cmp_clean_accuracy << "  median shift " << r.cmp.median << '\n'
            << "accuracy matched (+/-" << kMatchedAccuracyTolerance << "): " << (r.accuracy_matched ? "yes" : "no")
            << "\nref median <= cmp median: " << (r.ref_more_stable ? "yes" : "no") << '\n';
    }
    return 0;
}

Service* g_service = nullptr;

extern "C" void handle_signal(int) {
    if (g_service) g_service->stop();
}

int cmd_serve(const Options& o, std::ostream& out) {
    ServiceConfig cfg;
    cfg.registry_root = o.registry;
    cfg.host = o.host;
    cfg.port = o.port;
    cfg.allowed_origins = o.origins;
    cfg = cfg.with_env_overrides();
    Service service(cfg);
    g_service = &service;
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    out << "serving " << cfg.registry_root.string() << " on http://" << cfg.host << ":" << cfg.port << std::endl;
    service.serve();
    g_service = nullptr;
    return 0;
}

int cmd_export(const Options& o, std::ostream& out) {
    if (o.what == "dataset") {
        LabeledDataset data;
        if (o.kind == "blobs") {
            synthetic::BlobOptions b;
            b.samples = o.samples;
            b.classes = o.classes;
            b.seed = o.seed;
            b.first_id = o.first_id;
            data = synthetic::make_blobs(b);
        } else if (o.kind == "glyphs") {
            synthetic::GlyphOptions g;
            g.samples = o.samples;
            g.classes = o.classes;
            g.side = o.side;
            g.seed = o.seed;
            g.first_id = o.first_id;
            data = synthetic::make_glyphs(g);
        } else {
            throw std::invalid_argument("unknown --kind '" + o.kind + "' (blobs, glyphs)");
        }
        if (!o.dataset_id.empty()) data.id = o.dataset_id;
        if (o.out.empty()) throw std::invalid_argument("export needs --out");
        save_dataset(o.out, data);
        std::ostringstream text;
        text << "wrote " << data.size() << " " << o.kind << " samples (" << data.input_dim() << " dims, "
             << data.class_count << " classes) to " << o.out << '\n';
        emit(out, o.json_out,
             {{"path", o.out}, {"id", data.id}, {"samples", data.size()}, {"input_dim", data.input_dim()},
              {"class_count", data.class_count}},
             text.str());
        return 0;
    }
    if (o.what == "snapshot") {
        const Registry reg = open_registry(o);
        if (o.combo.empty()) throw std::invalid_argument("export --what snapshot needs --combo");
        const std::string body = api::snapshot_json(reg.load_snapshot(o.combo, o.snapshot_dataset), o.class_label);
        if (o.out.empty() || o.out == "-") {
            out << body << '\n';
        } else {
            std::ofstream f(o.out);
            if (!f) throw std::runtime_error("cannot write " + o.out);
            f << body << '\n';
        }
        return 0;
    }
    throw std::invalid_argument("unknown --what '" + o.what + "' (dataset, snapshot)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    argv.push_back("geoprune");
    for (const auto& a : args) argv.push_back(a.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"geoprune: train, prune, corrupt and inspect small classifiers"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_flag("--json", o.json_out, "Print a JSON report on stdout");

    auto* train = app.add_subcommand("train", "Train a dense network on a dataset file");
    train->add_option("--spec", o.spec_path, "Network spec JSON");
    train->add_option("--layers", o.layers, "Comma-separated layer sizes (alternative to --spec)");
    train->add_option("--init-seed", o.init_seed, "Initialisation seed with --layers");
    train->add_option("--data", o.data, "Training dataset")->required();
    train->add_option("--out", o.out, "Checkpoint directory")->required();
    train->add_option("--epochs", o.epochs);
    train->add_option("--lr", o.lr);
    train->add_option("--batch", o.batch);
    train->add_option("--seed", o.seed, "Shuffle seed");

    auto* prune = app.add_subcommand("prune", "Prune a checkpoint (or search a biprop subnetwork)");
    prune->add_option("--method", o.method, "random | magnitude | taylor | mpt")->required();
    prune->add_option("--rate", o.rate, "Fraction of prunable weights to remove")->required();
    prune->add_option("--in", o.in, "Input checkpoint");
    prune->add_option("--out", o.out, "Output checkpoint")->required();
    prune->add_option("--data", o.data, "Dataset (taylor scores, mpt search, reported accuracy)");
    prune->add_option("--spec", o.spec_path, "Network spec (or checkpoint manifest) for mpt");
    prune->add_option("--scope", o.scope, "global | per-layer");
    prune->add_option("--seed", o.seed);
    prune->add_option("--epochs", o.epochs, "mpt score epochs");
    prune->add_option("--lr", o.lr, "mpt score learning rate");
    prune->add_option("--batch", o.batch);

    auto* corrupt = app.add_subcommand("corrupt", "Build a corruption archive from a dataset");
    corrupt->add_option("--data", o.data)->required();
    corrupt->add_option("--types", o.types, "Comma-separated corruption types (default: six-type suite)");
    corrupt->add_option("--seed", o.seed);
    corrupt->add_option("--out", o.out, "Archive directory")->required();

    auto* snapshot = app.add_subcommand("snapshot", "Register a combination and store its geometry snapshots");
    snapshot->add_option("--registry", o.registry);
    snapshot->add_option("--ckpt", o.ckpt);
    snapshot->add_option("--data", o.data, "Clean test dataset")->required();
    snapshot->add_option("--archive", o.archive, "Corruption archive of the test dataset");
    snapshot->add_option("--combo", o.combo, "Combination id (default derived from the fields)");
    snapshot->add_option("--arch", o.arch);
    snapshot->add_option("--method", o.method);
    snapshot->add_option("--rate", o.combo_rate, "Registered prune rate (default: measured sparsity)");
    snapshot->add_option("--train-dataset", o.train_dataset);
    o.method = "none";

    auto* eval = app.add_subcommand("eval", "Accuracy of one combination, or the full evaluation table");
    eval->add_option("--registry", o.registry);
    eval->add_option("--combo", o.combo);
    eval->add_option("--suite", o.suite, "clean | <type> | <type>@<severity> (table: comma-separated types)");
    eval->add_option("--subset", o.subset);
    eval->add_flag("--per-severity", o.per_severity);
    eval->add_option("--arch", o.filter_arch);

    auto* correlate = app.add_subcommand("correlate", "Metric vs robustness correlations of a combination");
    correlate->add_option("--registry", o.registry);
    correlate->add_option("--combo", o.combo)->required();

    auto* rand_angle = app.add_subcommand("rand-angle", "Angles between random vectors by dimension");
    rand_angle->add_option("--dims", o.dims);
    rand_angle->add_option("--pairs", o.pairs);
    rand_angle->add_option("--seed", o.seed);

    auto* shift = app.add_subcommand("margin-shift", "Relative margin change of two combinations under corruption");
    shift->add_option("--registry", o.registry);
    shift->add_option("--ref", o.ref)->required();
    shift->add_option("--cmp", o.cmp)->required();

    auto* serve = app.add_subcommand("serve", "Serve the registry over HTTP");
    serve->add_option("--registry", o.registry);
    serve->add_option("--host", o.host);
    serve->add_option("--port", o.port);
    serve->add_option("--origin", o.origins, "Allowed CORS origin (repeatable)");

    auto* exp = app.add_subcommand("export", "Generate a synthetic dataset file, or dump a snapshot as JSON");
    exp->add_option("--what", o.what, "dataset | snapshot");
    exp->add_option("--kind", o.kind, "blobs | glyphs");
    exp->add_option("--samples", o.samples);
    exp->add_option("--classes", o.classes);
    exp->add_option("--side", o.side);
    exp->add_option("--seed", o.seed);
    exp->add_option("--first-id", o.first_id);
    exp->add_option("--id", o.dataset_id, "Dataset id stored in the file");
    exp->add_option("--out", o.out);
    exp->add_option("--registry", o.registry);
    exp->add_option("--combo", o.combo);
    exp->add_option("--dataset", o.snapshot_dataset);
    exp->add_option("--class", o.class_label);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        err << app.help();
        return 2;
    }

    try {
        if (*train) return cmd_train(o, out);
        if (*prune) return cmd_prune(o, out);
        if (*corrupt) return cmd_corrupt(o, out);
        if (*snapshot) return cmd_snapshot(o, out);
        if (*eval) return cmd_eval(o, out);
        if (*correlate) return cmd_correlate(o, out);
        if (*rand_angle) return cmd_rand_angle(o, out);
        if (*shift) return cmd_margin_shift(o, out);
        if (*serve) return cmd_serve(o, out);
        if (*exp) return cmd_export(o, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace geoprune::cli
