#include "geoprune/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <json.hpp>

#include "geoprune/error.hpp"

namespace geoprune {

using nlohmann::json;

namespace {

json sample_to_json(const GeometrySample& s) {
    return {{"sample_id", s.sample_id},
            {"true_label", s.true_label},
            {"predicted_label", s.predicted_label},
            {"correct", s.correct},
            {"degenerate", s.degenerate},
            {"angles", s.angles},
            {"length", s.length},
            {"margin", signed_margin(s)}};
}

json relative_margin_to_json(const RelativeMarginChange& r) {
    json d{{"metric", r.density.metric}, {"edges", r.density.edges}, {"heights", r.density.heights}};
    return {{"pairs", r.pairs},     {"excluded_small", r.excluded_small}, {"trimmed", r.trimmed},
            {"kept", r.kept.size()}, {"median", r.median},                {"density", d}};
}

std::optional<std::uint32_t> class_param(const Request& req) {
    auto it = req.query.find("class");
    if (it == req.query.end() || it->second.empty()) return std::nullopt;
    std::size_t pos = 0;
    const unsigned long v = std::stoul(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("class must be an integer");
    return static_cast<std::uint32_t>(v);
}

const std::string& required(const Request& req, const std::string& key) {
    auto it = req.query.find(key);
    if (it == req.query.end() || it->second.empty()) throw std::invalid_argument("missing query parameter '" + key + "'");
    return it->second;
}

std::string optional_param(const Request& req, const std::string& key, std::string fallback) {
    auto it = req.query.find(key);
    return it == req.query.end() || it->second.empty() ? fallback : it->second;
}

Response json_response(int status, std::string body) {
    Response r;
    r.status = status;
    r.body = std::move(body);
    r.headers["Content-Type"] = "application/json";
    return r;
}

}  // namespace

namespace api {

std::string combinations_json(const std::vector<Combination>& combos) {
    json out = json::array();
    for (const auto& c : combos) {
        out.push_back({{"id", c.id},
                       {"architecture", c.architecture},
                       {"method", std::string(to_string(c.method))},
                       {"prune_rate", c.prune_rate},
                       {"dataset_id", c.dataset_id},
                       {"checkpoint_path", c.checkpoint_path},
                       {"clean_accuracy", c.clean_accuracy}});
    }
    return out.dump();
}

std::string evaluation_table_json(const EvaluationTable& table, const std::vector<DeltaCell>* delta) {
    json rows = json::array();
    for (const auto& row : table.rows) {
        json methods = json::array();
        for (const auto& m : row.methods) {
            json cells = json::array();
            for (const auto& c : m.cells) {
                cells.push_back({{"combination_id", c.combination_id},
                                 {"prune_rate", c.prune_rate},
                                 {"correct", c.correct},
                                 {"total", c.total},
                                 {"accuracy", c.accuracy}});
            }
            methods.push_back({{"method", m.method}, {"max_accuracy", m.max_accuracy}, {"cells", cells}});
        }
        rows.push_back({{"key", row.key}, {"ranking", row.ranking()}, {"methods", methods}});
    }
    json out{{"rows", rows}, {"subset", table.subset_id ? json(*table.subset_id) : json(nullptr)}};
    if (delta) {
        json d = json::array();
        for (const auto& c : *delta) {
            d.push_back({{"row", c.row},
                         {"method", c.method},
                         {"combination_id", c.combination_id},
                         {"prune_rate", c.prune_rate},
                         {"full", c.full},
                         {"subset", c.subset},
                         {"delta", c.delta}});
        }
        out["delta"] = d;
    }
    return out.dump();
}

std::string snapshot_json(const GeometrySnapshot& snapshot, std::optional<std::uint32_t> class_label) {
    json samples = json::array();
    for (const auto& s : snapshot.samples) {
        if (!class_label || s.true_label == *class_label) samples.push_back(sample_to_json(s));
    }
    return json{{"combination_id", snapshot.combination_id},
                {"dataset_id", snapshot.dataset_id},
                {"class_count", snapshot.class_count},
                {"created_at", snapshot.created_at},
                {"accuracy", snapshot.accuracy()},
                {"samples", samples}}
        .dump();
}

std::string trajectories_json(const TrajectoryResult& result) {
    json pairs = json::array();
    std::map<std::string, std::size_t> counts;
    for (auto c : {TrajectoryCategory::both_wrong, TrajectoryCategory::ref_correct_only,
                   TrajectoryCategory::cmp_correct_only, TrajectoryCategory::both_correct}) {
        counts[std::string(to_string(c))] = 0;
    }
    for (const auto& p : result.pairs) {
        ++counts[std::string(to_string(p.category))];
        pairs.push_back({{"sample_id", p.sample_id},
                         {"category", std::string(to_string(p.category))},
                         {"ref", sample_to_json(p.ref)},
                         {"cmp", sample_to_json(p.cmp)}});
    }
    return json{{"pairs", pairs},
                {"counts", counts},
                {"missing_in_ref", result.missing_in_ref},
                {"missing_in_cmp", result.missing_in_cmp}}
        .dump();
}

std::string density_json(const DensityCurve& curve) {
    return json{{"metric", curve.metric},
                {"count", curve.count},
                {"edges", curve.edges},
                {"centers", curve.centers},
                {"heights", curve.heights}}
        .dump();
}

std::string correlations_json(const std::string& combo_id, const CorrelationReport& r) {
    return json{{"combination_id", combo_id},
                {"rc_angle", r.rc_angle},
                {"rc_l2", r.rc_l2},
                {"rc_margin", r.rc_margin},
                {"n", r.n},
                {"excluded_degenerate", r.excluded_degenerate}}
        .dump();
}

std::string margin_shift_json(const MarginShiftReport& r) {
    return json{{"ref", r.ref_id},
                {"cmp", r.cmp_id},
                {"ref_clean_accuracy", r.ref_clean_accuracy},
                {"cmp_clean_accuracy", r.cmp_clean_accuracy},
                {"accuracy_matched", r.accuracy_matched},
                {"ref_more_stable", r.ref_more_stable},
                {"ref_shift", relative_margin_to_json(r.ref)},
                {"cmp_shift", relative_margin_to_json(r.cmp)}}
        .dump();
}

std::string subset_json(const SubsetSelection& s) {
    return json{{"id", s.id}, {"size", s.sample_ids.size()}, {"note", s.note}, {"sample_ids", s.sample_ids}}.dump();
}

std::string angle_experiment_json(const AngleExperimentResult& result) {
    json rows = json::array();
    for (const auto& r : result.rows) {
        rows.push_back({{"dim", r.dim}, {"mean_deg", r.mean_deg}, {"std_deg", r.std_deg}, {"pairs", r.pairs}});
    }
    return json{{"rows", rows}}.dump();
}

std::string error_json(const std::string& message) { return json{{"error", message}}.dump(); }

}  // namespace api

std::vector<double> metric_values(const GeometrySnapshot& snapshot, TrajectoryMetric metric,
                                  std::optional<std::uint32_t> class_label) {
    std::vector<double> out;
    for (const auto& s : snapshot.samples) {
        if (class_label && s.true_label != *class_label) continue;
        switch (metric) {
            case TrajectoryMetric::angle_true:
                if (!s.degenerate) out.push_back(s.angle_to_true());
                break;
            case TrajectoryMetric::length: out.push_back(s.length); break;
            case TrajectoryMetric::margin: out.push_back(signed_margin(s)); break;
        }
    }
    return out;
}

ServiceConfig ServiceConfig::with_env_overrides() const {
    ServiceConfig out = *this;
    if (const char* env = std::getenv(kRegistryEnvVar); env && *env) out.registry_root = env;
    return out;
}

void ServiceConfig::validate() const {
    if (!std::filesystem::is_directory(registry_root)) {
        throw NotFound("registry root " + registry_root.string() + " does not exist");
    }
    if (port < 0 || port > 65535) throw std::invalid_argument("port must be in 0..65535");
}

Service::Service(ServiceConfig cfg) : cfg_(std::move(cfg)), registry_(Registry::open(cfg_.registry_root)) {
    cfg_.validate();
}

Response Service::handle(const Request& req) {
    Response resp;
    try {
        resp = dispatch(req);
    } catch (const NotFound& e) {
        resp = json_response(404, api::error_json(e.what()));
    } catch (const UnknownSampleId& e) {
        resp = json_response(400, json{{"error", e.what()}, {"sample_id", e.id()}}.dump());
    } catch (const IntegrityError& e) {
        resp = json_response(500, api::error_json(e.what()));
    } catch (const FormatError& e) {
        resp = json_response(500, api::error_json(e.what()));
    } catch (const RegistryError& e) {
        resp = json_response(409, api::error_json(e.what()));
    } catch (const UndefinedCorrelation& e) {
        resp = json_response(422, api::error_json(e.what()));
    } catch (const json::exception& e) {
        resp = json_response(400, api::error_json(std::string("malformed JSON body: ") + e.what()));
    } catch (const std::logic_error& e) {
        resp = json_response(400, api::error_json(e.what()));
    } catch (const std::exception& e) {
        resp = json_response(500, api::error_json(e.what()));
    }
    if (!req.origin.empty() &&
        std::find(cfg_.allowed_origins.begin(), cfg_.allowed_origins.end(), req.origin) != cfg_.allowed_origins.end()) {
        resp.headers["Access-Control-Allow-Origin"] = req.origin;
        resp.headers["Vary"] = "Origin";
    }
    return resp;
}

Response Service::dispatch(const Request& req) {
    const std::string& p = req.path;
    if (req.method == "GET") {
        if (p == "/api/combinations") return get_combinations(req);
        if (p == "/api/evaluation-table") return get_evaluation_table(req);
        if (p == "/api/trajectories") return get_trajectories(req);
        if (p == "/api/density") return get_density(req);
        if (p == "/api/correlations") return get_correlations(req);
        if (p == "/api/margin-shift") return get_margin_shift(req);
        const std::string prefix = "/api/snapshot/";
        if (p.rfind(prefix, 0) == 0) {
            const std::string rest = p.substr(prefix.size());
            const auto slash = rest.find('/');
            if (slash != std::string::npos && slash > 0 && slash + 1 < rest.size() &&
                rest.find('/', slash + 1) == std::string::npos) {
                return get_snapshot(req, rest.substr(0, slash), rest.substr(slash + 1));
            }
        }
    } else if (req.method == "POST" && p == "/api/subsets") {
        return post_subset(req);
    } else if (req.method == "OPTIONS") {
        Response r;
        r.status = 204;
        r.headers["Access-Control-Allow-Methods"] = "GET, POST, OPTIONS";
        r.headers["Access-Control-Allow-Headers"] = "Content-Type";
        return r;
    }
    return json_response(404, api::error_json("no route for " + req.method + " " + p));
}

Response Service::get_combinations(const Request&) {
    return json_response(200, api::combinations_json(registry_.combinations()));
}

Response Service::get_evaluation_table(const Request& req) {
    const auto combos = registry_.combinations();
    EvaluationOptions opts;
    opts.types = common_suite_types(registry_, combos);
    const std::string sev = optional_param(req, "severity", "");
    opts.per_severity = sev == "1" || sev == "true" || sev == "per";
    const std::string arch = optional_param(req, "arch", "");
    if (!arch.empty()) opts.architecture = arch;
    const std::string subset_id = optional_param(req, "subset", "");
    const EvaluationTable full = evaluation_table(registry_, opts);
    if (subset_id.empty()) return json_response(200, api::evaluation_table_json(full));
    const SubsetSelection subset = registry_.load_subset(subset_id);
    opts.subset = &subset;
    const EvaluationTable sub = evaluation_table(registry_, opts);
    const auto delta = subset_delta(full, sub);
    return json_response(200, api::evaluation_table_json(sub, &delta));
}

Response Service::get_snapshot(const Request& req, const std::string& combo, const std::string& dataset) {
    return json_response(200, api::snapshot_json(registry_.load_snapshot(combo, dataset), class_param(req)));
}

Response Service::get_trajectories(const Request& req) {
    const std::string dataset = optional_param(req, "dataset", kCleanDataset);
    const auto ref = registry_.load_snapshot(required(req, "ref"), dataset);
    const auto cmp = registry_.load_snapshot(required(req, "cmp"), dataset);
    return json_response(200, api::trajectories_json(trajectories(ref, cmp, class_param(req))));
}

Response Service::get_density(const Request& req) {
    const auto snap = registry_.load_snapshot(required(req, "combo"), optional_param(req, "dataset", kCleanDataset));
    const auto metric = parse_trajectory_metric(optional_param(req, "metric", "angle_true"));
    const auto values = metric_values(snap, metric, class_param(req));
    return json_response(200, api::density_json(density(values, 0, std::string(to_string(metric)))));
}

Response Service::get_correlations(const Request& req) {
    const std::string& combo = required(req, "combo");
    const auto suite = load_suite_snapshots(registry_, combo);
    const auto records = robustness_from_snapshots(suite.clean, suite.variants);
    return json_response(200, api::correlations_json(combo, metric_robustness_correlations(suite.clean, records)));
}

Response Service::get_margin_shift(const Request& req) {
    return json_response(200, api::margin_shift_json(margin_shift(registry_, required(req, "ref"), required(req, "cmp"))));
}

Response Service::post_subset(const Request& req) {
    const json body = json::parse(req.body);
    if (!body.is_object() || !body.contains("sample_ids") || !body.at("sample_ids").is_array()) {
        throw std::invalid_argument("body must be an object with a sample_ids array");
    }
    std::vector<std::uint64_t> ids;
    for (const auto& v : body.at("sample_ids")) {
        if (!v.is_number_unsigned()) {
            return json_response(400, json{{"error", "sample ids must be non-negative integers"}, {"sample_id", v}}.dump());
        }
        ids.push_back(v.get<std::uint64_t>());
    }
    std::lock_guard lock(subset_mutex_);
    const auto sel = registry_.save_subset(std::move(ids), body.value("note", ""));
    return json_response(201, api::subset_json(sel));
}

void Service::serve() {
    httplib::Server server;
    auto bridge = [this](const httplib::Request& hreq, httplib::Response& hres) {
        Request req;
        req.method = hreq.method;
        req.path = hreq.path;
        for (const auto& [k, v] : hreq.params) req.query[k] = v;
        req.body = hreq.body;
        req.origin = hreq.get_header_value("Origin");
        const Response resp = handle(req);
        hres.status = resp.status;
        std::string content_type = "application/json";
        for (const auto& [k, v] : resp.headers) {
            if (k == "Content-Type") {
                content_type = v;
            } else {
                hres.set_header(k, v);
            }
        }
        hres.set_content(resp.body, content_type);
    };
    server.Get(R"(/api/.*)", bridge);
    server.Post(R"(/api/.*)", bridge);
    server.Options(R"(/api/.*)", bridge);
    if (!server.bind_to_port(cfg_.host, cfg_.port)) {
        throw std::runtime_error("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
    }
    {
        std::lock_guard lock(server_mutex_);
        server_ = &server;
    }
    server.listen_after_bind();
    std::lock_guard lock(server_mutex_);
    server_ = nullptr;
}

void Service::stop() {
    std::lock_guard lock(server_mutex_);
    if (server_) server_->stop();
}

}  // namespace geoprune
