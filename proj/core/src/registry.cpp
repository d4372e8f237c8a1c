#include "geoprune/registry.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <set>
#include <sstream>

#include "binary_io.hpp"
#include "geoprune/content_hash.hpp"
#include "geoprune/io.hpp"

namespace geoprune {

using nlohmann::json;

namespace {

constexpr const char* kComboFormat = "geoprune-combination";
constexpr const char* kSubsetFormat = "geoprune-subset";

bool safe_name(const std::string& s, bool allow_at) {
    if (s.empty() || s.size() > 200 || s == "." || s == ".." || s == "subsets") return false;
    return std::all_of(s.begin(), s.end(), [&](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-' || (allow_at && c == '@');
    });
}

void check_dataset_id(const std::string& id) {
    if (!safe_name(id, true)) throw std::invalid_argument("invalid dataset id '" + id + "'");
}

json combo_to_json(const Combination& c) {
    return {{"id", c.id},
            {"architecture", c.architecture},
            {"method", std::string(to_string(c.method))},
            {"prune_rate", c.prune_rate},
            {"dataset_id", c.dataset_id},
            {"checkpoint_path", c.checkpoint_path},
            {"clean_accuracy", c.clean_accuracy}};
}

Combination combo_from_json(const json& j) {
    Combination c;
    c.id = j.at("id").get<std::string>();
    c.architecture = j.at("architecture").get<std::string>();
    c.method = parse_prune_method(j.at("method").get<std::string>());
    c.prune_rate = j.at("prune_rate").get<double>();
    c.dataset_id = j.at("dataset_id").get<std::string>();
    c.checkpoint_path = j.at("checkpoint_path").get<std::string>();
    c.clean_accuracy = j.at("clean_accuracy").get<double>();
    return c;
}

json read_json(const std::filesystem::path& path) {
    const auto bytes = detail::read_file(path);
    try {
        return json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string snapshot_file(const std::string& dataset_id) { return "snapshot-" + dataset_id + ".bin"; }

std::string list_ids(const std::vector<std::uint64_t>& ids) {
    std::ostringstream out;
    const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) out << (i ? ", " : "") << ids[i];
    if (ids.size() > shown) out << ", ... (" << ids.size() << " total)";
    return out.str();
}

}  // namespace

std::string variant_dataset_id(const std::string& type, int severity) {
    return type + "@" + std::to_string(severity);
}

std::optional<std::pair<std::string, int>> parse_variant_dataset_id(const std::string& id) {
    const auto at = id.rfind('@');
    if (at == std::string::npos || at == 0 || at + 1 >= id.size()) return std::nullopt;
    const std::string sev = id.substr(at + 1);
    if (!std::all_of(sev.begin(), sev.end(), [](char c) { return c >= '0' && c <= '9'; }) || sev.size() > 2) {
        return std::nullopt;
    }
    return std::make_pair(id.substr(0, at), std::stoi(sev));
}

void Combination::validate() const {
    if (!safe_name(id, false)) throw std::invalid_argument("invalid combination id '" + id + "'");
    if (!(prune_rate >= 0.0 && prune_rate < 1.0)) throw std::invalid_argument("prune_rate must be in [0, 1)");
    if (!(clean_accuracy >= 0.0 && clean_accuracy <= 1.0)) throw std::invalid_argument("clean_accuracy must be in [0, 1]");
}

std::string default_combination_id(const Combination& c) {
    std::ostringstream out;
    out << c.architecture << '.' << to_string(c.method) << ".r" << std::lround(c.prune_rate * 1000.0) << '.'
        << c.dataset_id;
    std::string id = out.str();
    for (char& ch : id) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '_' || ch == '-')) ch = '_';
    }
    return id;
}

std::string subset_id_for(std::span<const std::uint64_t> sorted_ids) {
    std::string text;
    for (auto id : sorted_ids) text += std::to_string(id) + "\n";
    return "s-" + sha256_hex(text).substr(0, 16);
}

// ---- Registry ---------------------------------------------------------------

Registry Registry::open(const std::filesystem::path& root) {
    if (!std::filesystem::is_directory(root)) throw NotFound("registry root " + root.string() + " does not exist");
    return Registry(root);
}

Registry Registry::create(const std::filesystem::path& root) {
    std::filesystem::create_directories(root);
    return Registry(root);
}

std::filesystem::path Registry::combo_dir(const std::string& combo_id) const {
    if (!safe_name(combo_id, false)) throw std::invalid_argument("invalid combination id '" + combo_id + "'");
    return root_ / combo_id;
}

std::string Registry::register_combination(Combination combo, const Network& net,
                                           std::span<const GeometrySnapshot> snapshots) {
    if (combo.id.empty()) combo.id = default_combination_id(combo);
    combo.checkpoint_path = combo.id + "/checkpoint.bin";
    combo.validate();
    const auto dir = combo_dir(combo.id);
    if (std::filesystem::exists(dir / "manifest.json")) {
        throw RegistryError("combination '" + combo.id + "' is already registered");
    }
    std::set<std::string> seen;
    for (const auto& s : snapshots) {
        check_dataset_id(s.dataset_id);
        if (!seen.insert(s.dataset_id).second) throw RegistryError("snapshot '" + s.dataset_id + "' given twice");
        if (s.class_count != net.spec().class_count()) throw DimensionError("snapshot class count differs from network");
    }
    std::filesystem::create_directories(dir);

    const EncodedCheckpoint ckpt = encode_checkpoint(net);
    detail::write_file_atomic(dir / "checkpoint.bin", ckpt.blob);

    json snaps = json::object();
    for (const auto& s : snapshots) {
        GeometrySnapshot copy = s;
        copy.combination_id = combo.id;
        const auto bytes = encode_snapshot(copy);
        const std::string file = snapshot_file(s.dataset_id);
        detail::write_file_atomic(dir / file, bytes);
        snaps[s.dataset_id] = {{"file", file}, {"bytes", bytes.size()}, {"samples", s.samples.size()},
                               {"sha256", sha256_hex(bytes)}};
    }
    json manifest{{"format", kComboFormat},
                  {"version", 1},
                  {"combination", combo_to_json(combo)},
                  {"checkpoint", json::parse(ckpt.manifest)},
                  {"snapshots", snaps}};
    detail::write_file_atomic(dir / "manifest.json", manifest.dump(2));
    return combo.id;
}

void Registry::add_snapshot(const std::string& combo_id, const GeometrySnapshot& snapshot) {
    check_dataset_id(snapshot.dataset_id);
    const auto dir = combo_dir(combo_id);
    if (!std::filesystem::exists(dir / "manifest.json")) throw NotFound("unknown combination '" + combo_id + "'");
    json manifest = read_json(dir / "manifest.json");
    auto& snaps = manifest.at("snapshots");
    if (snaps.contains(snapshot.dataset_id)) {
        throw RegistryError("combination '" + combo_id + "' already has a snapshot for '" + snapshot.dataset_id + "'");
    }
    const auto classes = manifest.at("checkpoint").at("spec").at("layer_sizes").back().get<std::size_t>();
    if (snapshot.class_count != classes) throw DimensionError("snapshot class count differs from network");
    GeometrySnapshot copy = snapshot;
    copy.combination_id = combo_id;
    const auto bytes = encode_snapshot(copy);
    const std::string file = snapshot_file(snapshot.dataset_id);
    detail::write_file_atomic(dir / file, bytes);
    snaps[snapshot.dataset_id] = {{"file", file}, {"bytes", bytes.size()}, {"samples", snapshot.samples.size()},
                                  {"sha256", sha256_hex(bytes)}};
    detail::write_file_atomic(dir / "manifest.json", manifest.dump(2));
}

bool Registry::contains(const std::string& combo_id) const {
    return safe_name(combo_id, false) && std::filesystem::exists(root_ / combo_id / "manifest.json");
}

std::vector<Combination> Registry::combinations() const {
    std::vector<Combination> out;
    for (const auto& entry : std::filesystem::directory_iterator(root_)) {
        if (!entry.is_directory() || !std::filesystem::exists(entry.path() / "manifest.json")) continue;
        const json m = read_json(entry.path() / "manifest.json");
        if (m.value("format", "") != kComboFormat) continue;
        out.push_back(combo_from_json(m.at("combination")));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
}

Combination Registry::combination(const std::string& combo_id) const {
    if (!contains(combo_id)) throw NotFound("unknown combination '" + combo_id + "'");
    return combo_from_json(read_json(combo_dir(combo_id) / "manifest.json").at("combination"));
}

std::vector<std::string> Registry::snapshot_datasets(const std::string& combo_id) const {
    if (!contains(combo_id)) throw NotFound("unknown combination '" + combo_id + "'");
    const json m = read_json(combo_dir(combo_id) / "manifest.json");
    std::vector<std::string> out;
    for (const auto& [key, value] : m.at("snapshots").items()) out.push_back(key);
    std::sort(out.begin(), out.end());
    return out;
}

bool Registry::has_snapshot(const std::string& combo_id, const std::string& dataset_id) const {
    if (!contains(combo_id)) return false;
    return read_json(combo_dir(combo_id) / "manifest.json").at("snapshots").contains(dataset_id);
}

std::vector<unsigned char> Registry::snapshot_bytes(const std::string& combo_id, const std::string& dataset_id) const {
    if (!contains(combo_id)) throw NotFound("unknown combination '" + combo_id + "'");
    const auto dir = combo_dir(combo_id);
    const json m = read_json(dir / "manifest.json");
    const auto& snaps = m.at("snapshots");
    if (!snaps.contains(dataset_id)) {
        throw NotFound("combination '" + combo_id + "' has no snapshot for '" + dataset_id + "'");
    }
    const auto& entry = snaps.at(dataset_id);
    auto bytes = detail::read_file(dir / entry.at("file").get<std::string>());
    if (sha256_hex(bytes) != entry.at("sha256").get<std::string>()) {
        throw IntegrityError("snapshot " + combo_id + "/" + dataset_id + " does not match its recorded hash");
    }
    return bytes;
}

GeometrySnapshot Registry::load_snapshot(const std::string& combo_id, const std::string& dataset_id) const {
    return decode_snapshot(snapshot_bytes(combo_id, dataset_id));
}

Network Registry::load_network(const std::string& combo_id) const {
    if (!contains(combo_id)) throw NotFound("unknown combination '" + combo_id + "'");
    const auto dir = combo_dir(combo_id);
    const json m = read_json(dir / "manifest.json");
    return decode_checkpoint(m.at("checkpoint").dump(), detail::read_file(dir / "checkpoint.bin"));
}

std::vector<std::uint64_t> Registry::known_sample_ids() const {
    std::set<std::uint64_t> ids;
    for (const auto& c : combinations()) {
        if (!has_snapshot(c.id, kCleanDataset)) continue;
        for (const auto& s : load_snapshot(c.id, kCleanDataset).samples) ids.insert(s.sample_id);
    }
    return {ids.begin(), ids.end()};
}

SubsetSelection Registry::save_subset(std::vector<std::uint64_t> sample_ids, std::string note) {
    if (sample_ids.empty()) throw std::invalid_argument("a subset needs at least one sample id");
    std::sort(sample_ids.begin(), sample_ids.end());
    sample_ids.erase(std::unique(sample_ids.begin(), sample_ids.end()), sample_ids.end());
    const auto known = known_sample_ids();
    for (auto id : sample_ids) {
        if (!std::binary_search(known.begin(), known.end(), id)) throw UnknownSampleId(id);
    }
    SubsetSelection sel{subset_id_for(sample_ids), std::move(sample_ids), std::move(note)};
    const auto dir = root_ / "subsets";
    const auto path = dir / (sel.id + ".json");
    if (std::filesystem::exists(path)) return load_subset(sel.id);
    std::filesystem::create_directories(dir);
    json j{{"format", kSubsetFormat}, {"version", 1}, {"id", sel.id}, {"note", sel.note}, {"sample_ids", sel.sample_ids}};
    detail::write_file_atomic(path, j.dump(2));
    return sel;
}

SubsetSelection Registry::load_subset(const std::string& subset_id) const {
    if (!safe_name(subset_id, false)) throw std::invalid_argument("invalid subset id '" + subset_id + "'");
    const auto path = root_ / "subsets" / (subset_id + ".json");
    if (!std::filesystem::exists(path)) throw NotFound("unknown subset '" + subset_id + "'");
    const json j = read_json(path);
    SubsetSelection sel{j.at("id").get<std::string>(), j.at("sample_ids").get<std::vector<std::uint64_t>>(),
                        j.value("note", "")};
    if (sel.id != subset_id_for(sel.sample_ids)) throw IntegrityError("subset " + subset_id + " content does not match its id");
    return sel;
}

std::vector<std::string> Registry::subset_ids() const {
    std::vector<std::string> out;
    const auto dir = root_ / "subsets";
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".json") out.push_back(e.path().stem().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---- evaluation table -------------------------------------------------------

std::vector<std::string> EvaluationRow::ranking() const {
    std::vector<std::string> out;
    for (const auto& m : methods) out.push_back(m.method);
    return out;
}

const EvaluationRow& EvaluationTable::row(const std::string& key) const {
    for (const auto& r : rows) {
        if (r.key == key) return r;
    }
    throw NotFound("evaluation table has no row '" + key + "'");
}

EvaluationTable evaluation_table(std::span<const Combination> combos, const SnapshotLoader& load,
                                 const EvaluationOptions& opts) {
    std::vector<Combination> selected;
    for (const auto& c : combos) {
        if (!opts.architecture || c.architecture == *opts.architecture) selected.push_back(c);
    }
    // Row key -> dataset ids pooled into that row.
    std::vector<std::pair<std::string, std::vector<std::string>>> rows{{kCleanDataset, {kCleanDataset}}};
    for (const auto& type : opts.types) {
        if (opts.per_severity) {
            for (int s = 1; s <= kSeverityLevels; ++s) rows.push_back({variant_dataset_id(type, s), {variant_dataset_id(type, s)}});
        } else {
            std::vector<std::string> ids;
            for (int s = 1; s <= kSeverityLevels; ++s) ids.push_back(variant_dataset_id(type, s));
            rows.push_back({type, ids});
        }
    }
    std::set<std::uint64_t> subset;
    if (opts.subset) subset.insert(opts.subset->sample_ids.begin(), opts.subset->sample_ids.end());

    EvaluationTable table;
    if (opts.subset) table.subset_id = opts.subset->id;
    for (const auto& [key, datasets] : rows) {
        std::map<std::string, MethodSeries> by_method;
        for (const auto& c : selected) {
            EvaluationCell cell{c.id, c.prune_rate, 0, 0, 0.0};
            for (const auto& ds : datasets) {
                const GeometrySnapshot snap = load(c.id, ds);
                for (const auto& s : snap.samples) {
                    if (opts.subset && !subset.count(s.sample_id)) continue;
                    ++cell.total;
                    cell.correct += s.correct ? 1 : 0;
                }
            }
            if (cell.total == 0) {
                throw std::invalid_argument("cell " + c.id + "/" + key + " has no samples in the selection");
            }
            cell.accuracy = static_cast<double>(cell.correct) / static_cast<double>(cell.total);
            auto& series = by_method[std::string(to_string(c.method))];
            series.method = std::string(to_string(c.method));
            series.cells.push_back(cell);
        }
        EvaluationRow row{key, {}};
        for (auto& [name, series] : by_method) {
            std::sort(series.cells.begin(), series.cells.end(), [](const auto& a, const auto& b) {
                return a.prune_rate != b.prune_rate ? a.prune_rate < b.prune_rate : a.combination_id < b.combination_id;
            });
            series.max_accuracy = 0.0;
            for (const auto& cell : series.cells) series.max_accuracy = std::max(series.max_accuracy, cell.accuracy);
            row.methods.push_back(series);
        }
        std::sort(row.methods.begin(), row.methods.end(), [](const auto& a, const auto& b) {
            return a.max_accuracy != b.max_accuracy ? a.max_accuracy > b.max_accuracy : a.method < b.method;
        });
        table.rows.push_back(std::move(row));
    }
    return table;
}

EvaluationTable evaluation_table(const Registry& registry, const EvaluationOptions& opts) {
    const auto combos = registry.combinations();
    return evaluation_table(combos,
                            [&](const std::string& c, const std::string& d) { return registry.load_snapshot(c, d); },
                            opts);
}

std::vector<std::string> common_suite_types(const Registry& registry, std::span<const Combination> combos) {
    std::optional<std::set<std::string>> common;
    for (const auto& c : combos) {
        std::map<std::string, int> severities;
        for (const auto& ds : registry.snapshot_datasets(c.id)) {
            if (auto v = parse_variant_dataset_id(ds); v && v->second >= 1 && v->second <= kSeverityLevels) {
                ++severities[v->first];
            }
        }
        std::set<std::string> full;
        for (const auto& [type, n] : severities) {
            if (n == kSeverityLevels) full.insert(type);
        }
        if (!common) {
            common = full;
        } else {
            std::set<std::string> both;
            std::set_intersection(common->begin(), common->end(), full.begin(), full.end(),
                                  std::inserter(both, both.begin()));
            common = both;
        }
    }
    if (!common) return {};
    return {common->begin(), common->end()};
}

std::vector<DeltaCell> subset_delta(const EvaluationTable& full, const EvaluationTable& subset) {
    if (full.rows.size() != subset.rows.size()) throw std::invalid_argument("tables have different rows");
    std::vector<DeltaCell> out;
    for (const auto& frow : full.rows) {
        const auto& srow = subset.row(frow.key);
        for (const auto& fm : frow.methods) {
            auto it = std::find_if(srow.methods.begin(), srow.methods.end(),
                                   [&](const auto& m) { return m.method == fm.method; });
            if (it == srow.methods.end() || it->cells.size() != fm.cells.size()) {
                throw std::invalid_argument("tables differ in row '" + frow.key + "', method " + fm.method);
            }
            for (std::size_t i = 0; i < fm.cells.size(); ++i) {
                const auto& fc = fm.cells[i];
                const auto& sc = it->cells[i];
                if (fc.combination_id != sc.combination_id) throw std::invalid_argument("tables have different cells");
                out.push_back({frow.key, fm.method, fc.combination_id, fc.prune_rate, fc.accuracy, sc.accuracy,
                               sc.accuracy - fc.accuracy});
            }
        }
    }
    return out;
}

// ---- trajectories -----------------------------------------------------------

std::string_view to_string(TrajectoryCategory c) {
    switch (c) {
        case TrajectoryCategory::both_wrong: return "both_wrong";
        case TrajectoryCategory::ref_correct_only: return "ref_correct_only";
        case TrajectoryCategory::cmp_correct_only: return "cmp_correct_only";
        case TrajectoryCategory::both_correct: return "both_correct";
    }
    return "?";
}

TrajectoryCategory categorize(bool ref_correct, bool cmp_correct) {
    if (ref_correct && cmp_correct) return TrajectoryCategory::both_correct;
    if (ref_correct) return TrajectoryCategory::ref_correct_only;
    if (cmp_correct) return TrajectoryCategory::cmp_correct_only;
    return TrajectoryCategory::both_wrong;
}

TrajectoryResult trajectories(const GeometrySnapshot& ref, const GeometrySnapshot& cmp,
                              std::optional<std::uint32_t> class_label, bool strict) {
    if (ref.dataset_id != cmp.dataset_id) {
        throw std::invalid_argument("snapshots cover different datasets ('" + ref.dataset_id + "' vs '" +
                                    cmp.dataset_id + "')");
    }
    if (ref.class_count != cmp.class_count) throw DimensionError("snapshots have different class counts");
    if (class_label && *class_label >= ref.class_count) {
        throw std::out_of_range("class " + std::to_string(*class_label) + " outside 0.." +
                                std::to_string(ref.class_count - 1));
    }
    auto keep = [&](const GeometrySample& s) { return !class_label || s.true_label == *class_label; };
    TrajectoryResult out;
    std::size_t i = 0, j = 0;
    const auto& a = ref.samples;
    const auto& b = cmp.samples;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].sample_id < b[j].sample_id)) {
            if (keep(a[i])) out.missing_in_cmp.push_back(a[i].sample_id);
            ++i;
        } else if (i == a.size() || b[j].sample_id < a[i].sample_id) {
            if (keep(b[j])) out.missing_in_ref.push_back(b[j].sample_id);
            ++j;
        } else {
            if (a[i].true_label != b[j].true_label) {
                throw RegistryError("sample " + std::to_string(a[i].sample_id) + " has different labels in the two snapshots");
            }
            if (keep(a[i])) out.pairs.push_back({a[i].sample_id, a[i], b[j], categorize(a[i].correct, b[j].correct)});
            ++i;
            ++j;
        }
    }
    if (strict && (!out.missing_in_cmp.empty() || !out.missing_in_ref.empty())) {
        std::string msg = "snapshot ids differ:";
        if (!out.missing_in_cmp.empty()) msg += " missing in " + cmp.combination_id + ": " + list_ids(out.missing_in_cmp) + ";";
        if (!out.missing_in_ref.empty()) msg += " missing in " + ref.combination_id + ": " + list_ids(out.missing_in_ref) + ";";
        throw RegistryError(msg);
    }
    return out;
}

std::string_view to_string(TrajectoryMetric m) {
    switch (m) {
        case TrajectoryMetric::angle_true: return "angle_true";
        case TrajectoryMetric::length: return "length";
        case TrajectoryMetric::margin: return "margin";
    }
    return "?";
}

TrajectoryMetric parse_trajectory_metric(std::string_view name) {
    for (auto m : {TrajectoryMetric::angle_true, TrajectoryMetric::length, TrajectoryMetric::margin}) {
        if (to_string(m) == name) return m;
    }
    throw std::invalid_argument("unknown metric '" + std::string(name) + "' (angle_true, length, margin)");
}

std::string_view to_string(DeltaPredicate p) {
    switch (p) {
        case DeltaPredicate::increased: return "increased";
        case DeltaPredicate::decreased: return "decreased";
        case DeltaPredicate::unchanged: return "unchanged";
        case DeltaPredicate::abs_at_least: return "abs_at_least";
    }
    return "?";
}

DeltaPredicate parse_delta_predicate(std::string_view name) {
    for (auto p : {DeltaPredicate::increased, DeltaPredicate::decreased, DeltaPredicate::unchanged,
                   DeltaPredicate::abs_at_least}) {
        if (to_string(p) == name) return p;
    }
    throw std::invalid_argument("unknown predicate '" + std::string(name) + "'");
}

double metric_delta(const TrajectoryPair& pair, TrajectoryMetric metric) {
    switch (metric) {
        case TrajectoryMetric::angle_true:
            return static_cast<double>(pair.cmp.angle_to_true()) - static_cast<double>(pair.ref.angle_to_true());
        case TrajectoryMetric::length:
            return static_cast<double>(pair.cmp.length) - static_cast<double>(pair.ref.length);
        case TrajectoryMetric::margin:
            return signed_margin(pair.cmp) - signed_margin(pair.ref);
    }
    return 0.0;
}

MetricSelection metric_difference_select(std::span<const TrajectoryPair> pairs, TrajectoryMetric metric,
                                         DeltaPredicate predicate, double threshold) {
    if (predicate == DeltaPredicate::abs_at_least && !(threshold >= 0.0)) {
        throw std::invalid_argument("threshold must be >= 0");
    }
    MetricSelection out;
    for (const auto& p : pairs) {
        if (p.ref.degenerate || p.cmp.degenerate) {
            ++out.excluded_degenerate;
            continue;
        }
        const double d = metric_delta(p, metric);
        bool take = false;
        switch (predicate) {
            case DeltaPredicate::increased: take = d > 0.0; break;
            case DeltaPredicate::decreased: take = d < 0.0; break;
            case DeltaPredicate::unchanged: take = d == 0.0; break;
            case DeltaPredicate::abs_at_least: take = std::abs(d) >= threshold; break;
        }
        if (take) out.selection.sample_ids.push_back(p.sample_id);
    }
    auto& ids = out.selection.sample_ids;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    out.selection.id = subset_id_for(ids);
    std::ostringstream note;
    note << to_string(metric) << ' ' << to_string(predicate);
    if (predicate == DeltaPredicate::abs_at_least) note << ' ' << threshold;
    out.selection.note = note.str();
    out.empty_warning = ids.empty();
    return out;
}

// ---- cross-snapshot analytics ----------------------------------------------

std::vector<RobustnessRecord> robustness_from_snapshots(const GeometrySnapshot& clean,
                                                        std::span<const GeometrySnapshot> variants) {
    std::vector<RobustnessRecord> out;
    out.reserve(clean.samples.size());
    for (const auto& s : clean.samples) {
        out.push_back({s.sample_id, 0, static_cast<std::uint32_t>(variants.size())});
    }
    for (const auto& v : variants) {
        for (std::size_t i = 0; i < clean.samples.size(); ++i) {
            const std::size_t k = v.find(clean.samples[i].sample_id);
            if (k == GeometrySnapshot::npos) {
                throw RegistryError("variant snapshot '" + v.dataset_id + "' lacks sample " +
                                    std::to_string(clean.samples[i].sample_id));
            }
            if (v.samples[k].correct) ++out[i].correct_count;
        }
    }
    return out;
}

SuiteSnapshots load_suite_snapshots(const Registry& registry, const std::string& combo_id) {
    SuiteSnapshots out;
    out.clean = registry.load_snapshot(combo_id, kCleanDataset);
    for (const auto& ds : registry.snapshot_datasets(combo_id)) {
        if (parse_variant_dataset_id(ds)) out.variants.push_back(registry.load_snapshot(combo_id, ds));
    }
    if (out.variants.empty()) throw NotFound("combination '" + combo_id + "' has no corrupted snapshots");
    return out;
}

MarginShiftReport margin_shift(const SuiteSnapshots& ref, const SuiteSnapshots& cmp, std::string ref_id,
                               std::string cmp_id) {
    MarginShiftReport r;
    r.ref_id = std::move(ref_id);
    r.cmp_id = std::move(cmp_id);
    r.ref = relative_margin_change(ref.clean, ref.variants);
    r.cmp = relative_margin_change(cmp.clean, cmp.variants);
    r.ref_clean_accuracy = ref.clean.accuracy();
    r.cmp_clean_accuracy = cmp.clean.accuracy();
    r.accuracy_matched = std::abs(r.ref_clean_accuracy - r.cmp_clean_accuracy) <= kMatchedAccuracyTolerance;
    r.ref_more_stable = r.ref.median <= r.cmp.median;
    return r;
}

MarginShiftReport margin_shift(const Registry& registry, const std::string& ref_id, const std::string& cmp_id) {
    return margin_shift(load_suite_snapshots(registry, ref_id), load_suite_snapshots(registry, cmp_id), ref_id, cmp_id);
}

}  // namespace geoprune
