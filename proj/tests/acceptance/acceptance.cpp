// Acceptance runner: one PASS / FAIL / WARN line per criterion.
// Exit status is nonzero only when a criterion FAILs.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geoprune/corruption.hpp"
#include "geoprune/error.hpp"
#include "geoprune/geometry.hpp"
#include "geoprune/network.hpp"
#include "geoprune/pruning.hpp"
#include "geoprune/registry.hpp"
#include "geoprune/stats.hpp"
#include "geoprune/synthetic.hpp"
#include "geoprune_cli/cli.hpp"

using namespace geoprune;

namespace {

enum class Verdict { pass, fail, warn };

struct Outcome {
    Verdict verdict = Verdict::pass;
    std::string detail;
};

Outcome pass_if(bool ok, const std::string& detail) { return {ok ? Verdict::pass : Verdict::fail, detail}; }

std::string fmt(double v, int precision = 4) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(precision);
    s << v;
    return s.str();
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

Network random_net(std::vector<std::size_t> sizes, std::uint64_t seed) {
    NetworkSpec spec;
    spec.layer_sizes = std::move(sizes);
    spec.seed = seed;
    return Network::initialize(spec);
}

LabeledDataset uniform_data(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed, float lo,
                            float hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(lo, hi);
    LabeledDataset d;
    d.id = "uniform";
    d.class_count = classes;
    d.inputs = Matrix(n, dim);
    for (auto& v : d.inputs.data()) v = u(rng);
    for (std::size_t i = 0; i < n; ++i) {
        d.labels.push_back(static_cast<std::uint32_t>(i % classes));
        d.sample_ids.push_back(i);
    }
    return d;
}

std::vector<double> dot_logits(std::span<const float> x, const ClassDirections& dirs) {
    std::vector<double> z(dirs.class_count());
    for (std::size_t j = 0; j < z.size(); ++j) z[j] = dot(x, dirs.directions.row(j));
    return z;
}

std::uint32_t argmax_d(const std::vector<double>& z) {
    return static_cast<std::uint32_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

// ---- 1 ------------------------------------------------------------------------
Outcome decomposition_identity() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> width(2, 24), classes(2, 10);
    std::uniform_real_distribution<float> u(-1.5f, 1.5f);
    double worst = 0.0;
    std::size_t redrawn = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t in = width(rng), hidden = width(rng), c = classes(rng);
        const Network net = random_net({in, hidden, c}, 1000 + trial);
        Matrix x(1, in);
        ForwardResult r;
        do {  // the angle form needs a nonzero feature vector
            for (auto& v : x.data()) v = u(rng);
            r = forward(net, x);
            if (l2_norm(r.features.row(0)) <= kDegenerateEpsilon) ++redrawn;
        } while (l2_norm(r.features.row(0)) <= kDegenerateEpsilon);
        const ClassDirections dirs = class_directions(net);
        const auto feat = r.features.row(0);
        const auto z = dot_logits(feat, dirs);
        const double mx = *std::max_element(z.begin(), z.end());
        double s = 0.0;
        for (double zj : z) s += std::exp(zj - mx);
        for (std::uint32_t j = 0; j < c; ++j) {
            const double direct = std::exp(z[j] - mx) / s;
            worst = std::max(worst, std::abs(decompose_probability(feat, dirs, j) - direct) / direct);
        }
    }
    return pass_if(worst <= 1e-5, "1000 nets, max relative error " + sci(worst) + ", " +
                                      std::to_string(redrawn) + " zero-feature inputs redrawn");
}

// ---- 2 ------------------------------------------------------------------------
Outcome margin_certificate() {
    const LabeledDataset data = synthetic::make_blobs({.samples = 600, .classes = 4, .radius = 3.0, .spread = 0.9, .seed = 21});
    const Network net = train(random_net({2, 16, 4}, 22), data, TrainConfig{0.05, 10, 32, 1});
    const ForwardResult fr = forward(net, data.inputs);
    const ClassDirections dirs = class_directions(net);

    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t m = dirs.width();

    std::size_t used = 0, flips_inside = 0, samples_flipped_outside = 0;
    for (std::size_t i = 0; i < data.size() && used < 200; ++i) {
        const auto x = fr.features.row(i);
        if (l2_norm(x) <= kDegenerateEpsilon) continue;
        const auto z = dot_logits(x, dirs);
        const std::uint32_t p = argmax_d(z);
        const double mu = margin(x, dirs, p);
        if (!(mu > 1e-6)) continue;
        ++used;

        // Nearest boundary normal, for the worst-case direction.
        std::vector<double> worst_dir(m, 0.0);
        double best = std::numeric_limits<double>::infinity();
        for (std::uint32_t j = 0; j < dirs.class_count(); ++j) {
            if (j == p) continue;
            std::vector<double> diff(m);
            double nn = 0.0, proj = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                diff[k] = double(dirs.directions(p, k)) - dirs.directions(j, k);
                nn += diff[k] * diff[k];
                proj += diff[k] * x[k];
            }
            nn = std::sqrt(nn);
            if (proj / nn < best) {
                best = proj / nn;
                for (std::size_t k = 0; k < m; ++k) worst_dir[k] = -diff[k] / nn;
            }
        }

        auto flips = [&](const std::vector<double>& dir, double radius) {
            std::vector<float> y(m);
            for (std::size_t k = 0; k < m; ++k) y[k] = static_cast<float>(x[k] + radius * dir[k]);
            return argmax_d(dot_logits(y, dirs)) != p;
        };

        bool flipped_outside = false;
        for (int t = 0; t < 100; ++t) {
            std::vector<double> dir(m);
            if (t == 0) {
                dir = worst_dir;
            } else {
                double n2 = 0.0;
                for (auto& d : dir) n2 += (d = gauss(rng)) * d;
                for (auto& d : dir) d /= std::sqrt(n2);
            }
            // Below mu: radius in [0, 0.999 mu). The worst direction uses the largest radius.
            const double r = t == 0 ? 0.999 * mu : 0.999 * mu * unit(rng);
            if (flips(dir, r)) ++flips_inside;
            if (flips(dir, 2.0 * mu)) flipped_outside = true;
        }
        if (flipped_outside) ++samples_flipped_outside;
    }
    return pass_if(used == 200 && flips_inside == 0 && samples_flipped_outside >= 1,
                   std::to_string(used) + " samples, " + std::to_string(flips_inside) + " flips below margin, " +
                       std::to_string(samples_flipped_outside) + " samples flipped at 2x margin");
}

// ---- 3 ------------------------------------------------------------------------
// Mean cross-entropy evaluated from scratch in double, independent of forward().
// `active` receives the ReLU on/off pattern so kink crossings can be detected.
double loss_double(const Network& net, const LabeledDataset& data, std::vector<bool>* active = nullptr) {
    double total = 0.0;
    if (active) active->clear();
    for (std::size_t i = 0; i < data.size(); ++i) {
        std::vector<double> a(data.inputs.row(i).begin(), data.inputs.row(i).end());
        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            const Layer& layer = net.layer(l);
            std::vector<double> z(layer.fan_out(), 0.0);
            for (std::size_t r = 0; r < layer.fan_out(); ++r) {
                for (std::size_t c = 0; c < layer.fan_in(); ++c) z[r] += double(layer.weights(r, c)) * a[c];
                if (layer.bias) z[r] += (*layer.bias)[r];
                if (l + 1 < net.layers().size()) {
                    if (active) active->push_back(z[r] > 0.0);
                    z[r] = std::max(0.0, z[r]);
                }
            }
            a = std::move(z);
        }
        const double mx = *std::max_element(a.begin(), a.end());
        double s = 0.0;
        for (double v : a) s += std::exp(v - mx);
        total += std::log(s) + mx - a[data.labels[i]];
    }
    return total / static_cast<double>(data.size());
}

Outcome gradient_check() {
    const Network net = random_net({2, 8, 4, 3}, 31);
    const LabeledDataset data = uniform_data(24, 2, 3, 32, -1.0f, 1.0f);
    const Gradients g = backward(net, data);
    double worst = 0.0;
    std::size_t checked = 0, shrunk = 0;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const Layer& layer = net.layer(l);
        for (std::size_t r = 0; r < layer.fan_out(); ++r)
            for (std::size_t c = 0; c < layer.fan_in(); ++c) {
                const float w = layer.weights(r, c);
                // Central differences are only valid when neither side crosses a ReLU kink.
                std::vector<bool> base, plus, minus;
                loss_double(net, data, &base);
                double fd = 0.0;
                for (double h = 1e-3; h >= 1e-6; h /= 10.0) {
                    const float wp = static_cast<float>(w + h), wm = static_cast<float>(w - h);
                    const double lp = loss_double(net.with_weight(l, r, c, wp), data, &plus);
                    const double lm = loss_double(net.with_weight(l, r, c, wm), data, &minus);
                    fd = (lp - lm) / (double(wp) - double(wm));
                    if (plus == base && minus == base) break;
                    ++shrunk;
                }
                const double an = g.weights[l](r, c);
                worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3}));
                ++checked;
            }
    }
    return pass_if(worst <= 1e-4, std::to_string(checked) + " weights, max relative error " + sci(worst) +
                                      ", " + std::to_string(shrunk) + " step reductions at ReLU kinks");
}

// ---- 4 ------------------------------------------------------------------------
Outcome taylor_fidelity() {
    const LabeledDataset data = synthetic::make_blobs({.samples = 300, .classes = 3, .seed = 41});
    const Network net = train(random_net({2, 16, 3}, 42), data, TrainConfig{0.05, 5, 30, 1});
    const ImportanceScores s = taylor_importance(net, data);
    std::vector<double> taylor, exact;
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
        const Layer& layer = net.layer(l);
        for (std::size_t r = 0; r < layer.fan_out(); ++r)
            for (std::size_t c = 0; c < layer.fan_in(); ++c) {
                taylor.push_back(s.layers[l](r, c));
                exact.push_back(finite_diff_importance(net, data, {l, r, c}));
            }
    }
    const double rho = spearman(taylor, exact);
    return pass_if(taylor.size() <= 200 && rho >= 0.8,
                   std::to_string(taylor.size()) + " weights, spearman " + fmt(rho));
}

// ---- 5 ------------------------------------------------------------------------
Outcome pruning_invariants() {
    const Network net = random_net({20, 40, 30, 5}, 51);
    const std::vector<double> rates{0.1, 0.3, 0.5, 0.7, 0.9};
    std::vector<PruneMask> masks;
    std::string problems;
    for (double rate : rates) {
        for (auto [name, mask] : {std::pair{"magnitude", prune_magnitude(net, rate)},
                                  std::pair{"random", prune_random(net, rate, 52)}}) {
            const auto expected = static_cast<std::size_t>(std::floor(rate * double(mask.prunable_weight_count())));
            if (mask.masked_count() != expected) problems += std::string(" count:") + name + "@" + fmt(rate, 1);
            if (mask.layers.back().data().end() != std::find(mask.layers.back().data().begin(),
                                                             mask.layers.back().data().end(), 0.0f))
                problems += std::string(" classifier:") + name;
            if (std::string(name) == "magnitude") masks.push_back(mask);
        }
    }
    for (std::size_t k = 1; k < masks.size(); ++k)
        for (std::size_t l = 0; l < masks[k].layers.size(); ++l) {
            const auto lo = masks[k - 1].layers[l].data();
            const auto hi = masks[k].layers[l].data();
            for (std::size_t i = 0; i < lo.size(); ++i)
                if (lo[i] == 0.0f && hi[i] != 0.0f) {
                    problems += " nesting@" + fmt(rates[k], 1);
                    k = masks.size() - 1;
                    break;
                }
        }
    return pass_if(problems.empty(), problems.empty() ? "counts exact, masks nested at all 5 rates" : problems);
}

// ---- 6 ------------------------------------------------------------------------
Outcome biprop_desk_check() {
    const LabeledDataset train_set = synthetic::make_blobs({.samples = 800, .classes = 4, .seed = 11, .first_id = 0});
    const LabeledDataset test_set = synthetic::make_blobs({.samples = 400, .classes = 4, .seed = 12, .first_id = 10000});
    NetworkSpec spec;
    spec.layer_sizes = {2, 128, 128, 4};
    spec.seed = 61;

    BipropConfig cfg;
    cfg.prune_rate = 0.5;
    cfg.epochs = 30;
    cfg.learning_rate = 0.5;
    cfg.seed = 62;
    const BipropResult b = biprop_train(spec, train_set, cfg);
    const double acc_b = accuracy(b.network, test_set);
    const double achieved = sparsity(b.mask);

    const Network dense = train(Network::initialize(spec), train_set, TrainConfig{0.05, 30, 32, 63});
    const double acc_d = accuracy(dense, test_set);
    // Kept weights must be alpha * sign(initial weight), so no weight was trained.
    const Network init = Network::initialize(spec);
    bool untrained = true;
    for (std::size_t l = 0; l < init.layers().size(); ++l) {
        const auto w0 = init.layer(l).weights.data();
        const auto w = b.network.layer(l).weights.data();
        for (std::size_t k = 0; k < w.size(); ++k)
            if (w[k] != 0.0f && w[k] != std::copysign(b.alpha[l], w0[k])) untrained = false;
    }
    return pass_if(untrained && acc_b >= 0.95 && std::abs(acc_b - acc_d) <= 0.03 && std::abs(achieved - 0.5) < 1e-3,
                   "biprop " + fmt(acc_b) + " at sparsity " + fmt(achieved) + ", dense " + fmt(acc_d));
}

// ---- shared glyph pipeline (7, 11) --------------------------------------------
struct GlyphSetup {
    LabeledDataset train_set;
    LabeledDataset test_set;
    CorruptedDataset suite;
};

const GlyphSetup& glyphs() {
    static const GlyphSetup setup = [] {
        GlyphSetup g;
        g.train_set = synthetic::make_glyphs({.samples = 2000, .classes = 4, .side = 8, .seed = 71, .first_id = 0});
        g.test_set = synthetic::make_glyphs({.samples = 500, .classes = 4, .side = 8, .seed = 72, .first_id = 100000});
        const auto types = default_suite_types();
        g.suite = build_suite(g.test_set, types, 73);
        return g;
    }();
    return setup;
}

std::vector<GeometrySnapshot> suite_snapshots(const Network& net, const GlyphSetup& g) {
    std::vector<GeometrySnapshot> out{geometry_snapshot(net, g.test_set, "", kCleanDataset)};
    for (const auto& type : g.suite.types)
        for (int s = 1; s <= kSeverityLevels; ++s)
            out.push_back(geometry_snapshot(net, g.suite.as_dataset(type, s), "", variant_dataset_id(type, s)));
    return out;
}

// ---- 7 ------------------------------------------------------------------------
Outcome correlation_signs() {
    const GlyphSetup& g = glyphs();
    const Network net = train(random_net({64, 32, 16, 4}, 74), g.train_set, TrainConfig{0.05, 30, 32, 75});
    const GeometrySnapshot clean = geometry_snapshot(net, g.test_set, "dense", kCleanDataset);
    const auto records = per_sample_robustness(net, g.suite);
    const CorrelationReport r = metric_robustness_correlations(clean, records);
    return pass_if(r.rc_angle <= -0.3 && r.rc_margin >= 0.3,
                   "clean acc " + fmt(clean.accuracy()) + ", rc_angle " + fmt(r.rc_angle) + ", rc_l2 " +
                       fmt(r.rc_l2) + ", rc_margin " + fmt(r.rc_margin) + " (n=" + std::to_string(r.n) + ")");
}

// ---- 8 ------------------------------------------------------------------------
Outcome dimensionality() {
    const std::vector<std::size_t> dims{2, 8, 32, 128, 512};
    const AngleExperimentResult r = random_angle_experiment(dims, 10000, 81);
    const auto& d2 = r.rows.front();
    const auto& d512 = r.rows.back();
    const Network net = random_net({64, 512, 512, 10}, 82);
    const LabeledDataset d = uniform_data(1000, 64, 10, 83, 0.0f, 1.0f);
    const AngleSummary a = angle_to_true_summary(geometry_snapshot(net, d));
    const bool ok = d512.mean_deg >= 88.0 && d512.mean_deg <= 92.0 && d2.std_deg - d512.std_deg >= 10.0 &&
                    a.mean_deg >= 85.0 && a.mean_deg <= 92.0;
    return pass_if(ok, "d=512 mean " + fmt(d512.mean_deg, 2) + " std " + fmt(d512.std_deg, 2) + ", d=2 std " +
                           fmt(d2.std_deg, 2) + ", untrained net " + fmt(a.mean_deg, 2) + " +- " + fmt(a.std_deg, 2));
}

// ---- 9 ------------------------------------------------------------------------
Outcome robustness_counting() {
    const LabeledDataset d = synthetic::make_glyphs({.samples = 20, .classes = 4, .side = 8, .seed = 91});
    const Network net = train(random_net({64, 16, 4}, 92), d, TrainConfig{0.1, 20, 5, 93});
    const std::vector<CorruptionType> types{CorruptionType::gaussian_noise, CorruptionType::occlusion};
    const CorruptedDataset suite = build_suite(d, types, 94);
    const auto records = per_sample_robustness(net, suite);
    std::size_t mismatches = 0;
    std::uint32_t max_seen = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::uint32_t count = 0;
        for (const auto& type : suite.types)
            for (int s = 1; s <= kSeverityLevels; ++s) {
                Matrix one(1, d.input_dim());
                const auto row = suite.variant(type, s).row(i);
                std::copy(row.begin(), row.end(), one.row(0).begin());
                if (predict(net, one)[0] == d.labels[i]) ++count;
            }
        if (records[i].correct_count != count || records[i].sample_id != d.sample_ids[i]) ++mismatches;
        max_seen = std::max(max_seen, records[i].max_count);
    }
    return pass_if(mismatches == 0 && max_seen == types.size() * kSeverityLevels,
                   std::to_string(mismatches) + " mismatches over 20 samples, max per sample " + std::to_string(max_seen));
}

// ---- 10 -----------------------------------------------------------------------
Outcome margin_trimming() {
    std::mt19937_64 rng(101);
    std::normal_distribution<double> n;
    std::vector<KeyedValue> values;
    for (std::uint64_t i = 0; i < 1000; ++i) values.push_back({n(rng), i, "v@1"});
    const std::size_t kept = trim_extremes(values).size();

    auto sample = [](std::uint64_t id, float m) {
        GeometrySample s;
        s.sample_id = id;
        s.angles = {10.0f, 80.0f};
        s.length = 1.0f;
        s.distance = m;
        s.correct = true;
        return s;
    };
    GeometrySnapshot ref, cor;
    ref.dataset_id = kCleanDataset;
    cor.dataset_id = "v@1";
    ref.class_count = cor.class_count = 2;
    ref.samples = {sample(1, 2.0f), sample(2, 1.0f)};
    cor.samples = {sample(1, 1.0f), sample(2, 1.5f)};
    const std::vector<GeometrySnapshot> cors{cor};
    const auto r = relative_margin_change(ref, cors);
    double v1 = NAN, v2 = NAN;
    for (const auto& k : r.kept) (k.sample_id == 1 ? v1 : v2) = k.value;
    return pass_if(kept == 990 && v1 == 0.5 && v2 == -0.5,
                   std::to_string(kept) + " of 1000 kept, 2->1 gives " + fmt(v1, 3) + ", 1->1.5 gives " + fmt(v2, 3));
}

// ---- 11 -----------------------------------------------------------------------
Outcome mpt_stability(const std::filesystem::path& scratch) {
    const GlyphSetup& g = glyphs();
    NetworkSpec spec;
    spec.layer_sizes = {64, 256, 256, 4};
    spec.seed = 111;

    BipropConfig cfg;
    cfg.prune_rate = 0.5;
    cfg.epochs = 40;
    cfg.learning_rate = 2.0;
    cfg.seed = 112;
    const BipropResult b = biprop_train(spec, g.train_set, cfg);
    const double acc_b = accuracy(b.network, g.test_set);

    // Magnitude-prune a trained dense net of the same shape; pick the rate
    // whose clean accuracy is closest to the biprop model.
    const Network dense = train(Network::initialize(spec), g.train_set, TrainConfig{0.05, 30, 32, 113});
    double best_rate = 0.5, best_gap = 1e9;
    Network mag = dense;
    for (int step = 0; step <= 49; ++step) {
        const double rate = 0.5 + 0.01 * step;
        Network candidate = apply_mask(dense, prune_magnitude(dense, rate));
        const double gap = std::abs(accuracy(candidate, g.test_set) - acc_b);
        if (gap < best_gap) {
            best_gap = gap;
            best_rate = rate;
            mag = std::move(candidate);
        }
    }

    std::filesystem::remove_all(scratch);
    Registry reg = Registry::create(scratch);
    auto register_model = [&](const std::string& id, PruneMethod method, double rate, const Network& net) {
        Combination c;
        c.id = id;
        c.architecture = "mlp-256";
        c.method = method;
        c.prune_rate = rate;
        c.dataset_id = "glyphs";
        c.clean_accuracy = accuracy(net, g.test_set);
        reg.register_combination(c, net, suite_snapshots(net, g));
    };
    register_model("glyphs-mpt", PruneMethod::mpt, 0.5, b.network);
    register_model("glyphs-magnitude", PruneMethod::magnitude, best_rate, mag);

    // The report comes from the same subcommand a user would run.
    std::ostringstream report, err;
    const int code = cli::run_cli({"margin-shift", "--registry", scratch.string(), "--ref", "glyphs-mpt", "--cmp",
                                   "glyphs-magnitude"},
                                  report, err);
    if (code != 0) return {Verdict::fail, "margin-shift exited " + std::to_string(code) + ": " + err.str()};
    std::istringstream lines(report.str());
    for (std::string line; std::getline(lines, line);) std::cout << "    | " << line << '\n';

    const MarginShiftReport r = margin_shift(reg, "glyphs-mpt", "glyphs-magnitude");
    const std::string detail = "biprop acc " + fmt(r.ref_clean_accuracy) + " median " + fmt(r.ref.median) +
                               "; magnitude r=" + fmt(best_rate, 2) + " acc " + fmt(r.cmp_clean_accuracy) +
                               " median " + fmt(r.cmp.median);
    if (!r.accuracy_matched) return {Verdict::warn, detail + " (accuracies not within 0.02)"};
    return {r.ref_more_stable ? Verdict::pass : Verdict::warn, detail};
}

// ---- 12 -----------------------------------------------------------------------
Outcome registry_round_trip(const std::filesystem::path& scratch) {
    const LabeledDataset test_set = synthetic::make_glyphs({.samples = 120, .classes = 3, .side = 6, .seed = 121, .first_id = 500});
    const LabeledDataset train_set = synthetic::make_glyphs({.samples = 300, .classes = 3, .side = 6, .seed = 122});
    const std::vector<CorruptionType> types{CorruptionType::gaussian_noise, CorruptionType::contrast};
    const CorruptedDataset suite = build_suite(test_set, types, 123);

    std::filesystem::remove_all(scratch);
    std::map<std::string, std::vector<GeometrySnapshot>> stored;
    std::vector<std::vector<unsigned char>> written;
    {
        Registry reg = Registry::create(scratch);
        const Network dense = train(random_net({36, 24, 3}, 124), train_set, TrainConfig{0.05, 10, 32, 125});
        const std::vector<std::pair<PruneMethod, double>> variants{
            {PruneMethod::none, 0.0}, {PruneMethod::magnitude, 0.5}, {PruneMethod::magnitude, 0.8},
            {PruneMethod::random, 0.5}};
        for (auto [method, rate] : variants) {
            const Network net = method == PruneMethod::none      ? dense
                                : method == PruneMethod::random ? apply_mask(dense, prune_random(dense, rate, 126))
                                                                : apply_mask(dense, prune_magnitude(dense, rate));
            Combination c;
            c.architecture = "mlp";
            c.method = method;
            c.prune_rate = rate;
            c.dataset_id = "glyphs";
            c.clean_accuracy = accuracy(net, test_set);
            std::vector<GeometrySnapshot> snaps{geometry_snapshot(net, test_set, "", kCleanDataset)};
            for (const auto& t : suite.types)
                for (int s = 1; s <= kSeverityLevels; ++s)
                    snaps.push_back(geometry_snapshot(net, suite.as_dataset(t, s), "", variant_dataset_id(t, s)));
            const std::string id = reg.register_combination(c, net, snaps);
            for (auto& s : snaps) s.combination_id = id;
            stored[id] = snaps;
        }
    }

    // Fresh handle, as after a restart.
    Registry reg = Registry::open(scratch);
    std::size_t byte_mismatch = 0, checked = 0;
    for (const auto& [id, snaps] : stored)
        for (const auto& s : snaps) {
            ++checked;
            if (reg.snapshot_bytes(id, s.dataset_id) != encode_snapshot(s) ||
                encode_snapshot(reg.load_snapshot(id, s.dataset_id)) != encode_snapshot(s))
                ++byte_mismatch;
        }

    std::mt19937_64 rng(127);
    std::size_t cell_mismatch = 0, cells = 0;
    for (int k = 0; k < 3; ++k) {
        std::vector<std::uint64_t> ids;
        std::bernoulli_distribution keep(0.3 + 0.2 * k);
        for (auto id : test_set.sample_ids)
            if (keep(rng)) ids.push_back(id);
        const SubsetSelection subset = reg.save_subset(ids, "acceptance " + std::to_string(k));
        const std::set<std::uint64_t> chosen(subset.sample_ids.begin(), subset.sample_ids.end());
        EvaluationOptions opts;
        opts.types = suite.types;
        opts.subset = &subset;
        const EvaluationTable table = evaluation_table(reg, opts);
        for (const auto& row : table.rows)
            for (const auto& series : row.methods)
                for (const auto& cell : series.cells) {
                    ++cells;
                    std::size_t correct = 0, total = 0;
                    for (const auto& snap : stored.at(cell.combination_id)) {
                        const bool in_row = row.key == kCleanDataset
                                                ? snap.dataset_id == kCleanDataset
                                                : snap.dataset_id.rfind(row.key + "@", 0) == 0;
                        if (!in_row) continue;
                        for (const auto& s : snap.samples)
                            if (chosen.count(s.sample_id)) {
                                ++total;
                                correct += s.correct ? 1 : 0;
                            }
                    }
                    if (cell.correct != correct || cell.total != total ||
                        cell.accuracy != static_cast<double>(correct) / static_cast<double>(total))
                        ++cell_mismatch;
                }
    }
    return pass_if(byte_mismatch == 0 && cell_mismatch == 0 && checked > 0 && cells > 0,
                   std::to_string(checked) + " snapshots byte-identical after reopen (" + std::to_string(byte_mismatch) +
                       " mismatches); " + std::to_string(cells) + " cells over 3 subsets, " +
                       std::to_string(cell_mismatch) + " recount mismatches");
}

}  // namespace

int main() {
    const auto scratch = std::filesystem::temp_directory_path() /
                         ("geoprune-acceptance-" + std::to_string(std::random_device{}()));
    struct Criterion {
        int number;
        std::string name;
        double budget_s;  // 0 = no runtime bound
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "decomposition identity", 10, decomposition_identity},
        {2, "margin certificate", 30, margin_certificate},
        {3, "gradient check", 0, gradient_check},
        {4, "taylor fidelity", 0, taylor_fidelity},
        {5, "pruning count and nesting", 0, pruning_invariants},
        {6, "biprop desk check", 120, biprop_desk_check},
        {7, "correlation signs", 300, correlation_signs},
        {8, "curse of dimensionality", 0, dimensionality},
        {9, "robustness counting", 0, robustness_counting},
        {10, "relative margin trimming", 0, margin_trimming},
        {11, "mpt stability at matched accuracy", 0, [&] { return mpt_stability(scratch / "shift"); }},
        {12, "registry round trip", 0, [&] { return registry_round_trip(scratch / "registry"); }},
    };

    int failures = 0, warnings = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Verdict::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s && o.verdict == Verdict::pass) {
            o.verdict = Verdict::fail;
            o.detail += " (over " + fmt(c.budget_s, 0) + " s budget)";
        }
        const char* tag = o.verdict == Verdict::pass ? "PASS" : o.verdict == Verdict::warn ? "WARN" : "FAIL";
        failures += o.verdict == Verdict::fail;
        warnings += o.verdict == Verdict::warn;
        std::printf("%s  %2d  %-34s %7.2fs  %s\n", tag, c.number, c.name.c_str(), secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::error_code ec;
    std::filesystem::remove_all(scratch, ec);
    std::printf("%d criteria, %d failed, %d warnings\n", static_cast<int>(criteria.size()), failures, warnings);
    return failures == 0 ? 0 : 1;
}
