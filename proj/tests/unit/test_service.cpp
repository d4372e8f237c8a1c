#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <httplib.h>
#include <json.hpp>
#include <thread>
#include <unistd.h>

#include "geoprune/error.hpp"
#include "geoprune/service.hpp"
#include "helpers.hpp"

using namespace geoprune;
using geoprune::testing::make_network;
using geoprune::testing::random_dataset;
using geoprune::testing::TempDir;
using nlohmann::json;

namespace {

Combination combo(std::string id, PruneMethod method, double rate) {
    Combination c;
    c.id = std::move(id);
    c.architecture = "mlp";
    c.method = method;
    c.prune_rate = rate;
    c.dataset_id = "train";
    c.clean_accuracy = 0.5;
    return c;
}

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override {
        Registry reg = Registry::create(dir.path());
        const LabeledDataset data = random_dataset(30, 4, 3, 5);
        for (auto [id, method, seed] : {std::tuple{"dense", PruneMethod::none, 1}, {"mag", PruneMethod::magnitude, 2}}) {
            const Network net = make_network({4, 8, 3}, seed);
            std::vector<GeometrySnapshot> snaps{geometry_snapshot(net, data, "", "clean")};
            for (int s = 1; s <= 5; ++s) {
                LabeledDataset shifted = data;
                for (auto& v : shifted.inputs.data()) v *= 1.0f - 0.15f * float(s);
                snaps.push_back(geometry_snapshot(net, shifted, "", variant_dataset_id("shrink", s)));
            }
            reg.register_combination(combo(id, method, method == PruneMethod::none ? 0.0 : 0.5), net, snaps);
        }
        ServiceConfig cfg;
        cfg.registry_root = dir.path();
        cfg.allowed_origins = {"http://localhost:5173"};
        service = std::make_unique<Service>(cfg);
    }

    Response get(std::string path, std::map<std::string, std::string> query = {}, std::string origin = {}) {
        Request r;
        r.path = std::move(path);
        r.query = std::move(query);
        r.origin = std::move(origin);
        return service->handle(r);
    }

    TempDir dir;
    std::unique_ptr<Service> service;
};

}  // namespace

TEST_F(ServiceTest, ListsCombinations) {
    const Response r = get("/api/combinations");
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.headers.at("Content-Type"), "application/json");
    const auto j = json::parse(r.body);
    ASSERT_EQ(j.size(), 2u);
    EXPECT_EQ(j[0].at("id"), "dense");
    EXPECT_EQ(r.body, api::combinations_json(Registry::open(dir.path()).combinations()));
}

TEST_F(ServiceTest, EvaluationTable) {
    const Response r = get("/api/evaluation-table");
    ASSERT_EQ(r.status, 200) << r.body;
    const auto j = json::parse(r.body);
    EXPECT_EQ(j.at("rows").size(), 2u);
    EXPECT_EQ(get("/api/evaluation-table", {{"severity", "1"}}).status, 200);
}

TEST_F(ServiceTest, TrajectoriesMatchLibrary) {
    const Response r = get("/api/trajectories", {{"ref", "dense"}, {"cmp", "mag"}, {"class", "1"}});
    ASSERT_EQ(r.status, 200) << r.body;
    const Registry reg = Registry::open(dir.path());
    const auto expected =
        trajectories(reg.load_snapshot("dense", "clean"), reg.load_snapshot("mag", "clean"), 1u);
    EXPECT_EQ(r.body, api::trajectories_json(expected));
}

TEST_F(ServiceTest, SnapshotAndDensity) {
    EXPECT_EQ(get("/api/snapshot/dense/clean").status, 200);
    EXPECT_EQ(get("/api/snapshot/dense/shrink@2", {{"class", "0"}}).status, 200);
    EXPECT_EQ(get("/api/snapshot/nope/clean").status, 404);
    EXPECT_EQ(get("/api/snapshot/dense/shrink@9").status, 404);
    const Response d = get("/api/density", {{"combo", "dense"}, {"metric", "length"}});
    ASSERT_EQ(d.status, 200) << d.body;
    EXPECT_TRUE(json::parse(d.body).contains("heights"));
    EXPECT_EQ(get("/api/density", {{"combo", "dense"}, {"metric", "colour"}}).status, 400);
}

TEST_F(ServiceTest, CorrelationsAndMarginShift) {
    const Response c = get("/api/correlations", {{"combo", "dense"}});
    EXPECT_TRUE(c.status == 200 || c.status == 422) << c.body;
    const Response m = get("/api/margin-shift", {{"ref", "dense"}, {"cmp", "mag"}});
    EXPECT_EQ(m.status, 200) << m.body;
}

TEST_F(ServiceTest, UnknownRouteAndMissingParams) {
    EXPECT_EQ(get("/api/nothing").status, 404);
    EXPECT_EQ(get("/api/trajectories", {{"ref", "dense"}}).status, 400);
}

TEST_F(ServiceTest, PostSubset) {
    Request r;
    r.method = "POST";
    r.path = "/api/subsets";
    r.body = R"({"sample_ids":[1000,1001],"note":"pair"})";
    const Response ok = service->handle(r);
    EXPECT_EQ(ok.status, 201) << ok.body;
    EXPECT_EQ(json::parse(ok.body).at("sample_ids"), json::array({1000, 1001}));

    r.body = R"({"sample_ids":[1000,424242]})";
    const Response bad = service->handle(r);
    EXPECT_EQ(bad.status, 400);
    EXPECT_EQ(json::parse(bad.body).at("sample_id"), 424242);
    EXPECT_NE(bad.body.find("424242"), std::string::npos);

    r.body = "not json";
    EXPECT_EQ(service->handle(r).status, 400);
    r.body = R"({"sample_ids":[]})";
    EXPECT_EQ(service->handle(r).status, 400);
}

TEST_F(ServiceTest, CorsOnlyForAllowedOrigins) {
    const Response ok = get("/api/combinations", {}, "http://localhost:5173");
    EXPECT_EQ(ok.headers.at("Access-Control-Allow-Origin"), "http://localhost:5173");
    const Response other = get("/api/combinations", {}, "http://evil.example");
    EXPECT_EQ(other.headers.count("Access-Control-Allow-Origin"), 0u);
    Request pre;
    pre.method = "OPTIONS";
    pre.path = "/api/subsets";
    pre.origin = "http://localhost:5173";
    EXPECT_EQ(service->handle(pre).status, 204);
}

TEST(ServiceConfig, EnvOverrideAndValidation) {
    TempDir dir;
    ServiceConfig cfg;
    cfg.registry_root = "/does/not/exist";
    ::setenv(kRegistryEnvVar, dir.path().c_str(), 1);
    const ServiceConfig eff = cfg.with_env_overrides();
    ::unsetenv(kRegistryEnvVar);
    EXPECT_EQ(eff.registry_root, dir.path());
    EXPECT_NO_THROW(eff.validate());
    EXPECT_THROW(cfg.validate(), NotFound);
    ServiceConfig port = eff;
    port.port = 70000;
    EXPECT_THROW(port.validate(), std::invalid_argument);
}

TEST_F(ServiceTest, ServesOverHttp) {
    ServiceConfig cfg = service->config();
    cfg.port = 20000 + static_cast<int>(::getpid() % 20000);
    Service live(cfg);
    std::atomic<bool> failed{false};
    std::thread t([&] {
        try {
            live.serve();
        } catch (const std::exception&) {
            failed = true;
        }
    });
    httplib::Client client(cfg.host, cfg.port);
    httplib::Result res;
    for (int attempt = 0; attempt < 100 && !res && !failed; ++attempt) {
        res = client.Get("/api/combinations");
        if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    live.stop();
    t.join();
    ASSERT_FALSE(failed) << "port " << cfg.port << " unavailable";
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body).size(), 2u);
}
