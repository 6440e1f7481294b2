#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "causal/scm.h"
#include "causal/service.h"
#include "test_support.h"

namespace causal::service {
namespace {

using nlohmann::json;

std::string climate_source() {
  return testing_support::read_file(testing_support::fixture_path("climate.dag"));
}

std::string climate_csv(std::size_t n, std::uint64_t seed) {
  auto dag = testing_support::climate();
  auto spec =
      scm::load_spec_file(dag, testing_support::fixture_path("climate.scm.json"));
  spec.seed = seed;
  return write_csv(scm::drop_latent(scm::simulate(spec, n), dag));
}

class ApiTest : public ::testing::Test {
 protected:
  DatasetStore store;
  Api api{store};

  Response post(std::string_view route, const json& body) {
    return api.post(route, body.dump());
  }
  std::string upload_climate(std::size_t n = 2000, std::uint64_t seed = 1) {
    auto r = api.upload(climate_csv(n, seed));
    EXPECT_EQ(r.status, 200) << r.body.dump();
    return r.body["dataset_id"];
  }
};

TEST_F(ApiTest, Health) {
  auto r = api.health();
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["status"], "ok");
  EXPECT_EQ(r.body["version"], kVersion);
}

TEST_F(ApiTest, ParseReturnsGraphWarningsAndCanonicalSource) {
  auto r = post("parse", {{"source", "dag g { A -> B }"}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["dag"]["nodes"].size(), 2u);
  EXPECT_EQ(r.body["warnings"].size(), 2u);
  EXPECT_EQ(r.body["source"], "dag g {\n  node A\n  node B\n  A -> B\n}\n");

  auto bad = post("parse", {{"source", "dag g {\n A -> \n}"}});
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(bad.body["code"], "ParseError");
  EXPECT_EQ(bad.body["span"]["line"], 2);
}

TEST_F(ApiTest, IdentifyFromDslOrJson) {
  auto r = post("identify", {{"dag", climate_source()}});
  ASSERT_EQ(r.status, 200) << r.body.dump();
  EXPECT_EQ(r.body["minimal_sets"], json::parse(R"([["VV"]])"));
  EXPECT_EQ(r.body["query"]["treatment"], "SW");

  auto as_json = post("parse", {{"source", climate_source()}}).body["dag"];
  auto direct = post("identify", {{"dag", as_json}, {"effect", "direct"}});
  ASSERT_EQ(direct.status, 200);
  EXPECT_EQ(direct.body["mediators"], json::array({"UI"}));
  EXPECT_EQ(direct.body["minimal_sets"], json::parse(R"([["City", "Temp", "VV"]])"));

  auto other = post("identify", {{"dag", climate_source()},
                                 {"treatment", "Temp"},
                                 {"outcome", "EC"}});
  EXPECT_EQ(other.body["query"]["treatment"], "Temp");
}

TEST_F(ApiTest, IdentifyReportsOpenBackdoorPaths) {
  auto r = post("identify",
                {{"dag", testing_support::read_file(
                             testing_support::fixture_path("unidentifiable.dag"))}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["identifiable"], false);
  ASSERT_EQ(r.body["open_backdoor_paths"].size(), 1u);
  EXPECT_EQ(r.body["open_backdoor_paths"][0]["path"], "T <- U -> Y");
}

TEST_F(ApiTest, ImplicationsAndTransport) {
  auto imp = post("implications", {{"dag", climate_source()}, {"max_conditioning", 3}});
  ASSERT_EQ(imp.status, 200);
  EXPECT_EQ(imp.body["implications"].size(), 5u);
  EXPECT_EQ(imp.body["implications"][0]["text"], "City _||_ SW | {}");

  auto t = post("transport",
                {{"dag", testing_support::read_file(
                             testing_support::fixture_path("climate_transport.dag"))},
                 {"selection", {"S"}}});
  ASSERT_EQ(t.status, 200) << t.body.dump();
  EXPECT_EQ(t.body["verdict"], "TransportableByAdjustment");
  EXPECT_EQ(t.body["adjustment"], json::array({"City", "Temp", "VV"}));
}

TEST_F(ApiTest, UploadIsContentAddressed) {
  const std::string csv = climate_csv(100, 3);
  auto a = api.upload(csv);
  auto b = api.upload(csv);
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body["dataset_id"], b.body["dataset_id"]);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_EQ(a.body["rows"], 100);
  EXPECT_EQ(a.body["schema"].size(), 6u);
  EXPECT_EQ(a.body["load_report"]["dropped"], 0);

  auto bad = api.upload("a,b\n1\n");
  EXPECT_EQ(bad.status, 422);
  EXPECT_EQ(bad.body["code"], "MalformedCsv");
  EXPECT_EQ(api.upload("").status, 400);
}

TEST_F(ApiTest, EstimateTotalDirectIndirect) {
  const std::string id = upload_climate(5000, 4);
  auto total = post("estimate", {{"dag", climate_source()}, {"dataset_id", id}});
  ASSERT_EQ(total.status, 200) << total.body.dump();
  EXPECT_EQ(total.body["effect"], "total");
  EXPECT_NEAR(total.body["estimate"].get<double>(), -0.6, 0.1);
  EXPECT_EQ(total.body["provenance"], id);

  auto ipw = post("estimate",
                  {{"dag", climate_source()}, {"dataset_id", id}, {"method", "ipw"}});
  EXPECT_EQ(ipw.body["method"], "ipw");
  EXPECT_TRUE(ipw.body.contains("clipped"));

  auto all = post("estimate",
                  {{"dag", climate_source()}, {"dataset_id", id}, {"effect", "indirect"}});
  ASSERT_EQ(all.status, 200) << all.body.dump();
  EXPECT_NEAR(all.body["indirect"]["estimate"].get<double>(),
              all.body["total"]["estimate"].get<double>() -
                  all.body["direct"]["estimate"].get<double>(),
              1e-12);

  auto forced = post("estimate", {{"dag", climate_source()},
                                  {"dataset_id", id},
                                  {"adjustment", json::array()}});
  EXPECT_EQ(forced.body["warnings"].size(), 1u);
}

TEST_F(ApiTest, ValidateAndSrm) {
  const std::string id = upload_climate(2000, 5);
  auto v = post("validate", {{"dag", climate_source()}, {"dataset_id", id}});
  ASSERT_EQ(v.status, 200) << v.body.dump();
  EXPECT_EQ(v.body["summary"]["untestable"], 4);
  EXPECT_EQ(v.body["checks"].size(), 9u);

  auto srm = post("srm", {{"counts", {5500, 4500}}, {"ratio", {1, 1}}});
  ASSERT_EQ(srm.status, 200);
  EXPECT_NEAR(srm.body["statistic"].get<double>(), 100.0, 1e-9);
  EXPECT_EQ(srm.body["passed"], false);

  auto from_data = post("srm", {{"dataset_id", id}, {"column", "SW"}});
  ASSERT_EQ(from_data.status, 200) << from_data.body.dump();
  const auto counts = from_data.body["counts"];
  EXPECT_EQ(counts[0].get<long long>() + counts[1].get<long long>(), 2000);
}

TEST_F(ApiTest, ErrorStatuses) {
  EXPECT_EQ(api.post("identify", "not json").status, 400);
  EXPECT_EQ(api.post("identify", "").status, 400);
  EXPECT_EQ(api.post("identify", "[1]").status, 400);
  EXPECT_EQ(post("identify", json::object()).status, 400);
  EXPECT_EQ(post("identify", {{"dag", 3}}).status, 400);
  EXPECT_EQ(post("identify", {{"dag", climate_source()}, {"effect", "sideways"}}).status,
            400);
  EXPECT_EQ(post("implications", {{"dag", climate_source()}, {"max_conditioning", -1}})
                .status,
            400);
  EXPECT_EQ(post("estimate", {{"dag", climate_source()}, {"dataset_id", 7}}).status, 400);

  auto unknown = post("estimate", {{"dag", climate_source()}, {"dataset_id", "beef"}});
  EXPECT_EQ(unknown.status, 404);
  EXPECT_EQ(unknown.body["code"], "UnknownDataset");
  EXPECT_EQ(post("nope", json::object()).status, 404);

  const std::string id = upload_climate(200, 6);
  EXPECT_EQ(post("estimate", {{"dag", climate_source()}, {"dataset_id", id},
                              {"method", "matching"}})
                .status,
            400);
  auto cycle = post("identify", {{"dag", "dag g { A -> B; B -> A }"}});
  EXPECT_EQ(cycle.status, 422);
  EXPECT_EQ(cycle.body["code"], "CycleDetected");
  auto bad_node = post("identify", {{"dag", climate_source()}, {"treatment", "Nope"}});
  EXPECT_EQ(bad_node.status, 422);
  EXPECT_EQ(bad_node.body["code"], "UnknownNode");
  auto mismatch = post("srm", {{"counts", {1, 2, 3}}, {"ratio", {1, 1}}});
  EXPECT_EQ(mismatch.status, 422);
  EXPECT_EQ(mismatch.body["code"], "LengthMismatch");
}

TEST(DatasetStoreTest, EvictsLeastRecentlyUsed) {
  DatasetStore store(2, kMaxStoreBytes);
  auto a = store.put(load_csv("x\n1.5\n"));
  auto b = store.put(load_csv("x\n2.5\n"));
  store.get(a->id);  // a is now most recent
  auto c = store.put(load_csv("x\n3.5\n"));
  EXPECT_EQ(store.size(), 2u);
  EXPECT_NE(store.get(a->id), nullptr);
  EXPECT_EQ(store.get(b->id), nullptr);
  EXPECT_NE(store.get(c->id), nullptr);
  // Evicted entries stay valid for holders.
  EXPECT_EQ(b->table.n_rows(), 1u);
}

TEST(DatasetStoreTest, ByteCap) {
  auto small = load_csv("x\n1.5\n2.5\n");
  const std::size_t size = small.table.byte_size();
  DatasetStore store(16, size + size / 2);
  EXPECT_NE(store.put(small), nullptr);
  EXPECT_NE(store.put(load_csv("x\n3.5\n4.5\n")), nullptr);
  EXPECT_EQ(store.size(), 1u);
  EXPECT_LE(store.bytes(), size + size / 2);

  DatasetStore tiny(16, 8);
  EXPECT_EQ(tiny.put(load_csv("x\n1.5\n2.5\n")), nullptr);
  Api api(tiny);
  auto r = api.upload("x\n1.5\n2.5\n");
  EXPECT_EQ(r.status, 413);
  EXPECT_EQ(r.body["code"], "TooLarge");
}

TEST(DatasetStoreTest, ConcurrentPutAndGet) {
  DatasetStore store(4, kMaxStoreBytes);
  std::vector<std::thread> threads;
  std::atomic<int> seen{0};
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        auto e = store.put(load_csv("x\n" + std::to_string(t * 1000 + i) + ".5\n"));
        if (store.get(e->id)) ++seen;
        EXPECT_LE(store.size(), 4u);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store.size(), 4u);
  EXPECT_GT(seen.load(), 0);
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    mount(server_, api_, "");
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }
  httplib::Client client() { return httplib::Client("127.0.0.1", port_); }

  DatasetStore store_;
  Api api_{store_};
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

TEST_F(ServerTest, HealthAndUnknownRoute) {
  auto cli = client();
  auto health = cli.Get("/api/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "ok");
  EXPECT_EQ(health->get_header_value("Content-Type"), "application/json");

  auto missing = cli.Get("/api/nothing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body)["code"], "NotFound");
}

TEST_F(ServerTest, MultipartUploadThenEstimate) {
  auto cli = client();
  httplib::MultipartFormDataItems items{
      {"file", climate_csv(3000, 9), "climate.csv", "text/csv"}};
  auto up = cli.Post("/api/dataset", items);
  ASSERT_TRUE(up);
  ASSERT_EQ(up->status, 200) << up->body;
  const std::string id = json::parse(up->body)["dataset_id"];

  auto raw = cli.Post("/api/dataset", climate_csv(3000, 9), "text/csv");
  ASSERT_TRUE(raw);
  EXPECT_EQ(json::parse(raw->body)["dataset_id"], id);

  json body{{"dag", climate_source()}, {"dataset_id", id}, {"effect", "direct"}};
  auto est = cli.Post("/api/estimate", body.dump(), "application/json");
  ASSERT_TRUE(est);
  ASSERT_EQ(est->status, 200) << est->body;
  EXPECT_NEAR(json::parse(est->body)["estimate"].get<double>(), -1.0, 0.1);

  auto bad = cli.Post("/api/identify", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  EXPECT_EQ(json::parse(bad->body)["code"], "BadRequest");

  httplib::MultipartFormDataItems wrong{{"data", "x\n1\n", "x.csv", "text/csv"}};
  auto no_file = cli.Post("/api/dataset", wrong);
  ASSERT_TRUE(no_file);
  EXPECT_EQ(no_file->status, 400);
}

TEST_F(ServerTest, ConcurrentRequests) {
  const json body{{"dag", climate_source()}};
  std::atomic<int> ok{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      auto cli = client();
      for (int i = 0; i < 10; ++i) {
        auto r = cli.Post("/api/identify", body.dump(), "application/json");
        if (r && r->status == 200 &&
            json::parse(r->body)["minimal_sets"] == json::parse(R"([["VV"]])")) {
          ++ok;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(ok.load(), 40);
}

TEST(OpenApi, CheckedInCopyIsCurrent) {
  const auto docs = std::string(CAUSAL_FIXTURE_DIR) + "/../docs/openapi.json";
  EXPECT_EQ(json::parse(testing_support::read_file(docs)), openapi())
      << "regenerate with: causal openapi > docs/openapi.json";
}

}  // namespace
}  // namespace causal::service
