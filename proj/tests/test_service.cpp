/*
 * Copyright 2026 The rfclust Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <atomic>
#include <fstream>
#include <numeric>
#include <thread>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rfclust/errors.hpp"
#include "rfclust/service.hpp"

// After Eigen: <resolv.h> (pulled in by httplib) defines a _res macro.
#include <httplib.h>

using namespace rfclust;
using nlohmann::json;

namespace {

const fixture::Trained& trained() {
  static const fixture::Trained t = fixture::ssdc();
  return t;
}

// Sweep of the training set closest to centroid j in the clustered space.
std::size_t medoid_of(const fixture::Trained& t, int j) {
  const Eigen::MatrixXd z = project_dataset(t.artifact.model, t.train);
  std::size_t best = 0;
  double best_d = 1e300;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const double d = (z.row(i) - t.artifact.model.clusters.centroids.row(j)).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(i);
    }
  }
  return best;
}

// Serves on a free loopback port for the lifetime of the object.
class LiveServer {
 public:
  explicit LiveServer(Service& s) : service_(s) {
    port_ = service_.bind_any_port("127.0.0.1");
    thread_ = std::thread([this] { service_.listen_after_bind(); });
    for (int i = 0; i < 200 && !service_.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  ~LiveServer() {
    service_.stop();
    thread_.join();
  }
  [[nodiscard]] int port() const { return port_; }
  [[nodiscard]] httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(30, 0);
    return c;
  }

 private:
  Service& service_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("model info and cold start") {
  testutil::TempDir dir("svc-info");
  const Service svc(trained().artifact, dir / "labels.json");
  const ServiceResponse info = svc.model_info();
  CHECK(info.status == 200);
  CHECK(info.body.at("params") == 128406);
  CHECK(info.body.at("arch") == "ssdc");
  CHECK(info.body.at("k") == 10);
  CHECK(info.body.at("embedding_dim") == 10);
  CHECK(info.body.at("gflops").get<double>() > 0.0);
  CHECK(info.body.at("train_size") == trained().train.size());

  const ServiceResponse cl = svc.clusters();
  for (const auto& c : cl.body.at("clusters")) CHECK(c.at("label") == kUnmapped);
  CHECK(svc.labels().entries.empty());
}

TEST_CASE("classify and embed") {
  const auto& t = trained();
  testutil::TempDir dir("svc-classify");
  Service svc(t.artifact, dir / "labels.json");

  for (int j = 0; j < t.artifact.model.clusters.k(); ++j) {
    if (t.artifact.stats.counts[static_cast<std::size_t>(j)] == 0) continue;
    const std::size_t m = medoid_of(t, j);
    const ServiceResponse r = svc.classify(fixture::fft_body(t.raw.sweeps[m].bins));
    REQUIRE(r.status == 200);
    CHECK(r.body.at("cluster_id") == j);
    CHECK(r.body.at("label") == kUnmapped);
  }

  const std::string body = fixture::fft_body(t.raw.sweeps[3].bins);
  const ServiceResponse c = svc.classify(body);
  const ServiceResponse e = svc.embed(body);
  REQUIRE(e.status == 200);
  CHECK(e.body.at("embedding").size() == 10);
  CHECK(e.body.at("embedding") == c.body.at("embedding"));
  CHECK(svc.embed(body).body == e.body);
  const double conf = c.body.at("confidence").get<double>();
  CHECK(conf > 0.0);
  CHECK(conf <= 1.0);

  // read your writes
  const int id = c.body.at("cluster_id").get<int>();
  CHECK(svc.set_label(std::to_string(id), R"({"label": "LTE"})").status == 200);
  CHECK(svc.classify(body).body.at("label") == "LTE");

  json short_body = json::parse(body);
  short_body["fft"].erase(short_body["fft"].begin());
  const ServiceResponse bad = svc.classify(short_body.dump());
  CHECK(bad.status == 400);
  CHECK(bad.body.at("error").get<std::string>().find("1023") != std::string::npos);
  CHECK(svc.embed(short_body.dump()).status == 400);
  CHECK(svc.classify("not json").status == 400);
  CHECK(svc.classify(R"({"fft": "x"})").status == 400);
  json text_value = json::parse(body);
  text_value["fft"][5] = "oops";
  CHECK(svc.classify(text_value.dump()).status == 400);
}

TEST_CASE("cluster listing") {
  const auto& t = trained();
  testutil::TempDir dir("svc-clusters");
  const Service svc(t.artifact, dir / "labels.json");
  const json body = svc.clusters().body;
  const auto& list = body.at("clusters");
  REQUIRE(list.size() == 10);
  std::size_t total = 0;
  for (std::size_t k = 0; k < list.size(); ++k) {
    const auto& c = list[k];
    CHECK(c.at("id") == k);
    total += c.at("count").get<std::size_t>();
    CHECK(c.at("centroid2d").size() == 2);
    CHECK(c.at("centroid2d")[0].get<double>() == t.artifact.model.clusters.centroids(static_cast<Eigen::Index>(k), 0));
    CHECK(c.at("centroid2d")[1].get<double>() == t.artifact.model.clusters.centroids(static_cast<Eigen::Index>(k), 1));
    const auto& avg = t.artifact.stats.averages_db[k];
    if (avg) {
      REQUIRE(c.at("average").size() == 1024);
      CHECK(c.at("average")[100].get<double>() == (*avg)(100));
    } else {
      CHECK(c.at("average").is_null());
    }
  }
  CHECK(total == t.train.size());

  // averages equal an independent recomputation in dB from the raw sweeps
  const auto& labels = t.report.final_labels;
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(1024);
    int n = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != k) continue;
      sum += t.raw.sweeps[i].bins.cast<double>();
      ++n;
    }
    if (n == 0) continue;
    const auto& avg = *t.artifact.stats.averages_db[static_cast<std::size_t>(k)];
    CHECK((avg - sum / n).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("label updates: revisions, validation, persistence") {
  const auto& t = trained();
  testutil::TempDir dir("svc-labels");
  const auto path = dir / "labels.json";
  {
    Service svc(t.artifact, path);
    const ServiceResponse a = svc.set_label("2", R"({"label": "LTE"})");
    CHECK(a.status == 200);
    CHECK(a.body.at("revision") == 1);
    CHECK(svc.clusters().body.at("clusters")[2].at("label") == "LTE");

    CHECK(svc.set_label("5", R"({"label": "WiFi"})").body.at("revision") == 2);
    CHECK(svc.set_label("5", R"({"label": "DVB-T"})").body.at("revision") == 3);
    CHECK(svc.labels().label(5) == "DVB-T");

    CHECK(svc.set_label("10", R"({"label": "x"})").status == 404);
    CHECK(svc.set_label("-1", R"({"label": "x"})").status == 404);
    CHECK(svc.set_label("abc", R"({"label": "x"})").status == 404);
    CHECK(svc.set_label("1", R"({"label": ""})").status == 400);
    CHECK(svc.set_label("1", R"({"name": "x"})").status == 400);
    CHECK(svc.set_label("1", "{").status == 400);
    CHECK(svc.labels().revision == 3);

    // the file on disk is always a complete document
    std::ifstream in(path);
    const json stored = json::parse(in);
    CHECK(LabelMap::from_json(stored).label(2) == "LTE");
  }
  Service restarted(t.artifact, path);
  CHECK(restarted.labels().label(2) == "LTE");
  CHECK(restarted.labels().label(5) == "DVB-T");
  CHECK(restarted.labels().revision == 3);
  CHECK(restarted.labels().label(0) == kUnmapped);

  // a label map that names clusters the model does not have is refused
  LabelMap wrong;
  wrong.set(9, "x", 20);
  wrong.save(dir / "wrong.json");
  const auto small = fixture::ssdc(4, 44);
  CHECK_THROWS_AS(Service(small.artifact, dir / "wrong.json"), IntegrityError);
}

TEST_CASE("live HTTP endpoints") {
  const auto& t = trained();
  testutil::TempDir dir("svc-http");
  Service svc(t.artifact, dir / "labels.json", true);
  LiveServer server(svc);
  auto cli = server.client();

  auto info = cli.Get("/v1/model/info");
  REQUIRE(info);
  CHECK(info->status == 200);
  CHECK(json::parse(info->body).at("params") == 128406);
  CHECK(info->get_header_value("Access-Control-Allow-Origin") == "*");

  const std::string body = fixture::fft_body(t.raw.sweeps[0].bins);
  auto cls = cli.Post("/v1/classify", body, "application/json");
  REQUIRE(cls);
  CHECK(cls->status == 200);
  const json c = json::parse(cls->body);
  CHECK(c.at("embedding").size() == 10);

  auto emb = cli.Post("/v1/embed", body, "application/json");
  REQUIRE(emb);
  CHECK(json::parse(emb->body).at("embedding") == c.at("embedding"));

  const int id = c.at("cluster_id").get<int>();
  auto put = cli.Put("/v1/clusters/" + std::to_string(id) + "/label", R"({"label": "WiFi"})", "application/json");
  REQUIRE(put);
  CHECK(put->status == 200);
  CHECK(json::parse(put->body).at("revision") == 1);
  auto listing = cli.Get("/v1/clusters");
  REQUIRE(listing);
  CHECK(json::parse(listing->body).at("clusters")[static_cast<std::size_t>(id)].at("label") == "WiFi");
  CHECK(json::parse(cli.Post("/v1/classify", body, "application/json")->body).at("label") == "WiFi");

  auto bad = cli.Post("/v1/classify", R"({"fft": [1, 2, 3]})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body).contains("error"));
  auto missing = cli.Put("/v1/clusters/77/label", R"({"label": "x"})", "application/json");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  auto unknown = cli.Get("/v1/nothing");
  REQUIRE(unknown);
  CHECK(unknown->status == 404);

  auto pre = cli.Options("/v1/classify");
  REQUIRE(pre);
  CHECK(pre->status == 204);
  CHECK(pre->get_header_value("Access-Control-Allow-Methods").find("PUT") != std::string::npos);
}

TEST_CASE("concurrent classify and label updates") {
  const auto& t = trained();
  testutil::TempDir dir("svc-concurrent");
  Service svc(t.artifact, dir / "labels.json");
  LiveServer server(svc);

  const std::string body = fixture::fft_body(t.raw.sweeps[7].bins);
  const json expected = svc.classify(body).body.at("embedding");
  std::atomic<int> mismatches{0}, failures{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 4; ++r) {
    readers.emplace_back([&] {
      auto cli = server.client();
      for (int i = 0; i < 5; ++i) {
        auto res = cli.Post("/v1/classify", body, "application/json");
        if (!res || res->status != 200) {
          ++failures;
          continue;
        }
        if (json::parse(res->body).at("embedding") != expected) ++mismatches;
      }
    });
  }
  std::vector<std::thread> writers;
  std::mutex seen_mutex;
  std::vector<std::uint64_t> seen;
  for (int w = 0; w < 4; ++w) {
    writers.emplace_back([&, w] {
      auto cli = server.client();
      for (int i = 0; i < 5; ++i) {
        const std::string label = "w" + std::to_string(w) + "-" + std::to_string(i);
        auto res = cli.Put("/v1/clusters/" + std::to_string(w) + "/label", json{{"label", label}}.dump(),
                           "application/json");
        if (!res || res->status != 200) {
          ++failures;
          continue;
        }
        std::lock_guard lock(seen_mutex);
        seen.push_back(json::parse(res->body).at("revision").get<std::uint64_t>());
      }
    });
  }
  for (auto& th : readers) th.join();
  for (auto& th : writers) th.join();
  CHECK(failures == 0);
  CHECK(mismatches == 0);
  // every update got a distinct revision from one total order
  std::sort(seen.begin(), seen.end());
  std::vector<std::uint64_t> all(20);
  std::iota(all.begin(), all.end(), 1);
  CHECK(seen == all);
  CHECK(svc.labels().revision == 20);
  for (int w = 0; w < 4; ++w) CHECK(svc.labels().label(w) == "w" + std::to_string(w) + "-4");
}

TEST_CASE("binding a busy port fails cleanly") {
  const auto& t = trained();
  testutil::TempDir dir("svc-port");
  Service a(t.artifact, dir / "a.json");
  LiveServer server(a);
  Service b(t.artifact, dir / "b.json");
  CHECK_THROWS_AS(b.listen("127.0.0.1", server.port()), IoError);
}
