#include <gtest/gtest.h>

#include <string>

#include "infodyn/export.hpp"
#include "infodyn/io.hpp"

using namespace infodyn;

namespace {

NetworkResult sample_network(const InferenceSettings& s) {
  NetworkResult net;
  net.n_processes = 3;
  net.links_tested = 6;
  TargetResult t;
  t.target = 1;
  t.settings = s;
  t.selected_target_past = {{1, 1}, {1, 3}};
  t.selected_sources = {{{0, 2}, 0.125, 1.0 / 201.0}, {{2, 1}, 0.1 + 0.2, 0.02}};
  t.per_source_delay = {{0, 2}, {2, 1}};
  t.omnibus = TestResult{0.425, 1.0 / 201.0, true, 200, 0.05};
  TargetResult empty;
  empty.target = 0;
  empty.settings = s;
  empty.omnibus = TestResult{0.0, 1.0, false, 0, 0.05};
  TargetResult empty2 = empty;
  empty2.target = 2;
  net.targets = {empty, t, empty2};
  net.links = {Link{0, 1, 0.125, 2, 1.0 / 201.0, true}, Link{2, 1, 0.1 + 0.2, 1, 0.02, false}};
  return net;
}

}  // namespace

TEST(Io, NetworkRoundTrip) {
  InferenceSettings s;
  s.seed = 99;
  s.surrogate = SurrogateMethod::replication_shuffle;
  const NetworkResult net = sample_network(s);
  const std::string text = canonical_dump(to_json(net, s, std::nullopt));
  const auto doc = network_from_json(json::parse(text));
  EXPECT_EQ(doc.network, net);
  EXPECT_EQ(doc.settings, s);
  EXPECT_FALSE(doc.runtime_seconds.has_value());
  EXPECT_EQ(canonical_dump(to_json(doc.network, doc.settings, std::nullopt)), text);
}

TEST(Io, RuntimeIsNullUnlessRecorded) {
  InferenceSettings s;
  const auto j = to_json(sample_network(s), s, std::nullopt);
  ASSERT_TRUE(j.contains("runtime_seconds"));
  EXPECT_TRUE(j["runtime_seconds"].is_null());
  const auto k = to_json(sample_network(s), s, 1.5);
  EXPECT_EQ(k["runtime_seconds"].get<double>(), 1.5);
  EXPECT_EQ(network_from_json(k).runtime_seconds, 1.5);
}

TEST(Io, CanonicalFormatting) {
  const json j = json::parse(R"({"b": 0.1, "a": [1, {"z": true, "y": null}], "c": "x"})");
  EXPECT_EQ(canonical_dump(j),
            "{\n  \"a\": [\n    1,\n    {\n      \"y\": null,\n      \"z\": true\n    }\n  ],\n"
            "  \"b\": 0.10000000000000001,\n  \"c\": \"x\"\n}\n");
  EXPECT_EQ(json::parse(canonical_dump(json{{"v", 0.1 + 0.2}}))["v"].get<double>(), 0.1 + 0.2);
}

TEST(Io, UnknownKeysAreNamed) {
  InferenceSettings s;
  json j = to_json(s);
  j["max_lag_sourcez"] = 3;
  try {
    settings_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("max_lag_sourcez"), std::string::npos);
  }
}

TEST(Io, SettingsRoundTripAndValidation) {
  InferenceSettings s;
  s.mode = AnalysisMode::bivariate_te;
  s.estimator = EstimatorKind::knn;
  s.knn_k = 6;
  s.max_lag_sources = 4;
  s.seed = 123456789012345ULL;
  EXPECT_EQ(settings_from_json(to_json(s)), s);
  EXPECT_EQ(settings_from_json(json::object()), InferenceSettings{});
  EXPECT_THROW(settings_from_json(json{{"mode", "granger"}}), Error);
  EXPECT_THROW(settings_from_json(json{{"max_lag_sources", "three"}}), Error);
  EXPECT_THROW(settings_from_json(json{{"n_perm_max_stat", 19}}), Error);
}

TEST(Io, GroundTruthRoundTrip) {
  GroundTruthSpec g;
  g.n_processes = 3;
  g.topology = {{0, 1, 2, 0.5}, {1, 2, 1, -0.25}};
  g.n_samples = 321;
  g.n_replications = 2;
  g.seed = 8;
  const GroundTruthSpec back = ground_truth_from_json(to_json(g));
  EXPECT_EQ(back.topology, g.topology);
  EXPECT_EQ(back.n_samples, g.n_samples);
  EXPECT_EQ(back.seed, g.seed);
  json bad = to_json(g);
  bad["links"][0]["target"] = 7;
  EXPECT_THROW(ground_truth_from_json(bad), Error);
}

TEST(Export, EmptyNetworkDot) {
  NetworkResult net;
  net.n_processes = 2;
  EXPECT_EQ(to_dot(net), "digraph network {\n  p0;\n  p1;\n}\n");
}

TEST(Export, DotListsOnlySurvivingLinks) {
  const NetworkResult net = sample_network(InferenceSettings{});
  const std::string dot = to_dot(net);
  EXPECT_NE(dot.find("  p0 -> p1 [label=\"w=0.125, d=2\"];\n"), std::string::npos);
  EXPECT_EQ(dot.find("p2 -> p1"), std::string::npos);
}

TEST(Export, CsvAdjacency) {
  const NetworkResult net = sample_network(InferenceSettings{});
  EXPECT_EQ(to_csv_adjacency(net), "0,0.125,0\n0,0,0\n0,0,0\n");
}
