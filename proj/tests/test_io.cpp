#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "latentforest/io.hpp"

using namespace lf;
using lf::io::json;

#ifndef LF_SAMPLES_DIR
#error "LF_SAMPLES_DIR must point at the samples directory"
#endif

namespace {
std::string sample_path(const std::string& name) { return std::string(LF_SAMPLES_DIR) + "/" + name; }
}  // namespace

TEST(ForestJson, RoundTrip) {
    const Forest q = fx::quartet();
    const Forest back = io::forest_from_json(io::forest_to_json(q));
    EXPECT_EQ(canonicalize(back).key, canonicalize(q).key);
    EXPECT_EQ(back.num_latent(), 2u);
}

TEST(ForestJson, BareStringsAndErrors) {
    const Forest f = io::forest_from_json(json::parse(R"({"nodes":["1","2",{"id":"h","latent":true}],"edges":[["h","1"],["h","2"]]})"));
    EXPECT_EQ(f.num_observed(), 2u);
    EXPECT_THROW(io::forest_from_json(json::parse(R"({"edges":[]})")), ParseError);
    EXPECT_THROW(io::forest_from_json(json::parse(R"({"nodes":["1"],"edges":[["1"]]})")), ParseError);
    EXPECT_THROW(io::forest_from_json(json::parse(R"({"nodes":["1","2","3"],"edges":[["1","2"],["1","3"]]})")),
                 ObservedDegreeError);
    EXPECT_THROW(io::parse_json("{not json"), ParseError);
    EXPECT_THROW(io::read_file("/nonexistent/file.json"), ParseError);
}

TEST(ForestJson, SampleFiles) {
    const Forest host = io::load_forest(sample_path("quartet.json"));
    const Forest sub = io::load_forest(sample_path("quartet_sub.json"));
    EXPECT_EQ(rlct_forest_pair(host, sub), (Rlct{Rational(13, 2), 1}));
    EXPECT_EQ(subforest_lattice(io::load_forest(sample_path("five_leaf.json"))).size(), 34u);
    EXPECT_EQ(rlct_forest_pair(io::load_forest(sample_path("two_leaf_path.json")),
                               io::load_forest(sample_path("two_leaf_empty.json"))),
              (Rlct{Rational(3), 2}));
}

TEST(MonomialJson, RoundTripAndBounds) {
    const MonomialSos s = io::monomial_from_json(
        json::parse(R"({"dim":2,"terms":[{"u":[1,1],"c":0}],"domain":[[0,"inf"],[null,1]]})"));
    EXPECT_EQ(s.domain[0].lo, 0.0);
    EXPECT_TRUE(std::isinf(s.domain[0].hi));
    EXPECT_TRUE(std::isinf(s.domain[1].lo) && s.domain[1].lo < 0);
    const MonomialSos back = io::monomial_from_json(io::monomial_to_json(s));
    EXPECT_EQ(back.terms[0].u, s.terms[0].u);
    EXPECT_EQ(back.domain[0].hi, s.domain[0].hi);
    const MonomialSos free = io::monomial_from_json(json::parse(R"({"dim":1,"terms":[{"u":[2]}]})"));
    EXPECT_FALSE(free.domain[0].bounded());
    EXPECT_THROW(io::monomial_from_json(json::parse(R"({"dim":2,"terms":[{"u":[1]}]})")), InvalidArgument);
}

TEST(MonomialJson, SampleSystems) {
    const MonomialSos mixed = io::monomial_from_json(io::parse_json(io::read_file(sample_path("mixed_system.json"))));
    EXPECT_EQ(rlct_monomial_sos(mixed), (Rlct{Rational(2), 1}));
    const MonomialSos cross = io::monomial_from_json(io::parse_json(io::read_file(sample_path("cross_product.json"))));
    EXPECT_EQ(rlct_monomial_sos(cross), (Rlct{Rational(1), 2}));
}

TEST(ParamsJson, EitherEdgeOrientation) {
    const Forest t = fx::path_1a2();
    const ModelParams p =
        io::params_from_json(t, json::parse(R"({"leaf_var":{"1":1.5,"2":2},"edge_corr":{"a--1":0.3,"a--2":-0.4}})"));
    EXPECT_EQ(p.leaf_var, (std::vector<double>{1.5, 2.0}));
    EXPECT_EQ(p.edge_corr, (std::vector<double>{0.3, -0.4}));
    const ModelParams back = io::params_from_json(t, io::params_to_json(t, p));
    EXPECT_EQ(back.edge_corr, p.edge_corr);
    EXPECT_THROW(io::params_from_json(t, json::parse(R"({"leaf_var":{"1":1},"edge_corr":{}})")), InvalidParams);
    EXPECT_THROW(io::params_from_json(t, json::parse(R"({"leaf_var":{"1":1,"2":1},"edge_corr":{"1--a":2,"2--a":0}})")),
                 InvalidParams);
}

TEST(Csv, ReadWrite) {
    Eigen::MatrixXd v(2, 3);
    v << 1.5, -2, 3e-5, 0.1, 0.2, 0.3;
    const std::string text = io::write_csv({"x", "y", "z"}, v);
    const io::Table t = io::read_csv(text);
    EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y", "z"}));
    EXPECT_EQ(t.values, v);
    EXPECT_THROW(io::read_csv("a,b\n1\n"), ParseError);
    EXPECT_THROW(io::read_csv("a,b\n1,zz\n"), ParseError);
    EXPECT_THROW(io::read_csv(""), ParseError);
}

TEST(Csv, StatsFromFiles) {
    const std::string path = ::testing::TempDir() + "lf_cov.csv";
    {
        std::ofstream out(path);
        out << "1,2\n2,0.5\n0.5,1\n";
    }
    const SufficientStats cov = io::stats_from_csv(path, true, 40, false);
    EXPECT_EQ(cov.n, 40u);
    EXPECT_EQ(cov.ids, (std::vector<std::string>{"1", "2"}));
    EXPECT_EQ(cov.second_moment(0, 1), 0.5);
    const SufficientStats raw = io::stats_from_csv(path, false, 0, false);
    EXPECT_EQ(raw.n, 2u);
    EXPECT_DOUBLE_EQ(raw.second_moment(0, 0), (4.0 + 0.25) / 2.0);
    std::remove(path.c_str());
}

TEST(ExperimentJson, ParsesAndRejects) {
    const ExperimentConfig c = io::experiment_from_json(io::parse_json(io::read_file(sample_path("lattice5.json"))));
    EXPECT_EQ(c.kind, ExperimentKind::Lattice5);
    EXPECT_EQ(c.replicates, 100);
    const ExperimentConfig custom = io::experiment_from_json(json::parse(R"({
        "kind": "custom", "n": [100], "replicates": 2,
        "host": {"nodes": ["1", "2", "3", {"id": "a", "latent": true}], "edges": [["a","1"],["a","2"],["a","3"]]},
        "truth_edges": [["1", "a"], ["a", "2"]]})"));
    EXPECT_EQ(custom.truth_mask, 0b011u);
    EXPECT_THROW(io::experiment_from_json(json::parse(R"({"kind":"other"})")), ParseError);
    EXPECT_THROW(io::experiment_from_json(json::parse(R"({"kind":"custom"})")), ParseError);
}

TEST(ExperimentCsv, OneRowPerClassAndCriterion) {
    ExperimentConfig cfg;
    cfg.replicates = 1;
    cfg.n_values = {30};
    const std::string csv = io::experiment_to_csv(run_experiment(cfg));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 68);
    EXPECT_EQ(csv.rfind("n,tree_size,criterion,label,count,total\n", 0), 0u);
}

TEST(Dot, ContainsEdges) {
    const std::string dot = io::forest_to_dot(fx::path_1a2());
    EXPECT_NE(dot.find("\"1\" -- \"a\""), std::string::npos);
    EXPECT_NE(dot.find("[shape=point]"), std::string::npos);
}
