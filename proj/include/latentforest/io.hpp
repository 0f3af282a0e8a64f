#pragma once

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "latentforest/error.hpp"
#include "latentforest/forest.hpp"
#include "latentforest/gaussian.hpp"
#include "latentforest/monomial.hpp"
#include "latentforest/simulation.hpp"

namespace lf::io {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json(const std::string& text, const std::string& what = "input") {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(what + ": " + e.what());
    }
}

// ---- forests ------------------------------------------------------------
//
// {"nodes": [{"id": "1"}, {"id": "a", "latent": true}, ...],
//  "edges": [["a", "1"], ...]}
// A node may also be written as a bare string (observed).

inline Forest forest_from_json(const json& j) {
    try {
        std::vector<Node> nodes;
        for (const auto& n : j.at("nodes")) {
            if (n.is_string())
                nodes.push_back({n.get<std::string>(), false});
            else
                nodes.push_back({n.at("id").get<std::string>(), n.value("latent", false)});
        }
        std::vector<IdPair> edges;
        for (const auto& e : j.value("edges", json::array())) {
            if (!e.is_array() || e.size() != 2) throw ParseError("each edge must be a pair of node ids");
            edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
        }
        return build_forest(std::move(nodes), edges);
    } catch (const json::exception& e) {
        throw ParseError(std::string("forest: ") + e.what());
    }
}

inline json forest_to_json(const Forest& f) {
    json nodes = json::array(), edges = json::array();
    for (const Node& n : f.nodes()) {
        json o{{"id", n.id}};
        if (n.latent) o["latent"] = true;
        nodes.push_back(std::move(o));
    }
    for (const auto& [a, b] : f.edge_ids()) edges.push_back({a, b});
    return json{{"nodes", nodes}, {"edges", edges}};
}

inline Forest load_forest(const std::string& path) { return forest_from_json(parse_json(read_file(path), path)); }

/// Graphviz rendering; latent nodes drawn as small points.
inline std::string forest_to_dot(const Forest& f, const std::string& name = "forest") {
    std::ostringstream os;
    os << "graph " << json(name).dump() << " {\n";
    for (const Node& n : f.nodes())
        os << "  " << json(n.id).dump() << (n.latent ? " [shape=point];\n" : " [shape=circle];\n");
    for (const auto& [a, b] : f.edge_ids()) os << "  " << json(a).dump() << " -- " << json(b).dump() << ";\n";
    os << "}\n";
    return os.str();
}

// ---- monomial systems -----------------------------------------------------
//
// {"dim": 2, "terms": [{"u": [1, 1], "c": 0}], "domain": [[0, 1], [null, "inf"]]}
// An infinite bound is null, "inf" or "-inf"; a missing domain means R^dim.

namespace detail {

inline double bound_from_json(const json& b, bool upper) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (b.is_null()) return upper ? inf : -inf;
    if (b.is_string()) {
        const auto s = b.get<std::string>();
        if (s == "inf" || s == "+inf") return inf;
        if (s == "-inf") return -inf;
        throw ParseError("bad bound '" + s + "'");
    }
    return b.get<double>();
}

inline json bound_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

}  // namespace detail

inline MonomialSos monomial_from_json(const json& j) {
    try {
        MonomialSos s;
        s.dim = j.at("dim").get<int>();
        for (const auto& t : j.at("terms")) s.terms.push_back({t.at("u").get<std::vector<int>>(), t.value("c", 0.0)});
        if (j.contains("domain")) {
            for (const auto& iv : j.at("domain")) {
                if (!iv.is_array() || iv.size() != 2) throw ParseError("each domain entry must be [lo, hi]");
                s.domain.push_back({detail::bound_from_json(iv[0], false), detail::bound_from_json(iv[1], true)});
            }
        } else {
            s.domain.assign(static_cast<std::size_t>(std::max(0, s.dim)), Interval{});
        }
        if (j.contains("names")) s.names = j.at("names").get<std::vector<std::string>>();
        s.validate();
        return s;
    } catch (const json::exception& e) {
        throw ParseError(std::string("monomial system: ") + e.what());
    }
}

inline json monomial_to_json(const MonomialSos& s) {
    json terms = json::array(), dom = json::array();
    for (const auto& t : s.terms) terms.push_back({{"u", t.u}, {"c", t.c}});
    for (const auto& iv : s.domain) dom.push_back({detail::bound_to_json(iv.lo), detail::bound_to_json(iv.hi)});
    json j{{"dim", s.dim}, {"terms", terms}, {"domain", dom}};
    if (!s.names.empty()) j["names"] = s.names;
    return j;
}

// ---- parameters -----------------------------------------------------------
//
// {"leaf_var": {"1": 1.0, ...}, "edge_corr": {"a--1": 0.6, ...}}

inline ModelParams params_from_json(const Forest& f, const json& j) {
    try {
        ModelParams p;
        const auto& lv = j.at("leaf_var");
        for (int v : f.observed()) {
            if (!lv.contains(f.id(v))) throw InvalidParams("missing variance for '" + f.id(v) + "'");
            p.leaf_var.push_back(lv.at(f.id(v)).get<double>());
        }
        if (lv.size() != f.num_observed()) throw InvalidParams("leaf_var has keys that are not observed nodes");
        const auto& ec = j.at("edge_corr");
        for (const Edge& e : f.edges()) {
            const std::string k1 = f.id(e.u) + "--" + f.id(e.v), k2 = f.id(e.v) + "--" + f.id(e.u);
            if (ec.contains(k1))
                p.edge_corr.push_back(ec.at(k1).get<double>());
            else if (ec.contains(k2))
                p.edge_corr.push_back(ec.at(k2).get<double>());
            else
                throw InvalidParams("missing correlation for edge " + k1);
        }
        if (ec.size() != f.num_edges()) throw InvalidParams("edge_corr has keys that are not edges");
        validate_params(f, p);
        return p;
    } catch (const json::exception& e) {
        throw ParseError(std::string("parameters: ") + e.what());
    }
}

inline json params_to_json(const Forest& f, const ModelParams& p) {
    json lv = json::object(), ec = json::object();
    for (std::size_t i = 0; i < f.num_observed(); ++i) lv[f.id(f.observed()[i])] = p.leaf_var[i];
    for (std::size_t e = 0; e < f.num_edges(); ++e) ec[f.edge_label(static_cast<int>(e))] = p.edge_corr[e];
    return json{{"leaf_var", lv}, {"edge_corr", ec}};
}

// ---- CSV ------------------------------------------------------------------

struct Table {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

/// Numeric CSV with a header row of column ids.
inline Table read_csv(const std::string& text, const std::string& what = "csv") {
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cell;
        std::istringstream ls(s);
        while (std::getline(ls, cell, ',')) {
            const auto b = cell.find_first_not_of(" \t\r\"");
            const auto e = cell.find_last_not_of(" \t\r\"");
            out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
        }
        return out;
    };
    Table t;
    while (std::getline(in, line) && line.find_first_not_of(" \t\r") == std::string::npos) {}
    if (line.empty()) throw ParseError(what + ": missing header");
    t.header = split(line);
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw ParseError(what + ": line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                             " fields, expected " + std::to_string(t.header.size()));
        std::vector<double> row;
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                throw ParseError(what + ": line " + std::to_string(lineno) + ": '" + c + "' is not a number");
            }
        }
        rows.push_back(std::move(row));
    }
    t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t k = 0; k < rows[i].size(); ++k)
            t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    return t;
}

inline std::string write_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& values) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
    os << "\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index k = 0; k < values.cols(); ++k) os << (k ? "," : "") << values(i, k);
        os << "\n";
    }
    return os.str();
}

/// Samples CSV, or a covariance CSV (square, header ids) when `covariance` is set.
inline SufficientStats stats_from_csv(const std::string& path, bool covariance, std::size_t n_for_cov, bool center) {
    const Table t = read_csv(read_file(path), path);
    if (covariance) {
        if (t.values.rows() != t.values.cols()) throw ParseError(path + ": covariance must be square");
        return suff_stats_from_cov(t.values, n_for_cov, t.header);
    }
    return suff_stats(t.values, t.header, center);
}

// ---- experiments ----------------------------------------------------------
//
// {"kind": "lattice5" | "depth_comparison" | "custom", "n": [125], "replicates": 100,
//  "seed": 1, "tree_sizes": [6, 8], "corr": 0.6, "threads": 1,
//  "em": {"max_iter": 2000, "rel_tol": 1e-9, "restarts": 5, "corr_clamp": 1e-9},
//  "host": <forest>, "truth_edges": [["a", "1"], ...]}

inline ExperimentConfig experiment_from_json(const json& j) {
    try {
        ExperimentConfig c;
        const auto kind = j.value("kind", std::string("lattice5"));
        if (kind == "lattice5")
            c.kind = ExperimentKind::Lattice5;
        else if (kind == "depth_comparison")
            c.kind = ExperimentKind::DepthComparison;
        else if (kind == "custom")
            c.kind = ExperimentKind::Custom;
        else
            throw ParseError("unknown experiment kind '" + kind + "'");
        if (j.contains("n")) c.n_values = j.at("n").get<std::vector<std::size_t>>();
        c.replicates = j.value("replicates", c.replicates);
        c.seed = j.value("seed", c.seed);
        if (j.contains("tree_sizes")) c.tree_sizes = j.at("tree_sizes").get<std::vector<int>>();
        c.corr = j.value("corr", c.corr);
        c.threads = j.value("threads", c.threads);
        if (j.contains("em")) {
            const auto& e = j.at("em");
            c.em.max_iter = e.value("max_iter", c.em.max_iter);
            c.em.rel_tol = e.value("rel_tol", c.em.rel_tol);
            c.em.restarts = e.value("restarts", c.em.restarts);
            c.em.corr_clamp = e.value("corr_clamp", c.em.corr_clamp);
        }
        if (c.kind == ExperimentKind::Custom) {
            c.host = forest_from_json(j.at("host"));
            for (const auto& e : j.at("truth_edges")) {
                const int k = c.host.find_edge(e.at(0).get<std::string>(), e.at(1).get<std::string>());
                if (k < 0) throw ParseError("truth edge is not a host edge");
                c.truth_mask |= 1ULL << k;
            }
        }
        return c;
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
}

inline std::string experiment_to_csv(const ExperimentResult& r) {
    std::ostringstream os;
    os << "n,tree_size,criterion,label,count,total\n";
    for (const auto& row : r.rows)
        os << row.n << "," << row.tree_size << "," << row.criterion << "," << row.label << "," << row.count << ","
           << row.total << "\n";
    return os.str();
}

}  // namespace lf::io
