// Command-line front end: RLCT queries, EM fits, model selection, experiments.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "latentforest/io.hpp"
#include "latentforest/latentforest.hpp"

namespace {

using nlohmann::json;

struct Options {
    bool as_json = false;
    std::optional<std::uint64_t> seed;
    std::string host, sub, in, forest, data, tree, config, out;
    std::string criterion = "sbic", lattice = "exhaustive", method = "quadrature";
    bool covariance = false, center = false;
    std::size_t n_cov = 0;
    int restarts = 5, max_iter = 2000;
    double rel_tol = 1e-9;
    unsigned threads = 1;
};

std::uint64_t resolve_seed(const Options& o) {
    if (o.seed) return *o.seed;
    if (const char* env = std::getenv("LF_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw lf::InvalidArgument("LF_SEED is not an unsigned integer");
        }
    }
    return 0;
}

lf::EmConfig em_config(const Options& o) {
    lf::EmConfig c;
    c.restarts = o.restarts;
    c.max_iter = o.max_iter;
    c.rel_tol = o.rel_tol;
    c.seed = resolve_seed(o);
    c.threads = o.threads;
    return c;
}

lf::SufficientStats load_stats(const Options& o) {
    if (o.covariance && o.n_cov == 0) throw lf::InvalidArgument("--cov needs --n");
    return lf::io::stats_from_csv(o.data, o.covariance, o.n_cov, o.center);
}

void print(const Options& o, const json& j, const std::string& text) {
    if (o.as_json)
        std::cout << j.dump(2) << "\n";
    else
        std::cout << text;
}

json rlct_json(const lf::Rlct& r) {
    return json{{"lambda", r.lambda.str()}, {"lambda_value", r.lambda.to_double()}, {"mult", r.mult}};
}

void cmd_rlct_forest(const Options& o) {
    const lf::Forest host = lf::io::load_forest(o.host);
    const lf::Forest sub = lf::io::load_forest(o.sub);
    const lf::Rlct r = lf::rlct_forest_pair(host, sub);
    print(o, rlct_json(r), r.str() + "\n");
}

void cmd_rlct_mono(const Options& o) {
    const auto sys = lf::io::monomial_from_json(lf::io::parse_json(lf::io::read_file(o.in), o.in));
    const lf::Rlct r = lf::rlct_monomial_sos(sys);
    print(o, rlct_json(r), r.str() + "\n");
}

void cmd_laplace(const Options& o) {
    const auto sys = lf::io::monomial_from_json(lf::io::parse_json(lf::io::read_file(o.in), o.in));
    lf::LaplaceConfig cfg;
    cfg.seed = resolve_seed(o);
    if (o.method == "mc") cfg.method = lf::IntegrationMethod::MonteCarlo;
    const auto est = lf::laplace_rlct_estimate(sys, lf::default_n_grid(), cfg);
    std::ostringstream os;
    os << "lambda_hat=" << est.lambda_hat << " mult_hat=" << est.mult_hat << "\n";
    print(o,
          json{{"lambda_hat", est.lambda_hat}, {"mult_hat", est.mult_hat}, {"n", est.n_grid},
               {"log_z", est.log_z}, {"residuals", est.residuals}, {"method", o.method}},
          os.str());
}

void cmd_fit(const Options& o) {
    const lf::Forest f = lf::io::load_forest(o.forest);
    const auto st = load_stats(o);
    const auto res = lf::em_fit(f, st, em_config(o));
    const json j{{"loglik", res.loglik},
                 {"dim", lf::model_dimension(f)},
                 {"bic", lf::bic(res.loglik, lf::model_dimension(f), st.n)},
                 {"iterations", res.iterations},
                 {"converged", res.converged},
                 {"params", lf::io::params_to_json(f, res.params)}};
    std::ostringstream os;
    os.precision(10);
    os << "loglik=" << res.loglik << " iterations=" << res.iterations << " converged=" << (res.converged ? "yes" : "no")
       << "\n"
       << lf::io::params_to_json(f, res.params).dump(2) << "\n";
    print(o, j, os.str());
}

json score_json(const lf::ClassScore& s) {
    return json{{"code", s.code}, {"key", s.key}, {"dim", s.dim}, {"loglik", s.loglik}, {"bic", s.bic}, {"sbic", s.sbic}};
}

void cmd_select(const Options& o) {
    const auto st = load_stats(o);
    const lf::Criterion crit = o.criterion == "bic" ? lf::Criterion::Bic : lf::Criterion::Sbic;
    const lf::EmConfig em = em_config(o);
    std::ostringstream os;
    os.precision(10);
    json j;
    if (o.lattice == "exhaustive") {
        if (o.tree.empty()) throw lf::InvalidArgument("exhaustive selection needs --tree");
        const lf::Forest host = lf::io::load_forest(o.tree);
        const auto sel = lf::select_exhaustive(host, st, em, o.threads);
        const std::size_t best = sel.selected(crit);
        json rows = json::array();
        for (std::size_t i = 0; i < sel.table.size(); ++i) {
            rows.push_back(score_json(sel.table[i]));
            rows.back()["index"] = i + 1;
            os << i + 1 << " " << sel.table[i].code << " dim=" << sel.table[i].dim << " loglik=" << sel.table[i].loglik
               << " bic=" << sel.table[i].bic << " sbic=" << sel.table[i].sbic << "\n";
        }
        os << "selected " << best + 1 << " " << sel.table[best].code << " (" << o.criterion << ")\n";
        j = json{{"criterion", o.criterion}, {"lattice", "exhaustive"}, {"selected", best + 1},
                 {"selected_code", sel.table[best].code}, {"classes", rows},
                 {"selected_forest", lf::io::forest_to_json(sel.lattice[best].forest)}};
    } else {
        const lf::Forest host = o.tree.empty() ? lf::initial_tree(st, em) : lf::io::load_forest(o.tree);
        const auto ch = lf::pruned_chain(host, st, em);
        const std::size_t best = crit == lf::Criterion::Bic ? ch.selected_bic : ch.selected_sbic;
        json rows = json::array();
        for (std::size_t i = 0; i < ch.chain.size(); ++i) {
            rows.push_back(score_json(ch.scores[i]));
            rows.back()["forest"] = lf::io::forest_to_json(ch.chain[i].forest);
            os << i << " " << ch.scores[i].key << " dim=" << ch.scores[i].dim << " loglik=" << ch.scores[i].loglik
               << " bic=" << ch.scores[i].bic << " sbic=" << ch.scores[i].sbic << "\n";
        }
        os << "selected " << best << " " << ch.scores[best].key << " (" << o.criterion << ")\n";
        j = json{{"criterion", o.criterion}, {"lattice", "chain"}, {"selected", best},
                 {"host", lf::io::forest_to_json(host)}, {"chain", rows}};
    }
    print(o, j, os.str());
}

void cmd_lattice(const Options& o) {
    const lf::Forest host = lf::io::load_forest(o.tree);
    const auto lat = lf::subforest_lattice(host);
    std::ostringstream os;
    json rows = json::array();
    for (std::size_t i = 0; i < lat.size(); ++i) {
        std::string spaced;
        for (char c : lat.code(i)) {
            if (!spaced.empty()) spaced += ' ';
            spaced += c;
        }
        os << i + 1 << ": " << spaced << "  depth=" << lat.depth(i) << "  " << lat[i].key << "\n";
        rows.push_back(json{{"index", i + 1}, {"code", lat.code(i)}, {"depth", lat.depth(i)}, {"key", lat[i].key},
                            {"dim", lf::model_dimension(lat[i].forest)}});
    }
    json edges = json::array();
    for (std::size_t e = 0; e < host.num_edges(); ++e) edges.push_back(host.edge_label(static_cast<int>(e)));
    print(o, json{{"edges", edges}, {"classes", rows}, {"max_depth", lat.max_depth()}}, os.str());
}

void cmd_simulate(const Options& o) {
    auto cfg = lf::io::experiment_from_json(lf::io::parse_json(lf::io::read_file(o.config), o.config));
    if (o.seed || std::getenv("LF_SEED")) cfg.seed = resolve_seed(o);
    if (o.threads > 1) cfg.threads = o.threads;
    const auto res = lf::run_experiment(cfg);
    const std::string csv = lf::io::experiment_to_csv(res);
    if (!o.out.empty()) {
        std::ofstream out(o.out, std::ios::binary);
        if (!out) throw lf::ParseError("cannot write '" + o.out + "'");
        out << csv;
    }
    json rows = json::array();
    for (const auto& r : res.rows)
        rows.push_back(json{{"n", r.n}, {"tree_size", r.tree_size}, {"criterion", r.criterion}, {"label", r.label},
                            {"count", r.count}, {"total", r.total}});
    print(o, json{{"rows", rows}}, o.out.empty() ? csv : std::string());
}

void cmd_dot(const Options& o) {
    const lf::Forest f = lf::io::load_forest(o.forest);
    print(o, json{{"dot", lf::io::forest_to_dot(f)}}, lf::io::forest_to_dot(f));
}

}  // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"Gaussian latent forest models: RLCTs, EM fits and singular BIC model selection"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("--json", o.as_json, "Machine-readable output (errors as JSON on stderr)");
    app.add_option("--seed", o.seed, "Random seed (default: $LF_SEED, else 0)");

    auto* rlct = app.add_subcommand("rlct", "Learning coefficients");
    rlct->require_subcommand(1);
    auto* rf = rlct->add_subcommand("forest", "Closed form for a host forest and a subforest");
    rf->add_option("--host", o.host, "Host forest JSON")->required()->check(CLI::ExistingFile);
    rf->add_option("--sub", o.sub, "Subforest JSON")->required()->check(CLI::ExistingFile);
    auto* rm = rlct->add_subcommand("mono", "Monomial sum of squares");
    rm->add_option("--in", o.in, "Monomial system JSON")->required()->check(CLI::ExistingFile);

    auto* lap = app.add_subcommand("laplace", "Numerical RLCT estimate of a monomial system");
    lap->add_option("--in", o.in, "Monomial system JSON (bounded domain)")->required()->check(CLI::ExistingFile);
    lap->add_option("--method", o.method, "quadrature | mc")->check(CLI::IsMember({"quadrature", "mc"}));

    auto add_data = [&](CLI::App* c) {
        c->add_option("--data", o.data, "Samples CSV (header = observed ids)")->required()->check(CLI::ExistingFile);
        c->add_flag("--cov", o.covariance, "Treat --data as a covariance matrix");
        c->add_option("--n", o.n_cov, "Sample size for --cov input");
        c->add_flag("--center", o.center, "Subtract the sample mean");
        c->add_option("--restarts", o.restarts, "EM restarts")->check(CLI::PositiveNumber);
        c->add_option("--max-iter", o.max_iter, "EM iteration cap")->check(CLI::PositiveNumber);
        c->add_option("--rel-tol", o.rel_tol, "EM relative log-likelihood tolerance")->check(CLI::PositiveNumber);
        c->add_option("--threads", o.threads, "Worker threads");
    };
    auto* fit = app.add_subcommand("fit", "Maximum likelihood by EM");
    fit->add_option("--forest", o.forest, "Forest JSON")->required()->check(CLI::ExistingFile);
    add_data(fit);

    auto* sel = app.add_subcommand("select", "BIC / sBIC model selection");
    sel->add_option("--tree", o.tree, "Host tree JSON (chain mode: optional, else built from data)")
        ->check(CLI::ExistingFile);
    sel->add_option("--criterion", o.criterion, "bic | sbic")->check(CLI::IsMember({"bic", "sbic"}));
    sel->add_option("--lattice", o.lattice, "exhaustive | chain")->check(CLI::IsMember({"exhaustive", "chain"}));
    add_data(sel);

    auto* sim = app.add_subcommand("simulate", "Run a selection experiment");
    sim->add_option("--config", o.config, "Experiment config JSON")->required()->check(CLI::ExistingFile);
    sim->add_option("--out", o.out, "Write the frequency CSV here instead of stdout");
    sim->add_option("--threads", o.threads, "Worker threads");

    auto* lat = app.add_subcommand("lattice", "Enumerate the subforest models of a host tree");
    lat->add_option("--tree", o.tree, "Host tree JSON")->required()->check(CLI::ExistingFile);

    auto* dot = app.add_subcommand("dot", "Graphviz rendering of a forest");
    dot->add_option("--forest", o.forest, "Forest JSON")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        if (o.as_json) {
            std::cerr << json{{"error", "UsageError"}, {"message", e.what()}}.dump() << "\n";
            return 2;
        }
        app.exit(e);
        return 2;
    }

    try {
        if (rf->parsed()) cmd_rlct_forest(o);
        else if (rm->parsed()) cmd_rlct_mono(o);
        else if (lap->parsed()) cmd_laplace(o);
        else if (fit->parsed()) cmd_fit(o);
        else if (sel->parsed()) cmd_select(o);
        else if (sim->parsed()) cmd_simulate(o);
        else if (lat->parsed()) cmd_lattice(o);
        else if (dot->parsed()) cmd_dot(o);
        return 0;
    } catch (const lf::Error& e) {
        if (o.as_json)
            std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
        else
            std::cerr << "error (" << e.kind() << "): " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        if (o.as_json)
            std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
        else
            std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
